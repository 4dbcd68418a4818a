//! Extended network: virtual arcs and nodes that absorb flows no feasible
//! route can carry, priced at the shipment's shadow price.

use std::collections::BTreeMap;

use crate::network::{Arc, DemandSet, Network, NodeId};
use crate::scalar::Scalar;

/// The virtual elements serving one demand pair. Flow entering
/// `successor` for that pair's destination is abandoned demand.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualRoute<S> {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Candidate successor at the origin: the destination itself when a
    /// direct virtual arc was added, otherwise the inserted virtual node.
    pub successor: NodeId,
    pub via_node: Option<NodeId>,
    /// Arc carrying the abandoned flow out of the origin.
    pub entry_arc: u32,
    pub price: S,
}

/// Base network plus virtual elements, one per demand pair.
#[derive(Debug, Clone)]
pub struct ExtendedNetwork<S> {
    net: Network<S>,
    base_nodes: usize,
    base_arcs: usize,
    routes: Vec<VirtualRoute<S>>,
    route_by_pair: BTreeMap<(NodeId, NodeId), u32>,
}

/// Adds one virtual route per demand: a direct virtual arc `i -> j`
/// costing the shadow price when no real arc joins the pair, otherwise a
/// virtual node `v` with arcs `i -> v` and `v -> j` costing half each.
/// Missing shadow prices default to the sum of all real arc costs, which
/// bounds every simple path.
pub fn extend<S: Scalar>(net: Network<S>, demands: &DemandSet<S>) -> ExtendedNetwork<S> {
    let base_nodes = net.node_count();
    let base_arcs = net.arc_count();
    let default_price: S = net.arcs().iter().map(|a| a.cost).sum();

    let mut net = net;
    let mut routes = Vec::with_capacity(demands.len());
    let mut route_by_pair = BTreeMap::new();
    for demand in demands.all() {
        let (origin, dest) = (demand.origin, demand.destination);
        let price = demand.shadow_price.unwrap_or(default_price);
        let (successor, via_node, entry_arc) = if net.arc_between(origin, dest).is_none() {
            let mut arc = Arc::uncapacitated(origin, dest, price);
            arc.is_virtual = true;
            let id = net.push_arc(arc);
            (dest, None, id)
        } else {
            let label = format!(
                "~{}>{}",
                net.label(origin).to_owned(),
                net.label(dest).to_owned()
            );
            let v = net.push_node(label);
            let half = price / S::from_f64_lossy(2.0);
            let mut first = Arc::uncapacitated(origin, v, half);
            first.is_virtual = true;
            let entry = net.push_arc(first);
            let mut second = Arc::uncapacitated(v, dest, half);
            second.is_virtual = true;
            net.push_arc(second);
            (v, Some(v), entry)
        };
        route_by_pair.insert((origin, dest), routes.len() as u32);
        routes.push(VirtualRoute {
            origin,
            destination: dest,
            successor,
            via_node,
            entry_arc,
            price,
        });
    }
    ExtendedNetwork {
        net,
        base_nodes,
        base_arcs,
        routes,
        route_by_pair,
    }
}

/// Extension with no virtual elements; infeasible demand then surfaces as
/// capacity penalty instead of abandonment.
pub fn without_virtual<S: Scalar>(net: Network<S>) -> ExtendedNetwork<S> {
    let base_nodes = net.node_count();
    let base_arcs = net.arc_count();
    ExtendedNetwork {
        net,
        base_nodes,
        base_arcs,
        routes: Vec::new(),
        route_by_pair: BTreeMap::new(),
    }
}

impl<S: Scalar> ExtendedNetwork<S> {
    pub fn net(&self) -> &Network<S> {
        &self.net
    }

    pub fn base_node_count(&self) -> usize {
        self.base_nodes
    }

    pub fn base_arc_count(&self) -> usize {
        self.base_arcs
    }

    pub fn is_virtual_node(&self, node: NodeId) -> bool {
        (node as usize) >= self.base_nodes
    }

    pub fn routes(&self) -> &[VirtualRoute<S>] {
        &self.routes
    }

    pub fn route_for(&self, origin: NodeId, dest: NodeId) -> Option<&VirtualRoute<S>> {
        self.route_by_pair
            .get(&(origin, dest))
            .map(|&i| &self.routes[i as usize])
    }
}

/// One abandonment record: the flow absorbed by the virtual route serving
/// `(origin, destination)`. The absorbed flow may exceed the pair's own
/// demand because the whole node flow, transfers included, drains into
/// the virtual successor.
#[derive(Debug, Clone, PartialEq)]
pub struct Abandonment<S> {
    pub origin: NodeId,
    pub destination: NodeId,
    pub quantity: S,
    pub demand_volume: S,
    pub exceeds_demand: bool,
}

/// Reads abandonment quantities off the virtual arc loads.
pub fn read_abandonment<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    flow: &crate::flow::FlowField<S>,
    demands: &DemandSet<S>,
) -> Vec<Abandonment<S>> {
    ext.routes
        .iter()
        .map(|route| {
            let quantity = flow.arc_load(route.entry_arc);
            debug_assert!(quantity >= S::zero());
            let demand_volume = demands
                .get(route.origin, route.destination)
                .map(|d| d.volume)
                .unwrap_or_else(S::zero);
            Abandonment {
                origin: route.origin,
                destination: route.destination,
                quantity,
                demand_volume,
                exceeds_demand: quantity > demand_volume,
            }
        })
        .collect()
}
