//! Immutable rail network: stations, capacitated arcs, and the demand matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Dense station index.
pub type NodeId = u32;

/// Sentinel meaning "no node".
pub const NO_NODE: NodeId = NodeId::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
}

impl Node {
    pub fn new(id: NodeId, label: impl Into<String>) -> Self {
        Node {
            id,
            label: label.into(),
        }
    }

    /// Node with the numeric id as its label.
    pub fn unnamed(id: NodeId) -> Self {
        Node {
            id,
            label: id.to_string(),
        }
    }
}

/// Directed capacitated arc. `capacity` may be infinite; virtual arcs are
/// the uncapacitated elements added by the network extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc<S> {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: S,
    pub capacity: S,
    pub is_virtual: bool,
}

impl<S: Scalar> Arc<S> {
    pub fn new(from: NodeId, to: NodeId, cost: S, capacity: S) -> Self {
        Arc {
            from,
            to,
            cost,
            capacity,
            is_virtual: false,
        }
    }

    pub fn uncapacitated(from: NodeId, to: NodeId, cost: S) -> Self {
        Arc {
            from,
            to,
            cost,
            capacity: S::infinity(),
            is_virtual: false,
        }
    }
}

/// One shipment: volume to move from `origin` to `destination`, with an
/// optional per-unit loss of income when the shipment is given up.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand<S> {
    pub origin: NodeId,
    pub destination: NodeId,
    pub volume: S,
    pub shadow_price: Option<S>,
}

impl<S: Scalar> Demand<S> {
    pub fn new(origin: NodeId, destination: NodeId, volume: S) -> Self {
        Demand {
            origin,
            destination,
            volume,
            shadow_price: None,
        }
    }

    pub fn with_price(origin: NodeId, destination: NodeId, volume: S, price: S) -> Self {
        Demand {
            origin,
            destination,
            volume,
            shadow_price: Some(price),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("node ids must be the dense range 0..{expected}, found id {found}")]
    NonDenseNodeIds { expected: u32, found: u32 },
    #[error("duplicate node label {0:?}")]
    DuplicateLabel(String),
    #[error("node label {0:?} is empty or contains a comma or control character")]
    BadLabel(String),
    #[error("arc {from}->{to} references a missing node {missing}")]
    DanglingEndpoint {
        from: NodeId,
        to: NodeId,
        missing: NodeId,
    },
    #[error("duplicate arc {from}->{to}")]
    DuplicateArc { from: NodeId, to: NodeId },
    #[error("self-loop arc at node {0}")]
    SelfLoop(NodeId),
    #[error("arc {from}->{to} has negative {field}")]
    NegativeArcValue {
        from: NodeId,
        to: NodeId,
        field: &'static str,
    },
    #[error("demand {origin}->{destination} references a missing node")]
    DemandDanglingEndpoint { origin: NodeId, destination: NodeId },
    #[error("demand origin equals destination at node {0}")]
    DemandSelfLoop(NodeId),
    #[error("demand {origin}->{destination} has non-positive volume")]
    NonPositiveVolume { origin: NodeId, destination: NodeId },
    #[error("duplicate demand pair {origin}->{destination}")]
    DuplicateDemand { origin: NodeId, destination: NodeId },
}

/// Immutable directed network with per-node adjacency. Safe for concurrent
/// reads once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<S> {
    nodes: Vec<Node>,
    arcs: Vec<Arc<S>>,
    out_adj: Vec<Vec<(NodeId, u32)>>,
    in_adj: Vec<Vec<(NodeId, u32)>>,
}

impl<S: Scalar> Network<S> {
    pub fn build(nodes: Vec<Node>, arcs: Vec<Arc<S>>) -> Result<Self, BuildError> {
        let n = nodes.len() as u32;
        for (pos, node) in nodes.iter().enumerate() {
            if node.id != pos as u32 {
                return Err(BuildError::NonDenseNodeIds {
                    expected: n,
                    found: node.id,
                });
            }
        }
        let mut labels: BTreeMap<&str, NodeId> = BTreeMap::new();
        for node in &nodes {
            if node.label.is_empty()
                || node.label.contains(',')
                || node.label.chars().any(char::is_control)
                || node.label != node.label.trim()
            {
                return Err(BuildError::BadLabel(node.label.clone()));
            }
            if labels.insert(node.label.as_str(), node.id).is_some() {
                return Err(BuildError::DuplicateLabel(node.label.clone()));
            }
        }

        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        let mut seen: BTreeMap<(NodeId, NodeId), ()> = BTreeMap::new();
        for (idx, arc) in arcs.iter().enumerate() {
            if arc.from == arc.to {
                return Err(BuildError::SelfLoop(arc.from));
            }
            for endpoint in [arc.from, arc.to] {
                if endpoint >= n {
                    return Err(BuildError::DanglingEndpoint {
                        from: arc.from,
                        to: arc.to,
                        missing: endpoint,
                    });
                }
            }
            if arc.cost < S::zero() {
                return Err(BuildError::NegativeArcValue {
                    from: arc.from,
                    to: arc.to,
                    field: "cost",
                });
            }
            if arc.capacity < S::zero() {
                return Err(BuildError::NegativeArcValue {
                    from: arc.from,
                    to: arc.to,
                    field: "capacity",
                });
            }
            if seen.insert((arc.from, arc.to), ()).is_some() {
                return Err(BuildError::DuplicateArc {
                    from: arc.from,
                    to: arc.to,
                });
            }
            out_adj[arc.from as usize].push((arc.to, idx as u32));
            in_adj[arc.to as usize].push((arc.from, idx as u32));
        }
        for adj in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            adj.sort_unstable();
        }
        Ok(Network {
            nodes,
            arcs,
            out_adj,
            in_adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc<S>] {
        &self.arcs
    }

    pub fn arc(&self, id: u32) -> &Arc<S> {
        &self.arcs[id as usize]
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id as usize].label
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.label == label).map(|n| n.id)
    }

    /// Outgoing `(neighbor, arc id)` pairs sorted by neighbor.
    pub fn out(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.out_adj[node as usize]
    }

    pub fn incoming(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.in_adj[node as usize]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_adj[node as usize].len()
    }

    /// Arc id of `from -> to`, if present. At most one arc exists per
    /// ordered pair.
    pub fn arc_between(&self, from: NodeId, to: NodeId) -> Option<u32> {
        let adj = &self.out_adj[from as usize];
        adj.binary_search_by_key(&to, |&(nbr, _)| nbr)
            .ok()
            .map(|pos| adj[pos].1)
    }

    /// Appends a node, returning its id. Used by the network extension.
    pub(crate) fn push_node(&mut self, label: String) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node { id, label });
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        id
    }

    /// Appends an arc, keeping adjacency sorted. Used by the network
    /// extension; the (from, to) pair must be new.
    pub(crate) fn push_arc(&mut self, arc: Arc<S>) -> u32 {
        debug_assert!(self.arc_between(arc.from, arc.to).is_none());
        let id = self.arcs.len() as u32;
        let out = &mut self.out_adj[arc.from as usize];
        let pos = out.partition_point(|&(nbr, _)| nbr < arc.to);
        out.insert(pos, (arc.to, id));
        let inc = &mut self.in_adj[arc.to as usize];
        let pos = inc.partition_point(|&(nbr, _)| nbr < arc.from);
        inc.insert(pos, (arc.from, id));
        self.arcs.push(arc);
        id
    }
}

/// Demands indexed by destination and by (origin, destination) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSet<S> {
    all: Vec<Demand<S>>,
    destinations: Vec<NodeId>,
    by_dest: Vec<Vec<usize>>,
    by_pair: BTreeMap<(NodeId, NodeId), usize>,
}

impl<S: Scalar> DemandSet<S> {
    pub fn new(node_count: usize, demands: Vec<Demand<S>>) -> Result<Self, BuildError> {
        let n = node_count as u32;
        let mut by_pair = BTreeMap::new();
        for (idx, d) in demands.iter().enumerate() {
            if d.origin >= n || d.destination >= n {
                return Err(BuildError::DemandDanglingEndpoint {
                    origin: d.origin,
                    destination: d.destination,
                });
            }
            if d.origin == d.destination {
                return Err(BuildError::DemandSelfLoop(d.origin));
            }
            if d.volume.is_nan() || d.volume <= S::zero() {
                return Err(BuildError::NonPositiveVolume {
                    origin: d.origin,
                    destination: d.destination,
                });
            }
            if by_pair.insert((d.origin, d.destination), idx).is_some() {
                return Err(BuildError::DuplicateDemand {
                    origin: d.origin,
                    destination: d.destination,
                });
            }
        }
        let mut destinations: Vec<NodeId> = demands.iter().map(|d| d.destination).collect();
        destinations.sort_unstable();
        destinations.dedup();
        let mut by_dest = vec![Vec::new(); destinations.len()];
        for (&(origin, dest), &idx) in &by_pair {
            let _ = origin;
            let pos = destinations.binary_search(&dest).unwrap();
            by_dest[pos].push(idx);
        }
        Ok(DemandSet {
            all: demands,
            destinations,
            by_dest,
            by_pair,
        })
    }

    pub fn all(&self) -> &[Demand<S>] {
        &self.all
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    /// Distinct destinations, ascending.
    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    /// Demands bound for the `dest_idx`-th destination, ordered by origin.
    pub fn for_destination(&self, dest_idx: usize) -> impl Iterator<Item = &Demand<S>> {
        self.by_dest[dest_idx].iter().map(|&i| &self.all[i])
    }

    /// Demands bound for the given destination node, ordered by origin.
    pub fn for_destination_node(&self, dest: NodeId) -> impl Iterator<Item = &Demand<S>> {
        self.destinations
            .binary_search(&dest)
            .ok()
            .map(|idx| self.by_dest[idx].iter())
            .into_iter()
            .flatten()
            .map(|&i| &self.all[i])
    }

    pub fn get(&self, origin: NodeId, destination: NodeId) -> Option<&Demand<S>> {
        self.by_pair
            .get(&(origin, destination))
            .map(|&i| &self.all[i])
    }

    pub fn total_volume(&self) -> S {
        self.all.iter().map(|d| d.volume).sum()
    }
}

/// A validated problem instance: network plus indexed demands.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub net: Network<S>,
    pub demands: DemandSet<S>,
}

/// Builds the network and indexes the demands, rejecting structural
/// violations (duplicate arcs, dangling endpoints, bad demands).
pub fn build_network<S: Scalar>(
    nodes: Vec<Node>,
    arcs: Vec<Arc<S>>,
    demands: Vec<Demand<S>>,
) -> Result<Instance<S>, BuildError> {
    let net = Network::build(nodes, arcs)?;
    let demands = DemandSet::new(net.node_count(), demands)?;
    Ok(Instance { net, demands })
}

/// Model size counts: n(n-1)m decision variables with m the mean
/// out-degree, n(n-1) conservation and tree rows, and n*m capacity rows.
/// `raw_variables` is computed as (n-1)*|E|, which equals n(n-1)m exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub nodes: u64,
    pub arcs: u64,
    pub mean_out_degree: f64,
    pub raw_variables: u64,
    pub conservation_rows: u64,
    pub tree_rows: u64,
    pub capacity_rows: u64,
    pub pruned_variables: u64,
}

pub fn problem_size<S: Scalar>(
    net: &Network<S>,
    table: &crate::prune::CandidateTable<S>,
) -> SizeReport {
    let n = net.node_count() as u64;
    let e = net.arc_count() as u64;
    SizeReport {
        nodes: n,
        arcs: e,
        mean_out_degree: if n == 0 { 0.0 } else { e as f64 / n as f64 },
        raw_variables: n.saturating_sub(1) * e,
        conservation_rows: n * n.saturating_sub(1),
        tree_rows: n * n.saturating_sub(1),
        capacity_rows: e,
        pruned_variables: table.total_candidates(),
    }
}
