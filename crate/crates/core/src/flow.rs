//! Solution encoding and flow propagation: each (node, destination) pair
//! picks one successor, and flows accumulate along successor chains into
//! per-destination in-trees.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::extend::ExtendedNetwork;
use crate::network::{DemandSet, NodeId, NO_NODE};
use crate::prune::{CandidateTable, PairCandidates};
use crate::scalar::Scalar;

/// The solution: chosen successor for every candidate pair. Picking one
/// successor per pair makes the one-path-per-flow constraint structurally
/// unviolable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorAssignment {
    succ: Vec<Vec<NodeId>>,
}

impl SuccessorAssignment {
    pub fn undefined(dest_count: usize, node_count: usize) -> Self {
        SuccessorAssignment {
            succ: vec![vec![NO_NODE; node_count]; dest_count],
        }
    }

    /// Builds an assignment by choosing a candidate index for every pair.
    pub fn from_fn<S: Scalar>(
        table: &CandidateTable<S>,
        node_count: usize,
        mut choose: impl FnMut(&PairCandidates) -> usize,
    ) -> Self {
        let mut assignment = SuccessorAssignment::undefined(table.destinations().len(), node_count);
        for pair in table.pairs() {
            let idx = choose(pair);
            assignment.set(pair.dest_idx as usize, pair.node, pair.successors[idx]);
        }
        assignment
    }

    pub fn get(&self, dest_idx: usize, node: NodeId) -> NodeId {
        self.succ[dest_idx][node as usize]
    }

    pub fn set(&mut self, dest_idx: usize, node: NodeId, successor: NodeId) {
        self.succ[dest_idx][node as usize] = successor;
    }
}

/// Propagated flows: per-pair node flow, per-arc aggregated load, and the
/// volume landed at each destination.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<S> {
    node_flow: Vec<Vec<S>>,
    arc_load: Vec<S>,
    arrived: Vec<S>,
}

impl<S: Scalar> FlowField<S> {
    pub fn zeroed(dest_count: usize, node_count: usize, arc_count: usize) -> Self {
        FlowField {
            node_flow: vec![vec![S::zero(); node_count]; dest_count],
            arc_load: vec![S::zero(); arc_count],
            arrived: vec![S::zero(); dest_count],
        }
    }

    fn reset(&mut self) {
        for row in &mut self.node_flow {
            row.fill(S::zero());
        }
        self.arc_load.fill(S::zero());
        self.arrived.fill(S::zero());
    }

    /// Flow volume at `node` headed for the `dest_idx`-th destination.
    pub fn node_flow(&self, dest_idx: usize, node: NodeId) -> S {
        self.node_flow[dest_idx][node as usize]
    }

    /// Aggregate load on an arc across all destinations.
    pub fn arc_load(&self, arc: u32) -> S {
        self.arc_load[arc as usize]
    }

    pub fn arc_loads(&self) -> &[S] {
        &self.arc_load
    }

    /// Volume delivered to the `dest_idx`-th destination over real arcs,
    /// abandoned flow excluded. Filled by propagation; incremental move
    /// commits do not maintain it.
    pub fn arrived(&self, dest_idx: usize) -> S {
        self.arrived[dest_idx]
    }

    pub(crate) fn node_flow_mut(&mut self, dest_idx: usize, node: NodeId) -> &mut S {
        &mut self.node_flow[dest_idx][node as usize]
    }

    pub(crate) fn arc_load_mut(&mut self, arc: u32) -> &mut S {
        &mut self.arc_load[arc as usize]
    }

    pub(crate) fn arrived_mut(&mut self, dest_idx: usize) -> &mut S {
        &mut self.arrived[dest_idx]
    }
}

/// A successor cycle that carries positive flow: the recursive flow
/// expression has no solution there.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("flow-bearing successor cycle toward destination {destination}: {nodes:?}")]
pub struct CycleError {
    pub destination: NodeId,
    pub nodes: Vec<NodeId>,
}

/// Reusable buffers for repeated propagation.
#[derive(Debug, Default)]
pub struct PropagateScratch {
    in_deg: Vec<u32>,
    stack: Vec<NodeId>,
}

impl PropagateScratch {
    fn ensure(&mut self, node_count: usize) {
        if self.in_deg.len() < node_count {
            self.in_deg.resize(node_count, 0);
        }
        self.stack.clear();
    }
}

/// Propagates all demands through the successor assignment, accumulating
/// node flows in reverse-topological order of the successor chains.
pub fn propagate<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    demands: &DemandSet<S>,
) -> Result<FlowField<S>, CycleError> {
    let mut flow = FlowField::zeroed(
        table.destinations().len(),
        ext.net().node_count(),
        ext.net().arc_count(),
    );
    let mut scratch = PropagateScratch::default();
    propagate_into(ext, table, assignment, demands, &mut flow, &mut scratch)?;
    Ok(flow)
}

/// `propagate` into caller-owned buffers.
pub fn propagate_into<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    demands: &DemandSet<S>,
    flow: &mut FlowField<S>,
    scratch: &mut PropagateScratch,
) -> Result<(), CycleError> {
    let net = ext.net();
    let n = net.node_count();
    flow.reset();
    scratch.ensure(n);

    for (dest_idx, &dest) in table.destinations().iter().enumerate() {
        let pair_range = table.pairs_for(dest_idx);
        // Seed original demands.
        for demand in demands.for_destination_node(dest) {
            *flow.node_flow_mut(dest_idx, demand.origin) += demand.volume;
        }
        // Predecessor counts within the assigned successor graph.
        for pair in pair_range {
            let succ = assignment.get(dest_idx, pair.node);
            debug_assert_ne!(succ, NO_NODE, "pair without assigned successor");
            if succ != dest {
                scratch.in_deg[succ as usize] += 1;
            }
        }
        scratch.stack.clear();
        for pair in pair_range {
            if scratch.in_deg[pair.node as usize] == 0 {
                scratch.stack.push(pair.node);
            }
        }
        let mut processed = 0usize;
        while let Some(node) = scratch.stack.pop() {
            processed += 1;
            let q = flow.node_flow(dest_idx, node);
            let succ = assignment.get(dest_idx, node);
            if q > S::zero() {
                let arc = net
                    .arc_between(node, succ)
                    .expect("assigned successor without arc");
                *flow.arc_load_mut(arc) += q;
                // Arrivals over a virtual arc are abandoned demand, not
                // deliveries.
                if succ == dest && !net.arc(arc).is_virtual {
                    *flow.arrived_mut(dest_idx) += q;
                }
            }
            if succ != dest {
                if q > S::zero() {
                    *flow.node_flow_mut(dest_idx, succ) += q;
                }
                scratch.in_deg[succ as usize] -= 1;
                if scratch.in_deg[succ as usize] == 0 {
                    scratch.stack.push(succ);
                }
            }
        }
        if processed < pair_range.len() {
            // Leftover nodes sit on successor cycles. Zero-flow cycles are
            // harmless; a positive-inflow one is an error.
            let mut offender = NO_NODE;
            for pair in pair_range {
                if scratch.in_deg[pair.node as usize] > 0
                    && flow.node_flow(dest_idx, pair.node) > S::zero()
                {
                    offender = pair.node;
                    break;
                }
            }
            if offender != NO_NODE {
                let cycle = trace_cycle(assignment, dest_idx, offender);
                for pair in pair_range {
                    scratch.in_deg[pair.node as usize] = 0;
                }
                return Err(CycleError {
                    destination: dest,
                    nodes: cycle,
                });
            }
            for pair in pair_range {
                scratch.in_deg[pair.node as usize] = 0;
            }
        }
    }
    Ok(())
}

/// Follows successors from `start` until a node repeats, returning the
/// cycle portion of the walk.
fn trace_cycle(assignment: &SuccessorAssignment, dest_idx: usize, start: NodeId) -> Vec<NodeId> {
    let mut walk: Vec<NodeId> = Vec::new();
    let mut cur = start;
    loop {
        if let Some(pos) = walk.iter().position(|&v| v == cur) {
            return walk[pos..].to_vec();
        }
        walk.push(cur);
        cur = assignment.get(dest_idx, cur);
        debug_assert_ne!(cur, NO_NODE);
    }
}

/// One failed flow-conservation row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationViolation<S> {
    pub destination: NodeId,
    pub node: NodeId,
    pub expected: S,
    pub actual: S,
}

/// Verifies the conservation equation at every pair: the flow leaving a
/// node equals its own demand plus the transfer flow arriving from
/// assigned predecessors, to an additive tolerance of 1e-9 * max(1, N).
pub fn check_conservation<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    flow: &FlowField<S>,
    demands: &DemandSet<S>,
) -> Vec<ConservationViolation<S>> {
    let n = ext.net().node_count();
    let mut violations = Vec::new();
    let mut inflow = vec![S::zero(); n];
    for (dest_idx, &dest) in table.destinations().iter().enumerate() {
        let pair_range = table.pairs_for(dest_idx);
        for slot in inflow.iter_mut() {
            *slot = S::zero();
        }
        for pair in pair_range {
            let succ = assignment.get(dest_idx, pair.node);
            if succ != dest {
                inflow[succ as usize] += flow.node_flow(dest_idx, pair.node);
            }
        }
        for pair in pair_range {
            let volume = demands
                .get(pair.node, dest)
                .map(|d| d.volume)
                .unwrap_or_else(S::zero);
            let expected = volume + inflow[pair.node as usize];
            let actual = flow.node_flow(dest_idx, pair.node);
            let tol = S::from_f64_lossy(1e-9) * volume.max(S::one());
            if (actual - expected).abs() > tol {
                violations.push(ConservationViolation {
                    destination: dest,
                    node: pair.node,
                    expected,
                    actual,
                });
            }
        }
        // Demands whose origin has no admissible successor never enter the
        // flow at all; report them.
        for demand in demands.for_destination_node(dest) {
            if table.pair_index(dest_idx, demand.origin).is_none() {
                violations.push(ConservationViolation {
                    destination: dest,
                    node: demand.origin,
                    expected: demand.volume,
                    actual: S::zero(),
                });
            }
        }
    }
    violations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeViolationKind {
    /// A node splits one destination's flow across several arcs.
    SplitFlow,
    /// A node's positive flow never reaches the destination (cycle).
    CycleMember,
    /// Positive flow with no outgoing arc.
    DeadEnd,
    /// Positive flow leaving the tree root.
    RootOutflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeViolation {
    pub destination: NodeId,
    pub node: NodeId,
    pub kind: TreeViolationKind,
}

/// Checks the in-tree property of one destination's positive-flow arcs,
/// given explicitly (so corrupted flow patterns can be checked too).
pub fn check_tree_arcs<S: Scalar>(
    dest: NodeId,
    edges: &[(NodeId, NodeId, S)],
) -> Vec<TreeViolation> {
    let mut violations = Vec::new();
    let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(from, to, flow) in edges {
        if flow > S::zero() {
            out.entry(from).or_default().push(to);
        }
    }
    for (&from, tos) in &out {
        if from == dest {
            violations.push(TreeViolation {
                destination: dest,
                node: from,
                kind: TreeViolationKind::RootOutflow,
            });
        }
        if tos.len() > 1 {
            violations.push(TreeViolation {
                destination: dest,
                node: from,
                kind: TreeViolationKind::SplitFlow,
            });
        }
    }
    // Reachability of the root from every flow-bearing node.
    // 0 = unknown, 1 = on current walk, 2 = reaches root, 3 = failed.
    let mut state: BTreeMap<NodeId, u8> = BTreeMap::new();
    for &start in out.keys() {
        if state.get(&start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut walk = vec![start];
        state.insert(start, 1);
        let verdict = loop {
            let cur = *walk.last().unwrap();
            if cur == dest {
                break 2;
            }
            match out.get(&cur).and_then(|tos| tos.first()) {
                None => break 3,
                Some(&next) if next == dest => break 2,
                Some(&next) => match state.get(&next).copied().unwrap_or(0) {
                    1 => break 4, // cycle within this walk
                    2 => break 2,
                    3 => break 3,
                    _ => {
                        state.insert(next, 1);
                        walk.push(next);
                    }
                },
            }
        };
        for &node in &walk {
            if node == dest {
                continue;
            }
            state.insert(node, if verdict == 2 { 2 } else { 3 });
            if verdict == 4 {
                violations.push(TreeViolation {
                    destination: dest,
                    node,
                    kind: TreeViolationKind::CycleMember,
                });
            } else if verdict == 3 {
                violations.push(TreeViolation {
                    destination: dest,
                    node,
                    kind: TreeViolationKind::DeadEnd,
                });
            }
        }
    }
    violations
}

/// Confirms that every destination's positive flows form an in-tree
/// rooted at that destination: one outgoing arc per node, no cycles, all
/// chains terminating at the root.
pub fn check_tree_shape<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    flow: &FlowField<S>,
) -> Vec<TreeViolation> {
    let n = ext.net().node_count() as NodeId;
    let mut violations = Vec::new();
    for (dest_idx, &dest) in table.destinations().iter().enumerate() {
        let mut edges = Vec::new();
        for node in 0..n {
            if node == dest {
                continue;
            }
            let q = flow.node_flow(dest_idx, node);
            if q <= S::zero() {
                continue;
            }
            let succ = assignment.get(dest_idx, node);
            if succ == NO_NODE {
                violations.push(TreeViolation {
                    destination: dest,
                    node,
                    kind: TreeViolationKind::DeadEnd,
                });
            } else {
                edges.push((node, succ, q));
            }
        }
        violations.extend(check_tree_arcs(dest, &edges));
    }
    violations
}

/// One shipment's route through the network. Abandoned shipments carry
/// the real prefix walked before draining into a virtual element.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace<S> {
    pub origin: NodeId,
    pub destination: NodeId,
    pub nodes: Vec<NodeId>,
    pub length: S,
    pub abandoned: bool,
}

/// Traces every demand's path by following its chosen successors.
pub fn extract_paths<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    demands: &DemandSet<S>,
) -> Vec<PathTrace<S>> {
    let net = ext.net();
    let mut traces = Vec::with_capacity(demands.len());
    for demand in demands.all() {
        let dest = demand.destination;
        let dest_idx = table
            .destinations()
            .binary_search(&dest)
            .expect("demand destination in table");
        let mut nodes = vec![demand.origin];
        let mut length = S::zero();
        let mut abandoned = false;
        let cap = net.node_count() + 1;
        let mut cur = demand.origin;
        while cur != dest {
            let succ = assignment.get(dest_idx, cur);
            if succ == NO_NODE {
                abandoned = true; // unroutable demand: nothing was moved
                break;
            }
            let arc_id = net
                .arc_between(cur, succ)
                .expect("assigned successor without arc");
            if net.arc(arc_id).is_virtual {
                abandoned = true;
                break;
            }
            length += net.arc(arc_id).cost;
            nodes.push(succ);
            cur = succ;
            assert!(
                nodes.len() <= cap,
                "path trace exceeded node count; cyclic assignment"
            );
        }
        traces.push(PathTrace {
            origin: demand.origin,
            destination: dest,
            nodes,
            length,
            abandoned,
        });
    }
    traces
}
