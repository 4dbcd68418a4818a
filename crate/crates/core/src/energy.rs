//! Penalized objective: transport cost plus abandonment losses plus a
//! weighted capacity-overload penalty, with an incremental evaluation
//! path for single-successor moves.

use crate::extend::ExtendedNetwork;
use crate::flow::{CycleError, FlowField, SuccessorAssignment};
use crate::network::{NodeId, NO_NODE};
use crate::scalar::Scalar;

/// Objective decomposition. `total = transport + abandonment + lambda * penalty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<S> {
    pub transport_cost: S,
    pub abandonment_cost: S,
    pub penalty: S,
    pub lambda: S,
}

impl<S: Scalar> EnergyBreakdown<S> {
    pub fn total(&self) -> S {
        self.transport_cost + self.abandonment_cost + self.lambda * self.penalty
    }
}

/// Evaluates the full objective of a propagated flow field. The penalty
/// sums each real arc's overload `max(0, load - capacity)`; virtual arcs
/// are uncapacitated and contribute abandonment cost instead.
pub fn energy<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    flow: &FlowField<S>,
    lambda: S,
) -> EnergyBreakdown<S> {
    let mut transport = S::zero();
    let mut abandonment = S::zero();
    let mut penalty = S::zero();
    for (arc, &load) in ext.net().arcs().iter().zip(flow.arc_loads()) {
        if arc.is_virtual {
            abandonment += arc.cost * load;
        } else {
            transport += arc.cost * load;
            let overload = load - arc.capacity;
            if overload > S::zero() {
                penalty += overload;
            }
        }
    }
    EnergyBreakdown {
        transport_cost: transport,
        abandonment_cost: abandonment,
        penalty,
        lambda,
    }
}

/// Reroute one pair onto a new successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub node: NodeId,
    pub dest: NodeId,
    pub dest_idx: u32,
    pub new_successor: NodeId,
}

/// Component-wise energy change of a move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDelta<S> {
    pub transport: S,
    pub abandonment: S,
    pub penalty: S,
}

impl<S: Scalar> EnergyDelta<S> {
    pub fn zero() -> Self {
        EnergyDelta {
            transport: S::zero(),
            abandonment: S::zero(),
            penalty: S::zero(),
        }
    }

    pub fn total(&self, lambda: S) -> S {
        self.transport + self.abandonment + lambda * self.penalty
    }
}

/// The edits that turn the current flow field into the post-move one:
/// node flows along the abandoned chain segment drop by the moved
/// quantity, those along the new segment gain it.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdatePlan<S> {
    pub mv: Move,
    pub old_successor: NodeId,
    pub quantity: S,
    node_deltas: Vec<(NodeId, S)>,
    arc_deltas: Vec<(u32, S)>,
    pub delta: EnergyDelta<S>,
}

/// Walk stamps with generation counters so repeated calls need no clearing.
#[derive(Debug, Default)]
pub struct DeltaScratch {
    generation: u32,
    old_mark: Vec<(u32, u32)>,
    new_mark: Vec<u32>,
}

impl DeltaScratch {
    fn begin(&mut self, node_count: usize) {
        if self.old_mark.len() < node_count {
            self.old_mark.resize(node_count, (0, 0));
            self.new_mark.resize(node_count, 0);
        }
        self.generation += 1;
    }

    fn mark_old(&mut self, node: NodeId, pos: u32) {
        self.old_mark[node as usize] = (self.generation, pos);
    }

    fn old_pos(&self, node: NodeId) -> Option<u32> {
        let (gen, pos) = self.old_mark[node as usize];
        (gen == self.generation).then_some(pos)
    }

    fn mark_new(&mut self, node: NodeId) {
        self.new_mark[node as usize] = self.generation;
    }

    fn is_new(&self, node: NodeId) -> bool {
        self.new_mark[node as usize] == self.generation
    }
}

/// Exact energy change of rerouting the fixed upstream quantity at
/// `mv.node` from its current successor chain onto the chain through
/// `mv.new_successor`, without re-propagating. Fails with [`CycleError`]
/// when the new chain would feed the moved flow back into a cycle.
pub fn delta_energy<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    flow: &FlowField<S>,
    assignment: &SuccessorAssignment,
    mv: Move,
    lambda: S,
) -> Result<(S, UpdatePlan<S>), CycleError> {
    let mut scratch = DeltaScratch::default();
    delta_energy_with(&mut scratch, ext, flow, assignment, mv, lambda)
}

/// [`delta_energy`] with caller-owned scratch buffers.
pub fn delta_energy_with<S: Scalar>(
    scratch: &mut DeltaScratch,
    ext: &ExtendedNetwork<S>,
    flow: &FlowField<S>,
    assignment: &SuccessorAssignment,
    mv: Move,
    lambda: S,
) -> Result<(S, UpdatePlan<S>), CycleError> {
    let net = ext.net();
    let dest_idx = mv.dest_idx as usize;
    let old_successor = assignment.get(dest_idx, mv.node);
    debug_assert_ne!(old_successor, NO_NODE);
    let quantity = flow.node_flow(dest_idx, mv.node);

    if old_successor == mv.new_successor || quantity <= S::zero() {
        // Nothing moves: rerouting a zero flow changes no loads. A cycle
        // created this way carries no flow and stays legal.
        let plan = UpdatePlan {
            mv,
            old_successor,
            quantity: S::zero(),
            node_deltas: Vec::new(),
            arc_deltas: Vec::new(),
            delta: EnergyDelta::zero(),
        };
        return Ok((S::zero(), plan));
    }

    scratch.begin(net.node_count());

    // Old chain: from the current successor to the destination. A valid
    // flow-bearing chain cannot revisit nodes.
    let mut old_nodes: Vec<NodeId> = Vec::new();
    let mut old_arcs: Vec<u32> = vec![net
        .arc_between(mv.node, old_successor)
        .expect("assigned successor without arc")];
    let mut cur = old_successor;
    while cur != mv.dest {
        if scratch.old_pos(cur).is_some() || cur == mv.node {
            return Err(CycleError {
                destination: mv.dest,
                nodes: old_nodes,
            });
        }
        scratch.mark_old(cur, old_nodes.len() as u32);
        old_nodes.push(cur);
        let next = assignment.get(dest_idx, cur);
        debug_assert_ne!(next, NO_NODE);
        old_arcs.push(
            net.arc_between(cur, next)
                .expect("assigned successor without arc"),
        );
        cur = next;
    }

    // New chain: from the proposed successor until it merges into the old
    // chain, reaches the destination, or closes a cycle.
    let mut new_nodes: Vec<NodeId> = Vec::new();
    let mut new_arcs: Vec<u32> = vec![net
        .arc_between(mv.node, mv.new_successor)
        .expect("candidate successor without arc")];
    let mut merge_pos: Option<u32> = None;
    let mut cur = mv.new_successor;
    loop {
        if cur == mv.dest {
            break;
        }
        if cur == mv.node || scratch.is_new(cur) {
            let mut nodes = new_nodes;
            nodes.push(mv.node);
            return Err(CycleError {
                destination: mv.dest,
                nodes,
            });
        }
        if let Some(pos) = scratch.old_pos(cur) {
            merge_pos = Some(pos);
            break;
        }
        scratch.mark_new(cur);
        new_nodes.push(cur);
        let next = assignment.get(dest_idx, cur);
        debug_assert_ne!(next, NO_NODE);
        new_arcs.push(
            net.arc_between(cur, next)
                .expect("assigned successor without arc"),
        );
        cur = next;
    }

    // Cut the old chain at the merge point; past it the rerouted quantity
    // flows exactly as before.
    let (old_node_cut, old_arc_cut) = match merge_pos {
        Some(pos) => (pos as usize, pos as usize + 1),
        None => (old_nodes.len(), old_arcs.len()),
    };

    let mut node_deltas = Vec::with_capacity(old_node_cut + new_nodes.len());
    for &node in &old_nodes[..old_node_cut] {
        node_deltas.push((node, -quantity));
    }
    for &node in &new_nodes {
        node_deltas.push((node, quantity));
    }

    let mut delta = EnergyDelta::zero();
    let mut arc_deltas = Vec::with_capacity(old_arc_cut + new_arcs.len());
    for (arcs, sign_negative) in [(&old_arcs[..old_arc_cut], true), (&new_arcs[..], false)] {
        for &arc_id in arcs {
            let change = if sign_negative { -quantity } else { quantity };
            arc_deltas.push((arc_id, change));
            let arc = net.arc(arc_id);
            let cost_change = arc.cost * change;
            if arc.is_virtual {
                delta.abandonment += cost_change;
            } else {
                delta.transport += cost_change;
                let load = flow.arc_load(arc_id);
                let before = (load - arc.capacity).max(S::zero());
                let after = (load + change - arc.capacity).max(S::zero());
                delta.penalty += after - before;
            }
        }
    }

    // Both chains end at the destination, so the arrived volume never
    // changes under a reroute.
    let total = delta.total(lambda);
    let plan = UpdatePlan {
        mv,
        old_successor,
        quantity,
        node_deltas,
        arc_deltas,
        delta,
    };
    Ok((total, plan))
}

/// Applies a committed move to the assignment, flow field, and running
/// energy breakdown.
pub fn commit<S: Scalar>(
    plan: &UpdatePlan<S>,
    assignment: &mut SuccessorAssignment,
    flow: &mut FlowField<S>,
    breakdown: &mut EnergyBreakdown<S>,
) {
    assignment.set(
        plan.mv.dest_idx as usize,
        plan.mv.node,
        plan.mv.new_successor,
    );
    let dest_idx = plan.mv.dest_idx as usize;
    for &(node, delta) in &plan.node_deltas {
        *flow.node_flow_mut(dest_idx, node) += delta;
    }
    for &(arc, delta) in &plan.arc_deltas {
        *flow.arc_load_mut(arc) += delta;
    }
    breakdown.transport_cost += plan.delta.transport;
    breakdown.abandonment_cost += plan.delta.abandonment;
    breakdown.penalty += plan.delta.penalty;
}
