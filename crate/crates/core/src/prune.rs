//! Admissible first-front-station sets per (node, destination) pair,
//! filtered by the relative path detour ratio.

use crate::dist::DistanceTable;
use crate::extend::ExtendedNetwork;
use crate::network::NodeId;
use crate::scalar::Scalar;

/// Candidate filter mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pruning<S> {
    /// Keep successors whose relative detour ratio is at most the
    /// threshold (>= 1).
    DetourRatio(S),
    /// Keep every successor that can still reach the destination.
    Off,
}

/// One (node, destination) pair and its admissible successors. Real
/// successors come first in ascending id order; the virtual successor, if
/// any, is appended last.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCandidates {
    pub node: NodeId,
    pub dest: NodeId,
    pub dest_idx: u32,
    pub successors: Vec<NodeId>,
    /// True when the ratio filter emptied the set and the best-ratio
    /// successor was retained instead.
    pub fallback: bool,
}

/// Pruned successor sets for every pair the solver decides on.
#[derive(Debug, Clone)]
pub struct CandidateTable<S> {
    destinations: Vec<NodeId>,
    pairs: Vec<PairCandidates>,
    /// [dest_idx][node] -> index into `pairs`, `u32::MAX` when absent.
    pair_idx: Vec<Vec<u32>>,
    /// Contiguous range of `pairs` per destination.
    dest_ranges: Vec<(u32, u32)>,
    epsilon: Option<S>,
    movable: Vec<u32>,
    omega: u64,
}

pub const NO_PAIR: u32 = u32::MAX;

/// Relative path detour ratio of picking `k` as the first front station
/// on the way from `i` to `j`:
///
/// ```text
/// ratio = (len(i->k->..->j) - shared_tail) / (len(i->..->j) - shared_tail)
/// ```
///
/// where `shared_tail` is the cost of the longest common suffix of the
/// canonical shortest path from `i` and the shortest path through `k`.
/// Returns `None` when `k` cannot reach `j` or when the shared tail
/// swallows the whole shortest path (the degenerate zero denominator:
/// routing via `k` only loops back onto the path already taken).
pub fn detour_ratio<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    dist: &DistanceTable<S>,
    node: NodeId,
    dest: NodeId,
    k: NodeId,
) -> Option<S> {
    let dest_idx = dist.dest_index(dest)?;
    let rho = dist.dist_by_index(dest_idx, node);
    if !rho.is_finite() {
        return None;
    }
    let arc_id = ext.net().arc_between(node, k)?;
    let arc = ext.net().arc(arc_id);
    if arc.is_virtual {
        return None;
    }
    let rho_k = dist.dist_by_index(dest_idx, k);
    if !rho_k.is_finite() {
        return None;
    }
    // The canonical successor's alternative path is the shortest path
    // itself; by definition it carries no detour.
    if dist.next_hop_by_index(dest_idx, node) == k {
        return Some(S::one());
    }
    let shortest = dist.canonical_chain(dest_idx, node);
    let mut through_k = Vec::with_capacity(2 + shortest.len());
    through_k.push(node);
    through_k.extend(dist.canonical_chain(dest_idx, k));
    if shortest.is_empty() || through_k.len() < 2 {
        return None;
    }

    // Longest common suffix of the two node sequences.
    let mut matched = 0usize;
    while matched < shortest.len()
        && matched < through_k.len()
        && shortest[shortest.len() - 1 - matched] == through_k[through_k.len() - 1 - matched]
    {
        matched += 1;
    }
    let tail = if matched == 0 {
        S::zero()
    } else {
        dist.dist_by_index(dest_idx, shortest[shortest.len() - matched])
    };
    let denom = rho - tail;
    if denom <= S::zero() {
        return None;
    }
    let through = arc.cost + rho_k;
    Some((through - tail) / denom)
}

/// Builds the admissible successor sets for every (node, destination)
/// pair able to reach a demanded destination, plus the structural pairs
/// created by virtual routes. Virtual successors are admitted verbatim.
pub fn build_candidates<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    dist: &DistanceTable<S>,
    mode: Pruning<S>,
) -> CandidateTable<S> {
    let n = ext.net().node_count();
    let destinations = dist.destinations().to_vec();
    let mut pairs: Vec<PairCandidates> = Vec::new();
    let mut pair_idx = vec![vec![NO_PAIR; n]; destinations.len()];

    for (dest_idx, &dest) in destinations.iter().enumerate() {
        for node in 0..n as NodeId {
            if node == dest {
                continue;
            }
            let reachable = dist.dist_by_index(dest_idx, node).is_finite();
            let route = ext.route_for(node, dest);
            if !reachable && route.is_none() {
                continue;
            }

            let mut successors = Vec::new();
            let mut fallback = false;
            if reachable {
                match mode {
                    Pruning::DetourRatio(epsilon) => {
                        let mut best: Option<(S, NodeId)> = None;
                        for &(k, _) in ext.net().out(node) {
                            if let Some(ratio) = detour_ratio(ext, dist, node, dest, k) {
                                if ratio <= epsilon {
                                    successors.push(k);
                                }
                                if best.is_none_or(|(b, _)| ratio < b) {
                                    best = Some((ratio, k));
                                }
                            }
                        }
                        if successors.is_empty() {
                            if let Some((_, k)) = best {
                                successors.push(k);
                                fallback = true;
                            }
                        }
                    }
                    Pruning::Off => {
                        for &(k, arc_id) in ext.net().out(node) {
                            let arc = ext.net().arc(arc_id);
                            if !arc.is_virtual && dist.dist_by_index(dest_idx, k).is_finite() {
                                successors.push(k);
                            }
                        }
                    }
                }
            }
            if let Some(route) = route {
                successors.push(route.successor);
            }
            if successors.is_empty() {
                continue;
            }
            pair_idx[dest_idx][node as usize] = pairs.len() as u32;
            pairs.push(PairCandidates {
                node,
                dest,
                dest_idx: dest_idx as u32,
                successors,
                fallback,
            });
        }
        // Structural pairs for inserted virtual nodes: their single
        // successor is the destination they serve.
        for route in ext.routes() {
            if route.destination != dest {
                continue;
            }
            if let Some(v) = route.via_node {
                pair_idx[dest_idx][v as usize] = pairs.len() as u32;
                pairs.push(PairCandidates {
                    node: v,
                    dest,
                    dest_idx: dest_idx as u32,
                    successors: vec![dest],
                    fallback: false,
                });
            }
        }
    }

    // Keep pair order sorted by (dest, node); virtual-node pairs were
    // appended out of order above.
    let mut order: Vec<u32> = (0..pairs.len() as u32).collect();
    order.sort_by_key(|&p| {
        let pc = &pairs[p as usize];
        (pc.dest_idx, pc.node)
    });
    let mut sorted = Vec::with_capacity(pairs.len());
    for (new_idx, &old_idx) in order.iter().enumerate() {
        let pc = pairs[old_idx as usize].clone();
        pair_idx[pc.dest_idx as usize][pc.node as usize] = new_idx as u32;
        sorted.push(pc);
    }

    let omega = sorted.iter().map(|p| p.successors.len() as u64 - 1).sum();
    let movable = sorted
        .iter()
        .enumerate()
        .filter(|(_, p)| p.successors.len() >= 2)
        .map(|(i, _)| i as u32)
        .collect();
    let mut dest_ranges = vec![(0u32, 0u32); destinations.len()];
    let mut cursor = 0u32;
    for (dest_idx, range) in dest_ranges.iter_mut().enumerate() {
        let start = cursor;
        while (cursor as usize) < sorted.len()
            && sorted[cursor as usize].dest_idx == dest_idx as u32
        {
            cursor += 1;
        }
        *range = (start, cursor);
    }
    let epsilon = match mode {
        Pruning::DetourRatio(e) => Some(e),
        Pruning::Off => None,
    };
    CandidateTable {
        destinations,
        pairs: sorted,
        pair_idx,
        dest_ranges,
        epsilon,
        movable,
        omega,
    }
}

impl<S: Scalar> CandidateTable<S> {
    /// Empty table (used for size reports before pruning).
    pub fn empty() -> Self {
        CandidateTable {
            destinations: Vec::new(),
            pairs: Vec::new(),
            pair_idx: Vec::new(),
            dest_ranges: Vec::new(),
            epsilon: None,
            movable: Vec::new(),
            omega: 0,
        }
    }

    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    pub fn pairs(&self) -> &[PairCandidates] {
        &self.pairs
    }

    pub fn pair(&self, idx: u32) -> &PairCandidates {
        &self.pairs[idx as usize]
    }

    pub fn pair_index(&self, dest_idx: usize, node: NodeId) -> Option<u32> {
        let idx = *self.pair_idx.get(dest_idx)?.get(node as usize)?;
        (idx != NO_PAIR).then_some(idx)
    }

    /// Pairs deciding flows toward the `dest_idx`-th destination.
    pub fn pairs_for(&self, dest_idx: usize) -> &[PairCandidates] {
        let (start, end) = self.dest_ranges[dest_idx];
        &self.pairs[start as usize..end as usize]
    }

    pub fn candidates(&self, dest_idx: usize, node: NodeId) -> &[NodeId] {
        match self.pair_index(dest_idx, node) {
            Some(idx) => &self.pairs[idx as usize].successors,
            None => &[],
        }
    }

    pub fn epsilon(&self) -> Option<S> {
        self.epsilon
    }

    /// Pairs holding at least two candidates, i.e. the movable ones.
    pub fn movable(&self) -> &[u32] {
        &self.movable
    }

    /// Neighborhood size: total candidates minus one per pair.
    pub fn omega(&self) -> u64 {
        self.omega
    }

    pub fn total_candidates(&self) -> u64 {
        self.pairs.iter().map(|p| p.successors.len() as u64).sum()
    }

    /// Product of candidate-set sizes, saturating at `u128::MAX`.
    pub fn assignment_count(&self) -> u128 {
        let mut product: u128 = 1;
        for pair in &self.pairs {
            product = product.saturating_mul(pair.successors.len() as u128);
        }
        product
    }
}
