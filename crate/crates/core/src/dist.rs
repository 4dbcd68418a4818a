//! Shortest-path distances toward each destination, with canonical
//! successor chains used by the detour pruning.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::network::{Network, NodeId, NO_NODE};
use crate::scalar::Scalar;

/// Per-destination least-cost distances over real (non-virtual) arcs.
///
/// `next_hop(i, j)` is the canonical successor of `i` on a shortest path
/// to `j`: the out-neighbor minimizing `cost(i,k) + dist(k,j)`, ties
/// broken by lowest node id.
#[derive(Debug, Clone)]
pub struct DistanceTable<S> {
    destinations: Vec<NodeId>,
    dest_pos: Vec<u32>,
    dist: Vec<Vec<S>>,
    next_hop: Vec<Vec<NodeId>>,
}

struct HeapEntry<S> {
    dist: S,
    node: NodeId,
}

impl<S: Scalar> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl<S: Scalar> Eq for HeapEntry<S> {}
impl<S: Scalar> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: invert so the smallest (dist, node) pops first.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Computes least-cost distances into every requested destination.
/// Virtual arcs are skipped; unreachable pairs get infinite distance.
pub fn all_pairs_shortest<S: Scalar>(
    net: &Network<S>,
    destinations: &[NodeId],
) -> DistanceTable<S> {
    let n = net.node_count();
    let mut dests: Vec<NodeId> = destinations.to_vec();
    dests.sort_unstable();
    dests.dedup();

    let mut dest_pos = vec![u32::MAX; n];
    for (idx, &d) in dests.iter().enumerate() {
        dest_pos[d as usize] = idx as u32;
    }

    let mut dist = Vec::with_capacity(dests.len());
    let mut next_hop = Vec::with_capacity(dests.len());
    for &dest in &dests {
        let d = dijkstra_to(net, dest);
        let nh = canonical_next_hops(net, dest, &d);
        dist.push(d);
        next_hop.push(nh);
    }
    DistanceTable {
        destinations: dests,
        dest_pos,
        dist,
        next_hop,
    }
}

/// Dijkstra on reversed arcs from `dest`, giving dist(i, dest) for all i.
fn dijkstra_to<S: Scalar>(net: &Network<S>, dest: NodeId) -> Vec<S> {
    let n = net.node_count();
    let mut dist = vec![S::infinity(); n];
    dist[dest as usize] = S::zero();
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: S::zero(),
        node: dest,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node as usize] {
            continue;
        }
        for &(pred, arc_id) in net.incoming(node) {
            let arc = net.arc(arc_id);
            if arc.is_virtual {
                continue;
            }
            let cand = d + arc.cost;
            if cand < dist[pred as usize] {
                dist[pred as usize] = cand;
                heap.push(HeapEntry {
                    dist: cand,
                    node: pred,
                });
            }
        }
    }
    dist
}

/// Lowest-id minimizer of cost(i,k) + dist(k). Among minimizers, neighbors
/// strictly closer to the destination are preferred, which keeps canonical
/// chains acyclic even when zero-cost arcs tie.
fn canonical_next_hops<S: Scalar>(net: &Network<S>, dest: NodeId, dist: &[S]) -> Vec<NodeId> {
    let n = net.node_count();
    let mut nh = vec![NO_NODE; n];
    for i in 0..n as NodeId {
        if i == dest || !dist[i as usize].is_finite() {
            continue;
        }
        let mut best: Option<(S, bool, NodeId)> = None;
        for &(k, arc_id) in net.out(i) {
            let arc = net.arc(arc_id);
            if arc.is_virtual || !dist[k as usize].is_finite() {
                continue;
            }
            let through = arc.cost + dist[k as usize];
            let closer = dist[k as usize] < dist[i as usize];
            let better = match best {
                None => true,
                Some((bd, bc, bk)) => {
                    through < bd || (through == bd && ((closer && !bc) || (closer == bc && k < bk)))
                }
            };
            if better {
                best = Some((through, closer, k));
            }
        }
        if let Some((_, _, k)) = best {
            nh[i as usize] = k;
        }
    }
    nh
}

impl<S: Scalar> DistanceTable<S> {
    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    pub fn dest_index(&self, dest: NodeId) -> Option<usize> {
        let pos = *self.dest_pos.get(dest as usize)?;
        (pos != u32::MAX).then_some(pos as usize)
    }

    /// Least cost from `node` to `dest`; infinite when unreachable.
    pub fn dist(&self, node: NodeId, dest: NodeId) -> S {
        match self.dest_index(dest) {
            Some(idx) => self.dist_by_index(idx, node),
            None => S::infinity(),
        }
    }

    pub fn dist_by_index(&self, dest_idx: usize, node: NodeId) -> S {
        self.dist[dest_idx]
            .get(node as usize)
            .copied()
            .unwrap_or_else(S::infinity)
    }

    /// Canonical shortest-path successor of `node` toward `dest`, or
    /// `NO_NODE` when the destination is unreachable.
    pub fn next_hop(&self, node: NodeId, dest: NodeId) -> NodeId {
        match self.dest_index(dest) {
            Some(idx) => self.next_hop_by_index(idx, node),
            None => NO_NODE,
        }
    }

    pub fn next_hop_by_index(&self, dest_idx: usize, node: NodeId) -> NodeId {
        self.next_hop[dest_idx]
            .get(node as usize)
            .copied()
            .unwrap_or(NO_NODE)
    }

    /// Canonical shortest path node sequence from `node` to the
    /// `dest_idx`-th destination, starting at `node`. Empty when
    /// unreachable. Walks are capped at the node count.
    pub fn canonical_chain(&self, dest_idx: usize, node: NodeId) -> Vec<NodeId> {
        let dest = self.destinations[dest_idx];
        let cap = self.next_hop[dest_idx].len() + 1;
        let mut chain = Vec::new();
        let mut cur = node;
        while chain.len() < cap {
            chain.push(cur);
            if cur == dest {
                return chain;
            }
            cur = self.next_hop_by_index(dest_idx, cur);
            if cur == NO_NODE {
                return Vec::new();
            }
        }
        Vec::new()
    }
}
