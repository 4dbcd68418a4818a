#![allow(dead_code)]

//! Shared instance generators for the integration suites.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use railflow::{build_network, Arc, Demand, Instance64, Node, NodeId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn nodes(n: u32) -> Vec<Node> {
    (0..n).map(Node::unnamed).collect()
}

/// Nine-station example network: entry "i", exit "j", interior
/// stations 2..=8. Fixture for the path-trace acceptance criterion.
pub fn example_network_instance(demands: Vec<Demand<f64>>) -> Instance64 {
    let labels = ["i", "2", "3", "4", "5", "6", "7", "8", "j"];
    let node_list: Vec<Node> = labels
        .iter()
        .enumerate()
        .map(|(id, l)| Node::new(id as NodeId, *l))
        .collect();
    let arc = |from: NodeId, to: NodeId, cost: f64| Arc::new(from, to, cost, 100.0);
    let arcs = vec![
        arc(0, 1, 3.0), // i->2
        arc(0, 2, 4.0), // i->3
        arc(0, 3, 3.0), // i->4
        arc(1, 2, 2.0), // 2->3
        arc(1, 7, 3.0), // 2->8
        arc(2, 7, 2.0), // 3->8
        arc(7, 5, 2.0), // 8->6
        arc(5, 3, 3.0), // 6->4
        arc(5, 6, 2.0), // 6->7
        arc(3, 4, 2.0), // 4->5
        arc(4, 5, 2.0), // 5->6
        arc(3, 6, 7.0), // 4->7
        arc(6, 8, 3.0), // 7->j
    ];
    build_network(node_list, arcs, demands).unwrap()
}

pub struct GeneratorConfig {
    pub min_nodes: u32,
    pub max_nodes: u32,
    /// Extra random arcs per node beyond the connecting cycle.
    pub extra_arc_factor: f64,
    pub min_demands: usize,
    pub max_demands: usize,
    /// Distinct destinations at most.
    pub max_destinations: usize,
    /// Probability an arc gets a finite capacity.
    pub finite_capacity_prob: f64,
    pub capacity_range: (u32, u32),
    pub cost_range: (u32, u32),
    pub volume_range: (u32, u32),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            min_nodes: 5,
            max_nodes: 8,
            extra_arc_factor: 1.2,
            min_demands: 3,
            max_demands: 10,
            max_destinations: 4,
            finite_capacity_prob: 0.5,
            capacity_range: (4, 30),
            cost_range: (1, 15),
            volume_range: (1, 8),
        }
    }
}

/// Strongly connected random instance: a directed cycle through all nodes
/// plus random chords. Integral costs, capacities and volumes.
pub fn random_instance(rng: &mut ChaCha8Rng, cfg: &GeneratorConfig) -> Instance64 {
    let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(rng);
    let mut arc_set = std::collections::BTreeSet::new();
    for w in 0..n as usize {
        let from = order[w];
        let to = order[(w + 1) % n as usize];
        arc_set.insert((from, to));
    }
    let extra = (cfg.extra_arc_factor * n as f64).round() as usize;
    for _ in 0..extra {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        if from != to {
            arc_set.insert((from, to));
        }
    }
    let arcs: Vec<Arc<f64>> = arc_set
        .into_iter()
        .map(|(from, to)| {
            let cost = rng.gen_range(cfg.cost_range.0..=cfg.cost_range.1) as f64;
            let capacity = if rng.gen_bool(cfg.finite_capacity_prob) {
                rng.gen_range(cfg.capacity_range.0..=cfg.capacity_range.1) as f64
            } else {
                f64::INFINITY
            };
            Arc::new(from, to, cost, capacity)
        })
        .collect();

    let dest_count = rng.gen_range(1..=cfg.max_destinations.min(n as usize - 1));
    let mut dests: Vec<u32> = (0..n).collect();
    dests.shuffle(rng);
    dests.truncate(dest_count);
    let target = rng.gen_range(cfg.min_demands..=cfg.max_demands);
    let mut demands: Vec<Demand<f64>> = Vec::new();
    let mut guard = 0;
    while demands.len() < target && guard < 400 {
        guard += 1;
        let origin = rng.gen_range(0..n);
        let dest = dests[rng.gen_range(0..dests.len())];
        if origin == dest
            || demands
                .iter()
                .any(|d| d.origin == origin && d.destination == dest)
        {
            continue;
        }
        demands.push(Demand::new(
            origin,
            dest,
            rng.gen_range(cfg.volume_range.0..=cfg.volume_range.1) as f64,
        ));
    }
    build_network(nodes(n), arcs, demands).unwrap()
}

/// Hub-and-spoke instance with one engineered zero-capacity bottleneck:
/// the first demand's only real route starts on a dead arc, so the
/// optimum must abandon it. Distinct costs keep the optimum unique.
pub fn bottleneck_instance(rng: &mut ChaCha8Rng) -> Instance64 {
    let leaves = rng.gen_range(3..=6u32);
    let n = leaves + 1; // node 0 is the hub
    let mut arcs = Vec::new();
    for leaf in 1..=leaves {
        let out_cost = 1.0 + leaf as f64 * 0.5 + rng.gen_range(0..4) as f64 * 0.25;
        let in_cost = 1.5 + leaf as f64 * 0.25 + rng.gen_range(0..4) as f64 * 0.25;
        // leaf -> hub; the first leaf's uplink is the dead bottleneck.
        let capacity = if leaf == 1 { 0.0 } else { 50.0 };
        arcs.push(Arc::new(leaf, 0, out_cost, capacity));
        arcs.push(Arc::new(0, leaf, in_cost, 50.0));
    }
    let mut demands = vec![Demand::with_price(
        1,
        2,
        rng.gen_range(2..=6) as f64,
        7.0 + rng.gen_range(0..8) as f64 * 0.5,
    )];
    // A few feasible demands among the other leaves.
    for _ in 0..rng.gen_range(1..=3) {
        let origin = rng.gen_range(2..=leaves);
        let dest = rng.gen_range(2..=leaves);
        if origin != dest
            && !demands
                .iter()
                .any(|d| d.origin == origin && d.destination == dest)
        {
            demands.push(Demand::with_price(
                origin,
                dest,
                rng.gen_range(1..=5) as f64,
                9.0 + rng.gen_range(0..8) as f64 * 0.5,
            ));
        }
    }
    build_network(nodes(n), arcs, demands).unwrap()
}

/// 300-node ring with random chords, 800 arcs, 2000 demands over a small
/// destination pool. Capacities are left infinite; the caller tightens
/// them around a reference load profile.
pub fn scale_instance(rng: &mut ChaCha8Rng) -> Instance64 {
    let n = 300u32;
    let mut arc_set = std::collections::BTreeSet::new();
    for v in 0..n {
        arc_set.insert((v, (v + 1) % n));
        arc_set.insert(((v + 1) % n, v));
    }
    while arc_set.len() < 800 {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        if from != to {
            arc_set.insert((from, to));
        }
    }
    let arcs: Vec<Arc<f64>> = arc_set
        .into_iter()
        .map(|(from, to)| {
            let ring = (from + 1) % n == to || (to + 1) % n == from;
            let cost = if ring {
                rng.gen_range(1..=10) as f64
            } else {
                rng.gen_range(5..=30) as f64
            };
            Arc::new(from, to, cost, f64::INFINITY)
        })
        .collect();

    let dest_pool: Vec<u32> = (0..n).step_by(10).collect(); // 30 hubs
    let mut demands: Vec<Demand<f64>> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while demands.len() < 2000 {
        let origin = rng.gen_range(0..n);
        let dest = dest_pool[rng.gen_range(0..dest_pool.len())];
        if origin == dest || !seen.insert((origin, dest)) {
            continue;
        }
        demands.push(Demand::new(origin, dest, rng.gen_range(1..=5) as f64));
    }
    build_network(nodes(n), arcs, demands).unwrap()
}
