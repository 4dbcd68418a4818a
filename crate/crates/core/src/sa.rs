//! Simulated annealing over successor assignments: random initialization,
//! single-pair neighbor moves, Metropolis acceptance, flexible chain
//! lengths, and statistical-then-geometric cooling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::energy::{commit, delta_energy_with, energy, DeltaScratch, EnergyBreakdown, Move};
use crate::extend::ExtendedNetwork;
use crate::flow::{propagate_into, FlowField, PropagateScratch, SuccessorAssignment};
use crate::network::{DemandSet, NO_NODE};
use crate::prune::CandidateTable;
use crate::scalar::Scalar;

/// Annealing parameters. Chain budgets scale with the neighborhood size:
/// a chain ends after `2K * omega` generated or `K * omega` accepted
/// moves, which reduces to the 6x / 3x proportions at K = 3.
#[derive(Debug, Clone, PartialEq)]
pub struct SaParams<S> {
    /// Penalty weight on capacity overloads.
    pub lambda: S,
    /// Detour threshold the candidate table was built with (recorded in
    /// traces and reports; pruning happens upstream).
    pub epsilon: S,
    /// Chain multiplier K, between 3 and 6.
    pub chain_multiplier: u32,
    /// Cooling decrement parameter (the statistical rule's delta).
    pub cooling_delta: f64,
    /// Geometric cooling factor, in (0, 1).
    pub alpha: f64,
    /// Chains cooled by the statistical rule before switching to the
    /// geometric rule.
    pub switch_after: u32,
    /// Target acceptance ratio the initial temperature is calibrated to.
    pub initial_acceptance: f64,
    /// Stop temperature; defaults to 1e-4 of the calibrated initial
    /// temperature when unset.
    pub t_min: Option<f64>,
    /// Stop after this many consecutive chains without an acceptance.
    pub stall_chains: u32,
    pub seed: u64,
    /// Evaluate moves by full re-propagation instead of the incremental
    /// path (for equivalence checks; the decisions must not change).
    pub full_eval: bool,
    /// Record the per-move acceptance sequence in the trace.
    pub record_decisions: bool,
}

impl<S: Scalar> Default for SaParams<S> {
    fn default() -> Self {
        SaParams {
            lambda: S::from_f64_lossy(600.0),
            epsilon: S::from_f64_lossy(1.4),
            chain_multiplier: 4,
            cooling_delta: 0.1,
            alpha: 0.95,
            switch_after: 30,
            initial_acceptance: 0.9,
            t_min: None,
            stall_chains: 3,
            seed: 0,
            full_eval: false,
            record_decisions: false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("chain multiplier K must be in [3, 6]")]
    ChainMultiplier,
    #[error("alpha must lie strictly inside (0, 1)")]
    Alpha,
    #[error("lambda must be positive")]
    Lambda,
    #[error("epsilon must be at least 1")]
    Epsilon,
    #[error("initial acceptance target must lie strictly inside (0, 1)")]
    InitialAcceptance,
    #[error("cooling delta must be positive")]
    CoolingDelta,
}

impl<S: Scalar> SaParams<S> {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(3..=6).contains(&self.chain_multiplier) {
            return Err(ParamError::ChainMultiplier);
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(ParamError::Alpha);
        }
        if self.lambda.is_nan() || self.lambda <= S::zero() {
            return Err(ParamError::Lambda);
        }
        if self.epsilon < S::one() {
            return Err(ParamError::Epsilon);
        }
        if self.initial_acceptance.is_nan()
            || self.initial_acceptance <= 0.0
            || self.initial_acceptance >= 1.0
        {
            return Err(ParamError::InitialAcceptance);
        }
        if self.cooling_delta.is_nan() || self.cooling_delta <= 0.0 {
            return Err(ParamError::CoolingDelta);
        }
        Ok(())
    }
}

/// Per-chain trace record.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub chain: u32,
    pub temperature: f64,
    pub generated: u64,
    pub accepted: u64,
    pub current_energy: f64,
    pub best_energy: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SaTrace {
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub initial_energy: f64,
    pub chains: Vec<ChainRecord>,
    pub total_generated: u64,
    pub total_accepted: u64,
    pub rejected_cycles: u64,
    /// Acceptance decision per generated move, when recording is on.
    pub decisions: Option<Vec<bool>>,
}

/// The solver's result: best assignment found, its re-propagated flows
/// and freshly evaluated energy, and the annealing trace.
#[derive(Debug, Clone)]
pub struct SaOutcome<S> {
    pub assignment: SuccessorAssignment,
    pub flow: FlowField<S>,
    pub energy: EnergyBreakdown<S>,
    pub trace: SaTrace,
}

const CYCLE_REDRAW_LIMIT: u32 = 8;
const CALIBRATION_CAP: u64 = 1000;

/// Draws one successor uniformly per pair, then repairs flow-bearing
/// cycles by re-drawing along each detected cycle; after bounded retries
/// a destination falls back to shortest-path successors, which are
/// acyclic.
pub fn initial_solution<S: Scalar, R: Rng>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    dist: &DistanceTable<S>,
    rng: &mut R,
) -> (SuccessorAssignment, FlowField<S>) {
    let node_count = ext.net().node_count();
    let mut assignment = SuccessorAssignment::from_fn(table, node_count, |pair| {
        rng.gen_range(0..pair.successors.len())
    });
    let mut flow = FlowField::zeroed(
        table.destinations().len(),
        node_count,
        ext.net().arc_count(),
    );
    let mut scratch = PropagateScratch::default();
    let mut attempts = vec![0u32; table.destinations().len()];
    loop {
        match propagate_into(ext, table, &assignment, demands, &mut flow, &mut scratch) {
            Ok(()) => return (assignment, flow),
            Err(cycle) => {
                let dest_idx = table
                    .destinations()
                    .binary_search(&cycle.destination)
                    .expect("cycle destination in table");
                attempts[dest_idx] += 1;
                if attempts[dest_idx] > CYCLE_REDRAW_LIMIT {
                    apply_shortest_fallback(table, dist, dest_idx, &mut assignment);
                } else {
                    for &node in &cycle.nodes {
                        let cands = table.candidates(dest_idx, node);
                        let idx = rng.gen_range(0..cands.len());
                        assignment.set(dest_idx, node, cands[idx]);
                    }
                }
            }
        }
    }
}

/// Forces one destination onto canonical shortest-path successors
/// (virtual successors where unreachable). These chains strictly lower
/// the remaining distance, so they cannot cycle.
fn apply_shortest_fallback<S: Scalar>(
    table: &CandidateTable<S>,
    dist: &DistanceTable<S>,
    dest_idx: usize,
    assignment: &mut SuccessorAssignment,
) {
    for pair in table.pairs_for(dest_idx) {
        let nh = dist.next_hop_by_index(dest_idx, pair.node);
        let succ = if nh != NO_NODE && pair.successors.contains(&nh) {
            nh
        } else {
            *pair.successors.last().unwrap()
        };
        assignment.set(dest_idx, pair.node, succ);
    }
}

/// Uniformly picks a movable pair, then a successor different from the
/// current one. Never proposes a no-op.
pub fn neighbor<S: Scalar, R: Rng>(
    table: &CandidateTable<S>,
    assignment: &SuccessorAssignment,
    rng: &mut R,
) -> Move {
    let movable = table.movable();
    debug_assert!(!movable.is_empty());
    let pair = table.pair(movable[rng.gen_range(0..movable.len())]);
    let current = assignment.get(pair.dest_idx as usize, pair.node);
    let pos = pair
        .successors
        .iter()
        .position(|&k| k == current)
        .expect("current successor must be a candidate");
    let draw = rng.gen_range(0..pair.successors.len() - 1);
    let new_successor = pair.successors[if draw >= pos { draw + 1 } else { draw }];
    Move {
        node: pair.node,
        dest: pair.dest,
        dest_idx: pair.dest_idx,
        new_successor,
    }
}

struct EvalState<S> {
    flow: FlowField<S>,
    breakdown: EnergyBreakdown<S>,
    trial_flow: FlowField<S>,
    delta_scratch: DeltaScratch,
    prop_scratch: PropagateScratch,
}

enum MoveOutcome<S> {
    Cycle,
    Evaluated { delta: S },
}

impl<S: Scalar> EvalState<S> {
    /// Evaluates a proposed move, leaving the current state untouched.
    /// For the full-evaluation mode the trial flow buffer holds the
    /// propagated result until `apply` adopts or discards it.
    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &mut self,
        ext: &ExtendedNetwork<S>,
        table: &CandidateTable<S>,
        demands: &DemandSet<S>,
        assignment: &mut SuccessorAssignment,
        mv: Move,
        lambda: S,
        full_eval: bool,
    ) -> (MoveOutcome<S>, Option<crate::energy::UpdatePlan<S>>) {
        if full_eval {
            let dest_idx = mv.dest_idx as usize;
            let old = assignment.get(dest_idx, mv.node);
            assignment.set(dest_idx, mv.node, mv.new_successor);
            let result = propagate_into(
                ext,
                table,
                assignment,
                demands,
                &mut self.trial_flow,
                &mut self.prop_scratch,
            );
            assignment.set(dest_idx, mv.node, old);
            match result {
                Err(_) => (MoveOutcome::Cycle, None),
                Ok(()) => {
                    let fresh = energy(ext, &self.trial_flow, lambda);
                    let delta = fresh.total() - self.breakdown.total();
                    (MoveOutcome::Evaluated { delta }, None)
                }
            }
        } else {
            match delta_energy_with(
                &mut self.delta_scratch,
                ext,
                &self.flow,
                assignment,
                mv,
                lambda,
            ) {
                Err(_) => (MoveOutcome::Cycle, None),
                Ok((delta, plan)) => (MoveOutcome::Evaluated { delta }, Some(plan)),
            }
        }
    }

    fn apply(
        &mut self,
        ext: &ExtendedNetwork<S>,
        assignment: &mut SuccessorAssignment,
        mv: Move,
        plan: Option<crate::energy::UpdatePlan<S>>,
        lambda: S,
        full_eval: bool,
    ) {
        if full_eval {
            assignment.set(mv.dest_idx as usize, mv.node, mv.new_successor);
            std::mem::swap(&mut self.flow, &mut self.trial_flow);
            self.breakdown = energy(ext, &self.flow, lambda);
        } else {
            let plan = plan.expect("incremental move without plan");
            commit(&plan, assignment, &mut self.flow, &mut self.breakdown);
        }
    }
}

fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();
    (sigma > 0.0).then_some(sigma)
}

/// Runs the annealing search and returns the best solution found, fully
/// re-propagated and freshly evaluated.
pub fn anneal<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    dist: &DistanceTable<S>,
    params: &SaParams<S>,
) -> SaOutcome<S> {
    anneal_stream(ext, table, demands, dist, params, 0)
}

/// `anneal` on a dedicated RNG stream (used for independent restarts).
pub fn anneal_stream<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    dist: &DistanceTable<S>,
    params: &SaParams<S>,
    stream: u64,
) -> SaOutcome<S> {
    params.validate().expect("invalid annealing parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    let lambda = params.lambda;

    let (mut assignment, flow) = initial_solution(ext, table, demands, dist, &mut rng);
    let breakdown = energy(ext, &flow, lambda);
    let node_count = ext.net().node_count();
    let arc_count = ext.net().arc_count();
    let dest_count = table.destinations().len();
    let mut state = EvalState {
        flow,
        breakdown,
        trial_flow: FlowField::zeroed(dest_count, node_count, arc_count),
        delta_scratch: DeltaScratch::default(),
        prop_scratch: PropagateScratch::default(),
    };

    let mut trace = SaTrace {
        initial_energy: state.breakdown.total().as_f64(),
        ..SaTrace::default()
    };
    if params.record_decisions {
        trace.decisions = Some(Vec::new());
    }
    let mut best_assignment = assignment.clone();
    let mut best_total = state.breakdown.total();

    let omega = table.omega();
    if table.movable().is_empty() || omega == 0 {
        // Nothing to search: the unique assignment is the solution.
        return finish(ext, table, demands, params, best_assignment, trace);
    }

    // Initial temperature: random walk accepting every legal move, sized
    // to the mean uphill step and the target acceptance ratio.
    let t0 = {
        let mut walk_assignment = assignment.clone();
        let mut walk_state = EvalState {
            flow: state.flow.clone(),
            breakdown: state.breakdown,
            trial_flow: FlowField::zeroed(dest_count, node_count, arc_count),
            delta_scratch: DeltaScratch::default(),
            prop_scratch: PropagateScratch::default(),
        };
        let steps = (2 * omega).clamp(16, CALIBRATION_CAP);
        let mut uphill_sum = 0.0;
        let mut uphill_count = 0u64;
        for _ in 0..steps {
            let mv = neighbor(table, &walk_assignment, &mut rng);
            let (outcome, plan) = walk_state.evaluate(
                ext,
                table,
                demands,
                &mut walk_assignment,
                mv,
                lambda,
                params.full_eval,
            );
            if let MoveOutcome::Evaluated { delta } = outcome {
                walk_state.apply(
                    ext,
                    &mut walk_assignment,
                    mv,
                    plan,
                    lambda,
                    params.full_eval,
                );
                let d = delta.as_f64();
                if d > 0.0 {
                    uphill_sum += d;
                    uphill_count += 1;
                }
            }
        }
        if uphill_count > 0 {
            (uphill_sum / uphill_count as f64) / (1.0 / params.initial_acceptance).ln()
        } else {
            1.0
        }
    };
    trace.initial_temperature = t0;
    let t_min = params.t_min.unwrap_or(t0 * 1e-4);

    let gen_cap = 2 * params.chain_multiplier as u64 * omega;
    let acc_cap = params.chain_multiplier as u64 * omega;
    let mut temperature = t0;
    let mut chain_idx = 0u32;
    let mut stall = 0u32;
    let mut accepted_energies: Vec<f64> = Vec::new();

    loop {
        chain_idx += 1;
        accepted_energies.clear();
        let mut generated = 0u64;
        let mut accepted = 0u64;
        while generated < gen_cap && accepted < acc_cap {
            let mv = neighbor(table, &assignment, &mut rng);
            generated += 1;
            let (outcome, plan) = state.evaluate(
                ext,
                table,
                demands,
                &mut assignment,
                mv,
                lambda,
                params.full_eval,
            );
            match outcome {
                MoveOutcome::Cycle => {
                    trace.rejected_cycles += 1;
                    if let Some(decisions) = trace.decisions.as_mut() {
                        decisions.push(false);
                    }
                }
                MoveOutcome::Evaluated { delta } => {
                    let u: f64 = rng.gen();
                    let d = delta.as_f64();
                    let accept = d <= 0.0 || u < (-d / temperature).exp();
                    if let Some(decisions) = trace.decisions.as_mut() {
                        decisions.push(accept);
                    }
                    if accept {
                        state.apply(ext, &mut assignment, mv, plan, lambda, params.full_eval);
                        accepted += 1;
                        let current = state.breakdown.total();
                        accepted_energies.push(current.as_f64());
                        if current < best_total {
                            best_total = current;
                            best_assignment = assignment.clone();
                        }
                    }
                }
            }
        }
        trace.total_generated += generated;
        trace.total_accepted += accepted;
        let sigma = sample_std(&accepted_energies);
        trace.chains.push(ChainRecord {
            chain: chain_idx,
            temperature,
            generated,
            accepted,
            current_energy: state.breakdown.total().as_f64(),
            best_energy: best_total.as_f64(),
            sigma,
        });

        stall = if accepted == 0 { stall + 1 } else { 0 };

        temperature = match sigma {
            Some(sigma) if chain_idx <= params.switch_after => {
                temperature
                    / (1.0 + temperature * (1.0 + params.cooling_delta).ln() / (3.0 * sigma))
            }
            _ => params.alpha * temperature,
        };

        if temperature <= t_min || stall >= params.stall_chains {
            break;
        }
    }
    trace.final_temperature = temperature;
    finish(ext, table, demands, params, best_assignment, trace)
}

/// Re-propagates the best assignment and evaluates it from scratch.
fn finish<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    params: &SaParams<S>,
    assignment: SuccessorAssignment,
    trace: SaTrace,
) -> SaOutcome<S> {
    let flow = crate::flow::propagate(ext, table, &assignment, demands)
        .expect("best assignment must re-propagate");
    let breakdown = energy(ext, &flow, params.lambda);
    SaOutcome {
        assignment,
        flow,
        energy: breakdown,
        trace,
    }
}

/// Best of `restarts` independent annealing runs on derived RNG streams.
/// Ties keep the earliest restart.
pub fn anneal_restarts<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    dist: &DistanceTable<S>,
    params: &SaParams<S>,
    restarts: u32,
) -> (SaOutcome<S>, Vec<f64>) {
    let restarts = restarts.max(1);
    let mut best: Option<SaOutcome<S>> = None;
    let mut energies = Vec::with_capacity(restarts as usize);
    for stream in 0..restarts {
        let outcome = anneal_stream(ext, table, demands, dist, params, stream as u64);
        let total = outcome.energy.total();
        energies.push(total.as_f64());
        let better = match &best {
            None => true,
            Some(b) => total < b.energy.total(),
        };
        if better {
            best = Some(outcome);
        }
    }
    (best.unwrap(), energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::all_pairs_shortest;
    use crate::extend::{extend, without_virtual};
    use crate::network::{build_network, Arc, Demand, Node};
    use crate::prune::{build_candidates, Pruning};

    fn nodes(n: u32) -> Vec<Node> {
        (0..n).map(Node::unnamed).collect()
    }

    fn diamond() -> (
        ExtendedNetwork<f64>,
        CandidateTable<f64>,
        DemandSet<f64>,
        DistanceTable<f64>,
    ) {
        let inst = build_network(
            nodes(4),
            vec![
                Arc::new(0, 1, 2.0, 100.0),
                Arc::new(1, 3, 2.0, 100.0),
                Arc::new(0, 2, 3.0, 100.0),
                Arc::new(2, 3, 3.0, 100.0),
            ],
            vec![Demand::new(0, 3, 5.0)],
        )
        .unwrap();
        let ext = without_virtual(inst.net);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::Off);
        (ext, table, inst.demands, dist)
    }

    use crate::network::DemandSet;

    #[test]
    fn singleton_candidates_yield_unique_assignment() {
        let inst = build_network(
            nodes(3),
            vec![Arc::new(0, 1, 1.0, 10.0), Arc::new(1, 2, 1.0, 10.0)],
            vec![Demand::new(0, 2, 4.0)],
        )
        .unwrap();
        let ext = without_virtual(inst.net);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::DetourRatio(1.4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a1, _) = initial_solution(&ext, &table, &inst.demands, &dist, &mut rng);
        let mut rng2 = ChaCha8Rng::seed_from_u64(99);
        let (a2, _) = initial_solution(&ext, &table, &inst.demands, &dist, &mut rng2);
        assert_eq!(a1, a2);
        assert_eq!(a1.get(0, 0), 1);
        assert_eq!(a1.get(0, 1), 2);
    }

    #[test]
    fn fixed_seed_reproduces_assignment() {
        let (ext, table, demands, dist) = diamond();
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let (a1, _) = initial_solution(&ext, &table, &demands, &dist, &mut r1);
        let (a2, _) = initial_solution(&ext, &table, &demands, &dist, &mut r2);
        assert_eq!(a1, a2);
    }

    #[test]
    fn initial_draws_are_uniform() {
        // 1000 draws over a 3-candidate pair: each frequency within 3
        // sigma of 1/3.
        let inst = build_network(
            nodes(5),
            vec![
                Arc::new(0, 1, 2.0, 100.0),
                Arc::new(1, 4, 2.0, 100.0),
                Arc::new(0, 2, 2.0, 100.0),
                Arc::new(2, 4, 2.0, 100.0),
                Arc::new(0, 3, 2.0, 100.0),
                Arc::new(3, 4, 2.0, 100.0),
            ],
            vec![Demand::new(0, 4, 1.0)],
        )
        .unwrap();
        let ext = without_virtual(inst.net);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::Off);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0u32; 3];
        for _ in 0..1000 {
            let (a, _) = initial_solution(&ext, &table, &inst.demands, &dist, &mut rng);
            let succ = a.get(0, 0);
            counts[(succ - 1) as usize] += 1;
        }
        let sigma = (1000.0_f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - 1000.0 / 3.0).abs() <= 3.0 * sigma,
                "count {c} outside 3 sigma"
            );
        }
    }

    #[test]
    fn neighbor_on_two_candidates_always_flips() {
        let (ext, table, demands, dist) = diamond();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (assignment, _) = initial_solution(&ext, &table, &demands, &dist, &mut rng);
        let current = assignment.get(0, 0);
        for _ in 0..50 {
            let mv = neighbor(&table, &assignment, &mut rng);
            assert_ne!(
                mv.new_successor,
                assignment.get(mv.dest_idx as usize, mv.node)
            );
            if mv.node == 0 {
                assert_eq!(mv.new_successor, if current == 1 { 2 } else { 1 });
            }
        }
    }

    #[test]
    fn neighbor_distribution_is_uniform() {
        // All movable pairs have exactly two candidates, so (pair, k_new)
        // combinations are equiprobable.
        let inst = build_network(
            nodes(6),
            vec![
                Arc::new(0, 1, 2.0, 100.0),
                Arc::new(0, 2, 2.0, 100.0),
                Arc::new(1, 3, 2.0, 100.0),
                Arc::new(1, 4, 2.0, 100.0),
                Arc::new(2, 3, 2.0, 100.0),
                Arc::new(2, 4, 2.0, 100.0),
                Arc::new(3, 5, 2.0, 100.0),
                Arc::new(4, 5, 2.0, 100.0),
            ],
            vec![Demand::new(0, 5, 1.0)],
        )
        .unwrap();
        let ext = without_virtual(inst.net);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::Off);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (assignment, _) = initial_solution(&ext, &table, &inst.demands, &dist, &mut rng);
        let movable = table.movable().len();
        assert!(movable >= 3);
        let combos = movable; // one alternative per movable pair
        let draws = 100_000u32;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            let mv = neighbor(&table, &assignment, &mut rng);
            *counts.entry((mv.node, mv.new_successor)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), combos);
        let p = 1.0 / combos as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (&combo, &c) in &counts {
            assert!(
                (c as f64 - draws as f64 * p).abs() <= 4.0 * sigma,
                "combo {combo:?} count {c} outside 4 sigma"
            );
        }
    }

    #[test]
    fn pure_descent_never_worsens() {
        let (ext, table, demands, dist) = diamond();
        // Near-zero acceptance target pushes the calibrated temperature
        // toward the descent limit.
        let params = SaParams::<f64> {
            seed: 7,
            initial_acceptance: 1e-6,
            switch_after: 0,
            alpha: 0.05,
            ..SaParams::default()
        };
        let outcome = anneal(&ext, &table, &demands, &dist, &params);
        assert!(outcome.energy.total() <= outcome.trace.initial_energy + 1e-9);
        // The diamond's optimum routes everything over the cheap route.
        assert!((outcome.energy.total() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn best_energy_is_non_increasing() {
        let (ext, table, demands, dist) = diamond();
        let params = SaParams::<f64> {
            seed: 21,
            ..SaParams::default()
        };
        let outcome = anneal(&ext, &table, &demands, &dist, &params);
        let mut last = f64::INFINITY;
        for record in &outcome.trace.chains {
            assert!(record.best_energy <= last + 1e-12);
            last = record.best_energy;
        }
        assert!(outcome.trace.final_temperature > 0.0);
    }

    /// On a pure plateau every accepted energy is identical, the sigma
    /// estimate degenerates, and cooling falls back to the geometric rule.
    #[test]
    fn zero_sigma_falls_back_to_geometric_cooling() {
        // Two parallel routes of equal cost: every move has delta 0.
        let inst = build_network(
            nodes(4),
            vec![
                Arc::new(0, 1, 2.0, 100.0),
                Arc::new(1, 3, 2.0, 100.0),
                Arc::new(0, 2, 2.0, 100.0),
                Arc::new(2, 3, 2.0, 100.0),
            ],
            vec![Demand::new(0, 3, 5.0)],
        )
        .unwrap();
        let ext = without_virtual(inst.net);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::Off);
        let params = SaParams::<f64> {
            seed: 1,
            t_min: Some(0.25),
            ..SaParams::default()
        };
        let outcome = anneal(&ext, &table, &inst.demands, &dist, &params);
        assert!(outcome.trace.chains.len() >= 2);
        for record in &outcome.trace.chains {
            assert_eq!(record.sigma, None);
        }
        let temps: Vec<f64> = outcome.trace.chains.iter().map(|c| c.temperature).collect();
        for w in temps.windows(2) {
            assert_eq!(w[1], params.alpha * w[0]);
        }
    }

    #[test]
    fn temperatures_decrease_monotonically() {
        let (ext, table, demands, dist) = diamond();
        let params = SaParams::<f64> {
            seed: 2,
            ..SaParams::default()
        };
        let outcome = anneal(&ext, &table, &demands, &dist, &params);
        let temps: Vec<f64> = outcome.trace.chains.iter().map(|c| c.temperature).collect();
        for w in temps.windows(2) {
            assert!(w[1] <= w[0], "temperature increased: {w:?}");
            assert!(w[1] > 0.0);
        }
    }

    #[test]
    fn solver_revalidates_and_matches_fresh_evaluation() {
        let inst = build_network(
            nodes(5),
            vec![
                Arc::new(0, 1, 2.0, 6.0),
                Arc::new(1, 4, 2.0, 6.0),
                Arc::new(0, 2, 3.0, 100.0),
                Arc::new(2, 4, 3.0, 100.0),
                Arc::new(0, 3, 5.0, 100.0),
                Arc::new(3, 4, 5.0, 100.0),
                Arc::new(1, 2, 1.0, 100.0),
            ],
            vec![Demand::new(0, 4, 5.0), Demand::new(1, 4, 4.0)],
        )
        .unwrap();
        let ext = extend(inst.net, &inst.demands);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::DetourRatio(2.5));
        let params = SaParams::<f64> {
            seed: 33,
            ..SaParams::default()
        };
        let outcome = anneal(&ext, &table, &inst.demands, &dist, &params);
        let flow =
            crate::flow::propagate(&ext, &table, &outcome.assignment, &inst.demands).unwrap();
        assert!(crate::flow::check_conservation(
            &ext,
            &table,
            &outcome.assignment,
            &flow,
            &inst.demands
        )
        .is_empty());
        let tree_violations =
            crate::flow::check_tree_shape(&ext, &table, &outcome.assignment, &flow);
        assert!(tree_violations.is_empty(), "{tree_violations:?}");
        let fresh = energy(&ext, &flow, params.lambda).total();
        let best = outcome.trace.chains.last().unwrap().best_energy;
        assert!((fresh - best).abs() <= 1e-9 * fresh.abs().max(1.0));
    }

    #[test]
    fn matches_oracle_on_small_instance() {
        // Two demands compete for one cheap capacitated route; the oracle
        // certifies the optimum and the annealer must find it on nearly
        // every seed.
        let inst = build_network(
            nodes(5),
            vec![
                Arc::new(0, 1, 1.0, 8.0),
                Arc::new(1, 4, 1.0, 8.0),
                Arc::new(0, 2, 2.0, 100.0),
                Arc::new(2, 4, 2.0, 100.0),
                Arc::new(0, 3, 4.0, 100.0),
                Arc::new(3, 4, 4.0, 100.0),
                Arc::new(2, 1, 1.0, 100.0),
                Arc::new(3, 2, 1.0, 100.0),
            ],
            vec![
                Demand::new(0, 4, 6.0),
                Demand::new(2, 4, 3.0),
                Demand::new(1, 4, 2.0),
                Demand::new(3, 4, 1.0),
            ],
        )
        .unwrap();
        let ext = extend(inst.net, &inst.demands);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::DetourRatio(2.0));
        let oracle =
            crate::oracle::enumerate(&ext, &table, &inst.demands, 600.0, 10_000_000).unwrap();
        let mut hits = 0;
        for seed in 0..20u64 {
            let params = SaParams::<f64> {
                seed,
                ..SaParams::default()
            };
            let outcome = anneal(&ext, &table, &inst.demands, &dist, &params);
            let total = outcome.energy.total();
            assert!(total >= oracle.optimum - 1e-9, "below the oracle optimum");
            if (total - oracle.optimum).abs() <= 1e-9 * oracle.optimum.max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 19, "optimum found on only {hits}/20 seeds");
    }
}
