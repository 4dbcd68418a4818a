//! Solve report: objective decomposition, per-demand paths, arc loads,
//! per-destination trees, abandonment accounting, and the SA summary —
//! all recomputable from the instance and the stored assignment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::energy::energy;
use crate::extend::{read_abandonment, ExtendedNetwork};
use crate::flow::{extract_paths, propagate, SuccessorAssignment};
use crate::network::{DemandSet, SizeReport};
use crate::prune::CandidateTable;
use crate::sa::{SaParams, SaTrace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub nodes: usize,
    pub arcs: usize,
    pub demands: usize,
    pub destinations: usize,
    pub total_volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub epsilon: Option<f64>,
    pub lambda: f64,
    pub chain_multiplier: u32,
    pub cooling_delta: f64,
    pub alpha: f64,
    pub switch_after: u32,
    pub initial_acceptance: f64,
    pub t_min: Option<f64>,
    pub stall_chains: u32,
    pub seed: u64,
    pub restarts: u32,
    pub virtual_arcs: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveReport {
    pub transport_cost: f64,
    pub abandonment_cost: f64,
    pub penalty: f64,
    pub lambda: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TotalsReport {
    pub total_transport_cost: f64,
    pub routed_volume: f64,
    pub abandoned_volume: f64,
    pub mean_shipment_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub origin: String,
    pub destination: String,
    pub volume: f64,
    pub nodes: Vec<String>,
    pub length: f64,
    pub abandoned: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcReport {
    pub from: String,
    pub to: String,
    pub cost: f64,
    pub capacity: Option<f64>,
    pub load: f64,
    pub utilization: Option<f64>,
    pub overload: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeEdgeReport {
    pub from: String,
    pub to: String,
    pub flow: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbandonmentEntry {
    pub origin: String,
    pub destination: String,
    pub quantity: f64,
    pub demand_volume: f64,
    pub exceeds_demand: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbandonmentAttribution {
    pub origin: String,
    pub destination: String,
    pub volume: f64,
    /// Node whose virtual element drained this shipment.
    pub via: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbandonmentReport {
    pub entries: Vec<AbandonmentEntry>,
    pub attribution: Vec<AbandonmentAttribution>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentRow {
    pub node: String,
    pub destination: String,
    pub successor: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaSummary {
    pub chains: usize,
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub initial_energy: f64,
    pub best_energy: f64,
    pub generated_moves: u64,
    pub accepted_moves: u64,
    pub rejected_cycles: u64,
    pub seed: u64,
    pub restarts: u32,
    pub restart_energies: Vec<f64>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub optimum: f64,
    pub solver_total: f64,
    pub gap: f64,
    pub enumerated: u64,
    pub infeasible: u64,
    pub argmin_count: usize,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub instance: InstanceSummary,
    pub params: ParamsReport,
    pub problem_size: SizeReport,
    pub objective: ObjectiveReport,
    pub totals: TotalsReport,
    pub paths: Vec<PathReport>,
    pub arcs: Vec<ArcReport>,
    pub trees: BTreeMap<String, Vec<TreeEdgeReport>>,
    pub abandonment: AbandonmentReport,
    pub assignment: Vec<AssignmentRow>,
    pub sa: SaSummary,
    pub oracle: Option<OracleSummary>,
}

/// Everything the report needs besides the instance and assignment.
pub struct ReportContext<'a, S> {
    pub params: &'a SaParams<S>,
    pub restarts: u32,
    pub restart_energies: Vec<f64>,
    pub trace: &'a SaTrace,
    pub wall_time_ms: u64,
    pub virtual_arcs: bool,
    pub oracle: Option<OracleSummary>,
}

/// Builds the report by freshly re-propagating the assignment, so every
/// number is a pure function of (instance, assignment).
pub fn build_report<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    size: &SizeReport,
    assignment: &SuccessorAssignment,
    ctx: &ReportContext<'_, S>,
) -> SolveReport {
    let net = ext.net();
    let flow = propagate(ext, table, assignment, demands).expect("reported assignment propagates");
    let breakdown = energy(ext, &flow, ctx.params.lambda);
    let traces = extract_paths(ext, table, assignment, demands);

    let label = |id: u32| net.label(id).to_string();

    let mut routed_volume = 0.0;
    let mut abandoned_volume = 0.0;
    let mut weighted_distance = 0.0;
    let mut paths = Vec::with_capacity(traces.len());
    let mut attribution = Vec::new();
    for (trace, demand) in traces.iter().zip(demands.all()) {
        let volume = demand.volume.as_f64();
        if trace.abandoned {
            abandoned_volume += volume;
            attribution.push(AbandonmentAttribution {
                origin: label(trace.origin),
                destination: label(trace.destination),
                volume,
                via: label(*trace.nodes.last().unwrap()),
            });
        } else {
            routed_volume += volume;
            weighted_distance += volume * trace.length.as_f64();
        }
        paths.push(PathReport {
            origin: label(trace.origin),
            destination: label(trace.destination),
            volume,
            nodes: trace.nodes.iter().map(|&v| label(v)).collect(),
            length: trace.length.as_f64(),
            abandoned: trace.abandoned,
        });
    }

    let mut arcs = Vec::new();
    for (idx, arc) in net.arcs().iter().enumerate() {
        if arc.is_virtual {
            continue;
        }
        let load = flow.arc_load(idx as u32).as_f64();
        let capacity = arc.capacity.is_finite().then(|| arc.capacity.as_f64());
        let utilization = match capacity {
            Some(cap) if cap > 0.0 => Some(load / cap),
            _ => None,
        };
        let overload = capacity.map_or(0.0, |cap| (load - cap).max(0.0));
        arcs.push(ArcReport {
            from: label(arc.from),
            to: label(arc.to),
            cost: arc.cost.as_f64(),
            capacity,
            load,
            utilization,
            overload,
        });
    }

    let mut trees = BTreeMap::new();
    for (dest_idx, &dest) in table.destinations().iter().enumerate() {
        let mut edges = Vec::new();
        for pair in table.pairs_for(dest_idx) {
            let q = flow.node_flow(dest_idx, pair.node);
            if q > S::zero() {
                let succ = assignment.get(dest_idx, pair.node);
                edges.push(TreeEdgeReport {
                    from: label(pair.node),
                    to: label(succ),
                    flow: q.as_f64(),
                });
            }
        }
        edges.sort_by(|a, b| {
            (a.from.as_str(), a.to.as_str()).cmp(&(b.from.as_str(), b.to.as_str()))
        });
        trees.insert(label(dest), edges);
    }

    let abandonments = read_abandonment(ext, &flow, demands);
    let entries: Vec<AbandonmentEntry> = abandonments
        .iter()
        .map(|a| AbandonmentEntry {
            origin: label(a.origin),
            destination: label(a.destination),
            quantity: a.quantity.as_f64(),
            demand_volume: a.demand_volume.as_f64(),
            exceeds_demand: a.exceeds_demand,
        })
        .collect();

    let mut assignment_rows = Vec::new();
    for pair in table.pairs() {
        assignment_rows.push(AssignmentRow {
            node: label(pair.node),
            destination: label(pair.dest),
            successor: label(assignment.get(pair.dest_idx as usize, pair.node)),
        });
    }

    let best_energy = breakdown.total().as_f64();
    SolveReport {
        instance: InstanceSummary {
            nodes: ext.base_node_count(),
            arcs: ext.base_arc_count(),
            demands: demands.len(),
            destinations: demands.destinations().len(),
            total_volume: demands.total_volume().as_f64(),
        },
        params: ParamsReport {
            epsilon: table.epsilon().map(|e| e.as_f64()),
            lambda: ctx.params.lambda.as_f64(),
            chain_multiplier: ctx.params.chain_multiplier,
            cooling_delta: ctx.params.cooling_delta,
            alpha: ctx.params.alpha,
            switch_after: ctx.params.switch_after,
            initial_acceptance: ctx.params.initial_acceptance,
            t_min: ctx.params.t_min,
            stall_chains: ctx.params.stall_chains,
            seed: ctx.params.seed,
            restarts: ctx.restarts,
            virtual_arcs: ctx.virtual_arcs,
        },
        problem_size: size.clone(),
        objective: ObjectiveReport {
            transport_cost: breakdown.transport_cost.as_f64(),
            abandonment_cost: breakdown.abandonment_cost.as_f64(),
            penalty: breakdown.penalty.as_f64(),
            lambda: breakdown.lambda.as_f64(),
            total: best_energy,
        },
        totals: TotalsReport {
            total_transport_cost: breakdown.transport_cost.as_f64(),
            routed_volume,
            abandoned_volume,
            mean_shipment_distance: if routed_volume > 0.0 {
                weighted_distance / routed_volume
            } else {
                0.0
            },
        },
        paths,
        arcs,
        trees,
        abandonment: AbandonmentReport {
            entries,
            attribution,
            total_cost: breakdown.abandonment_cost.as_f64(),
        },
        assignment: assignment_rows,
        sa: SaSummary {
            chains: ctx.trace.chains.len(),
            initial_temperature: ctx.trace.initial_temperature,
            final_temperature: ctx.trace.final_temperature,
            initial_energy: ctx.trace.initial_energy,
            best_energy,
            generated_moves: ctx.trace.total_generated,
            accepted_moves: ctx.trace.total_accepted,
            rejected_cycles: ctx.trace.rejected_cycles,
            seed: ctx.params.seed,
            restarts: ctx.restarts,
            restart_energies: ctx.restart_energies.clone(),
            wall_time_ms: ctx.wall_time_ms,
        },
        oracle: ctx.oracle.clone(),
    }
}

pub fn report_json(report: &SolveReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("unknown destination label {0:?}")]
    UnknownDestination(String),
}

/// DOT digraph of one destination's positive-flow arcs, root highlighted.
pub fn tree_dot(report: &SolveReport, destination: &str) -> Result<String, TreeError> {
    let edges = report
        .trees
        .get(destination)
        .ok_or_else(|| TreeError::UnknownDestination(destination.to_string()))?;
    let mut out = String::new();
    let _ = writeln!(out, "digraph tree {{");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  {:?} [shape=doublecircle];", destination);
    for edge in edges {
        let _ = writeln!(
            out,
            "  {:?} -> {:?} [label=\"{}\"];",
            edge.from, edge.to, edge.flow
        );
    }
    out.push_str("}\n");
    Ok(out)
}

/// CSV of (destination, from, to, flow) across the requested trees.
pub fn trees_csv<'a>(
    report: &SolveReport,
    destinations: impl Iterator<Item = &'a str>,
) -> Result<String, TreeError> {
    let mut out = String::from("destination,from,to,flow\n");
    for dest in destinations {
        let edges = report
            .trees
            .get(dest)
            .ok_or_else(|| TreeError::UnknownDestination(dest.to_string()))?;
        for edge in edges {
            let _ = writeln!(out, "{},{},{},{}", dest, edge.from, edge.to, edge.flow);
        }
    }
    Ok(out)
}

/// Line-oriented trace log, one line per chain.
pub fn trace_log(trace: &SaTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "t0={} t_final={} initial_energy={}",
        trace.initial_temperature, trace.final_temperature, trace.initial_energy
    );
    for c in &trace.chains {
        let _ = writeln!(
            out,
            "chain={} T={:.6} generated={} accepted={} current={:.6} best={:.6} sigma={}",
            c.chain,
            c.temperature,
            c.generated,
            c.accepted,
            c.current_energy,
            c.best_energy,
            c.sigma
                .map(|s| format!("{s:.6}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::all_pairs_shortest;
    use crate::extend::extend;
    use crate::network::{build_network, problem_size, Arc, Demand, Node};
    use crate::prune::{build_candidates, Pruning};

    fn sample_report() -> SolveReport {
        let inst = build_network(
            (0..3).map(Node::unnamed).collect(),
            vec![Arc::new(0, 1, 2.0, 10.0), Arc::new(1, 2, 3.0, 10.0)],
            vec![Demand::with_price(0, 2, 4.0, 50.0)],
        )
        .unwrap();
        let ext = extend(inst.net, &inst.demands);
        let dist = all_pairs_shortest(ext.net(), inst.demands.destinations());
        let table = build_candidates(&ext, &dist, Pruning::DetourRatio(1.4));
        let size = problem_size(ext.net(), &table);
        let params = SaParams::<f64>::default();
        let outcome = crate::sa::anneal(&ext, &table, &inst.demands, &dist, &params);
        let ctx = ReportContext {
            params: &params,
            restarts: 1,
            restart_energies: vec![outcome.energy.total()],
            trace: &outcome.trace,
            wall_time_ms: 0,
            virtual_arcs: true,
            oracle: None,
        };
        build_report(
            &ext,
            &table,
            &inst.demands,
            &size,
            &outcome.assignment,
            &ctx,
        )
    }

    #[test]
    fn report_is_reproducible() {
        let a = sample_report();
        let b = sample_report();
        assert_eq!(report_json(&a), report_json(&b));
    }

    #[test]
    fn mean_distance_weights_routed_volume() {
        let report = sample_report();
        assert!((report.totals.mean_shipment_distance - 5.0).abs() < 1e-9);
        assert_eq!(report.totals.routed_volume, 4.0);
        assert_eq!(report.totals.abandoned_volume, 0.0);
    }

    #[test]
    fn dot_tree_is_an_in_tree() {
        let report = sample_report();
        let dot = tree_dot(&report, "2").unwrap();
        assert!(dot.contains("doublecircle"));
        assert!(dot.contains("\"0\" -> \"1\""));
        let err = tree_dot(&report, "nope").unwrap_err();
        assert!(matches!(err, TreeError::UnknownDestination(_)));
    }

    #[test]
    fn csv_flows_match_arc_loads() {
        let report = sample_report();
        let csv = trees_csv(&report, ["2"].into_iter()).unwrap();
        let mut per_arc: std::collections::BTreeMap<(String, String), f64> =
            std::collections::BTreeMap::new();
        for line in csv.lines().skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            *per_arc
                .entry((parts[1].to_string(), parts[2].to_string()))
                .or_default() += parts[3].parse::<f64>().unwrap();
        }
        for arc in &report.arcs {
            if arc.load > 0.0 {
                let sum = per_arc
                    .get(&(arc.from.clone(), arc.to.clone()))
                    .copied()
                    .unwrap_or(0.0);
                assert!((sum - arc.load).abs() < 1e-9);
            }
        }
    }
}
