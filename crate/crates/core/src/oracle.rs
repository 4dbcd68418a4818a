//! Brute-force exact solver: evaluates every successor assignment in the
//! candidate table. Ground truth for the annealer on small instances.

use thiserror::Error;

use crate::energy::{energy, EnergyBreakdown};
use crate::extend::ExtendedNetwork;
use crate::flow::{propagate_into, FlowField, PropagateScratch, SuccessorAssignment};
use crate::network::DemandSet;
use crate::prune::CandidateTable;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<S> {
    pub optimum: S,
    pub optimum_breakdown: EnergyBreakdown<S>,
    /// Every assignment attaining the optimum (within 1e-9 relative).
    pub argmins: Vec<SuccessorAssignment>,
    pub enumerated: u64,
    pub infeasible: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("assignment space holds {space} assignments, above the cap {cap}")]
    CapExceeded { space: u128, cap: u64 },
    #[error("no feasible assignment exists")]
    NoFeasibleAssignment,
}

/// Evaluates the energy of every assignment in lexicographic candidate
/// order and returns the global minimum over the feasible (acyclic) ones.
pub fn enumerate<S: Scalar>(
    ext: &ExtendedNetwork<S>,
    table: &CandidateTable<S>,
    demands: &DemandSet<S>,
    lambda: S,
    cap: u64,
) -> Result<OracleResult<S>, OracleError> {
    let space = table.assignment_count();
    if space > cap as u128 {
        return Err(OracleError::CapExceeded { space, cap });
    }

    let node_count = ext.net().node_count();
    let mut flow = FlowField::zeroed(
        table.destinations().len(),
        node_count,
        ext.net().arc_count(),
    );
    let mut scratch = PropagateScratch::default();

    // Pass 1: optimum and counts.
    let mut best: Option<(S, EnergyBreakdown<S>)> = None;
    let mut enumerated = 0u64;
    let mut infeasible = 0u64;
    for_each_assignment(table, node_count, |assignment| {
        enumerated += 1;
        match propagate_into(ext, table, assignment, demands, &mut flow, &mut scratch) {
            Err(_) => infeasible += 1,
            Ok(()) => {
                let breakdown = energy(ext, &flow, lambda);
                let total = breakdown.total();
                if best.is_none_or(|(b, _)| total < b) {
                    best = Some((total, breakdown));
                }
            }
        }
    });
    let (optimum, optimum_breakdown) = best.ok_or(OracleError::NoFeasibleAssignment)?;

    // Pass 2: collect the argmins.
    let tolerance = S::from_f64_lossy(1e-9) * optimum.abs().max(S::one());
    let mut argmins = Vec::new();
    for_each_assignment(table, node_count, |assignment| {
        if propagate_into(ext, table, assignment, demands, &mut flow, &mut scratch).is_ok() {
            let total = energy(ext, &flow, lambda).total();
            if (total - optimum).abs() <= tolerance {
                argmins.push(assignment.clone());
            }
        }
    });

    Ok(OracleResult {
        optimum,
        optimum_breakdown,
        argmins,
        enumerated,
        infeasible,
    })
}

/// Odometer over the candidate table, in lexicographic order with the
/// first pair most significant.
fn for_each_assignment<S: Scalar>(
    table: &CandidateTable<S>,
    node_count: usize,
    mut visit: impl FnMut(&SuccessorAssignment),
) {
    let pairs = table.pairs();
    let mut indices = vec![0usize; pairs.len()];
    let mut assignment = SuccessorAssignment::from_fn(table, node_count, |_| 0);
    loop {
        visit(&assignment);
        // Advance the last digit, carrying leftward.
        let mut pos = pairs.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            let pair = &pairs[pos];
            if indices[pos] + 1 < pair.successors.len() {
                indices[pos] += 1;
                assignment.set(
                    pair.dest_idx as usize,
                    pair.node,
                    pair.successors[indices[pos]],
                );
                break;
            }
            indices[pos] = 0;
            assignment.set(pair.dest_idx as usize, pair.node, pair.successors[0]);
        }
    }
}
