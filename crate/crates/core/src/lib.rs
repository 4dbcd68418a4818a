//! Rail freight flow assignment under tree-shaped path constraints.
//!
//! Flows bound for the same destination merge at yards and continue on a
//! single route, so each destination's traffic forms a convergent
//! in-tree. The solver picks one "first front station" per (node,
//! destination) pair to minimize transport cost plus abandonment losses
//! under arc capacities, searching by simulated annealing with an exact
//! enumeration oracle for small instances.
//!
//! The core is generic over the float scalar; see the `*64` / `*32`
//! aliases below for the common instantiations.

pub mod cli;
pub mod dist;
pub mod energy;
pub mod extend;
pub mod flow;
pub mod io;
pub mod network;
pub mod oracle;
pub mod prune;
pub mod report;
pub mod sa;
pub mod scalar;

pub use dist::{all_pairs_shortest, DistanceTable};
pub use energy::{delta_energy, energy, EnergyBreakdown, Move, UpdatePlan};
pub use extend::{extend, read_abandonment, without_virtual, ExtendedNetwork};
pub use flow::{
    check_conservation, check_tree_shape, extract_paths, propagate, CycleError, FlowField,
    PathTrace, SuccessorAssignment,
};
pub use network::{
    build_network, problem_size, Arc, BuildError, Demand, DemandSet, Instance, Network, Node,
    NodeId, SizeReport, NO_NODE,
};
pub use oracle::{enumerate, OracleError, OracleResult};
pub use prune::{build_candidates, detour_ratio, CandidateTable, Pruning};
pub use sa::{anneal, anneal_restarts, initial_solution, neighbor, SaOutcome, SaParams, SaTrace};
pub use scalar::Scalar;

/// `f64` instantiations, the default precision.
pub type Network64 = Network<f64>;
pub type Demand64 = Demand<f64>;
pub type Instance64 = Instance<f64>;
pub type ExtendedNetwork64 = ExtendedNetwork<f64>;
pub type DistanceTable64 = DistanceTable<f64>;
pub type CandidateTable64 = CandidateTable<f64>;
pub type FlowField64 = FlowField<f64>;
pub type EnergyBreakdown64 = EnergyBreakdown<f64>;
pub type SaParams64 = SaParams<f64>;

/// `f32` instantiations.
pub type Network32 = Network<f32>;
pub type Demand32 = Demand<f32>;
pub type Instance32 = Instance<f32>;
pub type FlowField32 = FlowField<f32>;
