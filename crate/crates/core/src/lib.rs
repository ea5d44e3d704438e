//! Gate-count and fidelity scaling toolkit for QAOA on planar hardware.

pub mod circuit;
pub mod estimator;
pub mod fitlab;
pub mod graphs;
pub mod hardware;
pub mod rng;
pub mod router;

pub use circuit::{
    closed_form_counts, count_gates, synthesize_qaoa, Circuit, CircuitError, EdgeTag, Frame, Gate, GateCounts, QaoaAngles,
};
pub use estimator::{EmpiricalParams, Estimate, EstimateError, NoiseModel};
pub use fitlab::{FitError, FitResult};
pub use graphs::{gen_random_regular, parse_graph6, GraphError, IsingInstance, ProblemGraph};
pub use hardware::{build_lattice, grid_for, DistanceMatrix, HardwareError, HardwareGraph, LatticeKind};
pub use router::{optimize, verify_routed, Placement, RouteError, RoutedResult, RoutedStats, RoutingConfig};
