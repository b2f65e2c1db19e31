//! Numerical toolkit for the heat equation with dynamic boundary conditions:
//! discrete domains, the coupled bulk-surface generator, time stepping and its
//! exact discrete adjoint, Carleman weights and boundary null controls.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleman;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod rng;

pub use carleman::{
    carleman_lhs, carleman_report, carleman_rhs, carleman_sweep, eval_weights, s_min, CarlemanReport, CarlemanWeights,
    LogSum, LogValue, SweepReport, SweepSettings, WeightValues,
};
pub use control::{
    apply_gramian, cost_ratio_study, observability_constant, solve_hum, weighted_norm, CostReport, CostSettings,
    GramianOp, HumProblem, HumResult, ObservabilityReport, PowerSettings, WeightedKind,
};
pub use dynamics::{
    regularity_ratios, solve_adjoint, solve_forward, ControlSeries, RegularityReport, Scheme, SourceSeries, Stepper,
    TimeGrid, Trajectory,
};
pub use error::{Error, Result};
pub use geometry::{build_eta, build_mesh, verify_eta, Arc, DomainSpec, Endpoints, EtaBump, EtaField, EtaReport, Mesh};
pub use linalg::CgSettings;
pub use operators::{assemble_operator, inner_l2, CoupledField, WentzellOperator};
pub use rng::SampleRng;
