//! Stochastic subgradient and proximal subgradient methods for nonsmooth
//! nonconvex objectives, plus the machinery to test them empirically:
//! Clarke subdifferential hulls with min-norm stationarity measures,
//! subgradient-flow integration with chain-rule and descent-identity
//! verifiers, interpolated-path consistency checks, and a seeded,
//! byte-reproducible experiment harness.

pub mod composite;
pub mod constraint;
pub mod error;
pub mod flow;
pub mod function;
pub mod geometry;
pub mod harness;
pub mod noise;
pub mod numdiff;
pub mod path;
pub mod point;
pub mod rng;
pub mod schedule;
pub mod solver;
pub mod testbed;

pub use composite::CompositeProblem;
pub use constraint::{prox_step, ConstraintKind, ConstraintSet, Regularizer};
pub use error::{Error, Result};
pub use flow::{
    check_chain_rule, check_descent_identity, integrate_composite_flow, integrate_flow,
    ChainRuleReport, DescentReport, FlowOptions, FlowStatus, Trajectory,
};
pub use function::{PiecewiseLipschitzFunction, StochasticOracle};
pub use geometry::{dist_to_hull, min_norm_point, Hull, MinNormResult};
pub use harness::{
    calibrate, run_campaign, tail_statistics, Campaign, CampaignReport, CheckKind, TailStats,
    Thresholds, Verdict, VerdictStatus,
};
pub use noise::NoiseModel;
pub use path::{
    functional_approximation_gap, interpolate, shift, GapReport, InterpolatedPath, ShiftGap,
    ShiftedPath,
};
pub use point::Point;
pub use schedule::{ScheduleValidity, StepSchedule};
pub use solver::{run_generic, run_prox_sgm, run_sgm, RunConfig, RunLog, RunRecord, RunStatus};
pub use testbed::{catalog, TestProblem};
