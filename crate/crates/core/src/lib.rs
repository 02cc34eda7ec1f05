//! Two-stage information spreading on synthetic social networks.
//!
//! Information spreads SI-style from a handful of seeds. At an intervention
//! step an announcement reveals whether the message is true or false,
//! corrects every informed node's confidence and credibility, and thereby
//! accelerates or suppresses the rest of the spread.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`, which the harness and CLI use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod efficiency;
pub mod error;
pub mod graph;
pub mod harness;
pub mod meanfield;
pub mod scalar;

pub use dynamics::{
    init_population, run, spread_rate, NodeAttrs, NodeState, Phase, RateParams, RunConfig,
    Simulation, SpreadState, SpreadTrace, Verdict,
};
pub use efficiency::{
    detect_tf, intervention_position, score_false, score_true, EfficiencyParams, EfficiencyReport,
};
pub use error::{Error, Result};
pub use graph::{
    degree_stats, generate_ba, generate_ws, DegreeStats, GraphKind, GraphSpec, NetworkGraph, NodeId,
};
pub use harness::{
    average_replicates, compare_series, run_scenario, sweep_tau, BetaMode, MeanTrace,
    ScenarioResult, SimConfig, SweepPoint,
};
pub use meanfield::{
    closed_form_density, effective_rate, integrate_logistic, DensityPoint, MeanFieldParams,
};
pub use scalar::Scalar;

pub type SpreadState64 = SpreadState<f64>;
pub type SpreadTrace64 = SpreadTrace<f64>;
pub type RateParams64 = RateParams<f64>;
pub type RunConfig64 = RunConfig<f64>;
pub type EfficiencyParams64 = EfficiencyParams<f64>;
pub type EfficiencyReport64 = EfficiencyReport<f64>;
pub type MeanFieldParams64 = MeanFieldParams<f64>;
pub type DensityPoint64 = DensityPoint<f64>;

pub type SpreadState32 = SpreadState<f32>;
pub type SpreadTrace32 = SpreadTrace<f32>;
pub type RateParams32 = RateParams<f32>;

pub type SimConfig64 = SimConfig<f64>;
pub type ScenarioResult64 = ScenarioResult<f64>;
pub type MeanTrace64 = MeanTrace<f64>;
pub type SweepPoint64 = SweepPoint<f64>;
