//! Experiment orchestration: configuration, paired replicate scenarios,
//! intervention-position sweeps, comparison against external progress
//! series, and CSV/JSON persistence.

mod compare;
mod export;
mod scenario;

pub use compare::{compare_series, CompareOptions, Comparison};
pub use export::{
    export_curve, export_result, format_sig, read_curve_csv, read_external_csv, read_trace_csv,
    trace_rows, write_comparison_csv, write_density_csv, write_trace_csv, ExportFormat,
    ScenarioSummary, TraceRow, SIGNIFICANT_DIGITS,
};
pub use scenario::{
    average_replicates, run_scenario, run_scenario_on, sweep_tau, sweep_tau_on, MeanTrace,
    ReplicateOutcome, ScenarioResult, SweepPoint,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{RateParams, RunConfig, Verdict};
use crate::efficiency::EfficiencyParams;
use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::scalar::Scalar;

/// Announcement mode of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    True,
    False,
    Free,
}

impl BetaMode {
    pub fn verdict(self) -> Option<Verdict> {
        match self {
            BetaMode::True => Some(Verdict::True),
            BetaMode::False => Some(Verdict::False),
            BetaMode::Free => None,
        }
    }
}

impl std::str::FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Ok(BetaMode::True),
            "false" => Ok(BetaMode::False),
            "free" | "none" => Ok(BetaMode::Free),
            other => Err(Error::InvalidConfig(format!(
                "beta must be one of true, false, free; got {other:?}"
            ))),
        }
    }
}

/// Everything needed to reproduce a scenario. A [`ScenarioResult`] is a
/// pure function of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub graph: GraphSpec,
    pub i0: f64,
    pub rate: RateParams<T>,
    pub beta: BetaMode,
    pub tau: Option<T>,
    pub replicates: usize,
    pub seed: u64,
    pub max_steps: usize,
    pub eff: EfficiencyParams<T>,
}

pub mod defaults {
    pub const N: usize = 2000;
    pub const AVG_DEGREE: f64 = 5.0;
    pub const I0: f64 = 0.005;
    pub const LAMBDA1: f64 = 0.3875;
    pub const LAMBDA2: f64 = 0.1194;
    pub const EPS1: f64 = 0.812;
    pub const EPS2: f64 = 0.188;
    pub const A: f64 = 0.2121;
    pub const B: f64 = 0.3089;
    pub const COVERAGE: f64 = 0.95;
    pub const TF_EPSILON: f64 = 5e-4;
    pub const TF_WINDOW: usize = crate::efficiency::DEFAULT_TF_WINDOW;
    pub const WS_P: f64 = 0.1;
    pub const REPLICATES: usize = 50;
    pub const SEED: u64 = 20_240_501;
    pub const MAX_STEPS: usize = 20_000;
}

impl<T: Scalar> SimConfig<T> {
    /// Free-spread configuration with the default parameter set
    /// (N = 2000, ⟨k⟩ = 5, i₀ = 0.005, λ₁ = 0.3875, λ₂ = 0.1194,
    /// ε₁ = 0.812, a = 0.2121, b = 0.3089).
    pub fn standard() -> Self {
        use defaults::*;
        SimConfig {
            graph: GraphSpec::ba(N, AVG_DEGREE, SEED),
            i0: I0,
            rate: RateParams {
                lambda1: T::lit(LAMBDA1),
                lambda2: T::lit(LAMBDA2),
            },
            beta: BetaMode::Free,
            tau: None,
            replicates: REPLICATES,
            seed: SEED,
            max_steps: MAX_STEPS,
            eff: EfficiencyParams {
                eps1: T::lit(EPS1),
                eps2: T::one() - T::lit(EPS1),
                a: T::lit(A),
                b: T::lit(B),
                coverage: T::lit(COVERAGE),
                tf_epsilon: T::lit(TF_EPSILON),
                tf_window: TF_WINDOW,
            },
        }
    }

    pub fn with_beta(mut self, beta: BetaMode, tau: Option<T>) -> Self {
        self.beta = beta;
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.rate.validate()?;
        self.eff.validate()?;
        if !(self.i0 > 0.0 && self.i0 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "i0 must lie in (0, 1), got {}",
                self.i0
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        match (self.beta, self.tau) {
            (BetaMode::Free, _) => {}
            (_, None) => {
                return Err(Error::InvalidConfig(
                    "tau is required when beta is true or false".into(),
                ))
            }
            (_, Some(tau)) => check_tau(tau)?,
        }
        Ok(())
    }

    /// Run parameters for replicate `k`, whose RNG stream is seeded with `seed + k`.
    pub fn run_config(&self, replicate: usize, verdict: Option<Verdict>) -> RunConfig<T> {
        RunConfig {
            i0: self.i0,
            rate: self.rate,
            verdict,
            max_steps: self.max_steps,
            tf_epsilon: self.eff.tf_epsilon,
            tf_window: self.eff.tf_window,
            seed: self.seed.wrapping_add(replicate as u64),
        }
    }
}

pub(crate) fn check_tau<T: Scalar>(tau: T) -> Result<()> {
    if tau > T::zero() && tau < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "tau must lie in (0, 1), got {tau}"
        )))
    }
}

/// Announcement step `round(τ · t_f)` for a baseline end-of-spread step.
pub fn announcement_step<T: Scalar>(tau: T, baseline_tf: usize) -> usize {
    (tau * T::from_count(baseline_tf))
        .round()
        .to_usize()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_is_valid_and_complete() {
        let c = SimConfig::<f64>::standard();
        c.validate().unwrap();
        assert_eq!(c.graph.n, 2000);
        assert_eq!(c.graph.target_avg_degree, 5.0);
        assert_eq!(c.i0, 0.005);
        assert_eq!(c.rate.lambda1, 0.3875);
        assert_eq!(c.rate.lambda2, 0.1194);
        assert!((c.eff.eps2 - 0.188).abs() < 1e-12);
        assert_eq!((c.eff.a, c.eff.b), (0.2121, 0.3089));
    }

    #[test]
    fn tau_rules() {
        let c = SimConfig::<f64>::standard();
        assert!(c
            .clone()
            .with_beta(BetaMode::False, None)
            .validate()
            .is_err());
        assert!(c
            .clone()
            .with_beta(BetaMode::True, Some(1.5))
            .validate()
            .is_err());
        assert!(c
            .clone()
            .with_beta(BetaMode::True, Some(0.0))
            .validate()
            .is_err());
        assert!(c
            .clone()
            .with_beta(BetaMode::True, Some(0.2))
            .validate()
            .is_ok());
        assert!(c.with_beta(BetaMode::Free, None).validate().is_ok());
    }

    #[test]
    fn replicate_seeds_are_offset() {
        let c = SimConfig::<f64>::standard();
        assert_eq!(c.run_config(3, None).seed, c.seed + 3);
        assert_eq!(announcement_step(0.15, 1000), 150);
        assert_eq!(announcement_step(0.2, 117), 23);
    }

    #[test]
    fn beta_parsing() {
        assert_eq!("TRUE".parse::<BetaMode>().unwrap(), BetaMode::True);
        assert_eq!("free".parse::<BetaMode>().unwrap(), BetaMode::Free);
        assert!("maybe".parse::<BetaMode>().is_err());
    }
}
