//! Intervention timing: end-of-spread detection, the intervention position
//! `τ = t_a / t_f`, and efficiency scores penalised by response cost
//! `log_a τ` and time sensitivity `log_b (1 − τ)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::Verdict;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Consecutive sub-threshold steps required to declare end of spread.
pub const DEFAULT_TF_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyParams<T> {
    pub eps1: T,
    pub eps2: T,
    pub a: T,
    pub b: T,
    pub coverage: T,
    pub tf_epsilon: T,
    pub tf_window: usize,
}

impl<T: Scalar> EfficiencyParams<T> {
    /// Builds parameters with `eps2 = 1 - eps1`.
    pub fn new(eps1: T, a: T, b: T) -> Result<Self> {
        let p = EfficiencyParams {
            eps1,
            eps2: T::one() - eps1,
            a,
            b,
            coverage: T::lit(0.95),
            tf_epsilon: T::lit(5e-4),
            tf_window: DEFAULT_TF_WINDOW,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        let open_unit = |x: T| x > zero && x < one;
        for (name, v) in [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("a", self.a),
            ("b", self.b),
        ] {
            if !open_unit(v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if (self.eps1 + self.eps2 - one).abs() > T::lit(1e-6) {
            return Err(Error::InvalidConfig(format!(
                "eps1 + eps2 must equal 1, got {} + {}",
                self.eps1, self.eps2
            )));
        }
        if !open_unit(self.coverage) && self.coverage != one {
            return Err(Error::InvalidConfig(format!(
                "coverage threshold must lie in (0, 1], got {}",
                self.coverage
            )));
        }
        if !(self.tf_epsilon > zero) || self.tf_window == 0 {
            return Err(Error::InvalidConfig(
                "end-of-spread threshold and window must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Shared denominator `log_a τ + log_b (1 − τ)`.
    pub fn denominator(&self, tau: T) -> Result<T> {
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(tau.ln() / self.a.ln() + (T::one() - tau).ln() / self.b.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport<T> {
    pub tau: T,
    pub verdict: Verdict,
    pub numerator_fraction: T,
    pub denominator: T,
    pub score: T,
}

/// Smallest `t` such that the last `window` first differences ending at
/// `t` are all below `eps` in magnitude.
pub fn detect_tf<T: Scalar>(series: &[T], eps: T, window: usize) -> Result<Option<usize>> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be positive".into()));
    }
    if series.len() < window + 1 {
        return Err(Error::InvalidInput(format!(
            "series of length {} shorter than window + 1 = {}",
            series.len(),
            window + 1
        )));
    }
    let mut run = 0;
    for t in 1..series.len() {
        if (series[t] - series[t - 1]).abs() < eps {
            run += 1;
            if run >= window {
                return Ok(Some(t));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

/// `τ = t_a / t_f`.
pub fn intervention_position<T: Scalar>(t_a: usize, t_f: usize) -> Result<T> {
    if t_f == 0 {
        return Err(Error::InvalidInput("t_f must be positive".into()));
    }
    if t_a > t_f {
        return Err(Error::InvalidInput(format!(
            "t_a = {t_a} exceeds t_f = {t_f}"
        )));
    }
    Ok(T::from_count(t_a) / T::from_count(t_f))
}

/// Efficiency of a true-verdict announcement:
/// `ε₁ (T₀ − T_t) / T₀ / (log_a τ + log_b (1 − τ))`.
pub fn score_true<T: Scalar>(
    tau: T,
    t0: T,
    tt: T,
    p: &EfficiencyParams<T>,
) -> Result<EfficiencyReport<T>> {
    if !(t0 > T::zero()) {
        return Err(Error::Domain(format!("T0 must be positive, got {t0}")));
    }
    if !(tt >= T::zero() && tt <= t0) {
        return Err(Error::Domain(format!("Tt = {tt} outside [0, T0 = {t0}]")));
    }
    let denominator = p.denominator(tau)?;
    let numerator_fraction = (t0 - tt) / t0;
    Ok(EfficiencyReport {
        tau,
        verdict: Verdict::True,
        numerator_fraction,
        denominator,
        score: p.eps1 * numerator_fraction / denominator,
    })
}

/// Efficiency of a false-verdict announcement:
/// `ε₂ (I₀ − I_f) / I₀ / (log_a τ + log_b (1 − τ))`.
pub fn score_false<T: Scalar>(
    tau: T,
    i0: T,
    i_f: T,
    p: &EfficiencyParams<T>,
) -> Result<EfficiencyReport<T>> {
    if !(i0 > T::zero() && i0 <= T::one()) {
        return Err(Error::Domain(format!("I0 must lie in (0, 1], got {i0}")));
    }
    if !(i_f >= T::zero()) || i_f > i0 {
        return Err(Error::Domain(format!("If = {i_f} outside [0, I0 = {i0}]")));
    }
    let denominator = p.denominator(tau)?;
    let numerator_fraction = (i0 - i_f) / i0;
    Ok(EfficiencyReport {
        tau,
        verdict: Verdict::False,
        numerator_fraction,
        denominator,
        score: p.eps2 * numerator_fraction / denominator,
    })
}

/// Report with a zero score, used when the announced run never reached
/// coverage and so saved no time.
pub fn zero_report<T: Scalar>(
    tau: T,
    verdict: Verdict,
    p: &EfficiencyParams<T>,
) -> Result<EfficiencyReport<T>> {
    Ok(EfficiencyReport {
        tau,
        verdict,
        numerator_fraction: T::zero(),
        denominator: p.denominator(tau)?,
        score: T::zero(),
    })
}
