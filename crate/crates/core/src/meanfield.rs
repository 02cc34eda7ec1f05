//! Mean-field counterpart of the agent model: the logistic equation
//! `di/dt = A i (1 − i)`, its closed-form solution, and a fixed-step RK4
//! integrator used to cross-check it.

use crate::dynamics::{RateParams, SpreadState};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldParams<T> {
    pub i0: T,
    /// Effective rate `A`, the mean unclamped node rate over Known nodes.
    pub effective_rate: T,
}

impl<T: Scalar> MeanFieldParams<T> {
    pub fn new(i0: T, effective_rate: T) -> Result<Self> {
        if !(i0 > T::zero() && i0 < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "i0 must lie in (0, 1), got {i0}"
            )));
        }
        if !effective_rate.is_finite() {
            return Err(Error::InvalidConfig("effective rate must be finite".into()));
        }
        Ok(MeanFieldParams { i0, effective_rate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint<T> {
    pub t: T,
    pub s: T,
    pub i: T,
}

impl<T: Scalar> DensityPoint<T> {
    fn at(t: T, i: T) -> Self {
        DensityPoint {
            t,
            s: T::one() - i,
            i,
        }
    }
}

/// Mean over Known nodes of the unclamped node rate, with `⟨c⟩` taken from
/// the current phase.
pub fn effective_rate<T: Scalar>(
    state: &SpreadState<T>,
    g: &NetworkGraph,
    params: &RateParams<T>,
) -> Result<T> {
    let c_mean = state.neutral_confidence()?;
    let known = state.known_nodes();
    if known.is_empty() {
        return Err(Error::InternalState(
            "effective rate undefined with no Known nodes".into(),
        ));
    }
    let total = known.iter().fold(T::zero(), |acc, &u| {
        acc + state.raw_rate(u, g, c_mean, params)
    });
    Ok(total / T::from_count(known.len()))
}

/// `i(t) = i₀ e^{At} / (1 − i₀ + i₀ e^{At})`.
///
/// Evaluated in a form that cannot overflow: for `At > 0` the expression is
/// rewritten with `e^{−At}`, which saturates to `i = 1` instead of `inf/inf`.
pub fn closed_form_density<T: Scalar>(t: T, p: &MeanFieldParams<T>) -> Result<DensityPoint<T>> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    let x = p.effective_rate * t;
    let one = T::one();
    let i0 = p.i0;
    let i = if x <= T::zero() {
        let e = x.exp();
        i0 * e / (one - i0 + i0 * e)
    } else {
        let e = (-x).exp();
        i0 / ((one - i0) * e + i0)
    };
    Ok(DensityPoint::at(t, i))
}

/// Classical fourth-order Runge–Kutta on `di/dt = A i (1 − i)` with fixed
/// step `dt`. Emits `i(0)` plus one point per step; the last step is
/// shortened to land on `t_max` exactly.
pub fn integrate_logistic<T: Scalar>(
    p: &MeanFieldParams<T>,
    t_max: T,
    dt: T,
) -> Result<Vec<DensityPoint<T>>> {
    if !(dt > T::zero()) || !(t_max >= dt) {
        return Err(Error::InvalidInput(format!(
            "need dt > 0 and t_max >= dt, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let a = p.effective_rate;
    let f = |i: T| a * i * (T::one() - i);
    let two = T::lit(2.0);
    let six = T::lit(6.0);

    let steps = (t_max / dt).ceil().to_usize().unwrap_or(usize::MAX);
    let mut out = Vec::with_capacity(steps + 1);
    let mut i = p.i0;
    out.push(DensityPoint::at(T::zero(), i));
    for n in 0..steps {
        let t0 = T::from_count(n) * dt;
        let t1 = (T::from_count(n + 1) * dt).min(t_max);
        let h = t1 - t0;
        if h <= T::zero() {
            break;
        }
        let k1 = f(i);
        let k2 = f(i + h / two * k1);
        let k3 = f(i + h / two * k2);
        let k4 = f(i + h * k3);
        i = i + h / six * (k1 + two * k2 + two * k3 + k4);
        out.push(DensityPoint::at(t1, i));
    }
    Ok(out)
}

/// Closed-form curve for a two-phase run: rate `before` up to `t_a`, then the
/// solution restarted from `(t_a, i(t_a))` with rate `after`.
pub fn piecewise_density<T: Scalar>(
    t: T,
    i0: T,
    before: T,
    after: T,
    t_a: T,
) -> Result<DensityPoint<T>> {
    let first = MeanFieldParams::new(i0, before)?;
    if t <= t_a {
        return closed_form_density(t, &first);
    }
    let at_switch = closed_form_density(t_a, &first)?.i;
    if at_switch >= T::one() {
        return Ok(DensityPoint::at(t, T::one()));
    }
    let second = MeanFieldParams::new(at_switch, after)?;
    let p = closed_form_density(t - t_a, &second)?;
    Ok(DensityPoint::at(t, p.i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Verdict;
    use crate::graph::NodeId;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        let p = MeanFieldParams::new(0.005, 0.1).unwrap();
        assert_eq!(closed_form_density(0.0, &p).unwrap().i, 0.005);
        // 0.005 e^5 / (0.995 + 0.005 e^5)
        let e5 = 5f64.exp();
        let expect = 0.005 * e5 / (0.995 + 0.005 * e5);
        let got = closed_form_density(50.0, &p).unwrap();
        assert!((got.i - expect).abs() < 1e-14);
        assert!((got.i - 0.4272).abs() < 1e-4);
        assert_eq!(got.s + got.i, 1.0);

        let flat = MeanFieldParams::new(0.3, 0.0).unwrap();
        for t in [0.0, 1.0, 1e6] {
            assert_eq!(closed_form_density(t, &flat).unwrap().i, 0.3);
        }
        assert!(closed_form_density(-1.0, &p).is_err());
    }

    #[test]
    fn closed_form_saturates() {
        let p = MeanFieldParams::new(0.005, 5.0).unwrap();
        assert_eq!(closed_form_density(1e6, &p).unwrap().i, 1.0);
        let p = MeanFieldParams::new(0.5, -5.0).unwrap();
        assert_eq!(closed_form_density(1e6, &p).unwrap().i, 0.0);
    }

    #[test]
    fn rk4_zero_rate_is_constant() {
        let p = MeanFieldParams::new(0.2, 0.0).unwrap();
        let pts = integrate_logistic(&p, 10.0, 0.5).unwrap();
        assert_eq!(pts.len(), 21);
        assert!(pts.iter().all(|q| q.i == 0.2));
    }

    #[test]
    fn rk4_matches_closed_form() {
        let p = MeanFieldParams::<f64>::new(0.005, 0.1).unwrap();
        let pts = integrate_logistic(&p, 50.0, 0.01).unwrap();
        let last = pts.last().unwrap();
        assert!((last.t - 50.0).abs() < 1e-9);
        let exact = closed_form_density(last.t, &p).unwrap().i;
        assert!((last.i - exact).abs() < 1e-8);
        let worst = pts
            .iter()
            .map(|q| (q.i - closed_form_density(q.t, &p).unwrap().i).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6);
        assert!(pts.windows(2).all(|w| w[1].i > w[0].i));
    }

    #[test]
    fn rk4_rejects_bad_grid() {
        let p = MeanFieldParams::new(0.1, 0.1).unwrap();
        assert!(integrate_logistic(&p, 1.0, 0.0).is_err());
        assert!(integrate_logistic(&p, 0.1, 1.0).is_err());
    }

    #[test]
    fn effective_rate_cases() {
        let g = NetworkGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let p = RateParams::new(0.3875, 0.1194).unwrap();
        let s = SpreadState::<f64>::from_known(&g, &[(0, 0.7, 0.0), (1, 0.9, 0.0)]).unwrap();
        assert!(effective_rate(&s, &g, &p).unwrap().abs() < 1e-15);

        let confirmed = SpreadState::from_known(&g, &[(0, 0.5, 0.0), (3, 0.5, 0.0)])
            .unwrap()
            .into_confirmed(Verdict::True);
        assert_eq!(effective_rate(&confirmed, &g, &p).unwrap(), 0.0);

        let empty = SpreadState::<f64>::from_known(&g, &[]).unwrap();
        assert!(effective_rate(&empty, &g, &p).is_err());
    }

    #[test]
    fn effective_rate_matches_brute_force() {
        let g = crate::graph::GraphSpec::ba(300, 5.0, 9).generate().unwrap();
        let p = RateParams::new(0.3875, 0.1194).unwrap();
        let known: Vec<(NodeId, f64, f64)> = (0..40)
            .map(|u| {
                (
                    u * 7,
                    ((u * 37) % 100) as f64 / 100.0,
                    ((u % 11) as f64 - 5.0) / 10.0,
                )
            })
            .collect();
        let s = SpreadState::from_known(&g, &known).unwrap();

        // Oracle: straight summation from the raw node list and degree sequence.
        let degrees: Vec<f64> = (0..300).map(|u| g.neighbors(u).len() as f64).collect();
        let kavg = degrees.iter().sum::<f64>() / 300.0;
        let kmax = degrees.iter().cloned().fold(0.0, f64::max);
        let cbar = known.iter().map(|k| k.1).sum::<f64>() / known.len() as f64;
        let oracle = known
            .iter()
            .map(|&(u, c, r)| {
                0.3875 * (c - cbar) + 0.1194 * r * (degrees[u as usize] - kavg) / kmax
            })
            .sum::<f64>()
            / known.len() as f64;
        let got = effective_rate(&s, &g, &p).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn piecewise_restarts_at_switch() {
        let before = closed_form_density(10.0, &MeanFieldParams::new(0.01, 0.2).unwrap())
            .unwrap()
            .i;
        let at = piecewise_density(10.0, 0.01, 0.2, -0.5, 10.0).unwrap().i;
        assert_eq!(at, before);
        let later = piecewise_density(20.0, 0.01, 0.2, -0.5, 10.0).unwrap().i;
        assert!(later < before);
    }

    proptest! {
        #[test]
        fn closed_form_solves_logistic(i0 in 0.001f64..0.5, a in -0.5f64..0.5, t in 0.5f64..40.0) {
            let p = MeanFieldParams::new(i0, a).unwrap();
            let h = 1e-4;
            let i = closed_form_density(t, &p).unwrap().i;
            prop_assume!(i > 1e-6 && i < 1.0 - 1e-6);
            let up = closed_form_density(t + h, &p).unwrap().i;
            let dn = closed_form_density(t - h, &p).unwrap().i;
            let fd = (up - dn) / (2.0 * h);
            let rhs = a * i * (1.0 - i);
            prop_assert!((fd - rhs).abs() <= 1e-6 * rhs.abs().max(1e-6), "fd {} rhs {}", fd, rhs);
        }

        #[test]
        fn closed_form_monotone(i0 in 0.001f64..0.999, a in 0.01f64..1.0, t in 0.0f64..20.0) {
            let up = MeanFieldParams::new(i0, a).unwrap();
            let dn = MeanFieldParams::new(i0, -a).unwrap();
            let p0 = closed_form_density(t, &up).unwrap();
            prop_assert!(closed_form_density(t + 0.5, &up).unwrap().i > p0.i);
            prop_assert!(closed_form_density(t + 0.5, &dn).unwrap().i < closed_form_density(t, &dn).unwrap().i);
            prop_assert!((p0.s + p0.i - 1.0).abs() <= 1e-12);
        }
    }
}
