use super::MeanTrace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Divide each series by its final density before comparing.
    pub normalize: bool,
    /// Number of points on the shared progress grid.
    pub grid_points: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            normalize: false,
            grid_points: 101,
        }
    }
}

/// Simulated and external series on a shared progress grid `R ∈ [0, 100]`.
///
/// Growth rates are first differences per unit of `R`; entry `k` covers
/// the interval `[r[k], r[k + 1]]`, so they are one shorter than `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<T> {
    pub r_percent: Vec<T>,
    pub sim: Vec<T>,
    pub external: Vec<T>,
    pub sim_growth: Vec<T>,
    pub external_growth: Vec<T>,
    /// `max_k |sim[k] − external[k]|`.
    pub sup_deviation: T,
}

fn interpolate<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    let hi = xs.partition_point(|&v| v < x);
    if hi == 0 {
        return ys[0];
    }
    if hi == xs.len() {
        return ys[ys.len() - 1];
    }
    let lo = hi - 1;
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + w * (ys[hi] - ys[lo])
}

fn growth<T: Scalar>(r: &[T], y: &[T]) -> Vec<T> {
    r.windows(2)
        .zip(y.windows(2))
        .map(|(r, y)| (y[1] - y[0]) / (r[1] - r[0]))
        .collect()
}

fn check_external<T: Scalar>(external: &[(T, T)]) -> Result<()> {
    if external.len() < 2 {
        return Err(Error::InvalidInput(
            "external series needs at least two points".into(),
        ));
    }
    let hundred = T::lit(100.0);
    for (k, &(r, d)) in external.iter().enumerate() {
        if !(r >= T::zero() && r <= hundred) {
            return Err(Error::InvalidInput(format!(
                "external point {k}: progress {r} outside [0, 100]"
            )));
        }
        if !d.is_finite() {
            return Err(Error::InvalidInput(format!(
                "external point {k}: density is not finite"
            )));
        }
    }
    for (k, w) in external.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidInput(format!(
                "external progress must be strictly increasing (point {})",
                k + 1
            )));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidInput(format!(
                "external density decreases at point {} ({} -> {})",
                k + 1,
                w[0].1,
                w[1].1
            )));
        }
    }
    Ok(())
}

/// Aligns a simulated mean trace with an external `(R, density)` series.
///
/// The trace is mapped onto `R = 100 t / t_f`, with `t_f` its end of spread
/// (or last step if unset) and later steps dropped. Both series are
/// linearly resampled over their common progress range.
pub fn compare_series<T: Scalar>(
    sim: &MeanTrace<T>,
    external: &[(T, T)],
    opts: &CompareOptions,
) -> Result<Comparison<T>> {
    check_external(external)?;
    if sim.is_empty() {
        return Err(Error::InvalidInput("simulated trace is empty".into()));
    }
    if opts.grid_points < 2 {
        return Err(Error::InvalidInput(
            "comparison grid needs at least two points".into(),
        ));
    }
    let tf = sim.t_f.unwrap_or(sim.len() - 1).min(sim.len() - 1);
    if tf == 0 {
        return Err(Error::InvalidInput(
            "simulated trace has no progress to map".into(),
        ));
    }
    let hundred = T::lit(100.0);
    let tf_s = T::from_count(tf);
    let sim_r: Vec<T> = (0..=tf)
        .map(|t| hundred * T::from_count(t) / tf_s)
        .collect();
    let mut sim_i: Vec<T> = sim.i[..=tf].to_vec();
    let ext_r: Vec<T> = external.iter().map(|p| p.0).collect();
    let mut ext_i: Vec<T> = external.iter().map(|p| p.1).collect();

    if opts.normalize {
        for series in [&mut sim_i, &mut ext_i] {
            let last = series[series.len() - 1];
            if !(last > T::zero()) {
                return Err(Error::InvalidInput(
                    "cannot normalise a series ending at zero".into(),
                ));
            }
            series.iter_mut().for_each(|x| *x = *x / last);
        }
    }

    let lo = ext_r[0].max(T::zero());
    let hi = ext_r[ext_r.len() - 1].min(hundred);
    if !(hi > lo) {
        return Err(Error::InvalidInput("series share no progress range".into()));
    }
    let steps = T::from_count(opts.grid_points - 1);
    let r_percent: Vec<T> = (0..opts.grid_points)
        .map(|k| {
            if k + 1 == opts.grid_points {
                hi
            } else {
                lo + (hi - lo) * T::from_count(k) / steps
            }
        })
        .collect();
    let sim_on: Vec<T> = r_percent
        .iter()
        .map(|&r| interpolate(&sim_r, &sim_i, r))
        .collect();
    let ext_on: Vec<T> = r_percent
        .iter()
        .map(|&r| interpolate(&ext_r, &ext_i, r))
        .collect();
    let sup_deviation = sim_on
        .iter()
        .zip(&ext_on)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    Ok(Comparison {
        sim_growth: growth(&r_percent, &sim_on),
        external_growth: growth(&r_percent, &ext_on),
        r_percent,
        sim: sim_on,
        external: ext_on,
        sup_deviation,
    })
}
