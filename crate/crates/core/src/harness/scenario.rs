use rayon::prelude::*;

use super::{announcement_step, check_tau, BetaMode, SimConfig};
use crate::dynamics::{Simulation, SpreadTrace, Verdict};
use crate::efficiency::{score_false, score_true, zero_report, EfficiencyParams, EfficiencyReport};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::scalar::Scalar;

/// Pointwise mean of several traces after padding each with its final value.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrace<T> {
    pub i: Vec<T>,
    pub s: Vec<T>,
    /// Rounded mean of the replicates' announcement steps.
    pub t_a: Option<usize>,
    /// Rounded mean of the replicates' end-of-spread steps.
    pub t_f: Option<usize>,
    pub converged: bool,
    pub verdict: Option<Verdict>,
}

impl<T: Scalar> MeanTrace<T> {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn final_density(&self) -> T {
        self.i.last().copied().unwrap_or_else(T::zero)
    }

    pub fn phase_at(&self, t: usize) -> crate::dynamics::Phase {
        match self.t_a {
            Some(ta) if t >= ta => crate::dynamics::Phase::Confirmed,
            _ => crate::dynamics::Phase::Unconfirmed,
        }
    }
}

impl<T: Scalar> From<&SpreadTrace<T>> for MeanTrace<T> {
    fn from(t: &SpreadTrace<T>) -> Self {
        MeanTrace {
            i: t.i.clone(),
            s: t.s.clone(),
            t_a: t.t_a,
            t_f: t.t_f,
            converged: t.converged,
            verdict: t.verdict,
        }
    }
}

fn rounded_mean(values: impl Iterator<Item = usize>) -> Option<usize> {
    let (sum, count) = values.fold((0usize, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| ((sum as f64) / (count as f64)).round() as usize)
}

/// Pointwise mean over `traces`, each padded with its final density up to
/// the longest length. Deterministic in input order.
pub fn average_replicates<T: Scalar>(traces: &[SpreadTrace<T>]) -> Result<MeanTrace<T>> {
    if traces.is_empty() {
        return Err(Error::InvalidInput("cannot average zero traces".into()));
    }
    if traces.iter().any(|t| t.is_empty()) {
        return Err(Error::InvalidInput("cannot average an empty trace".into()));
    }
    let len = traces.iter().map(SpreadTrace::len).max().unwrap_or(0);
    let count = T::from_count(traces.len());
    let pad = |series: &[T], t: usize| series.get(t).copied().unwrap_or(series[series.len() - 1]);
    let mut i = Vec::with_capacity(len);
    let mut s = Vec::with_capacity(len);
    for t in 0..len {
        let (si, ss) = traces.iter().fold((T::zero(), T::zero()), |(a, b), tr| {
            (a + pad(&tr.i, t), b + pad(&tr.s, t))
        });
        i.push(si / count);
        s.push(ss / count);
    }
    let verdict = traces[0].verdict;
    Ok(MeanTrace {
        i,
        s,
        t_a: rounded_mean(traces.iter().filter_map(|t| t.t_a)),
        t_f: rounded_mean(traces.iter().filter_map(|t| t.t_f)),
        converged: traces.iter().all(|t| t.converged),
        verdict: traces
            .iter()
            .all(|t| t.verdict == verdict)
            .then_some(verdict)
            .flatten(),
    })
}

/// Summary of one paired replicate: the free-spread baseline and the run
/// announced at `round(τ · baseline t_f)` on the same RNG stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome<T> {
    pub index: usize,
    pub seed: u64,
    /// Baseline end of spread, or the last simulated step if it never settled.
    pub baseline_tf: usize,
    pub baseline_converged: bool,
    pub baseline_final: T,
    pub baseline_coverage_step: Option<usize>,
    pub t_a: Option<usize>,
    pub t_f: Option<usize>,
    pub converged: bool,
    pub final_density: T,
    pub coverage_step: Option<usize>,
}

impl<T: Scalar> ReplicateOutcome<T> {
    fn new(
        index: usize,
        seed: u64,
        baseline: &SpreadTrace<T>,
        run: &SpreadTrace<T>,
        coverage: T,
    ) -> Self {
        ReplicateOutcome {
            index,
            seed,
            baseline_tf: reference_tf(baseline),
            baseline_converged: baseline.converged,
            baseline_final: baseline.final_density(),
            baseline_coverage_step: baseline.steps_to_coverage(coverage),
            t_a: run.t_a,
            t_f: run.t_f,
            converged: run.converged,
            final_density: run.final_density(),
            coverage_step: run.steps_to_coverage(coverage),
        }
    }

    /// `(I₀ − I_f) / I₀` against the paired baseline.
    pub fn relative_suppression(&self) -> T {
        (self.baseline_final - self.final_density) / self.baseline_final
    }
}

fn reference_tf<T: Scalar>(baseline: &SpreadTrace<T>) -> usize {
    baseline.t_f.unwrap_or(baseline.len() - 1).max(1)
}

#[derive(Debug, Clone)]
pub struct ScenarioResult<T> {
    pub config: SimConfig<T>,
    pub baseline: Vec<SpreadTrace<T>>,
    /// Announced runs; identical to `baseline` for free spread.
    pub traces: Vec<SpreadTrace<T>>,
    pub outcomes: Vec<ReplicateOutcome<T>>,
    pub mean: MeanTrace<T>,
    pub baseline_mean: MeanTrace<T>,
    pub efficiency: Option<EfficiencyReport<T>>,
    /// False if any run, baseline or announced, hit `max_steps` unsettled.
    pub converged: bool,
}

impl<T: Scalar> ScenarioResult<T> {
    pub fn final_densities(&self) -> Vec<T> {
        self.outcomes.iter().map(|o| o.final_density).collect()
    }

    pub fn baseline_final_densities(&self) -> Vec<T> {
        self.outcomes.iter().map(|o| o.baseline_final).collect()
    }

    pub fn mean_final(&self) -> T {
        mean(self.outcomes.iter().map(|o| o.final_density))
    }

    pub fn mean_baseline_final(&self) -> T {
        mean(self.outcomes.iter().map(|o| o.baseline_final))
    }
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, count) = values.fold((T::zero(), 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        T::zero()
    } else {
        sum / T::from_count(count)
    }
}

/// Efficiency of the announced runs relative to their baselines.
///
/// True verdict: `T₀` is the mean baseline end of spread and `T_t` the mean
/// steps to coverage, a replicate that never covers counting as `T₀` (no
/// time saved). False verdict: `I₀`/`I_f` are mean final densities.
fn efficiency_report<T: Scalar>(
    outcomes: &[ReplicateOutcome<T>],
    verdict: Verdict,
    tau: T,
    eff: &EfficiencyParams<T>,
) -> Result<EfficiencyReport<T>> {
    match verdict {
        Verdict::True => {
            if outcomes.iter().all(|o| o.coverage_step.is_none()) {
                return zero_report(tau, verdict, eff);
            }
            let t0 = mean(outcomes.iter().map(|o| T::from_count(o.baseline_tf)));
            let tt = mean(outcomes.iter().map(|o| {
                T::from_count(
                    o.coverage_step
                        .map_or(o.baseline_tf, |c| c.min(o.baseline_tf)),
                )
            }));
            score_true(tau, t0, tt.min(t0), eff)
        }
        Verdict::False => {
            let i0 = mean(outcomes.iter().map(|o| o.baseline_final));
            let i_f = mean(outcomes.iter().map(|o| o.final_density));
            score_false(tau, i0, i_f.min(i0), eff)
        }
    }
}

/// Baseline plus one announced run per intervention position. `taus` must
/// be ascending; the announced runs fork from a single prefix simulation,
/// which is bit-identical to rerunning each from scratch.
fn replicate_runs<T: Scalar>(
    graph: &NetworkGraph,
    config: &SimConfig<T>,
    index: usize,
    taus: &[T],
) -> Result<(SpreadTrace<T>, Vec<SpreadTrace<T>>)> {
    let mut baseline = Simulation::new(graph, config.run_config(index, None))?;
    baseline.run_to_end();
    let baseline = baseline.into_trace();

    let Some(verdict) = config.beta.verdict() else {
        return Ok((baseline, Vec::new()));
    };
    let tf = reference_tf(&baseline);
    let mut prefix = Simulation::new(graph, config.run_config(index, Some(verdict)))?;
    let mut runs = Vec::with_capacity(taus.len());
    for &tau in taus {
        let t_a = announcement_step(tau, tf);
        let reached = prefix.advance_before_announcement(t_a);
        let mut fork = prefix.clone();
        if reached {
            fork.announce(verdict)?;
            fork.run_to_end();
        }
        runs.push(fork.into_trace());
    }
    Ok((baseline, runs))
}

/// Runs the paired replicate set described by `config`.
///
/// Replicate `k` uses RNG stream `seed + k` for both its free-spread
/// baseline and its announced run, so the two agree exactly up to `t_a`.
/// Replicates run in parallel; results are collected in index order.
pub fn run_scenario<T: Scalar>(config: &SimConfig<T>) -> Result<ScenarioResult<T>> {
    config.validate()?;
    let graph = config.graph.generate()?;
    run_scenario_on(&graph, config)
}

/// [`run_scenario`] on an already generated graph.
pub fn run_scenario_on<T: Scalar>(
    graph: &NetworkGraph,
    config: &SimConfig<T>,
) -> Result<ScenarioResult<T>> {
    config.validate()?;
    let taus: Vec<T> = config
        .tau
        .filter(|_| config.beta != BetaMode::Free)
        .into_iter()
        .collect();
    let pairs: Vec<(SpreadTrace<T>, Vec<SpreadTrace<T>>)> = (0..config.replicates)
        .into_par_iter()
        .map(|k| replicate_runs(graph, config, k, &taus))
        .collect::<Result<_>>()?;

    let mut baseline = Vec::with_capacity(pairs.len());
    let mut traces = Vec::with_capacity(pairs.len());
    for (b, mut runs) in pairs {
        traces.push(runs.pop().unwrap_or_else(|| b.clone()));
        baseline.push(b);
    }
    let outcomes: Vec<ReplicateOutcome<T>> = baseline
        .iter()
        .zip(&traces)
        .enumerate()
        .map(|(k, (b, r))| {
            ReplicateOutcome::new(
                k,
                config.run_config(k, None).seed,
                b,
                r,
                config.eff.coverage,
            )
        })
        .collect();

    let efficiency = match (config.beta.verdict(), config.tau) {
        (Some(v), Some(tau)) => Some(efficiency_report(&outcomes, v, tau, &config.eff)?),
        _ => None,
    };
    let converged = baseline.iter().chain(&traces).all(|t| t.converged);
    Ok(ScenarioResult {
        config: config.clone(),
        mean: average_replicates(&traces)?,
        baseline_mean: average_replicates(&baseline)?,
        baseline,
        traces,
        outcomes,
        efficiency,
        converged,
    })
}

/// One point of an efficiency curve.
#[derive(Debug)]
pub struct SweepPoint<T> {
    pub tau: T,
    pub outcomes: Vec<ReplicateOutcome<T>>,
    pub report: Result<EfficiencyReport<T>>,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn score(&self) -> Option<T> {
        self.report.as_ref().ok().map(|r| r.score)
    }

    pub fn mean_final(&self) -> T {
        mean(self.outcomes.iter().map(|o| o.final_density))
    }
}

/// Efficiency curve over an ascending grid of intervention positions.
///
/// A grid point outside `(0, 1)` yields an error for that point only.
pub fn sweep_tau<T: Scalar>(config: &SimConfig<T>, grid: &[T]) -> Result<Vec<SweepPoint<T>>> {
    let graph = config.graph.generate()?;
    sweep_tau_on(&graph, config, grid)
}

/// [`sweep_tau`] on an already generated graph.
pub fn sweep_tau_on<T: Scalar>(
    graph: &NetworkGraph,
    config: &SimConfig<T>,
    grid: &[T],
) -> Result<Vec<SweepPoint<T>>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("tau grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "tau grid must be strictly ascending".into(),
        ));
    }
    let Some(verdict) = config.beta.verdict() else {
        return Err(Error::InvalidConfig(
            "a sweep needs beta = true or false".into(),
        ));
    };
    // Validate everything except tau itself, which is per grid point.
    let probe = SimConfig {
        tau: Some(T::half()),
        ..config.clone()
    };
    probe.validate()?;

    let valid: Vec<T> = grid
        .iter()
        .copied()
        .filter(|&t| check_tau(t).is_ok())
        .collect();
    let per_replicate: Vec<Vec<ReplicateOutcome<T>>> = (0..config.replicates)
        .into_par_iter()
        .map(|k| {
            let (baseline, runs) = replicate_runs(graph, &probe, k, &valid)?;
            let seed = probe.run_config(k, None).seed;
            Ok(runs
                .iter()
                .map(|r| ReplicateOutcome::new(k, seed, &baseline, r, config.eff.coverage))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut column = 0;
    let mut points = Vec::with_capacity(grid.len());
    for &tau in grid {
        if let Err(e) = check_tau(tau) {
            points.push(SweepPoint {
                tau,
                outcomes: Vec::new(),
                report: Err(e),
            });
            continue;
        }
        let outcomes: Vec<ReplicateOutcome<T>> = per_replicate
            .iter()
            .map(|runs| runs[column].clone())
            .collect();
        column += 1;
        let report = efficiency_report(&outcomes, verdict, tau, &config.eff);
        points.push(SweepPoint {
            tau,
            outcomes,
            report,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;

    fn trace(i: &[f64]) -> SpreadTrace<f64> {
        SpreadTrace {
            i: i.to_vec(),
            s: i.iter().map(|x| 1.0 - x).collect(),
            t_a: None,
            t_f: Some(i.len() - 1),
            converged: true,
            verdict: None,
        }
    }

    fn small_config(beta: BetaMode, tau: Option<f64>) -> SimConfig<f64> {
        SimConfig {
            graph: GraphSpec::ba(400, 5.0, 3),
            replicates: 6,
            seed: 77,
            ..SimConfig::standard()
        }
        .with_beta(beta, tau)
    }

    #[test]
    fn average_identical_traces() {
        let t = trace(&[0.1, 0.2, 0.4]);
        let m = average_replicates(&[t.clone(), t.clone()]).unwrap();
        assert_eq!(m.i, t.i);
        assert_eq!(m.s, t.s);
        assert_eq!(m.t_f, Some(2));
    }

    #[test]
    fn average_pads_short_traces() {
        let a = trace(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let b = trace(&[0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95]);
        let m = average_replicates(&[a, b]).unwrap();
        assert_eq!(m.len(), 7);
        assert!((m.i[6] - (0.5 + 0.95) / 2.0).abs() < 1e-15);
        assert!((m.i[5] - (0.5 + 0.9) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn average_rejects_empty() {
        assert!(matches!(
            average_replicates::<f64>(&[]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn free_scenario_pairs_with_itself() {
        let r = run_scenario(&small_config(BetaMode::Free, None)).unwrap();
        assert_eq!(r.traces, r.baseline);
        assert!(r.efficiency.is_none());
        assert_eq!(r.outcomes.len(), 6);
        assert_eq!(r.mean, r.baseline_mean);
    }

    #[test]
    fn announced_runs_share_the_baseline_prefix() {
        let r = run_scenario(&small_config(BetaMode::False, Some(0.3))).unwrap();
        for (b, t) in r.baseline.iter().zip(&r.traces) {
            let ta = t.t_a.unwrap();
            assert_eq!(&b.i[..=ta], &t.i[..=ta]);
            assert_eq!(ta, announcement_step(0.3, b.t_f.unwrap()));
        }
        let e = r.efficiency.unwrap();
        assert_eq!(e.verdict, Verdict::False);
        assert!(e.score >= 0.0);
    }

    #[test]
    fn scenario_is_deterministic() {
        let c = small_config(BetaMode::True, Some(0.2));
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.efficiency, b.efficiency);
    }

    #[test]
    fn sweep_matches_individual_scenarios() {
        let c = small_config(BetaMode::True, None);
        let grid = [0.1, 0.35, 0.6];
        let points = sweep_tau(&c, &grid).unwrap();
        for p in &points {
            let single = run_scenario(&c.clone().with_beta(BetaMode::True, Some(p.tau))).unwrap();
            assert_eq!(
                p.report.as_ref().unwrap(),
                single.efficiency.as_ref().unwrap()
            );
            assert_eq!(p.outcomes, single.outcomes);
        }
    }

    #[test]
    fn sweep_isolates_bad_points() {
        let c = small_config(BetaMode::False, None);
        let points = sweep_tau(&c, &[0.0, 0.2, 1.0]).unwrap();
        assert!(points[0].report.is_err());
        assert!(points[1].report.is_ok());
        assert!(points[2].report.is_err());
        assert!(sweep_tau(&c, &[]).is_err());
        assert!(sweep_tau(&c, &[0.3, 0.2]).is_err());
        assert!(sweep_tau(&small_config(BetaMode::Free, None), &[0.2]).is_err());
    }

    #[test]
    fn single_point_denominator() {
        let c = small_config(BetaMode::True, None);
        let p = sweep_tau(&c, &[0.5]).unwrap();
        assert_eq!(p.len(), 1);
        let d = p[0].report.as_ref().unwrap().denominator;
        assert!((d - 1.0370).abs() < 1e-4, "{d}");
    }
}
