#![allow(dead_code)]

use proptest::prelude::*;
use spread_core::{run, GraphSpec, NetworkGraph, RateParams, RunConfig, Simulation, Verdict};

/// One randomized simulation setup for the invariant suite.
#[derive(Debug, Clone)]
pub struct Case {
    pub graph: GraphSpec,
    pub i0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub verdict: Option<Verdict>,
    pub tau: f64,
    pub seed: u64,
}

pub fn case_strategy() -> impl Strategy<Value = Case> {
    let ba = (40usize..300, 2.0f64..7.0, any::<u64>()).prop_map(|(n, k, s)| GraphSpec::ba(n, k, s));
    let ws = (40usize..300, 1usize..4, 0.0f64..1.0, any::<u64>())
        .prop_map(|(n, h, p, s)| GraphSpec::ws(n, 2 * h, p, s));
    let verdict = prop_oneof![
        Just(None),
        Just(Some(Verdict::True)),
        Just(Some(Verdict::False))
    ];
    (
        prop_oneof![ba, ws],
        0.005f64..0.2,
        0.0f64..1.0,
        0.0f64..1.0,
        verdict,
        0.05f64..0.95,
        any::<u64>(),
    )
        .prop_map(|(graph, i0, lambda1, lambda2, verdict, tau, seed)| Case {
            graph,
            i0,
            lambda1,
            lambda2,
            verdict,
            tau,
            seed,
        })
}

fn config(case: &Case, verdict: Option<Verdict>) -> RunConfig<f64> {
    RunConfig {
        verdict,
        max_steps: 3000,
        ..RunConfig::free(
            case.i0,
            RateParams::new(case.lambda1, case.lambda2).unwrap(),
            case.seed,
        )
    }
}

fn check_state(
    sim: &Simulation<'_, f64>,
    g: &NetworkGraph,
    announced: Option<Verdict>,
) -> Result<(), String> {
    let st = sim.state();
    let n = g.node_count();
    if st.known_count() + st.unknown_count() != n {
        return Err(format!("conservation broken at step {}", st.step_clock()));
    }
    for u in 0..n as u32 {
        let a = st.attrs(u);
        if !(-0.5..=0.5).contains(&a.credibility) {
            return Err(format!(
                "credibility {} of node {u} out of range",
                a.credibility
            ));
        }
        match (st.is_known(u), a.confidence) {
            (true, Some(c)) => {
                if !(0.0..=1.0).contains(&c) {
                    return Err(format!("confidence {c} of node {u} out of range"));
                }
                match announced {
                    Some(Verdict::True) if c < 0.5 => {
                        return Err(format!(
                            "confidence {c} < 0.5 after a true verdict (node {u})"
                        ))
                    }
                    Some(Verdict::False) if c > 0.5 => {
                        return Err(format!(
                            "confidence {c} > 0.5 after a false verdict (node {u})"
                        ))
                    }
                    _ => {}
                }
            }
            (false, None) => {}
            (known, c) => return Err(format!("node {u}: known = {known} but confidence = {c:?}")),
        }
    }
    Ok(())
}

/// Runs `case` step by step and checks conservation, monotone density,
/// post-correction confidence bounds, credibility bounds and determinism.
pub fn check_case(case: &Case) -> Result<(), String> {
    let g = case.graph.generate().map_err(|e| e.to_string())?;
    let baseline = run(&g, &config(case, None), None).map_err(|e| e.to_string())?;
    let tf = baseline.t_f.unwrap_or(baseline.len() - 1).max(1);
    let t_a = (case.tau * tf as f64).round() as usize;

    let cfg = config(case, case.verdict);
    let mut sim = Simulation::new(&g, cfg.clone()).map_err(|e| e.to_string())?;
    check_state(&sim, &g, None)?;
    let mut announced = None;
    if let Some(v) = case.verdict {
        while sim.step_clock() < t_a {
            sim.advance();
            check_state(&sim, &g, None)?;
        }
        sim.advance_before_announcement(t_a);
        sim.announce(v).map_err(|e| e.to_string())?;
        announced = Some(v);
        check_state(&sim, &g, announced)?;
    }
    while sim.t_f().is_none() && sim.step_clock() < cfg.max_steps {
        sim.advance();
        check_state(&sim, &g, announced)?;
    }
    let trace = sim.into_trace();

    for (t, (&i, &s)) in trace.i.iter().zip(&trace.s).enumerate() {
        if (i + s - 1.0).abs() > 1e-12 {
            return Err(format!("s + i = {} at step {t}", i + s));
        }
    }
    if let Some(t) = trace.i.windows(2).position(|w| w[1] < w[0]) {
        return Err(format!("density decreased at step {}", t + 1));
    }
    if let (Some(ta), Some(tf)) = (trace.t_a, trace.t_f) {
        if ta >= tf {
            return Err(format!("t_a = {ta} not before t_f = {tf}"));
        }
    }

    let announce_at = case.verdict.map(|_| t_a);
    let again = run(&g, &cfg, announce_at).map_err(|e| e.to_string())?;
    let third = run(&g, &cfg, announce_at).map_err(|e| e.to_string())?;
    if again != third {
        return Err("repeated runs differ".into());
    }
    if again != trace {
        return Err("stepwise run differs from the one-call run".into());
    }
    Ok(())
}
