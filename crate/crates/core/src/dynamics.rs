//! Agent-based two-stage spreading engine.
//!
//! Known nodes carry a confidence `c ∈ [0, 1]` and a credibility
//! `r ∈ [-0.5, 0.5]`. Each step every Known node `p` tries once to inform
//! each Unknown neighbor with probability
//!
//! ```text
//! α_p = clamp(λ₁ (c_p − ⟨c⟩) + λ₂ r_p (k_p − ⟨k⟩) / k_max, 0, 1)
//! ```
//!
//! where `⟨c⟩` is the mean Known confidence before the announcement and
//! exactly `0.5` after it. The announcement applies a one-shot confidence
//! and credibility correction that depends on the verdict.

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::efficiency::DEFAULT_TF_WINDOW;
use crate::error::{Error, Result};
use crate::graph::{NetworkGraph, NodeId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeState {
    Unknown,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Unconfirmed,
    Confirmed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Unconfirmed => "unconfirmed",
            Phase::Confirmed => "confirmed",
        }
    }
}

/// Outcome of the announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
}

/// Per-node view. `confidence` is `None` while the node is Unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAttrs<T> {
    pub state: NodeState,
    pub confidence: Option<T>,
    pub credibility: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Scalar> RateParams<T> {
    pub fn new(lambda1: T, lambda2: T) -> Result<Self> {
        let p = RateParams { lambda1, lambda2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Population state of one run. Per-node attributes are stored as flat
/// arrays indexed by [`NodeId`].
#[derive(Debug, Clone)]
pub struct SpreadState<T> {
    known: Vec<bool>,
    confidence: Vec<T>,
    credibility: Vec<T>,
    /// Known nodes in infection order.
    known_nodes: Vec<NodeId>,
    /// Known nodes that still have at least one Unknown neighbor.
    spreaders: Vec<NodeId>,
    unknown_neighbors: Vec<u32>,
    confidence_sum: T,
    phase: Phase,
    verdict: Option<Verdict>,
    step_clock: usize,
    announced_at: Option<usize>,
}

impl<T: Scalar> SpreadState<T> {
    /// State with the given `(node, confidence, credibility)` triples Known
    /// and everything else Unknown, in the Unconfirmed phase at step 0.
    pub fn from_known(g: &NetworkGraph, known: &[(NodeId, T, T)]) -> Result<Self> {
        let n = g.node_count();
        let mut state = SpreadState {
            known: vec![false; n],
            confidence: vec![T::zero(); n],
            credibility: vec![T::zero(); n],
            known_nodes: Vec::with_capacity(n),
            spreaders: Vec::new(),
            unknown_neighbors: (0..n as NodeId).map(|u| g.degree(u) as u32).collect(),
            confidence_sum: T::zero(),
            phase: Phase::Unconfirmed,
            verdict: None,
            step_clock: 0,
            announced_at: None,
        };
        for &(node, c, r) in known {
            if node as usize >= n {
                return Err(Error::InvalidInput(format!("node {node} outside graph")));
            }
            if state.known[node as usize] {
                return Err(Error::InvalidInput(format!("node {node} listed twice")));
            }
            if !(c >= T::zero() && c <= T::one()) {
                return Err(Error::InvalidInput(format!(
                    "confidence {c} outside [0, 1]"
                )));
            }
            state.credibility[node as usize] = r;
            state.mark_known(g, node, c);
        }
        state.rebuild_spreaders();
        Ok(state)
    }

    /// Marks the state Confirmed under `verdict` at the current step without
    /// applying the correction, for rebuilding an already-corrected population.
    pub fn into_confirmed(mut self, verdict: Verdict) -> Self {
        self.phase = Phase::Confirmed;
        self.verdict = Some(verdict);
        self.announced_at = Some(self.step_clock);
        self
    }

    fn mark_known(&mut self, g: &NetworkGraph, node: NodeId, c: T) {
        let u = node as usize;
        self.known[u] = true;
        self.confidence[u] = c;
        self.confidence_sum = self.confidence_sum + c;
        self.known_nodes.push(node);
        for &v in g.neighbors(node) {
            self.unknown_neighbors[v as usize] -= 1;
        }
    }

    fn rebuild_spreaders(&mut self) {
        self.spreaders = self
            .known_nodes
            .iter()
            .copied()
            .filter(|&u| self.unknown_neighbors[u as usize] > 0)
            .collect();
    }

    pub fn node_count(&self) -> usize {
        self.known.len()
    }

    pub fn known_count(&self) -> usize {
        self.known_nodes.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.node_count() - self.known_count()
    }

    /// Known density `i = I / N`.
    pub fn known_density(&self) -> T {
        T::from_count(self.known_count()) / T::from_count(self.node_count())
    }

    pub fn unknown_density(&self) -> T {
        T::from_count(self.unknown_count()) / T::from_count(self.node_count())
    }

    pub fn is_known(&self, node: NodeId) -> bool {
        self.known[node as usize]
    }

    pub fn known_nodes(&self) -> &[NodeId] {
        &self.known_nodes
    }

    pub fn attrs(&self, node: NodeId) -> NodeAttrs<T> {
        let u = node as usize;
        NodeAttrs {
            state: if self.known[u] {
                NodeState::Known
            } else {
                NodeState::Unknown
            },
            confidence: self.known[u].then(|| self.confidence[u]),
            credibility: self.credibility[u],
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.verdict
    }

    pub fn step_clock(&self) -> usize {
        self.step_clock
    }

    pub fn announced_at(&self) -> Option<usize> {
        self.announced_at
    }

    /// `⟨c⟩`: mean Known confidence before the announcement, `0.5` after.
    pub fn neutral_confidence(&self) -> Result<T> {
        match self.phase {
            Phase::Confirmed => Ok(T::half()),
            Phase::Unconfirmed => {
                if self.known_nodes.is_empty() {
                    return Err(Error::InternalState(
                        "neutral confidence undefined with no Known nodes".into(),
                    ));
                }
                Ok(self.confidence_sum / T::from_count(self.known_nodes.len()))
            }
        }
    }

    /// Unclamped rate of a node from its own attributes.
    pub fn raw_rate(&self, node: NodeId, g: &NetworkGraph, c_mean: T, params: &RateParams<T>) -> T {
        raw_rate_from(
            self.confidence[node as usize],
            self.credibility[node as usize],
            g.degree(node),
            g.avg_degree(),
            g.max_degree(),
            c_mean,
            params,
        )
    }

    /// Transmission probability `α_p` of a Known node.
    pub fn spread_rate(
        &self,
        node: NodeId,
        g: &NetworkGraph,
        c_mean: T,
        params: &RateParams<T>,
    ) -> T {
        clamp_unit(self.raw_rate(node, g, c_mean, params))
    }

    /// One-shot announcement correction of every Known node. Moves the state
    /// to the Confirmed phase and records the announcement step.
    pub fn correct_confidence<R: Rng + ?Sized>(
        &mut self,
        beta: Verdict,
        rng: &mut R,
    ) -> Result<()> {
        if self.phase == Phase::Confirmed {
            return Err(Error::IllegalTransition(format!(
                "announcement already applied at step {}",
                self.announced_at.unwrap_or_default()
            )));
        }
        let half = T::half();
        let one = T::one();
        let zero = T::zero();
        for &node in &self.known_nodes {
            let u = node as usize;
            let c = self.confidence[u];
            let dif = (c - half).abs();
            match beta {
                Verdict::True => {
                    if c < half {
                        self.credibility[u] = self.credibility[u] - dif;
                        self.confidence[u] = rng.gen_range(half..one);
                    } else {
                        self.credibility[u] = self.credibility[u] + dif;
                        self.confidence[u] = (c + rng.gen_range(zero..half)).min(one);
                    }
                }
                Verdict::False => {
                    if c > half {
                        self.credibility[u] = self.credibility[u] - dif;
                        self.confidence[u] = rng.gen_range(zero..half);
                    } else {
                        self.credibility[u] = self.credibility[u] + dif;
                        self.confidence[u] = (c - rng.gen_range(zero..half)).max(zero);
                    }
                }
            }
        }
        self.confidence_sum = self
            .known_nodes
            .iter()
            .fold(zero, |acc, &u| acc + self.confidence[u as usize]);
        self.phase = Phase::Confirmed;
        self.verdict = Some(beta);
        self.announced_at = Some(self.step_clock);
        Ok(())
    }

    /// Confidence drawn for a node informed in the current phase.
    fn fresh_confidence<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let half = T::half();
        match (self.phase, self.verdict) {
            (Phase::Confirmed, Some(Verdict::False)) => rng.gen_range(T::zero()..=half),
            (Phase::Confirmed, Some(Verdict::True)) => rng.gen_range(half..=T::one()),
            _ => rng.gen_range(T::zero()..=T::one()),
        }
    }

    /// Advances one synchronous step and returns the number of newly Known
    /// nodes. Rates come from the step-start state; nodes informed during
    /// the step start transmitting on the next one.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        g: &NetworkGraph,
        params: &RateParams<T>,
        rng: &mut R,
    ) -> usize {
        let c_mean = match self.neutral_confidence() {
            Ok(c) => c,
            Err(_) => {
                self.step_clock += 1;
                return 0;
            }
        };
        let avg_k: T = g.avg_degree();
        let max_k = g.max_degree();

        let mut fresh: Vec<NodeId> = Vec::new();
        for &p in &self.spreaders {
            let pu = p as usize;
            let alpha = clamp_unit(raw_rate_from(
                self.confidence[pu],
                self.credibility[pu],
                g.degree(p),
                avg_k,
                max_k,
                c_mean,
                params,
            ));
            if alpha <= T::zero() {
                continue;
            }
            for &q in g.neighbors(p) {
                let qu = q as usize;
                // `known` is set for this step's fresh nodes too, so each
                // node is informed at most once.
                if !self.known[qu] && rng.gen_range(T::zero()..T::one()) < alpha {
                    self.known[qu] = true;
                    fresh.push(q);
                }
            }
        }

        for &q in &fresh {
            let c = self.fresh_confidence(rng);
            self.credibility[q as usize] = T::zero();
            self.mark_known(g, q, c);
        }
        if !fresh.is_empty() {
            let mut spreaders = std::mem::take(&mut self.spreaders);
            spreaders.extend_from_slice(&fresh);
            spreaders.retain(|&u| self.unknown_neighbors[u as usize] > 0);
            self.spreaders = spreaders;
        }
        self.step_clock += 1;
        fresh.len()
    }
}

#[inline]
fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

#[inline]
fn raw_rate_from<T: Scalar>(
    confidence: T,
    credibility: T,
    degree: usize,
    avg_degree: T,
    max_degree: usize,
    c_mean: T,
    params: &RateParams<T>,
) -> T {
    let influence = (T::from_count(degree) - avg_degree) / T::from_count(max_degree.max(1));
    params.lambda1 * (confidence - c_mean) + params.lambda2 * (credibility * influence)
}

/// Clamped rate of a Known node; see [`SpreadState::spread_rate`].
pub fn spread_rate<T: Scalar>(
    node: NodeId,
    state: &SpreadState<T>,
    g: &NetworkGraph,
    c_mean: T,
    params: &RateParams<T>,
) -> T {
    state.spread_rate(node, g, c_mean, params)
}

/// Number of initial Known nodes: `round(i0 N)`, at least one.
pub fn seed_count(n: usize, i0: f64) -> usize {
    ((i0 * n as f64).round() as usize).clamp(1, n)
}

/// Seeds `max(1, round(i0 N))` distinct uniformly chosen nodes as Known with
/// confidence uniform on `[0, 1]` and zero credibility.
pub fn init_population<T: Scalar, R: Rng + ?Sized>(
    g: &NetworkGraph,
    i0: f64,
    rng: &mut R,
) -> Result<SpreadState<T>> {
    if !(i0 > 0.0 && i0 < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "i0 must lie in (0, 1), got {i0}"
        )));
    }
    let n = g.node_count();
    let count = seed_count(n, i0);
    let seeds: Vec<(NodeId, T, T)> = index::sample(rng, n, count)
        .into_iter()
        .map(|u| u as NodeId)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|u| (u, rng.gen_range(T::zero()..=T::one()), T::zero()))
        .collect();
    SpreadState::from_known(g, &seeds)
}

/// Parameters of a single simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub i0: f64,
    pub rate: RateParams<T>,
    /// Verdict revealed at the announcement; `None` for free spread.
    pub verdict: Option<Verdict>,
    pub max_steps: usize,
    pub tf_epsilon: T,
    pub tf_window: usize,
    pub seed: u64,
}

impl<T: Scalar> RunConfig<T> {
    pub fn free(i0: f64, rate: RateParams<T>, seed: u64) -> Self {
        RunConfig {
            i0,
            rate,
            verdict: None,
            max_steps: 20_000,
            tf_epsilon: T::lit(5e-4),
            tf_window: DEFAULT_TF_WINDOW,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rate.validate()?;
        if !(self.i0 > 0.0 && self.i0 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "i0 must lie in (0, 1), got {}",
                self.i0
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        if self.tf_window == 0 {
            return Err(Error::InvalidConfig("tf_window must be positive".into()));
        }
        if !(self.tf_epsilon > T::zero()) {
            return Err(Error::InvalidConfig("tf_epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Density series of one run. Index `t` of `i`/`s` is the state after `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadTrace<T> {
    pub i: Vec<T>,
    pub s: Vec<T>,
    pub t_a: Option<usize>,
    pub t_f: Option<usize>,
    pub converged: bool,
    pub verdict: Option<Verdict>,
}

impl<T: Scalar> SpreadTrace<T> {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn final_density(&self) -> T {
        *self
            .i
            .last()
            .expect("trace holds at least the initial density")
    }

    pub fn phase_at(&self, t: usize) -> Phase {
        match self.t_a {
            Some(ta) if t >= ta => Phase::Confirmed,
            _ => Phase::Unconfirmed,
        }
    }

    /// First step at which `i(t) >= threshold`.
    pub fn steps_to_coverage(&self, threshold: T) -> Option<usize> {
        self.i.iter().position(|&x| x >= threshold)
    }
}

/// A run in progress: state, its private RNG stream and the series so far.
///
/// Cloning a simulation forks it; both copies continue bit-identically
/// until they are driven differently.
#[derive(Debug, Clone)]
pub struct Simulation<'g, T> {
    graph: &'g NetworkGraph,
    config: RunConfig<T>,
    state: SpreadState<T>,
    rng: ChaCha8Rng,
    i: Vec<T>,
    known_counts: Vec<usize>,
    quiet_steps: usize,
    t_f: Option<usize>,
}

impl<'g, T: Scalar> Simulation<'g, T> {
    pub fn new(graph: &'g NetworkGraph, config: RunConfig<T>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let state = init_population(graph, config.i0, &mut rng)?;
        let i = vec![state.known_density()];
        let known_counts = vec![state.known_count()];
        Ok(Simulation {
            graph,
            config,
            state,
            rng,
            i,
            known_counts,
            quiet_steps: 0,
            t_f: None,
        })
    }

    pub fn state(&self) -> &SpreadState<T> {
        &self.state
    }

    pub fn config(&self) -> &RunConfig<T> {
        &self.config
    }

    pub fn step_clock(&self) -> usize {
        self.state.step_clock()
    }

    /// End-of-spread step, once detected.
    pub fn t_f(&self) -> Option<usize> {
        self.t_f
    }

    pub fn densities(&self) -> &[T] {
        &self.i
    }

    pub fn announce(&mut self, verdict: Verdict) -> Result<()> {
        self.state.correct_confidence(verdict, &mut self.rng)?;
        // A quiet stretch before the announcement says nothing about the
        // corrected dynamics.
        self.quiet_steps = 0;
        Ok(())
    }

    /// Runs one step and updates end-of-spread detection.
    pub fn advance(&mut self) -> usize {
        let fresh = self
            .state
            .step(self.graph, &self.config.rate, &mut self.rng);
        let prev = *self.i.last().expect("non-empty series");
        let cur = self.state.known_density();
        self.i.push(cur);
        self.known_counts.push(self.state.known_count());
        if (cur - prev).abs() < self.config.tf_epsilon {
            self.quiet_steps += 1;
        } else {
            self.quiet_steps = 0;
        }
        if self.t_f.is_none() && self.quiet_steps >= self.config.tf_window {
            self.t_f = Some(self.state.step_clock());
        }
        fresh
    }

    /// Steps until the clock reads `step`, or the end of spread or
    /// `max_steps` comes first. Returns whether `step` was reached.
    pub fn advance_to(&mut self, step: usize) -> bool {
        while self.step_clock() < step {
            if self.t_f.is_some() || self.step_clock() >= self.config.max_steps {
                return false;
            }
            self.advance();
        }
        true
    }

    /// Steps until end of spread or `max_steps`.
    pub fn run_to_end(&mut self) {
        while self.t_f.is_none() && self.step_clock() < self.config.max_steps {
            self.advance();
        }
    }

    pub fn into_trace(self) -> SpreadTrace<T> {
        let total = self.state.node_count();
        let n = T::from_count(total);
        let s = self
            .known_counts
            .iter()
            .map(|&known| T::from_count(total - known) / n)
            .collect();
        SpreadTrace {
            i: self.i,
            s,
            t_a: self.state.announced_at(),
            t_f: self.t_f,
            converged: self.t_f.is_some(),
            verdict: self.state.verdict(),
        }
    }
}

/// Full two-phase run: seed, spread, announce at `announce_at` (if the
/// config carries a verdict), and stop at end of spread or `max_steps`.
///
/// End-of-spread detection resets at the announcement, so a quiet
/// stretch before it never terminates the run.
pub fn run<T: Scalar>(
    g: &NetworkGraph,
    config: &RunConfig<T>,
    announce_at: Option<usize>,
) -> Result<SpreadTrace<T>> {
    if config.verdict.is_none() && announce_at.is_some() {
        return Err(Error::InvalidConfig(
            "an announcement step requires a verdict".into(),
        ));
    }
    let mut sim = Simulation::new(g, config.clone())?;
    if let (Some(verdict), Some(t_a)) = (config.verdict, announce_at) {
        if !sim.advance_before_announcement(t_a) {
            return Ok(sim.into_trace());
        }
        sim.announce(verdict)?;
    }
    sim.run_to_end();
    Ok(sim.into_trace())
}

impl<T: Scalar> Simulation<'_, T> {
    /// Steps to `t_a` ignoring end-of-spread detection, which cannot end a
    /// run whose announcement is still pending. Returns false if
    /// `max_steps` intervenes.
    pub fn advance_before_announcement(&mut self, t_a: usize) -> bool {
        while self.step_clock() < t_a {
            if self.step_clock() >= self.config.max_steps {
                return false;
            }
            self.advance();
        }
        self.t_f = None;
        true
    }
}
