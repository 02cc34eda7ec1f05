//! Command-line front end. Every flag of [`Overrides`] may also come from a
//! JSON file passed with `--config`, using the same kebab-case keys; flags
//! win over the file, which wins over the built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dynamics::init_population;
use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::harness::{
    compare_series, defaults, export_curve, export_result, read_external_csv, run_scenario,
    sweep_tau, write_comparison_csv, write_density_csv, BetaMode, CompareOptions, ExportFormat,
    ScenarioSummary, SimConfig,
};
use crate::meanfield::{closed_form_density, effective_rate, integrate_logistic, MeanFieldParams};

#[derive(Debug, Parser)]
#[command(
    name = "spread",
    version,
    about = "Announcement-controlled information spreading simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run paired free/announced replicates and write the mean trace or a summary
    Simulate(SimulateArgs),
    /// Efficiency score over a grid of intervention positions
    Sweep(SweepArgs),
    /// Logistic mean-field density curve
    Meanfield(MeanfieldArgs),
    /// Compare a simulated mean trace with an external r_percent,density series
    Compare(CompareArgs),
    /// Generate the configured network and write its edge list
    GraphDump(GraphDumpArgs),
}

/// Scenario settings. Unset values fall back to the config file, then to
/// the reference defaults shown in brackets.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Overrides {
    /// JSON file with any of these settings as kebab-case keys
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Network model: ba or ws [default: ba]
    #[arg(long)]
    pub network: Option<GraphKind>,
    /// Number of nodes [default: 2000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Average degree; an even lattice degree for ws [default: 5 for ba, 4 for ws]
    #[arg(long)]
    pub avg_degree: Option<f64>,
    /// Rewiring probability for ws [default: 0.1]
    #[arg(long)]
    pub ws_p: Option<f64>,
    /// Seed of the graph generator [default: 20240501]
    #[arg(long)]
    pub graph_seed: Option<u64>,

    /// Initially informed fraction [default: 0.005]
    #[arg(long)]
    pub i0: Option<f64>,
    /// Confidence weight of the spreading rate [default: 0.3875]
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Credibility-degree weight of the spreading rate [default: 0.1194]
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Announced verdict: true, false or free (no announcement) [default: free]
    #[arg(long)]
    pub beta: Option<BetaMode>,
    /// Intervention position t_a / t_f in (0, 1); required unless beta is free
    #[arg(long)]
    pub tau: Option<f64>,

    /// Number of replicates [default: 50]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Seed of replicate 0; replicate k uses seed + k [default: 20240501]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step cap per run [default: 20000]
    #[arg(long)]
    pub max_steps: Option<usize>,

    /// Weight of the true-verdict score; the false weight is 1 - eps1 [default: 0.812]
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Base of the response-cost logarithm [default: 0.2121]
    #[arg(long)]
    pub a: Option<f64>,
    /// Base of the time-sensitivity logarithm [default: 0.3089]
    #[arg(long)]
    pub b: Option<f64>,
    /// Density counted as coverage [default: 0.95]
    #[arg(long)]
    pub coverage: Option<f64>,
    /// Per-step density change regarded as quiet [default: 0.0005]
    #[arg(long)]
    pub tf_epsilon: Option<f64>,
    /// Consecutive quiet steps that end a run [default: 5]
    #[arg(long)]
    pub tf_window: Option<usize>,
}

macro_rules! merge_fields {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Overrides { config: None, $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Overrides {
    /// Field-wise `self` if set, else `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        merge_fields!(
            self, fallback, network, n, avg_degree, ws_p, graph_seed, i0, lambda1, lambda2, beta,
            tau, replicates, seed, max_steps, eps1, a, b, coverage, tf_epsilon, tf_window
        )
    }

    pub fn from_json_file(path: &Path) -> Result<Overrides> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Flags, then config file, then defaults. Not validated.
    pub fn resolve(&self) -> Result<SimConfig<f64>> {
        let merged = match &self.config {
            Some(path) => self.clone().or(Overrides::from_json_file(path)?),
            None => self.clone(),
        };
        Ok(merged.apply(SimConfig::standard()))
    }

    fn apply(&self, mut c: SimConfig<f64>) -> SimConfig<f64> {
        let kind = self.network.unwrap_or(GraphKind::Ba);
        c.graph.kind = kind;
        c.graph.n = self.n.unwrap_or(defaults::N);
        c.graph.target_avg_degree = self.avg_degree.unwrap_or(match kind {
            GraphKind::Ba => defaults::AVG_DEGREE,
            GraphKind::Ws => 4.0,
        });
        c.graph.rewire_prob = match kind {
            GraphKind::Ba => 0.0,
            GraphKind::Ws => self.ws_p.unwrap_or(defaults::WS_P),
        };
        c.graph.seed = self.graph_seed.unwrap_or(defaults::SEED);
        c.i0 = self.i0.unwrap_or(c.i0);
        c.rate.lambda1 = self.lambda1.unwrap_or(c.rate.lambda1);
        c.rate.lambda2 = self.lambda2.unwrap_or(c.rate.lambda2);
        c.beta = self.beta.unwrap_or(c.beta);
        c.tau = self.tau.or(c.tau);
        c.replicates = self.replicates.unwrap_or(c.replicates);
        c.seed = self.seed.unwrap_or(c.seed);
        c.max_steps = self.max_steps.unwrap_or(c.max_steps);
        if let Some(eps1) = self.eps1 {
            c.eff.eps1 = eps1;
            c.eff.eps2 = 1.0 - eps1;
        }
        c.eff.a = self.a.unwrap_or(c.eff.a);
        c.eff.b = self.b.unwrap_or(c.eff.b);
        c.eff.coverage = self.coverage.unwrap_or(c.eff.coverage);
        c.eff.tf_epsilon = self.tf_epsilon.unwrap_or(c.eff.tf_epsilon);
        c.eff.tf_window = self.tf_window.unwrap_or(c.eff.tf_window);
        c
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub settings: Overrides,
    /// Output file; the summary is always printed to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv (mean trace) or json (summary) [default: from the --out extension, else csv]
    #[arg(long)]
    pub format: Option<ExportFormat>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub settings: Overrides,
    /// Intervention positions as lo:hi:step
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json [default: from the --out extension, else csv]
    #[arg(long)]
    pub format: Option<ExportFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed-form logistic solution
    Closed,
    /// Fourth-order Runge-Kutta integration
    Rk4,
}

#[derive(Debug, Args)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    pub settings: Overrides,
    /// Effective rate A. If unset it is estimated from a seeded population on
    /// the configured graph, after the announced correction when beta is true or false
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Method::Closed)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub settings: Overrides,
    /// CSV with header r_percent,density
    #[arg(long)]
    pub external: PathBuf,
    /// Divide both series by their final density
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 101)]
    pub grid_points: usize,
    /// Aligned comparison CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphDumpArgs {
    #[command(flatten)]
    pub settings: Overrides,
    /// Edge list, one `u v` pair per line
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `lo:hi:step` into `lo, lo + step, ...` up to `hi` inclusive.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::InvalidConfig(format!(
            "grid must be lo:hi:step with 0 < step and lo <= hi, got {spec:?}"
        ))
    };
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn format_for(format: Option<ExportFormat>, out: &Path) -> ExportFormat {
    format.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    })
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = args.settings.resolve()?;
    let result = run_scenario(&config)?;
    if let Some(out) = &args.out {
        export_result(&result, out, format_for(args.format, out))?;
    }
    let summary = serde_json::to_string(&ScenarioSummary::from_result(&result))
        .map_err(|e| Error::InternalState(e.to_string()))?;
    println!("{summary}");
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut config = args.settings.resolve()?;
    if config.beta == BetaMode::Free {
        return Err(Error::InvalidConfig(
            "sweep needs --beta true or --beta false".into(),
        ));
    }
    config.tau = None;
    let grid = parse_grid(&args.grid)?;
    let points = sweep_tau(&config, &grid)?;
    export_curve(&points, &args.out, format_for(args.format, &args.out))?;
    let best = points
        .iter()
        .filter_map(|p| p.score().map(|s| (p.tau, s)))
        .fold(None, |acc: Option<(f64, f64)>, (t, s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((t, s)),
        });
    match best {
        Some((tau, score)) => println!("points={} best_tau={tau} best_score={score}", points.len()),
        None => println!("points={} best_tau=none", points.len()),
    }
    Ok(())
}

fn meanfield(args: &MeanfieldArgs) -> Result<()> {
    let config = args.settings.resolve()?;
    let rate = match args.rate {
        Some(a) => a,
        None => {
            config.rate.validate()?;
            let g = config.graph.generate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut state = init_population::<f64, _>(&g, config.i0, &mut rng)?;
            if let Some(verdict) = config.beta.verdict() {
                state.correct_confidence(verdict, &mut rng)?;
            }
            effective_rate(&state, &g, &config.rate)?
        }
    };
    let params = MeanFieldParams::new(config.i0, rate)?;
    let mut points = integrate_logistic(&params, args.t_max, args.dt)?;
    if args.method == Method::Closed {
        for p in &mut points {
            *p = closed_form_density(p.t, &params)?;
        }
    }
    write_density_csv(&points, &args.out)?;
    let last = points[points.len() - 1];
    println!(
        "effective_rate={rate} final_t={} final_i={}",
        last.t, last.i
    );
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let external = read_external_csv::<f64>(&args.external)?;
    let config = args.settings.resolve()?;
    let result = run_scenario(&config)?;
    let opts = CompareOptions {
        normalize: args.normalize,
        grid_points: args.grid_points,
    };
    let cmp = compare_series(&result.mean, &external, &opts)?;
    if let Some(out) = &args.out {
        write_comparison_csv(&cmp, out)?;
    }
    println!(
        "points={} sup_deviation={}",
        cmp.r_percent.len(),
        cmp.sup_deviation
    );
    Ok(())
}

fn graph_dump(args: &GraphDumpArgs) -> Result<()> {
    let spec = args.settings.resolve()?.graph;
    let g = spec.generate()?;
    g.write_edge_list(&args.out)?;
    let stats = g.degree_stats();
    println!(
        "nodes={} edges={} avg_degree={} max_degree={}",
        stats.node_count,
        g.edge_count(),
        stats.avg_degree,
        stats.max_degree
    );
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Meanfield(a) => meanfield(a),
        Command::Compare(a) => compare(a),
        Command::GraphDump(a) => graph_dump(a),
    }
}
