use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BetaMode, Comparison, MeanTrace, ScenarioResult, SweepPoint};
use crate::dynamics::{Phase, Verdict};
use crate::error::{Error, Result};
use crate::meanfield::DensityPoint;
use crate::scalar::Scalar;

/// Significant digits used for every float written to CSV.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "format must be csv or json, got {other:?}"
            ))),
        }
    }
}

/// One row of the trace CSV `step,r_percent,s,i,phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub step: usize,
    pub r_percent: T,
    pub s: T,
    pub i: T,
    pub phase: Phase,
}

/// Summary written by JSON export of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary<T> {
    pub beta: BetaMode,
    pub tau: Option<T>,
    pub replicates: usize,
    pub t_a: Option<usize>,
    pub t_f: Option<usize>,
    pub final_i: T,
    pub baseline_final_i: T,
    pub converged: bool,
    pub verdict: Option<Verdict>,
    pub score: Option<T>,
    pub steps: usize,
}

impl<T: Scalar> ScenarioSummary<T> {
    pub fn from_result(r: &ScenarioResult<T>) -> Self {
        ScenarioSummary {
            beta: r.config.beta,
            tau: r.config.tau,
            replicates: r.config.replicates,
            t_a: r.mean.t_a,
            t_f: r.mean.t_f,
            final_i: r.mean_final(),
            baseline_final_i: r.mean_baseline_final(),
            converged: r.converged,
            verdict: r.config.beta.verdict(),
            score: r.efficiency.map(|e| e.score),
            steps: r.mean.len().saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurvePoint<T> {
    tau: T,
    score: Option<T>,
    error: Option<String>,
}

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits in plain
/// decimal notation.
pub fn format_sig<T: Scalar>(x: T) -> String {
    let v = x.to_f64_lossy();
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (SIGNIFICANT_DIGITS as i64 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Rows of the trace CSV for `trace`; `R = 100 t / t_f` with `t_f` the end
/// of spread, or the last step if unset.
pub fn trace_rows<T: Scalar>(trace: &MeanTrace<T>) -> Vec<TraceRow<T>> {
    let tf = trace.t_f.unwrap_or(trace.len().saturating_sub(1));
    let hundred = T::lit(100.0);
    trace
        .i
        .iter()
        .zip(&trace.s)
        .enumerate()
        .map(|(t, (&i, &s))| TraceRow {
            step: t,
            r_percent: if tf == 0 {
                T::zero()
            } else {
                hundred * T::from_count(t) / T::from_count(tf)
            },
            s,
            i,
            phase: trace.phase_at(t),
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::json(path, e))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes a mean trace as `step,r_percent,s,i,phase`.
pub fn write_trace_csv<T: Scalar>(trace: &MeanTrace<T>, path: &Path) -> Result<()> {
    let rows = trace_rows(trace).into_iter().map(|r| {
        [
            r.step.to_string(),
            format_sig(r.r_percent),
            format_sig(r.s),
            format_sig(r.i),
            r.phase.as_str().to_string(),
        ]
    });
    write_rows(path, &["step", "r_percent", "s", "i", "phase"], rows)
}

/// Writes the mean trace (CSV) or the summary (JSON) of a scenario.
pub fn export_result<T: Scalar + Serialize>(
    result: &ScenarioResult<T>,
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    match format {
        ExportFormat::Csv => write_trace_csv(&result.mean, path),
        ExportFormat::Json => write_json(path, &ScenarioSummary::from_result(result)),
    }
}

/// Writes an efficiency curve as `tau,score`; failed points have an empty
/// score in CSV and carry their error message in JSON.
pub fn export_curve<T: Scalar + Serialize>(
    points: &[SweepPoint<T>],
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    match format {
        ExportFormat::Csv => write_rows(
            path,
            &["tau", "score"],
            points.iter().map(|p| {
                [
                    format_sig(p.tau),
                    p.score().map(format_sig).unwrap_or_default(),
                ]
            }),
        ),
        ExportFormat::Json => {
            let curve: Vec<CurvePoint<T>> = points
                .iter()
                .map(|p| CurvePoint {
                    tau: p.tau,
                    score: p.score(),
                    error: p.report.as_ref().err().map(|e| e.to_string()),
                })
                .collect();
            write_json(path, &curve)
        }
    }
}

/// Writes `r_percent,sim,external,sim_growth,external_growth`; the growth
/// columns are empty on the last row.
pub fn write_comparison_csv<T: Scalar>(c: &Comparison<T>, path: &Path) -> Result<()> {
    let rows = (0..c.r_percent.len()).map(|k| {
        [
            format_sig(c.r_percent[k]),
            format_sig(c.sim[k]),
            format_sig(c.external[k]),
            c.sim_growth
                .get(k)
                .map(|&g| format_sig(g))
                .unwrap_or_default(),
            c.external_growth
                .get(k)
                .map(|&g| format_sig(g))
                .unwrap_or_default(),
        ]
    });
    write_rows(
        path,
        &[
            "r_percent",
            "sim",
            "external",
            "sim_growth",
            "external_growth",
        ],
        rows,
    )
}

/// Writes a mean-field curve as `t,s,i`.
pub fn write_density_csv<T: Scalar>(points: &[DensityPoint<T>], path: &Path) -> Result<()> {
    let rows = points
        .iter()
        .map(|p| [format_sig(p.t), format_sig(p.s), format_sig(p.i)]);
    write_rows(path, &["t", "s", "i"], rows)
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(r)
}

fn parse_field<T: Scalar>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.trim().parse::<f64>().map(T::lit).map_err(|_| {
        Error::InvalidInput(format!(
            "{}: line {line}: bad {name} {raw:?}",
            path.display()
        ))
    })
}

fn records(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    reader
        .records()
        .enumerate()
        .map(|(k, rec)| rec.map(|r| (k + 2, r)).map_err(|e| Error::csv(path, e)))
        .collect()
}

pub fn read_trace_csv<T: Scalar>(path: &Path) -> Result<Vec<TraceRow<T>>> {
    let mut r = open_csv(path, &["step", "r_percent", "s", "i", "phase"])?;
    records(path, &mut r)?
        .into_iter()
        .map(|(line, rec)| {
            let step = rec[0].trim().parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!(
                    "{}: line {line}: bad step {:?}",
                    path.display(),
                    &rec[0]
                ))
            })?;
            let phase = match rec[4].trim() {
                "unconfirmed" => Phase::Unconfirmed,
                "confirmed" => Phase::Confirmed,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "{}: line {line}: bad phase {other:?}",
                        path.display()
                    )))
                }
            };
            Ok(TraceRow {
                step,
                r_percent: parse_field(path, line, "r_percent", &rec[1])?,
                s: parse_field(path, line, "s", &rec[2])?,
                i: parse_field(path, line, "i", &rec[3])?,
                phase,
            })
        })
        .collect()
}

/// Reads a `tau,score` curve; an empty score reads back as `None`.
pub fn read_curve_csv<T: Scalar>(path: &Path) -> Result<Vec<(T, Option<T>)>> {
    let mut r = open_csv(path, &["tau", "score"])?;
    records(path, &mut r)?
        .into_iter()
        .map(|(line, rec)| {
            let tau = parse_field(path, line, "tau", &rec[0])?;
            let score = match rec[1].trim() {
                "" => None,
                raw => Some(parse_field(path, line, "score", raw)?),
            };
            Ok((tau, score))
        })
        .collect()
}

/// Reads an external progress series with header `r_percent,density`.
pub fn read_external_csv<T: Scalar>(path: &Path) -> Result<Vec<(T, T)>> {
    let mut r = open_csv(path, &["r_percent", "density"])?;
    records(path, &mut r)?
        .into_iter()
        .map(|(line, rec)| {
            Ok((
                parse_field(path, line, "r_percent", &rec[0])?,
                parse_field(path, line, "density", &rec[1])?,
            ))
        })
        .collect()
}
