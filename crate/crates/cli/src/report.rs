//! Report emission: fixed-header CSVs per sweep point plus a machine-readable
//! JSON summary. Everything except wall-clock columns and the metadata
//! timestamp is byte-deterministic for a fixed seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use asyncact_core::fronthaul::Direction;
use serde::Serialize;

use crate::experiment::SweepPoint;
use crate::runner::AlgoReport;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".to_string(),
    }
}

/// `roc.csv`: algorithm, gamma, pm, pf (pooled over trials).
pub fn write_roc(dir: &Path, reports: &[AlgoReport]) -> Result<()> {
    let mut out = String::from("algorithm,gamma,pm,pf\n");
    for r in reports {
        for p in &r.roc {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.label,
                p.gamma,
                fmt_opt(p.pm),
                fmt_opt(p.pf)
            ));
        }
    }
    fs::write(dir.join("roc.csv"), out).context("writing roc.csv")
}

/// `summary.csv`: one row per algorithm.
pub fn write_summary_csv(dir: &Path, reports: &[AlgoReport]) -> Result<()> {
    let mut out = String::from(
        "algorithm,equal_error_gamma,p_err,mean_iters,raw_bits,huffman_bits,wall_ms\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.label,
            r.equal_error.gamma,
            r.equal_error.p_err,
            r.mean_iterations,
            r.mean_raw_bits,
            r.mean_huffman_bits,
            r.mean_wall_ms
        ));
    }
    fs::write(dir.join("summary.csv"), out).context("writing summary.csv")
}

/// `trace.csv`: algorithm, trial, iter, objective, residual.
pub fn write_trace(dir: &Path, reports: &[AlgoReport]) -> Result<()> {
    let file = fs::File::create(dir.join("trace.csv")).context("creating trace.csv")?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "algorithm,trial,iter,objective,residual")?;
    for r in reports {
        for record in &r.records {
            for row in &record.trace {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.label, record.trial, row.iter, row.objective, row.residual
                )?;
            }
        }
    }
    Ok(())
}

/// One fronthaul ledger per algorithm:
/// `ledger_<label>.csv` with columns iteration, direction, raw_bits,
/// huffman_bits.
pub fn write_ledgers(dir: &Path, reports: &[AlgoReport]) -> Result<()> {
    for r in reports {
        if r.records.iter().all(|rec| rec.ledger.records.is_empty()) {
            continue;
        }
        let path = dir.join(format!("ledger_{}.csv", r.label));
        let file = fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "iteration,direction,raw_bits,huffman_bits")?;
        for record in &r.records {
            for msg in &record.ledger.records {
                let dir_name = match msg.direction {
                    Direction::ApToCpu => "ap_to_cpu",
                    Direction::CpuToAp => "cpu_to_ap",
                };
                writeln!(
                    w,
                    "{},{},{},{}",
                    msg.iteration, dir_name, msg.raw_bits, msg.huffman_bits
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AlgoSummaryJson {
    algorithm: String,
    equal_error_gamma: f64,
    p_err: f64,
    equal_error_degenerate: bool,
    mean_iters: f64,
    raw_bits: f64,
    huffman_bits: f64,
    trials_ok: usize,
    trials_failed: usize,
}

#[derive(Serialize)]
struct PointSummaryJson {
    tag: String,
    digest: String,
    algorithms: Vec<AlgoSummaryJson>,
}

#[derive(Serialize)]
struct MetaJson {
    /// Non-deterministic run metadata, isolated here so the rest of the
    /// summary is reproducible byte for byte.
    timestamp_unix_ms: u128,
    total_wall_ms: f64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    schema_version: u32,
    spec: &'a crate::experiment::ExperimentSpec,
    points: Vec<PointSummaryJson>,
    meta: MetaJson,
}

pub fn write_summary_json(
    out_dir: &Path,
    spec: &crate::experiment::ExperimentSpec,
    results: &[(SweepPoint, Vec<AlgoReport>)],
    total_wall_ms: f64,
) -> Result<()> {
    let points = results
        .iter()
        .map(|(point, reports)| PointSummaryJson {
            tag: point.tag.clone(),
            digest: point.digest.clone(),
            algorithms: reports
                .iter()
                .map(|r| AlgoSummaryJson {
                    algorithm: r.label.clone(),
                    equal_error_gamma: r.equal_error.gamma,
                    p_err: r.equal_error.p_err,
                    equal_error_degenerate: r.equal_error.degenerate,
                    mean_iters: r.mean_iterations,
                    raw_bits: r.mean_raw_bits,
                    huffman_bits: r.mean_huffman_bits,
                    trials_ok: r.trials_ok,
                    trials_failed: r.trials_failed,
                })
                .collect(),
        })
        .collect();
    let summary = SummaryJson {
        schema_version: crate::experiment::SCHEMA_VERSION,
        spec,
        points,
        meta: MetaJson {
            timestamp_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            total_wall_ms,
        },
    };
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(out_dir.join("summary.json"), text).context("writing summary.json")
}

/// Write all per-point artifacts; returns the point's output directory.
pub fn write_point(
    out_dir: &Path,
    point: &SweepPoint,
    reports: &[AlgoReport],
    single_point: bool,
    emit_traces: bool,
) -> Result<std::path::PathBuf> {
    let dir = if single_point {
        out_dir.to_path_buf()
    } else {
        out_dir.join(&point.tag)
    };
    fs::create_dir_all(&dir)?;
    write_roc(&dir, reports)?;
    write_summary_csv(&dir, reports)?;
    if emit_traces {
        write_trace(&dir, reports)?;
    }
    write_ledgers(&dir, reports)?;
    Ok(dir)
}
