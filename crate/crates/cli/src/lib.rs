//! Experiment harness around `asyncact-core`: JSON experiment specs with
//! figure presets, a rayon-parallel Monte-Carlo runner, CSV/JSON report
//! writers, and the serialization layout used for oracle cross-checking.

pub mod experiment;
pub mod io;
pub mod report;
pub mod runner;

use std::path::Path;

use anyhow::{Context, Result};

pub use experiment::{preset, preset_names, ExperimentSpec};

/// Load and validate a spec file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading spec {}", path.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| {
        anyhow::anyhow!(
            "malformed spec JSON at line {} column {}: {e}",
            e.line(),
            e.column()
        )
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Execute a validated spec: run every sweep point, write reports, print a
/// one-line digest per point. Returns the number of (algorithm, point)
/// combinations that had trial failures.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("spec.json"),
        serde_json::to_string_pretty(spec)?,
    )?;

    let points = spec.sweep_points()?;
    let single = points.len() == 1;
    let started = std::time::Instant::now();
    let mut results = Vec::new();
    let mut failures = 0usize;

    for point in points {
        let reports = runner::run_point(&point, spec.trials as u64, spec.gamma_grid);
        report::write_point(out_dir, &point, &reports, single, spec.emit_traces)?;
        for r in &reports {
            let flag = if r.equal_error.degenerate { "*" } else { "" };
            println!(
                "{:<14} {:<10} p_err={:.4}{} gamma={:.4} iters={:.1} bits={:.0}",
                point.tag,
                r.label,
                r.equal_error.p_err,
                flag,
                r.equal_error.gamma,
                r.mean_iterations,
                r.mean_raw_bits
            );
            if r.trials_failed > 0 {
                failures += 1;
                eprintln!(
                    "warning: {} failed on {}/{} trials at {}",
                    r.label,
                    r.trials_failed,
                    r.trials_failed + r.trials_ok,
                    point.tag
                );
            }
        }
        results.push((point, reports));
    }

    report::write_summary_json(
        out_dir,
        spec,
        &results,
        started.elapsed().as_secs_f64() * 1e3,
    )?;
    Ok(failures)
}
