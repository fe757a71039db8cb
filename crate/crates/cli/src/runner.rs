//! Parallel Monte-Carlo evaluation: per trial, synthesize one realization,
//! run every requested detector on the identical data, and pool the
//! per-device outcomes. Results are deterministic for a fixed seed no matter
//! how many workers run the trials.

use std::time::Instant;

use asyncact_core::admm::{solve_accelerated, solve_admm, FronthaulPair};
use asyncact_core::baselines::{bcd_solve, cde_solve};
use asyncact_core::config::SystemConfig;
use asyncact_core::detect::{
    equal_error_rate, DetectionPool, DeviceOutcome, EqualError, RocPoint,
};
use asyncact_core::fronthaul::{
    quantize_covariance, quantize_signal, BitLedger, Direction,
};
use asyncact_core::likelihood::SoftActivity;
use asyncact_core::proximal;
use asyncact_core::scenario::{
    generate_scenario, synthesize_received, trial_seed, ReceivedData,
};
use asyncact_core::CMat;
use rayon::prelude::*;

use crate::experiment::{AlgorithmId, AlgorithmSpec, SweepPoint};

/// Uniform per-iteration trace row shared by all detector kinds.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    /// Step size for the centralized solver, consensus residual for the
    /// distributed ones, sweep change for the reference detectors.
    pub residual: f64,
}

struct AlgoRun {
    soft: SoftActivity,
    iterations: usize,
    ledger: BitLedger,
    trace: Vec<TraceRow>,
}

/// Quantize each AP's forwarded statistic for centralized detection: the
/// covariance when it is the smaller object (L+T <= 2N), the raw block
/// otherwise.
pub fn quantize_received(
    data: &ReceivedData,
    bits: u32,
    ledger: &mut BitLedger,
) -> Vec<CMat> {
    let p = &data.problem;
    let rows = p.eff_len();
    let mut targets = Vec::with_capacity(p.num_aps);
    for m in 0..p.num_aps {
        if rows <= 2 * p.antennas_per_ap {
            let payload = quantize_covariance(&data.sample_cov[m], bits);
            ledger.push_message(0, Direction::ApToCpu, &payload.symbols, bits);
            targets.push(payload.recon);
        } else {
            let payload = quantize_signal(&data.y[m], bits);
            ledger.push_message(0, Direction::ApToCpu, &payload.symbols, bits);
            targets.push(CMat::gram_rows(
                rows,
                p.antennas_per_ap,
                &payload.recon,
                1.0 / p.antennas_per_ap as f64,
            ));
        }
    }
    targets
}

fn run_algorithm(spec: &AlgorithmSpec, data: &ReceivedData) -> Result<AlgoRun, String> {
    let problem = &data.problem;
    match spec.algorithm {
        AlgorithmId::Alg1 => {
            let opts = spec.solve.solve_options();
            let mut ledger = BitLedger::new();
            let targets = match &spec.fronthaul {
                Some(f) => quantize_received(data, f.bits, &mut ledger),
                None => data.sample_cov.clone(),
            };
            let r = proximal::solve(problem, &targets, &opts).map_err(|e| e.to_string())?;
            Ok(AlgoRun {
                soft: r.soft,
                iterations: r.iterations,
                ledger,
                trace: r
                    .trace
                    .iter()
                    .map(|t| TraceRow {
                        iter: t.iter,
                        objective: t.objective,
                        residual: t.linf_change,
                    })
                    .collect(),
            })
        }
        AlgorithmId::Alg2 => {
            let opts = spec.solve.consensus_options();
            let r = solve_admm(problem, &data.sample_cov, &opts).map_err(|e| e.to_string())?;
            Ok(AlgoRun {
                soft: r.soft,
                iterations: r.iterations,
                ledger: BitLedger::new(),
                trace: r
                    .trace
                    .iter()
                    .map(|t| TraceRow {
                        iter: t.iter,
                        objective: t.objective,
                        residual: t.consensus_residual,
                    })
                    .collect(),
            })
        }
        AlgorithmId::Alg3 => {
            let opts = spec.solve.consensus_options();
            let pair = spec.fronthaul.as_ref().map(|f| FronthaulPair::unit(f.bits));
            let (r, ledger) = solve_accelerated(problem, &data.sample_cov, &opts, pair.as_ref())
                .map_err(|e| e.to_string())?;
            Ok(AlgoRun {
                soft: r.soft,
                iterations: r.iterations,
                ledger,
                trace: r
                    .trace
                    .iter()
                    .map(|t| TraceRow {
                        iter: t.iter,
                        objective: t.objective,
                        residual: t.consensus_residual,
                    })
                    .collect(),
            })
        }
        AlgorithmId::Cde | AlgorithmId::Bcd => {
            let opts = spec.solve.solve_options();
            let r = if spec.algorithm == AlgorithmId::Cde {
                cde_solve(problem, &data.sample_cov, &opts)
            } else {
                bcd_solve(problem, &data.sample_cov, &opts)
            }
            .map_err(|e| e.to_string())?;
            Ok(AlgoRun {
                soft: r.soft,
                iterations: r.sweeps,
                ledger: BitLedger::new(),
                trace: r
                    .trace
                    .iter()
                    .map(|t| TraceRow {
                        iter: t.iter,
                        objective: t.objective,
                        residual: t.max_change,
                    })
                    .collect(),
            })
        }
    }
}

/// One algorithm's result on one trial.
pub struct TrialRecord {
    pub trial: u64,
    pub outcomes: Vec<DeviceOutcome>,
    pub iterations: usize,
    pub wall_ms: f64,
    pub ledger: BitLedger,
    pub trace: Vec<TraceRow>,
}

/// Aggregated Monte-Carlo report of one algorithm at one sweep point.
pub struct AlgoReport {
    pub label: String,
    pub pool: DetectionPool,
    pub roc: Vec<RocPoint>,
    pub equal_error: EqualError,
    pub mean_iterations: f64,
    pub mean_raw_bits: f64,
    pub mean_huffman_bits: f64,
    pub mean_wall_ms: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub records: Vec<TrialRecord>,
}

/// Run every algorithm over `trials` independent realizations.
pub fn run_monte_carlo(
    config: &SystemConfig,
    algorithms: &[AlgorithmSpec],
    trials: u64,
    gamma_grid: usize,
) -> Vec<AlgoReport> {
    let per_trial: Vec<Vec<Result<(TrialRecord, Vec<bool>), String>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.rng_seed, t);
            let scenario = generate_scenario(config, seed);
            let data = synthesize_received(&scenario, config, seed);
            algorithms
                .iter()
                .map(|spec| {
                    let start = Instant::now();
                    run_algorithm(spec, &data).map(|run| {
                        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                        let outcomes =
                            asyncact_core::detect::device_outcomes(&run.soft, &scenario.truth);
                        (
                            TrialRecord {
                                trial: t,
                                outcomes,
                                iterations: run.iterations,
                                wall_ms,
                                ledger: run.ledger,
                                trace: run.trace,
                            },
                            scenario.truth.clone(),
                        )
                    })
                })
                .collect()
        })
        .collect();

    let grid: Vec<f64> = (0..gamma_grid)
        .map(|i| i as f64 / (gamma_grid - 1) as f64)
        .collect();

    algorithms
        .iter()
        .enumerate()
        .map(|(ai, spec)| {
            let mut pool = DetectionPool::new();
            let mut records = Vec::new();
            let mut failed = 0usize;
            let mut iters = 0.0;
            let mut raw_bits = 0.0;
            let mut huff_bits = 0.0;
            let mut wall = 0.0;
            for trial_rows in &per_trial {
                match &trial_rows[ai] {
                    Ok((record, _truth)) => {
                        pool.push_outcomes(&record.outcomes);
                        iters += record.iterations as f64;
                        raw_bits += record.ledger.raw_total() as f64;
                        huff_bits += record.ledger.huffman_total() as f64;
                        wall += record.wall_ms;
                        records.push(TrialRecord {
                            trial: record.trial,
                            outcomes: record.outcomes.clone(),
                            iterations: record.iterations,
                            wall_ms: record.wall_ms,
                            ledger: record.ledger.clone(),
                            trace: record.trace.clone(),
                        });
                    }
                    Err(_) => failed += 1,
                }
            }
            let ok = records.len();
            let denom = ok.max(1) as f64;
            let roc = pool.roc(&grid);
            let equal_error = equal_error_rate(&pool);
            AlgoReport {
                label: spec.label(),
                pool,
                roc,
                equal_error,
                mean_iterations: iters / denom,
                mean_raw_bits: raw_bits / denom,
                mean_huffman_bits: huff_bits / denom,
                mean_wall_ms: wall / denom,
                trials_ok: ok,
                trials_failed: failed,
                records,
            }
        })
        .collect()
}

/// Run one resolved sweep point.
pub fn run_point(point: &SweepPoint, trials: u64, gamma_grid: usize) -> Vec<AlgoReport> {
    run_monte_carlo(&point.config, &point.algorithms, trials, gamma_grid)
}
