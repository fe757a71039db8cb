//! Consensus solvers: the CPU keeps a global soft-activity vector, every AP
//! keeps an unconstrained local copy tied to it by dual variables.
//!
//! One outer iteration is: APs send their local state up, the CPU solves its
//! block subproblem in closed form (or, in the accelerated variant, runs the
//! proximal machinery against model covariances built from the local
//! detections), the result is broadcast, each AP re-optimizes its copy by
//! exact coordinate descent on the augmented local cost, and finishes with a
//! dual ascent step. The optional fronthaul pair quantizes both directions
//! and feeds the bit ledger.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{CdStop, ConsensusOptions, NumericsConfig, SolveOptions};
use crate::fronthaul::{quantize, BitLedger, Direction, QuantizerSpec};
use crate::likelihood::{self, CovCache, Problem, SoftActivity};
use crate::linalg::{CMat, LinalgError};
use crate::math;
use crate::proximal::{self, prox_block_update, ProxResult};

/// Scalar coefficients of one coordinate subproblem at one AP:
/// `phi(u) = log(1 + xi1 u) - xi2 u / (1 + xi1 u)
///           + lambda (u - b) + mu/2 (u - b)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub xi1: f64,
    pub xi2: f64,
    pub lambda: f64,
    pub mu: f64,
    pub b_target: f64,
}

impl CubicCoeffs {
    /// Polynomial coefficients (cubic..constant) of the stationarity
    /// condition `(1+xi1 u) xi1 - xi2 + lambda (1+xi1 u)^2
    /// + mu (u - b)(1+xi1 u)^2 = 0`.
    pub fn polynomial(&self) -> [f64; 4] {
        let CubicCoeffs {
            xi1,
            xi2,
            lambda,
            mu,
            b_target: b,
        } = *self;
        [
            mu * xi1 * xi1,
            lambda * xi1 * xi1 + mu * (2.0 * xi1 - b * xi1 * xi1),
            xi1 * xi1 + 2.0 * lambda * xi1 + mu * (1.0 - 2.0 * b * xi1),
            xi1 - xi2 + lambda - mu * b,
        ]
    }

    /// Objective value; +inf outside the log domain.
    pub fn objective(&self, u: f64) -> f64 {
        let denom = 1.0 + self.xi1 * u;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        let d = u - self.b_target;
        math::ln(denom) - self.xi2 * u / denom + self.lambda * d + 0.5 * self.mu * d * d
    }
}

fn polish_root(c: &[f64; 4], mut u: f64) -> f64 {
    for _ in 0..3 {
        let f = ((c[0] * u + c[1]) * u + c[2]) * u + c[3];
        let df = (3.0 * c[0] * u + 2.0 * c[1]) * u + c[2];
        if df.abs() < 1e-300 {
            break;
        }
        let next = u - f / df;
        if !next.is_finite() {
            break;
        }
        u = next;
    }
    u
}

fn linear_roots(a1: f64, a0: f64, scale: f64) -> Vec<f64> {
    if a1.abs() <= 1e-14 * scale {
        Vec::new()
    } else {
        vec![-a0 / a1]
    }
}

fn quadratic_roots(a2: f64, a1: f64, a0: f64, scale: f64) -> Vec<f64> {
    if a2.abs() <= 1e-14 * scale {
        return linear_roots(a1, a0, scale);
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = math::sqrt(disc);
    let q = -0.5 * (a1 + a1.signum() * sq);
    let mut roots = Vec::new();
    if q != 0.0 {
        roots.push(q / a2);
        roots.push(a0 / q);
    } else {
        roots.push(0.0);
    }
    roots
}

/// Real roots of `c0 u^3 + c1 u^2 + c2 u + c3`, Cardano with a guarded
/// discriminant and a degenerate-leading-coefficient fallback, polished by a
/// few Newton steps.
pub fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut roots = if c[0].abs() <= 1e-14 * scale {
        quadratic_roots(c[1], c[2], c[3], scale)
    } else {
        let p = c[1] / c[0];
        let q = c[2] / c[0];
        let r = c[3] / c[0];
        // depressed cubic y^3 + a y + b with u = y - p/3
        let a = q - p * p / 3.0;
        let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
        let disc = 0.25 * b * b + a * a * a / 27.0;
        let shift = -p / 3.0;
        let mut ys = Vec::new();
        if disc > 0.0 {
            let sq = math::sqrt(disc);
            ys.push(math::cbrt(-0.5 * b + sq) + math::cbrt(-0.5 * b - sq));
        } else if a >= 0.0 {
            // only possible as the degenerate triple root
            ys.push(0.0);
        } else {
            let m = 2.0 * math::sqrt(-a / 3.0);
            let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
            let theta = math::acos(arg) / 3.0;
            for k in 0..3 {
                ys.push(m * math::cos(theta - 2.0 * core::f64::consts::PI * k as f64 / 3.0));
            }
        }
        ys.into_iter().map(|y| y + shift).collect()
    };
    for u in roots.iter_mut() {
        *u = polish_root(&c, *u);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs()));
    roots
}

/// Stationary points of the coordinate subproblem, filtered to the PD
/// feasible region `1 + xi1 u > pd_tol`.
pub fn cubic_stationary_points(coeffs: &CubicCoeffs, pd_tol: f64) -> Vec<f64> {
    real_cubic_roots(coeffs.polynomial())
        .into_iter()
        .filter(|u| u.is_finite() && 1.0 + coeffs.xi1 * u > pd_tol)
        .collect()
}

/// Closed-form global update: shrink towards the dual-weighted average of
/// the local copies, then lift each block's argmax before projecting.
pub fn consensus_b_update(
    b_prev: &[f64],
    xs: &[&[f64]],
    lambdas: &[&[f64]],
    mu: f64,
    delta: f64,
    rho: f64,
    block_len: usize,
) -> Vec<f64> {
    let m = xs.len();
    let denom = delta + m as f64 * mu;
    let shift = rho / denom;
    let mut out = Vec::with_capacity(b_prev.len());
    let mut beta = vec![0.0f64; block_len];
    for (kb, block) in b_prev.chunks_exact(block_len).enumerate() {
        for (t, prev) in block.iter().enumerate() {
            let i = kb * block_len + t;
            let mut acc = delta * prev - rho;
            for mi in 0..m {
                acc += mu * xs[mi][i] + lambdas[mi][i];
            }
            beta[t] = acc / denom;
        }
        out.extend(prox_block_update(&beta, shift));
    }
    out
}

/// Dual ascent: `lambda += mu (x - b)`.
pub fn dual_update(lambda: &mut [f64], x: &[f64], b: &[f64], mu: f64) {
    for i in 0..lambda.len() {
        lambda[i] += mu * (x[i] - b[i]);
    }
}

/// What one AP optimizes against during a sweep.
enum CdMode<'a> {
    /// Augmented local cost with consensus terms; x is unconstrained.
    Consensus {
        b: &'a [f64],
        lambda: &'a [f64],
        mu: f64,
    },
    /// Plain local detection on the box [0,1].
    BoxDetect,
}

struct SweepOutcome {
    max_change: f64,
    pd_rejects: usize,
}

/// One full coordinate pass in fixed (k ascending, t ascending) order. Each
/// coordinate is removed from the maintained inverse, its scalar subproblem
/// solved exactly, and the winner written back; candidates that would break
/// positive definiteness are rejected in favor of the previous value.
fn cd_sweep(
    problem: &Problem,
    target: &CMat,
    cache: &mut CovCache,
    mode: &CdMode<'_>,
    pd_tol: f64,
) -> Result<SweepOutcome, LinalgError> {
    let mut max_change = 0.0f64;
    let mut pd_rejects = 0usize;
    let m = cache.ap();

    for idx in 0..problem.indicator_len() {
        let (k, t) = problem.split_index(idx);
        let coeff = problem.coeff(k, m);
        let v_old = cache.values()[idx];

        if cache.set_coord(problem, idx, 0.0).is_err() {
            cache.refresh(problem)?;
            if cache.set_coord(problem, idx, 0.0).is_err() {
                pd_rejects += 1;
                continue;
            }
        }
        let sig = problem.signature(k);
        let w = cache.inverse().matvec_window(sig, t);
        let mut sh_w = 0.0f64;
        for (i, si) in sig.iter().enumerate() {
            sh_w += (si.conj() * w[t + i]).re;
        }
        let xi1 = coeff * sh_w;
        let xi2 = coeff * target.quad_form(&w);

        let mut candidates: Vec<f64> = Vec::with_capacity(6);
        let coeffs = match mode {
            CdMode::Consensus { b, lambda, mu } => CubicCoeffs {
                xi1,
                xi2,
                lambda: lambda[idx],
                mu: *mu,
                b_target: b[idx],
            },
            CdMode::BoxDetect => CubicCoeffs {
                xi1,
                xi2,
                lambda: 0.0,
                mu: 0.0,
                b_target: 0.0,
            },
        };
        match mode {
            CdMode::Consensus { .. } => {
                candidates.extend(cubic_stationary_points(&coeffs, pd_tol));
            }
            CdMode::BoxDetect => {
                candidates.push(0.0);
                candidates.push(1.0);
                for u in cubic_stationary_points(&coeffs, pd_tol) {
                    candidates.push(u.clamp(0.0, 1.0));
                }
            }
        }
        candidates.push(v_old);

        let mut ranked: Vec<(f64, f64)> = candidates
            .into_iter()
            .filter(|u| 1.0 + xi1 * u > pd_tol)
            .map(|u| (coeffs.objective(u), u))
            .filter(|(phi, _)| phi.is_finite())
            .collect();
        ranked.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut committed = false;
        for &(_, u) in &ranked {
            if cache.set_coord(problem, idx, u).is_ok() {
                max_change = max_change.max((u - v_old).abs());
                committed = true;
                break;
            }
        }
        if !committed {
            // fall back to the previous value; its covariance was PD, so a
            // forced rebuild restores it even when the rank-1 denominator
            // check would refuse
            cache.force_coord(problem, idx, v_old)?;
            pd_rejects += 1;
        }
    }
    Ok(SweepOutcome {
        max_change,
        pd_rejects,
    })
}

/// Result of solving one AP's augmented subproblem.
pub struct LocalSolveInfo {
    pub sweeps: usize,
    /// Sup-norm of `grad f + lambda + mu (x - b)` at the final iterate.
    pub residual: f64,
    pub pd_rejects: usize,
    /// Local-cost gradient at the final iterate.
    pub gradient: Vec<f64>,
}

/// Exact local update: coordinate sweeps until the first-order optimality
/// residual of the augmented local cost drops below tolerance (or the sweep
/// cap), so the subsequent dual ascent lands on `lambda = -grad f` up to
/// that residual.
pub fn local_solve(
    problem: &Problem,
    target: &CMat,
    cache: &mut CovCache,
    b: &[f64],
    lambda: &[f64],
    mu: f64,
    stop: &CdStop,
    pd_tol: f64,
) -> Result<LocalSolveInfo, LinalgError> {
    let mode = CdMode::Consensus { b, lambda, mu };
    let mut sweeps = 0;
    let mut pd_rejects = 0;
    let mut best_residual = f64::INFINITY;
    let mut stalled_sweeps = 0;
    loop {
        let outcome = cd_sweep(problem, target, cache, &mode, pd_tol)?;
        sweeps += 1;
        pd_rejects += outcome.pd_rejects;
        let gradient = likelihood::local_gradient(problem, cache.ap(), target, cache.values())?;
        let mut residual = 0.0f64;
        for i in 0..gradient.len() {
            residual = residual
                .max((gradient[i] + lambda[i] + mu * (cache.values()[i] - b[i])).abs());
        }
        // Coordinates whose minimizer sits inside the PD margin are kept at
        // their previous value, which can pin the residual; stop burning
        // sweeps once it has made no real progress for a while.
        if residual < best_residual * 0.99 {
            best_residual = residual;
            stalled_sweeps = 0;
        } else {
            stalled_sweeps += 1;
        }
        if residual <= stop.residual_tol || sweeps >= stop.max_sweeps || stalled_sweeps >= 15 {
            return Ok(LocalSolveInfo {
                sweeps,
                residual,
                pd_rejects,
                gradient,
            });
        }
    }
}

/// Box-constrained local detection used to initialize the local copies:
/// coordinate descent on the plain local cost with clipped closed-form
/// candidates and the box endpoints.
pub fn local_detect_init(
    problem: &Problem,
    m: usize,
    target: &CMat,
    numerics: &NumericsConfig,
    stop: &CdStop,
) -> Result<Vec<f64>, LinalgError> {
    let mut cache = CovCache::new(
        problem,
        m,
        vec![0.0; problem.indicator_len()],
        *numerics,
    )?;
    for _ in 0..stop.max_sweeps {
        let outcome = cd_sweep(problem, target, &mut cache, &CdMode::BoxDetect, numerics.pd_tol)?;
        if outcome.max_change < stop.residual_tol {
            break;
        }
    }
    Ok(cache.values().to_vec())
}

/// Augmented Lagrangian value of the consensus problem.
pub fn augmented_lagrangian(
    problem: &Problem,
    targets: &[CMat],
    xs: &[&[f64]],
    b: &[f64],
    lambdas: &[&[f64]],
    mu: f64,
    rho: f64,
) -> Result<f64, LinalgError> {
    let mut acc = likelihood::block_penalty(b, problem.block_len(), rho);
    for m in 0..problem.num_aps {
        let c = problem.covariance(xs[m], m);
        let chol = c.cholesky()?;
        acc += chol.log_det() + chol.trace_solve_re(&targets[m]);
        let mut linear = 0.0;
        let mut quad = 0.0;
        for i in 0..b.len() {
            let d = xs[m][i] - b[i];
            linear += lambdas[m][i] * d;
            quad += d * d;
        }
        acc += linear + 0.5 * mu * quad;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusTraceRow {
    pub iter: usize,
    pub lagrangian: f64,
    /// max_m || x_m - b ||_inf after the AP phase.
    pub consensus_residual: f64,
    /// Penalized objective at the global iterate.
    pub objective: f64,
    /// max_m || grad f_m + lambda_m ||_inf after dual ascent.
    pub dual_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ConsensusResult {
    pub soft: SoftActivity,
    pub trace: Vec<ConsensusTraceRow>,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations on which the augmented Lagrangian went up (logged, not
    /// fatal: the tuned consensus penalty is not checked against the proof
    /// condition).
    pub lagrangian_increases: usize,
    /// Largest observed ||grad change|| / ||x change|| across APs.
    pub curvature_estimate: f64,
    pub max_dual_residual: f64,
    pub pd_rejects: usize,
}

struct ApWorker {
    cache: CovCache,
    lambda: Vec<f64>,
    prev_x: Vec<f64>,
    prev_grad: Option<Vec<f64>>,
}

fn init_workers(
    problem: &Problem,
    targets: &[CMat],
    opts: &ConsensusOptions,
) -> Result<Vec<ApWorker>, LinalgError> {
    (0..problem.num_aps)
        .map(|m| {
            let x0 = local_detect_init(problem, m, &targets[m], &opts.numerics, &opts.init_cd)?;
            Ok(ApWorker {
                cache: CovCache::new(problem, m, x0.clone(), opts.numerics)?,
                lambda: vec![0.0; problem.indicator_len()],
                prev_x: x0,
                prev_grad: None,
            })
        })
        .collect()
}

fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum(),
    )
}

/// Consensus ADMM with exact per-AP updates.
pub fn solve_admm(
    problem: &Problem,
    targets: &[CMat],
    opts: &ConsensusOptions,
) -> Result<ConsensusResult, LinalgError> {
    let len = problem.indicator_len();
    let mut b = vec![0.0f64; len];
    let mut workers = init_workers(problem, targets, opts)?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut lagrangian_increases = 0;
    let mut prev_lagrangian = f64::INFINITY;
    let mut curvature = 0.0f64;
    let mut max_dual_residual = 0.0f64;
    let mut pd_rejects = 0usize;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let b_new = {
            let xs: Vec<&[f64]> = workers.iter().map(|w| w.cache.values()).collect();
            let ls: Vec<&[f64]> = workers.iter().map(|w| w.lambda.as_slice()).collect();
            consensus_b_update(
                &b,
                &xs,
                &ls,
                opts.mu,
                opts.delta,
                opts.rho,
                problem.block_len(),
            )
        };
        let db = linf_diff(&b_new, &b);

        let mut dx_max = 0.0f64;
        let mut dual_residual = 0.0f64;
        for (m, w) in workers.iter_mut().enumerate() {
            let info = local_solve(
                problem,
                &targets[m],
                &mut w.cache,
                &b_new,
                &w.lambda,
                opts.mu,
                &opts.local_cd,
                opts.numerics.pd_tol,
            )?;
            dual_update(&mut w.lambda, w.cache.values(), &b_new, opts.mu);
            pd_rejects += info.pd_rejects;
            dual_residual = dual_residual.max(info.residual);

            let x = w.cache.values();
            dx_max = dx_max.max(linf_diff(x, &w.prev_x));
            if let Some(pg) = &w.prev_grad {
                let dxn = l2_diff(x, &w.prev_x);
                if dxn > 1e-12 {
                    curvature = curvature.max(l2_diff(&info.gradient, pg) / dxn);
                }
            }
            w.prev_x = x.to_vec();
            w.prev_grad = Some(info.gradient);
        }
        max_dual_residual = max_dual_residual.max(dual_residual);

        let (lagrangian, consensus_residual) = {
            let xs: Vec<&[f64]> = workers.iter().map(|w| w.cache.values()).collect();
            let ls: Vec<&[f64]> = workers.iter().map(|w| w.lambda.as_slice()).collect();
            let lag =
                augmented_lagrangian(problem, targets, &xs, &b_new, &ls, opts.mu, opts.rho)?;
            let res = xs
                .iter()
                .map(|x| linf_diff(x, &b_new))
                .fold(0.0f64, f64::max);
            (lag, res)
        };
        if lagrangian > prev_lagrangian + 1e-9 * prev_lagrangian.abs().max(1.0) {
            lagrangian_increases += 1;
        }
        prev_lagrangian = lagrangian;

        let objective = likelihood::penalized_cost(problem, targets, &b_new, opts.rho)?;
        trace.push(ConsensusTraceRow {
            iter: iterations,
            lagrangian,
            consensus_residual,
            objective,
            dual_residual,
        });

        b = b_new;
        if db.max(dx_max) < opts.tol_step {
            converged = true;
            break;
        }
    }

    Ok(ConsensusResult {
        soft: SoftActivity::new(b, problem.block_len()),
        trace,
        iterations,
        converged,
        lagrangian_increases,
        curvature_estimate: curvature,
        max_dual_residual,
        pd_rejects,
    })
}

/// Quantizers for the two fronthaul directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FronthaulPair {
    pub uplink: QuantizerSpec,
    pub downlink: QuantizerSpec,
}

impl FronthaulPair {
    /// Same bit width both ways over the [0,1] dynamic range of the
    /// exchanged detection vectors.
    pub fn unit(bits: u32) -> Self {
        Self {
            uplink: QuantizerSpec::unit(bits),
            downlink: QuantizerSpec::unit(bits),
        }
    }
}

fn inner_solve_options(opts: &ConsensusOptions) -> SolveOptions {
    SolveOptions {
        rho: opts.rho,
        max_iters: opts.inner_max_iters,
        tol_step: opts.inner_tol,
        backtrack_factor: 0.5,
        max_backtracks: 30,
        numerics: opts.numerics,
    }
}

/// The accelerated global update: run the proximal machinery against the
/// model covariances built from the (possibly dequantized) local copies,
/// warm-started at the current global iterate.
pub fn accelerated_b_update(
    problem: &Problem,
    local_targets: &[CMat],
    warm: Vec<f64>,
    opts: &ConsensusOptions,
) -> Result<ProxResult, LinalgError> {
    proximal::solve_from(problem, local_targets, &inner_solve_options(opts), warm)
}

/// Accelerated consensus detection with optional fronthaul quantization.
///
/// Per iteration the APs upload their local copies (quantized when a
/// fronthaul is configured), the CPU rebuilds per-AP covariance targets and
/// refines the global iterate, and only if another iteration follows does it
/// broadcast back; the final answer is the CPU's last global iterate, so the
/// closing broadcast is never sent.
pub fn solve_accelerated(
    problem: &Problem,
    targets: &[CMat],
    opts: &ConsensusOptions,
    fronthaul: Option<&FronthaulPair>,
) -> Result<(ConsensusResult, BitLedger), LinalgError> {
    let len = problem.indicator_len();
    let mut b = vec![0.0f64; len];
    let mut workers = init_workers(problem, targets, opts)?;
    let mut ledger = BitLedger::new();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut lagrangian_increases = 0;
    let mut prev_lagrangian = f64::INFINITY;
    let mut curvature = 0.0f64;
    let mut max_dual_residual = 0.0f64;
    let mut last_dual_residual = 0.0f64;
    let mut pd_rejects = 0usize;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;

        // Uplink: local copies, quantized on a capacity-limited fronthaul.
        let mut local_targets = Vec::with_capacity(problem.num_aps);
        for (m, w) in workers.iter().enumerate() {
            let x_hat = match fronthaul {
                Some(pair) => {
                    let (symbols, recon) = quantize(w.cache.values(), &pair.uplink);
                    ledger.push_message(
                        iterations,
                        Direction::ApToCpu,
                        &symbols,
                        pair.uplink.bits,
                    );
                    recon
                }
                None => w.cache.values().to_vec(),
            };
            local_targets.push(problem.covariance(&x_hat, m));
        }

        let inner = accelerated_b_update(problem, &local_targets, b.clone(), opts)?;
        let b_new = inner.soft.into_values();
        let db = linf_diff(&b_new, &b);
        b = b_new;

        let stopping = db < opts.tol_step || iterations == opts.max_iters;
        if stopping {
            let (lagrangian, consensus_residual, objective) =
                accel_diagnostics(problem, targets, &workers, &b, opts)?;
            if lagrangian > prev_lagrangian + 1e-9 * prev_lagrangian.abs().max(1.0) {
                lagrangian_increases += 1;
            }
            trace.push(ConsensusTraceRow {
                iter: iterations,
                lagrangian,
                consensus_residual,
                objective,
                dual_residual: last_dual_residual,
            });
            converged = db < opts.tol_step;
            break;
        }

        // Downlink: one quantized broadcast per AP.
        let b_at_aps = match fronthaul {
            Some(pair) => {
                let (symbols, recon) = quantize(&b, &pair.downlink);
                for _ in 0..problem.num_aps {
                    ledger.push_message(
                        iterations,
                        Direction::CpuToAp,
                        &symbols,
                        pair.downlink.bits,
                    );
                }
                recon
            }
            None => b.clone(),
        };

        let mut dual_residual = 0.0f64;
        for (m, w) in workers.iter_mut().enumerate() {
            let info = local_solve(
                problem,
                &targets[m],
                &mut w.cache,
                &b_at_aps,
                &w.lambda,
                opts.mu,
                &opts.local_cd,
                opts.numerics.pd_tol,
            )?;
            dual_update(&mut w.lambda, w.cache.values(), &b_at_aps, opts.mu);
            pd_rejects += info.pd_rejects;
            dual_residual = dual_residual.max(info.residual);
            let x = w.cache.values();
            if let Some(pg) = &w.prev_grad {
                let dxn = l2_diff(x, &w.prev_x);
                if dxn > 1e-12 {
                    curvature = curvature.max(l2_diff(&info.gradient, pg) / dxn);
                }
            }
            w.prev_x = x.to_vec();
            w.prev_grad = Some(info.gradient);
        }
        max_dual_residual = max_dual_residual.max(dual_residual);
        last_dual_residual = dual_residual;

        let (lagrangian, consensus_residual, objective) =
            accel_diagnostics(problem, targets, &workers, &b, opts)?;
        if lagrangian > prev_lagrangian + 1e-9 * prev_lagrangian.abs().max(1.0) {
            lagrangian_increases += 1;
        }
        prev_lagrangian = lagrangian;
        trace.push(ConsensusTraceRow {
            iter: iterations,
            lagrangian,
            consensus_residual,
            objective,
            dual_residual,
        });
    }

    Ok((
        ConsensusResult {
            soft: SoftActivity::new(b, problem.block_len()),
            trace,
            iterations,
            converged,
            lagrangian_increases,
            curvature_estimate: curvature,
            max_dual_residual,
            pd_rejects,
        },
        ledger,
    ))
}

fn accel_diagnostics(
    problem: &Problem,
    targets: &[CMat],
    workers: &[ApWorker],
    b: &[f64],
    opts: &ConsensusOptions,
) -> Result<(f64, f64, f64), LinalgError> {
    let xs: Vec<&[f64]> = workers.iter().map(|w| w.cache.values()).collect();
    let ls: Vec<&[f64]> = workers.iter().map(|w| w.lambda.as_slice()).collect();
    let lagrangian = augmented_lagrangian(problem, targets, &xs, b, &ls, opts.mu, opts.rho)?;
    let consensus_residual = xs.iter().map(|x| linf_diff(x, b)).fold(0.0f64, f64::max);
    let objective = likelihood::penalized_cost(problem, targets, b, opts.rho)?;
    Ok((lagrangian, consensus_residual, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::scenario::{generate_scenario, synthesize_received};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng as StdRng;

    #[test]
    fn cubic_single_cell_closed_form() {
        // lambda = 0, mu = 0, xi1 = 1, xi2 = 3 -> u = (xi2 - xi1)/xi1^2 = 2
        let c = CubicCoeffs {
            xi1: 1.0,
            xi2: 3.0,
            lambda: 0.0,
            mu: 0.0,
            b_target: 0.0,
        };
        let roots = cubic_stationary_points(&c, 1e-12);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_xi1_zero_linear_case() {
        // xi1 = 0 -> u = b + (xi2 - lambda)/mu
        let c = CubicCoeffs {
            xi1: 0.0,
            xi2: 0.7,
            lambda: 0.1,
            mu: 0.08,
            b_target: 0.3,
        };
        let roots = cubic_stationary_points(&c, 1e-12);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - (0.3 + (0.7 - 0.1) / 0.08)).abs() < 1e-9);
    }

    #[test]
    fn cubic_roots_zero_polynomial() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let c = CubicCoeffs {
                xi1: rng.random_range(0.1..5.0),
                xi2: rng.random_range(0.0..5.0),
                lambda: rng.random_range(-0.5..0.5),
                mu: rng.random_range(0.01..1.0),
                b_target: rng.random_range(0.0..1.0),
            };
            let poly = c.polynomial();
            for u in cubic_stationary_points(&c, 1e-12) {
                let v = ((poly[0] * u + poly[1]) * u + poly[2]) * u + poly[3];
                assert!(v.abs() < 1e-8, "residual {v} at root {u} for {c:?}");
            }
        }
    }

    #[test]
    fn huge_mu_pins_coordinate_to_target() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..50 {
            let c = CubicCoeffs {
                xi1: rng.random_range(0.1..3.0),
                xi2: rng.random_range(0.0..3.0),
                lambda: 0.0,
                mu: 1e6,
                b_target: rng.random_range(0.0..1.0),
            };
            let best = cubic_stationary_points(&c, 1e-12)
                .into_iter()
                .min_by(|a, b| c.objective(*a).partial_cmp(&c.objective(*b)).unwrap())
                .unwrap();
            assert!((best - c.b_target).abs() < 1e-3);
        }
    }

    #[test]
    fn b_update_hand_example() {
        // M=1, delta=1, mu=1, rho=0.2, b_prev=(0,0), x=(0.6,0.2), lambda=0
        let b_prev = [0.0, 0.0];
        let x = [0.6, 0.2];
        let l = [0.0, 0.0];
        let out = consensus_b_update(&b_prev, &[&x], &[&l], 1.0, 1.0, 0.2, 2);
        assert!((out[0] - 0.3).abs() < 1e-15);
        assert!(out[1].abs() < 1e-15);
    }

    #[test]
    fn b_update_all_zero_inputs_stay_zero() {
        // beta = -rho/(delta + M mu) everywhere; the argmax lift exactly
        // cancels it and projection clamps the rest, so the update is zero.
        let b_prev = [0.0; 4];
        let x = [0.0; 4];
        let l = [0.0; 4];
        let out = consensus_b_update(&b_prev, &[&x], &[&l], 0.08, 1e-3, 0.16, 2);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dual_update_examples() {
        let mut l = vec![0.0, 0.0];
        let x = [0.5, 0.25];
        dual_update(&mut l, &x, &x, 0.08);
        assert_eq!(l, vec![0.0, 0.0]);
        let b = [0.5, 0.25];
        let x2 = [1.5, 0.25];
        dual_update(&mut l, &x2, &b, 0.08);
        assert!((l[0] - 0.08).abs() < 1e-15);
        assert_eq!(l[1], 0.0);
    }

    /// N >= L+T keeps the sample covariance full-rank so every scalar
    /// subproblem has an interior minimizer; the exact-update identities
    /// below are only meaningful in that regime.
    fn desk(seed: u64) -> (SystemConfig, crate::likelihood::Problem, Vec<CMat>) {
        let cfg = SystemConfig {
            num_aps: 2,
            antennas_per_ap: 8,
            num_devices: 8,
            sig_len: 6,
            max_delay: 1,
            ..SystemConfig::default()
        };
        let s = generate_scenario(&cfg, seed);
        let recv = synthesize_received(&s, &cfg, seed);
        (cfg, recv.problem, recv.sample_cov)
    }

    #[test]
    fn admm_dual_identity_and_lower_bound() {
        let (cfg, problem, targets) = desk(3);
        let opts = ConsensusOptions {
            max_iters: 6,
            ..ConsensusOptions::default()
        };
        let result = solve_admm(&problem, &targets, &opts).unwrap();
        assert!(result.max_dual_residual < 1e-6, "{}", result.max_dual_residual);
        let bound = cfg.num_aps as f64 * cfg.eff_len() as f64 * cfg.noise_var().ln();
        for row in &result.trace {
            assert!(row.lagrangian >= bound);
        }
    }

    #[test]
    fn local_sweep_does_not_increase_local_objective() {
        let (_, problem, targets) = desk(9);
        let m = 0;
        let len = problem.indicator_len();
        let mut rng = StdRng::seed_from_u64(5);
        let x0: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..0.5)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let lambda: Vec<f64> = (0..len).map(|_| rng.random_range(-0.1..0.1)).collect();
        let mu = 0.08;

        let local_cost = |x: &[f64]| {
            let c = problem.covariance(x, m);
            let chol = c.cholesky().unwrap();
            let mut acc = chol.log_det() + chol.trace_solve_re(&targets[m]);
            for i in 0..len {
                let d = x[i] - b[i];
                acc += lambda[i] * d + 0.5 * mu * d * d;
            }
            acc
        };

        let mut cache =
            CovCache::new(&problem, m, x0.clone(), NumericsConfig::default()).unwrap();
        let mut prev = local_cost(cache.values());
        let mode = CdMode::Consensus {
            b: &b,
            lambda: &lambda,
            mu,
        };
        for _ in 0..4 {
            cd_sweep(&problem, &targets[m], &mut cache, &mode, 1e-12).unwrap();
            let now = local_cost(cache.values());
            assert!(now <= prev + 1e-7 * prev.abs().max(1.0));
            prev = now;
        }
    }

    #[test]
    fn local_detection_finds_lone_high_snr_device() {
        let cfg = SystemConfig {
            num_aps: 1,
            antennas_per_ap: 8,
            num_devices: 4,
            sig_len: 8,
            max_delay: 1,
            activity_ratio: 0.26, // exactly one active device
            ..SystemConfig::default()
        };
        let mut s = generate_scenario(&cfg, 13);
        // pin every device at 30 dB dominant-AP SNR
        for k in 0..cfg.num_devices {
            let best = (0..cfg.num_aps)
                .map(|m| s.gain(k, m))
                .fold(f64::MIN, f64::max);
            s.powers[k] = 1000.0 * cfg.noise_var() / best;
        }
        let recv = synthesize_received(&s, &cfg, 13);
        let x = local_detect_init(
            &recv.problem,
            0,
            &recv.sample_cov[0],
            &NumericsConfig::default(),
            &CdStop {
                residual_tol: 1e-6,
                max_sweeps: 100,
            },
        )
        .unwrap();
        let truth = crate::scenario::true_indicator(&s);
        let want = truth.iter().position(|&b| b).unwrap();
        let mut best = 0;
        for (i, v) in x.iter().enumerate() {
            if *v > x[best] {
                best = i;
            }
        }
        assert_eq!(best, want);
        assert!(x[want] > 0.5, "true coordinate weak: {}", x[want]);
    }

    #[test]
    fn converged_admm_reaches_tight_consensus() {
        let (_, problem, targets) = desk(21);
        let opts = ConsensusOptions {
            mu: 6.0,
            max_iters: 200,
            tol_step: 1e-5,
            ..ConsensusOptions::default()
        };
        let result = solve_admm(&problem, &targets, &opts).unwrap();
        assert!(result.converged);
        let last = result.trace.last().unwrap();
        assert!(
            last.consensus_residual < 1e-3,
            "consensus residual {} at convergence",
            last.consensus_residual
        );
    }

    #[test]
    fn accelerated_ledger_matches_closed_form() {
        let (cfg, problem, targets) = desk(7);
        let opts = ConsensusOptions {
            max_iters: 1,
            ..ConsensusOptions::default()
        };
        let pair = FronthaulPair::unit(4);
        let (_, ledger) = solve_accelerated(&problem, &targets, &opts, Some(&pair)).unwrap();
        assert_eq!(
            ledger.raw_total(),
            crate::fronthaul::bits_alg3(cfg.num_aps, cfg.num_devices, 4, cfg.max_delay, 1)
        );
        // two iterations: 2 uplink rounds + 1 broadcast round
        let opts2 = ConsensusOptions {
            max_iters: 2,
            tol_step: 0.0,
            ..ConsensusOptions::default()
        };
        let (res, ledger2) = solve_accelerated(&problem, &targets, &opts2, Some(&pair)).unwrap();
        assert_eq!(res.iterations, 2);
        assert_eq!(
            ledger2.raw_total(),
            crate::fronthaul::bits_alg3(cfg.num_aps, cfg.num_devices, 4, cfg.max_delay, 2)
        );
    }

    #[test]
    fn accelerated_without_fronthaul_close_to_fine_quantizer() {
        let (_, problem, targets) = desk(11);
        let opts = ConsensusOptions {
            max_iters: 1,
            inner_tol: 1e-8,
            ..ConsensusOptions::default()
        };
        let (exact, _) = solve_accelerated(&problem, &targets, &opts, None).unwrap();
        let pair = FronthaulPair::unit(30);
        let (fine, _) = solve_accelerated(&problem, &targets, &opts, Some(&pair)).unwrap();
        // a 30-bit quantizer perturbs the uplink at ~1e-9; both runs should
        // land on the same inner stationary point
        for (a, b) in exact.soft.values().iter().zip(fine.soft.values()) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}
