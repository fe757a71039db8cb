//! Reference detectors: plain coordinate descent with a posterior
//! constraint-enforcement step, and block coordinate descent that keeps every
//! device block single-delay during the optimization.
//!
//! Both minimize the plain likelihood cost (no penalty term) and share a
//! multi-AP scalar minimizer over [0,1].

use alloc::vec;
use alloc::vec::Vec;

use crate::config::SolveOptions;
use crate::likelihood::{self, CovCache, Problem, SoftActivity};
use crate::linalg::{CMat, LinalgError};
use crate::math;

/// Per-AP coefficient pairs of one coordinate's scalar objective
/// `g(u) = sum_m [ log(1 + xi1_m u) - xi2_m u / (1 + xi1_m u) ]` on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar1DProblem {
    pub coeffs: Vec<(f64, f64)>,
}

impl Scalar1DProblem {
    pub fn objective(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(xi1, xi2) in &self.coeffs {
            let denom = 1.0 + xi1 * u;
            if denom <= 0.0 {
                return f64::INFINITY;
            }
            acc += math::ln(denom) - xi2 * u / denom;
        }
        acc
    }
}

fn golden_min(prob: &Scalar1DProblem, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = prob.objective(x1);
    let mut f2 = prob.objective(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = prob.objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = prob.objective(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, prob.objective(mid))
}

/// Global minimizer of the multi-AP scalar objective on [0,1].
///
/// Candidates: the endpoints, each AP's single-cell closed form
/// `(xi2 - xi1)/xi1^2` clipped to the box, and a coarse grid; golden-section
/// refinement runs around every local bracket so the sum of per-AP terms
/// (each unimodal, jointly not) cannot hide a minimum between candidates.
pub fn minimize_1d_multiap(prob: &Scalar1DProblem) -> f64 {
    const GRID: usize = 129;
    let mut points: Vec<f64> = Vec::with_capacity(GRID + prob.coeffs.len() + 2);
    for i in 0..GRID {
        points.push(i as f64 / (GRID - 1) as f64);
    }
    for &(xi1, xi2) in &prob.coeffs {
        if xi1 > 0.0 {
            points.push(((xi2 - xi1) / (xi1 * xi1)).clamp(0.0, 1.0));
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let values: Vec<f64> = points.iter().map(|&u| prob.objective(u)).collect();
    let mut best = (values[0], points[0]);
    for i in 0..points.len() {
        if values[i] < best.0 {
            best = (values[i], points[i]);
        }
        let left_up = i == 0 || values[i] <= values[i - 1];
        let right_up = i + 1 == points.len() || values[i] <= values[i + 1];
        if left_up && right_up {
            let lo = if i == 0 { points[0] } else { points[i - 1] };
            let hi = if i + 1 == points.len() {
                points[i]
            } else {
                points[i + 1]
            };
            let (u, v) = golden_min(prob, lo, hi);
            if v < best.0 {
                best = (v, u);
            }
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineTraceRow {
    pub iter: usize,
    /// Likelihood cost after the sweep.
    pub objective: f64,
    pub max_change: f64,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub soft: SoftActivity,
    /// Final likelihood cost of the returned iterate.
    pub objective: f64,
    pub trace: Vec<BaselineTraceRow>,
    pub sweeps: usize,
    pub converged: bool,
}

struct JointCd {
    caches: Vec<CovCache>,
}

impl JointCd {
    fn new(problem: &Problem, opts: &SolveOptions) -> Result<Self, LinalgError> {
        let caches = (0..problem.num_aps)
            .map(|m| {
                CovCache::new(
                    problem,
                    m,
                    vec![0.0; problem.indicator_len()],
                    opts.numerics,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { caches })
    }

    fn values(&self) -> &[f64] {
        self.caches[0].values()
    }

    /// Zero the coordinate everywhere and return the scalar subproblem
    /// coefficients against the exclusion covariances.
    fn exclude(
        &mut self,
        problem: &Problem,
        targets: &[CMat],
        idx: usize,
    ) -> Result<Scalar1DProblem, LinalgError> {
        let (k, t) = problem.split_index(idx);
        let sig = problem.signature(k);
        let mut coeffs = Vec::with_capacity(self.caches.len());
        for (m, cache) in self.caches.iter_mut().enumerate() {
            if cache.set_coord(problem, idx, 0.0).is_err() {
                cache.refresh(problem)?;
                cache.set_coord(problem, idx, 0.0)?;
            }
            let coeff = problem.coeff(k, m);
            let w = cache.inverse().matvec_window(sig, t);
            let mut sh_w = 0.0f64;
            for (i, si) in sig.iter().enumerate() {
                sh_w += (si.conj() * w[t + i]).re;
            }
            coeffs.push((coeff * sh_w, coeff * targets[m].quad_form(&w)));
        }
        Ok(Scalar1DProblem { coeffs })
    }

    fn commit(&mut self, problem: &Problem, idx: usize, value: f64) -> Result<(), LinalgError> {
        for cache in self.caches.iter_mut() {
            cache.set_coord(problem, idx, value)?;
        }
        Ok(())
    }
}

/// Coordinate descent on the box-relaxed likelihood, then a blockwise
/// enforcement step keeping only each block's largest entry.
pub fn cde_solve(
    problem: &Problem,
    targets: &[CMat],
    opts: &SolveOptions,
) -> Result<BaselineResult, LinalgError> {
    let mut cd = JointCd::new(problem, opts)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < opts.max_iters {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for idx in 0..problem.indicator_len() {
            let v_old = cd.values()[idx];
            let scalar = cd.exclude(problem, targets, idx)?;
            let mut u = minimize_1d_multiap(&scalar);
            // never regress past the previous value
            if scalar.objective(v_old) < scalar.objective(u) {
                u = v_old;
            }
            cd.commit(problem, idx, u)?;
            max_change = max_change.max((u - v_old).abs());
        }
        let objective = likelihood::nll_cost(problem, targets, cd.values())?;
        trace.push(BaselineTraceRow {
            iter: sweeps,
            objective,
            max_change,
        });
        if max_change < opts.tol_step {
            converged = true;
            break;
        }
    }

    // Enforcement: keep only the largest entry per block, lowest index wins
    // ties.
    let t1 = problem.block_len();
    let mut values = cd.values().to_vec();
    for block in values.chunks_exact_mut(t1) {
        let mut tau = 0usize;
        for (t, v) in block.iter().enumerate() {
            if *v > block[tau] {
                tau = t;
            }
        }
        for (t, v) in block.iter_mut().enumerate() {
            if t != tau {
                *v = 0.0;
            }
        }
    }
    let objective = likelihood::nll_cost(problem, targets, &values)?;
    Ok(BaselineResult {
        soft: SoftActivity::new(values, t1),
        objective,
        trace,
        sweeps,
        converged,
    })
}

/// Block coordinate descent: per device block, compare the all-zero block
/// against one active delay at its optimal value, commit the best, iterate
/// until no block moves.
pub fn bcd_solve(
    problem: &Problem,
    targets: &[CMat],
    opts: &SolveOptions,
) -> Result<BaselineResult, LinalgError> {
    let mut cd = JointCd::new(problem, opts)?;
    let t1 = problem.block_len();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < opts.max_iters {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for k in 0..problem.num_devices {
            let old_block: Vec<f64> = cd.values()[k * t1..(k + 1) * t1].to_vec();
            // clear the whole block first so every delay candidate is scored
            // against the same block-less covariance
            for t in 0..t1 {
                let idx = k * t1 + t;
                if cd.values()[idx] != 0.0 {
                    cd.commit(problem, idx, 0.0)?;
                }
            }
            let mut best: (f64, Option<(usize, f64)>) = (0.0, None);
            let mut scalars = Vec::with_capacity(t1);
            for t in 0..t1 {
                let scalar = cd.exclude(problem, targets, k * t1 + t)?;
                scalars.push(scalar);
            }
            for (t, scalar) in scalars.iter().enumerate() {
                let u = minimize_1d_multiap(scalar);
                let delta = scalar.objective(u) - scalar.objective(0.0);
                if delta < best.0 {
                    best = (delta, Some((t, u)));
                }
            }
            if let Some((t, u)) = best.1 {
                cd.commit(problem, k * t1 + t, u)?;
            }
            let new_block = &cd.values()[k * t1..(k + 1) * t1];
            for (a, b) in old_block.iter().zip(new_block.iter()) {
                max_change = max_change.max((a - b).abs());
            }
        }
        let objective = likelihood::nll_cost(problem, targets, cd.values())?;
        trace.push(BaselineTraceRow {
            iter: sweeps,
            objective,
            max_change,
        });
        if max_change < opts.tol_step {
            converged = true;
            break;
        }
    }

    let objective = likelihood::nll_cost(problem, targets, cd.values())?;
    Ok(BaselineResult {
        soft: SoftActivity::new(cd.values().to_vec(), t1),
        objective,
        trace,
        sweeps,
        converged,
    })
}
