//! Centralized proximal-gradient solver for the penalized detection problem.
//!
//! Each iteration takes a gradient step on the differentiable part
//! (likelihood plus `rho * sum(b)`), then applies the closed-form block prox
//! of the `-rho * max` term: within every device block the running argmax
//! coordinate is lifted by `eta * rho` before projection onto [0,1], all
//! other coordinates are just projected. The step size comes from a
//! Barzilai-Borwein-style local Lipschitz estimate with monotone
//! backtracking, so the penalized objective never increases.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::SolveOptions;
use crate::likelihood::{self, Problem, SoftActivity};
use crate::linalg::{CMat, LinalgError};
use crate::math;

/// Outcome of a single proximal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Accepted,
    /// The update reproduced the current iterate exactly.
    FixedPoint,
    /// Backtracking exhausted without descent; treated as converged.
    Stalled,
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxTraceRow {
    pub iter: usize,
    /// Penalized objective after the step.
    pub objective: f64,
    pub step_size: f64,
    pub linf_change: f64,
}

/// Final solver output.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub soft: SoftActivity,
    pub trace: Vec<ProxTraceRow>,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    /// Final penalized objective.
    pub objective: f64,
}

/// Closed-form block prox: lift the first argmax entry by `shift`, project
/// everything onto [0,1].
pub fn prox_block_update(alpha: &[f64], shift: f64) -> Vec<f64> {
    debug_assert!(shift >= 0.0);
    let mut tau = 0usize;
    for (t, v) in alpha.iter().enumerate() {
        if *v > alpha[tau] {
            tau = t;
        }
    }
    alpha
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let lifted = if t == tau { v + shift } else { *v };
            lifted.clamp(0.0, 1.0)
        })
        .collect()
}

/// Mutable solver state; `step` advances it by one accepted update.
#[derive(Debug, Clone)]
pub struct ProxState {
    pub values: Vec<f64>,
    pub iter: usize,
    pub eta: f64,
    /// Penalized objective at `values`.
    pub objective: f64,
    gradient: Vec<f64>,
    prev_values: Option<Vec<f64>>,
    prev_gradient: Option<Vec<f64>>,
    pub last_linf_change: f64,
}

const ETA_MIN: f64 = 1e-9;
const ETA_MAX: f64 = 1e3;

impl ProxState {
    pub fn init(
        problem: &Problem,
        targets: &[CMat],
        opts: &SolveOptions,
        initial: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        debug_assert_eq!(initial.len(), problem.indicator_len());
        let cg = likelihood::nll_cost_gradient(problem, targets, &initial, opts.rho)?;
        let objective =
            cg.nll + likelihood::block_penalty(&initial, problem.block_len(), opts.rho);
        Ok(Self {
            values: initial,
            iter: 0,
            eta: 0.0,
            objective,
            gradient: cg.gradient,
            prev_values: None,
            prev_gradient: None,
            last_linf_change: f64::INFINITY,
        })
    }

    fn estimate_eta(&self) -> f64 {
        let fallback = {
            let dmax = self
                .gradient
                .iter()
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            if dmax > 0.0 {
                1.0 / dmax
            } else {
                1.0
            }
        };
        let eta = match (&self.prev_values, &self.prev_gradient) {
            (Some(pv), Some(pg)) => {
                let mut db = 0.0f64;
                let mut dd = 0.0f64;
                for i in 0..self.values.len() {
                    db += (self.values[i] - pv[i]) * (self.values[i] - pv[i]);
                    dd += (self.gradient[i] - pg[i]) * (self.gradient[i] - pg[i]);
                }
                if dd > 0.0 && db > 0.0 {
                    math::sqrt(db / dd)
                } else {
                    fallback
                }
            }
            _ => fallback,
        };
        eta.clamp(ETA_MIN, ETA_MAX)
    }
}

/// One proximal-gradient iteration with monotone backtracking.
pub fn step(
    problem: &Problem,
    targets: &[CMat],
    opts: &SolveOptions,
    state: &mut ProxState,
) -> Result<StepStatus, LinalgError> {
    let t1 = problem.block_len();
    let mut eta = state.estimate_eta();

    for _ in 0..=opts.max_backtracks {
        let mut candidate = Vec::with_capacity(state.values.len());
        for (block, grad) in state
            .values
            .chunks_exact(t1)
            .zip(state.gradient.chunks_exact(t1))
        {
            let alpha: Vec<f64> = block
                .iter()
                .zip(grad.iter())
                .map(|(b, d)| b - eta * d)
                .collect();
            candidate.extend(prox_block_update(&alpha, eta * opts.rho));
        }

        let objective = likelihood::penalized_cost(problem, targets, &candidate, opts.rho)?;
        if objective <= state.objective {
            let linf = state
                .values
                .iter()
                .zip(candidate.iter())
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            if linf == 0.0 {
                state.eta = eta;
                state.last_linf_change = 0.0;
                state.iter += 1;
                return Ok(StepStatus::FixedPoint);
            }
            let cg = likelihood::nll_cost_gradient(problem, targets, &candidate, opts.rho)?;
            state.prev_values = Some(core::mem::replace(&mut state.values, candidate));
            state.prev_gradient =
                Some(core::mem::replace(&mut state.gradient, cg.gradient));
            state.objective = objective;
            state.eta = eta;
            state.last_linf_change = linf;
            state.iter += 1;
            return Ok(StepStatus::Accepted);
        }
        eta *= opts.backtrack_factor;
    }
    state.iter += 1;
    Ok(StepStatus::Stalled)
}

/// Run from the all-zero start until the sup-norm change drops below
/// tolerance or the iteration cap is reached.
pub fn solve(
    problem: &Problem,
    targets: &[CMat],
    opts: &SolveOptions,
) -> Result<ProxResult, LinalgError> {
    solve_from(problem, targets, opts, vec![0.0; problem.indicator_len()])
}

/// Warm-started variant; the accelerated consensus update reuses it.
pub fn solve_from(
    problem: &Problem,
    targets: &[CMat],
    opts: &SolveOptions,
    initial: Vec<f64>,
) -> Result<ProxResult, LinalgError> {
    let mut state = ProxState::init(problem, targets, opts, initial)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut stalled = false;

    while state.iter < opts.max_iters {
        let status = step(problem, targets, opts, &mut state)?;
        trace.push(ProxTraceRow {
            iter: state.iter,
            objective: state.objective,
            step_size: state.eta,
            linf_change: if status == StepStatus::Stalled {
                0.0
            } else {
                state.last_linf_change
            },
        });
        match status {
            StepStatus::Accepted => {
                if state.last_linf_change < opts.tol_step {
                    converged = true;
                    break;
                }
            }
            StepStatus::FixedPoint => {
                converged = true;
                break;
            }
            StepStatus::Stalled => {
                converged = true;
                stalled = true;
                break;
            }
        }
    }

    let objective = state.objective;
    let iterations = state.iter;
    Ok(ProxResult {
        soft: SoftActivity::new(state.values, problem.block_len()),
        trace,
        iterations,
        converged,
        stalled,
        objective,
    })
}
