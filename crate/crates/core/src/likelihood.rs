//! Model covariance, likelihood cost/gradient, and the penalized objective.
//!
//! For soft activity `b` the per-AP model covariance is
//! `C_m(b) = sum_{k,t} b_{k,t} p_k g_km s_{k,t} s_{k,t}ᴴ + sigma_m² I`,
//! and the detector minimizes
//! `sum_m [ log|C_m| + tr(C_m⁻¹ R_m) ]` over the box, plus the blockwise
//! `rho * (sum - max)` penalty that drives every device block towards at most
//! one nonzero. `R_m` is normally the sample covariance `Y_m Y_mᴴ / N`, but
//! any Hermitian target can stand in (the accelerated consensus update swaps
//! in a model covariance built from local detections).

use alloc::vec;
use alloc::vec::Vec;

use crate::config::{NumericsConfig, SystemConfig};
use crate::linalg::{sherman_morrison_update, C64, CMat, KahanSum, LinalgError};
use crate::math;
use crate::scenario::Scenario;

/// Detector side information: everything known a priori plus the signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_devices: usize,
    pub sig_len: usize,
    pub max_delay: usize,
    /// `coeff[k * M + m] = p_k * g_{k,m}` (linear).
    pub coeff: Vec<f64>,
    /// Signatures, k-major, length L each.
    pub signatures: Vec<C64>,
    /// Linear noise power per AP.
    pub noise_var: Vec<f64>,
}

impl Problem {
    pub fn from_scenario(scenario: &Scenario, config: &SystemConfig) -> Self {
        let k = config.num_devices;
        let m = config.num_aps;
        let mut coeff = vec![0.0f64; k * m];
        for ki in 0..k {
            for mi in 0..m {
                coeff[ki * m + mi] = scenario.powers[ki] * scenario.gain(ki, mi);
            }
        }
        Self {
            num_aps: m,
            antennas_per_ap: config.antennas_per_ap,
            num_devices: k,
            sig_len: config.sig_len,
            max_delay: config.max_delay,
            coeff,
            signatures: scenario.signatures.clone(),
            noise_var: scenario.noise_var.clone(),
        }
    }

    /// Effective sequence length L+T.
    pub fn eff_len(&self) -> usize {
        self.sig_len + self.max_delay
    }

    /// Entries per device block, T+1.
    pub fn block_len(&self) -> usize {
        self.max_delay + 1
    }

    /// Total variable length K(T+1).
    pub fn indicator_len(&self) -> usize {
        self.num_devices * self.block_len()
    }

    #[inline]
    pub fn coeff(&self, k: usize, m: usize) -> f64 {
        self.coeff[k * self.num_aps + m]
    }

    #[inline]
    pub fn signature(&self, k: usize) -> &[C64] {
        &self.signatures[k * self.sig_len..(k + 1) * self.sig_len]
    }

    /// Split a flat variable index into (device, delay).
    #[inline]
    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        (idx / self.block_len(), idx % self.block_len())
    }

    /// Dense effective signature `s_{k,t}`: t leading zeros, the signature,
    /// then T-t trailing zeros.
    pub fn eff_sig_dense(&self, k: usize, t: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.eff_len()];
        out[t..t + self.sig_len].copy_from_slice(self.signature(k));
        out
    }

    /// Model covariance for AP `m` at soft activity `values`.
    pub fn covariance(&self, values: &[f64], m: usize) -> CMat {
        debug_assert_eq!(values.len(), self.indicator_len());
        let mut c = CMat::scaled_identity(self.eff_len(), self.noise_var[m]);
        let t1 = self.block_len();
        for k in 0..self.num_devices {
            let coeff = self.coeff(k, m);
            let sig = self.signature(k);
            for t in 0..t1 {
                let w = values[k * t1 + t];
                if w != 0.0 {
                    c.add_scaled_outer_window(sig, t, w * coeff);
                }
            }
        }
        c
    }
}

/// The box-constrained optimization variable, viewed as K blocks of length
/// T+1.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftActivity {
    values: Vec<f64>,
    block_len: usize,
}

impl SoftActivity {
    pub fn new(values: Vec<f64>, block_len: usize) -> Self {
        debug_assert!(block_len > 0 && values.len() % block_len == 0);
        debug_assert!(values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        Self { values, block_len }
    }

    pub fn zeros(num_devices: usize, block_len: usize) -> Self {
        Self {
            values: vec![0.0; num_devices * block_len],
            block_len,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_blocks(&self) -> usize {
        self.values.len() / self.block_len
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[k * self.block_len..(k + 1) * self.block_len]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Blockwise `rho * sum_k (sum_t b - max_t b)`; exactly zero whenever every
/// block has at most one nonzero.
pub fn block_penalty(values: &[f64], block_len: usize, rho: f64) -> f64 {
    let mut acc = 0.0;
    for block in values.chunks_exact(block_len) {
        let sum: f64 = block.iter().sum();
        let max = block.iter().cloned().fold(f64::MIN, f64::max);
        acc += sum - max;
    }
    rho * acc
}

/// `sum_m [ log|C_m(b)| + tr(C_m(b)⁻¹ targets_m) ]`.
///
/// Fails only if some covariance is numerically non-PD, which cannot happen
/// for `values` in the box and signals corrupted state.
pub fn nll_cost(problem: &Problem, targets: &[CMat], values: &[f64]) -> Result<f64, LinalgError> {
    let mut acc = KahanSum::default();
    for m in 0..problem.num_aps {
        let c = problem.covariance(values, m);
        let chol = c.cholesky()?;
        acc.add(chol.log_det());
        acc.add(chol.trace_solve_re(&targets[m]));
    }
    Ok(acc.value())
}

/// Penalized objective: likelihood cost plus the blockwise penalty.
pub fn penalized_cost(
    problem: &Problem,
    targets: &[CMat],
    values: &[f64],
    rho: f64,
) -> Result<f64, LinalgError> {
    Ok(nll_cost(problem, targets, values)?
        + block_penalty(values, problem.block_len(), rho))
}

/// Likelihood cost together with the gradient of the differentiable part
/// `nll + rho * sum(b)`.
pub struct CostGradient {
    pub nll: f64,
    pub gradient: Vec<f64>,
}

/// Gradient entry (k,t):
/// `rho + sum_m p_k g_km [ sᴴ C⁻¹ s - sᴴ C⁻¹ R C⁻¹ s ]` evaluated at
/// `values`; one factorization per AP, then one quadratic form per
/// coordinate. Per-AP contributions are combined with compensated summation
/// so the reduction order never matters.
pub fn nll_cost_gradient(
    problem: &Problem,
    targets: &[CMat],
    values: &[f64],
    rho: f64,
) -> Result<CostGradient, LinalgError> {
    let len = problem.indicator_len();
    let mut acc = vec![KahanSum::default(); len];
    let mut cost = KahanSum::default();
    for m in 0..problem.num_aps {
        let c = problem.covariance(values, m);
        let chol = c.cholesky()?;
        cost.add(chol.log_det());
        cost.add(chol.trace_solve_re(&targets[m]));
        let inv = chol.inverse();
        let mut quad = inv.mul(&targets[m]).mul(&inv);
        quad.hermitianize();
        accumulate_ap_gradient(problem, m, &inv, &quad, &mut acc);
    }
    let gradient = acc.iter().map(|k| rho + k.value()).collect();
    Ok(CostGradient {
        nll: cost.value(),
        gradient,
    })
}

/// Gradient of the single-AP local cost `f_m(x) = log|C_m(x)| + tr(C_m⁻¹ R_m)`.
pub fn local_gradient(
    problem: &Problem,
    m: usize,
    target: &CMat,
    values: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let mut acc = vec![KahanSum::default(); problem.indicator_len()];
    let c = problem.covariance(values, m);
    let chol = c.cholesky()?;
    let inv = chol.inverse();
    let mut quad = inv.mul(target).mul(&inv);
    quad.hermitianize();
    accumulate_ap_gradient(problem, m, &inv, &quad, &mut acc);
    Ok(acc.iter().map(|k| k.value()).collect())
}

fn accumulate_ap_gradient(
    problem: &Problem,
    m: usize,
    inv: &CMat,
    quad: &CMat,
    acc: &mut [KahanSum],
) {
    let t1 = problem.block_len();
    for k in 0..problem.num_devices {
        let coeff = problem.coeff(k, m);
        let sig = problem.signature(k);
        for t in 0..t1 {
            let term = coeff * (inv.quad_form_window(sig, t) - quad.quad_form_window(sig, t));
            acc[k * t1 + t].add(term);
        }
    }
}

/// Explicit model-covariance inverse for one AP, maintained across
/// single-coordinate changes by Sherman-Morrison updates with a periodic
/// full refresh to bound drift.
#[derive(Debug, Clone)]
pub struct CovCache {
    ap: usize,
    inv: CMat,
    values: Vec<f64>,
    updates_since_refresh: usize,
    numerics: NumericsConfig,
}

impl CovCache {
    pub fn new(
        problem: &Problem,
        ap: usize,
        values: Vec<f64>,
        numerics: NumericsConfig,
    ) -> Result<Self, LinalgError> {
        let inv = problem.covariance(&values, ap).cholesky()?.inverse();
        Ok(Self {
            ap,
            inv,
            values,
            updates_since_refresh: 0,
            numerics,
        })
    }

    pub fn ap(&self) -> usize {
        self.ap
    }

    pub fn inverse(&self) -> &CMat {
        &self.inv
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Change one coordinate, updating the inverse by a rank-1 identity.
    pub fn set_coord(
        &mut self,
        problem: &Problem,
        idx: usize,
        new_value: f64,
    ) -> Result<(), LinalgError> {
        let delta = new_value - self.values[idx];
        if delta == 0.0 {
            return Ok(());
        }
        let (k, t) = problem.split_index(idx);
        let c = delta * problem.coeff(k, self.ap);
        sherman_morrison_update(
            &mut self.inv,
            problem.signature(k),
            t,
            c,
            self.numerics.pd_tol,
        )?;
        self.values[idx] = new_value;
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= self.numerics.refresh_period {
            self.refresh(problem)?;
        }
        Ok(())
    }

    /// Rebuild the inverse from scratch.
    pub fn refresh(&mut self, problem: &Problem) -> Result<(), LinalgError> {
        self.inv = problem
            .covariance(&self.values, self.ap)
            .cholesky()?
            .inverse();
        self.updates_since_refresh = 0;
        Ok(())
    }

    /// Write a coordinate and rebuild the inverse without the rank-1
    /// denominator check; fails only if the resulting covariance itself is
    /// not PD.
    pub fn force_coord(
        &mut self,
        problem: &Problem,
        idx: usize,
        value: f64,
    ) -> Result<(), LinalgError> {
        let old = self.values[idx];
        self.values[idx] = value;
        match self.refresh(problem) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.values[idx] = old;
                self.refresh(problem)?;
                Err(e)
            }
        }
    }

    /// Relative Frobenius distance between the maintained inverse and a fresh
    /// refactorization; used by consistency checks.
    pub fn drift(&self, problem: &Problem) -> Result<f64, LinalgError> {
        let fresh = problem
            .covariance(&self.values, self.ap)
            .cholesky()?
            .inverse();
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.inv.data().iter().zip(fresh.data().iter()) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        Ok(math::sqrt(num / den.max(1e-300)))
    }
}
