//! Simulation and solver configuration.

use alloc::string::String;
use core::fmt;

use crate::math;

/// System-level parameters of a random-access scenario.
///
/// Powers are dBm on the way in and converted to linear mW internally
/// (`linear = 10^(dBm/10)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of access points M.
    pub num_aps: usize,
    /// Antennas per AP, N.
    pub antennas_per_ap: usize,
    /// Number of devices K.
    pub num_devices: usize,
    /// Signature length L in symbols.
    pub sig_len: usize,
    /// Maximum delay T in symbols.
    pub max_delay: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Fraction of devices active per trial.
    pub activity_ratio: f64,
    /// Background noise power, dBm.
    pub noise_power_dbm: f64,
    /// Per-device transmit power cap, dBm.
    pub max_tx_power_dbm: f64,
    /// Pathloss at 1 m, dB.
    pub pathloss_intercept_db: f64,
    /// Pathloss slope, dB per decade of distance.
    pub pathloss_slope_db_per_decade: f64,
    /// Shadow-fading standard deviation, dB.
    pub shadow_std_db: f64,
    /// Power control targets the SNR achievable by this fraction of devices.
    pub power_percentile: f64,
    /// Base RNG seed; per-trial seeds are derived from it.
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 8,
            antennas_per_ap: 8,
            num_devices: 100,
            sig_len: 9,
            max_delay: 1,
            area_side: 1000.0,
            activity_ratio: 0.1,
            noise_power_dbm: -104.0,
            max_tx_power_dbm: 23.0,
            pathloss_intercept_db: -30.5,
            pathloss_slope_db_per_decade: -36.7,
            shadow_std_db: 2.0,
            power_percentile: 0.95,
            rng_seed: 1,
        }
    }
}

/// A configuration field failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

impl SystemConfig {
    /// Effective sequence length L+T.
    pub fn eff_len(&self) -> usize {
        self.sig_len + self.max_delay
    }

    /// Length of the activity/delay indicator, K(T+1).
    pub fn indicator_len(&self) -> usize {
        self.num_devices * (self.max_delay + 1)
    }

    /// Noise power in linear mW.
    pub fn noise_var(&self) -> f64 {
        math::db_to_linear(self.noise_power_dbm)
    }

    /// Transmit power cap in linear mW.
    pub fn max_tx_power(&self) -> f64 {
        math::db_to_linear(self.max_tx_power_dbm)
    }

    /// Number of active devices per trial: round(activity_ratio * K), fixed
    /// so missed-detection denominators are never zero.
    pub fn num_active(&self) -> usize {
        math::round(self.activity_ratio * self.num_devices as f64) as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn err(field: &'static str, message: &str) -> ConfigError {
            ConfigError {
                field,
                message: String::from(message),
            }
        }
        if self.num_aps == 0 {
            return Err(err("num_aps", "must be positive"));
        }
        if self.antennas_per_ap == 0 {
            return Err(err("antennas_per_ap", "must be positive"));
        }
        if self.num_devices == 0 {
            return Err(err("num_devices", "must be positive"));
        }
        if self.sig_len == 0 {
            return Err(err("sig_len", "must be at least 1"));
        }
        if !(self.area_side > 0.0) {
            return Err(err("area_side", "must be positive"));
        }
        if !(self.activity_ratio > 0.0 && self.activity_ratio < 1.0) {
            return Err(err("activity_ratio", "must lie in (0, 1)"));
        }
        if !(self.shadow_std_db >= 0.0) {
            return Err(err("shadow_std_db", "must be non-negative"));
        }
        if !(self.power_percentile > 0.0 && self.power_percentile <= 1.0) {
            return Err(err("power_percentile", "must lie in (0, 1]"));
        }
        if !self.noise_power_dbm.is_finite() || !self.max_tx_power_dbm.is_finite() {
            return Err(err("noise_power_dbm", "power levels must be finite"));
        }
        Ok(())
    }
}

/// Numerical tolerances shared across modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// Positive-definiteness tolerance for rank-1 update denominators.
    pub pd_tol: f64,
    /// Full Cholesky refresh after this many rank-1 updates per AP.
    pub refresh_period: usize,
    /// Central finite-difference step used by the gradient oracle.
    pub fd_step: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            pd_tol: 1e-12,
            refresh_period: 200,
            fd_step: 1e-5,
        }
    }
}

/// Options for the centralized proximal-gradient solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Penalty weight on the blockwise (sum - max) term.
    pub rho: f64,
    pub max_iters: usize,
    /// Convergence threshold on the sup-norm iterate change.
    pub tol_step: f64,
    /// Step-size backtracking factor.
    pub backtrack_factor: f64,
    /// Give up backtracking after this many halvings and report a stall.
    pub max_backtracks: usize,
    pub numerics: NumericsConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rho: 0.16,
            max_iters: 500,
            tol_step: 1e-6,
            backtrack_factor: 0.5,
            max_backtracks: 30,
            numerics: NumericsConfig::default(),
        }
    }
}

/// How thoroughly each AP solves its local subproblem per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdStop {
    /// First-order residual target on the local optimality condition.
    pub residual_tol: f64,
    /// Hard cap on full coordinate sweeps.
    pub max_sweeps: usize,
}

impl Default for CdStop {
    fn default() -> Self {
        Self {
            residual_tol: 1e-7,
            max_sweeps: 400,
        }
    }
}

/// Options for the consensus solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOptions {
    /// Penalty weight on the blockwise (sum - max) term.
    pub rho: f64,
    /// Consensus penalty.
    pub mu: f64,
    /// Proximal weight on the global update.
    pub delta: f64,
    pub max_iters: usize,
    /// Convergence threshold on the sup-norm change of b and every local copy.
    pub tol_step: f64,
    /// Stopping rule for the per-AP coordinate-descent subsolver.
    pub local_cd: CdStop,
    /// Stopping rule for the local-detection initialization.
    pub init_cd: CdStop,
    /// Iteration cap for the accelerated global update.
    pub inner_max_iters: usize,
    /// Step tolerance for the accelerated global update.
    pub inner_tol: f64,
    pub numerics: NumericsConfig,
}

impl Default for ConsensusOptions {
    fn default() -> Self {
        Self {
            rho: 0.16,
            mu: 0.08,
            delta: 1e-3,
            max_iters: 50,
            tol_step: 1e-6,
            local_cd: CdStop::default(),
            init_cd: CdStop {
                residual_tol: 1e-5,
                max_sweeps: 50,
            },
            inner_max_iters: 50,
            inner_tol: 1e-6,
            numerics: NumericsConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_activity_ratio() {
        let cfg = SystemConfig {
            activity_ratio: 1.0,
            ..SystemConfig::default()
        };
        assert_eq!(cfg.validate().unwrap_err().field, "activity_ratio");
    }

    #[test]
    fn linear_power_conversions() {
        let cfg = SystemConfig::default();
        assert!((cfg.noise_var() - 10f64.powf(-10.4)).abs() < 1e-18);
        assert!((cfg.max_tx_power() - 10f64.powf(2.3)).abs() < 1e-10);
        assert_eq!(cfg.num_active(), 10);
        assert_eq!(cfg.eff_len(), 10);
        assert_eq!(cfg.indicator_len(), 200);
    }
}
