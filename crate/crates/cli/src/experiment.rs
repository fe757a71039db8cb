//! Experiment specifications: JSON schema, validation, sweep expansion, and
//! the figure presets.

use asyncact_core::config::{ConsensusOptions, SolveOptions, SystemConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
}

fn invalid(field: &str, message: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// JSON mirror of the system configuration; every field has the §-style
/// default so specs only name what they change.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSpec {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_devices: usize,
    pub sig_len: usize,
    pub max_delay: usize,
    pub area_side_m: f64,
    pub activity_ratio: f64,
    pub noise_power_dbm: f64,
    pub max_tx_power_dbm: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db_per_decade: f64,
    pub shadow_std_db: f64,
    pub power_percentile: f64,
    pub rng_seed: u64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        let c = SystemConfig::default();
        Self {
            num_aps: c.num_aps,
            antennas_per_ap: c.antennas_per_ap,
            num_devices: c.num_devices,
            sig_len: c.sig_len,
            max_delay: c.max_delay,
            area_side_m: c.area_side,
            activity_ratio: c.activity_ratio,
            noise_power_dbm: c.noise_power_dbm,
            max_tx_power_dbm: c.max_tx_power_dbm,
            pathloss_intercept_db: c.pathloss_intercept_db,
            pathloss_slope_db_per_decade: c.pathloss_slope_db_per_decade,
            shadow_std_db: c.shadow_std_db,
            power_percentile: c.power_percentile,
            rng_seed: c.rng_seed,
        }
    }
}

impl SystemSpec {
    pub fn to_config(&self) -> SystemConfig {
        SystemConfig {
            num_aps: self.num_aps,
            antennas_per_ap: self.antennas_per_ap,
            num_devices: self.num_devices,
            sig_len: self.sig_len,
            max_delay: self.max_delay,
            area_side: self.area_side_m,
            activity_ratio: self.activity_ratio,
            noise_power_dbm: self.noise_power_dbm,
            max_tx_power_dbm: self.max_tx_power_dbm,
            pathloss_intercept_db: self.pathloss_intercept_db,
            pathloss_slope_db_per_decade: self.pathloss_slope_db_per_decade,
            shadow_std_db: self.shadow_std_db,
            power_percentile: self.power_percentile,
            rng_seed: self.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmId {
    Alg1,
    Alg2,
    Alg3,
    Cde,
    Bcd,
}

impl AlgorithmId {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmId::Alg1 => "alg1",
            AlgorithmId::Alg2 => "alg2",
            AlgorithmId::Alg3 => "alg3",
            AlgorithmId::Cde => "cde",
            AlgorithmId::Bcd => "bcd",
        }
    }
}

/// Optional per-algorithm solver overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolveTuning {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_max_sweeps: Option<usize>,
}

impl SolveTuning {
    pub fn solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        if let Some(v) = self.rho {
            o.rho = v;
        }
        if let Some(v) = self.max_iters {
            o.max_iters = v;
        }
        if let Some(v) = self.tol_step {
            o.tol_step = v;
        }
        o
    }

    pub fn consensus_options(&self) -> ConsensusOptions {
        let mut o = ConsensusOptions::default();
        if let Some(v) = self.rho {
            o.rho = v;
        }
        if let Some(v) = self.max_iters {
            o.max_iters = v;
        }
        if let Some(v) = self.tol_step {
            o.tol_step = v;
        }
        if let Some(v) = self.mu {
            o.mu = v;
        }
        if let Some(v) = self.delta {
            o.delta = v;
        }
        if let Some(v) = self.inner_max_iters {
            o.inner_max_iters = v;
        }
        if let Some(v) = self.local_max_sweeps {
            o.local_cd.max_sweeps = v;
        }
        o
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FronthaulSpec {
    /// Quantizer bits per real-valued scalar.
    pub bits: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub algorithm: AlgorithmId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub solve: SolveTuning,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fronthaul: Option<FronthaulSpec>,
}

impl AlgorithmSpec {
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.fronthaul {
            Some(f) => format!("{}-q{}", self.algorithm.name(), f.bits),
            None => self.algorithm.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    None,
    /// Vary the maximum delay, holding the effective length L+T fixed.
    T,
    /// Vary the AP count, holding the total antenna count M*N fixed.
    M,
    /// Vary the total antenna count at fixed M.
    TotalAntennas,
    /// Vary the fronthaul quantizer bits of every configured fronthaul.
    Bits,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<u64>,
}

fn default_gamma_grid() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    pub trials: usize,
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: usize,
    #[serde(default)]
    pub emit_traces: bool,
}

/// One fully-resolved run point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Directory-safe tag, e.g. `t_4` or `point`.
    pub tag: String,
    /// Human digest of what changed.
    pub digest: String,
    pub config: SystemConfig,
    pub algorithms: Vec<AlgorithmSpec>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SpecError::SchemaVersion(self.schema_version));
        }
        self.system
            .to_config()
            .validate()
            .map_err(|e| invalid(&format!("system.{}", e.field), e.message))?;
        if self.algorithms.is_empty() {
            return Err(invalid("algorithms", "at least one algorithm required"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.gamma_grid < 2 {
            return Err(invalid("gamma_grid", "need at least 2 threshold points"));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            if let Some(f) = &a.fronthaul {
                if !matches!(a.algorithm, AlgorithmId::Alg1 | AlgorithmId::Alg3) {
                    return Err(invalid(
                        &format!("algorithms[{i}].fronthaul"),
                        "fronthaul quantization is modeled for alg1 and alg3 only",
                    ));
                }
                if !(1..=31).contains(&f.bits) {
                    return Err(invalid(
                        &format!("algorithms[{i}].fronthaul.bits"),
                        "bits must lie in 1..=31",
                    ));
                }
            }
            if !labels.insert(a.label()) {
                return Err(invalid(
                    &format!("algorithms[{i}].label"),
                    format!("duplicate label '{}'", a.label()),
                ));
            }
        }
        match self.sweep.axis {
            SweepAxis::None => {
                if !self.sweep.values.is_empty() {
                    return Err(invalid("sweep.values", "axis 'none' takes no values"));
                }
            }
            _ => {
                if self.sweep.values.is_empty() {
                    return Err(invalid("sweep.values", "sweep needs at least one value"));
                }
            }
        }
        // verify each sweep point resolves
        self.sweep_points()?;
        Ok(())
    }

    /// Expand the sweep into concrete run points.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>, SpecError> {
        let base = self.system.to_config();
        let mut points = Vec::new();
        match self.sweep.axis {
            SweepAxis::None => points.push(SweepPoint {
                tag: "point".to_string(),
                digest: format!(
                    "M={} N={} K={} L={} T={}",
                    base.num_aps,
                    base.antennas_per_ap,
                    base.num_devices,
                    base.sig_len,
                    base.max_delay
                ),
                config: base,
                algorithms: self.algorithms.clone(),
            }),
            SweepAxis::T => {
                let eff = base.sig_len + base.max_delay;
                for &v in &self.sweep.values {
                    let t = v as usize;
                    if t + 1 > eff {
                        return Err(invalid(
                            "sweep.values",
                            format!("T={t} leaves no room for a signature (L+T={eff})"),
                        ));
                    }
                    let mut cfg = base.clone();
                    cfg.max_delay = t;
                    cfg.sig_len = eff - t;
                    points.push(SweepPoint {
                        tag: format!("t_{t}"),
                        digest: format!("T={t} L={} (L+T={eff})", cfg.sig_len),
                        config: cfg,
                        algorithms: self.algorithms.clone(),
                    });
                }
            }
            SweepAxis::M => {
                let total = base.num_aps * base.antennas_per_ap;
                for &v in &self.sweep.values {
                    let m = v as usize;
                    if m == 0 || total % m != 0 {
                        return Err(invalid(
                            "sweep.values",
                            format!("total antennas {total} not divisible by M={m}"),
                        ));
                    }
                    let mut cfg = base.clone();
                    cfg.num_aps = m;
                    cfg.antennas_per_ap = total / m;
                    points.push(SweepPoint {
                        tag: format!("m_{m}"),
                        digest: format!("M={m} N={} (MN={total})", cfg.antennas_per_ap),
                        config: cfg,
                        algorithms: self.algorithms.clone(),
                    });
                }
            }
            SweepAxis::TotalAntennas => {
                for &v in &self.sweep.values {
                    let total = v as usize;
                    if total == 0 || total % base.num_aps != 0 {
                        return Err(invalid(
                            "sweep.values",
                            format!(
                                "total antennas {total} not divisible by M={}",
                                base.num_aps
                            ),
                        ));
                    }
                    let mut cfg = base.clone();
                    cfg.antennas_per_ap = total / base.num_aps;
                    points.push(SweepPoint {
                        tag: format!("antennas_{total}"),
                        digest: format!("MN={total} N={}", cfg.antennas_per_ap),
                        config: cfg,
                        algorithms: self.algorithms.clone(),
                    });
                }
            }
            SweepAxis::Bits => {
                if !self
                    .algorithms
                    .iter()
                    .any(|a| a.fronthaul.is_some())
                {
                    return Err(invalid(
                        "sweep.axis",
                        "bits sweep requires at least one algorithm with a fronthaul",
                    ));
                }
                for &v in &self.sweep.values {
                    let bits = v as u32;
                    if !(1..=31).contains(&bits) {
                        return Err(invalid(
                            "sweep.values",
                            format!("bits {bits} outside 1..=31"),
                        ));
                    }
                    let mut algorithms = self.algorithms.clone();
                    for a in algorithms.iter_mut() {
                        if let Some(f) = a.fronthaul.as_mut() {
                            f.bits = bits;
                        }
                    }
                    points.push(SweepPoint {
                        tag: format!("bits_{bits}"),
                        digest: format!("fronthaul bits={bits}"),
                        config: base.clone(),
                        algorithms,
                    });
                }
            }
        }
        Ok(points)
    }

    /// Shrink the network and trial count for desk runs.
    pub fn apply_scale(&mut self, scale: f64) {
        assert!(scale > 0.0);
        let shrink = |v: usize, min: usize| ((v as f64 * scale).round() as usize).max(min);
        self.system.num_devices = shrink(self.system.num_devices, 2);
        self.system.num_aps = shrink(self.system.num_aps, 1);
        self.system.antennas_per_ap = shrink(self.system.antennas_per_ap, 1);
        self.trials = shrink(self.trials, 1);
    }
}

fn alg(algorithm: AlgorithmId) -> AlgorithmSpec {
    AlgorithmSpec {
        algorithm,
        label: None,
        solve: SolveTuning::default(),
        fronthaul: None,
    }
}

fn alg_q(algorithm: AlgorithmId, bits: u32) -> AlgorithmSpec {
    AlgorithmSpec {
        fronthaul: Some(FronthaulSpec { bits }),
        ..alg(algorithm)
    }
}

fn with_max_iters(mut a: AlgorithmSpec, iters: usize) -> AlgorithmSpec {
    a.solve.max_iters = Some(iters);
    a
}

/// Named experiment presets mirroring the standard evaluation setups.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let base = |algorithms: Vec<AlgorithmSpec>| ExperimentSpec {
        schema_version: SCHEMA_VERSION,
        system: SystemSpec::default(),
        algorithms,
        sweep: SweepSpec::default(),
        trials: 1000,
        gamma_grid: 101,
        emit_traces: false,
    };
    let spec = match name {
        // centralized detector vs reference detectors at the standard point
        "fig1" => base(vec![
            alg(AlgorithmId::Alg1),
            alg(AlgorithmId::Cde),
            alg(AlgorithmId::Bcd),
        ]),
        // delay sweep at fixed effective length
        "fig2a" => {
            let mut s = base(vec![
                alg(AlgorithmId::Alg1),
                alg(AlgorithmId::Cde),
                alg(AlgorithmId::Bcd),
            ]);
            s.sweep = SweepSpec {
                axis: SweepAxis::T,
                values: (0..=8).collect(),
            };
            s
        }
        // AP sweep at fixed total antenna count
        "fig2b" => {
            let mut s = base(vec![
                alg(AlgorithmId::Alg1),
                alg(AlgorithmId::Cde),
                alg(AlgorithmId::Bcd),
            ]);
            s.sweep = SweepSpec {
                axis: SweepAxis::M,
                values: vec![1, 2, 4, 8, 16],
            };
            s
        }
        // iteration traces of the distributed solvers
        "fig3" => {
            let mut s = base(vec![
                alg(AlgorithmId::Alg1),
                with_max_iters(alg(AlgorithmId::Alg2), 8),
                with_max_iters(alg(AlgorithmId::Alg3), 8),
            ]);
            s.trials = 100;
            s.emit_traces = true;
            s
        }
        // quantized detectors across the delay sweep
        "fig4" => {
            let mut s = base(vec![
                alg(AlgorithmId::Alg1),
                alg_q(AlgorithmId::Alg1, 16),
                alg_q(AlgorithmId::Alg1, 14),
                with_max_iters(alg_q(AlgorithmId::Alg3, 4), 3),
            ]);
            s.sweep = SweepSpec {
                axis: SweepAxis::T,
                values: (0..=8).collect(),
            };
            s.trials = 200;
            s
        }
        // raw-vs-entropy-coded bit totals
        "fig5" => {
            let mut s = base(vec![
                alg_q(AlgorithmId::Alg1, 11),
                alg_q(AlgorithmId::Alg1, 14),
                alg_q(AlgorithmId::Alg1, 16),
                with_max_iters(alg_q(AlgorithmId::Alg3, 4), 3),
            ]);
            s.trials = 200;
            s
        }
        // exact one-shot bit budgets
        "bits" => {
            let mut s = base(vec![
                alg_q(AlgorithmId::Alg1, 14),
                with_max_iters(alg_q(AlgorithmId::Alg3, 4), 1),
            ]);
            s.trials = 1;
            s
        }
        _ => return None,
    };
    Some(spec)
}

pub fn preset_names() -> &'static [&'static str] {
    &["fig1", "fig2a", "fig2b", "fig3", "fig4", "fig5", "bits"]
}
