//! JSON serialization of scenarios and received data for oracle
//! cross-checking.
//!
//! Layout: complex numbers are `[re, im]` pairs; matrices are row-major
//! nested arrays. A scenario document carries every generated quantity
//! including the ground truth; a received-data document adds the raw blocks,
//! sample covariances, and effective signatures.

use asyncact_core::likelihood::Problem;
use asyncact_core::linalg::{C64, CMat};
use asyncact_core::scenario::{ReceivedData, Scenario};
use serde::{Deserialize, Serialize};

type Cx = [f64; 2];

fn cx(v: C64) -> Cx {
    [v.re, v.im]
}

fn uncx(v: Cx) -> C64 {
    C64::new(v[0], v[1])
}

fn mat_rows(m: &CMat) -> Vec<Vec<Cx>> {
    (0..m.dim())
        .map(|i| m.row(i).iter().map(|&v| cx(v)).collect())
        .collect()
}

fn unmat_rows(rows: &[Vec<Cx>]) -> CMat {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        assert_eq!(row.len(), n, "matrix must be square");
        data.extend(row.iter().map(|&v| uncx(v)));
    }
    CMat::from_rows(n, data)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub num_aps: usize,
    pub sig_len: usize,
    pub max_delay: usize,
    pub ap_positions: Vec<[f64; 2]>,
    pub device_positions: Vec<[f64; 2]>,
    /// Linear gains, one row of length `num_aps` per device.
    pub gains: Vec<Vec<f64>>,
    /// Linear transmit powers, mW.
    pub powers: Vec<f64>,
    /// Linear noise power per AP, mW.
    pub noise_var: Vec<f64>,
    /// One length-L complex signature per device.
    pub signatures: Vec<Vec<Cx>>,
    pub activity: Vec<bool>,
    /// Delay per device, null for inactive.
    pub delays: Vec<Option<usize>>,
    /// Ground-truth indicator, length K(T+1).
    pub truth: Vec<bool>,
}

impl From<&Scenario> for ScenarioJson {
    fn from(s: &Scenario) -> Self {
        let k = s.num_devices();
        Self {
            num_aps: s.num_aps,
            sig_len: s.sig_len,
            max_delay: s.max_delay,
            ap_positions: s.ap_positions.clone(),
            device_positions: s.device_positions.clone(),
            gains: (0..k)
                .map(|ki| (0..s.num_aps).map(|mi| s.gain(ki, mi)).collect())
                .collect(),
            powers: s.powers.clone(),
            noise_var: s.noise_var.clone(),
            signatures: (0..k)
                .map(|ki| s.signature(ki).iter().map(|&v| cx(v)).collect())
                .collect(),
            activity: s.activity.clone(),
            delays: s.delays.clone(),
            truth: s.truth.clone(),
        }
    }
}

impl ScenarioJson {
    pub fn to_scenario(&self) -> Scenario {
        let gains = self.gains.iter().flatten().cloned().collect();
        let signatures = self
            .signatures
            .iter()
            .flatten()
            .map(|&v| uncx(v))
            .collect();
        Scenario {
            ap_positions: self.ap_positions.clone(),
            device_positions: self.device_positions.clone(),
            gains,
            powers: self.powers.clone(),
            noise_var: self.noise_var.clone(),
            signatures,
            activity: self.activity.clone(),
            delays: self.delays.clone(),
            truth: self.truth.clone(),
            num_aps: self.num_aps,
            sig_len: self.sig_len,
            max_delay: self.max_delay,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReceivedJson {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_devices: usize,
    pub sig_len: usize,
    pub max_delay: usize,
    /// `p_k g_km`, one row of length `num_aps` per device.
    pub coeff: Vec<Vec<f64>>,
    pub noise_var: Vec<f64>,
    pub signatures: Vec<Vec<Cx>>,
    /// Row-major (L+T) x N received block per AP.
    pub y: Vec<Vec<Vec<Cx>>>,
    /// (L+T) x (L+T) Hermitian sample covariance per AP.
    pub sample_cov: Vec<Vec<Vec<Cx>>>,
    /// Effective signatures: `eff_sigs[k][t]` is a length L+T column.
    pub eff_sigs: Vec<Vec<Vec<Cx>>>,
}

impl From<&ReceivedData> for ReceivedJson {
    fn from(d: &ReceivedData) -> Self {
        let p = &d.problem;
        let rows = p.eff_len();
        let n = p.antennas_per_ap;
        Self {
            num_aps: p.num_aps,
            antennas_per_ap: n,
            num_devices: p.num_devices,
            sig_len: p.sig_len,
            max_delay: p.max_delay,
            coeff: (0..p.num_devices)
                .map(|k| (0..p.num_aps).map(|m| p.coeff(k, m)).collect())
                .collect(),
            noise_var: p.noise_var.clone(),
            signatures: (0..p.num_devices)
                .map(|k| p.signature(k).iter().map(|&v| cx(v)).collect())
                .collect(),
            y: d
                .y
                .iter()
                .map(|block| {
                    (0..rows)
                        .map(|i| block[i * n..(i + 1) * n].iter().map(|&v| cx(v)).collect())
                        .collect()
                })
                .collect(),
            sample_cov: d.sample_cov.iter().map(mat_rows).collect(),
            eff_sigs: d
                .eff_sigs
                .iter()
                .map(|cols| {
                    cols.iter()
                        .map(|col| col.iter().map(|&v| cx(v)).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl ReceivedJson {
    pub fn to_received(&self) -> ReceivedData {
        let problem = Problem {
            num_aps: self.num_aps,
            antennas_per_ap: self.antennas_per_ap,
            num_devices: self.num_devices,
            sig_len: self.sig_len,
            max_delay: self.max_delay,
            coeff: self.coeff.iter().flatten().cloned().collect(),
            signatures: self.signatures.iter().flatten().map(|&v| uncx(v)).collect(),
            noise_var: self.noise_var.clone(),
        };
        ReceivedData {
            problem,
            y: self
                .y
                .iter()
                .map(|rows| rows.iter().flatten().map(|&v| uncx(v)).collect())
                .collect(),
            sample_cov: self.sample_cov.iter().map(|rows| unmat_rows(rows)).collect(),
            eff_sigs: self
                .eff_sigs
                .iter()
                .map(|cols| {
                    cols.iter()
                        .map(|col| col.iter().map(|&v| uncx(v)).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use asyncact_core::config::SystemConfig;
    use asyncact_core::scenario::{generate_scenario, synthesize_received};

    #[test]
    fn scenario_and_received_roundtrip() {
        let cfg = SystemConfig {
            num_aps: 2,
            antennas_per_ap: 3,
            num_devices: 5,
            sig_len: 4,
            max_delay: 2,
            ..SystemConfig::default()
        };
        let s = generate_scenario(&cfg, 99);
        let text = serde_json::to_string(&ScenarioJson::from(&s)).unwrap();
        let back: ScenarioJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_scenario(), s);

        let d = synthesize_received(&s, &cfg, 99);
        let text = serde_json::to_string(&ReceivedJson::from(&d)).unwrap();
        let back: ReceivedJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_received(), d);
    }

    #[test]
    fn complex_entries_are_re_im_pairs() {
        let cfg = SystemConfig {
            num_aps: 1,
            antennas_per_ap: 2,
            num_devices: 2,
            sig_len: 3,
            max_delay: 0,
            ..SystemConfig::default()
        };
        let s = generate_scenario(&cfg, 1);
        let value = serde_json::to_value(ScenarioJson::from(&s)).unwrap();
        let first = &value["signatures"][0][0];
        assert!(first.is_array());
        assert_eq!(first.as_array().unwrap().len(), 2);
    }
}
