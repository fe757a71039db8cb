//! Random scenario generation and received-signal synthesis.
//!
//! A scenario places APs and devices uniformly on a wrap-around square,
//! draws log-normal shadowed pathloss gains, fixes the active set and the
//! per-device delays, and assigns transmit powers by percentile power
//! control. Synthesis then produces the per-AP received block
//! `Y_m = sum_k a_k sqrt(p_k g_km) s_{k,t_k} h_km^T + W_m` together with its
//! sample covariance and the delay-shifted effective signatures.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::likelihood::Problem;
use crate::linalg::{C64, CMat};
use crate::math;

/// Pathloss model floor; closer than this the log-distance fit is meaningless
/// and the gain would diverge.
const MIN_PATHLOSS_DISTANCE_M: f64 = 1.0;

/// Stream ids so scenario draws and channel/noise draws never overlap for the
/// same trial seed.
const STREAM_SCENARIO: u64 = 0;
const STREAM_RECEIVED: u64 = 1;

/// Per-trial seed derivation: trials are reproducible and independently
/// schedulable.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    base_seed ^ trial_index
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw of CN(0, 1): real and imaginary parts N(0, 1/2).
fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// A generated network realization with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ap_positions: Vec<[f64; 2]>,
    pub device_positions: Vec<[f64; 2]>,
    /// Linear power gains, k-major: `gains[k * M + m]`.
    pub gains: Vec<f64>,
    /// Linear transmit powers, mW.
    pub powers: Vec<f64>,
    /// Linear noise power per AP, mW.
    pub noise_var: Vec<f64>,
    /// Signature sequences, k-major: `signatures[k * L .. (k+1) * L]`.
    pub signatures: Vec<C64>,
    pub activity: Vec<bool>,
    /// Transmission delay in symbols; `None` for inactive devices.
    pub delays: Vec<Option<usize>>,
    /// Ground-truth activity/delay indicator, length K(T+1).
    pub truth: Vec<bool>,
    pub num_aps: usize,
    pub sig_len: usize,
    pub max_delay: usize,
}

impl Scenario {
    pub fn num_devices(&self) -> usize {
        self.powers.len()
    }

    #[inline]
    pub fn gain(&self, k: usize, m: usize) -> f64 {
        self.gains[k * self.num_aps + m]
    }

    pub fn signature(&self, k: usize) -> &[C64] {
        &self.signatures[k * self.sig_len..(k + 1) * self.sig_len]
    }
}

/// Euclidean distance with per-axis wrap-around.
pub fn torus_distance(p: [f64; 2], q: [f64; 2], side: f64) -> f64 {
    let wrap = |a: f64, b: f64| {
        let d = (a - b).abs();
        if d > side - d {
            side - d
        } else {
            d
        }
    };
    math::hypot(wrap(p[0], q[0]), wrap(p[1], q[1]))
}

/// Percentile power control: the target SNR at the dominant AP is the value
/// achievable by a `power_percentile` fraction of all devices; everyone else
/// transmits at the cap.
pub fn assign_powers(gains: &[f64], config: &SystemConfig) -> Vec<f64> {
    let k = config.num_devices;
    let m = config.num_aps;
    let p_max = config.max_tx_power();
    let noise = config.noise_var();

    let dominant: Vec<f64> = (0..k)
        .map(|ki| {
            gains[ki * m..(ki + 1) * m]
                .iter()
                .cloned()
                .fold(f64::MIN, f64::max)
        })
        .collect();
    let mut snrs: Vec<f64> = dominant.iter().map(|g| p_max * g / noise).collect();
    snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = (((1.0 - config.power_percentile) * k as f64) as usize).min(k - 1);
    let target = snrs[idx];

    dominant
        .iter()
        .map(|g| (target * noise / g).min(p_max))
        .collect()
}

/// Ground-truth indicator of Eq.-style blockwise activity: one entry per
/// (device, delay), at most one set per device.
pub fn true_indicator(scenario: &Scenario) -> Vec<bool> {
    let t1 = scenario.max_delay + 1;
    let mut out = vec![false; scenario.num_devices() * t1];
    for k in 0..scenario.num_devices() {
        if scenario.activity[k] {
            let t = scenario.delays[k].expect("active device has a delay");
            out[k * t1 + t] = true;
        }
    }
    out
}

/// Deterministically generate a scenario from `(config, trial_seed)`.
pub fn generate_scenario(config: &SystemConfig, trial_seed: u64) -> Scenario {
    let mut rng = rng_for(trial_seed, STREAM_SCENARIO);
    let m = config.num_aps;
    let k = config.num_devices;
    let side = config.area_side;

    let draw_point = |rng: &mut ChaCha8Rng| [rng.random_range(0.0..side), rng.random_range(0.0..side)];
    let ap_positions: Vec<[f64; 2]> = (0..m).map(|_| draw_point(&mut rng)).collect();
    let device_positions: Vec<[f64; 2]> = (0..k).map(|_| draw_point(&mut rng)).collect();

    let mut gains = vec![0.0f64; k * m];
    for ki in 0..k {
        for mi in 0..m {
            let d = torus_distance(device_positions[ki], ap_positions[mi], side)
                .max(MIN_PATHLOSS_DISTANCE_M);
            let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * config.shadow_std_db;
            let gain_db = config.pathloss_intercept_db
                + config.pathloss_slope_db_per_decade * math::log10(d)
                + shadow;
            gains[ki * m + mi] = math::db_to_linear(gain_db);
        }
    }

    let powers = assign_powers(&gains, config);

    let mut activity = vec![false; k];
    for idx in rand::seq::index::sample(&mut rng, k, config.num_active()).into_iter() {
        activity[idx] = true;
    }
    let delays: Vec<Option<usize>> = activity
        .iter()
        .map(|&a| {
            if a {
                Some(rng.random_range(0..=config.max_delay))
            } else {
                None
            }
        })
        .collect();

    let mut signatures = vec![C64::new(0.0, 0.0); k * config.sig_len];
    for s in signatures.iter_mut() {
        *s = complex_gaussian(&mut rng);
    }

    let mut scenario = Scenario {
        ap_positions,
        device_positions,
        gains,
        powers,
        noise_var: vec![config.noise_var(); m],
        signatures,
        activity,
        delays,
        truth: Vec::new(),
        num_aps: m,
        sig_len: config.sig_len,
        max_delay: config.max_delay,
    };
    scenario.truth = true_indicator(&scenario);
    scenario
}

/// Per-AP received block plus everything the detectors consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedData {
    /// Detector side information (gains, powers, signatures, noise).
    pub problem: Problem,
    /// Raw received blocks, row-major (L+T) x N per AP.
    pub y: Vec<Vec<C64>>,
    /// Sample covariances `Y_m Y_mᴴ / N`.
    pub sample_cov: Vec<CMat>,
    /// Effective signatures: `eff_sigs[k][t]` is the dense delay-t shift of
    /// signature k, length L+T.
    pub eff_sigs: Vec<Vec<Vec<C64>>>,
}

/// Synthesize channels, noise, and the received blocks for a scenario.
///
/// The trial seed only controls the channel/noise stream; the scenario's own
/// draws come from a disjoint stream of the same seed.
pub fn synthesize_received(
    scenario: &Scenario,
    config: &SystemConfig,
    trial_seed: u64,
) -> ReceivedData {
    let mut rng = rng_for(trial_seed, STREAM_RECEIVED);
    let m = config.num_aps;
    let n = config.antennas_per_ap;
    let k = config.num_devices;
    let rows = config.eff_len();

    // Channel vectors for active devices, drawn in a fixed (k, m) order.
    let active: Vec<usize> = (0..k).filter(|&ki| scenario.activity[ki]).collect();
    let mut channels = vec![C64::new(0.0, 0.0); active.len() * m * n];
    for h in channels.iter_mut() {
        *h = complex_gaussian(&mut rng);
    }

    let mut y = Vec::with_capacity(m);
    for mi in 0..m {
        let mut block = vec![C64::new(0.0, 0.0); rows * n];
        for (ai, &ki) in active.iter().enumerate() {
            let t = scenario.delays[ki].unwrap();
            let amp = math::sqrt(scenario.powers[ki] * scenario.gain(ki, mi));
            let h = &channels[(ai * m + mi) * n..(ai * m + mi + 1) * n];
            let sig = scenario.signature(ki);
            for (li, s) in sig.iter().enumerate() {
                let row = (t + li) * n;
                let coeff = amp * s;
                for (j, hj) in h.iter().enumerate() {
                    block[row + j] += coeff * hj;
                }
            }
        }
        let noise_amp = math::sqrt(scenario.noise_var[mi]);
        for w in block.iter_mut() {
            *w += noise_amp * complex_gaussian(&mut rng);
        }
        y.push(block);
    }

    let sample_cov: Vec<CMat> = y
        .iter()
        .map(|block| CMat::gram_rows(rows, n, block, 1.0 / n as f64))
        .collect();

    let problem = Problem::from_scenario(scenario, config);
    let eff_sigs = (0..k)
        .map(|ki| {
            (0..=config.max_delay)
                .map(|t| problem.eff_sig_dense(ki, t))
                .collect()
        })
        .collect();

    ReceivedData {
        problem,
        y,
        sample_cov,
        eff_sigs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_config() -> SystemConfig {
        SystemConfig {
            num_aps: 3,
            antennas_per_ap: 4,
            num_devices: 20,
            sig_len: 6,
            max_delay: 2,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn torus_identity_and_wraparound() {
        assert_eq!(torus_distance([0.0, 0.0], [0.0, 0.0], 1000.0), 0.0);
        assert!((torus_distance([0.0, 0.0], [999.0, 0.0], 1000.0) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn torus_distance_bounded(ax in 0.0..1000.0, ay in 0.0..1000.0,
                                  bx in 0.0..1000.0, by in 0.0..1000.0) {
            let d = torus_distance([ax, ay], [bx, by], 1000.0);
            prop_assert!(d <= 1000.0 * core::f64::consts::SQRT_2 / 2.0 + 1e-9);
            prop_assert!(d >= 0.0);
        }
    }

    #[test]
    fn pathloss_at_ten_meters_no_shadowing() {
        // gain(10 m) = -30.5 - 36.7 * log10(10) = -67.2 dB
        let cfg = SystemConfig::default();
        let gain_db =
            cfg.pathloss_intercept_db + cfg.pathloss_slope_db_per_decade * 10f64.log10();
        assert!((gain_db - (-67.2)).abs() < 1e-12);
        assert!((math::db_to_linear(gain_db) - 10f64.powf(-6.72)).abs() < 1e-18);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_config();
        let a = generate_scenario(&cfg, 42);
        let b = generate_scenario(&cfg, 42);
        assert_eq!(a, b);
        let recv_a = synthesize_received(&a, &cfg, 42);
        let recv_b = synthesize_received(&b, &cfg, 42);
        assert_eq!(recv_a, recv_b);
        // Different seed actually changes the draw.
        let c = generate_scenario(&cfg, 43);
        assert_ne!(a.device_positions, c.device_positions);
    }

    #[test]
    fn active_count_is_exact_and_blocks_have_single_delay() {
        let cfg = small_config();
        for seed in 0..20u64 {
            let s = generate_scenario(&cfg, seed);
            let active = s.activity.iter().filter(|&&a| a).count();
            assert_eq!(active, cfg.num_active());
            let truth = true_indicator(&s);
            assert_eq!(truth.iter().filter(|&&b| b).count(), active);
            for k in 0..cfg.num_devices {
                let ones = truth[k * 3..(k + 1) * 3].iter().filter(|&&b| b).count();
                assert!(ones <= 1);
                assert_eq!(ones == 1, s.activity[k]);
            }
        }
    }

    #[test]
    fn indicator_matches_hand_example() {
        // a = (1, 0), t_1 = 2, T = 2 -> (0,0,1, 0,0,0)
        let cfg = SystemConfig {
            num_devices: 2,
            max_delay: 2,
            ..small_config()
        };
        let mut s = generate_scenario(&cfg, 0);
        s.activity = vec![true, false];
        s.delays = vec![Some(2), None];
        assert_eq!(
            true_indicator(&s),
            vec![false, false, true, false, false, false]
        );
    }

    #[test]
    fn power_control_hits_target_or_cap() {
        let cfg = SystemConfig {
            num_devices: 40,
            ..small_config()
        };
        let s = generate_scenario(&cfg, 9);
        let noise = cfg.noise_var();
        let p_max = cfg.max_tx_power();
        let m = cfg.num_aps;
        let dominant: Vec<f64> = (0..cfg.num_devices)
            .map(|k| {
                s.gains[k * m..(k + 1) * m]
                    .iter()
                    .cloned()
                    .fold(f64::MIN, f64::max)
            })
            .collect();
        let achieved: Vec<f64> = (0..cfg.num_devices)
            .map(|k| s.powers[k] * dominant[k] / noise)
            .collect();
        let target = achieved.iter().cloned().fold(f64::MIN, f64::max);
        let mut reached = 0;
        for k in 0..cfg.num_devices {
            assert!(s.powers[k] <= p_max * (1.0 + 1e-12));
            if (achieved[k] - target).abs() <= target * 1e-9 {
                reached += 1;
            } else {
                // below target means the cap bound
                assert!((s.powers[k] - p_max).abs() <= p_max * 1e-12);
            }
        }
        assert!(reached as f64 >= cfg.power_percentile * cfg.num_devices as f64);
    }

    #[test]
    fn identical_dominant_gains_share_power() {
        let cfg = SystemConfig {
            num_devices: 4,
            num_aps: 2,
            ..SystemConfig::default()
        };
        let g = math::db_to_linear(-67.2);
        let gains = vec![g; 4 * 2];
        let powers = assign_powers(&gains, &cfg);
        for p in &powers {
            assert!((p - powers[0]).abs() < 1e-18);
        }
        // link budget: p = target snr * noise / gain, uncapped here
        let snr = cfg.max_tx_power() * g / cfg.noise_var();
        assert!((powers[0] - snr * cfg.noise_var() / g).abs() < 1e-12);
    }

    #[test]
    fn noise_only_received_block() {
        let cfg = small_config();
        let mut s = generate_scenario(&cfg, 5);
        s.activity = vec![false; cfg.num_devices];
        s.delays = vec![None; cfg.num_devices];
        s.truth = true_indicator(&s);
        let recv = synthesize_received(&s, &cfg, 5);
        let rows = cfg.eff_len();
        let sigma2 = cfg.noise_var();
        for r in &recv.sample_cov {
            let mean_diag: f64 =
                (0..rows).map(|i| r[(i, i)].re).sum::<f64>() / rows as f64;
            let tol = 5.0 * sigma2 / ((cfg.antennas_per_ap * rows) as f64).sqrt();
            assert!((mean_diag - sigma2).abs() < tol);
        }
    }

    #[test]
    fn single_device_noiseless_columns_are_scaled_signatures() {
        // With one active device and h = 1-vector, each column of Y equals
        // sqrt(p g) * s_{k,t}; we emulate by zero noise and comparing the
        // deterministic part via the model covariance instead of patching h:
        // covariance of the signal part must be p*g*s sᴴ.
        let cfg = SystemConfig {
            num_devices: 1,
            num_aps: 1,
            activity_ratio: 0.9,
            ..small_config()
        };
        let s = generate_scenario(&cfg, 3);
        assert!(s.activity[0]);
        let recv = synthesize_received(&s, &cfg, 3);
        let t = s.delays[0].unwrap();
        let sig = &recv.eff_sigs[0][t];
        // leading zeros / trailing zeros layout of the effective signature
        for i in 0..t {
            assert_eq!(sig[i], C64::new(0.0, 0.0));
        }
        for i in (t + cfg.sig_len)..cfg.eff_len() {
            assert_eq!(sig[i], C64::new(0.0, 0.0));
        }
        for i in 0..cfg.sig_len {
            assert_eq!(sig[t + i], s.signature(0)[i]);
        }
    }

    #[test]
    fn sample_cov_is_hermitian_psd() {
        let cfg = small_config();
        let s = generate_scenario(&cfg, 17);
        let recv = synthesize_received(&s, &cfg, 17);
        for r in &recv.sample_cov {
            assert!(r.hermitian_defect() < 1e-12);
            // R + eps I must factor
            let mut shifted = r.clone();
            for i in 0..r.dim() {
                shifted[(i, i)] += C64::new(1e-12, 0.0);
            }
            assert!(shifted.cholesky().is_ok());
        }
    }
}
