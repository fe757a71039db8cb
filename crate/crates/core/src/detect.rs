//! Missed-detection / false-alarm metrics, ROC sweeps, and the equal-error
//! operating point.
//!
//! Detection thresholds a soft block at `gamma` (strictly greater); when a
//! block clears the threshold the device is deemed detected at the block's
//! argmax entry (lowest index on ties). An active device counts as missed
//! unless it is detected at exactly its true delay; an inactive device
//! false-alarms when anything in its block clears the threshold.

use alloc::vec::Vec;

use crate::likelihood::SoftActivity;

/// One device's reduced detection state: block maximum and its position,
/// plus the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceOutcome {
    /// Largest soft value in the block.
    pub score: f64,
    /// Argmax position (lowest index on ties).
    pub claimed: usize,
    /// True delay for active devices, `None` for inactive.
    pub truth: Option<usize>,
}

/// Reduce a trial to per-device outcomes. `truth` is the K(T+1) indicator.
pub fn device_outcomes(soft: &SoftActivity, truth: &[bool]) -> Vec<DeviceOutcome> {
    let t1 = soft.block_len();
    debug_assert_eq!(truth.len(), soft.values().len());
    (0..soft.num_blocks())
        .map(|k| {
            let block = soft.block(k);
            let mut claimed = 0usize;
            for (t, v) in block.iter().enumerate() {
                if *v > block[claimed] {
                    claimed = t;
                }
            }
            let truth_delay = truth[k * t1..(k + 1) * t1].iter().position(|&b| b);
            DeviceOutcome {
                score: block[claimed],
                claimed,
                truth: truth_delay,
            }
        })
        .collect()
}

/// Integer detection counters; merging pools is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectionCounts {
    pub missed: u64,
    pub active: u64,
    pub false_alarms: u64,
    pub inactive: u64,
}

impl DetectionCounts {
    pub fn accumulate(&mut self, outcomes: &[DeviceOutcome], gamma: f64) {
        for o in outcomes {
            match o.truth {
                Some(t) => {
                    self.active += 1;
                    let detected = o.score > gamma && o.claimed == t;
                    if !detected {
                        self.missed += 1;
                    }
                }
                None => {
                    self.inactive += 1;
                    if o.score > gamma {
                        self.false_alarms += 1;
                    }
                }
            }
        }
    }

    /// Probability of missed detection; `None` when no device was active.
    pub fn pm(&self) -> Option<f64> {
        (self.active > 0).then(|| self.missed as f64 / self.active as f64)
    }

    /// Probability of false alarm; `None` when no device was inactive.
    pub fn pf(&self) -> Option<f64> {
        (self.inactive > 0).then(|| self.false_alarms as f64 / self.inactive as f64)
    }

    pub fn merge(&mut self, other: &DetectionCounts) {
        self.missed += other.missed;
        self.active += other.active;
        self.false_alarms += other.false_alarms;
        self.inactive += other.inactive;
    }
}

/// PM/PF of a single trial at one threshold.
pub fn detection_metrics(
    soft: &SoftActivity,
    truth: &[bool],
    gamma: f64,
) -> (Option<f64>, Option<f64>) {
    let outcomes = device_outcomes(soft, truth);
    let mut counts = DetectionCounts::default();
    counts.accumulate(&outcomes, gamma);
    (counts.pm(), counts.pf())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub gamma: f64,
    pub pm: Option<f64>,
    pub pf: Option<f64>,
}

/// Metrics over an ascending threshold grid.
pub fn roc_sweep(soft: &SoftActivity, truth: &[bool], grid: &[f64]) -> Vec<RocPoint> {
    let outcomes = device_outcomes(soft, truth);
    grid.iter()
        .map(|&gamma| {
            let mut counts = DetectionCounts::default();
            counts.accumulate(&outcomes, gamma);
            RocPoint {
                gamma,
                pm: counts.pm(),
                pf: counts.pf(),
            }
        })
        .collect()
}

/// Device outcomes pooled over trials; all metrics are computed from the
/// pooled integer counters.
#[derive(Debug, Clone, Default)]
pub struct DetectionPool {
    outcomes: Vec<DeviceOutcome>,
}

impl DetectionPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_trial(&mut self, soft: &SoftActivity, truth: &[bool]) {
        self.outcomes.extend(device_outcomes(soft, truth));
    }

    pub fn push_outcomes(&mut self, outcomes: &[DeviceOutcome]) {
        self.outcomes.extend_from_slice(outcomes);
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn counts_at(&self, gamma: f64) -> DetectionCounts {
        let mut counts = DetectionCounts::default();
        counts.accumulate(&self.outcomes, gamma);
        counts
    }

    pub fn metrics_at(&self, gamma: f64) -> (Option<f64>, Option<f64>) {
        let c = self.counts_at(gamma);
        (c.pm(), c.pf())
    }

    pub fn roc(&self, grid: &[f64]) -> Vec<RocPoint> {
        grid.iter()
            .map(|&gamma| {
                let c = self.counts_at(gamma);
                RocPoint {
                    gamma,
                    pm: c.pm(),
                    pf: c.pf(),
                }
            })
            .collect()
    }
}

/// Equal-error operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualError {
    pub gamma: f64,
    pub p_err: f64,
    /// Set when PF - PM never changes sign and the result is the grid point
    /// minimizing the gap instead of a bisection root.
    pub degenerate: bool,
}

const GAMMA_TOL: f64 = 1e-4;

/// Bisect the threshold for PF = PM over the pooled counters; on degenerate
/// detectors fall back to the 101-point grid argmin of |PF - PM|.
pub fn equal_error_rate(pool: &DetectionPool) -> EqualError {
    let diff = |gamma: f64| -> Option<f64> {
        let (pm, pf) = pool.metrics_at(gamma);
        match (pm, pf) {
            (Some(pm), Some(pf)) => Some(pf - pm),
            _ => None,
        }
    };
    let p_err_at = |gamma: f64| -> f64 {
        let (pm, pf) = pool.metrics_at(gamma);
        0.5 * (pm.unwrap_or(f64::NAN) + pf.unwrap_or(f64::NAN))
    };

    let Some(f_lo) = diff(0.0) else {
        return EqualError {
            gamma: f64::NAN,
            p_err: f64::NAN,
            degenerate: true,
        };
    };

    if f_lo <= 0.0 {
        // no strict sign change possible: PF - PM is non-increasing in gamma
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100 {
            let gamma = i as f64 / 100.0;
            if let Some(d) = diff(gamma) {
                if d.abs() < best.0 {
                    best = (d.abs(), gamma);
                }
            }
        }
        return EqualError {
            gamma: best.1,
            p_err: p_err_at(best.1),
            degenerate: true,
        };
    }

    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > GAMMA_TOL {
        let mid = 0.5 * (lo + hi);
        match diff(mid) {
            Some(d) if d > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    let gamma = 0.5 * (lo + hi);
    EqualError {
        gamma,
        p_err: p_err_at(gamma),
        degenerate: false,
    }
}
