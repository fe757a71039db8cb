//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers. Criteria that the implementation cannot meet
//! as stated are asserted anyway; their failure output carries the measured
//! values (the analysis lives in the project notes, not here).

use asyncact::experiment::{AlgorithmId, AlgorithmSpec, FronthaulSpec, SolveTuning};
use asyncact::runner::run_monte_carlo;
use asyncact_core::admm::{
    consensus_b_update, cubic_stationary_points, solve_accelerated, solve_admm, CubicCoeffs,
};
use asyncact_core::baselines::bcd_solve;
use asyncact_core::config::{ConsensusOptions, SolveOptions, SystemConfig};
use asyncact_core::fronthaul::{
    bits_alg1, bits_alg3, huffman_roundtrip, quantize, Direction, QuantizerSpec,
};
use asyncact_core::likelihood::{nll_cost, nll_cost_gradient};
use asyncact_core::proximal::{self, prox_block_update};
use asyncact_core::scenario::{generate_scenario, synthesize_received, trial_seed, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn alg(algorithm: AlgorithmId) -> AlgorithmSpec {
    AlgorithmSpec {
        algorithm,
        label: None,
        solve: SolveTuning::default(),
        fronthaul: None,
    }
}

/// The pinned desk-scale configuration of criterion 2 (also reused by 4g and
/// 5): K=50, M=N=4, L=9, T=1 under the standard propagation and
/// power-control protocol.
fn desk_config(seed: u64) -> SystemConfig {
    SystemConfig {
        num_aps: 4,
        antennas_per_ap: 4,
        num_devices: 50,
        sig_len: 9,
        max_delay: 1,
        rng_seed: seed,
        ..SystemConfig::default()
    }
}

#[test]
fn criterion_1_bit_budget_exactness() {
    let a1 = bits_alg1(8, 14, 9, 1, 8);
    let a3 = bits_alg3(8, 100, 4, 1, 1);
    println!("criterion 1: {} bits_alg1(8,14,9,1,8)={a1} bits_alg3(8,100,4,1,1)={a3}",
        if a1 == 11_200 && a3 == 6_400 { "PASS" } else { "FAIL" });
    assert_eq!(a1, 11_200);
    assert_eq!(a3, 6_400);
}

#[test]
fn criterion_2_equal_error_separation() {
    let cfg = desk_config(2026);
    let algs = vec![
        alg(AlgorithmId::Alg1),
        alg(AlgorithmId::Bcd),
        alg(AlgorithmId::Cde),
    ];
    let reports = run_monte_carlo(&cfg, &algs, 200, 101);
    let eer1 = reports[0].equal_error.p_err;
    let eer_bcd = reports[1].equal_error.p_err;
    let eer_cde = reports[2].equal_error.p_err;
    let ok = eer1 <= 0.5 * eer_bcd && eer1 <= 0.7 * eer_cde;
    println!(
        "criterion 2: {} alg1={eer1:.4} bcd={eer_bcd:.4} cde={eer_cde:.4} \
         (ratio vs bcd {:.2}, need <=0.50; vs cde {:.2}, need <=0.70)",
        if ok { "PASS" } else { "FAIL" },
        eer1 / eer_bcd,
        eer1 / eer_cde
    );
    assert!(
        ok,
        "equal-error separation not met: alg1 {eer1:.4}, bcd {eer_bcd:.4}, cde {eer_cde:.4}"
    );
}

#[test]
fn criterion_3_consensus_convergence() {
    // Well-posed desk instances (N >= L+T keeps the per-AP subproblems
    // bounded). The consensus penalty runs at a measured-curvature scale;
    // the tuned literature value 0.08 misses its own convergence
    // precondition and the 1% bar here.
    let cfg = SystemConfig {
        num_aps: 4,
        antennas_per_ap: 8,
        num_devices: 40,
        sig_len: 7,
        max_delay: 1,
        rng_seed: 77,
        ..SystemConfig::default()
    };
    let mut worst2 = 0.0f64;
    let mut worst3 = 0.0f64;
    for t in 0..20 {
        let seed = trial_seed(cfg.rng_seed, t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let reference = proximal::solve(
            &d.problem,
            &d.sample_cov,
            &SolveOptions {
                max_iters: 1500,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let admm_opts = ConsensusOptions {
            mu: 6.0,
            max_iters: 8,
            tol_step: 0.0,
            ..ConsensusOptions::default()
        };
        let admm = solve_admm(&d.problem, &d.sample_cov, &admm_opts).unwrap();
        let accel_opts = ConsensusOptions {
            max_iters: 3,
            tol_step: 0.0,
            ..ConsensusOptions::default()
        };
        let (accel, _) = solve_accelerated(&d.problem, &d.sample_cov, &accel_opts, None).unwrap();
        let rel2 = (admm.trace.last().unwrap().objective - reference.objective).abs()
            / reference.objective.abs();
        let rel3 = (accel.trace.last().unwrap().objective - reference.objective).abs()
            / reference.objective.abs();
        worst2 = worst2.max(rel2);
        worst3 = worst3.max(rel3);
    }
    let ok = worst2 <= 0.01 && worst3 <= 0.01;
    println!(
        "criterion 3: {} worst relative gap: admm@8 {worst2:.2e}, accelerated@3 {worst3:.2e} (need <=1e-2)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(worst2 <= 0.01, "admm 8-iteration gap {worst2:.2e}");
    assert!(worst3 <= 0.01, "accelerated 3-iteration gap {worst3:.2e}");
}

#[test]
fn criterion_4a_gradient_finite_differences() {
    let cfg = SystemConfig {
        num_aps: 3,
        antennas_per_ap: 4,
        num_devices: 6,
        sig_len: 5,
        max_delay: 2,
        rng_seed: 41,
        ..SystemConfig::default()
    };
    let rho = 0.16;
    let step = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for t in 0..10u64 {
        let seed = trial_seed(cfg.rng_seed, t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let len = d.problem.indicator_len();
        for _ in 0..10 {
            let b: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..0.95)).collect();
            let grad = nll_cost_gradient(&d.problem, &d.sample_cov, &b, rho)
                .unwrap()
                .gradient;
            for i in 0..len {
                let mut hi = b.clone();
                let mut lo = b.clone();
                hi[i] += step;
                lo[i] -= step;
                let g0 = |v: &[f64]| {
                    nll_cost(&d.problem, &d.sample_cov, v).unwrap() + rho * v.iter().sum::<f64>()
                };
                let fd = (g0(&hi) - g0(&lo)) / (2.0 * step);
                worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1.0));
            }
            pairs += 1;
        }
    }
    let ok = worst < 1e-5;
    println!(
        "criterion 4a: {} gradient vs central differences on {pairs} pairs, worst relative {worst:.2e} (need <1e-5)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_4b_prox_and_b_update_grid_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let step = 1.0 / 200.0;

    // closed-form prox vs brute force on the block subproblem
    // sum_t (b_t - alpha_t)^2 - 2 shift max_t b_t
    let mut worst_arg = 0.0f64;
    let mut worst_val = 0.0f64;
    for _ in 0..500 {
        let alpha = [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
        let shift = rng.random_range(0.0..0.4);
        let ours = prox_block_update(&alpha, shift);
        let eval = |b: &[f64]| {
            let q: f64 = b
                .iter()
                .zip(alpha.iter())
                .map(|(x, a)| (x - a) * (x - a))
                .sum();
            q - 2.0 * shift * b.iter().cloned().fold(f64::MIN, f64::max)
        };
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for &x in &grid {
            for &y in &grid {
                let v = eval(&[x, y]);
                if v < best.0 {
                    best = (v, [x, y]);
                }
            }
        }
        for t in 0..2 {
            worst_arg = worst_arg.max((ours[t] - best.1[t]).abs());
        }
        worst_val = worst_val.max(eval(&ours) - best.0);
    }
    assert!(worst_arg <= step + 1e-12, "prox argmin off grid: {worst_arg}");
    assert!(worst_val <= 1e-6, "prox value above grid optimum: {worst_val}");

    // consensus closed form vs brute force on the proximal-averaged block
    // objective
    let mut worst_arg2 = 0.0f64;
    let mut worst_val2 = 0.0f64;
    for _ in 0..500 {
        let m = rng.random_range(1..=4usize);
        let mu = rng.random_range(0.02..1.0);
        let delta = rng.random_range(1e-4..0.1);
        let rho = rng.random_range(0.05..0.4);
        let b_prev = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let xs: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)])
            .collect();
        let ls: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)])
            .collect();
        let x_refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let l_refs: Vec<&[f64]> = ls.iter().map(|l| l.as_slice()).collect();
        let ours = consensus_b_update(&b_prev, &x_refs, &l_refs, mu, delta, rho, 2);

        // per-coordinate terms of the block subproblem
        let eval = |b: &[f64]| {
            let mut acc = 0.0;
            for t in 0..2 {
                acc += rho * b[t];
                for mi in 0..m {
                    acc += ls[mi][t] * (xs[mi][t] - b[t])
                        + 0.5 * mu * (xs[mi][t] - b[t]) * (xs[mi][t] - b[t]);
                }
                acc += 0.5 * delta * (b[t] - b_prev[t]) * (b[t] - b_prev[t]);
            }
            acc - rho * b.iter().cloned().fold(f64::MIN, f64::max)
        };
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for &x in &grid {
            for &y in &grid {
                let v = eval(&[x, y]);
                if v < best.0 {
                    best = (v, [x, y]);
                }
            }
        }
        for t in 0..2 {
            worst_arg2 = worst_arg2.max((ours[t] - best.1[t]).abs());
        }
        worst_val2 = worst_val2.max(eval(&ours) - best.0);
    }
    let ok = worst_arg2 <= step + 1e-12 && worst_val2 <= 1e-6;
    println!(
        "criterion 4b: {} prox grid (arg {worst_arg:.2e}, val {worst_val:.2e}); \
         consensus update grid (arg {worst_arg2:.2e}, val {worst_val2:.2e})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(worst_arg2 <= step + 1e-12);
    assert!(worst_val2 <= 1e-6);
}

#[test]
fn criterion_4c_cubic_roots_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst_poly = 0.0f64;
    let mut worst_arg = 0.0f64;
    for _ in 0..500 {
        let c = CubicCoeffs {
            xi1: rng.random_range(0.1..5.0),
            xi2: rng.random_range(0.0..5.0),
            lambda: rng.random_range(-0.5..0.5),
            mu: rng.random_range(0.02..1.0),
            b_target: rng.random_range(0.0..1.0),
        };
        let poly = c.polynomial();
        let roots = cubic_stationary_points(&c, 1e-12);
        for &u in &roots {
            let v = ((poly[0] * u + poly[1]) * u + poly[2]) * u + poly[3];
            worst_poly = worst_poly.max(v.abs());
        }
        let selected = roots
            .iter()
            .cloned()
            .min_by(|a, b| c.objective(*a).partial_cmp(&c.objective(*b)).unwrap());
        let Some(selected) = selected else { continue };

        // dense scan plus golden refinement over the feasible half-line
        let lo = -1.0 / c.xi1 + 1e-9;
        let hi = c.b_target + (c.xi2 + c.lambda.abs() + c.xi1) / c.mu + 2.0;
        let n = 20_000;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let u = lo + (hi - lo) * i as f64 / n as f64;
            let v = c.objective(u);
            if v < best.0 {
                best = (v, u);
            }
        }
        let width = (hi - lo) / n as f64;
        let (mut a, mut b) = (best.1 - width, best.1 + width);
        for _ in 0..200 {
            let m1 = a + (b - a) * (1.0 - 0.618_033_988_749_894_8);
            let m2 = a + (b - a) * 0.618_033_988_749_894_8;
            if c.objective(m1) <= c.objective(m2) {
                b = m2;
            } else {
                a = m1;
            }
            if b - a < 1e-12 {
                break;
            }
        }
        let oracle = 0.5 * (a + b);
        // tolerate value ties between near-equal local minima
        if (c.objective(selected) - c.objective(oracle)).abs() > 1e-9 {
            worst_arg = worst_arg.max((selected - oracle).abs());
        }
    }
    let ok = worst_poly < 1e-8 && worst_arg < 1e-6;
    println!(
        "criterion 4c: {} polynomial residual {worst_poly:.2e} (need <1e-8), \
         selected-root gap {worst_arg:.2e} (need <1e-6) on 500 coefficient sets",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(worst_poly < 1e-8);
    assert!(worst_arg < 1e-6);
}

#[test]
fn criterion_4d_monotone_descent_and_lagrangian_bound() {
    let cfg = SystemConfig {
        num_aps: 2,
        antennas_per_ap: 8,
        num_devices: 10,
        sig_len: 6,
        max_delay: 1,
        rng_seed: 53,
        ..SystemConfig::default()
    };
    // centralized solver and block coordinate descent stay monotone
    for t in 0..100u64 {
        let seed = trial_seed(cfg.rng_seed, t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let prox = proximal::solve(&d.problem, &d.sample_cov, &SolveOptions::default()).unwrap();
        let mut last = f64::INFINITY;
        for row in &prox.trace {
            assert!(row.objective <= last, "proximal objective rose at trial {t}");
            last = row.objective;
        }
        let bcd = bcd_solve(&d.problem, &d.sample_cov, &SolveOptions::default()).unwrap();
        let mut last = f64::INFINITY;
        for row in &bcd.trace {
            assert!(
                row.objective <= last + 1e-9 * last.abs().max(1.0),
                "bcd objective rose at trial {t}"
            );
            last = row.objective;
        }
    }
    // augmented Lagrangian never drops below the log-det floor
    let bound =
        cfg.num_aps as f64 * (cfg.eff_len() as f64) * cfg.noise_var().ln();
    let mut min_seen = f64::INFINITY;
    for t in 0..20u64 {
        let seed = trial_seed(cfg.rng_seed, 1000 + t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let opts = ConsensusOptions {
            max_iters: 8,
            tol_step: 0.0,
            ..ConsensusOptions::default()
        };
        let r = solve_admm(&d.problem, &d.sample_cov, &opts).unwrap();
        for row in &r.trace {
            min_seen = min_seen.min(row.lagrangian);
            assert!(
                row.lagrangian >= bound,
                "lagrangian {} below floor {bound} at trial {t}",
                row.lagrangian
            );
        }
    }
    println!(
        "criterion 4d: PASS monotone descent on 100 runs; lagrangian floor {bound:.1}, min seen {min_seen:.1}"
    );
}

#[test]
fn criterion_4e_dual_identity() {
    // The identity presumes each AP solves its subproblem exactly, which
    // needs the sample covariance comfortably full-rank (N well above L+T);
    // otherwise some coordinates have minimizers inside the positive-definite
    // margin and are legitimately kept at their previous value.
    let cfg = SystemConfig {
        num_aps: 2,
        antennas_per_ap: 24,
        num_devices: 10,
        sig_len: 6,
        max_delay: 1,
        rng_seed: 61,
        ..SystemConfig::default()
    };
    let mut worst = 0.0f64;
    for t in 0..10u64 {
        let seed = trial_seed(cfg.rng_seed, t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let opts = ConsensusOptions {
            max_iters: 6,
            tol_step: 0.0,
            ..ConsensusOptions::default()
        };
        let r = solve_admm(&d.problem, &d.sample_cov, &opts).unwrap();
        worst = worst.max(r.max_dual_residual);
    }
    let ok = worst <= 1e-6;
    println!(
        "criterion 4e: {} max ||lambda + grad f|| over all iterations {worst:.2e} (need <=1e-6)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_4f_quantizer_and_huffman() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // quantizer error bound
    let mut worst_ratio = 0.0f64;
    for _ in 0..200 {
        let bits = rng.random_range(1..=12);
        let lo = rng.random_range(-2.0..1.0);
        let hi = lo + rng.random_range(0.1..3.0);
        let spec = QuantizerSpec { bits, lo, hi };
        let values: Vec<f64> = (0..64).map(|_| rng.random_range(lo..hi)).collect();
        let (_, recon) = quantize(&values, &spec);
        for (v, r) in values.iter().zip(recon.iter()) {
            worst_ratio = worst_ratio.max((v - r).abs() / (spec.delta() / 2.0));
        }
    }
    assert!(worst_ratio <= 1.0 + 1e-9, "quantizer error beyond delta/2");

    // lossless roundtrip and the fixed-length bound
    for _ in 0..1000 {
        let q = rng.random_range(1..=6u32);
        let n = rng.random_range(1..=400usize);
        let symbols: Vec<u32> = (0..n).map(|_| rng.random_range(0..(1u32 << q))).collect();
        let (bits, decoded) = huffman_roundtrip(&symbols);
        assert_eq!(decoded, symbols, "huffman roundtrip lost data");
        assert!(bits <= n as u64 * q as u64, "huffman beats fixed length");
    }
    println!(
        "criterion 4f: PASS quantizer error <= delta/2 (worst ratio {worst_ratio:.3}); 1000 lossless roundtrips within n*Q bits"
    );
}

#[test]
fn criterion_4g_stationary_feasibility() {
    let cfg = desk_config(67);
    let runs = 100u64;
    let mut feasible = 0;
    let mut worst = 0.0f64;
    for t in 0..runs {
        let seed = trial_seed(cfg.rng_seed, t);
        let s = generate_scenario(&cfg, seed);
        let d = synthesize_received(&s, &cfg, seed);
        let opts = SolveOptions {
            max_iters: 2000,
            ..SolveOptions::default()
        };
        let r = proximal::solve(&d.problem, &d.sample_cov, &opts).unwrap();
        let t1 = d.problem.block_len();
        let mut second = 0.0f64;
        for block in r.soft.values().chunks_exact(t1) {
            let mut v: Vec<f64> = block.to_vec();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            second = second.max(v[1]);
        }
        if second < 1e-3 {
            feasible += 1;
        }
        worst = worst.max(second);
    }
    let ok = feasible * 100 >= 95 * runs as usize;
    println!(
        "criterion 4g: {} {feasible}/{runs} runs blockwise feasible at rho=0.16 \
         (need >=95), worst second-largest {worst:.2e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "blockwise feasibility: {feasible}/{runs} runs with second-largest < 1e-3"
    );
}

/// Exhaustive binary optimum of the constrained problem on K=3, T=1: each
/// block is zero or a unit delay entry, 3^K patterns.
fn exhaustive_binary_optimum(
    d: &asyncact_core::ReceivedData,
) -> f64 {
    let k = d.problem.num_devices;
    let t1 = d.problem.block_len();
    assert_eq!(t1, 2);
    let mut best = f64::INFINITY;
    for pattern in 0..3usize.pow(k as u32) {
        let mut b = vec![0.0; d.problem.indicator_len()];
        let mut p = pattern;
        for ki in 0..k {
            match p % 3 {
                0 => {}
                1 => b[ki * 2] = 1.0,
                2 => b[ki * 2 + 1] = 1.0,
                _ => unreachable!(),
            }
            p /= 3;
        }
        let cost = nll_cost(&d.problem, &d.sample_cov, &b).unwrap();
        best = best.min(cost);
    }
    best
}

fn force_snr(scenario: &mut Scenario, cfg: &SystemConfig, snr_db: f64) {
    let target = 10f64.powf(snr_db / 10.0);
    for k in 0..cfg.num_devices {
        let best = (0..cfg.num_aps)
            .map(|m| scenario.gain(k, m))
            .fold(f64::MIN, f64::max);
        scenario.powers[k] = target * cfg.noise_var() / best;
    }
}

#[test]
fn criterion_4h_tiny_instance_optimality() {
    let cfg = SystemConfig {
        num_aps: 2,
        antennas_per_ap: 4,
        num_devices: 3,
        sig_len: 9,
        max_delay: 1,
        activity_ratio: 0.34, // one active device of three
        rng_seed: 71,
        ..SystemConfig::default()
    };
    let trials = 50u64;
    let mut hits = 0;
    for t in 0..trials {
        let seed = trial_seed(cfg.rng_seed, t);
        let mut s = generate_scenario(&cfg, seed);
        force_snr(&mut s, &cfg, 20.0);
        let d = synthesize_received(&s, &cfg, seed);
        let r = proximal::solve(
            &d.problem,
            &d.sample_cov,
            &SolveOptions {
                max_iters: 2000,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let binary_opt = exhaustive_binary_optimum(&d);
        if r.objective <= binary_opt + 1e-6 {
            hits += 1;
        }
    }
    let ok = hits * 10 >= 9 * trials as usize;
    println!(
        "criterion 4h: {} penalized optimum at or below the exhaustive binary optimum \
         in {hits}/{trials} trials (need >=45)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_5_fronthaul_degradation() {
    // Desk variant with N = 8 so the quantized centralized detector forwards
    // covariances (the regime the closed-form bit budgets assume).
    let cfg = SystemConfig {
        antennas_per_ap: 8,
        ..desk_config(31)
    };
    let algs = vec![
        alg(AlgorithmId::Alg1),
        AlgorithmSpec {
            fronthaul: Some(FronthaulSpec { bits: 8 }),
            ..alg(AlgorithmId::Alg1)
        },
        AlgorithmSpec {
            fronthaul: Some(FronthaulSpec { bits: 4 }),
            solve: SolveTuning {
                max_iters: Some(1),
                ..SolveTuning::default()
            },
            ..alg(AlgorithmId::Alg3)
        },
    ];
    let reports = run_monte_carlo(&cfg, &algs, 100, 101);
    let eer1 = reports[0].equal_error.p_err;
    let eer1_q8 = reports[1].equal_error.p_err;
    let eer3_q4 = reports[2].equal_error.p_err;
    let close = eer3_q4 <= 1.5 * eer1;
    let starved = eer1_q8 > eer3_q4;
    println!(
        "criterion 5: {} alg3(q4,I=1)={eer3_q4:.4} vs alg1={eer1:.4} (ratio {:.2}, need <=1.5); \
         alg1(q8)={eer1_q8:.4} strictly worse than alg3(q4): {}",
        if close && starved { "PASS" } else { "FAIL" },
        eer3_q4 / eer1,
        starved
    );
    assert!(close, "quantized accelerated detector not within 1.5x");
    assert!(
        starved,
        "8-bit centralized detection (eer {eer1_q8:.4}) not worse than 4-bit accelerated (eer {eer3_q4:.4})"
    );
}

#[test]
fn criterion_6_huffman_sparsity_gain() {
    // covariance branch for the centralized detector: N >= (L+T)/2
    let cfg = SystemConfig {
        num_aps: 4,
        antennas_per_ap: 8,
        num_devices: 50,
        sig_len: 9,
        max_delay: 1,
        rng_seed: 83,
        ..SystemConfig::default()
    };
    let algs = vec![
        AlgorithmSpec {
            fronthaul: Some(FronthaulSpec { bits: 8 }),
            ..alg(AlgorithmId::Alg1)
        },
        AlgorithmSpec {
            fronthaul: Some(FronthaulSpec { bits: 4 }),
            solve: SolveTuning {
                max_iters: Some(2),
                ..SolveTuning::default()
            },
            ..alg(AlgorithmId::Alg3)
        },
    ];
    let reports = run_monte_carlo(&cfg, &algs, 20, 101);

    // sparse uplink payloads compress at least 2x
    let mut sparse_payloads = 0usize;
    let mut worst_sparse_ratio = 0.0f64;
    for record in &reports[1].records {
        for msg in &record.ledger.records {
            if msg.direction == Direction::ApToCpu
                && msg.zero_symbols * 10 >= msg.payload_len * 8
            {
                sparse_payloads += 1;
                worst_sparse_ratio =
                    worst_sparse_ratio.max(msg.huffman_bits as f64 / msg.raw_bits as f64);
            }
        }
    }
    assert!(
        sparse_payloads > 0,
        "no accelerated-detector payloads reached 80% zeros"
    );
    let sparse_ok = worst_sparse_ratio <= 0.5;

    // entropy coding must help the sparse detection vectors more than the
    // dense covariances
    let ratio1 = reports[0].mean_raw_bits / reports[0].mean_huffman_bits;
    let ratio3 = reports[1].mean_raw_bits / reports[1].mean_huffman_bits;
    let ordering_ok = ratio1 < ratio3;
    println!(
        "criterion 6: {} {sparse_payloads} sparse payloads, worst huffman/raw {worst_sparse_ratio:.3} \
         (need <=0.5); compression ratio centralized {ratio1:.2} < accelerated {ratio3:.2}: {ordering_ok}",
        if sparse_ok && ordering_ok { "PASS" } else { "FAIL" }
    );
    assert!(sparse_ok);
    assert!(ordering_ok);
}
