//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mfalloc_core::bifidelity::{evaluate_error, SweepOptions};
use mfalloc_core::io::{self, Manifest};
use mfalloc_core::linalg::{
    gram, normalize_columns, projection_residual, projection_residual_matrix, rank_k_error,
};
use mfalloc_core::models::{
    build_ensemble, synthetic_recovery_instance, Fidelity, ModelSetup, SyntheticSpec,
};
use mfalloc_core::selectors::{select_pivoted_cholesky, select_pivoted_qr};
use mfalloc_core::theory::{brute_force_cssp, noisy_recovery_trial};
use mfalloc_core::{select, sweep, DenseMatrix, Ensemble, ErrorReport, Method, SelectorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn planted_spec(noise_sigma: f64) -> SyntheticSpec {
    SyntheticSpec {
        d: 10,
        basis_size: 5,
        n: 40,
        coeff_bound: 0.7,
        noise_sigma,
    }
}

struct Datasets {
    burgers: (Ensemble, Ensemble),
    pendulum: (Ensemble, Ensemble),
    build_time: [Duration; 2],
}

fn desk_datasets() -> Datasets {
    let build = |name: &str| {
        let t = Instant::now();
        let setup = ModelSetup::by_name(name).unwrap();
        let grid = setup.default_grid([20, 20]).unwrap();
        let low = build_ensemble(&setup, &grid, Fidelity::Low).unwrap();
        let high = build_ensemble(&setup, &grid, Fidelity::High).unwrap();
        ((low, high), t.elapsed())
    };
    let (burgers, tb) = build("burgers");
    let (pendulum, tp) = build("pendulum");
    Datasets {
        burgers,
        pendulum,
        build_time: [tb, tp],
    }
}

fn noiseless_recovery() -> Check {
    let start = Instant::now();
    for seed in 0..20 {
        let inst = synthetic_recovery_instance(&planted_spec(0.0), seed).unwrap();
        let cfg = SelectorConfig::new(Method::Gomp, 5).with_epsilon(1e-10);
        let mut got = select(&inst.matrix, &cfg).unwrap().ordered_indices;
        got.sort_unstable();
        ensure(got == inst.basis, || {
            format!("seed {seed}: selected {got:?}, planted {:?}", inst.basis)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("20/20 planted sets recovered in {elapsed:.2?}"))
}

// Recorded outcome of the fixed-seed noisy suite: seed 15 recovers the set
// but misses the coefficient bound by about 0.6 %.
const NOISY_FAILURES: [u64; 1] = [15];

fn noisy_recovery() -> Check {
    let mut failures = Vec::new();
    for seed in 0..20 {
        let t = noisy_recovery_trial(&planted_spec(1e-4), seed, 0.1).unwrap();
        if !t.success() {
            failures.push(seed);
        }
    }
    let successes = 20 - failures.len();
    ensure(successes >= 18, || format!("only {successes}/20 succeeded"))?;
    ensure(failures == NOISY_FAILURES, || {
        format!("failing seeds {failures:?} differ from recorded {NOISY_FAILURES:?}")
    })?;
    Ok(format!(
        "{successes}/20 within bound, failing seeds {failures:?} as recorded"
    ))
}

fn oracle_gap() -> Check {
    let mut ratio_sum = 0.0;
    for seed in 0..50 {
        let a = normalize_columns(&gaussian(6, 12, 1000 + seed));
        let (_, best) = brute_force_cssp(&a, 3).unwrap();
        let floor = rank_k_error(&a, 3).unwrap();
        ensure(floor <= best + 1e-9, || {
            format!("seed {seed}: svd {floor} > optimum {best}")
        })?;
        for method in Method::ALL {
            let r = select(&a, &SelectorConfig::new(method, 3).with_seed(seed)).unwrap();
            let res = projection_residual(&a, &r.ordered_indices).unwrap();
            ensure(res >= best - 1e-9, || {
                format!("seed {seed}: {method} residual {res} below optimum {best}")
            })?;
            if method == Method::Gomp {
                ratio_sum += res / best;
            }
        }
    }
    Ok(format!(
        "ordering holds on 50 instances; mean GOMP/optimum ratio {:.4}",
        ratio_sum / 50.0
    ))
}

// Smallest gap between the best and runner-up candidate at each step of the
// residual-norm greedy order, computed from explicit projections.
fn min_step_gap(a: &DenseMatrix, order: &[usize]) -> f64 {
    let mut gap = f64::INFINITY;
    for k in 0..order.len() {
        let r = projection_residual_matrix(a, &order[..k]).unwrap();
        let mut norms: Vec<f64> = (0..a.ncols())
            .filter(|j| !order[..k].contains(j))
            .map(|j| r.column(j).norm())
            .collect();
        norms.sort_by(|x, y| y.total_cmp(x));
        if norms.len() > 1 {
            gap = gap.min(norms[0] - norms[1]);
        }
    }
    gap
}

fn qr_cholesky_equivalence() -> Check {
    let mut tested = 0;
    let mut seed = 0;
    while tested < 20 {
        seed += 1;
        let a = gaussian(8, 14, 5000 + seed);
        let qr = select_pivoted_qr(&a, 8).unwrap();
        if min_step_gap(&a, &qr.ordered_indices) <= 1e-9 {
            continue;
        }
        let chol = select_pivoted_cholesky(&gram(&a).unwrap(), 8).unwrap();
        ensure(qr.ordered_indices == chol.ordered_indices, || {
            format!(
                "seed {seed}: qr {:?} vs chol {:?}",
                qr.ordered_indices, chol.ordered_indices
            )
        })?;
        tested += 1;
    }
    Ok(format!(
        "identical pivots on {tested}/20 gap-separated matrices"
    ))
}

fn monotone_residual(data: &Datasets) -> Check {
    let synthetic = synthetic_recovery_instance(&planted_spec(1e-4), 0)
        .unwrap()
        .matrix;
    let sets: [(&str, &DenseMatrix); 5] = [
        ("burgers low", &data.burgers.0.snapshots),
        ("burgers high", &data.burgers.1.snapshots),
        ("pendulum low", &data.pendulum.0.snapshots),
        ("pendulum high", &data.pendulum.1.snapshots),
        ("synthetic", &synthetic),
    ];
    let mut steps = 0;
    for (name, a) in sets {
        let tol = 1e-9 * a.norm_squared().max(1.0);
        for method in [Method::Gomp, Method::Cholesky, Method::Qr, Method::Lu] {
            let r = select(a, &SelectorConfig::new(method, 20)).unwrap();
            let mut last = a.norm_squared();
            for k in 1..=r.len() {
                let res = projection_residual(a, r.prefix(k)).unwrap();
                ensure(res <= last + tol, || {
                    format!("{name} {method} step {k}: {res} > {last}")
                })?;
                last = res;
                steps += 1;
            }
        }
    }
    Ok(format!(
        "{steps} prefix steps non-increasing across 5 datasets"
    ))
}

fn burgers_shape(data: &Datasets) -> Check {
    let start = Instant::now();
    let (low, high) = &data.burgers;
    ensure(low.len() == 400 && high.len() == 400, || {
        "expected 400 columns".into()
    })?;
    let methods = [
        SelectorConfig::new(Method::Gomp, 20),
        SelectorConfig::new(Method::Random, 20),
    ];
    let report = sweep(low, high, &methods, &[1, 10, 20], &SweepOptions::default()).unwrap();
    let gomp = |m: usize| {
        report
            .method_rows("gomp")
            .find(|r| r.subset_size == m)
            .unwrap()
            .high_error
    };
    let rand: Vec<f64> = report
        .method_rows("rand")
        .filter(|r| r.subset_size == 10)
        .map(|r| r.high_error)
        .collect();
    ensure(rand.len() == 100, || {
        format!("{} random trials", rand.len())
    })?;
    let rand_mean = rand.iter().sum::<f64>() / rand.len() as f64;
    ensure(gomp(10) < rand_mean, || {
        format!(
            "GOMP E(10) {:e} not below random mean {rand_mean:e}",
            gomp(10)
        )
    })?;
    ensure(gomp(20) < 0.1 * gomp(1), || {
        format!("GOMP E(20) {:e} vs E(1) {:e}", gomp(20), gomp(1))
    })?;
    let elapsed = start.elapsed() + data.build_time[0];
    ensure(elapsed < Duration::from_secs(600), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "GOMP E(10) {:.3e} < random mean {rand_mean:.3e}; E(20) {:.3e} < 0.1 x E(1) {:.3e}; {elapsed:.2?}",
        gomp(10),
        gomp(20),
        gomp(1)
    ))
}

fn pendulum_shape(data: &Datasets) -> Check {
    let start = Instant::now();
    let (low, high) = &data.pendulum;
    ensure(
        low.snapshot_dim() == 61 && high.snapshot_dim() == 1501,
        || format!("rows {} / {}", low.snapshot_dim(), high.snapshot_dim()),
    )?;
    let methods = [
        SelectorConfig::new(Method::Gomp, 15),
        SelectorConfig::new(Method::Cholesky, 15),
    ];
    let sizes: Vec<usize> = (2..=15).collect();
    let report = sweep(low, high, &methods, &sizes, &SweepOptions::default()).unwrap();
    let low_errors = |name| {
        report
            .method_rows(name)
            .map(|r| r.low_error)
            .collect::<Vec<_>>()
    };
    let (g, c) = (low_errors("gomp"), low_errors("chol"));
    let wins = g.iter().zip(&c).filter(|(x, y)| x <= y).count();
    ensure(wins >= 10, || {
        format!("GOMP at or below Cholesky for only {wins}/14 sizes")
    })?;
    let elapsed = start.elapsed() + data.build_time[1];
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "GOMP low E <= Cholesky for {wins}/14 sizes; {elapsed:.2?}"
    ))
}

fn metric_cases() -> Check {
    let truth = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let perfect = evaluate_error(&truth, &truth).unwrap();
    let zero = evaluate_error(&truth, &DenseMatrix::zeros(2, 2)).unwrap();
    let half_pred = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let half = evaluate_error(&truth, &half_pred).unwrap();
    ensure(perfect == 0.0, || {
        format!("perfect predictor gives {perfect}")
    })?;
    ensure(zero == 1.0, || format!("zero predictor gives {zero}"))?;
    ensure((half - 0.5).abs() <= 1e-15, || {
        format!("half case gives {half}")
    })?;
    Ok("E = 0, 1 and 0.5 as expected".into())
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mfalloc")
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(bin())
        .args(args)
        .output()
        .expect("run mfalloc");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn sweep_determinism(dir: &Path) -> Check {
    let data = dir.join("det");
    let d = data.to_str().unwrap();
    let (code, _) = run_cli(&[
        "generate", "--model", "burgers", "--grid", "6x6", "--out", d,
    ]);
    ensure(code == 0, || format!("generate exited {code}"))?;
    let low = data.join("low.mfa");
    let high = data.join("high.mfa");
    let mut outputs = Vec::new();
    for workers in ["1", "8", "1", "8"] {
        let (code, csv) = run_cli(&[
            "sweep",
            low.to_str().unwrap(),
            high.to_str().unwrap(),
            "--workers",
            workers,
            "--seed",
            "42",
        ]);
        ensure(code == 0, || {
            format!("sweep with {workers} workers exited {code}")
        })?;
        outputs.push(csv);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "CSV differs between runs".into()
    })?;
    let rows = ErrorReport::from_csv(std::str::from_utf8(&outputs[0]).unwrap())
        .unwrap()
        .rows
        .len();
    Ok(format!(
        "{rows}-row CSV byte-identical across 1 and 8 workers"
    ))
}

fn write_matrix(path: &Path, a: DenseMatrix) {
    let params = (0..a.ncols()).map(|j| vec![j as f64]).collect();
    let e = Ensemble::new(a, params, "exact", "example").unwrap();
    io::save(path, &e, &Manifest::for_ensemble(&e)).unwrap();
}

fn verify_json(file: &Path, basis: &str, extra: &[&str]) -> (i32, serde_json::Value) {
    let mut args = vec!["verify", file.to_str().unwrap(), "--basis", basis];
    args.extend_from_slice(extra);
    let (code, out) = run_cli(&args);
    (
        code,
        serde_json::from_slice(&out).unwrap_or(serde_json::Value::Null),
    )
}

fn condition_arithmetic(dir: &Path) -> Check {
    // Orthonormal basis plus 0.3 e1 + 0.4 e2.
    let consistent = dir.join("consistent.mfa");
    write_matrix(
        &consistent,
        DenseMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.3, 0.4]),
    );
    let (code, v) = verify_json(&consistent, "1,2", &[]);
    let d_bar = v["d_bar"].as_f64().unwrap_or(f64::NAN);
    ensure(code == 0 && (d_bar - 0.7).abs() <= 1e-5, || {
        format!("consistent case: exit {code}, d_bar {d_bar}")
    })?;

    // Unit in-span column (1,1)/sqrt(2).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let unit = dir.join("unit.mfa");
    write_matrix(
        &unit,
        DenseMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, h, h]),
    );
    let (code2, v2) = verify_json(&unit, "1,2", &[]);
    let d_bar2 = v2["d_bar"].as_f64().unwrap_or(f64::NAN);
    ensure(
        code2 == 1 && (d_bar2 - std::f64::consts::SQRT_2).abs() <= 1e-5,
        || format!("unit case: exit {code2}, d_bar {d_bar2}"),
    )?;

    // n = 40, d = 10, D̄ = 0.7, sigma = 1e-4, eta = 0.1.
    let threshold_file = dir.join("threshold.mfa");
    let a = DenseMatrix::from_fn(10, 40, |i, j| match j {
        0..=4 => f64::from(u8::from(i == j)),
        _ => [0.3, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0][i],
    });
    write_matrix(&threshold_file, a);
    let (_, v3) = verify_json(
        &threshold_file,
        "1,2,3,4,5",
        &["--sigma", "1e-4", "--eta", "0.1"],
    );
    let eps = v3["epsilon_threshold"].as_f64().unwrap_or(f64::NAN);
    let independent =
        1e-4 * (2.0f64 * 40.0 * 10.0 * (2.0f64 * 40.0 * 10.0 / 0.1).ln()).sqrt() / 0.3;
    ensure(
        (eps - independent).abs() <= 1e-12 && (eps - 0.028264).abs() <= 1e-6,
        || format!("threshold {eps}, independent {independent}"),
    )?;
    Ok(format!(
        "d_bar {d_bar:.5} (exit 0), {d_bar2:.5} (exit 1); threshold {eps:.6}"
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut report = |id: u8, name: &str, check: &mut dyn FnMut() -> Check| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {reason}");
            }
        }
    };

    report(1, "noiseless recovery", &mut noiseless_recovery);
    report(2, "noisy recovery", &mut noisy_recovery);
    report(3, "oracle gap", &mut oracle_gap);
    report(4, "QR/Cholesky equivalence", &mut qr_cholesky_equivalence);
    let datasets = desk_datasets();
    report(5, "monotone residual", &mut || monotone_residual(&datasets));
    report(6, "Burgers desk-scale shape", &mut || {
        burgers_shape(&datasets)
    });
    report(7, "pendulum desk-scale shape", &mut || {
        pendulum_shape(&datasets)
    });
    report(8, "error metric", &mut metric_cases);
    report(9, "sweep determinism", &mut || {
        sweep_determinism(dir.path())
    });
    report(10, "condition-checker arithmetic", &mut || {
        condition_arithmetic(dir.path())
    });

    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
