//! Acceptance suite. Every criterion prints one `ACCEPTANCE <n> PASS|FAIL`
//! line; run with `--nocapture` to see them.

use std::process::Command;

use exact_ipe::analysis::{
    generate_corpus, mean_abs_error, run_sweep, underflow_scan, write_sweep_csv, CorpusKind, SweepConfig, SweepMode,
};
use exact_ipe::baseline::{
    cone_moments, contraction_jacobian, gaussian_ipe, pe, square_pyramid_eipe_detailed, GaussianRegion,
};
use exact_ipe::corpus::{random_cone, random_frustum, random_rotation, FrustumRanges};
use exact_ipe::exact::{eipe, frequency, sigma_coeff, sigma_generic, xi_coeff, xi_generic};
use exact_ipe::geometry::{contract_point, frustum_from_pixel, triangulate, volume};
use exact_ipe::oracle::{mc_encoding, mc_moments, stream_rng};
use exact_ipe::render::{composite, composite_weights, IntervalRadiance, RaySamples};
use exact_ipe::{CameraPose, Guard, Mat3, Vec3};
use rand::Rng;
use rayon::prelude::*;

fn report(n: u32, pass: bool, detail: String) {
    println!("ACCEPTANCE {n} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance criterion {n} failed: {detail}");
}

const ORACLE_FRUSTA: u64 = 1000;
const ORACLE_SAMPLES: usize = 1_000_000;
const ORACLE_OCTAVES: usize = 8;
const ORACLE_ABS_TOL: f64 = 5e-3;
const ORACLE_SE_FACTOR: f64 = 4.0;

/// Octave `l` of an 8-octave encoding equals octave `l` of any shorter one,
/// so one `L = 8` comparison covers `L = 1..8`.
#[test]
fn acceptance_1_eipe_matches_monte_carlo() {
    let results: Vec<(u64, usize, f64, String)> = (0..ORACLE_FRUSTA)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(1001, i);
            let pf = random_frustum(&mut rng, &FrustumRanges::default()).unwrap();
            let exact = match eipe(&triangulate(&pf.frustum), ORACLE_OCTAVES) {
                Ok(e) => e,
                Err(e) => return (i, 1, f64::INFINITY, format!("eipe error {e}")),
            };
            let mc = mc_encoding(&pf.frustum, ORACLE_OCTAVES, ORACLE_SAMPLES, 5000 + i).unwrap();
            let mut bad = 0;
            let mut worst = 0.0f64;
            let mut note = String::new();
            for (j, v) in exact.values().iter().enumerate() {
                let tol = ORACLE_ABS_TOL.max(ORACLE_SE_FACTOR * mc.std_error[j]);
                let ratio = (v - mc.mean[j]).abs() / tol;
                if ratio > 1.0 {
                    bad += 1;
                    note = format!(
                        "component {j}: eipe {v} vs oracle {} (se {}), t=[{}, {}]",
                        mc.mean[j], mc.std_error[j], pf.t_near, pf.t_far
                    );
                }
                worst = worst.max(ratio);
            }
            (i, bad, worst, note)
        })
        .collect();
    let failures: Vec<_> = results.iter().filter(|r| r.1 > 0).collect();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let detail = format!(
        "{} frusta x {} components, n = {ORACLE_SAMPLES}; {} frusta out of tolerance; worst |diff|/tol = {worst:.3}{}",
        ORACLE_FRUSTA,
        6 * ORACLE_OCTAVES,
        failures.len(),
        failures.first().map(|f| format!("; first: frustum {} {}", f.0, f.3)).unwrap_or_default()
    );
    report(1, failures.is_empty(), detail);
}

#[test]
fn acceptance_2_square_pyramid_volume() {
    let mut rng = stream_rng(1002, 0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let omega = rng.random_range(1e-3..2.0);
        let origin = Vec3::from_fn(|_, _| rng.random_range(-5.0..5.0));
        let pose = CameraPose::new(Mat3::identity(), origin, omega).unwrap();
        let t0 = rng.random_range(0.0..10.0);
        let t1 = t0 + rng.random_range(1e-3..10.0);
        let f = frustum_from_pixel(&pose, &Vec3::z(), t0, t1).unwrap();
        let v = volume(&triangulate(&f)).unwrap();
        let closed = omega * omega * (t1.powi(3) - t0.powi(3)) / 3.0;
        worst = worst.max((v - closed).abs() / closed);
    }
    report(2, worst <= 1e-12, format!("10000 frusta, worst relative error {worst:e} (tolerance 1e-12)"));
}

/// Limits are compared with the generic formula at perturbations of
/// `10^-1 .. 10^-4` in phase units (`2^l x`), since both coefficients depend
/// on coordinates only through the phases.
#[test]
fn acceptance_3_degenerate_limits() {
    let mut rng = stream_rng(1003, 0);
    let mut failures = Vec::new();
    let mut cases = 0;
    for _ in 0..20 {
        let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        for l in 0..8 {
            let step = |e: i32| 10f64.powi(-e) / frequency(l);
            // (limit point, perturbation of that point at size h)
            type Perturb = Box<dyn Fn([f64; 3], f64) -> [f64; 3]>;
            let mut shapes: Vec<(&str, [f64; 3], Perturb)> = Vec::new();
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let mut d = base;
                d[i] = d[j];
                shapes.push((
                    ["pair01", "pair02", "pair12"][i + j - 1],
                    d,
                    Box::new(move |mut p: [f64; 3], h| {
                        p[i] += h;
                        p
                    }),
                ));
            }
            let t = [base[0]; 3];
            shapes.push(("triple", t, Box::new(|p: [f64; 3], h| [p[0], p[1] + h, p[2] - 0.6 * h])));
            for (name, d, perturb) in &shapes {
                cases += 1;
                let s_lim = sigma_coeff(d[0], d[1], d[2], l).unwrap();
                let x_lim = xi_coeff(d[0], d[1], d[2], l).unwrap();
                let mut prev = (f64::INFINITY, f64::INFINITY);
                for e in 1..=4 {
                    let p = perturb(*d, step(e));
                    let ds = (sigma_generic(p[0], p[1], p[2], l) - s_lim).abs();
                    let dx = (xi_generic(p[0], p[1], p[2], l) - x_lim).abs();
                    if !(ds < prev.0 && dx < prev.1) {
                        failures.push(format!("{name} at {d:?}, l={l}, 1e-{e}: ({ds:e}, {dx:e}) after ({:e}, {:e})", prev.0, prev.1));
                    }
                    prev = (ds, dx);
                }
            }
        }
    }
    let mut anchor_err = 0.0f64;
    for x0 in [0.0f64, 1.0] {
        for l in 0..12 {
            let a = frequency(l);
            anchor_err = anchor_err.max((sigma_coeff(x0, x0, x0, l).unwrap() + 0.5 * (a * x0).cos()).abs());
            anchor_err = anchor_err.max((xi_coeff(x0, x0, x0, l).unwrap() - 0.5 * (a * x0).sin()).abs());
        }
    }
    let pass = failures.is_empty() && anchor_err <= 1e-12;
    report(
        3,
        pass,
        format!(
            "{cases} limit cases x 4 perturbations, {} non-decreasing steps{}; anchor error {anchor_err:e} (tolerance 1e-12)",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

#[test]
fn acceptance_4_square_pyramid_closed_form() {
    let mut rng = stream_rng(1004, 0);
    let mut worst = 0.0f64;
    let mut singular = 0;
    let mut used = 0;
    while used < 100 {
        let origin = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let omega = rng.random_range(5e-3..5e-2);
        let pose = CameraPose::new(random_rotation(&mut rng), origin, omega).unwrap();
        let t0 = rng.random_range(0.5..6.0);
        let t1 = t0 + rng.random_range(0.01..2.0);
        let (closed, sources) = square_pyramid_eipe_detailed(&pose, t0, t1, 4).unwrap();
        if sources.iter().any(|s| !s) {
            singular += 1;
            continue;
        }
        used += 1;
        let general = eipe(&triangulate(&frustum_from_pixel(&pose, &Vec3::z(), t0, t1).unwrap()), 4).unwrap();
        worst = worst.max(closed.max_abs_diff(&general));
    }
    report(
        4,
        worst <= 1e-9,
        format!("100 poses ({singular} singular draws skipped), L = 4, worst difference {worst:e} (tolerance 1e-9)"),
    );
}

fn endpoint_errors(cfg: &SweepConfig) -> Vec<(usize, f64, f64)> {
    let rows = run_sweep(cfg).unwrap();
    let g = cfg.grid.values();
    let at = |v: f64| match cfg.mode {
        SweepMode::DeltaSweep => (cfg.fixed, v),
        _ => (v, cfg.fixed),
    };
    let (near, far) = (at(g[0]), at(*g.last().unwrap()));
    cfg.l_list
        .iter()
        .map(|&l| {
            (l, mean_abs_error(&rows, near.0, near.1, l).unwrap(), mean_abs_error(&rows, far.0, far.1, l).unwrap())
        })
        .collect()
}

fn sweep_bytes(cfg: &SweepConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, cfg, &run_sweep(cfg).unwrap()).unwrap();
    buf
}

#[test]
fn acceptance_5_sweep_trends() {
    let mu = SweepConfig::defaults(SweepMode::MuSweep);
    let delta = SweepConfig::defaults(SweepMode::DeltaSweep);
    let mu_err = endpoint_errors(&mu);
    let delta_err = endpoint_errors(&delta);
    let mu_ok = mu_err.iter().filter(|e| e.0 >= 3).all(|e| e.2 > e.1);
    let delta_ok = delta_err.iter().all(|e| e.2 > e.1);
    let deterministic = sweep_bytes(&mu) == sweep_bytes(&mu) && sweep_bytes(&delta) == sweep_bytes(&delta);

    let bin = env!("CARGO_BIN_EXE_exact-ipe");
    let cli = |mode: &str, jobs: &str| {
        Command::new(bin).args(["sweep", "--mode", mode, "--jobs", jobs]).output().unwrap().stdout
    };
    let cli_ok = cli("mu-sweep", "1") == cli("mu-sweep", "4")
        && cli("delta-sweep", "1") == cli("delta-sweep", "4")
        && cli("mu-sweep", "1") == sweep_bytes(&mu);

    let fmt = |v: &[(usize, f64, f64)]| {
        v.iter().map(|(l, a, b)| format!("L{l} {a:.2e}->{b:.2e}")).collect::<Vec<_>>().join(", ")
    };
    report(
        5,
        mu_ok && delta_ok && deterministic && cli_ok,
        format!(
            "mu_sweep [{}]; delta_sweep [{}]; byte-identical csv: library {deterministic}, cli {cli_ok}",
            fmt(&mu_err),
            fmt(&delta_err)
        ),
    );
}

#[test]
fn acceptance_6_underflow_guard() {
    let degenerate = generate_corpus(CorpusKind::NearDegenerate, 200, 1006).unwrap();
    let random = generate_corpus(CorpusKind::Random, 1000, 1001).unwrap();
    let off = underflow_scan(&degenerate, 8, Guard::Off).unwrap();
    let on_degenerate = underflow_scan(&degenerate, 8, Guard::On).unwrap();
    let on_random = underflow_scan(&random, 8, Guard::On).unwrap();
    let worst_off = off.violations.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
    let worst_on = on_degenerate.violations.iter().chain(&on_random.violations).map(|v| v.value.abs()).fold(0.0, f64::max);
    let pass = !off.violations.is_empty() && on_degenerate.violations.is_empty() && on_random.violations.is_empty();
    report(
        6,
        pass,
        format!(
            "guard off: {} violations on {} near-degenerate frusta (max |value| {worst_off:e}); guard on: {} + {} violations on {} + {} frusta (max |value| {worst_on}, {} guard activations)",
            off.violations.len(),
            degenerate.len(),
            on_degenerate.violations.len(),
            on_random.violations.len(),
            degenerate.len(),
            random.len(),
            on_degenerate.guard_activations + on_random.guard_activations
        ),
    );
}

const CONES: u64 = 50;
const CONE_SAMPLES: usize = 10_000_000;

#[test]
fn acceptance_7_gaussian_baseline() {
    let mut rng = stream_rng(1007, 0);

    // zero covariance gives the point encoding bit for bit
    let mut zero_cov_ok = true;
    for _ in 0..1000 {
        let mu = Vec3::from_fn(|_, _| rng.random_range(-10.0..10.0));
        let g = GaussianRegion::new(mu, Mat3::zeros()).unwrap();
        zero_cov_ok &= gaussian_ipe(&g, 10).unwrap() == pe(&mu, 10).unwrap();
    }

    // cone moments against Monte Carlo, mean and the six covariance entries
    let cones: Vec<_> = (0..CONES).map(|_| random_cone(&mut rng)).collect();
    let z: Vec<Vec<f64>> = cones
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let exact = cone_moments(&c.d, &c.o, c.r_dot, c.t0, c.t1).unwrap();
            let mc = mc_moments(&c.d, &c.o, c.r_dot, c.t0, c.t1, CONE_SAMPLES, 7000 + i as u64).unwrap();
            let mut z: Vec<f64> = (0..3).map(|k| (mc.mean[k] - exact.mean()[k]) / mc.mean_se[k]).collect();
            for (a, b) in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
                z.push((mc.covariance[(a, b)] - exact.covariance()[(a, b)]) / mc.covariance_se[(a, b)]);
            }
            z
        })
        .collect();
    let all: Vec<f64> = z.iter().flatten().copied().collect();
    let outside = all.iter().filter(|v| !(v.abs() <= 3.0)).count();
    let max_z = all.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mean_z2 = all.iter().map(|v| v * v).sum::<f64>() / all.len() as f64;

    // contraction Jacobian against central differences
    let h = 1e-6;
    let mut jac_err = 0.0f64;
    for _ in 0..2000 {
        let dir = random_rotation(&mut rng) * Vec3::z();
        let r = rng.random_range(0.05..20.0f64);
        if (r - 1.0).abs() < 1e-3 {
            continue;
        }
        let x = r * dir;
        let j = contraction_jacobian(&x);
        for c in 0..3 {
            let e = Vec3::from_fn(|k, _| if k == c { h } else { 0.0 });
            let fd = (contract_point(&(x + e)) - contract_point(&(x - e))) / (2.0 * h);
            jac_err = jac_err.max((fd - j.column(c)).amax());
        }
    }

    let pass = zero_cov_ok && outside == 0 && jac_err <= 1e-6;
    report(
        7,
        pass,
        format!(
            "zero covariance == pe: {zero_cov_ok}; cone moments: {outside} of {} comparisons beyond 3 SE (max |z| {max_z:.2}, mean z^2 {mean_z2:.2}, {:.1} expected beyond 3 SE by chance); jacobian fd error {jac_err:e} (tolerance 1e-6)",
            all.len(),
            all.len() as f64 * 0.0027
        ),
    );
}

#[test]
fn acceptance_8_compositing() {
    let mut rng = stream_rng(1008, 0);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let n = rng.random_range(1..64usize);
        let mut ts = vec![rng.random_range(0.0..1.0)];
        for _ in 0..n {
            let last = *ts.last().unwrap();
            ts.push(last + rng.random_range(1e-4..1.0));
        }
        let rays = RaySamples::from_ts(ts).unwrap();
        let dens: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => rng.random_range(0.0..1e4),
                _ => rng.random_range(0.0..5.0),
            })
            .collect();
        let (w, t) = composite_weights(&dens, &rays).unwrap();
        worst = worst.max((w.iter().sum::<f64>() + t - 1.0).abs());
    }

    let c1 = Vec3::new(0.9, 0.2, 0.4);
    let c2 = Vec3::new(0.1, 0.7, 1.0);
    let rays3 = RaySamples::from_ts(vec![0.0, 0.5, 1.0, 2.0]).unwrap();
    let empty = [IntervalRadiance::new(c1, 0.0).unwrap(); 3];
    let (_, t_empty) = composite_weights(&[0.0; 3], &rays3).unwrap();
    let e1 = composite(&empty, &rays3).unwrap().amax().max((t_empty - 1.0).abs());
    let one = RaySamples::from_ts(vec![1.0, 2.0]).unwrap();
    let e2 = (composite(&[IntervalRadiance::new(c1, f64::INFINITY).unwrap()], &one).unwrap() - c1).amax();
    let two = RaySamples::from_ts(vec![0.0, 1.0, 2.0]).unwrap();
    let split = [IntervalRadiance::new(c1, std::f64::consts::LN_2).unwrap(), IntervalRadiance::new(c2, f64::INFINITY).unwrap()];
    let e3 = (composite(&split, &two).unwrap() - (0.5 * c1 + 0.5 * c2)).amax();
    let examples = e1.max(e2).max(e3);
    report(
        8,
        worst <= 1e-12 && examples <= 1e-12,
        format!("partition error {worst:e} over 100000 rays; closed-form examples error {examples:e} (tolerance 1e-12)"),
    );
}

#[test]
fn acceptance_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_exact-ipe");
    let dir = tempfile::tempdir().unwrap();
    let regions = dir.path().join("regions.txt");
    let regions_arg = regions.to_str().unwrap().to_string();
    {
        let frusta = generate_corpus(CorpusKind::Random, 4, 9).unwrap();
        let mut f = std::fs::File::create(&regions).unwrap();
        exact_ipe::analysis::write_region_file(&mut f, &frusta).unwrap();
    }
    let commands: Vec<Vec<String>> = [
        vec!["encode", "--t-near", "1", "--t-far", "2", "--pixel", "0.1,-0.2", "--L", "6"],
        vec!["encode", "--region-file", &regions_arg, "--encoder", "ipe", "--contract", "--L", "5"],
        vec!["sweep", "--mode", "mu-sweep"],
        vec!["sweep", "--mode", "delta-sweep"],
        vec!["sweep", "--mode", "small-frustum", "--contract"],
        vec!["underflow-scan", "--guard=off", "--count", "50"],
        vec!["underflow-scan", "--guard=on", "--corpus", "random", "--count", "200"],
        vec!["oracle", "--region-file", &regions_arg, "--samples", "200000", "--L", "4"],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(String::from).collect())
    .collect();

    let mut mismatched = Vec::new();
    for args in &commands {
        let mut outputs = Vec::new();
        for jobs in ["1", "4", "16"] {
            for _ in 0..2 {
                let out = Command::new(bin).args(args).args(["--seed", "42", "--jobs", jobs]).output().unwrap();
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                outputs.push(out.stdout);
            }
        }
        if outputs.iter().any(|o| o != &outputs[0]) || outputs[0].is_empty() {
            mismatched.push(args.join(" "));
        }
    }
    // --output writes the same bytes
    let path = dir.path().join("sweep.csv");
    let out = Command::new(bin)
        .args(["sweep", "--seed", "42", "--jobs", "16", "--output", path.to_str().unwrap()])
        .output()
        .unwrap();
    let stdout = Command::new(bin).args(["sweep", "--seed", "42", "--jobs", "1"]).output().unwrap().stdout;
    let file_ok = out.status.success() && std::fs::read(&path).unwrap() == stdout;
    report(
        9,
        mismatched.is_empty() && file_ok,
        format!(
            "{} commands x jobs {{1, 4, 16}} x 2 runs; mismatched: {:?}; --output file identical: {file_ok}",
            commands.len(),
            mismatched
        ),
    );
}
