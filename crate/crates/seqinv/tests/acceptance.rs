//! Acceptance suite: every release-gating check, one test per criterion,
//! each printing a pass/fail line (visible with `--nocapture`).
//!
//! Run with `cargo test --release --test acceptance -- --nocapture`.

use seqinv::config::ExperimentConfig;
use seqinv::estimate::{brute_force_argmin, delta_net_estimate, dense_estimate, Certificate};
use seqinv::harness::{run_mise_sweep, verify_scalings, SweepResult};
use seqinv::net::{build_packing, NetSpec};
use seqinv::operator::{
    convolution_svd_max_residual, radon_svd_max_residual, DiagonalOperator,
};
use seqinv::rates::{risk_bound_constants, BoundModel};
use seqinv::rng::GaussianStream;
use seqinv::seq::{l2_dist, CoefVec, EllipsoidSpec, MultiIndex};
use seqinv::sim::{empirical_risk, nu_n, simulate_white_noise, NoiseMode, Observation};
use std::f64::consts::PI;
use std::time::Instant;

fn load_config(name: &str) -> ExperimentConfig {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    ExperimentConfig::load(std::path::Path::new(&path)).expect("config loads")
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn slope_check(name: &str, result: &SweepResult, target: f64, tolerance: f64) {
    let err = (result.slope - target).abs();
    report(
        name,
        err <= tolerance,
        &format!(
            "fitted slope {:.4} vs target {target:.4}, |err| {err:.4} <= {tolerance}, ci95 {:.4}",
            result.slope, result.ci95
        ),
    );
}

#[test]
fn criterion_01_radon_svd_oracle() {
    let start = Instant::now();
    let points: Vec<(f64, f64)> = (0..8)
        .flat_map(|i| {
            (0..7).map(move |k| {
                (
                    0.02 + 0.96 * i as f64 / 8.0,
                    2.0 * PI * (k as f64 + 0.31) / 7.0,
                )
            })
        })
        .collect();
    assert!(points.len() >= 50);
    let residual = radon_svd_max_residual(6, &points, 64, 0.0).unwrap();
    let elapsed = start.elapsed();
    report(
        "1 (radon SVD oracle)",
        residual <= 1e-6 && elapsed.as_secs() < 60,
        &format!("max residual {residual:.3e} <= 1e-6 in {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_convolution_svd_oracle() {
    let op = DiagonalOperator::convolution_explicit(vec![
        1.0, 0.8, 0.5, 0.3, 0.2, 0.1, 0.06, 0.03, 0.01,
    ])
    .unwrap();
    let xs: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
    let residual = convolution_svd_max_residual(&op, 8, &xs, 512).unwrap();
    report(
        "2 (convolution SVD oracle)",
        residual <= 1e-8,
        &format!("max residual {residual:.3e} <= 1e-8 for |j| <= 8"),
    );
}

#[test]
fn criterion_03_minimization_error_identity() {
    let op = DiagonalOperator::convolution_power(1, 1.0).unwrap();
    let active: Vec<MultiIndex> = (0..=6).map(MultiIndex::scalar).collect();
    let mut g = GaussianStream::new(314159);
    let mut worst: f64 = 0.0;
    for rep in 0..100 {
        let mut theta = CoefVec::from_pairs(
            active.iter().map(|j| (j.clone(), 0.3 * g.standard_normal())),
        );
        theta.set(MultiIndex::scalar(11), 0.2);
        let obs = Observation::WhiteNoise(
            simulate_white_noise(&op, &theta, 50.0, &active, 99, rep, NoiseMode::Seeded).unwrap(),
        );
        let f_hat =
            CoefVec::from_pairs(active.iter().map(|j| (j.clone(), 0.4 * g.standard_normal())));
        let f_zero =
            CoefVec::from_pairs(active.iter().map(|j| (j.clone(), 0.4 * g.standard_normal())));
        let lhs = l2_dist(&f_hat, &theta).powi(2) - empirical_risk(&obs, &f_hat).unwrap()
            + empirical_risk(&obs, &f_zero).unwrap()
            - l2_dist(&f_zero, &theta).powi(2);
        let rhs = 2.0 * nu_n(&obs, &f_hat.sub(&f_zero)).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    report(
        "3 (minimization-error identity)",
        worst < 1e-10,
        &format!("max residual {worst:.3e} < 1e-10 over 100 instances"),
    );
}

#[test]
fn criterion_04_covering_and_packing() {
    let covering_configs = [
        (1usize, 1.0, 0.3),
        (1, 1.0, 0.1),
        (1, 2.0, 0.2),
        (1, 2.0, 0.05),
        (2, 2.0, 0.3),
        (2, 1.5, 0.15),
    ];
    let mut worst_ratio: f64 = 0.0;
    for &(d, s, delta) in &covering_configs {
        let net = NetSpec::build(EllipsoidSpec::new(d, s, 1.0).unwrap(), delta).unwrap();
        let max_dist = net.verify_covering(10_000, 7);
        worst_ratio = worst_ratio.max(max_dist / delta);
    }

    let packing_configs = [
        (1usize, 1.0, 0.05),
        (1, 2.0, 0.05),
        (1, 2.0, 0.0048),
        (2, 2.0, 0.02),
    ];
    let mut packing_ok = true;
    let mut detail = String::new();
    for &(d, s, delta) in &packing_configs {
        let p = build_packing(EllipsoidSpec::new(d, s, 1.0).unwrap(), delta, 7).unwrap();
        let (min_d, max_d, count) = p.verify().unwrap();
        let ok = min_d >= delta * (1.0 - 1e-12)
            && max_d <= 2.0 * delta * (1.0 + 1e-12)
            && p.all_in_ellipsoid();
        packing_ok &= ok;
        detail.push_str(&format!("(d={d},s={s},delta={delta}: n={count}) "));
    }
    report(
        "4 (covering and packing)",
        worst_ratio <= 1.0 && packing_ok,
        &format!(
            "10^4-trial covering max/delta = {worst_ratio:.4} <= 1; packings {detail}exact min/max in [delta, 2 delta]"
        ),
    );
}

#[test]
fn criterion_05_estimator_exactness() {
    // Grid argmin equals brute force, exactly, on enumerable nets.
    let instances = [
        (EllipsoidSpec::new(1, 2.0, 1.0).unwrap(), 0.45),
        (EllipsoidSpec::new(1, 1.0, 1.0).unwrap(), 0.55),
        (EllipsoidSpec::new(2, 2.0, 1.0).unwrap(), 0.9),
    ];
    let mut exact = true;
    let mut total_points = 0usize;
    for (spec, delta) in instances {
        let net = NetSpec::build(spec, delta).unwrap();
        let points = net.enumerate(100_000).unwrap();
        total_points += points.len();
        let op = DiagonalOperator::convolution_power(spec.dim(), 1.0).unwrap();
        let mut g = GaussianStream::new(27);
        for rep in 0..40 {
            let theta = CoefVec::from_pairs(
                net.active()
                    .iter()
                    .map(|j| (j.clone(), 0.2 * g.standard_normal())),
            );
            let obs = Observation::WhiteNoise(
                simulate_white_noise(&op, &theta, 30.0, net.active(), 5, rep, NoiseMode::Seeded)
                    .unwrap(),
            );
            let fast = delta_net_estimate(&obs, &net).unwrap().theta_hat;
            let brute = brute_force_argmin(&obs, &points).unwrap();
            exact &= l2_dist(&fast, &brute) == 0.0;
        }
    }

    // Dense minimizer: KKT residual <= 1e-12 and dominance over 10^3 random
    // feasible points.
    let spec = EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
    let net = NetSpec::build(spec, 0.3).unwrap();
    let op = DiagonalOperator::convolution_power(1, 1.0).unwrap();
    let theta = CoefVec::from_pairs([(MultiIndex::scalar(1), 0.5)]);
    let mut kkt_ok = true;
    let mut dominance_ok = true;
    for rep in 0..5 {
        let obs =
            simulate_white_noise(&op, &theta, 2.0, net.active(), 13, rep, NoiseMode::Seeded)
                .unwrap();
        let result = dense_estimate(&obs, &spec, 1e-10).unwrap();
        if let Certificate::Kkt { residual, .. } = result.certificate {
            kkt_ok &= residual <= 1e-12;
        }
        let o = Observation::WhiteNoise(obs.clone());
        let mut g = GaussianStream::new(1000 + rep);
        for _ in 0..1000 {
            let dir: Vec<f64> = obs.active().iter().map(|_| g.standard_normal()).collect();
            let wnorm = obs
                .active()
                .iter()
                .zip(dir.iter())
                .map(|(j, &x)| {
                    let a = spec.coeff(j);
                    a * a * x * x
                })
                .sum::<f64>()
                .sqrt();
            let r = spec.radius() * g.uniform().powf(1.0 / obs.active().len() as f64);
            let c = CoefVec::from_pairs(
                obs.active()
                    .iter()
                    .zip(dir.iter())
                    .map(|(j, &x)| (j.clone(), r * x / wnorm)),
            );
            dominance_ok &= result.risk_value <= empirical_risk(&o, &c).unwrap() + 1e-10;
        }
    }
    report(
        "5 (estimator exactness)",
        exact && kkt_ok && dominance_ok,
        &format!(
            "grid argmin exact over {total_points} enumerated points x 120 instances; KKT <= 1e-12; dominates 5x10^3 feasible points"
        ),
    );
}

#[test]
fn criterion_06_rate_direct() {
    let start = Instant::now();
    let cfg = load_config("direct.toml");
    let result = run_mise_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "runtime {elapsed:.2?} exceeds 5 min");
    slope_check("6 (direct rate -4/5)", &result, -0.8, 0.12);
}

#[test]
fn criterion_07_rate_deconvolution() {
    let cfg = load_config("deconvolution.toml");
    let result = run_mise_sweep(&cfg).unwrap();
    slope_check("7 (deconvolution rate -4/7)", &result, -4.0 / 7.0, 0.12);
}

#[test]
fn criterion_08_rate_radon() {
    let start = Instant::now();
    let cfg = load_config("radon.toml");
    let result = run_mise_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 900, "runtime {elapsed:.2?} exceeds 15 min");
    slope_check("8 (radon rate -4/7)", &result, -4.0 / 7.0, 0.15);
}

#[test]
fn criterion_09_rate_additive_with_oracle_bound() {
    let cfg = load_config("additive.toml");
    let result = run_mise_sweep(&cfg).unwrap();
    let bound_ok = result.rows.iter().all(|r| r.bound_pass);
    report(
        "9a (additive oracle bound, c = 1)",
        bound_ok,
        "every row satisfies 3 delta^2 + 32 n^{-1}[sum rho^2 lambda + (sum rho)^2]",
    );
    slope_check("9b (additive rate -4/7)", &result, -4.0 / 7.0, 0.12);
}

#[test]
fn criterion_10_bound_domination() {
    // C1 = 49 and C2 = 108 at xi = 0.48, C_tau = 9.
    let (c1, c2) = risk_bound_constants(0.48, 9.0, BoundModel::WhiteNoise).unwrap();
    assert!((c1 - 49.0).abs() < 1e-10 && (c2 - 108.0).abs() < 1e-10);
    let mut all_ok = true;
    let mut detail = String::new();
    for name in ["direct.toml", "deconvolution.toml", "radon.toml"] {
        let cfg = load_config(name);
        let result = run_mise_sweep(&cfg).unwrap();
        let rows_ok = result.rows.iter().all(|r| r.bound_pass);
        all_ok &= rows_ok;
        let max_ratio = result
            .rows
            .iter()
            .map(|r| r.mise_mean / r.bound)
            .fold(0.0f64, f64::max);
        detail.push_str(&format!("{name}: max MISE/bound {max_ratio:.3e}; "));
    }
    report(
        "10 (risk-bound domination, C1=49 C2=108)",
        all_ok,
        &detail,
    );
}

#[test]
fn criterion_11_scaling_laws() {
    let mut all_ok = true;
    let mut detail = String::new();
    for name in ["deconvolution.toml", "radon.toml"] {
        let cfg = load_config(name);
        let rep = verify_scalings(&cfg, &cfg.scalings_delta_grid).unwrap();
        all_ok &= rep.all_pass && rep.rates_equal;
        for c in &rep.checks {
            detail.push_str(&format!(
                "{name}/{}: {:.3} (target {:.3} +/- {}); ",
                c.name, c.slope, c.target, c.tolerance
            ));
        }
        detail.push_str(&format!(
            "{name}: upper exponent {} == lower exponent {}; ",
            rep.rate_upper_exponent, rep.rate_lower_exponent
        ));
    }
    report("11 (scaling laws, both operators)", all_ok, &detail);
}

#[test]
fn criterion_12_density_model_path() {
    let cfg = load_config("density.toml");
    let result = run_mise_sweep(&cfg).unwrap();
    let conditions = result.density_conditions.expect("density conditions recorded");
    report(
        "12a (density conditions: rho >= 1, finite sup norms)",
        conditions.rho_min >= 1.0
            && conditions.b_inf.is_finite()
            && conditions.b_prime_inf.is_finite(),
        &format!(
            "rho_min {:.3} >= 1, B_inf {:.3}, B'_inf {:.3}",
            conditions.rho_min, conditions.b_inf, conditions.b_prime_inf
        ),
    );
    slope_check("12b (density deconvolution rate -4/7)", &result, -4.0 / 7.0, 0.15);
}
