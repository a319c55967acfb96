//! The oracle verification suite: one callable bundle of every module's
//! independent checks, with a deterministic pass/fail report.
//!
//! Each check states its residual and threshold; the report is a pure
//! function of the seed, so repeated runs are byte-identical.

use crate::basis::{disk_indices, fourier_indices_tagged, BasisId};
use crate::error::Result;
use crate::estimate::{
    brute_force_argmin, delta_net_estimate, dense_estimate, Certificate,
};
use crate::net::{build_packing, NetSpec};
use crate::operator::{
    convolution_svd_max_residual, radon_svd_max_residual, DiagonalOperator, RadonGeometry,
};
use crate::quad::GL_DEFAULT_ORDER;
use crate::rates::{entropy_integral, entropy_integral_numeric, RateModel};
use crate::rng::{substream_seed, GaussianStream};
use crate::seq::{l2_dist, CoefVec, EllipsoidSpec, MultiIndex};
use crate::sim::{empirical_risk, nu_n, simulate_white_noise, NoiseMode, Observation};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteLevel {
    Fast,
    Full,
}

#[derive(Debug, Clone)]
pub struct SuiteCheck {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub checks: Vec<SuiteCheck>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Verification suite");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}  {}  residual={:.17e}  threshold={:.17e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            );
        }
        let _ = writeln!(
            out,
            "overall = {}",
            if self.all_pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

/// Options for fault-injection sanity tests; the default runs the genuine
/// suite.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    /// Additive perturbation applied to the Radon singular value b_00 before
    /// the SVD oracle comparison; a nonzero value must make that check fail.
    pub radon_b00_perturbation: f64,
}

pub fn run_verification_suite(level: SuiteLevel, seed: u64) -> Result<SuiteReport> {
    run_verification_suite_with(level, seed, SuiteOptions::default())
}

pub fn run_verification_suite_with(
    level: SuiteLevel,
    seed: u64,
    options: SuiteOptions,
) -> Result<SuiteReport> {
    let mut checks: Vec<SuiteCheck> = Vec::new();
    let push = |name: &'static str, residual: f64, threshold: f64,
                checks: &mut Vec<SuiteCheck>| {
        checks.push(SuiteCheck {
            name,
            residual,
            threshold,
            pass: residual <= threshold,
        });
    };

    // Orthonormality oracles.
    let r = crate::basis::gram_max_residual(
        &BasisId::FourierPeriodic { d: 1 },
        &fourier_indices_tagged(1, 6),
        512,
    )?;
    push("gram_fourier_1d", r, 1e-8, &mut checks);

    let r = crate::basis::gram_max_residual(
        &BasisId::FourierPeriodic { d: 2 },
        &fourier_indices_tagged(2, 6),
        512,
    )?;
    push("gram_fourier_2d", r, 1e-8, &mut checks);

    let r = crate::basis::gram_max_residual(&BasisId::ZernikeDisk, &disk_indices(6), 512)?;
    push("gram_zernike_disk", r, 1e-8, &mut checks);

    let r =
        crate::basis::gram_max_residual(&BasisId::ChebyshevHalfplane, &disk_indices(6), 512)?;
    push("gram_chebyshev_halfplane", r, 1e-8, &mut checks);

    push(
        "gram_additive_components",
        additive_cross_gram_residual()?,
        1e-8,
        &mut checks,
    );

    // Geometry of the Radon output space.
    let geom = RadonGeometry;
    push(
        "radon_measure_total",
        (geom.total_measure(64) - PI).abs(),
        1e-10,
        &mut checks,
    );

    // SVD oracles.
    let radon_points: Vec<(f64, f64)> = (0..8)
        .flat_map(|i| {
            (0..7).map(move |k| {
                (
                    0.02 + 0.96 * i as f64 / 8.0,
                    2.0 * PI * (k as f64 + 0.31) / 7.0,
                )
            })
        })
        .collect();
    let r = radon_svd_max_residual(
        6,
        &radon_points,
        GL_DEFAULT_ORDER,
        options.radon_b00_perturbation,
    )?;
    push("radon_svd_oracle", r, 1e-6, &mut checks);

    let conv = DiagonalOperator::convolution_explicit(vec![
        1.0, 0.8, 0.5, 0.3, 0.2, 0.1, 0.06, 0.03, 0.01,
    ])?;
    let xs: Vec<f64> = (0..13).map(|i| i as f64 / 13.0).collect();
    let r = convolution_svd_max_residual(&conv, 8, &xs, 512)?;
    push("convolution_svd_oracle", r, 1e-8, &mut checks);

    // Minimization-error identity.
    push(
        "minimization_error_identity",
        lemma_identity_residual(seed)?,
        1e-10,
        &mut checks,
    );

    // Covering and packing.
    let trials = match level {
        SuiteLevel::Fast => 2_000,
        SuiteLevel::Full => 10_000,
    };
    let covering_configs = [
        (1, 1.0, 1.0, 0.3),
        (1, 1.0, 1.0, 0.1),
        (1, 2.0, 1.0, 0.2),
        (1, 2.0, 1.0, 0.05),
        (2, 2.0, 1.0, 0.3),
        (2, 1.5, 1.0, 0.15),
    ];
    let mut worst_ratio: f64 = 0.0;
    for &(d, s, l, delta) in &covering_configs {
        let net = NetSpec::build(EllipsoidSpec::new(d, s, l)?, delta)?;
        let max_dist = net.verify_covering(trials, substream_seed(seed, &[d as u64, s.to_bits()]));
        worst_ratio = worst_ratio.max(max_dist / delta);
    }
    push("covering_max_over_delta", worst_ratio, 1.0, &mut checks);

    let packing_configs = [
        (1usize, 1.0, 1.0, 0.05),
        (1, 2.0, 1.0, 0.05),
        (1, 2.0, 1.0, 0.0048),
        (2, 2.0, 1.0, 0.02),
    ];
    let mut packing_violation: f64 = 0.0;
    for &(d, s, l, delta) in &packing_configs {
        let p = build_packing(EllipsoidSpec::new(d, s, l)?, delta, seed)?;
        let (min_d, max_d, _) = p.verify()?;
        packing_violation = packing_violation
            .max((delta - min_d) / delta)
            .max((max_d - 2.0 * delta) / delta);
        if !p.all_in_ellipsoid() {
            packing_violation = packing_violation.max(1.0);
        }
    }
    push(
        "packing_separation_and_membership",
        packing_violation.max(0.0),
        1e-12,
        &mut checks,
    );

    // Estimator exactness and KKT.
    push(
        "grid_argmin_exactness",
        grid_argmin_residual(seed)?,
        0.0,
        &mut checks,
    );
    let dense_instances = match level {
        SuiteLevel::Fast => 5,
        SuiteLevel::Full => 12,
    };
    push(
        "dense_kkt_and_dominance",
        dense_residual(seed, dense_instances)?,
        1e-12,
        &mut checks,
    );

    // Rate machinery consistency.
    let mut entropy_worst: f64 = 0.0;
    let mut g = GaussianStream::new(substream_seed(seed, &[99]));
    for _ in 0..8 {
        let a = 0.45 * g.uniform();
        let b = 0.2 + (2.0 * (1.0 - a) - 0.2 - 0.05) * g.uniform().min(0.99);
        if a + b / 2.0 >= 0.98 {
            continue;
        }
        let model = RateModel::with_constants(a, b, 0.5 + g.uniform(), 0.5 + g.uniform())?;
        let delta = 0.1 + 0.9 * g.uniform();
        let closed = entropy_integral(&model, delta)?;
        let numeric = entropy_integral_numeric(&model, delta)?;
        entropy_worst = entropy_worst.max(((closed - numeric) / closed).abs());
    }
    push("entropy_integral_consistency", entropy_worst, 1e-8, &mut checks);

    push(
        "rate_equation_slope",
        rate_equation_slope_residual()?,
        1e-6,
        &mut checks,
    );

    // Gaussian noise distributional sanity.
    let (mean_resid, var_resid) = gaussian_moment_residuals(seed)?;
    push("gaussian_mean", mean_resid, 4.0 / (10_000f64).sqrt(), &mut checks);
    push("gaussian_variance", var_resid, 0.06, &mut checks);

    // Density projection unbiasedness.
    let n_density = match level {
        SuiteLevel::Fast => 20_000,
        SuiteLevel::Full => 100_000,
    };
    push(
        "density_projection_unbiased",
        density_unbiasedness_residual(n_density, seed)?,
        1.0,
        &mut checks,
    );

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { checks, all_pass })
}

/// Gram residual across two additive components including cross terms.
fn additive_cross_gram_residual() -> Result<f64> {
    let items: Vec<(BasisId, MultiIndex)> = (1..=6u32)
        .map(|j| {
            (
                BasisId::AdditiveComponent { coordinate: 0 },
                MultiIndex::new(vec![j, 0]),
            )
        })
        .chain((1..=6u32).map(|j| {
            (
                BasisId::AdditiveComponent { coordinate: 1 },
                MultiIndex::new(vec![0, j]),
            )
        }))
        .collect();
    let pts = crate::quad::periodic_points(512);
    let rows: Vec<Vec<f64>> = items
        .iter()
        .map(|(basis, idx)| {
            let mut row = Vec::with_capacity(pts.len() * pts.len());
            for &x in &pts {
                for &y in &pts {
                    row.push(basis.eval(idx, &[x, y])?);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let w = 1.0 / (pts.len() * pts.len()) as f64;
    let mut worst: f64 = 0.0;
    for a in 0..rows.len() {
        for b in a..rows.len() {
            let inner: f64 = rows[a].iter().zip(rows[b].iter()).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((inner * w - target).abs());
        }
    }
    Ok(worst)
}

fn lemma_identity_residual(seed: u64) -> Result<f64> {
    let op = DiagonalOperator::convolution_power(1, 1.0)?;
    let active: Vec<MultiIndex> = (0..=6).map(MultiIndex::scalar).collect();
    let mut g = GaussianStream::new(substream_seed(seed, &[1]));
    let mut worst: f64 = 0.0;
    for rep in 0..100 {
        let mut theta = CoefVec::from_pairs(
            active.iter().map(|j| (j.clone(), 0.3 * g.standard_normal())),
        );
        theta.set(MultiIndex::scalar(9), 0.2);
        let obs = Observation::WhiteNoise(simulate_white_noise(
            &op,
            &theta,
            40.0,
            &active,
            seed,
            rep,
            NoiseMode::Seeded,
        )?);
        let f_hat = CoefVec::from_pairs(
            active.iter().map(|j| (j.clone(), 0.4 * g.standard_normal())),
        );
        let f_zero = CoefVec::from_pairs(
            active.iter().map(|j| (j.clone(), 0.4 * g.standard_normal())),
        );
        let lhs = l2_dist(&f_hat, &theta).powi(2) - empirical_risk(&obs, &f_hat)?
            + empirical_risk(&obs, &f_zero)?
            - l2_dist(&f_zero, &theta).powi(2);
        let rhs = 2.0 * nu_n(&obs, &f_hat.sub(&f_zero))?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

fn grid_argmin_residual(seed: u64) -> Result<f64> {
    let spec = EllipsoidSpec::new(1, 2.0, 1.0)?;
    let net = NetSpec::build(spec, 0.45)?;
    let points = net.enumerate(200_000)?;
    let op = DiagonalOperator::convolution_power(1, 1.0)?;
    let mut g = GaussianStream::new(substream_seed(seed, &[2]));
    let mut worst: f64 = 0.0;
    for rep in 0..60 {
        let theta = CoefVec::from_pairs(
            net.active()
                .iter()
                .map(|j| (j.clone(), 0.2 * g.standard_normal())),
        );
        let obs = Observation::WhiteNoise(simulate_white_noise(
            &op,
            &theta,
            30.0,
            net.active(),
            seed,
            rep,
            NoiseMode::Seeded,
        )?);
        let fast = delta_net_estimate(&obs, &net)?.theta_hat;
        let brute = brute_force_argmin(&obs, &points)?;
        worst = worst.max(l2_dist(&fast, &brute));
    }
    Ok(worst)
}

fn dense_residual(seed: u64, instances: u64) -> Result<f64> {
    let spec = EllipsoidSpec::new(1, 2.0, 1.0)?;
    let net = NetSpec::build(spec, 0.3)?;
    let op = DiagonalOperator::convolution_power(1, 1.0)?;
    let theta = CoefVec::from_pairs([(MultiIndex::scalar(1), 0.5)]);
    let mut worst: f64 = 0.0;
    for rep in 0..instances {
        let obs =
            simulate_white_noise(&op, &theta, 2.0, net.active(), seed, rep, NoiseMode::Seeded)?;
        let report = dense_estimate(&obs, &spec, 1e-10)?;
        if let Certificate::Kkt { residual, .. } = report.certificate {
            worst = worst.max(residual);
        }
        let o = Observation::WhiteNoise(obs.clone());
        let mut g = GaussianStream::new(substream_seed(seed, &[3, rep]));
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
            let suboptimality = report.risk_value - empirical_risk(&o, &c)?;
            worst = worst.max(suboptimality.max(0.0));
        }
    }
    Ok(worst)
}

fn rate_equation_slope_residual() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(a, b) in &[(0.5, 0.5), (0.0, 0.5), (0.25, 1.0)] {
        let model = RateModel::new(a, b)?;
        let target = -crate::rates::rate_exponent_net(a, b)?;
        let mut pts = Vec::new();
        let mut n = 1e3;
        while n <= 1e9 + 1.0 {
            let psi =
                crate::rates::solve_rate_equation(n, &model, crate::rates::RateEquation::NetEq14, 1.0)?;
            pts.push((n, psi));
            n *= 10.0;
        }
        let (slope, _) = crate::harness::fit_loglog_slope(&pts)?;
        worst = worst.max((slope - target).abs());
    }
    Ok(worst)
}

fn gaussian_moment_residuals(seed: u64) -> Result<(f64, f64)> {
    let op = DiagonalOperator::convolution_power(1, 1.0)?;
    let theta = CoefVec::from_pairs([(MultiIndex::scalar(3), 0.1)]);
    let active = vec![MultiIndex::scalar(3)];
    let n = 64.0;
    let b = op.singular_value(&MultiIndex::scalar(3))?;
    let reps = 10_000u64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for rep in 0..reps {
        let obs = simulate_white_noise(&op, &theta, n, &active, seed, rep, NoiseMode::Seeded)?;
        let z = n.sqrt() * b * (obs.y().get(&MultiIndex::scalar(3)) - 0.1);
        sum += z;
        sumsq += z * z;
    }
    let mean = sum / reps as f64;
    let var = sumsq / reps as f64 - mean * mean;
    Ok((mean.abs(), (var - 1.0).abs()))
}

/// Worst deviation of n^{-1}Σ(Qφ_j)(Y_i) from θ_j in units of 4 standard
/// errors, over |j| ≤ 5.
fn density_unbiasedness_residual(n: usize, seed: u64) -> Result<f64> {
    let op = DiagonalOperator::convolution_power(1, 1.0)?;
    let theta = CoefVec::from_pairs([
        (MultiIndex::scalar(0), 1.0),
        (MultiIndex::scalar(1), 0.3),
        (MultiIndex::scalar(2), 0.1),
    ]);
    let sample = crate::sim::sample_density(&op, &theta, n, substream_seed(seed, &[4]))?;
    let basis = BasisId::FourierPeriodic { d: 1 };
    let mut worst: f64 = 0.0;
    for j in 0..=5u32 {
        let idx = MultiIndex::scalar(j);
        let b = op.singular_value(&idx)?;
        let vals: Vec<f64> = sample
            .points()
            .iter()
            .map(|x| basis.eval(&idx, x).map(|v| v / b))
            .collect::<Result<Vec<_>>>()?;
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt();
        worst = worst.max((mean - theta.get(&idx)).abs() / (4.0 * se));
    }
    Ok(worst)
}
