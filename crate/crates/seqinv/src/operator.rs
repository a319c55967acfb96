//! Diagonal-SVD operator representations and their independent quadrature
//! oracles.
//!
//! Every operator here is known through singular systems: A φ_j = b_j u_j
//! with orthonormal φ_j, u_j, so both A and Q = (A^{-1})* act diagonally on
//! coefficients (Q u_j carries b_j^{-1}). The quadrature oracles
//! (`radon_forward_quadrature`, `convolve_periodic`) recompute the forward
//! action without the SVD and arbitrate the singular-value conventions.

use crate::basis::BasisId;
use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, integrate_periodic_1d};
use crate::seq::{l2_dist, CoefVec, MultiIndex};
use std::f64::consts::PI;

/// Singular-value rule for a convolution operator.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularRule {
    /// b_j = max(1, |j|)^{-q}; the canonical representative of a degree-q
    /// ill-posed convolution class.
    PowerLaw { q: f64 },
    /// Explicit eigenvalues b_j indexed by frequency (d = 1 only). The
    /// kernel realizing them is a(x) = b_0 + Σ_{j>=1} 2 b_j cos(2πjx).
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity { d: usize },
    Convolution { d: usize, rule: SingularRule },
    Radon2d,
    /// Componentwise convolution for additive models: component k (mass on
    /// coordinate k only) sees b_j = max(1, j)^{-q_k}.
    AdditiveConvolution { qs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    kind: OperatorKind,
}

impl DiagonalOperator {
    pub fn identity(d: usize) -> Self {
        Self {
            kind: OperatorKind::Identity { d },
        }
    }

    pub fn convolution_power(d: usize, q: f64) -> Result<Self> {
        if q < 0.0 || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "degree of ill-posedness must be nonnegative, got {q}"
            )));
        }
        Ok(Self {
            kind: OperatorKind::Convolution {
                d,
                rule: SingularRule::PowerLaw { q },
            },
        })
    }

    pub fn convolution_explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty eigenvalue list".into()));
        }
        if values.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidParameter(
                "explicit singular values must be positive and finite".into(),
            ));
        }
        Ok(Self {
            kind: OperatorKind::Convolution {
                d: 1,
                rule: SingularRule::Explicit { values },
            },
        })
    }

    pub fn radon2d() -> Self {
        Self {
            kind: OperatorKind::Radon2d,
        }
    }

    pub fn additive_convolution(qs: Vec<f64>) -> Result<Self> {
        if qs.is_empty() {
            return Err(Error::InvalidParameter("empty component list".into()));
        }
        if qs.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(Error::InvalidParameter(
                "component degrees must be nonnegative".into(),
            ));
        }
        Ok(Self {
            kind: OperatorKind::AdditiveConvolution { qs },
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Identity { d } => *d,
            OperatorKind::Convolution { d, .. } => *d,
            OperatorKind::Radon2d => 2,
            OperatorKind::AdditiveConvolution { qs } => qs.len(),
        }
    }

    pub fn input_basis(&self) -> BasisId {
        match &self.kind {
            OperatorKind::Identity { d } | OperatorKind::Convolution { d, .. } => {
                BasisId::FourierPeriodic { d: *d }
            }
            OperatorKind::Radon2d => BasisId::ZernikeDisk,
            OperatorKind::AdditiveConvolution { qs } => BasisId::FourierPeriodic { d: qs.len() },
        }
    }

    pub fn output_basis(&self) -> BasisId {
        match &self.kind {
            OperatorKind::Radon2d => BasisId::ChebyshevHalfplane,
            _ => self.input_basis(),
        }
    }

    /// Input and output singular systems coincide (A diagonal on its own
    /// basis), which is what pointwise Q evaluation requires.
    pub fn is_self_basis(&self) -> bool {
        !matches!(self.kind, OperatorKind::Radon2d)
    }

    /// Singular value b_j.
    ///
    /// Radon: b_jk = π(j+k+1)^{-1/2}, the constant that makes the SVD
    /// identity exact for the chord-average transform under
    /// dν = 2π^{-1}√(1−u²)dudφ; the quadrature oracle in this module checks
    /// it to machine precision.
    pub fn singular_value(&self, index: &MultiIndex) -> Result<f64> {
        match &self.kind {
            OperatorKind::Identity { d } => {
                check_dim(index, *d)?;
                Ok(1.0)
            }
            OperatorKind::Convolution { d, rule } => {
                check_dim(index, *d)?;
                match rule {
                    SingularRule::PowerLaw { q } => {
                        Ok(f64::from(index.total().max(1)).powf(-q))
                    }
                    SingularRule::Explicit { values } => {
                        let j = index.entries()[0] as usize;
                        values.get(j).copied().ok_or_else(|| {
                            Error::InvalidParameter(format!(
                                "no explicit singular value at frequency {j}"
                            ))
                        })
                    }
                }
            }
            OperatorKind::Radon2d => {
                check_dim(index, 2)?;
                let m = f64::from(index.total());
                Ok(PI * (m + 1.0).powf(-0.5))
            }
            OperatorKind::AdditiveConvolution { qs } => {
                check_dim(index, qs.len())?;
                let mut active: Option<(usize, u32)> = None;
                for (c, &j) in index.entries().iter().enumerate() {
                    if j > 0 {
                        if active.is_some() {
                            return Err(Error::InvalidParameter(format!(
                                "additive operator index {index} has mass on two coordinates"
                            )));
                        }
                        active = Some((c, j));
                    }
                }
                match active {
                    Some((c, j)) => Ok(f64::from(j).powf(-qs[c])),
                    // The zero index is shared; give it the first component's rule.
                    None => Ok(1.0),
                }
            }
        }
    }

    /// Coefficients of Af in the output system: {b_j θ_j}.
    pub fn apply_a(&self, theta: &CoefVec) -> Result<CoefVec> {
        let mut out = CoefVec::new();
        for (j, v) in theta.iter() {
            out.set(j.clone(), self.singular_value(j)? * v);
        }
        Ok(out)
    }

    /// Coefficients of Qg in the system u_j = Aφ_j/b_j: {b_j^{-1} c_j}.
    pub fn apply_q(&self, c: &CoefVec) -> Result<CoefVec> {
        let mut out = CoefVec::new();
        for (j, v) in c.iter() {
            let b = self.singular_value(j)?;
            let scaled = v / b;
            if !scaled.is_finite() {
                return Err(Error::NonFinite(format!(
                    "Q coefficient at {j}: {v}/{b}"
                )));
            }
            out.set(j.clone(), scaled);
        }
        Ok(out)
    }

    /// Pointwise (Qg)(y) = Σ_j c_j b_j^{-1} φ_j(y) for self-basis operators.
    pub fn q_point_eval(&self, c: &CoefVec, y: &[f64]) -> Result<f64> {
        if !self.is_self_basis() {
            return Err(Error::UnsupportedKind(
                "pointwise Q evaluation requires a self-basis operator".into(),
            ));
        }
        let basis = self.input_basis();
        let mut acc = 0.0;
        for (j, v) in c.iter() {
            acc += v / self.singular_value(j)? * basis.eval(j, y)?;
        }
        Ok(acc)
    }

    /// Pointwise (Af)(y) = Σ_j θ_j b_j φ_j(y) for self-basis operators.
    pub fn a_point_eval(&self, theta: &CoefVec, y: &[f64]) -> Result<f64> {
        if !self.is_self_basis() {
            return Err(Error::UnsupportedKind(
                "pointwise A evaluation requires a self-basis operator".into(),
            ));
        }
        let basis = self.input_basis();
        let mut acc = 0.0;
        for (j, v) in theta.iter() {
            acc += v * self.singular_value(j)? * basis.eval(j, y)?;
        }
        Ok(acc)
    }

    /// Kernel function realizing an explicit-eigenvalue convolution:
    /// a(x) = b_0 + Σ_{j>=1} 2 b_j cos(2πjx).
    pub fn kernel_function(&self, x: f64) -> Result<f64> {
        match &self.kind {
            OperatorKind::Convolution {
                d: 1,
                rule: SingularRule::Explicit { values },
            } => {
                let mut acc = values[0];
                for (j, &b) in values.iter().enumerate().skip(1) {
                    acc += 2.0 * b * (2.0 * PI * j as f64 * x).cos();
                }
                Ok(acc)
            }
            _ => Err(Error::UnsupportedKind(
                "kernel synthesis needs a d=1 explicit-eigenvalue convolution".into(),
            )),
        }
    }
}

fn check_dim(index: &MultiIndex, d: usize) -> Result<()> {
    if index.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "index dimension {} vs operator dimension {d}",
            index.dim()
        )));
    }
    Ok(())
}

/// Geometry of the Radon output space Y = \[0,1\] × \[0,2π) with measure
/// density w(u) = 2π^{-1}√(1−u²).
#[derive(Debug, Clone, Copy, Default)]
pub struct RadonGeometry;

impl RadonGeometry {
    pub fn density(&self, u: f64) -> f64 {
        2.0 / PI * (1.0 - u * u).max(0.0).sqrt()
    }

    /// ν(Y) by quadrature; equals π. Uses u = cos t so the integrand is smooth.
    pub fn total_measure(&self, order: usize) -> f64 {
        let rule = gauss_legendre(order);
        let mut acc = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            let t = 0.25 * PI * (x + 1.0);
            acc += 0.25 * PI * w * (2.0 / PI) * t.sin().powi(2);
        }
        acc * 2.0 * PI
    }
}

/// The chord-average Radon transform applied to a Zernike-coefficient vector:
/// π/(2√(1−u²)) · ∫_{-√(1−u²)}^{√(1−u²)} f(u cosφ − t sinφ, u sinφ + t cosφ) dt
/// by Gauss-Legendre of the given order.
pub fn radon_forward_quadrature(
    f: &CoefVec,
    u: f64,
    phi: f64,
    order: usize,
) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "chord offset u = {u} must lie in [0, 1)"
        )));
    }
    if order < 8 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order {order} below the minimum of 8"
        )));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let basis = BasisId::ZernikeDisk;
    let half = (1.0 - u * u).sqrt();
    let (cos_phi, sin_phi) = (phi.cos(), phi.sin());
    let integral = crate::quad::gl_integrate(-half, half, order, |t| {
        let x = u * cos_phi - t * sin_phi;
        let y = u * sin_phi + t * cos_phi;
        let mut r = x.hypot(y);
        // Chord endpoints touch the unit circle; absorb rounding overshoot.
        if r > 1.0 {
            debug_assert!(r < 1.0 + 1e-9);
            r = 1.0;
        }
        let theta = y.atan2(x);
        f.iter()
            .map(|(j, v)| v * basis.eval(j, &[r, theta]).unwrap_or(0.0))
            .sum::<f64>()
    });
    Ok(PI / (2.0 * half) * integral)
}

/// Direct periodic convolution (a ∗ g)(x) = ∫_0^1 a(x − y) g(y) dy for an
/// explicit-eigenvalue convolution operator; the independent oracle for the
/// convolution SVD.
pub fn convolve_periodic(
    op: &DiagonalOperator,
    g: impl Fn(f64) -> f64,
    x: f64,
    points: usize,
) -> Result<f64> {
    Ok(integrate_periodic_1d(points, |y| {
        let mut arg = x - y;
        arg -= arg.floor();
        op.kernel_function(arg).unwrap() * g(y)
    }))
}

/// Operator norm ϱ(Q, net) = max over distinct pairs of ‖Q(φ−φ′)‖₂/‖φ−φ′‖₂,
/// computed in sequence space by brute force over the enumerated net.
pub fn op_norm_rho(op: &DiagonalOperator, net: &[CoefVec]) -> Result<f64> {
    if net.len() < 2 {
        return Err(Error::InvalidParameter(
            "operator norm needs at least two net points".into(),
        ));
    }
    let mut best: f64 = 0.0;
    let mut saw_distinct = false;
    for a in 0..net.len() {
        for b in (a + 1)..net.len() {
            let diff = net[a].sub(&net[b]);
            let denom = diff.norm();
            if denom == 0.0 {
                continue;
            }
            saw_distinct = true;
            let num = op.apply_q(&diff)?.norm();
            best = best.max(num / denom);
        }
    }
    if !saw_distinct {
        return Err(Error::InvalidParameter(
            "operator norm needs two distinct net points".into(),
        ));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    WhiteNoise,
    Density,
}

/// ϱ_K(A, packing): white noise (1/√2)·max ‖A(f−g)‖₂/‖f−g‖₂; density
/// max D_K(Af, Ag)/‖f−g‖₂ with D_K by quadrature (self-basis, d <= 2,
/// Af and Ag must be strictly positive on the grid).
pub fn rho_k(
    op: &DiagonalOperator,
    packing: &[CoefVec],
    model: NoiseModel,
    grid_per_axis: usize,
) -> Result<f64> {
    if packing.len() < 2 {
        return Err(Error::InvalidParameter(
            "rho_K needs at least two packing points".into(),
        ));
    }
    let mut best: f64 = 0.0;
    let mut saw_distinct = false;
    for a in 0..packing.len() {
        for b in (a + 1)..packing.len() {
            let dist = l2_dist(&packing[a], &packing[b]);
            if dist == 0.0 {
                continue;
            }
            saw_distinct = true;
            let num = match model {
                NoiseModel::WhiteNoise => {
                    let diff = packing[a].sub(&packing[b]);
                    op.apply_a(&diff)?.norm() / std::f64::consts::SQRT_2
                }
                NoiseModel::Density => {
                    kl_distance_op(op, &packing[a], &packing[b], grid_per_axis)?
                }
            };
            best = best.max(num / dist);
        }
    }
    if !saw_distinct {
        return Err(Error::InvalidParameter(
            "rho_K needs two distinct packing points".into(),
        ));
    }
    Ok(best)
}

fn kl_distance_op(
    op: &DiagonalOperator,
    f: &CoefVec,
    g: &CoefVec,
    grid_per_axis: usize,
) -> Result<f64> {
    let af = op.apply_a(f)?;
    let ag = op.apply_a(g)?;
    kl_distance(&af, &ag, &op.output_basis(), grid_per_axis)
}

/// Kullback-Leibler distance D_K(f, g) = √(∫ log(f/g) f) for densities on
/// the unit cube given in a self-basis system, by tensor quadrature.
pub fn kl_distance(
    f: &CoefVec,
    g: &CoefVec,
    basis: &BasisId,
    grid_per_axis: usize,
) -> Result<f64> {
    let d = match basis {
        BasisId::FourierPeriodic { d } if *d <= 2 => *d,
        BasisId::FourierPeriodic { d } => {
            return Err(Error::InvalidParameter(format!(
                "KL quadrature supports d <= 2, got {d}"
            )))
        }
        _ => {
            return Err(Error::UnsupportedKind(
                "KL distance needs a periodic self-basis system".into(),
            ))
        }
    };
    let eval = |c: &CoefVec, x: &[f64]| -> Result<f64> {
        let mut acc = 0.0;
        for (j, v) in c.iter() {
            acc += v * basis.eval(j, x)?;
        }
        Ok(acc)
    };
    let term = |x: &[f64]| -> Result<f64> {
        let fv = eval(f, x)?;
        let gv = eval(g, x)?;
        if fv <= 0.0 {
            return Err(Error::NonpositiveDensity {
                value: fv,
                at: x.to_vec(),
            });
        }
        if gv <= 0.0 {
            return Err(Error::NonpositiveDensity {
                value: gv,
                at: x.to_vec(),
            });
        }
        Ok((fv / gv).ln() * fv)
    };
    let dk_sq = match d {
        1 => {
            let pts = crate::quad::periodic_points(grid_per_axis);
            let mut acc = 0.0;
            for &x in &pts {
                acc += term(&[x])?;
            }
            acc / grid_per_axis as f64
        }
        _ => {
            let pts = crate::quad::periodic_points(grid_per_axis);
            let mut acc = 0.0;
            for &x in &pts {
                for &y in &pts {
                    acc += term(&[x, y])?;
                }
            }
            acc / (grid_per_axis * grid_per_axis) as f64
        }
    };
    // The exact value is nonnegative; quadrature of nearly equal densities
    // can land epsilon below zero.
    Ok(dk_sq.max(0.0).sqrt())
}

/// Max absolute SVD residual |A_quad φ_jk − b_jk ψ_jk| over all real Zernike
/// indices with j + k <= cap and a grid of (u, φ) test points. The central
/// oracle of this module: it validates the Zernike convention, the chord
/// integral and the singular-value rule in one identity. `b_perturbation`
/// shifts b_00 and exists so tests can confirm the oracle has teeth.
pub fn radon_svd_max_residual(
    cap: u32,
    test_points: &[(f64, f64)],
    order: usize,
    b_perturbation: f64,
) -> Result<f64> {
    let op = DiagonalOperator::radon2d();
    let out_basis = BasisId::ChebyshevHalfplane;
    let mut worst: f64 = 0.0;
    for idx in crate::basis::disk_indices(cap) {
        let mut f = CoefVec::new();
        f.set(idx.clone(), 1.0);
        let mut b = op.singular_value(&idx)?;
        if idx.total() == 0 {
            b += b_perturbation;
        }
        for &(u, phi) in test_points {
            let forward = radon_forward_quadrature(&f, u, phi, order)?;
            let predicted = b * out_basis.eval(&idx, &[u, phi])?;
            worst = worst.max((forward - predicted).abs());
        }
    }
    Ok(worst)
}

/// Max pointwise residual |(a ∗ φ_jk)(x) − b_j φ_jk(x)| over tagged Fourier
/// indices with j <= cap, for an explicit-eigenvalue convolution operator.
pub fn convolution_svd_max_residual(
    op: &DiagonalOperator,
    cap: u32,
    xs: &[f64],
    points: usize,
) -> Result<f64> {
    let basis = BasisId::FourierPeriodic { d: 1 };
    let mut worst: f64 = 0.0;
    for idx in crate::basis::fourier_indices_tagged(1, cap) {
        let b = op.singular_value(&idx)?;
        for &x in xs {
            let idx_cl = idx.clone();
            let conv = convolve_periodic(op, |y| basis.eval(&idx_cl, &[y]).unwrap(), x, points)?;
            let predicted = b * basis.eval(&idx, &[x])?;
            worst = worst.max((conv - predicted).abs());
        }
    }
    Ok(worst)
}
