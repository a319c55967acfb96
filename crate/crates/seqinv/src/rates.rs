//! Closed-form and numeric rate calculators, risk-bound evaluators and the
//! entropy integral.
//!
//! All ≍-statements in the underlying theory hide constants; the calculators
//! expose them (c', C, κ) as explicit parameters defaulting to 1, and every
//! empirical check downstream compares exponents, never constants.

use crate::error::{Error, Result};

/// Polynomial growth model: ϱ(Q, F_δ) = c'·δ^{-a}, log #F_δ = C·δ^{-b}.
/// For ellipsoid examples a = q/s and b = d/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub a: f64,
    pub b: f64,
    pub c_norm: f64,
    pub c_entropy: f64,
}

impl RateModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::with_constants(a, b, 1.0, 1.0)
    }

    pub fn with_constants(a: f64, b: f64, c_norm: f64, c_entropy: f64) -> Result<Self> {
        if a < 0.0 || !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need a >= 0 and b > 0, got a = {a}, b = {b}"
            )));
        }
        if !(c_norm > 0.0) || !(c_entropy > 0.0) {
            return Err(Error::InvalidParameter(
                "rate-model constants must be positive".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            c_norm,
            c_entropy,
        })
    }

    pub fn rho(&self, delta: f64) -> f64 {
        self.c_norm * delta.powf(-self.a)
    }

    pub fn log_card(&self, delta: f64) -> f64 {
        self.c_entropy * delta.powf(-self.b)
    }
}

/// ψ_n exponent of the δ-net estimator: 1/[2(a+1)+b]. The MISE exponent is
/// twice this.
pub fn rate_exponent_net(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 || !(b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a >= 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(1.0 / (2.0 * (a + 1.0) + b))
}

/// ψ_n exponent from the packing lower-bound balance ψ²ϱ_K²(ψ) ≍ n^{-1}log#D_ψ
/// with ϱ_K(δ) = c·δ^{+a_k}: the same 1/[2(1+a_k)+b].
pub fn rate_exponent_lower(a_k: f64, b: f64) -> Result<f64> {
    rate_exponent_net(a_k, b)
}

/// MISE exponent for deconvolution: 2s/(2s + 2q + d).
pub fn rate_convolution(s: f64, q: f64, d: usize) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be positive, got {s}"
        )));
    }
    if q < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degree of ill-posedness must be nonnegative, got {q}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(2.0 * s / (2.0 * s + 2.0 * q + d as f64))
}

/// MISE exponent for 2-D tomography: 2s/(2s + 3), i.e. the convolution
/// formula at q = 1/2, d = 2.
pub fn rate_radon(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be positive, got {s}"
        )));
    }
    Ok(2.0 * s / (2.0 * s + 3.0))
}

/// Oracle rate for additive models: the worst component exponent
/// min_k 2s_k/(2s_k + 2q_k + 1).
pub fn rate_additive(components: &[(f64, f64)]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::InvalidParameter("empty component list".into()));
    }
    let mut best = f64::INFINITY;
    for &(s, q) in components {
        best = best.min(rate_convolution(s, q, 1)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundModel {
    WhiteNoise,
    /// Density branch needs the sup-norm constants of condition (9):
    /// B∞ ≥ sup‖Af‖∞ and B'∞ ≥ sup‖Qf‖∞.
    Density { b_inf: f64, b_prime_inf: f64 },
}

/// Smallest admissible ξ for the given model and C_τ.
pub fn admissible_xi_lower(model: BoundModel, c_tau: f64) -> Result<f64> {
    if !(c_tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "C_tau must be positive, got {c_tau}"
        )));
    }
    Ok(match model {
        BoundModel::WhiteNoise => (2.0 / c_tau).sqrt(),
        BoundModel::Density { b_inf, b_prime_inf } => {
            (4.0 * b_prime_inf / 3.0
                + (2.0 * (8.0 * b_prime_inf * b_prime_inf / 9.0 + c_tau * b_inf)).sqrt())
                / c_tau
        }
    })
}

/// C₁ = (1−2ξ)^{-1}(1+2ξ) and C₂ = (1−2ξ)^{-1}ξC_τ after validating the
/// admissible range for ξ.
pub fn risk_bound_constants(xi: f64, c_tau: f64, model: BoundModel) -> Result<(f64, f64)> {
    let lo = admissible_xi_lower(model, c_tau)?;
    if !(xi >= lo && xi < 0.5) {
        return Err(Error::XiRange { xi, lo });
    }
    let c1 = (1.0 + 2.0 * xi) / (1.0 - 2.0 * xi);
    let c2 = xi * c_tau / (1.0 - 2.0 * xi);
    Ok((c1, c2))
}

/// Risk bound C₁δ² + C₂·ϱ²·(logN + 1)/n.
pub fn net_risk_bound(
    delta: f64,
    rho: f64,
    log_n_net: f64,
    n: f64,
    xi: f64,
    c_tau: f64,
    model: BoundModel,
) -> Result<f64> {
    let (c1, c2) = risk_bound_constants(xi, c_tau, model)?;
    Ok(c1 * delta * delta + c2 * rho * rho * (log_n_net + 1.0) / n)
}

/// Additive-model risk bound 3δ² + 32c^{-1}n^{-1}[Σρ_j²λ_j + (Σρ_j)²].
pub fn additive_risk_bound(
    delta: f64,
    rho_list: &[f64],
    lambda_list: &[f64],
    n: f64,
    c: f64,
) -> Result<f64> {
    if rho_list.len() != lambda_list.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} operator norms vs {} entropies",
            rho_list.len(),
            lambda_list.len()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric constant must be positive, got {c}"
        )));
    }
    let sum_sq: f64 = rho_list
        .iter()
        .zip(lambda_list.iter())
        .map(|(&r, &l)| r * r * l)
        .sum();
    let sum_rho: f64 = rho_list.iter().sum();
    Ok(3.0 * delta * delta + 32.0 / c / n * (sum_sq + sum_rho * sum_rho))
}

/// Closed form of the entropy integral G(δ) = ∫₀^δ ϱ(Q,F_u)√(log#F_u) du
/// for the polynomial model: c'√C·δ^{1−a−b/2}/(1−a−b/2). Diverges when
/// a + b/2 ≥ 1, which signals dense-minimizer ineligibility.
pub fn entropy_integral(model: &RateModel, delta: f64) -> Result<f64> {
    let p = model.a + model.b / 2.0;
    if p >= 1.0 {
        return Err(Error::DivergentEntropy(p));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(model.c_norm * model.c_entropy.sqrt() * delta.powf(1.0 - p) / (1.0 - p))
}

/// Numeric route for the entropy integral: dyadically graded panels
/// [δ2^{-(k+1)}, δ2^{-k}] toward the integrable endpoint singularity, each
/// integrated by Gauss-Legendre. The neglected innermost stub carries a
/// relative mass 2^{-K(1-p)} ≤ 1e-15 by the choice of K. Independent of the
/// closed form above.
pub fn entropy_integral_numeric(model: &RateModel, delta: f64) -> Result<f64> {
    let p = model.a + model.b / 2.0;
    if p >= 1.0 {
        return Err(Error::DivergentEntropy(p));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let integrand = |u: f64| model.rho(u) * model.log_card(u).sqrt();
    let panels = ((50.0 / (1.0 - p)).ceil() as usize).clamp(60, 40_000);
    let mut acc = 0.0;
    let mut hi = delta;
    for _ in 0..panels {
        let lo = 0.5 * hi;
        acc += crate::quad::gl_integrate(lo, hi, 24, integrand);
        hi = lo;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateEquation {
    /// nψ² = ϱ²(Q, F_ψ)·log#F_ψ.
    NetEq14,
    /// ψ² = n^{-1/2}·G(ψ); requires a + b/2 < 1.
    DenseEq25,
}

/// Solves the chosen rate equation for ψ ∈ (0, B₂] by bisection to relative
/// residual 1e-10. `b2` is the L2 bound of the class (the ellipsoid radius).
pub fn solve_rate_equation(n: f64, model: &RateModel, which: RateEquation, b2: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sample size must exceed 1, got {n}"
        )));
    }
    if !(b2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "L2 bound must be positive, got {b2}"
        )));
    }
    // g(ψ) > 0 means the variance side still dominates, so the root is above.
    let gap = |psi: f64| -> Result<f64> {
        Ok(match which {
            RateEquation::NetEq14 => {
                let rhs = model.rho(psi).powi(2) * model.log_card(psi);
                rhs / n - psi * psi
            }
            RateEquation::DenseEq25 => {
                let g = entropy_integral(model, psi)?;
                g / n.sqrt() - psi * psi
            }
        })
    };
    let mut lo = 1e-300f64;
    let mut hi = b2;
    if gap(hi)? > 0.0 {
        return Err(Error::BracketFailure(format!(
            "no root at or below B2 = {b2}: the equation is unbalanced at the boundary"
        )));
    }
    let mut psi = 0.5 * (lo + hi);
    for _ in 0..2000 {
        psi = (lo * hi).sqrt(); // geometric bisection suits power laws
        let g = gap(psi)?;
        let lhs = psi * psi;
        if (g / lhs).abs() <= 1e-10 {
            return Ok(psi);
        }
        if g > 0.0 {
            lo = psi;
        } else {
            hi = psi;
        }
    }
    let final_rel = (gap(psi)? / (psi * psi)).abs();
    if final_rel <= 1e-10 {
        Ok(psi)
    } else {
        Err(Error::BracketFailure(format!(
            "bisection stalled at relative residual {final_rel}"
        )))
    }
}

/// The δ balancing the bias and variance terms of the δ-net risk bound:
/// κ·n^{-s/(2s+2q+d)}.
pub fn optimal_delta(n: f64, s: f64, q: f64, d: usize, kappa: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sample size must exceed 1, got {n}"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let mise_exp = rate_convolution(s, q, d)?;
    Ok(kappa * n.powf(-mise_exp / 2.0))
}
