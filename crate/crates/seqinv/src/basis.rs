//! Real orthonormal basis systems and their evaluation.
//!
//! Four systems are supported:
//! - the tensor Fourier system on the unit cube (per-coordinate factor
//!   √2[(1−k_i)cos(2πj_i x_i) + k_i sin(2πj_i x_i)] for j_i ≥ 1 and the
//!   constant 1 for j_i = 0, which keeps the system orthonormal);
//! - the real Zernike system on the unit disk in polar coordinates, the
//!   Re/Im/√2 realification of π^{-1/2}(j+k+1)^{1/2} Z_{j+k}^{|j−k|}(r) e^{i(j−k)θ};
//! - the matching Chebyshev system on Y = \[0,1\] × \[0,2π) under the measure
//!   dν = 2π^{-1}√(1−u²) du dφ, the realification of π^{-1/2} U_{j+k}(u) e^{i(j−k)φ};
//! - single-coordinate mean-zero cosine systems √2 cos(2πj x_c), j ≥ 1, for
//!   additive components.
//!
//! Orthonormality of each system is verified numerically by the Gram checks
//! at the bottom of this module.

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, periodic_points};
use crate::seq::MultiIndex;
use std::f64::consts::PI;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisId {
    /// Tensor Fourier system for 1-periodic functions on the unit cube.
    FourierPeriodic { d: usize },
    /// Real Zernike system on the unit disk, points given as (r, θ).
    ZernikeDisk,
    /// Real Chebyshev-of-the-second-kind system on Y = \[0,1\] × \[0,2π).
    ChebyshevHalfplane,
    /// Mean-zero cosine system in coordinate `coordinate` of the unit cube.
    AdditiveComponent { coordinate: usize },
}

/// Chebyshev polynomial of the second kind by the three-term recurrence;
/// matches sin((m+1)θ)/sin θ at u = cos θ.
pub fn chebyshev_u(m: u32, u: f64) -> f64 {
    let mut p0 = 1.0;
    if m == 0 {
        return p0;
    }
    let mut p1 = 2.0 * u;
    for _ in 2..=m {
        let p2 = 2.0 * u * p1 - p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Zernike radial polynomial R_a^b by the explicit alternating-factorial sum
/// R_a^b(r) = Σ_l (−1)^l (a−l)! / [l! ((a+b)/2 − l)! ((a−b)/2 − l)!] r^{a−2l}.
pub fn zernike_radial(a: u32, b: u32, r: f64) -> Result<f64> {
    if b > a {
        return Err(Error::InvalidParameter(format!(
            "zernike order {b} exceeds degree {a}"
        )));
    }
    if !(a - b).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "zernike degree {a} and order {b} must have equal parity"
        )));
    }
    if a > 33 {
        // Factorials beyond 33! overflow u128.
        return Err(Error::InvalidParameter(format!(
            "zernike degree {a} exceeds the supported range (<= 33)"
        )));
    }
    let half_sum = ((a + b) / 2) as u128;
    let half_diff = ((a - b) / 2) as u128;
    let mut acc = 0.0;
    for l in 0..=half_diff {
        let num = factorial(u128::from(a) - l);
        let den = factorial(l) * factorial(half_sum - l) * factorial(half_diff - l);
        let term = (num as f64 / den as f64) * r.powi((u128::from(a) - 2 * l) as i32);
        acc += if l % 2 == 0 { term } else { -term };
    }
    Ok(acc)
}

fn factorial(n: u128) -> u128 {
    (1..=n).product::<u128>().max(1)
}

/// Real angular factor for the Zernike/Chebyshev realification: for complex
/// frequency l = j1 − j2 the real basis member is √2·cos(lθ) when l > 0,
/// the constant 1 when l = 0, and √2·sin(lθ) when l < 0 (note the sign:
/// sin(lθ) = −sin(|l|θ)). Taking Re/Im of both sides of the complex SVD
/// identity keeps A φ_jk = b_jk ψ_jk exact in the real systems.
fn angular_factor(l: i64, theta: f64) -> f64 {
    use std::cmp::Ordering;
    match l.cmp(&0) {
        Ordering::Greater => SQRT_2 * (l as f64 * theta).cos(),
        Ordering::Equal => 1.0,
        Ordering::Less => SQRT_2 * (l as f64 * theta).sin(),
    }
}

impl BasisId {
    /// Number of point coordinates this basis expects.
    pub fn point_dim(&self) -> usize {
        match self {
            BasisId::FourierPeriodic { d } => *d,
            BasisId::ZernikeDisk | BasisId::ChebyshevHalfplane => 2,
            BasisId::AdditiveComponent { coordinate } => coordinate + 1,
        }
    }

    pub fn eval(&self, index: &MultiIndex, x: &[f64]) -> Result<f64> {
        match self {
            BasisId::FourierPeriodic { d } => {
                if index.dim() != *d {
                    return Err(Error::DimensionMismatch(format!(
                        "index dimension {} vs basis dimension {d}",
                        index.dim()
                    )));
                }
                if x.len() != *d {
                    return Err(Error::DimensionMismatch(format!(
                        "point dimension {} vs basis dimension {d}",
                        x.len()
                    )));
                }
                let mut value = 1.0;
                for (i, (&ji, &xi)) in index.entries().iter().zip(x.iter()).enumerate() {
                    if !(0.0..=1.0).contains(&xi) {
                        return Err(Error::Domain(format!(
                            "coordinate {i} = {xi} outside [0,1]"
                        )));
                    }
                    if ji == 0 {
                        continue;
                    }
                    let phase = 2.0 * PI * f64::from(ji) * xi;
                    let ki = index.parity().map_or(0, |k| k[i]);
                    value *= if ki == 0 {
                        SQRT_2 * phase.cos()
                    } else {
                        SQRT_2 * phase.sin()
                    };
                }
                Ok(value)
            }
            BasisId::ZernikeDisk => {
                let (j1, j2) = pair_index(index)?;
                let (r, theta) = polar_point(x)?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::Domain(format!("radius {r} outside [0,1]")));
                }
                let m = j1 + j2;
                let l = i64::from(j1) - i64::from(j2);
                let radial = zernike_radial(m, l.unsigned_abs() as u32, r)?;
                let norm = (f64::from(m + 1) / PI).sqrt();
                Ok(norm * radial * angular_factor(l, theta))
            }
            BasisId::ChebyshevHalfplane => {
                let (j1, j2) = pair_index(index)?;
                let (u, phi) = polar_point(x)?;
                if !(0.0..=1.0).contains(&u) {
                    return Err(Error::Domain(format!("offset {u} outside [0,1]")));
                }
                let m = j1 + j2;
                let l = i64::from(j1) - i64::from(j2);
                Ok(PI.powf(-0.5) * chebyshev_u(m, u) * angular_factor(l, phi))
            }
            BasisId::AdditiveComponent { coordinate } => {
                if index.dim() == 0 {
                    return Err(Error::DimensionMismatch("empty index".into()));
                }
                let freq = component_frequency(index, *coordinate)?;
                if freq == 0 {
                    return Err(Error::InvalidParameter(
                        "additive components are mean-zero: frequency must be >= 1".into(),
                    ));
                }
                let xi = *x.get(*coordinate).ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "point has {} coordinates, component needs coordinate {coordinate}",
                        x.len()
                    ))
                })?;
                if !(0.0..=1.0).contains(&xi) {
                    return Err(Error::Domain(format!("coordinate {xi} outside [0,1]")));
                }
                Ok(SQRT_2 * (2.0 * PI * f64::from(freq) * xi).cos())
            }
        }
    }
}

fn pair_index(index: &MultiIndex) -> Result<(u32, u32)> {
    if index.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 2-dimensional index, got dimension {}",
            index.dim()
        )));
    }
    Ok((index.entries()[0], index.entries()[1]))
}

fn polar_point(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 2-dimensional point, got {}",
            x.len()
        )));
    }
    Ok((x[0], x[1]))
}

/// Frequency carried by a component index: either a scalar index or an
/// ambient-dimension index supported on the component coordinate alone.
fn component_frequency(index: &MultiIndex, coordinate: usize) -> Result<u32> {
    if index.dim() == 1 {
        return Ok(index.entries()[0]);
    }
    for (i, &ji) in index.entries().iter().enumerate() {
        if i != coordinate && ji != 0 {
            return Err(Error::InvalidParameter(format!(
                "component index {index} has mass off coordinate {coordinate}"
            )));
        }
    }
    index
        .entries()
        .get(coordinate)
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("index shorter than coordinate".into()))
}

/// All parity-tagged Fourier indices with |j| <= cap in dimension d.
pub fn fourier_indices_tagged(d: usize, cap: u32) -> Vec<MultiIndex> {
    let mut js: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for base in &js {
            let used: u32 = base.iter().sum();
            for j in 0..=cap.saturating_sub(used) {
                let mut v = base.clone();
                v.push(j);
                next.push(v);
            }
        }
        js = next;
    }
    let mut out = Vec::new();
    for j in js {
        let free: Vec<usize> = (0..d).filter(|&i| j[i] > 0).collect();
        for mask in 0..(1u32 << free.len()) {
            let mut k = vec![0u8; d];
            for (bit, &pos) in free.iter().enumerate() {
                k[pos] = ((mask >> bit) & 1) as u8;
            }
            out.push(MultiIndex::with_parity(j.clone(), k).unwrap());
        }
    }
    out
}

/// All Zernike/Chebyshev pair indices with j1 + j2 <= cap.
pub fn disk_indices(cap: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for j1 in 0..=cap {
        for j2 in 0..=(cap - j1) {
            out.push(MultiIndex::pair(j1, j2));
        }
    }
    out
}

/// Maximum deviation of the quadrature Gram matrix from the identity for the
/// given basis over the given indices. This is the orthonormality oracle.
pub fn gram_max_residual(basis: &BasisId, indices: &[MultiIndex], points_per_axis: usize) -> Result<f64> {
    // Tabulate each basis function on the quadrature grid, then take dot
    // products; the grids below make the inner products exact up to
    // rounding for the polynomial/trigonometric degrees involved.
    let (rows, weights) = match basis {
        BasisId::FourierPeriodic { d: 1 } => {
            let pts = periodic_points(points_per_axis);
            let w = vec![1.0 / points_per_axis as f64; points_per_axis];
            let rows = tabulate(basis, indices, &pts.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
            (rows, w)
        }
        BasisId::FourierPeriodic { d: 2 } | BasisId::AdditiveComponent { .. } => {
            let pts = periodic_points(points_per_axis);
            let mut grid = Vec::with_capacity(points_per_axis * points_per_axis);
            for &x in &pts {
                for &y in &pts {
                    grid.push(vec![x, y]);
                }
            }
            let w = vec![1.0 / (points_per_axis * points_per_axis) as f64; grid.len()];
            let rows = tabulate(basis, indices, &grid)?;
            (rows, w)
        }
        BasisId::FourierPeriodic { d } => {
            return Err(Error::InvalidParameter(format!(
                "gram check supports d <= 2, got {d}"
            )))
        }
        BasisId::ZernikeDisk => {
            // dx dy = r dr dθ: Gauss-Legendre in r, midpoint in θ.
            let gl = gauss_legendre(64);
            let angles = periodic_points(points_per_axis);
            let mut grid = Vec::new();
            let mut w = Vec::new();
            for (&xr, &wr) in gl.nodes.iter().zip(gl.weights.iter()) {
                let r = 0.5 * (xr + 1.0);
                for &t in &angles {
                    grid.push(vec![r, 2.0 * PI * t]);
                    w.push(0.5 * wr * r * 2.0 * PI / points_per_axis as f64);
                }
            }
            let rows = tabulate(basis, indices, &grid)?;
            (rows, w)
        }
        BasisId::ChebyshevHalfplane => {
            // dν = 2π^{-1}√(1−u²) du dφ with u = cos t, giving the smooth
            // integrand 2π^{-1} sin²t dt on [0, π/2].
            let gl = gauss_legendre(64);
            let angles = periodic_points(points_per_axis);
            let mut grid = Vec::new();
            let mut w = Vec::new();
            for (&xt, &wt) in gl.nodes.iter().zip(gl.weights.iter()) {
                let t = 0.25 * PI * (xt + 1.0);
                let u = t.cos();
                for &p in &angles {
                    grid.push(vec![u, 2.0 * PI * p]);
                    w.push(0.25 * PI * wt * (2.0 / PI) * t.sin().powi(2) * 2.0 * PI
                        / points_per_axis as f64);
                }
            }
            let rows = tabulate(basis, indices, &grid)?;
            (rows, w)
        }
    };

    let mut max_residual: f64 = 0.0;
    for (a, row_a) in rows.iter().enumerate() {
        for (b, row_b) in rows.iter().enumerate().skip(a) {
            let inner: f64 = row_a
                .iter()
                .zip(row_b.iter())
                .zip(weights.iter())
                .map(|((&va, &vb), &w)| w * va * vb)
                .sum();
            let target = if a == b { 1.0 } else { 0.0 };
            max_residual = max_residual.max((inner - target).abs());
        }
    }
    Ok(max_residual)
}

fn tabulate(basis: &BasisId, indices: &[MultiIndex], grid: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    indices
        .iter()
        .map(|idx| grid.iter().map(|x| basis.eval(idx, x)).collect())
        .collect()
}
