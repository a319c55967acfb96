//! δ-nets and δ-packing sets for Sobolev ellipsoids, with exact cardinality
//! accounting.
//!
//! The net is a truncate-then-quantize lattice: coefficients outside the
//! active box {0..M}^d are dropped (tail budget δ²/2 via a_j ≥ (M+1)^s), and
//! inside the box each coordinate is rounded to a grid of step eps and
//! clamped to [−L/a_j, L/a_j]. The step eps = δ/√(2·N_active) leaves
//! δ²/8 for rounding plus slack for box-edge clamping, so every point of Θ
//! is within δ of the net. Net points are grid points of the bounding box,
//! not necessarily inside Θ; a δ-net of the class is all the minimizer needs,
//! and the grid structure is what makes the coordinate-wise argmin exact.
//!
//! The packing perturbs a baseline θ* = 0 on the shell {M*..M}^d by ±γ per
//! coordinate with signs from a greedy Varshamov-Gilbert codebook at Hamming
//! distance ≥ m/4, giving pairwise distances in [δ, 2δ] exactly.

use crate::error::{Error, Result};
use crate::operator::DiagonalOperator;
use crate::rng::{substream_seed, GaussianStream};
use crate::seq::{l2_dist, CoefVec, EllipsoidSpec, MultiIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Largest shell size for which the codebook greedy enumerates {−1,+1}^m
/// exhaustively in lexicographic order; beyond it a seeded random-candidate
/// greedy with a fixed budget is used.
const EXHAUSTIVE_CODEBOOK_LIMIT: usize = 22;
const RANDOM_CODEBOOK_BUDGET: usize = 20_000;
const MAX_SHELL_BITS: usize = 128;

/// Implicit description of the lattice δ-net Θ_δ.
#[derive(Debug, Clone)]
pub struct NetSpec {
    delta: f64,
    eps: f64,
    truncation_level: u32,
    spec: EllipsoidSpec,
    active: Vec<MultiIndex>,
    bounds: Vec<f64>,
}

impl NetSpec {
    /// Net over the full active box {0..M}^d with M the smallest integer
    /// such that L(M+1)^{-s} ≤ δ/√2.
    pub fn build(spec: EllipsoidSpec, delta: f64) -> Result<NetSpec> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "covering radius must be positive, got {delta}"
            )));
        }
        // δ up to √2·L is meaningful: at M = 0 the truncation tail is L²,
        // within budget exactly when δ ≥ √2·L.
        if delta > std::f64::consts::SQRT_2 * spec.radius() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "covering radius {delta} exceeds sqrt(2) times the ellipsoid radius {}",
                spec.radius()
            )));
        }
        let m = truncation_level(&spec, delta);
        let active = full_box_indices(spec.dim(), m);
        Self::from_active(spec, delta, m, active)
    }

    /// Net for one additive component: ambient dimension `ambient_d`,
    /// active indices j·e_coordinate for 1 ≤ j ≤ M (mean-zero, no constant).
    pub fn build_component(
        spec: EllipsoidSpec,
        delta: f64,
        coordinate: usize,
        ambient_d: usize,
    ) -> Result<NetSpec> {
        if coordinate >= ambient_d {
            return Err(Error::InvalidParameter(format!(
                "component coordinate {coordinate} outside ambient dimension {ambient_d}"
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "covering radius must be positive, got {delta}"
            )));
        }
        let m = truncation_level(&spec, delta);
        let mut active = Vec::new();
        for j in 1..=m {
            let mut v = vec![0u32; ambient_d];
            v[coordinate] = j;
            active.push(MultiIndex::new(v));
        }
        if active.is_empty() {
            // M = 0: the component net is the single zero point.
            return Ok(NetSpec {
                delta,
                eps: delta,
                truncation_level: m,
                spec,
                active,
                bounds: Vec::new(),
            });
        }
        Self::from_active(spec, delta, m, active)
    }

    fn from_active(
        spec: EllipsoidSpec,
        delta: f64,
        m: u32,
        active: Vec<MultiIndex>,
    ) -> Result<NetSpec> {
        let n_active = active.len() as f64;
        let eps = delta / (2.0 * n_active).sqrt();
        let bounds = active
            .iter()
            .map(|j| spec.radius() / spec.coeff(j))
            .collect();
        Ok(NetSpec {
            delta,
            eps,
            truncation_level: m,
            spec,
            active,
            bounds,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn truncation_level(&self) -> u32 {
        self.truncation_level
    }

    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }

    pub fn active(&self) -> &[MultiIndex] {
        &self.active
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Grid values available at active coordinate i: 2⌊B_i/eps⌋ + 1.
    fn values_at(&self, i: usize) -> u64 {
        2 * (self.bounds[i] / self.eps).floor() as u64 + 1
    }

    /// Nearest-net-point projection: round each active coordinate to the
    /// eps-grid (half-grid points round toward zero) and clamp to the box;
    /// zero outside the active set.
    pub fn quantize(&self, y: &CoefVec) -> CoefVec {
        let mut out = CoefVec::new();
        for (i, j) in self.active.iter().enumerate() {
            let v = y.get(j);
            if v == 0.0 {
                continue;
            }
            let half_count = (self.bounds[i] / self.eps).floor();
            let t = v / self.eps;
            // Round half toward zero, deterministically.
            let k = if t >= 0.0 {
                (t - 0.5).ceil()
            } else {
                (t + 0.5).floor()
            };
            let k = k.clamp(-half_count, half_count);
            out.set(j.clone(), k * self.eps);
        }
        out
    }

    /// Σ log(per-coordinate grid count), the exact log-cardinality.
    pub fn log_cardinality(&self) -> f64 {
        (0..self.active.len())
            .map(|i| (self.values_at(i) as f64).ln())
            .sum()
    }

    /// Exact cardinality when it fits in u128.
    pub fn cardinality(&self) -> Option<u128> {
        let mut count: u128 = 1;
        for i in 0..self.active.len() {
            count = count.checked_mul(u128::from(self.values_at(i)))?;
        }
        Some(count)
    }

    /// Explicit list of all net points; errors (with the exact count) when
    /// the cardinality exceeds `cap`.
    pub fn enumerate(&self, cap: u64) -> Result<Vec<CoefVec>> {
        let count = self.cardinality().unwrap_or(u128::MAX);
        if count > u128::from(cap) {
            return Err(Error::CapExceeded {
                count: count as f64,
                cap,
            });
        }
        let mut points = vec![CoefVec::new()];
        for (i, j) in self.active.iter().enumerate() {
            let half_count = (self.bounds[i] / self.eps).floor() as i64;
            let mut next = Vec::with_capacity(points.len() * (2 * half_count as usize + 1));
            for base in &points {
                for k in -half_count..=half_count {
                    let mut p = base.clone();
                    p.set(j.clone(), k as f64 * self.eps);
                    next.push(p);
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// Statistical covering check: samples `trials` points of Θ supported on
    /// the active coordinates (spherically symmetric direction in the
    /// weighted metric, radius L·u^{1/N}, boundary-heavy by design) and
    /// returns the maximum distance to the quantized projection. The
    /// contract is max ≤ δ. Trials run concurrently on independently seeded
    /// substreams, so the result does not depend on scheduling.
    pub fn verify_covering(&self, trials: u64, seed: u64) -> f64 {
        if self.active.is_empty() {
            return 0.0;
        }
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let theta = self.sample_ellipsoid_point(substream_seed(seed, &[t]));
                l2_dist(&theta, &self.quantize(&theta))
            })
            .reduce(|| 0.0, f64::max)
    }

    /// One uniform-direction sample of Θ over the active coordinates.
    fn sample_ellipsoid_point(&self, seed: u64) -> CoefVec {
        let mut g = GaussianStream::new(seed);
        let dir: Vec<f64> = self.active.iter().map(|_| g.standard_normal()).collect();
        let wnorm: f64 = self
            .active
            .iter()
            .zip(dir.iter())
            .map(|(j, &x)| {
                let a = self.spec.coeff(j);
                a * a * x * x
            })
            .sum::<f64>()
            .sqrt();
        let u: f64 = g.uniform();
        let radius = self.spec.radius() * u.powf(1.0 / self.active.len() as f64);
        if wnorm == 0.0 {
            return CoefVec::new();
        }
        CoefVec::from_pairs(
            self.active
                .iter()
                .zip(dir.iter())
                .map(|(j, &x)| (j.clone(), radius * x / wnorm)),
        )
    }

    /// Copy with grid step and box bounds scaled by a positive constant;
    /// the white-noise argmin over the scaled net is the scaled argmin
    /// (homogeneity of the quadratic risk).
    pub fn with_grid_scaled(&self, c: f64) -> NetSpec {
        let mut out = self.clone();
        out.eps *= c;
        for b in &mut out.bounds {
            *b *= c;
        }
        out
    }

    /// ϱ(Q, F_δ) for this grid net, exactly: the Rayleigh quotient is
    /// maximized by a difference supported on one coordinate, so the norm is
    /// max b_j^{-1} over active indices offering at least two grid values.
    pub fn operator_norm(&self, op: &DiagonalOperator) -> Result<f64> {
        let mut best: f64 = 0.0;
        let mut any = false;
        for (i, j) in self.active.iter().enumerate() {
            if self.values_at(i) >= 2 {
                any = true;
                best = best.max(1.0 / op.singular_value(j)?);
            }
        }
        if !any {
            return Err(Error::InvalidParameter(
                "net has fewer than two points".into(),
            ));
        }
        Ok(best)
    }
}

/// Smallest M with L(M+1)^{-s} ≤ δ/√2. The comparison carries a 1e-12
/// relative slack so exact mathematical boundaries (e.g. δ = √2·L with
/// s arbitrary) are not pushed up a level by rounding.
fn truncation_level(spec: &EllipsoidSpec, delta: f64) -> u32 {
    let target = delta / std::f64::consts::SQRT_2 / spec.radius() * (1.0 + 1e-12);
    let s = spec.smoothness();
    let ok = |m: u32| f64::from(m + 1).powf(-s) <= target;
    let mut m = (target.powf(-1.0 / s).ceil().max(1.0) as u32).saturating_sub(1);
    while m > 0 && ok(m - 1) {
        m -= 1;
    }
    while !ok(m) {
        m += 1;
    }
    m
}

fn full_box_indices(d: usize, m: u32) -> Vec<MultiIndex> {
    let mut acc: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::with_capacity(acc.len() * (m as usize + 1));
        for base in &acc {
            for j in 0..=m {
                let mut v = base.clone();
                v.push(j);
                next.push(v);
            }
        }
        acc = next;
    }
    acc.into_iter().map(MultiIndex::new).collect()
}

/// Implicit description of the δ-packing set Θ*_δ.
#[derive(Debug, Clone)]
pub struct PackingSpec {
    delta: f64,
    gamma: f64,
    shell: Vec<MultiIndex>,
    codebook: Vec<u128>,
    theta_star: CoefVec,
    spec: EllipsoidSpec,
    seed: u64,
}

impl PackingSpec {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn shell(&self) -> &[MultiIndex] {
        &self.shell
    }

    pub fn codebook_len(&self) -> usize {
        self.codebook.len()
    }

    /// Sign words as bitmasks; bit i corresponds to `shell()[i]`.
    pub fn codebook_words(&self) -> &[u128] {
        &self.codebook
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Materialize the packing points θ* + γ·σ.
    pub fn points(&self) -> Vec<CoefVec> {
        self.codebook
            .iter()
            .map(|&word| {
                let mut p = self.theta_star.clone();
                for (bit, j) in self.shell.iter().enumerate() {
                    let sign = if (word >> bit) & 1 == 1 { 1.0 } else { -1.0 };
                    let cur = p.get(j);
                    p.set(j.clone(), cur + sign * self.gamma);
                }
                p
            })
            .collect()
    }

    /// Exact pairwise min/max distances and the point count; the contract is
    /// min ≥ δ and max ≤ 2δ.
    pub fn verify(&self) -> Result<(f64, f64, usize)> {
        let n = self.codebook.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "packing verification needs at least two points".into(),
            ));
        }
        let m = self.shell.len() as u32;
        let mut min_h = u32::MAX;
        let mut max_h = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                let h = (self.codebook[a] ^ self.codebook[b]).count_ones();
                min_h = min_h.min(h);
                max_h = max_h.max(h);
            }
        }
        debug_assert!(max_h <= m);
        let min_dist = 2.0 * self.gamma * f64::from(min_h).sqrt();
        let max_dist = 2.0 * self.gamma * f64::from(max_h).sqrt();
        Ok((min_dist, max_dist, n))
    }

    /// Weighted-norm membership of every packing point.
    pub fn all_in_ellipsoid(&self) -> bool {
        self.points().iter().all(|p| self.spec.contains(p))
    }
}

/// Builds the δ-packing: shell {M*..M}^d with M = ⌊(L/δ)^{1/s}/d⌋ (chosen so
/// a_max ≤ L/δ and membership holds with γ = δ/√m), M* = ⌊M/2⌋, and a greedy
/// Varshamov-Gilbert sign codebook at Hamming distance ≥ m/4.
pub fn build_packing(spec: EllipsoidSpec, delta: f64, seed: u64) -> Result<PackingSpec> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "separation scale must be positive, got {delta}"
        )));
    }
    let d = spec.dim();
    let m_level = ((spec.radius() / delta).powf(1.0 / spec.smoothness()) / d as f64).floor();
    if m_level < 0.0 || delta > spec.radius() {
        return Err(Error::InfeasiblePacking {
            delta,
            max_delta: spec.radius(),
        });
    }
    let m_level = m_level as u32;
    let m_star = m_level / 2;
    let mut shell: Vec<MultiIndex> = shell_indices(d, m_star, m_level);
    shell.sort_by_key(|j| (j.total(), j.clone()));
    let m = shell.len();
    if m > MAX_SHELL_BITS {
        return Err(Error::InvalidParameter(format!(
            "shell size {m} exceeds the supported codebook width {MAX_SHELL_BITS}"
        )));
    }
    let gamma = delta / (m as f64).sqrt();
    let shell_weight_sq: f64 = shell
        .iter()
        .map(|j| {
            let a = spec.coeff(j);
            a * a
        })
        .sum();
    let membership = shell_weight_sq * gamma * gamma;
    let limit = spec.radius() * spec.radius() * (1.0 + 1e-12);
    if membership > limit {
        // γ_max = L/√Σa² gives the feasible δ range for this shell.
        let max_delta = spec.radius() * (m as f64 / shell_weight_sq).sqrt();
        return Err(Error::InfeasiblePacking { delta, max_delta });
    }
    let threshold = (m as u32).div_ceil(4).max(1);
    let codebook = greedy_codebook(m, threshold, seed);
    Ok(PackingSpec {
        delta,
        gamma,
        shell,
        codebook,
        theta_star: CoefVec::new(),
        spec,
        seed,
    })
}

fn shell_indices(d: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    let mut acc: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for base in &acc {
            for j in lo..=hi {
                let mut v = base.clone();
                v.push(j);
                next.push(v);
            }
        }
        acc = next;
    }
    acc.into_iter().map(MultiIndex::new).collect()
}

/// Greedy codebook over {−1,+1}^m (bit 1 = +1) keeping words at Hamming
/// distance ≥ threshold from everything kept so far. Exhaustive
/// lexicographic order for small m, seeded random candidates otherwise;
/// both are deterministic given (m, threshold, seed).
fn greedy_codebook(m: usize, threshold: u32, seed: u64) -> Vec<u128> {
    let mut kept: Vec<u128> = Vec::new();
    let far = |kept: &[u128], w: u128| {
        kept.iter()
            .all(|&k| (k ^ w).count_ones() >= threshold)
    };
    if m <= EXHAUSTIVE_CODEBOOK_LIMIT {
        for w in 0..(1u128 << m) {
            if far(&kept, w) {
                kept.push(w);
            }
        }
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mask: u128 = if m == 128 {
            u128::MAX
        } else {
            (1u128 << m) - 1
        };
        for _ in 0..RANDOM_CODEBOOK_BUDGET {
            let w = (u128::from(rng.gen::<u64>()) << 64 | u128::from(rng.gen::<u64>())) & mask;
            if far(&kept, w) {
                kept.push(w);
            }
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, s: f64, l: f64) -> EllipsoidSpec {
        EllipsoidSpec::new(d, s, l).unwrap()
    }

    #[test]
    fn build_net_examples() {
        // s=1, L=1, d=1, delta=0.1: smallest M with (M+1)^{-1} <= 0.1/sqrt(2).
        let net = NetSpec::build(spec(1, 1.0, 1.0), 0.1).unwrap();
        assert_eq!(net.truncation_level(), 14);
        // s=2, L=1, delta=sqrt(2): (0+1)^{-2} = 1 <= 1.
        let net2 = NetSpec::build(spec(1, 2.0, 1.0), std::f64::consts::SQRT_2).unwrap();
        assert_eq!(net2.truncation_level(), 0);
        assert!(NetSpec::build(spec(1, 1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        // Direct construction mirroring the eps = 0.5, bound 1 example.
        let s = spec(1, 1.0, 1.0);
        let mut net = NetSpec::build(s, 1.0).unwrap();
        net.eps = 0.5;
        net.active = vec![MultiIndex::scalar(0)];
        net.bounds = vec![1.0];
        assert!(net.quantize(&CoefVec::new()).is_zero());
        let y = CoefVec::from_pairs([(MultiIndex::scalar(0), 0.3)]);
        assert_eq!(net.quantize(&y).get(&MultiIndex::scalar(0)), 0.5);
        let y7 = CoefVec::from_pairs([(MultiIndex::scalar(0), 7.0)]);
        assert_eq!(net.quantize(&y7).get(&MultiIndex::scalar(0)), 1.0);
        // Half-grid points round toward zero.
        let half = CoefVec::from_pairs([(MultiIndex::scalar(0), 0.25)]);
        assert_eq!(net.quantize(&half).get(&MultiIndex::scalar(0)), 0.0);
        let neg_half = CoefVec::from_pairs([(MultiIndex::scalar(0), -0.25)]);
        assert_eq!(net.quantize(&neg_half).get(&MultiIndex::scalar(0)), 0.0);
    }

    #[test]
    fn enumerate_and_cardinality() {
        // d=1, M=1, eps=0.5, bounds (1, 1): 5 values per coordinate, 25 points.
        let s = spec(1, 1.0, 1.0);
        let mut net = NetSpec::build(s, 1.0).unwrap();
        net.eps = 0.5;
        net.active = vec![MultiIndex::scalar(0), MultiIndex::scalar(1)];
        net.bounds = vec![1.0, 1.0];
        let pts = net.enumerate(100).unwrap();
        assert_eq!(pts.len(), 25);
        assert_eq!(net.cardinality(), Some(25));
        assert!((net.log_cardinality() - 25f64.ln()).abs() < 1e-12);
        match net.enumerate(10) {
            Err(Error::CapExceeded { count, cap }) => {
                assert_eq!(count, 25.0);
                assert_eq!(cap, 10);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
        // Single point per coordinate when eps > 2L.
        let mut tiny = net.clone();
        tiny.eps = 3.0;
        let pts = tiny.enumerate(10).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].is_zero());
        assert_eq!(tiny.log_cardinality(), 0.0);
    }

    #[test]
    fn log_cardinality_monotone_in_eps() {
        let s = spec(1, 2.0, 1.0);
        let net = NetSpec::build(s, 0.2).unwrap();
        let mut coarser = net.clone();
        coarser.eps = net.eps * 2.0;
        assert!(coarser.log_cardinality() <= net.log_cardinality());
    }

    #[test]
    fn quantize_is_idempotent_and_net_valued() {
        let s = spec(1, 2.0, 1.0);
        let net = NetSpec::build(s, 0.3).unwrap();
        let mut g = GaussianStream::new(5);
        for _ in 0..50 {
            let y = CoefVec::from_pairs(
                net.active()
                    .iter()
                    .map(|j| (j.clone(), 0.7 * g.standard_normal())),
            );
            let q1 = net.quantize(&y);
            let q2 = net.quantize(&q1);
            assert_eq!(q1, q2);
        }
    }

    #[test]
    fn quantized_points_are_grid_points() {
        let s = spec(1, 2.0, 1.0);
        let net = NetSpec::build(s, 0.45).unwrap();
        let pts = net.enumerate(200_000).unwrap();
        let mut g = GaussianStream::new(9);
        for _ in 0..20 {
            let y = CoefVec::from_pairs(
                net.active()
                    .iter()
                    .map(|j| (j.clone(), 0.5 * g.standard_normal())),
            );
            let q = net.quantize(&y);
            assert!(
                pts.iter().any(|p| l2_dist(p, &q) == 0.0),
                "quantized point missing from enumeration"
            );
        }
    }

    #[test]
    fn covering_statistical() {
        for (d, s_val, delta) in [(1, 2.0, 0.2), (1, 1.0, 0.3), (2, 2.0, 0.4)] {
            let net = NetSpec::build(spec(d, s_val, 1.0), delta).unwrap();
            let max_dist = net.verify_covering(2_000, 11);
            assert!(
                max_dist <= delta,
                "covering violated: d={d} s={s_val} delta={delta} max={max_dist}"
            );
        }
    }

    #[test]
    fn covering_trivial_and_deterministic() {
        let net = NetSpec::build(spec(1, 2.0, 1.0), 0.2).unwrap();
        let zero = CoefVec::new();
        assert_eq!(l2_dist(&zero, &net.quantize(&zero)), 0.0);
        let a = net.verify_covering(500, 3);
        let b = net.verify_covering(500, 3);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn covering_holds_for_full_support_members() {
        // Points of Θ with mass beyond the active box stay within δ of the
        // net: tail budget δ²/2 plus quantization budget.
        let s = spec(1, 2.0, 1.0);
        let delta = 0.25;
        let net = NetSpec::build(s, delta).unwrap();
        let m = net.truncation_level();
        let mut g = GaussianStream::new(77);
        for _ in 0..200 {
            let wide: Vec<MultiIndex> = (0..=(3 * m + 2)).map(MultiIndex::scalar).collect();
            let dir: Vec<f64> = wide.iter().map(|_| g.standard_normal()).collect();
            let wnorm = wide
                .iter()
                .zip(dir.iter())
                .map(|(j, &x)| {
                    let a = s.coeff(j);
                    a * a * x * x
                })
                .sum::<f64>()
                .sqrt();
            let theta = CoefVec::from_pairs(
                wide.iter()
                    .zip(dir.iter())
                    .map(|(j, &x)| (j.clone(), s.radius() * x / wnorm)),
            );
            assert!(s.contains(&theta));
            let dist = l2_dist(&theta, &net.quantize(&theta));
            assert!(dist <= delta, "dist {dist} > delta {delta}");
        }
    }

    #[test]
    fn packing_build_and_verify() {
        let s = spec(1, 2.0, 1.0);
        let p = build_packing(s, 0.05, 42).unwrap();
        let (min_d, max_d, count) = p.verify().unwrap();
        assert!(count >= 2);
        assert!(min_d >= p.delta() - 1e-12, "min {min_d} < delta");
        assert!(max_d <= 2.0 * p.delta() + 1e-12, "max {max_d} > 2 delta");
        assert!(p.all_in_ellipsoid());

        // Determinism.
        let p2 = build_packing(s, 0.05, 42).unwrap();
        assert_eq!(p.codebook, p2.codebook);
    }

    #[test]
    fn packing_distance_formula() {
        // m = 4, gamma = 0.5, two words at Hamming distance 2 sit at
        // pairwise distance 2·0.5·√2 = √2.
        let s = spec(1, 1.0, 10.0);
        let mut p = build_packing(s, 1.0, 0).unwrap();
        p.shell = (1..=4).map(MultiIndex::scalar).collect();
        p.gamma = 0.5;
        p.codebook = vec![0b0000, 0b0011];
        let (min_d, max_d, n) = p.verify().unwrap();
        assert_eq!(n, 2);
        assert!((min_d - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(min_d, max_d);
    }

    #[test]
    fn packing_infeasible_reports_range() {
        let s = spec(1, 2.0, 1.0);
        match build_packing(s, 1.5, 0) {
            Err(Error::InfeasiblePacking { delta, max_delta }) => {
                assert_eq!(delta, 1.5);
                assert!(max_delta <= 1.0);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn operator_norm_on_grid_matches_brute_force() {
        let s = spec(1, 2.0, 1.0);
        let net = NetSpec::build(s, 0.45).unwrap();
        let op = DiagonalOperator::convolution_power(1, 1.0).unwrap();
        let fast = net.operator_norm(&op).unwrap();
        let pts = net.enumerate(200_000).unwrap();
        let brute = crate::operator::op_norm_rho(&op, &pts).unwrap();
        assert!(
            (fast - brute).abs() < 1e-10,
            "grid {fast} vs brute {brute}"
        );
    }

    #[test]
    fn operator_norm_equals_max_active_inverse_singular_value() {
        // Grid nets always contain pairs differing in one coordinate, so
        // ϱ(Q, F_δ) = max active b_j^{-1}; at M = 5 with q = 1 that is 5.
        let net = NetSpec::build(spec(1, 2.0, 1.0), 0.05).unwrap();
        assert_eq!(net.truncation_level(), 5);
        let op = DiagonalOperator::convolution_power(1, 1.0).unwrap();
        assert_eq!(net.operator_norm(&op).unwrap(), 5.0);
    }

    #[test]
    fn component_net_is_mean_zero() {
        let s = spec(1, 2.0, 1.0);
        let net = NetSpec::build_component(s, 0.2, 1, 2).unwrap();
        assert!(net.active().iter().all(|j| j.entries()[0] == 0));
        assert!(net.active().iter().all(|j| j.entries()[1] >= 1));
    }
}
