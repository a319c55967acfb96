//! Experiment configuration: a line-oriented key–value file with section
//! headers (TOML), loaded into a validated runtime form.
//!
//! Unknown keys are errors. The full schema is documented in the repository
//! README; every field that influences randomness or output is explicit, so
//! a (config, seed) pair pins every output bit.

use crate::error::{Error, Result};
use crate::estimate::AdditiveComponent;
use crate::operator::DiagonalOperator;
use crate::rng::{substream_seed, GaussianStream};
use crate::seq::{CoefVec, EllipsoidSpec, MultiIndex};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: ModelSection,
    operator: OperatorSection,
    #[serde(default)]
    ellipsoid: Option<EllipsoidSection>,
    #[serde(default)]
    component: Vec<ComponentSection>,
    truth: TruthSection,
    experiment: ExperimentSection,
    #[serde(default)]
    bound: Option<BoundSection>,
    #[serde(default)]
    scalings: Option<ScalingsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorSection {
    kind: String,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default)]
    eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    qs: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EllipsoidSection {
    d: usize,
    s: f64,
    #[serde(rename = "L")]
    l: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentSection {
    coordinate: usize,
    s: f64,
    #[serde(rename = "L")]
    l: f64,
    q: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthSection {
    kind: String,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    j: Vec<u32>,
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    n_grid: Vec<f64>,
    replications: u64,
    base_seed: u64,
    delta_rule: String,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    estimator: String,
    #[serde(default)]
    noiseless: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundSection {
    #[serde(default)]
    xi: Option<f64>,
    #[serde(default)]
    c_tau: Option<f64>,
    #[serde(default)]
    c_additive: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingsSection {
    delta_grid: Vec<f64>,
    #[serde(default)]
    packing_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    WhiteNoise,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    Optimal { kappa: f64 },
    Fixed { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Net,
    Dense,
    Additive,
}

#[derive(Debug, Clone)]
pub enum Geometry {
    Ellipsoid(EllipsoidSpec),
    Additive(Vec<AdditiveComponent>),
}

#[derive(Debug, Clone, Copy)]
pub struct BoundSettings {
    pub xi: f64,
    pub c_tau: f64,
    pub c_additive: f64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            xi: 0.48,
            c_tau: 9.0,
            c_additive: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub operator: DiagonalOperator,
    pub geometry: Geometry,
    pub truth: CoefVec,
    pub truth_kind: String,
    pub n_grid: Vec<f64>,
    pub replications: u64,
    pub base_seed: u64,
    pub delta_rule: DeltaRule,
    pub estimator: EstimatorKind,
    pub noiseless: bool,
    pub bound: BoundSettings,
    pub scalings_delta_grid: Vec<f64>,
    pub scalings_packing_seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        build(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// (s, q, d) triple driving the optimal-δ rule and the theory exponent.
    pub fn rate_parameters(&self) -> Result<(f64, f64, usize)> {
        match (&self.geometry, self.operator.kind()) {
            (Geometry::Ellipsoid(spec), crate::operator::OperatorKind::Identity { .. }) => {
                Ok((spec.smoothness(), 0.0, spec.dim()))
            }
            (Geometry::Ellipsoid(spec), crate::operator::OperatorKind::Convolution { rule, .. }) => {
                let q = match rule {
                    crate::operator::SingularRule::PowerLaw { q } => *q,
                    crate::operator::SingularRule::Explicit { .. } => {
                        return Err(Error::Config(
                            "rate parameters need a power-law convolution rule".into(),
                        ))
                    }
                };
                Ok((spec.smoothness(), q, spec.dim()))
            }
            (Geometry::Ellipsoid(spec), crate::operator::OperatorKind::Radon2d) => {
                Ok((spec.smoothness(), 0.5, 2))
            }
            (Geometry::Additive(_), _) => Err(Error::Config(
                "additive geometry has per-component rate parameters".into(),
            )),
            _ => Err(Error::Config("geometry/operator combination unsupported".into())),
        }
    }
}

fn build(file: ConfigFile) -> Result<ExperimentConfig> {
    let model = match file.model.kind.as_str() {
        "white_noise" => ModelKind::WhiteNoise,
        "density" => ModelKind::Density,
        other => {
            return Err(Error::Config(format!(
                "model.kind must be white_noise or density, got {other:?}"
            )))
        }
    };

    let geometry = match (&file.ellipsoid, file.component.is_empty()) {
        (Some(e), true) => Geometry::Ellipsoid(EllipsoidSpec::new(e.d, e.s, e.l)?),
        (None, false) => {
            let comps = file
                .component
                .iter()
                .map(|c| {
                    Ok(AdditiveComponent {
                        coordinate: c.coordinate,
                        spec: EllipsoidSpec::new(1, c.s, c.l)?,
                        q: c.q,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Geometry::Additive(comps)
        }
        (Some(_), false) => {
            return Err(Error::Config(
                "give either [ellipsoid] or [[component]] sections, not both".into(),
            ))
        }
        (None, true) => {
            return Err(Error::Config(
                "missing geometry: add an [ellipsoid] or [[component]] section".into(),
            ))
        }
    };

    let operator = match file.operator.kind.as_str() {
        "identity" => {
            let d = geometry_dim(&geometry);
            DiagonalOperator::identity(d)
        }
        "convolution" => {
            let d = geometry_dim(&geometry);
            if let Some(values) = file.operator.eigenvalues.clone() {
                if d != 1 {
                    return Err(Error::Config(
                        "operator.eigenvalues requires d = 1".into(),
                    ));
                }
                DiagonalOperator::convolution_explicit(values)?
            } else {
                let q = file.operator.q.ok_or_else(|| {
                    Error::Config("operator.q is required for kind = \"convolution\"".into())
                })?;
                DiagonalOperator::convolution_power(d, q)?
            }
        }
        "radon2d" => {
            if geometry_dim(&geometry) != 2 {
                return Err(Error::Config("radon2d requires ellipsoid.d = 2".into()));
            }
            DiagonalOperator::radon2d()
        }
        "additive_convolution" => {
            let comps = match &geometry {
                Geometry::Additive(cs) => cs,
                _ => {
                    return Err(Error::Config(
                        "additive_convolution requires [[component]] geometry".into(),
                    ))
                }
            };
            let qs = match &file.operator.qs {
                Some(qs) => qs.clone(),
                None => {
                    // Default: one q per declared component, in coordinate order.
                    let mut qs = vec![0.0; comps.len()];
                    for c in comps {
                        if c.coordinate >= qs.len() {
                            return Err(Error::Config(format!(
                                "component coordinate {} out of range",
                                c.coordinate
                            )));
                        }
                        qs[c.coordinate] = c.q;
                    }
                    qs
                }
            };
            DiagonalOperator::additive_convolution(qs)?
        }
        other => {
            return Err(Error::Config(format!(
                "operator.kind {other:?} not recognized"
            )))
        }
    };

    if model == ModelKind::Density && !operator.is_self_basis() {
        return Err(Error::Config(
            "the density model requires a self-basis operator".into(),
        ));
    }

    let exp = &file.experiment;
    if exp.n_grid.is_empty() {
        return Err(Error::Config("experiment.n_grid must be nonempty".into()));
    }
    if !exp.n_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(
            "experiment.n_grid must be strictly increasing".into(),
        ));
    }
    if exp.n_grid.iter().any(|&n| !(n > 1.0)) {
        return Err(Error::Config(
            "experiment.n_grid entries must exceed 1".into(),
        ));
    }
    if exp.replications == 0 {
        return Err(Error::Config(
            "experiment.replications must be at least 1".into(),
        ));
    }
    let delta_rule = match exp.delta_rule.as_str() {
        "optimal" => DeltaRule::Optimal {
            kappa: exp.kappa.unwrap_or(1.0),
        },
        "fixed" => DeltaRule::Fixed {
            delta: exp.delta.ok_or_else(|| {
                Error::Config("experiment.delta is required for delta_rule = \"fixed\"".into())
            })?,
        },
        other => {
            return Err(Error::Config(format!(
                "experiment.delta_rule {other:?} not recognized (optimal | fixed)"
            )))
        }
    };
    let estimator = match exp.estimator.as_str() {
        "net" => EstimatorKind::Net,
        "dense" => EstimatorKind::Dense,
        "additive" => EstimatorKind::Additive,
        other => {
            return Err(Error::Config(format!(
                "experiment.estimator {other:?} not recognized (net | dense | additive)"
            )))
        }
    };
    if estimator == EstimatorKind::Additive && !matches!(geometry, Geometry::Additive(_)) {
        return Err(Error::Config(
            "the additive estimator requires [[component]] geometry".into(),
        ));
    }
    if estimator == EstimatorKind::Dense && model == ModelKind::Density {
        return Err(Error::Config(
            "the dense minimizer is not available for the density model".into(),
        ));
    }

    let truth = materialize_truth(
        &file.truth,
        &geometry,
        model,
        exp.base_seed,
    )?;

    // Membership check at load time.
    match &geometry {
        Geometry::Ellipsoid(spec) => {
            if !spec.contains(&truth) {
                return Err(Error::Config(format!(
                    "truth has weighted norm {} exceeding L = {}",
                    spec.weighted_norm_sq(&truth).sqrt(),
                    spec.radius()
                )));
            }
        }
        Geometry::Additive(comps) => {
            for comp in comps {
                let sub = CoefVec::from_pairs(truth.iter().filter_map(|(j, v)| {
                    if j.entries()[comp.coordinate] > 0 {
                        Some((j.clone(), *v))
                    } else {
                        None
                    }
                }));
                if !comp.spec.contains(&sub) {
                    return Err(Error::Config(format!(
                        "component {} truth exceeds its ellipsoid radius",
                        comp.coordinate
                    )));
                }
            }
        }
    }

    let bound = match &file.bound {
        None => BoundSettings::default(),
        Some(b) => BoundSettings {
            xi: b.xi.unwrap_or(0.48),
            c_tau: b.c_tau.unwrap_or(9.0),
            c_additive: b.c_additive.unwrap_or(1.0),
        },
    };

    let (scalings_delta_grid, scalings_packing_seed) = match &file.scalings {
        None => (Vec::new(), 1),
        Some(s) => {
            if !s.delta_grid.is_empty() && !s.delta_grid.windows(2).all(|w| w[0] > w[1]) {
                return Err(Error::Config(
                    "scalings.delta_grid must be strictly decreasing".into(),
                ));
            }
            (s.delta_grid.clone(), s.packing_seed.unwrap_or(1))
        }
    };

    Ok(ExperimentConfig {
        model,
        operator,
        geometry,
        truth,
        truth_kind: file.truth.kind.clone(),
        n_grid: exp.n_grid.clone(),
        replications: exp.replications,
        base_seed: exp.base_seed,
        delta_rule,
        estimator,
        noiseless: exp.noiseless,
        bound,
        scalings_delta_grid,
        scalings_packing_seed,
    })
}

fn geometry_dim(g: &Geometry) -> usize {
    match g {
        Geometry::Ellipsoid(spec) => spec.dim(),
        Geometry::Additive(comps) => comps.iter().map(|c| c.coordinate + 1).max().unwrap_or(1),
    }
}

/// Truth generators.
///
/// - `fixed_trig` (white noise): mass on the first few indices, scaled to
///   weighted norm `scale`·L (default 0.9·L). For the density model the
///   coefficients are instead the fixed strictly positive density
///   1 + 0.3·√2cos(2πx) + 0.1·√2cos(4πx) (θ_0 = 1 is forced by ∫f = 1).
/// - `boundary`: near-critical decay θ_j ∝ max(1,|j|)^{-(s + d/2 + 0.05)}
///   scaled to saturate the ellipsoid (weighted norm `scale`·L, default L);
///   its truncation tail beyond any box decays at the class rate, which
///   anchors the bias term of MISE sweeps.
/// - `random_interior`: seeded weighted-spherical direction over |j| ≤ 4,
///   radius 0.8·L·u^{1/N}.
/// - `coefficients`: explicit list.
fn materialize_truth(
    section: &TruthSection,
    geometry: &Geometry,
    model: ModelKind,
    base_seed: u64,
) -> Result<CoefVec> {
    match section.kind.as_str() {
        "coefficients" => {
            if section.coefficients.is_empty() {
                return Err(Error::Config(
                    "truth.kind = \"coefficients\" needs [[truth.coefficients]] entries".into(),
                ));
            }
            Ok(CoefVec::from_pairs(
                section
                    .coefficients
                    .iter()
                    .map(|e| (MultiIndex::new(e.j.clone()), e.value)),
            ))
        }
        "fixed_trig" => match model {
            ModelKind::Density => {
                let d = geometry_dim(geometry);
                if d != 1 {
                    return Err(Error::Config(
                        "density fixed_trig truth is defined for d = 1".into(),
                    ));
                }
                Ok(CoefVec::from_pairs([
                    (MultiIndex::scalar(0), 1.0),
                    (MultiIndex::scalar(1), 0.3),
                    (MultiIndex::scalar(2), 0.1),
                ]))
            }
            ModelKind::WhiteNoise => {
                let scale = section.scale.unwrap_or(0.9);
                scaled_low_index_truth(geometry, scale)
            }
        },
        "boundary" => {
            let scale = section.scale.unwrap_or(1.0);
            boundary_truth(geometry, scale)
        }
        "random_interior" => {
            let seed = substream_seed(base_seed, &[u64::from_le_bytes(*b"truthgen")]);
            random_interior_truth(geometry, seed)
        }
        other => Err(Error::Config(format!(
            "truth.kind {other:?} not recognized (fixed_trig | boundary | random_interior | coefficients)"
        ))),
    }
}

fn low_indices(geometry: &Geometry) -> Vec<(EllipsoidSpec, Vec<MultiIndex>)> {
    match geometry {
        Geometry::Ellipsoid(spec) => {
            let idx = match spec.dim() {
                1 => vec![
                    MultiIndex::scalar(1),
                    MultiIndex::scalar(2),
                    MultiIndex::scalar(3),
                ],
                2 => vec![
                    MultiIndex::pair(1, 0),
                    MultiIndex::pair(0, 1),
                    MultiIndex::pair(1, 1),
                ],
                d => (0..d as u32)
                    .map(|i| {
                        let mut v = vec![0u32; geometry_dim(geometry)];
                        v[i as usize] = 1;
                        MultiIndex::new(v)
                    })
                    .collect(),
            };
            vec![(*spec, idx)]
        }
        Geometry::Additive(comps) => {
            let ambient = geometry_dim(geometry);
            comps
                .iter()
                .map(|c| {
                    let idx = (1..=3u32)
                        .map(|j| {
                            let mut v = vec![0u32; ambient];
                            v[c.coordinate] = j;
                            MultiIndex::new(v)
                        })
                        .collect();
                    (c.spec, idx)
                })
                .collect()
        }
    }
}

fn scaled_low_index_truth(geometry: &Geometry, scale: f64) -> Result<CoefVec> {
    if !(0.0 < scale && scale <= 1.0) {
        return Err(Error::Config(format!(
            "truth.scale must lie in (0, 1], got {scale}"
        )));
    }
    let mut out = CoefVec::new();
    for (spec, indices) in low_indices(geometry) {
        let raw = CoefVec::from_pairs(indices.iter().enumerate().map(|(pos, j)| {
            (j.clone(), 1.0 / (spec.coeff(j) * 2f64.powi(pos as i32)))
        }));
        let wn = spec.weighted_norm_sq(&raw).sqrt();
        let c = scale * spec.radius() / wn;
        for (j, v) in raw.iter() {
            out.set(j.clone(), c * v);
        }
    }
    Ok(out)
}

fn boundary_truth(geometry: &Geometry, scale: f64) -> Result<CoefVec> {
    if !(0.0 < scale && scale <= 1.0) {
        return Err(Error::Config(format!(
            "truth.scale must lie in (0, 1], got {scale}"
        )));
    }
    let mut out = CoefVec::new();
    match geometry {
        Geometry::Ellipsoid(spec) => {
            let d = spec.dim();
            let p = spec.smoothness() + d as f64 / 2.0 + 0.05;
            let indices: Vec<MultiIndex> = match d {
                1 => (1..=512u32).map(MultiIndex::scalar).collect(),
                2 => {
                    let mut v = Vec::new();
                    for a in 0..=72u32 {
                        for b in 0..=72u32 {
                            if a + b >= 1 {
                                v.push(MultiIndex::pair(a, b));
                            }
                        }
                    }
                    v
                }
                other => {
                    return Err(Error::Config(format!(
                        "boundary truth supports d <= 2, got {other}"
                    )))
                }
            };
            let raw = CoefVec::from_pairs(
                indices
                    .iter()
                    .map(|j| (j.clone(), f64::from(j.total()).powf(-p))),
            );
            let wn = spec.weighted_norm_sq(&raw).sqrt();
            let c = scale * spec.radius() / wn;
            for (j, v) in raw.iter() {
                out.set(j.clone(), c * v);
            }
        }
        Geometry::Additive(comps) => {
            let ambient = geometry_dim(geometry);
            for comp in comps {
                let p = comp.spec.smoothness() + 0.55;
                let raw = CoefVec::from_pairs((1..=512u32).map(|j| {
                    let mut v = vec![0u32; ambient];
                    v[comp.coordinate] = j;
                    (MultiIndex::new(v), f64::from(j).powf(-p))
                }));
                let wn = comp.spec.weighted_norm_sq(&raw).sqrt();
                let c = scale * comp.spec.radius() / wn;
                for (j, v) in raw.iter() {
                    out.set(j.clone(), c * v);
                }
            }
        }
    }
    Ok(out)
}

fn random_interior_truth(geometry: &Geometry, seed: u64) -> Result<CoefVec> {
    let mut g = GaussianStream::new(seed);
    let mut out = CoefVec::new();
    for (spec, _) in low_indices(geometry) {
        // Indices with |j| <= 4 in the ellipsoid's dimension.
        let indices: Vec<MultiIndex> = match spec.dim() {
            1 => (1..=4u32).map(MultiIndex::scalar).collect(),
            2 => {
                let mut v = Vec::new();
                for a in 0..=4u32 {
                    for b in 0..=(4 - a) {
                        if a + b >= 1 {
                            v.push(MultiIndex::pair(a, b));
                        }
                    }
                }
                v
            }
            _ => {
                return Err(Error::Config(
                    "random_interior truth supports d <= 2".into(),
                ))
            }
        };
        let dir: Vec<f64> = indices.iter().map(|_| g.standard_normal()).collect();
        let wn = indices
            .iter()
            .zip(dir.iter())
            .map(|(j, &x)| {
                let a = spec.coeff(j);
                a * a * x * x
            })
            .sum::<f64>()
            .sqrt();
        let r = 0.8 * spec.radius() * g.uniform().powf(1.0 / indices.len() as f64);
        for (j, &x) in indices.iter().zip(dir.iter()) {
            out.set(j.clone(), r * x / wn);
        }
    }
    Ok(out)
}
