//! Field models: local correlation structure, variance profile and the set where the variance
//! is maximal.

pub mod config;
pub mod geometry;
pub mod regime;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::specfun::{PowerLawSpec, Sidedness};

pub use config::{build_model, parse_inline, ModelConfig, ModelFile, SCHEMA_VERSION};
pub use geometry::{Domain, Point};
pub use regime::{
    classify_regime, default_ladder, h1_limit, h_eval, validate_regular_variation, AxisClass, LimitClass, ProbePlan, Regime,
    RegimeTag,
};
pub use validate::validate_model;

pub type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Scalar2Fn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type EmbedFn = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
pub type ParamFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Coefficient `A_i(t)` of the local expansion `1 - r_t(s) ≈ Σ A_i(t)|s_i|^{α_i}`.
#[derive(Clone)]
pub enum Amplitude {
    Const(f64),
    Varying(PointFn),
}

impl Amplitude {
    pub fn at(&self, p: &Point) -> f64 {
        match self {
            Amplitude::Const(a) => *a,
            Amplitude::Varying(f) => f(p),
        }
    }
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Const(a) => write!(f, "Const({a})"),
            Amplitude::Varying(_) => write!(f, "Varying(..)"),
        }
    }
}

#[derive(Clone)]
pub struct CorrelationStructure {
    pub alphas: Vec<f64>,
    pub amplitudes: Vec<Amplitude>,
    /// Exact correlation `r(p₁, p₂)` of the standardized field, when known.
    pub full_correlation: Option<PairFn>,
}

impl CorrelationStructure {
    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// `q_i(u) = u^{-2/α_i}`.
    pub fn q(&self, axis: usize, u: f64) -> f64 {
        u.powf(-2.0 / self.alphas[axis])
    }

    /// `C_{t,i} = A_i(t)^{-1/α_i}`.
    pub fn c(&self, axis: usize, p: &Point) -> f64 {
        self.amplitudes[axis].at(p).powf(-1.0 / self.alphas[axis])
    }

    /// `C_{t,i}^{-1} q_i(u)^{-1}`: the number of local windows per unit length on axis `i`.
    pub fn inverse_scale(&self, axis: usize, p: &Point, u: f64) -> f64 {
        self.amplitudes[axis].at(p).powf(1.0 / self.alphas[axis]) * u.powf(2.0 / self.alphas[axis])
    }
}

impl fmt::Debug for CorrelationStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorrelationStructure")
            .field("alphas", &self.alphas)
            .field("amplitudes", &self.amplitudes)
            .field("full_correlation", &self.full_correlation.is_some())
            .finish()
    }
}

/// Standard deviation `σ` (normalized to max 1) and its deficit `1 - σ`, kept separately so
/// that tiny deficits near the maximum set are not lost to cancellation.
#[derive(Clone)]
pub struct VarianceProfile {
    pub sigma: PointFn,
    pub deficit: PointFn,
    /// Local form of `1 - σ` along the normal axes of each chart, in chart order.
    pub normal_forms: Vec<Option<PowerLawSpec>>,
}

impl VarianceProfile {
    /// `f = ½(1 - σ²)`.
    pub fn f(&self, p: &Point) -> f64 {
        let d = (self.deficit)(p);
        d * (1.0 - 0.5 * d)
    }

    pub fn constant() -> Self {
        Self { sigma: Arc::new(|_| 1.0), deficit: Arc::new(|_| 0.0), normal_forms: vec![] }
    }
}

impl fmt::Debug for VarianceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VarianceProfile").field("normal_forms", &self.normal_forms).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxSetKind {
    FinitePoints,
    IntervalCurve,
    Circle,
    Sphere(usize),
    ProductChart,
}

/// A local axis transverse to the maximum set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalAxis {
    pub axis: usize,
    /// One-sided when the maximum set lies on the domain boundary in this direction.
    pub sided: Sidedness,
    /// Direction pointing into the domain (±1); only meaningful when one-sided.
    pub inward: f64,
}

impl NormalAxis {
    pub fn two_sided(axis: usize) -> Self {
        Self { axis, sided: Sidedness::TwoSided, inward: 1.0 }
    }

    pub fn one_sided(axis: usize, inward: f64) -> Self {
        Self { axis, sided: Sidedness::OneSided, inward: inward.signum() }
    }

    /// Probe directions: the inward one, or both.
    pub fn directions(&self) -> Vec<f64> {
        match self.sided {
            Sidedness::OneSided => vec![self.inward],
            Sidedness::TwoSided => vec![1.0, -1.0],
        }
    }
}

/// Parametrized piece of the maximum set.
#[derive(Clone)]
pub struct Chart {
    pub label: String,
    /// Parameter box in ℝ^r (empty for an isolated point).
    pub param_box: Vec<(f64, f64)>,
    pub embed: EmbedFn,
    /// r-dimensional volume element of the embedding.
    pub volume: ParamFn,
    /// Local axes tangent to the maximum set, one per parameter.
    pub tangential: Vec<usize>,
    pub normal: Vec<NormalAxis>,
}

impl Chart {
    pub fn point(label: impl Into<String>, p: Point, normal: Vec<NormalAxis>) -> Self {
        Self {
            label: label.into(),
            param_box: vec![],
            embed: Arc::new(move |_| p.clone()),
            volume: Arc::new(|_| 1.0),
            tangential: vec![],
            normal,
        }
    }

    pub fn dim(&self) -> usize {
        self.param_box.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.param_box.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Center plus, per parameter, two nodes 10% inside the faces.
    pub fn probe_nodes(&self) -> Vec<Vec<f64>> {
        let c = self.center();
        let mut nodes = vec![c.clone()];
        for (i, &(a, b)) in self.param_box.iter().enumerate() {
            for x in [a + 0.1 * (b - a), b - 0.1 * (b - a)] {
                let mut n = c.clone();
                n[i] = x;
                nodes.push(n);
            }
        }
        nodes
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("label", &self.label)
            .field("param_box", &self.param_box)
            .field("tangential", &self.tangential)
            .field("normal", &self.normal)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct MaxSet {
    pub kind: MaxSetKind,
    pub dim: usize,
    /// Disjoint charts; each is one component of the partition used in the general case.
    pub charts: Vec<Chart>,
}

/// Coordinate process of a sampler.
#[derive(Clone)]
pub enum ProcessKind {
    /// Stationary unit-variance process with correlation `r(τ)`.
    Stationary(ScalarFn),
    Brownian,
    /// Standard Brownian bridge on [0, 1].
    Bridge,
    Fbm(f64),
    /// Arbitrary covariance, sampled by Cholesky.
    Covariance(Scalar2Fn),
}

impl fmt::Debug for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessKind::Stationary(_) => write!(f, "Stationary"),
            ProcessKind::Brownian => write!(f, "Brownian"),
            ProcessKind::Bridge => write!(f, "Bridge"),
            ProcessKind::Fbm(h) => write!(f, "Fbm({h})"),
            ProcessKind::Covariance(_) => write!(f, "Covariance"),
        }
    }
}

/// How Monte Carlo draws the field on a time grid.
#[derive(Clone)]
pub enum FieldSampler {
    /// `X(t) = scale(t)·Y(t)`.
    Scalar { process: ProcessKind, scale: Option<ScalarFn> },
    /// Coordinates `scale_i(t)·Y_i(t)` with independent copies of `process`; the supremum over
    /// the sphere of `⟨v, (w_i X_i)⟩` is the weighted norm.
    Dual { process: ProcessKind, weights: Vec<f64>, scales: Vec<Option<ScalarFn>> },
}

impl fmt::Debug for FieldSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSampler::Scalar { process, scale } => {
                f.debug_struct("Scalar").field("process", process).field("scaled", &scale.is_some()).finish()
            }
            FieldSampler::Dual { process, weights, .. } => {
                f.debug_struct("Dual").field("process", process).field("weights", weights).finish()
            }
        }
    }
}

#[derive(Clone)]
pub struct FieldModel {
    pub id: String,
    pub description: String,
    pub domain: Domain,
    pub correlation: CorrelationStructure,
    pub variance: VarianceProfile,
    pub maxset: MaxSet,
    pub sampler: Option<FieldSampler>,
    /// Recipe the model was built from, if any.
    pub config: Option<ModelConfig>,
}

impl fmt::Debug for FieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldModel")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("correlation", &self.correlation)
            .field("maxset", &self.maxset)
            .finish()
    }
}

impl FieldModel {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn sigma(&self, p: &Point) -> f64 {
        (self.variance.sigma)(p)
    }

    pub fn deficit(&self, p: &Point) -> f64 {
        (self.variance.deficit)(p)
    }

    pub fn normal_form(&self, chart: usize) -> Option<&PowerLawSpec> {
        self.variance.normal_forms.get(chart).and_then(Option::as_ref)
    }

    /// Validate and return the model.
    pub fn validated(self) -> Result<Self> {
        validate_model(&self)?;
        Ok(self)
    }
}
