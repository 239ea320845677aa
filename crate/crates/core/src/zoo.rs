//! Built-in models and exact oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::geometry::{dot, sphere_embed, sphere_param_box, sphere_volume_element, tangent_basis};
use crate::model::{
    Amplitude, Chart, CorrelationStructure, Domain, FieldModel, FieldSampler, MaxSet, MaxSetKind, ModelConfig,
    NormalAxis, Point, PointFn, ProcessKind, ScalarFn, VarianceProfile,
};
use crate::specfun::{gamma, gauss_tail, psi, PowerLawSpec, PowerTerm, Sidedness};

fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn stationary_kernel(alpha: f64, a: f64) -> ScalarFn {
    Arc::new(move |tau: f64| (-a * tau.abs().powf(alpha)).exp())
}

fn term(coeff: f64, exponent: f64, sided: Sidedness) -> PowerTerm {
    PowerTerm { coeff, exponent, sided }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(domain_err(format!("alpha out of (0,2]: {alpha}")))
    }
}

/// Variance peak `σ(t) = 1/(1 + a|t - t0|^β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub a: f64,
    pub beta: f64,
    pub t0: f64,
}

impl Peak {
    fn check(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(domain_err(format!("peak coefficient must be > 0, got {}", self.a)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain_err(format!("peak exponent must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    fn deficit(&self, t: f64) -> f64 {
        let x = self.a * (t - self.t0).abs().powf(self.beta);
        x / (1.0 + x)
    }

    fn sigma(&self, t: f64) -> f64 {
        1.0 / (1.0 + self.a * (t - self.t0).abs().powf(self.beta))
    }

    /// Normal axis at the peak inside `[lo, hi]`.
    fn normal_axis(&self, lo: f64, hi: f64) -> Result<NormalAxis> {
        let tol = 1e-12 * (hi - lo);
        if (self.t0 - lo).abs() <= tol {
            Ok(NormalAxis::one_sided(0, 1.0))
        } else if (self.t0 - hi).abs() <= tol {
            Ok(NormalAxis::one_sided(0, -1.0))
        } else if self.t0 > lo && self.t0 < hi {
            Ok(NormalAxis::two_sided(0))
        } else {
            Err(domain_err(format!("peak location {} outside [{lo}, {hi}]", self.t0)))
        }
    }
}

/// Stationary field `r(τ) = exp(-a|τ|^α)` with σ ≡ 1 on `[0, length]`.
pub fn make_stationary(alpha: f64, a: f64, length: f64) -> Result<FieldModel> {
    check_alpha(alpha)?;
    if !(a > 0.0 && length > 0.0) {
        return Err(domain_err("stationary model needs a > 0 and length > 0"));
    }
    let r = stationary_kernel(alpha, a);
    let rc = r.clone();
    FieldModel {
        id: format!("stationary(alpha={alpha},a={a},length={length})"),
        description: "stationary field, variance constant on the whole interval".into(),
        domain: Domain::interval(0.0, length),
        correlation: CorrelationStructure {
            alphas: vec![alpha],
            amplitudes: vec![Amplitude::Const(a)],
            full_correlation: Some(Arc::new(move |p, q| rc(p.time[0] - q.time[0]))),
        },
        variance: VarianceProfile { normal_forms: vec![None], ..VarianceProfile::constant() },
        maxset: MaxSet {
            kind: MaxSetKind::IntervalCurve,
            dim: 1,
            charts: vec![Chart {
                label: "interval".into(),
                param_box: vec![(0.0, length)],
                embed: Arc::new(|x| Point::at(x[0])),
                volume: Arc::new(|_| 1.0),
                tangential: vec![0],
                normal: vec![],
            }],
        },
        sampler: Some(FieldSampler::Scalar { process: ProcessKind::Stationary(r), scale: None }),
        config: None,
    }
    .validated()
}

/// `σ(t) = 1/(1 + a|t - t0|^β)` and `r(τ) = exp(-|τ|^α)` on `[0, 1]`; `boundary` places the peak
/// at an endpoint.
pub fn make_power_family(alpha: f64, beta: f64, a: f64, t0: f64, boundary: bool) -> Result<FieldModel> {
    check_alpha(alpha)?;
    let peak = Peak { a, beta, t0 };
    peak.check()?;
    let at_end = t0 == 0.0 || t0 == 1.0;
    if boundary && !at_end {
        return Err(domain_err(format!("boundary peak must sit at 0 or 1, got {t0}")));
    }
    if !boundary && !(t0 > 0.0 && t0 < 1.0) {
        return Err(domain_err(format!("interior peak must lie in (0, 1), got {t0}")));
    }
    let normal = peak.normal_axis(0.0, 1.0)?;
    let r = stationary_kernel(alpha, 1.0);
    let rc = r.clone();
    FieldModel {
        id: format!("power(alpha={alpha},beta={beta},a={a},t0={t0})"),
        description: "single variance peak with power-law decay".into(),
        domain: Domain::interval(0.0, 1.0),
        correlation: CorrelationStructure {
            alphas: vec![alpha],
            amplitudes: vec![Amplitude::Const(1.0)],
            full_correlation: Some(Arc::new(move |p, q| rc(p.time[0] - q.time[0]))),
        },
        variance: VarianceProfile {
            sigma: Arc::new(move |p| peak.sigma(p.time[0])),
            deficit: Arc::new(move |p| peak.deficit(p.time[0])),
            normal_forms: vec![Some(PowerLawSpec::new(vec![term(a, beta, normal.sided)])?)],
        },
        maxset: MaxSet { kind: MaxSetKind::FinitePoints, dim: 0, charts: vec![Chart::point("peak", Point::at(t0), vec![normal])] },
        sampler: Some(FieldSampler::Scalar { process: ProcessKind::Stationary(r), scale: Some(Arc::new(move |t| peak.sigma(t))) }),
        config: None,
    }
    .validated()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointParams {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    /// Distance between the peaks, centred on 1/2.
    pub separation: f64,
    /// `c` in `r(τ) = exp(-c|τ|^α)`.
    pub corr_scale: f64,
}

/// Defaults: peaks at 1/4 and 3/4 with correlation 0.9 between them.
pub const TWO_POINT_DEFAULTS: TwoPointParams =
    TwoPointParams { alpha: 2.0, beta: 1.0, a: 5.0, separation: 0.5, corr_scale: 0.42 };

/// Two sharp variance peaks (a two-point maximum set).
pub fn make_two_point(p: TwoPointParams) -> Result<FieldModel> {
    check_alpha(p.alpha)?;
    if !(p.separation > 0.0 && p.separation < 1.0 && p.corr_scale > 0.0) {
        return Err(domain_err("two-point model needs separation in (0,1) and corr_scale > 0"));
    }
    let (t1, t2) = (0.5 - 0.5 * p.separation, 0.5 + 0.5 * p.separation);
    let peaks = [Peak { a: p.a, beta: p.beta, t0: t1 }, Peak { a: p.a, beta: p.beta, t0: t2 }];
    peaks[0].check()?;
    let nearest = move |t: f64| if (t - t1).abs() <= (t - t2).abs() { peaks[0] } else { peaks[1] };
    let r = stationary_kernel(p.alpha, p.corr_scale);
    let rc = r.clone();
    let nf = PowerLawSpec::new(vec![term(p.a, p.beta, Sidedness::TwoSided)])?;
    FieldModel {
        id: format!("two_point(alpha={},beta={},a={},sep={})", p.alpha, p.beta, p.a, p.separation),
        description: "two separated variance peaks".into(),
        domain: Domain::interval(0.0, 1.0),
        correlation: CorrelationStructure {
            alphas: vec![p.alpha],
            amplitudes: vec![Amplitude::Const(p.corr_scale)],
            full_correlation: Some(Arc::new(move |x, y| rc(x.time[0] - y.time[0]))),
        },
        variance: VarianceProfile {
            sigma: Arc::new(move |x| nearest(x.time[0]).sigma(x.time[0])),
            deficit: Arc::new(move |x| nearest(x.time[0]).deficit(x.time[0])),
            normal_forms: vec![Some(nf.clone()), Some(nf)],
        },
        maxset: MaxSet {
            kind: MaxSetKind::FinitePoints,
            dim: 0,
            charts: vec![
                Chart::point("left peak", Point::at(t1), vec![NormalAxis::two_sided(0)]),
                Chart::point("right peak", Point::at(t2), vec![NormalAxis::two_sided(0)]),
            ],
        },
        sampler: Some(FieldSampler::Scalar {
            process: ProcessKind::Stationary(r),
            scale: Some(Arc::new(move |t| nearest(t).sigma(t))),
        }),
        config: None,
    }
    .validated()
}

/// `1 - √t` without cancellation near 1.
fn sqrt_deficit(t: f64) -> f64 {
    (1.0 - t) / (1.0 + t.max(0.0).sqrt())
}

/// Brownian motion on `[0, 1]`; the variance peaks at the endpoint 1.
pub fn make_brownian() -> Result<FieldModel> {
    let nf = PowerLawSpec::new(vec![term(0.5, 1.0, Sidedness::OneSided)])?;
    FieldModel {
        id: "brownian".into(),
        description: "Brownian motion on [0,1]".into(),
        domain: Domain::interval(0.0, 1.0),
        correlation: CorrelationStructure {
            alphas: vec![1.0],
            amplitudes: vec![Amplitude::Varying(Arc::new(|p| 0.5 / p.time[0]))],
            full_correlation: Some(Arc::new(|p, q| {
                let (s, t) = (p.time[0], q.time[0]);
                (s.min(t) / s.max(t)).sqrt()
            })),
        },
        variance: VarianceProfile {
            sigma: Arc::new(|p| p.time[0].max(0.0).sqrt()),
            deficit: Arc::new(|p| sqrt_deficit(p.time[0])),
            normal_forms: vec![Some(nf)],
        },
        maxset: MaxSet {
            kind: MaxSetKind::FinitePoints,
            dim: 0,
            charts: vec![Chart::point("endpoint", Point::at(1.0), vec![NormalAxis::one_sided(0, -1.0)])],
        },
        sampler: Some(FieldSampler::Scalar { process: ProcessKind::Brownian, scale: None }),
        config: None,
    }
    .validated()
}

fn sphere_kind(sphere_dim: usize) -> MaxSetKind {
    if sphere_dim == 1 {
        MaxSetKind::Circle
    } else {
        MaxSetKind::Sphere(sphere_dim)
    }
}

/// Chart `{t}×S^{k}` with the time axis normal.
fn time_slice_chart(label: &str, t: f64, k: usize, normal: NormalAxis) -> Chart {
    Chart {
        label: label.into(),
        param_box: sphere_param_box(k),
        embed: Arc::new(move |th| Point::on_cylinder(t, sphere_embed(th))),
        volume: Arc::new(sphere_volume_element),
        tangential: (1..=k).collect(),
        normal: vec![normal],
    }
}

fn sphere_part(p: &Point) -> &[f64] {
    p.sphere.as_deref().expect("point on a cylinder domain")
}

struct DualParts {
    time_alpha: f64,
    time_amp: Amplitude,
    time_corr: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deficit: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    t_peak: f64,
    normal: NormalAxis,
    normal_term: PowerTerm,
    process: ProcessKind,
    weight: f64,
}

/// Norm of `d` i.i.d. copies of a process whose standardized variance peaks at `t_peak`.
fn dual_norm_model(id: String, description: &str, d: usize, domain: (f64, f64), parts: DualParts) -> Result<FieldModel> {
    if d < 2 {
        return Err(domain_err(format!("dimension d must be >= 2, got {d}")));
    }
    let k = d - 1;
    let DualParts { time_alpha, time_amp, time_corr, sigma, deficit, t_peak, normal, normal_term, process, weight } = parts;
    let mut alphas = vec![time_alpha];
    alphas.extend(std::iter::repeat_n(2.0, k));
    let mut amplitudes = vec![time_amp];
    amplitudes.extend(std::iter::repeat_n(Amplitude::Const(0.5), k));
    let (sg, df) = (sigma.clone(), deficit.clone());
    FieldModel {
        id,
        description: description.into(),
        domain: Domain::cylinder(domain.0, domain.1, k),
        correlation: CorrelationStructure {
            alphas,
            amplitudes,
            full_correlation: Some(Arc::new(move |p, q| time_corr(p.time[0], q.time[0]) * dot(sphere_part(p), sphere_part(q)))),
        },
        variance: VarianceProfile {
            sigma: Arc::new(move |p| sg(p.time[0])),
            deficit: Arc::new(move |p| df(p.time[0])),
            normal_forms: vec![Some(PowerLawSpec::new(vec![normal_term])?)],
        },
        maxset: MaxSet { kind: sphere_kind(k), dim: k, charts: vec![time_slice_chart("sphere", t_peak, k, normal)] },
        sampler: Some(FieldSampler::Dual { process, weights: vec![weight; d], scales: vec![None; d] }),
        config: None,
    }
    .validated()
}

/// Bessel process `‖W(t)‖` of a d-dimensional Brownian motion, as the field `⟨v, W(t)⟩` on
/// `[0,1]×S^{d-1}`; the maximum set is `{1}×S^{d-1}`.
pub fn make_bessel(d: usize) -> Result<FieldModel> {
    dual_norm_model(
        format!("bessel(d={d})"),
        "norm of a d-dimensional Brownian motion on [0,1]",
        d,
        (0.0, 1.0),
        DualParts {
            time_alpha: 1.0,
            time_amp: Amplitude::Varying(Arc::new(|p| 0.5 / p.time[0])),
            time_corr: Arc::new(|s, t| (s.min(t) / s.max(t)).sqrt()),
            sigma: Arc::new(|t| t.max(0.0).sqrt()),
            deficit: Arc::new(sqrt_deficit),
            t_peak: 1.0,
            normal: NormalAxis::one_sided(0, -1.0),
            normal_term: term(0.5, 1.0, Sidedness::OneSided),
            process: ProcessKind::Brownian,
            weight: 1.0,
        },
    )
}

/// Leading asymptotics `π^{(d-1)/2} / (2^{d/2-1} Γ(d/2)) · u^{d-2} e^{-u²/2}` of `P(sup_{[0,1]} ‖W‖ > u)`
/// as printed for the Bessel example.
pub fn bessel_asym(d: usize, u: f64) -> Result<f64> {
    Ok(bessel_asym_coefficient(d)? * u.powi(d as i32 - 2) * (-0.5 * u * u).exp())
}

pub fn bessel_asym_coefficient(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(domain_err(format!("dimension d must be >= 2, got {d}")));
    }
    let df = d as f64;
    Ok(PI.powf(0.5 * (df - 1.0)) / (2f64.powf(0.5 * df - 1.0) * gamma(0.5 * df)))
}

/// Exact leading asymptotics `2^{2-d/2} / Γ(d/2) · u^{d-2} e^{-u²/2}` of the Bessel supremum,
/// which follows from the Bessel-zero series of the exit time.
pub fn bessel_sup_asym_exact(d: usize, u: f64) -> Result<f64> {
    if d < 2 {
        return Err(domain_err(format!("dimension d must be >= 2, got {d}")));
    }
    let df = d as f64;
    Ok(2f64.powf(2.0 - 0.5 * df) / gamma(0.5 * df) * u.powi(d as i32 - 2) * (-0.5 * u * u).exp())
}

/// Positive zeros of `J_0`, by Newton from McMahon's expansion.
fn bessel_j0_zeros(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let b = PI * (k as f64 - 0.25);
            let mut x = b + 1.0 / (8.0 * b) - 124.0 / (3.0 * (8.0 * b).powi(3));
            for _ in 0..50 {
                let dx = libm::j0(x) / -libm::j1(x);
                x -= dx;
                if dx.abs() < 1e-15 * x {
                    break;
                }
            }
            x
        })
        .collect()
}

/// `P(sup_{[0,1]} ‖W‖ > u)` for a planar Brownian motion, from the exit-time series
/// `P(τ_u > 1) = Σ_k 2/(j_k J_1(j_k)) exp(-j_k²/(2u²))`.
pub fn bessel2_sup_exact(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    let mut survive = 0.0;
    for j in bessel_j0_zeros(400) {
        let term = 2.0 / (j * libm::j1(j)) * (-j * j / (2.0 * u * u)).exp();
        survive += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    (1.0 - survive).clamp(0.0, 1.0)
}

/// Norm of a d-dimensional Brownian bridge on `[margin, 1 - margin]`.
pub fn make_bessel_bridge(d: usize) -> Result<FieldModel> {
    make_bessel_bridge_with_margin(d, 0.05)
}

pub fn make_bessel_bridge_with_margin(d: usize, margin: f64) -> Result<FieldModel> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(domain_err(format!("bridge margin must lie in (0, 1/2), got {margin}")));
    }
    dual_norm_model(
        format!("bessel_bridge(d={d})"),
        "norm of a d-dimensional Brownian bridge",
        d,
        (margin, 1.0 - margin),
        DualParts {
            time_alpha: 1.0,
            time_amp: Amplitude::Varying(Arc::new(|p| {
                let t = p.time[0];
                0.5 / (t * (1.0 - t))
            })),
            time_corr: Arc::new(|s, t| {
                let (s, t) = (s.min(t), s.max(t));
                s * (1.0 - t) / (s * (1.0 - s) * t * (1.0 - t)).sqrt()
            }),
            sigma: Arc::new(|t| 2.0 * (t * (1.0 - t)).max(0.0).sqrt()),
            deficit: Arc::new(|t| {
                let x2 = 4.0 * (t - 0.5).powi(2);
                x2 / (1.0 + (1.0 - x2).max(0.0).sqrt())
            }),
            t_peak: 0.5,
            normal: NormalAxis::two_sided(0),
            normal_term: term(2.0, 2.0, Sidedness::TwoSided),
            process: ProcessKind::Bridge,
            weight: 2.0,
        },
    )
}

/// Norm of a d-dimensional fractional Brownian motion with Hurst index `hurst` on `[0, 1]`.
pub fn make_fractional_bessel(d: usize, hurst: f64) -> Result<FieldModel> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(domain_err(format!("Hurst index must lie in (0,1), got {hurst}")));
    }
    let two_h = 2.0 * hurst;
    dual_norm_model(
        format!("fractional_bessel(d={d},H={hurst})"),
        "norm of a d-dimensional fractional Brownian motion on [0,1]",
        d,
        (0.0, 1.0),
        DualParts {
            time_alpha: two_h,
            time_amp: Amplitude::Varying(Arc::new(move |p| 0.5 / p.time[0].powf(two_h))),
            time_corr: Arc::new(move |s, t| {
                let cov = 0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h));
                cov / (s * t).powf(hurst)
            }),
            sigma: Arc::new(move |t| t.max(0.0).powf(hurst)),
            deficit: Arc::new(move |t| -(hurst * t.max(1e-300).ln()).exp_m1()),
            t_peak: 1.0,
            normal: NormalAxis::one_sided(0, -1.0),
            normal_term: term(hurst, 1.0, Sidedness::OneSided),
            process: ProcessKind::Fbm(hurst),
            weight: 1.0,
        },
    )
}

/// Generalized χ process: `⟨v, (b_i s(t) Y_i(t))⟩` on `[0, length]×S^{d-1}` with independent
/// stationary `Y_i` (correlation `exp(-|τ|^α)`) and a common profile `s` (constant, or `peak`).
///
/// The weights are normalized by their maximum. Equal weights give a maximum set containing the
/// whole sphere; a unique largest weight `b_k` gives the antipodal pair `±e_k`.
pub fn make_chi_square_stationary(weights: &[f64], alpha: f64, length: f64, peak: Option<Peak>) -> Result<FieldModel> {
    check_alpha(alpha)?;
    let d = weights.len();
    if d < 2 {
        return Err(domain_err("chi-square model needs at least two weights"));
    }
    if weights.iter().any(|&b| !(b >= 0.0 && b.is_finite())) {
        return Err(domain_err("weights must be finite and nonnegative"));
    }
    let bmax = weights.iter().cloned().fold(0.0, f64::max);
    if bmax == 0.0 {
        return Err(domain_err("all weights are zero"));
    }
    if weights.iter().any(|&b| b == 0.0) {
        return Err(domain_err("weights must be > 0"));
    }
    if !(length > 0.0) {
        return Err(domain_err("length must be > 0"));
    }
    if let Some(p) = &peak {
        p.check()?;
    }
    let w: Vec<f64> = weights.iter().map(|b| b / bmax).collect();
    let w2: Arc<Vec<f64>> = Arc::new(w.iter().map(|x| x * x).collect());
    let top: Vec<usize> = (0..d).filter(|&i| (w[i] - 1.0).abs() <= 1e-12).collect();
    let all_equal = top.len() == d;
    if !all_equal && top.len() > 1 {
        return Err(domain_err("ties among the largest weights on a proper subset are not supported"));
    }
    let k = d - 1;
    let spread = {
        let w2 = w2.clone();
        move |v: &[f64]| -> f64 { v.iter().zip(w2.iter()).map(|(x, b)| b * x * x).sum() }
    };

    let r_time = stationary_kernel(alpha, 1.0);
    let mut alphas = vec![alpha];
    alphas.extend(std::iter::repeat_n(2.0, k));
    let mut amplitudes = vec![Amplitude::Const(1.0)];
    for m in 0..k {
        let (w2, spread) = (w2.clone(), spread.clone());
        amplitudes.push(Amplitude::Varying(Arc::new(move |p| {
            let v = sphere_part(p);
            let e = &tangent_basis(v)[m];
            0.5 * e.iter().zip(w2.iter()).map(|(x, b)| b * x * x).sum::<f64>() / spread(v)
        })));
    }
    let full: crate::model::PairFn = {
        let (r, w2, spread) = (r_time.clone(), w2.clone(), spread.clone());
        Arc::new(move |p, q| {
            let (v, x) = (sphere_part(p), sphere_part(q));
            let c: f64 = v.iter().zip(x).zip(w2.iter()).map(|((a, b), c)| c * a * b).sum();
            r(p.time[0] - q.time[0]) * c / (spread(v) * spread(x)).sqrt()
        })
    };
    // deficit 1 - s(t)·sqrt(S(v)) = 1 - s + s(1 - sqrt S)
    let sphere_deficit = {
        let spread = spread.clone();
        move |v: &[f64]| {
            let s = spread(v);
            (1.0 - s) / (1.0 + s.sqrt())
        }
    };
    let (sigma, deficit): (PointFn, PointFn) = match peak {
        None => {
            let (sp, sd) = (spread.clone(), sphere_deficit.clone());
            (Arc::new(move |p| sp(sphere_part(p)).sqrt()), Arc::new(move |p| sd(sphere_part(p))))
        }
        Some(pk) => {
            let (sp, sd) = (spread.clone(), sphere_deficit.clone());
            (
                Arc::new(move |p| pk.sigma(p.time[0]) * sp(sphere_part(p)).sqrt()),
                Arc::new(move |p| {
                    let s = pk.sigma(p.time[0]);
                    pk.deficit(p.time[0]) + s * sd(sphere_part(p))
                }),
            )
        }
    };
    let time_normal = match &peak {
        Some(pk) => Some(pk.normal_axis(0.0, length)?),
        None => None,
    };
    let time_term = |pk: &Peak, n: &NormalAxis| term(pk.a, pk.beta, n.sided);

    let (kind, dim, charts, normal_forms) = if all_equal {
        match (&peak, time_normal) {
            (None, _) => {
                let mut pbox = vec![(0.0, length)];
                pbox.extend(sphere_param_box(k));
                let chart = Chart {
                    label: "cylinder".into(),
                    param_box: pbox,
                    embed: Arc::new(|x| Point::on_cylinder(x[0], sphere_embed(&x[1..]))),
                    volume: Arc::new(|x| sphere_volume_element(&x[1..])),
                    tangential: (0..d).collect(),
                    normal: vec![],
                };
                (MaxSetKind::ProductChart, d, vec![chart], vec![None])
            }
            (Some(pk), Some(n)) => {
                let chart = time_slice_chart("sphere", pk.t0, k, n);
                (sphere_kind(k), k, vec![chart], vec![Some(PowerLawSpec::new(vec![time_term(pk, &n)])?)])
            }
            _ => unreachable!(),
        }
    } else {
        let top = top[0];
        // normal sphere axes at ±e_top follow the remaining coordinates in increasing order
        let sphere_terms: Vec<PowerTerm> =
            (0..d).filter(|&i| i != top).map(|i| term(0.5 * (1.0 - w2[i]), 2.0, Sidedness::TwoSided)).collect();
        let sphere_normals: Vec<NormalAxis> = (1..=k).map(NormalAxis::two_sided).collect();
        let mut charts = Vec::new();
        let mut forms = Vec::new();
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[top] = sign;
            let label = format!("{}e{}", if sign > 0.0 { "+" } else { "-" }, top + 1);
            match (&peak, time_normal) {
                (None, _) => {
                    let e = e.clone();
                    charts.push(Chart {
                        label,
                        param_box: vec![(0.0, length)],
                        embed: Arc::new(move |x| Point::on_cylinder(x[0], e.clone())),
                        volume: Arc::new(|_| 1.0),
                        tangential: vec![0],
                        normal: sphere_normals.clone(),
                    });
                    forms.push(Some(PowerLawSpec::new(sphere_terms.clone())?));
                }
                (Some(pk), Some(n)) => {
                    let mut normal = vec![n];
                    normal.extend(sphere_normals.iter().copied());
                    charts.push(Chart::point(label, Point::on_cylinder(pk.t0, e), normal));
                    let mut terms = vec![time_term(pk, &n)];
                    terms.extend(sphere_terms.iter().copied());
                    forms.push(Some(PowerLawSpec::new(terms)?));
                }
                _ => unreachable!(),
            }
        }
        let (kind, dim) = if peak.is_some() { (MaxSetKind::FinitePoints, 0) } else { (MaxSetKind::IntervalCurve, 1) };
        (kind, dim, charts, forms)
    };

    let scales: Vec<Option<ScalarFn>> = match peak {
        None => vec![None; d],
        Some(pk) => vec![Some(Arc::new(move |t| pk.sigma(t)) as ScalarFn); d],
    };
    FieldModel {
        id: format!("chi_square(weights={weights:?},alpha={alpha})"),
        description: "weighted norm of independent stationary coordinates".into(),
        domain: Domain::cylinder(0.0, length, k),
        correlation: CorrelationStructure { alphas, amplitudes, full_correlation: Some(full) },
        variance: VarianceProfile { sigma, deficit, normal_forms },
        maxset: MaxSet { kind, dim, charts },
        sampler: Some(FieldSampler::Dual { process: ProcessKind::Stationary(r_time), weights: w, scales }),
        config: None,
    }
    .validated()
}

/// Generalized χ process with constant coordinate variances.
pub fn make_chi_square(weights: &[f64]) -> Result<FieldModel> {
    make_chi_square_stationary(weights, 1.0, 1.0, None)
}

/// `P(sup_{[0,1]} W > u) = 2(1 - Φ(u))` by reflection.
pub fn brownian_sup_exact(u: f64) -> f64 {
    if u <= 0.0 {
        1.0
    } else {
        2.0 * gauss_tail(u)
    }
}

/// Built-in recipe with optional closed-form references.
#[derive(Clone)]
pub struct ModelRecipe {
    pub id: &'static str,
    pub description: &'static str,
    pub config: ModelConfig,
    /// Closed-form leading asymptotics, when the model has one.
    pub reference_asymptotic: Option<fn(f64) -> f64>,
    /// Exact exceedance probability, when known.
    pub oracle: Option<fn(f64) -> f64>,
}

fn ou_reference(u: f64) -> f64 {
    u * u * psi(u).unwrap_or(f64::NAN)
}
fn two_psi(u: f64) -> f64 {
    2.0 * psi(u).unwrap_or(f64::NAN)
}
fn one_psi(u: f64) -> f64 {
    psi(u).unwrap_or(f64::NAN)
}
fn sqrt_pi_u_psi(u: f64) -> f64 {
    PI.sqrt() * u * psi(u).unwrap_or(f64::NAN)
}
fn bessel2_reference(u: f64) -> f64 {
    bessel_asym(2, u).unwrap_or(f64::NAN)
}
fn bessel3_reference(u: f64) -> f64 {
    bessel_asym(3, u).unwrap_or(f64::NAN)
}

pub fn recipes() -> Vec<ModelRecipe> {
    vec![
        ModelRecipe {
            id: "ou",
            description: "Ornstein-Uhlenbeck type stationary field on [0,1], alpha=1",
            config: ModelConfig::Ou { a: 1.0, length: 1.0 },
            reference_asymptotic: Some(ou_reference),
            oracle: None,
        },
        ModelRecipe {
            id: "brownian",
            description: "Brownian motion on [0,1], variance maximal at the endpoint",
            config: ModelConfig::Brownian {},
            reference_asymptotic: Some(two_psi),
            oracle: Some(brownian_sup_exact),
        },
        ModelRecipe {
            id: "bessel2",
            description: "planar Bessel process on [0,1]",
            config: ModelConfig::Bessel { d: 2 },
            reference_asymptotic: Some(bessel2_reference),
            oracle: Some(bessel2_sup_exact),
        },
        ModelRecipe {
            id: "bessel3",
            description: "three-dimensional Bessel process on [0,1]",
            config: ModelConfig::Bessel { d: 3 },
            reference_asymptotic: Some(bessel3_reference),
            oracle: None,
        },
        ModelRecipe {
            id: "bessel_bridge2",
            description: "planar Bessel bridge on [0.05,0.95]",
            config: ModelConfig::BesselBridge { d: 2, margin: 0.05 },
            reference_asymptotic: None,
            oracle: None,
        },
        ModelRecipe {
            id: "fractional_bessel2",
            description: "planar fractional Bessel process, H=0.75",
            config: ModelConfig::FractionalBessel { d: 2, hurst: 0.75 },
            reference_asymptotic: None,
            oracle: None,
        },
        ModelRecipe {
            id: "chi_square_equal",
            description: "chi process with equal weights (1,1), homogeneous on the cylinder",
            config: ModelConfig::ChiSquare { weights: vec![1.0, 1.0], alpha: 1.0, length: 1.0, peak_a: None, peak_beta: None, peak_t0: None },
            reference_asymptotic: None,
            oracle: None,
        },
        ModelRecipe {
            id: "chi_square_two_point",
            description: "chi process with weights (2,1) and a common variance peak",
            config: ModelConfig::ChiSquare {
                weights: vec![2.0, 1.0],
                alpha: 1.0,
                length: 1.0,
                peak_a: Some(1.0),
                peak_beta: Some(2.0),
                peak_t0: Some(0.5),
            },
            reference_asymptotic: None,
            oracle: None,
        },
        ModelRecipe {
            id: "power_stationary_like",
            description: "power family alpha=1, beta=2 (variance flatter than correlation)",
            config: ModelConfig::Power { alpha: 1.0, beta: 2.0, a: 1.0, t0: 0.5, boundary: false },
            reference_asymptotic: Some(sqrt_pi_u_psi),
            oracle: None,
        },
        ModelRecipe {
            id: "power_transition",
            description: "power family alpha=1, beta=1",
            config: ModelConfig::Power { alpha: 1.0, beta: 1.0, a: 1.0, t0: 0.5, boundary: false },
            reference_asymptotic: None,
            oracle: None,
        },
        ModelRecipe {
            id: "power_talagrand",
            description: "power family alpha=2, beta=1 (variance sharper than correlation)",
            config: ModelConfig::Power { alpha: 2.0, beta: 1.0, a: 1.0, t0: 0.5, boundary: false },
            reference_asymptotic: Some(one_psi),
            oracle: None,
        },
        ModelRecipe {
            id: "two_point",
            description: "two sharp variance peaks with correlation 0.9 between them",
            config: ModelConfig::TwoPoint {
                alpha: TWO_POINT_DEFAULTS.alpha,
                beta: TWO_POINT_DEFAULTS.beta,
                a: TWO_POINT_DEFAULTS.a,
                separation: TWO_POINT_DEFAULTS.separation,
                corr_scale: TWO_POINT_DEFAULTS.corr_scale,
            },
            reference_asymptotic: Some(two_psi),
            oracle: None,
        },
    ]
}

pub fn recipe(id: &str) -> Option<ModelRecipe> {
    recipes().into_iter().find(|r| r.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bessel_coefficients() {
        assert_relative_eq!(bessel_asym_coefficient(2).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(bessel_asym_coefficient(3).unwrap(), (2.0 * PI).sqrt(), max_relative = 1e-14);
        assert!(bessel_asym(1, 3.0).is_err());
    }

    #[test]
    fn j0_zeros() {
        let z = bessel_j0_zeros(3);
        assert_relative_eq!(z[0], 2.404825557695773, max_relative = 1e-13);
        assert_relative_eq!(z[1], 5.520078110286311, max_relative = 1e-13);
        assert_relative_eq!(z[2], 8.653727912911013, max_relative = 1e-13);
    }

    #[test]
    fn brownian_oracle() {
        assert_relative_eq!(brownian_sup_exact(2.0), 0.0455002638963584, max_relative = 1e-12);
        assert_eq!(brownian_sup_exact(0.0), 1.0);
    }

    #[test]
    fn recipes_build() {
        for r in recipes() {
            crate::model::build_model(&r.config).unwrap_or_else(|e| panic!("{}: {e}", r.id));
        }
    }
}
