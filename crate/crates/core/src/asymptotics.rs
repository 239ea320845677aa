//! Assembly of exceedance asymptotics `P(sup X > u) ≈ Σ_i K_i·L_i(u)·u^{ρ_i}·Ψ(u)`.
//!
//! Every chart of the maximum set is one component. Along the chart the integrand is the product
//! of per-axis factors:
//! - tangential axis: `H_α·C^{-1}q^{-1}`, the number of local windows per unit length;
//! - normal axis with zero drift limit: `H_α·C^{-1}q^{-1}` times the one-dimensional Laplace
//!   integral of `e^{-u²(1-σ)}` across the set;
//! - normal axis with finite limit: the saturated Piterbarg constant of the scaled drift;
//! - normal axis with infinite limit: 1.
//!
//! Power-law inputs make each factor an exact power of `u`, so a component is `K·u^ρ`; a normal
//! axis without a power-law form falls back to a numeric Laplace residual evaluated per `u`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::constants::{ConstantEstimate, ConstantsProvider, H1Form, NormalWindow};
use crate::error::{Error, Result};
use crate::model::{
    classify_regime, AxisClass, Chart, FieldModel, MaxSet, NormalAxis, Point, ProbePlan, Regime, RegimeTag,
};
use crate::specfun::{gamma, gauss_legendre, laplace_numeric, laplace_powerlaw_asym, psi, PowerLawSpec, PowerTerm, Sidedness};

/// Relative change allowed when the quadrature order doubles.
pub const QUAD_TOL: f64 = 1e-8;
/// Ratio by which the dominant component must exceed each other one.
pub const DOMINANCE_RATIO: f64 = 10.0;
/// Two-sided normal quantile used for the uncertainty band.
const BAND_Z: f64 = 1.959963984540054;

pub type SlowFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// One summand `K·L(u)·u^ρ·(log u)^κ·Ψ(u)`.
#[derive(Clone)]
pub struct Component {
    pub label: String,
    pub chart: Option<usize>,
    pub regime: RegimeTag,
    pub constant: f64,
    /// Relative standard error of `constant` from Monte Carlo constants.
    pub rel_err: f64,
    pub u_exponent: f64,
    pub log_exponent: f64,
    /// Numeric residual factor, when some factor is not an exact power.
    pub slow: Option<SlowFn>,
}

impl Component {
    /// The summand without the `Ψ(u)` factor.
    pub fn prefactor(&self, u: f64) -> Result<f64> {
        let mut v = self.constant * u.powf(self.u_exponent);
        if self.log_exponent != 0.0 {
            v *= u.ln().powf(self.log_exponent);
        }
        if let Some(s) = &self.slow {
            v *= s(u)?;
        }
        Ok(v)
    }

    pub fn evaluate(&self, u: f64) -> Result<f64> {
        Ok(self.prefactor(u)? * psi(u)?)
    }
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Component")
            .field("label", &self.label)
            .field("regime", &self.regime)
            .field("constant", &self.constant)
            .field("rel_err", &self.rel_err)
            .field("u_exponent", &self.u_exponent)
            .field("slow", &self.slow.is_some())
            .finish()
    }
}

/// Asymptotic approximation with its components and the constants that entered it.
#[derive(Debug, Clone)]
pub struct AsymptoticResult {
    pub regime: RegimeTag,
    pub components: Vec<Component>,
    pub dominant: usize,
    /// Smallest `u` beyond which the dominant component exceeds every other by 10×, scanned on
    /// `[1, 10⁶]`; `None` when it never does there. Always `Some(1)` for a single component.
    pub dominance_threshold: Option<f64>,
    pub constants: BTreeMap<String, ConstantEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentRecord {
    pub label: String,
    pub regime: RegimeTag,
    pub constant: f64,
    pub rel_err: f64,
    pub u_exponent: f64,
    pub numeric_residual: bool,
}

impl AsymptoticResult {
    fn from_components(regime: RegimeTag, components: Vec<Component>, constants: BTreeMap<String, ConstantEstimate>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Partition("no components".into()));
        }
        let mut dominant = 0;
        for (i, c) in components.iter().enumerate() {
            let d = &components[dominant];
            if c.u_exponent > d.u_exponent + 1e-12
                || ((c.u_exponent - d.u_exponent).abs() <= 1e-12 && c.constant > d.constant)
            {
                dominant = i;
            }
        }
        let mut r = Self { regime, components, dominant, dominance_threshold: None, constants };
        r.dominance_threshold = r.scan_dominance()?;
        Ok(r)
    }

    fn scan_dominance(&self) -> Result<Option<f64>> {
        if self.components.len() == 1 {
            return Ok(Some(1.0));
        }
        let ladder: Vec<f64> = (0..=240).map(|k| 10f64.powf(k as f64 / 40.0)).collect();
        let mut first_ok: Option<f64> = None;
        for &u in &ladder {
            let d = self.components[self.dominant].prefactor(u)?;
            let mut ok = true;
            for (i, c) in self.components.iter().enumerate() {
                if i != self.dominant && d < DOMINANCE_RATIO * c.prefactor(u)? {
                    ok = false;
                }
            }
            if ok {
                first_ok.get_or_insert(u);
            } else {
                first_ok = None;
            }
        }
        Ok(first_ok)
    }

    /// Exponent of the dominant order.
    pub fn u_exponent(&self) -> f64 {
        self.components[self.dominant].u_exponent
    }

    /// Sum of the constants of all components of the dominant order.
    pub fn leading_constant(&self) -> f64 {
        let rho = self.u_exponent();
        self.components.iter().filter(|c| (c.u_exponent - rho).abs() <= 1e-12).map(|c| c.constant).sum()
    }

    pub fn evaluate(&self, u: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.components {
            s += c.evaluate(u)?;
        }
        Ok(s)
    }

    /// Per-component values at `u`.
    pub fn evaluate_components(&self, u: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(u)).collect()
    }

    /// 95% band from the Monte Carlo error of the constants.
    pub fn band(&self, u: f64) -> Result<(f64, f64)> {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for c in &self.components {
            let v = c.evaluate(u)?;
            lo += v * (1.0 - BAND_Z * c.rel_err).max(0.0);
            hi += v * (1.0 + BAND_Z * c.rel_err);
        }
        Ok((lo, hi))
    }

    /// `P(u) ≈ K·u^ρ·Ψ(u) + …`.
    pub fn formula(&self) -> String {
        let terms: Vec<String> = self
            .components
            .iter()
            .map(|c| {
                let mut s = format!("{:.3}·u^{:.3}", c.constant, c.u_exponent);
                if c.log_exponent != 0.0 {
                    s.push_str(&format!("·(log u)^{:.3}", c.log_exponent));
                }
                if c.slow.is_some() {
                    s.push_str("·L(u)");
                }
                s.push_str("·Ψ(u)");
                s
            })
            .collect();
        format!("P(u) ≈ {}", terms.join(" + "))
    }

    pub fn records(&self) -> Vec<ComponentRecord> {
        self.components
            .iter()
            .map(|c| ComponentRecord {
                label: c.label.clone(),
                regime: c.regime,
                constant: c.constant,
                rel_err: c.rel_err,
                u_exponent: c.u_exponent,
                numeric_residual: c.slow.is_some(),
            })
            .collect()
    }
}

/// `∫_chart g(x)·vol(x) dx` by tensor Gauss–Legendre of order `n`.
fn chart_rule<G: Fn(&[f64]) -> Result<f64>>(chart: &Chart, n: usize, g: &G) -> Result<f64> {
    let r = chart.dim();
    if r == 0 {
        return g(&[]);
    }
    let (x, w) = gauss_legendre(n);
    let mut idx = vec![0usize; r];
    let mut total = 0.0;
    let mut param = vec![0.0; r];
    loop {
        let mut weight = 1.0;
        for (k, &(a, b)) in chart.param_box.iter().enumerate() {
            let h = 0.5 * (b - a);
            param[k] = a + h * (1.0 + x[idx[k]]);
            weight *= h * w[idx[k]];
        }
        total += weight * (chart.volume)(&param) * g(&param)?;
        let mut k = 0;
        while k < r {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == r {
            return Ok(total);
        }
    }
}

/// Chart integral with order doubling until the relative change is below [`QUAD_TOL`].
fn chart_integral<G: Fn(&[f64]) -> Result<f64>>(chart: &Chart, g: &G) -> Result<std::result::Result<f64, f64>> {
    let r = chart.dim();
    if r == 0 {
        return Ok(Ok(g(&[])?));
    }
    let max_nodes: usize = 1 << 20;
    let mut n = 8;
    let mut prev = chart_rule(chart, n, g)?;
    loop {
        let next_n = 2 * n;
        if next_n.pow(r as u32) > max_nodes {
            let resid = (prev - chart_rule(chart, n / 2, g)?).abs() / prev.abs().max(f64::MIN_POSITIVE);
            return Ok(Err(resid));
        }
        let next = chart_rule(chart, next_n, g)?;
        let resid = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        if resid < QUAD_TOL {
            return Ok(Ok(next));
        }
        prev = next;
        n = next_n;
    }
}

/// `∫_M g dt` over all charts, each with its volume element.
pub fn maxset_integral<G: Fn(&Point) -> f64>(maxset: &MaxSet, g: G) -> Result<f64> {
    let mut total = 0.0;
    let mut failures = Vec::new();
    for (ci, chart) in maxset.charts.iter().enumerate() {
        let h = |x: &[f64]| -> Result<f64> {
            let p = (chart.embed)(x);
            let v = g(&p);
            if !v.is_finite() {
                return Err(Error::Evaluation { point: p.coords(), value: v });
            }
            Ok(v)
        };
        match chart_integral(chart, &h)? {
            Ok(v) => total += v,
            Err(resid) => failures.push(format!("chart {ci} ({}): residual {resid:e}", chart.label)),
        }
    }
    if failures.is_empty() {
        Ok(total)
    } else {
        Err(Error::Quadrature(failures.join("; ")))
    }
}

/// `2γ/u + 2 log²u / u²`.
pub fn informative_width(u: f64, gamma_value: f64) -> Result<f64> {
    if !(u > 1.0) || !(gamma_value >= 0.0) {
        return Err(Error::Domain(format!("informative width needs u > 1 and γ ≥ 0, got u = {u}, γ = {gamma_value}")));
    }
    Ok(2.0 * gamma_value / u + 2.0 * u.ln().powi(2) / (u * u))
}

/// Default `γ(u) = 1/log u` of the truncation diagnostic.
pub fn default_gamma(u: f64) -> f64 {
    1.0 / u.ln()
}

/// Constants collected while assembling.
struct Ledger<'a> {
    provider: &'a ConstantsProvider,
    used: BTreeMap<String, ConstantEstimate>,
}

impl<'a> Ledger<'a> {
    fn pickands(&mut self, alpha: f64) -> Result<f64> {
        let e = self.provider.pickands(alpha)?;
        let v = e.value;
        self.used.insert(format!("H(alpha={alpha})"), e);
        Ok(v)
    }

    fn piterbarg(&mut self, nw: &NormalWindow) -> Result<f64> {
        let e = self.provider.piterbarg(nw)?;
        let v = e.value;
        self.used.insert(format!("P(alpha={}, h1={:?}, {:?})", nw.alpha, nw.h1, nw.sided), e);
        Ok(v)
    }

    /// Relative error of the product of the named constants.
    fn rel_err(&self, keys: &[String]) -> f64 {
        keys.iter().filter_map(|k| self.used.get(k)).map(|e| e.rel_err().powi(2)).sum::<f64>().sqrt()
    }
}

/// Per-axis plan for one chart.
enum AxisPlan {
    Tangential { axis: usize },
    Laplace { axis: usize, term: Option<PowerTerm>, normal: NormalAxis },
    Piterbarg { window: NormalWindow },
    Unit,
}

fn sided_h1(n: &NormalAxis, minus: f64, plus: f64, exponent: f64) -> H1Form {
    match n.sided {
        Sidedness::TwoSided => H1Form::Power { minus, plus, exponent },
        Sidedness::OneSided => {
            let b = if n.inward > 0.0 { plus } else { minus };
            H1Form::Power { minus: b, plus: b, exponent }
        }
    }
}

/// Drift coefficient of a finite-limit axis in window coordinates: `b/A` from the power-law
/// form when its exponent matches `α`, otherwise the probed limit.
fn finite_drift(model: &FieldModel, ci: usize, j: usize, n: &NormalAxis, probed: (Option<f64>, Option<f64>), at: &Point) -> Result<H1Form> {
    let alpha = model.correlation.alphas[n.axis];
    if let Some(t) = model.normal_form(ci).and_then(|nf| nf.terms().get(j)) {
        if (t.exponent - alpha).abs() < 1e-12 {
            let b = t.coeff / model.correlation.amplitudes[n.axis].at(at);
            return Ok(sided_h1(n, b, b, alpha));
        }
    }
    let (minus, plus) = probed;
    let pick = |x: Option<f64>, y: Option<f64>| x.or(y).ok_or_else(|| Error::Regime("finite limit without a value".into()));
    let m = pick(minus, plus)?;
    let p = pick(plus, minus)?;
    Ok(sided_h1(n, m, p, alpha))
}

fn chart_plans(model: &FieldModel, ci: usize, classes: &[AxisClass]) -> Result<Vec<AxisPlan>> {
    let chart = &model.maxset.charts[ci];
    let at = (chart.embed)(&chart.center());
    let mut plans: Vec<AxisPlan> = chart.tangential.iter().map(|&axis| AxisPlan::Tangential { axis }).collect();
    for (j, (n, class)) in chart.normal.iter().zip(classes).enumerate() {
        plans.push(match class {
            AxisClass::Zero => AxisPlan::Laplace {
                axis: n.axis,
                term: model.normal_form(ci).and_then(|nf| nf.terms().get(j).copied()),
                normal: *n,
            },
            AxisClass::Finite { minus, plus } => {
                let h1 = finite_drift(model, ci, j, n, (*minus, *plus), &at)?;
                let sided = n.sided;
                AxisPlan::Piterbarg { window: NormalWindow::new(model.correlation.alphas[n.axis], h1, sided) }
            }
            AxisClass::Infinite => AxisPlan::Unit,
        });
    }
    Ok(plans)
}

/// Numeric `∫ e^{-λ(1-σ)}` across the set along one normal axis at `p`.
fn numeric_laplace(model: &FieldModel, p: &Point, n: &NormalAxis, lambda: f64) -> Result<f64> {
    let d = model.dim();
    let width = model.domain.time.get(n.axis).map(|(a, b)| b - a).unwrap_or(std::f64::consts::PI);
    let reach = (40.0 / lambda).sqrt().min(width);
    let f = |s: &[f64]| {
        let mut off = vec![0.0; d];
        off[n.axis] = s[0];
        let q = p.offset(&off);
        if model.domain.contains(&q, 0.0) {
            model.deficit(&q)
        } else {
            f64::INFINITY
        }
    };
    let bx: Vec<(f64, f64)> = match n.sided {
        Sidedness::TwoSided => vec![(-reach, reach)],
        Sidedness::OneSided if n.inward > 0.0 => vec![(0.0, reach)],
        Sidedness::OneSided => vec![(-reach, 0.0)],
    };
    // outside the domain the integrand vanishes
    let g = |s: &[f64]| {
        let v = f(s);
        if v.is_finite() {
            v
        } else {
            1e300
        }
    };
    Ok(laplace_numeric(g, &bx, lambda)?.value)
}

/// One component per chart, from the per-axis plans.
fn assemble_chart(model: &FieldModel, ci: usize, classes: &[AxisClass], ledger: &mut Ledger) -> Result<Component> {
    let chart = &model.maxset.charts[ci];
    let plans = chart_plans(model, ci, classes)?;
    let corr = &model.correlation;
    let mut rho = 0.0;
    let mut keys = Vec::new();
    let mut consts = 1.0;
    let mut numeric_axes: Vec<NormalAxis> = Vec::new();
    let mut point_factors: Vec<(usize, f64)> = Vec::new(); // (axis, 1/α) amplitude powers
    let mut piterbarg_axes = Vec::new();
    for plan in &plans {
        match plan {
            AxisPlan::Tangential { axis } => {
                let a = corr.alphas[*axis];
                consts *= ledger.pickands(a)?;
                keys.push(format!("H(alpha={a})"));
                rho += 2.0 / a;
                point_factors.push((*axis, 1.0 / a));
            }
            AxisPlan::Laplace { axis, term, normal } => {
                let a = corr.alphas[*axis];
                consts *= ledger.pickands(a)?;
                keys.push(format!("H(alpha={a})"));
                rho += 2.0 / a;
                point_factors.push((*axis, 1.0 / a));
                match term {
                    Some(t) => {
                        let spec = PowerLawSpec::new(vec![*t])?;
                        consts *= laplace_powerlaw_asym(&spec, 1.0)?;
                        rho -= 2.0 / t.exponent;
                    }
                    None => numeric_axes.push(*normal),
                }
            }
            AxisPlan::Piterbarg { window, .. } => {
                let v = ledger.piterbarg(window).map_err(|e| Error::Constant {
                    location: format!("chart {ci} ({})", chart.label),
                    source: Box::new(e),
                })?;
                consts *= v;
                keys.push(format!("P(alpha={}, h1={:?}, {:?})", window.alpha, window.h1, window.sided));
                piterbarg_axes.push(window.clone());
            }
            AxisPlan::Unit => {}
        }
    }
    let amp = |p: &Point| -> f64 { point_factors.iter().map(|&(i, e)| corr.amplitudes[i].at(p).powf(e)).product() };
    let rel_err = ledger.rel_err(&keys);
    let tag = crate::model::regime::tag_for(classes);
    let label = format!("{} [{}]", chart.label, tag);
    if numeric_axes.is_empty() {
        let integral = chart_integral(chart, &|x: &[f64]| Ok(amp(&(chart.embed)(x))))?
            .map_err(|r| Error::Quadrature(format!("chart {ci} ({}): residual {r:e}", chart.label)))?;
        return Ok(Component {
            label,
            chart: Some(ci),
            regime: tag,
            constant: consts * integral,
            rel_err,
            u_exponent: rho,
            log_exponent: 0.0,
            slow: None,
        });
    }
    // a normal axis without a power-law form: integrate the numeric Laplace factor per u
    let model = model.clone();
    let chart_c = chart.clone();
    let amps = point_factors.clone();
    let slow: SlowFn = Arc::new(move |u: f64| {
        let lambda = u * u;
        let g = |x: &[f64]| -> Result<f64> {
            let p = (chart_c.embed)(x);
            let mut v: f64 = amps.iter().map(|&(i, e)| model.correlation.amplitudes[i].at(&p).powf(e)).product();
            for n in &numeric_axes {
                v *= numeric_laplace(&model, &p, n, lambda)?;
            }
            Ok(v)
        };
        chart_integral(&chart_c, &g)?.map_err(|r| Error::Quadrature(format!("chart {}: residual {r:e}", chart_c.label)))
    });
    Ok(Component { label, chart: Some(ci), regime: tag, constant: consts, rel_err, u_exponent: rho, log_exponent: 0.0, slow: Some(slow) })
}

fn check_partition(model: &FieldModel) -> Result<()> {
    let centers: Vec<Point> = model.maxset.charts.iter().map(|c| (c.embed)(&c.center())).collect();
    for i in 0..centers.len() {
        for j in 0..i {
            let (a, b) = (centers[i].coords(), centers[j].coords());
            if a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9) {
                return Err(Error::Partition(format!(
                    "charts {j} ({}) and {i} ({}) overlap",
                    model.maxset.charts[j].label, model.maxset.charts[i].label
                )));
            }
        }
    }
    Ok(())
}

fn assemble(model: &FieldModel, regime: &Regime, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    check_partition(model)?;
    let mut ledger = Ledger { provider, used: BTreeMap::new() };
    let mut comps = Vec::new();
    for cr in &regime.charts {
        comps.push(assemble_chart(model, cr.chart, &cr.axes, &mut ledger)?);
    }
    AsymptoticResult::from_components(regime.tag, comps, ledger.used)
}

/// Classify with the default probe plan.
pub fn classify(model: &FieldModel) -> Result<Regime> {
    classify_regime(model, &ProbePlan::default_for(model))
}

fn require(regime: &Regime, tag: RegimeTag) -> Result<()> {
    if regime.tag == tag {
        Ok(())
    } else {
        Err(Error::Regime(format!("model is in the {} regime, not {}", regime.tag, tag)))
    }
}

/// Locally homogeneous case: σ ≡ 1 on a full-dimensional maximum set.
pub fn asym_locally_homogeneous(model: &FieldModel, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    for c in &model.maxset.charts {
        if !c.normal.is_empty() {
            return Err(Error::Regime(format!("σ is not identically 1 around chart {}", c.label)));
        }
    }
    let regime = Regime {
        tag: RegimeTag::StationaryLike,
        charts: (0..model.maxset.charts.len()).map(|chart| crate::model::regime::ChartRegime { chart, axes: vec![] }).collect(),
        evidence: vec![],
    };
    assemble(model, &regime, provider)
}

pub fn asym_stationary_like(model: &FieldModel, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    let regime = classify(model)?;
    require(&regime, RegimeTag::StationaryLike)?;
    assemble(model, &regime, provider)
}

pub fn asym_talagrand(model: &FieldModel, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    let regime = classify(model)?;
    require(&regime, RegimeTag::Talagrand)?;
    assemble(model, &regime, provider)
}

pub fn asym_transition(model: &FieldModel, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    let regime = classify(model)?;
    require(&regime, RegimeTag::Transition)?;
    assemble(model, &regime, provider)
}

/// Any regime: each chart contributes its own summand.
pub fn asym_general(model: &FieldModel, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    let regime = classify(model)?;
    assemble(model, &regime, provider)
}

/// As [`asym_general`] with a precomputed classification.
pub fn asym_with_regime(model: &FieldModel, regime: &Regime, provider: &ConstantsProvider) -> Result<AsymptoticResult> {
    assemble(model, regime, provider)
}

/// The three one-dimensional closed forms for `σ = 1/(1 + a|t - t0|^β)` and `r = e^{-|τ|^α}`.
pub fn trichotomy_1d(
    a: f64,
    beta: f64,
    alpha: f64,
    interval: (f64, f64),
    t0: f64,
    boundary: bool,
    provider: &ConstantsProvider,
) -> Result<AsymptoticResult> {
    if !(a > 0.0 && beta > 0.0 && alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("need a > 0, β > 0, α in (0, 2]; got a = {a}, β = {beta}, α = {alpha}")));
    }
    if !(t0 >= interval.0 && t0 <= interval.1) {
        return Err(Error::Domain(format!("t0 = {t0} outside [{}, {}]", interval.0, interval.1)));
    }
    let sided = if boundary { Sidedness::OneSided } else { Sidedness::TwoSided };
    let mut used = BTreeMap::new();
    let (tag, constant, rho, rel_err) = if beta > alpha {
        let h = provider.pickands(alpha)?;
        let k = sided.factor() * h.value * gamma(1.0 + 1.0 / beta) * a.powf(-1.0 / beta);
        let rel = h.rel_err();
        used.insert(format!("H(alpha={alpha})"), h);
        (RegimeTag::StationaryLike, k, 2.0 / alpha - 2.0 / beta, rel)
    } else if beta == alpha {
        let nw = NormalWindow::new(alpha, H1Form::power(a, alpha), sided);
        let p = provider.piterbarg(&nw)?;
        let (v, rel) = (p.value, p.rel_err());
        used.insert(format!("P(alpha={alpha}, h1={:?}, {sided:?})", nw.h1), p);
        (RegimeTag::Transition, v, 0.0, rel)
    } else {
        (RegimeTag::Talagrand, 1.0, 0.0, 0.0)
    };
    let comp = Component {
        label: format!("t0={t0} [{tag}]"),
        chart: None,
        regime: tag,
        constant,
        rel_err,
        u_exponent: rho,
        log_exponent: 0.0,
        slow: None,
    };
    AsymptoticResult::from_components(tag, vec![comp], used)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_formula() {
        assert!((informative_width(std::f64::consts::E, 0.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((informative_width(10.0, 1.0).unwrap() - (0.2 + 0.02 * 10f64.ln().powi(2))).abs() < 1e-15);
        assert!(informative_width(1.0, 0.0).is_err());
        assert!(informative_width(1e8, 0.1).unwrap() < 1e-8);
    }
}
