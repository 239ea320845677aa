//! Regime classification from the limit of `u²(1 - σ)` along scaled normal directions.

use serde::{Deserialize, Serialize};

use super::{Chart, FieldModel, Point};
use crate::error::{Error, Result};

/// Slope band separating the zero / finite / infinite limits.
pub const SLOPE_BAND: f64 = 0.1;
/// Largest log-residual of the slope fit before a ladder counts as erratic.
const MAX_RESIDUAL: f64 = 0.5;

/// Default ladder: five points over two decades.
pub fn default_ladder() -> Vec<f64> {
    (0..5).map(|k| 10f64.powf(1.0 + 0.5 * k as f64)).collect()
}

/// `h(s) = Σ |s_i|^{α_i}`.
pub fn h_eval(model: &FieldModel, s: &[f64]) -> f64 {
    model.correlation.alphas.iter().zip(s).map(|(a, x)| x.abs().powf(*a)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class", content = "value")]
pub enum LimitClass {
    Zero,
    Finite(f64),
    Infinite,
}

/// Evaluations of `g(u) = u²(1 - σ(t + C_t q(u) s))` on a ladder, with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProbe {
    pub ladder: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub class: std::result::Result<LimitClass, String>,
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 4 {
        return Err(Error::Domain(format!("u ladder needs at least 4 points, got {}", ladder.len())));
    }
    if ladder.windows(2).any(|w| !(w[1] > w[0])) || ladder[0] <= 0.0 {
        return Err(Error::Domain("u ladder must be positive and strictly increasing".into()));
    }
    if ladder[ladder.len() - 1] / ladder[0] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Domain("u ladder must span at least two decades".into()));
    }
    Ok(())
}

/// Least-squares slope and largest absolute residual of `y` against `x`.
pub(crate) fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).abs()).fold(0.0, f64::max);
    (slope, resid)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Probe the limit of `u²(1 - σ)` at `t` along the local direction `s`.
pub fn probe_limit(model: &FieldModel, t: &Point, s: &[f64], ladder: &[f64]) -> Result<LimitProbe> {
    check_ladder(ladder)?;
    let d = model.dim();
    if s.len() != d {
        return Err(Error::Shape(format!("direction has {} coordinates, model dimension is {d}", s.len())));
    }
    let corr = &model.correlation;
    let mut values = Vec::with_capacity(ladder.len());
    for &u in ladder {
        let off: Vec<f64> = (0..d).map(|i| corr.c(i, t) * corr.q(i, u) * s[i]).collect();
        let p = t.offset(&off);
        let def = model.deficit(&p);
        let g = u * u * def;
        if !g.is_finite() {
            return Err(Error::Evaluation { point: p.coords(), value: def });
        }
        values.push(g);
    }
    let ladder = ladder.to_vec();
    let tiny = 1e-300;
    if values.iter().all(|&g| g.abs() <= tiny) {
        return Ok(LimitProbe { ladder, values, slope: f64::NEG_INFINITY, class: Ok(LimitClass::Zero) });
    }
    if values.iter().any(|&g| g <= tiny) {
        let msg = format!("u²(1-σ) changes sign or vanishes intermittently: {values:?}");
        return Ok(LimitProbe { ladder, values, slope: f64::NAN, class: Err(msg) });
    }
    let lx: Vec<f64> = ladder.iter().map(|u| u.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|g| g.ln()).collect();
    let (slope, resid) = fit_slope(&lx, &ly);
    let class = if resid > MAX_RESIDUAL {
        Err(format!("erratic ladder (log residual {resid:.3}, slope {slope:.3})"))
    } else if slope < -SLOPE_BAND {
        Ok(LimitClass::Zero)
    } else if slope > SLOPE_BAND {
        Ok(LimitClass::Infinite)
    } else {
        let tail = values[values.len() / 2..].to_vec();
        Ok(LimitClass::Finite(median(tail)))
    };
    Ok(LimitProbe { ladder, values, slope, class })
}

/// Classify `lim u²(1 - σ(t + C_t q(u) s))` as zero, finite or infinite.
pub fn h1_limit(model: &FieldModel, t: &Point, s: &[f64], ladder: &[f64]) -> Result<LimitClass> {
    let probe = probe_limit(model, t, s, ladder)?;
    probe.class.map_err(|m| Error::Inconclusive(vec![format!("at {:?} along {s:?}: {m}", t.coords())]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    StationaryLike,
    Transition,
    Talagrand,
    Mixed,
}

/// Class of one normal axis of one chart. `Finite` carries the limit `b` in `h₁(s) = b|s|^{α}`
/// on the negative and positive side (equal for symmetric profiles; a one-sided axis fills the
/// inward side only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisClass {
    Zero,
    Finite { minus: Option<f64>, plus: Option<f64> },
    Infinite,
}

impl AxisClass {
    fn rank(&self) -> u8 {
        match self {
            AxisClass::Zero => 0,
            AxisClass::Finite { .. } => 1,
            AxisClass::Infinite => 2,
        }
    }
}

/// One probe of a plan: chart node and normal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub chart: usize,
    pub param: Vec<f64>,
    /// Index into the chart's normal axes.
    pub normal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbePlan {
    pub ladder: Vec<f64>,
    pub probes: Vec<Probe>,
}

impl ProbePlan {
    /// Every normal axis at the chart center and near each chart face.
    pub fn default_for(model: &FieldModel) -> Self {
        let mut probes = Vec::new();
        for (ci, chart) in model.maxset.charts.iter().enumerate() {
            for param in chart.probe_nodes() {
                for ni in 0..chart.normal.len() {
                    probes.push(Probe { chart: ci, param: param.clone(), normal: ni });
                }
            }
        }
        Self { ladder: default_ladder(), probes }
    }
}

/// Evidence for one probe direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub chart: usize,
    pub param: Vec<f64>,
    pub axis: usize,
    pub direction: f64,
    pub slope: f64,
    pub class: LimitClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartRegime {
    pub chart: usize,
    /// Class per normal axis, in the chart's normal-axis order.
    pub axes: Vec<AxisClass>,
}

impl ChartRegime {
    pub fn tag(&self) -> RegimeTag {
        tag_of(self.axes.iter())
    }
}

/// Regime of a chart with the given normal-axis classes.
pub fn tag_for(axes: &[AxisClass]) -> RegimeTag {
    tag_of(axes.iter())
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeTag::StationaryLike => "stationary_like",
            RegimeTag::Transition => "transition",
            RegimeTag::Talagrand => "talagrand",
            RegimeTag::Mixed => "mixed",
        })
    }
}

fn tag_of<'a>(axes: impl Iterator<Item = &'a AxisClass>) -> RegimeTag {
    let mut seen = [false; 3];
    for a in axes {
        seen[a.rank() as usize] = true;
    }
    match seen {
        [_, false, false] => RegimeTag::StationaryLike,
        [false, true, false] => RegimeTag::Transition,
        [false, false, true] => RegimeTag::Talagrand,
        _ => RegimeTag::Mixed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub charts: Vec<ChartRegime>,
    pub evidence: Vec<Evidence>,
}

/// Aggregate probes into per-chart, per-axis classes and an overall tag.
pub fn classify_regime(model: &FieldModel, plan: &ProbePlan) -> Result<Regime> {
    let charts = &model.maxset.charts;
    let d = model.dim();
    for (ci, chart) in charts.iter().enumerate() {
        for ni in 0..chart.normal.len() {
            if !plan.probes.iter().any(|p| p.chart == ci && p.normal == ni) {
                return Err(Error::Inconclusive(vec![format!(
                    "no probe covers chart {ci} ({}) normal axis {}",
                    chart.label, chart.normal[ni].axis
                )]));
            }
        }
    }
    let mut failures = Vec::new();
    let mut evidence = Vec::new();
    let mut per_axis: Vec<Vec<Option<AxisClass>>> = charts.iter().map(|c| vec![None; c.normal.len()]).collect();
    for probe in &plan.probes {
        let chart: &Chart = charts
            .get(probe.chart)
            .ok_or_else(|| Error::Domain(format!("probe references missing chart {}", probe.chart)))?;
        let normal = chart
            .normal
            .get(probe.normal)
            .ok_or_else(|| Error::Domain(format!("probe references missing normal axis {}", probe.normal)))?;
        let t = (chart.embed)(&probe.param);
        let mut minus = None;
        let mut plus = None;
        let mut class_rank = None;
        for dir in normal.directions() {
            let mut s = vec![0.0; d];
            s[normal.axis] = dir;
            let pr = probe_limit(model, &t, &s, &plan.ladder)?;
            let class = match pr.class {
                Ok(c) => c,
                Err(m) => {
                    failures.push(format!("chart {} node {:?} axis {} dir {dir:+}: {m}", probe.chart, probe.param, normal.axis));
                    continue;
                }
            };
            evidence.push(Evidence {
                chart: probe.chart,
                param: probe.param.clone(),
                axis: normal.axis,
                direction: dir,
                slope: pr.slope,
                class,
            });
            let rank = match class {
                LimitClass::Zero => 0,
                LimitClass::Finite(v) => {
                    if dir > 0.0 {
                        plus = Some(v)
                    } else {
                        minus = Some(v)
                    }
                    1
                }
                LimitClass::Infinite => 2,
            };
            if let Some(r) = class_rank {
                if r != rank {
                    failures.push(format!(
                        "chart {} node {:?} axis {}: the two sides disagree on the limit class",
                        probe.chart, probe.param, normal.axis
                    ));
                }
            }
            class_rank = Some(rank);
        }
        let Some(rank) = class_rank else { continue };
        let ac = match rank {
            0 => AxisClass::Zero,
            1 => AxisClass::Finite { minus, plus },
            _ => AxisClass::Infinite,
        };
        let slot = &mut per_axis[probe.chart][probe.normal];
        match slot {
            None => *slot = Some(ac),
            Some(prev) if prev.rank() != ac.rank() => failures.push(format!(
                "chart {} axis {}: limit class varies along the chart; split the chart",
                probe.chart, normal.axis
            )),
            Some(_) => {}
        }
    }
    if !failures.is_empty() {
        return Err(Error::Inconclusive(failures));
    }
    let charts: Vec<ChartRegime> = per_axis
        .into_iter()
        .enumerate()
        .map(|(chart, axes)| ChartRegime { chart, axes: axes.into_iter().map(|a| a.unwrap_or(AxisClass::Zero)).collect() })
        .collect();
    let tag = tag_of(charts.iter().flat_map(|c| c.axes.iter()));
    Ok(Regime { tag, charts, evidence })
}

/// Fitted log-log slope of `q_i(u)` for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSlope {
    pub axis: usize,
    pub alpha: f64,
    pub slope: f64,
    pub expected: f64,
    /// `min_u u·q_i(u)` over the ladder for α_i = 2 axes.
    pub u_q_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegVarReport {
    pub axes: Vec<AxisSlope>,
}

/// Check that each `q_i(u)` varies regularly with degree `-2/α_i` within ±0.05.
pub fn validate_regular_variation(model: &FieldModel, ladder: &[f64]) -> Result<RegVarReport> {
    check_ladder(ladder)?;
    let corr = &model.correlation;
    let lx: Vec<f64> = ladder.iter().map(|u| u.ln()).collect();
    let mut axes = Vec::new();
    for (i, &alpha) in corr.alphas.iter().enumerate() {
        let ly: Vec<f64> = ladder.iter().map(|&u| corr.q(i, u).ln()).collect();
        let (slope, _) = fit_slope(&lx, &ly);
        let expected = -2.0 / alpha;
        if (slope - expected).abs() > 0.05 {
            return Err(Error::Regime(format!(
                "axis {i}: q(u) has log-log slope {slope:.4}, expected {expected:.4}"
            )));
        }
        let u_q_min = (alpha == 2.0).then(|| ladder.iter().map(|&u| u * corr.q(i, u)).fold(f64::INFINITY, f64::min));
        axes.push(AxisSlope { axis: i, alpha, slope, expected, u_q_min });
    }
    Ok(RegVarReport { axes })
}
