//! Pickands- and Piterbarg-type constants.
//!
//! Window constants `E exp(max_{s∈W} χ(s) − h1(s))` with `χ(s) = √2·B(s) − |s|^α` are estimated
//! with a shift-tilted estimator: a node `τ` is drawn with weight `∝ e^{−h1(s_τ)}`, the path is
//! re-centred at `τ` (stationary increments make this exact), and each path contributes
//! `Z · e^{max z} / Σ e^{z}` where `Z = Σ e^{−h1}`. The estimator is bounded by `Z`, so the heavy
//! tail of `e^{max}` never enters the variance. For `α = 1` with piecewise linear drift the
//! continuous maximum inside each cell is drawn exactly from the Brownian bridge law.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScalarFn;
use crate::simulate::rng::{self, engine};
use crate::simulate::{FbmSampler, GridSpec, PathSampler};
use crate::specfun::Sidedness;

/// Exponent cap for a single path contribution.
const LOG_CAP: f64 = 50.0;
/// Relative discretization deficit above which a mesh is refused.
const MESH_TOL: f64 = 0.01;
/// Lane bit for the per-cell bridge uniforms.
const CELL_LANE: u64 = 1 << 32;
/// Smallest path count accepted by the estimators.
pub const MIN_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Differenced,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Differenced => "differenced",
            Method::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub std_err: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// `H([0,T])/T` alongside a differenced value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_std_err: Option<f64>,
    /// Bound on the relative discrete-maximum deficit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_bound: Option<f64>,
    /// True when the mesh budget ran out and `std_err` absorbs the mesh bound.
    #[serde(default)]
    pub widened: bool,
}

impl ConstantEstimate {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
            method: Method::ClosedForm,
            t_window: None,
            s_window: None,
            mesh: None,
            n_paths: 0,
            seed: 0,
            direct: None,
            direct_std_err: None,
            mesh_bound: None,
            widened: false,
        }
    }

    pub fn rel_err(&self) -> f64 {
        if self.value > 0.0 {
            self.std_err / self.value
        } else {
            0.0
        }
    }
}

/// Window constant `E exp(max_W χ − h1)` for a fixed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowEstimate {
    pub value: f64,
    pub std_err: f64,
    pub mesh: f64,
    /// Relative deficit bound from the nested coarse grid, when checked.
    pub mesh_bound: Option<f64>,
}

/// Limit drift `h1` along one axis.
#[derive(Clone)]
pub enum H1Form {
    Zero,
    /// `minus·|s|^e` for `s < 0`, `plus·s^e` for `s > 0`.
    Power { minus: f64, plus: f64, exponent: f64 },
    /// `+∞` off the origin.
    Infinite,
    Custom(ScalarFn),
}

impl H1Form {
    pub fn power(coeff: f64, exponent: f64) -> Self {
        H1Form::Power { minus: coeff, plus: coeff, exponent }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            H1Form::Zero => 0.0,
            H1Form::Power { minus, plus, exponent } => {
                if s == 0.0 {
                    0.0
                } else if s > 0.0 {
                    plus * s.powf(*exponent)
                } else {
                    minus * (-s).powf(*exponent)
                }
            }
            H1Form::Infinite => {
                if s == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            H1Form::Custom(f) => f(s),
        }
    }

    /// Linear between grid nodes once 0 is a node.
    fn piecewise_linear(&self) -> bool {
        match self {
            H1Form::Zero => true,
            H1Form::Power { exponent, .. } => *exponent == 1.0,
            _ => false,
        }
    }

    /// Smallest `S` with `h1 ≥ 8` on both window ends.
    fn saturation_start(&self, sided: Sidedness) -> Option<f64> {
        match self {
            H1Form::Power { minus, plus, exponent } => {
                let b = match sided {
                    Sidedness::OneSided => *plus,
                    Sidedness::TwoSided => minus.min(*plus),
                };
                (b > 0.0).then(|| (8.0 / b).powf(1.0 / exponent))
            }
            H1Form::Custom(_) => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Debug for H1Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            H1Form::Zero => write!(f, "Zero"),
            H1Form::Power { minus, plus, exponent } => write!(f, "Power({minus}, {plus}; {exponent})"),
            H1Form::Infinite => write!(f, "Infinite"),
            H1Form::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshPolicy {
    /// Fail with a suggested mesh.
    Refuse,
    /// Skip the nested-grid check.
    Ignore,
    /// Halve the mesh while the node count stays within budget, then widen the error.
    Refine { max_nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub delta: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Exact within-cell maxima for `α = 1`.
    pub bridge: bool,
    pub mesh: MeshPolicy,
}

impl McSettings {
    pub fn new(delta: f64, n_paths: usize, seed: u64) -> Self {
        Self { delta, n_paths, seed, bridge: true, mesh: MeshPolicy::Refuse }
    }

    pub fn with_mesh(mut self, mesh: MeshPolicy) -> Self {
        self.mesh = mesh;
        self
    }

    pub fn with_bridge(mut self, bridge: bool) -> Self {
        self.bridge = bridge;
        self
    }
}

/// `H_1 = 1`, `H_2 = 1/√π`.
pub fn known_constant(alpha: f64) -> Option<f64> {
    if alpha == 1.0 {
        Some(1.0)
    } else if alpha == 2.0 {
        Some(1.0 / PI.sqrt())
    } else {
        None
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha {alpha} outside (0, 2]")))
    }
}

fn check_paths(n: usize) -> Result<()> {
    if n >= MIN_PATHS {
        Ok(())
    } else {
        Err(Error::Domain(format!("n = {n} paths; at least {MIN_PATHS} required")))
    }
}

/// Nodes `view.start, view.start + stride, …` (all indices into the axis grid).
#[derive(Debug, Clone, Copy)]
struct View {
    start: usize,
    end: usize,
    stride: usize,
}

struct ViewTable {
    nodes: Vec<usize>,
    cum: Vec<f64>,
    ln_z: f64,
    stride: usize,
}

/// One axis window `[lo, hi]` on the grid `lo + kδ`.
struct AxisRun<'a> {
    alpha: f64,
    delta: f64,
    origin: usize,
    m: usize,
    h1: &'a H1Form,
    bridge: bool,
    lane: u64,
}

impl<'a> AxisRun<'a> {
    /// `n_lo`, `n_hi` nodes on each side of 0.
    fn new(alpha: f64, delta: f64, n_lo: usize, n_hi: usize, h1: &'a H1Form, bridge: bool, lane: u64) -> Self {
        let bridge = bridge && alpha == 1.0 && h1.piecewise_linear();
        Self { alpha, delta, origin: n_lo, m: n_lo + n_hi + 1, h1, bridge, lane }
    }

    fn s(&self, k: usize) -> f64 {
        (k as f64 - self.origin as f64) * self.delta
    }

    fn table(&self, v: View) -> ViewTable {
        let mut nodes = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        let mut k = v.start;
        while k <= v.end {
            let h = self.h1.eval(self.s(k));
            if h.is_finite() {
                acc += (-h).exp();
                nodes.push(k);
                cum.push(acc);
            }
            k += v.stride;
        }
        ViewTable { nodes, cum, ln_z: acc.ln(), stride: v.stride }
    }

    /// Per-path log contributions for each view, plus the count of capped paths.
    fn run(&self, views: &[View], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let tables: Vec<ViewTable> = views.iter().map(|&v| self.table(v)).collect();
        if tables.iter().any(|t| t.nodes.is_empty()) {
            return Err(Error::Domain("window has no node with finite drift".into()));
        }
        let grid = GridSpec::uniform(0.0, (self.m - 1) as f64 * self.delta, self.m)?;
        let sampler = FbmSampler::new(self.alpha / 2.0, grid)?;
        let lag_pow: Vec<f64> = (0..self.m).map(|j| (j as f64 * self.delta).powf(self.alpha)).collect();
        let h1v: Vec<f64> = (0..self.m).map(|k| self.h1.eval(self.s(k))).collect();
        let out: Vec<Vec<f64>> = (0..n as u64)
            .into_par_iter()
            .map_init(
                || (vec![0.0; self.m], Vec::with_capacity(self.m)),
                |(y, z), i| {
                    let mut st = rng::stream(seed, engine::WINDOW, self.lane, i);
                    sampler.sample_into(&mut st, y);
                    // one uniform picks the shift in every view, so nested views stay coupled
                    let pick: f64 = st.random();
                    let mut cells = rng::stream(seed, engine::WINDOW, self.lane | CELL_LANE, i);
                    tables.iter().map(|t| self.contribution(t, y, z, &lag_pow, &h1v, pick, &mut cells)).collect()
                },
            )
            .collect();
        Ok(out)
    }

    fn contribution(
        &self,
        t: &ViewTable,
        y: &[f64],
        z: &mut Vec<f64>,
        lag_pow: &[f64],
        h1v: &[f64],
        pick: f64,
        cells: &mut rng::Stream,
    ) -> f64 {
        if t.nodes.len() == 1 {
            return 0.0;
        }
        let total = *t.cum.last().unwrap();
        let u = pick * total;
        let ti = t.cum.partition_point(|&c| c <= u).min(t.nodes.len() - 1);
        let tau = t.nodes[ti];
        let y0 = y[tau];
        z.clear();
        let mut mx = f64::NEG_INFINITY;
        for &k in &t.nodes {
            let v = std::f64::consts::SQRT_2 * (y[k] - y0) - lag_pow[k.abs_diff(tau)] - h1v[k];
            mx = mx.max(v);
            z.push(v);
        }
        let lse = mx + z.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
        let mut top = mx;
        if self.bridge {
            let cell = t.stride as f64 * self.delta;
            let reach = mx - 10.0 * cell.sqrt();
            for (c, w) in z.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                if a.max(b) >= reach {
                    // uniforms are addressed by cell so that views sharing a cell share the draw
                    let key = (t.nodes[c] as u128) << 4 | t.stride as u128;
                    cells.set_word_pos(key << 1);
                    let e = (((cells.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64).ln();
                    let m = 0.5 * (a + b + ((a - b).powi(2) - 4.0 * cell * e).sqrt());
                    top = top.max(m);
                }
            }
        }
        t.ln_z + top - lse
    }
}

/// Mean and standard error of `f(row)` over all rows.
fn mean_se(rows: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let n = rows.len() as f64;
    let vals: Vec<f64> = rows.iter().map(|r| f(r)).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Exponentiate log contributions, applying the cap.
fn exponentiate(rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut capped = 0.0;
    let mut sum = 0.0;
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|l| {
                    if l > LOG_CAP {
                        capped += l.min(700.0).exp() - LOG_CAP.exp();
                        sum += LOG_CAP.exp();
                        LOG_CAP.exp()
                    } else {
                        let v = l.exp();
                        sum += v;
                        v
                    }
                })
                .collect()
        })
        .collect();
    if capped > 1e-6 * (sum + capped) {
        return Err(Error::CappedMass { capped, estimate: sum });
    }
    Ok(rows)
}

/// Deficit bound from columns `fine` and `coarse` relative to the fine mean.
fn mesh_bound(rows: &[Vec<f64>], fine: usize, coarse: usize, alpha: f64) -> f64 {
    let (d, se) = mean_se(rows, |r| r[fine] - r[coarse]);
    let (v, _) = mean_se(rows, |r| r[fine]);
    (d.max(0.0) / (2f64.powf(alpha / 2.0) - 1.0) + 2.0 * se) / v
}

fn refuse(delta: f64, bound: f64, alpha: f64) -> Error {
    let suggested = delta * (MESH_TOL / bound).powf(2.0 / alpha).min(0.5);
    Error::MeshTooCoarse {
        suggested,
        detail: format!("discrete-maximum deficit bound {:.3}% exceeds 1% at mesh {delta:e}", 100.0 * bound),
    }
}

fn even_steps(len: f64, delta: f64) -> usize {
    (2.0 * (len / (2.0 * delta)).ceil()).max(2.0) as usize
}

/// Column layout of a window run: fine, coarse, and optional sub-window.
struct WindowRun {
    rows: Vec<Vec<f64>>,
    delta: f64,
    extent: f64,
    bound: Option<f64>,
}

/// Window `[−S_lo, S_hi]` with `n_lo`/`n_hi` steps, columns `[full, coarse, (sub...)]`.
#[allow(clippy::too_many_arguments)]
fn run_window(
    alpha: f64,
    h1: &H1Form,
    n_lo: usize,
    n_hi: usize,
    delta: f64,
    subs: &[(usize, usize)],
    cfg: &McSettings,
    lane: u64,
) -> Result<WindowRun> {
    let run = AxisRun::new(alpha, delta, n_lo, n_hi, h1, cfg.bridge, lane);
    let mut views = vec![View { start: 0, end: n_lo + n_hi, stride: 1 }, View { start: 0, end: n_lo + n_hi, stride: 2 }];
    for &(a, b) in subs {
        views.push(View { start: n_lo - a, end: n_lo + b, stride: 1 });
    }
    let rows = exponentiate(run.run(&views, cfg.n_paths, cfg.seed)?)?;
    let bound = match cfg.mesh {
        MeshPolicy::Ignore => None,
        // within-cell maxima are exact, so there is no discrete-maximum deficit
        _ if run.bridge => Some(0.0),
        _ => Some(mesh_bound(&rows, 0, 1, alpha)),
    };
    Ok(WindowRun { rows, delta, extent: (n_lo + n_hi) as f64 * delta, bound })
}

/// Run with the mesh policy applied: refuse, or refine within the node budget.
fn run_with_policy(
    alpha: f64,
    h1: &H1Form,
    lo: f64,
    hi: f64,
    sub_frac: Option<f64>,
    cfg: &McSettings,
    lane: u64,
) -> Result<WindowRun> {
    let mut delta = cfg.delta;
    loop {
        let (n_lo, n_hi) = (if lo > 0.0 { even_steps(lo, delta) } else { 0 }, if hi > 0.0 { even_steps(hi, delta) } else { 0 });
        let subs: Vec<(usize, usize)> = sub_frac
            .map(|f| vec![((n_lo as f64 * f).round() as usize, (n_hi as f64 * f).round() as usize)])
            .unwrap_or_default();
        let w = run_window(alpha, h1, n_lo, n_hi, delta, &subs, cfg, lane)?;
        let Some(bound) = w.bound else { return Ok(w) };
        if bound <= MESH_TOL {
            return Ok(w);
        }
        match cfg.mesh {
            MeshPolicy::Refine { max_nodes } if 2 * (n_lo + n_hi) + 1 <= max_nodes => delta /= 2.0,
            MeshPolicy::Refine { .. } | MeshPolicy::Ignore => return Ok(w),
            MeshPolicy::Refuse => return Err(refuse(delta, bound, alpha)),
        }
    }
}

/// `H_α([0,T])` on the grid of mesh `δ`.
pub fn pickands_window(alpha: f64, t: f64, cfg: &McSettings) -> Result<WindowEstimate> {
    check_alpha(alpha)?;
    if t == 0.0 {
        return Ok(WindowEstimate { value: 1.0, std_err: 0.0, mesh: cfg.delta, mesh_bound: None });
    }
    check_window(t, cfg)?;
    let w = run_with_policy(alpha, &H1Form::Zero, 0.0, t, None, cfg, 0)?;
    let (value, se) = mean_se(&w.rows, |r| r[0]);
    Ok(WindowEstimate { value, std_err: se, mesh: w.delta, mesh_bound: w.bound })
}

fn check_window(t: f64, cfg: &McSettings) -> Result<()> {
    check_paths(cfg.n_paths)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("window length {t} must be positive")));
    }
    if !(cfg.delta > 0.0 && cfg.delta <= t / 64.0) {
        return Err(Error::Domain(format!("mesh {} must lie in (0, T/64] for T = {t}", cfg.delta)));
    }
    Ok(())
}

/// Pickands constant `H_α` by the differenced estimator with strict mesh refusal.
pub fn pickands_estimate(alpha: f64, t: f64, delta: f64, n: usize, seed: u64) -> Result<ConstantEstimate> {
    pickands_estimate_with(alpha, t, &McSettings::new(delta, n, seed))
}

pub fn pickands_estimate_with(alpha: f64, t: f64, cfg: &McSettings) -> Result<ConstantEstimate> {
    pickands_in_lane(alpha, t, cfg, 0)
}

fn pickands_in_lane(alpha: f64, t: f64, cfg: &McSettings, lane: u64) -> Result<ConstantEstimate> {
    check_alpha(alpha)?;
    if t == 0.0 {
        let mut e = ConstantEstimate::closed_form(1.0);
        e.method = Method::Direct;
        e.t_window = Some(0.0);
        e.n_paths = cfg.n_paths;
        e.seed = cfg.seed;
        return Ok(e);
    }
    check_window(t, cfg)?;
    let w = run_with_policy(alpha, &H1Form::Zero, 0.0, t, Some(0.5), cfg, lane)?;
    let t2 = w.extent;
    let (direct, direct_se) = mean_se(&w.rows, |r| r[0] / t2);
    let (value, mut se) = mean_se(&w.rows, |r| (r[0] - r[2]) / (0.5 * t2));
    let mut widened = false;
    if let Some(b) = w.bound.filter(|&b| b > MESH_TOL) {
        // budget exhausted: the deficit bound applies to the window value
        let (hv, _) = mean_se(&w.rows, |r| r[0]);
        se += b * hv / (0.5 * t2);
        widened = true;
    }
    Ok(ConstantEstimate {
        value,
        std_err: se,
        method: Method::Differenced,
        t_window: Some(t2),
        s_window: None,
        mesh: Some(w.delta),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        direct: Some(direct),
        direct_std_err: Some(direct_se),
        mesh_bound: w.bound,
        widened,
    })
}

/// Combine independent factors, propagating relative errors.
fn product(parts: &[ConstantEstimate], cfg: &McSettings, t: Option<f64>, s: Option<f64>) -> ConstantEstimate {
    let value: f64 = parts.iter().map(|p| p.value).product();
    let rel = parts.iter().map(|p| p.rel_err().powi(2)).sum::<f64>().sqrt();
    let method = if parts.iter().all(|p| p.method == Method::ClosedForm) {
        Method::ClosedForm
    } else if parts.iter().any(|p| p.method == Method::Differenced) {
        Method::Differenced
    } else {
        Method::Direct
    };
    let mc = method != Method::ClosedForm;
    ConstantEstimate {
        value,
        std_err: value * rel,
        method,
        t_window: t,
        s_window: s,
        mesh: mc.then_some(cfg.delta),
        n_paths: if mc { cfg.n_paths } else { 0 },
        seed: if mc { cfg.seed } else { 0 },
        direct: None,
        direct_std_err: None,
        mesh_bound: parts.iter().filter_map(|p| p.mesh_bound).reduce(f64::max),
        widened: parts.iter().any(|p| p.widened),
    }
}

/// `∏ H_{α_i}` with closed forms where tabulated; axis `i` draws from its own lane.
pub fn pickands_product(alphas: &[f64], windows: &[f64], cfg: &McSettings) -> Result<ConstantEstimate> {
    if alphas.is_empty() || windows.len() != alphas.len() {
        return Err(Error::Shape(format!("{} exponents and {} windows", alphas.len(), windows.len())));
    }
    let parts = alphas
        .iter()
        .zip(windows)
        .enumerate()
        .map(|(i, (&a, &t))| match known_constant(a) {
            Some(v) => Ok(ConstantEstimate::closed_form(v)),
            None => pickands_in_lane(a, t, cfg, i as u64).map_err(|e| Error::Constant {
                location: format!("axis {i} (alpha = {a})"),
                source: Box::new(e),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(product(&parts, cfg, windows.iter().copied().reduce(f64::max), None))
}

/// Two-dimensional Pickands constant from the field `χ₁(s₁) + χ₂(s₂)` on the full product grid,
/// by the mixed second difference of `H([0,T₁]×[0,T₂])`. Grid maxima only.
pub fn pickands_2d_direct(alphas: [f64; 2], t: f64, cfg: &McSettings) -> Result<ConstantEstimate> {
    for a in alphas {
        check_alpha(a)?;
    }
    check_window(t, cfg)?;
    let steps = even_steps(t, cfg.delta);
    let m = steps + 1;
    let half = steps / 2;
    let grid = GridSpec::uniform(0.0, steps as f64 * cfg.delta, m)?;
    let samplers = [FbmSampler::new(alphas[0] / 2.0, grid.clone())?, FbmSampler::new(alphas[1] / 2.0, grid)?];
    let lag: Vec<Vec<f64>> =
        alphas.iter().map(|a| (0..m).map(|j| (j as f64 * cfg.delta).powf(*a)).collect()).collect();
    // view combinations: (full, full), (half, full), (full, half), (half, half)
    let ends = [(steps, steps), (half, steps), (steps, half), (half, half)];
    let rows: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]),
            |(y1, y2, z1, z2), i| {
                let mut st = rng::stream(cfg.seed, engine::WINDOW, 100, i);
                samplers[0].sample_into(&mut st, y1);
                samplers[1].sample_into(&mut st, y2);
                ends.iter()
                    .map(|&(e1, e2)| {
                        let t1 = st.random_range(0..=e1);
                        let t2 = st.random_range(0..=e2);
                        for k in 0..=e1 {
                            z1[k] = std::f64::consts::SQRT_2 * (y1[k] - y1[t1]) - lag[0][k.abs_diff(t1)];
                        }
                        for k in 0..=e2 {
                            z2[k] = std::f64::consts::SQRT_2 * (y2[k] - y2[t2]) - lag[1][k.abs_diff(t2)];
                        }
                        let mut mx = f64::NEG_INFINITY;
                        for a in &z1[..=e1] {
                            for b in &z2[..=e2] {
                                mx = mx.max(a + b);
                            }
                        }
                        let mut sum = 0.0;
                        for a in &z1[..=e1] {
                            for b in &z2[..=e2] {
                                sum += (a + b - mx).exp();
                            }
                        }
                        (((e1 + 1) * (e2 + 1)) as f64).ln() - sum.ln()
                    })
                    .collect()
            },
        )
        .collect();
    let rows = exponentiate(rows)?;
    let q = (half as f64 * cfg.delta).powi(2);
    let (value, se) = mean_se(&rows, |r| (r[0] - r[1] - r[2] + r[3]) / q);
    let tt = (steps as f64 * cfg.delta).powi(2);
    let (direct, dse) = mean_se(&rows, |r| r[0] / tt);
    Ok(ConstantEstimate {
        value,
        std_err: se,
        method: Method::Differenced,
        t_window: Some(steps as f64 * cfg.delta),
        s_window: None,
        mesh: Some(cfg.delta),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        direct: Some(direct),
        direct_std_err: Some(dse),
        mesh_bound: None,
        widened: false,
    })
}

/// A normal axis of a Piterbarg window: `[−S, S]` when two-sided, `[0, S]` when one-sided.
#[derive(Debug, Clone)]
pub struct NormalWindow {
    pub alpha: f64,
    pub h1: H1Form,
    pub sided: Sidedness,
}

impl NormalWindow {
    pub fn new(alpha: f64, h1: H1Form, sided: Sidedness) -> Self {
        Self { alpha, h1, sided }
    }

    fn bounds(&self, s: f64) -> (f64, f64) {
        match self.sided {
            Sidedness::TwoSided => (s, s),
            Sidedness::OneSided => (0.0, s),
        }
    }
}

/// `P(Π)` for the window `Π = [0,T]^r × (normal windows of half-width S)`.
///
/// `χ` and `h1` are additive over axes and the axes are independent, so the window maximum
/// separates and `P(Π)` is the product of one-dimensional window constants. Tangential axis `i`
/// uses lane `i`, normal axis `j` lane `r + j`.
pub fn piterbarg_window(tangential: &[f64], t: f64, normals: &[NormalWindow], s: f64, cfg: &McSettings) -> Result<WindowEstimate> {
    let mut value = 1.0;
    let mut rel2 = 0.0;
    let mut bound: Option<f64> = None;
    for (i, &a) in tangential.iter().enumerate() {
        check_alpha(a)?;
        check_window(t, cfg)?;
        let w = run_with_policy(a, &H1Form::Zero, 0.0, t, None, cfg, i as u64)?;
        let (v, se) = mean_se(&w.rows, |r| r[0]);
        value *= v;
        rel2 += (se / v).powi(2);
        bound = max_opt(bound, w.bound);
    }
    for (j, nw) in normals.iter().enumerate() {
        check_alpha(nw.alpha)?;
        if matches!(nw.h1, H1Form::Infinite) {
            continue;
        }
        check_window(s, cfg)?;
        let (lo, hi) = nw.bounds(s);
        let w = run_with_policy(nw.alpha, &nw.h1, lo, hi, None, cfg, (tangential.len() + j) as u64)?;
        let (v, se) = mean_se(&w.rows, |r| r[0]);
        value *= v;
        rel2 += (se / v).powi(2);
        bound = max_opt(bound, w.bound);
    }
    Ok(WindowEstimate { value, std_err: value * rel2.sqrt(), mesh: cfg.delta, mesh_bound: bound })
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Saturated one-dimensional constant `lim_S E exp(max_{normal window} χ − h1)`.
///
/// Starting from `S₀` (where the drift reaches 8 at the window ends, or `s0` when given), the
/// window is doubled until the estimate on `[·, 2S]` differs from its `[·, S]` sub-window, on
/// the same paths, by less than one standard error; at most up to `16·S₀`.
pub fn piterbarg_axis(nw: &NormalWindow, s0: Option<f64>, cfg: &McSettings, lane: u64) -> Result<ConstantEstimate> {
    check_alpha(nw.alpha)?;
    check_paths(cfg.n_paths)?;
    if matches!(nw.h1, H1Form::Infinite) {
        let mut e = ConstantEstimate::closed_form(1.0);
        e.s_window = Some(0.0);
        return Ok(e);
    }
    let start = s0.or_else(|| nw.h1.saturation_start(nw.sided)).ok_or(Error::NotSaturated { s_max: f64::INFINITY })?;
    let mut s = start;
    while s <= 8.0 * start * (1.0 + 1e-12) {
        let big = 2.0 * s;
        let local = McSettings { delta: cfg.delta.min(big / 64.0), ..*cfg };
        let (lo, hi) = nw.bounds(big);
        let w = run_with_policy(nw.alpha, &nw.h1, lo, hi, Some(0.5), &local, lane)?;
        let (value, mut se) = mean_se(&w.rows, |r| r[0]);
        let (diff, _) = mean_se(&w.rows, |r| r[0] - r[2]);
        if diff.abs() < se {
            let mut widened = false;
            if let Some(b) = w.bound.filter(|&b| b > MESH_TOL) {
                se += b * value;
                widened = true;
            }
            return Ok(ConstantEstimate {
                value,
                std_err: se,
                method: Method::Direct,
                t_window: None,
                s_window: Some(big),
                mesh: Some(w.delta),
                n_paths: cfg.n_paths,
                seed: cfg.seed,
                direct: None,
                direct_std_err: None,
                mesh_bound: w.bound,
                widened,
            });
        }
        s = big;
    }
    Err(Error::NotSaturated { s_max: 16.0 * start })
}

/// Transition-case limit constant `P = lim T^{−r} P(Π)`: differenced in `T` on the tangential
/// axes, saturated in `S` on the normal ones.
pub fn piterbarg_estimate(
    tangential: &[f64],
    normals: &[NormalWindow],
    t: f64,
    s0: Option<f64>,
    cfg: &McSettings,
) -> Result<ConstantEstimate> {
    let mut parts = Vec::new();
    for (i, &a) in tangential.iter().enumerate() {
        parts.push(pickands_in_lane(a, t, cfg, i as u64)?);
    }
    let r = tangential.len();
    for (j, nw) in normals.iter().enumerate() {
        parts.push(piterbarg_axis(nw, s0, cfg, (r + j) as u64)?);
    }
    if parts.is_empty() {
        return Ok(ConstantEstimate::closed_form(1.0));
    }
    let s = parts.iter().filter_map(|p| p.s_window).reduce(f64::max);
    Ok(product(&parts, cfg, (r > 0).then_some(t), s))
}

/// Settings for constants requested by the asymptotic pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderSettings {
    pub t_window: f64,
    pub delta: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub max_nodes: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self { t_window: 32.0, delta: 1.0 / 64.0, n_paths: 20_000, seed: 0x5eed, max_nodes: 1 << 13, cache_dir: None }
    }
}

impl ProviderSettings {
    /// Cache directory from `EXCURSION_CACHE`, when set.
    pub fn from_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os("EXCURSION_CACHE") {
            self.cache_dir = Some(PathBuf::from(dir));
        }
        self
    }

    fn mc(&self) -> McSettings {
        McSettings::new(self.delta, self.n_paths, self.seed).with_mesh(MeshPolicy::Refine { max_nodes: self.max_nodes })
    }
}

const CACHE_FILE: &str = "constants-v1.toml";

#[derive(Default, Serialize, Deserialize)]
struct CacheFile {
    #[serde(default)]
    entries: BTreeMap<String, ConstantEstimate>,
}

/// Closed forms where tabulated, memoized Monte Carlo otherwise; persisted under the cache
/// directory when one is configured.
#[derive(Debug)]
pub struct ConstantsProvider {
    settings: ProviderSettings,
    cache: Mutex<BTreeMap<String, ConstantEstimate>>,
}

impl ConstantsProvider {
    pub fn new(settings: ProviderSettings) -> Result<Self> {
        let mut cache = BTreeMap::new();
        if let Some(dir) = &settings.cache_dir {
            let path = dir.join(CACHE_FILE);
            if path.exists() {
                let text = std::fs::read_to_string(&path)?;
                let file: CacheFile =
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                cache = file.entries;
            }
        }
        Ok(Self { settings, cache: Mutex::new(cache) })
    }

    pub fn settings(&self) -> &ProviderSettings {
        &self.settings
    }

    fn cached(&self, key: String, compute: impl FnOnce() -> Result<ConstantEstimate>) -> Result<ConstantEstimate> {
        if let Some(e) = self.cache.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let e = compute().map_err(|e| Error::Constant { location: key.clone(), source: Box::new(e) })?;
        let mut guard = self.cache.lock().unwrap();
        guard.insert(key, e.clone());
        if let Some(dir) = &self.settings.cache_dir {
            persist(dir, &guard)?;
        }
        Ok(e)
    }

    fn tag(&self) -> String {
        let s = &self.settings;
        format!("T={}:delta={}:n={}:seed={}:nodes={}", s.t_window, s.delta, s.n_paths, s.seed, s.max_nodes)
    }

    /// `H_α`.
    pub fn pickands(&self, alpha: f64) -> Result<ConstantEstimate> {
        if let Some(v) = known_constant(alpha) {
            return Ok(ConstantEstimate::closed_form(v));
        }
        let key = format!("pickands:alpha={alpha}:{}", self.tag());
        self.cached(key, || pickands_estimate_with(alpha, self.settings.t_window, &self.settings.mc()))
    }

    /// Saturated one-axis Piterbarg constant for the drift `b|s|^e` (per side).
    pub fn piterbarg(&self, nw: &NormalWindow) -> Result<ConstantEstimate> {
        let key = format!("piterbarg:alpha={}:h1={:?}:sided={:?}:{}", nw.alpha, nw.h1, nw.sided, self.tag());
        if matches!(nw.h1, H1Form::Custom(_)) {
            return piterbarg_axis(nw, None, &self.settings.mc(), 0);
        }
        self.cached(key, || piterbarg_axis(nw, None, &self.settings.mc(), 0))
    }

    pub fn entries(&self) -> BTreeMap<String, ConstantEstimate> {
        self.cache.lock().unwrap().clone()
    }
}

fn persist(dir: &Path, entries: &BTreeMap<String, ConstantEstimate>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = CacheFile { entries: entries.clone() };
    let text = toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))?;
    let tmp = dir.join(format!("{CACHE_FILE}.tmp"));
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, dir.join(CACHE_FILE))?;
    Ok(())
}

/// Shared provider handle.
pub type SharedProvider = Arc<ConstantsProvider>;
