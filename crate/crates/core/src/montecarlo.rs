//! Crude Monte Carlo of `P(max over a grid > u)` and the comparison harness against the
//! asymptotic pipeline.
//!
//! Paths are drawn once per seed and every requested level, coarsened grid and tube restriction is
//! evaluated on the same paths, so monotonicity in `u` and in grid refinement holds exactly.
//! Hit counts are merged by chunk index, which keeps results independent of the thread count.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{asym_general, default_gamma, informative_width, AsymptoticResult};
use crate::constants::{piterbarg_window, ConstantsProvider, H1Form, McSettings, MeshPolicy, NormalWindow};
use crate::error::{Error, Result};
use crate::model::{default_ladder, h1_limit, FieldModel, FieldSampler, LimitClass, Point, ProcessKind};
use crate::simulate::{
    BridgeSampler, CholSampler, CirculantSampler, EngineTag, FbmSampler, GridSpec, PathBatch, PathSampler,
};
use crate::specfun::{psi, Sidedness};

/// Largest admissible `u²·max A_i·δ^{α_i}`.
pub const MESH_RULE: f64 = 0.01;
/// Smallest path count for exceedance estimates.
pub const MIN_MC_PATHS: usize = 1000;
const CHUNK: usize = 4096;
const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval at 95%.
pub fn wilson(hits: u64, n: u64) -> (f64, f64) {
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Effect of restricting the domain to the informative tube around the maximum set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeCheck {
    pub width: f64,
    pub gamma: f64,
    pub p_tube: f64,
    /// `|p_hat - p_tube| < 2·std_err`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub u: f64,
    pub p_hat: f64,
    pub hits: u64,
    pub n_paths: u64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    pub nodes: usize,
    pub mesh: f64,
    pub seed: u64,
    /// `u²·max A_i·δ^{α_i}` at this level.
    pub mesh_slack: f64,
    pub tube: Option<TubeCheck>,
    pub note: String,
}

impl McEstimate {
    fn new(u: f64, hits: u64, n: u64, grid: &GridSpec, seed: u64, slack: f64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            u,
            p_hat: p,
            hits,
            n_paths: n,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            ci95: wilson(hits, n),
            nodes: grid.total_nodes(),
            mesh: grid.mesh(),
            seed,
            mesh_slack: slack,
            tube: None,
            note: String::new(),
        }
    }
}

/// Draws the model's field on a time grid.
pub struct FieldEngine {
    grid: GridSpec,
    coords: Vec<Arc<dyn PathSampler>>,
    /// Per coordinate, per node multiplier (weight times scale).
    factors: Vec<Vec<f64>>,
    dual: bool,
}

impl std::fmt::Debug for FieldEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldEngine")
            .field("nodes", &self.grid.total_nodes())
            .field("coords", &self.coords.iter().map(|c| c.engine()).collect::<Vec<_>>())
            .field("dual", &self.dual)
            .finish()
    }
}

fn process_sampler(process: &ProcessKind, grid: &GridSpec) -> Result<Arc<dyn PathSampler>> {
    let x = grid.nodes();
    Ok(match process {
        ProcessKind::Stationary(r) => {
            let rr = r.clone();
            match CirculantSampler::new(move |t| rr(t), grid.clone()) {
                Ok(s) => Arc::new(s),
                Err(Error::Embedding { .. }) | Err(Error::Domain(_)) => {
                    let rr = r.clone();
                    Arc::new(CholSampler::new(move |s, t| rr(t - s), x)?)
                }
                Err(e) => return Err(e),
            }
        }
        ProcessKind::Brownian => match FbmSampler::new(0.5, grid.clone()) {
            Ok(s) if x[0] == 0.0 => Arc::new(s),
            _ => Arc::new(CholSampler::new(|s, t| s.min(t), x)?),
        },
        ProcessKind::Bridge => Arc::new(BridgeSampler::new(grid.clone())?),
        ProcessKind::Fbm(h) => match FbmSampler::new(*h, grid.clone()) {
            Ok(s) if x[0] == 0.0 => Arc::new(s),
            _ => {
                let two_h = 2.0 * h;
                Arc::new(CholSampler::new(
                    move |s, t| 0.5 * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h)),
                    x,
                )?)
            }
        },
        ProcessKind::Covariance(c) => {
            let cc = c.clone();
            Arc::new(CholSampler::new(move |s, t| cc(s, t), x)?)
        }
    })
}

impl FieldEngine {
    pub fn new(model: &FieldModel, grid: &GridSpec) -> Result<Self> {
        if model.domain.time_dim() != 1 || grid.dim() != 1 {
            return Err(Error::Shape("Monte Carlo supports one time axis".into()));
        }
        let (lo, hi) = model.domain.time[0];
        let x = grid.nodes();
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        if x[0] < lo - tol || x[x.len() - 1] > hi + tol {
            return Err(Error::Domain(format!("grid [{}, {}] leaves the domain [{lo}, {hi}]", x[0], x[x.len() - 1])));
        }
        let sampler = model.sampler.as_ref().ok_or_else(|| Error::Domain(format!("model {} has no sampler", model.id)))?;
        let eval = |scale: &Option<crate::model::ScalarFn>, w: f64| -> Vec<f64> {
            x.iter().map(|&t| w * scale.as_ref().map_or(1.0, |f| f(t))).collect()
        };
        let (coords, factors, dual) = match sampler {
            FieldSampler::Scalar { process, scale } => (vec![process_sampler(process, grid)?], vec![eval(scale, 1.0)], false),
            FieldSampler::Dual { process, weights, scales } => {
                let s = process_sampler(process, grid)?;
                let coords = vec![s; weights.len()];
                let factors = weights.iter().zip(scales).map(|(&w, sc)| eval(sc, w)).collect();
                (coords, factors, true)
            }
        };
        Ok(Self { grid: grid.clone(), coords, factors, dual })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Paths `0..n` as a batch, identical to the ones the counters see.
    pub fn batch(&self, n: usize, seed: u64) -> PathBatch {
        let m = self.grid.total_nodes();
        let mut values = vec![0.0; n * m];
        values.par_chunks_mut(m.max(1)).enumerate().for_each_init(
            || vec![0.0; m],
            |buf, (i, out)| self.sample(seed, i as u64, buf, out),
        );
        let engine = if self.dual { EngineTag::DualNorm } else { self.coords[0].engine() };
        PathBatch { values, n_paths: n, n_nodes: m, grid: self.grid.clone(), seed, engine }
    }

    /// One field path; coordinate `c` draws from lane `c`.
    fn sample(&self, seed: u64, i: u64, buf: &mut [f64], out: &mut [f64]) {
        if !self.dual {
            let mut st = self.coords[0].stream(seed, 0, i);
            self.coords[0].sample_into(&mut st, out);
            for (o, f) in out.iter_mut().zip(&self.factors[0]) {
                *o *= f;
            }
            return;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, s) in self.coords.iter().enumerate() {
            let mut st = s.stream(seed, c as u64, i);
            s.sample_into(&mut st, buf);
            for ((o, y), f) in out.iter_mut().zip(buf.iter()).zip(&self.factors[c]) {
                let v = y * f;
                *o += v * v;
            }
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
    }
}

/// Hit counts of one pass over the paths.
#[derive(Debug, Clone, PartialEq)]
pub struct HitCounts {
    pub levels: Vec<f64>,
    pub strides: Vec<usize>,
    /// `hits[s][k]`: paths whose maximum over every `strides[s]`-th node exceeds `levels[k]`.
    pub hits: Vec<Vec<u64>>,
    /// Hits restricted to the tube node set of each level (full grid).
    pub tube_hits: Vec<Option<u64>>,
    pub n_paths: u64,
}

/// Count exceedances of every level on shared paths.
pub fn exceedance_counts(
    engine: &FieldEngine,
    levels: &[f64],
    strides: &[usize],
    tubes: &[Option<Vec<usize>>],
    n: u64,
    seed: u64,
) -> Result<HitCounts> {
    if strides.is_empty() || strides.iter().any(|&s| s == 0) {
        return Err(Error::Domain("strides must be >= 1".into()));
    }
    let m = engine.grid.total_nodes();
    let n_chunks = n.div_ceil(CHUNK as u64);
    let zero = || (vec![vec![0u64; levels.len()]; strides.len()], vec![0u64; levels.len()]);
    let parts: Vec<(Vec<Vec<u64>>, Vec<u64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let (mut hits, mut tube) = zero();
            let mut buf = vec![0.0; m];
            let mut path = vec![0.0; m];
            let end = ((c + 1) * CHUNK as u64).min(n);
            for i in c * CHUNK as u64..end {
                engine.sample(seed, i, &mut buf, &mut path);
                for (s, &stride) in strides.iter().enumerate() {
                    let mx = path.iter().step_by(stride).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    for (k, &u) in levels.iter().enumerate() {
                        if mx > u {
                            hits[s][k] += 1;
                        }
                    }
                }
                for (k, t) in tubes.iter().enumerate() {
                    if let Some(idx) = t {
                        let mx = idx.iter().fold(f64::NEG_INFINITY, |a, &j| a.max(path[j]));
                        if mx > levels[k] {
                            tube[k] += 1;
                        }
                    }
                }
            }
            (hits, tube)
        })
        .collect();
    let (mut hits, mut tube) = zero();
    for (h, t) in parts {
        for (a, b) in hits.iter_mut().zip(h) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in tube.iter_mut().zip(t) {
            *x += y;
        }
    }
    let tube_hits = tubes.iter().zip(tube).map(|(t, h)| t.as_ref().map(|_| h)).collect();
    Ok(HitCounts { levels: levels.to_vec(), strides: strides.to_vec(), hits, tube_hits, n_paths: n })
}

/// Largest `A_i` over the maximum set, per time axis.
fn max_time_amplitude(model: &FieldModel) -> f64 {
    let mut a: f64 = 0.0;
    for chart in &model.maxset.charts {
        for param in chart.probe_nodes() {
            let p = (chart.embed)(&param);
            a = a.max(model.correlation.amplitudes[0].at(&p));
        }
    }
    a
}

/// `max(u,0)²·A·δ^α` on the time axis; sphere axes are reduced exactly.
pub fn mesh_slack(model: &FieldModel, u: f64, mesh: f64) -> f64 {
    let up = u.max(0.0);
    up * up * max_time_amplitude(model) * mesh.powf(model.correlation.alphas[0])
}

/// Uniform grid with `2^k + 1` nodes satisfying the mesh rule at level `u` (at least `min_nodes`).
pub fn mesh_rule_grid(model: &FieldModel, u: f64, min_nodes: usize) -> Result<GridSpec> {
    let (lo, hi) = model.domain.time[0];
    let mut steps = 2usize;
    while steps + 1 < min_nodes || mesh_slack(model, u, (hi - lo) / steps as f64) > MESH_RULE {
        steps *= 2;
        if steps > 1 << 24 {
            return Err(Error::MeshTooCoarse { suggested: (hi - lo) / steps as f64, detail: "mesh rule needs more than 2^24 nodes".into() });
        }
    }
    GridSpec::uniform(lo, hi, steps + 1)
}

fn check_mesh(model: &FieldModel, u: f64, grid: &GridSpec) -> Result<f64> {
    let slack = mesh_slack(model, u, grid.mesh());
    if slack > MESH_RULE {
        let (lo, hi) = model.domain.time[0];
        let suggested = mesh_rule_grid(model, u, 2)?;
        return Err(Error::MeshTooCoarse {
            suggested: suggested.mesh(),
            detail: format!(
                "u²·A·δ^α = {slack:.4} > {MESH_RULE} at u = {u}; use at least {} nodes on [{lo}, {hi}]",
                suggested.total_nodes()
            ),
        });
    }
    Ok(slack)
}

/// Time coordinates of the maximum set, sampled along each chart.
fn maxset_times(model: &FieldModel) -> Vec<(f64, f64)> {
    // (time, allowed gap) pairs; curves along time are sampled densely
    let mut out = Vec::new();
    for chart in &model.maxset.charts {
        let along_time = chart.tangential.contains(&0);
        if !along_time {
            let p = (chart.embed)(&chart.center());
            out.push((p.time[0], 0.0));
            continue;
        }
        let k = 1024;
        let c = chart.center();
        let i = chart.tangential.iter().position(|&a| a == 0).unwrap();
        let (a, b) = chart.param_box[i];
        for j in 0..=k {
            let mut x = c.clone();
            x[i] = a + (b - a) * j as f64 / k as f64;
            let p = (chart.embed)(&x);
            out.push((p.time[0], (b - a) / k as f64));
        }
    }
    out
}

/// Grid nodes within the informative width of the maximum set.
pub fn tube_nodes(model: &FieldModel, grid: &GridSpec, width: f64) -> Vec<usize> {
    let m = maxset_times(model);
    grid.nodes()
        .iter()
        .enumerate()
        .filter(|(_, &t)| m.iter().any(|&(s, gap)| (t - s).abs() <= width + gap))
        .map(|(j, _)| j)
        .collect()
}

/// Monte Carlo configuration shared by the commands.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Explicit grid; the mesh-rule grid at the largest level otherwise.
    pub grid: Option<GridSpec>,
    pub min_nodes: usize,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self { n_paths, seed, grid: None, min_nodes: 2 }
    }
}

fn resolve_grid(model: &FieldModel, levels: &[f64], cfg: &McConfig) -> Result<GridSpec> {
    let umax = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match &cfg.grid {
        Some(g) => Ok(g.clone()),
        None => mesh_rule_grid(model, umax, cfg.min_nodes),
    }
}

/// Exceedance estimates at several levels on shared paths.
pub fn mc_exceedance_levels(model: &FieldModel, levels: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    if cfg.n_paths < MIN_MC_PATHS as u64 {
        return Err(Error::Domain(format!("n = {}; at least {MIN_MC_PATHS} paths required", cfg.n_paths)));
    }
    if model.correlation.full_correlation.is_none() {
        return Err(Error::Domain(format!("model {} has no full correlation", model.id)));
    }
    if levels.is_empty() {
        return Err(Error::Domain("no levels".into()));
    }
    let grid = resolve_grid(model, levels, cfg)?;
    let slacks = levels.iter().map(|&u| check_mesh(model, u, &grid)).collect::<Result<Vec<_>>>()?;
    let engine = FieldEngine::new(model, &grid)?;
    let widths: Vec<Option<(f64, f64)>> = levels
        .iter()
        .map(|&u| {
            (u > 1.0).then(|| {
                let g = default_gamma(u);
                (informative_width(u, g).unwrap_or(f64::INFINITY), g)
            })
        })
        .collect();
    let tubes: Vec<Option<Vec<usize>>> = widths
        .iter()
        .map(|w| w.and_then(|(w, _)| {
            let idx = tube_nodes(model, &grid, w);
            (!idx.is_empty()).then_some(idx)
        }))
        .collect();
    let counts = exceedance_counts(&engine, levels, &[1], &tubes, cfg.n_paths, cfg.seed)?;
    let mut out = Vec::new();
    for (k, &u) in levels.iter().enumerate() {
        let mut e = McEstimate::new(u, counts.hits[0][k], cfg.n_paths, &grid, cfg.seed, slacks[k]);
        if let (Some(h), Some((w, g))) = (counts.tube_hits[k], widths[k]) {
            let p_tube = h as f64 / cfg.n_paths as f64;
            let consistent = (e.p_hat - p_tube).abs() < 2.0 * e.std_err.max(f64::MIN_POSITIVE) || e.p_hat == p_tube;
            e.tube = Some(TubeCheck { width: w, gamma: g, p_tube, consistent });
            e.note = if consistent {
                format!("tube restriction (width {w:.4}) within 2 std_err")
            } else {
                format!("tube restriction (width {w:.4}) changes p_hat beyond 2 std_err")
            };
        }
        out.push(e);
    }
    Ok(out)
}

/// `P(max over grid > u)` by crude Monte Carlo.
pub fn mc_exceedance(model: &FieldModel, u: f64, grid: &GridSpec, n: u64, seed: u64) -> Result<McEstimate> {
    let cfg = McConfig { n_paths: n, seed, grid: Some(grid.clone()), min_nodes: 2 };
    Ok(mc_exceedance_levels(model, &[u], &cfg)?.remove(0))
}

/// One row of the asymptotics-vs-simulation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub model_id: String,
    pub u: f64,
    pub asym_value: f64,
    pub asym_lo: f64,
    pub asym_hi: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ratio: f64,
    pub n_paths: u64,
    pub mesh: f64,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 12] =
    ["model_id", "u", "asym_value", "asym_lo", "asym_hi", "p_hat", "ci_lo", "ci_hi", "ratio", "n_paths", "mesh", "seed"];

/// Rows for an already assembled asymptotic result.
pub fn compare_rows(model_id: &str, asym: Option<&AsymptoticResult>, est: &[McEstimate]) -> Result<Vec<CompareRow>> {
    est.iter()
        .map(|e| {
            let (value, lo, hi) = match asym {
                Some(a) if e.u > 0.0 => {
                    let (lo, hi) = a.band(e.u)?;
                    (a.evaluate(e.u)?, lo, hi)
                }
                _ => (f64::NAN, f64::NAN, f64::NAN),
            };
            Ok(CompareRow {
                model_id: model_id.to_string(),
                u: e.u,
                asym_value: value,
                asym_lo: lo,
                asym_hi: hi,
                p_hat: e.p_hat,
                ci_lo: e.ci95.0,
                ci_hi: e.ci95.1,
                ratio: e.p_hat / value,
                n_paths: e.n_paths,
                mesh: e.mesh,
                seed: e.seed,
            })
        })
        .collect()
}

/// Asymptotics and Monte Carlo side by side, one row per level.
pub fn compare_table(
    model: &FieldModel,
    model_id: &str,
    levels: &[f64],
    cfg: &McConfig,
    provider: &ConstantsProvider,
) -> Result<(AsymptoticResult, Vec<McEstimate>, Vec<CompareRow>)> {
    let asym = asym_general(model, provider)?;
    let est = mc_exceedance_levels(model, levels, cfg)?;
    let rows = compare_rows(model_id, Some(&asym), &est)?;
    Ok((asym, est, rows))
}

/// Decimal rendering with 10 significant digits.
pub fn sig10(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mut e = x.abs().log10().floor() as i32;
    // rounding may carry into the next decade
    let s = format!("{:.9e}", x);
    if let Some(exp) = s.split('e').nth(1).and_then(|v| v.parse::<i32>().ok()) {
        e = exp;
    }
    let decimals = (9 - e).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Write rows with the fixed header.
pub fn write_csv<W: Write>(rows: &[CompareRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.write_record([
            r.model_id.clone(),
            sig10(r.u),
            sig10(r.asym_value),
            sig10(r.asym_lo),
            sig10(r.asym_hi),
            sig10(r.p_hat),
            sig10(r.ci_lo),
            sig10(r.ci_hi),
            sig10(r.ratio),
            r.n_paths.to_string(),
            sig10(r.mesh),
            r.seed.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Monte Carlo and predicted values of `P(max over t + q(u)·window > u)/Ψ(u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalLemma {
    pub mc_value: f64,
    pub mc_std_err: f64,
    pub predicted: f64,
    pub predicted_std_err: f64,
    /// Window length in normalized coordinates `T·A^{1/α}`.
    pub normalized_window: f64,
    pub nodes: usize,
}

/// Nodes per unit of normalized window used by [`verify_local_lemma`].
const LEMMA_STEPS: usize = 128;

/// Local lemma check at `t`: the window `[0, T]` in units of `q(u)` (pointing into the domain)
/// against the window constant from the constants module on the matching grid.
pub fn verify_local_lemma(
    model: &FieldModel,
    t: &Point,
    window: f64,
    u: f64,
    n: u64,
    seed: u64,
) -> Result<LocalLemma> {
    if model.domain.time_dim() != 1 || model.domain.sphere.is_some() {
        return Err(Error::Shape("local lemma check supports one time axis without a sphere".into()));
    }
    if !(window >= 0.0) || !(u > 0.0) {
        return Err(Error::Domain(format!("need window ≥ 0 and u > 0, got {window}, {u}")));
    }
    if n < MIN_MC_PATHS as u64 {
        return Err(Error::Domain(format!("n = {n}; at least {MIN_MC_PATHS} paths required")));
    }
    let r = model
        .correlation
        .full_correlation
        .clone()
        .ok_or_else(|| Error::Domain(format!("model {} has no full correlation", model.id)))?;
    let alpha = model.correlation.alphas[0];
    let amp = model.correlation.amplitudes[0].at(t);
    let c = amp.powf(-1.0 / alpha);
    let q = model.correlation.q(0, u);
    let (lo, hi) = model.domain.time[0];
    let t0 = t.time[0];
    let span = c * q * window;
    let dir = if t0 + span <= hi + 1e-15 {
        1.0
    } else if t0 - span >= lo - 1e-15 {
        -1.0
    } else {
        return Err(Error::Domain(format!("window of length {span:e} around t = {t0} escapes the domain [{lo}, {hi}]")));
    };
    let norm_window = window * amp.powf(1.0 / alpha);
    let steps = if window == 0.0 { 0 } else { LEMMA_STEPS };
    let mut xs: Vec<f64> = (0..=steps).map(|k| t0 + dir * span * k as f64 / steps.max(1) as f64).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let pts: Vec<Point> = xs.iter().map(|&x| Point::at(x)).collect();
    let m = pts.len();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = model.sigma(&pts[i]) * model.sigma(&pts[j]) * r(&pts[i], &pts[j]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let sampler = CholSampler::from_matrix(cov, GridSpec::explicit(xs)?)?;
    let n_chunks = n.div_ceil(CHUNK as u64);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|ch| {
            let mut buf = vec![0.0; m];
            let mut h = 0u64;
            for i in ch * CHUNK as u64..((ch + 1) * CHUNK as u64).min(n) {
                let mut st = sampler.stream(seed, 0, i);
                sampler.sample_into(&mut st, &mut buf);
                if buf.iter().any(|&v| v > u) {
                    h += 1;
                }
            }
            h
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    let p = hits as f64 / n as f64;
    let ps = psi(u)?;
    let mc_value = p / ps;
    let mc_std_err = (p * (1.0 - p) / n as f64).sqrt() / ps;
    let (predicted, predicted_std_err) = if steps == 0 {
        (1.0, 0.0)
    } else {
        let class = match h1_limit(model, t, &[dir], &default_ladder()) {
            Ok(cl) => cl,
            Err(_) => LimitClass::Zero,
        };
        let h1 = match class {
            LimitClass::Zero => H1Form::Zero,
            LimitClass::Finite(b) => H1Form::power(b, alpha),
            LimitClass::Infinite => H1Form::Infinite,
        };
        let cfg = McSettings::new(norm_window / steps as f64, (n as usize).max(crate::constants::MIN_PATHS), seed)
            .with_mesh(MeshPolicy::Ignore)
            .with_bridge(false);
        let w = piterbarg_window(&[], 0.0, &[NormalWindow::new(alpha, h1, Sidedness::OneSided)], norm_window, &cfg)?;
        (w.value, w.std_err)
    };
    Ok(LocalLemma { mc_value, mc_std_err, predicted, predicted_std_err, normalized_window: norm_window, nodes: m })
}
