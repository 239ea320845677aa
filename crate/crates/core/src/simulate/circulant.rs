use std::sync::Arc;

use rustfft::{num_complex::Complex64, Fft, FftPlanner};

use super::{rng, EngineTag, GridSpec, PathBatch, PathSampler};
use crate::error::{Error, Result};

/// Relative size of a negative eigenvalue that is clipped instead of rejected.
const CLIP_TOL: f64 = 1e-8;
/// Padding multipliers tried in turn (2x, 4x, 8x the grid length).
const PADDINGS: [usize; 3] = [1, 2, 4];

/// Circulant-embedding sampler for a stationary process on a uniform grid.
#[derive(Clone)]
pub struct CirculantSampler {
    grid: GridSpec,
    scale: f64,
    /// sqrt(λ_k / L) for the embedding spectrum
    amp: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    clipped: Option<f64>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("nodes", &self.grid.total_nodes())
            .field("embedding", &self.amp.len())
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl CirculantSampler {
    /// `r` is the correlation at lag τ with `r(0) = 1`.
    pub fn new<F: Fn(f64) -> f64>(r: F, grid: GridSpec) -> Result<Self> {
        let h = grid
            .uniform_step()
            .ok_or_else(|| Error::Domain("circulant sampler needs a uniform one-dimensional grid".into()))?;
        let r0 = r(0.0);
        if (r0 - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("correlation at lag 0 is {r0}, expected 1")));
        }
        Self::from_lags(|k| r(k as f64 * h), grid, 1.0)
    }

    /// Sampler whose covariance at lag index `k` is `scale² · c(k)`.
    pub(crate) fn from_lags<F: Fn(usize) -> f64>(c: F, grid: GridSpec, scale: f64) -> Result<Self> {
        let m = grid.total_nodes();
        if m == 1 {
            return Ok(Self { grid, scale: scale * c(0).sqrt(), amp: vec![], fft: None, clipped: None });
        }
        let base = 2 * (m - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut last = (0.0, 0.0);
        for p in PADDINGS {
            let len = base * p;
            let half = len / 2;
            let mut buf: Vec<Complex64> = (0..len)
                .map(|k| {
                    let lag = if k <= half { k } else { len - k };
                    Complex64::new(c(lag), 0.0)
                })
                .collect();
            if let Some(bad) = buf.iter().position(|z| !z.re.is_finite()) {
                return Err(Error::Evaluation { point: vec![bad as f64], value: buf[bad].re });
            }
            let fft = planner.plan_fft_forward(len);
            fft.process(&mut buf);
            let lmax = buf.iter().map(|z| z.re).fold(f64::MIN, f64::max);
            let lmin = buf.iter().map(|z| z.re).fold(f64::MAX, f64::min);
            last = (lmin, lmax);
            if lmin < -CLIP_TOL * lmax {
                continue;
            }
            let clipped = (lmin < 0.0).then_some(lmin);
            let amp = buf.iter().map(|z| (z.re.max(0.0) / len as f64).sqrt()).collect();
            return Ok(Self { grid, scale, amp, fft: Some(fft), clipped });
        }
        Err(Error::Embedding { min: last.0, max: last.1 })
    }

    /// Most negative eigenvalue clipped to zero, if any.
    pub fn clipped(&self) -> Option<f64> {
        self.clipped
    }

    pub fn embedding_len(&self) -> usize {
        self.amp.len()
    }
}

impl PathSampler for CirculantSampler {
    fn engine(&self) -> EngineTag {
        EngineTag::Circulant
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sample_into(&self, stream: &mut rng::Stream, out: &mut [f64]) {
        let Some(fft) = &self.fft else {
            out[0] = self.scale * rng::normal(stream);
            return;
        };
        let mut buf: Vec<Complex64> = self
            .amp
            .iter()
            .map(|&a| {
                let re = rng::normal(stream);
                let im = rng::normal(stream);
                Complex64::new(a * re, a * im)
            })
            .collect();
        fft.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = self.scale * z.re;
        }
    }
}

/// Stationary paths with correlation `r` on a uniform grid.
pub fn circulant_paths<F: Fn(f64) -> f64>(r: F, grid: &GridSpec, n: usize, seed: u64) -> Result<PathBatch> {
    if n == 0 {
        return Err(Error::Domain("path count must be >= 1".into()));
    }
    Ok(CirculantSampler::new(r, grid.clone())?.batch(n, seed))
}
