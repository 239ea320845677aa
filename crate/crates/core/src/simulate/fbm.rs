use super::circulant::CirculantSampler;
use super::{rng, EngineTag, GridSpec, PathBatch, PathSampler};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Kind {
    Brownian,
    Line,
    Noise(CirculantSampler),
}

/// Fractional Brownian motion on a uniform grid that contains 0 as a node.
///
/// Increments are sampled as fractional Gaussian noise and summed outward from the origin node,
/// so a grid on `[-S, S]` gives a two-sided fBm with `B(0) = 0`.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: GridSpec,
    hurst: f64,
    step: f64,
    origin: usize,
    kind: Kind,
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: GridSpec) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 1.0) {
            return Err(Error::Domain(format!("Hurst index {hurst} outside (0, 1]")));
        }
        let step = grid
            .uniform_step()
            .ok_or_else(|| Error::Domain("fBm sampler needs a uniform one-dimensional grid".into()))?;
        let x = grid.nodes();
        let origin = if x.len() == 1 {
            (x[0] == 0.0).then_some(0)
        } else {
            let k = (-x[0] / step).round();
            (k >= 0.0 && (k as usize) < x.len() && (x[0] + k * step).abs() <= 1e-9 * step).then_some(k as usize)
        }
        .ok_or_else(|| Error::Domain("fBm grid must contain 0 as a node".into()))?;
        let m = x.len();
        let kind = if hurst == 1.0 {
            Kind::Line
        } else if (hurst - 0.5).abs() < 1e-15 {
            Kind::Brownian
        } else if m == 1 {
            Kind::Brownian
        } else {
            let two_h = 2.0 * hurst;
            let fgn = |k: usize| {
                let k = k as f64;
                0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
            };
            let inc_grid = GridSpec::uniform(0.0, (m - 2) as f64 * step, m - 1)?;
            Kind::Noise(CirculantSampler::from_lags(fgn, inc_grid, step.powf(hurst))?)
        };
        Ok(Self { grid, hurst, step, origin, kind })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }
}

impl PathSampler for FbmSampler {
    fn engine(&self) -> EngineTag {
        EngineTag::Fbm
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sample_into(&self, stream: &mut rng::Stream, out: &mut [f64]) {
        let m = out.len();
        match &self.kind {
            Kind::Line => {
                let xi = rng::normal(stream);
                for (o, &t) in out.iter_mut().zip(self.grid.nodes()) {
                    *o = t * xi;
                }
                return;
            }
            Kind::Brownian => {
                let sd = self.step.sqrt();
                // increments written into out[1..], out[0] is overwritten below
                for o in out.iter_mut().skip(1) {
                    *o = sd * rng::normal(stream);
                }
            }
            Kind::Noise(s) => s.sample_into(stream, &mut out[1..]),
        }
        integrate_from(out, self.origin, m);
    }
}

/// Turn increments `out[1..]` (out[j] = B(t_j) - B(t_{j-1})) into levels with `B(t_origin) = 0`.
fn integrate_from(out: &mut [f64], origin: usize, m: usize) {
    let mut level = vec![0.0; m];
    for j in origin + 1..m {
        level[j] = level[j - 1] + out[j];
    }
    for j in (0..origin).rev() {
        level[j] = level[j + 1] - out[j + 1];
    }
    out.copy_from_slice(&level);
}

/// fBm paths with Hurst index `hurst` on a uniform grid containing 0.
pub fn fbm_paths(hurst: f64, grid: &GridSpec, n: usize, seed: u64) -> Result<PathBatch> {
    if n == 0 {
        return Err(Error::Domain("path count must be >= 1".into()));
    }
    Ok(FbmSampler::new(hurst, grid.clone())?.batch(n, seed))
}

/// Standard Brownian bridge on nodes inside `[0, 1]`, built from a Brownian path and `W(1)`.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    grid: GridSpec,
}

impl BridgeSampler {
    pub fn new(grid: GridSpec) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Domain("bridge sampler is one-dimensional".into()));
        }
        let x = grid.nodes();
        if x[0] < 0.0 || x[x.len() - 1] > 1.0 {
            return Err(Error::Domain("bridge nodes must lie in [0, 1]".into()));
        }
        Ok(Self { grid })
    }
}

impl PathSampler for BridgeSampler {
    fn engine(&self) -> EngineTag {
        EngineTag::Bridge
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sample_into(&self, stream: &mut rng::Stream, out: &mut [f64]) {
        let x = self.grid.nodes();
        let mut w = 0.0;
        let mut prev = 0.0;
        for (o, &t) in out.iter_mut().zip(x) {
            w += (t - prev).sqrt() * rng::normal(stream);
            prev = t;
            *o = w;
        }
        let w1 = w + (1.0 - prev).sqrt() * rng::normal(stream);
        for (o, &t) in out.iter_mut().zip(x) {
            *o -= t * w1;
        }
    }
}
