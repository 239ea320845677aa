//! Exact Gaussian path samplers.
//!
//! All engines implement [`PathSampler`]; a batch of `n` paths is produced by drawing path `i`
//! from its own counter-based stream (see [`rng`]), which makes batches reproducible from
//! `(seed, engine, grid)` and independent of chunking and thread count.

pub mod chol;
pub mod circulant;
pub mod dump;
pub mod dual;
pub mod fbm;
pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chol::{chol_paths, CholSampler};
pub use circulant::{circulant_paths, CirculantSampler};
pub use dual::dual_norm_reduction;
pub use fbm::{fbm_paths, BridgeSampler, FbmSampler};

/// Per-axis node lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Vec<f64>>,
}

impl GridSpec {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Domain("grid needs at least one axis".into()));
        }
        for (i, nodes) in axes.iter().enumerate() {
            if nodes.is_empty() {
                return Err(Error::Domain(format!("grid axis {i} has no nodes")));
            }
            if nodes.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("grid axis {i} has non-finite nodes")));
            }
            if nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain(format!("grid axis {i} nodes must be strictly increasing")));
            }
        }
        Ok(Self { axes })
    }

    /// `n` equally spaced nodes on `[lo, hi]` (a single node sits at `lo`).
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("grid needs at least one node".into()));
        }
        if n > 1 && !(hi > lo) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        let nodes = if n == 1 {
            vec![lo]
        } else {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect()
        };
        Self::new(vec![nodes])
    }

    pub fn explicit(nodes: Vec<f64>) -> Result<Self> {
        Self::new(vec![nodes])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    /// Nodes of a one-dimensional grid.
    pub fn nodes(&self) -> &[f64] {
        &self.axes[0]
    }

    pub fn total_nodes(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    /// Spacing of a uniform one-dimensional grid, if it is uniform.
    pub fn uniform_step(&self) -> Option<f64> {
        let x = self.nodes();
        if self.dim() != 1 {
            return None;
        }
        if x.len() == 1 {
            return Some(0.0);
        }
        let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let ok = x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1e-300));
        ok.then_some(h)
    }

    /// Largest spacing between consecutive nodes on axis 0.
    pub fn mesh(&self) -> f64 {
        self.nodes().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Every `stride`-th node of a one-dimensional grid (the endpoint kept when it falls on the stride).
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Domain("stride must be >= 1".into()));
        }
        Self::explicit(self.nodes().iter().step_by(stride).copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    Cholesky,
    Circulant,
    Fbm,
    Bridge,
    DualNorm,
}

impl EngineTag {
    pub fn id(self) -> u64 {
        match self {
            EngineTag::Cholesky => rng::engine::CHOLESKY,
            EngineTag::Circulant => rng::engine::CIRCULANT,
            EngineTag::Fbm => rng::engine::FBM,
            EngineTag::Bridge => rng::engine::BRIDGE,
            EngineTag::DualNorm => rng::engine::FIELD,
        }
    }
}

/// `n_paths × n_nodes` sample matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub n_nodes: usize,
    pub grid: GridSpec,
    pub seed: u64,
    pub engine: EngineTag,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_nodes)
    }

    /// Sample values at node `j` across all paths.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.paths().map(|p| p[j]).collect()
    }
}

/// A sampler that writes one path of a zero-mean Gaussian vector per call.
pub trait PathSampler: Send + Sync {
    fn engine(&self) -> EngineTag;
    fn grid(&self) -> &GridSpec;
    fn n_nodes(&self) -> usize {
        self.grid().total_nodes()
    }
    /// Fill `out` (length `n_nodes`) with one path drawn from `stream`.
    fn sample_into(&self, stream: &mut rng::Stream, out: &mut [f64]);

    /// The stream used for path `index` in lane `lane`.
    fn stream(&self, seed: u64, lane: u64, index: u64) -> rng::Stream {
        rng::stream(seed, self.engine().id(), lane, index)
    }

    /// Paths `start..start + n` of the batch keyed by `seed`.
    fn chunk(&self, seed: u64, start: u64, n: usize) -> PathBatch {
        self.chunk_in_lane(seed, 0, start, n)
    }

    /// As [`PathSampler::chunk`] but drawing from `lane`; independent coordinates of a vector
    /// process use distinct lanes under one seed.
    fn chunk_in_lane(&self, seed: u64, lane: u64, start: u64, n: usize) -> PathBatch {
        let m = self.n_nodes();
        let mut values = vec![0.0; n * m];
        values.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, out)| {
            let mut s = self.stream(seed, lane, start + i as u64);
            self.sample_into(&mut s, out);
        });
        PathBatch { values, n_paths: n, n_nodes: m, grid: self.grid().clone(), seed, engine: self.engine() }
    }

    fn batch(&self, n: usize, seed: u64) -> PathBatch {
        self.chunk(seed, 0, n)
    }
}

/// Concatenate chunk batches in chunk order.
pub fn concat_chunks(chunks: Vec<PathBatch>) -> Result<PathBatch> {
    let first = chunks.first().ok_or_else(|| Error::Shape("no chunks".into()))?;
    let (grid, seed, engine, m) = (first.grid.clone(), first.seed, first.engine, first.n_nodes);
    let mut values = Vec::new();
    let mut n = 0;
    for c in chunks {
        if c.n_nodes != m || c.seed != seed || c.engine != engine {
            return Err(Error::Shape("chunks disagree on grid, seed or engine".into()));
        }
        n += c.n_paths;
        values.extend(c.values);
    }
    Ok(PathBatch { values, n_paths: n, n_nodes: m, grid, seed, engine })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::explicit(vec![0.0, 0.0]).is_err());
        assert!(GridSpec::explicit(vec![]).is_err());
        let g = GridSpec::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.uniform_step(), Some(0.25));
        assert_eq!(g.coarsen(2).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(GridSpec::uniform(0.3, 0.3, 1).unwrap().total_nodes(), 1);
    }
}
