use nalgebra::{DMatrix, DVector};

use super::{rng, EngineTag, GridSpec, PathBatch, PathSampler};
use crate::error::{Error, Result};

const JITTERS: [f64; 5] = [0.0, 1e-12, 1e-11, 1e-10, 1e-8];

/// Exact sampler from a dense lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct CholSampler {
    grid: GridSpec,
    lower: DMatrix<f64>,
    jitter: f64,
}

impl CholSampler {
    /// Factor `cov(points)`; the diagonal jitter escalates from 1e-12 to 1e-8 when needed.
    /// Columns of the resulting paths follow the points in increasing order.
    pub fn new<F: Fn(f64, f64) -> f64>(cov: F, points: &[f64]) -> Result<Self> {
        let points = sorted_distinct(points)?;
        let m = points.len();
        let mut c = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = cov(points[i], points[j]);
                if !v.is_finite() {
                    return Err(Error::Evaluation { point: vec![points[i], points[j]], value: v });
                }
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Self::from_matrix(c, GridSpec::explicit(points)?)
    }

    /// Factor an explicit covariance matrix; `grid` labels the nodes.
    pub fn from_matrix(c: DMatrix<f64>, grid: GridSpec) -> Result<Self> {
        if c.nrows() != c.ncols() || c.nrows() != grid.total_nodes() {
            return Err(Error::Shape(format!(
                "covariance {}x{} does not match {} grid nodes",
                c.nrows(),
                c.ncols(),
                grid.total_nodes()
            )));
        }
        let asym = (0..c.nrows())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (c[(i, j)] - c[(j, i)]).abs())
            .fold(0.0, f64::max);
        let scale = c.diagonal().amax().max(1e-300);
        if asym > 1e-10 * scale {
            return Err(Error::Domain(format!("covariance matrix not symmetric (max asymmetry {asym:e})")));
        }
        let scale = c.diagonal().amax().max(1.0);
        for &jit in &JITTERS {
            let mut a = c.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += jit * scale;
            }
            if let Some(ch) = a.cholesky() {
                return Ok(Self { grid, lower: ch.l(), jitter: jit });
            }
        }
        Err(Error::NotPsd { max_jitter: *JITTERS.last().unwrap() })
    }

    /// Diagonal jitter (relative to the largest variance) that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

impl PathSampler for CholSampler {
    fn engine(&self) -> EngineTag {
        EngineTag::Cholesky
    }

    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sample_into(&self, stream: &mut rng::Stream, out: &mut [f64]) {
        let m = self.lower.nrows();
        let mut z = DVector::zeros(m);
        rng::fill_normal(stream, z.as_mut_slice());
        // out = L z, row by row over the lower triangle
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.lower[(i, j)] * z[j];
            }
            *o = acc;
        }
    }
}

/// Paths with covariance `cov` at `points` (columns in increasing point order).
pub fn chol_paths<F: Fn(f64, f64) -> f64>(cov: F, points: &[f64], n: usize, seed: u64) -> Result<PathBatch> {
    if n == 0 {
        return Err(Error::Domain("path count must be >= 1".into()));
    }
    Ok(CholSampler::new(cov, points)?.batch(n, seed))
}

fn sorted_distinct(points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Domain("no sample points".into()));
    }
    let mut v = points.to_vec();
    v.sort_by(f64::total_cmp);
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("sample points must be distinct".into()));
    }
    Ok(v)
}
