use super::{EngineTag, PathBatch};
use crate::error::{Error, Result};

/// Pointwise weighted norm `sqrt(Σ b_i² X_i(t)²)` of coordinate batches.
///
/// This equals the maximum of `⟨v, bX(t)⟩` over unit vectors `v`, so the sphere drops out of a
/// Monte Carlo domain exactly.
pub fn dual_norm_reduction(coords: &[PathBatch], weights: &[f64]) -> Result<PathBatch> {
    let first = coords.first().ok_or_else(|| Error::Shape("no coordinate batches".into()))?;
    if coords.len() != weights.len() {
        return Err(Error::Shape(format!("{} coordinate batches but {} weights", coords.len(), weights.len())));
    }
    for c in coords {
        if c.n_paths != first.n_paths || c.n_nodes != first.n_nodes || c.grid != first.grid {
            return Err(Error::Shape("coordinate batches differ in grid or path count".into()));
        }
        if c.seed != first.seed {
            return Err(Error::Shape("coordinate batches come from different seeds".into()));
        }
    }
    let mut values = vec![0.0; first.values.len()];
    for (c, &b) in coords.iter().zip(weights) {
        let b2 = b * b;
        for (v, x) in values.iter_mut().zip(&c.values) {
            *v += b2 * x * x;
        }
    }
    values.iter_mut().for_each(|v| *v = v.sqrt());
    Ok(PathBatch {
        values,
        n_paths: first.n_paths,
        n_nodes: first.n_nodes,
        grid: first.grid.clone(),
        seed: first.seed,
        engine: EngineTag::DualNorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::GridSpec;

    fn batch(v: Vec<f64>, seed: u64) -> PathBatch {
        let n = v.len();
        PathBatch {
            values: v,
            n_paths: 1,
            n_nodes: n,
            grid: GridSpec::uniform(0.0, 1.0, n).unwrap(),
            seed,
            engine: EngineTag::Fbm,
        }
    }

    #[test]
    fn euclidean_norm() {
        let r = dual_norm_reduction(&[batch(vec![3.0, -1.0], 1), batch(vec![4.0, 0.0], 1)], &[1.0, 1.0]).unwrap();
        assert_eq!(r.values, vec![5.0, 1.0]);
        let r = dual_norm_reduction(&[batch(vec![-2.0, 0.5], 1)], &[1.0]).unwrap();
        assert_eq!(r.values, vec![2.0, 0.5]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(dual_norm_reduction(&[batch(vec![1.0], 1), batch(vec![1.0, 2.0], 1)], &[1.0, 1.0]).is_err());
        assert!(dual_norm_reduction(&[batch(vec![1.0], 1)], &[1.0, 1.0]).is_err());
    }
}
