use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter domain: a time box, optionally times the unit sphere `S^k ⊂ ℝ^{k+1}`.
///
/// Local coordinates at a point list the time axes first, then `k` orthonormal tangent
/// directions of the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub time: Vec<(f64, f64)>,
    /// Intrinsic dimension `k` of the sphere factor.
    pub sphere: Option<usize>,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { time: vec![(lo, hi)], sphere: None }
    }

    pub fn cylinder(lo: f64, hi: f64, sphere_dim: usize) -> Self {
        Self { time: vec![(lo, hi)], sphere: Some(sphere_dim) }
    }

    pub fn time_dim(&self) -> usize {
        self.time.len()
    }

    pub fn sphere_dim(&self) -> usize {
        self.sphere.unwrap_or(0)
    }

    /// Total intrinsic dimension `d`.
    pub fn dim(&self) -> usize {
        self.time_dim() + self.sphere_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.time.is_empty() {
            return Err(Error::Domain("domain needs at least one time axis".into()));
        }
        for (i, &(lo, hi)) in self.time.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Domain(format!("time axis {i} has empty or infinite range [{lo}, {hi}]")));
            }
        }
        if self.sphere == Some(0) {
            return Err(Error::Domain("sphere factor must have dimension >= 1".into()));
        }
        Ok(())
    }

    /// Whether `p` lies in the closure of the domain (time within `tol`, sphere part unit norm).
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        if p.time.len() != self.time.len() {
            return false;
        }
        let time_ok = p.time.iter().zip(&self.time).all(|(&t, &(lo, hi))| t >= lo - tol && t <= hi + tol);
        let sphere_ok = match (&p.sphere, self.sphere) {
            (None, None) => true,
            (Some(v), Some(k)) => v.len() == k + 1 && (norm(v) - 1.0).abs() <= 1e-9,
            _ => false,
        };
        time_ok && sphere_ok
    }
}

/// A point `(t, v)` of a [`Domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub time: Vec<f64>,
    pub sphere: Option<Vec<f64>>,
}

impl Point {
    pub fn at(t: f64) -> Self {
        Self { time: vec![t], sphere: None }
    }

    pub fn on_cylinder(t: f64, v: Vec<f64>) -> Self {
        Self { time: vec![t], sphere: Some(v) }
    }

    /// Flat coordinate list (time then ambient sphere coordinates), used in diagnostics.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.time.clone();
        if let Some(v) = &self.sphere {
            c.extend_from_slice(v);
        }
        c
    }

    /// Move by local coordinates `s`: time axes additively, sphere axes along the great circle
    /// spanned by the tangent vector `Σ s_j e_j`.
    pub fn offset(&self, s: &[f64]) -> Point {
        let nt = self.time.len();
        let time = self.time.iter().zip(s).map(|(t, d)| t + d).collect();
        let sphere = self.sphere.as_ref().map(|v| {
            let basis = tangent_basis(v);
            let mut w = vec![0.0; v.len()];
            for (e, &c) in basis.iter().zip(&s[nt.min(s.len())..]) {
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi += c * ei;
                }
            }
            let theta = norm(&w);
            if theta == 0.0 {
                return v.clone();
            }
            let (sn, cs) = theta.sin_cos();
            v.iter().zip(&w).map(|(vi, wi)| cs * vi + sn * wi / theta).collect()
        });
        Point { time, sphere }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the tangent space of the unit sphere at `v`.
///
/// Gram-Schmidt over the standard basis, skipping the direction most aligned with `v`, so the
/// basis is deterministic and continuous away from coordinate switches.
pub fn tangent_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let skip = (0..n).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    let mut frame: Vec<Vec<f64>> = vec![v.to_vec()];
    for i in (0..n).filter(|&i| i != skip) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for f in &frame {
            let c = dot(&e, f);
            for (x, y) in e.iter_mut().zip(f) {
                *x -= c * y;
            }
        }
        let m = norm(&e);
        e.iter_mut().for_each(|x| *x /= m);
        frame.push(e.clone());
        basis.push(e);
    }
    basis
}

/// Hyperspherical coordinates on `S^k`: `θ_1..θ_{k-1} ∈ [0, π]`, `θ_k ∈ [0, 2π)`.
pub fn sphere_embed(theta: &[f64]) -> Vec<f64> {
    let k = theta.len();
    let mut v = vec![0.0; k + 1];
    let mut prod = 1.0;
    for j in 0..k {
        v[j] = prod * theta[j].cos();
        prod *= theta[j].sin();
    }
    v[k] = prod;
    v
}

/// Volume element of [`sphere_embed`]: `∏_j sin^{k-1-j}(θ_j)`.
pub fn sphere_volume_element(theta: &[f64]) -> f64 {
    let k = theta.len();
    (0..k).map(|j| theta[j].sin().abs().powi((k - 1 - j) as i32)).product()
}

/// Parameter box of [`sphere_embed`].
pub fn sphere_param_box(k: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, std::f64::consts::PI); k];
    if let Some(last) = b.last_mut() {
        *last = (0.0, 2.0 * std::f64::consts::PI);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_basis_is_orthonormal() {
        let v = [0.6, 0.0, 0.8];
        let b = tangent_basis(&v);
        assert_eq!(b.len(), 2);
        for e in &b {
            assert_abs_diff_eq!(norm(e), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(dot(e, &v), 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(dot(&b[0], &b[1]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn offset_moves_along_great_circle() {
        let p = Point::on_cylinder(1.0, vec![1.0, 0.0]);
        let q = p.offset(&[-0.25, 0.3]);
        assert_abs_diff_eq!(q.time[0], 0.75);
        let v = q.sphere.unwrap();
        assert_abs_diff_eq!(norm(&v), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dot(&v, &[1.0, 0.0]), 0.3f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn hyperspherical_chart() {
        assert_abs_diff_eq!(norm(&sphere_embed(&[0.4, 1.1, 2.0])), 1.0, epsilon = 1e-14);
        let v = sphere_embed(&[1.0]);
        assert_abs_diff_eq!(v[0], 1.0f64.cos());
        assert_abs_diff_eq!(sphere_volume_element(&[0.5, 3.0]), 0.5f64.sin());
    }
}
