//! Special functions and Laplace-type integrals shared by the asymptotic formulas.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian tail asymptote `e^{-u²/2} / (√(2π) u)`.
pub fn psi(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("psi requires u > 0, got {u}")));
    }
    Ok((-0.5 * u * u).exp() / ((2.0 * PI).sqrt() * u))
}

/// `ln Ψ(u)`, usable where `psi` underflows.
pub fn ln_psi(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("psi requires u > 0, got {u}")));
    }
    Ok(-0.5 * u * u - (2.0 * PI).sqrt().ln() - u.ln())
}

/// Exact standard normal tail `1 - Φ(u)`, computed through `erfc`.
pub fn gauss_tail(u: f64) -> f64 {
    0.5 * libm::erfc(u / SQRT_2)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    OneSided,
}

impl Sidedness {
    pub fn factor(self) -> f64 {
        match self {
            Sidedness::TwoSided => 2.0,
            Sidedness::OneSided => 1.0,
        }
    }
}

/// One axis of a power-law form `b |s|^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
    #[serde(default)]
    pub sided: Sidedness,
}

/// Additive power-law form `f(s) = Σ_j b_j |s_j|^{β_j}`, one term per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    terms: Vec<PowerTerm>,
}

impl PowerLawSpec {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("power-law spec needs at least one term".into()));
        }
        for (j, t) in terms.iter().enumerate() {
            if !(t.coeff > 0.0 && t.coeff.is_finite()) {
                return Err(Error::Domain(format!("term {j}: coefficient must be > 0, got {}", t.coeff)));
            }
            if !(t.exponent > 0.0 && t.exponent.is_finite()) {
                return Err(Error::Domain(format!("term {j}: exponent must be > 0, got {}", t.exponent)));
            }
        }
        Ok(Self { terms })
    }

    /// Two-sided terms from `(b, β)` pairs.
    pub fn two_sided(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(coeff, exponent)| PowerTerm { coeff, exponent, sided: Sidedness::TwoSided })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        self.terms.iter().zip(s).map(|(t, x)| t.coeff * x.abs().powf(t.exponent)).sum()
    }

    /// Integration box matching the sidedness of each term, `[-w, w]` or `[0, w]`.
    pub fn natural_box(&self, widths: &[f64]) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .zip(widths)
            .map(|(t, &w)| match t.sided {
                Sidedness::TwoSided => (-w, w),
                Sidedness::OneSided => (0.0, w),
            })
            .collect()
    }
}

/// Leading-order Laplace asymptotics of `∫ e^{-λ Σ b_j|s_j|^{β_j}} ds` around the origin:
/// `∏_j c_j Γ(1 + 1/β_j) (λ b_j)^{-1/β_j}` with `c_j = 2` for two-sided axes and 1 otherwise.
pub fn laplace_powerlaw_asym(spec: &PowerLawSpec, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    Ok(spec
        .terms
        .iter()
        .map(|t| t.sided.factor() * gamma(1.0 + 1.0 / t.exponent) * (lambda * t.coeff).powf(-1.0 / t.exponent))
        .product())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated relative error of `value`.
    pub rel_err: f64,
}

pub const LAPLACE_REL_TOL: f64 = 1e-8;
const MAX_LEVELS: u32 = 20;
const MAX_INTERVALS: usize = 4000;

/// `∫_box e^{-λ f(s)} ds` by nested adaptive Gauss–Kronrod quadrature, one axis at a time.
///
/// Each axis is first split on a geometric grid graded toward the located minimum of the
/// integrand's exponent, then refined adaptively (at most 20 bisection levels per initial piece)
/// until the estimated relative error falls below `1e-8`.
pub fn laplace_numeric<F>(f: F, bx: &[(f64, f64)], lambda: f64) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> f64,
{
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be > 0, got {lambda}")));
    }
    if bx.is_empty() {
        let v = f(&[]);
        check_finite(&[], v)?;
        return Ok(Quadrature { value: (-lambda * v).exp(), rel_err: 0.0 });
    }
    for &(lo, hi) in bx {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("invalid integration interval [{lo}, {hi}]")));
        }
    }
    let mut point = vec![0.0; bx.len()];
    nested(&f, bx, lambda, 0, &mut point)
}

fn check_finite(point: &[f64], v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Evaluation { point: point.to_vec(), value: v })
    }
}

fn nested<F>(f: &F, bx: &[(f64, f64)], lambda: f64, axis: usize, point: &mut Vec<f64>) -> Result<Quadrature>
where
    F: Fn(&[f64]) -> f64,
{
    let (lo, hi) = bx[axis];
    let last = axis + 1 == bx.len();
    let mut inner_rel = 0.0_f64;
    let mut g = |x: f64, point: &mut Vec<f64>| -> Result<f64> {
        point[axis] = x;
        if last {
            let v = f(point);
            check_finite(point, v)?;
            Ok((-lambda * v).exp())
        } else {
            let q = nested(f, bx, lambda, axis + 1, point)?;
            inner_rel = inner_rel.max(q.rel_err);
            Ok(q.value)
        }
    };
    // Locate where the integrand peaks along this axis, holding outer coordinates fixed.
    let peak = locate_peak(lo, hi, |x, p| g(x, p), point)?;
    let breaks = graded_breaks(lo, hi, peak);
    let q = adaptive_gk(|x, p| g(x, p), &breaks, LAPLACE_REL_TOL, point)?;
    Ok(Quadrature { value: q.value, rel_err: q.rel_err + inner_rel })
}

fn locate_peak<G>(lo: f64, hi: f64, mut g: G, point: &mut Vec<f64>) -> Result<f64>
where
    G: FnMut(f64, &mut Vec<f64>) -> Result<f64>,
{
    const SCAN: usize = 64;
    let h = (hi - lo) / SCAN as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=SCAN {
        let x = lo + h * i as f64;
        let v = g(x, point)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    // golden-section refinement inside the bracketing cells
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut gc = g(c, point)?;
    let mut gd = g(d, point)?;
    for _ in 0..60 {
        if (b - a) <= 1e-15 * (1.0 + best.0.abs()) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c, point)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d, point)?;
        }
    }
    let mut x = 0.5 * (a + b);
    let mut gx = g(x, point)?;
    // both probes can underflow on a sharp peak; then the scan point is better
    if gx < best.1 {
        (x, gx) = best;
    }
    // snap to an endpoint when the peak sits on the boundary
    let glo = g(lo, point)?;
    let ghi = g(hi, point)?;
    if glo >= gx && glo >= ghi {
        Ok(lo)
    } else if ghi >= gx {
        Ok(hi)
    } else {
        Ok(x)
    }
}

/// Breakpoints on `[lo, hi]` clustered geometrically around `peak`.
fn graded_breaks(lo: f64, hi: f64, peak: f64) -> Vec<f64> {
    const DEPTH: i32 = 48;
    let mut pts = vec![lo, hi, peak];
    for side in [lo, hi] {
        let w = side - peak;
        if w.abs() == 0.0 {
            continue;
        }
        for k in 1..=DEPTH {
            pts.push(peak + w * 0.5f64.powi(k));
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= f64::EPSILON * (1.0 + b.abs()));
    pts.retain(|x| *x >= lo && *x <= hi);
    pts
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    level: u32,
}

fn gk15<G>(g: &mut G, a: f64, b: f64, point: &mut Vec<f64>) -> Result<(f64, f64)>
where
    G: FnMut(f64, &mut Vec<f64>) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c, point)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = g(c - dx, point)? + g(c + dx, point)?;
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Globally adaptive Gauss–Kronrod (7–15) over the given breakpoints.
pub(crate) fn adaptive_gk<G>(mut g: G, breaks: &[f64], rel_tol: f64, point: &mut Vec<f64>) -> Result<Quadrature>
where
    G: FnMut(f64, &mut Vec<f64>) -> Result<f64>,
{
    let mut pieces = Vec::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut g, w[0], w[1], point)?;
        pieces.push(Piece { a: w[0], b: w[1], value: v, err: e, level: 0 });
    }
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        let scale = total.abs().max(f64::MIN_POSITIVE);
        if err <= rel_tol * scale || pieces.len() >= MAX_INTERVALS {
            return Ok(Quadrature { value: total, rel_err: err / scale });
        }
        // bisect the worst piece that may still be refined
        let worst = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.level < MAX_LEVELS)
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap());
        let Some((i, _)) = worst else {
            return Ok(Quadrature { value: total, rel_err: err / scale });
        };
        let p = pieces.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&mut g, p.a, m, point)?;
        let (v2, e2) = gk15(&mut g, m, p.b, point)?;
        pieces.push(Piece { a: p.a, b: m, value: v1, err: e1, level: p.level + 1 });
        pieces.push(Piece { a: m, b: p.b, value: v2, err: e2, level: p.level + 1 });
    }
}

/// Plain adaptive integral of a smooth scalar function over `[a, b]`.
pub fn integrate<G>(mut g: G, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature>
where
    G: FnMut(f64) -> f64,
{
    let mut dummy = Vec::new();
    adaptive_gk(
        |x, _| {
            let v = g(x);
            check_finite(&[x], v)?;
            Ok(v)
        },
        &[a, b],
        rel_tol,
        &mut dummy,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_values() {
        assert_relative_eq!(psi(1.0).unwrap(), 0.241970724519143, max_relative = 1e-12);
        assert_relative_eq!(psi(2.0).unwrap(), 0.026995483256594, max_relative = 1e-12);
        assert_relative_eq!(psi(3.0).unwrap(), 0.001477282803979, max_relative = 1e-11);
        assert!(psi(0.0).is_err());
        assert!(psi(-1.0).is_err());
    }

    #[test]
    fn psi_strictly_decreasing_from_one() {
        let mut prev = psi(1.0).unwrap();
        for i in 1..200 {
            let v = psi(1.0 + 0.05 * i as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn gauss_tail_values() {
        assert_eq!(gauss_tail(0.0), 0.5);
        // mpmath: 0.5*erfc(3/sqrt(2))
        assert_relative_eq!(gauss_tail(3.0), 0.00134989803163009452665, max_relative = 1e-12);
        let r = gauss_tail(8.0) / psi(8.0).unwrap();
        assert!((r - 1.0).abs() < 0.02, "{r}");
    }

    #[test]
    fn psi_dominates_tail() {
        for i in 0..400 {
            let u = 0.2 + 0.025 * i as f64;
            assert!(psi(u).unwrap() > gauss_tail(u), "u={u}");
        }
    }

    #[test]
    fn gamma_matches_known_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5), 0.5 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
    }

    #[test]
    fn laplace_identity_case_is_volume() {
        let q = laplace_numeric(|_| 0.0, &[(0.0, 1.0), (0.0, 1.0)], 5.0).unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn laplace_quadratic_and_abs() {
        let q = laplace_numeric(|s| s[0] * s[0], &[(-1.0, 1.0)], 100.0).unwrap();
        assert_relative_eq!(q.value, (PI / 100.0).sqrt() * libm::erf(10.0), max_relative = 1e-9);
        let q = laplace_numeric(|s| s[0].abs(), &[(-1.0, 1.0)], 10.0).unwrap();
        assert_relative_eq!(q.value, 2.0 * (1.0 - (-10f64).exp()) / 10.0, max_relative = 1e-9);
        assert!(q.rel_err < 1e-8);
    }

    #[test]
    fn laplace_reports_bad_samples() {
        let err = laplace_numeric(|s| if s[0] > 0.5 { f64::NAN } else { 0.0 }, &[(0.0, 1.0)], 1.0).unwrap_err();
        match err {
            Error::Evaluation { point, .. } => assert!(point[0] > 0.5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn powerlaw_asym_closed_forms() {
        let g = PowerLawSpec::two_sided(&[(1.0, 2.0)]).unwrap();
        assert_relative_eq!(laplace_powerlaw_asym(&g, 1.0).unwrap(), PI.sqrt(), max_relative = 1e-13);
        let e = PowerLawSpec::two_sided(&[(2.0, 1.0)]).unwrap();
        assert_relative_eq!(laplace_powerlaw_asym(&e, 10.0).unwrap(), 0.1, max_relative = 1e-13);
        let one = PowerLawSpec::new(vec![PowerTerm { coeff: 2.0, exponent: 1.0, sided: Sidedness::OneSided }]).unwrap();
        assert_relative_eq!(laplace_powerlaw_asym(&one, 10.0).unwrap(), 0.05, max_relative = 1e-13);
    }

    #[test]
    fn powerlaw_spec_invariants() {
        assert!(PowerLawSpec::new(vec![]).is_err());
        assert!(PowerLawSpec::two_sided(&[(0.0, 1.0)]).is_err());
        assert!(PowerLawSpec::two_sided(&[(1.0, -1.0)]).is_err());
    }

    #[test]
    fn mixed_spec_against_numeric() {
        let spec = PowerLawSpec::two_sided(&[(1.0, 1.0), (1.0, 2.0)]).unwrap();
        let asym = laplace_powerlaw_asym(&spec, 1e4).unwrap();
        assert_relative_eq!(asym, 3.5449e-6, max_relative = 1e-4);
        let q = laplace_numeric(|s| spec.eval(s), &[(-1.0, 1.0), (-1.0, 1.0)], 1e4).unwrap();
        assert!((q.value / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(s, 2.0 / 15.0, max_relative = 1e-13);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }
}
