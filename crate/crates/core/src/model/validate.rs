use super::{FieldModel, Point};
use crate::error::{Error, Result, Violation};
use crate::specfun::gauss_legendre;

const SIGMA_TOL: f64 = 1e-10;
const AMP_RANGE: (f64, f64) = (1e-8, 1e8);

fn v(field: &str, message: impl Into<String>, point: Option<&Point>) -> Violation {
    Violation { field: field.into(), message: message.into(), point: point.map(Point::coords) }
}

/// Sampled check of the model invariants; all violations are collected.
pub fn validate_model(m: &FieldModel) -> Result<()> {
    let mut out = Vec::new();
    if let Err(e) = m.domain.validate() {
        out.push(v("domain", e.to_string(), None));
        return Err(Error::InvalidModel(out));
    }
    let d = m.dim();
    let corr = &m.correlation;
    if corr.alphas.len() != d {
        out.push(v("alphas", format!("{} exponents for a {d}-dimensional domain", corr.alphas.len()), None));
    }
    if corr.amplitudes.len() != corr.alphas.len() {
        out.push(v("amplitudes", "one amplitude per axis required", None));
    }
    for (i, &a) in corr.alphas.iter().enumerate() {
        if !(a > 0.0 && a <= 2.0) {
            out.push(v("alphas", format!("alpha out of (0,2]: axis {i} has {a}"), None));
        }
    }
    if !out.is_empty() {
        return Err(Error::InvalidModel(out));
    }
    let ms = &m.maxset;
    if ms.charts.is_empty() {
        out.push(v("maxset", "no charts", None));
    }
    if m.variance.normal_forms.len() > ms.charts.len() {
        out.push(v("normal_form", "more normal forms than charts", None));
    }
    let span: Vec<f64> = m.domain.time.iter().map(|(a, b)| b - a).collect();
    let mut centers: Vec<Point> = Vec::new();
    for (ci, chart) in ms.charts.iter().enumerate() {
        let field = |s: &str| format!("maxset.charts[{ci}].{s}");
        if chart.dim() != ms.dim {
            out.push(v(&field("param_box"), format!("chart dimension {} differs from maxset dimension {}", chart.dim(), ms.dim), None));
        }
        if chart.tangential.len() != chart.dim() {
            out.push(v(&field("tangential"), "one tangential axis per chart parameter required", None));
        }
        let mut axes: Vec<usize> = chart.tangential.iter().copied().chain(chart.normal.iter().map(|n| n.axis)).collect();
        axes.sort_unstable();
        if axes != (0..d).collect::<Vec<_>>() {
            out.push(v(&field("axes"), format!("tangential and normal axes must partition 0..{d}, got {axes:?}"), None));
            continue;
        }
        if let Some(nf) = m.normal_form(ci) {
            if nf.terms().len() != chart.normal.len() {
                out.push(v(&field("normal_form"), "one term per normal axis required", None));
            } else {
                for (t, n) in nf.terms().iter().zip(&chart.normal) {
                    if t.sided != n.sided {
                        out.push(v(&field("normal_form"), format!("sidedness of axis {} disagrees with the chart", n.axis), None));
                    }
                }
            }
        }
        for &(a, b) in &chart.param_box {
            if !(a.is_finite() && b.is_finite() && b > a) {
                out.push(v(&field("param_box"), format!("empty parameter range [{a}, {b}]"), None));
            }
        }
        for param in chart.probe_nodes() {
            let p = (chart.embed)(&param);
            if !m.domain.contains(&p, 1e-12) {
                out.push(v(&field("embed"), "maximum-set point outside the domain", Some(&p)));
                continue;
            }
            for (i, amp) in corr.amplitudes.iter().enumerate() {
                let a = amp.at(&p);
                if !(a >= AMP_RANGE.0 && a <= AMP_RANGE.1) {
                    out.push(v("amplitudes", format!("axis {i}: A = {a} outside [{:e}, {:e}]", AMP_RANGE.0, AMP_RANGE.1), Some(&p)));
                }
            }
            let s = m.sigma(&p);
            let def = m.deficit(&p);
            if !((s - 1.0).abs() <= SIGMA_TOL) || !(def.abs() <= SIGMA_TOL) {
                out.push(v("sigma", format!("σ = {s} on the maximum set, expected 1"), Some(&p)));
            }
            if let Some(r) = &corr.full_correlation {
                let r0 = r(&p, &p);
                if !((r0 - 1.0).abs() <= 1e-10) {
                    out.push(v("full_correlation", format!("r(t,t) = {r0}"), Some(&p)));
                }
            }
            for n in &chart.normal {
                let width = if n.axis < span.len() { span[n.axis] } else { 1.0 };
                for dir in n.directions() {
                    for frac in [1e-3, 1e-2] {
                        let mut off = vec![0.0; d];
                        off[n.axis] = dir * frac * width;
                        let q = p.offset(&off);
                        if !m.domain.contains(&q, 0.0) {
                            continue;
                        }
                        let dq = m.deficit(&q);
                        if !(dq > 0.0) {
                            out.push(v("sigma", format!("σ not below 1 off the maximum set (1-σ = {dq})"), Some(&q)));
                        }
                        if let Some(r) = &corr.full_correlation {
                            let c = r(&p, &q);
                            if !(c.abs() <= 1.0 + 1e-12) {
                                out.push(v("full_correlation", format!("|r| = {} > 1", c.abs()), Some(&q)));
                            }
                        }
                    }
                }
            }
        }
        let c = (chart.embed)(&chart.center());
        if chart.dim() == 0 && centers.iter().any(|o| dist(o, &c) < 1e-9) {
            out.push(v(&field("embed"), "isolated points coincide", Some(&c)));
        }
        centers.push(c);
    }
    if ms.dim >= 1 {
        let vol: f64 = ms.charts.iter().map(|c| chart_volume(c)).sum();
        if !(vol.is_finite() && vol > 0.0) {
            out.push(v("maxset", format!("total volume {vol} not finite and positive"), None));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidModel(out))
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    let (x, y) = (a.coords(), b.coords());
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Tensor Gauss-Legendre volume of a chart (16 nodes per parameter).
fn chart_volume(c: &super::Chart) -> f64 {
    let (x, w) = gauss_legendre(16);
    let r = c.dim();
    let mut total = 0.0;
    let mut idx = vec![0usize; r];
    loop {
        let mut param = Vec::with_capacity(r);
        let mut weight = 1.0;
        for (k, &(a, b)) in c.param_box.iter().enumerate() {
            let h = 0.5 * (b - a);
            param.push(a + h * (1.0 + x[idx[k]]));
            weight *= h * w[idx[k]];
        }
        total += weight * (c.volume)(&param);
        let mut k = 0;
        while k < r {
            idx[k] += 1;
            if idx[k] < x.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == r {
            break;
        }
    }
    total
}
