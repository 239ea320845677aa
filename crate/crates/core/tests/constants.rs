use excursion::constants::*;
use excursion::specfun::Sidedness;
use excursion::Error;

const SEED: u64 = 71;

fn cfg(delta: f64, n: usize) -> McSettings {
    McSettings::new(delta, n, SEED)
}

#[test]
fn tabulated_constants() {
    assert_eq!(known_constant(1.0), Some(1.0));
    assert!((known_constant(2.0).unwrap() - 0.5641895835477563).abs() < 1e-15);
    assert_eq!(known_constant(1.5), None);
}

#[test]
fn products() {
    let c = cfg(1.0 / 16.0, 10_000);
    let e = pickands_product(&[2.0, 2.0], &[8.0, 8.0], &c).unwrap();
    assert!((e.value - 1.0 / std::f64::consts::PI).abs() < 1e-14 && e.std_err == 0.0);
    assert_eq!(pickands_product(&[1.0], &[8.0], &c).unwrap().value, 1.0);

    // both sides on the same grid, so the discretization deficit is shared
    let c = cfg(1.0 / 16.0, 20_000).with_mesh(MeshPolicy::Ignore);
    let prod = pickands_product(&[1.5, 1.8], &[4.0, 4.0], &c).unwrap();
    let direct = pickands_2d_direct([1.5, 1.8], 4.0, &c).unwrap();
    let joint = (prod.std_err.powi(2) + direct.std_err.powi(2)).sqrt();
    assert!((prod.value - direct.value).abs() <= 3.0 * joint, "{} vs {} (σ {joint})", prod.value, direct.value);
}

#[test]
fn alpha_two_window_is_quadrature_exact() {
    // B(s) = s·ξ: the window maximum is explicit, so E exp(max) is a 1D Gaussian integral
    let t = 5.0;
    let n = 200_000;
    let (a, b) = (-40.0, 40.0);
    let h = (b - a) / n as f64;
    let g = |x: f64| {
        let m = if x <= 0.0 {
            0.0
        } else if x / 2f64.sqrt() <= t {
            0.5 * x * x
        } else {
            2f64.sqrt() * x * t - t * t
        };
        (-0.5 * x * x + m).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let inner: f64 = (1..n).map(|i| g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    let oracle = (g(a) + g(b) + inner) * h / 3.0;
    let w = pickands_window(2.0, t, &cfg(t / 256.0, 20_000)).unwrap();
    assert!((w.value / oracle - 1.0).abs() < 0.01, "{} vs {oracle}", w.value);
}

#[test]
fn piterbarg_closed_forms() {
    let c = cfg(1.0 / 64.0, 20_000);
    let cases = [
        (2.0, 1.0, Sidedness::TwoSided, 2f64.sqrt()),
        (2.0, 1.0, Sidedness::OneSided, 0.5 * (1.0 + 2f64.sqrt())),
        (1.0, 1.0, Sidedness::OneSided, 2.0),
        (1.0, 2.0, Sidedness::OneSided, 1.5),
        (1.0, 1.0, Sidedness::TwoSided, 1.0 + 2.0 - 1.0 / 3.0),
    ];
    for (alpha, b, sided, exact) in cases {
        let nw = NormalWindow::new(alpha, H1Form::power(b, alpha), sided);
        let e = piterbarg_axis(&nw, None, &c, 0).unwrap();
        let tol = (3.0 * e.std_err).max(0.02 * exact);
        assert!((e.value - exact).abs() <= tol, "α={alpha} b={b} {sided:?}: {} ± {} vs {exact}", e.value, e.std_err);
    }
}

#[test]
fn asymmetric_drift_matches_closed_form() {
    // α = 1, drift b₁|s| on the left and b₂|s| on the right
    let (b1, b2) = (0.5, 2.0);
    let (c1, c2) = (1.0 + b1, 1.0 + b2);
    let exact = 1.0 + 1.0 / (c1 - 1.0) + 1.0 / (c2 - 1.0) - 1.0 / (c1 + c2 - 1.0);
    let nw = NormalWindow::new(1.0, H1Form::Power { minus: b1, plus: b2, exponent: 1.0 }, Sidedness::TwoSided);
    let e = piterbarg_axis(&nw, None, &cfg(1.0 / 64.0, 20_000), 0).unwrap();
    assert!((e.value - exact).abs() <= (3.0 * e.std_err).max(0.02 * exact), "{} ± {} vs {exact}", e.value, e.std_err);
}

#[test]
fn talagrand_normal_axis_is_one() {
    let nw = NormalWindow::new(1.0, H1Form::Infinite, Sidedness::TwoSided);
    let e = piterbarg_axis(&nw, None, &cfg(0.01, 10_000), 0).unwrap();
    assert_eq!((e.value, e.std_err), (1.0, 0.0));
}

#[test]
fn window_monotone_in_t_and_at_least_one() {
    let c = cfg(1.0 / 32.0, 10_000);
    for alpha in [0.8, 1.2, 1.8] {
        let mut prev: Option<WindowEstimate> = None;
        for t in [2.0, 4.0, 8.0, 16.0] {
            let w = pickands_window(alpha, t, &c.with_mesh(MeshPolicy::Ignore)).unwrap();
            assert!(w.value >= 1.0 - 2.0 * w.std_err, "α={alpha} T={t}: {}", w.value);
            if let Some(p) = prev {
                let s = (p.std_err.powi(2) + w.std_err.powi(2)).sqrt();
                assert!(w.value >= p.value - 2.0 * s, "α={alpha} T={t}: {} after {}", w.value, p.value);
            }
            prev = Some(w);
        }
    }
}

#[test]
fn refining_the_mesh_does_not_lower_the_window() {
    for alpha in [0.7, 1.5] {
        let coarse = pickands_window(alpha, 4.0, &cfg(1.0 / 16.0, 10_000).with_mesh(MeshPolicy::Ignore)).unwrap();
        let fine = pickands_window(alpha, 4.0, &cfg(1.0 / 32.0, 10_000).with_mesh(MeshPolicy::Ignore)).unwrap();
        assert!(fine.value >= coarse.value - 2.0 * fine.std_err, "α={alpha}: {} vs {}", fine.value, coarse.value);
    }
}

#[test]
fn zero_drift_window_equals_pickands_window() {
    let c = cfg(1.0 / 32.0, 10_000).with_mesh(MeshPolicy::Ignore);
    let pk = pickands_window(1.3, 4.0, &c).unwrap();
    let pt = piterbarg_window(&[], 0.0, &[NormalWindow::new(1.3, H1Form::Zero, Sidedness::OneSided)], 4.0, &c).unwrap();
    assert!((pk.value - pt.value).abs() <= 2.0 * (pk.std_err.powi(2) + pt.std_err.powi(2)).sqrt());
}

#[test]
fn drift_strength_decreases_window_toward_one() {
    let c = cfg(1.0 / 32.0, 10_000).with_mesh(MeshPolicy::Ignore);
    let vals: Vec<f64> = [0.25, 1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&k| {
            let nw = NormalWindow::new(1.5, H1Form::power(k, 1.5), Sidedness::TwoSided);
            piterbarg_window(&[], 0.0, &[nw], 4.0, &c).unwrap().value
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 0.01), "{vals:?}");
    assert!(vals[4] >= 0.99 && vals[4] < 1.1, "{vals:?}");
}

#[test]
fn differenced_estimates_near_known_values() {
    let h2 = pickands_estimate(2.0, 10.0, 0.01, 20_000, SEED).unwrap();
    assert_eq!(h2.method, Method::Differenced);
    assert!((h2.value - 0.5641895835).abs() < 4.0 * h2.std_err + 0.005, "{h2:?}");
    let h1 = pickands_estimate(1.0, 10.0, 0.01, 20_000, SEED).unwrap();
    assert!((h1.value - 1.0).abs() < 4.0 * h1.std_err + 0.01, "{h1:?}");
}

#[test]
fn preconditions_and_refusal() {
    assert!(matches!(pickands_estimate(1.0, 1.0, 0.1, 10_000, 1), Err(Error::Domain(_))));
    assert!(matches!(pickands_estimate(1.0, 10.0, 0.01, 100, 1), Err(Error::Domain(_))));
    assert!(matches!(pickands_estimate(2.5, 10.0, 0.01, 10_000, 1), Err(Error::Domain(_))));
    let single = pickands_estimate(1.7, 0.0, 0.01, 10_000, 1).unwrap();
    assert_eq!(single.value, 1.0);
    // a rough field on a coarse grid misses much of its maximum
    match pickands_estimate(0.4, 4.0, 1.0 / 16.0, 10_000, 1) {
        Err(Error::MeshTooCoarse { suggested, .. }) => assert!(suggested < 1.0 / 16.0),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn provider_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let settings = ProviderSettings {
        t_window: 4.0,
        delta: 1.0 / 32.0,
        n_paths: 10_000,
        max_nodes: 512,
        cache_dir: Some(dir.path().to_path_buf()),
        ..ProviderSettings::default()
    };
    let first = ConstantsProvider::new(settings.clone()).unwrap();
    let a = first.pickands(1.5).unwrap();
    assert!(dir.path().join("constants-v1.toml").exists());
    let second = ConstantsProvider::new(settings).unwrap();
    assert_eq!(second.entries().len(), 1);
    assert_eq!(second.pickands(1.5).unwrap(), a);
    assert_eq!(first.pickands(2.0).unwrap().method, Method::ClosedForm);
}
