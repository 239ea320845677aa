use excursion::model::*;
use excursion::zoo::{make_power_family, make_stationary, recipes};
use proptest::prelude::*;

#[test]
fn ou_config_builds_homogeneous_model() {
    let m = build_model(&parse_inline("ou").unwrap()).unwrap();
    assert_eq!(m.dim(), 1);
    assert_eq!(m.maxset.dim, 1);
    assert_eq!(m.correlation.alphas, vec![1.0]);
    for t in [0.0, 0.3, 1.0] {
        assert_eq!(m.sigma(&Point::at(t)), 1.0);
    }
}

#[test]
fn alpha_above_two_is_rejected() {
    let err = build_model(&parse_inline("stationary:alpha=2.5").unwrap()).unwrap_err();
    assert!(err.to_string().contains("alpha out of (0,2]"), "{err}");
    assert!(make_stationary(0.0, 1.0, 1.0).is_err());
}

#[test]
fn bessel_domain_and_maxset() {
    let m = build_model(&parse_inline("bessel:d=2").unwrap()).unwrap();
    assert_eq!(m.domain.time, vec![(0.0, 1.0)]);
    assert_eq!(m.domain.sphere_dim(), 1);
    assert_eq!(m.maxset.dim, 1);
    // every point of the maximum set sits at t = 1 with unit variance
    for chart in &m.maxset.charts {
        for node in chart.probe_nodes() {
            let p = (chart.embed)(&node);
            assert!((p.time[0] - 1.0).abs() < 1e-12);
            assert!((m.sigma(&p) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn h_eval_examples() {
    let m = build_model(&parse_inline("bessel:d=2").unwrap()).unwrap();
    assert_eq!(m.correlation.alphas, vec![1.0, 2.0]);
    assert_eq!(h_eval(&m, &[0.0, 0.0]), 0.0);
    assert!((h_eval(&m, &[2.0, 3.0]) - 11.0).abs() < 1e-12);
    // along f = (1,1) the smallest exponent wins at the origin
    let (s1, s2) = (1e-6, 1e-5);
    let slope = (h_eval(&m, &[s2, s2]).ln() - h_eval(&m, &[s1, s1]).ln()) / (s2 / s1).ln();
    assert!((slope - 1.0).abs() < 1e-3, "{slope}");
}

proptest! {
    #[test]
    fn h_eval_even_and_homogeneous(x in -5.0f64..5.0, y in -5.0f64..5.0, lam in 0.01f64..10.0) {
        let m = build_model(&parse_inline("bessel:d=2").unwrap()).unwrap();
        let h = h_eval(&m, &[x, y]);
        prop_assert!((h_eval(&m, &[-x, y]) - h).abs() <= 1e-12 * h.max(1.0));
        prop_assert!((h_eval(&m, &[x, -y]) - h).abs() <= 1e-12 * h.max(1.0));
        let scaled = h_eval(&m, &[lam * x, lam * y]);
        let expect = lam * x.abs() + lam * lam * y * y;
        prop_assert!((scaled - expect).abs() <= 1e-10 * expect.max(1.0));
    }
}

#[test]
fn h1_limit_examples() {
    let ladder = default_ladder();
    let ou = build_model(&parse_inline("ou").unwrap()).unwrap();
    assert_eq!(h1_limit(&ou, &Point::at(0.5), &[1.0], &ladder).unwrap(), LimitClass::Zero);
    let flat = make_power_family(1.0, 2.0, 1.0, 0.5, false).unwrap();
    assert_eq!(h1_limit(&flat, &Point::at(0.5), &[1.0], &ladder).unwrap(), LimitClass::Zero);
    let edge = make_power_family(1.0, 1.0, 1.0, 0.5, false).unwrap();
    for s in [0.5, 1.0, 2.0] {
        match h1_limit(&edge, &Point::at(0.5), &[s], &ladder).unwrap() {
            LimitClass::Finite(b) => assert!((b - s).abs() < 0.01 * s, "s={s}: {b}"),
            other => panic!("expected a finite limit, got {other:?}"),
        }
    }
    let sharp = make_power_family(2.0, 1.0, 1.0, 0.5, false).unwrap();
    assert_eq!(h1_limit(&sharp, &Point::at(0.5), &[1.0], &ladder).unwrap(), LimitClass::Infinite);
}

#[test]
fn power_family_regimes_follow_sign_of_beta_minus_alpha() {
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for beta in [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let m = make_power_family(alpha, beta, 1.0, 0.5, false).unwrap();
            let r = classify_regime(&m, &ProbePlan::default_for(&m)).unwrap();
            let expect = if beta > alpha {
                RegimeTag::StationaryLike
            } else if beta == alpha {
                RegimeTag::Transition
            } else {
                RegimeTag::Talagrand
            };
            assert_eq!(r.tag, expect, "alpha={alpha} beta={beta}");
        }
    }
}

#[test]
fn regular_variation_slopes() {
    let ladder = default_ladder();
    let ou = build_model(&parse_inline("ou").unwrap()).unwrap();
    let rv = validate_regular_variation(&ou, &ladder).unwrap();
    assert!((rv.axes[0].slope + 2.0).abs() < 0.05);
    let smooth = build_model(&parse_inline("stationary:alpha=2").unwrap()).unwrap();
    let rv = validate_regular_variation(&smooth, &ladder).unwrap();
    assert!((rv.axes[0].slope + 1.0).abs() < 0.05);
    assert!(rv.axes[0].u_q_min.unwrap() >= 1.0 - 1e-12);
    let mixed = build_model(&parse_inline("bessel:d=2").unwrap()).unwrap();
    let rv = validate_regular_variation(&mixed, &ladder).unwrap();
    let slopes: Vec<f64> = rv.axes.iter().map(|a| a.slope).collect();
    assert!((slopes[0] + 2.0).abs() < 0.05 && (slopes[1] + 1.0).abs() < 0.05, "{slopes:?}");
}

#[test]
fn config_round_trips() {
    for r in recipes() {
        let inline = r.config.to_inline();
        assert_eq!(parse_inline(&inline).unwrap(), r.config, "{inline}");
        let file = ModelFile::parse(&r.config.to_toml()).unwrap();
        assert_eq!(file.model, r.config);
        build_model(&file.model).unwrap();
    }
}

#[test]
fn model_file_schema() {
    let ok = "schema_version = 1\n[model]\nfamily = \"power\"\nalpha = 1.0\nbeta = 2.0\n";
    let f = ModelFile::parse(ok).unwrap();
    assert!(matches!(f.model, ModelConfig::Power { .. }));
    let missing = "[model]\nfamily = \"ou\"\n";
    assert!(ModelFile::parse(missing).is_err());
    let future = "schema_version = 99\n[model]\nfamily = \"ou\"\n";
    assert!(ModelFile::parse(future).is_err());
    let unknown = "schema_version = 1\n[model]\nfamily = \"ou\"\nbogus = 1\n";
    assert!(ModelFile::parse(unknown).is_err());
}
