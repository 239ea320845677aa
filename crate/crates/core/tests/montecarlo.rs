use excursion::constants::{ConstantsProvider, ProviderSettings};
use excursion::model::{build_model, parse_inline, Point};
use excursion::montecarlo::*;
use excursion::simulate::GridSpec;
use excursion::specfun::{gauss_tail, psi};
use excursion::zoo::brownian_sup_exact;
use excursion::Error;

fn model(inline: &str) -> excursion::model::FieldModel {
    build_model(&parse_inline(inline).unwrap()).unwrap()
}

#[test]
fn very_low_level_is_always_exceeded() {
    let m = model("ou");
    let e = mc_exceedance(&m, -10.0, &GridSpec::uniform(0.0, 1.0, 65).unwrap(), 2000, 1).unwrap();
    assert_eq!((e.p_hat, e.hits), (1.0, 2000));
    assert!(e.ci95.0 < 1.0 && e.ci95.1 == 1.0);
}

#[test]
fn deterministic_for_a_seed() {
    let m = model("ou");
    let g = GridSpec::uniform(0.0, 1.0, 513).unwrap();
    let a = mc_exceedance(&m, 2.0, &g, 10_000, 5).unwrap();
    assert_eq!(a, mc_exceedance(&m, 2.0, &g, 10_000, 5).unwrap());
    assert_ne!(a.hits, mc_exceedance(&m, 2.0, &g, 10_000, 6).unwrap().hits);
}

#[test]
fn brownian_supremum_matches_reflection() {
    let m = model("brownian");
    let g = GridSpec::uniform(0.0, 1.0, 4096).unwrap();
    let e = mc_exceedance(&m, 2.0, &g, 100_000, 17).unwrap();
    assert!((0.042..=0.046).contains(&e.p_hat), "{} vs exact {}", e.p_hat, brownian_sup_exact(2.0));
    assert!(e.mesh_slack <= MESH_RULE);
}

#[test]
fn coarse_grid_is_refused_with_a_suggestion() {
    let m = model("ou");
    match mc_exceedance(&m, 4.0, &GridSpec::uniform(0.0, 1.0, 101).unwrap(), 2000, 1) {
        Err(Error::MeshTooCoarse { suggested, .. }) => assert!(mesh_slack(&m, 4.0, suggested) <= MESH_RULE),
        other => panic!("expected refusal, got {other:?}"),
    }
    let g = mesh_rule_grid(&m, 4.0, 2).unwrap();
    assert!(mesh_slack(&m, 4.0, g.mesh()) <= MESH_RULE);
    assert!(mesh_slack(&m, 4.0, 2.0 * g.mesh()) > MESH_RULE);
    assert!(mc_exceedance(&m, 2.0, &GridSpec::uniform(0.0, 1.0, 257).unwrap(), 10, 1).is_err());
}

#[test]
fn levels_share_paths() {
    let m = model("ou");
    let cfg = McConfig::new(20_000, 3);
    let est = mc_exceedance_levels(&m, &[1.0, 2.0, 3.0], &cfg).unwrap();
    assert!(est.windows(2).all(|w| w[0].hits >= w[1].hits));
    assert!(est.iter().all(|e| e.nodes == est[0].nodes && e.ci95.0 <= e.p_hat && e.p_hat <= e.ci95.1));
    // the tube diagnostic only runs above u = 1
    assert!(est[0].tube.is_none());
    let tube = est[2].tube.unwrap();
    assert!(tube.width > 0.0 && tube.p_tube <= est[2].p_hat);
}

#[test]
fn tube_around_a_point_maxset() {
    let m = model("two_point");
    let g = GridSpec::uniform(0.0, 1.0, 1025).unwrap();
    let all = tube_nodes(&m, &g, 10.0);
    assert_eq!(all.len(), 1025);
    let narrow = tube_nodes(&m, &g, 0.01);
    assert!(!narrow.is_empty() && narrow.len() < 60);
}

#[test]
fn wilson_interval_properties() {
    let (lo, hi) = wilson(0, 1000);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.005);
    let (lo, hi) = wilson(500, 1000);
    assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12 && hi - lo < 0.07);
}

#[test]
fn csv_rows_have_fixed_columns() {
    let m = model("ou");
    let p = ConstantsProvider::new(ProviderSettings::default()).unwrap();
    let (asym, est, rows) = compare_table(&m, "ou", &[2.0, 2.5], &McConfig::new(5000, 9), &p).unwrap();
    assert!((rows[0].asym_value - asym.evaluate(2.0).unwrap()).abs() < 1e-15);
    assert_eq!(rows[1].ratio, est[1].p_hat / rows[1].asym_value);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 12);
    assert_eq!((first[0], first[1], first[9], first[11]), ("ou", "2.000000000", "5000", "9"));

    // no approximation below zero
    let low = compare_rows("ou", Some(&asym), &mc_exceedance_levels(&m, &[-1.0], &McConfig::new(2000, 1)).unwrap()).unwrap();
    assert!(low[0].asym_value.is_nan() && low[0].ratio.is_nan());
}

#[test]
fn ten_significant_digits() {
    assert_eq!(sig10(0.0133), "0.01330000000");
    assert_eq!(sig10(1234.5), "1234.500000");
    assert_eq!(sig10(9.9999999999), "10.00000000");
    assert_eq!(sig10(f64::NAN), "NaN");
    assert_eq!(sig10(0.0), "0");
}

#[test]
fn local_lemma_zero_window_is_the_marginal_tail() {
    let m = model("ou");
    let u = 3.0;
    let r = verify_local_lemma(&m, &Point::at(0.5), 0.0, u, 200_000, 21).unwrap();
    let exact = gauss_tail(u) / psi(u).unwrap();
    assert!((r.mc_value - exact).abs() <= 3.0 * r.mc_std_err, "{r:?} vs {exact}");
    assert!((r.predicted - 1.0).abs() < 1e-12);
}

#[test]
fn local_lemma_on_a_window() {
    let m = model("ou");
    let r = verify_local_lemma(&m, &Point::at(0.0), 5.0, 3.5, 200_000, 22).unwrap();
    // the finite-u marginal factor Φ̄(u)/Ψ(u) is the main gap at moderate u
    let scale = gauss_tail(3.5) / psi(3.5).unwrap();
    let sd = (r.mc_std_err.powi(2) + (scale * r.predicted_std_err).powi(2)).sqrt();
    assert!(r.mc_value > 1.0 && r.predicted > 1.0);
    assert!((r.mc_value / r.predicted - 1.0).abs() < 0.2, "{r:?} (σ {sd})");
    assert_eq!(r.nodes, 129);
}

#[test]
fn local_lemma_at_a_talagrand_point() {
    let m = model("power:alpha=2,beta=1");
    let r = verify_local_lemma(&m, &Point::at(0.5), 2.0, 4.0, 100_000, 23).unwrap();
    assert!((r.predicted - 1.0).abs() < 0.05, "{r:?}");
}
