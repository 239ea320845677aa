use excursion::specfun::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a / b - 1.0).abs() <= rel
}

/// Normal tail by composite Simpson on `[u, u + 40]`.
fn tail_by_simpson(u: f64) -> f64 {
    let n = 400_000;
    let (a, b) = (u, u + 40.0);
    let h = (b - a) / n as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let inner: f64 = (1..n).map(|i| phi(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (phi(a) + phi(b) + inner) * h / 3.0
}

#[test]
fn psi_examples() {
    assert!(close(psi(1.0).unwrap(), 0.24197072451914337, 1e-12));
    assert!(close(psi(2.0).unwrap(), (-2.0f64).exp() / (2.0 * (2.0 * std::f64::consts::PI).sqrt()), 1e-14));
    assert!(close(psi(3.0).unwrap(), 0.0014772828039793357, 1e-12));
    assert!(psi(0.0).is_err() && psi(-1.0).is_err());
    assert!(close(ln_psi(20.0).unwrap(), psi(20.0).unwrap().ln(), 1e-13));
}

#[test]
fn gauss_tail_against_quadrature() {
    assert_eq!(gauss_tail(0.0), 0.5);
    for u in [0.5, 1.0, 3.0, 5.0] {
        let q = tail_by_simpson(u);
        assert!(close(gauss_tail(u), q, 1e-11), "u={u}: {} vs {q}", gauss_tail(u));
    }
    assert!(close(gauss_tail(3.0), 0.00134989803163, 1e-11));
    assert!(close(gauss_tail(8.0) / psi(8.0).unwrap(), 1.0, 0.02));
}

#[test]
fn psi_dominates_tail_on_grid() {
    for k in 0..400 {
        let u = 0.2 + 0.05 * k as f64;
        assert!(psi(u).unwrap() > gauss_tail(u), "u={u}");
    }
}

#[test]
fn laplace_examples() {
    let ones = laplace_numeric(|_| 0.0, &[(0.0, 1.0), (0.0, 1.0)], 5.0).unwrap();
    assert!(close(ones.value, 1.0, 1e-10));
    let sq = laplace_numeric(|s| s[0] * s[0], &[(-1.0, 1.0)], 100.0).unwrap();
    assert!(close(sq.value, 0.17724538509055159, 1e-8));
    let abs = laplace_numeric(|s| s[0].abs(), &[(-1.0, 1.0)], 10.0).unwrap();
    assert!(close(abs.value, 2.0 * (1.0 - (-10.0f64).exp()) / 10.0, 1e-8));
}

#[test]
fn powerlaw_examples() {
    let gauss = PowerLawSpec::two_sided(&[(1.0, 2.0)]).unwrap();
    assert!(close(laplace_powerlaw_asym(&gauss, 1.0).unwrap(), std::f64::consts::PI.sqrt(), 1e-12));
    let expo = PowerLawSpec::two_sided(&[(2.0, 1.0)]).unwrap();
    assert!(close(laplace_powerlaw_asym(&expo, 10.0).unwrap(), 0.1, 1e-12));
    let mixed = PowerLawSpec::two_sided(&[(1.0, 1.0), (1.0, 2.0)]).unwrap();
    let asy = laplace_powerlaw_asym(&mixed, 1e4).unwrap();
    assert!(close(asy, 3.5449e-6, 1e-4));
    let num = laplace_numeric(|s| mixed.eval(s), &mixed.natural_box(&[1.0, 1.0]), 1e4).unwrap().value;
    assert!(close(num, asy, 0.01));
}

#[test]
fn numeric_approaches_asymptotic_monotonically() {
    for pairs in [vec![(1.0, 0.5)], vec![(0.5, 1.5)], vec![(2.0, 3.0)], vec![(1.0, 1.0), (1.0, 2.0)]] {
        let spec = PowerLawSpec::two_sided(&pairs).unwrap();
        // a box reaching past the zero set's neighbourhood, so the asymptote is the right target
        let bx = spec.natural_box(&vec![0.5; pairs.len()]);
        // a higher-order perturbation on each axis, visible at every λ below
        let f = |s: &[f64]| spec.eval(s) + s.iter().zip(&pairs).map(|(x, p)| x.abs().powf(p.1 + 1.0)).sum::<f64>();
        let gaps: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&l| (laplace_numeric(f, &bx, l).unwrap().value / laplace_powerlaw_asym(&spec, l).unwrap() - 1.0).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{pairs:?}: {gaps:?}");
    }
}

#[test]
fn one_sided_terms_halve_the_integral() {
    let two = PowerLawSpec::two_sided(&[(1.5, 1.3)]).unwrap();
    let one = PowerLawSpec::new(vec![PowerTerm { coeff: 1.5, exponent: 1.3, sided: Sidedness::OneSided }]).unwrap();
    let a = laplace_powerlaw_asym(&two, 50.0).unwrap();
    let b = laplace_powerlaw_asym(&one, 50.0).unwrap();
    assert!(close(a, 2.0 * b, 1e-14));
}

#[test]
fn gamma_accuracy() {
    assert!(close(gamma(0.5), std::f64::consts::PI.sqrt(), 1e-13));
    assert!(close(gamma(1.5), 0.5 * std::f64::consts::PI.sqrt(), 1e-13));
    assert!(close(gamma(10.0), 362880.0, 1e-13));
    assert!(close(ln_gamma(100.0), 359.13420536957540, 1e-13));
}
