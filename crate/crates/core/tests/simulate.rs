use excursion::simulate::*;
use excursion::specfun::gauss_tail;

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let c = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    c / (va * vb).sqrt()
}

/// Kolmogorov–Smirnov statistic `√n·D` against `N(0, sd²)`.
fn ks_normal(mut x: Vec<f64>, sd: f64) -> f64 {
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let cdf = 1.0 - gauss_tail(v / sd);
        d = d.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    d * n.sqrt()
}

/// Critical value of `√n·D` at level 1e-3.
const KS_CRIT: f64 = 1.9495;

#[test]
fn cholesky_examples() {
    let one = chol_paths(|_, _| 1.0, &[0.0], 1_000_000, 1).unwrap();
    let (_, v) = mean_var(&one.column(0));
    assert!((v - 1.0).abs() < 0.005, "{v}");

    let two = chol_paths(|s, t| if s == t { 1.0 } else { 0.5 }, &[0.0, 1.0], 1_000_000, 2).unwrap();
    let rho = corr(&two.column(0), &two.column(1));
    assert!((rho - 0.5).abs() < 0.01, "{rho}");

    let pts: Vec<f64> = (1..=256).map(|k| k as f64 / 256.0).collect();
    let bm = chol_paths(|s, t| s.min(t), &pts, 100_000, 3).unwrap();
    let (_, v) = mean_var(&bm.column(255));
    assert!((v - 1.0).abs() < 0.01, "{v}");
}

#[test]
fn circulant_examples() {
    let grid = GridSpec::uniform(0.0, 1.0, 4096).unwrap();
    let b = circulant_paths(|t| (-t.abs()).exp(), &grid, 100_000, 4).unwrap();
    let lag = grid.uniform_step().unwrap();
    let rho = corr(&b.column(2000), &b.column(2001));
    assert!((rho - (-lag).exp()).abs() < 0.002, "{rho}");

    let single = circulant_paths(|_| 1.0, &GridSpec::uniform(0.0, 0.0, 1).unwrap(), 100_000, 5).unwrap();
    assert!(ks_normal(single.column(0), 1.0) < KS_CRIT);

    let white = circulant_paths(|t| if t == 0.0 { 1.0 } else { 0.0 }, &GridSpec::uniform(0.0, 1.0, 64).unwrap(), 100_000, 6).unwrap();
    assert!(corr(&white.column(10), &white.column(11)).abs() < 0.015);
    assert!(ks_normal(white.column(7), 1.0) < KS_CRIT);
}

#[test]
fn fbm_examples() {
    let grid = GridSpec::uniform(0.0, 1.0, 257).unwrap();
    let bm = fbm_paths(0.5, &grid, 100_000, 7).unwrap();
    let dt = grid.uniform_step().unwrap();
    let inc: Vec<f64> = bm.paths().map(|p| p[101] - p[100]).collect();
    let (_, v) = mean_var(&inc);
    assert!((v / dt - 1.0).abs() < 0.02, "{}", v / dt);

    let line = fbm_paths(1.0, &grid, 100, 8).unwrap();
    for p in line.paths() {
        let slope = p[256];
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert!((p[j] - slope * t).abs() < 1e-12);
        }
    }

    let rough = fbm_paths(0.75, &grid, 100_000, 9).unwrap();
    for j in [32, 128, 256] {
        let t = grid.nodes()[j];
        let (_, v) = mean_var(&rough.column(j));
        assert!((v / t.powf(1.5) - 1.0).abs() < 0.02, "t={t}: {}", v / t.powf(1.5));
    }
}

#[test]
fn dual_norm_examples() {
    let grid = GridSpec::explicit(vec![0.0]).unwrap();
    let mk = |v: f64| PathBatch { values: vec![v], n_paths: 1, n_nodes: 1, grid: grid.clone(), seed: 0, engine: EngineTag::Cholesky };
    let one = dual_norm_reduction(&[mk(-2.5)], &[1.0]).unwrap();
    assert_eq!(one.values, vec![2.5]);
    let two = dual_norm_reduction(&[mk(3.0), mk(4.0)], &[1.0, 1.0]).unwrap();
    assert!((two.values[0] - 5.0).abs() < 1e-15);

    let g = GridSpec::uniform(0.0, 1.0, 65).unwrap();
    let s = FbmSampler::new(0.5, g).unwrap();
    let n = 100_000;
    let norm = dual_norm_reduction(&[s.chunk_in_lane(10, 0, 0, n), s.chunk_in_lane(10, 1, 0, n)], &[1.0, 1.0]).unwrap();
    let hits = norm.column(64).iter().filter(|&&r| r > 2.0).count() as f64 / n as f64;
    let exact = (-2.0f64).exp();
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((hits - exact).abs() < 3.0 * se, "{hits} vs {exact}");
}

#[test]
fn reproducible_and_chunk_invariant() {
    let grid = GridSpec::uniform(0.0, 1.0, 33).unwrap();
    let s = CirculantSampler::new(|t| (-t.abs()).exp(), grid.clone()).unwrap();
    let whole = s.batch(1000, 42);
    assert_eq!(whole.values, s.batch(1000, 42).values);
    assert_ne!(whole.values, s.batch(1000, 43).values);
    let parts = vec![s.chunk(42, 0, 300), s.chunk(42, 300, 1), s.chunk(42, 301, 699)];
    assert_eq!(concat_chunks(parts).unwrap().values, whole.values);
}

#[test]
fn marginals_pass_ks_for_every_engine() {
    let n = 100_000;
    let g = GridSpec::uniform(0.0, 1.0, 65).unwrap();
    let j = 40;
    let t = g.nodes()[j];
    let chol = CholSampler::new(|s, t| (-(t - s).abs()).exp(), g.nodes()).unwrap().batch(n, 11);
    assert!(ks_normal(chol.column(j), 1.0) < KS_CRIT);
    let circ = CirculantSampler::new(|t| (-t.abs()).exp(), g.clone()).unwrap().batch(n, 12);
    assert!(ks_normal(circ.column(j), 1.0) < KS_CRIT);
    let fbm = FbmSampler::new(0.3, g.clone()).unwrap().batch(n, 13);
    assert!(ks_normal(fbm.column(j), t.powf(0.3)) < KS_CRIT);
    let bridge = BridgeSampler::new(g.clone()).unwrap().batch(n, 14);
    assert!(ks_normal(bridge.column(j), (t * (1.0 - t)).sqrt()) < KS_CRIT);
}

#[test]
fn dump_round_trip() {
    let g = GridSpec::uniform(0.0, 1.0, 9).unwrap();
    let b = FbmSampler::new(0.5, g).unwrap().batch(5, 99);
    let mut buf = Vec::new();
    dump::write_paths(&mut buf, &b).unwrap();
    assert_eq!(buf.len(), 32 + 5 * 9 * 8);
    assert_eq!(&buf[..8], b"EXCPATH1");
    let back = dump::read_paths(&buf[..]).unwrap();
    assert_eq!((back.n_paths, back.n_nodes, back.seed), (5, 9, 99));
    assert_eq!(back.values, b.values);
    assert!(dump::read_paths(&buf[..40]).is_err());
}
