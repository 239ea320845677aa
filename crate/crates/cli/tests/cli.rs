use std::f64::consts::PI;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excursion")).args(args).env_remove("EXCURSION_CACHE").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `u²·φ(u)/u` written out, independent of the library.
fn ou_reference(u: f64) -> f64 {
    u * (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

#[test]
fn asym_csv_for_ou() {
    let o = run(&["asym", "--model", "ou", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "model_id,label,regime,constant,rel_err,u_exponent,numeric_residual");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((row[0], row[2], row[3], row[5]), ("ou", "stationary_like", "1.000000000", "2.000000000"));
}

#[test]
fn compare_csv_columns_and_values() {
    let o = run(&["compare", "--model", "ou", "--u", "2.5,3", "--n", "5000", "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["model_id", "u", "asym_value", "asym_lo", "asym_hi", "p_hat", "ci_lo", "ci_hi", "ratio", "n_paths", "mesh", "seed"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for (r, u) in rows.iter().zip([2.5, 3.0]) {
        let asym: f64 = r[2].parse().unwrap();
        assert!((asym / ou_reference(u) - 1.0).abs() < 1e-9, "{asym}");
        assert_eq!((&r[9], &r[11]), ("5000", "4"));
        let p: f64 = r[5].parse().unwrap();
        let (lo, hi): (f64, f64) = (r[6].parse().unwrap(), r[7].parse().unwrap());
        assert!(lo <= p && p <= hi);
    }
}

#[test]
fn stochastic_commands_need_a_seed() {
    for args in [
        vec!["mc", "--model", "ou", "--u", "2"],
        vec!["compare", "--model", "ou", "--u", "2"],
        vec!["constants", "--alpha", "1.5", "--T", "4"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    }
}

#[test]
fn coarse_grid_exits_three() {
    let o = run(&["mc", "--model", "ou", "--u", "2", "--n", "2000", "--seed", "1", "--grid", "100"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh"));
}

#[test]
fn invalid_models_exit_one() {
    assert_eq!(run(&["asym", "--model", "stationary:alpha=2.5"]).status.code(), Some(1));
    assert_eq!(run(&["asym", "--model", "nosuchfamily"]).status.code(), Some(1));
    assert_eq!(run(&["asym"]).status.code(), Some(1));
    assert_eq!(run(&["mc", "--model", "ou", "--u", "3,2", "--n", "2000", "--seed", "1"]).status.code(), Some(1));
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("models.csv");
    let o = run(&["--out", path.to_str().unwrap(), "--format", "csv", "models"]);
    assert!(o.status.success() && o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("id,config,description\n"));
    assert!(text.lines().any(|l| l.starts_with("bessel2,")));
}

#[test]
fn config_file_and_inline_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ou.toml");
    std::fs::write(&path, "schema_version = 1\n[model]\nfamily = \"ou\"\na = 2.0\n").unwrap();
    let from_file = run(&["asym", "--config", path.to_str().unwrap(), "--format", "csv"]);
    let inline = run(&["asym", "--model", "ou:a=2.0", "--format", "csv"]);
    assert!(from_file.status.success());
    // same numbers; only the model_id column echoes how the model was given
    let tail = |o: &Output| stdout(o).lines().nth(1).unwrap().rsplit(',').take(5).map(String::from).collect::<Vec<_>>();
    assert_eq!(tail(&from_file), tail(&inline));
    std::fs::write(&path, "[model]\nfamily = \"ou\"\n").unwrap();
    assert_eq!(run(&["asym", "--config", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["mc", "--model", "brownian", "--u", "1.5,2", "--n", "10000", "--seed", "8", "--grid", "1025"];
    let one = run(&[&args[..], &["--threads", "1"]].concat());
    let four = run(&[&args[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn path_dump_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paths.bin");
    let o = run(&["mc", "--model", "ou", "--u", "2", "--n", "2000", "--seed", "5", "--dump", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"EXCPATH1");
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let (n, m, seed) = (word(1), word(2), word(3));
    assert_eq!((n, seed), (2000, 5));
    assert_eq!(bytes.len() as u64, 32 + 8 * n * m);
}

#[test]
fn validate_and_constants_succeed() {
    let v = run(&["validate", "--model", "brownian"]);
    assert!(v.status.success() && stdout(&v).contains("transition"));
    let c = run(&["constants", "--alpha", "1,2", "--format", "csv"]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let text = stdout(&c);
    let h2 = text.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!((h2 - 1.0 / PI.sqrt()).abs() < 1e-9, "{text}");
}
