use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use excursion::asymptotics::{asym_general, classify, AsymptoticResult};
use excursion::constants::{
    known_constant, pickands_estimate_with, ConstantEstimate, ConstantsProvider, McSettings, ProviderSettings,
};
use excursion::model::{
    build_model, default_ladder, parse_inline, validate_regular_variation, FieldModel, LimitClass, ModelConfig,
    ModelFile,
};
use excursion::montecarlo::{compare_rows, mc_exceedance_levels, sig10, write_csv, FieldEngine, McConfig, McEstimate};
use excursion::simulate::{dump::write_paths, GridSpec};
use excursion::zoo::{recipe, recipes};
use excursion::Error;

#[derive(Parser, Debug)]
#[command(name = "excursion", version, about = "Excursion asymptotics for Gaussian fields, with Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Human,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in models.
    Models,
    /// Asymptotic formula for a model.
    Asym(AsymArgs),
    /// Monte Carlo exceedance estimates.
    Mc(McArgs),
    /// Asymptotics and Monte Carlo side by side.
    Compare(McArgs),
    /// Pickands constants.
    Constants(ConstantsArgs),
    /// Check a model and report its regime classification.
    Validate(ModelArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Built-in model id, or `family:key=value,...`.
    #[arg(long)]
    model: Option<String>,
    /// TOML model file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AsymArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seed of the constants' Monte Carlo (the built-in default otherwise).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Levels, strictly increasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform grid node count over the time interval (mesh-rule grid otherwise).
    #[arg(long)]
    grid: Option<usize>,
    /// Write the simulated paths to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// Window lengths; closed forms are reported where available when absent.
    #[arg(long = "T", value_delimiter = ',')]
    t: Vec<f64>,
    /// Grid step (default min(0.01, T/64)).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("thread pool")
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    fn of(e: &Error) -> u8 {
        match e {
            Error::Regime(_) | Error::Inconclusive(_) => 2,
            Error::MeshTooCoarse { .. } => 3,
            Error::Constant { source, .. } => of(source),
            _ => 1,
        }
    }
    e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or(1, of)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match &cli.command {
        Command::Models => cmd_models(cli.format.unwrap_or(Format::Human), &mut out)?,
        Command::Asym(a) => cmd_asym(a, cli.format.unwrap_or(Format::Human), &mut out)?,
        Command::Mc(a) => cmd_mc(a, false, cli.format.unwrap_or(Format::Csv), &mut out)?,
        Command::Compare(a) => cmd_mc(a, true, cli.format.unwrap_or(Format::Csv), &mut out)?,
        Command::Constants(a) => cmd_constants(a, cli.format.unwrap_or(Format::Csv), &mut out)?,
        Command::Validate(a) => cmd_validate(a, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn load_model(args: &ModelArgs) -> anyhow::Result<(String, FieldModel)> {
    let (id, config): (String, ModelConfig) = match (&args.model, &args.config) {
        (Some(_), Some(_)) => bail!("give either --model or --config, not both"),
        (None, None) => bail!("a model is required (--model or --config)"),
        (Some(m), None) => match recipe(m) {
            Some(r) => (r.id.to_string(), r.config),
            None => (m.clone(), parse_inline(m)?),
        },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file = ModelFile::parse(&text)?;
            (file.model.to_inline(), file.model)
        }
    };
    Ok((id, build_model(&config)?))
}

fn provider(seed: Option<u64>) -> anyhow::Result<ConstantsProvider> {
    let mut s = ProviderSettings::default().from_env();
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(ConstantsProvider::new(s)?)
}

fn require_seed(seed: Option<u64>, what: &str) -> anyhow::Result<u64> {
    seed.with_context(|| format!("{what} is stochastic; --seed is required"))
}

fn cmd_models(format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    if format == Format::Csv {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "config", "description"])?;
        for r in recipes() {
            w.write_record([r.id, &r.config.to_inline(), r.description])?;
        }
        w.flush()?;
        return Ok(());
    }
    for r in recipes() {
        writeln!(out, "{:<22} {:<40} {}", r.id, r.config.to_inline(), r.description)?;
    }
    Ok(())
}

fn write_asym_human(id: &str, a: &AsymptoticResult, out: &mut dyn Write) -> anyhow::Result<()> {
    let k = a.leading_constant();
    let rho = a.u_exponent();
    let lead = a.components.iter().filter(|c| c.u_exponent == rho);
    let rel = lead.map(|c| c.constant * c.rel_err).sum::<f64>() / k;
    writeln!(out, "model:      {id}")?;
    writeln!(out, "regime:     {}", a.regime)?;
    writeln!(out, "formula:    {}", a.formula())?;
    writeln!(out, "K:          {k:.6} (band ±{:.3}%)", (100.0 * 1.96 * rel).abs())?;
    writeln!(out, "rho:        {rho:.6}")?;
    // Ψ(u) = e^{-u²/2}/(√(2π)u)
    writeln!(
        out,
        "exp form:   {:.6}·u^{:.3}·e^(-u²/2)",
        k / (2.0 * std::f64::consts::PI).sqrt(),
        rho - 1.0
    )?;
    let slow = a.components.iter().any(|c| c.slow.is_some());
    writeln!(out, "slow:       {}", if slow { "numeric L(u) on at least one component" } else { "none" })?;
    match a.dominance_threshold {
        Some(t) => writeln!(out, "dominant:   {} beyond u = {t:.4}", a.components[a.dominant].label)?,
        None => writeln!(out, "dominant:   none within u ≤ 1e6")?,
    }
    writeln!(out, "components:")?;
    for c in &a.components {
        writeln!(
            out,
            "  {:<24} {:<15} K = {:.6} ± {:.3}%  rho = {:.4}",
            c.label,
            c.regime.to_string(),
            c.constant,
            (100.0 * c.rel_err).abs(),
            c.u_exponent
        )?;
    }
    if !a.constants.is_empty() {
        writeln!(out, "constants:")?;
        for (key, e) in &a.constants {
            writeln!(out, "  {key} = {:.6} ± {:.2e} ({})", e.value, e.std_err, e.method)?;
        }
    }
    Ok(())
}

fn cmd_asym(args: &AsymArgs, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let (id, model) = load_model(&args.model)?;
    let a = asym_general(&model, &provider(args.seed)?)?;
    if format == Format::Human {
        return write_asym_human(&id, &a, out);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model_id", "label", "regime", "constant", "rel_err", "u_exponent", "numeric_residual"])?;
    for r in a.records() {
        w.write_record([
            id.clone(),
            r.label,
            r.regime.to_string(),
            sig10(r.constant),
            sig10(r.rel_err),
            sig10(r.u_exponent),
            r.numeric_residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_levels(u: &[f64]) -> anyhow::Result<()> {
    if u.iter().any(|x| !x.is_finite()) || u.windows(2).any(|w| w[1] <= w[0]) {
        bail!("--u must be finite and strictly increasing");
    }
    Ok(())
}

fn cmd_mc(args: &McArgs, compare: bool, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    check_levels(&args.u)?;
    let seed = require_seed(args.seed, if compare { "compare" } else { "mc" })?;
    let (id, model) = load_model(&args.model)?;
    let mut cfg = McConfig::new(args.n, seed);
    if let Some(nodes) = args.grid {
        let (lo, hi) = *model.domain.time.first().context("model has no time axis")?;
        cfg.grid = Some(GridSpec::uniform(lo, hi, nodes)?);
    }
    let asym = if compare { Some(asym_general(&model, &provider(None)?)?) } else { None };
    let est = mc_exceedance_levels(&model, &args.u, &cfg)?;
    if let Some(path) = &args.dump {
        dump_paths(&model, &cfg, &est[0], path)?;
    }
    let rows = compare_rows(&id, asym.as_ref(), &est)?;
    if format == Format::Csv {
        return Ok(write_csv(&rows, out)?);
    }
    if let Some(a) = &asym {
        writeln!(out, "{id}: {} [{}]", a.formula(), a.regime)?;
    }
    for (r, e) in rows.iter().zip(&est) {
        write_estimate_human(r.asym_value, r.ratio, e, out)?;
    }
    Ok(())
}

fn write_estimate_human(asym: f64, ratio: f64, e: &McEstimate, out: &mut dyn Write) -> anyhow::Result<()> {
    write!(
        out,
        "u = {:<6} p_hat = {:.4e}  95% CI [{:.4e}, {:.4e}]  n = {}  nodes = {}  mesh slack = {:.4}",
        e.u, e.p_hat, e.ci95.0, e.ci95.1, e.n_paths, e.nodes, e.mesh_slack
    )?;
    if asym.is_finite() {
        write!(out, "  asym = {asym:.4e}  ratio = {ratio:.4}")?;
    }
    writeln!(out)?;
    if !e.note.is_empty() {
        writeln!(out, "         {}", e.note)?;
    }
    Ok(())
}

fn dump_paths(model: &FieldModel, cfg: &McConfig, first: &McEstimate, path: &Path) -> anyhow::Result<()> {
    let grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => {
            let (lo, hi) = model.domain.time[0];
            GridSpec::uniform(lo, hi, first.nodes)?
        }
    };
    let engine = FieldEngine::new(model, &grid)?;
    let batch = engine.batch(cfg.n_paths as usize, cfg.seed);
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_paths(BufWriter::new(f), &batch)?;
    Ok(())
}

fn cmd_constants(args: &ConstantsArgs, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut rows: Vec<(f64, ConstantEstimate)> = Vec::new();
    for &alpha in &args.alpha {
        if args.t.is_empty() {
            if let Some(v) = known_constant(alpha) {
                rows.push((alpha, ConstantEstimate::closed_form(v)));
                continue;
            }
        }
        let seed = require_seed(args.seed, "constants estimation")?;
        let windows = if args.t.is_empty() { vec![ProviderSettings::default().t_window] } else { args.t.clone() };
        for &t in &windows {
            let delta = args.delta.unwrap_or_else(|| (t / 64.0).min(0.01));
            let e = pickands_estimate_with(alpha, t, &McSettings::new(delta, args.n, seed))?;
            rows.push((alpha, e));
        }
    }
    if format == Format::Human {
        for (alpha, e) in &rows {
            write!(out, "H_{alpha} = {:.7} ± {:.2e} ({})", e.value, e.std_err, e.method)?;
            if let (Some(t), Some(d)) = (e.t_window, e.mesh) {
                write!(out, "  T = {t}  delta = {d}  n = {}  seed = {}", e.n_paths, e.seed)?;
            }
            writeln!(out)?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "t_window", "value", "std_err", "method", "mesh", "mesh_bound", "n_paths", "seed"])?;
    let opt = |x: Option<f64>| x.map(sig10).unwrap_or_default();
    for (alpha, e) in &rows {
        w.write_record([
            sig10(*alpha),
            opt(e.t_window),
            sig10(e.value),
            sig10(e.std_err),
            e.method.to_string(),
            opt(e.mesh),
            opt(e.mesh_bound),
            e.n_paths.to_string(),
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_validate(args: &ModelArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let (id, model) = load_model(args)?;
    writeln!(out, "model:   {id} (valid)")?;
    writeln!(out, "domain:  time {:?}, sphere dim {}", model.domain.time, model.domain.sphere_dim())?;
    writeln!(out, "max set: dim {}, {} chart(s)", model.maxset.dim, model.maxset.charts.len())?;
    let rv = validate_regular_variation(&model, &default_ladder())?;
    for a in &rv.axes {
        writeln!(out, "axis {}: alpha = {}, log-log slope of q = {:.4} (expected {:.4})", a.axis, a.alpha, a.slope, a.expected)?;
    }
    let regime = classify(&model)?;
    writeln!(out, "regime:  {}", regime.tag)?;
    for c in &regime.charts {
        writeln!(out, "  chart {} ({}): {:?}", c.chart, model.maxset.charts[c.chart].label, c.axes)?;
    }
    for e in &regime.evidence {
        let class = match e.class {
            LimitClass::Zero => "zero".to_string(),
            LimitClass::Finite(b) => format!("finite ({b:.4})"),
            LimitClass::Infinite => "infinite".to_string(),
        };
        writeln!(
            out,
            "  probe chart {} at {:?}, axis {} dir {:+}: slope {:.3} -> {class}",
            e.chart, e.param, e.axis, e.direction, e.slope
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_chain() {
        let regime = anyhow::Error::new(Error::Inconclusive(vec!["x".into()])).context("asym");
        assert_eq!(exit_code(&regime), 2);
        let nested = Error::Constant { location: "axis 0".into(), source: Box::new(Error::Regime("r".into())) };
        assert_eq!(exit_code(&anyhow::Error::new(nested)), 2);
        let mesh = Error::MeshTooCoarse { suggested: 0.1, detail: String::new() };
        assert_eq!(exit_code(&anyhow::Error::new(mesh)), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), 1);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Domain("d".into()))), 1);
    }
}
