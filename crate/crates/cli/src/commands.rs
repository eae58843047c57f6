use std::fs;
use std::path::{Path, PathBuf};

use ema_core::normality::TestKind;
use ema_core::{
    aggregate, detect_non_iid, pretest_round, transpose_to_coordinates, AggregationRuleConfig, ClientLossRecord,
    GradientDump, QuartileRule, RuleKind,
};
use ema_sim::{metrics_csv, SimConfig, Simulation, METRICS_HEADER};
use rayon::prelude::*;
use serde::Deserialize;
use time::OffsetDateTime;

use crate::config::{config_hash, load_config};
use crate::error::{config, from_sim, runtime, CliResult};
use crate::manifest::RunManifest;

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    /// Also write the client updates of this (1-based) round as a dump.
    pub dump_round: Option<usize>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let started = OffsetDateTime::now_utc();
    let cfg = load_config(&args.config, &args.overrides)?;
    if let Some(r) = args.dump_round {
        if r == 0 || r > cfg.rounds {
            return Err(config(format!("--dump-round {r} outside 1..={}", cfg.rounds)));
        }
    }
    create_dir(&args.out)?;
    let mut sim = Simulation::new(cfg.clone()).map_err(from_sim)?;
    let mut manifest = RunManifest::new("simulate", Some(config_hash(&cfg)), started);
    let mut metrics = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        if args.dump_round == Some(round) {
            let updates = sim.next_round_updates().map_err(from_sim)?;
            let path = args.out.join(format!("gradients_round_{round}.emag"));
            GradientDump::from_updates(&updates)
                .and_then(|d| d.write_binary(&path))
                .map_err(runtime)?;
            manifest.add_artifact("gradient_dump", &path);
        }
        metrics.push(sim.run_round().map_err(from_sim)?);
    }
    let csv_path = args.out.join(METRICS_FILE);
    write_file(&csv_path, metrics_csv(&cfg, &metrics, true))?;
    manifest.add_artifact("metrics_csv", &csv_path);
    manifest.write(&args.out.join(MANIFEST_FILE))?;

    match metrics.last() {
        Some(m) => println!(
            "{} rounds, final test accuracy {:.4}, test loss {:.4}; wrote {}",
            metrics.len(),
            m.test_accuracy,
            m.test_loss,
            csv_path.display()
        ),
        None => println!("0 rounds; wrote {}", csv_path.display()),
    }
    Ok(())
}

fn read_dump(path: &Path) -> CliResult<GradientDump> {
    GradientDump::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn pretest(dump: &Path, alpha: f64, kind: TestKind, out: Option<&Path>) -> CliResult<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(config(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let data = read_dump(dump)?;
    let updates = data.to_updates(0, b"").map_err(runtime)?;
    let samples = transpose_to_coordinates(&updates).map_err(runtime)?;
    let report = pretest_round(&samples, alpha, kind).map_err(|e| match e {
        ema_core::Error::UnsupportedAlpha(_) => config(e),
        _ => runtime(e),
    })?;
    let out = out.map_or_else(|| sibling(dump, ".pretest.json"), Path::to_path_buf);
    write_file(&out, report.to_json() + "\n")?;
    println!(
        "Pre-Testing rate: {:.4} ({} of {} coordinates pass {} at alpha {}; {} constant, {} untestable)",
        report.rate,
        report.passed,
        report.total,
        kind.short_name(),
        alpha,
        report.constant_count,
        report.error_count
    );
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Deserialize)]
struct LossRow {
    client_id: u32,
    loss: f64,
}

pub fn read_losses_csv(path: &Path) -> CliResult<Vec<ClientLossRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<LossRow>()
        .map(|row| {
            let row = row.map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            ClientLossRecord::new(row.client_id, row.loss).map_err(runtime)
        })
        .collect()
}

pub enum LossSource {
    Csv(PathBuf),
    /// Train per the config, then evaluate every client's local MSE.
    Simulation {
        config: PathBuf,
        overrides: Vec<String>,
    },
}

pub fn heterogeneity(source: &LossSource, threshold: f64, out: Option<&Path>) -> CliResult<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(config(format!("threshold {threshold} must be positive")));
    }
    let losses = match source {
        LossSource::Csv(path) => read_losses_csv(path)?,
        LossSource::Simulation {
            config: path,
            overrides,
        } => {
            let cfg = load_config(path, overrides)?;
            let mut sim = Simulation::new(cfg.clone()).map_err(from_sim)?;
            sim.run(cfg.rounds).map_err(from_sim)?;
            sim.client_losses().map_err(from_sim)?
        }
    };
    let report = detect_non_iid(&losses, threshold).map_err(runtime)?;
    let cv = report
        .cv
        .map_or_else(|| "undefined".to_string(), |cv| format!("{cv:.5}"));
    println!(
        "clients {}, mean loss {:.5}, std {:.5}, cv {cv}, threshold {threshold}",
        losses.len(),
        report.mu,
        report.sigma
    );
    println!("{}", report.verdict.message());
    if let Some(out) = out {
        write_file(out, report.to_json() + "\n")?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub struct AggregateArgs {
    pub dump: PathBuf,
    pub rule: RuleKind,
    pub k: Option<f64>,
    pub quartile_rule: Option<QuartileRule>,
    pub trim_fraction: Option<f64>,
    pub f: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn aggregate_dump(args: &AggregateArgs) -> CliResult<()> {
    if args.rule == RuleKind::Zeno {
        return Err(config(
            "zeno needs a validation oracle and model parameters, which a gradient dump does not carry",
        ));
    }
    let mut rule = AggregationRuleConfig::for_rule(args.rule);
    if let Some(k) = args.k {
        rule.k = k;
    }
    if let Some(q) = args.quartile_rule {
        rule.quartile_rule = q;
    }
    if let Some(t) = args.trim_fraction {
        rule.trim_fraction = t;
    }
    if let Some(f) = args.f {
        rule.byzantine_count_f = f;
    }
    let data = read_dump(&args.dump)?;
    rule.validate(data.n_clients()).map_err(config)?;
    let updates = data.to_updates(0, b"").map_err(runtime)?;
    let outcome = aggregate(&rule, &updates, None).map_err(runtime)?;

    let out = args.out.clone().unwrap_or_else(|| sibling(&args.dump, ".global.emag"));
    let global = GradientDump::new(vec![0], vec![outcome.global_update.values().to_vec()]).map_err(runtime)?;
    let written = if out.extension().is_some_and(|e| e == "csv") {
        global.write_csv(&out)
    } else {
        global.write_binary(&out)
    };
    written.map_err(runtime)?;

    let d = &outcome.diagnostics;
    println!(
        "rule {}, {} clients, {} coordinates, retained mean {:.3}, median fallbacks {}",
        args.rule,
        d.n_clients,
        data.dim(),
        d.retained_mean(),
        d.median_fallbacks
    );
    if let Some(id) = d.selected_client {
        println!("selected client {id}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rules: Vec<RuleKind>,
}

pub fn sweep_configs(base: &SimConfig, args: &SweepArgs) -> CliResult<Vec<SimConfig>> {
    let mut combos = Vec::new();
    for &fraction in &args.fractions {
        for &seed in &args.seeds {
            for &rule in &args.rules {
                let mut cfg = base.clone();
                cfg.attack.fraction = fraction;
                cfg.seed = seed;
                cfg.rule.rule = rule;
                cfg.validate().map_err(config)?;
                combos.push(cfg);
            }
        }
    }
    Ok(combos)
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let started = OffsetDateTime::now_utc();
    if args.fractions.is_empty() || args.seeds.is_empty() || args.rules.is_empty() {
        return Err(config("sweep needs at least one fraction, seed and rule"));
    }
    let base = load_config(&args.config, &args.overrides)?;
    let combos = sweep_configs(&base, args)?;
    let runs_dir = args.out.join("runs");
    create_dir(&runs_dir)?;

    let outputs: Vec<(PathBuf, String)> = combos
        .par_iter()
        .map(|cfg| {
            let mut sim = Simulation::new(cfg.clone()).map_err(from_sim)?;
            let metrics = sim.run(cfg.rounds).map_err(from_sim)?;
            let name = format!("{}_f{}_s{}.csv", cfg.rule.rule, cfg.attack.fraction, cfg.seed);
            let path = runs_dir.join(name);
            write_file(&path, metrics_csv(cfg, &metrics, true))?;
            Ok((path, metrics_csv(cfg, &metrics, false)))
        })
        .collect::<CliResult<_>>()?;

    let mut combined = String::from(METRICS_HEADER);
    combined.push('\n');
    for (_, rows) in &outputs {
        combined.push_str(rows);
    }
    let sweep_path = args.out.join(SWEEP_FILE);
    write_file(&sweep_path, combined)?;

    let mut manifest = RunManifest::new("sweep", Some(config_hash(&base)), started);
    manifest.add_artifact("sweep_csv", &sweep_path);
    for (i, (path, _)) in outputs.iter().enumerate() {
        manifest.add_artifact(&format!("run_{i:04}"), path);
    }
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    println!("{} runs; wrote {}", outputs.len(), sweep_path.display());
    Ok(())
}
