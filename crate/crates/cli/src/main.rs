use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crowdline::config::RunConfig;
use crowdline::consensus::{build_consensus, Opinion};
use crowdline::io::{read_opinions, save_opinions};
use crowdline::metric::{dice_h, SimilarityParams};
use crowdline::pipeline::{build_ledger, evaluate, DataOrigin};
use crowdline::scoring::QscoreLedger;
use crowdline::simulator::{crowd_population, run_contest};

const SEED_ENV: &str = "CROWDLINE_SEED";
const MANIFEST: &str = "manifest.json";

/// Consensus building and evaluation for crowdsourced line annotations.
#[derive(Parser)]
#[command(name = "crowdline", version)]
struct Cli {
    /// Reject unknown fields in opinion files instead of warning.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-case Dice-H between two single-opinion-per-case files (CSV on stdout).
    Diceh {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = crowdline::metric::EVAL_CUTOFF)]
        cutoff: f64,
    },
    /// Consensus line set for every case in an opinion file.
    Consensus {
        opinions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full evaluation of a crowd against an expert panel.
    Evaluate {
        #[arg(long)]
        experts: PathBuf,
        #[arg(long)]
        crowd: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; the CSV files are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a contest and write truth, expert and crowd opinion files.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay training feedback and dump each annotator's ledger (CSV).
    Qscore {
        opinions: PathBuf,
        /// Reference line sets, one opinion per case.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    data_origin: DataOrigin,
    files: BTreeMap<String, String>,
    config: RunConfig,
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().map_err(|_| {
            crowdline::Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))
        })?)),
        Err(_) => Ok(None),
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let seed = env_seed()?;
    Ok(match path {
        Some(p) => RunConfig::load(p, seed)?,
        None => RunConfig::from_toml_str("", seed)?,
    })
}

fn one_per_case(path: &Path, opinions: Vec<Opinion>) -> anyhow::Result<BTreeMap<String, Opinion>> {
    let mut out = BTreeMap::new();
    for o in opinions {
        let case = o.case_id.clone();
        if out.insert(case.clone(), o).is_some() {
            return Err(crowdline::Error::Invalid(format!(
                "{}: more than one opinion on case `{case}`; run `consensus` first",
                path.display()
            ))
            .into());
        }
    }
    Ok(out)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_diceh(a: &Path, b: &Path, cutoff: f64, strict: bool) -> anyhow::Result<()> {
    let metric = SimilarityParams::new(cutoff)?;
    let set_a = one_per_case(a, read_opinions(a, strict)?)?;
    let set_b = one_per_case(b, read_opinions(b, strict)?)?;
    let mut w = csv::Writer::from_writer(output(None)?);
    w.write_record(["case_id", "lines_a", "lines_b", "dice_h"])?;
    for (case, oa) in &set_a {
        let Some(ob) = set_b.get(case) else {
            log::warn!("case `{case}` only in {}", a.display());
            continue;
        };
        let d = dice_h(&oa.lines, &ob.lines, metric);
        w.write_record([case.as_str(), &oa.line_count().to_string(), &ob.line_count().to_string(), &d.to_string()])?;
    }
    for case in set_b.keys().filter(|c| !set_a.contains_key(*c)) {
        log::warn!("case `{case}` only in {}", b.display());
    }
    w.flush()?;
    Ok(())
}

fn cmd_consensus(input: &Path, out: &Path, config: Option<&Path>, strict: bool) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let mut by_case: BTreeMap<String, Vec<Opinion>> = BTreeMap::new();
    for o in read_opinions(input, strict)? {
        by_case.entry(o.case_id.clone()).or_default().push(o);
    }
    let mut result = Vec::with_capacity(by_case.len());
    for (case, ops) in &by_case {
        let c = build_consensus(ops, &cfg.consensus)?;
        let timestamp = ops.iter().map(|o| o.timestamp).max().unwrap_or(0);
        result.push(Opinion::new(case.clone(), "consensus", c.lines, timestamp, ops[0].split));
    }
    save_opinions(out, &result)?;
    log::info!("wrote {} consensus annotations to {}", result.len(), out.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn data_origin(experts: &Path) -> anyhow::Result<DataOrigin> {
    let manifest = experts.parent().unwrap_or(Path::new(".")).join(MANIFEST);
    if !manifest.exists() {
        return Ok(DataOrigin::external());
    }
    let text = fs::read_to_string(&manifest)?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("reading {}", manifest.display()))?;
    Ok(m.data_origin)
}

fn cmd_evaluate(experts: &Path, crowd: &Path, config: Option<&Path>, out: &Path, strict: bool) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let expert_ops = read_opinions(experts, strict)?;
    let crowd_ops = read_opinions(crowd, strict)?;
    let ev = evaluate(&expert_ops, &crowd_ops, &cfg, data_origin(experts)?)?;
    write_json(out, &ev.report)?;

    let dir = out.parent().unwrap_or(Path::new("."));
    let mut w = csv::Writer::from_path(dir.join("learning_curve.csv"))?;
    w.write_record(["bin", "first_index", "last_index", "mean", "sem", "n_scores", "n_annotators", "flagged"])?;
    for b in &ev.report.learning_curve {
        w.serialize((b.bin, b.first_index, b.last_index, b.mean, b.sem, b.n_scores, b.n_annotators, b.flagged))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("figure3b_bootstrap.csv"))?;
    w.write_record(["replicate", "dice_diff"])?;
    for (i, v) in ev.bootstrap_replicates.iter().enumerate() {
        w.serialize((i, v))?;
    }
    w.flush()?;

    let r = &ev.report;
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "crowd mean Dice-H {:.4} vs expert {:.4}; count MSE crowd {:.4} vs expert {:.4} over {} comparisons",
        r.crowd_mean_dice, r.expert_mean_dice, r.crowd_count_mse, r.expert_count_mse, r.counts.comparisons
    )?;
    if let Some(ci) = &r.dice_diff_ci {
        writeln!(stdout, "Dice-H difference {:.4}, BCa CI ({:.4}, {:.4})", ci.observed, ci.low, ci.high)?;
    }
    if let Some(t) = &r.count_mse_test {
        writeln!(stdout, "count MSE paired t = {:.3}, p = {:.3e}", t.t, t.p.value)?;
    }
    Ok(())
}

fn cmd_simulate(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.contest.master_seed = s;
    }
    let experts = vec![cfg.expert_model; cfg.contest.n_experts];
    let crowd = crowd_population(&cfg.contest, &cfg.crowd_population);
    let run = run_contest(&cfg.contest, &experts, &crowd, &cfg.consensus, cfg.metric.in_game_cutoff)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let truth: Vec<Opinion> = run
        .truth
        .iter()
        .map(|c| Opinion::new(c.case_id.clone(), "truth", c.true_lines.clone(), 0, c.split))
        .collect();
    save_opinions(&out_dir.join("truth.jsonl"), &truth)?;
    save_opinions(&out_dir.join("experts.jsonl"), &run.expert_opinions)?;
    save_opinions(&out_dir.join("crowd.jsonl"), &run.crowd_opinions)?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml_string()?)?;
    let files = [
        ("truth", "truth.jsonl"),
        ("experts", "experts.jsonl"),
        ("crowd", "crowd.jsonl"),
        ("config", "config.toml"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    write_json(
        &out_dir.join(MANIFEST),
        &Manifest {
            data_origin: DataOrigin::synthetic(cfg.contest.master_seed),
            files,
            config: cfg.clone(),
        },
    )?;
    writeln!(
        io::stdout().lock(),
        "simulated {} cases, {} expert and {} crowd opinions into {}",
        run.truth.len(),
        run.expert_opinions.len(),
        run.crowd_opinions.len(),
        out_dir.display()
    )?;
    Ok(())
}

fn write_ledger(w: impl Write, ledger: &QscoreLedger, min_entries: usize) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["annotator_id", "entry", "timestamp", "score", "qscore_after"])?;
    for id in ledger.annotators() {
        for (i, e) in ledger.entries(id).iter().enumerate() {
            let q = ledger.qscore(id, e.timestamp + 1, min_entries).value();
            let q = q.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([id, &(i + 1).to_string(), &e.timestamp.to_string(), &e.score.to_string(), &q])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_qscore(opinions: &Path, truth: &Path, config: Option<&Path>, out: Option<&Path>, strict: bool) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let refs: BTreeMap<String, _> = one_per_case(truth, read_opinions(truth, strict)?)?
        .into_iter()
        .map(|(k, o)| (k, o.lines))
        .collect();
    let ops = read_opinions(opinions, strict)?;
    let (ledger, unscored) = build_ledger(&ops, &refs, cfg.metric.in_game_cutoff, cfg.selection.window)?;
    if unscored > 0 {
        log::warn!("{unscored} training opinions have no reference and were not scored");
    }
    write_ledger(output(out)?, &ledger, cfg.selection.min_training_opinions)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Diceh { a, b, cutoff } => cmd_diceh(&a, &b, cutoff, cli.strict),
        Command::Consensus { opinions, out, config } => cmd_consensus(&opinions, &out, config.as_deref(), cli.strict),
        Command::Evaluate {
            experts,
            crowd,
            config,
            out,
        } => cmd_evaluate(&experts, &crowd, config.as_deref(), &out, cli.strict),
        Command::Simulate { config, out_dir, seed } => cmd_simulate(config.as_deref(), &out_dir, seed),
        Command::Qscore {
            opinions,
            truth,
            config,
            out,
        } => cmd_qscore(&opinions, &truth, config.as_deref(), out.as_deref(), cli.strict),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<crowdline::Error>() {
        Some(e) if !e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
