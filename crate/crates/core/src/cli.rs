//! Command-line surface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::eval_harness::{
    replay, report, split, ChunkPlan, ModelKind, ReplayReport, StreamConfig, SyntheticStream, VectorInit,
};
use crate::io::checkpoint::Checkpoint;
use crate::io::config::{Overrides, RunConfig, OUTPUT_DIR_ENV};
use crate::io::ingest::{ingest, save_events};
use crate::io::preprocess::{preprocess, preset};

pub const CHECKPOINT_FILE: &str = "model.ckpt";

#[derive(Parser, Debug)]
#[command(name = "dyncf", version, about = "Streaming matrix and tensor recommenders with incremental updates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Filter an event log (tail subsample, then iterated p-core).
    Preprocess(PreprocessArgs),
    /// Fit a model on the training split and save a checkpoint.
    Train(RunArgs),
    /// Score-then-update replay over the daily test chunks.
    Replay(RunArgs),
    /// Replay the validation days for every configuration of a grid.
    Sweep(SweepArgs),
    /// Compare finished runs in one table.
    Report(ReportArgs),
    /// Write a seeded synthetic event log.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Dataset preset supplying the core floor and tail fraction.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub min_interactions: Option<usize>,
    #[arg(long)]
    pub tail_frac: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub output: Option<PathBuf>,
    /// Event log, overriding `data.path`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Tucker ranks as `r1,r2,r3`.
    #[arg(long, value_parser = parse_ranks)]
    pub ranks: Option<[usize; 3]>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, value_parser = parse_init)]
    pub init: Option<VectorInit>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n_chunks: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Suppress per-chunk progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Matrix ranks to try; default 10, 20, ..., 300.
    #[arg(long, value_delimiter = ',')]
    pub ranks_grid: Option<Vec<usize>>,
    /// Values for the first two Tucker ranks; default 32, 64, 100, 128, 256.
    #[arg(long, value_delimiter = ',')]
    pub user_item_ranks: Option<Vec<usize>>,
    /// Values for the positional rank; default 5, 10.
    #[arg(long, value_delimiter = ',')]
    pub position_ranks: Option<Vec<usize>>,
    /// Attention exponents; default 0, 2, 4.
    #[arg(long, value_delimiter = ',')]
    pub powers: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directories holding `summary.json`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub chunk_days: Option<usize>,
}

fn parse_ranks(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split([',', 'x'])
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three ranks, e.g. 32,32,5".to_string())
}

fn parse_init(s: &str) -> Result<VectorInit, String> {
    match s.to_ascii_lowercase().as_str() {
        "incremental" => Ok(VectorInit::Incremental),
        "zero" => Ok(VectorInit::Zero),
        "gaussian" => Ok(VectorInit::Gaussian),
        _ => Err(format!("unknown init '{s}', expected incremental, zero or gaussian")),
    }
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: Some(self.seed),
            kind: self.model,
            output_dir: self.output.clone(),
            data_path: self.data.clone(),
            rank: self.rank,
            ranks: self.ranks,
            window: self.window,
            power: self.power,
            init: self.init,
            sigma: self.sigma,
            n_chunks: self.n_chunks,
            top_n: self.top_n,
        }
    }

    fn load(&self) -> anyhow::Result<(RunConfig, ChunkPlan)> {
        let cfg = RunConfig::load(&self.config, &self.overrides())?;
        let log = ingest(&cfg.data.path).with_context(|| format!("reading {}", cfg.data.path.display()))?;
        let plan = split(&log, cfg.data.train_frac, cfg.data.valid_frac, cfg.data.n_chunks)?;
        Ok((cfg, plan))
    }
}

pub fn run<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Train(a) => cmd_train(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn cmd_preprocess(a: PreprocessArgs) -> anyhow::Result<()> {
    let p = a.preset.as_deref().map(preset).transpose()?;
    let floor = a.min_interactions.or(p.map(|p| p.min_interactions)).unwrap_or(1);
    let tail = a.tail_frac.or(p.and_then(|p| p.tail_frac));
    let log = ingest(&a.input)?;
    let out = preprocess(&log, floor, tail)?;
    save_events(&out, &a.output)?;
    println!(
        "{} users, {} items, {} interactions -> {}",
        out.distinct_users(),
        out.distinct_items(),
        out.len(),
        a.output.display()
    );
    Ok(())
}

fn cmd_train(a: RunArgs) -> anyhow::Result<()> {
    let (cfg, plan) = a.load()?;
    let mut model = cfg.model.build()?;
    let info = model.fit(&plan.training_events())?;
    let state = model.snapshot().context("model produced no state")?;
    let path = cfg.output_dir.join(CHECKPOINT_FILE);
    Checkpoint {
        state,
        config: cfg.echo(),
    }
    .save(&path)?;
    match info.sweeps {
        Some(s) => println!("{} fitted in {s} HOOI sweeps -> {}", cfg.model.label(), path.display()),
        None => println!("{} fitted -> {}", cfg.model.label(), path.display()),
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn run_replay(cfg: &RunConfig, plan: &ChunkPlan, dir: &Path, quiet: bool) -> anyhow::Result<ReplayReport> {
    let mut model = cfg.model.build()?;
    let label = cfg.model.label();
    let total = plan.chunks.len();
    let report = replay(&mut *model, &label, plan, cfg.eval, |c| {
        if !quiet {
            eprintln!(
                "[{label}] chunk {}/{total}: hr {} mrr {} wji {} update {:.3}s",
                c.chunk + 1,
                fmt_opt(c.hr),
                fmt_opt(c.mrr),
                fmt_opt(c.wji),
                c.update_seconds
            );
        }
    })?;
    report::write_report(dir, &report, cfg.echo())?;
    Ok(report)
}

fn cmd_replay(a: RunArgs) -> anyhow::Result<()> {
    let (cfg, plan) = a.load()?;
    let report = run_replay(&cfg, &plan, &cfg.output_dir, a.quiet)?;
    let avg = report.averages();
    println!(
        "{}: HR@{n} {} MRR@{n} {} WJI@{n} {} mean update {}s -> {}",
        report.label,
        fmt_opt(avg.hr),
        fmt_opt(avg.mrr),
        fmt_opt(avg.wji),
        fmt_opt(avg.update_seconds),
        cfg.output_dir.display(),
        n = report.top_n
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let (base, plan) = a.run.load()?;
    let plan = plan.validation_plan();
    if plan.chunks.is_empty() {
        bail!("the validation split holds no events; raise data.valid_frac");
    }
    let mut grid = Vec::new();
    if base.model.kind.is_tensor() {
        let ui = a.user_item_ranks.unwrap_or_else(|| vec![32, 64, 100, 128, 256]);
        let pos = a.position_ranks.unwrap_or_else(|| vec![5, 10]);
        let powers = a.powers.unwrap_or_else(|| vec![0.0, 2.0, 4.0]);
        for &r in &ui {
            for &r3 in &pos {
                for &f in &powers {
                    let mut c = base.clone();
                    c.model.ranks = [r, r, r3];
                    c.model.power = f;
                    grid.push((format!("r{r}x{r}x{r3}-f{f}"), c));
                }
            }
        }
    } else {
        let ranks = a.ranks_grid.unwrap_or_else(|| (1..=30).map(|k| 10 * k).collect());
        for r in ranks {
            let mut c = base.clone();
            c.model.rank = r;
            grid.push((format!("r{r}"), c));
        }
    }

    let mut rows = csv::Writer::from_path({
        fs::create_dir_all(&base.output_dir)?;
        base.output_dir.join("sweep.csv")
    })?;
    rows.write_record(["config", "hr", "mrr", "wji", "status"])?;
    let mut best: Option<(String, f64)> = None;
    for (name, mut cfg) in grid {
        let dir = base.output_dir.join(&name);
        cfg.output_dir = dir.clone();
        let outcome = cfg
            .validate()
            .map_err(anyhow::Error::from)
            .and_then(|_| run_replay(&cfg, &plan, &dir, true));
        match outcome {
            Ok(r) => {
                let avg = r.averages();
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                rows.write_record([name.clone(), opt(avg.hr), opt(avg.mrr), opt(avg.wji), "ok".into()])?;
                eprintln!("{name}: HR {}", fmt_opt(avg.hr));
                if let Some(hr) = avg.hr {
                    if best.as_ref().is_none_or(|(_, b)| hr > *b) {
                        best = Some((name, hr));
                    }
                }
            }
            Err(e) => {
                rows.write_record([name.clone(), String::new(), String::new(), String::new(), e.to_string()])?;
                eprintln!("{name}: skipped ({e})");
            }
        }
    }
    rows.flush()?;
    match best {
        Some((name, hr)) => println!("best by HR: {name} ({hr:.4})"),
        None => println!("no configuration produced a defined HR"),
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for dir in &a.runs {
        let s = report::read_summary(dir).with_context(|| format!("reading run {}", dir.display()))?;
        rows.push((s, report::read_mean_update_seconds(dir)?));
    }
    let table = report::comparison_table(&rows);
    print!("{table}");
    if let Some(path) = a.output {
        fs::write(path, &table)?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut cfg = StreamConfig {
        seed: a.seed,
        ..StreamConfig::default()
    };
    if let Some(d) = a.chunk_days {
        cfg.chunk_days = d;
    }
    let stream = SyntheticStream::generate(cfg)?;
    save_events(&stream.log, &a.output)?;
    println!("{} events -> {}", stream.log.len(), a.output.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_triples_parse() {
        assert_eq!(parse_ranks("32,32,5"), Ok([32, 32, 5]));
        assert_eq!(parse_ranks("8x8x2"), Ok([8, 8, 2]));
        assert!(parse_ranks("1,2").is_err());
    }

    #[test]
    fn seed_is_required_for_replay() {
        let err = Cli::try_parse_from(["dyncf", "replay", "--config", "c.toml"]).unwrap_err();
        assert!(err.to_string().contains("--seed"));
    }
}
