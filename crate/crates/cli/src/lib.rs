//! `hrl` command-line front end.

pub mod config;
pub mod manifest;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use hrl_core::memory::{ReplayBuffer, Transition};
use hrl_core::trainer::{self, RunArtifacts, TrainConfig};
use hrl_core::HrlError;
use serde::Serialize;

use manifest::{now_ms, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "hrl", version, about = "Hierarchical RL with unsupervised subgoal discovery on gridworlds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct ConfigArgs {
    /// Config file: `key = value` lines (dotted keys for nested settings) or JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one setting, e.g. `--set net.k=5`. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Run seed; replaces `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<TrainConfig> {
        let mut c = config::parse_config(self.config.as_deref(), &self.overrides)?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        Ok(c)
    }

    /// The same options as child-process arguments, with `seed` replaced.
    fn child_args(&self, seed: u64) -> Vec<String> {
        let mut args = Vec::new();
        if let Some(p) = &self.config {
            args.extend(["--config".to_string(), p.to_string_lossy().into_owned()]);
        }
        for o in &self.overrides {
            args.extend(["--set".to_string(), o.clone()]);
        }
        args.extend(["--seed".to_string(), seed.to_string()]);
        args
    }
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    /// Comma-separated seeds; each runs as its own process under `<out>/seed-<n>`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Child processes run at once during a sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the effective config as `key = value` text.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train the controller on random goal cells.
    Pretrain {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect `walk_episodes` uniformly random episodes into a memory dump.
    Walk {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find anomaly and centroid subgoals in a transition dump.
    Discover {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// JSON Lines transition dump, e.g. from `walk`.
        #[arg(long)]
        memory: PathBuf,
        /// Number of centroid subgoals; replaces `k` from the config.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full hierarchical pipeline.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the flat SARSA agent on the same task and budget.
    Baseline {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy evaluation of a trained run.
    Eval {
        /// Output directory of `train` or `baseline`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write `eval.json` and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-cluster Monte-Carlo values of the greedy hierarchical policy.
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Start cells sampled per cluster.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `--help` text listing every config key with its default.
fn defaults_help() -> String {
    let text = config::emit(&TrainConfig::default()).unwrap_or_default();
    format!("Config keys and defaults:\n\n{text}")
}

pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cmd = Cli::command().after_long_help(defaults_help());
    Cli::from_arg_matches(&cmd.try_get_matches_from(args)?)
}

/// Machine-readable failure report printed on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
}

pub fn error_report(e: &anyhow::Error) -> ErrorReport {
    let kind = match e.downcast_ref::<HrlError>() {
        Some(HrlError::Contract(_)) => "contract",
        Some(HrlError::NotReady(_)) => "not_ready",
        Some(HrlError::Format(_)) | Some(HrlError::Json(_)) => "format",
        Some(HrlError::Io(_)) => "io",
        None => "error",
    };
    ErrorReport { kind, message: format!("{e:#}") }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Config { cfg } => {
            print!("{}", config::emit(&cfg.load()?)?);
            Ok(())
        }
        Command::Pretrain { cfg, out } => pretrain(&cfg.load()?, &out),
        Command::Walk { cfg, out } => walk(&cfg.load()?, &out),
        Command::Discover { cfg, memory, k, out } => {
            let mut config = cfg.load()?;
            if let Some(k) = k {
                config.k = k;
                config.validate().map_err(anyhow::Error::new)?;
            }
            discover(&config, &memory, &out)
        }
        Command::Train { cfg, sweep, out } => {
            if sweep.seeds.is_empty() {
                train(&cfg.load()?, &out, "train", trainer::run_unified)
            } else {
                run_sweep("train", &cfg, &sweep, &out)
            }
        }
        Command::Baseline { cfg, sweep, out } => {
            if sweep.seeds.is_empty() {
                train(&cfg.load()?, &out, "baseline", trainer::run_baseline)
            } else {
                run_sweep("baseline", &cfg, &sweep, &out)
            }
        }
        Command::Eval { checkpoint, episodes, seed, out } => {
            let art = RunArtifacts::load(&checkpoint)?;
            let result = art.evaluate(episodes, seed)?;
            println!(
                "success_rate {:.4} mean_return {:.3} max_return {:.1} key_rate {:.4}",
                result.success_rate, result.mean_return, result.max_return, result.key_rate
            );
            if let Some(out) = out {
                write_report(&art.config, "eval", &out, "eval.json", &result)?;
            }
            Ok(())
        }
        Command::Diagnose { checkpoint, samples, seed, out } => {
            let art = RunArtifacts::load(&checkpoint)?;
            let diag = art.value_diagnostic(samples, seed)?;
            for c in &diag.clusters {
                println!(
                    "cluster {} subgoal {} samples {} mean {:.3} std {:.3}",
                    c.cluster, c.subgoal, c.samples, c.mean, c.std
                );
            }
            println!("ratio {:.4}", diag.ratio);
            if let Some(out) = out {
                write_report(&art.config, "diagnose", &out, "diagnostic.json", &diag)?;
            }
            Ok(())
        }
    }
}

/// Refuses to write into a directory that already holds a finished run.
fn prepare_out(out: &Path) -> Result<()> {
    if out.join(manifest::MANIFEST_FILE).exists() {
        bail!("{} already holds a completed run", out.display());
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

fn write_report<T: Serialize>(config: &TrainConfig, command: &str, out: &Path, name: &str, value: &T) -> Result<()> {
    let started = now_ms();
    prepare_out(out)?;
    let path = out.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)?)?;
    RunManifest::new(command, config, started).finish(out, &[path])?;
    Ok(())
}

fn dump<E: Serialize>(buffer: &ReplayBuffer<E>, path: &Path, kind: &str, grid: (i32, i32)) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    buffer.dump_jsonl(&mut w, kind, Some(grid))?;
    w.flush()?;
    Ok(())
}

fn pretrain(config: &TrainConfig, out: &Path) -> Result<()> {
    let started = now_ms();
    prepare_out(out)?;
    let (controller, memories, records) = trainer::run_intrinsic_pretraining(config)?;
    let grid = controller.grid;
    let mut files = Vec::new();

    let bin = out.join("controller.bin");
    let mut w = BufWriter::new(File::create(&bin)?);
    controller.net.write_checkpoint(&mut w)?;
    w.flush()?;
    let side = out.join("controller.json");
    fs::write(&side, serde_json::to_string_pretty(&controller.net.manifest("controller.bin"))?)?;
    files.extend([bin, side]);

    let csv = out.join("pretrain.csv");
    let mut w = BufWriter::new(File::create(&csv)?);
    writeln!(w, "episode,steps,success")?;
    for r in &records {
        writeln!(w, "{},{},{}", r.episode, r.steps, r.success as u8)?;
    }
    w.flush()?;
    files.push(csv);

    let agent = out.join("memory.jsonl");
    dump(&memories.agent, &agent, "transition", grid)?;
    let intrinsic = out.join("controller_memory.jsonl");
    dump(&memories.controller, &intrinsic, "intrinsic_transition", grid)?;
    files.extend([agent, intrinsic]);

    let wins = records.iter().filter(|r| r.success).count();
    println!("pretrain episodes {} success_rate {:.4}", records.len(), wins as f64 / records.len().max(1) as f64);
    RunManifest::new("pretrain", config, started).finish(out, &files)?;
    Ok(())
}

fn walk(config: &TrainConfig, out: &Path) -> Result<()> {
    let started = now_ms();
    prepare_out(out)?;
    let memory = trainer::run_random_walk(config)?;
    let path = out.join("walk.jsonl");
    dump(&memory, &path, "transition", config.layout().grid())?;
    println!("walk transitions {}", memory.len());
    RunManifest::new("walk", config, started).finish(out, &[path])?;
    Ok(())
}

fn discover(config: &TrainConfig, memory: &Path, out: &Path) -> Result<()> {
    let started = now_ms();
    let (mut buffer, header) = ReplayBuffer::<Transition>::load_jsonl(BufReader::new(
        File::open(memory).with_context(|| format!("opening {}", memory.display()))?,
    ))?;
    let grid = match header.grid {
        Some(g) => g,
        None => config.layout().grid(),
    };
    prepare_out(out)?;
    let (gset, kstate, report) = trainer::run_discovery(config, &mut buffer, grid)?;
    let sub = out.join("subgoals.json");
    fs::write(&sub, serde_json::to_string_pretty(&gset)?)?;
    let km = out.join("kmeans.json");
    fs::write(
        &km,
        serde_json::to_string_pretty(&serde_json::json!({
            "format_version": trainer::ARTIFACTS_FORMAT_VERSION,
            "content": kstate,
        }))?,
    )?;
    println!(
        "subgoals {} anomalies {} centroids {} removed {}",
        gset.len(),
        gset.anomalies().count(),
        gset.centroids().count(),
        report.removed
    );
    RunManifest::new("discover", config, started).finish(out, &[sub, km])?;
    Ok(())
}

fn train(
    config: &TrainConfig,
    out: &Path,
    command: &str,
    run: fn(&TrainConfig) -> hrl_core::Result<RunArtifacts>,
) -> Result<()> {
    let started = now_ms();
    prepare_out(out)?;
    let art = run(config)?;
    let files = art.save(out)?;
    let tail = (art.records.len() / 50).clamp(1, 1000);
    print!("episodes {} train_success_last{tail} {:.4}", art.records.len(), art.tail_success(tail));
    if let Some(e) = &art.summary.final_eval {
        print!(" eval_success {:.4} eval_mean_return {:.3}", e.success_rate, e.mean_return);
    }
    println!();
    RunManifest::new(command, config, started).finish(out, &files)?;
    Ok(())
}

/// One child process per seed, at most `jobs` at a time.
fn run_sweep(command: &str, cfg: &ConfigArgs, sweep: &SweepArgs, out: &Path) -> Result<()> {
    let started = now_ms();
    let config = cfg.load()?;
    prepare_out(out)?;
    let exe = std::env::current_exe()?;
    let jobs = sweep.jobs.max(1);
    let mut dirs = Vec::new();
    for chunk in sweep.seeds.chunks(jobs) {
        let mut children = Vec::new();
        for &seed in chunk {
            let dir = out.join(format!("seed-{seed}"));
            let child = Process::new(&exe)
                .arg(command)
                .args(cfg.child_args(seed))
                .arg("--out")
                .arg(&dir)
                .spawn()
                .with_context(|| format!("spawning run for seed {seed}"))?;
            children.push((seed, dir, child));
        }
        for (seed, dir, mut child) in children {
            if !child.wait()?.success() {
                bail!("run for seed {seed} failed");
            }
            dirs.push(dir);
        }
    }
    let mut files = Vec::new();
    for dir in &dirs {
        let m = RunManifest::load(dir)?;
        files.extend(m.files.iter().map(|f| dir.join(f)));
        files.push(dir.join(manifest::MANIFEST_FILE));
    }
    RunManifest::new(command, &config, started).finish(out, &files)?;
    Ok(())
}
