use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agents::{ControllerAgent, MetaControllerAgent, SarsaBaseline};
use crate::approx::{MetaQTable, StateGoalNet};
use crate::discovery::{KMeansState, SubgoalSet};
use crate::env::{GridEnv, Layout};
use crate::error::{contract, HrlError, Result};

use super::baseline::BaselineRun;
use super::eval::{cluster_value_diagnostic, evaluate, EvalResult, HierarchicalPolicy, ValueDiagnostic};
use super::{EpisodeRecord, EvalRecord, TrainConfig};

pub const ARTIFACTS_FORMAT_VERSION: u32 = 1;

pub const METRICS_HEADER: &str =
    "episode,return,steps,success,eps1,eps2,n_subgoals,discounted_return,got_key,segments,attained,post_key_switch";

const EVALS_HEADER: &str = "after_episode,episodes,success_rate,mean_return,max_return,mean_steps,key_rate";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub pretrain_episodes: u64,
    pub pretrain_success_rate: f64,
    pub walk_transitions: usize,
    /// Environment steps taken in task episodes.
    pub task_steps: u64,
    pub refits: u64,
    pub final_eval: Option<EvalResult>,
}

/// Everything a run produces. Hierarchical runs fill the controller,
/// meta-table, subgoal and K-means slots; baseline runs fill `baseline`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub config: TrainConfig,
    pub layout: Layout,
    pub controller: Option<StateGoalNet>,
    pub meta: Option<MetaQTable>,
    pub gset: Option<SubgoalSet>,
    pub kstate: Option<KMeansState>,
    pub baseline: Option<StateGoalNet>,
    pub records: Vec<EpisodeRecord>,
    pub evals: Vec<EvalRecord>,
    pub summary: RunSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    format_version: u32,
    content: T,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_enveloped<T: Serialize>(path: &Path, content: &T) -> Result<()> {
    write_json(path, &Envelope { format_version: ARTIFACTS_FORMAT_VERSION, content })
}

fn read_enveloped<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let e: Envelope<T> = read_json(path)?;
    if e.format_version != ARTIFACTS_FORMAT_VERSION {
        return Err(HrlError::Format(format!("{}: format_version {}", path.display(), e.format_version)));
    }
    Ok(e.content)
}

fn write_net(dir: &Path, stem: &str, net: &StateGoalNet, files: &mut Vec<PathBuf>) -> Result<()> {
    let bin = format!("{stem}.bin");
    let mut out = BufWriter::new(File::create(dir.join(&bin))?);
    net.write_checkpoint(&mut out)?;
    out.flush()?;
    files.push(dir.join(&bin));
    let manifest = dir.join(format!("{stem}.json"));
    write_json(&manifest, &net.manifest(&bin))?;
    files.push(manifest);
    Ok(())
}

fn read_net(path: &Path) -> Result<Option<StateGoalNet>> {
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(StateGoalNet::read_checkpoint(BufReader::new(File::open(path)?))?))
}

fn opt_bool(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

pub fn write_metrics_csv<W: Write>(mut out: W, records: &[EpisodeRecord]) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        let attained: Vec<String> = r.attained.iter().map(|g| g.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.episode,
            r.ret,
            r.steps,
            r.success as u8,
            r.eps1,
            r.eps2,
            r.n_subgoals,
            r.discounted_return,
            r.got_key as u8,
            r.segments,
            attained.join(";"),
            opt_bool(r.post_key_switch)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, line: usize) -> Result<T> {
    cols.get(i)
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| HrlError::Format(format!("metrics line {line}: bad column {i}")))
}

pub fn read_metrics_csv<R: BufRead>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| HrlError::Format("empty metrics file".into()))??;
    if header.trim() != METRICS_HEADER {
        return Err(HrlError::Format(format!("unexpected metrics header `{header}`")));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let n = n + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(HrlError::Format(format!("metrics line {n}: {} columns", cols.len())));
        }
        let attained = if cols[10].is_empty() {
            Vec::new()
        } else {
            cols[10]
                .split(';')
                .map(|g| g.parse().map_err(|_| HrlError::Format(format!("metrics line {n}: attained"))))
                .collect::<Result<_>>()?
        };
        out.push(EpisodeRecord {
            episode: field(&cols, 0, n)?,
            ret: field(&cols, 1, n)?,
            steps: field(&cols, 2, n)?,
            success: field::<u8>(&cols, 3, n)? == 1,
            eps1: field(&cols, 4, n)?,
            eps2: field(&cols, 5, n)?,
            n_subgoals: field(&cols, 6, n)?,
            discounted_return: field(&cols, 7, n)?,
            got_key: field::<u8>(&cols, 8, n)? == 1,
            segments: field(&cols, 9, n)?,
            attained,
            post_key_switch: match cols[11] {
                "" => None,
                v => Some(v == "1"),
            },
        });
    }
    Ok(out)
}

fn write_evals_csv<W: Write>(mut out: W, evals: &[EvalRecord]) -> Result<()> {
    writeln!(out, "{EVALS_HEADER}")?;
    for e in evals {
        let r = &e.result;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.after_episode, r.episodes, r.success_rate, r.mean_return, r.max_return, r.mean_steps, r.key_rate
        )?;
    }
    out.flush()?;
    Ok(())
}

fn read_evals_csv<R: BufRead>(input: R) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate().skip(1) {
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        let n = n + 1;
        out.push(EvalRecord {
            after_episode: field(&cols, 0, n)?,
            result: EvalResult {
                episodes: field(&cols, 1, n)?,
                success_rate: field(&cols, 2, n)?,
                mean_return: field(&cols, 3, n)?,
                max_return: field(&cols, 4, n)?,
                mean_steps: field(&cols, 5, n)?,
                key_rate: field(&cols, 6, n)?,
            },
        });
    }
    Ok(out)
}

impl RunArtifacts {
    /// Writes every artifact under `dir` (created if missing) and returns
    /// the files written.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
            let p = dir.join(name);
            f(&p)?;
            files.push(p);
            Ok(())
        };
        put("config.json", &|p| write_enveloped(p, &self.config))?;
        put("layout.json", &|p| write_json(p, &self.layout))?;
        put("summary.json", &|p| write_enveloped(p, &self.summary))?;
        if let Some(meta) = &self.meta {
            put("meta_table.json", &|p| write_json(p, meta))?;
        }
        if let Some(gset) = &self.gset {
            put("subgoals.json", &|p| write_json(p, gset))?;
        }
        if let Some(ks) = &self.kstate {
            put("kmeans.json", &|p| write_enveloped(p, ks))?;
        }
        put("metrics.csv", &|p| write_metrics_csv(BufWriter::new(File::create(p)?), &self.records))?;
        put("evals.csv", &|p| write_evals_csv(BufWriter::new(File::create(p)?), &self.evals))?;
        if let Some(net) = &self.controller {
            write_net(dir, "controller", net, &mut files)?;
        }
        if let Some(net) = &self.baseline {
            write_net(dir, "baseline", net, &mut files)?;
        }
        Ok(files)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        Ok(RunArtifacts {
            config: read_enveloped(&dir.join("config.json"))?,
            layout: read_json(&dir.join("layout.json"))?,
            summary: read_enveloped(&dir.join("summary.json"))?,
            meta: opt("meta_table.json").map(|p| read_json(&p)).transpose()?,
            gset: opt("subgoals.json").map(|p| read_json(&p)).transpose()?,
            kstate: opt("kmeans.json").map(|p| read_enveloped(&p)).transpose()?,
            records: read_metrics_csv(BufReader::new(File::open(dir.join("metrics.csv"))?))?,
            evals: read_evals_csv(BufReader::new(File::open(dir.join("evals.csv"))?))?,
            controller: read_net(&dir.join("controller.bin"))?,
            baseline: read_net(&dir.join("baseline.bin"))?,
        })
    }

    pub fn env(&self) -> GridEnv {
        GridEnv::new(self.layout.clone(), self.config.max_steps)
    }

    /// Rebuilt controller and meta-controller with the subgoal state they
    /// were trained against.
    pub fn hierarchy(&self) -> Result<(ControllerAgent, MetaControllerAgent, &SubgoalSet, &KMeansState)> {
        let (Some(net), Some(table), Some(gset), Some(kstate)) =
            (&self.controller, &self.meta, &self.gset, &self.kstate)
        else {
            return contract("artifacts hold no trained hierarchy");
        };
        let c = &self.config;
        let controller = ControllerAgent::new(net.clone(), c.epsilon1.clone(), c.alpha1, c.gamma, self.layout.grid());
        let mut meta = MetaControllerAgent::new(c.epsilon2.clone(), c.alpha2, c.gamma, c.meta_discount_mode);
        meta.table = table.clone();
        Ok((controller, meta, gset, kstate))
    }

    pub fn baseline_agent(&self) -> Result<SarsaBaseline> {
        let Some(net) = &self.baseline else {
            return contract("artifacts hold no baseline network");
        };
        let c = &self.config;
        SarsaBaseline::new(net.clone(), c.epsilon1.clone(), c.alpha1, c.gamma, self.layout.grid())
    }

    /// Greedy evaluation of the hierarchy, or of the baseline when the run
    /// trained no hierarchy.
    pub fn evaluate(&self, episodes: u64, seed: u64) -> Result<EvalResult> {
        let env = self.env();
        if self.controller.is_some() {
            let (controller, meta, gset, kstate) = self.hierarchy()?;
            let mut policy = HierarchicalPolicy::new(&controller, &meta, gset, kstate, self.config.segment_steps);
            evaluate(&mut policy, &env, episodes, seed)
        } else {
            let agent = self.baseline_agent()?;
            evaluate(&mut BaselineRun(&agent), &env, episodes, seed)
        }
    }

    pub fn value_diagnostic(&self, samples: usize, seed: u64) -> Result<ValueDiagnostic> {
        let (controller, meta, gset, kstate) = self.hierarchy()?;
        let c = &self.config;
        cluster_value_diagnostic(&controller, &meta, gset, kstate, &self.env(), c.segment_steps, samples, c.gamma, seed)
    }

    /// Success rate of the last `n` training episodes.
    pub fn tail_success(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        super::unified::rate(tail.iter().map(|r| r.success))
    }

    pub fn tail_key_rate(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        super::unified::rate(tail.iter().map(|r| r.got_key))
    }
}
