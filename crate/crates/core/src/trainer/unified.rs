use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{intrinsic_reward, ControllerAgent, MetaControllerAgent};
use crate::approx::StateGoalNet;
use crate::discovery::{discover, AnomalyDetector, DiscoveryReport, KMeansState, SubgoalSet};
use crate::env::{Action, GridEnv, GridPos, Point};
use crate::error::{HrlError, Result};
use crate::memory::{IntrinsicTransition, MetaTransition, ReplayBuffer, Transition};

use super::artifacts::{RunArtifacts, RunSummary};
use super::eval::{evaluate, HierarchicalPolicy};
use super::{stream, EpisodeRecord, EvalRecord, TrainConfig};
use super::{STREAM_EVAL, STREAM_KMEANS, STREAM_NET, STREAM_PRETRAIN, STREAM_TRAIN, STREAM_WALK};

/// The agent, controller and meta-controller memories.
#[derive(Debug, Clone, PartialEq)]
pub struct Memories {
    pub agent: ReplayBuffer<Transition>,
    pub controller: ReplayBuffer<IntrinsicTransition>,
    pub meta: ReplayBuffer<MetaTransition>,
}

impl Memories {
    pub fn new(config: &TrainConfig) -> Self {
        Self {
            agent: ReplayBuffer::new(config.agent_capacity),
            controller: ReplayBuffer::new(config.controller_capacity),
            meta: ReplayBuffer::new(config.meta_capacity),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainRecord {
    pub episode: u64,
    pub steps: u32,
    pub success: bool,
}

pub fn task_env(config: &TrainConfig) -> GridEnv {
    GridEnv::new(config.layout(), config.max_steps)
}

pub(crate) fn invalid(e: super::ConfigError) -> HrlError {
    HrlError::Contract(e.to_string())
}

/// Tags a contract violation with where it happened.
pub(crate) fn at(e: HrlError, episode: u64, step: u32) -> HrlError {
    match e {
        HrlError::Contract(msg) => HrlError::Contract(format!("episode {episode}, step {step}: {msg}")),
        other => other,
    }
}

pub(crate) fn new_controller(config: &TrainConfig, grid: (i32, i32)) -> ControllerAgent {
    let net = StateGoalNet::new(config.net.clone(), &mut stream(config.seed, STREAM_NET));
    ControllerAgent::new(net, config.epsilon1.clone(), config.alpha1, config.gamma, grid)
}

fn random_goal<R: Rng + ?Sized>(env: &GridEnv, avoid: GridPos, rng: &mut R) -> GridPos {
    let cells = env.open_cells();
    loop {
        let g = cells[rng.gen_range(0..cells.len())];
        if g != avoid || cells.len() == 1 {
            return g;
        }
    }
}

/// Trains `controller` to reach uniformly drawn cells of `env`. Each episode
/// runs until the goal is reached or the environment ends it.
pub fn pretrain_controller<R: Rng + ?Sized>(
    controller: &mut ControllerAgent,
    env: &GridEnv,
    memories: &mut Memories,
    episodes: u64,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<PretrainRecord>> {
    let mut records = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        let mut state = env.reset(rng);
        let goal_cell = random_goal(env, state.agent, rng);
        let goal = controller.point(goal_cell);
        let mut success = false;
        while !state.done {
            let s = state.agent;
            let a = controller.act(s, goal, rng).map_err(|e| at(e, episode, state.step_count))?;
            let (next, out) = env.step(&state, a).map_err(|e| at(e, episode, state.step_count))?;
            let attained = out.next_obs == goal_cell;
            memories.agent.push(Transition { s, a, r: out.reward, s_next: out.next_obs, terminal: out.success });
            memories.controller.push(IntrinsicTransition {
                s,
                g: None,
                goal,
                a,
                r_tilde: intrinsic_reward(attained, out.reward),
                s_next: out.next_obs,
                attained,
                terminal: out.success,
            });
            let mb = memories.controller.sample_minibatch(batch, rng);
            controller.td_update(&mb).map_err(|e| at(e, episode, state.step_count))?;
            state = next;
            if attained {
                success = true;
                break;
            }
        }
        controller.epsilon.advance();
        records.push(PretrainRecord { episode, steps: state.step_count, success });
    }
    Ok(records)
}

/// Intrinsic-motivation pretraining on random cells of the configured task.
pub fn run_intrinsic_pretraining(config: &TrainConfig) -> Result<(ControllerAgent, Memories, Vec<PretrainRecord>)> {
    config.validate().map_err(invalid)?;
    let env = task_env(config);
    let mut controller = new_controller(config, env.layout.grid());
    let mut memories = Memories::new(config);
    let mut rng = stream(config.seed, STREAM_PRETRAIN);
    let records =
        pretrain_controller(&mut controller, &env, &mut memories, config.pretrain_episodes, config.batch1, &mut rng)?;
    Ok((controller, memories, records))
}

/// Collects `episodes` episodes into `memory`. Without a controller actions
/// are uniform; with one, the controller chases random cells, switching
/// target on arrival or after `segment_steps`.
pub fn random_walk<R: Rng + ?Sized>(
    env: &GridEnv,
    controller: Option<&ControllerAgent>,
    memory: &mut ReplayBuffer<Transition>,
    episodes: u64,
    segment_steps: u32,
    rng: &mut R,
) -> Result<()> {
    for episode in 0..episodes {
        let mut state = env.reset(rng);
        let mut goal: Option<(GridPos, Point, u32)> = None;
        while !state.done {
            let s = state.agent;
            let a = match controller {
                None => Action::from_index(rng.gen_range(0..Action::COUNT)),
                Some(c) => {
                    let (cell, point, left) = match goal {
                        Some(g) if g.2 > 0 => g,
                        _ => {
                            let cell = random_goal(env, s, rng);
                            (cell, c.point(cell), segment_steps)
                        }
                    };
                    goal = Some((cell, point, left - 1));
                    c.act(s, point, rng).map_err(|e| at(e, episode, state.step_count))?
                }
            };
            let (next, out) = env.step(&state, a).map_err(|e| at(e, episode, state.step_count))?;
            memory.push(Transition { s, a, r: out.reward, s_next: out.next_obs, terminal: out.success });
            if goal.is_some_and(|g| g.0 == out.next_obs) {
                goal = None;
            }
            state = next;
        }
    }
    Ok(())
}

/// Uniform random-action walk of `config.walk_episodes` episodes.
pub fn run_random_walk(config: &TrainConfig) -> Result<ReplayBuffer<Transition>> {
    config.validate().map_err(invalid)?;
    let env = task_env(config);
    let mut memory = ReplayBuffer::new(config.agent_capacity);
    let mut rng = stream(config.seed, STREAM_WALK);
    random_walk(&env, None, &mut memory, config.walk_episodes, config.segment_steps, &mut rng)?;
    Ok(memory)
}

/// Subgoals found by one discovery pass over `memory` (anomalous entries
/// are removed from it).
pub fn run_discovery(
    config: &TrainConfig,
    memory: &mut ReplayBuffer<Transition>,
    grid: (i32, i32),
) -> Result<(SubgoalSet, KMeansState, DiscoveryReport)> {
    config.validate().map_err(invalid)?;
    let mut detector = AnomalyDetector::new(&config.anomaly, grid);
    let mut gset = SubgoalSet::new(grid, detector.merge_radius);
    let mut kstate = KMeansState::new(config.k);
    let mut rng = stream(config.seed, STREAM_KMEANS);
    let report = discover(memory, &mut detector, &mut kstate, &mut gset, &config.kmeans, &mut rng)?;
    Ok((gset, kstate, report))
}

struct Learner<'c> {
    config: &'c TrainConfig,
    env: GridEnv,
    controller: ControllerAgent,
    meta: MetaControllerAgent,
    detector: AnomalyDetector,
    kstate: KMeansState,
    gset: SubgoalSet,
    memories: Memories,
    krng: rand_chacha::ChaCha8Rng,
    total_steps: u64,
    refits: u64,
}

impl Learner<'_> {
    fn discover(&mut self) -> Result<()> {
        discover(
            &mut self.memories.agent,
            &mut self.detector,
            &mut self.kstate,
            &mut self.gset,
            &self.config.kmeans,
            &mut self.krng,
        )?;
        self.meta.sync(&self.gset);
        Ok(())
    }

    fn episode<R: Rng + ?Sized>(&mut self, episode: u64, rng: &mut R) -> Result<EpisodeRecord> {
        let cfg = self.config;
        let key_cell = self.env.layout.key_pos;
        let mut state = self.env.reset(rng);
        let mut rec = EpisodeRecord {
            episode,
            ret: 0.0,
            discounted_return: 0.0,
            steps: 0,
            success: false,
            got_key: false,
            eps1: self.controller.epsilon.value(),
            eps2: self.meta.epsilon.value(),
            n_subgoals: 0,
            segments: 0,
            attained: Vec::new(),
            post_key_switch: None,
        };
        let mut disc = 1.0;
        let mut key_pending = false;
        while !state.done {
            let s0 = state.agent;
            let g = self.meta.select(s0, &self.gset, &self.kstate, rng)?;
            if key_pending {
                rec.post_key_switch = Some(self.gset.anomaly_at(key_cell) != Some(g));
                key_pending = false;
            }
            rec.segments += 1;
            let goal = self.gset.point(g);
            let (mut seg_ret, mut seg_disc, mut seg_steps) = (0.0, 1.0, 0u32);
            let mut end_terminal;
            loop {
                let s = state.agent;
                let a = self.controller.act(s, goal, rng)?;
                let (next, out) = self.env.step(&state, a)?;
                let attained = self.gset.attained(g, out.next_obs, &self.kstate)?;
                self.memories.controller.push(IntrinsicTransition {
                    s,
                    g: Some(g),
                    goal,
                    a,
                    r_tilde: intrinsic_reward(attained, out.reward),
                    s_next: out.next_obs,
                    attained,
                    terminal: out.success,
                });
                let t = Transition { s, a, r: out.reward, s_next: out.next_obs, terminal: out.success };
                self.memories.agent.push(t);
                if self.detector.detect_anomaly(&t) && self.gset.add_anomaly(t.s_next).is_some() {
                    self.meta.sync(&self.gset);
                }
                if next.has_key && !state.has_key {
                    rec.got_key = true;
                    key_pending = true;
                }
                seg_ret += seg_disc * out.reward;
                seg_disc *= cfg.gamma;
                seg_steps += 1;
                rec.ret += out.reward;
                rec.discounted_return += disc * out.reward;
                disc *= cfg.gamma;

                let batch = self.memories.controller.sample_minibatch(cfg.batch1, rng);
                self.controller.td_update(&batch)?;
                if !self.memories.meta.is_empty() {
                    for mt in self.memories.meta.sample_minibatch(cfg.batch2, rng) {
                        self.meta.update(&mt, &self.gset, &self.kstate)?;
                    }
                }
                self.total_steps += 1;
                state = next;
                rec.success |= out.success;
                end_terminal = out.success;
                if attained {
                    rec.attained.push(g);
                }
                if attained || state.done || seg_steps >= cfg.segment_steps {
                    break;
                }
            }
            self.memories.meta.push(MetaTransition {
                s0,
                g,
                ret: seg_ret,
                s_end: state.agent,
                end_terminal,
                steps: seg_steps,
            });
        }
        rec.steps = state.step_count;
        rec.n_subgoals = self.gset.len();
        Ok(rec)
    }

    fn evaluate(&self, episodes: u64, seed: u64) -> Result<super::EvalResult> {
        let mut policy =
            HierarchicalPolicy::new(&self.controller, &self.meta, &self.gset, &self.kstate, self.config.segment_steps);
        evaluate(&mut policy, &self.env, episodes, seed)
    }
}

/// Seed of the greedy evaluation taken after `after_episode` episodes.
pub(crate) fn eval_seed(config: &TrainConfig, after_episode: u64) -> u64 {
    use rand::RngCore;
    stream(config.seed, STREAM_EVAL + after_episode).next_u64()
}

/// The full hierarchical pipeline: intrinsic pretraining, a controller
/// walk, initial discovery, then `episodes` task episodes with in-loop
/// anomaly capture and periodic K-means refits.
pub fn run_unified(config: &TrainConfig) -> Result<RunArtifacts> {
    config.validate().map_err(invalid)?;
    let env = task_env(config);
    let grid = env.layout.grid();
    let mut controller = new_controller(config, grid);
    let mut memories = Memories::new(config);

    let mut prng = stream(config.seed, STREAM_PRETRAIN);
    let pretrain =
        pretrain_controller(&mut controller, &env, &mut memories, config.pretrain_episodes, config.batch1, &mut prng)?;
    let mut memories = Memories::new(config);
    let mut wrng = stream(config.seed, STREAM_WALK);
    random_walk(&env, Some(&controller), &mut memories.agent, config.walk_episodes, config.segment_steps, &mut wrng)?;
    let walk_transitions = memories.agent.len();

    let detector = AnomalyDetector::new(&config.anomaly, grid);
    let gset = SubgoalSet::new(grid, detector.merge_radius);
    let meta =
        MetaControllerAgent::new(config.epsilon2.clone(), config.alpha2, config.gamma, config.meta_discount_mode);
    let mut learner = Learner {
        config,
        env,
        controller,
        meta,
        detector,
        kstate: KMeansState::new(config.k),
        gset,
        memories,
        krng: stream(config.seed, STREAM_KMEANS),
        total_steps: 0,
        refits: 0,
    };
    learner.discover()?;
    if learner.gset.is_empty() {
        return Err(HrlError::Contract("no subgoals after the initial discovery".into()));
    }

    let mut rng = stream(config.seed, STREAM_TRAIN);
    let mut records = Vec::with_capacity(config.episodes as usize);
    let mut evals = Vec::new();
    for episode in 0..config.episodes {
        let rec = learner.episode(episode, &mut rng).map_err(|e| at(e, episode, 0))?;
        records.push(rec);
        learner.controller.epsilon.advance();
        learner.meta.epsilon.advance();
        let due = learner.total_steps / config.discovery_interval;
        if due > learner.refits {
            learner.refits = due;
            learner.discover()?;
        }
        let done = episode + 1;
        if config.eval_interval > 0 && done % config.eval_interval == 0 {
            let result = learner.evaluate(config.eval_episodes, eval_seed(config, done))?;
            evals.push(EvalRecord { after_episode: done, result });
        }
    }
    let final_eval = match config.final_eval_episodes {
        0 => None,
        n => Some(learner.evaluate(n, eval_seed(config, 0))?),
    };
    let summary = RunSummary {
        pretrain_episodes: pretrain.len() as u64,
        pretrain_success_rate: rate(pretrain.iter().map(|r| r.success)),
        walk_transitions,
        task_steps: learner.total_steps,
        refits: learner.refits,
        final_eval,
    };
    Ok(RunArtifacts {
        config: config.clone(),
        layout: learner.env.layout.clone(),
        controller: Some(learner.controller.net),
        meta: Some(learner.meta.table),
        gset: Some(learner.gset),
        kstate: Some(learner.kstate),
        baseline: None,
        records,
        evals,
        summary,
    })
}

pub(crate) fn rate(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut k) = (0usize, 0usize);
    for f in flags {
        n += 1;
        k += f as usize;
    }
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}
