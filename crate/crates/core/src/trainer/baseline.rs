use rand::Rng;

use crate::agents::SarsaBaseline;
use crate::approx::StateGoalNet;
use crate::env::{Action, GridEnv, GridPos};
use crate::error::Result;

use super::artifacts::{RunArtifacts, RunSummary};
use super::eval::{evaluate, Policy};
use super::unified::{at, eval_seed, invalid, task_env};
use super::{stream, EpisodeRecord, EvalRecord, TrainConfig, STREAM_NET, STREAM_TRAIN};

/// Greedy view of a baseline agent.
pub struct BaselineRun<'a>(pub &'a SarsaBaseline);

impl Policy for BaselineRun<'_> {
    fn act(&mut self, obs: GridPos) -> Result<Action> {
        Ok(self.0.greedy_action(obs))
    }
}

pub(crate) fn new_baseline(config: &TrainConfig, grid: (i32, i32)) -> Result<SarsaBaseline> {
    let net = StateGoalNet::new(config.net.clone(), &mut stream(config.seed, STREAM_NET));
    SarsaBaseline::new(net, config.epsilon1.clone(), config.alpha1, config.gamma, grid)
}

fn baseline_episode<R: Rng + ?Sized>(
    agent: &mut SarsaBaseline,
    env: &GridEnv,
    episode: u64,
    gamma: f64,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let mut state = env.reset(rng);
    let mut rec = EpisodeRecord {
        episode,
        ret: 0.0,
        discounted_return: 0.0,
        steps: 0,
        success: false,
        got_key: false,
        eps1: agent.epsilon.value(),
        eps2: 0.0,
        n_subgoals: 0,
        segments: 0,
        attained: Vec::new(),
        post_key_switch: None,
    };
    let mut disc = 1.0;
    let mut a = agent.act(state.agent, rng);
    while !state.done {
        let (next, out) = env.step(&state, a).map_err(|e| at(e, episode, state.step_count))?;
        let a_next = agent.act(out.next_obs, rng);
        agent.sarsa_update(state.agent, a, out.reward, out.next_obs, a_next, out.success);
        rec.got_key |= next.has_key && !state.has_key;
        rec.success |= out.success;
        rec.ret += out.reward;
        rec.discounted_return += disc * out.reward;
        disc *= gamma;
        state = next;
        a = a_next;
    }
    rec.steps = state.step_count;
    Ok(rec)
}

/// Flat on-policy SARSA on the task, with the same network, episode count
/// and step cap as the hierarchical run.
pub fn run_baseline(config: &TrainConfig) -> Result<RunArtifacts> {
    config.validate().map_err(invalid)?;
    let env = task_env(config);
    let mut agent = new_baseline(config, env.layout.grid())?;
    let mut rng = stream(config.seed, STREAM_TRAIN);
    let mut records = Vec::with_capacity(config.episodes as usize);
    let mut evals = Vec::new();
    let mut steps = 0u64;
    for episode in 0..config.episodes {
        let rec = baseline_episode(&mut agent, &env, episode, config.gamma, &mut rng)?;
        steps += rec.steps as u64;
        records.push(rec);
        agent.epsilon.advance();
        let done = episode + 1;
        if config.eval_interval > 0 && done % config.eval_interval == 0 {
            let result = evaluate(&mut BaselineRun(&agent), &env, config.eval_episodes, eval_seed(config, done))?;
            evals.push(EvalRecord { after_episode: done, result });
        }
    }
    let final_eval = match config.final_eval_episodes {
        0 => None,
        n => Some(evaluate(&mut BaselineRun(&agent), &env, n, eval_seed(config, 0))?),
    };
    Ok(RunArtifacts {
        config: config.clone(),
        layout: env.layout.clone(),
        controller: None,
        meta: None,
        gset: None,
        kstate: None,
        baseline: Some(agent.net),
        records,
        evals,
        summary: RunSummary { task_steps: steps, final_eval, ..RunSummary::default() },
    })
}
