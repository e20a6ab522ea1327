//! Centralized-critic actor-critic over reset decisions.
//!
//! Each reset is one decision step for the user being reset. A user's
//! decisions within an episode form one trajectory; its last decision is
//! terminal. The actor is trained with the advantage-weighted likelihood
//! ratio of the Gaussian exploration policy, clipped so one batch cannot drag
//! the tanh mean into saturation; the critic regresses TD(λ) returns on the
//! joint state.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{ResetMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::harness::engine::Simulation;
use crate::harness::with_workers;
use crate::reward::total_reward;
use crate::rng::{derive_seed, stream, streams};

use super::advantage::{compute_advantages, lambda_returns, TdStep};
use super::nn::{Adam, Mlp};
use super::policy::{Decision, PolicyController, PolicyMode, PolicyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    /// Decisions per update.
    pub batch_size: usize,
    /// Initial Adam step size, annealed linearly to zero with the step budget.
    pub learning_rate: f64,
    /// Hidden layers of both networks.
    pub layers: usize,
    pub hidden_units: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// Total decision steps.
    pub max_steps: u64,
    pub seed: u64,
    /// Exploration noise, annealed linearly over training.
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Likelihood ratios outside `1 ± clip_ratio` stop contributing gradient.
    pub clip_ratio: f64,
    /// Episodes collected concurrently per round.
    pub episodes_per_round: usize,
    /// Waypoint budget per user in training episodes.
    pub episode_waypoints: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            learning_rate: 1e-3,
            layers: 4,
            hidden_units: 256,
            gamma: 0.99,
            lambda: 0.95,
            max_steps: 15_000_000,
            seed: 0,
            sigma_start: 0.5,
            sigma_end: 0.05,
            epochs: 3,
            minibatch_size: 256,
            clip_ratio: 0.2,
            episodes_per_round: 8,
            episode_waypoints: 20,
        }
    }
}

impl TrainerConfig {
    /// Defaults with a desk-sized step budget.
    pub fn desk_scale(max_steps: u64) -> Self {
        Self {
            max_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.gamma) || !unit(self.lambda) {
            return Err(Error::Config("gamma and lambda must lie in (0, 1]".into()));
        }
        if self.batch_size == 0
            || self.layers == 0
            || self.hidden_units == 0
            || self.max_steps == 0
            || self.epochs == 0
            || self.minibatch_size == 0
            || self.episodes_per_round == 0
            || self.episode_waypoints == 0
        {
            return Err(Error::Config("trainer sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0)
            || !(self.clip_ratio > 0.0)
            || !(self.sigma_start >= 0.0)
            || !(self.sigma_end >= 0.0)
        {
            return Err(Error::Config("learning rate and exploration must be non-negative".into()));
        }
        Ok(())
    }

    fn progress(&self, steps: u64) -> f64 {
        (steps as f64 / self.max_steps as f64).min(1.0)
    }

    pub fn sigma_at(&self, steps: u64) -> f64 {
        self.sigma_start + (self.sigma_end - self.sigma_start) * self.progress(steps)
    }

    pub fn learning_rate_at(&self, steps: u64) -> f64 {
        self.learning_rate * (1.0 - self.progress(steps))
    }
}

/// Actor training example: which output the decision read, what action was
/// taken, and how good it turned out.
#[derive(Debug, Clone, PartialEq)]
pub struct PgSample {
    pub input: Vec<f64>,
    pub out_index: usize,
    /// Unclipped Gaussian draw.
    pub action: f64,
    /// Log-density of `action` under the acting parameters.
    pub old_log_prob: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSample {
    pub state: Vec<f64>,
    pub target: f64,
}

fn gaussian_log_density(a: f64, mu: f64, sigma: f64) -> f64 {
    let z = (a - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Mean of `-min(ρA, clip(ρ, 1 ± ε)A)` with `ρ = N(a; μ(x), σ²) / N_old(a)`.
pub fn actor_loss(actor: &Mlp, batch: &[PgSample], sigma: f64, clip: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in batch {
        let mu = actor.forward(&s.input)?[s.out_index];
        let ratio = (gaussian_log_density(s.action, mu, sigma) - s.old_log_prob).exp();
        total -= (ratio * s.advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * s.advantage);
    }
    Ok(total / batch.len().max(1) as f64)
}

pub fn actor_gradient(actor: &Mlp, batch: &[PgSample], sigma: f64, clip: f64) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; actor.n_params()];
    let mut g_out = vec![0.0; actor.output_dim()];
    let scale = 1.0 / batch.len().max(1) as f64;
    for s in batch {
        let trace = actor.forward_traced(&s.input)?;
        let mu = trace.output()[s.out_index];
        let ratio = (gaussian_log_density(s.action, mu, sigma) - s.old_log_prob).exp();
        // The clipped branch is flat in μ.
        let clipped = (s.advantage >= 0.0 && ratio > 1.0 + clip) || (s.advantage < 0.0 && ratio < 1.0 - clip);
        if clipped {
            continue;
        }
        g_out.fill(0.0);
        g_out[s.out_index] = -s.advantage * ratio * (s.action - mu) / (sigma * sigma) * scale;
        actor.backward(&trace, &g_out, &mut grad);
    }
    Ok(grad)
}

/// Mean of `½ (V(s) − G)²`.
pub fn critic_loss(critic: &Mlp, batch: &[ValueSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in batch {
        total += 0.5 * (critic.forward(&s.state)?[0] - s.target).powi(2);
    }
    Ok(total / batch.len().max(1) as f64)
}

pub fn critic_gradient(critic: &Mlp, batch: &[ValueSample]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; critic.n_params()];
    let scale = 1.0 / batch.len().max(1) as f64;
    for s in batch {
        let trace = critic.forward_traced(&s.state)?;
        let g = (trace.output()[0] - s.target) * scale;
        critic.backward(&trace, &[g], &mut grad);
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub steps: u64,
    pub mean_return: f64,
    pub mean_resets: f64,
}

/// Writes the learning curve as CSV.
pub fn write_curve<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub params: PolicyParams,
    pub curve: Vec<CurvePoint>,
    /// Return of every training episode in collection order.
    pub episode_returns: Vec<f64>,
    pub episode_resets: Vec<usize>,
    /// Actor fingerprint that every decision of each update was taken with.
    pub fingerprints: Vec<u64>,
    pub steps: u64,
}

struct Rollout {
    decisions: Vec<Decision>,
    rewards: Vec<f64>,
    episode_return: f64,
}

fn collect_episode(scenario: &ScenarioConfig, params: &PolicyParams, sigma: f64, seed: u64) -> Result<Rollout> {
    let cfg = scenario.clone().with_seed(seed);
    let mut ctrl = PolicyController::exploring(params, sigma, stream(seed, &[streams::POLICY]), true);
    let episode = Simulation::new(&cfg)?.run(&mut ctrl)?;
    let decisions = ctrl.into_decisions();
    if decisions.len() != episode.events.len() {
        return Err(Error::SimulationFault {
            frame: episode.metrics.frames,
            detail: format!(
                "{} policy decisions for {} reset events",
                decisions.len(),
                episode.events.len()
            ),
        });
    }
    let rewards = episode
        .events
        .iter()
        .map(|e| total_reward(&cfg.params.reward, &e.reward))
        .collect::<Result<Vec<_>>>()?;
    Ok(Rollout {
        decisions,
        episode_return: rewards.iter().sum(),
        rewards,
    })
}

/// Turns rollouts into actor and critic examples.
fn build_batch(
    params: &PolicyParams,
    rollouts: &[Rollout],
    cfg: &TrainerConfig,
    sigma: f64,
) -> Result<(Vec<PgSample>, Vec<ValueSample>)> {
    let mut pg = Vec::new();
    let mut vs = Vec::new();
    for r in rollouts {
        for user in 0..params.n_users {
            let idx: Vec<usize> = (0..r.decisions.len()).filter(|&k| r.decisions[k].user == user).collect();
            let values = idx
                .iter()
                .map(|&k| params.critic_value(&r.decisions[k].state))
                .collect::<Result<Vec<_>>>()?;
            let steps: Vec<TdStep> = idx
                .iter()
                .enumerate()
                .map(|(t, &k)| TdStep {
                    reward: r.rewards[k],
                    value: values[t],
                    next_value: values.get(t + 1).copied().unwrap_or(0.0),
                    done: t + 1 == idx.len(),
                })
                .collect();
            let adv = compute_advantages(&steps, cfg.gamma, cfg.lambda);
            let ret = lambda_returns(&steps, &adv);
            for (t, &k) in idx.iter().enumerate() {
                let d = &r.decisions[k];
                let (x, out_index) = params.actor_input(&d.state, d.user);
                pg.push(PgSample {
                    input: x.to_vec(),
                    out_index,
                    action: d.sample,
                    old_log_prob: gaussian_log_density(d.sample, d.mean, sigma),
                    advantage: adv[t],
                });
                vs.push(ValueSample {
                    state: d.state.0.clone(),
                    target: ret[t],
                });
            }
        }
    }
    let n = pg.len().max(1) as f64;
    let m = pg.iter().map(|s| s.advantage).sum::<f64>() / n;
    let sd = (pg.iter().map(|s| (s.advantage - m).powi(2)).sum::<f64>() / n).sqrt();
    for s in &mut pg {
        s.advantage = (s.advantage - m) / (sd + 1e-8);
    }
    Ok((pg, vs))
}

/// Shared-actor training: one actor acting on each user's own observation,
/// one critic over the joint state.
pub fn train(config: &TrainerConfig, scenario: &ScenarioConfig) -> Result<TrainingReport> {
    train_mode(config, scenario, PolicyMode::Ctde)
}

/// Joint-action variant: one actor maps the joint state to every user's
/// action.
pub fn train_single_agent(config: &TrainerConfig, scenario: &ScenarioConfig) -> Result<TrainingReport> {
    train_mode(config, scenario, PolicyMode::SingleAgent)
}

pub fn train_mode(config: &TrainerConfig, scenario: &ScenarioConfig, mode: PolicyMode) -> Result<TrainingReport> {
    config.validate()?;
    if scenario.reset != ResetMode::MrcPolicy {
        return Err(Error::Config("training needs a scenario with the MRC_POLICY reset mode".into()));
    }
    let scenario = scenario.clone().with_waypoints(config.episode_waypoints);
    scenario.validate()?;
    let mut params = PolicyParams::new(
        mode,
        scenario.n_users,
        config.layers,
        config.hidden_units,
        &mut stream(config.seed, &[streams::INIT]),
    )?;
    params.metadata.insert("steering".into(), scenario.steering.name().into());
    params.metadata.insert("preset".into(), scenario.space.preset_name().into());
    params.metadata.insert("reward_weights".into(), format!("{:?}", scenario.params.reward));
    let mut actor_opt = Adam::new(params.actor.n_params(), config.learning_rate);
    let mut critic_opt = Adam::new(params.critic.n_params(), config.learning_rate);
    let mut shuffle_rng = stream(config.seed, &[streams::MINIBATCH]);

    let mut report = TrainingReport {
        params: params.clone(),
        curve: Vec::new(),
        episode_returns: Vec::new(),
        episode_resets: Vec::new(),
        fingerprints: Vec::new(),
        steps: 0,
    };
    let mut episode_counter = 0u64;
    let mut update = 0usize;
    while report.steps < config.max_steps {
        let sigma = config.sigma_at(report.steps).max(1e-3);
        let fingerprint = params.fingerprint();
        let mut rollouts: Vec<Rollout> = Vec::new();
        let mut decisions = 0usize;
        while decisions < config.batch_size && report.steps + (decisions as u64) < config.max_steps {
            let seeds: Vec<u64> = (0..config.episodes_per_round as u64)
                .map(|k| derive_seed(config.seed, &[streams::EPISODE, episode_counter + k]))
                .collect();
            episode_counter += seeds.len() as u64;
            let snapshot = &params;
            let round = with_workers(|| {
                seeds
                    .par_iter()
                    .map(|&s| collect_episode(&scenario, snapshot, sigma, s))
                    .collect::<Result<Vec<_>>>()
            })??;
            for r in round {
                decisions += r.decisions.len();
                rollouts.push(r);
            }
        }
        if rollouts.iter().flat_map(|r| &r.decisions).any(|d| d.fingerprint != fingerprint) {
            return Err(Error::TrainingDiverged {
                update,
                detail: "decisions were taken with different actor parameters".into(),
            });
        }
        report.steps += decisions as u64;
        for r in &rollouts {
            report.episode_returns.push(r.episode_return);
            report.episode_resets.push(r.decisions.len());
        }
        let n_eps = rollouts.len().max(1) as f64;
        report.curve.push(CurvePoint {
            update,
            steps: report.steps,
            mean_return: rollouts.iter().map(|r| r.episode_return).sum::<f64>() / n_eps,
            mean_resets: decisions as f64 / n_eps,
        });
        report.fingerprints.push(fingerprint);
        if decisions == 0 {
            update += 1;
            continue;
        }

        let (pg, vs) = build_batch(&params, &rollouts, config, sigma)?;
        // Progress at the start of the batch, so the last update still moves.
        let lr = config.learning_rate_at(report.steps - decisions as u64);
        actor_opt.lr = lr;
        critic_opt.lr = lr;
        let mut order: Vec<usize> = (0..pg.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(config.minibatch_size) {
                let pg_mb: Vec<PgSample> = chunk.iter().map(|&k| pg[k].clone()).collect();
                let vs_mb: Vec<ValueSample> = chunk.iter().map(|&k| vs[k].clone()).collect();
                let ga = actor_gradient(&params.actor, &pg_mb, sigma, config.clip_ratio)?;
                let gc = critic_gradient(&params.critic, &vs_mb)?;
                if ga.iter().chain(&gc).any(|g| !g.is_finite()) {
                    return Err(Error::TrainingDiverged {
                        update,
                        detail: "non-finite gradient".into(),
                    });
                }
                actor_opt.step(params.actor.params_mut(), &ga);
                critic_opt.step(params.critic.params_mut(), &gc);
            }
        }
        let loss = critic_loss(&params.critic, &vs)?;
        if !loss.is_finite() || !params.actor.is_finite() || !params.critic.is_finite() {
            return Err(Error::TrainingDiverged {
                update,
                detail: format!("critic loss {loss}, parameters finite: {}", params.actor.is_finite()),
            });
        }
        update += 1;
    }
    params.version = format!("{}-u{}", mode.tag().to_lowercase(), update);
    params.metadata.insert("updates".into(), update.to_string());
    params.metadata.insert("decision_steps".into(), report.steps.to_string());
    report.params = params;
    Ok(report)
}
