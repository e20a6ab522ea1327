//! Frame loop for one episode.
//!
//! Users advance in index order at 30 Hz. Each frame a user gets steering
//! gains, proposes a step, and either commits it or, if the step triggers a
//! reset, stays put and is reoriented by the reset controller. A user reset
//! reorients both users involved in the same frame. A user stops after
//! walking its waypoint budget and no longer blocks anyone; the episode ends
//! when every user has stopped.

use serde::{Deserialize, Serialize};

use crate::env::{spawn_users, ResetMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::Disc;
use crate::locomotion::{apply_reset, next_waypoint, step_user, GainSet, SimClock, UserState};
use crate::marl::{PolicyController, PolicyParams};
use crate::reset::{
    candidate_directions, detect_reset, is_admissible, GreedyMrc, Peer, ResetContext,
    ResetEvent, ResetKind, ResetPolicy, ResetToCenter, ResetToGradient,
};
use crate::reward::{area_reward, RewardBreakdown};
use crate::rng::{stream, streams, SimRng};
use crate::steering::steering_gains;

/// Generous per-waypoint frame allowance before an episode is cut short.
const FRAMES_PER_WAYPOINT_CAP: u64 = 900;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub resets_per_user: Vec<usize>,
    pub total_resets: usize,
    pub boundary_resets: usize,
    /// Counted once per affected user.
    pub user_resets: usize,
    pub virtual_distance: Vec<f64>,
    pub mdbr: Vec<f64>,
    pub mean_mdbr: f64,
    pub escalations: usize,
    pub frames: u64,
    /// The frame cap ended the episode before every path was walked.
    pub truncated: bool,
}

impl EpisodeMetrics {
    pub fn from_log(
        n_users: usize,
        events: &[ResetEvent],
        virtual_distance: &[f64],
        frames: u64,
        truncated: bool,
    ) -> Self {
        let mut resets_per_user = vec![0; n_users];
        for e in events {
            resets_per_user[e.user_index] += 1;
        }
        let mdbr: Vec<f64> = virtual_distance
            .iter()
            .zip(&resets_per_user)
            .map(|(d, &r)| d / r.max(1) as f64)
            .collect();
        let user_resets = events
            .iter()
            .filter(|e| matches!(e.kind, ResetKind::User { .. }))
            .count();
        Self {
            total_resets: events.len(),
            boundary_resets: events.len() - user_resets,
            user_resets,
            mean_mdbr: mdbr.iter().sum::<f64>() / n_users.max(1) as f64,
            resets_per_user,
            virtual_distance: virtual_distance.to_vec(),
            mdbr,
            escalations: events.iter().filter(|e| e.escalated).count(),
            frames,
            truncated,
        }
    }
}

/// Everything an episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub metrics: EpisodeMetrics,
    pub events: Vec<ResetEvent>,
    /// Virtual distance each user walked before its first reset.
    pub lead_in: Vec<f64>,
    pub final_users: Vec<UserState>,
}

/// What happened in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: u64,
    /// Gains applied to each user; `None` for users that did not step.
    pub gains: Vec<Option<GainSet>>,
    pub resets: usize,
}

pub struct Simulation<'a> {
    config: &'a ScenarioConfig,
    users: Vec<UserState>,
    remaining: Vec<usize>,
    active: Vec<bool>,
    path_rngs: Vec<SimRng>,
    clock: SimClock,
    events: Vec<ResetEvent>,
    last_event: Vec<Option<usize>>,
    lead_in: Vec<f64>,
    virtual_distance: Vec<f64>,
    max_frames: u64,
}

impl<'a> Simulation<'a> {
    /// Spawns users and assigns first waypoints from `config.seed`.
    pub fn new(config: &'a ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut users = spawn_users(config, &mut stream(config.seed, &[streams::SPAWN]))?;
        let mut path_rngs: Vec<SimRng> = (0..config.n_users)
            .map(|i| stream(config.seed, &[streams::PATH, i as u64]))
            .collect();
        for (u, rng) in users.iter_mut().zip(&mut path_rngs) {
            u.waypoint = next_waypoint(u, &config.vspace, rng, &config.params.waypoints);
        }
        let n = config.n_users;
        Ok(Self {
            config,
            users,
            remaining: vec![config.path_waypoints; n],
            active: vec![true; n],
            path_rngs,
            clock: SimClock::default(),
            events: Vec::new(),
            last_event: vec![None; n],
            lead_in: vec![0.0; n],
            virtual_distance: vec![0.0; n],
            max_frames: config.path_waypoints as u64 * FRAMES_PER_WAYPOINT_CAP,
        })
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn events(&self) -> &[ResetEvent] {
        &self.events
    }

    pub fn frame(&self) -> u64 {
        self.clock.frame
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn is_finished(&self) -> bool {
        !self.active.iter().any(|&a| a) || self.clock.frame >= self.max_frames
    }

    fn peers_of(&self, i: usize) -> Vec<Peer> {
        self.users
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i && self.active[j])
            .map(|(j, u)| Peer { index: j, pos: u.phys_pos })
            .collect()
    }

    fn fault(&self, detail: impl Into<String>) -> Error {
        Error::SimulationFault {
            frame: self.clock.frame,
            detail: detail.into(),
        }
    }

    /// Advances every active user by one frame.
    pub fn step_frame(&mut self, controller: &mut dyn ResetPolicy) -> Result<FrameReport> {
        let cfg = self.config;
        let n = self.users.len();
        let mut gains = vec![None; n];
        let mut skip = vec![false; n];
        let mut resets = 0;
        for i in 0..n {
            if !self.active[i] || skip[i] {
                continue;
            }
            let peers = self.peers_of(i);
            let peer_pos: Vec<_> = peers.iter().map(|p| p.pos).collect();
            let g = steering_gains(cfg.steering, &cfg.space, &self.users[i], &peer_pos, &cfg.params);
            g.validate()?;
            gains[i] = Some(g);
            let step = step_user(&cfg.space, &self.users[i], &g, &self.clock, &cfg.params)?;
            if let Some(kind) = detect_reset(&cfg.space, &cfg.params.reset, &self.users[i], step.next.phys_pos, &peers) {
                self.reset_user(i, kind, controller)?;
                resets += 1;
                if let ResetKind::User { other, .. } = kind {
                    let back = ResetKind::user_reset(self.users[other].phys_heading, i);
                    self.reset_user(other, back, controller)?;
                    skip[other] = true;
                    resets += 1;
                }
                continue;
            }
            if step.collision {
                return Err(self.fault(format!("user {i} entered an obstacle: {:?}", step.next)));
            }
            if !step.next.is_finite() {
                return Err(self.fault(format!("user {i} has non-finite state: {:?}", step.next)));
            }
            self.users[i] = step.next;
            self.virtual_distance[i] += step.virt_translation;
            if step.reached_waypoint {
                self.remaining[i] -= 1;
                if self.remaining[i] == 0 {
                    self.active[i] = false;
                } else {
                    let u = &mut self.users[i];
                    u.waypoint = next_waypoint(u, &cfg.vspace, &mut self.path_rngs[i], &cfg.params.waypoints);
                }
            }
        }
        let frame = self.clock.frame;
        self.clock.tick();
        Ok(FrameReport { frame, gains, resets })
    }

    /// Would the user's next frame, after turning to `theta`, trigger
    /// another reset? Replays steering and stepping from the reset state.
    fn retriggers(&self, i: usize, theta: f64, peers: &[Peer]) -> bool {
        let cfg = self.config;
        let user = apply_reset(&self.users[i], theta);
        let peer_pos: Vec<_> = peers.iter().map(|p| p.pos).collect();
        let g = steering_gains(cfg.steering, &cfg.space, &user, &peer_pos, &cfg.params);
        match step_user(&cfg.space, &user, &g, &self.clock, &cfg.params) {
            Ok(step) => detect_reset(&cfg.space, &cfg.params.reset, &user, step.next.phys_pos, peers).is_some(),
            Err(_) => true,
        }
    }

    /// Replaces a direction whose next frame would reset again by the
    /// admissible candidate nearest the base direction that does not.
    fn escalate(&self, i: usize, kind: &ResetKind, theta: f64, peers: &[Peer]) -> (f64, bool) {
        if !self.retriggers(i, theta, peers) {
            return (theta, false);
        }
        let fallback = candidate_directions(kind, self.config.params.reset.greedy_candidates);
        let clear = fallback.iter().copied().find(|&t| !self.retriggers(i, t, peers));
        (clear.unwrap_or(fallback[0]), true)
    }

    fn reset_user(&mut self, i: usize, kind: ResetKind, controller: &mut dyn ResetPolicy) -> Result<()> {
        let cfg = self.config;
        let peers = self.peers_of(i);
        let ctx = ResetContext {
            space: &cfg.space,
            params: &cfg.params,
            users: &self.users,
            peers: &peers,
            index: i,
            kind,
        };
        let chosen = controller.direction(&ctx)?;
        if !is_admissible(&kind, chosen) {
            return Err(self.fault(format!(
                "{} chose {chosen} outside the admissible range of {kind:?}",
                controller.name()
            )));
        }
        let (theta_a, escalated) = self.escalate(i, &kind, chosen, &peers);
        let blockers: Vec<Disc> = peers
            .iter()
            .map(|p| Disc::new(p.pos, cfg.params.reset.user_radius))
            .collect();
        let r_area = area_reward(
            &cfg.space,
            &blockers,
            self.users[i].phys_pos,
            theta_a,
            cfg.params.reset.fan_samples,
            cfg.params.reset.cone_half_width,
        )?;
        let walked = self.users[i].dist_since_reset;
        match self.last_event[i] {
            Some(k) => self.events[k].reward.r_dist = Some(walked),
            None => self.lead_in[i] = walked,
        }
        self.users[i] = apply_reset(&self.users[i], theta_a);
        self.last_event[i] = Some(self.events.len());
        self.events.push(ResetEvent {
            frame: self.clock.frame,
            user_index: i,
            kind,
            theta_a,
            escalated,
            reward: RewardBreakdown::new(r_area),
        });
        Ok(())
    }

    /// Credits the residual walking distance and assembles metrics.
    pub fn finish(mut self) -> Episode {
        for i in 0..self.users.len() {
            let walked = self.users[i].dist_since_reset;
            match self.last_event[i] {
                Some(k) => self.events[k].reward.r_dist = Some(walked),
                None => self.lead_in[i] = walked,
            }
        }
        let truncated = self.active.iter().any(|&a| a);
        let metrics = EpisodeMetrics::from_log(
            self.users.len(),
            &self.events,
            &self.virtual_distance,
            self.clock.frame,
            truncated,
        );
        Episode {
            metrics,
            events: self.events,
            lead_in: self.lead_in,
            final_users: self.users,
        }
    }

    pub fn run(mut self, controller: &mut dyn ResetPolicy) -> Result<Episode> {
        while !self.is_finished() {
            self.step_frame(controller)?;
        }
        Ok(self.finish())
    }
}

/// Reset controller for a mode. The learned mode needs parameters.
pub fn controller_for<'p>(
    mode: ResetMode,
    policy: Option<&'p PolicyParams>,
    config: &ScenarioConfig,
) -> Result<Box<dyn ResetPolicy + 'p>> {
    Ok(match mode {
        ResetMode::R2C => Box::new(ResetToCenter),
        ResetMode::R2G => Box::new(ResetToGradient),
        ResetMode::MrcGreedy => Box::new(GreedyMrc {
            candidates: config.params.reset.greedy_candidates,
        }),
        ResetMode::MrcPolicy => {
            let p = policy.ok_or_else(|| Error::Config("MRC_POLICY needs policy parameters".into()))?;
            if p.n_users != config.n_users {
                return Err(Error::Config(format!(
                    "policy was trained for {} users, scenario has {}",
                    p.n_users, config.n_users
                )));
            }
            Box::new(PolicyController::greedy(p, stream(config.seed, &[streams::POLICY])))
        }
    })
}

/// Runs one episode of `config` with the configured reset controller.
pub fn run_episode(config: &ScenarioConfig, policy: Option<&PolicyParams>) -> Result<Episode> {
    let mut controller = controller_for(config.reset, policy, config)?;
    Simulation::new(config)?.run(controller.as_mut())
}
