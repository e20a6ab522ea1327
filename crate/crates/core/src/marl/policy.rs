//! Observations, joint state, and the learned reset controller.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{normalize_pose, PhysicalSpace};
use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::locomotion::UserState;
use crate::reset::{ResetContext, ResetKind, ResetPolicy};
use crate::rng::SimRng;

use super::nn::{Mlp, OutputActivation};

/// Per-user observation `(x, y, θ)`, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; 3]);

impl Observation {
    pub fn of(space: &PhysicalSpace, user: &UserState) -> Result<Self> {
        Ok(Self(normalize_pose(space, user.phys_pos, user.phys_heading)?.as_array()))
    }
}

/// Concatenated observations of all users in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalState(pub Vec<f64>);

impl GlobalState {
    pub fn n_users(&self) -> usize {
        self.0.len() / 3
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.0[3 * i..3 * i + 3]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn build_state(users: &[UserState], space: &PhysicalSpace) -> Result<GlobalState> {
    let mut s = Vec::with_capacity(3 * users.len());
    for u in users {
        s.extend(Observation::of(space, u)?.0);
    }
    Ok(GlobalState(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// One actor shared by all users, each acting on its own observation.
    Ctde,
    /// One actor reading the joint state and emitting every user's action.
    SingleAgent,
}

impl PolicyMode {
    pub fn tag(self) -> &'static str {
        match self {
            PolicyMode::Ctde => "MRC",
            PolicyMode::SingleAgent => "MRC_S",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub mode: PolicyMode,
    pub n_users: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub version: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl PolicyParams {
    /// Fresh networks. The actor's last layer is shrunk so initial actions
    /// sit near the base direction.
    pub fn new<R: Rng + ?Sized>(
        mode: PolicyMode,
        n_users: usize,
        layers: usize,
        hidden_units: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_users == 0 {
            return Err(Error::Config("policy needs at least one user".into()));
        }
        let (a_in, a_out) = match mode {
            PolicyMode::Ctde => (3, 1),
            PolicyMode::SingleAgent => (3 * n_users, n_users),
        };
        let mut actor = Mlp::new(a_in, layers, hidden_units, a_out, OutputActivation::Tanh, rng)?;
        actor.scale_output_layer(0.01);
        let critic = Mlp::new(3 * n_users, layers, hidden_units, 1, OutputActivation::Linear, rng)?;
        Ok(Self {
            mode,
            n_users,
            actor,
            critic,
            version: format!("{}-v0", mode.tag().to_lowercase()),
            metadata: BTreeMap::new(),
        })
    }

    pub fn tag(&self) -> &'static str {
        self.mode.tag()
    }

    fn check_state(&self, state: &GlobalState) -> Result<()> {
        if state.0.len() != 3 * self.n_users {
            return Err(Error::Shape {
                expected: 3 * self.n_users,
                actual: state.0.len(),
            });
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.actor.is_finite() && self.critic.is_finite() {
            Ok(())
        } else {
            Err(Error::TrainingDiverged {
                update: 0,
                detail: format!("policy {} holds non-finite parameters", self.version),
            })
        }
    }

    /// Actor input for user `i` and the output component it reads.
    pub fn actor_input<'s>(&self, state: &'s GlobalState, i: usize) -> (&'s [f64], usize) {
        match self.mode {
            PolicyMode::Ctde => (state.observation(i), 0),
            PolicyMode::SingleAgent => (state.as_slice(), i),
        }
    }

    /// Deterministic action of user `i`.
    pub fn action_mean(&self, state: &GlobalState, i: usize) -> Result<f64> {
        self.check_state(state)?;
        if i >= self.n_users {
            return Err(Error::Shape {
                expected: self.n_users,
                actual: i + 1,
            });
        }
        let (x, k) = self.actor_input(state, i);
        Ok(self.actor.forward(x)?[k])
    }

    pub fn critic_value(&self, state: &GlobalState) -> Result<f64> {
        self.check_state(state)?;
        Ok(self.critic.forward(state.as_slice())?[0])
    }

    /// Hash of the actor parameters.
    pub fn fingerprint(&self) -> u64 {
        self.actor.params().iter().fold(0xcbf2_9ce4_8422_2325u64, |h, p| {
            (h ^ p.to_bits()).wrapping_mul(0x0100_0000_01b3)
        })
    }
}

/// Shared-actor forward pass on a single observation, plus optional
/// exploration noise. The result is clipped to `[-1, 1]`.
pub fn actor_forward<R: Rng + ?Sized>(
    params: &PolicyParams,
    observation: &[f64],
    explore: f64,
    rng: &mut R,
) -> Result<f64> {
    if !params.actor.is_finite() {
        return params.check_finite().map(|_| 0.0);
    }
    let mean = params.actor.forward(observation)?[0];
    Ok(perturb(mean, explore, rng))
}

pub(crate) fn perturb<R: Rng + ?Sized>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    sample_gaussian(mean, sigma, rng).clamp(-1.0, 1.0)
}

/// Unclipped exploration sample; the log-likelihood is taken on this value.
fn sample_gaussian<R: Rng + ?Sized>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        mean + sigma * z
    } else {
        mean
    }
}

/// Maps an action in `[-1, 1]` onto the admissible half-plane.
pub fn action_to_direction(kind: &ResetKind, a: f64) -> f64 {
    wrap_angle(kind.base() + a.clamp(-1.0, 1.0) * FRAC_PI_2)
}

/// One call into the learned controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub user: usize,
    pub state: GlobalState,
    pub mean: f64,
    /// Applied action, clipped to `[-1, 1]`.
    pub action: f64,
    /// Gaussian draw before clipping.
    pub sample: f64,
    pub fingerprint: u64,
}

/// Learned reset controller; optionally explores and records decisions.
pub struct PolicyController<'p> {
    params: &'p PolicyParams,
    fingerprint: u64,
    sigma: f64,
    rng: SimRng,
    record: bool,
    decisions: Vec<Decision>,
}

impl<'p> PolicyController<'p> {
    pub fn greedy(params: &'p PolicyParams, rng: SimRng) -> Self {
        Self::exploring(params, 0.0, rng, false)
    }

    pub fn exploring(params: &'p PolicyParams, sigma: f64, rng: SimRng, record: bool) -> Self {
        Self {
            params,
            fingerprint: params.fingerprint(),
            sigma,
            rng,
            record,
            decisions: Vec::new(),
        }
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn into_decisions(self) -> Vec<Decision> {
        self.decisions
    }
}

impl ResetPolicy for PolicyController<'_> {
    fn name(&self) -> &str {
        self.params.tag()
    }

    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64> {
        let state = build_state(ctx.users, ctx.space)?;
        let mean = self.params.action_mean(&state, ctx.index)?;
        if !mean.is_finite() {
            return self.params.check_finite().map(|_| 0.0);
        }
        let sample = sample_gaussian(mean, self.sigma, &mut self.rng);
        let action = sample.clamp(-1.0, 1.0);
        if self.record {
            self.decisions.push(Decision {
                user: ctx.index,
                state,
                mean,
                action,
                sample,
                fingerprint: self.fingerprint,
            });
        }
        Ok(action_to_direction(&ctx.kind, action))
    }
}
