//! Reward/punishment learning with two Q-tables.
//!
//! `q_plus` learns the non-negative reward part under η₊ ≥ 0 and `q_minus` the
//! non-positive part under η₋ ≤ 0. The agent acts with
//! `π̄ = w π₊ + (1 − w) ¬π₋`, where `¬π₋ ∝ exp(−η₋ Q₋)` is the pain-avoiding
//! flip of the pain-seeking `π₋ ∝ exp(η₋ Q₋)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{route_experience, BufferId, DualBuffers, ReplayBuffer, Sampling};
use super::{sql_update, Experience};
use crate::error::{Error, Result};
use crate::operators::{boltzmann_policy, mellow_max, ActionDistribution, EntropyParam};
use crate::planner::QTable;

/// How the two sub-policies are mixed into the behavior policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mixing {
    FixedW { w: f64 },
    Hardmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferMode {
    /// Both tables replay from one shared buffer.
    One,
    /// Experiences are routed by the discriminator into positive and negative buffers.
    Separate,
}

/// Which form of the punishment sub-policy the discriminator compares against π₊.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorInput {
    /// Pain-seeking `π₋ ∝ exp(η₋ Q₋)`.
    #[default]
    Unflipped,
    /// Pain-avoiding `¬π₋ ∝ exp(−η₋ Q₋)`.
    Flipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleParams {
    pub eta: EntropyParam,
    pub alpha: f64,
    pub gamma: f64,
}

impl ModuleParams {
    fn validate(&self, which: &str) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(&format!("alpha_{which}"), format!("{} outside (0, 1]", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(&format!("gamma_{which}"), format!("{} outside [0, 1)", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftDmpState {
    pub q_plus: QTable,
    pub q_minus: QTable,
    plus: ModuleParams,
    minus: ModuleParams,
    mixing: Mixing,
}

impl SoftDmpState {
    /// Zero-initialised tables. Rejects η₊ < 0, η₋ > 0, and out-of-range rates or weights.
    pub fn new(n_states: usize, n_actions: usize, plus: ModuleParams, minus: ModuleParams, mixing: Mixing) -> Result<Self> {
        if plus.eta.is_negative() {
            return Err(Error::config("eta_plus", format!("{} must be >= 0", plus.eta)));
        }
        if minus.eta.is_positive() {
            return Err(Error::config("eta_minus", format!("{} must be <= 0", minus.eta)));
        }
        plus.validate("plus")?;
        minus.validate("minus")?;
        if let Mixing::FixedW { w } = mixing {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config("weighting", format!("w = {w} outside [0, 1]")));
            }
        }
        Ok(SoftDmpState {
            q_plus: QTable::zeros(n_states, n_actions),
            q_minus: QTable::zeros(n_states, n_actions),
            plus,
            minus,
            mixing,
        })
    }

    pub fn plus_params(&self) -> ModuleParams {
        self.plus
    }

    pub fn minus_params(&self) -> ModuleParams {
        self.minus
    }

    pub fn mixing(&self) -> Mixing {
        self.mixing
    }

    pub fn v_plus(&self, s: usize) -> f64 {
        mellow_max(self.q_plus.row(s), self.plus.eta)
    }

    pub fn v_minus(&self, s: usize) -> f64 {
        mellow_max(self.q_minus.row(s), self.minus.eta)
    }

    /// Target-approaching `π₊ ∝ exp(η₊ Q₊)`.
    pub fn pi_plus(&self, s: usize) -> ActionDistribution {
        boltzmann_policy(self.q_plus.row(s), self.plus.eta, false)
    }

    /// Pain-seeking `π₋ ∝ exp(η₋ Q₋)`.
    pub fn pi_minus(&self, s: usize) -> ActionDistribution {
        boltzmann_policy(self.q_minus.row(s), self.minus.eta, false)
    }

    /// Pain-avoiding `¬π₋ ∝ exp(−η₋ Q₋)`.
    pub fn flipped_pi_minus(&self, s: usize) -> ActionDistribution {
        boltzmann_policy(self.q_minus.row(s), self.minus.eta, true)
    }

    pub fn weight(&self, s: usize) -> f64 {
        match self.mixing {
            Mixing::FixedW { w } => w,
            Mixing::Hardmax => hardmax_weight(self.v_plus(s), self.v_minus(s)),
        }
    }

    pub fn behavior(&self, s: usize) -> ActionDistribution {
        fuse_policies(&self.pi_plus(s), &self.flipped_pi_minus(s), self.weight(s))
    }

    /// Probability that `(s, a)` came from the punishment sub-policy.
    pub fn discriminate(&self, s: usize, a: usize, input: DiscriminatorInput) -> f64 {
        let minus = match input {
            DiscriminatorInput::Unflipped => self.pi_minus(s),
            DiscriminatorInput::Flipped => self.flipped_pi_minus(s),
        };
        discriminator(&self.pi_plus(s), &minus, a)
    }

    /// Updates `q_plus` on `max(r, 0)` with (α₊, γ₊, η₊).
    pub fn update_plus(&mut self, exp: &Experience) {
        let p = self.plus;
        sql_update(&mut self.q_plus, &exp.with_reward(exp.r.max(0.0)), p.alpha, p.gamma, p.eta);
    }

    /// Updates `q_minus` on `min(r, 0)` with (α₋, γ₋, η₋).
    pub fn update_minus(&mut self, exp: &Experience) {
        let p = self.minus;
        sql_update(&mut self.q_minus, &exp.with_reward(exp.r.min(0.0)), p.alpha, p.gamma, p.eta);
    }
}

/// `w π₊ + (1 − w) ¬π₋`.
pub fn fuse_policies(pi_plus: &ActionDistribution, neg_pi_minus: &ActionDistribution, w: f64) -> ActionDistribution {
    assert_eq!(pi_plus.len(), neg_pi_minus.len(), "policies over different action sets");
    debug_assert!((0.0..=1.0).contains(&w), "mixing weight {w} outside [0, 1]");
    if w == 1.0 {
        return pi_plus.clone();
    }
    if w == 0.0 {
        return neg_pi_minus.clone();
    }
    let probs = pi_plus
        .probs()
        .iter()
        .zip(neg_pi_minus.probs())
        .map(|(p, n)| w * p + (1.0 - w) * n)
        .collect();
    ActionDistribution::from_normalized(probs)
}

/// 1 when `V₊(s) ≥ |V₋(s)|`, else 0. Ties go to the reward module.
pub fn hardmax_weight(v_plus: f64, v_minus: f64) -> f64 {
    if v_plus >= v_minus.abs() {
        1.0
    } else {
        0.0
    }
}

/// `π₋(a) / (π₋(a) + π₊(a))`, or 0.5 when both vanish.
pub fn discriminator(pi_plus: &ActionDistribution, pi_minus: &ActionDistribution, a: usize) -> f64 {
    let (p, m) = (pi_plus.prob(a), pi_minus.prob(a));
    if p + m == 0.0 {
        0.5
    } else {
        m / (m + p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReplayStore {
    Shared { buffer: ReplayBuffer },
    Split { buffers: DualBuffers },
}

/// Replay storage for a softDMP agent plus the per-module sequential cursors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmpReplay {
    pub store: ReplayStore,
    pub sampling: Sampling,
    plus_cursor: u64,
    minus_cursor: u64,
}

impl DmpReplay {
    pub fn new(mode: BufferMode, capacity: usize, sampling: Sampling) -> Self {
        let store = match mode {
            BufferMode::One => ReplayStore::Shared {
                buffer: ReplayBuffer::new(capacity),
            },
            BufferMode::Separate => ReplayStore::Split {
                buffers: DualBuffers::new(capacity),
            },
        };
        DmpReplay {
            store,
            sampling,
            plus_cursor: 0,
            minus_cursor: 0,
        }
    }

    pub fn mode(&self) -> BufferMode {
        match self.store {
            ReplayStore::Shared { .. } => BufferMode::One,
            ReplayStore::Split { .. } => BufferMode::Separate,
        }
    }

    /// Buffer feeding `q_plus`.
    pub fn plus_source(&self) -> &ReplayBuffer {
        match &self.store {
            ReplayStore::Shared { buffer } => buffer,
            ReplayStore::Split { buffers } => &buffers.plus,
        }
    }

    /// Buffer feeding `q_minus`.
    pub fn minus_source(&self) -> &ReplayBuffer {
        match &self.store {
            ReplayStore::Shared { buffer } => buffer,
            ReplayStore::Split { buffers } => &buffers.minus,
        }
    }

    /// Stores `exp`. In split mode it is routed with probability `d` to the negative
    /// buffer (one draw); in shared mode `d` is ignored and no randomness is used.
    pub fn ingest<R: Rng + ?Sized>(&mut self, exp: Experience, d: f64, rng: &mut R) -> BufferId {
        match &mut self.store {
            ReplayStore::Shared { buffer } => {
                buffer.push(exp);
                BufferId::Plus
            }
            ReplayStore::Split { buffers } => route_experience(exp, d, buffers, rng),
        }
    }

    fn sample_plus<R: Rng + ?Sized>(&mut self, batch: usize, rng: &mut R) -> Vec<Experience> {
        let sampling = self.sampling;
        let mut cursor = self.plus_cursor;
        let out = self.plus_source().sample(batch, sampling, &mut cursor, rng);
        self.plus_cursor = cursor;
        out
    }

    fn sample_minus<R: Rng + ?Sized>(&mut self, batch: usize, rng: &mut R) -> Vec<Experience> {
        let sampling = self.sampling;
        let mut cursor = self.minus_cursor;
        let out = self.minus_source().sample(batch, sampling, &mut cursor, rng);
        self.minus_cursor = cursor;
        out
    }
}

/// One replay update of both modules: a batch for `q_plus` is drawn first, then one
/// for `q_minus`. A module whose buffer is empty skips the step.
pub fn softdmp_step<R: Rng + ?Sized>(state: &mut SoftDmpState, replay: &mut DmpReplay, batch: usize, rng: &mut R) {
    for exp in replay.sample_plus(batch, rng) {
        state.update_plus(&exp);
    }
    for exp in replay.sample_minus(batch, rng) {
        state.update_minus(&exp);
    }
}
