use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dmp::{softdmp_step, DiscriminatorInput, DmpReplay, SoftDmpState};
use super::replay::{BufferId, ReplayBuffer, Sampling};
use super::{q_learning_update, sql_behavior, sql_update, Experience};
use crate::operators::{ActionDistribution, EntropyParam};
use crate::planner::QTable;

/// Single-table replay settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqlReplay {
    pub buffer: ReplayBuffer,
    pub batch: usize,
    pub sampling: Sampling,
    cursor: u64,
}

impl SqlReplay {
    pub fn new(capacity: usize, batch: usize, sampling: Sampling) -> Self {
        SqlReplay {
            buffer: ReplayBuffer::new(capacity),
            batch,
            sampling,
            cursor: 0,
        }
    }
}

/// Soft Q-learning agent. With `hard_max` set it is plain Q-learning (η = +∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqlAgent {
    pub q: QTable,
    pub eta: EntropyParam,
    pub alpha: f64,
    pub gamma: f64,
    pub hard_max: bool,
    /// `None` updates online from each new experience.
    pub replay: Option<SqlReplay>,
}

impl SqlAgent {
    pub fn new(n_states: usize, n_actions: usize, eta: EntropyParam, alpha: f64, gamma: f64) -> Self {
        SqlAgent {
            q: QTable::zeros(n_states, n_actions),
            eta,
            alpha,
            gamma,
            hard_max: false,
            replay: None,
        }
    }

    pub fn q_learning(n_states: usize, n_actions: usize, alpha: f64, gamma: f64) -> Self {
        SqlAgent {
            hard_max: true,
            ..Self::new(n_states, n_actions, EntropyParam::PosInf, alpha, gamma)
        }
    }

    pub fn with_replay(mut self, replay: SqlReplay) -> Self {
        self.replay = Some(replay);
        self
    }

    fn apply(&mut self, exp: &Experience) {
        if self.hard_max {
            q_learning_update(&mut self.q, exp, self.alpha, self.gamma);
        } else {
            sql_update(&mut self.q, exp, self.alpha, self.gamma, self.eta);
        }
    }

    fn observe<R: Rng + ?Sized>(&mut self, exp: Experience, rng: &mut R) {
        let Some(replay) = self.replay.as_mut() else {
            self.apply(&exp);
            return;
        };
        replay.buffer.push(exp);
        let mut cursor = replay.cursor;
        let batch = replay.buffer.sample(replay.batch, replay.sampling, &mut cursor, rng);
        replay.cursor = cursor;
        for e in &batch {
            self.apply(e);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftDmpAgent {
    pub state: SoftDmpState,
    pub replay: DmpReplay,
    pub batch: usize,
    pub discriminator_input: DiscriminatorInput,
    /// Experiences stored in the positive / negative buffer (shared mode counts as positive).
    pub routed: [u64; 2],
}

impl SoftDmpAgent {
    pub fn new(state: SoftDmpState, replay: DmpReplay, batch: usize, discriminator_input: DiscriminatorInput) -> Self {
        SoftDmpAgent {
            state,
            replay,
            batch,
            discriminator_input,
            routed: [0, 0],
        }
    }

    fn observe<R: Rng + ?Sized>(&mut self, exp: Experience, rng: &mut R) {
        let d = self.state.discriminate(exp.s, exp.a, self.discriminator_input);
        match self.replay.ingest(exp, d, rng) {
            BufferId::Plus => self.routed[0] += 1,
            BufferId::Minus => self.routed[1] += 1,
        }
        softdmp_step(&mut self.state, &mut self.replay, self.batch, rng);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Agent {
    Sql(SqlAgent),
    SoftDmp(SoftDmpAgent),
}

impl Agent {
    pub fn policy(&self, s: usize) -> ActionDistribution {
        match self {
            Agent::Sql(a) => sql_behavior(&a.q, s, a.eta),
            Agent::SoftDmp(a) => a.state.behavior(s),
        }
    }

    /// Samples an action from the behavior policy. One uniform draw.
    pub fn act<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        self.policy(s).sample(rng)
    }

    /// Learns from one new experience. Randomness, in order: the routing draw
    /// (separate buffers only), then batch draws for the positive and negative modules.
    pub fn observe<R: Rng + ?Sized>(&mut self, exp: Experience, rng: &mut R) {
        match self {
            Agent::Sql(a) => a.observe(exp, rng),
            Agent::SoftDmp(a) => a.observe(exp, rng),
        }
    }

    /// State value under the agent's own operator(s): `(v, v_minus)`; `v_minus` only for softDMP.
    pub fn state_values(&self, s: usize) -> (f64, Option<f64>) {
        match self {
            Agent::Sql(a) => (crate::operators::mellow_max(a.q.row(s), a.eta), None),
            Agent::SoftDmp(a) => (a.state.v_plus(s), Some(a.state.v_minus(s))),
        }
    }
}
