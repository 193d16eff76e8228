//! Model-free tabular agents.
//!
//! [`sql_update`] is the soft Q-learning rule for any η; the softDMP pieces
//! (dual tables, flipped-policy fusion, discriminator routing) live in [`dmp`].

pub mod agent;
pub mod dmp;
pub mod replay;
pub mod trainer;

use serde::{Deserialize, Serialize};

use crate::operators::{boltzmann_policy, mellow_max, ActionDistribution, EntropyParam};
use crate::planner::QTable;

pub use agent::{Agent, SoftDmpAgent, SqlAgent};
pub use dmp::{
    discriminator, fuse_policies, hardmax_weight, softdmp_step, BufferMode, DiscriminatorInput, DmpReplay, Mixing,
    ModuleParams, SoftDmpState,
};
pub use replay::{route_experience, BufferId, DualBuffers, ReplayBuffer, Sampling};
pub use trainer::{Checkpoint, Trainer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub terminal: bool,
}

impl Experience {
    pub fn with_reward(self, r: f64) -> Self {
        Experience { r, ..self }
    }
}

/// `q(s,a) ← (1−α) q(s,a) + α (r + γ MM_η(q(s',·)))`; terminal transitions bootstrap nothing.
pub fn sql_update(q: &mut QTable, exp: &Experience, alpha: f64, gamma: f64, eta: EntropyParam) {
    let bootstrap = if exp.terminal { 0.0 } else { gamma * mellow_max(q.row(exp.s_next), eta) };
    let old = q.get(exp.s, exp.a);
    q.set(exp.s, exp.a, (1.0 - alpha) * old + alpha * (exp.r + bootstrap));
}

/// Standard Q-learning with a plain `max` over the next row.
pub fn q_learning_update(q: &mut QTable, exp: &Experience, alpha: f64, gamma: f64) {
    let bootstrap = if exp.terminal {
        0.0
    } else {
        gamma * q.row(exp.s_next).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let old = q.get(exp.s, exp.a);
    q.set(exp.s, exp.a, (1.0 - alpha) * old + alpha * (exp.r + bootstrap));
}

/// Behavior of a single-table SQL agent: Boltzmann on `q(s,·)`, flipped when η < 0.
pub fn sql_behavior(q: &QTable, s: usize, eta: EntropyParam) -> ActionDistribution {
    boltzmann_policy(q.row(s), eta, eta.is_negative())
}
