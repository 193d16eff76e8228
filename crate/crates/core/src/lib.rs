//! Tabular reward/punishment reinforcement learning with entropy-parameterized
//! Bellman operators.
//!
//! * [`operators`]: the `MM_η` family (min, mellow-min, mean, mellow-max, max) and Boltzmann policies.
//! * [`mdp`]: finite MDPs, grid worlds, chains, reward decomposition.
//! * [`planner`]: soft Q value iteration.
//! * [`learner`]: soft Q-learning and the dual-table softDMP agent with replay routing.
//! * [`metrics`]: episode statistics and CSV output.
//! * [`runner`]: config-driven experiments and shipped presets.

pub mod error;
pub mod learner;
pub mod mdp;
pub mod metrics;
pub mod operators;
pub mod planner;
pub mod runner;

pub use error::{Error, Result};
pub use mdp::{build_chain, build_gridworld, decompose_reward, ChainSpec, EnvSpec, Environment, GridSpec, GridWorld, Mdp};
pub use operators::{boltzmann_policy, greedy_action_set, mellow_max, ActionDistribution, EntropyParam, Extremum};
pub use planner::{derive_policies, soft_qvi, PlanResult, Policies, QTable, QviOptions};
