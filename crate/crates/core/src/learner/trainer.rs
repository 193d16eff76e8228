//! Episode loop and checkpointing.
//!
//! Per environment step the rng is consumed in a fixed order: action draw,
//! transition draw, then whatever [`Agent::observe`] needs. Episode starts take
//! one draw for the initial state.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, Experience};
use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::metrics::EpisodeRecord;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Progress {
    step_counter: u64,
    episode: usize,
    /// Current state, `None` between episodes.
    state: Option<usize>,
    steps: usize,
    reward: f64,
    collisions: usize,
}

/// Everything needed to resume a run bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub agent: Agent,
    pub rng: ChaCha8Rng,
    progress: Progress,
}

impl Checkpoint {
    pub fn step_counter(&self) -> u64 {
        self.progress.step_counter
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub struct Trainer<'m> {
    mdp: &'m Mdp,
    agent: Agent,
    rng: ChaCha8Rng,
    progress: Progress,
}

impl<'m> Trainer<'m> {
    pub fn new(mdp: &'m Mdp, agent: Agent, seed: u64) -> Self {
        Trainer {
            mdp,
            agent,
            rng: ChaCha8Rng::seed_from_u64(seed),
            progress: Progress::default(),
        }
    }

    pub fn from_checkpoint(mdp: &'m Mdp, checkpoint: Checkpoint) -> Self {
        Trainer {
            mdp,
            agent: checkpoint.agent,
            rng: checkpoint.rng,
            progress: checkpoint.progress,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            agent: self.agent.clone(),
            rng: self.rng.clone(),
            progress: self.progress.clone(),
        }
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn into_agent(self) -> Agent {
        self.agent
    }

    pub fn step_counter(&self) -> u64 {
        self.progress.step_counter
    }

    pub fn episode(&self) -> usize {
        self.progress.episode
    }

    /// Takes one environment step; returns the episode record when the episode ends
    /// (absorbing state reached or `max_steps` taken).
    pub fn step(&mut self, max_steps: usize) -> Option<EpisodeRecord> {
        let mdp = self.mdp;
        let s = match self.progress.state {
            Some(s) => s,
            None => mdp.sample_initial(&mut self.rng),
        };
        let a = self.agent.act(s, &mut self.rng);
        let (s_next, r) = mdp.step(s, a, &mut self.rng);
        let terminal = mdp.is_absorbing(s_next);
        self.agent.observe(Experience { s, a, r, s_next, terminal }, &mut self.rng);

        let p = &mut self.progress;
        p.step_counter += 1;
        p.steps += 1;
        p.reward += r;
        if r < 0.0 {
            p.collisions += 1;
        }
        if terminal || p.steps >= max_steps {
            let record = EpisodeRecord {
                episode: p.episode,
                steps: p.steps,
                total_reward: p.reward,
                collisions: p.collisions,
                reached_goal: terminal,
            };
            *p = Progress {
                step_counter: p.step_counter,
                episode: p.episode + 1,
                ..Progress::default()
            };
            Some(record)
        } else {
            p.state = Some(s_next);
            None
        }
    }

    pub fn run_episode(&mut self, max_steps: usize) -> EpisodeRecord {
        loop {
            if let Some(record) = self.step(max_steps) {
                return record;
            }
        }
    }

    pub fn run(&mut self, episodes: usize, max_steps: usize) -> Vec<EpisodeRecord> {
        (0..episodes).map(|_| self.run_episode(max_steps)).collect()
    }
}
