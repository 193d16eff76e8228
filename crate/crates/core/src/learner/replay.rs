use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Experience;

/// How a batch is drawn from a buffer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Uniform with replacement; one `gen_range` draw per element.
    #[default]
    Uniform,
    /// Insertion order, resuming from a caller-held cursor. Consumes no randomness.
    Sequential,
}

/// Bounded FIFO of experiences; the oldest entry is evicted first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Experience>,
    /// Total number of pushes so far; also the sequence number of the next push.
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            entries: VecDeque::new(),
            pushed: 0,
        }
    }

    pub fn unbounded() -> Self {
        Self::new(usize::MAX)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    pub fn evicted(&self) -> u64 {
        self.pushed - self.entries.len() as u64
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.entries.iter()
    }

    /// Appends `exp`, returning the evicted entry when full.
    pub fn push(&mut self, exp: Experience) -> Option<Experience> {
        let evicted = if self.entries.len() == self.capacity {
            self.entries.pop_front()
        } else {
            None
        };
        self.entries.push_back(exp);
        self.pushed += 1;
        evicted
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<Experience> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..batch).map(|_| self.entries[rng.gen_range(0..self.entries.len())]).collect()
    }

    /// Up to `batch` entries starting at sequence number `*cursor` (or the oldest retained one).
    pub fn sample_sequential(&self, batch: usize, cursor: &mut u64) -> Vec<Experience> {
        let first_seq = self.evicted();
        let start = (*cursor).max(first_seq);
        let offset = (start - first_seq) as usize;
        let taken: Vec<Experience> = self.entries.iter().skip(offset).take(batch).copied().collect();
        *cursor = start + taken.len() as u64;
        taken
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, sampling: Sampling, cursor: &mut u64, rng: &mut R) -> Vec<Experience> {
        match sampling {
            Sampling::Uniform => self.sample_uniform(batch, rng),
            Sampling::Sequential => self.sample_sequential(batch, cursor),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferId {
    Plus,
    Minus,
}

/// Positive and negative replay buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualBuffers {
    pub plus: ReplayBuffer,
    pub minus: ReplayBuffer,
}

impl DualBuffers {
    pub fn new(capacity: usize) -> Self {
        DualBuffers {
            plus: ReplayBuffer::new(capacity),
            minus: ReplayBuffer::new(capacity),
        }
    }

    pub fn buffer(&self, id: BufferId) -> &ReplayBuffer {
        match id {
            BufferId::Plus => &self.plus,
            BufferId::Minus => &self.minus,
        }
    }

    pub fn buffer_mut(&mut self, id: BufferId) -> &mut ReplayBuffer {
        match id {
            BufferId::Plus => &mut self.plus,
            BufferId::Minus => &mut self.minus,
        }
    }
}

/// Sends `exp` to the negative buffer with probability `d`, else to the positive one.
/// Consumes exactly one uniform draw.
pub fn route_experience<R: Rng + ?Sized>(exp: Experience, d: f64, buffers: &mut DualBuffers, rng: &mut R) -> BufferId {
    debug_assert!((0.0..=1.0).contains(&d), "routing probability {d} outside [0, 1]");
    let u: f64 = rng.gen();
    let id = if u < d { BufferId::Minus } else { BufferId::Plus };
    buffers.buffer_mut(id).push(exp);
    id
}
