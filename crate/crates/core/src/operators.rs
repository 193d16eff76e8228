//! Entropy-parameterized operators over a row of action values.
//!
//! `MM_η(q) = (1/η) ln( (1/|A|) Σ_a exp(η q_a) )` spans the hard minimum
//! (η = −∞), the arithmetic mean (η = 0) and the hard maximum (η = +∞).
//! Finite η is evaluated around the row extremum that dominates `η q`, so
//! every exponent is non-positive and nothing overflows.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Magnitudes at or above this are treated as infinite.
pub const INFINITE_ETA_THRESHOLD: f64 = 1e7;

/// Absolute tolerance used when collecting tied extremal actions.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Extended-real entropy parameter η.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntropyParam {
    NegInf,
    Finite(f64),
    PosInf,
}

impl EntropyParam {
    pub const ZERO: EntropyParam = EntropyParam::Finite(0.0);

    /// Builds η from a float, mapping `|η| >= 1e7` (and the IEEE infinities)
    /// onto the hard operators. NaN is rejected.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::InvalidEta("NaN is not a valid entropy parameter".into()));
        }
        Ok(if value >= INFINITE_ETA_THRESHOLD {
            EntropyParam::PosInf
        } else if value <= -INFINITE_ETA_THRESHOLD {
            EntropyParam::NegInf
        } else {
            // normalise -0.0
            EntropyParam::Finite(if value == 0.0 { 0.0 } else { value })
        })
    }

    pub fn value(self) -> f64 {
        match self {
            EntropyParam::NegInf => f64::NEG_INFINITY,
            EntropyParam::Finite(v) => v,
            EntropyParam::PosInf => f64::INFINITY,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, EntropyParam::Finite(v) if v == 0.0)
    }

    pub fn is_negative(self) -> bool {
        self.value() < 0.0
    }

    pub fn is_positive(self) -> bool {
        self.value() > 0.0
    }

    pub fn is_infinite(self) -> bool {
        !matches!(self, EntropyParam::Finite(_))
    }

    /// Short label usable in file names (`-inf`, `-1000`, `0.01`, `inf`).
    pub fn label(self) -> String {
        self.to_string()
    }
}

impl std::ops::Neg for EntropyParam {
    type Output = EntropyParam;

    fn neg(self) -> EntropyParam {
        match self {
            EntropyParam::NegInf => EntropyParam::PosInf,
            EntropyParam::PosInf => EntropyParam::NegInf,
            EntropyParam::Finite(v) => EntropyParam::Finite(if v == 0.0 { 0.0 } else { -v }),
        }
    }
}

impl PartialOrd for EntropyParam {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for EntropyParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyParam::NegInf => f.write_str("-inf"),
            EntropyParam::PosInf => f.write_str("inf"),
            EntropyParam::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for EntropyParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(EntropyParam::PosInf),
            "-inf" | "-infinity" => Ok(EntropyParam::NegInf),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidEta(format!("cannot parse `{s}`")))
                .and_then(EntropyParam::new),
        }
    }
}

impl Serialize for EntropyParam {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EntropyParam::Finite(v) => serializer.serialize_f64(*v),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for EntropyParam {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(v) => EntropyParam::new(v),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Which extremum a greedy selection targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    pub fn opposite(self) -> Extremum {
        match self {
            Extremum::Max => Extremum::Min,
            Extremum::Min => Extremum::Max,
        }
    }
}

/// Probability vector over the discrete action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMdp("empty action distribution".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidMdp(format!("negative or non-finite probability in {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMdp(format!("probabilities sum to {total}")));
        }
        Ok(ActionDistribution { probs })
    }

    pub fn uniform(n_actions: usize) -> Self {
        assert!(n_actions > 0, "uniform distribution over zero actions");
        ActionDistribution {
            probs: vec![1.0 / n_actions as f64; n_actions],
        }
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_over(n_actions: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty(), "empty support");
        let mut probs = vec![0.0; n_actions];
        let p = 1.0 / support.len() as f64;
        for &a in support {
            probs[a] = p;
        }
        ActionDistribution { probs }
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        ActionDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Draws an action by inverse CDF. Consumes exactly one uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (a, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = a;
                acc += p;
                if u < acc {
                    return a;
                }
            }
        }
        last_positive
    }
}

fn row_max(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn row_min(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Log-average-exp operator `MM_η` over one row of action values.
///
/// Panics on an empty row.
pub fn mellow_max(q: &[f64], eta: EntropyParam) -> f64 {
    assert!(!q.is_empty(), "mellow_max over an empty row");
    match eta {
        EntropyParam::PosInf => row_max(q),
        EntropyParam::NegInf => row_min(q),
        EntropyParam::Finite(0.0) => q.iter().sum::<f64>() / q.len() as f64,
        EntropyParam::Finite(e) => {
            let pivot = if e > 0.0 { row_max(q) } else { row_min(q) };
            // ln(mean exp(x)) = ln_1p(mean expm1(x)); accurate for small |η| too.
            let mean_expm1 = q.iter().map(|&v| (e * (v - pivot)).exp_m1()).sum::<f64>() / q.len() as f64;
            let value = pivot + mean_expm1.ln_1p() / e;
            // rounding can push the result a hair outside the row range
            value.clamp(row_min(q), row_max(q))
        }
    }
}

/// Actions whose value lies within [`TIE_TOLERANCE`] of the row extremum.
pub fn greedy_action_set(q: &[f64], mode: Extremum) -> Vec<usize> {
    let target = match mode {
        Extremum::Max => row_max(q),
        Extremum::Min => row_min(q),
    };
    q.iter()
        .enumerate()
        .filter(|(_, &v)| (v - target).abs() <= TIE_TOLERANCE)
        .map(|(a, _)| a)
        .collect()
}

/// Boltzmann policy `∝ exp(η q)`, or `∝ exp(−η q)` when `flipped`.
pub fn boltzmann_policy(q: &[f64], eta: EntropyParam, flipped: bool) -> ActionDistribution {
    let n = q.len();
    let eta = if flipped { -eta } else { eta };
    match eta {
        EntropyParam::PosInf => ActionDistribution::uniform_over(n, &greedy_action_set(q, Extremum::Max)),
        EntropyParam::NegInf => ActionDistribution::uniform_over(n, &greedy_action_set(q, Extremum::Min)),
        EntropyParam::Finite(0.0) => ActionDistribution::uniform(n),
        EntropyParam::Finite(e) => {
            let pivot = if e > 0.0 { row_max(q) } else { row_min(q) };
            let weights: Vec<f64> = q.iter().map(|&v| (e * (v - pivot)).exp()).collect();
            let total: f64 = weights.iter().sum();
            ActionDistribution::from_normalized(weights.into_iter().map(|w| w / total).collect())
        }
    }
}
