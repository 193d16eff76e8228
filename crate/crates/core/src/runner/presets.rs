//! Shipped experiment presets and built-in environments, embedded at compile time.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::mdp::EnvSpec;

const PRESETS: &[(&str, &str)] = &[
    ("fig1-max", include_str!("../../presets/fig1-max.json")),
    ("fig1-min", include_str!("../../presets/fig1-min.json")),
    ("fig2-policies", include_str!("../../presets/fig2-policies.json")),
    ("fig3-qlearning", include_str!("../../presets/fig3-qlearning.json")),
    ("fig5", include_str!("../../presets/fig5.json")),
    ("maze-compare", include_str!("../../presets/maze-compare.json")),
    ("maze-compare-t", include_str!("../../presets/maze-compare-t.json")),
    ("maze-compare-three-room", include_str!("../../presets/maze-compare-three-room.json")),
];

const ENVS: &[(&str, &str)] = &[
    ("u-maze", include_str!("../../presets/envs/u-maze.json")),
    ("chain-21", include_str!("../../presets/envs/chain-21.json")),
    ("u-maze-surrogate", include_str!("../../presets/envs/u-maze-surrogate.json")),
    ("t-maze-surrogate", include_str!("../../presets/envs/t-maze-surrogate.json")),
    ("three-room-surrogate", include_str!("../../presets/envs/three-room-surrogate.json")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub experiments: Vec<ExperimentConfig>,
}

/// `(name, description)` for every shipped preset.
pub fn list_presets() -> Vec<(String, String)> {
    PRESETS
        .iter()
        .map(|(name, _)| {
            let preset = load_preset(name).expect("shipped preset parses");
            (preset.name, preset.description)
        })
        .collect()
}

pub fn load_preset(name: &str) -> Result<Preset> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    Ok(serde_json::from_str(text)?)
}

pub fn builtin_env_names() -> Vec<&'static str> {
    ENVS.iter().map(|(n, _)| *n).collect()
}

pub fn builtin_env(name: &str) -> Result<EnvSpec> {
    let (_, text) = ENVS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::config("env.builtin", format!("unknown environment {name:?}; known: {}", builtin_env_names().join(", "))))?;
    Ok(serde_json::from_str(text)?)
}
