use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::agent::SqlReplay;
use crate::learner::{Agent, BufferMode, DiscriminatorInput, DmpReplay, Mixing, ModuleParams, Sampling, SoftDmpAgent, SoftDmpState, SqlAgent};
use crate::mdp::{EnvSpec, Environment, Mdp};
use crate::metrics::DEFAULT_SMOOTHING_WINDOW;
use crate::operators::EntropyParam;
use crate::planner::QviOptions;

use super::presets::builtin_env;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Qvi,
    Sql,
    QLearning,
    Dmp,
    SoftdmpOne,
    SoftdmpSep,
}

impl Algorithm {
    fn is_dual(self) -> bool {
        matches!(self, Algorithm::Dmp | Algorithm::SoftdmpOne | Algorithm::SoftdmpSep)
    }
}

/// Where the environment comes from: a shipped name, a JSON file, or an inline spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvSource {
    Builtin { builtin: String },
    Path { path: PathBuf },
    Inline(EnvSpec),
}

impl EnvSource {
    pub fn load(&self, base_dir: &Path) -> Result<EnvSpec> {
        match self {
            EnvSource::Inline(spec) => Ok(spec.clone()),
            EnvSource::Builtin { builtin } => builtin_env(builtin),
            EnvSource::Path { path } => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let text = std::fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

/// A single η or a sweep over several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSetting {
    One(EntropyParam),
    Sweep(Vec<EntropyParam>),
}

impl EtaSetting {
    pub fn values(&self) -> Vec<EntropyParam> {
        match self {
            EtaSetting::One(e) => vec![*e],
            EtaSetting::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySettings {
    pub capacity: usize,
    pub batch: usize,
    #[serde(default)]
    pub sampling: Sampling,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        ReplaySettings {
            capacity: 10_000,
            batch: 32,
            sampling: Sampling::Uniform,
        }
    }
}

/// One experiment. Unset optional fields take defaults during [`ExperimentConfig::resolve`];
/// the resolved copy (all defaults filled in, environment inlined) is what the manifest records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Free text carried into the manifest, e.g. to record hand-picked budgets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub env: EnvSource,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaSetting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_plus: Option<EntropyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_minus: Option<EntropyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplaySettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<Mixing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminator_input: Option<DiscriminatorInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qvi: Option<QviOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_EPISODES: usize = 1000;
pub const DEFAULT_MAX_STEPS: usize = 500;
pub const DEFAULT_ALPHA: f64 = 0.025;
pub const DEFAULT_ALPHA_PLUS: f64 = 0.025;
pub const DEFAULT_ALPHA_MINUS: f64 = 0.001;
pub const DEFAULT_GAMMA_PLUS: f64 = 0.99;
pub const DEFAULT_GAMMA_MINUS: f64 = 0.9;

/// Agent recipe; instantiated once per seed.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentTemplate {
    Sql {
        eta: EntropyParam,
        alpha: f64,
        gamma: f64,
        hard_max: bool,
        replay: Option<ReplaySettings>,
    },
    SoftDmp {
        plus: ModuleParams,
        minus: ModuleParams,
        mixing: Mixing,
        mode: BufferMode,
        replay: ReplaySettings,
        discriminator_input: DiscriminatorInput,
    },
}

impl AgentTemplate {
    pub fn build(&self, mdp: &Mdp) -> Result<Agent> {
        let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
        Ok(match self {
            AgentTemplate::Sql { eta, alpha, gamma, hard_max, replay } => {
                let mut agent = if *hard_max {
                    SqlAgent::q_learning(n_s, n_a, *alpha, *gamma)
                } else {
                    SqlAgent::new(n_s, n_a, *eta, *alpha, *gamma)
                };
                if let Some(r) = replay {
                    agent = agent.with_replay(SqlReplay::new(r.capacity, r.batch, r.sampling));
                }
                Agent::Sql(agent)
            }
            AgentTemplate::SoftDmp { plus, minus, mixing, mode, replay, discriminator_input } => {
                let state = SoftDmpState::new(n_s, n_a, *plus, *minus, *mixing)?;
                let store = DmpReplay::new(*mode, replay.capacity, replay.sampling);
                Agent::SoftDmp(SoftDmpAgent::new(state, store, replay.batch, *discriminator_input))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub enum RunKind {
    Qvi {
        etas: Vec<EntropyParam>,
        options: QviOptions,
    },
    Learn {
        /// `(η label or None, template)`; a label is present when `eta` is a sweep.
        variants: Vec<(Option<EntropyParam>, AgentTemplate)>,
        episodes: usize,
        max_steps: usize,
        window: usize,
    },
}

/// A validated experiment ready to execute.
#[derive(Clone, Debug)]
pub struct ResolvedExperiment {
    /// Config with every default filled in and the environment inlined.
    pub config: ExperimentConfig,
    pub env: Environment,
    pub kind: RunKind,
}

fn check_rate(field: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::config(field, format!("{value} outside (0, 1]")))
    }
}

fn check_discount(field: &str, value: f64) -> Result<f64> {
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::config(field, format!("{value} outside [0, 1)")))
    }
}

fn forbid<T>(field: &str, value: &Option<T>, algorithm: Algorithm) -> Result<()> {
    match value {
        Some(_) => Err(Error::config(field, format!("not used by algorithm {algorithm:?}"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fills defaults, checks every field, and builds the environment.
    /// Relative env paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedExperiment> {
        let algorithm = self.algorithm;
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if self.name.contains(['/', '\\']) {
            return Err(Error::config("name", "must not contain path separators"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let spec = self.env.load(base_dir).map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("env", other.to_string()),
        })?;
        let env = spec.build().map_err(|e| Error::config("env", e.to_string()))?;
        let mdp = env.mdp();

        let mut resolved = self.clone();
        resolved.env = EnvSource::Inline(spec);

        if algorithm == Algorithm::Qvi {
            for (field, present) in [
                ("eta_plus", self.eta_plus.is_some()),
                ("eta_minus", self.eta_minus.is_some()),
                ("alpha", self.alpha.is_some()),
                ("alpha_plus", self.alpha_plus.is_some()),
                ("alpha_minus", self.alpha_minus.is_some()),
                ("gamma", self.gamma.is_some()),
                ("gamma_plus", self.gamma_plus.is_some()),
                ("gamma_minus", self.gamma_minus.is_some()),
                ("episodes", self.episodes.is_some()),
                ("max_steps", self.max_steps.is_some()),
                ("replay", self.replay.is_some()),
                ("weighting", self.weighting.is_some()),
                ("discriminator_input", self.discriminator_input.is_some()),
                ("smoothing_window", self.smoothing_window.is_some()),
            ] {
                if present {
                    return Err(Error::config(field, "not used by algorithm Qvi"));
                }
            }
            let etas = self
                .eta
                .as_ref()
                .ok_or_else(|| Error::config("eta", "required for qvi"))?
                .values();
            if etas.is_empty() {
                return Err(Error::config("eta", "sweep must not be empty"));
            }
            let options = self.qvi.unwrap_or_default();
            if options.tol.is_nan() || options.tol <= 0.0 {
                return Err(Error::config("qvi.tol", "must be positive"));
            }
            if options.max_iter == 0 {
                return Err(Error::config("qvi.max_iter", "must be at least 1"));
            }
            resolved.qvi = Some(options);
            return Ok(ResolvedExperiment {
                config: resolved,
                env,
                kind: RunKind::Qvi { etas, options },
            });
        }

        forbid("qvi", &self.qvi, algorithm)?;
        let episodes = self.episodes.unwrap_or(DEFAULT_EPISODES);
        if episodes == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        let max_steps = self.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        if max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        let window = self.smoothing_window.unwrap_or(DEFAULT_SMOOTHING_WINDOW);
        if window == 0 {
            return Err(Error::config("smoothing_window", "must be at least 1"));
        }
        if let Some(r) = self.replay {
            if r.capacity == 0 {
                return Err(Error::config("replay.capacity", "must be at least 1"));
            }
            if r.batch == 0 {
                return Err(Error::config("replay.batch", "must be at least 1"));
            }
        }
        resolved.episodes = Some(episodes);
        resolved.max_steps = Some(max_steps);
        resolved.smoothing_window = Some(window);

        let variants = if algorithm.is_dual() {
            forbid("eta", &self.eta, algorithm)?;
            forbid("alpha", &self.alpha, algorithm)?;
            forbid("gamma", &self.gamma, algorithm)?;
            let (eta_plus, eta_minus) = if algorithm == Algorithm::Dmp {
                let plus = self.eta_plus.unwrap_or(EntropyParam::PosInf);
                let minus = self.eta_minus.unwrap_or(EntropyParam::NegInf);
                if plus != EntropyParam::PosInf {
                    return Err(Error::config("eta_plus", "dmp uses the hard operators; must be \"inf\""));
                }
                if minus != EntropyParam::NegInf {
                    return Err(Error::config("eta_minus", "dmp uses the hard operators; must be \"-inf\""));
                }
                (plus, minus)
            } else {
                (
                    self.eta_plus.ok_or_else(|| Error::config("eta_plus", "required for softdmp"))?,
                    self.eta_minus.ok_or_else(|| Error::config("eta_minus", "required for softdmp"))?,
                )
            };
            if eta_plus.is_negative() {
                return Err(Error::config("eta_plus", format!("{eta_plus} must be >= 0")));
            }
            if eta_minus.is_positive() {
                return Err(Error::config("eta_minus", format!("{eta_minus} must be <= 0")));
            }
            let plus = ModuleParams {
                eta: eta_plus,
                alpha: check_rate("alpha_plus", self.alpha_plus.unwrap_or(DEFAULT_ALPHA_PLUS))?,
                gamma: check_discount("gamma_plus", self.gamma_plus.unwrap_or(DEFAULT_GAMMA_PLUS))?,
            };
            let minus = ModuleParams {
                eta: eta_minus,
                alpha: check_rate("alpha_minus", self.alpha_minus.unwrap_or(DEFAULT_ALPHA_MINUS))?,
                gamma: check_discount("gamma_minus", self.gamma_minus.unwrap_or(DEFAULT_GAMMA_MINUS))?,
            };
            let mixing = self.weighting.unwrap_or(Mixing::Hardmax);
            if let Mixing::FixedW { w } = mixing {
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::config("weighting.w", format!("{w} outside [0, 1]")));
                }
            }
            let replay = self.replay.unwrap_or_default();
            let mode = if algorithm == Algorithm::SoftdmpSep { BufferMode::Separate } else { BufferMode::One };
            let discriminator_input = self.discriminator_input.unwrap_or_default();
            if mode == BufferMode::One && self.discriminator_input.is_some() {
                return Err(Error::config("discriminator_input", "only used by softdmp_sep"));
            }
            resolved.eta_plus = Some(eta_plus);
            resolved.eta_minus = Some(eta_minus);
            resolved.alpha_plus = Some(plus.alpha);
            resolved.alpha_minus = Some(minus.alpha);
            resolved.gamma_plus = Some(plus.gamma);
            resolved.gamma_minus = Some(minus.gamma);
            resolved.weighting = Some(mixing);
            resolved.replay = Some(replay);
            if mode == BufferMode::Separate {
                resolved.discriminator_input = Some(discriminator_input);
            }
            vec![(
                None,
                AgentTemplate::SoftDmp {
                    plus,
                    minus,
                    mixing,
                    mode,
                    replay,
                    discriminator_input,
                },
            )]
        } else {
            for (field, present) in [
                ("eta_plus", self.eta_plus.is_some()),
                ("eta_minus", self.eta_minus.is_some()),
                ("alpha_plus", self.alpha_plus.is_some()),
                ("alpha_minus", self.alpha_minus.is_some()),
                ("gamma_plus", self.gamma_plus.is_some()),
                ("gamma_minus", self.gamma_minus.is_some()),
                ("weighting", self.weighting.is_some()),
                ("discriminator_input", self.discriminator_input.is_some()),
            ] {
                if present {
                    return Err(Error::config(field, format!("not used by algorithm {algorithm:?}")));
                }
            }
            let alpha = check_rate("alpha", self.alpha.unwrap_or(DEFAULT_ALPHA))?;
            let gamma = check_discount("gamma", self.gamma.unwrap_or(mdp.discount()))?;
            resolved.alpha = Some(alpha);
            resolved.gamma = Some(gamma);
            let hard_max = algorithm == Algorithm::QLearning;
            let setting = if hard_max {
                match &self.eta {
                    None | Some(EtaSetting::One(EntropyParam::PosInf)) => EtaSetting::One(EntropyParam::PosInf),
                    Some(_) => return Err(Error::config("eta", "q_learning always uses \"inf\"")),
                }
            } else {
                self.eta.clone().ok_or_else(|| Error::config("eta", "required for sql"))?
            };
            let etas = setting.values();
            if etas.is_empty() {
                return Err(Error::config("eta", "sweep must not be empty"));
            }
            let sweep = matches!(setting, EtaSetting::Sweep(_));
            resolved.eta = Some(setting);
            etas.into_iter()
                .map(|eta| {
                    (
                        sweep.then_some(eta),
                        AgentTemplate::Sql {
                            eta,
                            alpha,
                            gamma,
                            hard_max,
                            replay: self.replay,
                        },
                    )
                })
                .collect()
        };
        Ok(ResolvedExperiment {
            config: resolved,
            env,
            kind: RunKind::Learn {
                variants,
                episodes,
                max_steps,
                window,
            },
        })
    }
}
