//! Config-driven experiments.
//!
//! Each experiment runs one trial per seed (in parallel), then writes its CSVs and a
//! `manifest.json` holding the resolved config. Outputs contain no timestamps or
//! host details, so identical configs give byte-identical files.

pub mod config;
pub mod presets;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learner::{Agent, Trainer};
use crate::mdp::Environment;
use crate::metrics::{
    aggregate_trials, fmt_float, write_aggregate_csv, write_aggregate_reward_csv, write_run_csv, write_smoothed_csv,
    Aggregate, RunSummary,
};
use crate::operators::EntropyParam;
use crate::planner::{soft_qvi, write_plan_csv, PlanResult};

pub use config::{AgentTemplate, Algorithm, EnvSource, EtaSetting, ExperimentConfig, ReplaySettings, ResolvedExperiment, RunKind};
pub use presets::{builtin_env, builtin_env_names, list_presets, load_preset, Preset};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "SOFTDMP_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// `explicit`, else `$SOFTDMP_OUTPUT_ROOT`, else `./runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ROOT_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT)),
    }
}

#[derive(Clone, Debug)]
pub struct SeedReport {
    pub seed: u64,
    pub summary: RunSummary,
    pub agent: Agent,
}

impl SeedReport {
    /// Experiences routed to the positive / negative buffer (zeros for single-table agents).
    pub fn routed(&self) -> [u64; 2] {
        match &self.agent {
            Agent::SoftDmp(a) => a.routed,
            Agent::Sql(_) => [0, 0],
        }
    }

    /// Mean raw episode reward over the final quarter of episodes.
    pub fn final_quarter_reward(&self) -> f64 {
        let records = &self.summary.records;
        let start = records.len() - records.len().div_ceil(4);
        let tail = &records[start..];
        tail.iter().map(|r| r.total_reward).sum::<f64>() / tail.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct VariantReport {
    /// Present when the experiment sweeps η.
    pub eta: Option<EntropyParam>,
    pub dir: PathBuf,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Plans(Vec<PlanResult>),
    Learning(Vec<VariantReport>),
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub dir: PathBuf,
    pub outcome: Outcome,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Resolves `cfg` (relative env paths against `base_dir`) and runs it into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<ExperimentReport> {
    let resolved = cfg.resolve(base_dir)?;
    run_resolved(&resolved, out_dir)
}

pub fn run_resolved(resolved: &ResolvedExperiment, out_dir: &Path) -> Result<ExperimentReport> {
    let outcome = match &resolved.kind {
        RunKind::Qvi { etas, options } => {
            let plans = etas
                .par_iter()
                .map(|&eta| soft_qvi(resolved.env.mdp(), eta, *options))
                .collect::<Result<Vec<_>>>()?;
            create_dir(out_dir)?;
            write_qvi_outputs(&resolved.env, &plans, out_dir)?;
            Outcome::Plans(plans)
        }
        RunKind::Learn { variants, episodes, max_steps, window } => {
            let seeds = &resolved.config.seeds;
            let mdp = resolved.env.mdp();
            let jobs: Vec<(usize, u64)> = (0..variants.len()).flat_map(|v| seeds.iter().map(move |&s| (v, s))).collect();
            let mut results = jobs
                .par_iter()
                .map(|&(v, seed)| {
                    let agent = variants[v].1.build(mdp)?;
                    let mut trainer = Trainer::new(mdp, agent, seed);
                    let records = trainer.run(*episodes, *max_steps);
                    Ok(SeedReport {
                        seed,
                        summary: RunSummary::new(records, *window),
                        agent: trainer.into_agent(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter();
            create_dir(out_dir)?;
            let mut reports = Vec::with_capacity(variants.len());
            for (eta, _) in variants {
                let seed_reports: Vec<SeedReport> = results.by_ref().take(seeds.len()).collect();
                let dir = match eta {
                    Some(eta) => out_dir.join(format!("eta_{eta}")),
                    None => out_dir.to_path_buf(),
                };
                create_dir(&dir)?;
                let summaries: Vec<RunSummary> = seed_reports.iter().map(|r| r.summary.clone()).collect();
                let aggregate = aggregate_trials(&summaries)?;
                write_learning_outputs(&resolved.env, &seed_reports, &aggregate, &dir)?;
                reports.push(VariantReport {
                    eta: *eta,
                    dir,
                    seeds: seed_reports,
                    aggregate,
                });
            }
            if variants.len() > 1 {
                write_learned_values_by_eta(&resolved.env, &reports, out_dir)?;
            }
            Outcome::Learning(reports)
        }
    };
    let mut manifest = resolved.config.clone();
    manifest.output_dir = None;
    let path = out_dir.join("manifest.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    finish(w, &path)?;
    Ok(ExperimentReport {
        name: resolved.config.name.clone(),
        dir: out_dir.to_path_buf(),
        outcome,
    })
}

fn layout_header(extra: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut header = vec!["state".to_string(), "row".into(), "col".into(), "kind".into()];
    header.extend(extra);
    header
}

fn layout_record(env: &Environment, s: usize) -> Vec<String> {
    let (row, col, kind) = env.describe(s);
    vec![s.to_string(), row.to_string(), col.to_string(), kind.as_str().to_string()]
}

fn write_qvi_outputs(env: &Environment, plans: &[PlanResult], dir: &Path) -> Result<()> {
    for plan in plans {
        let path = dir.join(format!("values_eta_{}.csv", plan.eta));
        let w = create(&path)?;
        write_plan_csv(w, env, plan)?;
    }

    let path = dir.join("values_by_eta.csv");
    let mut out = csv::Writer::from_writer(create(&path)?);
    out.write_record(layout_header(plans.iter().map(|p| format!("v_eta_{}", p.eta))))?;
    for s in 0..env.mdp().n_states() {
        let mut record = layout_record(env, s);
        record.extend(plans.iter().map(|p| fmt_float(p.v[s])));
        out.write_record(&record)?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("qvi_summary.csv");
    let mut out = csv::Writer::from_writer(create(&path)?);
    out.write_record(["eta", "iterations", "residual", "v_min", "v_max"])?;
    for plan in plans {
        let lo = plan.v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = plan.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.write_record([
            plan.eta.to_string(),
            plan.iterations.to_string(),
            fmt_float(plan.residual),
            fmt_float(lo),
            fmt_float(hi),
        ])?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn write_learning_outputs(env: &Environment, seeds: &[SeedReport], aggregate: &Aggregate, dir: &Path) -> Result<()> {
    let n_states = env.mdp().n_states();
    for report in seeds {
        let path = dir.join(format!("run_seed{}.csv", report.seed));
        write_run_csv(create(&path)?, &report.summary.records)?;
        let path = dir.join(format!("smoothed_seed{}.csv", report.seed));
        write_smoothed_csv(create(&path)?, &report.summary)?;

        let path = dir.join(format!("values_seed{}.csv", report.seed));
        let mut out = csv::Writer::from_writer(create(&path)?);
        let dual = matches!(report.agent, Agent::SoftDmp(_));
        let columns: Vec<String> = if dual { vec!["v_plus".into(), "v_minus".into()] } else { vec!["v".into()] };
        out.write_record(layout_header(columns))?;
        for s in 0..n_states {
            let mut record = layout_record(env, s);
            let (v, v_minus) = report.agent.state_values(s);
            record.push(fmt_float(v));
            if let Some(vm) = v_minus {
                record.push(fmt_float(vm));
            }
            out.write_record(&record)?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
    }

    let path = dir.join("aggregate.csv");
    write_aggregate_csv(create(&path)?, aggregate)?;
    let path = dir.join("aggregate_reward.csv");
    write_aggregate_reward_csv(create(&path)?, aggregate)?;

    let path = dir.join("summary.csv");
    let mut out = csv::Writer::from_writer(create(&path)?);
    out.write_record([
        "seed",
        "episodes",
        "avg_step_length",
        "collisions_per_step",
        "collisions_per_episode",
        "goal_rate",
        "final_quarter_reward",
        "routed_plus",
        "routed_minus",
    ])?;
    for report in seeds {
        let s = &report.summary;
        let goals = s.records.iter().filter(|r| r.reached_goal).count();
        let [plus, minus] = report.routed();
        out.write_record([
            report.seed.to_string(),
            s.len().to_string(),
            fmt_float(s.avg_step_length),
            fmt_float(s.collision_rate),
            fmt_float(s.collisions_per_episode),
            fmt_float(goals as f64 / s.len() as f64),
            fmt_float(report.final_quarter_reward()),
            plus.to_string(),
            minus.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Seed-averaged learned state values, one column per η.
fn write_learned_values_by_eta(env: &Environment, variants: &[VariantReport], dir: &Path) -> Result<()> {
    let path = dir.join("values_by_eta.csv");
    let mut out = csv::Writer::from_writer(create(&path)?);
    let labels = variants.iter().map(|v| match v.eta {
        Some(eta) => format!("v_eta_{eta}"),
        None => "v".to_string(),
    });
    out.write_record(layout_header(labels))?;
    for s in 0..env.mdp().n_states() {
        let mut record = layout_record(env, s);
        for variant in variants {
            let total: f64 = variant.seeds.iter().map(|r| r.agent.state_values(s).0).sum();
            record.push(fmt_float(total / variant.seeds.len() as f64));
        }
        out.write_record(&record)?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Runs every experiment of a preset into `root/<preset>/<experiment>`.
/// `seed_override` replaces each experiment's seed list.
pub fn run_preset(preset: &Preset, root: &Path, seed_override: Option<&[u64]>) -> Result<Vec<ExperimentReport>> {
    preset
        .experiments
        .iter()
        .map(|exp| {
            let mut exp = exp.clone();
            if let Some(seeds) = seed_override {
                exp.seeds = seeds.to_vec();
            }
            run_experiment(&exp, Path::new("."), &root.join(&preset.name).join(&exp.name))
        })
        .collect()
}
