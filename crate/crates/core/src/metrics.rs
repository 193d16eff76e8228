//! Episode statistics, smoothing, trial aggregation and CSV output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING_WINDOW: usize = 50;

/// Formats a float with 12 significant digits, `%g` style.
pub fn fmt_float(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".to_string() } else { t.to_string() }
    } else {
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    /// Transitions with a negative reward.
    pub collisions: usize,
    pub reached_goal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub records: Vec<EpisodeRecord>,
    pub smoothed_steps: Vec<f64>,
    pub smoothed_reward: Vec<f64>,
    pub avg_step_length: f64,
    /// Total collisions over total steps.
    pub collision_rate: f64,
    pub collisions_per_episode: f64,
}

impl RunSummary {
    pub fn new(records: Vec<EpisodeRecord>, window: usize) -> Self {
        let steps: Vec<f64> = records.iter().map(|r| r.steps as f64).collect();
        let rewards: Vec<f64> = records.iter().map(|r| r.total_reward).collect();
        let total_steps: usize = records.iter().map(|r| r.steps).sum();
        let total_collisions: usize = records.iter().map(|r| r.collisions).sum();
        let n = records.len().max(1) as f64;
        RunSummary {
            smoothed_steps: smooth(&steps, window),
            smoothed_reward: smooth(&rewards, window),
            avg_step_length: total_steps as f64 / n,
            collision_rate: if total_steps == 0 { 0.0 } else { total_collisions as f64 / total_steps as f64 },
            collisions_per_episode: total_collisions as f64 / n,
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Centered moving average; windows shrink at the boundaries.
///
/// Point `i` averages `[i - (w-1)/2, i + w/2]` clipped to the series.
pub fn smooth(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "smoothing window must be at least 1");
    let left = (window - 1) / 2;
    let right = window / 2;
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(series.len() - 1);
            series[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Per-episode mean and standard error across trials.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub mean_steps: Vec<f64>,
    pub se_steps: Vec<f64>,
    pub mean_collisions: Vec<f64>,
    pub se_collisions: Vec<f64>,
    pub mean_reward: Vec<f64>,
    pub se_reward: Vec<f64>,
}

impl Aggregate {
    pub fn len(&self) -> usize {
        self.mean_steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_steps.is_empty()
    }
}

// Values are sorted before summing so the result does not depend on trial order.
fn mean_and_se(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    sq.sort_by(f64::total_cmp);
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate_trials(summaries: &[RunSummary]) -> Result<Aggregate> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::config("seeds", "no trials to aggregate"))?;
    let n = first.len();
    if let Some(bad) = summaries.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let mut agg = Aggregate {
        mean_steps: Vec::with_capacity(n),
        se_steps: Vec::with_capacity(n),
        mean_collisions: Vec::with_capacity(n),
        se_collisions: Vec::with_capacity(n),
        mean_reward: Vec::with_capacity(n),
        se_reward: Vec::with_capacity(n),
    };
    for e in 0..n {
        let column = |f: &dyn Fn(&EpisodeRecord) -> f64| -> Vec<f64> { summaries.iter().map(|s| f(&s.records[e])).collect() };
        let (m, se) = mean_and_se(&mut column(&|r| r.steps as f64));
        agg.mean_steps.push(m);
        agg.se_steps.push(se);
        let (m, se) = mean_and_se(&mut column(&|r| r.collisions as f64));
        agg.mean_collisions.push(m);
        agg.se_collisions.push(se);
        let (m, se) = mean_and_se(&mut column(&|r| r.total_reward));
        agg.mean_reward.push(m);
        agg.se_reward.push(se);
    }
    Ok(agg)
}

fn finish<W: Write>(mut out: csv::Writer<W>) -> Result<()> {
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// `episode,steps,reward,collisions,goal`
pub fn write_run_csv<W: Write>(writer: W, records: &[EpisodeRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["episode", "steps", "reward", "collisions", "goal"])?;
    for r in records {
        out.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            fmt_float(r.total_reward),
            r.collisions.to_string(),
            u8::from(r.reached_goal).to_string(),
        ])?;
    }
    finish(out)
}

/// `episode,smoothed_steps,smoothed_reward`
pub fn write_smoothed_csv<W: Write>(writer: W, summary: &RunSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["episode", "smoothed_steps", "smoothed_reward"])?;
    for (i, r) in summary.records.iter().enumerate() {
        out.write_record([r.episode.to_string(), fmt_float(summary.smoothed_steps[i]), fmt_float(summary.smoothed_reward[i])])?;
    }
    finish(out)
}

/// `episode,mean_steps,se_steps,mean_collisions,se_collisions`
pub fn write_aggregate_csv<W: Write>(writer: W, agg: &Aggregate) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["episode", "mean_steps", "se_steps", "mean_collisions", "se_collisions"])?;
    for e in 0..agg.len() {
        out.write_record([
            e.to_string(),
            fmt_float(agg.mean_steps[e]),
            fmt_float(agg.se_steps[e]),
            fmt_float(agg.mean_collisions[e]),
            fmt_float(agg.se_collisions[e]),
        ])?;
    }
    finish(out)
}

/// `episode,mean_reward,se_reward`
pub fn write_aggregate_reward_csv<W: Write>(writer: W, agg: &Aggregate) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["episode", "mean_reward", "se_reward"])?;
    for e in 0..agg.len() {
        out.write_record([e.to_string(), fmt_float(agg.mean_reward[e]), fmt_float(agg.se_reward[e])])?;
    }
    finish(out)
}
