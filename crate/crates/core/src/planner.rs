//! Model-based soft Q value iteration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Environment, Mdp};
use crate::metrics::fmt_float;
use crate::operators::{greedy_action_set, mellow_max, EntropyParam, Extremum};

/// Dense `|S| × |A|` action-value table, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_actions = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_actions), "ragged Q rows");
        QTable {
            n_states: rows.len(),
            n_actions,
            values: rows.concat(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.n_actions + a] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// State values `MM_η(q(s, ·))`.
    pub fn state_values(&self, eta: EntropyParam) -> Vec<f64> {
        (0..self.n_states).map(|s| mellow_max(self.row(s), eta)).collect()
    }

    /// Sup-norm distance between two equally shaped tables.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QviOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QviOptions {
    fn default() -> Self {
        QviOptions {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub eta: EntropyParam,
    pub q: QTable,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the last Bellman update.
    pub residual: f64,
}

/// One synchronous soft Bellman backup of `q`.
///
/// `q'(s, a) = Σ_{s'} P(s'|s,a) [R(s,a,s') + γ MM_η(q(s', ·))]`; absorbing states stay at 0.
pub fn soft_bellman_backup(mdp: &Mdp, q: &QTable, eta: EntropyParam) -> QTable {
    let gamma = mdp.discount();
    let v: Vec<f64> = (0..mdp.n_states())
        .map(|s| if mdp.is_absorbing(s) { 0.0 } else { mellow_max(q.row(s), eta) })
        .collect();
    let mut next = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in 0..mdp.n_states() {
        if mdp.is_absorbing(s) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            let value = mdp
                .outcomes(s, a)
                .iter()
                .map(|o| o.prob * (o.reward + gamma * v[o.next]))
                .sum();
            next.set(s, a, value);
        }
    }
    next
}

/// Iterates [`soft_bellman_backup`] from zero until the sup-norm change drops below `tol`.
pub fn soft_qvi(mdp: &Mdp, eta: EntropyParam, options: QviOptions) -> Result<PlanResult> {
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::config("tol", "must be positive"));
    }
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iter {
        let next = soft_bellman_backup(mdp, &q, eta);
        residual = next.sup_distance(&q);
        q = next;
        iterations += 1;
        if residual < options.tol {
            break;
        }
    }
    if residual >= options.tol {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            tol: options.tol,
        });
    }
    let v = (0..mdp.n_states())
        .map(|s| if mdp.is_absorbing(s) { 0.0 } else { mellow_max(q.row(s), eta) })
        .collect();
    Ok(PlanResult {
        eta,
        q,
        v,
        iterations,
        residual,
    })
}

/// Greedy action sets per state under the operator's own extremum and its opposite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policies {
    pub optimal: Vec<Vec<usize>>,
    pub flipped: Vec<Vec<usize>>,
}

/// `optimal` follows argmax for η > 0 and argmin for η < 0; `flipped` the other one.
/// At η = 0 both are the full action set.
pub fn derive_policies(q: &QTable, eta: EntropyParam) -> Policies {
    let all: Vec<usize> = (0..q.n_actions()).collect();
    let own = if eta.is_positive() {
        Some(Extremum::Max)
    } else if eta.is_negative() {
        Some(Extremum::Min)
    } else {
        None
    };
    let sets = |mode: Option<Extremum>| -> Vec<Vec<usize>> {
        (0..q.n_states())
            .map(|s| match mode {
                Some(m) => greedy_action_set(q.row(s), m),
                None => all.clone(),
            })
            .collect()
    };
    Policies {
        optimal: sets(own),
        flipped: sets(own.map(Extremum::opposite)),
    }
}

pub(crate) fn action_set_label(set: &[usize], names: &[String]) -> String {
    set.iter().map(|&a| names[a].as_str()).collect::<Vec<_>>().join("|")
}

/// Writes one CSV row per state: layout, `v`, per-action `q`, and both greedy sets.
pub fn write_plan_csv<W: Write>(writer: W, env: &Environment, plan: &PlanResult) -> Result<()> {
    let mdp = env.mdp();
    let names = mdp.action_names();
    let policies = derive_policies(&plan.q, plan.eta);
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["state".to_string(), "row".into(), "col".into(), "kind".into(), "v".into()];
    header.extend(names.iter().map(|n| format!("q_{n}")));
    header.extend(["optimal".to_string(), "flipped".to_string()]);
    out.write_record(&header)?;
    for s in 0..mdp.n_states() {
        let (row, col, kind) = env.describe(s);
        let mut record = vec![
            s.to_string(),
            row.to_string(),
            col.to_string(),
            kind.as_str().to_string(),
            fmt_float(plan.v[s]),
        ];
        record.extend(plan.q.row(s).iter().map(|&x| fmt_float(x)));
        record.push(action_set_label(&policies.optimal[s], names));
        record.push(action_set_label(&policies.flipped[s], names));
        out.write_record(&record)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
