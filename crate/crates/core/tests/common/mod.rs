#![allow(dead_code)]

use proptest::prelude::*;
use softdmp::mdp::{Outcome, Environment};
use softdmp::runner::builtin_env;
use softdmp::Mdp;

pub fn u_maze() -> Environment {
    builtin_env("u-maze").unwrap().build().unwrap()
}

pub fn chain21() -> Environment {
    builtin_env("chain-21").unwrap().build().unwrap()
}

/// Random MDP with up to 6 states, 4 actions and 3 successors per pair; the last state
/// is absorbing when `with_absorbing` is drawn.
pub fn random_mdp() -> impl Strategy<Value = Mdp> {
    (2usize..6, 1usize..4, 0.0f64..0.95, any::<bool>()).prop_flat_map(|(n_s, n_a, gamma, with_absorbing)| {
        let rows = prop::collection::vec(
            prop::collection::vec((0..n_s, 0.05f64..1.0, -1.0f64..1.0), 1..4),
            n_s * n_a,
        );
        rows.prop_map(move |rows| {
            let absorbing: Vec<bool> = (0..n_s).map(|s| with_absorbing && s == n_s - 1).collect();
            let outcomes = rows
                .into_iter()
                .enumerate()
                .map(|(idx, row)| {
                    let s = idx / n_a;
                    if absorbing[s] {
                        return vec![Outcome { next: s, prob: 1.0, reward: 0.0 }];
                    }
                    let total: f64 = row.iter().map(|(_, w, _)| w).sum();
                    row.into_iter().map(|(next, w, reward)| Outcome { next, prob: w / total, reward }).collect()
                })
                .collect();
            let initial = vec![1.0 / n_s as f64; n_s];
            let names = (0..n_a).map(|a| format!("a{a}")).collect();
            Mdp::new(n_a, outcomes, initial, absorbing, gamma, names).unwrap()
        })
    })
}
