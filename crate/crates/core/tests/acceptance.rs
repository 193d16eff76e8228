//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Runtime limits are checked on wall-clock time of the criterion body.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softdmp::learner::{discriminator, sql_update, Experience};
use softdmp::mdp::{GridAction, GridWorld};
use softdmp::operators::{boltzmann_policy, mellow_max, ActionDistribution, EntropyParam};
use softdmp::planner::{derive_policies, soft_qvi, QTable, QviOptions};
use softdmp::runner::{builtin_env, load_preset, run_resolved, Outcome, VariantReport};
use softdmp::Environment;

type Check = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Option<Duration>, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn env(name: &str) -> Environment {
    builtin_env(name).unwrap().build().unwrap()
}

fn grid(env: &Environment) -> &GridWorld {
    env.grid().expect("grid environment")
}

fn fifteen_point_eta_grid() -> Vec<EntropyParam> {
    serde_json::from_str(r#"["-inf", -1000, -100, -10, -1, -0.1, -0.01, 0, 0.01, 0.1, 1, 10, 100, 1000, "inf"]"#).unwrap()
}

fn criterion_1() -> Check {
    let env = env("u-maze");
    let g = grid(&env);
    let plan = soft_qvi(env.mdp(), EntropyParam::NegInf, QviOptions::default()).map_err(|e| e.to_string())?;
    let targets = [-1.0, -0.9, -0.81];
    let mut hit = [0usize; 3];
    for s in 0..env.mdp().n_states() {
        if g.is_wall(s) {
            continue;
        }
        let v = plan.v[s];
        if g.is_goal(s) {
            ensure(v == 0.0, || format!("goal value {v}"))?;
            continue;
        }
        let i = targets.iter().position(|t| (v - t).abs() <= 1e-6).ok_or_else(|| format!("state {s} has value {v}"))?;
        hit[i] += 1;
    }
    ensure(hit.iter().all(|&n| n > 0), || format!("value counts {hit:?}"))?;
    Ok(format!("non-goal values {{-1: {}, -0.9: {}, -0.81: {}}} states", hit[0], hit[1], hit[2]))
}

fn criterion_2() -> Check {
    let env = env("u-maze");
    let plan = soft_qvi(env.mdp(), EntropyParam::PosInf, QviOptions::default()).map_err(|e| e.to_string())?;
    let worst = plan.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(worst <= 1e-10, || format!("max |V| = {worst:e}"))?;
    Ok(format!("max |V| = {worst:e} over {} states", plan.v.len()))
}

/// Independent closed form of the U-maze Q tables for γ = 0.9, bump cost −0.1.
///
/// Under min, V(s) = −γ^d(s) with d the move distance to the nearest state that can
/// bump; under max, V ≡ 0. Q follows by one deterministic backup.
fn closed_form_q(g: &GridWorld, min: bool) -> QTable {
    let mdp = g.mdp();
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let gamma = mdp.discount();
    let mut v = vec![0.0; n_s];
    if min {
        let mut dist = vec![usize::MAX; n_s];
        let mut queue = VecDeque::new();
        for (s, d) in dist.iter_mut().enumerate() {
            if !mdp.is_absorbing(s) && !g.bump_actions(s).is_empty() {
                *d = 0;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for action in GridAction::ALL {
                if let Some(cell) = g.spec().target(g.cell_of(s), action) {
                    let t = g.state_of(cell);
                    if !mdp.is_absorbing(t) && dist[t] == usize::MAX {
                        dist[t] = dist[s] + 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        for (s, (v, d)) in v.iter_mut().zip(&dist).enumerate() {
            if !mdp.is_absorbing(s) {
                *v = -gamma.powi(*d as i32);
            }
        }
    }
    let mut q = QTable::zeros(n_s, n_a);
    for s in 0..n_s {
        if mdp.is_absorbing(s) {
            continue;
        }
        let bumps = g.bump_actions(s);
        for a in 0..n_a {
            let value = if bumps.contains(&a) {
                -0.1 + gamma * v[s]
            } else {
                let o = &mdp.outcomes(s, a)[0];
                o.reward + gamma * v[o.next]
            };
            q.set(s, a, value);
        }
    }
    q
}

fn criterion_3() -> Check {
    let env = env("u-maze");
    let g = grid(&env);
    let mdp = env.mdp();
    let mut checked = 0;
    for (eta, min) in [(EntropyParam::NegInf, true), (EntropyParam::PosInf, false)] {
        let plan = soft_qvi(mdp, eta, QviOptions::default()).map_err(|e| e.to_string())?;
        let oracle = closed_form_q(g, min);
        let dist = plan.q.sup_distance(&oracle);
        ensure(dist < 1e-9, || format!("{eta}: planner Q differs from closed form by {dist:e}"))?;
        let got = derive_policies(&plan.q, eta);
        let want = derive_policies(&oracle, eta);
        for s in 0..mdp.n_states() {
            ensure(got.optimal[s] == want.optimal[s] && got.flipped[s] == want.flipped[s], || {
                format!("{eta}: state {s} sets {:?}/{:?} vs oracle {:?}/{:?}", got.optimal[s], got.flipped[s], want.optimal[s], want.flipped[s])
            })?;
            if mdp.is_absorbing(s) {
                continue;
            }
            let bumps = g.bump_actions(s);
            // the pain-avoiding set: flipped for min, optimal for max
            let (avoiding, seeking) = if min { (&got.flipped[s], &got.optimal[s]) } else { (&got.optimal[s], &got.flipped[s]) };
            ensure(avoiding.iter().all(|a| !bumps.contains(a)), || format!("{eta}: state {s} avoiding set {avoiding:?} bumps"))?;
            if !bumps.is_empty() {
                ensure(seeking.iter().any(|a| bumps.contains(a)), || format!("{eta}: state {s} seeking set {seeking:?} has no bump"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} wall-adjacent state checks, sets equal closed-form oracle for min and max"))
}

fn criterion_4() -> Check {
    let env = env("chain-21");
    let grid = fifteen_point_eta_grid();
    let curves: Vec<Vec<f64>> = grid
        .iter()
        .map(|&e| soft_qvi(env.mdp(), e, QviOptions::default()).map(|p| p.v).map_err(|err| err.to_string()))
        .collect::<Result<_, _>>()?;
    for (i, pair) in curves.windows(2).enumerate() {
        for (s, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            ensure(a <= &(b + 1e-9), || format!("V_{}({s}) = {a} > V_{}({s}) = {b}", grid[i], grid[i + 1]))?;
        }
    }
    let spread: Vec<f64> = curves
        .iter()
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max) - c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    for (i, &r) in spread.iter().enumerate().skip(1) {
        ensure(spread[0] > r + 1e-9, || format!("spread(-inf) = {} not above spread({}) = {r}", spread[0], grid[i]))?;
    }
    let neg_min = grid.iter().zip(&spread).filter(|(e, _)| e.is_negative()).map(|(_, &r)| r).fold(f64::INFINITY, f64::min);
    let nonneg_max = grid.iter().zip(&spread).filter(|(e, _)| !e.is_negative()).map(|(_, &r)| r).fold(f64::NEG_INFINITY, f64::max);
    ensure(neg_min > nonneg_max + 1e-9, || format!("smallest negative-eta spread {neg_min} vs largest non-negative {nonneg_max}"))?;
    Ok(format!(
        "15 monotone curves; spread(-inf) = {:.6}, min negative = {neg_min:.6}, max non-negative = {nonneg_max:.6}",
        spread[0]
    ))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rows = 10_000;
    let draw_eta = |rng: &mut ChaCha8Rng| -> EntropyParam {
        match rng.gen_range(0..6) {
            0 => EntropyParam::NegInf,
            1 => EntropyParam::PosInf,
            2 => EntropyParam::ZERO,
            3 => EntropyParam::Finite(rng.gen_range(-1000.0..1000.0)),
            _ => EntropyParam::Finite(rng.gen_range(-5.0..5.0)),
        }
    };
    for i in 0..rows {
        let n = rng.gen_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let (e1, e2) = (draw_eta(&mut rng), draw_eta(&mut rng));
        let c = rng.gen_range(-50.0..50.0);
        let (lo, hi) = (a.iter().copied().fold(f64::INFINITY, f64::min), a.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let ma = mellow_max(&a, e1);
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure((ma - mellow_max(&b, e1)).abs() <= gap + 1e-12, || format!("row {i}: expansion at eta {e1}"))?;
        let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
        ensure((mellow_max(&shifted, e1) - ma - c).abs() <= 1e-9, || format!("row {i}: shift at eta {e1}"))?;
        ensure(lo <= ma && ma <= hi, || format!("row {i}: {ma} outside [{lo}, {hi}]"))?;
        let (el, eh) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        ensure(mellow_max(&a, el) <= mellow_max(&a, eh) + 1e-12, || format!("row {i}: not monotone between {el} and {eh}"))?;
        ensure((mellow_max(&a, EntropyParam::Finite(1e6)) - hi).abs() <= 1e-5, || format!("row {i}: +1e6 limit"))?;
        ensure((mellow_max(&a, EntropyParam::Finite(-1e6)) - lo).abs() <= 1e-5, || format!("row {i}: -1e6 limit"))?;
    }
    Ok(format!("{rows} random rows: non-expansion, shift, bounds, eta-monotonicity, +-1e6 limits"))
}

/// Empirical J(D) for one (s, a) cell: −n₋ ln D − n₊ ln(1 − D).
fn cell_loss(n_minus: f64, n_plus: f64, d: f64) -> f64 {
    let term = |n: f64, p: f64| if n == 0.0 { 0.0 } else { -n * p.ln() };
    term(n_minus, d) + term(n_plus, 1.0 - d)
}

fn criterion_6() -> Check {
    // 2 states, 3 actions; the sub-policies come from fixed Q rows.
    let q_plus = [[0.4, 1.0, 0.1], [0.0, 0.2, 0.9]];
    let q_minus = [[-0.5, -0.1, -1.0], [-0.3, -0.8, -0.05]];
    let pi_plus: Vec<ActionDistribution> = q_plus.iter().map(|r| boltzmann_policy(r, EntropyParam::Finite(2.0), false)).collect();
    let pi_minus: Vec<ActionDistribution> = q_minus.iter().map(|r| boltzmann_policy(r, EntropyParam::Finite(-2.0), false)).collect();

    // an equal-sized sample from each sub-policy, states uniform
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 1_000_000;
    let mut counts = [[[0.0f64; 3]; 2]; 2]; // [minus=0 / plus=1][s][a]
    for (source, policies) in [&pi_minus, &pi_plus].into_iter().enumerate() {
        for _ in 0..n {
            let s = rng.gen_range(0..2);
            counts[source][s][policies[s].sample(&mut rng)] += 1.0;
        }
    }

    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let mut worst = 0.0f64;
    for s in 0..2 {
        #[allow(clippy::needless_range_loop)]
        for a in 0..3 {
            let d = discriminator(&pi_plus[s], &pi_minus[s], a);
            let (n_minus, n_plus) = (counts[0][s][a], counts[1][s][a]);
            let best = grid
                .iter()
                .copied()
                .min_by(|x, y| cell_loss(n_minus, n_plus, *x).total_cmp(&cell_loss(n_minus, n_plus, *y)))
                .unwrap();
            worst = worst.max((best - d).abs());
            ensure((best - d).abs() <= 0.01 + 1e-12, || format!("cell ({s}, {a}): closed form {d:.4}, grid argmin {best}"))?;
            // with exact expected counts the closed form is never beaten by the grid
            let (e_minus, e_plus) = (pi_minus[s].prob(a), pi_plus[s].prob(a));
            let closed = cell_loss(e_minus, e_plus, d);
            let grid_min = grid.iter().map(|&x| cell_loss(e_minus, e_plus, x)).fold(f64::INFINITY, f64::min);
            ensure(closed <= grid_min + 1e-12, || format!("cell ({s}, {a}): expected loss {closed} above grid minimum {grid_min}"))?;
        }
    }
    Ok(format!("6 cells, max |grid argmin - closed form| = {worst:.4}"))
}

fn criterion_7() -> Check {
    let env = env("u-maze");
    let mdp = env.mdp();
    let mut report = Vec::new();
    for eta in [EntropyParam::NegInf, EntropyParam::ZERO, EntropyParam::PosInf] {
        let plan = soft_qvi(mdp, eta, QviOptions::default()).map_err(|e| e.to_string())?;
        let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
        let mut sweeps = 0;
        loop {
            let mut next = q.clone();
            for s in (0..mdp.n_states()).filter(|&s| !mdp.is_absorbing(s)) {
                for a in 0..mdp.n_actions() {
                    let o = &mdp.outcomes(s, a)[0];
                    let exp = Experience { s, a, r: o.reward, s_next: o.next, terminal: mdp.is_absorbing(o.next) };
                    // each update reads the previous sweep's table
                    let mut scratch = q.clone();
                    sql_update(&mut scratch, &exp, 1.0, mdp.discount(), eta);
                    next.set(s, a, scratch.get(s, a));
                }
            }
            sweeps += 1;
            let change = next.sup_distance(&q);
            q = next;
            if change < 1e-12 || sweeps >= 1000 {
                break;
            }
        }
        let dist = q.sup_distance(&plan.q);
        ensure(dist <= 1e-6, || format!("eta {eta}: |Q_sql - Q_qvi| = {dist:e} after {sweeps} sweeps"))?;
        report.push(format!("{eta}: {dist:.1e} ({sweeps} sweeps)"));
    }
    Ok(report.join(", "))
}

fn learning(outcome: &Outcome) -> &[VariantReport] {
    match outcome {
        Outcome::Learning(v) => v,
        Outcome::Plans(_) => panic!("expected a learning experiment"),
    }
}

fn criterion_8(out: &Path) -> Check {
    let preset = load_preset("fig3-qlearning").map_err(|e| e.to_string())?;
    let mut tail_reward = BTreeMap::new();
    let mut total_collisions = BTreeMap::new();
    for exp in &preset.experiments {
        let resolved = exp.resolve(Path::new(".")).map_err(|e| e.to_string())?;
        let report = run_resolved(&resolved, &out.join(&exp.name)).map_err(|e| e.to_string())?;
        let variant = &learning(&report.outcome)[0];
        ensure(variant.seeds.len() == 5, || format!("{} ran {} seeds", exp.name, variant.seeds.len()))?;
        let per_seed: Vec<f64> = variant
            .seeds
            .iter()
            .map(|r| {
                let smoothed = &r.summary.smoothed_reward;
                let tail = &smoothed[smoothed.len() - smoothed.len() / 4..];
                tail.iter().sum::<f64>() / tail.len() as f64
            })
            .collect();
        tail_reward.insert(exp.name.clone(), per_seed.iter().sum::<f64>() / per_seed.len() as f64);
        let collisions: usize = variant.seeds.iter().flat_map(|r| &r.summary.records).map(|r| r.collisions).sum();
        total_collisions.insert(exp.name.clone(), collisions);
    }
    let (min, max) = (tail_reward["min-flipped"], tail_reward["max-optimal"]);
    ensure(min >= max, || format!("final-quarter smoothed reward: min/flipped {min} < max/optimal {max}"))?;
    Ok(format!(
        "final-quarter smoothed reward min/flipped {min:.6} >= max/optimal {max:.6} (seeds 1-5); whole-run collisions {} vs {}",
        total_collisions["min-flipped"], total_collisions["max-optimal"]
    ))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Header must match and every row must hold `episodes` consecutive indices with finite fields.
fn check_aggregate(path: &Path, header: &str, episodes: usize) -> std::result::Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let got: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    ensure(got.join(",") == header, || format!("{}: header {got:?}", path.display()))?;
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        ensure(rec.get(0) == Some(i.to_string().as_str()), || format!("{}: row {i} episode {:?}", path.display(), rec.get(0)))?;
        for (j, field) in rec.iter().enumerate().skip(1) {
            let x: f64 = field.parse().map_err(|_| format!("{}: row {i} field {field:?}", path.display()))?;
            ensure(x.is_finite(), || format!("{}: row {i} non-finite", path.display()))?;
            if got[j].starts_with("se_") {
                ensure(x >= 0.0, || format!("{}: negative standard error", path.display()))?;
            }
        }
        rows += 1;
    }
    ensure(rows == episodes, || format!("{}: {rows} rows, expected {episodes}", path.display()))
}

fn criterion_9(out: &Path) -> Check {
    let preset = load_preset("maze-compare").map_err(|e| e.to_string())?;
    let methods: BTreeSet<&str> = preset.experiments.iter().map(|e| e.name.as_str()).collect();
    ensure(methods == BTreeSet::from(["dqn", "sql", "dmp", "softdmp-one", "softdmp-sep"]), || format!("methods {methods:?}"))?;
    let mut notes = Vec::new();
    for exp in &preset.experiments {
        let resolved = exp.resolve(Path::new(".")).map_err(|e| e.to_string())?;
        let dir = out.join("first").join(&exp.name);
        let report = run_resolved(&resolved, &dir).map_err(|e| format!("{}: {e}", exp.name))?;
        let variant = &learning(&report.outcome)[0];
        let episodes = resolved.config.episodes.unwrap();
        check_aggregate(&dir.join("aggregate.csv"), "episode,mean_steps,se_steps,mean_collisions,se_collisions", episodes)?;
        check_aggregate(&dir.join("aggregate_reward.csv"), "episode,mean_reward,se_reward", episodes)?;

        if exp.name == "softdmp-sep" {
            // (a) collisions imply some experience reached the negative buffer
            let mut routed = [0u64; 2];
            for seed in &variant.seeds {
                let collisions: usize = seed.summary.records.iter().map(|r| r.collisions).sum();
                let [plus, minus] = seed.routed();
                if collisions > 0 {
                    ensure(minus > 0, || format!("seed {} collided {collisions} times but routed nothing to D-", seed.seed))?;
                }
                routed[0] += plus;
                routed[1] += minus;
            }
            notes.push(format!("sep routed {:.4} of experience to D-", routed[1] as f64 / (routed[0] + routed[1]) as f64));
        }
        if exp.name.starts_with("softdmp") {
            // (b) a second run from the same config and seeds is byte-identical
            let again = out.join("second").join(&exp.name);
            run_resolved(&resolved, &again).map_err(|e| e.to_string())?;
            let (a, b) = (read_tree(&dir), read_tree(&again));
            ensure(a.len() >= 5 * 3 + 4, || format!("{}: only {} files written", exp.name, a.len()))?;
            ensure(a == b, || format!("{}: repeated run differs", exp.name))?;
            notes.push(format!("{} byte-identical over {} files", exp.name, a.len()));
        }
    }
    notes.push("5 methods emitted well-formed aggregates".into());
    Ok(notes.join("; "))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let limits = |secs: u64| Some(Duration::from_secs(secs));
    let criteria: Vec<Criterion> = vec![
        ("1 min-operator U-maze values", limits(1), Box::new(criterion_1)),
        ("2 max-operator U-maze values", limits(1), Box::new(criterion_2)),
        ("3 policy signs", None, Box::new(criterion_3)),
        ("4 chain eta sweep structure", limits(5), Box::new(criterion_4)),
        ("5 operator properties", limits(5), Box::new(criterion_5)),
        ("6 discriminator optimality", limits(5), Box::new(criterion_6)),
        ("7 sql sweep equals qvi", limits(10), Box::new(criterion_7)),
        ("8 flipped min beats max in reward", limits(60), Box::new(|| criterion_8(&tmp.path().join("fig3")))),
        ("9 maze surrogate properties", None, Box::new(|| criterion_9(&tmp.path().join("maze")))),
    ];
    let mut failed = 0;
    for (name, limit, body) in &criteria {
        let start = Instant::now();
        let mut result = body();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if elapsed > *limit {
                result = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("PASS criterion {name} [{elapsed:.2?}]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} [{elapsed:.2?}]: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
