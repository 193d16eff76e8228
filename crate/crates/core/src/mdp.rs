//! Finite MDPs and the benchmark environments built on them.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// One possible outcome of taking an action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// Finite MDP `(S, A, P, P0, R, γ)` stored as sparse outcome lists per `(s, a)`.
///
/// Rewards are indexed by `(s, a, s')` through the outcome they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    initial: Vec<f64>,
    absorbing: Vec<bool>,
    discount: f64,
    action_names: Vec<String>,
}

impl Mdp {
    /// Validates and assembles an MDP. `outcomes` is indexed `s * n_actions + a`.
    pub fn new(
        n_actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        initial: Vec<f64>,
        absorbing: Vec<bool>,
        discount: f64,
        action_names: Vec<String>,
    ) -> Result<Self> {
        let n_states = initial.len();
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("state and action sets must be non-empty".into()));
        }
        if outcomes.len() != n_states * n_actions {
            return Err(Error::InvalidMdp(format!(
                "expected {} outcome rows, got {}",
                n_states * n_actions,
                outcomes.len()
            )));
        }
        if absorbing.len() != n_states {
            return Err(Error::InvalidMdp("absorbing flags must cover every state".into()));
        }
        if action_names.len() != n_actions {
            return Err(Error::InvalidMdp("one name per action required".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!("discount {discount} outside [0, 1)")));
        }
        check_distribution(&initial, "initial distribution")?;
        for (idx, row) in outcomes.iter().enumerate() {
            let (s, a) = (idx / n_actions, idx % n_actions);
            if row.is_empty() {
                return Err(Error::InvalidMdp(format!("no outcomes for ({s}, {a})")));
            }
            for o in row {
                if o.next >= n_states {
                    return Err(Error::InvalidMdp(format!("({s}, {a}) leads to unknown state {}", o.next)));
                }
                if !o.reward.is_finite() {
                    return Err(Error::InvalidMdp(format!("non-finite reward at ({s}, {a})")));
                }
            }
            let probs: Vec<f64> = row.iter().map(|o| o.prob).collect();
            check_distribution(&probs, &format!("transition row ({s}, {a})"))?;
            if absorbing[s] && row.iter().any(|o| o.prob > 0.0 && (o.next != s || o.reward != 0.0)) {
                return Err(Error::InvalidMdp(format!(
                    "absorbing state {s} must self-loop with zero reward"
                )));
            }
        }
        Ok(Mdp {
            n_states,
            n_actions,
            outcomes,
            initial,
            absorbing,
            discount,
            action_names,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.n_actions + a]
    }

    /// Probability of `s -> next` under `a`.
    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a).iter().filter(|o| o.next == next).map(|o| o.prob).sum()
    }

    /// Copy of this MDP with every reward mapped through `f`.
    pub fn map_rewards(&self, f: impl Fn(f64) -> f64) -> Mdp {
        let outcomes = self
            .outcomes
            .iter()
            .map(|row| row.iter().map(|o| Outcome { reward: f(o.reward), ..*o }).collect())
            .collect();
        Mdp { outcomes, ..self.clone() }
    }

    /// Same dynamics, different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Mdp> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!("discount {discount} outside [0, 1)")));
        }
        Ok(Mdp { discount, ..self.clone() })
    }

    /// Samples a start state. Consumes one uniform draw.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.initial, rng.gen())
    }

    /// Samples `(s', r)` for `(s, a)`. Consumes one uniform draw.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let row = self.outcomes(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for o in row {
            acc += o.prob;
            if u < acc {
                return (o.next, o.reward);
            }
        }
        let last = row.iter().rev().find(|o| o.prob > 0.0).unwrap_or(&row[row.len() - 1]);
        (last.next, last.reward)
    }
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidMdp(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidMdp(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// Splits rewards into non-negative (`max(R, 0)`) and non-positive (`min(R, 0)`) parts.
pub fn decompose_reward(mdp: &Mdp) -> (Mdp, Mdp) {
    (mdp.map_rewards(|r| r.max(0.0)), mdp.map_rewards(|r| r.min(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Grid moves, in action-index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
    Stop,
}

impl GridAction {
    pub const ALL: [GridAction; 5] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
        GridAction::Stop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            GridAction::Up => "up",
            GridAction::Down => "down",
            GridAction::Left => "left",
            GridAction::Right => "right",
            GridAction::Stop => "stop",
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Up => (-1, 0),
            GridAction::Down => (1, 0),
            GridAction::Left => (0, -1),
            GridAction::Right => (0, 1),
            GridAction::Stop => (0, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub walls: BTreeSet<Cell>,
    pub goal: Option<Cell>,
    pub start: Cell,
    pub collision_reward: f64,
    pub goal_reward: f64,
    pub discount: f64,
}

impl GridSpec {
    /// Parses an ASCII map: `#` wall, `.` free, `S` start (exactly one), `G` goal (at most one).
    pub fn from_ascii(rows: &[String], collision_reward: f64, goal_reward: f64, discount: f64) -> Result<Self> {
        let rows: Vec<&str> = rows.iter().map(|r| r.trim()).filter(|r| !r.is_empty()).collect();
        let height = rows.len();
        if height == 0 {
            return Err(Error::InvalidSpec("grid map has no rows".into()));
        }
        let width = rows[0].chars().count();
        let mut walls = BTreeSet::new();
        let mut start = None;
        let mut goal = None;
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::InvalidSpec(format!("grid row {r} has a different width")));
            }
            for (c, ch) in line.chars().enumerate() {
                let cell = Cell::new(r, c);
                match ch {
                    '.' => {}
                    '#' => {
                        walls.insert(cell);
                    }
                    'S' if start.is_none() => start = Some(cell),
                    'G' if goal.is_none() => goal = Some(cell),
                    'S' | 'G' => return Err(Error::InvalidSpec(format!("duplicate `{ch}` in grid map"))),
                    other => return Err(Error::InvalidSpec(format!("unknown map character `{other}`"))),
                }
            }
        }
        let start = start.ok_or_else(|| Error::InvalidSpec("grid map has no start `S`".into()))?;
        Ok(GridSpec {
            width,
            height,
            walls,
            goal,
            start,
            collision_reward,
            goal_reward,
            discount,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("grid must have positive width and height".into()));
        }
        let inside = |c: &Cell| c.row < self.height && c.col < self.width;
        if let Some(bad) = self.walls.iter().find(|c| !inside(c)) {
            return Err(Error::InvalidSpec(format!("wall {bad} lies outside the grid")));
        }
        if !inside(&self.start) {
            return Err(Error::InvalidSpec(format!("start {} lies outside the grid", self.start)));
        }
        if self.walls.contains(&self.start) {
            return Err(Error::InvalidSpec(format!("start {} is a wall", self.start)));
        }
        if let Some(goal) = self.goal {
            if !inside(&goal) {
                return Err(Error::InvalidSpec(format!("goal {goal} lies outside the grid")));
            }
            if self.walls.contains(&goal) {
                return Err(Error::InvalidSpec(format!("goal {goal} is a wall")));
            }
        }
        Ok(())
    }

    fn state(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    fn cell(&self, s: usize) -> Cell {
        Cell::new(s / self.width, s % self.width)
    }

    /// Movement target of `action` from `cell`, or `None` when it would hit a wall or the boundary.
    pub fn target(&self, cell: Cell, action: GridAction) -> Option<Cell> {
        let (dr, dc) = action.delta();
        let row = cell.row.checked_add_signed(dr)?;
        let col = cell.col.checked_add_signed(dc)?;
        let next = Cell::new(row, col);
        (row < self.height && col < self.width && !self.walls.contains(&next)).then_some(next)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Free,
    Wall,
    Start,
    Goal,
}

impl CellKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Free => "free",
            CellKind::Wall => "wall",
            CellKind::Start => "start",
            CellKind::Goal => "goal",
        }
    }
}

/// Grid MDP together with its layout. Every cell is a state (`row * width + col`);
/// wall cells are unreachable absorbing states.
#[derive(Clone, Debug)]
pub struct GridWorld {
    spec: GridSpec,
    mdp: Mdp,
}

impl GridWorld {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn cell_of(&self, s: usize) -> Cell {
        self.spec.cell(s)
    }

    pub fn state_of(&self, cell: Cell) -> usize {
        self.spec.state(cell)
    }

    pub fn kind(&self, s: usize) -> CellKind {
        let cell = self.cell_of(s);
        if self.spec.walls.contains(&cell) {
            CellKind::Wall
        } else if self.spec.goal == Some(cell) {
            CellKind::Goal
        } else if self.spec.start == cell {
            CellKind::Start
        } else {
            CellKind::Free
        }
    }

    pub fn is_wall(&self, s: usize) -> bool {
        self.kind(s) == CellKind::Wall
    }

    pub fn is_goal(&self, s: usize) -> bool {
        self.kind(s) == CellKind::Goal
    }

    /// Actions that bump into a wall or the boundary from `s`. Empty for walls and the goal.
    pub fn bump_actions(&self, s: usize) -> Vec<usize> {
        if self.mdp.is_absorbing(s) {
            return Vec::new();
        }
        let cell = self.cell_of(s);
        GridAction::ALL
            .iter()
            .filter(|&&a| a != GridAction::Stop && self.spec.target(cell, a).is_none())
            .map(|a| a.index())
            .collect()
    }
}

/// Deterministic grid world with actions up/down/left/right/stop.
///
/// A blocked move leaves the agent in place and pays `collision_reward`; `stop`
/// pays 0; entering the goal pays `goal_reward` and the goal is absorbing.
pub fn build_gridworld(spec: GridSpec) -> Result<GridWorld> {
    spec.validate()?;
    let n_states = spec.width * spec.height;
    let n_actions = GridAction::ALL.len();
    let mut outcomes = Vec::with_capacity(n_states * n_actions);
    let mut absorbing = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let cell = spec.cell(s);
        let terminal = spec.walls.contains(&cell) || spec.goal == Some(cell);
        absorbing.push(terminal);
        for action in GridAction::ALL {
            let outcome = if terminal || action == GridAction::Stop {
                Outcome { next: s, prob: 1.0, reward: 0.0 }
            } else {
                match spec.target(cell, action) {
                    Some(next) => {
                        let reward = if spec.goal == Some(next) { spec.goal_reward } else { 0.0 };
                        Outcome { next: spec.state(next), prob: 1.0, reward }
                    }
                    None => Outcome { next: s, prob: 1.0, reward: spec.collision_reward },
                }
            };
            outcomes.push(vec![outcome]);
        }
    }
    let mut initial = vec![0.0; n_states];
    initial[spec.state(spec.start)] = 1.0;
    let names = GridAction::ALL.iter().map(|a| a.name().to_string()).collect();
    let mdp = Mdp::new(n_actions, outcomes, initial, absorbing, spec.discount, names)?;
    Ok(GridWorld { spec, mdp })
}

/// When the chain charges its edge reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePenalty {
    /// Only an attempted move off either end of the chain is penalised.
    #[default]
    Bump,
    /// Every transition whose destination is an end state is penalised, `stop` included.
    Entry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub length: usize,
    pub edge_reward: f64,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default)]
    pub edge_penalty: EdgePenalty,
}

fn default_discount() -> f64 {
    0.9
}

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;
pub const CHAIN_STOP: usize = 2;

/// 1×N chain with actions left/right/stop, no absorbing states and a uniform start.
pub fn build_chain(spec: &ChainSpec) -> Result<Mdp> {
    if spec.length < 3 {
        return Err(Error::InvalidSpec(format!("chain length {} < 3", spec.length)));
    }
    let n = spec.length;
    let last = n - 1;
    let is_edge = |s: usize| s == 0 || s == last;
    let mut outcomes = Vec::with_capacity(n * 3);
    for s in 0..n {
        for a in [CHAIN_LEFT, CHAIN_RIGHT, CHAIN_STOP] {
            let (next, bumped) = match a {
                CHAIN_LEFT if s == 0 => (0, true),
                CHAIN_LEFT => (s - 1, false),
                CHAIN_RIGHT if s == last => (last, true),
                CHAIN_RIGHT => (s + 1, false),
                _ => (s, false),
            };
            let penalised = match spec.edge_penalty {
                EdgePenalty::Bump => bumped,
                EdgePenalty::Entry => is_edge(next),
            };
            let reward = if penalised { spec.edge_reward } else { 0.0 };
            outcomes.push(vec![Outcome { next, prob: 1.0, reward }]);
        }
    }
    let initial = vec![1.0 / n as f64; n];
    let names = ["left", "right", "stop"].iter().map(|s| s.to_string()).collect();
    Mdp::new(3, outcomes, initial, vec![false; n], spec.discount, names)
}

/// ASCII map given either as one newline-separated string or as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AsciiMap {
    Rows(Vec<String>),
    Text(String),
}

impl AsciiMap {
    pub fn rows(&self) -> Vec<String> {
        match self {
            AsciiMap::Rows(rows) => rows.clone(),
            AsciiMap::Text(text) => text.lines().map(str::to_string).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub map: AsciiMap,
    pub collision_reward: f64,
    #[serde(default)]
    pub goal_reward: f64,
    #[serde(default = "default_discount")]
    pub discount: f64,
}

/// JSON environment document, tagged by `"type"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EnvSpec {
    Grid(GridConfig),
    Chain(ChainSpec),
}

/// A built environment: the MDP plus whatever layout information it carries.
#[derive(Clone, Debug)]
pub enum Environment {
    Grid(GridWorld),
    Chain(Mdp),
}

impl EnvSpec {
    pub fn build(&self) -> Result<Environment> {
        match self {
            EnvSpec::Grid(cfg) => {
                let spec = GridSpec::from_ascii(&cfg.map.rows(), cfg.collision_reward, cfg.goal_reward, cfg.discount)?;
                Ok(Environment::Grid(build_gridworld(spec)?))
            }
            EnvSpec::Chain(spec) => Ok(Environment::Chain(build_chain(spec)?)),
        }
    }
}

impl Environment {
    pub fn mdp(&self) -> &Mdp {
        match self {
            Environment::Grid(g) => g.mdp(),
            Environment::Chain(m) => m,
        }
    }

    pub fn grid(&self) -> Option<&GridWorld> {
        match self {
            Environment::Grid(g) => Some(g),
            Environment::Chain(_) => None,
        }
    }

    /// `(row, col, kind)` for a state; chains are a single row of free cells.
    pub fn describe(&self, s: usize) -> (usize, usize, CellKind) {
        match self {
            Environment::Grid(g) => {
                let cell = g.cell_of(s);
                (cell.row, cell.col, g.kind(s))
            }
            Environment::Chain(_) => (0, s, CellKind::Free),
        }
    }
}
