//! Exploration strategies that populate the inverse model: random motor
//! babbling (RMB), random goal babbling (RGB), discretized goal babbling with
//! an interest grid (DGB), and goal babbling with direct optimization (DO)
//! of the nearest-neighbor prediction against a local LWLR surrogate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse_model::{LwlrParams, SampleDatabase};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::observation::{distance, Bounds, ObservationPoint, ObservationSpace, ProjectionSpec};
use crate::optimizer::{cma_minimize, default_sigma, CmaState};
use crate::skin::{generate_skin, SkinPatch, SkinSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "rmb")]
    Rmb,
    #[serde(rename = "rgb")]
    Rgb,
    #[serde(rename = "rgb-do")]
    RgbDo,
    #[serde(rename = "dgb-15")]
    Dgb15,
    #[serde(rename = "dgb-32")]
    Dgb32,
    #[serde(rename = "dgb-15-do")]
    Dgb15Do,
    #[serde(rename = "dgb-32-do")]
    Dgb32Do,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Rmb,
        Strategy::Rgb,
        Strategy::RgbDo,
        Strategy::Dgb15,
        Strategy::Dgb32,
        Strategy::Dgb15Do,
        Strategy::Dgb32Do,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Rmb => "rmb",
            Strategy::Rgb => "rgb",
            Strategy::RgbDo => "rgb-do",
            Strategy::Dgb15 => "dgb-15",
            Strategy::Dgb32 => "dgb-32",
            Strategy::Dgb15Do => "dgb-15-do",
            Strategy::Dgb32Do => "dgb-32-do",
        }
    }

    /// Cells per axis of the interest grid, for DGB variants.
    pub fn grid_size(&self) -> Option<usize> {
        match self {
            Strategy::Dgb15 | Strategy::Dgb15Do => Some(15),
            Strategy::Dgb32 | Strategy::Dgb32Do => Some(32),
            _ => None,
        }
    }

    pub fn uses_direct_optimization(&self) -> bool {
        matches!(self, Strategy::RgbDo | Strategy::Dgb15Do | Strategy::Dgb32Do)
    }

    pub fn is_goal_babbling(&self) -> bool {
        *self != Strategy::Rmb
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::validation("strategy", format!("unknown strategy `{s}`")))
    }
}

/// How each outcome was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Bootstrap,
    MotorBabbling,
    GoalBabbling,
    DirectOptimization,
    /// DO step that fell back to plain goal babbling (surrogate unavailable).
    DoFallback,
}

impl StepKind {
    pub fn tag(&self) -> &'static str {
        match self {
            StepKind::Bootstrap => "bootstrap",
            StepKind::MotorBabbling => "rmb",
            StepKind::GoalBabbling => "gb",
            StepKind::DirectOptimization => "do",
            StepKind::DoFallback => "do-fallback",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            StepKind::Bootstrap,
            StepKind::MotorBabbling,
            StepKind::GoalBabbling,
            StepKind::DirectOptimization,
            StepKind::DoFallback,
        ]
        .into_iter()
        .find(|k| k.tag() == tag)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationOutcome {
    /// 1-based iteration index.
    pub iteration: usize,
    pub kind: StepKind,
    pub goal: Option<ObservationPoint>,
    pub q: JointConfig,
    /// Observed taxel and its projection; `None` when nothing was touched.
    pub touched: Option<(usize, ObservationPoint)>,
    pub cell: Option<usize>,
    /// Interest of `cell` after this outcome was accounted for.
    pub interest: Option<f64>,
}

impl ExplorationOutcome {
    pub fn result(&self) -> Option<ObservationPoint> {
        self.touched.map(|(_, x)| x)
    }

    pub fn is_touch(&self) -> bool {
        self.touched.is_some()
    }
}

/// The arm, one skin patch and its observation space.
#[derive(Clone, Debug)]
pub struct Environment {
    pub chain: KinematicChain,
    pub patch: SkinPatch,
    pub space: ObservationSpace,
    /// Padded bounding rectangle of the projected taxels.
    pub goal_bounds: Bounds,
}

/// Default padding of the goal rectangle, as a fraction per side.
pub const GOAL_PADDING: f64 = 0.05;

impl Environment {
    pub fn new(
        chain: KinematicChain,
        skin: &SkinSpec,
        projection: Option<ProjectionSpec>,
    ) -> Result<Self> {
        chain.validate()?;
        if !chain.has_frame(&skin.frame) {
            return Err(Error::UnknownFrame(skin.frame.clone()));
        }
        let patch = generate_skin(skin)?;
        let spec = projection.unwrap_or_else(|| ProjectionSpec::for_surface(&patch.surface));
        let space = ObservationSpace::new(spec, &patch)?;
        let goal_bounds = space.taxel_bounds().padded(GOAL_PADDING);
        Ok(Environment {
            chain,
            patch,
            space,
            goal_bounds,
        })
    }

    pub fn dof(&self) -> usize {
        self.chain.dof()
    }

    /// Places the pen tip at `q` and reports the touched taxel, if any.
    pub fn execute(&self, q: &JointConfig) -> Result<Option<(usize, ObservationPoint)>> {
        let tip = self.chain.forward_kinematics(q)?;
        let pose = self.chain.frame_pose(&self.patch.frame, q)?;
        let contact = self
            .patch
            .detect_contact(&tip, self.chain.tip_radius(), &pose);
        Ok(self
            .space
            .touched_taxel(&self.patch, &contact)
            .map(|id| (id, self.space.taxel(id))))
    }

    /// Penalty competence for a missed goal: the goal rectangle's diagonal.
    pub fn miss_distance(&self) -> f64 {
        self.goal_bounds.diameter()
    }

    pub fn uniform_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> ObservationPoint {
        uniform_in(&self.goal_bounds, rng)
    }
}

fn uniform_in<R: Rng + ?Sized>(b: &Bounds, rng: &mut R) -> ObservationPoint {
    let a: f64 = rng.random();
    let c: f64 = rng.random();
    ObservationPoint::new(b.u[0] + a * b.width(), b.v[0] + c * b.height())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterestMode {
    /// `|C_t - C_{t-1}|` per cell.
    #[default]
    Successive,
    /// Difference of the means of the two halves of the last `window`
    /// competences.
    Window,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub last_competence: Option<f64>,
    pub interest: f64,
    pub visits: usize,
    history: Vec<f64>,
}

/// `m × n` discretization of the goal rectangle, `m` columns along u.
#[derive(Clone, Debug, PartialEq)]
pub struct InterestGrid {
    pub m: usize,
    pub n: usize,
    pub bounds: Bounds,
    pub cells: Vec<Cell>,
    pub miss_penalty: f64,
    pub mode: InterestMode,
    pub window: usize,
}

impl InterestGrid {
    pub fn new(m: usize, n: usize, bounds: Bounds, initial_interest: f64, miss_penalty: f64) -> Self {
        assert!(m > 0 && n > 0, "grid needs at least one cell");
        InterestGrid {
            m,
            n,
            bounds,
            cells: vec![
                Cell {
                    last_competence: None,
                    interest: initial_interest.max(0.0),
                    visits: 0,
                    history: Vec::new(),
                };
                m * n
            ],
            miss_penalty,
            mode: InterestMode::Successive,
            window: 4,
        }
    }

    pub fn with_mode(mut self, mode: InterestMode, window: usize) -> Self {
        self.mode = mode;
        self.window = window.max(2);
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn interests(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.interest).collect()
    }

    pub fn set_interests(&mut self, values: &[f64]) {
        for (c, &v) in self.cells.iter_mut().zip(values) {
            c.interest = v;
        }
    }

    fn cell_width(&self) -> (f64, f64) {
        (
            self.bounds.width() / self.m as f64,
            self.bounds.height() / self.n as f64,
        )
    }

    /// Cell containing `p`; points outside the rectangle map to the nearest
    /// border cell.
    pub fn cell_of(&self, p: &ObservationPoint) -> usize {
        let index = |x: f64, lo: f64, span: f64, count: usize| {
            if span <= 0.0 {
                return 0;
            }
            let f = ((x - lo) / span * count as f64).floor();
            f.clamp(0.0, (count - 1) as f64) as usize
        };
        let col = index(p.u, self.bounds.u[0], self.bounds.width(), self.m);
        let row = index(p.v, self.bounds.v[0], self.bounds.height(), self.n);
        row * self.m + col
    }

    pub fn cell_bounds(&self, cell: usize) -> Bounds {
        let (w, h) = self.cell_width();
        let (row, col) = (cell / self.m, cell % self.m);
        Bounds {
            u: [
                self.bounds.u[0] + col as f64 * w,
                self.bounds.u[0] + (col + 1) as f64 * w,
            ],
            v: [
                self.bounds.v[0] + row as f64 * h,
                self.bounds.v[0] + (row + 1) as f64 * h,
            ],
        }
    }

    /// Uniform cell with probability `epsilon`, otherwise proportional to
    /// interest (uniform when all interest is zero).
    pub fn select_cell<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> usize {
        let c = self.cells.len();
        let explore: f64 = rng.random();
        if explore < epsilon {
            return rng.random_range(0..c);
        }
        let total: f64 = self.cells.iter().map(|cell| cell.interest).sum();
        if !(total > 0.0) || !total.is_finite() {
            return rng.random_range(0..c);
        }
        let r = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.interest > 0.0 {
                acc += cell.interest;
                last_positive = i;
                if r < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    pub fn sample_goal<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> ObservationPoint {
        let b = self.cell_bounds(cell);
        let p = uniform_in(&b, rng);
        // rounding can push a draw a hair past the far edge
        ObservationPoint::new(p.u.clamp(b.u[0], b.u[1]), p.v.clamp(b.v[0], b.v[1]))
    }

    /// Competence of an attempt at `goal`: distance to the reached point, or
    /// the miss penalty when nothing was touched.
    pub fn competence(&self, goal: &ObservationPoint, reached: Option<&ObservationPoint>) -> f64 {
        reached.map_or(self.miss_penalty, |x| distance(goal, x))
    }

    /// Records a new competence for `cell` and refreshes its interest.
    pub fn update_interest(
        &mut self,
        cell: usize,
        goal: &ObservationPoint,
        reached: Option<&ObservationPoint>,
    ) -> f64 {
        let c_new = self.competence(goal, reached);
        self.record_competence(cell, c_new)
    }

    pub fn record_competence(&mut self, cell: usize, c_new: f64) -> f64 {
        let mode = self.mode;
        let window = self.window;
        let entry = &mut self.cells[cell];
        entry.visits += 1;
        match mode {
            InterestMode::Successive => {
                if let Some(prev) = entry.last_competence {
                    entry.interest = (c_new - prev).abs();
                }
            }
            InterestMode::Window => {
                entry.history.push(c_new);
                if entry.history.len() > window {
                    entry.history.remove(0);
                }
                if entry.history.len() == window {
                    let half = window / 2;
                    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
                    let (old, new) = entry.history.split_at(window - half);
                    entry.interest = (mean(new) - mean(&old[old.len() - half..])).abs();
                }
            }
        }
        entry.last_competence = Some(c_new);
        entry.interest
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoMode {
    /// `k` CMA-ES generations on the surrogate, one real execution.
    #[default]
    Surrogate,
    /// One surrogate generation per real execution, `k` executions per goal.
    Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerParams {
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub initial_interest: f64,
    /// Competence assigned to missed goals; defaults to the goal rectangle's
    /// diagonal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miss_penalty: Option<f64>,
    pub interest_mode: InterestMode,
    pub window: usize,
    /// CMA-ES generations per DO goal.
    pub do_generations: usize,
    pub do_mode: DoMode,
    pub lwlr: LwlrParams,
    pub bootstrap_touches: usize,
    pub bootstrap_sub_range: f64,
    pub bootstrap_cap: usize,
}

impl Default for ExplorerParams {
    fn default() -> Self {
        ExplorerParams {
            noise_sigma: 0.05,
            epsilon: 0.1,
            initial_interest: 1.0,
            miss_penalty: None,
            interest_mode: InterestMode::Successive,
            window: 4,
            do_generations: 10,
            do_mode: DoMode::Surrogate,
            lwlr: LwlrParams::default(),
            bootstrap_touches: 10,
            bootstrap_sub_range: 0.5,
            bootstrap_cap: 500,
        }
    }
}

fn perturb<R: Rng + ?Sized>(chain: &KinematicChain, q: &JointConfig, sigma: f64, rng: &mut R) -> JointConfig {
    let noisy: Vec<f64> = q
        .iter()
        .map(|a| a + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    chain.clamp(&JointConfig::new(noisy))
}

fn execute_and_record(
    env: &Environment,
    db: &mut SampleDatabase,
    q: JointConfig,
    iteration: usize,
    kind: StepKind,
    goal: Option<ObservationPoint>,
) -> Result<ExplorationOutcome> {
    let touched = env.execute(&q)?;
    if let Some((_, x)) = touched {
        db.insert(q.clone(), x)?;
    }
    Ok(ExplorationOutcome {
        iteration,
        kind,
        goal,
        q,
        touched,
        cell: None,
        interest: None,
    })
}

/// Random motor babbling over the full joint ranges.
pub fn step_rmb<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    rng: &mut R,
    iteration: usize,
) -> Result<ExplorationOutcome> {
    let q = env.chain.sample_uniform_config(1.0, rng);
    execute_and_record(env, db, q, iteration, StepKind::MotorBabbling, None)
}

fn reach_for<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    rng: &mut R,
    goal: ObservationPoint,
    noise_sigma: f64,
    iteration: usize,
    kind: StepKind,
) -> Result<ExplorationOutcome> {
    let q = perturb(&env.chain, db.nn_inverse(&goal)?, noise_sigma, rng);
    execute_and_record(env, db, q, iteration, kind, Some(goal))
}

/// Random goal babbling: uniform goal, nearest-neighbor prediction plus
/// Gaussian exploration noise.
pub fn step_rgb<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    rng: &mut R,
    noise_sigma: f64,
    iteration: usize,
) -> Result<ExplorationOutcome> {
    if db.is_empty() {
        return Err(Error::EmptyModel);
    }
    let goal = env.uniform_goal(rng);
    reach_for(env, db, rng, goal, noise_sigma, iteration, StepKind::GoalBabbling)
}

/// One constrained motor babbling iteration of the bootstrap phase.
pub fn bootstrap_step<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    rng: &mut R,
    sub_range: f64,
    iteration: usize,
) -> Result<ExplorationOutcome> {
    let q = env.chain.sample_uniform_config(sub_range, rng);
    execute_and_record(env, db, q, iteration, StepKind::Bootstrap, None)
}

/// Constrained motor babbling until the database holds `touch_target`
/// entries. Returns the iterations consumed.
pub fn bootstrap<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    rng: &mut R,
    touch_target: usize,
    sub_range: f64,
    cap: usize,
    log: &mut Vec<ExplorationOutcome>,
) -> Result<usize> {
    let target = touch_target.max(1);
    let start = db.len();
    let mut used = 0;
    while db.len() - start < target {
        if used >= cap {
            return Err(Error::BootstrapFailure {
                iterations: used,
                touches: db.len() - start,
                target,
            });
        }
        used += 1;
        let iteration = log.last().map_or(1, |o| o.iteration + 1);
        log.push(bootstrap_step(env, db, rng, sub_range, iteration)?);
    }
    Ok(used)
}

/// Discretized goal babbling: interest-driven cell, uniform goal inside it.
pub fn step_dgb<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    grid: &mut InterestGrid,
    rng: &mut R,
    epsilon: f64,
    noise_sigma: f64,
    iteration: usize,
) -> Result<ExplorationOutcome> {
    if db.is_empty() {
        return Err(Error::EmptyModel);
    }
    let cell = grid.select_cell(epsilon, rng);
    let goal = grid.sample_goal(cell, rng);
    let mut outcome = reach_for(env, db, rng, goal, noise_sigma, iteration, StepKind::GoalBabbling)?;
    let interest = grid.update_interest(cell, &goal, outcome.result().as_ref());
    outcome.cell = Some(cell);
    outcome.interest = Some(interest);
    Ok(outcome)
}

/// Goal babbling with direct optimization. Returns the outcomes of every
/// real execution: exactly one in surrogate mode, up to `min(k, budget)` in
/// real mode.
#[allow(clippy::too_many_arguments)]
pub fn step_do<R: Rng + ?Sized>(
    env: &Environment,
    db: &mut SampleDatabase,
    mut grid: Option<&mut InterestGrid>,
    rng: &mut R,
    params: &ExplorerParams,
    iteration: usize,
    budget: usize,
) -> Result<Vec<ExplorationOutcome>> {
    if db.is_empty() {
        return Err(Error::EmptyModel);
    }
    let budget = budget.max(1);
    let (goal, cell) = match grid.as_deref() {
        Some(g) => {
            let cell = g.select_cell(params.epsilon, rng);
            (g.sample_goal(cell, rng), Some(cell))
        }
        None => (env.uniform_goal(rng), None),
    };
    let q0 = db.nn_inverse(&goal)?.clone();
    let needed = params.lwlr.k_neighbors.max(db.dim() + 1);

    let finish = |mut o: ExplorationOutcome, grid: &mut Option<&mut InterestGrid>| {
        if let (Some(g), Some(c)) = (grid.as_deref_mut(), cell) {
            o.interest = Some(g.update_interest(c, &goal, o.result().as_ref()));
            o.cell = Some(c);
        }
        o
    };

    if db.len() < needed {
        let q = perturb(&env.chain, &q0, params.noise_sigma, rng);
        let o = execute_and_record(env, db, q, iteration, StepKind::DoFallback, Some(goal))?;
        return Ok(vec![finish(o, &mut grid)]);
    }

    let limits = env.chain.limits();
    let surrogate = |db: &SampleDatabase, q: &[f64]| {
        db.lwlr_forward(&JointConfig::new(q.to_vec()), &params.lwlr)
            .map_or(f64::INFINITY, |x| distance(&x, &goal))
    };

    match params.do_mode {
        DoMode::Surrogate => {
            let snapshot = &*db;
            let best = cma_minimize(
                |q| surrogate(snapshot, q),
                &q0,
                &limits,
                params.do_generations.max(1),
                None,
                rng,
            )?;
            let o = execute_and_record(env, db, best.best, iteration, StepKind::DirectOptimization, Some(goal))?;
            Ok(vec![finish(o, &mut grid)])
        }
        DoMode::Real => {
            let mut state = CmaState::new(q0.as_slice(), default_sigma(&limits), &limits)?;
            let mut outcomes = Vec::new();
            for t in 0..params.do_generations.max(1).min(budget) {
                let candidates = state.ask(rng);
                let fitness: Vec<f64> = candidates.iter().map(|x| surrogate(db, x.as_slice())).collect();
                let pick = (0..candidates.len())
                    .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
                    .unwrap_or(0);
                let q = JointConfig::new(candidates[pick].as_slice().to_vec());
                state.tell(&candidates, &fitness)?;
                let o = execute_and_record(env, db, q, iteration + t, StepKind::DirectOptimization, Some(goal))?;
                outcomes.push(finish(o, &mut grid));
            }
            Ok(outcomes)
        }
    }
}

/// One exploration run: strategy state, database and outcome log.
pub struct Trial<'e, R> {
    pub env: &'e Environment,
    pub strategy: Strategy,
    pub params: ExplorerParams,
    pub db: SampleDatabase,
    pub grid: Option<InterestGrid>,
    pub outcomes: Vec<ExplorationOutcome>,
    pub bootstrap_iterations: usize,
    bootstrapped: bool,
    rng: R,
}

impl<'e, R: Rng> Trial<'e, R> {
    pub fn new(env: &'e Environment, strategy: Strategy, params: ExplorerParams, rng: R) -> Self {
        let grid = strategy.grid_size().map(|s| {
            let penalty = params.miss_penalty.unwrap_or_else(|| env.miss_distance());
            InterestGrid::new(s, s, env.goal_bounds, params.initial_interest, penalty)
                .with_mode(params.interest_mode, params.window)
        });
        Trial {
            env,
            strategy,
            db: SampleDatabase::new(env.dof()),
            grid,
            outcomes: Vec::new(),
            bootstrap_iterations: 0,
            bootstrapped: !strategy.is_goal_babbling(),
            params,
            rng,
        }
    }

    pub fn iterations(&self) -> usize {
        self.outcomes.len()
    }

    pub fn touches(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_touch()).count()
    }

    pub fn is_bootstrapped(&self) -> bool {
        self.bootstrapped
    }

    /// Advances by one strategy step, producing at most `budget` outcomes
    /// (at least one).
    pub fn step(&mut self, budget: usize) -> Result<usize> {
        let iteration = self.outcomes.len() + 1;
        let env = self.env;
        let p = &self.params;
        let rng = &mut self.rng;
        if !self.bootstrapped {
            if self.bootstrap_iterations >= p.bootstrap_cap {
                return Err(Error::BootstrapFailure {
                    iterations: self.bootstrap_iterations,
                    touches: self.db.len(),
                    target: p.bootstrap_touches,
                });
            }
            let o = bootstrap_step(env, &mut self.db, rng, p.bootstrap_sub_range, iteration)?;
            self.outcomes.push(o);
            self.bootstrap_iterations += 1;
            if self.db.len() >= p.bootstrap_touches.max(1) {
                self.bootstrapped = true;
            }
            return Ok(1);
        }
        let produced = match self.strategy {
            Strategy::Rmb => vec![step_rmb(env, &mut self.db, rng, iteration)?],
            Strategy::Rgb => vec![step_rgb(env, &mut self.db, rng, p.noise_sigma, iteration)?],
            Strategy::Dgb15 | Strategy::Dgb32 => {
                let grid = self.grid.as_mut().expect("dgb strategies own a grid");
                vec![step_dgb(env, &mut self.db, grid, rng, p.epsilon, p.noise_sigma, iteration)?]
            }
            Strategy::RgbDo | Strategy::Dgb15Do | Strategy::Dgb32Do => {
                step_do(env, &mut self.db, self.grid.as_mut(), rng, p, iteration, budget)?
            }
        };
        let n = produced.len();
        self.outcomes.extend(produced);
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> InterestGrid {
        InterestGrid::new(
            4,
            3,
            Bounds {
                u: [-1.0, 1.0],
                v: [0.0, 3.0],
            },
            1.0,
            10.0,
        )
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("dgb-7".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Dgb15.grid_size(), Some(15));
        assert_eq!(Strategy::Dgb32Do.grid_size(), Some(32));
        assert_eq!(Strategy::RgbDo.grid_size(), None);
    }

    #[test]
    fn grid_cell_counts() {
        let b = Bounds {
            u: [0.0, 1.0],
            v: [0.0, 1.0],
        };
        assert_eq!(InterestGrid::new(15, 15, b, 1.0, 1.0).len(), 225);
        assert_eq!(InterestGrid::new(32, 32, b, 1.0, 1.0).len(), 1024);
    }

    #[test]
    fn successive_differences() {
        let mut g = grid();
        let seq = [5.0, 3.0, 3.0, 7.0];
        let expect = [1.0, 2.0, 0.0, 4.0];
        for (c, e) in seq.iter().zip(expect) {
            assert_eq!(g.record_competence(2, *c), e);
        }
        assert_eq!(g.cells[2].visits, 4);
        assert_eq!(g.cells[0].interest, 1.0);
    }

    #[test]
    fn exact_hits_zero_interest() {
        let mut g = grid();
        let x = ObservationPoint::new(0.1, 0.2);
        g.update_interest(0, &x, Some(&x));
        assert_eq!(g.update_interest(0, &x, Some(&x)), 0.0);
    }

    #[test]
    fn misses_use_penalty() {
        let mut g = grid();
        let x = ObservationPoint::new(0.1, 0.2);
        g.update_interest(1, &x, Some(&ObservationPoint::new(0.1, 1.2)));
        assert_eq!(g.update_interest(1, &x, None), 9.0);
    }

    #[test]
    fn window_mode() {
        let mut g = grid().with_mode(InterestMode::Window, 4);
        for c in [5.0, 3.0, 3.0] {
            assert_eq!(g.record_competence(0, c), 1.0);
        }
        // halves (5,3) and (3,7)
        assert_eq!(g.record_competence(0, 7.0), 1.0);
        // halves (3,3) and (7,1)
        assert_eq!(g.record_competence(0, 1.0), 1.0);
        // halves (3,7) and (1,9)
        assert_eq!(g.record_competence(0, 9.0), 0.0);
    }

    #[test]
    fn cell_lookup_and_bounds() {
        let g = grid();
        for cell in 0..g.len() {
            let b = g.cell_bounds(cell);
            let center = ObservationPoint::new(0.5 * (b.u[0] + b.u[1]), 0.5 * (b.v[0] + b.v[1]));
            assert_eq!(g.cell_of(&center), cell);
        }
        assert_eq!(g.cell_of(&ObservationPoint::new(-5.0, -5.0)), 0);
        assert_eq!(g.cell_of(&ObservationPoint::new(5.0, 5.0)), g.len() - 1);
    }

    #[test]
    fn goals_inside_selected_cell() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let cell = g.select_cell(0.1, &mut rng);
            let goal = g.sample_goal(cell, &mut rng);
            assert!(g.cell_bounds(cell).contains(&goal));
        }
    }

    #[test]
    fn all_mass_in_one_cell() {
        let mut g = grid();
        let mut v = vec![0.0; g.len()];
        v[5] = 2.5;
        g.set_interests(&v);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5000 {
            assert_eq!(g.select_cell(0.0, &mut rng), 5);
        }
    }

    #[test]
    fn zero_interest_falls_back_to_uniform() {
        let mut g = grid();
        g.set_interests(&vec![0.0; g.len()]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = vec![0usize; g.len()];
        let draws = 120_000;
        for _ in 0..draws {
            counts[g.select_cell(0.0, &mut rng)] += 1;
        }
        let expect = draws as f64 / g.len() as f64;
        for c in counts {
            assert!((c as f64 - expect).abs() / (draws as f64) < 0.01);
        }
    }
}
