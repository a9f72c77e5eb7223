//! Experiment orchestration: config parsing and validation, seeded
//! multi-trial runs with interleaved checkpoints, CSV persistence and
//! strategy matrix sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_trials, build_test_set, evaluate_checkpoint, write_checkpoints_csv,
    write_taxel_summary_csv, CheckpointReport, Resolution, TaxelSummary, TestSet,
    DEFAULT_REACH_THRESHOLD,
};
use crate::explorer::{Environment, ExplorationOutcome, ExplorerParams, StepKind, Strategy, Trial};
use crate::inverse_model::SampleDatabase;
use crate::kinematics::{JointConfig, KinematicChain};
use crate::observation::{ObservationPoint, ProjectionSpec};
use crate::presets::{self, BodyPart};
use crate::skin::SkinSpec;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SELFTOUCH_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "results";

fn default_iterations() -> usize {
    1000
}
fn default_eval_interval() -> usize {
    100
}
fn default_trials() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationParams {
    /// Column and row stride of the high-resolution test grid; the body
    /// part's preset when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_stride: Option<[usize; 2]>,
    pub reach_threshold: f64,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        EvaluationParams {
            test_stride: None,
            reach_threshold: DEFAULT_REACH_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub body_part: BodyPart,
    pub resolution: Resolution,
    pub strategy: Strategy,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub exploration: ExplorerParams,
    #[serde(default)]
    pub evaluation: EvaluationParams,
    /// Overrides the preset arm (and neck) geometry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<KinematicChain>,
    /// Overrides the preset skin patch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skin: Option<SkinSpec>,
    /// Overrides the projection matching the skin surface.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionSpec>,
}

impl ExperimentConfig {
    pub fn new(body_part: BodyPart, resolution: Resolution, strategy: Strategy) -> Self {
        ExperimentConfig {
            body_part,
            resolution,
            strategy,
            iterations: default_iterations(),
            eval_interval: default_eval_interval(),
            trials: default_trials(),
            base_seed: 0,
            output_dir: None,
            exploration: ExplorerParams::default(),
            evaluation: EvaluationParams::default(),
            chain: None,
            skin: None,
            projection: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn chain(&self) -> KinematicChain {
        self.chain
            .clone()
            .unwrap_or_else(|| presets::chain(self.body_part))
    }

    pub fn skin(&self) -> SkinSpec {
        self.skin
            .clone()
            .unwrap_or_else(|| presets::skin(self.body_part, self.resolution))
    }

    pub fn test_stride(&self) -> [usize; 2] {
        self.evaluation
            .test_stride
            .unwrap_or_else(|| presets::test_stride(self.body_part))
    }

    /// The config with every preset filled in and non-semantic fields
    /// cleared.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.output_dir = None;
        c.chain = Some(self.chain());
        c.skin = Some(self.skin());
        c.evaluation.test_stride = Some(self.test_stride());
        c
    }

    /// SHA-256 over the canonical serialization of the resolved config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.resolved()).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::validation("iterations", "must be positive"));
        }
        if self.eval_interval == 0 || !self.iterations.is_multiple_of(self.eval_interval) {
            return Err(Error::validation(
                "eval_interval",
                "must be positive and divide iterations",
            ));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        let p = &self.exploration;
        let checks: [(&str, bool, &str); 10] = [
            ("exploration.noise_sigma", p.noise_sigma >= 0.0 && p.noise_sigma.is_finite(), "must be finite and non-negative"),
            ("exploration.epsilon", (0.0..=1.0).contains(&p.epsilon), "must lie in [0, 1]"),
            ("exploration.initial_interest", p.initial_interest >= 0.0 && p.initial_interest.is_finite(), "must be finite and non-negative"),
            ("exploration.miss_penalty", p.miss_penalty.is_none_or(|d| d >= 0.0 && d.is_finite()), "must be finite and non-negative"),
            ("exploration.window", p.window >= 2, "must be at least 2"),
            ("exploration.do_generations", p.do_generations >= 1, "must be at least 1"),
            ("exploration.bootstrap_touches", p.bootstrap_touches >= 1, "must be at least 1"),
            ("exploration.bootstrap_sub_range", p.bootstrap_sub_range > 0.0 && p.bootstrap_sub_range <= 1.0, "must lie in (0, 1]"),
            ("exploration.lwlr.ridge", p.lwlr.ridge >= 0.0 && p.lwlr.bandwidth.is_none_or(|h| h > 0.0), "ridge must be non-negative and bandwidth positive"),
            ("evaluation.reach_threshold", self.evaluation.reach_threshold >= 0.0, "must be non-negative"),
        ];
        for (field, ok, message) in checks {
            if !ok {
                return Err(Error::validation(field, message));
            }
        }
        if p.lwlr.k_neighbors == 0 {
            return Err(Error::validation("exploration.lwlr.k_neighbors", "must be at least 1"));
        }
        if self.test_stride().contains(&0) {
            return Err(Error::validation("evaluation.test_stride", "strides must be positive"));
        }
        let chain = self.chain();
        chain
            .validate()
            .map_err(|e| Error::validation("chain", e.to_string()))?;
        let expected = match self.body_part {
            BodyPart::Torso => 5,
            BodyPart::Head => 7,
        };
        if chain.dof() != expected {
            return Err(Error::validation(
                "chain",
                format!("{} experiments need {expected} joints, chain has {}", self.body_part, chain.dof()),
            ));
        }
        let skin = self.skin();
        if !chain.has_frame(&skin.frame) {
            return Err(Error::validation("skin.frame", format!("no frame named `{}`", skin.frame)));
        }
        crate::skin::generate_skin(&skin).map_err(|e| Error::validation("skin", e.to_string()))?;
        if let Some(proj) = &self.projection {
            proj.validate()
                .map_err(|e| Error::validation("projection", e.to_string()))?;
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::new(self.chain(), &self.skin(), self.projection.clone())
    }

    pub fn test_set(&self, env: &Environment) -> TestSet {
        build_test_set(&env.patch, self.resolution, self.test_stride())
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// Short label such as `torso-low-dgb-32`.
    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.body_part, self.resolution, self.strategy)
    }
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub outcomes: Vec<ExplorationOutcome>,
    pub checkpoints: Vec<CheckpointReport>,
    pub database: SampleDatabase,
    pub bootstrap_iterations: usize,
    /// Final interest values of the DGB grid.
    pub interests: Option<Vec<f64>>,
}

impl TrialRecord {
    pub fn touches(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_touch()).count()
    }
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub env: Environment,
    pub test_set: TestSet,
    /// One entry per configured trial, in trial order.
    pub trials: Vec<std::result::Result<TrialRecord, String>>,
    pub summary: Vec<TaxelSummary>,
    pub wall_time: Duration,
}

impl ExperimentResult {
    pub fn completed(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter_map(|t| t.as_ref().ok())
    }
}

/// Runs a single seeded trial, evaluating every `eval_interval` iterations.
pub fn run_trial(
    config: &ExperimentConfig,
    env: &Environment,
    test_set: &TestSet,
    index: usize,
) -> Result<TrialRecord> {
    let seed = config.seed(index);
    let mut trial = Trial::new(env, config.strategy, config.exploration.clone(), ChaCha8Rng::seed_from_u64(seed));
    let mut checkpoints = Vec::with_capacity(config.iterations / config.eval_interval);
    let mut next = config.eval_interval;
    let mut touches = 0;
    while trial.iterations() < config.iterations {
        let before = trial.iterations();
        trial.step(next - before)?;
        touches += trial.outcomes[before..].iter().filter(|o| o.is_touch()).count();
        if trial.iterations() == next {
            checkpoints.push(evaluate_checkpoint(env, &trial.db, test_set, next, touches)?);
            next += config.eval_interval;
        }
    }
    Ok(TrialRecord {
        index,
        seed,
        checkpoints,
        bootstrap_iterations: trial.bootstrap_iterations,
        interests: trial.grid.as_ref().map(|g| g.interests()),
        database: trial.db,
        outcomes: trial.outcomes,
    })
}

fn with_pool<T: Send>(parallel: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(parallel).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Runs every trial of `config`. `parallel` bounds the number of trials in
/// flight; results never depend on it.
pub fn run_experiment(config: &ExperimentConfig, parallel: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let env = config.environment()?;
    let test_set = config.test_set(&env);
    let run = |i: usize| run_trial(config, &env, &test_set, i).map_err(|e| e.to_string());
    let trials: Vec<_> = if parallel > 1 {
        with_pool(parallel, || (0..config.trials).into_par_iter().map(run).collect())
    } else {
        (0..config.trials).map(run).collect()
    };
    if trials.iter().all(|t| t.is_err()) {
        let first = trials
            .iter()
            .find_map(|t| t.as_ref().err())
            .cloned()
            .unwrap_or_default();
        return Err(Error::Config(format!("every trial failed; first error: {first}")));
    }
    let finals: Vec<CheckpointReport> = trials
        .iter()
        .filter_map(|t| t.as_ref().ok()?.checkpoints.last().cloned())
        .collect();
    let summary = aggregate_trials(&finals, config.evaluation.reach_threshold);
    Ok(ExperimentResult {
        config_hash: config.hash(),
        config: config.clone(),
        env,
        test_set,
        trials,
        summary,
        wall_time: started.elapsed(),
    })
}

/// Mean MRE (over trials that measured one) and mean cumulative touches
/// per checkpoint iteration.
pub fn mean_curve(result: &ExperimentResult) -> Vec<(usize, Option<f64>, f64)> {
    let mut by_iter: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for t in result.completed() {
        for c in &t.checkpoints {
            let e = by_iter.entry(c.iteration).or_default();
            if let Some(m) = c.mre {
                e.0.push(m);
            }
            e.1.push(c.touches as f64);
        }
    }
    by_iter
        .into_iter()
        .map(|(it, (mres, touches))| {
            let mre = (!mres.is_empty()).then(|| mres.iter().sum::<f64>() / mres.len() as f64);
            (it, mre, touches.iter().sum::<f64>() / touches.len().max(1) as f64)
        })
        .collect()
}

const HASH_PREFIX: &str = "# config_hash: ";

/// Creates `path` and writes the config-hash comment line.
fn tagged_file(path: &Path, hash: &str) -> Result<fs::File> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{HASH_PREFIX}{hash}").map_err(|e| Error::io(path, e))?;
    Ok(f)
}

/// Opens a CSV written by this module, skipping the hash comment line.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

/// Reads the config hash tag from the first line of an artifact.
pub fn read_hash_tag(path: &Path) -> Result<Option<String>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(f)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    Ok(line
        .trim_end()
        .strip_prefix(HASH_PREFIX)
        .map(str::to_string))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `iteration,strategy,step,goal_u,goal_v,q1..qn,touched,taxel,x_u,x_v,cell,interest`.
pub fn write_outcomes_csv<W: Write>(
    outcomes: &[ExplorationOutcome],
    strategy: Strategy,
    dof: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["iteration", "strategy", "step", "goal_u", "goal_v"]
        .map(String::from)
        .to_vec();
    header.extend((1..=dof).map(|i| format!("q{i}")));
    header.extend(["touched", "taxel", "x_u", "x_v", "cell", "interest"].map(String::from));
    w.write_record(&header)?;
    for o in outcomes {
        let mut row = vec![
            o.iteration.to_string(),
            strategy.name().to_string(),
            o.kind.tag().to_string(),
            opt(o.goal.map(|g| g.u)),
            opt(o.goal.map(|g| g.v)),
        ];
        row.extend(o.q.iter().map(|a| a.to_string()));
        row.push(u8::from(o.is_touch()).to_string());
        row.push(o.touched.map(|t| t.0.to_string()).unwrap_or_default());
        row.push(opt(o.result().map(|x| x.u)));
        row.push(opt(o.result().map(|x| x.v)));
        row.push(o.cell.map(|c| c.to_string()).unwrap_or_default());
        row.push(opt(o.interest));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|e| Error::Config(format!("bad field `{s}`: {e}")))
}

/// Inverse of [`write_outcomes_csv`].
pub fn read_outcomes_csv<R: Read>(input: R) -> Result<Vec<ExplorationOutcome>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = r.headers()?.clone();
    let dof = headers.iter().filter(|h| h.starts_with('q')).count();
    let mut out = Vec::new();
    for record in r.records() {
        let rec = record?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| parse_opt::<f64>(field(i));
        let iteration = parse_opt::<usize>(field(0))?
            .ok_or_else(|| Error::Config("missing iteration".into()))?;
        let kind = StepKind::from_tag(field(2))
            .ok_or_else(|| Error::Config(format!("unknown step `{}`", field(2))))?;
        let goal = match (num(3)?, num(4)?) {
            (Some(u), Some(v)) => Some(ObservationPoint::new(u, v)),
            _ => None,
        };
        let q = (0..dof)
            .map(|j| num(5 + j)?.ok_or_else(|| Error::Config("missing joint angle".into())))
            .collect::<Result<Vec<f64>>>()?;
        let base = 5 + dof;
        let touched = match (parse_opt::<usize>(field(base + 1))?, num(base + 2)?, num(base + 3)?) {
            (Some(id), Some(u), Some(v)) => Some((id, ObservationPoint::new(u, v))),
            _ => None,
        };
        out.push(ExplorationOutcome {
            iteration,
            kind,
            goal,
            q: JointConfig::new(q),
            touched,
            cell: parse_opt(field(base + 4))?,
            interest: num(base + 5)?,
        });
    }
    Ok(out)
}

fn write_with<F>(path: &Path, hash: &str, f: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let mut file = tagged_file(path, hash)?;
    f(&mut file)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes every artifact of an experiment into `dir`. CSV outputs depend
/// only on the config; run metadata (wall time) goes to `metadata.json`.
pub fn write_results(result: &ExperimentResult, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let hash = &result.config_hash;
    let config_path = dir.join("config.toml");
    fs::write(&config_path, format!("{HASH_PREFIX}{hash}\n{}", result.config.to_toml_string()?))
        .map_err(|e| Error::io(&config_path, e))?;

    write_with(&dir.join("skin_geometry.csv"), hash, |f| result.env.patch.write_geometry_csv(f))?;
    write_with(&dir.join("taxels_projected.csv"), hash, |f| result.env.space.write_csv(f))?;
    write_with(&dir.join("taxels.csv"), hash, |f| {
        write_taxel_summary_csv(&result.summary, &result.env.space, f)
    })?;
    write_with(&dir.join("test_set.csv"), hash, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["taxel"])?;
        for t in &result.test_set.taxels {
            w.write_record([t.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    })?;
    write_with(&dir.join("checkpoints_mean.csv"), hash, |f| {
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["iteration", "mean_mre", "mean_touches"])?;
        for (it, mre, touches) in mean_curve(result) {
            w.write_record(&[it.to_string(), opt(mre), touches.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    })?;

    let dof = result.env.dof();
    for t in result.completed() {
        let tdir = dir.join(format!("trial_{:02}", t.index));
        create_dir(&tdir)?;
        write_with(&tdir.join("outcomes.csv"), hash, |f| {
            write_outcomes_csv(&t.outcomes, result.config.strategy, dof, f)
        })?;
        write_with(&tdir.join("checkpoints.csv"), hash, |f| write_checkpoints_csv(&t.checkpoints, f))?;
        write_with(&tdir.join("database.csv"), hash, |f| t.database.write_csv(f))?;
    }

    let metadata = serde_json::json!({
        "config_hash": hash,
        "label": result.config.label(),
        "seeds": (0..result.config.trials).map(|i| result.config.seed(i)).collect::<Vec<_>>(),
        "wall_time_s": result.wall_time.as_secs_f64(),
        "trials": result.trials.iter().enumerate().map(|(i, t)| match t {
            Ok(r) => serde_json::json!({
                "index": i,
                "touches": r.touches(),
                "bootstrap_iterations": r.bootstrap_iterations,
            }),
            Err(e) => serde_json::json!({"index": i, "error": e}),
        }).collect::<Vec<_>>(),
    });
    let meta_path = dir.join("metadata.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&metadata)?).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

/// Output directory of a config: its own `output_dir`, else
/// `<root>/<label>`.
pub fn output_dir_for(config: &ExperimentConfig, root: &Path) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| root.join(config.label()))
}

/// The strategy set compared for one body part and resolution. DO variants
/// are only included at low resolution.
pub fn default_matrix(body: BodyPart, resolution: Resolution) -> Vec<ExperimentConfig> {
    Strategy::ALL
        .into_iter()
        .filter(|s| resolution == Resolution::Low || !s.uses_direct_optimization())
        .map(|s| ExperimentConfig::new(body, resolution, s))
        .collect()
}

/// Runs each config independently; one failing experiment does not stop
/// the others.
pub fn run_matrix(configs: &[ExperimentConfig], parallel: usize) -> Vec<Result<ExperimentResult>> {
    configs.iter().map(|c| run_experiment(c, parallel)).collect()
}

/// `experiment,body_part,resolution,strategy,iteration,mean_mre,mean_touches`.
pub fn write_comparison_csv<W: Write>(results: &[&ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "experiment",
        "config_hash",
        "body_part",
        "resolution",
        "strategy",
        "iteration",
        "mean_mre",
        "mean_touches",
    ])?;
    for r in results {
        for (it, mre, touches) in mean_curve(r) {
            w.write_record(&[
                r.config.label(),
                r.config_hash.clone(),
                r.config.body_part.to_string(),
                r.config.resolution.to_string(),
                r.config.strategy.to_string(),
                it.to_string(),
                opt(mre),
                touches.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// All `*.toml` files in `dir`, sorted by name.
pub fn load_config_dir(dir: &Path) -> Result<Vec<(PathBuf, ExperimentConfig)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let c = ExperimentConfig::load(&p)?;
            Ok((p, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "body_part = \"torso\"\nresolution = \"low\"\nstrategy = \"dgb-32\"\n",
        )
        .unwrap();
        assert_eq!(c.iterations, 1000);
        assert_eq!(c.eval_interval, 100);
        assert_eq!(c.trials, 10);
        assert_eq!(c.exploration, ExplorerParams::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "body_part = \"torso\"\nresolution = \"low\"\nstrategy = \"rgb\"\nfoo = 1\n",
        );
        assert!(err.is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig::new(BodyPart::Torso, Resolution::Low, Strategy::Rgb);
        c.eval_interval = 300;
        match c.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "eval_interval"),
            other => panic!("unexpected {other:?}"),
        }
        let mut c = ExperimentConfig::new(BodyPart::Torso, Resolution::Low, Strategy::Rgb);
        c.trials = 0;
        assert!(matches!(c.validate(), Err(Error::Validation { field, .. }) if field == "trials"));
        let mut c = ExperimentConfig::new(BodyPart::Torso, Resolution::Low, Strategy::Rgb);
        c.exploration.epsilon = 1.5;
        assert!(matches!(c.validate(), Err(Error::Validation { field, .. }) if field == "exploration.epsilon"));
        let mut c = ExperimentConfig::new(BodyPart::Torso, Resolution::Low, Strategy::Rgb);
        c.chain = Some(presets::chain(BodyPart::Head));
        assert!(matches!(c.validate(), Err(Error::Validation { field, .. }) if field == "chain"));
    }

    #[test]
    fn full_config_round_trips_through_toml() {
        let c = ExperimentConfig::new(BodyPart::Head, Resolution::High, Strategy::Dgb15).resolved();
        let text = c.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_formatting_and_output_dir() {
        let a = ExperimentConfig::from_toml_str(
            "body_part = \"torso\"\nresolution = \"low\"\nstrategy = \"rgb\"\n",
        )
        .unwrap();
        let b = ExperimentConfig::from_toml_str(
            "# comment\nstrategy   =   \"rgb\"\n\nbody_part = \"torso\" # x\nresolution = \"low\"\noutput_dir = \"elsewhere\"\n",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        // explicit preset values are the same experiment
        assert_eq!(a.hash(), a.resolved().hash());
        let mut c = a.clone();
        c.exploration.noise_sigma = 0.051;
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.base_seed = 1;
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn matrices() {
        assert_eq!(default_matrix(BodyPart::Torso, Resolution::Low).len(), 7);
        let high = default_matrix(BodyPart::Torso, Resolution::High);
        assert_eq!(high.len(), 4);
        assert!(high.iter().all(|c| !c.strategy.uses_direct_optimization()));
        assert!(run_matrix(&[], 1).is_empty());
    }
}
