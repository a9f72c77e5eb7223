//! External evaluation: fixed taxel test sets, checkpointed mean reaching
//! error (MRE) and cross-trial aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::Environment;
use crate::inverse_model::SampleDatabase;
use crate::observation::{distance, ObservationSpace};
use crate::skin::SkinPatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Low,
    High,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Low => "low",
            Resolution::High => "high",
        })
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Resolution::Low),
            "high" => Ok(Resolution::High),
            _ => Err(Error::validation("resolution", format!("unknown resolution `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivation {
    AllTaxels,
    /// Every `stride[0]`-th column and `stride[1]`-th row of the taxel grid.
    GridSubsample { stride: [usize; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    pub taxels: Vec<usize>,
    pub derivation: Derivation,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.taxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxels.is_empty()
    }
}

/// Low resolution tests every taxel; high resolution tests a strided grid.
pub fn build_test_set(patch: &SkinPatch, resolution: Resolution, stride: [usize; 2]) -> TestSet {
    let [sc, sr] = stride.map(|s| s.max(1));
    if resolution == Resolution::Low || (sc == 1 && sr == 1) {
        return TestSet {
            taxels: (0..patch.len()).collect(),
            derivation: Derivation::AllTaxels,
        };
    }
    let taxels = (0..patch.rows)
        .step_by(sr)
        .flat_map(|row| (0..patch.cols).step_by(sc).map(move |col| row * patch.cols + col))
        .collect();
    TestSet {
        taxels,
        derivation: Derivation::GridSubsample { stride: [sc, sr] },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TaxelOutcome {
    Exact,
    /// Another taxel was touched; observation-space distance to it.
    WithError(f64),
    Unreached,
}

impl TaxelOutcome {
    pub fn error(&self) -> Option<f64> {
        match self {
            TaxelOutcome::Exact => Some(0.0),
            TaxelOutcome::WithError(d) => Some(*d),
            TaxelOutcome::Unreached => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaxelTestResult {
    pub target: usize,
    pub outcome: TaxelOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointReport {
    pub iteration: usize,
    pub results: Vec<TaxelTestResult>,
    /// `None` when no test reach produced a measurable error.
    pub mre: Option<f64>,
    /// Cumulative touches during exploration up to `iteration`.
    pub touches: usize,
}

impl CheckpointReport {
    pub fn counts(&self) -> (usize, usize, usize) {
        self.results.iter().fold((0, 0, 0), |(e, w, u), r| match r.outcome {
            TaxelOutcome::Exact => (e + 1, w, u),
            TaxelOutcome::WithError(_) => (e, w + 1, u),
            TaxelOutcome::Unreached => (e, w, u + 1),
        })
    }
}

/// Mean of measured errors, summed in sorted order so the value does not
/// depend on the order of the test set.
pub fn mean_reaching_error(results: &[TaxelTestResult]) -> Option<f64> {
    let mut errors: Vec<f64> = results.iter().filter_map(|r| r.outcome.error()).collect();
    if errors.is_empty() {
        return None;
    }
    errors.sort_by(f64::total_cmp);
    Some(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Reaches for every test taxel with the current inverse model, without
/// exploration noise. Leaves the database untouched.
pub fn evaluate_checkpoint(
    env: &Environment,
    db: &SampleDatabase,
    test_set: &TestSet,
    iteration: usize,
    touches: usize,
) -> Result<CheckpointReport> {
    let mut results = Vec::with_capacity(test_set.len());
    for &target in &test_set.taxels {
        let goal = env.space.taxel(target);
        let outcome = match db.nn_inverse(&goal) {
            Err(Error::EmptyModel) => TaxelOutcome::Unreached,
            Err(e) => return Err(e),
            Ok(q) => match env.execute(q)? {
                None => TaxelOutcome::Unreached,
                Some((id, _)) if id == target => TaxelOutcome::Exact,
                Some((_, x)) => TaxelOutcome::WithError(distance(&goal, &x)),
            },
        };
        results.push(TaxelTestResult { target, outcome });
    }
    let mre = mean_reaching_error(&results);
    Ok(CheckpointReport {
        iteration,
        results,
        mre,
        touches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaxelClass {
    /// Reached often enough, always exactly.
    Blue,
    /// Reached often enough, with error.
    Magenta,
    /// Below the reach-rate threshold.
    Red,
}

impl TaxelClass {
    pub fn name(&self) -> &'static str {
        match self {
            TaxelClass::Blue => "blue",
            TaxelClass::Magenta => "magenta",
            TaxelClass::Red => "red",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaxelSummary {
    pub taxel: usize,
    pub trials: usize,
    pub reached: usize,
    pub reach_rate: f64,
    /// Reported only when the reach rate meets the threshold.
    pub mean_error: Option<f64>,
    pub class: TaxelClass,
}

pub const DEFAULT_REACH_THRESHOLD: f64 = 0.6;

/// Folds per-trial final reports into per-taxel reach rates and errors.
pub fn aggregate_trials(reports: &[CheckpointReport], threshold: f64) -> Vec<TaxelSummary> {
    let mut by_taxel: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for report in reports {
        for r in &report.results {
            by_taxel.entry(r.target).or_default().push(r.outcome.error());
        }
    }
    let trials = reports.len();
    by_taxel
        .into_iter()
        .map(|(taxel, errors)| {
            let mut measured: Vec<f64> = errors.into_iter().flatten().collect();
            measured.sort_by(f64::total_cmp);
            let reached = measured.len();
            let reach_rate = if trials == 0 { 0.0 } else { reached as f64 / trials as f64 };
            let mean_error = (reached > 0 && reach_rate >= threshold)
                .then(|| measured.iter().sum::<f64>() / reached as f64);
            let class = match mean_error {
                Some(0.0) => TaxelClass::Blue,
                Some(_) => TaxelClass::Magenta,
                None => TaxelClass::Red,
            };
            TaxelSummary {
                taxel,
                trials,
                reached,
                reach_rate,
                mean_error,
                class,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `iteration,mre,touches`; MRE left blank when missing.
pub fn write_checkpoints_csv<W: Write>(reports: &[CheckpointReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "mre", "touches"])?;
    for r in reports {
        w.write_record(&[r.iteration.to_string(), opt(r.mre), r.touches.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// `taxel,u,v,reach_rate,mean_error,class`.
pub fn write_taxel_summary_csv<W: Write>(
    summary: &[TaxelSummary],
    space: &ObservationSpace,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["taxel", "u", "v", "reach_rate", "mean_error", "class"])?;
    for s in summary {
        let x = space.taxel(s.taxel);
        w.write_record(&[
            s.taxel.to_string(),
            x.u.to_string(),
            x.v.to_string(),
            s.reach_rate.to_string(),
            opt(s.mean_error),
            s.class.name().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
