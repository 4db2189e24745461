//! Randomized experiments around the decomposition and transversality.

use super::recursion::{cd_index_lefschetz, LefschetzOutcome, RunParams};
use super::transversal::{random_instance, torus_transverse_witness, TransversalMode};
use super::EngineError;
use crate::flag::cd_index_of;
use crate::poset::GradedPoset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Lefschetz,
    Transversality,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialOutcome {
    Success,
    Failure,
    Skipped,
}

/// Everything needed to replay an all-fail run.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleBundle {
    pub experiment: Experiment,
    pub target: String,
    pub mode: String,
    pub seeds: Vec<u64>,
    pub retries: usize,
    pub entry_bound: i64,
    pub failures: Vec<String>,
    pub poset: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LabReport {
    pub trials: usize,
    pub experiment: Experiment,
    pub target: String,
    pub mode: String,
    pub successes: usize,
    pub failures: usize,
    pub skipped: usize,
    pub descent_failures: usize,
    pub records: Vec<TrialRecord>,
    pub counterexample: Option<CounterexampleBundle>,
}

impl LabReport {
    pub fn all_failed(&self) -> bool {
        self.failures > 0 && self.successes == 0
    }

    /// 3 when every trial failed, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_failed() {
            3
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Value {
        if self.trials == 0 {
            return json!({ "trials": 0 });
        }
        serde_json::to_value(self).expect("serializable report")
    }

    fn finish(mut self, params: &RunParams, poset: Option<&GradedPoset>) -> Self {
        if self.all_failed() {
            self.counterexample = Some(CounterexampleBundle {
                experiment: self.experiment,
                target: self.target.clone(),
                mode: self.mode.clone(),
                seeds: self.records.iter().map(|r| r.seed).collect(),
                retries: params.retries,
                entry_bound: params.entry_bound,
                failures: self.records.iter().filter(|r| r.outcome == TrialOutcome::Failure).map(|r| r.detail.clone()).collect(),
                poset: poset.map(|p| serde_json::from_str(&p.to_json()).expect("poset json")),
            });
        }
        self
    }
}

fn empty(experiment: Experiment, target: &str, mode: &str, trials: usize) -> LabReport {
    LabReport {
        trials,
        experiment,
        target: target.into(),
        mode: mode.into(),
        successes: 0,
        failures: 0,
        skipped: 0,
        descent_failures: 0,
        records: Vec::new(),
        counterexample: None,
    }
}

/// Runs the decomposition for seeds `seed, seed+1, …` with `runner` and
/// compares against the flag-vector cd-index.
pub fn run_lefschetz_trials(
    p: &GradedPoset,
    trials: usize,
    params: &RunParams,
    runner: &dyn Fn(&GradedPoset, &RunParams) -> Result<LefschetzOutcome, EngineError>,
) -> Result<LabReport, EngineError> {
    let expected = cd_index_of(p)?;
    let mut rep = empty(Experiment::Lefschetz, p.name(), &params.mode, trials);
    for trial in 0..trials {
        let seed = params.seed.wrapping_add(trial as u64);
        let run = RunParams { seed, ..params.clone() };
        let (outcome, detail) = match runner(p, &run) {
            Ok(out) => {
                rep.descent_failures += out.certificate.descent_failures.len();
                if out.cd == expected {
                    (TrialOutcome::Success, out.cd.to_string())
                } else {
                    (TrialOutcome::Failure, format!("cd-index {} differs from {}", out.cd, expected))
                }
            }
            Err(e @ EngineError::ExhaustedRetries { .. }) => (TrialOutcome::Failure, e.to_string()),
            Err(e) => return Err(e),
        };
        match outcome {
            TrialOutcome::Success => rep.successes += 1,
            TrialOutcome::Failure => rep.failures += 1,
            TrialOutcome::Skipped => rep.skipped += 1,
        }
        rep.records.push(TrialRecord { trial, seed, outcome, detail });
    }
    Ok(rep.finish(params, Some(p)))
}

/// Random transversality instances with per-block-constant weights.
pub fn run_transversality_trials(trials: usize, params: &RunParams, dim_cap: usize) -> LabReport {
    let mut rep = empty(Experiment::Transversality, &format!("random(dim<={dim_cap})"), "per-block-constant", trials);
    for trial in 0..trials {
        let seed = params.seed.wrapping_add(trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, dim_cap);
        let (outcome, detail) =
            match torus_transverse_witness(&inst, TransversalMode::PerBlockConstant, &mut rng, params.entry_bound, params.retries.max(1)) {
                Ok(w) if w.found => (TrialOutcome::Success, format!("blocks {:?}, witness after {} samples", inst.block_dims(), w.samples)),
                Ok(w) => (TrialOutcome::Failure, format!("blocks {:?}, no witness in {} samples", inst.block_dims(), w.samples)),
                Err(e) => (TrialOutcome::Skipped, format!("blocks {:?}: {e}", inst.block_dims())),
            };
        match outcome {
            TrialOutcome::Success => rep.successes += 1,
            TrialOutcome::Failure => rep.failures += 1,
            TrialOutcome::Skipped => rep.skipped += 1,
        }
        rep.records.push(TrialRecord { trial, seed, outcome, detail });
    }
    rep.finish(params, None)
}

/// The lab with the standard samplers.
pub fn conjecture_lab(
    p: Option<&GradedPoset>,
    experiment: Experiment,
    trials: usize,
    params: &RunParams,
    dim_cap: usize,
) -> Result<LabReport, EngineError> {
    match (experiment, p) {
        (Experiment::Lefschetz, Some(p)) => run_lefschetz_trials(p, trials, params, &cd_index_lefschetz),
        (Experiment::Lefschetz, None) => Err(EngineError::Internal("the Lefschetz experiment needs a fan".into())),
        (Experiment::Transversality, _) => Ok(run_transversality_trials(trials, params, dim_cap)),
    }
}
