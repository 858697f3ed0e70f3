//! Monte-Carlo trials, parameter sweeps and CSV output.
//!
//! Trial `i` of a cell derives everything from `finalize64(base_seed ^ i)`:
//! the inventory, the missing set and the protocol PRNG. All algorithms of a
//! cell see the same instances, so their differences are not blurred by
//! instance noise. Trials run in parallel and are collected in index order,
//! which makes every output byte-identical for a given base seed.

mod output;

pub use output::{
    format_float, summary_csv, trial_csv, write_summary_csv, write_trial_csv, SUMMARY_HEADER,
    TRIAL_HEADER,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{run_mmti, run_pcmti, run_polling, run_sfmti, BaselineConfig};
use crate::cpt::{run_cpt, CptConfig};
use crate::error::{MtiError, Result};
use crate::hashing::{finalize64, keyed_hash, Prng};
use crate::model::{
    accuracy_ratio, make_ground_truth, AccuracyRequirement, GroundTruth, IdentificationResult,
    Inventory, TagId, TimingModel,
};

const PSEUDO_ID_STREAM: u64 = 0x7073_6575_646F_6964;
const TRUTH_STREAM: u64 = 0x7472_7574_6873_6574;
const PROTOCOL_STREAM: u64 = 0x7072_6F74_6F63_6F6C;

// ---------------------------------------------------------------------------
// Algorithms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Cpt,
    Polling,
    Pcmti,
    Mmti,
    Sfmti,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Cpt,
        Algorithm::Polling,
        Algorithm::Pcmti,
        Algorithm::Mmti,
        Algorithm::Sfmti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cpt => "cpt",
            Algorithm::Polling => "polling",
            Algorithm::Pcmti => "pcmti",
            Algorithm::Mmti => "mmti",
            Algorithm::Sfmti => "sfmti",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MtiError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| MtiError::UnknownAlgorithm(s.to_string()))
    }
}

/// Protocol tunables shared by every run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProtocolConfig {
    pub timing: TimingModel,
    pub cpt: CptConfig,
    pub baseline: BaselineConfig,
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// One simulated deployment: inventory, missing set and protocol seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub inventory: Inventory,
    pub truth: GroundTruth,
    pub trial_seed: u64,
}

impl Instance {
    /// Inventory of `n` tags with IDs `(i << 64) | keyed_hash(i, seed)`, and
    /// `floor(alpha n)` of them missing.
    pub fn generate(n: usize, alpha: f64, trial_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(MtiError::EmptyInventory);
        }
        let tags = (0..n as u64)
            .map(|i| {
                TagId::new(
                    (u128::from(i) << 64)
                        | u128::from(keyed_hash(TagId::new(u128::from(i)), trial_seed)),
                )
            })
            .collect();
        let inventory = Inventory::new(tags, finalize64(trial_seed ^ PSEUDO_ID_STREAM))?;
        let truth = make_ground_truth(n, alpha, &mut Prng::new(trial_seed ^ TRUTH_STREAM))?;
        Ok(Instance {
            inventory,
            truth,
            trial_seed,
        })
    }

    /// Fresh PRNG for a protocol run; identical for every algorithm.
    pub fn protocol_rng(&self) -> Prng {
        Prng::new(finalize64(self.trial_seed ^ PROTOCOL_STREAM))
    }
}

/// Seed of trial `index`: `finalize64(base_seed ^ index)`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    finalize64(base_seed ^ index)
}

/// Runs one algorithm on one instance.
pub fn run_algorithm(
    algorithm: Algorithm,
    instance: &Instance,
    requirement: &AccuracyRequirement,
    expected_alpha: f64,
    config: &ProtocolConfig,
) -> Result<IdentificationResult> {
    let inv = &instance.inventory;
    let truth = &instance.truth;
    let timing = &config.timing;
    let mut rng = instance.protocol_rng();
    match algorithm {
        Algorithm::Cpt => run_cpt(
            inv,
            truth,
            requirement,
            expected_alpha,
            &mut rng,
            timing,
            &config.cpt,
        ),
        Algorithm::Polling => run_polling(inv, truth, timing),
        Algorithm::Pcmti => run_pcmti(
            inv,
            truth,
            requirement,
            expected_alpha,
            &mut rng,
            timing,
            &config.baseline,
        ),
        Algorithm::Mmti => run_mmti(
            inv,
            truth,
            requirement,
            expected_alpha,
            &mut rng,
            timing,
            &config.baseline,
        ),
        Algorithm::Sfmti => run_sfmti(
            inv,
            truth,
            requirement,
            expected_alpha,
            &mut rng,
            timing,
            &config.baseline,
        ),
    }
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub base_seed: u64,
}

impl CellSpec {
    pub fn requirement(&self) -> Result<AccuracyRequirement> {
        AccuracyRequirement::new(self.epsilon, self.delta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(MtiError::invalid("n", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(MtiError::invalid(
                "alpha",
                format!("{} not in [0, 1]", self.alpha),
            ));
        }
        if self.trials == 0 {
            return Err(MtiError::invalid("trials", "must be >= 1"));
        }
        self.requirement().map(|_| ())
    }
}

/// Outcome of one protocol run in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trial: u64,
    pub seed: u64,
    pub slots_short: u64,
    pub slots_long: u64,
    pub slots_tagid: u64,
    pub reader_bits: u64,
    pub tag_bits: u64,
    pub time_s: f64,
    pub missing_total: usize,
    pub identified_true: usize,
    pub identified_false: usize,
    pub ratio: f64,
    pub requirement_met: bool,
    /// Tags whose presence was checked (not serialized).
    pub tags_checked: usize,
    /// Verification slots, i.e. leaves for CPT (not serialized).
    pub observations: u64,
}

impl TrialRecord {
    fn new(
        algorithm: Algorithm,
        cell: &CellSpec,
        trial: u64,
        instance: &Instance,
        requirement: &AccuracyRequirement,
        result: &IdentificationResult,
    ) -> Self {
        let truth = &instance.truth;
        let identified_true = result
            .reported_missing
            .iter()
            .filter(|&&i| truth.is_missing(i))
            .count();
        let ratio = accuracy_ratio(truth, result);
        TrialRecord {
            algorithm,
            n: cell.n,
            alpha: cell.alpha,
            epsilon: cell.epsilon,
            delta: cell.delta,
            trial,
            seed: instance.trial_seed,
            slots_short: result.ledger.short_slots,
            slots_long: result.ledger.long_slots,
            slots_tagid: result.ledger.tagid_slots,
            reader_bits: result.ledger.reader_bits,
            tag_bits: result.ledger.tag_bits,
            time_s: result.elapsed_s,
            missing_total: truth.missing().len(),
            identified_true,
            identified_false: result.reported_missing.len() - identified_true,
            ratio,
            requirement_met: requirement.is_met_by(ratio),
            tags_checked: result.tags_checked,
            observations: result.observations,
        }
    }
}

/// Runs every algorithm of `algorithms` on trial `index` of `cell`.
fn run_one_trial(
    algorithms: &[Algorithm],
    cell: &CellSpec,
    index: u64,
    config: &ProtocolConfig,
) -> Result<Vec<TrialRecord>> {
    let requirement = cell.requirement()?;
    let instance = Instance::generate(cell.n, cell.alpha, trial_seed(cell.base_seed, index))?;
    algorithms
        .iter()
        .map(|&alg| {
            let res = run_algorithm(alg, &instance, &requirement, cell.alpha, config)?;
            Ok(TrialRecord::new(
                alg,
                cell,
                index,
                &instance,
                &requirement,
                &res,
            ))
        })
        .collect()
}

/// Runs `cell.trials` trials of each algorithm. Records are ordered by
/// algorithm (as given), then trial index.
pub fn run_cell(
    algorithms: &[Algorithm],
    cell: &CellSpec,
    config: &ProtocolConfig,
) -> Result<Vec<TrialRecord>> {
    cell.validate()?;
    let per_trial = (0..cell.trials)
        .into_par_iter()
        .map(|i| run_one_trial(algorithms, cell, i, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(algorithm_major(algorithms.len(), per_trial))
}

/// Runs `cell.trials` trials of one algorithm.
pub fn run_trials(
    algorithm: Algorithm,
    cell: &CellSpec,
    config: &ProtocolConfig,
) -> Result<Vec<TrialRecord>> {
    run_cell(&[algorithm], cell, config)
}

fn algorithm_major(algorithms: usize, per_trial: Vec<Vec<TrialRecord>>) -> Vec<TrialRecord> {
    let mut columns: Vec<Vec<TrialRecord>> = (0..algorithms)
        .map(|_| Vec::with_capacity(per_trial.len()))
        .collect();
    for row in per_trial {
        for (col, rec) in columns.iter_mut().zip(row) {
            col.push(rec);
        }
    }
    columns.into_iter().flatten().collect()
}

// ---------------------------------------------------------------------------
// Requirement check
// ---------------------------------------------------------------------------

/// Minimum number of records [`verify_requirement`] accepts.
pub const MIN_RECORDS: usize = 30;

/// Success threshold `(1 - delta) - 3 sqrt(delta (1 - delta) / trials)`.
pub fn requirement_threshold(delta: f64, trials: usize) -> f64 {
    (1.0 - delta) - 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

/// Share of records with `ratio >= 1 - epsilon` and whether it clears
/// [`requirement_threshold`].
pub fn verify_requirement(
    records: &[TrialRecord],
    epsilon: f64,
    delta: f64,
) -> Result<(bool, f64)> {
    if records.len() < MIN_RECORDS {
        return Err(MtiError::TooFewRecords {
            got: records.len(),
            need: MIN_RECORDS,
        });
    }
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    Ok(verify_ratios(&ratios, epsilon, delta))
}

fn verify_ratios(ratios: &[f64], epsilon: f64, delta: f64) -> (bool, f64) {
    let req = AccuracyRequirement { epsilon, delta };
    let ok = ratios.iter().filter(|&&r| req.is_met_by(r)).count();
    let fraction = ok as f64 / ratios.len() as f64;
    (
        fraction + 1e-12 >= requirement_threshold(delta, ratios.len()),
        fraction,
    )
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Cartesian grid of cells, each run for every algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub algorithms: Vec<Algorithm>,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub trials: u64,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            algorithms: Algorithm::ALL.to_vec(),
            epsilons: vec![0.01],
            deltas: vec![0.1],
            alphas: vec![0.01],
            ns: vec![50_000],
            trials: 100,
            base_seed: 0,
        }
    }
}

impl SweepSpec {
    /// Cells in grid order: `n`, then `alpha`, then `epsilon`, then `delta`.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &alpha in &self.alphas {
                for &epsilon in &self.epsilons {
                    for &delta in &self.deltas {
                        out.push(CellSpec {
                            n,
                            alpha,
                            epsilon,
                            delta,
                            trials: self.trials,
                            base_seed: self.base_seed,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Per-cell, per-algorithm aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub mean_time_s: f64,
    pub success_fraction: f64,
    /// Success fraction clears the 3-sigma band (applied even below
    /// [`MIN_RECORDS`] trials).
    pub requirement_ok: bool,
}

/// Summarizes records of one algorithm in one cell.
pub fn summarize(records: &[TrialRecord]) -> Option<CellSummary> {
    let first = records.first()?;
    let mean_time_s = records.iter().map(|r| r.time_s).sum::<f64>() / records.len() as f64;
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    let (requirement_ok, success_fraction) = verify_ratios(&ratios, first.epsilon, first.delta);
    Some(CellSummary {
        algorithm: first.algorithm,
        n: first.n,
        alpha: first.alpha,
        epsilon: first.epsilon,
        delta: first.delta,
        trials: records.len(),
        mean_time_s,
        success_fraction,
        requirement_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<CellSummary>,
}

impl SweepOutput {
    pub fn records_csv(&self) -> String {
        trial_csv(&self.records)
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.summaries)
    }
}

/// Runs every cell of the grid. Rows follow grid order, then algorithm, then
/// trial.
pub fn sweep(spec: &SweepSpec, config: &ProtocolConfig) -> Result<SweepOutput> {
    if spec.trials == 0 {
        return Err(MtiError::invalid("trials", "must be >= 1"));
    }
    let mut out = SweepOutput::default();
    for cell in spec.cells() {
        let records = run_cell(&spec.algorithms, &cell, config)?;
        for chunk in records.chunks(spec.trials as usize) {
            out.summaries.extend(summarize(chunk));
        }
        out.records.extend(records);
    }
    Ok(out)
}
