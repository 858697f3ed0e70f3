//! Python bindings: hashing, the channel model, statistics, single protocol
//! runs, trial batches and sweeps.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mti_core::channel::{self, SlotObservation as CoreObservation};
use mti_core::harness::{self, Algorithm, CellSpec, ProtocolConfig, SweepSpec};
use mti_core::hashing;
use mti_core::selftest::{run_selftest, Probes};
use mti_core::stats::{self, ReferenceAlgorithm};
use mti_core::{AccuracyRequirement, MtiError, TagId};

fn err(e: MtiError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(err)
}

fn protocol_config(rho: Option<f64>) -> PyResult<ProtocolConfig> {
    let mut cfg = ProtocolConfig::default();
    if let Some(r) = rho {
        cfg.baseline.rho_hat = r;
        cfg.baseline.validate().map_err(err)?;
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer.
#[pyfunction]
fn finalize64(x: u64) -> u64 {
    hashing::finalize64(x)
}

/// Seeded 64-bit hash of a 96-bit tag ID.
#[pyfunction]
fn keyed_hash(tag_id: u128, seed: u64) -> u64 {
    hashing::keyed_hash(TagId::new(tag_id), seed)
}

/// Returns `(ids, bits, seed, iterations)`.
#[pyfunction]
fn make_pseudo_ids(tags: Vec<u128>, seed: u64) -> PyResult<(Vec<u64>, u32, u64, u32)> {
    let tags: Vec<TagId> = tags.into_iter().map(TagId::new).collect();
    let a = hashing::make_pseudo_ids(&tags, seed).map_err(err)?;
    Ok((a.ids, a.bits, a.seed, a.iterations))
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

/// Reader-side view of one response slot.
#[pyclass(name = "SlotObservation", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PySlotObservation(CoreObservation);

#[pymethods]
impl PySlotObservation {
    /// One of `empty`, `single`, `pair`, `collision`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.0 {
            CoreObservation::Empty => "empty",
            CoreObservation::Single(_) => "single",
            CoreObservation::ManchesterPair => "pair",
            CoreObservation::UnresolvedCollision => "collision",
        }
    }

    /// The decoded bit of a `single` observation, else `None`.
    #[getter]
    fn bit(&self) -> Option<bool> {
        match self.0 {
            CoreObservation::Single(b) => Some(b),
            _ => None,
        }
    }

    fn __repr__(&self) -> String {
        match self.0 {
            CoreObservation::Single(b) => format!("SlotObservation(single, {})", u8::from(b)),
            _ => format!("SlotObservation({})", self.kind()),
        }
    }
}

#[pyfunction]
fn transmit_slot(responses: Vec<bool>) -> PySlotObservation {
    PySlotObservation(channel::transmit_slot(&responses))
}

/// Presence of both members of a pair slot.
#[pyfunction]
fn decode_pair(
    obs: &PySlotObservation,
    expected_a: bool,
    expected_b: bool,
) -> PyResult<(bool, bool)> {
    channel::decode_pair(obs.0, expected_a, expected_b).map_err(err)
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Upper-tail quantile `t` with `P(T > t) = p`.
#[pyfunction]
fn student_t_quantile(p: f64, df: u32) -> PyResult<f64> {
    stats::student_t_quantile(p, df).map_err(err)
}

#[pyfunction]
fn stopping_sample_size(epsilon: f64, delta: f64, alpha: f64) -> PyResult<u64> {
    stats::stopping_sample_size(epsilon, delta, alpha).map_err(err)
}

/// Number of tags a run must verify to meet `(epsilon, delta)`.
#[pyfunction]
fn required_checks(n: usize, alpha: f64, epsilon: f64, delta: f64) -> PyResult<usize> {
    let req = AccuracyRequirement::new(epsilon, delta).map_err(err)?;
    Ok(stats::required_checks(n, alpha, &req))
}

/// Returns `(P01, P10, P11)` for `n` tags hashed into `frame_size` slots.
#[pyfunction]
fn slot_assignment_probs(n: usize, alpha: f64, frame_size: usize) -> PyResult<(f64, f64, f64)> {
    stats::slot_assignment_probs(n, alpha, frame_size).map_err(err)
}

/// Returns `(value, in_range)`.
#[pyfunction]
fn lower_bound_reference(n: usize, epsilon: f64, delta: f64, alpha: f64) -> PyResult<(f64, bool)> {
    let v = stats::lower_bound_reference(n, epsilon, delta, alpha).map_err(err)?;
    Ok((v.value, v.in_range))
}

/// Returns `(value, in_range)`.
#[pyfunction]
fn expected_time_reference(
    algorithm: &str,
    n: usize,
    epsilon: f64,
    delta: f64,
    alpha: f64,
) -> PyResult<(f64, bool)> {
    let a: ReferenceAlgorithm = algorithm.parse().map_err(err)?;
    let v = stats::expected_time_reference(a, n, epsilon, delta, alpha).map_err(err)?;
    Ok((v.value, v.in_range))
}

// ---------------------------------------------------------------------------
// Protocol runs
// ---------------------------------------------------------------------------

/// A generated inventory and its ground truth.
#[pyclass(name = "Instance", frozen)]
struct PyInstance(harness::Instance);

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: usize, alpha: f64, trial_seed: u64) -> PyResult<Self> {
        harness::Instance::generate(n, alpha, trial_seed)
            .map(PyInstance)
            .map_err(err)
    }

    #[getter]
    fn tags(&self) -> Vec<u128> {
        self.0.inventory.tags().iter().map(|t| t.value()).collect()
    }

    #[getter]
    fn pseudo_ids(&self) -> Vec<u64> {
        self.0.inventory.pseudo_ids().to_vec()
    }

    #[getter]
    fn pseudo_id_bits(&self) -> u32 {
        self.0.inventory.pseudo_id_bits()
    }

    /// Sorted indices of the missing tags.
    #[getter]
    fn missing(&self) -> Vec<usize> {
        self.0.truth.missing().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.inventory.len()
    }
}

/// Output of one protocol run.
#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    reported_missing: Vec<usize>,
    elapsed_s: f64,
    short_slots: u64,
    long_slots: u64,
    tagid_slots: u64,
    reader_bits: u64,
    tag_bits: u64,
    tags_checked: usize,
    observations: u64,
    ratio: f64,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(reported={}, elapsed_s={}, ratio={})",
            self.reported_missing.len(),
            self.elapsed_s,
            self.ratio
        )
    }
}

/// Runs one protocol on an instance. `epsilon = 0` selects exhaustive mode.
#[pyfunction]
#[pyo3(signature = (algorithm, instance, epsilon, delta, expected_alpha=None, rho=None))]
fn run_protocol(
    py: Python<'_>,
    algorithm: &str,
    instance: &PyInstance,
    epsilon: f64,
    delta: f64,
    expected_alpha: Option<f64>,
    rho: Option<f64>,
) -> PyResult<PyRunResult> {
    let alg = parse_algorithm(algorithm)?;
    let req = AccuracyRequirement::new(epsilon, delta).map_err(err)?;
    let cfg = protocol_config(rho)?;
    let inst = &instance.0;
    let alpha = expected_alpha.unwrap_or_else(|| inst.truth.alpha());
    let res = py
        .detach(|| harness::run_algorithm(alg, inst, &req, alpha, &cfg))
        .map_err(err)?;
    let ratio = mti_core::accuracy_ratio(&inst.truth, &res);
    Ok(PyRunResult {
        elapsed_s: res.elapsed_s,
        short_slots: res.ledger.short_slots,
        long_slots: res.ledger.long_slots,
        tagid_slots: res.ledger.tagid_slots,
        reader_bits: res.ledger.reader_bits,
        tag_bits: res.ledger.tag_bits,
        tags_checked: res.tags_checked,
        observations: res.observations,
        reported_missing: res.reported_missing,
        ratio,
    })
}

/// One row of a trial batch.
#[pyclass(name = "TrialRecord", frozen, from_py_object)]
#[derive(Clone)]
struct PyTrialRecord(harness::TrialRecord);

#[pymethods]
impl PyTrialRecord {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.0.algorithm.name()
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn trial(&self) -> u64 {
        self.0.trial
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }
    #[getter]
    fn time_s(&self) -> f64 {
        self.0.time_s
    }
    #[getter]
    fn missing_total(&self) -> usize {
        self.0.missing_total
    }
    #[getter]
    fn identified_true(&self) -> usize {
        self.0.identified_true
    }
    #[getter]
    fn identified_false(&self) -> usize {
        self.0.identified_false
    }
    #[getter]
    fn ratio(&self) -> f64 {
        self.0.ratio
    }
    #[getter]
    fn requirement_met(&self) -> bool {
        self.0.requirement_met
    }

    fn __repr__(&self) -> String {
        format!(
            "TrialRecord({} n={} trial={} time_s={} ratio={})",
            self.0.algorithm, self.0.n, self.0.trial, self.0.time_s, self.0.ratio
        )
    }
}

#[pyfunction]
#[pyo3(signature = (algorithm, n, alpha, epsilon, delta, trials, seed, rho=None))]
#[allow(clippy::too_many_arguments)]
fn run_trials(
    py: Python<'_>,
    algorithm: &str,
    n: usize,
    alpha: f64,
    epsilon: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    rho: Option<f64>,
) -> PyResult<Vec<PyTrialRecord>> {
    let alg = parse_algorithm(algorithm)?;
    let cfg = protocol_config(rho)?;
    let cell = CellSpec {
        n,
        alpha,
        epsilon,
        delta,
        trials,
        base_seed: seed,
    };
    let records = py
        .detach(|| harness::run_trials(alg, &cell, &cfg))
        .map_err(err)?;
    Ok(records.into_iter().map(PyTrialRecord).collect())
}

/// Returns `(passed, success_fraction)` for at least 30 records.
#[pyfunction]
fn verify_requirement(
    records: Vec<PyTrialRecord>,
    epsilon: f64,
    delta: f64,
) -> PyResult<(bool, f64)> {
    let records: Vec<harness::TrialRecord> = records.into_iter().map(|r| r.0).collect();
    harness::verify_requirement(&records, epsilon, delta).map_err(err)
}

/// Runs the cartesian grid and returns the trial (or summary) CSV text.
#[pyfunction]
#[pyo3(signature = (algorithms, ns, alphas, epsilons, deltas, trials, seed, summary=false, rho=None))]
#[allow(clippy::too_many_arguments)]
fn sweep_csv(
    py: Python<'_>,
    algorithms: Vec<String>,
    ns: Vec<usize>,
    alphas: Vec<f64>,
    epsilons: Vec<f64>,
    deltas: Vec<f64>,
    trials: u64,
    seed: u64,
    summary: bool,
    rho: Option<f64>,
) -> PyResult<String> {
    let algorithms = algorithms
        .iter()
        .map(|a| parse_algorithm(a))
        .collect::<PyResult<Vec<_>>>()?;
    let spec = SweepSpec {
        algorithms,
        epsilons,
        deltas,
        alphas,
        ns,
        trials,
        base_seed: seed,
    };
    let cfg = protocol_config(rho)?;
    let out = py.detach(|| harness::sweep(&spec, &cfg)).map_err(err)?;
    Ok(if summary {
        out.summary_csv()
    } else {
        out.records_csv()
    })
}

/// Returns `(ok, failure)` where `failure` names the first failing property.
#[pyfunction]
fn selftest(py: Python<'_>) -> (bool, Option<String>) {
    let report = py.detach(|| run_selftest(&Probes::default()));
    let failure = report
        .failure
        .as_ref()
        .map(|(p, why)| format!("{}: {why}", p.name()));
    (report.ok(), failure)
}

#[pymodule]
fn mti(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add(
        "ALGORITHMS",
        Algorithm::ALL.iter().map(|a| a.name()).collect::<Vec<_>>(),
    )?;
    m.add_class::<PySlotObservation>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyTrialRecord>()?;
    m.add_function(wrap_pyfunction!(finalize64, m)?)?;
    m.add_function(wrap_pyfunction!(keyed_hash, m)?)?;
    m.add_function(wrap_pyfunction!(make_pseudo_ids, m)?)?;
    m.add_function(wrap_pyfunction!(transmit_slot, m)?)?;
    m.add_function(wrap_pyfunction!(decode_pair, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(stopping_sample_size, m)?)?;
    m.add_function(wrap_pyfunction!(required_checks, m)?)?;
    m.add_function(wrap_pyfunction!(slot_assignment_probs, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_reference, m)?)?;
    m.add_function(wrap_pyfunction!(expected_time_reference, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(verify_requirement, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
