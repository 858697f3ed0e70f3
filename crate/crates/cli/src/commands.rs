//! Subcommand bodies. Each returns the text destined for the output sink.

use std::fmt::Write as _;

use mti_core::harness::{
    format_float, summary_csv, sweep, trial_csv, CellSummary, ProtocolConfig, SweepOutput,
    SweepSpec,
};
use mti_core::selftest::{negated_quantile, run_selftest, swapped_decode_pair, Probes};
use mti_core::stats::{expected_time_reference, lower_bound_reference, ReferenceAlgorithm};

use crate::settings::{Fault, Format, Settings};
use crate::CliError;

fn protocol_config(s: &Settings) -> ProtocolConfig {
    let mut cfg = ProtocolConfig::default();
    if let Some(rho) = s.rho {
        cfg.baseline.rho_hat = rho;
    }
    cfg
}

fn spec(s: &Settings) -> SweepSpec {
    SweepSpec {
        algorithms: s.algorithms.clone(),
        epsilons: s.epsilons.clone(),
        deltas: s.deltas.clone(),
        alphas: s.alphas.clone(),
        ns: s.ns.clone(),
        trials: s.trials,
        base_seed: s.seed,
    }
}

// ---------------------------------------------------------------------------
// run / sweep
// ---------------------------------------------------------------------------

/// A single cell. Multiple algorithms are allowed; grids are not.
pub fn run(s: &Settings) -> Result<String, CliError> {
    for (name, len) in [
        ("n", s.ns.len()),
        ("alpha", s.alphas.len()),
        ("epsilon", s.epsilons.len()),
        ("delta", s.deltas.len()),
    ] {
        if len != 1 {
            return Err(CliError::Usage(format!(
                "{name}: run takes one value, use sweep for grids"
            )));
        }
    }
    execute(s)
}

pub fn sweep_cmd(s: &Settings) -> Result<String, CliError> {
    execute(s)
}

fn execute(s: &Settings) -> Result<String, CliError> {
    let out = sweep(&spec(s), &protocol_config(s)).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(match s.format {
        Format::Csv if s.summary => summary_csv(&out.summaries),
        Format::Csv => trial_csv(&out.records),
        Format::Pretty => pretty_run(s, &out),
    })
}

fn pretty_run(s: &Settings, out: &SweepOutput) -> String {
    let mut text = String::new();
    for note in &s.out_of_range {
        let _ = writeln!(text, "note: {note}; bounds do not apply");
    }
    let _ = writeln!(
        text,
        "{:<8} {:>8} {:>7} {:>8} {:>6} {:>6} {:>13} {:>8} {:>5}",
        "algo", "n", "alpha", "epsilon", "delta", "trials", "mean time (s)", "success", "ok"
    );
    for c in &out.summaries {
        let _ = writeln!(text, "{}", pretty_summary(c));
    }
    // Per-trial detail for small runs only.
    if !s.summary && out.records.len() <= 50 {
        let _ = writeln!(text);
        for r in &out.records {
            let _ = writeln!(
                text,
                "{} trial {}: {} s, found {}/{} missing, ratio {}",
                r.algorithm,
                r.trial,
                format_float(r.time_s),
                r.identified_true,
                r.missing_total,
                format_float(r.ratio)
            );
        }
    }
    text
}

fn pretty_summary(c: &CellSummary) -> String {
    format!(
        "{:<8} {:>8} {:>7} {:>8} {:>6} {:>6} {:>13.4} {:>8.3} {:>5}",
        c.algorithm.name(),
        c.n,
        c.alpha,
        c.epsilon,
        c.delta,
        c.trials,
        c.mean_time_s,
        c.success_fraction,
        if c.requirement_ok { "yes" } else { "no" }
    )
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

const NA: &str = "NA";

/// Reference curves for every grid cell. Cells where a formula is undefined
/// are marked rather than rejected.
pub fn bounds(s: &Settings) -> Result<String, CliError> {
    let mut header = vec!["n", "alpha", "epsilon", "delta", "in_range", "lower_bound"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend(
        ReferenceAlgorithm::ALL
            .iter()
            .map(|a| format!("expected_{}", a.name())),
    );

    let mut rows = Vec::new();
    for &n in &s.ns {
        for &alpha in &s.alphas {
            for &epsilon in &s.epsilons {
                for &delta in &s.deltas {
                    let lower = lower_bound_reference(n, epsilon, delta, alpha);
                    let in_range = lower.as_ref().map(|v| v.in_range).unwrap_or(false);
                    let mut row = vec![
                        n.to_string(),
                        format_float(alpha),
                        format_float(epsilon),
                        format_float(delta),
                        in_range.to_string(),
                        lower
                            .map(|v| format_float(v.value))
                            .unwrap_or_else(|_| NA.into()),
                    ];
                    for a in ReferenceAlgorithm::ALL {
                        row.push(
                            expected_time_reference(a, n, epsilon, delta, alpha)
                                .map(|v| format_float(v.value))
                                .unwrap_or_else(|_| NA.into()),
                        );
                    }
                    rows.push(row);
                }
            }
        }
    }

    let mut text = String::new();
    match s.format {
        Format::Csv => {
            let _ = writeln!(text, "{}", header.join(","));
            for row in rows {
                let _ = writeln!(text, "{}", row.join(","));
            }
        }
        Format::Pretty => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    rows.iter()
                        .map(|r| r[i].len())
                        .chain([header[i].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            for row in std::iter::once(&header).chain(rows.iter()) {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect();
                let _ = writeln!(text, "{}", cells.join("  ").trim_end());
            }
        }
    }
    Ok(text)
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

/// Returns the report text and whether every property held.
pub fn selftest(s: &Settings) -> (String, bool) {
    let mut probes = Probes::default();
    match s.inject_fault {
        Some(Fault::Manchester) => probes.decode_pair = swapped_decode_pair,
        Some(Fault::Quantile) => probes.quantile = negated_quantile,
        None => {}
    }
    let report = run_selftest(&probes);
    let mut text = String::new();
    for p in &report.passed {
        let _ = writeln!(text, "ok    {}", p.name());
    }
    if let Some((p, why)) = &report.failure {
        let _ = writeln!(text, "FAIL  {}: {why}", p.name());
    }
    (text, report.ok())
}
