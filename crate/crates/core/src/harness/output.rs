//! CSV serialization of trial records and cell summaries.

use std::io;

use super::{CellSummary, TrialRecord};

pub const TRIAL_HEADER: &str = "algorithm,n,alpha,epsilon,delta,trial,seed,slots_short,slots_long,slots_tagid,reader_bits,tag_bits,time_s,missing_total,identified_true,identified_false,ratio,requirement_met";

pub const SUMMARY_HEADER: &str =
    "algorithm,n,alpha,epsilon,delta,trials,mean_time_s,success_fraction,requirement_ok";

/// Shortest decimal form of `x` after rounding to 9 significant digits.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("scientific float parses");
    format!("{rounded}")
}

fn trial_fields(r: &TrialRecord) -> [String; 18] {
    [
        r.algorithm.name().to_string(),
        r.n.to_string(),
        format_float(r.alpha),
        format_float(r.epsilon),
        format_float(r.delta),
        r.trial.to_string(),
        r.seed.to_string(),
        r.slots_short.to_string(),
        r.slots_long.to_string(),
        r.slots_tagid.to_string(),
        r.reader_bits.to_string(),
        r.tag_bits.to_string(),
        format_float(r.time_s),
        r.missing_total.to_string(),
        r.identified_true.to_string(),
        r.identified_false.to_string(),
        format_float(r.ratio),
        r.requirement_met.to_string(),
    ]
}

fn summary_fields(s: &CellSummary) -> [String; 9] {
    [
        s.algorithm.name().to_string(),
        s.n.to_string(),
        format_float(s.alpha),
        format_float(s.epsilon),
        format_float(s.delta),
        s.trials.to_string(),
        format_float(s.mean_time_s),
        format_float(s.success_fraction),
        s.requirement_ok.to_string(),
    ]
}

fn write_table<W: io::Write, const K: usize>(
    out: W,
    header: &str,
    rows: impl Iterator<Item = [String; K]>,
) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header.split(','))?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_trial_csv<W: io::Write>(out: W, records: &[TrialRecord]) -> io::Result<()> {
    write_table(out, TRIAL_HEADER, records.iter().map(trial_fields))
}

pub fn write_summary_csv<W: io::Write>(out: W, summaries: &[CellSummary]) -> io::Result<()> {
    write_table(out, SUMMARY_HEADER, summaries.iter().map(summary_fields))
}

pub fn trial_csv(records: &[TrialRecord]) -> String {
    let mut buf = Vec::new();
    write_trial_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

pub fn summary_csv(summaries: &[CellSummary]) -> String {
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, summaries).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}
