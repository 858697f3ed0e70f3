//! Built-in consistency checks run by `mti selftest`.
//!
//! The decoder and the quantile function are passed in as probes so that a
//! deliberately broken implementation can be substituted and shown to fail.

use std::fmt;

use crate::channel::{decode_pair, transmit_slot, SlotObservation};
use crate::error::Result;
use crate::harness::{run_algorithm, trial_seed, Algorithm, Instance, ProtocolConfig};
use crate::hashing::Prng;
use crate::model::AccuracyRequirement;
use crate::stats::student_t_quantile;

pub type DecodeFn = fn(SlotObservation, bool, bool) -> Result<(bool, bool)>;
pub type QuantileFn = fn(f64, u32) -> Result<f64>;

/// Upper-tail Student-t quantiles `(p, df, t)` with `P(T > t) = p`,
/// obtained by numerical integration of the density.
pub const QUANTILE_TABLE: [(f64, u32, f64); 20] = [
    (0.01, 1, 31.8205159538),
    (0.01, 8, 2.89645944771),
    (0.01, 30, 2.45726154240),
    (0.01, 98, 2.36500241049),
    (0.01, 1000, 2.33008267476),
    (0.05, 1, 6.31375151480),
    (0.05, 8, 1.85954803752),
    (0.05, 30, 1.69726088659),
    (0.05, 98, 1.66055121704),
    (0.05, 1000, 1.64637881729),
    (0.1, 1, 3.07768353721),
    (0.1, 8, 1.39681530974),
    (0.1, 30, 1.31041502539),
    (0.1, 98, 1.29024990388),
    (0.1, 1000, 1.28239872146),
    (0.25, 1, 1.0),
    (0.25, 8, 0.706386612645),
    (0.25, 30, 0.682755693321),
    (0.25, 98, 0.677001438777),
    (0.25, 1000, 0.674735164607),
];

/// Absolute tolerance of the quantile check.
pub const QUANTILE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    ManchesterTruthTable,
    QuantileTable,
    ExhaustiveEquivalence,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::ManchesterTruthTable => "manchester-truth-table",
            Property::QuantileTable => "student-t-quantile",
            Property::ExhaustiveEquivalence => "exhaustive-equivalence",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Implementations under test.
#[derive(Clone, Copy)]
pub struct Probes {
    pub decode_pair: DecodeFn,
    pub quantile: QuantileFn,
}

impl Default for Probes {
    fn default() -> Self {
        Probes {
            decode_pair,
            quantile: student_t_quantile,
        }
    }
}

/// A decoder that reports the two tags the wrong way round.
pub fn swapped_decode_pair(obs: SlotObservation, a: bool, b: bool) -> Result<(bool, bool)> {
    decode_pair(obs, a, b).map(|(x, y)| (y, x))
}

/// A quantile function with its sign flipped.
pub fn negated_quantile(p: f64, df: u32) -> Result<f64> {
    student_t_quantile(p, df).map(|t| -t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub passed: Vec<Property>,
    /// First failing property and what went wrong. Checks stop there.
    pub failure: Option<(Property, String)>,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

type Check<'a> = &'a dyn Fn() -> std::result::Result<(), String>;

pub fn run_selftest(probes: &Probes) -> SelftestReport {
    let checks: [(Property, Check); 3] = [
        (Property::ManchesterTruthTable, &|| {
            check_manchester(probes.decode_pair)
        }),
        (Property::QuantileTable, &|| {
            check_quantiles(probes.quantile)
        }),
        (Property::ExhaustiveEquivalence, &check_exhaustive),
    ];
    let mut passed = Vec::new();
    for (property, check) in checks {
        if let Err(msg) = check() {
            return SelftestReport {
                passed,
                failure: Some((property, msg)),
            };
        }
        passed.push(property);
    }
    SelftestReport {
        passed,
        failure: None,
    }
}

/// Every presence combination of a pair, for both assignments of distinct
/// reply bits, decoded back to the presence that produced it.
pub fn check_manchester(decode: DecodeFn) -> std::result::Result<(), String> {
    for (bit_a, bit_b) in [(false, true), (true, false)] {
        for (a_present, b_present) in [(false, false), (true, false), (false, true), (true, true)] {
            let mut responses = Vec::new();
            if a_present {
                responses.push(bit_a);
            }
            if b_present {
                responses.push(bit_b);
            }
            let got = decode(transmit_slot(&responses), bit_a, bit_b).map_err(|e| e.to_string())?;
            if got != (a_present, b_present) {
                return Err(format!(
                    "bits ({bit_a}, {bit_b}), presence ({a_present}, {b_present}) decoded as {got:?}"
                ));
            }
        }
    }
    Ok(())
}

pub fn check_quantiles(quantile: QuantileFn) -> std::result::Result<(), String> {
    for (p, df, expected) in QUANTILE_TABLE {
        let got = quantile(p, df).map_err(|e| e.to_string())?;
        if (got - expected).abs() > QUANTILE_TOLERANCE {
            return Err(format!(
                "t quantile p={p} df={df}: got {got}, expected {expected}"
            ));
        }
    }
    Ok(())
}

/// Every protocol in exhaustive mode reports exactly the missing set on
/// small random instances.
pub fn check_exhaustive() -> std::result::Result<(), String> {
    let config = ProtocolConfig::default();
    let requirement = AccuracyRequirement::exhaustive();
    let mut rng = Prng::new(0x5e1f_7e57);
    for i in 0..40u64 {
        let n = 16 + rng.next_below(241);
        let alpha = [0.0, 0.01, 0.1, 0.5, 1.0][i as usize % 5];
        let instance =
            Instance::generate(n, alpha, trial_seed(0x5e1f, i)).map_err(|e| e.to_string())?;
        for alg in Algorithm::ALL {
            let res = run_algorithm(alg, &instance, &requirement, alpha, &config)
                .map_err(|e| e.to_string())?;
            if res.reported_missing != instance.truth.missing() {
                return Err(format!(
                    "{alg} on instance {i} (n={n}, alpha={alpha}) is not exact"
                ));
            }
        }
    }
    Ok(())
}
