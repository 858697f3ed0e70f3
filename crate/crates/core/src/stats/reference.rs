//! Order-of-growth reference curves with every hidden constant set to 1.
//!
//! These are plotting aids for comparing trends, not absolute predictions of
//! simulated seconds.

use std::fmt;
use std::str::FromStr;

use crate::error::{MtiError, Result};

/// Protocol families with a known expected-time order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceAlgorithm {
    IipThp,
    PMti,
    Mmti,
    Sfmti,
    ProTaR,
    Pcmti,
    Cpt,
}

impl ReferenceAlgorithm {
    pub const ALL: [ReferenceAlgorithm; 7] = [
        ReferenceAlgorithm::IipThp,
        ReferenceAlgorithm::PMti,
        ReferenceAlgorithm::Mmti,
        ReferenceAlgorithm::Sfmti,
        ReferenceAlgorithm::ProTaR,
        ReferenceAlgorithm::Pcmti,
        ReferenceAlgorithm::Cpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceAlgorithm::IipThp => "iip-thp",
            ReferenceAlgorithm::PMti => "p-mti",
            ReferenceAlgorithm::Mmti => "mmti",
            ReferenceAlgorithm::Sfmti => "sfmti",
            ReferenceAlgorithm::ProTaR => "protar",
            ReferenceAlgorithm::Pcmti => "pcmti",
            ReferenceAlgorithm::Cpt => "cpt",
        }
    }
}

impl fmt::Display for ReferenceAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceAlgorithm {
    type Err = MtiError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|a| {
                a.name() == key
                    || (key == "iip" || key == "thp") && *a == ReferenceAlgorithm::IipThp
            })
            .ok_or_else(|| MtiError::UnknownAlgorithm(s.to_string()))
    }
}

/// A reference value and whether its inputs fall inside the window where the
/// bound is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub value: f64,
    pub in_range: bool,
}

/// Smallest epsilon for which the sublinear bound applies.
pub fn epsilon_floor(n_tags: usize, delta: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * (1.0 - delta) / (n_tags as f64).sqrt()
}

fn check_common(n_tags: usize, epsilon: f64, delta: f64, alpha: f64) -> Result<()> {
    if n_tags < 2 {
        return Err(MtiError::invalid("n", "reference curves need n >= 2"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MtiError::invalid(
            "epsilon",
            format!("{epsilon} must be > 0"),
        ));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(MtiError::invalid("delta", format!("{delta} not in [0, 1)")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MtiError::invalid("alpha", format!("{alpha} not in [0, 1]")));
    }
    Ok(())
}

fn in_window(n_tags: usize, epsilon: f64, delta: f64, alpha: f64) -> bool {
    epsilon >= epsilon_floor(n_tags, delta, alpha) && epsilon <= 0.5 && delta < 1.0 / 3.0
}

/// `N / log N + (1-δ)²(1-α)² / (ε² log((1-δ)(1-α)/ε))`, logs base 2.
///
/// Below the epsilon window the bound degenerates to `N` (polling is
/// optimal there).
pub fn lower_bound_reference(
    n_tags: usize,
    epsilon: f64,
    delta: f64,
    alpha: f64,
) -> Result<ReferenceValue> {
    check_common(n_tags, epsilon, delta, alpha)?;
    let n = n_tags as f64;
    let in_range = in_window(n_tags, epsilon, delta, alpha);
    if epsilon < epsilon_floor(n_tags, delta, alpha) {
        return Ok(ReferenceValue { value: n, in_range });
    }
    let scale = (1.0 - delta) * (1.0 - alpha);
    let second = if scale == 0.0 {
        0.0
    } else {
        let arg = scale / epsilon;
        if arg <= 1.0 {
            return Err(MtiError::invalid(
                "epsilon",
                format!("log argument (1-δ)(1-α)/ε = {arg} must exceed 1"),
            ));
        }
        scale * scale / (epsilon * epsilon * arg.log2())
    };
    Ok(ReferenceValue {
        value: n / n.log2() + second,
        in_range,
    })
}

/// Expected-time order for one protocol family: a population term plus
/// `(1-α)²(1-δ)²/ε²`.
pub fn expected_time_reference(
    algorithm: ReferenceAlgorithm,
    n_tags: usize,
    epsilon: f64,
    delta: f64,
    alpha: f64,
) -> Result<ReferenceValue> {
    check_common(n_tags, epsilon, delta, alpha)?;
    let n = n_tags as f64;
    let first = match algorithm {
        ReferenceAlgorithm::IipThp
        | ReferenceAlgorithm::Sfmti
        | ReferenceAlgorithm::ProTaR
        | ReferenceAlgorithm::Pcmti => n,
        ReferenceAlgorithm::PMti | ReferenceAlgorithm::Mmti => n * n.log2(),
        ReferenceAlgorithm::Cpt => {
            let lg = n.log2();
            n * lg.log2() / lg
        }
    };
    let s = (1.0 - alpha) * (1.0 - delta);
    Ok(ReferenceValue {
        value: first + s * s / (epsilon * epsilon),
        in_range: in_window(n_tags, epsilon, delta, alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lower_bound_examples() {
        let v = lower_bound_reference(1024, 0.1, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(v.value, 102.4 + 1.0 / (0.01 * 10f64.log2()), epsilon = 1e-9);
        assert_abs_diff_eq!(v.value, 132.5, epsilon = 0.01);
        assert!(v.in_range);

        let all_missing = lower_bound_reference(1024, 0.1, 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(all_missing.value, 102.4, epsilon = 1e-12);

        let tiny_eps = lower_bound_reference(1024, 0.001, 0.0, 0.0).unwrap();
        assert_eq!(tiny_eps.value, 1024.0);
        assert!(!tiny_eps.in_range);

        assert!(lower_bound_reference(1024, 0.5, 0.3, 0.4).is_err());
    }

    #[test]
    fn expected_time_examples() {
        let v =
            expected_time_reference(ReferenceAlgorithm::Pcmti, 50_000, 0.01, 0.1, 0.01).unwrap();
        assert_abs_diff_eq!(v.value, 50_000.0 + 0.81 * 0.9801 * 1e4, epsilon = 1e-6);
        assert_abs_diff_eq!(v.value, 57_938.81, epsilon = 1e-6);

        let mmti =
            expected_time_reference(ReferenceAlgorithm::Mmti, 1 << 16, 0.5, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(mmti.value, 1_048_576.0, epsilon = 1e-6);

        for n in [3usize, 16, 1000, 1 << 20] {
            let lg = (n as f64).log2();
            assert!(lg.log2() / lg < 1.0);
        }
        assert!(expected_time_reference(ReferenceAlgorithm::Cpt, 100, 0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn names_round_trip() {
        for a in ReferenceAlgorithm::ALL {
            assert_eq!(a.name().parse::<ReferenceAlgorithm>().unwrap(), a);
        }
        assert_eq!(
            "IIP".parse::<ReferenceAlgorithm>().unwrap(),
            ReferenceAlgorithm::IipThp
        );
        assert!("foo".parse::<ReferenceAlgorithm>().is_err());
    }
}
