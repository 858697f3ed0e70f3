//! Stopping rules and sampling budgets.

use super::special::ln_choose;
use super::student_t::student_t_quantile;
use crate::error::{MtiError, Result};
use crate::model::{missing_count, AccuracyRequirement};

/// Slot-observation stopping rule for framed protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    /// `ceil(1/alpha - 1)`.
    pub r: u64,
    /// Required number of slot observations.
    pub n_min: u64,
}

impl StoppingRule {
    pub fn new(epsilon: f64, delta: f64, alpha: f64) -> Result<Self> {
        let real = stopping_sample_size_real(epsilon, delta, alpha)?;
        Ok(StoppingRule {
            epsilon,
            delta,
            alpha,
            r: trial_count(alpha),
            n_min: real_to_count(real),
        })
    }
}

fn trial_count(alpha: f64) -> u64 {
    // Guard 1/0.1 - 1 = 9.000000000000002 style representation error.
    (1.0 / alpha - 1.0 - 1e-9).ceil().max(0.0) as u64
}

fn real_to_count(n: f64) -> u64 {
    if n.is_infinite() || n >= u64::MAX as f64 {
        u64::MAX
    } else {
        (n - 1e-9).ceil().max(1.0) as u64
    }
}

/// Unrounded stopping size `t_delta(r-1)^2 / (r eps^2) * (1/alpha - 1)`.
///
/// `delta = 0` yields infinity.
pub fn stopping_sample_size_real(epsilon: f64, delta: f64, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(MtiError::invalid(
            "epsilon",
            format!("{epsilon} not in (0, 1/2]"),
        ));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(MtiError::invalid("delta", format!("{delta} not in [0, 1)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MtiError::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let r = trial_count(alpha);
    if r < 2 {
        return Err(MtiError::invalid(
            "alpha",
            format!("{alpha} leaves r = {r} trials; the t quantile needs r >= 2"),
        ));
    }
    if delta == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = student_t_quantile(delta, (r - 1) as u32)?;
    Ok(t * t / (r as f64 * epsilon * epsilon) * (1.0 / alpha - 1.0))
}

/// Minimum number of slot observations before a framed protocol may stop.
pub fn stopping_sample_size(epsilon: f64, delta: f64, alpha: f64) -> Result<u64> {
    stopping_sample_size_real(epsilon, delta, alpha).map(real_to_count)
}

/// Per-slot probabilities `(P01, P10, P11)` that a slot holds exactly one
/// missing tag, one missing and one present tag, or two missing tags, when
/// `n_tags` tags hash uniformly into `f` slots.
pub fn slot_assignment_probs(n_tags: usize, alpha: f64, f: usize) -> Result<(f64, f64, f64)> {
    if f == 0 {
        return Err(MtiError::invalid("f", "frame length must be >= 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MtiError::invalid("alpha", format!("{alpha} not in [0, 1]")));
    }
    let n = n_tags as f64;
    let missing = missing_count(n_tags, alpha) as f64;
    let present = n - missing;
    let inv_f = 1.0 / f as f64;
    let stay_out = 1.0 - inv_f;
    let none_else_1 = if n_tags >= 1 {
        stay_out.powf(n - 1.0)
    } else {
        0.0
    };
    let none_else_2 = if n_tags >= 2 {
        stay_out.powf(n - 2.0)
    } else {
        0.0
    };
    let p01 = missing * inv_f * none_else_1;
    let p10 = missing * present * inv_f * inv_f * none_else_2;
    let p11 = missing * (missing - 1.0).max(0.0) / 2.0 * inv_f * inv_f * none_else_2;
    Ok((p01, p10, p11))
}

/// Large-frame limit `alpha rho e^{-rho} (1 + rho/2)`.
pub fn pm_probability(alpha: f64, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(MtiError::invalid("rho", format!("{rho} must be > 0")));
    }
    Ok(alpha * rho * (-rho).exp() * (1.0 + rho / 2.0))
}

/// `P(X > a)` for `X ~ Hypergeometric(population, successes, draws)`.
pub fn hypergeometric_upper_tail(population: u64, successes: u64, draws: u64, a: u64) -> f64 {
    debug_assert!(successes <= population && draws <= population);
    let lo = draws.saturating_sub(population - successes);
    let hi = successes.min(draws);
    if a >= hi {
        return 0.0;
    }
    if a < lo {
        return 1.0;
    }
    let ln_total = ln_choose(population, draws);
    let pmf = |x: u64| {
        (ln_choose(successes, x) + ln_choose(population - successes, draws - x) - ln_total).exp()
    };
    // Sum the shorter side.
    if a - lo <= hi - a {
        let cdf: f64 = (lo..=a).map(pmf).sum();
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let tail: f64 = (a + 1..=hi).map(pmf).sum();
        tail.clamp(0.0, 1.0)
    }
}

/// Smallest number of tags to check, chosen independently of which tags are
/// missing, so that the requirement holds.
///
/// With `m = floor(expected_alpha * n)` missing tags the unchecked remainder
/// of size `u` hides `Hypergeometric(n, m, u)` of them. The budget is the
/// smallest `k` with `P(more than floor(eps m) hidden) <= delta`, floored by
/// the slot-observation stopping size when that rule is defined. Exhaustive
/// requirements and `m = 0` return `n`.
pub fn required_checks(n: usize, expected_alpha: f64, requirement: &AccuracyRequirement) -> usize {
    let m = missing_count(n, expected_alpha).min(n) as u64;
    if requirement.is_exhaustive() || m == 0 {
        return n;
    }
    let allowed = ((requirement.epsilon * m as f64) + 1e-9).floor() as u64;
    let n64 = n as u64;
    let fails = |checked: u64| {
        hypergeometric_upper_tail(n64, m, n64 - checked, allowed) > requirement.delta
    };
    // fails() is nonincreasing in the number of checks and false at n.
    let (mut lo, mut hi) = (0u64, n64);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fails(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let floor = stopping_sample_size(requirement.epsilon, requirement.delta, expected_alpha)
        .map(|s| s.min(n64))
        .unwrap_or(0);
    lo.max(floor) as usize
}
