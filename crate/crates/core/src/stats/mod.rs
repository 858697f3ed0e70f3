//! Numerical statistics: incomplete beta, Student-t quantiles, stopping rules
//! and reference complexity curves. Logarithms are base 2 unless a function
//! says otherwise.

mod reference;
mod sampling;
mod special;
mod student_t;

pub use reference::{
    epsilon_floor, expected_time_reference, lower_bound_reference, ReferenceAlgorithm,
    ReferenceValue,
};
pub use sampling::{
    hypergeometric_upper_tail, pm_probability, required_checks, slot_assignment_probs,
    stopping_sample_size, stopping_sample_size_real, StoppingRule,
};
pub use special::{ln_beta, ln_choose, ln_gamma, regularized_incomplete_beta};
pub use student_t::{student_t_quantile, student_t_upper_tail};

/// Ordinary least squares of `y` on `x`: `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}
