use super::special::regularized_incomplete_beta;
use crate::error::{MtiError, Result};

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn student_t_upper_tail(t: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df <= 0.0 {
        return Err(MtiError::invalid("df", format!("{df} must be > 0")));
    }
    if t.is_nan() {
        return Err(MtiError::invalid("t", "NaN"));
    }
    let x = df / (df + t * t);
    let half = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)?;
    Ok(if t >= 0.0 { half } else { 1.0 - half })
}

/// Upper-tail quantile: the `t` with `P(T > t) = p`.
///
/// Bisection on the CDF until the bracket is narrower than 1e-9.
pub fn student_t_quantile(p: f64, df: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MtiError::invalid("p", format!("{p} not in (0, 1)")));
    }
    if df == 0 {
        return Err(MtiError::invalid("df", "must be >= 1"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-student_t_quantile(1.0 - p, df)?);
    }
    let df = f64::from(df);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while student_t_upper_tail(hi, df)? > p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(MtiError::invalid("p", "quantile overflows"));
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if student_t_upper_tail(mid, df)? > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn median_is_zero() {
        for df in [1, 2, 8, 1000] {
            assert_eq!(student_t_quantile(0.5, df).unwrap(), 0.0);
        }
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is Cauchy: t = tan(pi * (0.5 - p)).
        for p in [0.01, 0.1, 0.3] {
            let want = (std::f64::consts::PI * (0.5 - p)).tan();
            assert_abs_diff_eq!(student_t_quantile(p, 1).unwrap(), want, epsilon = 1e-7);
        }
    }

    #[test]
    fn two_df_closed_form() {
        // df = 2: P(T > t) = 1/2 - t / (2 sqrt(t^2 + 2)).
        for t in [0.3, 1.0, 4.0] {
            let want = 0.5 - t / (2.0 * (t * t + 2.0f64).sqrt());
            assert_abs_diff_eq!(student_t_upper_tail(t, 2.0).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn lower_tail_is_negated() {
        let a = student_t_quantile(0.1, 8).unwrap();
        let b = student_t_quantile(0.9, 8).unwrap();
        assert_abs_diff_eq!(a, -b, epsilon = 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(student_t_quantile(0.0, 3).is_err());
        assert!(student_t_quantile(1.0, 3).is_err());
        assert!(student_t_quantile(0.2, 0).is_err());
    }
}
