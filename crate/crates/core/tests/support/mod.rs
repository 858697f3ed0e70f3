//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical code; every value is
//! recomputed from first principles by a different method.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

// ---------------------------------------------------------------------------
// Student-t by quadrature
// ---------------------------------------------------------------------------

/// Composite Simpson rule on `[a, b]` with `intervals` (even) pieces.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `P(T > t)` for Student-t with `df` degrees of freedom.
///
/// Substituting `x = sqrt(df) tan(theta)` turns the density into
/// `cos(theta)^(df-1)` on `(-pi/2, pi/2)`, which is bounded and smooth, so
/// plain Simpson integration converges quickly.
pub fn t_upper_tail(t: f64, df: u32) -> f64 {
    let nu = f64::from(df);
    let g = |theta: f64| theta.cos().powf(nu - 1.0);
    let steps = 20_000;
    let total = simpson(g, -FRAC_PI_2, FRAC_PI_2, steps);
    let lower = (t / nu.sqrt()).atan();
    simpson(g, lower, FRAC_PI_2, steps) / total
}

/// Upper-tail quantile by bisection on [`t_upper_tail`].
pub fn t_quantile(p: f64, df: u32) -> f64 {
    assert!(p > 0.0 && p < 0.5);
    let (mut lo, mut hi) = (0.0, 1.0);
    while t_upper_tail(hi, df) > p {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if t_upper_tail(mid, df) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Incomplete beta by quadrature
// ---------------------------------------------------------------------------

/// `I_x(a, b)` for `a, b >= 1/2` by Simpson integration after the
/// substitution `u = sin^2(theta)`, which removes the endpoint singularities.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    let g = |theta: f64| theta.sin().powf(2.0 * a - 1.0) * theta.cos().powf(2.0 * b - 1.0);
    let upper = x.sqrt().asin();
    simpson(g, 0.0, upper, 20_000) / simpson(g, 0.0, FRAC_PI_2, 20_000)
}

// ---------------------------------------------------------------------------
// Hypergeometric by exact rational products
// ---------------------------------------------------------------------------

/// `P(X > a)` for `X ~ Hypergeometric(population, successes, draws)`,
/// computed from the pmf recurrence `p(x+1)/p(x)`.
pub fn hypergeometric_upper_tail(population: u64, successes: u64, draws: u64, a: u64) -> f64 {
    let lo = draws.saturating_sub(population - successes);
    let hi = successes.min(draws);
    // Unnormalized weights from the ratio recurrence, then normalize.
    let mut weights = vec![1.0f64];
    for x in lo..hi {
        let (k, n, big_k, big_n) = (x as f64, draws as f64, successes as f64, population as f64);
        let ratio = (big_k - k) * (n - k) / ((k + 1.0) * (big_n - big_k - n + k + 1.0));
        let last = *weights.last().unwrap();
        weights.push(last * ratio);
    }
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .enumerate()
        .filter(|(i, _)| lo + *i as u64 > a)
        .map(|(_, w)| w / total)
        .sum()
}

// ---------------------------------------------------------------------------
// SplitMix64
// ---------------------------------------------------------------------------

/// Inverse of the 64-bit finalizer (xorshift and odd-multiplier inverses).
pub fn unfinalize64(mut z: u64) -> u64 {
    z = unxorshift(z, 31);
    z = z.wrapping_mul(mod_inverse(0x94D0_49BB_1331_11EB));
    z = unxorshift(z, 27);
    z = z.wrapping_mul(mod_inverse(0xBF58_476D_1CE4_E5B9));
    unxorshift(z, 30)
}

fn unxorshift(y: u64, s: u32) -> u64 {
    let mut x = y;
    let mut shift = s;
    while shift < 64 {
        x = y ^ (x >> s);
        shift += s;
    }
    y ^ (x >> s)
}

fn mod_inverse(a: u64) -> u64 {
    // Newton iteration for the inverse modulo 2^64.
    let mut x = a;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
    }
    x
}

// ---------------------------------------------------------------------------
// Slot-type probabilities
// ---------------------------------------------------------------------------

/// Exact per-slot probabilities `(P01, P10, P11)` for `n` tags of which `m`
/// are missing, hashed into `f` slots.
pub fn slot_probs(n: f64, m: f64, f: f64) -> (f64, f64, f64) {
    let q = 1.0 - 1.0 / f;
    let p01 = m / f * q.powf(n - 1.0);
    let p10 = m * (n - m) / (f * f) * q.powf(n - 2.0);
    let p11 = m * (m - 1.0) / 2.0 / (f * f) * q.powf(n - 2.0);
    (p01, p10, p11)
}
