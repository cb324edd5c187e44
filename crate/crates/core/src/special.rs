//! Factorials in direct and logarithmic form.

/// Largest argument for which factorials are multiplied out in f64;
/// above it, everything goes through `ln_factorial`.
pub const DIRECT_FACTORIAL_MAX: u64 = 15;

/// `n!` by direct multiplication; exact in f64 for `n <= 18`.
pub fn factorial(n: u64) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn ln_factorial(n: u64) -> f64 {
    if n <= DIRECT_FACTORIAL_MAX {
        factorial(n).ln()
    } else {
        statrs::function::factorial::ln_factorial(n)
    }
}

/// `ln(sum_i exp(terms_i))` without overflow.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
