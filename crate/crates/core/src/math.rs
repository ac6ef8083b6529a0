//! Numerically stable scalar primitives for the logit link.

/// Logistic function `1 / (1 + exp(-x))`.
///
/// Evaluates a single `exp(-|x|)` so neither tail overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    // exp(-x) < 2^-53 relative to x past this point
    if x > 36.0 {
        x + (-x).exp()
    } else {
        x.max(0.0) + (-x.abs()).exp().ln_1p()
    }
}

/// `pi * (1 - pi)` for `pi = sigmoid(x)` without cancellation in the tails.
#[inline]
pub fn sigmoid_variance(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}
