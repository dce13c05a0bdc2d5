//! Gaussian sampled in an unbounded space and squashed into [0, 1] with
//! `a = (tanh(u) + 1) / 2`.

use std::f64::consts::{LN_2, PI};

pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn squash(u: f64) -> f64 {
    0.5 * (u.tanh() + 1.0)
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln |da/du|` of the squashing map.
pub fn log_squash_jacobian(u: f64) -> f64 {
    (0.5f64).ln() + 2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// Derivative of [`log_squash_jacobian`] with respect to `u`.
pub fn d_log_squash_jacobian(u: f64) -> f64 {
    -2.0 * u.tanh()
}

pub fn gaussian_log_prob(u: f64, mean: f64, log_std: f64) -> f64 {
    let z = (u - mean) / log_std.exp();
    -0.5 * z * z - log_std - HALF_LN_2PI
}

/// Differential entropy of a unit with the given log standard deviation.
pub fn gaussian_entropy(log_std: f64) -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E).ln() + log_std
}

/// Maps an unbounded value smoothly into `[lo, hi]`; returns the value and
/// its derivative.
pub fn soft_clamp(raw: f64, lo: f64, hi: f64) -> (f64, f64) {
    let t = raw.tanh();
    (lo + 0.5 * (hi - lo) * (t + 1.0), 0.5 * (hi - lo) * (1.0 - t * t))
}
