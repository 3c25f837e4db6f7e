use rand::Rng;

use crate::error::{invalid, Result};

/// Uniform draw on the open interval (0, 1); exact endpoints are redrawn.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// `−ln(−ln u)`, the inverse Gumbel(0, 1) CDF.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// Draws a standard Gumbel(0, 1) variate.
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    gumbel_from_uniform(open_unit(rng))
}

/// `Pr[G > b] = 1 − exp(−exp(−b))` for standard Gumbel `G`, evaluated
/// without cancellation for large `b`.
pub fn truncated_tail_mass(b: f64) -> f64 {
    -(-(-b).exp()).exp_m1()
}

/// Above this margin the tail of the Gumbel distribution is exponential to
/// within `e^{-b}` relative error, and the direct formula loses all precision.
const EXPONENTIAL_TAIL_MARGIN: f64 = 30.0;

/// Maps `w ∈ (0, 1)` to a Gumbel(0, 1) variate conditioned on exceeding `b`.
///
/// Equivalent to `−ln(−ln U)` with `U = 1 − tail·w`, i.e. `U` uniform on
/// `(exp(−exp(−b)), 1)`.
pub(crate) fn truncated_from_unit(b: f64, tail: f64, w: f64) -> f64 {
    if b > EXPONENTIAL_TAIL_MARGIN {
        b - w.ln()
    } else {
        -(-(-tail * w).ln_1p()).ln()
    }
}

/// Draws Gumbel(0, 1) conditioned on `G > b`. The result is always strictly
/// greater than `b`.
pub fn sample_truncated_gumbel<R: Rng + ?Sized>(b: f64, rng: &mut R) -> Result<f64> {
    if !b.is_finite() {
        return invalid(format!("truncation point must be finite, got {b}"));
    }
    Ok(truncated_unchecked(b, truncated_tail_mass(b), rng))
}

pub(crate) fn truncated_unchecked<R: Rng + ?Sized>(b: f64, tail: f64, rng: &mut R) -> f64 {
    loop {
        let g = truncated_from_unit(b, tail, open_unit(rng));
        if g > b && g.is_finite() {
            return g;
        }
    }
}
