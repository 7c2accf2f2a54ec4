//! Small helpers over probability vectors.

use rand::Rng;

use crate::Float;

/// Inverse-CDF draw from an (approximately) normalized weight vector.
///
/// Falls back to the last positive index when rounding leaves the
/// cumulative sum just below the uniform draw.
pub fn sample_categorical<F: Float, R: Rng + ?Sized>(weights: &[F], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        let w = w.as_f64();
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if target < acc {
            return i;
        }
    }
    last
}

/// Scales `v` to sum to one. Returns the original sum.
pub fn normalize_in_place<F: Float>(v: &mut [F]) -> F {
    let s: F = v.iter().copied().sum();
    if s > F::zero() {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}

/// `ln Σ exp(x_i)`, stable for large magnitudes.
pub fn log_sum_exp<F: Float>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if !max.is_finite() {
        return max;
    }
    let s: F = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}
