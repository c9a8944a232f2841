//! Laplace noise conditioned on an output interval, sampled by inverse CDF,
//! and the noise scale that keeps it ε-DP.
//!
//! Truncating Laplace(q, b) to `[l, u]` renormalizes the density by
//!
//! ```text
//! C_q(b) = 1 - (exp(-(q - l) / b) + exp(-(u - q) / b)) / 2
//! ```
//!
//! which differs between neighbouring means. The density ratio for two means
//! at distance Δ is bounded by `exp(Δ / b) · ΔC(b)` with
//! `ΔC(b) = C_{l+Δ}(b) / C_l(b)`, so the mechanism is ε-DP iff
//! `b ≥ Δ / (ε − ln ΔC(b))`. The smallest such `b` is the fixed point of that
//! map; `ΔC` is decreasing in `b` so the root is unique and lies between
//! `b₀ = Δ/ε` and the map's value at `b₀`.

use rand::distr::{Distribution, StandardUniform};
use rand::Rng;

use super::DpError;

/// Iteration cap for [`fixed_point_scale`].
pub const MAX_FIXED_POINT_STEPS: usize = 10_000;

/// Relative tolerance (to `b₀`) on the bracket width of the fixed point.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

/// Normalizer of Laplace(q, b) truncated to `[lower, upper]`.
pub fn truncation_mass(q: f64, scale: f64, lower: f64, upper: f64) -> f64 {
    1.0 - 0.5 * ((-(q - lower) / scale).exp() + (-(upper - q) / scale).exp())
}

/// `C_{l+Δ}(b) / C_l(b)` on a domain of the given width.
pub fn normalizer_ratio(delta: f64, width: f64, scale: f64) -> f64 {
    if delta >= width {
        return 1.0;
    }
    let shifted = truncation_mass(delta, scale, 0.0, width);
    let edge = -0.5 * (-width / scale).exp_m1();
    shifted / edge
}

/// One application of `b ↦ Δ / (ε − ln ΔC(b))`.
pub fn scale_map(delta: f64, width: f64, epsilon: f64, scale: f64) -> f64 {
    delta / (epsilon - normalizer_ratio(delta, width, scale).ln())
}

/// Search trace of [`fixed_point_scale_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointTrace {
    /// `(low, high)` bracket after each step.
    pub brackets: Vec<(f64, f64)>,
    pub scale: f64,
}

/// Smallest Laplace scale making the bounded mechanism on a domain of
/// `width` ε-DP for sensitivity `delta`.
///
/// Equals `delta / epsilon` exactly when `delta` covers the whole domain.
pub fn fixed_point_scale(delta: f64, width: f64, epsilon: f64) -> Result<f64, DpError> {
    fixed_point_scale_traced(delta, width, epsilon).map(|t| t.scale)
}

pub fn fixed_point_scale_traced(delta: f64, width: f64, epsilon: f64) -> Result<FixedPointTrace, DpError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DpError::InvalidBudget(epsilon));
    }
    if delta.is_nan() || width.is_nan() || delta <= 0.0 || width <= 0.0 {
        return Err(DpError::InvalidSensitivity(delta));
    }
    let b0 = delta / epsilon;
    if delta >= width {
        return Ok(FixedPointTrace {
            brackets: vec![(b0, b0)],
            scale: b0,
        });
    }
    let g0 = scale_map(delta, width, epsilon, b0);
    if !g0.is_finite() || g0 <= 0.0 {
        return Err(DpError::NonConvergence { steps: 0 });
    }
    // b − g(b) is increasing, negative at b₀ and non-negative at g(b₀).
    let (mut lo, mut hi) = (b0, g0.max(b0));
    let tol = FIXED_POINT_TOLERANCE * b0;
    let mut brackets = vec![(lo, hi)];
    for steps in 1..=MAX_FIXED_POINT_STEPS {
        if hi - lo < tol {
            return Ok(FixedPointTrace { brackets, scale: hi });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket collapsed to adjacent floats.
            return Ok(FixedPointTrace { brackets, scale: hi });
        }
        if scale_map(delta, width, epsilon, mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
        brackets.push((lo, hi));
        if steps == MAX_FIXED_POINT_STEPS {
            break;
        }
    }
    Err(DpError::NonConvergence {
        steps: MAX_FIXED_POINT_STEPS,
    })
}

/// Laplace CDF centred at `mu`.
pub fn laplace_cdf(x: f64, mu: f64, scale: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if x < mu {
        0.5 * ((x - mu) / scale).exp()
    } else {
        1.0 - 0.5 * (-(x - mu) / scale).exp()
    }
}

/// Inverse of [`laplace_cdf`].
pub fn laplace_quantile(p: f64, mu: f64, scale: f64) -> f64 {
    if p < 0.5 {
        mu + scale * (2.0 * p).ln()
    } else {
        mu - scale * (2.0 * (1.0 - p)).ln()
    }
}

/// Laplace(center, scale) conditioned on `[lower, upper]`; `upper` may be
/// `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedLaplace {
    center: f64,
    scale: f64,
    lower: f64,
    upper: f64,
    cdf_lower: f64,
    cdf_upper: f64,
}

impl BoundedLaplace {
    pub fn new(center: f64, scale: f64, lower: f64, upper: f64) -> Result<Self, DpError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DpError::InvalidScale(scale));
        }
        if !lower.is_finite() || !(lower <= center && center <= upper) || center.is_nan() {
            return Err(DpError::OutOfBounds {
                value: center,
                lower,
                upper,
            });
        }
        Ok(Self {
            center,
            scale,
            lower,
            upper,
            cdf_lower: laplace_cdf(lower, center, scale),
            cdf_upper: laplace_cdf(upper, center, scale),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Probability that an untruncated draw lands inside the bounds.
    pub fn mass(&self) -> f64 {
        self.cdf_upper - self.cdf_lower
    }

    /// Maps a uniform `[0, 1)` draw to the truncated distribution.
    pub fn transform(&self, u: f64) -> f64 {
        let p = self.cdf_lower + u * (self.cdf_upper - self.cdf_lower);
        laplace_quantile(p, self.center, self.scale).clamp(self.lower, self.upper)
    }
}

impl Distribution<f64> for BoundedLaplace {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(StandardUniform);
        self.transform(u)
    }
}

/// Draws one bounded Laplace sample around `true_value`.
pub fn bounded_laplace_sample<R: Rng + ?Sized>(
    true_value: f64,
    scale: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64, DpError> {
    Ok(BoundedLaplace::new(true_value, scale, lower, upper)?.sample(rng))
}
