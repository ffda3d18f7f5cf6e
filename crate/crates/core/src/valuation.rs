//! Valuation curve generators and estimation of the smoothness and
//! diminishing-returns constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::market::ValuationCurve;

/// Parameters of the learning-curve family `v(n) = alpha - beta * n^(-gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PowerLawSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(PricingError::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(PricingError::InvalidParameter(format!(
                "beta must be finite and non-negative, got {}",
                self.beta
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(PricingError::InvalidParameter(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Diminishing-returns constant satisfied by the unclamped curve.
    pub fn diminishing_constant(&self) -> f64 {
        self.beta * self.gamma
    }
}

/// `clamp(alpha - beta * n^(-gamma), 0, 1)` for `n >= 1`, and 0 at `n = 0`.
///
/// Clamping at 0 only shrinks increments, so the curve keeps the
/// diminishing-returns constant `beta * gamma`.
pub fn power_law_curve(spec: &PowerLawSpec, n_total: usize) -> Result<ValuationCurve> {
    spec.validate()?;
    if n_total == 0 {
        return Err(PricingError::InvalidParameter("N must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(n_total + 1);
    values.push(0.0);
    for n in 1..=n_total {
        let x = spec.alpha - spec.beta * (n as f64).powf(-spec.gamma);
        values.push(x.clamp(0.0, 1.0));
    }
    enforce_monotone(&mut values);
    ValuationCurve::new(values)
}

/// `v(n) = ceiling * n / N`.
pub fn linear_curve(ceiling: f64, n_total: usize) -> Result<ValuationCurve> {
    if !(0.0..=1.0).contains(&ceiling) {
        return Err(PricingError::InvalidParameter(format!(
            "ceiling must lie in [0, 1], got {ceiling}"
        )));
    }
    if n_total == 0 {
        return Err(PricingError::InvalidParameter("N must be at least 1".into()));
    }
    let mut values: Vec<f64> = (0..=n_total)
        .map(|n| (ceiling * n as f64 / n_total as f64).min(1.0))
        .collect();
    enforce_monotone(&mut values);
    ValuationCurve::new(values)
}

/// A seeded random non-decreasing curve: `knot_count` sorted uniform knots
/// spread evenly over `1..=N` and linearly interpolated.
pub fn random_monotone_curve(seed: u64, n_total: usize, knot_count: usize) -> Result<ValuationCurve> {
    if knot_count == 0 {
        return Err(PricingError::InvalidParameter("knot_count must be at least 1".into()));
    }
    if n_total == 0 {
        return Err(PricingError::InvalidParameter("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut knots: Vec<f64> = (0..knot_count).map(|_| rng.gen::<f64>()).collect();
    knots.sort_by(f64::total_cmp);

    let mut values = Vec::with_capacity(n_total + 1);
    values.push(0.0);
    for n in 1..=n_total {
        let x = if knot_count == 1 {
            knots[0]
        } else {
            let t = if n_total > 1 {
                (n - 1) as f64 / (n_total - 1) as f64
            } else {
                0.0
            };
            let s = t * (knot_count - 1) as f64;
            let k = (s.floor() as usize).min(knot_count - 2);
            let frac = s - k as f64;
            knots[k] + (knots[k + 1] - knots[k]) * frac
        };
        values.push(x.clamp(0.0, 1.0));
    }
    enforce_monotone(&mut values);
    ValuationCurve::new(values)
}

fn enforce_monotone(values: &mut [f64]) {
    for n in 1..values.len() {
        if values[n] < values[n - 1] {
            values[n] = values[n - 1];
        }
    }
}

/// Smallest constants for which the curve satisfies the smoothness and
/// diminishing-returns conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    /// `N * max_n (v(n+1) - v(n))`.
    pub smoothness: f64,
    /// `max_{n >= 1} n * (v(n+1) - v(n))`.
    pub diminishing: f64,
}

pub fn measure_constants(v: &ValuationCurve) -> MeasuredConstants {
    let values = v.values();
    let n_total = v.n_total();
    let mut max_inc: f64 = 0.0;
    let mut dim: f64 = 0.0;
    for n in 0..n_total {
        let inc = values[n + 1] - values[n];
        max_inc = max_inc.max(inc);
        if n >= 1 {
            dim = dim.max(n as f64 * inc);
        }
    }
    MeasuredConstants {
        smoothness: n_total as f64 * max_inc,
        diminishing: dim,
    }
}

/// Constants that hold simultaneously for every curve in `curves`.
pub fn measure_constants_all<'a, I>(curves: I) -> MeasuredConstants
where
    I: IntoIterator<Item = &'a ValuationCurve>,
{
    curves.into_iter().map(measure_constants).fold(
        MeasuredConstants {
            smoothness: 0.0,
            diminishing: 0.0,
        },
        |a, b| MeasuredConstants {
            smoothness: a.smoothness.max(b.smoothness),
            diminishing: a.diminishing.max(b.diminishing),
        },
    )
}
