//! Optimistic learner for buyers drawn i.i.d. from an unknown type
//! distribution.
//!
//! Round 1 posts the zero curve, so every type reveals itself once. Later
//! rounds post the curve maximizing revenue under upper confidence bounds of
//! the type probabilities, estimated only from rounds where the type would
//! have bought.

use crate::error::{PricingError, Result};
use crate::market::MStepCurve;
use crate::payoff::PayoffTable;

/// What the seller posts in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    /// The all-zero curve of round 1. It is not part of the space.
    Zero,
    /// A curve of the space, by enumeration position.
    Curve(usize),
}

#[derive(Debug, Clone)]
pub struct UcbState<'a> {
    table: &'a PayoffTable,
    horizon: u64,
    log_horizon: f64,
    t_count: Vec<u64>,
    hit_count: Vec<u64>,
    t: u64,
}

impl<'a> UcbState<'a> {
    pub fn new(table: &'a PayoffTable, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(PricingError::InvalidParameter("horizon T must be at least 1".into()));
        }
        let m = table.num_types();
        Ok(Self {
            table,
            horizon,
            log_horizon: (horizon as f64).ln(),
            t_count: vec![0; m],
            hit_count: vec![0; m],
            t: 1,
        })
    }

    /// The round about to be played, starting at 1.
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn t_count(&self) -> &[u64] {
        &self.t_count
    }

    pub fn hit_count(&self) -> &[u64] {
        &self.hit_count
    }

    /// Empirical frequencies `hit / T_count` (NaN for a type never counted).
    pub fn q_bar(&self) -> Vec<f64> {
        self.hit_count
            .iter()
            .zip(&self.t_count)
            .map(|(&h, &c)| h as f64 / c as f64)
            .collect()
    }

    /// Confidence radius `sqrt(ln T / T_count[i])`.
    pub fn radius(&self, i: usize) -> f64 {
        (self.log_horizon / self.t_count[i] as f64).sqrt()
    }

    /// Upper confidence bounds, not clipped to `[0, 1]`.
    pub fn q_hat(&self) -> Vec<f64> {
        self.q_bar()
            .iter()
            .enumerate()
            .map(|(i, &q)| q + self.radius(i))
            .collect()
    }

    pub fn next_arm(&self) -> Result<Arm> {
        if self.t == 1 {
            Ok(Arm::Zero)
        } else {
            self.select_index().map(Arm::Curve)
        }
    }

    /// Position of the first curve maximizing optimistic revenue.
    pub fn select_index(&self) -> Result<usize> {
        if self.t == 1 {
            return Err(PricingError::Contract("round 1 posts the zero curve; select from round 2 on".into()));
        }
        let weights = self.q_hat();
        // after round 1 every count is positive, so every weight is too
        debug_assert!(weights.iter().all(|&w| w > 0.0));
        Ok(self.table.argmax_linear(&weights).0)
    }

    pub fn select(&self) -> Result<MStepCurve> {
        Ok(self.table.curve(self.select_index()?))
    }

    /// Records the round. `revealed` is the buyer's type, present exactly
    /// when a purchase happened.
    pub fn update(&mut self, arm: Arm, revealed: Option<usize>) -> Result<()> {
        let m = self.table.num_types();
        let in_set: Vec<bool> = match arm {
            Arm::Zero => vec![true; m],
            Arm::Curve(c) => {
                if c >= self.table.num_curves() {
                    return Err(PricingError::Contract(format!("curve index {c} outside the space")));
                }
                (0..m).map(|i| self.table.amount(c, i) > 0).collect()
            }
        };
        if let Some(i) = revealed {
            if i >= m {
                return Err(PricingError::Contract(format!("type {i} out of range")));
            }
            if !in_set[i] {
                return Err(PricingError::Invariant(format!(
                    "type {i} purchased but is outside the purchase set"
                )));
            }
        }
        for (count, &hit) in self.t_count.iter_mut().zip(&in_set) {
            if hit {
                *count += 1;
            }
        }
        if let Some(i) = revealed {
            self.hit_count[i] += 1;
        }
        self.t += 1;
        Ok(())
    }
}
