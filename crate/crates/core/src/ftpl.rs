//! Follow-the-perturbed-leader for an oblivious adversarial buyer sequence.
//!
//! Each curve gets one exponential perturbation at the start. A round's
//! reward for every curve is the revealed type's payment after a purchase,
//! or the summed payments of the types that would not have bought after a
//! non-purchase. Either way the reward is `sum_{i in D_t} pay(p, i)` for a
//! set `D_t` of types, so the cumulative reward of curve `p` is
//! `sum_i c_i * pay(p, i)` with integer counts `c_i`. The state keeps `c`
//! instead of one running sum per curve.

use rand::Rng;

use crate::error::{PricingError, Result};
use crate::market::MStepCurve;
use crate::payoff::{PayoffTable, PerturbedFrontier};

/// `sqrt((1 + ln |P|) / (m^2 T))`.
pub fn default_theta(space_size: usize, m: usize, horizon: u64) -> Result<f64> {
    if space_size == 0 || m == 0 || horizon == 0 {
        return Err(PricingError::InvalidParameter(format!(
            "default theta needs |P| >= 1, m >= 1, T >= 1; got {space_size}, {m}, {horizon}"
        )));
    }
    let num = 1.0 + (space_size as f64).ln();
    Ok((num / ((m * m) as f64 * horizon as f64)).sqrt())
}

/// Draws `count` values with density `theta * exp(-theta * x)`.
pub fn draw_perturbations<R: Rng>(rng: &mut R, count: usize, theta: f64) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let u = 1.0 - rng.gen::<f64>();
            let x = -u.ln() / theta;
            if x == 0.0 {
                0.0
            } else {
                x
            }
        })
        .collect()
}

/// The types whose payments make up one round's reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundReward {
    types: Vec<usize>,
}

impl RoundReward {
    pub fn types(&self) -> &[usize] {
        &self.types
    }

    /// `r_t(curve)`.
    pub fn value(&self, table: &PayoffTable, curve: usize) -> f64 {
        self.types.iter().map(|&i| table.payment(curve, i)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct FtplState<'a> {
    table: &'a PayoffTable,
    theta: f64,
    perturbations: Vec<f64>,
    frontier: PerturbedFrontier,
    counts: Vec<f64>,
    t: u64,
}

impl<'a> FtplState<'a> {
    pub fn new<R: Rng>(table: &'a PayoffTable, theta: f64, rng: &mut R) -> Result<Self> {
        check_theta(theta)?;
        let perturbations = draw_perturbations(rng, table.num_curves(), theta);
        Self::with_perturbations(table, theta, perturbations)
    }

    /// Uses the given perturbations instead of drawing them.
    pub fn with_perturbations(table: &'a PayoffTable, theta: f64, perturbations: Vec<f64>) -> Result<Self> {
        check_theta(theta)?;
        if perturbations.len() != table.num_curves() {
            return Err(PricingError::Mismatch {
                what: "perturbations vs curves",
                expected: table.num_curves(),
                actual: perturbations.len(),
            });
        }
        if let Some(x) = perturbations.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(PricingError::InvalidParameter(format!(
                "perturbations must be finite and non-negative, got {x}"
            )));
        }
        let frontier = table.perturbed_frontier(&perturbations);
        Ok(Self {
            table,
            theta,
            perturbations,
            frontier,
            counts: vec![0.0; table.num_types()],
            t: 1,
        })
    }

    /// The round about to be played, starting at 1.
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn perturbation(&self, curve: usize) -> f64 {
        self.perturbations[curve]
    }

    pub fn perturbations(&self) -> &[f64] {
        &self.perturbations
    }

    /// How many rounds each type's payment entered the reward.
    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Number of curve groups scanned per selection.
    pub fn candidates(&self) -> usize {
        self.frontier.len()
    }

    /// `sum_{tau < t} r_tau(curve)`.
    pub fn cumulative_reward(&self, curve: usize) -> f64 {
        self.table.linear_score(curve, &self.counts)
    }

    /// First curve maximizing cumulative reward plus perturbation.
    pub fn select_index(&self) -> usize {
        self.table.argmax_perturbed(&self.frontier, &self.counts).0
    }

    pub fn select(&self) -> MStepCurve {
        self.table.curve(self.select_index())
    }

    /// Records the round and returns its reward. `revealed` is the buyer's
    /// type, present exactly when a purchase happened.
    pub fn update(&mut self, chosen: usize, revealed: Option<usize>) -> Result<RoundReward> {
        let m = self.table.num_types();
        if chosen >= self.table.num_curves() {
            return Err(PricingError::Contract(format!("curve index {chosen} outside the space")));
        }
        let types = match revealed {
            Some(i) => {
                if i >= m {
                    return Err(PricingError::Contract(format!("type {i} out of range")));
                }
                if self.table.amount(chosen, i) == 0 {
                    return Err(PricingError::Invariant(format!(
                        "type {i} purchased but is outside the purchase set"
                    )));
                }
                vec![i]
            }
            None => {
                let outside: Vec<usize> = (0..m).filter(|&i| self.table.amount(chosen, i) == 0).collect();
                if outside.is_empty() {
                    return Err(PricingError::Invariant(
                        "no purchase although every type would buy".into(),
                    ));
                }
                outside
            }
        };
        for &i in &types {
            self.counts[i] += 1.0;
        }
        self.t += 1;
        Ok(RoundReward { types })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(PricingError::InvalidParameter(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    Ok(())
}
