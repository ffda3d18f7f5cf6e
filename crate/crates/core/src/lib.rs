//! Revenue-optimal pricing of data sets sold to buyers of finitely many types.
//!
//! The crate covers the buyer demand model, reduction of price curves to step
//! curves, discretized price spaces with approximation guarantees, exhaustive
//! offline optimization, and two online learners (optimistic for stochastic
//! buyers, perturbed-leader for adversarial buyers) with a seeded harness.

pub mod discretization;
pub mod error;
pub mod ftpl;
pub mod harness;
pub mod market;
pub mod offline;
pub mod payoff;
pub mod price_space;
pub mod ucb;
pub mod valuation;

pub use error::{PricingError, Result};
pub use market::{
    buyer_demand, demand_matrix, expected_revenue, purchase_set, DemandMatrix, MStepCurve,
    MarketInstance, TypeDistribution, ValuationCurve,
};
