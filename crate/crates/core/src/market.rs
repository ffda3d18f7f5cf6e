//! Market semantics: valuation curves, step price curves, buyer demand and revenue.
//!
//! Amounts are integers in `0..=N`; values and prices are `f64`. Utility
//! comparisons are exact (no tolerance), and ties between purchase amounts are
//! broken towards the largest amount.

use crate::error::{PricingError, Result};

/// A buyer type's value for each amount `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationCurve {
    values: Vec<f64>,
}

impl ValuationCurve {
    /// Builds a curve from `N + 1` values indexed by amount.
    ///
    /// Rejects curves with `values[0] != 0`, decreasing entries, or entries
    /// outside `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(PricingError::InvalidValuation(format!(
                "need at least 2 entries (N >= 1), got {}",
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(PricingError::InvalidValuation(format!(
                "value at amount 0 must be 0, got {}",
                values[0]
            )));
        }
        for (n, &x) in values.iter().enumerate() {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(PricingError::InvalidValuation(format!(
                    "value at amount {n} is {x}, outside [0, 1]"
                )));
            }
        }
        if let Some(n) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(PricingError::InvalidValuation(format!(
                "curve decreases between amounts {} and {}",
                n,
                n + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn n_total(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A non-decreasing step price curve with right-closed steps.
///
/// Step `j` covers amounts `(b_{j-1}, b_j]` (with `b_{-1} = 0`) at price
/// `values[j]`. The last boundary is always `N`, boundaries and values are
/// strictly increasing, and `price(0) = 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MStepCurve {
    n_total: usize,
    boundaries: Vec<usize>,
    values: Vec<f64>,
}

impl MStepCurve {
    pub fn new(n_total: usize, steps: Vec<(usize, f64)>) -> Result<Self> {
        let (boundaries, values): (Vec<usize>, Vec<f64>) = steps.into_iter().unzip();
        Self::from_parts(n_total, boundaries, values)
    }

    pub fn from_parts(n_total: usize, boundaries: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if n_total == 0 {
            return Err(PricingError::InvalidPriceCurve("N must be at least 1".into()));
        }
        if boundaries.is_empty() || boundaries.len() != values.len() {
            return Err(PricingError::InvalidPriceCurve(format!(
                "need a non-empty list of steps, got {} boundaries and {} values",
                boundaries.len(),
                values.len()
            )));
        }
        if boundaries[0] == 0 {
            return Err(PricingError::InvalidPriceCurve("boundary 0 is not allowed".into()));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PricingError::InvalidPriceCurve(
                "boundaries must be strictly increasing".into(),
            ));
        }
        if *boundaries.last().unwrap() != n_total {
            return Err(PricingError::InvalidPriceCurve(format!(
                "final boundary must be N={n_total}, got {}",
                boundaries.last().unwrap()
            )));
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PricingError::InvalidPriceCurve(
                "step values must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PricingError::InvalidPriceCurve(
                "step values must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            n_total,
            boundaries,
            values,
        })
    }

    /// Builds a curve from parts that are already known to be valid.
    pub(crate) fn from_parts_unchecked(n_total: usize, boundaries: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(Self::from_parts(n_total, boundaries.clone(), values.clone()).is_ok());
        Self {
            n_total,
            boundaries,
            values,
        }
    }

    /// The zero price curve: every amount is free.
    pub fn zero(n_total: usize) -> Self {
        Self::flat(n_total, 0.0)
    }

    /// A single-step curve charging `value` for every positive amount.
    pub fn flat(n_total: usize, value: f64) -> Self {
        assert!(n_total >= 1, "N must be at least 1");
        assert!(value.is_finite() && value >= 0.0, "price must be finite and non-negative");
        Self {
            n_total,
            boundaries: vec![n_total],
            values: vec![value],
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn num_steps(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.boundaries.iter().copied().zip(self.values.iter().copied())
    }

    /// Price of `n` units: 0 at `n = 0`, otherwise the value of the first step
    /// whose boundary is at least `n`.
    pub fn price(&self, n: usize) -> f64 {
        assert!(n <= self.n_total, "amount {n} beyond N={}", self.n_total);
        if n == 0 {
            return 0.0;
        }
        let j = self.boundaries.partition_point(|&b| b < n);
        self.values[j]
    }

    /// Dense evaluation `price(0), ..., price(N)`.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..=self.n_total).map(|n| self.price(n)).collect()
    }
}

/// Probability weights over buyer types.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    weights: Vec<f64>,
}

impl TypeDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(PricingError::InvalidDistribution("no types".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PricingError::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(PricingError::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1);
        Self {
            weights: vec![1.0 / m as f64; m],
        }
    }

    /// All mass on type `i`.
    pub fn degenerate(m: usize, i: usize) -> Self {
        assert!(i < m);
        let mut weights = vec![0.0; m];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// The seller's view of the market: `m` valuation curves over amounts `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    n_total: usize,
    valuations: Vec<ValuationCurve>,
    /// Smoothness constant `L`, when known.
    pub smoothness: Option<f64>,
    /// Diminishing-returns constant `J`, when known.
    pub diminishing: Option<f64>,
}

impl MarketInstance {
    pub fn new(valuations: Vec<ValuationCurve>) -> Result<Self> {
        let first = valuations
            .first()
            .ok_or_else(|| PricingError::InvalidInstance("need at least one buyer type".into()))?;
        let n_total = first.n_total();
        for (i, v) in valuations.iter().enumerate() {
            if v.n_total() != n_total {
                return Err(PricingError::InvalidInstance(format!(
                    "type {i} has N={} but type 0 has N={n_total}",
                    v.n_total()
                )));
            }
        }
        Ok(Self {
            n_total,
            valuations,
            smoothness: None,
            diminishing: None,
        })
    }

    pub fn with_constants(mut self, smoothness: Option<f64>, diminishing: Option<f64>) -> Self {
        self.smoothness = smoothness;
        self.diminishing = diminishing;
        self
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn num_types(&self) -> usize {
        self.valuations.len()
    }

    pub fn valuations(&self) -> &[ValuationCurve] {
        &self.valuations
    }

    pub fn valuation(&self, i: usize) -> &ValuationCurve {
        &self.valuations[i]
    }

    /// Largest value any type attaches to the full data set.
    pub fn max_full_value(&self) -> f64 {
        self.valuations
            .iter()
            .map(|v| v.value(self.n_total))
            .fold(0.0, f64::max)
    }

    fn check_curve(&self, p: &MStepCurve) -> Result<()> {
        if p.n_total() != self.n_total {
            return Err(PricingError::Mismatch {
                what: "price curve N vs instance N",
                expected: self.n_total,
                actual: p.n_total(),
            });
        }
        Ok(())
    }
}

/// Demand on a raw step representation. Only step boundaries are inspected:
/// inside a step the price is constant and the valuation non-decreasing, so
/// the right end of the step is the largest maximizer there.
#[inline]
pub(crate) fn demand_on_steps(values: &[f64], boundaries: &[usize], prices: &[f64]) -> usize {
    let mut best_utility = f64::NEG_INFINITY;
    let mut best_amount = 0;
    for (&b, &w) in boundaries.iter().zip(prices) {
        let u = values[b] - w;
        if u >= best_utility {
            best_utility = u;
            best_amount = b;
        }
    }
    if best_utility >= 0.0 {
        best_amount
    } else {
        0
    }
}

/// Amount purchased by a buyer with valuation `v` facing price curve `p`.
///
/// Returns 0 if every positive amount has negative utility, otherwise the
/// largest amount maximizing `v(n) - p(n)`.
pub fn buyer_demand(v: &ValuationCurve, p: &MStepCurve) -> Result<usize> {
    if v.n_total() != p.n_total() {
        return Err(PricingError::Mismatch {
            what: "price curve N vs valuation N",
            expected: v.n_total(),
            actual: p.n_total(),
        });
    }
    Ok(demand_on_steps(v.values(), p.boundaries(), p.values()))
}

/// Types that would buy a positive amount at `p`, in increasing order.
pub fn purchase_set(instance: &MarketInstance, p: &MStepCurve) -> Result<Vec<usize>> {
    instance.check_curve(p)?;
    Ok(instance
        .valuations
        .iter()
        .enumerate()
        .filter(|(_, v)| demand_on_steps(v.values(), p.boundaries(), p.values()) > 0)
        .map(|(i, _)| i)
        .collect())
}

/// Expected payment `sum_i q_i * p(n_{i,p})`.
pub fn expected_revenue(instance: &MarketInstance, q: &TypeDistribution, p: &MStepCurve) -> Result<f64> {
    instance.check_curve(p)?;
    if q.len() != instance.num_types() {
        return Err(PricingError::Mismatch {
            what: "distribution length vs type count",
            expected: instance.num_types(),
            actual: q.len(),
        });
    }
    let mut rev = 0.0;
    for (v, &w) in instance.valuations.iter().zip(q.weights()) {
        let n = demand_on_steps(v.values(), p.boundaries(), p.values());
        rev += w * p.price(n);
    }
    Ok(rev)
}

/// Per-price, per-type purchased amounts and payments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandMatrix {
    num_types: usize,
    amounts: Vec<usize>,
    payments: Vec<f64>,
}

impl DemandMatrix {
    pub(crate) fn with_capacity(num_types: usize, rows: usize) -> Self {
        Self {
            num_types,
            amounts: Vec::with_capacity(rows * num_types),
            payments: Vec::with_capacity(rows * num_types),
        }
    }

    /// Appends the row for a raw step curve.
    pub(crate) fn push_steps(&mut self, instance: &MarketInstance, boundaries: &[usize], prices: &[f64]) {
        for v in &instance.valuations {
            let n = demand_on_steps(v.values(), boundaries, prices);
            let pay = if n == 0 {
                0.0
            } else {
                prices[boundaries.partition_point(|&b| b < n)]
            };
            self.amounts.push(n);
            self.payments.push(pay);
        }
    }

    pub fn num_rows(&self) -> usize {
        self.amounts.len().checked_div(self.num_types).unwrap_or(0)
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn amount(&self, row: usize, i: usize) -> usize {
        self.amounts[row * self.num_types + i]
    }

    pub fn payment(&self, row: usize, i: usize) -> f64 {
        self.payments[row * self.num_types + i]
    }

    pub fn entry(&self, row: usize, i: usize) -> (usize, f64) {
        (self.amount(row, i), self.payment(row, i))
    }

    pub fn row_payments(&self, row: usize) -> &[f64] {
        &self.payments[row * self.num_types..(row + 1) * self.num_types]
    }

    pub fn row_amounts(&self, row: usize) -> &[usize] {
        &self.amounts[row * self.num_types..(row + 1) * self.num_types]
    }

    /// Types with positive demand at `row`, in increasing order.
    pub fn purchase_set(&self, row: usize) -> Vec<usize> {
        self.row_amounts(row)
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Demand and payment of every type under every price in `prices`.
pub fn demand_matrix(instance: &MarketInstance, prices: &[MStepCurve]) -> Result<DemandMatrix> {
    let mut dm = DemandMatrix::with_capacity(instance.num_types(), prices.len());
    for p in prices {
        instance.check_curve(p)?;
        dm.push_steps(instance, p.boundaries(), p.values());
    }
    Ok(dm)
}
