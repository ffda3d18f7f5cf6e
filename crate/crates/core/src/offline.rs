//! Offline revenue maximization: exhaustive search over a discretized space,
//! and a brute-force oracle over fine value grids for small instances.

use serde::Serialize;

use crate::discretization::DiscretizedPriceSpace;
use crate::error::{PricingError, Result};
use crate::market::{demand_on_steps, MStepCurve, MarketInstance, TypeDistribution};

/// Largest `N` accepted by [`brute_force_opt`].
pub const ORACLE_MAX_N: usize = 15;
/// Largest type count accepted by [`brute_force_opt`].
pub const ORACLE_MAX_TYPES: usize = 3;
/// Default value resolution of the oracle.
pub const DEFAULT_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestCurve {
    /// Position in the space's enumeration order (0 for the oracle).
    pub index: usize,
    pub curve: MStepCurve,
    pub revenue: f64,
}

fn check_dims(instance: &MarketInstance, q: &TypeDistribution) -> Result<()> {
    if q.len() != instance.num_types() {
        return Err(PricingError::Mismatch {
            what: "distribution length vs type count",
            expected: instance.num_types(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// The first curve of `space` (in enumeration order) with maximal expected
/// revenue under `q`.
pub fn best_in_space(
    instance: &MarketInstance,
    q: &TypeDistribution,
    space: &DiscretizedPriceSpace,
) -> Result<BestCurve> {
    check_dims(instance, q)?;
    if instance.n_total() != space.n_total() {
        return Err(PricingError::Mismatch {
            what: "instance N vs space N",
            expected: space.n_total(),
            actual: instance.n_total(),
        });
    }
    space.checked_len()?;
    let weights = q.weights();
    let mut best_rev = f64::NEG_INFINITY;
    let mut best_idx = 0u128;
    space.family().for_each_raw(|idx, bounds, levels| {
        let mut rev = 0.0;
        for (v, &w) in instance.valuations().iter().zip(weights) {
            let n = demand_on_steps(v.values(), bounds, levels);
            let pay = if n == 0 {
                0.0
            } else {
                levels[bounds.partition_point(|&b| b < n)]
            };
            rev += w * pay;
        }
        if rev > best_rev {
            best_rev = rev;
            best_idx = idx;
        }
    });
    let curve = space
        .family()
        .curve_at(best_idx)
        .ok_or_else(|| PricingError::Invariant("best index outside the space".into()))?;
    Ok(BestCurve {
        index: best_idx as usize,
        curve,
        revenue: best_rev,
    })
}

/// Exhaustive search over every non-decreasing step curve with at most `m`
/// steps, boundaries anywhere in `1..=N` and levels on `{0, r, 2r, ..., 1}`.
///
/// This is the reference optimum for small instances. Demand is evaluated
/// directly from utilities at the step ends, independently of the
/// enumeration machinery in [`crate::price_space`].
pub fn brute_force_opt(instance: &MarketInstance, q: &TypeDistribution, resolution: f64) -> Result<BestCurve> {
    check_dims(instance, q)?;
    let n_total = instance.n_total();
    let m = instance.num_types();
    if n_total > ORACLE_MAX_N || m > ORACLE_MAX_TYPES {
        return Err(PricingError::TooLarge(format!(
            "N={n_total}, m={m}; the oracle accepts N <= {ORACLE_MAX_N} and m <= {ORACLE_MAX_TYPES}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(PricingError::InvalidParameter(format!(
            "resolution must lie in (0, 1], got {resolution}"
        )));
    }
    let levels_count = (1.0 / resolution).round() as usize;
    if ((levels_count as f64) * resolution - 1.0).abs() > 1e-9 {
        return Err(PricingError::InvalidParameter(format!(
            "resolution {resolution} does not divide 1"
        )));
    }
    let levels: Vec<f64> = (0..=levels_count).map(|k| k as f64 / levels_count as f64).collect();

    let mut search = OracleSearch {
        instance,
        weights: q.weights(),
        levels: &levels,
        bounds: Vec::with_capacity(m),
        values_at: vec![Vec::with_capacity(m); m],
        prices: Vec::with_capacity(m),
        best_rev: f64::NEG_INFINITY,
        best: None,
    };
    for k in 1..=m.min(n_total) {
        search.choose_bounds(k, 1);
    }
    let (bounds, prices) = search
        .best
        .take()
        .ok_or_else(|| PricingError::Invariant("oracle found no curve".into()))?;
    Ok(BestCurve {
        index: 0,
        curve: MStepCurve::from_parts(n_total, bounds, prices)?,
        revenue: search.best_rev,
    })
}

struct OracleSearch<'a> {
    instance: &'a MarketInstance,
    weights: &'a [f64],
    levels: &'a [f64],
    bounds: Vec<usize>,
    // values_at[i][j] = v_i(bounds[j])
    values_at: Vec<Vec<f64>>,
    prices: Vec<f64>,
    best_rev: f64,
    best: Option<(Vec<usize>, Vec<f64>)>,
}

impl OracleSearch<'_> {
    /// Picks interior boundaries `>= from` until `k - 1` are chosen, then
    /// closes the curve at `N` and searches levels.
    fn choose_bounds(&mut self, k: usize, from: usize) {
        let n_total = self.instance.n_total();
        if self.bounds.len() == k - 1 {
            self.bounds.push(n_total);
            for (i, v) in self.instance.valuations().iter().enumerate() {
                self.values_at[i].clear();
                self.values_at[i].extend(self.bounds.iter().map(|&b| v.value(b)));
            }
            self.choose_levels(k, 0);
            self.bounds.pop();
            return;
        }
        let still_needed = k - 1 - self.bounds.len();
        for b in from..n_total {
            if n_total - b < still_needed {
                break;
            }
            self.bounds.push(b);
            self.choose_bounds(k, b + 1);
            self.bounds.pop();
        }
    }

    fn choose_levels(&mut self, k: usize, from: usize) {
        if self.prices.len() == k {
            self.evaluate();
            return;
        }
        let still_needed = k - self.prices.len();
        for li in from..self.levels.len() {
            if self.levels.len() - li < still_needed {
                break;
            }
            self.prices.push(self.levels[li]);
            self.choose_levels(k, li + 1);
            self.prices.pop();
        }
    }

    fn evaluate(&mut self) {
        let mut rev = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let vals = &self.values_at[i];
            let mut best_u = 0.0;
            let mut pay = 0.0;
            let mut buys = false;
            for (j, &price) in self.prices.iter().enumerate() {
                let u = vals[j] - price;
                if u >= 0.0 && (!buys || u >= best_u) {
                    buys = true;
                    best_u = u;
                    pay = price;
                }
            }
            rev += w * pay;
        }
        if rev > self.best_rev {
            self.best_rev = rev;
            self.best = Some((self.bounds.clone(), self.prices.clone()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_space, GridParams, Scheme};
    use crate::market::{expected_revenue, ValuationCurve};

    fn inst(curves: &[&[f64]]) -> MarketInstance {
        MarketInstance::new(curves.iter().map(|c| ValuationCurve::new(c.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn single_curve_space() {
        let i = inst(&[&[0.0, 0.4, 0.9]]);
        let sp = DiscretizedPriceSpace::from_grids(Scheme::Monotone, 0.5, 2, 1, vec![2], vec![0.7]).unwrap();
        let best = best_in_space(&i, &TypeDistribution::uniform(1), &sp).unwrap();
        assert_eq!(best.index, 0);
        assert_eq!(best.curve, MStepCurve::flat(2, 0.7));
        assert_eq!(best.revenue, 0.7);
    }

    #[test]
    fn degenerate_q_matches_direct_scan() {
        let i = inst(&[&[0.0, 0.2, 0.35, 0.5, 0.8], &[0.0, 0.5, 0.55, 0.6, 0.6]]);
        let sp = build_space(&GridParams::new(0.2, 2, 4), Scheme::Monotone).unwrap();
        for t in 0..2 {
            let q = TypeDistribution::degenerate(2, t);
            let best = best_in_space(&i, &q, &sp).unwrap();
            let scan = sp
                .iter()
                .map(|c| {
                    let n = crate::market::buyer_demand(i.valuation(t), &c).unwrap();
                    c.price(n)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(best.revenue, scan);
            assert_eq!(best.revenue, expected_revenue(&i, &q, &best.curve).unwrap());
        }
    }

    #[test]
    fn zero_weight_type_does_not_move_argmax() {
        let one = inst(&[&[0.0, 0.2, 0.35, 0.5, 0.8]]);
        let two = inst(&[&[0.0, 0.2, 0.35, 0.5, 0.8], &[0.0, 0.9, 0.9, 0.9, 0.9]]);
        let sp = build_space(&GridParams::new(0.25, 2, 4), Scheme::Monotone).unwrap();
        let a = best_in_space(&one, &TypeDistribution::uniform(1), &sp).unwrap();
        let b = best_in_space(&two, &TypeDistribution::new(vec![1.0, 0.0]).unwrap(), &sp).unwrap();
        assert_eq!(a.index, b.index);
        assert_eq!(a.revenue, b.revenue);
    }

    #[test]
    fn cap_error_reports_count() {
        let i = inst(&[&[0.0, 0.2, 0.35, 0.5, 0.8]]);
        let sp = build_space(&GridParams::new(0.2, 1, 4), Scheme::Monotone).unwrap().with_cap(2);
        let err = best_in_space(&i, &TypeDistribution::uniform(1), &sp).unwrap_err();
        assert!(matches!(err, PricingError::CapExceeded { .. }));
    }

    #[test]
    fn oracle_single_type_closed_form() {
        let values = [0.0, 0.123, 0.3, 0.456, 0.789];
        let i = inst(&[&values]);
        let best = brute_force_opt(&i, &TypeDistribution::uniform(1), 0.01).unwrap();
        // best flat price: largest grid level not above v(N)
        let closed = (0..=100)
            .map(|k| k as f64 / 100.0)
            .filter(|&w| w <= values[4])
            .fold(0.0, f64::max);
        assert_eq!(best.revenue, closed);
    }

    #[test]
    fn oracle_symmetry_over_identical_types() {
        let c: &[f64] = &[0.0, 0.3, 0.5, 0.6];
        let one = brute_force_opt(&inst(&[c]), &TypeDistribution::uniform(1), 0.05).unwrap();
        let three = brute_force_opt(&inst(&[c, c, c]), &TypeDistribution::uniform(3), 0.05).unwrap();
        assert!((one.revenue - three.revenue).abs() < 1e-12);
    }

    #[test]
    fn oracle_limits() {
        let big: Vec<f64> = (0..=16).map(|n| n as f64 / 16.0).collect();
        let i = inst(&[&big]);
        assert!(matches!(
            brute_force_opt(&i, &TypeDistribution::uniform(1), 0.01),
            Err(PricingError::TooLarge(_))
        ));
        let small = inst(&[&[0.0, 0.5]]);
        assert!(brute_force_opt(&small, &TypeDistribution::uniform(1), 0.03).is_err());
    }

    #[test]
    fn oracle_revenue_matches_its_curve() {
        let i = inst(&[&[0.0, 0.2, 0.5, 0.6, 0.65], &[0.0, 0.05, 0.1, 0.4, 0.9]]);
        let q = TypeDistribution::new(vec![0.4, 0.6]).unwrap();
        let best = brute_force_opt(&i, &q, 0.05).unwrap();
        assert!((expected_revenue(&i, &q, &best.curve).unwrap() - best.revenue).abs() < 1e-12);
    }
}
