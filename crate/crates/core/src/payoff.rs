//! Precomputed payoffs of a discretized space, shared by both learners.
//!
//! Both learners pick `argmax_p sum_i c_i * pay(p, i) (+ perturbation_p)` with
//! non-negative coefficients `c`. Curves with identical payment rows are
//! interchangeable up to their position (and perturbation), and a row that is
//! dominated componentwise can never be the unique best. The table therefore
//! keeps the distinct payment rows, and scans only the non-dominated ones.

use std::collections::HashMap;

use crate::discretization::DiscretizedPriceSpace;
use crate::error::{PricingError, Result};
use crate::market::{DemandMatrix, MStepCurve, MarketInstance};

/// A discretized space together with the instance and its demand matrix.
#[derive(Debug, Clone)]
pub struct PayoffTable {
    instance: MarketInstance,
    space: DiscretizedPriceSpace,
    matrix: DemandMatrix,
    /// Group of each curve.
    group_of: Vec<u32>,
    /// Distinct payment rows, `num_types` entries per group.
    group_pay: Vec<f64>,
    /// Smallest curve index in each group.
    group_first: Vec<usize>,
    /// Groups whose payment row is not dominated by another group's row.
    frontier: Vec<u32>,
}

impl PayoffTable {
    pub fn build(instance: &MarketInstance, space: &DiscretizedPriceSpace) -> Result<Self> {
        let matrix = space.demand_matrix(instance)?;
        let m = instance.num_types();
        let rows = matrix.num_rows();
        if rows > u32::MAX as usize {
            return Err(PricingError::CapExceeded {
                count: rows.to_string(),
                cap: u32::MAX as u64,
            });
        }
        let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut group_of = Vec::with_capacity(rows);
        let mut group_pay = Vec::new();
        let mut group_first = Vec::new();
        let mut key = Vec::with_capacity(m);
        for row in 0..rows {
            key.clear();
            key.extend(matrix.row_payments(row).iter().map(|x| x.to_bits()));
            let g = match index.get(&key) {
                Some(&g) => g,
                None => {
                    let g = group_first.len() as u32;
                    index.insert(key.clone(), g);
                    group_pay.extend_from_slice(matrix.row_payments(row));
                    group_first.push(row);
                    g
                }
            };
            group_of.push(g);
        }
        let mut table = Self {
            instance: instance.clone(),
            space: space.clone(),
            matrix,
            group_of,
            group_pay,
            group_first,
            frontier: Vec::new(),
        };
        table.frontier = table.pareto();
        Ok(table)
    }

    pub fn instance(&self) -> &MarketInstance {
        &self.instance
    }

    pub fn space(&self) -> &DiscretizedPriceSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DemandMatrix {
        &self.matrix
    }

    pub fn num_types(&self) -> usize {
        self.instance.num_types()
    }

    pub fn num_curves(&self) -> usize {
        self.matrix.num_rows()
    }

    pub fn num_groups(&self) -> usize {
        self.group_first.len()
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    pub fn curve(&self, index: usize) -> MStepCurve {
        self.space.curve_at(index).expect("curve index within the space")
    }

    pub fn payments(&self, curve: usize) -> &[f64] {
        self.matrix.row_payments(curve)
    }

    pub fn payment(&self, curve: usize, i: usize) -> f64 {
        self.matrix.payment(curve, i)
    }

    pub fn amount(&self, curve: usize, i: usize) -> usize {
        self.matrix.amount(curve, i)
    }

    pub fn purchase_set(&self, curve: usize) -> Vec<usize> {
        self.matrix.purchase_set(curve)
    }

    fn group_row(&self, g: u32) -> &[f64] {
        let m = self.num_types();
        &self.group_pay[g as usize * m..(g as usize + 1) * m]
    }

    /// Groups whose payment row is not componentwise dominated by another
    /// group's row.
    fn pareto(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.num_groups() as u32).collect();
        // A dominator sorts strictly before everything it dominates.
        order.sort_by(|&a, &b| {
            let sa: f64 = self.group_row(a).iter().sum();
            let sb: f64 = self.group_row(b).iter().sum();
            sb.total_cmp(&sa)
                .then_with(|| {
                    let (ra, rb) = (self.group_row(a), self.group_row(b));
                    rb.iter()
                        .zip(ra)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then_with(|| a.cmp(&b))
        });
        self.keep_undominated(order, |_, _| true)
    }

    fn keep_undominated(&self, order: Vec<u32>, beats: impl Fn(u32, u32) -> bool) -> Vec<u32> {
        let mut kept: Vec<u32> = Vec::new();
        for g in order {
            let row = self.group_row(g);
            let dominated = kept
                .iter()
                .any(|&h| beats(h, g) && self.group_row(h).iter().zip(row).all(|(x, y)| x >= y));
            if !dominated {
                kept.push(g);
            }
        }
        kept.sort_unstable();
        kept
    }

    /// `sum_i weights[i] * pay(curve, i)`, accumulated in type order.
    pub fn linear_score(&self, curve: usize, weights: &[f64]) -> f64 {
        score(self.payments(curve), weights)
    }

    /// First curve maximizing `sum_i weights[i] * pay(p, i)`; requires
    /// strictly positive weights.
    pub fn argmax_linear(&self, weights: &[f64]) -> (usize, f64) {
        debug_assert!(weights.iter().all(|&w| w > 0.0));
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for &g in &self.frontier {
            let s = score(self.group_row(g), weights);
            let first = self.group_first[g as usize];
            if s > best.1 || (s == best.1 && first < best.0) {
                best = (first, s);
            }
        }
        best
    }

    /// First curve maximizing `sum_i weights[i] * pay(p, i)` for any
    /// non-negative weights, by a scan over all groups.
    pub fn best_linear(&self, weights: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        // groups are numbered in order of their first curve
        for g in 0..self.num_groups() as u32 {
            let s = score(self.group_row(g), weights);
            if s > best.1 {
                best = (self.group_first[g as usize], s);
            }
        }
        best
    }

    /// `max_p sum_i weights[i] * pay(p, i)` for non-negative weights.
    pub fn max_linear_value(&self, weights: &[f64]) -> f64 {
        self.frontier
            .iter()
            .map(|&g| score(self.group_row(g), weights))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Candidate set for perturbed selection with one perturbation per curve.
    pub fn perturbed_frontier(&self, perturbations: &[f64]) -> PerturbedFrontier {
        assert_eq!(perturbations.len(), self.num_curves());
        let n = self.num_groups();
        let mut best_theta = vec![f64::NEG_INFINITY; n];
        let mut best_curve = vec![usize::MAX; n];
        for (curve, (&g, &theta)) in self.group_of.iter().zip(perturbations).enumerate() {
            let g = g as usize;
            // ties keep the earlier curve
            if theta > best_theta[g] {
                best_theta[g] = theta;
                best_curve[g] = curve;
            }
        }
        // (perturbation desc, curve asc) is the tie order of the selection, so
        // a group can only be dropped for one that also wins every tie.
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| {
            best_theta[b as usize]
                .total_cmp(&best_theta[a as usize])
                .then_with(|| best_curve[a as usize].cmp(&best_curve[b as usize]))
        });
        let groups = self.keep_undominated(order, |h, g| {
            let (h, g) = (h as usize, g as usize);
            best_theta[h] > best_theta[g] || (best_theta[h] == best_theta[g] && best_curve[h] < best_curve[g])
        });
        PerturbedFrontier {
            entries: groups
                .into_iter()
                .map(|g| (g, best_curve[g as usize], best_theta[g as usize]))
                .collect(),
        }
    }

    /// First curve maximizing `sum_i coeffs[i] * pay(p, i) + perturbation_p`.
    pub fn argmax_perturbed(&self, frontier: &PerturbedFrontier, coeffs: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for &(g, curve, theta) in &frontier.entries {
            let s = score(self.group_row(g), coeffs) + theta;
            if s > best.1 || (s == best.1 && curve < best.0) {
                best = (curve, s);
            }
        }
        best
    }
}

#[inline]
fn score(row: &[f64], weights: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &w) in row.iter().zip(weights) {
        s += w * a;
    }
    s
}

/// Groups that can win a perturbed selection, with the winning curve and
/// perturbation of each.
#[derive(Debug, Clone)]
pub struct PerturbedFrontier {
    entries: Vec<(u32, usize, f64)>,
}

impl PerturbedFrontier {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reference selection by scanning every curve; used to check the table.
pub fn scan_argmax(matrix: &DemandMatrix, coeffs: &[f64], perturbations: Option<&[f64]>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for row in 0..matrix.num_rows() {
        let mut s = score(matrix.row_payments(row), coeffs);
        if let Some(p) = perturbations {
            s += p[row];
        }
        if s > best.1 {
            best = (row, s);
        }
    }
    best
}
