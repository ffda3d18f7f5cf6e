//! Step-curve algebra: reduction of a non-decreasing price curve to at most
//! `m` steps, and lazy enumeration of step curves over a data grid and a
//! value grid.

use crate::error::{PricingError, Result};
use crate::market::{MStepCurve, MarketInstance, ValuationCurve};

/// A general price curve given by its value at every amount `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCurve {
    prices: Vec<f64>,
}

impl DenseCurve {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.len() < 2 {
            return Err(PricingError::InvalidPriceCurve("need N >= 1".into()));
        }
        if prices[0] != 0.0 {
            return Err(PricingError::InvalidPriceCurve(format!(
                "price at amount 0 must be 0, got {}",
                prices[0]
            )));
        }
        if prices.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PricingError::InvalidPriceCurve(
                "prices must be finite and non-negative".into(),
            ));
        }
        Ok(Self { prices })
    }

    pub fn n_total(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn price(&self, n: usize) -> f64 {
        self.prices[n]
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// First amount `n` with `p(n) < p(n-1)`, if any.
    pub fn first_decrease(&self) -> Option<usize> {
        self.prices.windows(2).position(|w| w[1] < w[0]).map(|i| i + 1)
    }
}

impl From<&MStepCurve> for DenseCurve {
    fn from(p: &MStepCurve) -> Self {
        Self { prices: p.to_dense() }
    }
}

/// Demand under an arbitrary dense curve by scanning every amount.
pub fn dense_demand(v: &ValuationCurve, p: &DenseCurve) -> Result<usize> {
    if v.n_total() != p.n_total() {
        return Err(PricingError::Mismatch {
            what: "dense curve N vs valuation N",
            expected: v.n_total(),
            actual: p.n_total(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for n in 1..=v.n_total() {
        let u = v.value(n) - p.price(n);
        if u >= best {
            best = u;
            arg = n;
        }
    }
    Ok(if best >= 0.0 { arg } else { 0 })
}

/// Replaces a non-decreasing curve by a step curve with at most one step per
/// distinct positive demand point, earning at least as much from every type.
///
/// With demand points `d_1 < ... < d_k` the result charges `p(d_j)` on
/// `(d_{j-1}, d_j]` for `j < k` and `p(d_k)` on `(d_{k-1}, N]`; equal adjacent
/// levels are merged. If nobody buys under `p` the zero curve is returned.
pub fn m_step_reduce(p: &DenseCurve, instance: &MarketInstance) -> Result<MStepCurve> {
    let n_total = instance.n_total();
    if p.n_total() != n_total {
        return Err(PricingError::Mismatch {
            what: "dense curve N vs instance N",
            expected: n_total,
            actual: p.n_total(),
        });
    }
    if let Some(at) = p.first_decrease() {
        return Err(PricingError::NotMonotone { at });
    }
    let mut points = instance
        .valuations()
        .iter()
        .map(|v| dense_demand(v, p))
        .collect::<Result<Vec<_>>>()?;
    points.retain(|&n| n > 0);
    points.sort_unstable();
    points.dedup();

    let Some(&last) = points.last() else {
        return Ok(MStepCurve::zero(n_total));
    };
    let mut steps: Vec<(usize, f64)> = Vec::with_capacity(points.len());
    for &d in &points[..points.len() - 1] {
        steps.push((d, p.price(d)));
    }
    steps.push((n_total, p.price(last)));

    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(steps.len());
    for (b, w) in steps {
        match merged.last_mut() {
            Some(prev) if prev.1 == w => prev.0 = b,
            _ => merged.push((b, w)),
        }
    }
    MStepCurve::new(n_total, merged)
}

/// Exact size of a step-curve family, or a marker when it does not fit in
/// 128 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceCount {
    Exact(u128),
    TooLarge,
}

impl SpaceCount {
    pub fn exact(self) -> Option<u128> {
        match self {
            SpaceCount::Exact(c) => Some(c),
            SpaceCount::TooLarge => None,
        }
    }
}

impl std::fmt::Display for SpaceCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceCount::Exact(c) => write!(f, "{c}"),
            SpaceCount::TooLarge => write!(f, "too-large"),
        }
    }
}

pub(crate) fn binomial(n: usize, r: usize) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) is divisible by (i + 1)
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Lexicographic unranking of an `r`-subset of `0..n`.
fn unrank_combination(n: usize, r: usize, mut rank: u128, out: &mut Vec<usize>) {
    out.clear();
    let mut next = 0;
    for slot in 0..r {
        let remaining = r - slot - 1;
        loop {
            let block = binomial(n - next - 1, remaining).expect("within counted range");
            if rank < block {
                out.push(next);
                next += 1;
                break;
            }
            rank -= block;
            next += 1;
        }
    }
}

/// Advances `c` (an increasing `r`-subset of `0..n`) to its lexicographic
/// successor. Returns false when `c` was the last subset.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < n - r + i {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The family of non-decreasing step curves with `1..=m` steps whose interior
/// boundaries come from a data grid and whose levels come from a value grid.
///
/// The final boundary is always `N`. A `k`-step curve picks `k - 1` interior
/// boundaries from `grid \ {N}` and `k` strictly increasing levels. Curves
/// are ordered by `k`, then by boundary subset, then by value subset (both
/// lexicographic); indices refer to this order.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFamily {
    n_total: usize,
    interior: Vec<usize>,
    values: Vec<f64>,
    max_steps: usize,
}

impl StepFamily {
    pub fn new(n_total: usize, data_grid: &[usize], value_grid: &[f64], max_steps: usize) -> Result<Self> {
        if data_grid.is_empty() {
            return Err(PricingError::EmptyGrid("data grid"));
        }
        if value_grid.is_empty() {
            return Err(PricingError::EmptyGrid("value grid"));
        }
        if max_steps == 0 {
            return Err(PricingError::InvalidParameter("m must be at least 1".into()));
        }
        if data_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PricingError::InvalidParameter(
                "data grid must be sorted and deduplicated".into(),
            ));
        }
        if data_grid[0] == 0 || *data_grid.last().unwrap() > n_total {
            return Err(PricingError::InvalidParameter(format!(
                "data grid must lie in 1..={n_total}"
            )));
        }
        if value_grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PricingError::InvalidParameter(
                "value grid entries must be finite and non-negative".into(),
            ));
        }
        if value_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PricingError::InvalidParameter(
                "value grid must be sorted and deduplicated".into(),
            ));
        }
        Ok(Self {
            n_total,
            interior: data_grid.iter().copied().filter(|&b| b < n_total).collect(),
            values: value_grid.to_vec(),
            max_steps,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn value_grid(&self) -> &[f64] {
        &self.values
    }

    fn count_k(&self, k: usize) -> Option<u128> {
        binomial(self.interior.len(), k - 1)?.checked_mul(binomial(self.values.len(), k)?)
    }

    /// `sum_{k=1}^{m} C(|interior|, k-1) * C(|values|, k)`.
    pub fn count(&self) -> SpaceCount {
        let mut total: u128 = 0;
        for k in 1..=self.max_steps {
            match self.count_k(k).and_then(|c| total.checked_add(c)) {
                Some(t) => total = t,
                None => return SpaceCount::TooLarge,
            }
        }
        SpaceCount::Exact(total)
    }

    /// Curve at position `index`, or `None` past the end.
    pub fn curve_at(&self, index: u128) -> Option<MStepCurve> {
        let cursor = Cursor::at(self, index)?;
        Some(cursor.curve(self))
    }

    /// Streams every curve in order.
    pub fn iter(&self) -> StepCurves<'_> {
        StepCurves {
            family: self,
            cursor: Cursor::at(self, 0),
            end: None,
        }
    }

    /// Streams the curves with positions in `start..end`.
    pub fn iter_range(&self, start: u128, end: u128) -> StepCurves<'_> {
        StepCurves {
            family: self,
            cursor: if start < end { Cursor::at(self, start) } else { None },
            end: Some(end),
        }
    }

    /// Visits every curve in order without allocating, passing its position,
    /// boundaries (ending in `N`) and levels.
    pub fn for_each_raw<F>(&self, mut f: F)
    where
        F: FnMut(u128, &[usize], &[f64]),
    {
        let mut cursor = Cursor::at(self, 0);
        while let Some(c) = cursor.as_mut() {
            f(c.index, &c.boundaries, &c.levels);
            if !c.advance(self) {
                break;
            }
        }
    }
}

/// Position inside a [`StepFamily`].
#[derive(Debug, Clone)]
struct Cursor {
    index: u128,
    k: usize,
    bsel: Vec<usize>,
    vsel: Vec<usize>,
    boundaries: Vec<usize>,
    levels: Vec<f64>,
}

impl Cursor {
    fn at(family: &StepFamily, mut index: u128) -> Option<Self> {
        let start = index;
        for k in 1..=family.max_steps {
            let cnt = family.count_k(k)?;
            if index < cnt {
                let per_b = binomial(family.values.len(), k)?;
                let mut bsel = Vec::with_capacity(k);
                let mut vsel = Vec::with_capacity(k);
                unrank_combination(family.interior.len(), k - 1, index / per_b, &mut bsel);
                unrank_combination(family.values.len(), k, index % per_b, &mut vsel);
                let mut c = Cursor {
                    index: start,
                    k,
                    bsel,
                    vsel,
                    boundaries: Vec::with_capacity(k),
                    levels: Vec::with_capacity(k),
                };
                c.refresh(family);
                return Some(c);
            }
            index -= cnt;
        }
        None
    }

    fn refresh(&mut self, family: &StepFamily) {
        self.boundaries.clear();
        self.boundaries.extend(self.bsel.iter().map(|&j| family.interior[j]));
        self.boundaries.push(family.n_total);
        self.levels.clear();
        self.levels.extend(self.vsel.iter().map(|&j| family.values[j]));
    }

    fn advance(&mut self, family: &StepFamily) -> bool {
        let nv = family.values.len();
        let ni = family.interior.len();
        if next_combination(&mut self.vsel, nv) {
            for (slot, &j) in self.levels.iter_mut().zip(&self.vsel) {
                *slot = family.values[j];
            }
            self.index += 1;
            return true;
        }
        if next_combination(&mut self.bsel, ni) {
            self.vsel.clear();
            self.vsel.extend(0..self.k);
            self.refresh(family);
            self.index += 1;
            return true;
        }
        let k = self.k + 1;
        if k > family.max_steps || k > nv || k - 1 > ni {
            return false;
        }
        self.k = k;
        self.bsel.clear();
        self.bsel.extend(0..k - 1);
        self.vsel.clear();
        self.vsel.extend(0..k);
        self.refresh(family);
        self.index += 1;
        true
    }

    fn curve(&self, family: &StepFamily) -> MStepCurve {
        MStepCurve::from_parts_unchecked(family.n_total, self.boundaries.clone(), self.levels.clone())
    }
}

/// Lazy iterator over a [`StepFamily`].
pub struct StepCurves<'a> {
    family: &'a StepFamily,
    cursor: Option<Cursor>,
    end: Option<u128>,
}

impl Iterator for StepCurves<'_> {
    type Item = MStepCurve;

    fn next(&mut self) -> Option<MStepCurve> {
        let c = self.cursor.as_mut()?;
        if let Some(end) = self.end {
            if c.index >= end {
                self.cursor = None;
                return None;
            }
        }
        let out = c.curve(self.family);
        if !c.advance(self.family) {
            self.cursor = None;
        }
        Some(out)
    }
}

/// Exact size of the family of step curves with at most `m` steps over the
/// given grids.
pub fn count_m_steps(n_total: usize, data_grid: &[usize], value_grid: &[f64], m: usize) -> Result<SpaceCount> {
    Ok(StepFamily::new(n_total, data_grid, value_grid, m)?.count())
}

/// Lazily enumerates the step curves with at most `m` steps over the grids.
pub fn enumerate_m_steps(
    n_total: usize,
    data_grid: &[usize],
    value_grid: &[f64],
    m: usize,
) -> Result<StepFamily> {
    StepFamily::new(n_total, data_grid, value_grid, m)
}
