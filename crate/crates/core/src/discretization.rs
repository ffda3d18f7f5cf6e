//! Value and data grids, and the three discretized price spaces built from
//! them (monotone, smooth, diminishing returns).

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::market::{DemandMatrix, MStepCurve, MarketInstance};
use crate::price_space::{SpaceCount, StepCurves, StepFamily};

/// Default cap on the number of curves a space may hold.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Which grid construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every amount `1..=N`, values from `W` starting at band 1.
    Monotone,
    /// Multiples of `floor(eps*N/(m*L))`, values from `W` starting at band 1.
    Smooth,
    /// Dense prefix plus geometric blocks, values from `W` starting at band 2.
    Diminishing,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Monotone => "monotone",
            Scheme::Smooth => "smooth",
            Scheme::Diminishing => "diminishing",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(Scheme::Monotone),
            "smooth" => Ok(Scheme::Smooth),
            "diminishing" => Ok(Scheme::Diminishing),
            other => Err(PricingError::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Inputs shared by the grid builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub epsilon: f64,
    pub m: usize,
    pub n_total: usize,
    pub smoothness: Option<f64>,
    pub diminishing: Option<f64>,
}

impl GridParams {
    pub fn new(epsilon: f64, m: usize, n_total: usize) -> Self {
        Self {
            epsilon,
            m,
            n_total,
            smoothness: None,
            diminishing: None,
        }
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }

    pub fn with_diminishing(mut self, j: f64) -> Self {
        self.diminishing = Some(j);
        self
    }

    fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.m == 0 {
            return Err(PricingError::InvalidParameter("m must be at least 1".into()));
        }
        if self.n_total == 0 {
            return Err(PricingError::InvalidParameter("N must be at least 1".into()));
        }
        Ok(())
    }
}

/// Approximation parameter matched to a horizon: `T^(-1/2)`.
pub fn default_epsilon(horizon: u64) -> f64 {
    1.0 / (horizon.max(1) as f64).sqrt()
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PricingError::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

const NUDGE: f64 = 1e-12;

/// Ceiling after a small downward nudge, so that exact integers computed
/// with rounding noise do not jump to the next integer.
fn ceil_nudged(x: f64) -> usize {
    (x - NUDGE).ceil().max(0.0) as usize
}

/// Floor after a small relative upward nudge.
fn floor_nudged(x: f64) -> usize {
    (x * (1.0 + NUDGE) + NUDGE).floor().max(0.0) as usize
}

/// `ceil(log_base(x))` computed as `ln(x)/ln(base)` with the downward nudge.
pub fn ceil_log(base: f64, x: f64) -> usize {
    ceil_nudged(x.ln() / base.ln())
}

fn round_sig15(x: f64) -> f64 {
    format!("{x:.14e}").parse().expect("formatted float parses")
}

/// Number of bands `ceil(log_{1+eps}(1/eps))`.
pub fn band_count(eps: f64) -> usize {
    ceil_log(1.0 + eps, 1.0 / eps)
}

/// Points per band `ceil((2+eps) * m)`.
pub fn points_per_band(eps: f64, m: usize) -> usize {
    ceil_nudged((2.0 + eps) * m as f64)
}

/// Value grid `W`: the union over bands `i = start_index..=K` of
/// `{ Z_{i-1} * (1 + eps*k/m) : k = 1..=ceil((2+eps)m) }` with
/// `Z_i = eps * (1+eps)^i` and `K = ceil(log_{1+eps}(1/eps))`.
///
/// Values are rounded to 15 significant digits, sorted and deduplicated.
pub fn build_value_grid(eps: f64, m: usize, start_index: usize) -> Result<Vec<f64>> {
    check_epsilon(eps)?;
    if m == 0 {
        return Err(PricingError::InvalidParameter("m must be at least 1".into()));
    }
    if !(start_index == 1 || start_index == 2) {
        return Err(PricingError::InvalidParameter(format!(
            "start index must be 1 or 2, got {start_index}"
        )));
    }
    let bands = band_count(eps);
    let per_band = points_per_band(eps, m);
    let mut grid = Vec::new();
    for i in start_index..=bands {
        let z = eps * (1.0 + eps).powi(i as i32 - 1);
        for k in 1..=per_band {
            grid.push(round_sig15(z + z * eps * k as f64 / m as f64));
        }
    }
    if grid.is_empty() {
        return Err(PricingError::EmptyGrid("value grid (no bands for this epsilon)"));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Smooth data grid `{ delta*k : k = 1..=ceil(N/delta) }` clamped to `N`,
/// with `delta = floor(eps*N/(m*L))`.
pub fn build_data_grid_smooth(eps: f64, m: usize, smoothness: f64, n_total: usize) -> Result<Vec<usize>> {
    check_epsilon(eps)?;
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(PricingError::InvalidParameter(format!(
            "smoothness constant must be positive, got {smoothness}"
        )));
    }
    if m == 0 || n_total == 0 {
        return Err(PricingError::InvalidParameter("m and N must be at least 1".into()));
    }
    let delta = floor_nudged(eps * n_total as f64 / (m as f64 * smoothness));
    if delta == 0 {
        return Err(PricingError::ResolutionTooFine {
            epsilon: eps,
            n_total,
            m,
            smoothness,
        });
    }
    let count = n_total.div_ceil(delta);
    Ok((1..=count).map(|k| (delta * k).min(n_total)).collect())
}

/// Diminishing-returns data grid: `{1, ..., floor(2Jm/eps^2)}` together with
/// blocks `Q_i = { floor(Y_i + Y_i*eps^2*k/(2Jm)) : k = 0..=floor(2Jm) }`,
/// `Y_i = floor((2Jm/eps^2)(1+eps^2)^i)` for
/// `i = 0..=ceil(log_{1+eps^2}(N*eps^2/(2Jm)))`, clamped to `N`, plus `N`.
pub fn build_data_grid_diminishing(eps: f64, m: usize, diminishing: f64, n_total: usize) -> Result<Vec<usize>> {
    check_epsilon(eps)?;
    if !(diminishing > 0.0 && diminishing.is_finite()) {
        return Err(PricingError::InvalidParameter(format!(
            "diminishing-returns constant must be positive, got {diminishing}"
        )));
    }
    if m == 0 || n_total == 0 {
        return Err(PricingError::InvalidParameter("m and N must be at least 1".into()));
    }
    let eps2 = eps * eps;
    let two_jm = 2.0 * diminishing * m as f64;
    let base = two_jm / eps2;
    if base >= n_total as f64 {
        return Ok((1..=n_total).collect());
    }
    let mut grid: Vec<usize> = (1..=floor_nudged(base).min(n_total)).collect();
    let blocks = ceil_log(1.0 + eps2, n_total as f64 / base);
    let subdivisions = floor_nudged(two_jm);
    for i in 0..=blocks {
        let y = floor_nudged(base * (1.0 + eps2).powi(i as i32)) as f64;
        for k in 0..=subdivisions {
            let n = floor_nudged(y + y * eps2 * k as f64 / two_jm).min(n_total);
            if n >= 1 {
                grid.push(n);
            }
        }
    }
    grid.push(n_total);
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// Closed-form bound `(e(N-1)/m)^m * (e*ceil(2+eps)*ceil(log_{1+eps}(1/eps)))^m`.
pub fn size_bound(n_total: usize, m: usize, eps: f64) -> f64 {
    let e = std::f64::consts::E;
    let m_f = m as f64;
    let data = e * (n_total as f64 - 1.0) / m_f;
    let value = e * (2.0 + eps - NUDGE).ceil() * band_count(eps) as f64;
    data.powf(m_f) * value.powf(m_f)
}

/// Sizes of a discretized space, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub m: usize,
    pub n_total: usize,
    pub value_grid_len: usize,
    pub data_grid_len: usize,
    /// Exact number of curves, or `None` when it overflows 128 bits.
    pub exact_count: Option<String>,
    pub size_bound: f64,
}

/// A finite family of step curves over a data grid and a value grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedPriceSpace {
    scheme: Scheme,
    epsilon: f64,
    data_grid: Vec<usize>,
    value_grid: Vec<f64>,
    family: StepFamily,
    cap: u64,
}

/// Builds the price space of the requested scheme.
pub fn build_space(params: &GridParams, scheme: Scheme) -> Result<DiscretizedPriceSpace> {
    params.validate()?;
    let GridParams {
        epsilon,
        m,
        n_total,
        ..
    } = *params;
    let (data_grid, value_grid) = match scheme {
        Scheme::Monotone => ((1..=n_total).collect(), build_value_grid(epsilon, m, 1)?),
        Scheme::Smooth => {
            let l = params.smoothness.ok_or_else(|| {
                PricingError::InvalidParameter("smooth scheme needs the smoothness constant L".into())
            })?;
            (
                build_data_grid_smooth(epsilon, m, l, n_total)?,
                build_value_grid(epsilon, m, 1)?,
            )
        }
        Scheme::Diminishing => {
            let j = params.diminishing.ok_or_else(|| {
                PricingError::InvalidParameter(
                    "diminishing scheme needs the diminishing-returns constant J".into(),
                )
            })?;
            (
                build_data_grid_diminishing(epsilon, m, j, n_total)?,
                build_value_grid(epsilon, m, 2)?,
            )
        }
    };
    DiscretizedPriceSpace::from_grids(scheme, epsilon, n_total, m, data_grid, value_grid)
}

impl DiscretizedPriceSpace {
    pub fn from_grids(
        scheme: Scheme,
        epsilon: f64,
        n_total: usize,
        m: usize,
        data_grid: Vec<usize>,
        value_grid: Vec<f64>,
    ) -> Result<Self> {
        let family = StepFamily::new(n_total, &data_grid, &value_grid, m)?;
        Ok(Self {
            scheme,
            epsilon,
            data_grid,
            value_grid,
            family,
            cap: DEFAULT_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    /// Drops grid values above `ceiling`. A level nobody can afford is never
    /// paid, and the curve without it is still in the space. When every value
    /// is above `ceiling` the smallest one is kept.
    pub fn pruned_above(self, ceiling: f64) -> Result<Self> {
        let mut values: Vec<f64> = self.value_grid.iter().copied().filter(|&w| w <= ceiling).collect();
        if values.is_empty() {
            values.push(self.value_grid[0]);
        }
        let cap = self.cap;
        Ok(Self::from_grids(
            self.scheme,
            self.epsilon,
            self.family.n_total(),
            self.family.max_steps(),
            self.data_grid,
            values,
        )?
        .with_cap(cap))
    }

    /// Drops values above the largest value any type has for the full data set.
    pub fn pruned_for(self, instance: &MarketInstance) -> Result<Self> {
        self.pruned_above(instance.max_full_value())
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.family.max_steps()
    }

    pub fn n_total(&self) -> usize {
        self.family.n_total()
    }

    pub fn data_grid(&self) -> &[usize] {
        &self.data_grid
    }

    pub fn value_grid(&self) -> &[f64] {
        &self.value_grid
    }

    pub fn family(&self) -> &StepFamily {
        &self.family
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn count(&self) -> SpaceCount {
        self.family.count()
    }

    /// Number of curves, or an error when it exceeds the cap.
    pub fn checked_len(&self) -> Result<usize> {
        match self.count() {
            SpaceCount::Exact(c) if c <= self.cap as u128 => Ok(c as usize),
            other => Err(PricingError::CapExceeded {
                count: other.to_string(),
                cap: self.cap,
            }),
        }
    }

    pub fn iter(&self) -> StepCurves<'_> {
        self.family.iter()
    }

    pub fn curve_at(&self, index: usize) -> Option<MStepCurve> {
        self.family.curve_at(index as u128)
    }

    /// Demand and payment of every type at every curve, in enumeration order.
    pub fn demand_matrix(&self, instance: &MarketInstance) -> Result<DemandMatrix> {
        if instance.n_total() != self.n_total() {
            return Err(PricingError::Mismatch {
                what: "instance N vs space N",
                expected: self.n_total(),
                actual: instance.n_total(),
            });
        }
        let len = self.checked_len()?;
        let mut dm = DemandMatrix::with_capacity(instance.num_types(), len);
        self.family.for_each_raw(|_, b, v| dm.push_steps(instance, b, v));
        Ok(dm)
    }

    pub fn size_report(&self) -> SizeReport {
        SizeReport {
            scheme: self.scheme,
            epsilon: self.epsilon,
            m: self.m(),
            n_total: self.n_total(),
            value_grid_len: self.value_grid.len(),
            data_grid_len: self.data_grid.len(),
            exact_count: self.count().exact().map(|c| c.to_string()),
            size_bound: size_bound(self.n_total(), self.m(), self.epsilon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_grid_example() {
        let w = build_value_grid(0.5, 1, 1).unwrap();
        assert_eq!(w, vec![0.75, 1.0, 1.125, 1.25, 1.5, 1.875]);
    }

    #[test]
    fn value_grid_size_and_floor() {
        for &eps in &[0.05, 0.1, 0.2, 0.3, 0.5, 0.9] {
            for m in 1..=4 {
                let w = build_value_grid(eps, m, 1).unwrap();
                assert!(w.len() <= points_per_band(eps, m) * band_count(eps));
                assert!(w.iter().all(|&x| x >= eps));
                assert!(w.windows(2).all(|p| p[0] < p[1]));
            }
        }
    }

    #[test]
    fn value_grid_rejects_bad_epsilon() {
        assert!(build_value_grid(1.0, 2, 1).is_err());
        assert!(build_value_grid(0.0, 2, 1).is_err());
        assert!(build_value_grid(1.5, 2, 1).is_err());
        // a single band leaves nothing from band 2 on
        assert_eq!(band_count(0.7), 1);
        assert!(matches!(build_value_grid(0.7, 2, 2), Err(PricingError::EmptyGrid(_))));
    }

    #[test]
    fn value_grid_band_two_nests_in_band_one() {
        for &eps in &[0.1, 0.2, 0.35] {
            for m in 1..=3 {
                let w1 = build_value_grid(eps, m, 1).unwrap();
                let w2 = build_value_grid(eps, m, 2).unwrap();
                assert!(w2.iter().all(|x| w1.contains(x)));
                assert_eq!(w1, build_value_grid(eps, m, 1).unwrap());
            }
        }
    }

    #[test]
    fn ceil_log_is_stable_at_exact_powers() {
        // log_2(8) = 3 exactly; noise must not push it to 4
        assert_eq!(ceil_log(2.0, 8.0), 3);
        assert_eq!(ceil_log(1.5, 2.0), 2);
        assert_eq!(points_per_band(0.5, 2), 5);
        assert_eq!(points_per_band(0.25, 4), 9);
    }

    #[test]
    fn smooth_grid_example() {
        let g = build_data_grid_smooth(0.1, 2, 5.0, 1000).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 10);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[1] - w[0] == 10));
    }

    #[test]
    fn smooth_grid_degenerate_cases() {
        assert_eq!(build_data_grid_smooth(0.5, 1, 0.01, 20).unwrap(), vec![20]);
        assert!(matches!(
            build_data_grid_smooth(0.01, 2, 5.0, 100),
            Err(PricingError::ResolutionTooFine { .. })
        ));
        // non-divisible N: last entry clamped
        let g = build_data_grid_smooth(0.5, 1, 1.0, 7).unwrap();
        assert_eq!(g, vec![3, 6, 7]);
    }

    #[test]
    fn diminishing_grid_dense_when_prefix_covers() {
        assert_eq!(build_data_grid_diminishing(0.5, 2, 5.0, 30).unwrap(), (1..=30).collect::<Vec<_>>());
    }

    #[test]
    fn diminishing_grid_example() {
        // J=0.5, m=2, eps=0.5: 2Jm/eps^2 = 8, ratio 1.25, floor(2Jm) = 2
        let g = build_data_grid_diminishing(0.5, 2, 0.5, 100).unwrap();
        // independent evaluation of the block formulas
        let mut expected: Vec<usize> = (1..=8).collect();
        let blocks = ((100.0f64 * 0.25 / 2.0).ln() / 1.25f64.ln()).ceil() as i32;
        assert_eq!(blocks, 12);
        for i in 0..=blocks {
            let y = (8.0 * 1.25f64.powi(i)).floor();
            for k in 0..=2 {
                let n = ((y + y * 0.25 * k as f64 / 2.0).floor() as usize).min(100);
                expected.push(n);
            }
        }
        expected.push(100);
        expected.sort_unstable();
        expected.dedup();
        assert_eq!(g, expected);
        assert_eq!(&g[..12], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
    }

    #[test]
    fn diminishing_grid_structural_bound() {
        let g = build_data_grid_diminishing(0.5, 2, 0.5, 100).unwrap();
        // 8 + 2*12 + 1 = 33 undercounts: each block holds floor(2Jm)+1 points
        assert_eq!(g.len(), 37);
        for &(eps, m, j, n) in &[(0.5, 2, 0.5, 100), (0.3, 1, 0.4, 500), (0.2, 3, 0.1, 2000), (0.4, 2, 1.3, 900)] {
            let g = build_data_grid_diminishing(eps, m, j, n).unwrap();
            let two_jm = 2.0 * j * m as f64;
            let base = two_jm / (eps * eps);
            let blocks = ((n as f64 / base).ln() / (1.0 + eps * eps).ln()).ceil();
            let bound = base.floor() + (blocks + 1.0) * (two_jm.floor() + 1.0) + 1.0;
            assert!(g.len() as f64 <= bound, "{eps} {m} {j} {n}: {} > {bound}", g.len());
        }
    }

    #[test]
    fn space_sizes() {
        let params = GridParams::new(0.5, 1, 10);
        let sp = build_space(&params, Scheme::Monotone).unwrap();
        assert_eq!(sp.count(), SpaceCount::Exact(6));
        let flat: Vec<_> = sp.iter().collect();
        assert!(flat.iter().all(|c| c.num_steps() == 1));

        let params = GridParams::new(0.3, 2, 40).with_smoothness(1.0).with_diminishing(0.2);
        let mono = build_space(&params, Scheme::Monotone).unwrap();
        let smooth = build_space(&params, Scheme::Smooth).unwrap();
        assert!(smooth.data_grid().len() < mono.data_grid().len());
        assert!(smooth.count().exact().unwrap() <= mono.count().exact().unwrap());
        let dim = build_space(&params, Scheme::Diminishing).unwrap();
        assert_eq!(dim.count().exact().unwrap(), dim.iter().count() as u128);
    }

    #[test]
    fn scheme_constants_required() {
        let params = GridParams::new(0.3, 2, 40);
        assert!(build_space(&params, Scheme::Smooth).is_err());
        assert!(build_space(&params, Scheme::Diminishing).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let params = GridParams::new(0.2, 2, 30);
        let sp = build_space(&params, Scheme::Monotone).unwrap().with_cap(10);
        assert!(matches!(sp.checked_len(), Err(PricingError::CapExceeded { .. })));
    }

    #[test]
    fn pruning_drops_only_unaffordable_levels() {
        let params = GridParams::new(0.5, 1, 10);
        let sp = build_space(&params, Scheme::Monotone).unwrap().pruned_above(1.2).unwrap();
        assert_eq!(sp.value_grid(), &[0.75, 1.0, 1.125]);
        let low = build_space(&params, Scheme::Monotone).unwrap().pruned_above(0.1).unwrap();
        assert_eq!(low.value_grid(), &[0.75]);
    }
}
