//! Dyadic grids and piecewise-constant functions on them.
//!
//! A [`Grid`] splits the root interval `[origin, origin + length)` into `2^J`
//! equal cells. A [`Signal`] stores one value per cell (the cell average of the
//! function it represents), so every integral below is an exact finite sum.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported finest level.
pub const MAX_LEVEL: u32 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    level: u32,
    origin: f64,
    length: f64,
}

impl Grid {
    pub fn new(level: u32, origin: f64, length: f64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidGrid(format!(
                "level {level} exceeds the maximum {MAX_LEVEL}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self { level, origin, length })
    }

    /// The grid on `[0, 1)` with `2^level` cells.
    pub fn unit(level: u32) -> Result<Self> {
        Self::new(level, 0.0, 1.0)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.cells() as f64
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        self.origin + (cell as f64 + 0.5) * self.cell_width()
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells()).map(move |c| self.midpoint(c))
    }

    /// Same level of refinement and the same root interval.
    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    pub(crate) fn check(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    pub fn root(&self) -> DyadicInterval {
        DyadicInterval::ROOT
    }
}

/// `I_rl`: the dyadic interval of scale `r` and translate `l`, i.e.
/// `origin + length * [l 2^-r, (l + 1) 2^-r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub r: u32,
    pub l: u64,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval { r: 0, l: 0 };

    pub fn new(r: u32, l: u64) -> Self {
        Self { r, l }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.r > grid.level() || self.l >= (1u64 << self.r) {
            return Err(Error::IntervalOutOfRange { r: self.r, l: self.l, level: grid.level() });
        }
        Ok(())
    }

    pub fn parent(&self) -> Option<Self> {
        (self.r > 0).then(|| Self::new(self.r - 1, self.l / 2))
    }

    pub fn children(&self) -> [Self; 2] {
        [Self::new(self.r + 1, 2 * self.l), Self::new(self.r + 1, 2 * self.l + 1)]
    }

    /// Number of finest cells covered on a grid of the given level.
    pub fn cell_count(&self, grid: &Grid) -> usize {
        1usize << (grid.level() - self.r)
    }

    /// Finest cells covered by the interval.
    pub fn cells(&self, grid: &Grid) -> Range<usize> {
        let n = self.cell_count(grid);
        let start = self.l as usize * n;
        start..start + n
    }

    pub fn measure(&self, grid: &Grid) -> f64 {
        grid.length() / (1u64 << self.r) as f64
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.r >= self.r && (other.l >> (other.r - self.r)) == self.l
    }

    pub fn overlaps(&self, other: &DyadicInterval) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// All dyadic intervals with scale at most `max_scale`, coarse to fine.
    pub fn all_up_to(max_scale: u32) -> impl Iterator<Item = DyadicInterval> {
        (0..=max_scale).flat_map(|r| (0..(1u64 << r)).map(move |l| DyadicInterval::new(r, l)))
    }
}

/// A piecewise-constant function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.cells()] }
    }

    /// Samples `func` at cell midpoints.
    pub fn from_fn(grid: Grid, func: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.midpoints().map(func).collect())
    }

    /// `height` on the cells whose midpoints lie in `[a, b)`, zero elsewhere.
    pub fn indicator(grid: Grid, a: f64, b: f64, height: f64) -> Self {
        let values = grid
            .midpoints()
            .map(|x| if x >= a && x < b { height } else { 0.0 })
            .collect();
        Self { grid, values }
    }

    /// `height` on the cells of a dyadic interval, zero elsewhere.
    pub fn interval_indicator(grid: Grid, interval: DyadicInterval, height: f64) -> Self {
        let mut s = Self::zeros(grid);
        s.values[interval.cells(&grid)].fill(height);
        s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Signal, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Signal) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Signal) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Keeps the values on `interval` and zeroes the rest (`f * chi_I`).
    pub fn restrict(&self, interval: DyadicInterval) -> Self {
        let mut out = Self::zeros(self.grid);
        let cells = interval.cells(&self.grid);
        out.values[cells.clone()].copy_from_slice(&self.values[cells]);
        out
    }

    /// `∫ f` over the root interval.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_width()
    }

    pub fn integral_over(&self, interval: DyadicInterval) -> f64 {
        self.values[interval.cells(&self.grid)].iter().sum::<f64>() * self.grid.cell_width()
    }

    /// `L^2` inner product.
    pub fn inner(&self, other: &Signal) -> Result<f64> {
        self.grid.check(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_width())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_width()
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_width()).sqrt()
    }
}

/// A strictly positive piecewise-constant weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: Grid,
    values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "{} weight values for a grid with {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = values.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveWeight(i));
        }
        Ok(Self { grid, values })
    }

    pub fn ones(grid: Grid) -> Self {
        Self { grid, values: vec![1.0; grid.cells()] }
    }

    pub fn from_signal(signal: Signal) -> Result<Self> {
        let grid = *signal.grid();
        Self::new(grid, signal.into_values())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_signal(&self) -> Signal {
        Signal::from_vec_unchecked(self.grid, self.values.clone())
    }

    /// Pointwise transform; the result must stay positive and finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Weight, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check(&other.grid)?;
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn is_unit(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// `w(I) = ∫_I w`.
    pub fn measure_of(&self, interval: DyadicInterval) -> f64 {
        self.values[interval.cells(&self.grid)].iter().sum::<f64>() * self.grid.cell_width()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_width()
    }
}

fn weight_at(weight: Option<&Weight>, cell: usize) -> f64 {
    weight.map_or(1.0, |w| w.values[cell])
}

/// `(Σ |f|^p w · cell_width)^(1/p)`, the norm of `L^p(w)`.
pub fn lp_norm(f: &Signal, p: f64, weight: Option<&Weight>) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if let Some(w) = weight {
        f.grid.check(&w.grid)?;
    }
    let cw = f.grid.cell_width();
    let sum: f64 = if p == 1.0 {
        f.values.iter().enumerate().map(|(c, v)| v.abs() * weight_at(weight, c)).sum()
    } else if p == 2.0 {
        f.values.iter().enumerate().map(|(c, v)| v * v * weight_at(weight, c)).sum()
    } else {
        f.values.iter().enumerate().map(|(c, v)| v.abs().powf(p) * weight_at(weight, c)).sum()
    };
    Ok((sum * cw).powf(1.0 / p))
}

/// `∫_I |f| w / ∫_I w`; the plain mean of `|f|` over `I` when unweighted.
pub fn interval_average(f: &Signal, interval: DyadicInterval, weight: Option<&Weight>) -> Result<f64> {
    interval.validate(&f.grid)?;
    if let Some(w) = weight {
        f.grid.check(&w.grid)?;
    }
    let cells = interval.cells(&f.grid);
    match weight {
        None => Ok(f.values[cells.clone()].iter().map(|v| v.abs()).sum::<f64>() / cells.len() as f64),
        Some(w) => {
            let num: f64 = cells.clone().map(|c| f.values[c].abs() * w.values[c]).sum();
            let den: f64 = cells.map(|c| w.values[c]).sum();
            Ok(num / den)
        }
    }
}

/// `w(E)` for a set of pairwise disjoint dyadic intervals.
pub fn weighted_measure(intervals: &[DyadicInterval], weight: &Weight) -> Result<f64> {
    for i in intervals {
        i.validate(&weight.grid)?;
    }
    check_disjoint(intervals)?;
    Ok(intervals.iter().map(|&i| weight.measure_of(i)).sum())
}

pub(crate) fn check_disjoint(intervals: &[DyadicInterval]) -> Result<()> {
    // sort by left endpoint in finest-scale units
    let max_r = intervals.iter().map(|i| i.r).max().unwrap_or(0);
    let mut spans: Vec<(u64, u64, DyadicInterval)> = intervals
        .iter()
        .map(|i| {
            let shift = max_r - i.r;
            (i.l << shift, (i.l + 1) << shift, *i)
        })
        .collect();
    spans.sort();
    for pair in spans.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::Overlap(pair[0].2, pair[1].2));
        }
    }
    Ok(())
}

/// Sums of a per-cell quantity over every dyadic interval, built bottom-up
/// so each parent is exactly the sum of its two children.
#[derive(Debug, Clone)]
pub struct DyadicSums {
    levels: Vec<Vec<f64>>,
}

impl DyadicSums {
    pub fn new(values: &[f64]) -> Self {
        assert!(values.len().is_power_of_two());
        let top = values.len().trailing_zeros() as usize;
        let mut levels = vec![Vec::new(); top + 1];
        levels[top] = values.to_vec();
        for r in (0..top).rev() {
            let finer = &levels[r + 1];
            levels[r] = finer.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        }
        Self { levels }
    }

    pub fn get(&self, interval: DyadicInterval) -> f64 {
        self.levels[interval.r as usize][interval.l as usize]
    }

    pub fn level(&self, r: u32) -> &[f64] {
        &self.levels[r as usize]
    }
}

/// A union of (possibly dilated) intervals, resolved to half-cells.
///
/// Dilating a dyadic interval by an integer factor moves its endpoints by a
/// multiple of half its length, so every endpoint falls on a half-cell
/// boundary and the region is represented exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: Grid,
    halves: Vec<u8>,
}

impl Region {
    pub fn empty(grid: Grid) -> Self {
        Self { grid, halves: vec![0; grid.cells()] }
    }

    /// Union of the concentric `factor`-dilates of the intervals, clipped to the root.
    pub fn dilates(grid: Grid, intervals: &[DyadicInterval], factor: u32) -> Self {
        let mut region = Self::empty(grid);
        for &i in intervals {
            region.add_dilate(i, factor);
        }
        region
    }

    pub fn add_dilate(&mut self, interval: DyadicInterval, factor: u32) {
        assert!(factor >= 1, "dilation factor must be positive");
        let cells = interval.cells(&self.grid);
        let n = cells.len() as i64;
        let ext = (factor as i64 - 1) * n;
        let lo = (2 * cells.start as i64 - ext).max(0);
        let hi = (2 * cells.end as i64 + ext).min(2 * self.grid.cells() as i64);
        for half in lo..hi {
            let c = (half / 2) as usize;
            self.halves[c] |= if half % 2 == 0 { 1 } else { 2 };
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Fraction of the cell inside the region: 0, 0.5 or 1.
    pub fn coverage(&self, cell: usize) -> f64 {
        self.halves[cell].count_ones() as f64 * 0.5
    }

    pub fn is_empty(&self) -> bool {
        self.halves.iter().all(|&h| h == 0)
    }

    /// `∫_region weight` (Lebesgue measure when unweighted).
    pub fn measure(&self, weight: Option<&Weight>) -> f64 {
        let s: f64 = (0..self.grid.cells())
            .map(|c| self.coverage(c) * weight_at(weight, c))
            .sum();
        s * self.grid.cell_width()
    }

    /// `∫_region |g| w`.
    pub fn integral_abs_inside(&self, g: &Signal, weight: Option<&Weight>) -> f64 {
        let s: f64 = g
            .values
            .iter()
            .enumerate()
            .map(|(c, v)| self.coverage(c) * v.abs() * weight_at(weight, c))
            .sum();
        s * self.grid.cell_width()
    }

    /// `∫_{root \ region} |g| w`.
    pub fn integral_abs_outside(&self, g: &Signal, weight: Option<&Weight>) -> f64 {
        let s: f64 = g
            .values
            .iter()
            .enumerate()
            .map(|(c, v)| (1.0 - self.coverage(c)) * v.abs() * weight_at(weight, c))
            .sum();
        s * self.grid.cell_width()
    }

    /// `(∫_region |g|^p w)^(1/p)`.
    pub fn lp_inside(&self, g: &Signal, p: f64, weight: Option<&Weight>) -> f64 {
        let s: f64 = g
            .values
            .iter()
            .enumerate()
            .map(|(c, v)| self.coverage(c) * v.abs().powf(p) * weight_at(weight, c))
            .sum();
        (s * self.grid.cell_width()).powf(1.0 / p)
    }
}
