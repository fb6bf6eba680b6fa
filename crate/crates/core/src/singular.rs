//! Discrete singular integral operators.
//!
//! The reference operator is the Hilbert transform with kernel
//! `1 / (π (x - y))` evaluated at cell midpoints. The singular cell is
//! dropped (symmetric cancellation), and data are extended by zero outside
//! the root interval.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyadic::{DyadicInterval, Grid, Region, Signal, Weight};
use crate::error::{Error, Result};
use crate::wavelet::{project_span, ProjectionSpec, WaveletBasis};

#[derive(Debug, Clone)]
pub enum SingularOperator {
    HilbertTransform { grid: Grid },
    WaveletProjection { basis: WaveletBasis, spec: ProjectionSpec },
}

impl SingularOperator {
    pub fn hilbert(grid: Grid) -> Self {
        SingularOperator::HilbertTransform { grid }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            SingularOperator::HilbertTransform { grid } => grid,
            SingularOperator::WaveletProjection { basis, .. } => basis.grid(),
        }
    }
}

fn hilbert_table(cells: usize) -> Vec<f64> {
    // table[d] = 1 / (π d), table[0] = 0 (excluded diagonal)
    (0..cells).map(|d| if d == 0 { 0.0 } else { 1.0 / (PI * d as f64) }).collect()
}

fn hilbert_apply(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let table = hilbert_table(n);
    // (Tf)(x_i) = Σ_j f_j cw / (π (i - j) cw); the cell width cancels
    (0..n)
        .into_par_iter()
        .map(|i| {
            let left: f64 = values[..i].iter().enumerate().map(|(j, f)| f * table[i - j]).sum();
            let right: f64 = values[i + 1..].iter().enumerate().map(|(m, f)| f * table[m + 1]).sum();
            left - right
        })
        .collect()
}

pub fn apply(op: &SingularOperator, f: &Signal) -> Result<Signal> {
    op.grid().check(f.grid())?;
    match op {
        SingularOperator::HilbertTransform { grid } => Signal::new(*grid, hilbert_apply(f.values())),
        SingularOperator::WaveletProjection { basis, spec } => project_span(f, basis, spec),
    }
}

/// A kernel `K(x, y)` with the Hölder exponent it is tested against.
#[derive(Clone)]
pub struct KernelSpec {
    kernel: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    alpha: f64,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec").field("alpha", &self.alpha).finish_non_exhaustive()
    }
}

impl KernelSpec {
    pub fn new(kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("Hölder exponent must be positive, got {alpha}")));
        }
        Ok(Self { kernel: Arc::new(kernel), alpha })
    }

    pub fn hilbert() -> Self {
        Self::new(|x, y| 1.0 / (PI * (x - y)), 1.0).expect("alpha is positive")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.kernel)(x, y)
    }
}

/// Empirical sup of `|K(x,y₁) - K(x,y₂)| |x - y₁|^(1+α) / |y₁ - y₂|^α` over
/// random triples with `y₁, y₂` in a dyadic interval `Q` and `x` outside `5Q`,
/// all at cell midpoints.
pub fn kernel_holder_constant(kernel: &KernelSpec, grid: &Grid, samples: usize, seed: u64) -> Result<f64> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    if grid.level() < 4 {
        return Err(Error::InvalidGrid("Hölder sampling needs at least 16 cells".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = grid.cells() as i64;
    let mut sup: f64 = 0.0;
    let mut drawn = 0;
    while drawn < samples {
        let r = rng.gen_range(2..grid.level());
        let q = DyadicInterval::new(r, rng.gen_range(0..1u64 << r));
        let span = q.cells(grid);
        let n = span.len() as i64;
        let c1 = rng.gen_range(span.clone());
        let c2 = rng.gen_range(span.clone());
        if c1 == c2 {
            continue;
        }
        // cells strictly outside the closed 5Q
        let left_room = span.start as i64 - 2 * n;
        let right_room = cells - (span.end as i64 + 2 * n);
        let x_cell = match (left_room > 0, right_room > 0) {
            (false, false) => continue,
            (true, false) => left_room - 1 - log_offset(&mut rng, left_room),
            (false, true) => span.end as i64 + 2 * n + log_offset(&mut rng, right_room),
            (true, true) => {
                if rng.gen_bool(0.5) {
                    left_room - 1 - log_offset(&mut rng, left_room)
                } else {
                    span.end as i64 + 2 * n + log_offset(&mut rng, right_room)
                }
            }
        };
        let x = grid.midpoint(x_cell as usize);
        let y1 = grid.midpoint(c1);
        let y2 = grid.midpoint(c2);
        let diff = (kernel.eval(x, y1) - kernel.eval(x, y2)).abs();
        let ratio = diff * (x - y1).abs().powf(1.0 + kernel.alpha) / (y1 - y2).abs().powf(kernel.alpha);
        sup = sup.max(ratio);
        drawn += 1;
    }
    Ok(sup)
}

/// Offset in `[0, room)`, log-uniform so that points near `5Q` are well sampled.
fn log_offset(rng: &mut ChaCha8Rng, room: i64) -> i64 {
    let u: f64 = rng.gen_range(0.0..1.0);
    (((room as f64).ln() * u).exp() as i64 - 1).clamp(0, room - 1)
}

/// `∫_{root \ 2I} |Tf| w / ∫ |f| w` for a mean-zero `f` supported in `I`.
pub fn long_range_regularity(
    op: &SingularOperator,
    f: &Signal,
    interval: DyadicInterval,
    w: &Weight,
) -> Result<f64> {
    let grid = *f.grid();
    interval.validate(&grid)?;
    grid.check(w.grid())?;
    let cells = interval.cells(&grid);
    if f.values().iter().enumerate().any(|(c, &v)| v != 0.0 && !cells.contains(&c)) {
        return Err(Error::SupportViolation(interval));
    }
    let l1 = f.l1();
    let integral = f.integral();
    if integral.abs() > 1e-12 * l1 {
        return Err(Error::NonZeroMean { integral, l1 });
    }
    let tf = apply(op, f)?;
    let mass: f64 = f.values().iter().zip(w.values()).map(|(v, w)| v.abs() * w).sum::<f64>()
        * grid.cell_width();
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(Region::dilates(grid, &[interval], 2).integral_abs_outside(&tf, Some(w)) / mass)
}

/// `+1` on the left half of `I`, `-1` on the right half.
pub fn haar_bump(grid: Grid, interval: DyadicInterval) -> Result<Signal> {
    interval.validate(&grid)?;
    if interval.r >= grid.level() {
        return Err(Error::InvalidArgument("a bump needs at least two cells".into()));
    }
    let [left, right] = interval.children();
    let mut s = Signal::interval_indicator(grid, left, 1.0);
    s.values_mut()[right.cells(&grid)].fill(-1.0);
    Ok(s)
}

/// Long-range ratio of the Hilbert transform for the Haar bump on every dyadic
/// interval with scale in `scales`.
///
/// The kernel depends on `i - j` only, so the response of one bump per scale is
/// computed once and shifted to every position.
pub fn hilbert_long_range_sweep(
    grid: Grid,
    scales: std::ops::RangeInclusive<u32>,
    w: &Weight,
) -> Result<Vec<(DyadicInterval, f64)>> {
    grid.check(w.grid())?;
    let n_cells = grid.cells() as i64;
    let table = hilbert_table(2 * grid.cells() + 1);
    let kernel = |d: i64| if d >= 0 { table[d as usize] } else { -table[(-d) as usize] };
    let wv = w.values();
    let mut out = Vec::new();
    for r in scales {
        if r >= grid.level() {
            return Err(Error::InvalidArgument(format!("scale {r} leaves no room for a bump")));
        }
        let width = 1i64 << (grid.level() - r);
        let half = width / 2;
        // response[m + n_cells] = Σ_j K(m - j) bump_j for m ∈ [-N, N)
        let response: Vec<f64> = (-n_cells..n_cells)
            .into_par_iter()
            .map(|m| {
                let pos: f64 = (0..half).map(|j| kernel(m - j)).sum();
                let neg: f64 = (half..width).map(|j| kernel(m - j)).sum();
                pos - neg
            })
            .collect();
        let ratios: Vec<(DyadicInterval, f64)> = (0..1u64 << r)
            .into_par_iter()
            .map(|l| {
                let interval = DyadicInterval::new(r, l);
                let cells = interval.cells(&grid);
                let start = cells.start as i64;
                let region = Region::dilates(grid, &[interval], 2);
                let mut num = 0.0;
                for c in 0..grid.cells() {
                    let outside = 1.0 - region.coverage(c);
                    if outside > 0.0 {
                        num += outside * response[(c as i64 - start + n_cells) as usize].abs() * wv[c];
                    }
                }
                let den: f64 = cells.map(|c| wv[c]).sum();
                (interval, num / den)
            })
            .collect();
        out.extend(ratios);
    }
    Ok(out)
}
