//! Calderón–Zygmund decompositions on the dyadic grid: the plain stopping
//! time, its wavelet good/bad split, and the weighted variant in which
//! per-cube mass is spread along the density `b = a / w`.

use serde::Serialize;

use crate::dyadic::{DyadicInterval, DyadicSums, Grid, Region, Signal, Weight};
use crate::error::{Error, Result};
use crate::wavelet::{analyze, synthesize, WaveletBasis, WaveletCoeffs};

/// Result of the dyadic stopping time at threshold `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CZStop {
    pub lambda: f64,
    /// Maximal selected intervals, ordered left to right.
    pub selected: Vec<DyadicInterval>,
    /// Selections at the finest scale, where the stopping time could not refine further.
    pub saturated: usize,
    #[serde(skip)]
    grid: Grid,
}

impl CZStop {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `true` on the finest cells of `F = root \ ∪S`.
    pub fn complement_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.grid.cells()];
        for i in &self.selected {
            mask[i.cells(&self.grid)].fill(false);
        }
        mask
    }

    /// `Σ_{I ∈ S} |I|`.
    pub fn selected_measure(&self) -> f64 {
        self.selected.iter().map(|i| i.measure(&self.grid)).sum()
    }

    /// Union of the concentric `factor`-dilates of the selected intervals.
    pub fn dilated_region(&self, factor: u32) -> Region {
        Region::dilates(self.grid, &self.selected, factor)
    }

    /// Selected intervals grouped by scale, coarse to fine.
    pub fn by_scale(&self) -> Vec<(u32, Vec<DyadicInterval>)> {
        let mut groups: Vec<(u32, Vec<DyadicInterval>)> = Vec::new();
        let mut sorted = self.selected.clone();
        sorted.sort_by_key(|i| (i.r, i.l));
        for i in sorted {
            match groups.last_mut() {
                Some((r, v)) if *r == i.r => v.push(i),
                _ => groups.push((i.r, vec![i])),
            }
        }
        groups
    }
}

struct Stopping {
    selected: Vec<DyadicInterval>,
    saturated: usize,
    /// Largest `den(parent) / den(child)` over selected intervals.
    max_parent_ratio: f64,
}

/// Depth-first stopping time: select an interval the first time
/// `num(I) / den(I) > lambda`. The root must not qualify.
fn stopping_time(num: &DyadicSums, den: &DyadicSums, level: u32, lambda: f64) -> Stopping {
    let mut out = Stopping { selected: Vec::new(), saturated: 0, max_parent_ratio: 1.0 };
    let mut stack = vec![DyadicInterval::ROOT];
    while let Some(parent) = stack.pop() {
        if parent.r == level {
            continue;
        }
        // push right child first so the selection comes out left to right
        let [left, right] = parent.children();
        for child in [left, right] {
            if num.get(child) / den.get(child) > lambda {
                out.max_parent_ratio = out.max_parent_ratio.max(den.get(parent) / den.get(child));
                if child.r == level {
                    out.saturated += 1;
                }
                out.selected.push(child);
            }
        }
        for child in [right, left] {
            if num.get(child) / den.get(child) <= lambda {
                stack.push(child);
            }
        }
    }
    out.selected.sort_by_key(|i| i.l << (level - i.r));
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::NonPositiveThreshold(lambda));
    }
    Ok(())
}

pub fn cz_stop(f: &Signal, lambda: f64) -> Result<CZStop> {
    check_lambda(lambda)?;
    let grid = *f.grid();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let num = DyadicSums::new(&abs);
    let den = DyadicSums::new(&vec![1.0; grid.cells()]);
    let root_average = num.get(DyadicInterval::ROOT) / den.get(DyadicInterval::ROOT);
    if root_average > lambda {
        return Err(Error::ThresholdBelowRootAverage { lambda, root_average });
    }
    let s = stopping_time(&num, &den, grid.level(), lambda);
    Ok(CZStop { lambda, selected: s.selected, saturated: s.saturated, grid })
}

/// The wavelet good/bad split of `f` at threshold `lambda`:
/// `good = f χ_F + Σ P_r(f χ_{I_rl})` and `f - good = Σ Q_r(f χ_{I_rl})`.
#[derive(Debug, Clone)]
pub struct WaveletCZ {
    pub stop: CZStop,
    /// `f_λ`.
    pub good: Signal,
    /// `Σ_{(r,l) ∈ S} P_r(f_rl)`, the part controlled in `L^p`.
    pub projected: Signal,
    /// `Σ_{(r,l) ∈ S} Q_r(f_rl)`.
    pub bad: Signal,
    /// Wavelet coefficients of `bad`, assembled level by level so that
    /// coefficients away from the selected intervals are exact zeros.
    pub bad_coeffs: WaveletCoeffs,
    source: Signal,
    basis: WaveletBasis,
}

impl WaveletCZ {
    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    /// `Q_r(f χ_I)` for one selected interval.
    pub fn bad_part(&self, interval: DyadicInterval) -> Result<Signal> {
        if !self.stop.selected.contains(&interval) {
            return Err(Error::InvalidArgument(format!("{interval:?} was not selected")));
        }
        let mut c = analyze(&self.source.restrict(interval), &self.basis)?;
        c.retain_levels(interval.r..self.basis.finest_level(), false);
        synthesize(&c, &self.basis)
    }

    /// Every bad part, in the order of `stop.selected`.
    pub fn bad_parts(&self) -> Result<Vec<(DyadicInterval, Signal)>> {
        self.stop.selected.iter().map(|&i| Ok((i, self.bad_part(i)?))).collect()
    }
}

pub fn wavelet_good_part(f: &Signal, lambda: f64, basis: &WaveletBasis) -> Result<WaveletCZ> {
    basis.grid().check(f.grid())?;
    let stop = cz_stop(f, lambda)?;
    let grid = *f.grid();
    let j0 = basis.coarse_level();
    let finest = basis.finest_level();

    let mut good = f.clone();
    for (v, inside_f) in good.values_mut().iter_mut().zip(stop.complement_mask()) {
        if !inside_f {
            *v = 0.0;
        }
    }
    let mut projected = Signal::zeros(grid);
    let mut bad_coeffs = WaveletCoeffs::zeros(basis);
    for (r, intervals) in stop.by_scale() {
        if r < j0 {
            return Err(Error::LevelOutOfRange { level: r, min: j0, max: finest });
        }
        // P_r and Q_r are linear, so all intervals of one scale go through one transform
        let mut part = Signal::zeros(grid);
        for i in &intervals {
            let cells = i.cells(&grid);
            part.values_mut()[cells.clone()].copy_from_slice(&f.values()[cells]);
        }
        let c = analyze(&part, basis)?;
        let mut low = c.clone();
        low.retain_levels(j0..r, true);
        let low = synthesize(&low, basis)?;
        projected.values_mut().iter_mut().zip(low.values()).for_each(|(a, b)| *a += b);
        let mut high = c;
        high.retain_levels(r..finest, false);
        bad_coeffs.add_assign(&high)?;
    }
    good.values_mut().iter_mut().zip(projected.values()).for_each(|(a, b)| *a += b);
    let bad = synthesize(&bad_coeffs, basis)?;
    Ok(WaveletCZ { stop, good, projected, bad, bad_coeffs, source: f.clone(), basis: basis.clone() })
}

/// Weighted decomposition of `G` with respect to `w` and `a`, `b = a / w`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedCZ {
    pub lambda: f64,
    pub cubes: Vec<DyadicInterval>,
    /// `G_λ`.
    #[serde(skip)]
    pub good: Signal,
    #[serde(skip)]
    pub b: Weight,
    #[serde(skip)]
    pub w: Weight,
    #[serde(skip)]
    pub a: Weight,
    /// Largest `a(parent) / a(Q_i)` over the selected cubes; bounds the
    /// selected averages by `selection_constant * lambda`.
    pub selection_constant: f64,
    pub saturated: usize,
}

/// Measured quantities behind the four properties of the weighted decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedCzDiagnostics {
    /// `max_i |∫_{Q_i}(G - G_λ)| / ∫_{Q_i}|G|`.
    pub mean_zero_residual: f64,
    /// `max |G_λ| / (λ b)`.
    pub pointwise_constant: f64,
    /// `‖G_λ‖_{L¹(w)} / ‖G‖_{L¹(w)}`.
    pub good_l1_ratio: f64,
    /// `‖G - G_λ‖_{L¹(w)} / ‖G‖_{L¹(w)}`.
    pub bad_l1_ratio: f64,
    /// `max_i a(Q_i) λ / ∫_{Q_i}|G| w`; at most 1 by selection.
    pub cube_measure_ratio: f64,
    /// `a(∪ 2Q_i) λ / ‖G‖_{L¹(w)}`.
    pub dilated_measure_ratio: f64,
    /// `max_i (a-average of |G b⁻¹| over Q_i) / λ`.
    pub max_average_ratio: f64,
    /// `max |G b⁻¹| / λ` over cells outside the cubes.
    pub outside_ratio: f64,
}

impl WeightedCZ {
    pub fn diagnostics(&self, g_source: &Signal) -> Result<WeightedCzDiagnostics> {
        let grid = *g_source.grid();
        grid.check(self.good.grid())?;
        let cw = grid.cell_width();
        let (w, a, b) = (self.w.values(), self.a.values(), self.b.values());
        let gv = g_source.values();
        let good = self.good.values();

        let mut mean_zero_residual: f64 = 0.0;
        let mut cube_measure_ratio: f64 = 0.0;
        let mut max_average_ratio: f64 = 0.0;
        for q in &self.cubes {
            let cells = q.cells(&grid);
            let diff: f64 = cells.clone().map(|c| gv[c] - good[c]).sum::<f64>() * cw;
            let mass: f64 = cells.clone().map(|c| gv[c].abs()).sum::<f64>() * cw;
            if mass > 0.0 {
                mean_zero_residual = mean_zero_residual.max(diff.abs() / mass);
            }
            let a_q: f64 = cells.clone().map(|c| a[c]).sum::<f64>() * cw;
            let gw: f64 = cells.map(|c| gv[c].abs() * w[c]).sum::<f64>() * cw;
            cube_measure_ratio = cube_measure_ratio.max(a_q * self.lambda / gw);
            max_average_ratio = max_average_ratio.max(gw / a_q / self.lambda);
        }
        let mut outside = vec![true; grid.cells()];
        for q in &self.cubes {
            outside[q.cells(&grid)].fill(false);
        }
        let outside_ratio = (0..grid.cells())
            .filter(|&c| outside[c])
            .map(|c| gv[c].abs() / b[c] / self.lambda)
            .fold(0.0, f64::max);
        let pointwise_constant = (0..grid.cells())
            .map(|c| good[c].abs() / (self.lambda * b[c]))
            .fold(0.0, f64::max);
        let g_l1w: f64 = (0..grid.cells()).map(|c| gv[c].abs() * w[c]).sum::<f64>() * cw;
        let good_l1w: f64 = (0..grid.cells()).map(|c| good[c].abs() * w[c]).sum::<f64>() * cw;
        let bad_l1w: f64 = (0..grid.cells()).map(|c| (gv[c] - good[c]).abs() * w[c]).sum::<f64>() * cw;
        let dilated = Region::dilates(grid, &self.cubes, 2).measure(Some(&self.a));
        let ratio = |num: f64| if g_l1w > 0.0 { num / g_l1w } else { 0.0 };
        Ok(WeightedCzDiagnostics {
            mean_zero_residual,
            pointwise_constant,
            good_l1_ratio: ratio(good_l1w),
            bad_l1_ratio: ratio(bad_l1w),
            cube_measure_ratio,
            dilated_measure_ratio: ratio(dilated * self.lambda),
            max_average_ratio,
            outside_ratio,
        })
    }

    pub fn dilated_region(&self, factor: u32) -> Region {
        Region::dilates(*self.good.grid(), &self.cubes, factor)
    }
}

pub fn weighted_cz(g: &Signal, lambda: f64, w: &Weight, a: &Weight) -> Result<WeightedCZ> {
    check_lambda(lambda)?;
    let grid = *g.grid();
    grid.check(w.grid())?;
    grid.check(a.grid())?;
    let b = a.zip_with(w, |a, w| a / w)?;
    // |G b⁻¹| a = |G| w
    let num_vals: Vec<f64> = g.values().iter().zip(w.values()).map(|(v, w)| v.abs() * w).collect();
    let num = DyadicSums::new(&num_vals);
    let den = DyadicSums::new(a.values());
    let root_average = num.get(DyadicInterval::ROOT) / den.get(DyadicInterval::ROOT);
    if root_average > lambda {
        return Err(Error::ThresholdBelowRootAverage { lambda, root_average });
    }
    let s = stopping_time(&num, &den, grid.level(), lambda);

    let mut good = g.clone();
    for q in &s.selected {
        let cells = q.cells(&grid);
        let mass: f64 = g.values()[cells.clone()].iter().sum();
        let b_mass: f64 = b.values()[cells.clone()].iter().sum();
        let ratio = mass / b_mass;
        for c in cells {
            good.values_mut()[c] = b.values()[c] * ratio;
        }
    }
    Ok(WeightedCZ {
        lambda,
        cubes: s.selected,
        good,
        b,
        w: w.clone(),
        a: a.clone(),
        selection_constant: s.max_parent_ratio,
        saturated: s.saturated,
    })
}
