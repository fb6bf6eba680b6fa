//! Test weights and dyadic Muckenhoupt characteristics.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{Grid, Weight};
use crate::error::{Error, Result};

/// `|x - center|^beta` at the cell midpoints.
pub fn power_weight(beta: f64, center: f64, grid: Grid) -> Result<Weight> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent must be finite, got {beta}")));
    }
    if grid.midpoints().any(|x| x == center) {
        return Err(Error::MidpointCollision(center));
    }
    if beta == 0.0 {
        return Ok(Weight::ones(grid));
    }
    Weight::new(grid, grid.midpoints().map(|x| (x - center).abs().powf(beta)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub characteristic: f64,
    pub p: f64,
    pub depth: u32,
    pub include_shifted: bool,
    /// `trace[d]` is the characteristic of the weight averaged to level `d`.
    pub trace: Vec<f64>,
}

impl WeightReport {
    /// Ratios between consecutive trace entries, `trace[d + 1] / trace[d]`.
    pub fn growth(&self) -> Vec<f64> {
        self.trace.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Block averages of `values` at `level` (2^level blocks).
fn coarsen(values: &[f64], level: u32) -> Vec<f64> {
    let block = values.len() >> level;
    values.chunks(block).map(|c| c.iter().sum::<f64>() / block as f64).collect()
}

/// Pairwise-merged levels, finest first: `levels[0]` has the input values.
fn pyramid(values: Vec<f64>, merge: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
    let mut levels = vec![values];
    while levels.last().unwrap().len() > 1 {
        let next = levels.last().unwrap().chunks(2).map(|c| merge(c[0], c[1])).collect();
        levels.push(next);
    }
    levels
}

fn characteristic_at_depth(w: &[f64], p: f64, depth: u32, include_shifted: bool) -> f64 {
    let wd = coarsen(w, depth);
    let sums = pyramid(wd.clone(), |a, b| a + b);
    let dual = if p > 1.0 {
        let e = -1.0 / (p - 1.0);
        pyramid(wd.iter().map(|v| v.powf(e)).collect(), |a, b| a + b)
    } else {
        pyramid(wd, f64::min)
    };
    let value = |w_sum: f64, dual_v: f64, count: f64| {
        if p > 1.0 {
            (w_sum / count) * (dual_v / count).powf(p - 1.0)
        } else {
            (w_sum / count) / dual_v
        }
    };
    let combine_dual = |a: f64, b: f64| if p > 1.0 { a + b } else { a.min(b) };
    let mut sup: f64 = 1.0;
    for (k, (s_level, d_level)) in sums.iter().zip(&dual).enumerate() {
        let count = (1u64 << k) as f64;
        for (s, d) in s_level.iter().zip(d_level) {
            sup = sup.max(value(*s, *d, count));
        }
        if include_shifted && s_level.len() >= 4 {
            // unions of two neighbouring nodes straddling a parent boundary
            for m in (1..s_level.len() - 1).step_by(2) {
                let s = s_level[m] + s_level[m + 1];
                let d = combine_dual(d_level[m], d_level[m + 1]);
                sup = sup.max(value(s, d, 2.0 * count));
            }
        }
    }
    sup
}

/// Supremum over dyadic intervals of `⟨w⟩ ⟨w^(-1/(p-1))⟩^(p-1)` (or
/// `⟨w⟩ / min w` for `p = 1`), optionally also over the half-shifted
/// intervals, with the trace over coarsening depths.
pub fn ap_characteristic(w: &Weight, p: f64, include_shifted: bool) -> Result<WeightReport> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let max = w.values().iter().fold(0.0f64, |m, &v| m.max(v));
    let normalized: Vec<f64> = w.values().iter().map(|v| v / max).collect();
    let depth = w.grid().level();
    let trace: Vec<f64> = (0..=depth)
        .into_par_iter()
        .map(|d| characteristic_at_depth(&normalized, p, d, include_shifted))
        .collect();
    Ok(WeightReport { characteristic: trace[depth as usize], p, depth, include_shifted, trace })
}

/// `sup_I w(2I) / w(I)` over dyadic `I`, with `2I` clipped to the root.
pub fn doubling_constant(w: &Weight) -> f64 {
    let grid = *w.grid();
    let n = grid.cells();
    let v = w.values();
    let mut prefix = vec![0.0; n + 1];
    for c in 0..n {
        prefix[c + 1] = prefix[c] + v[c];
    }
    // mass of [0, h/2) in cell units for a half-cell position h
    let at_half = |h: i64| -> f64 {
        let h = h.clamp(0, 2 * n as i64) as usize;
        let c = h / 2;
        if h % 2 == 1 {
            prefix[c] + 0.5 * v[c]
        } else {
            prefix[c]
        }
    };
    (0..=grid.level())
        .into_par_iter()
        .map(|r| {
            let width = n >> r;
            (0..1usize << r)
                .map(|l| {
                    let (start, end) = (l * width, (l + 1) * width);
                    let inner = prefix[end] - prefix[start];
                    let outer = at_half(2 * end as i64 + width as i64) - at_half(2 * start as i64 - width as i64);
                    outer / inner
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightTriple {
    #[serde(skip)]
    pub w: Weight,
    #[serde(skip)]
    pub v: Weight,
    #[serde(skip)]
    pub a: Weight,
    pub w_beta: f64,
    pub v_beta: f64,
    pub p: f64,
    /// `A_1` characteristic of `w`.
    pub w_report: WeightReport,
    /// `A_p` characteristic of `v`.
    pub v_report: WeightReport,
    /// `A_q` characteristic of `a` with `q = max(p, 2)`, the `A_∞` proxy.
    pub a_report: WeightReport,
    pub a_doubling: f64,
}

pub const WEIGHT_CENTER: f64 = 0.5;

/// Power weights `w`, `v` centred at ½ and `a = (w^p / v)^(1/(p-1))`.
pub fn weight_triple(w_beta: f64, v_beta: f64, p: f64, grid: Grid) -> Result<WeightTriple> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let center = grid.origin() + WEIGHT_CENTER * grid.length();
    let w = power_weight(w_beta, center, grid)?;
    let v = power_weight(v_beta, center, grid)?;
    let a_beta = (p * w_beta - v_beta) / (p - 1.0);
    let a = if a_beta == 0.0 {
        Weight::ones(grid)
    } else {
        w.zip_with(&v, |w, v| (w.powf(p) / v).powf(1.0 / (p - 1.0)))?
    };
    let w_report = ap_characteristic(&w, 1.0, true)?;
    let v_report = ap_characteristic(&v, p, true)?;
    let a_report = ap_characteristic(&a, p.max(2.0), true)?;
    let a_doubling = doubling_constant(&a);
    Ok(WeightTriple { w, v, a, w_beta, v_beta, p, w_report, v_report, a_report, a_doubling })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation over every dyadic interval at full resolution.
    fn brute_characteristic(w: &Weight, p: f64) -> f64 {
        let grid = *w.grid();
        let max = w.values().iter().cloned().fold(0.0, f64::max);
        let v: Vec<f64> = w.values().iter().map(|x| x / max).collect();
        let mut sup: f64 = 1.0;
        for r in 0..=grid.level() {
            let width = grid.cells() >> r;
            for l in 0..1usize << r {
                let cells = &v[l * width..(l + 1) * width];
                let avg = cells.iter().sum::<f64>() / width as f64;
                let value = if p > 1.0 {
                    let dual = cells.iter().map(|x| x.powf(-1.0 / (p - 1.0))).sum::<f64>() / width as f64;
                    avg * dual.powf(p - 1.0)
                } else {
                    avg / cells.iter().cloned().fold(f64::INFINITY, f64::min)
                };
                sup = sup.max(value);
            }
        }
        sup
    }

    #[test]
    fn power_weight_examples() {
        let grid = Grid::unit(6).unwrap();
        assert_eq!(power_weight(0.0, 0.5, grid).unwrap(), Weight::ones(grid));
        let w = power_weight(1.0, 0.0, grid).unwrap();
        for (v, x) in w.values().iter().zip(grid.midpoints()) {
            assert_eq!(*v, x);
        }
        let w = power_weight(-0.5, 0.5, grid).unwrap();
        let n = grid.cells();
        for c in 0..n {
            assert!(w.values()[c].is_finite() && w.values()[c] > 0.0);
            assert!((w.values()[c] - w.values()[n - 1 - c]).abs() < 1e-12);
        }
        assert_eq!(power_weight(1.0, grid.midpoint(3), grid), Err(Error::MidpointCollision(grid.midpoint(3))));
    }

    #[test]
    fn constant_weight_has_unit_characteristic() {
        let grid = Grid::unit(8).unwrap();
        for c in [1.0, 0.3, 7.0] {
            let w = Weight::new(grid, vec![c; grid.cells()]).unwrap();
            for p in [1.0, 1.5, 2.0, 4.0] {
                for shifted in [false, true] {
                    let r = ap_characteristic(&w, p, shifted).unwrap();
                    assert_eq!(r.characteristic, 1.0);
                    assert!(r.trace.iter().all(|&t| t == 1.0));
                }
            }
        }
        assert!(ap_characteristic(&Weight::ones(grid), 0.5, false).is_err());
    }

    #[test]
    fn full_depth_matches_direct_sup() {
        let grid = Grid::unit(7).unwrap();
        let w = power_weight(-0.4, 0.37, grid).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let r = ap_characteristic(&w, p, false).unwrap();
            let brute = brute_characteristic(&w, p);
            assert!((r.characteristic - brute).abs() <= 1e-12 * brute, "p = {p}");
            assert_eq!(r.trace.len(), 8);
            assert!(ap_characteristic(&w, p, true).unwrap().characteristic >= r.characteristic);
        }
    }

    #[test]
    fn a1_trace_converges_and_a2_trace_grows() {
        let grid = Grid::unit(12).unwrap();
        let w = power_weight(-0.5, 0.5, grid).unwrap();
        let r = ap_characteristic(&w, 1.0, false).unwrap();
        let g = r.growth();
        assert!(g[g.len() - 3..].iter().all(|&x| x < 1.01), "{:?}", r.trace);
        let w = power_weight(1.5, 0.5, grid).unwrap();
        let r = ap_characteristic(&w, 2.0, false).unwrap();
        let g = r.growth();
        assert!(g[g.len() - 3..].iter().all(|&x| x >= 1.1), "{:?}", r.trace);
    }

    #[test]
    fn doubling_examples() {
        let grid = Grid::unit(6).unwrap();
        assert_eq!(doubling_constant(&Weight::ones(grid)), 2.0);
        let mut spike = vec![1.0; grid.cells()];
        spike[20] = 1e6;
        let d = doubling_constant(&Weight::new(grid, spike).unwrap());
        // the neighbouring cell's dilate holds half the spike
        assert!((d - (1.0 + 0.5 + 0.5e6)).abs() < 1e-6, "{d}");
        let w = power_weight(-0.5, 0.5, grid).unwrap();
        let d6 = doubling_constant(&w);
        let d10 = doubling_constant(&power_weight(-0.5, 0.5, Grid::unit(10).unwrap()).unwrap());
        assert!(d6.is_finite() && (d10 / d6 - 1.0).abs() < 0.15, "{d6} {d10}");
    }

    #[test]
    fn triple_examples() {
        let grid = Grid::unit(8).unwrap();
        let t = weight_triple(0.0, 0.0, 2.0, grid).unwrap();
        assert!(t.a.is_unit());
        assert_eq!(
            (t.w_report.characteristic, t.v_report.characteristic, t.a_report.characteristic),
            (1.0, 1.0, 1.0)
        );
        let t = weight_triple(-0.25, 0.0, 2.0, grid).unwrap();
        let expected = power_weight(-0.5, 0.5, grid).unwrap();
        for (a, e) in t.a.values().iter().zip(expected.values()) {
            assert!((a - e).abs() <= 1e-12 * e);
        }
        assert!(t.a_report.characteristic.is_finite());
        let t = weight_triple(-0.25, 0.25, 2.0, grid).unwrap();
        let expected = power_weight(-0.75, 0.5, grid).unwrap();
        for (a, e) in t.a.values().iter().zip(expected.values()) {
            assert!((a - e).abs() <= 1e-12 * e);
        }
        assert!(weight_triple(0.0, 0.0, 1.0, grid).is_err());
    }
}
