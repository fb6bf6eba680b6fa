//! Experiment suites. Each suite maps a case id to CSV rows; summaries are
//! derived from the rows alone so that replayed rows reproduce them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nearmin_core::czd::{wavelet_good_part, weighted_cz, CZStop};
use nearmin_core::dyadic::{lp_norm, DyadicInterval, Grid, Signal};
use nearmin_core::efunctional::CoupleSpec;
use nearmin_core::muckenhoupt::{ap_characteristic, doubling_constant, power_weight, WEIGHT_CENTER};
use nearmin_core::singular::{hilbert_long_range_sweep, SingularOperator};
use nearmin_core::stabilizer::{
    admissible_radius, coefficient_preserving_sequence, companion_weight, stabilize_unweighted,
    stabilize_weighted_with, StabilizationReport, StabilizerOptions,
};
use nearmin_core::wavelet::{synthesize, WaveletBasis, WaveletCoeffs};
use nearmin_core::Weight;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, OperatorKind};
use crate::corpus::{case_rng, log_uniform, random_projection, CorpusCase};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Parses `text` as the same variant as `self`.
    pub fn parse_like(&self, text: &str) -> Result<Value> {
        Ok(match self {
            Value::Int(_) => Value::Int(text.parse()?),
            Value::Float(_) => Value::Float(text.parse()?),
            Value::Text(_) => Value::Text(text.to_string()),
            Value::Bool(_) => Value::Bool(text.parse()?),
        })
    }

    /// Equality with a relative tolerance on floats.
    pub fn close_to(&self, other: &Value, tolerance: f64) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => {
                (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= tolerance * a.abs().max(b.abs()).max(1.0)
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // both forms print the shortest digits that round-trip
            Value::Float(x) if *x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) => write!(f, "{x}"),
            Value::Float(x) => write!(f, "{x:e}"),
            Value::Text(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

pub type Row = Vec<Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    GoodPart,
    WaveletStability,
    LongRange,
    WeightedCz,
    WeightedStability,
    CoefficientSequence,
    Weights,
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| anyhow!("unknown suite {s:?}; expected one of {}", Suite::names().join(", ")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const GOOD_PART_COLUMNS: &[&str] = &["case", "level", "family", "p", "lambda", "selected", "saturated", "ratio", "cz_exact"];
const STABILITY_COLUMNS: &[&str] = &[
    "case",
    "level",
    "family",
    "components",
    "p",
    "s",
    "s_admissible",
    "t",
    "distance",
    "e_f",
    "e_tf",
    "r1",
    "r2",
    "r3",
    "off_dilate",
    "witness",
    "holder",
    "holder_bound",
    "off_dilate_ratio",
    "selected",
    "selected_measure",
    "measure_bound",
    "t_identity_residual",
    "holder_identity_residual",
    "saturated",
];
const LONG_RANGE_COLUMNS: &[&str] = &["case", "level", "weight_beta", "scale", "positions", "max_ratio"];
const WEIGHTED_CZ_COLUMNS: &[&str] = &[
    "case",
    "level",
    "w_beta",
    "v_beta",
    "p",
    "lambda",
    "cubes",
    "saturated",
    "mean_zero_residual",
    "pointwise_constant",
    "good_l1_ratio",
    "bad_l1_ratio",
    "cube_measure_ratio",
    "dilated_measure_ratio",
    "max_average_ratio",
    "outside_ratio",
    "selection_constant",
];
const WEIGHTED_STABILITY_COLUMNS: &[&str] = &[
    "case",
    "level",
    "w_beta",
    "v_beta",
    "p",
    "s",
    "s_admissible",
    "t",
    "distance",
    "e_f",
    "e_tf",
    "r1",
    "r2",
    "r3",
    "off_dilate",
    "witness",
    "holder",
    "holder_bound",
    "off_dilate_ratio",
    "selected",
    "selected_measure",
    "measure_bound",
    "t_identity_residual",
];
const SEQUENCE_COLUMNS: &[&str] =
    &["case", "family", "step", "s", "f_l1", "l1_error", "t_error", "vanishing", "leak"];
const WEIGHTS_COLUMNS: &[&str] =
    &["case", "level", "beta", "p", "depth", "trace", "characteristic", "doubling"];

/// Gnuplot data layout: one block per value of `group`, `x` then `ys`.
pub struct PlotSpec {
    pub group: &'static str,
    pub x: &'static str,
    pub ys: &'static [&'static str],
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::GoodPart,
        Suite::WaveletStability,
        Suite::LongRange,
        Suite::WeightedCz,
        Suite::WeightedStability,
        Suite::CoefficientSequence,
        Suite::Weights,
    ];

    pub fn names() -> Vec<&'static str> {
        Suite::ALL.iter().map(|s| s.name()).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::GoodPart => "good_part",
            Suite::WaveletStability => "wavelet_stability",
            Suite::LongRange => "long_range",
            Suite::WeightedCz => "weighted_cz",
            Suite::WeightedStability => "weighted_stability",
            Suite::CoefficientSequence => "coefficient_sequence",
            Suite::Weights => "weights",
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Suite::GoodPart => GOOD_PART_COLUMNS,
            Suite::WaveletStability => STABILITY_COLUMNS,
            Suite::LongRange => LONG_RANGE_COLUMNS,
            Suite::WeightedCz => WEIGHTED_CZ_COLUMNS,
            Suite::WeightedStability => WEIGHTED_STABILITY_COLUMNS,
            Suite::CoefficientSequence => SEQUENCE_COLUMNS,
            Suite::Weights => WEIGHTS_COLUMNS,
        }
    }

    pub fn plot(&self) -> PlotSpec {
        match self {
            Suite::GoodPart => PlotSpec { group: "p", x: "lambda", ys: &["ratio"] },
            Suite::WaveletStability => PlotSpec { group: "level", x: "s", ys: &["r1", "r2", "r3"] },
            Suite::LongRange => PlotSpec { group: "case", x: "scale", ys: &["max_ratio"] },
            Suite::WeightedCz => PlotSpec { group: "level", x: "lambda", ys: &["pointwise_constant", "good_l1_ratio"] },
            Suite::WeightedStability => PlotSpec { group: "level", x: "s", ys: &["r1", "r2", "r3"] },
            Suite::CoefficientSequence => PlotSpec { group: "case", x: "s", ys: &["l1_error", "t_error"] },
            Suite::Weights => PlotSpec { group: "case", x: "depth", ys: &["trace"] },
        }
    }

    pub fn case_count(&self, cfg: &ExperimentConfig) -> usize {
        match self {
            Suite::GoodPart | Suite::WaveletStability => cfg.corpus.size,
            Suite::LongRange => cfg.long_range.levels.len() * cfg.long_range.weight_betas.len(),
            Suite::WeightedCz | Suite::WeightedStability => cfg.weighted.size,
            Suite::CoefficientSequence => cfg.coefficient_sequence.cases,
            Suite::Weights => cfg.weights.levels.len() * cfg.weights.cases.len(),
        }
    }

    pub fn run_case(&self, cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
        let rows = match self {
            Suite::GoodPart => good_part_case(cfg, id),
            Suite::WaveletStability => wavelet_stability_case(cfg, id),
            Suite::LongRange => long_range_case(cfg, id),
            Suite::WeightedCz => weighted_cz_case(cfg, id),
            Suite::WeightedStability => weighted_stability_case(cfg, id),
            Suite::CoefficientSequence => sequence_case(cfg, id),
            Suite::Weights => weights_case(cfg, id),
        };
        rows.with_context(|| format!("{} case {id}", self.name()))
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub suite: Suite,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn index_of(&self, column: &str) -> usize {
        self.suite
            .columns()
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("{} has no column {column}", self.suite))
    }

    pub fn floats(&self, column: &str) -> Vec<f64> {
        let i = self.index_of(column);
        self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Values of `column` on rows where `filter_column` renders as `filter_value`.
    pub fn floats_where(&self, column: &str, filter_column: &str, filter_value: &str) -> Vec<f64> {
        let i = self.index_of(column);
        let k = self.index_of(filter_column);
        self.rows
            .iter()
            .filter(|r| r[k].to_string() == filter_value)
            .map(|r| r[i].as_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn rows_for_case(&self, id: u64) -> Vec<&Row> {
        self.rows.iter().filter(|r| r[0] == Value::Int(id as i64)).collect()
    }
}

/// Runs every case, in parallel, and concatenates rows in case order.
pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<Table> {
    let count = suite.case_count(cfg) as u64;
    let per_case: Vec<Vec<Row>> =
        (0..count).into_par_iter().map(|id| suite.run_case(cfg, id)).collect::<Result<_>>()?;
    Ok(Table { suite, rows: per_case.into_iter().flatten().collect() })
}

/// Direct re-check of the stopping-time output: disjoint, maximal, averages
/// in `(λ, 2λ]`, `|f| ≤ λ` off the selection and the measure bound.
pub fn cz_exact(f: &Signal, stop: &CZStop) -> bool {
    let grid = *f.grid();
    let lambda = stop.lambda;
    let avg = |i: DyadicInterval| {
        let cells = i.cells(&grid);
        let n = cells.len() as f64;
        f.values()[cells].iter().map(|v| v.abs()).sum::<f64>() / n
    };
    let mut covered = vec![false; grid.cells()];
    for &i in &stop.selected {
        for c in i.cells(&grid) {
            if covered[c] {
                return false;
            }
            covered[c] = true;
        }
        let a = avg(i);
        if !(a > lambda && a <= 2.0 * lambda) {
            return false;
        }
        let mut q = i;
        while let Some(parent) = q.parent() {
            if avg(parent) > lambda {
                return false;
            }
            q = parent;
        }
    }
    let free_ok = f.values().iter().zip(&covered).all(|(v, &c)| c || v.abs() <= lambda);
    let measure: f64 = stop.selected.iter().map(|i| i.measure(&grid)).sum();
    free_ok && measure <= f.l1() / lambda
}

fn reference_signal(case: &CorpusCase, cfg: &ExperimentConfig) -> Signal {
    case.signal(cfg.corpus.reference_level)
}

fn good_part_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let case = CorpusCase::generate(cfg.seed, cfg.corpus.reference_level, id);
    let mut rng = case.rng("good_part");
    let reference = reference_signal(&case, cfg);
    let root = reference.l1() / reference.grid().length();
    let lambda = log_uniform(&mut rng, root * 1.0001, reference.max_abs().max(root * 1.0001));
    let mut rows = Vec::new();
    for &level in &cfg.corpus.levels {
        let f = case.signal(level);
        let f_l1 = f.l1();
        for &family in &cfg.corpus.families {
            let basis = WaveletBasis::new(family, *f.grid());
            let cz = wavelet_good_part(&f, lambda, &basis)?;
            let exact = cz_exact(&f, &cz.stop);
            for &p in &cfg.good_part.p_values {
                let norm = lp_norm(&cz.projected, p, None)?;
                let ratio = norm / (lambda.powf(1.0 - 1.0 / p) * f_l1.powf(1.0 / p));
                rows.push(vec![
                    id.into(),
                    level.into(),
                    family.name().into(),
                    p.into(),
                    lambda.into(),
                    cz.stop.selected.len().into(),
                    cz.stop.saturated.into(),
                    ratio.into(),
                    exact.into(),
                ]);
            }
        }
    }
    Ok(rows)
}

fn report_values(r: &StabilizationReport) -> Vec<Value> {
    vec![
        r.t.unwrap_or(f64::NAN).into(),
        r.distance.into(),
        r.e_f.into(),
        r.e_tf.into(),
        r.ratios.r1.into(),
        r.ratios.r2.into(),
        r.ratios.r3.into(),
        r.terms.off_dilate.into(),
        r.terms.witness.into(),
        r.terms.holder.into(),
        r.terms.holder_bound.into(),
        if r.distance > 0.0 { r.terms.off_dilate / r.distance } else { 0.0 }.into(),
        r.selected.into(),
        r.selected_measure.into(),
        r.measure_bound.into(),
        r.t_identity_residual.into(),
    ]
}

/// Geometric radius range `[max(1.01 s_adm, 10^-decades ‖f‖), 0.999 ‖f‖]`
/// evaluated at the fraction `u ∈ [0, 1)`.
fn radius(s_adm: f64, norm: f64, decades: f64, u: f64) -> f64 {
    let lo = (1.01 * s_adm).max(norm * 10f64.powf(-decades));
    let hi = 0.999 * norm;
    if hi <= lo {
        return lo;
    }
    lo * (hi / lo).powf(u)
}

fn wavelet_stability_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let ws = &cfg.wavelet_stability;
    let case = CorpusCase::generate(cfg.seed, cfg.corpus.reference_level, id);
    let mut rng = case.rng("wavelet_stability");
    let p = ws.p_values[id as usize % ws.p_values.len()];
    let reference = reference_signal(&case, cfg);
    let couple = CoupleSpec::unweighted(p)?;
    let s_adm = admissible_radius(&reference, &couple, None)?;
    let norm = lp_norm(&reference, p, None)?;
    let s = radius(s_adm, norm, ws.decades, rng.gen_range(0.0..1.0));
    let options = StabilizerOptions { dilation: ws.dilation, slack: 1.0 };
    let mut rows = Vec::new();
    for &level in &cfg.corpus.levels {
        let f = case.signal(level);
        for &family in &cfg.corpus.families {
            let basis = WaveletBasis::new(family, *f.grid());
            let spec = random_projection(&basis, case.seed, ws.projection_density);
            let r = stabilize_unweighted(&f, s, p, &spec, &basis, options)?;
            let mut row: Row = vec![
                id.into(),
                level.into(),
                family.name().into(),
                case.components.label().into(),
                p.into(),
                s.into(),
                s_adm.into(),
            ];
            row.extend(report_values(&r));
            row.push(r.holder_identity_residual.into());
            row.push(r.saturated.into());
            rows.push(row);
        }
    }
    Ok(rows)
}

fn long_range_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let lr = &cfg.long_range;
    let nb = lr.weight_betas.len();
    let level = lr.levels[id as usize / nb];
    let beta = lr.weight_betas[id as usize % nb];
    let grid = Grid::unit(level)?;
    let w = power_weight(beta, WEIGHT_CENTER, grid)?;
    let sweep = hilbert_long_range_sweep(grid, lr.min_scale..=level - lr.finest_margin, &w)?;
    let mut per_scale: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for (i, ratio) in sweep {
        let e = per_scale.entry(i.r).or_insert((0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(ratio);
    }
    Ok(per_scale
        .into_iter()
        .map(|(r, (count, max))| vec![id.into(), level.into(), beta.into(), r.into(), count.into(), max.into()])
        .collect())
}

struct WeightedCase {
    case: CorpusCase,
    w_beta: f64,
    v_beta: f64,
    p: f64,
}

fn weighted_case(cfg: &ExperimentConfig, id: u64) -> WeightedCase {
    let wc = &cfg.weighted;
    let case = CorpusCase::generate(cfg.seed, cfg.corpus.reference_level, id);
    let [w_beta, v_beta] = wc.triples[id as usize % wc.triples.len()];
    let p = wc.p_values[(id as usize / wc.triples.len()) % wc.p_values.len()];
    WeightedCase { case, w_beta, v_beta, p }
}

fn weights_at(grid: Grid, wcase: &WeightedCase) -> Result<(Weight, Weight, Weight)> {
    let w = power_weight(wcase.w_beta, WEIGHT_CENTER, grid)?;
    let v = power_weight(wcase.v_beta, WEIGHT_CENTER, grid)?;
    let a = companion_weight(&w, &v, wcase.p)?;
    Ok((w, v, a))
}

fn weighted_cz_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let wcase = weighted_case(cfg, id);
    let u: f64 = wcase.case.rng("weighted_cz").gen_range(0.0..1.0);
    let mut rows = Vec::new();
    for &level in &cfg.weighted.levels {
        let g = wcase.case.signal(level);
        let (w, _, a) = weights_at(*g.grid(), &wcase)?;
        let gw: Vec<f64> = g.values().iter().zip(w.values()).map(|(g, w)| g.abs() * w).collect();
        let root = gw.iter().sum::<f64>() / a.values().iter().sum::<f64>();
        let top = gw.iter().zip(a.values()).map(|(x, a)| x / a).fold(0.0, f64::max);
        let lo = root * 1.0001;
        let lambda = if top > lo { lo * (top / lo).powf(u) } else { lo };
        let cz = weighted_cz(&g, lambda, &w, &a)?;
        let d = cz.diagnostics(&g)?;
        rows.push(vec![
            id.into(),
            level.into(),
            wcase.w_beta.into(),
            wcase.v_beta.into(),
            wcase.p.into(),
            lambda.into(),
            cz.cubes.len().into(),
            cz.saturated.into(),
            d.mean_zero_residual.into(),
            d.pointwise_constant.into(),
            d.good_l1_ratio.into(),
            d.bad_l1_ratio.into(),
            d.cube_measure_ratio.into(),
            d.dilated_measure_ratio.into(),
            d.max_average_ratio.into(),
            d.outside_ratio.into(),
            cz.selection_constant.into(),
        ]);
    }
    Ok(rows)
}

fn weighted_stability_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let wc = &cfg.weighted;
    let wcase = weighted_case(cfg, id);
    let u: f64 = wcase.case.rng("weighted_stability").gen_range(0.0..1.0);
    let options = StabilizerOptions { dilation: wc.dilation, slack: 1.0 };
    let mut rows = Vec::new();
    for &level in &wc.levels {
        let f = wcase.case.signal(level);
        let grid = *f.grid();
        let (w, v, a) = weights_at(grid, &wcase)?;
        let couple = CoupleSpec::new(wcase.p, Some(w.clone()), Some(v.clone()))?;
        let s_adm = admissible_radius(&f, &couple, Some(&a))?;
        let norm = couple.y_norm(&f)?;
        let s = radius(s_adm, norm, wc.decades, u);
        let op = match wc.operator {
            OperatorKind::Hilbert => SingularOperator::hilbert(grid),
        };
        let r = stabilize_weighted_with(&f, s, wcase.p, &op, &w, &v, options)?;
        let mut row: Row = vec![
            id.into(),
            level.into(),
            wcase.w_beta.into(),
            wcase.v_beta.into(),
            wcase.p.into(),
            s.into(),
            s_adm.into(),
        ];
        row.extend(report_values(&r));
        rows.push(row);
    }
    Ok(rows)
}

/// Random signal in a wavelet basis with a fraction of its detail
/// coefficients set to zero.
pub fn sparse_signal(basis: &WaveletBasis, seed: u64, id: u64, zero_fraction: f64) -> Result<Signal> {
    let mut rng = case_rng(seed, "coefficient_sequence", id);
    let mut c = WaveletCoeffs::zeros(basis);
    for v in c.coarse_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    for j in c.detail_levels() {
        let amplitude = 2f64.powf(-0.5 * j as f64);
        for v in c.level_mut(j) {
            let keep = !rng.gen_bool(zero_fraction);
            let x = rng.gen_range(-1.0..1.0) * amplitude;
            if keep {
                *v = x;
            }
        }
    }
    Ok(synthesize(&c, basis)?)
}

fn sequence_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let k = &cfg.coefficient_sequence;
    let family = cfg.corpus.families[id as usize % cfg.corpus.families.len()];
    let basis = WaveletBasis::new(family, Grid::unit(k.level)?);
    let f = sparse_signal(&basis, cfg.seed, id, k.zero_fraction)?;
    let couple = CoupleSpec::unweighted(k.p)?;
    let norm = couple.y_norm(&f)?;
    let s0 = (1.01 * admissible_radius(&f, &couple, None)?).max(1e-3 * norm);
    if s0 >= norm {
        bail!("no admissible radius below the norm");
    }
    let last = (k.steps - 1) as f64;
    let s_list: Vec<f64> = (0..k.steps)
        .map(|i| if i + 1 == k.steps { norm } else { s0 * (norm / s0).powf(i as f64 / last) })
        .collect();
    let steps = coefficient_preserving_sequence(&f, &basis, k.p, &s_list, StabilizerOptions::default())?;
    let coeffs = nearmin_core::wavelet::analyze(&f, &basis)?;
    let vanishing = coeffs.details().filter(|(_, _, v)| *v == 0.0 || v.abs() <= 1e-12).count();
    let f_l1 = f.l1();
    Ok(steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            vec![
                id.into(),
                family.name().into(),
                i.into(),
                step.s.into(),
                f_l1.into(),
                step.l1_error.into(),
                step.t_error.into(),
                vanishing.into(),
                step.vanishing_leak.unwrap_or(f64::NAN).into(),
            ]
        })
        .collect())
}

fn weights_case(cfg: &ExperimentConfig, id: u64) -> Result<Vec<Row>> {
    let m = &cfg.weights;
    let nc = m.cases.len();
    let level = m.levels[id as usize / nc];
    let wc = &m.cases[id as usize % nc];
    let w = power_weight(wc.beta, WEIGHT_CENTER, Grid::unit(level)?)?;
    let report = ap_characteristic(&w, wc.p, m.include_shifted)?;
    let doubling = doubling_constant(&w);
    Ok(report
        .trace
        .iter()
        .enumerate()
        .map(|(d, &value)| {
            vec![
                id.into(),
                level.into(),
                wc.beta.into(),
                wc.p.into(),
                d.into(),
                value.into(),
                report.characteristic.into(),
                doubling.into(),
            ]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub max: f64,
    pub median: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Stat { max: v[n - 1], median, count: n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub violations: usize,
    pub total: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn count(name: &str, flags: impl IntoIterator<Item = bool>) -> Check {
        let mut total = 0;
        let mut violations = 0;
        for ok in flags {
            total += 1;
            if !ok {
                violations += 1;
            }
        }
        Check { name: name.to_string(), violations, total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub constants: BTreeMap<String, Stat>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

fn distinct(table: &Table, column: &str) -> Vec<String> {
    let i = table.index_of(column);
    let mut seen: Vec<String> = Vec::new();
    for r in &table.rows {
        let s = r[i].to_string();
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

fn add_stat(constants: &mut BTreeMap<String, Stat>, name: String, values: &[f64]) {
    if let Some(s) = Stat::of(values) {
        constants.insert(name, s);
    }
}

/// Overall and per-level statistics for each named column.
fn per_level_stats(table: &Table, prefix: &str, columns: &[(&str, &str)], constants: &mut BTreeMap<String, Stat>) {
    for (column, name) in columns {
        add_stat(constants, format!("{prefix}.{name}"), &table.floats(column));
        for level in distinct(table, "level") {
            add_stat(
                constants,
                format!("{prefix}.{name}@J{level}"),
                &table.floats_where(column, "level", &level),
            );
        }
    }
}

/// Rounding allowance, relative to `‖f‖₁`, when comparing consecutive errors
/// of an approximating sequence.
pub const MONOTONE_SLACK: f64 = 1e-12;

pub fn summarize(table: &Table) -> Summary {
    let mut constants = BTreeMap::new();
    let mut checks = Vec::new();
    let col = |name: &str| table.index_of(name);
    match table.suite {
        Suite::GoodPart => {
            per_level_stats(table, "good_part", &[("ratio", "lp_constant")], &mut constants);
            let i = col("cz_exact");
            checks.push(Check::count("cz_exact", table.rows.iter().map(|r| r[i].as_bool() == Some(true))));
        }
        Suite::WaveletStability | Suite::WeightedStability => {
            let prefix = table.suite.name();
            per_level_stats(
                table,
                prefix,
                &[("r1", "r1"), ("r2", "r2"), ("r3", "r3"), ("off_dilate_ratio", "off_dilate_ratio")],
                &mut constants,
            );
            let (t, resid, sel, bound) =
                (col("t"), col("t_identity_residual"), col("selected_measure"), col("measure_bound"));
            let decomposed = || table.rows.iter().filter(|r| !r[t].as_f64().unwrap().is_nan());
            checks.push(Check::count("t_identity", decomposed().map(|r| r[resid].as_f64().unwrap() <= 1e-12)));
            checks.push(Check::count(
                "measure_bound",
                decomposed().map(|r| r[sel].as_f64().unwrap() <= r[bound].as_f64().unwrap() * (1.0 + 1e-12)),
            ));
            if table.suite == Suite::WaveletStability {
                let h = col("holder_identity_residual");
                checks.push(Check::count("holder_identity", decomposed().map(|r| r[h].as_f64().unwrap() <= 1e-10)));
                let (fam, off) = (col("family"), col("off_dilate"));
                checks.push(Check::count(
                    "haar_zero_tail",
                    table.rows.iter().filter(|r| r[fam].as_str() == Some("haar")).map(|r| r[off].as_f64() == Some(0.0)),
                ));
            }
        }
        Suite::LongRange => {
            per_level_stats(table, "long_range", &[("max_ratio", "constant")], &mut constants);
        }
        Suite::WeightedCz => {
            for name in
                ["pointwise_constant", "good_l1_ratio", "bad_l1_ratio", "dilated_measure_ratio", "selection_constant"]
            {
                add_stat(&mut constants, format!("weighted_cz.{name}"), &table.floats(name));
            }
            let m = col("mean_zero_residual");
            checks.push(Check::count("mean_zero", table.rows.iter().map(|r| r[m].as_f64().unwrap() <= 1e-12)));
            let c = col("cube_measure_ratio");
            checks.push(Check::count("cube_measure", table.rows.iter().map(|r| r[c].as_f64().unwrap() <= 1.0)));
        }
        Suite::CoefficientSequence => {
            let (case, l1, leak, f_l1, step) = (col("case"), col("l1_error"), col("leak"), col("f_l1"), col("step"));
            checks.push(Check::count("vanishing_preserved", table.rows.iter().map(|r| r[leak].as_f64().unwrap() <= 1e-12)));
            let mut monotone = Vec::new();
            let mut final_zero = Vec::new();
            let mut first = Vec::new();
            let ids: Vec<i64> = table.rows.iter().map(|r| if let Value::Int(i) = r[case] { i } else { -1 }).collect();
            let mut start = 0;
            while start < table.rows.len() {
                let mut end = start;
                while end < table.rows.len() && ids[end] == ids[start] {
                    end += 1;
                }
                let errs: Vec<f64> = table.rows[start..end].iter().map(|r| r[l1].as_f64().unwrap()).collect();
                let slack = MONOTONE_SLACK * table.rows[start][f_l1].as_f64().unwrap();
                monotone.push(errs.windows(2).all(|w| w[1] <= w[0] + slack));
                final_zero.push(*errs.last().unwrap() == 0.0);
                let r0 = &table.rows[start];
                debug_assert_eq!(r0[step], Value::Int(0));
                first.push(r0[l1].as_f64().unwrap() / r0[f_l1].as_f64().unwrap());
                start = end;
            }
            checks.push(Check::count("monotone_decrease", monotone));
            checks.push(Check::count("final_zero", final_zero));
            add_stat(&mut constants, "coefficient_sequence.first_step_relative_error".into(), &first);
        }
        Suite::Weights => {
            let (depth, level, ch) = (col("depth"), col("level"), col("characteristic"));
            for r in &table.rows {
                if r[depth].as_f64() == r[level].as_f64() {
                    let (beta, p) = (r[col("beta")].to_string(), r[col("p")].to_string());
                    add_stat(
                        &mut constants,
                        format!("weights.A{p}[beta={beta}]@J{}", r[level]),
                        &[r[ch].as_f64().unwrap()],
                    );
                    add_stat(
                        &mut constants,
                        format!("weights.doubling[beta={beta}]@J{}", r[level]),
                        &[r[col("doubling")].as_f64().unwrap()],
                    );
                }
            }
            let unit = table
                .rows
                .iter()
                .map(|r| r[level].as_f64().unwrap() as u32)
                .chain(std::iter::once(4))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .flat_map(|j| {
                    let grid = Grid::unit(j).expect("valid level");
                    [1.0, 2.0, 3.0].map(|p| {
                        ap_characteristic(&Weight::new(grid, vec![3.0; grid.cells()]).expect("positive"), p, true).map(|r| r.characteristic == 1.0).unwrap_or(false)
                    })
                })
                .collect::<Vec<_>>();
            checks.push(Check::count("constant_weight_unit", unit));
        }
    }
    Summary { rows: table.rows.len(), constants, checks }
}
