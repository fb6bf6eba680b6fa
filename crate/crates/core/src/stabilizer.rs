//! Stable near-minimizers.
//!
//! Given a near-minimizer `h` of `E(s, f)`, the function `u = h + (f - h)_t`
//! replaces `f - h` by the good part of its decomposition at the threshold
//! `t = (s^p / ‖f - h‖)^(1/(p-1))`. The report records how far `u` is from
//! being a near-minimizer for both `f` and `Tf`, together with the pieces of
//! the estimate for `‖Tf - Tu‖` inside and outside the dilated intervals.

use serde::{Deserialize, Serialize};

use crate::czd::{wavelet_good_part, weighted_cz};
use crate::dyadic::{lp_norm, Region, Signal, Weight};
use crate::efunctional::{near_minimizer, saturation_level, truncate_at_level, truncate_to_ball, CoupleSpec};
use crate::error::{Error, Result};
use crate::singular::{apply, SingularOperator};
use crate::wavelet::{analyze, project_span, ProjectionSpec, WaveletBasis};

/// Ratios with both sides below this are reported as 0.
pub const RATIO_FLOOR: f64 = 1e-14;

pub const DEFAULT_DILATION: u32 = 30;
pub const WEIGHTED_DILATION: u32 = 2;

/// Coefficients of `f` at most this fraction of its largest coefficient count as zero.
pub const VANISHING_TOLERANCE: f64 = 1e-12;

/// `t = (s^p / ‖f - h‖)^(1/(p-1))`.
pub fn t_parameter(s: f64, p: f64, r1norm: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NegativeRadius(s));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(r1norm.is_finite() && r1norm >= 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be non-negative, got {r1norm}")));
    }
    if r1norm == 0.0 {
        return Err(Error::AlreadyOptimal);
    }
    Ok((s.powf(p) / r1norm).powf(1.0 / (p - 1.0)))
}

pub fn guarded_ratio(num: f64, den: f64) -> f64 {
    if num.abs() < RATIO_FLOOR && den.abs() < RATIO_FLOOR {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    /// `‖u‖_Y / s`.
    pub r1: f64,
    /// `‖f - u‖_X / E(s, f)`.
    pub r2: f64,
    /// `‖Tf - Tu‖_X / (E(s, f) + E(s, Tf))`.
    pub r3: f64,
}

/// Pieces of the estimate for `‖Tf - Tu‖_X`, split by the dilated region `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TermBreakdown {
    /// `∫_{root \ D} |T(f - u)|`, from the bad coefficients when available.
    pub off_dilate: f64,
    /// `∫_D |Tf - v|` for the witness `v`.
    pub witness: f64,
    /// `∫_D |Tu - v|`.
    pub holder: f64,
    /// `‖Tu - v‖_{L^p(D)} |D|^(1/p')`, the Hölder bound on `holder`.
    pub holder_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    #[serde(skip)]
    pub u: Signal,
    #[serde(skip)]
    pub h: Signal,
    #[serde(skip)]
    pub witness_v: Signal,
    pub s: f64,
    pub p: f64,
    /// `None` when `f - h` vanishes and no decomposition was needed.
    pub t: Option<f64>,
    /// `‖f - h‖_X`.
    pub distance: f64,
    pub e_f: f64,
    pub e_tf: f64,
    pub ratios: Ratios,
    pub terms: TermBreakdown,
    pub dilation: u32,
    pub selected: usize,
    /// `Σ|I|` (or `a(∪Q)` in the weighted case).
    pub selected_measure: f64,
    /// `‖f - h‖_X / t`.
    pub measure_bound: f64,
    /// `|t^(p-1) ‖f - h‖ - s^p| / s^p`.
    pub t_identity_residual: f64,
    /// `|s (‖f - h‖ / t)^(1/p') - ‖f - h‖| / ‖f - h‖`.
    pub holder_identity_residual: f64,
    /// Cells selected at the finest scale.
    pub saturated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizerOptions {
    pub dilation: u32,
    /// Slack passed to [`near_minimizer`] when choosing `h`.
    pub slack: f64,
}

impl Default for StabilizerOptions {
    fn default() -> Self {
        Self { dilation: DEFAULT_DILATION, slack: 1.0 }
    }
}

struct Pieces<'a> {
    f: &'a Signal,
    s: f64,
    couple: &'a CoupleSpec,
    h: Signal,
    tf: Signal,
    e_f: f64,
    distance: f64,
}

struct Decomposed {
    u: Signal,
    t: f64,
    region: Region,
    /// `T(f - u)` off the region when it is known more precisely than `Tf - Tu`.
    t_bad: Option<Signal>,
    selected: usize,
    selected_measure: f64,
    region_measure: f64,
    saturated: usize,
}

fn check_radius(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NegativeRadius(s));
    }
    Ok(())
}

fn finish(
    pieces: Pieces<'_>,
    dec: Option<Decomposed>,
    apply_t: impl Fn(&Signal) -> Result<Signal>,
    dilation: u32,
) -> Result<StabilizationReport> {
    let Pieces { f, s, couple, h, tf, e_f, distance } = pieces;
    let p = couple.p();
    let witness = truncate_to_ball(&tf, s, couple)?;
    let e_tf = witness.e_value;
    let v = witness.g;
    let (u, tu) = match &dec {
        Some(d) => (d.u.clone(), apply_t(&d.u)?),
        None => (h.clone(), apply_t(&h)?),
    };
    let r1 = guarded_ratio(couple.y_norm(&u)?, s);
    let r2 = guarded_ratio(couple.x_norm(&f.sub(&u)?)?, e_f);
    let r3 = guarded_ratio(couple.x_norm(&tf.sub(&tu)?)?, e_f + e_tf);
    let ratios = Ratios { r1, r2, r3 };
    let w = couple.w();

    let Some(d) = dec else {
        return Ok(StabilizationReport {
            u,
            h,
            witness_v: v,
            s,
            p,
            t: None,
            distance,
            e_f,
            e_tf,
            ratios,
            terms: TermBreakdown::default(),
            dilation,
            selected: 0,
            selected_measure: 0.0,
            measure_bound: 0.0,
            t_identity_residual: 0.0,
            holder_identity_residual: 0.0,
            saturated: 0,
        });
    };

    let off_dilate = match &d.t_bad {
        Some(t_bad) => d.region.integral_abs_outside(t_bad, w),
        None => d.region.integral_abs_outside(&tf.sub(&tu)?, w),
    };
    let tf_v = tf.sub(&v)?;
    let tu_v = tu.sub(&v)?;
    let p_conj = p / (p - 1.0);
    let terms = TermBreakdown {
        off_dilate,
        witness: d.region.integral_abs_inside(&tf_v, w),
        holder: d.region.integral_abs_inside(&tu_v, w),
        holder_bound: d.region.lp_inside(&tu_v, p, couple.v()) * d.region_measure.powf(1.0 / p_conj),
    };
    let t = d.t;
    let sp = s.powf(p);
    let measure_bound = distance / t;
    Ok(StabilizationReport {
        u,
        h,
        witness_v: v,
        s,
        p,
        t: Some(t),
        distance,
        e_f,
        e_tf,
        ratios,
        terms,
        dilation,
        selected: d.selected,
        selected_measure: d.selected_measure,
        measure_bound,
        t_identity_residual: (t.powf(p - 1.0) * distance - sp).abs() / sp,
        holder_identity_residual: (s * measure_bound.powf(1.0 / p_conj) - distance).abs() / distance,
        saturated: d.saturated,
    })
}

fn prepare<'a>(
    f: &'a Signal,
    s: f64,
    couple: &'a CoupleSpec,
    slack: f64,
    tf: Signal,
) -> Result<Pieces<'a>> {
    let near = near_minimizer(f, s, couple, slack)?;
    let e_f = if slack == 1.0 { near.e_value } else { truncate_to_ball(f, s, couple)?.e_value };
    let distance = near.e_value;
    Ok(Pieces { f, s, couple, h: near.g, tf, e_f, distance })
}

/// `u = h + (f - h)_t` for the projection `T` onto a span of wavelets.
pub fn stabilize_unweighted(
    f: &Signal,
    s: f64,
    p: f64,
    spec: &ProjectionSpec,
    basis: &WaveletBasis,
    options: StabilizerOptions,
) -> Result<StabilizationReport> {
    check_radius(s)?;
    basis.grid().check(f.grid())?;
    spec.validate(basis)?;
    if options.dilation == 0 {
        return Err(Error::InvalidArgument("dilation must be positive".into()));
    }
    let couple = CoupleSpec::unweighted(p)?;
    let tf = project_span(f, basis, spec)?;
    let pieces = prepare(f, s, &couple, options.slack, tf)?;
    let apply_t = |g: &Signal| project_span(g, basis, spec);
    if pieces.distance == 0.0 {
        return finish(pieces, None, apply_t, options.dilation);
    }
    let t = t_parameter(s, p, pieces.distance)?;
    let cz = wavelet_good_part(&f.sub(&pieces.h)?, t, basis)?;
    let u = pieces.h.add(&cz.good)?;
    let region = cz.stop.dilated_region(options.dilation);
    let dec = Decomposed {
        u,
        t,
        region_measure: region.measure(None),
        t_bad: Some(spec.apply_coeffs(basis, &cz.bad_coeffs)?),
        region,
        selected: cz.stop.selected.len(),
        selected_measure: cz.stop.selected_measure(),
        saturated: cz.stop.saturated,
    };
    finish(pieces, Some(dec), apply_t, options.dilation)
}

/// `a = (w^p / v)^(1/(p-1))`.
pub fn companion_weight(w: &Weight, v: &Weight, p: f64) -> Result<Weight> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    w.zip_with(v, |w, v| (w.powf(p) / v).powf(1.0 / (p - 1.0)))
}

/// `u = h + (f - h)_t` with the weighted decomposition, for the couple
/// `(L¹(w), L^p(v))`.
pub fn stabilize_weighted(
    f: &Signal,
    s: f64,
    p: f64,
    op: &SingularOperator,
    w: &Weight,
    v: &Weight,
) -> Result<StabilizationReport> {
    stabilize_weighted_with(f, s, p, op, w, v, StabilizerOptions { dilation: WEIGHTED_DILATION, slack: 1.0 })
}

pub fn stabilize_weighted_with(
    f: &Signal,
    s: f64,
    p: f64,
    op: &SingularOperator,
    w: &Weight,
    v: &Weight,
    options: StabilizerOptions,
) -> Result<StabilizationReport> {
    check_radius(s)?;
    op.grid().check(f.grid())?;
    if options.dilation == 0 {
        return Err(Error::InvalidArgument("dilation must be positive".into()));
    }
    let couple = CoupleSpec::new(p, Some(w.clone()), Some(v.clone()))?;
    let a = companion_weight(w, v, p)?;
    let tf = apply(op, f)?;
    let pieces = prepare(f, s, &couple, options.slack, tf)?;
    let apply_t = |g: &Signal| apply(op, g);
    if pieces.distance == 0.0 {
        return finish(pieces, None, apply_t, options.dilation);
    }
    let t = t_parameter(s, p, pieces.distance)?;
    let cz = weighted_cz(&f.sub(&pieces.h)?, t, w, &a)?;
    let u = pieces.h.add(&cz.good)?;
    let region = cz.dilated_region(options.dilation);
    let dec = Decomposed {
        u,
        t,
        region_measure: region.measure(Some(&a)),
        t_bad: None,
        region,
        selected: cz.cubes.len(),
        selected_measure: Region::dilates(*f.grid(), &cz.cubes, 1).measure(Some(&a)),
        saturated: cz.saturated,
    };
    finish(pieces, Some(dec), apply_t, options.dilation)
}

/// Smallest radius for which the decomposition at `t(s)` is defined on the
/// bounded root interval, i.e. `t(s)` is at least the root average of
/// `|f - h| w / a` (with `a ≡ 1` when absent).
///
/// With `A = a(root)` the condition reads `s ≥ E(s, f) A^(-1/p')`. Both sides
/// are monotone along the family of truncations `g_c`, whose norm is the radius
/// they minimize for, so the search runs over the truncation level `c`.
pub fn admissible_radius(f: &Signal, couple: &CoupleSpec, a: Option<&Weight>) -> Result<f64> {
    let p = couple.p();
    let a_total = match a {
        Some(a) => {
            f.grid().check(a.grid())?;
            a.total()
        }
        None => f.grid().length(),
    };
    let scale = a_total.powf(-(p - 1.0) / p);
    let radius_at = |c: f64| -> Result<(f64, bool)> {
        let g = truncate_at_level(f, couple, c)?;
        let s = couple.y_norm(&g)?;
        let dist = couple.x_norm(&f.sub(&g)?)?;
        Ok((s, s >= dist * scale))
    };
    let mut hi = saturation_level(f, couple);
    if hi == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if radius_at(mid)?.1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(radius_at(hi)?.0)
}

/// One approximant of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxStep {
    pub s: f64,
    #[serde(skip)]
    pub f_k: Signal,
    /// `‖f_k - f‖_1`.
    pub l1_error: f64,
    /// `‖T f_k - T f‖_1` (restricted to `E` when the projection carries one).
    pub t_error: f64,
    /// Largest `|⟨T f_k, Ψ⟩|` over the coefficients of `f` that vanish; only
    /// set in coefficient-preserving mode.
    pub vanishing_leak: Option<f64>,
}

fn check_increasing(s_list: &[f64]) -> Result<()> {
    if s_list.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::NotIncreasing);
    }
    Ok(())
}

/// Stable near-minimizers along an increasing list of radii.
pub fn approx_sequence(
    f: &Signal,
    spec: &ProjectionSpec,
    basis: &WaveletBasis,
    p: f64,
    s_list: &[f64],
    options: StabilizerOptions,
) -> Result<Vec<ApproxStep>> {
    check_increasing(s_list)?;
    let tf = project_span(f, basis, spec)?;
    s_list
        .iter()
        .map(|&s| {
            let report = stabilize_unweighted(f, s, p, spec, basis, options)?;
            let tfk = project_span(&report.u, basis, spec)?;
            Ok(ApproxStep {
                s,
                l1_error: report.u.sub(f)?.l1(),
                t_error: tfk.sub(&tf)?.l1(),
                f_k: report.u,
                vanishing_leak: None,
            })
        })
        .collect()
}

/// Approximants `g_k = T f_k` where `T` projects onto the wavelets at which
/// `f` has a nonzero coefficient, so every `g_k` keeps the zero coefficients
/// of `f`. `f_k` in each step is `g_k`; once `u = f` the step returns `f`
/// itself, which lies in the range of `T`, rather than its rounded projection.
pub fn coefficient_preserving_sequence(
    f: &Signal,
    basis: &WaveletBasis,
    p: f64,
    s_list: &[f64],
    options: StabilizerOptions,
) -> Result<Vec<ApproxStep>> {
    check_increasing(s_list)?;
    let coeffs = analyze(f, basis)?;
    let largest = coeffs.as_slice().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cutoff = VANISHING_TOLERANCE * largest;
    let nc = basis.coarse_len();
    let vanishing: Vec<usize> = (nc..coeffs.len()).filter(|&i| coeffs.as_slice()[i].abs() <= cutoff).collect();
    let spec = ProjectionSpec::from_predicate(basis, |j, k| {
        coeffs.as_slice()[(1usize << j) + k as usize].abs() > cutoff
    });
    s_list
        .iter()
        .map(|&s| {
            let report = stabilize_unweighted(f, s, p, &spec, basis, options)?;
            let g = if report.u == *f { f.clone() } else { project_span(&report.u, basis, &spec)? };
            let gc = analyze(&g, basis)?;
            let leak = vanishing.iter().map(|&i| gc.as_slice()[i].abs()).fold(0.0, f64::max);
            Ok(ApproxStep {
                s,
                l1_error: g.sub(f)?.l1(),
                t_error: report.u.sub(f)?.l1(),
                f_k: g,
                vanishing_leak: Some(leak),
            })
        })
        .collect()
}

/// `‖f‖_p`, the radius from which on every approximant equals `f`.
pub fn saturation_radius(f: &Signal, p: f64) -> Result<f64> {
    lp_norm(f, p, None)
}
