//! The distance functional `E(s, f) = inf { ‖f - g‖_{L¹(w)} : ‖g‖_{L^p(v)} ≤ s }`.
//!
//! Cell by cell the Lagrangian `|f - g| w + μ |g|^p v` is minimized by cutting
//! `|f|` at a level proportional to `b = (w / v)^(1/(p-1))`, so the exact
//! minimizer is `sign(f) min(|f|, c b)` with the scalar `c` fixed by the
//! constraint. `c` is found by bisection.

use serde::Serialize;

use crate::dyadic::{lp_norm, Signal, Weight};
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const BRACKET_TOLERANCE: f64 = 1e-12;

/// The couple `(L¹(w), L^p(v))`; missing weights mean Lebesgue measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupleSpec {
    p: f64,
    w: Option<Weight>,
    v: Option<Weight>,
}

impl CoupleSpec {
    pub fn unweighted(p: f64) -> Result<Self> {
        Self::new(p, None, None)
    }

    pub fn new(p: f64, w: Option<Weight>, v: Option<Weight>) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if let (Some(w), Some(v)) = (&w, &v) {
            w.grid().check(v.grid())?;
        }
        Ok(Self { p, w, v })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn w(&self) -> Option<&Weight> {
        self.w.as_ref()
    }

    pub fn v(&self) -> Option<&Weight> {
        self.v.as_ref()
    }

    /// `‖g‖_{L¹(w)}`.
    pub fn x_norm(&self, g: &Signal) -> Result<f64> {
        lp_norm(g, 1.0, self.w.as_ref())
    }

    /// `‖g‖_{L^p(v)}`.
    pub fn y_norm(&self, g: &Signal) -> Result<f64> {
        lp_norm(g, self.p, self.v.as_ref())
    }

    /// Truncation profile `b = (w / v)^(1/(p-1))` per cell.
    pub fn level_profile(&self, cells: usize) -> Vec<f64> {
        let e = 1.0 / (self.p - 1.0);
        (0..cells)
            .map(|c| {
                let w = self.w.as_ref().map_or(1.0, |w| w.values()[c]);
                let v = self.v.as_ref().map_or(1.0, |v| v.values()[c]);
                if w == v {
                    1.0
                } else {
                    (w / v).powf(e)
                }
            })
            .collect()
    }

    fn check(&self, f: &Signal) -> Result<()> {
        for weight in [&self.w, &self.v].into_iter().flatten() {
            f.grid().check(weight.grid())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EMinimizer {
    #[serde(skip)]
    pub g: Signal,
    /// `c` in the truncation level `c b(x)`; infinite when `f` is already in the ball.
    pub level_scale: f64,
    /// `‖f - g‖_{L¹(w)}`.
    pub e_value: f64,
}

fn truncate(f: &Signal, profile: &[f64], c: f64) -> Signal {
    let mut g = f.clone();
    for (v, &b) in g.values_mut().iter_mut().zip(profile) {
        *v = v.signum() * v.abs().min(c * b);
    }
    g
}

/// `sign(f) min(|f|, c b)` with `b` the couple's level profile; the minimizer
/// for the radius equal to its own `L^p(v)` norm.
pub fn truncate_at_level(f: &Signal, couple: &CoupleSpec, c: f64) -> Result<Signal> {
    couple.check(f)?;
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidArgument(format!("truncation level must be non-negative, got {c}")));
    }
    Ok(truncate(f, &couple.level_profile(f.len()), c))
}

/// Largest `|f| / b`, the level from which on truncation leaves `f` unchanged.
pub fn saturation_level(f: &Signal, couple: &CoupleSpec) -> f64 {
    let profile = couple.level_profile(f.len());
    f.values().iter().zip(&profile).map(|(v, b)| v.abs() / b).fold(0.0, f64::max)
}

pub fn truncate_to_ball(f: &Signal, s: f64, couple: &CoupleSpec) -> Result<EMinimizer> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::NegativeRadius(s));
    }
    couple.check(f)?;
    if couple.y_norm(f)? <= s {
        return Ok(EMinimizer { g: f.clone(), level_scale: f64::INFINITY, e_value: 0.0 });
    }
    let profile = couple.level_profile(f.len());
    let mut lo = 0.0;
    let mut hi = saturation_level(f, couple);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BRACKET_TOLERANCE * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if couple.y_norm(&truncate(f, &profile, mid))? <= s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // lo is always feasible
    let g = truncate(f, &profile, lo);
    let e_value = couple.x_norm(&f.sub(&g)?)?;
    Ok(EMinimizer { g, level_scale: lo, e_value })
}

pub fn e_functional(f: &Signal, s: f64, couple: &CoupleSpec) -> Result<f64> {
    Ok(truncate_to_ball(f, s, couple)?.e_value)
}

/// A near-minimizer honouring `‖g‖ ≤ s` and `‖f - g‖ ≤ slack · E(s, f)`.
///
/// With `slack == 1` this is the exact minimizer. Larger slack returns a
/// deliberately worse `θ g*`, `θ ∈ [0, 1]`, whose distance to `f` is
/// `min(slack · E, ‖f‖)`, to exercise constructions that only rely on the
/// near-minimizer contract.
pub fn near_minimizer(f: &Signal, s: f64, couple: &CoupleSpec, slack: f64) -> Result<EMinimizer> {
    if !(slack.is_finite() && slack >= 1.0) {
        return Err(Error::InvalidSlack(slack));
    }
    let exact = truncate_to_ball(f, s, couple)?;
    if slack == 1.0 || exact.e_value == 0.0 {
        return Ok(exact);
    }
    // g* has the sign of f and |g*| ≤ |f|, so ‖f - θ g*‖ = ‖f‖ - θ ‖g*‖
    let f_norm = couple.x_norm(f)?;
    let g_norm = couple.x_norm(&exact.g)?;
    if g_norm == 0.0 {
        return Ok(exact);
    }
    let theta = ((f_norm - slack * exact.e_value) / g_norm).clamp(0.0, 1.0);
    let g = exact.g.scale(theta);
    let e_value = couple.x_norm(&f.sub(&g)?)?;
    Ok(EMinimizer { g, level_scale: exact.level_scale * theta, e_value })
}
