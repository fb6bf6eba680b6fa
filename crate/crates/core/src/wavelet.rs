//! Periodic orthonormal wavelet bases on a dyadic grid.
//!
//! Coefficients are taken with respect to the `L^2` inner product of the root
//! interval, so `Ψ_jk` has unit norm and `Σ c² = ‖f‖₂²`. The flat coefficient
//! layout puts the `2^j0` coarse scaling coefficients first and the `2^j`
//! details of level `j` at offsets `2^j .. 2^(j+1)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, Grid, Region, Signal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    Daubechies4,
}

impl WaveletFamily {
    pub fn lowpass(&self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Daubechies4 => "daubechies4",
        }
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletFamily::Haar),
            "daubechies4" | "db4" | "d4" => Ok(WaveletFamily::Daubechies4),
            other => Err(Error::InvalidArgument(format!("unknown wavelet family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    family: WaveletFamily,
    grid: Grid,
    coarse_level: u32,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletBasis {
    pub fn new(family: WaveletFamily, grid: Grid) -> Self {
        let lowpass = family.lowpass();
        let n = lowpass.len();
        // g_m = (-1)^m h_{n-1-m}
        let highpass = (0..n)
            .map(|m| if m % 2 == 0 { lowpass[n - 1 - m] } else { -lowpass[n - 1 - m] })
            .collect();
        Self { family, grid, coarse_level: 0, lowpass, highpass }
    }

    pub fn with_coarse_level(mut self, j0: u32) -> Result<Self> {
        if j0 > self.grid.level() {
            return Err(Error::LevelOutOfRange { level: j0, min: 0, max: self.grid.level() });
        }
        self.coarse_level = j0;
        Ok(self)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coarse_level(&self) -> u32 {
        self.coarse_level
    }

    pub fn finest_level(&self) -> u32 {
        self.grid.level()
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Number of coarse scaling coefficients.
    pub fn coarse_len(&self) -> usize {
        1usize << self.coarse_level
    }

    pub fn flat_index(&self, j: u32, k: u64) -> Result<usize> {
        if j < self.coarse_level || j >= self.grid.level() || k >= (1u64 << j) {
            return Err(Error::InvalidIndex { j, k });
        }
        Ok((1usize << j) + k as usize)
    }

    /// Scale of a flat detail index (`None` for coarse entries).
    pub fn level_of(&self, index: usize) -> Option<u32> {
        if index < self.coarse_len() {
            None
        } else {
            Some(usize::BITS - 1 - index.leading_zeros())
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        self.grid.check(grid)
    }
}

/// Discrete wavelet coefficients in the flat layout described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    grid: Grid,
    coarse_level: u32,
    data: Vec<f64>,
}

impl WaveletCoeffs {
    pub fn zeros(basis: &WaveletBasis) -> Self {
        Self { grid: basis.grid, coarse_level: basis.coarse_level, data: vec![0.0; basis.grid.cells()] }
    }

    pub fn from_flat(basis: &WaveletBasis, data: Vec<f64>) -> Result<Self> {
        if data.len() != basis.grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} cells",
                data.len(),
                basis.grid.cells()
            )));
        }
        Ok(Self { grid: basis.grid, coarse_level: basis.coarse_level, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn coarse(&self) -> &[f64] {
        &self.data[..1usize << self.coarse_level]
    }

    pub fn coarse_mut(&mut self) -> &mut [f64] {
        &mut self.data[..1usize << self.coarse_level]
    }

    /// Details of level `j`.
    pub fn level(&self, j: u32) -> &[f64] {
        &self.data[1usize << j..1usize << (j + 1)]
    }

    pub fn level_mut(&mut self, j: u32) -> &mut [f64] {
        &mut self.data[1usize << j..1usize << (j + 1)]
    }

    pub fn detail(&self, j: u32, k: u64) -> f64 {
        self.level(j)[k as usize]
    }

    pub fn set_detail(&mut self, j: u32, k: u64, value: f64) {
        self.level_mut(j)[k as usize] = value;
    }

    pub fn detail_levels(&self) -> std::ops::Range<u32> {
        self.coarse_level..self.grid.level()
    }

    /// `(j, k, value)` for every detail coefficient, coarse to fine.
    pub fn details(&self) -> impl Iterator<Item = (u32, u64, f64)> + '_ {
        self.detail_levels()
            .flat_map(move |j| self.level(j).iter().enumerate().map(move |(k, &v)| (j, k as u64, v)))
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c * c).sum()
    }

    pub fn add(&self, other: &WaveletCoeffs) -> Result<Self> {
        self.check_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..self.clone() })
    }

    pub fn add_assign(&mut self, other: &WaveletCoeffs) -> Result<()> {
        self.check_shape(other)?;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    fn check_shape(&self, other: &WaveletCoeffs) -> Result<()> {
        if self.grid != other.grid || self.coarse_level != other.coarse_level {
            return Err(Error::ShapeMismatch("coefficient sets from different bases".into()));
        }
        Ok(())
    }

    /// Zeroes every detail level outside `levels` and, unless `keep_coarse`, the coarse part.
    pub fn retain_levels(&mut self, levels: std::ops::Range<u32>, keep_coarse: bool) {
        if !keep_coarse {
            self.coarse_mut().fill(0.0);
        }
        for j in self.detail_levels() {
            if !levels.contains(&j) {
                self.level_mut(j).fill(0.0);
            }
        }
    }

    /// Debug export: `j,k,value` rows; coarse scaling coefficients use `j = -1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,value\n");
        for (k, v) in self.coarse().iter().enumerate() {
            out.push_str(&format!("-1,{k},{v:e}\n"));
        }
        for (j, k, v) in self.details() {
            out.push_str(&format!("{j},{k},{v:e}\n"));
        }
        out
    }
}

pub fn analyze(f: &Signal, basis: &WaveletBasis) -> Result<WaveletCoeffs> {
    basis.check(f.grid())?;
    let scale = basis.grid.cell_width().sqrt();
    let mut x: Vec<f64> = f.values().iter().map(|v| v * scale).collect();
    let mut out = vec![0.0; x.len()];
    let mut buf = vec![0.0; x.len()];
    let (h, g) = (&basis.lowpass, &basis.highpass);
    for level in (basis.coarse_level + 1..=basis.grid.level()).rev() {
        let n = 1usize << level;
        let half = n / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                let v = x[(2 * k + m) % n];
                a += hm * v;
                d += gm * v;
            }
            buf[k] = a;
            out[half + k] = d;
        }
        x[..half].copy_from_slice(&buf[..half]);
    }
    let nc = basis.coarse_len();
    out[..nc].copy_from_slice(&x[..nc]);
    Ok(WaveletCoeffs { grid: basis.grid, coarse_level: basis.coarse_level, data: out })
}

pub fn synthesize(coeffs: &WaveletCoeffs, basis: &WaveletBasis) -> Result<Signal> {
    if coeffs.grid != basis.grid || coeffs.coarse_level != basis.coarse_level {
        return Err(Error::ShapeMismatch("coefficients do not belong to this basis".into()));
    }
    let data = &coeffs.data;
    let nc = basis.coarse_len();
    let mut x = vec![0.0; data.len()];
    x[..nc].copy_from_slice(&data[..nc]);
    let mut buf = vec![0.0; data.len()];
    let (h, g) = (&basis.lowpass, &basis.highpass);
    for level in basis.coarse_level + 1..=basis.grid.level() {
        let n = 1usize << level;
        let half = n / 2;
        buf[..n].fill(0.0);
        for k in 0..half {
            let a = x[k];
            let d = data[half + k];
            if a == 0.0 && d == 0.0 {
                continue;
            }
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                buf[(2 * k + m) % n] += hm * a + gm * d;
            }
        }
        x[..n].copy_from_slice(&buf[..n]);
    }
    let scale = 1.0 / basis.grid.cell_width().sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(Signal::from_vec_unchecked(basis.grid, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalePart {
    /// `P_j`: coarse part and details of levels `< j`.
    Below,
    /// `Q_j = Id - P_j`: details of levels `>= j`.
    AtOrAbove,
}

pub fn project_scales(f: &Signal, basis: &WaveletBasis, j: u32, part: ScalePart) -> Result<Signal> {
    if j < basis.coarse_level || j > basis.grid.level() {
        return Err(Error::LevelOutOfRange { level: j, min: basis.coarse_level, max: basis.grid.level() });
    }
    let mut c = analyze(f, basis)?;
    match part {
        ScalePart::Below => c.retain_levels(basis.coarse_level..j, true),
        ScalePart::AtOrAbove => c.retain_levels(j..basis.grid.level(), false),
    }
    synthesize(&c, basis)
}

/// The signs `ε_jk` of a sign multiplier; every entry defaults to `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    coarse_len: usize,
    negative: Vec<bool>,
}

impl SignPattern {
    pub fn identity(basis: &WaveletBasis) -> Self {
        Self { coarse_len: basis.coarse_len(), negative: vec![false; basis.grid.cells()] }
    }

    pub fn random<R: Rng + ?Sized>(basis: &WaveletBasis, rng: &mut R) -> Self {
        let mut s = Self::identity(basis);
        for i in s.coarse_len..s.negative.len() {
            s.negative[i] = rng.gen_bool(0.5);
        }
        s
    }

    pub fn set(&mut self, basis: &WaveletBasis, j: u32, k: u64, sign: i8) -> Result<()> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
        }
        let i = basis.flat_index(j, k)?;
        self.negative[i] = sign < 0;
        Ok(())
    }

    pub fn sign(&self, basis: &WaveletBasis, j: u32, k: u64) -> Result<i8> {
        Ok(if self.negative[basis.flat_index(j, k)?] { -1 } else { 1 })
    }
}

/// `U_ε f = Σ ε_jk ⟨f, Ψ_jk⟩ Ψ_jk`; the coarse part passes through unchanged.
pub fn apply_sign_multiplier(f: &Signal, basis: &WaveletBasis, eps: &SignPattern) -> Result<Signal> {
    if eps.negative.len() != basis.grid.cells() || eps.coarse_len != basis.coarse_len() {
        return Err(Error::ShapeMismatch("sign pattern does not match the basis".into()));
    }
    let mut c = analyze(f, basis)?;
    for (v, &neg) in c.data.iter_mut().zip(&eps.negative).skip(eps.coarse_len) {
        if neg {
            *v = -*v;
        }
    }
    synthesize(&c, basis)
}

/// Index set `A` for the projection onto `span{Ψ_jk : (j,k) ∈ A}` (plus the
/// coarse part), optionally followed by multiplication with `χ_E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    keep: Vec<bool>,
    restriction: Option<Vec<DyadicInterval>>,
}

impl ProjectionSpec {
    pub fn full(basis: &WaveletBasis) -> Self {
        Self { keep: vec![true; basis.grid.cells()], restriction: None }
    }

    pub fn empty(basis: &WaveletBasis) -> Self {
        let mut keep = vec![false; basis.grid.cells()];
        keep[..basis.coarse_len()].fill(true);
        Self { keep, restriction: None }
    }

    pub fn from_indices(
        basis: &WaveletBasis,
        indices: impl IntoIterator<Item = (u32, u64)>,
    ) -> Result<Self> {
        let mut spec = Self::empty(basis);
        for (j, k) in indices {
            spec.keep[basis.flat_index(j, k)?] = true;
        }
        Ok(spec)
    }

    /// Keeps `(j, k)` whenever `pred(j, k)` holds.
    pub fn from_predicate(basis: &WaveletBasis, mut pred: impl FnMut(u32, u64) -> bool) -> Self {
        let mut spec = Self::empty(basis);
        for j in basis.coarse_level..basis.grid.level() {
            for k in 0..(1u64 << j) {
                if pred(j, k) {
                    spec.keep[(1usize << j) + k as usize] = true;
                }
            }
        }
        spec
    }

    pub fn with_restriction(mut self, set: Vec<DyadicInterval>) -> Self {
        self.restriction = Some(set);
        self
    }

    pub fn restriction(&self) -> Option<&[DyadicInterval]> {
        self.restriction.as_deref()
    }

    pub fn contains(&self, basis: &WaveletBasis, j: u32, k: u64) -> Result<bool> {
        Ok(self.keep[basis.flat_index(j, k)?])
    }

    pub fn kept_details(&self, basis: &WaveletBasis) -> usize {
        self.keep[basis.coarse_len()..].iter().filter(|&&b| b).count()
    }

    pub fn validate(&self, basis: &WaveletBasis) -> Result<()> {
        if self.keep.len() != basis.grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "projection over {} indices for a basis with {}",
                self.keep.len(),
                basis.grid.cells()
            )));
        }
        if let Some(set) = &self.restriction {
            for i in set {
                i.validate(&basis.grid)?;
            }
        }
        Ok(())
    }

    /// Zeroes the detail coefficients outside `A`; coarse coefficients are kept.
    pub fn mask(&self, basis: &WaveletBasis, coeffs: &mut WaveletCoeffs) {
        let nc = basis.coarse_len();
        for (v, &keep) in coeffs.data.iter_mut().zip(&self.keep).skip(nc) {
            if !keep {
                *v = 0.0;
            }
        }
    }

    /// Applies the optional `χ_E` factor in place.
    pub fn restrict(&self, signal: &mut Signal) {
        if let Some(set) = &self.restriction {
            let grid = *signal.grid();
            let mut inside = vec![false; grid.cells()];
            for i in set {
                inside[i.cells(&grid)].fill(true);
            }
            for (v, &keep) in signal.values_mut().iter_mut().zip(&inside) {
                if !keep {
                    *v = 0.0;
                }
            }
        }
    }

    /// `T` applied to a signal already expressed in coefficients.
    pub fn apply_coeffs(&self, basis: &WaveletBasis, coeffs: &WaveletCoeffs) -> Result<Signal> {
        let mut c = coeffs.clone();
        self.mask(basis, &mut c);
        let mut out = synthesize(&c, basis)?;
        self.restrict(&mut out);
        Ok(out)
    }
}

pub fn project_span(f: &Signal, basis: &WaveletBasis, spec: &ProjectionSpec) -> Result<Signal> {
    spec.validate(basis)?;
    let c = analyze(f, basis)?;
    spec.apply_coeffs(basis, &c)
}

/// `∫ |g|` outside the concentric `dilation`-dilate of `interval` (clipped to the root).
pub fn off_support_mass(g: &Signal, interval: DyadicInterval, dilation: u32) -> Result<f64> {
    interval.validate(g.grid())?;
    if dilation == 0 {
        return Err(Error::InvalidArgument("dilation must be positive".into()));
    }
    Ok(Region::dilates(*g.grid(), &[interval], dilation).integral_abs_outside(g, None))
}
