//! Deterministic random corpus.
//!
//! Signals are drawn at a fixed reference resolution and upsampled, so the
//! same case id describes the same piecewise-constant function at every level
//! and constants measured at different levels are comparable.

use std::f64::consts::PI;

use nearmin_core::dyadic::{Grid, Signal};
use nearmin_core::wavelet::{ProjectionSpec, WaveletBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for case `id` of the stream `stream` under the experiment seed.
pub fn case_seed(seed: u64, stream: &str, id: u64) -> u64 {
    mix64(mix64(seed ^ tag(stream)) ^ mix64(id))
}

pub fn case_rng(seed: u64, stream: &str, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case_seed(seed, stream, id))
}

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo.ln() + rng.gen_range(0.0..1.0) * (hi.ln() - lo.ln())).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Components {
    pub spikes: bool,
    pub smooth: bool,
    pub noise: bool,
}

impl Components {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.spikes {
            parts.push("spikes");
        }
        if self.smooth {
            parts.push("smooth");
        }
        if self.noise {
            parts.push("noise");
        }
        parts.join("+")
    }
}

pub const NOISE_AMPLITUDE: f64 = 0.25;
const ZERO_PROBABILITY: f64 = 0.25;

/// Cell values at `reference_level`: sparse spikes on random dyadic
/// intervals, a low-frequency trigonometric part and uniform noise, each
/// present with probability 3/4 and at least one always present.
pub fn reference_signal<R: Rng + ?Sized>(rng: &mut R, reference_level: u32) -> (Vec<f64>, Components) {
    let n = 1usize << reference_level;
    let mut on = [0; 3].map(|_| !rng.gen_bool(ZERO_PROBABILITY));
    if !on.iter().any(|&b| b) {
        on[rng.gen_range(0..3)] = true;
    }
    let components = Components { spikes: on[0], smooth: on[1], noise: on[2] };
    let mut values = vec![0.0; n];

    let spikes = rng.gen_range(1..=4);
    for _ in 0..spikes {
        let r = rng.gen_range(2.min(reference_level)..=reference_level);
        let l = rng.gen_range(0..1usize << r);
        let height = rng.gen_range(1.0..8.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let width = n >> r;
        if components.spikes {
            values[l * width..(l + 1) * width].iter_mut().for_each(|v| *v += height);
        }
    }
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.2..1.5), rng.gen_range(1..=4) as f64, rng.gen_range(0.0..2.0 * PI)))
        .collect();
    if components.smooth {
        for (c, v) in values.iter_mut().enumerate() {
            let x = (c as f64 + 0.5) / n as f64;
            *v += waves.iter().map(|(a, m, phase)| a * (2.0 * PI * m * x + phase).sin()).sum::<f64>();
        }
    }
    for v in values.iter_mut() {
        let e = rng.gen_range(-NOISE_AMPLITUDE..NOISE_AMPLITUDE);
        if components.noise {
            *v += e;
        }
    }
    (values, components)
}

/// Piecewise-constant extension of `reference` to `2^level` cells of [0, 1).
pub fn upsample(reference: &[f64], level: u32) -> Signal {
    let grid = Grid::unit(level).expect("valid level");
    let factor = grid.cells() / reference.len();
    assert!(factor >= 1 && factor * reference.len() == grid.cells(), "level below the reference level");
    let values = reference.iter().flat_map(|&v| std::iter::repeat_n(v, factor)).collect();
    Signal::new(grid, values).expect("finite values")
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub id: u64,
    pub reference: Vec<f64>,
    pub components: Components,
    /// Seed for anything else drawn for this case (radii, projection sets, ...).
    pub seed: u64,
}

impl CorpusCase {
    pub fn generate(seed: u64, reference_level: u32, id: u64) -> Self {
        let mut rng = case_rng(seed, "corpus", id);
        let (reference, components) = reference_signal(&mut rng, reference_level);
        Self { id, reference, components, seed: case_seed(seed, "case", id) }
    }

    pub fn signal(&self, level: u32) -> Signal {
        upsample(&self.reference, level)
    }

    /// Independent random stream for a named purpose.
    pub fn rng(&self, purpose: &str) -> ChaCha8Rng {
        case_rng(self.seed, purpose, 0)
    }
}

/// Random index set of the given density; the choice for level `j` depends
/// only on `(seed, j)`, so sets at different resolutions agree on shared levels.
pub fn random_projection(basis: &WaveletBasis, seed: u64, density: f64) -> ProjectionSpec {
    let mut level_rngs: Vec<ChaCha8Rng> =
        (0..basis.finest_level()).map(|j| case_rng(seed, "projection", j as u64)).collect();
    ProjectionSpec::from_predicate(basis, |j, _| level_rngs[j as usize].gen_bool(density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nearmin_core::wavelet::WaveletFamily;

    #[test]
    fn cases_are_reproducible_and_distinct() {
        let a = CorpusCase::generate(5, 7, 3);
        let b = CorpusCase::generate(5, 7, 3);
        let c = CorpusCase::generate(5, 7, 4);
        assert_eq!(a.reference, b.reference);
        assert_ne!(a.reference, c.reference);
        assert!(a.reference.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn upsampling_preserves_integrals() {
        let case = CorpusCase::generate(1, 5, 0);
        let coarse = case.signal(5);
        let fine = case.signal(9);
        assert!((coarse.l1() - fine.l1()).abs() <= 1e-12 * coarse.l1());
        assert!((coarse.integral() - fine.integral()).abs() <= 1e-12 * coarse.l1());
    }

    #[test]
    fn projection_sets_agree_across_levels() {
        let coarse = WaveletBasis::new(WaveletFamily::Haar, Grid::unit(6).unwrap());
        let fine = WaveletBasis::new(WaveletFamily::Haar, Grid::unit(9).unwrap());
        let a = random_projection(&coarse, 77, 0.5);
        let b = random_projection(&fine, 77, 0.5);
        for j in 0..6 {
            for k in 0..1u64 << j {
                assert_eq!(a.contains(&coarse, j, k).unwrap(), b.contains(&fine, j, k).unwrap());
            }
        }
        let kept = a.kept_details(&coarse) as f64 / 63.0;
        assert!((0.25..0.75).contains(&kept));
    }

    #[test]
    fn every_case_has_a_component() {
        for id in 0..200 {
            let case = CorpusCase::generate(9, 4, id);
            let c = case.components;
            assert!(c.spikes || c.smooth || c.noise);
            assert!(!c.label().is_empty());
        }
    }
}
