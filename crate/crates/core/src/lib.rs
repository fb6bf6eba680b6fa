//! Numerical toolkit for stable near-minimizers of the distance functional
//! between `L¹` and `L^p` on a dyadic grid: wavelet and Calderón–Zygmund
//! decompositions, the exact `E`-functional solver, the stabilizing
//! construction, singular integrals and Muckenhoupt weights.

pub mod czd;
pub mod dyadic;
pub mod efunctional;
pub mod error;
pub mod io;
pub mod muckenhoupt;
pub mod singular;
pub mod stabilizer;
pub mod wavelet;

pub use czd::{cz_stop, wavelet_good_part, weighted_cz, CZStop, WaveletCZ, WeightedCZ, WeightedCzDiagnostics};
pub use dyadic::{interval_average, lp_norm, weighted_measure, DyadicInterval, DyadicSums, Grid, Region, Signal, Weight};
pub use efunctional::{e_functional, near_minimizer, truncate_to_ball, CoupleSpec, EMinimizer};
pub use error::{Error, Result};
pub use muckenhoupt::{ap_characteristic, doubling_constant, power_weight, weight_triple, WeightReport, WeightTriple};
pub use singular::{apply, kernel_holder_constant, long_range_regularity, KernelSpec, SingularOperator};
pub use stabilizer::{
    admissible_radius, approx_sequence, coefficient_preserving_sequence, stabilize_unweighted, stabilize_weighted,
    t_parameter, StabilizationReport, StabilizerOptions,
};
pub use wavelet::{
    analyze, project_scales, project_span, synthesize, ProjectionSpec, ScalePart, SignPattern, WaveletBasis,
    WaveletCoeffs, WaveletFamily,
};
