//! Truncated inverse-limit points, backward sampling of the lifted measure,
//! Birkhoff averages and distances between empirical measures.

mod birkhoff;
mod measure;
mod orbit;
mod prokhorov;

pub use birkhoff::{birkhoff_average, BirkhoffReport, TestFn, BIRKHOFF_JITTER};
pub use measure::{ks_two_sample, ks_uniform, sample_mu_hat, EmpiricalMeasure};
pub use orbit::{
    sample_backward, sample_backward_float, shift_truncated, truncated_metric, BackwardOrbit, BackwardSampler, Coords, Mode, DEFAULT_EXACT_DEPTH,
    FLOAT_TOLERANCE,
};
pub use prokhorov::{max_matching, prokhorov_brute_force, prokhorov_distance, prokhorov_points};
