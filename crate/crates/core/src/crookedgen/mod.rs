//! Crooked generators and crookedness checks.

mod chain;
mod crooked;
mod generators;
mod minc;

pub use chain::ChainChecker;
pub use crooked::{
    check_pairs, crookedness_defect_estimate, crookedness_defect_estimate_with, crookedness_grid_check, crookedness_grid_check_with, defect_sample_pairs,
    grid_values, is_crooked_between, value_grid, CheckMode, CrookednessReport, PairCheck, Witness, DEFECT_LATTICE,
};
pub use generators::{box_counts, epsilon_gamma, eta, flip, lambda_hat, lambda_nk, phi, scr, sigma};
pub use minc::{first_max_location, maxima_locations, verify_minc_updt, verify_minc_updt_with, IntervalWitness, MincReport};
