//! Band model of the planar attractor: the band map, point clouds, rasters,
//! Hausdorff distances and boundary dynamics.

mod band;
mod hausdorff;
mod raster;
mod rotation;

pub use band::{attractor_cloud, band_map, edge_dynamics_check, AttractorCloud, BandPoint, EdgeDynamics, FloatBand, DEFAULT_DELTA};
pub use hausdorff::{directed_hausdorff, hausdorff_brute_force, hausdorff_distance};
pub use raster::{attractor_raster, rasterize, Raster};
pub use rotation::{estimate_boundary_rotation, EstimateStatus, RotationEstimate, MIN_ROTATION_SAMPLES};
