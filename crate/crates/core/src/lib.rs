//! Exact construction and checking of crooked, Lebesgue-measure-preserving
//! interval maps, their inverse limits, and planar attractors built from them.

pub mod bbm;
pub mod crookedgen;
pub mod error;
pub mod exactmap;
pub mod family;
pub mod invlim;
pub mod par;
pub mod rational;

pub use error::{Error, Result};
pub use exactmap::PLMap;
pub use par::Execution;
pub use rational::{q, Rational};
