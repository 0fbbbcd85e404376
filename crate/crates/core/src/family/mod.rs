//! The parametrized family, admissible approximations and the crookify pipeline.

mod admissible;
mod crookify;
mod schedule;
mod tilde;

pub use admissible::{make_admissible, refined_partition};
pub use crookify::{crookify_step, min_k_for, CandidateRecord, CrookifyBudgets, CrookifyOutcome};
pub use schedule::{crookify_family, FamilySchedule, PerturbationSchedule, StageReport};
pub use tilde::{f_tilde, g_tilde};
