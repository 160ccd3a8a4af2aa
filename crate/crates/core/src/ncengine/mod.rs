//! The noncommutative polynomial algebra and quadratic term-rewriting
//! engine: presentations become directed rules, polynomials reduce to normal
//! forms, and the diamond check validates that the presentation is sound.

mod compile;
mod confluence;
mod differential;
mod rewrite;
mod rtt;
mod word;

pub use compile::{admissible_coefficient, compile_rules, extend_rules, extend_rules_permissive, CompileError};
pub use confluence::{
    check_local_confluence, quadratic_overlap_count, ConfluenceMismatch, ConfluenceReport,
};
pub use differential::{d_nf, exterior_d};
pub use rewrite::{EngineError, RewriteSystem, Strategy, DEFAULT_STEP_BOUND};
pub use rtt::{build_rtt_system, RttSystem};
pub use word::{DiffImage, Family, Gen, NcPoly, Registry, RegistryRef, Word, MAX_GEN_INDICES};
