//! Small-divisor elimination: Brjuno sets, the homological equation, and the
//! majorant bounds behind its convergence.

mod brjuno;
mod homological;
mod majorants;
mod sets;

pub use brjuno::{brjuno_omega, brjuno_partial_sums, BrjunoLevel, BrjunoReport, PartialSums, ZERO_DIVISOR};
pub use homological::{
    check_conditions, iterated_elimination, nicer_tail_preset, non_normal_form_terms, normalize_low_order,
    solve_homological, ConjugationResult, DivisorRecord,
};
pub use majorants::{
    majorant_diagnostics, sigma_closed_form, sigma_sequence, sigma_sequence_exact, BoundReport, CountingViolation,
    DeltaTable, MajorantInput, MajorantReport, THETA,
};
pub use sets::ExponentSet;
