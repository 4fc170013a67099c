//! Steady waves in a frame moving with speed `c`.

mod crest;
pub mod krylov;
mod residual;
mod solver;

pub use crest::{crest_diagnostics, fit_tail, CrestDiagnostics, TailDecay};
pub use residual::{
    residual_bab_g, residual_babenko_capillary, residual_babenko_gravity, residual_capillary, residual_combined,
    residual_combined_projected, residual_soliton_system, speed_potential, unwrapped_argument, CapillaryConvention,
    RESIDUAL_DELTA,
};
pub use solver::{
    branch_csv, continuation_run, linear_guess, newton_solve, Branch, Constraint, ContinuationSettings, Formulation,
    NewtonSettings, SolveReport, StopReason, TravelingProblem,
};
