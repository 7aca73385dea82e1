//! The quantitative KAM step, the non-resonant elimination and the full
//! reducibility iteration.

mod cohomological;
mod iteration;
mod schedule;
mod step;

pub use cohomological::{
    combine_exponentials, eliminate_nonresonant, find_resonance, resonance_distance,
    solve_cohomological, solve_cohomological_detailed, CohomologicalSolution, Elimination,
    RESONANCE_SCAN_LIMIT,
};
pub use iteration::{run_iteration, Classification, ReducibilityReport, RotClassParams, StageRecord};
pub use schedule::KamSchedule;
pub use step::{
    identity_residual, kam_step, nonresonant_step, oriented_rho, resonant_step, rotate_modes,
    CheckStatus, ContractCheck, KamStepResult, StepCase, StepEstimates, CONTRACT_SLACK,
};
