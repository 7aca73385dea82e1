use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("strip norm overflow at h = {h}: term for |n| = {mode_l1} exceeds the f64 range")]
    StripNormOverflow { h: f64, mode_l1: i64 },

    #[error("rotation number did not settle: window averages differ by {gap:.3e} (limit {limit:.3e})")]
    NonConvergence { gap: f64, limit: f64 },

    #[error("near-singular column along axis {axis}: min norm {min_norm:.3e}")]
    NearSingular { axis: usize, min_norm: f64 },

    #[error("degree along axis {axis} is not an integer (winding {winding:.4})")]
    NonIntegralDegree { axis: usize, winding: f64 },

    #[error("small divisor {magnitude:.3e} at mode {mode:?} (unremoved resonance)")]
    SmallDivisor { mode: Vec<i32>, magnitude: f64 },

    #[error("contract violated: {what} measured {measured:.3e} > {bound:.3e}")]
    ContractViolation { what: String, measured: f64, bound: f64 },

    #[error("no real logarithm: trace {trace} <= -2")]
    LogBranch { trace: f64 },

    #[error("entry smallness fails: ||f||_{k} = {norm:.3e} > eps0'(1/l1, 1/l2) = {bound:.3e}")]
    EntrySmallness { k: u32, norm: f64, bound: f64 },

    #[error("non-resonant elimination did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    EliminationDiverged { sweeps: usize, residual: f64 },

    #[error("uniform hyperbolicity inconclusive: cone margin {margin:.3e}")]
    Inconclusive { margin: f64 },

    #[error("boundary contamination at T = {time}: edge mass {mass:.3e}")]
    BoundaryContamination { time: f64, mass: f64 },

    #[error("spectrum indicator is empty")]
    EmptySpectrum,

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
