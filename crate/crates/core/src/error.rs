use thiserror::Error;

/// Errors raised by the model, solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("environment {env:?} outside the regularity window [{lo}, {hi}]")]
    OutOfWindow { env: Vec<f64>, lo: f64, hi: f64 },

    #[error("solver left the a-priori regime at t = {t}: environment {env:?} outside [{lo}, {hi}]")]
    RegimeExit {
        t: f64,
        env: Vec<f64>,
        lo: f64,
        hi: f64,
    },

    #[error("no sign change of R(., {env}) on [{x_min}, {x_max}]")]
    NoRoot { env: f64, x_min: f64, x_max: f64 },

    #[error("R(., {env}) changes sign {count} times; the model is not monomorphic at this environment")]
    NonMonomorphic { env: f64, count: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("dissipation coefficient {theta} below the required {required}")]
    DissipationDeficit { theta: f64, required: f64 },

    #[error("time step {dt} violates the CFL bound; need dt <= {required_dt}")]
    CflViolation { dt: f64, required_dt: f64 },

    #[error("constraint max phi = 0 is infeasible on the window: G(lo) = {g_lo}, G(hi) = {g_hi}")]
    ConstraintInfeasible { g_lo: f64, g_hi: f64 },

    #[error("Lipschitz constant {lipschitz} exceeded the blow-up guard {guard} at t = {t}")]
    LipschitzBlowUp { t: f64, lipschitz: f64, guard: f64 },

    #[error("runs are incompatible: {0}")]
    IncompatibleRuns(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
