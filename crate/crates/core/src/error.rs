use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("{quantity} became non-positive ({value:e}); reduce dt")]
    NonPositiveVariance { quantity: &'static str, value: f64 },

    #[error("uncertainty bound violated: v_x*v_p - c^2 = {det:e} < {bound:e}")]
    UncertaintyViolation { det: f64, bound: f64 },

    #[error("dt = {dt:e} exceeds the step-size limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("not a valid covariance matrix: v_x*v_p - c^2 = {det:e}")]
    InvalidCovariance { det: f64 },

    #[error("({a}, {b}) is not {property}: mode {eigenvalue} is uncontrolled/unobserved")]
    NotStabilizable {
        a: &'static str,
        b: &'static str,
        property: &'static str,
        eigenvalue: num_complex::Complex64,
    },

    #[error("Riccati equation has no stabilizing solution: {0}")]
    NoStabilizingSolution(String),

    #[error("control weight is singular on the range of B^T")]
    SingularControlWeight,

    #[error("Riccati residual {residual:e} above tolerance {tolerance:e}")]
    NotConverged { residual: f64, tolerance: f64 },

    #[error("closed loop is unstable: eigenvalue {0}")]
    UnstableClosedLoop(num_complex::Complex64),

    #[error("truncation dim {dim} too small: top-level population {population:e} >= {tolerance:e}")]
    Leakage {
        dim: usize,
        population: f64,
        tolerance: f64,
    },

    #[error("trace drifted by {drift:e} in one step")]
    TraceDrift { drift: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with any step annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}
