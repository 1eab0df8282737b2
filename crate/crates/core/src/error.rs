use thiserror::Error;

/// Failures while reading or assembling a [`GridCase`](crate::case::GridCase).
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("malformed JSON at `{path}`: {message}")]
    Json { path: String, message: String },

    #[error("duplicate bus id {id} at `{path}`")]
    DuplicateBus { id: i64, path: String },

    #[error("multiple slack buses: {ids:?}")]
    MultipleSlack { ids: Vec<i64> },

    #[error("unknown bus {id} referenced by {context}")]
    UnknownBus { id: i64, context: String },

    #[error("invalid value at `{path}`: {message}")]
    InvalidValue { path: String, message: String },

    #[error("line {line}: {message}")]
    Matpower { line: usize, message: String },

    #[error("case script has no `mpc.{0}` entry")]
    MissingMatrix(&'static str),
}

/// Failures while building graph operators from a case.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("grid is disconnected (component sizes {component_sizes:?})")]
    Disconnected { component_sizes: Vec<usize> },

    #[error("case has no slack bus")]
    NoSlack,

    #[error("branch {from}-{to} has zero reactance")]
    ZeroReactance { from: i64, to: i64 },

    #[error("reduced susceptance matrix is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("unknown bus {0}")]
    UnknownBus(i64),
}

/// Failures of the perturbation analytics and solvers.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("bus {0} is the slack bus and cannot be perturbed")]
    SlackPerturbation(i64),

    #[error("signal is identically zero; {0} is undefined")]
    ZeroSignal(&'static str),

    #[error("signal value at bus {bus} is below the zero threshold; local smoothness is undefined")]
    UndefinedAtBus { bus: i64 },

    #[error("AC power flow did not converge at gamma = {gamma_mw} MW: {reason}")]
    NonConvergence { gamma_mw: f64, reason: String },

    #[error("gamma_hi = {gamma_hi_mw} MW still converges; no failure bracket")]
    NoFailureBracket { gamma_hi_mw: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;
