use thiserror::Error;

/// Errors raised by the simulation, search and configuration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no subsystem retained")]
    NoSubsystemRetained,

    #[error("outcome has zero probability; post-state undefined")]
    ZeroProbability,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("sharpness must lie in (0, 1], got {0}")]
    InvalidSharpness(f64),

    #[error("invalid Bloch direction: {0}")]
    InvalidDirection(String),

    #[error("setting index must be 0 or 1, got {0}")]
    InvalidSetting(usize),

    #[error("charlie index {index} out of range 1..={count}")]
    CharlieOutOfRange { index: usize, count: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("oracle enumeration bound exceeded: {charlies} charlies, at most {max} supported")]
    OracleBoundExceeded { charlies: usize, max: usize },

    #[error("threshold chain infeasible: charlie {charlie} would need lambda = {required:.6}")]
    ChainInfeasible { charlie: usize, required: f64 },

    #[error("no double-violation window: {0}")]
    NoWindow(String),

    #[error("sweep budget exceeded: {required} evaluations requested, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("invalid search specification: {0}")]
    InvalidSearch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
