use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("solver did not converge after {iterations} iterations (bracket [{lower}, {upper}])")]
    NonConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("condition checker reported negative slack {slack} on {inequality}")]
    NegativeSlack { inequality: String, slack: f64 },

    #[error("{m} nodes exceed the exhaustive cut enumeration cap of {cap}; use per-demand min-cut bounds instead")]
    EnumerationCap { m: usize, cap: usize },

    #[error("{count} candidate-model combinations exceed the cap of {cap}")]
    CombinationCap { count: f64, cap: usize },

    #[error("no {side} candidate models for {what}")]
    MissingCandidates { side: String, what: String },

    #[error("memory budget exceeded: {required} symbols required, budget is {budget}")]
    Budget { required: f64, budget: u64 },

    #[error("network still contains noisy component `{0}`; replace it with a bit-pipe model first")]
    NoisyComponent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
