use thiserror::Error;

/// Errors surfaced by distribution construction, the analytic solvers,
/// the simulator, and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable model: rho = {rho} >= 1 (lambda = {lambda}, mean service = {mean_service})")]
    Unstable {
        lambda: f64,
        mean_service: f64,
        rho: f64,
    },

    #[error("service spec error at byte {pos}: {msg} (input {input:?})")]
    ParseSpec {
        input: String,
        pos: usize,
        msg: String,
    },

    #[error("failed to bracket {what}; this indicates an MGF evaluation bug")]
    Bracket { what: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "instability guard tripped: {in_system} customers in system at t = {time:.3} \
         (guard = {guard}); check the offered load"
    )]
    InstabilityGuard {
        in_system: usize,
        guard: usize,
        time: f64,
    },

    #[error(
        "conditioned first-service draw too rare: acceptance rate {rate:.3e} \
         after {attempts} attempts (threshold 1e-6)"
    )]
    RejectionTooRare { rate: f64, attempts: u64 },

    #[error("estimator: {0}")]
    Estimator(String),

    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;
