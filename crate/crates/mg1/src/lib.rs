//! Tail asymptotics for the M/G/1 queue.
//!
//! The crate has five parts:
//!
//! - [`dist`]: service-time laws with exact moment generating functions,
//!   means, support endpoints and truncation.
//! - [`analytic`]: decay rates of busy periods, workloads and sojourn times
//!   computed from the arrival log-MGF (Legendre supremum, Cox-Smith root,
//!   truncated-service curves, the Pollaczek-Khinchin workload transform).
//! - [`sim`]: an event-driven simulator for the FB (foreground-background /
//!   least-attained-service), FIFO, preemptive-LIFO and processor-sharing
//!   disciplines, plus direct samplers for busy periods and their residual
//!   lives.
//! - [`tail`]: an empirical decay-rate estimator that regresses log survival
//!   against the sample points in a quantile window.
//! - [`validate`]: two-sample Kolmogorov-Smirnov machinery and executable
//!   checks of the distributional identities tying the three layers together.
//!
//! All randomness is seeded and splittable ([`rng`]); a run is reproducible
//! bit for bit from `(seed, configuration)` regardless of thread count.

pub mod analytic;
pub mod dist;
mod error;
mod quad;
pub mod rng;
pub mod sim;
pub mod tail;
pub mod validate;

pub use analytic::QueueModel;
pub use dist::ServiceDistribution;
pub use error::{Error, Result};
pub use sim::{Discipline, SimulationRun};
