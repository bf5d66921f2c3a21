//! Deterministic subframe-level simulator of a single-cell mmWave TDD downlink.
//!
//! The simulator models a single base station serving mobile users over a
//! wide-band mmWave carrier. Link quality is driven by geometry: box obstacles
//! block the line of sight, blocked links pay a fixed penalty on top of
//! free-space path loss, and a slowly-varying shadowing term wobbles the SINR
//! from subframe to subframe. On-off UDP sources feed per-user FIFO queues,
//! and each 100 us subframe a scheduler splits the data symbols between the
//! backlogged users.
//!
//! Five scheduling policies are implemented ([`sched::Policy`]): round robin,
//! max rate, standard proportional fair, the generalized (alpha/beta) variant,
//! and an enhanced variant that bends the average-rate bookkeeping with an
//! MCS-driven exponent so the scheduler reacts faster to channel swings.
//!
//! Everything is deterministic: a scenario seed fans out into named RNG
//! streams (traffic, shadowing, HARQ, placement), so the same scenario and
//! seed reproduce byte-identical results.
//!
//! Start with the examples:
//!
//! ```text
//! cargo run --example los_geometry        # blockage geometry and path loss
//! cargo run --example link_adaptation     # SINR -> MCS -> bits per symbol
//! cargo run --example traffic_trace       # on-off source behaviour
//! cargo run --example scheduler_shootout  # policies on a synthetic cell
//! cargo run --example run_case1           # full run, clustered-blockage cell
//! cargo run --example compare_case2       # spf vs epf over random drops
//! ```
//!
//! The `mmwave-mac-sim` binary wraps the same library behind `run`,
//! `compare` and `validate` subcommands for scripted use.

pub mod channel;
pub mod cli;
pub mod engine;
pub mod metrics;
pub mod rng;
pub mod sched;
pub mod traffic;
pub mod types;

pub use engine::{build_case1, build_case2, run, run_with_trace, RunResult, Scenario};
pub use sched::Policy;
pub use types::{McsIndex, Position, RateBps, SubframeConfig, TimeUs, UeId, Velocity};

/// Error type shared across the crate.
///
/// `Config` covers anything a user got wrong (bad scenario file, out-of-range
/// parameter); `Runtime` covers violated internal contracts and degenerate
/// inputs discovered mid-run. The CLI maps them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("runtime: {0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
