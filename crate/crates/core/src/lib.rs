//! Opportunistic multi-armed bandits for UI experimentation.
//!
//! The crate implements AdaUCB, a UCB variant whose exploration bonus
//! shrinks as the observed load (the price of exploring right now) grows,
//! alongside uniform A/B allocation, decaying epsilon-greedy, Thompson
//! sampling, UCB1 and an oracle policy. Policies are evaluated offline on
//! uniformly-logged event streams with the replay method, or online against
//! a synthetic generator.
//!
//! - [`policy`]: index functions and the [`Policy`] state machine
//! - [`load`]: quantile truncation, normalization and load generators
//! - [`replay`]: rejection-sampling evaluation over a logged stream
//! - [`simulate`]: synthetic uniformly-logged data and online simulation
//! - [`ingest`]: raw display/click logs to the canonical event log
//! - [`report`]: regret, aggregation across seeds, correlation and export
//! - [`experiment`]: configured experiment grids (generate, ingest, replay, sweep)

pub mod arm;
pub mod config;
pub mod error;
pub mod event;
pub mod experiment;
pub mod ingest;
pub mod load;
pub mod policy;
pub mod replay;
pub mod report;
pub mod simulate;

pub use arm::{ArmId, ArmStats, GroundTruth};
pub use error::{Error, Result};
pub use event::LoggedEvent;
pub use load::LoadNormalizer;
pub use policy::{Policy, PolicyKind, UcbIndex};
pub use replay::{replay, replay_policy, ReplayOptions, ReplayResult};
pub use report::{AggregateResult, RunResult};
pub use simulate::{generate_log, simulate_online, LoadScenario, SyntheticSpec};
