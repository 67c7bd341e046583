//! Evaluation and training harness: agent implementations, episode runner,
//! metric aggregation, report rendering, evaluation suites, and the
//! curriculum trainer.

pub mod agent;
pub mod artifacts;
pub mod episode;
pub mod metrics;
pub mod report;
pub mod suite;
pub mod train;
