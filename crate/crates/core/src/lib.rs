//! Deterministic benchmark harness for remediation strategies on a simulated
//! edge-cloud inference cluster.
//!
//! A run is fully described by a [`ScenarioConfig`]: the cluster blueprint,
//! scripted chaos, the SLOs and the seed. [`runner::run`] executes one
//! scenario under one [`Remediator`] and scores the recorded SLI series.

pub mod chaos;
pub mod config;
pub mod remediation;
pub mod runner;
pub mod simcore;
pub mod slo;

pub use config::{parse_scenario, parse_slos, scenario_digest, ConfigError, ScenarioConfig};
pub use config::{SliKind, SloSpec};
pub use remediation::{
    builtin_strategies, Observation, RemediationAction, Remediator, StrategyRegistry,
};
pub use runner::{compare, run, ComparisonReport, RunError, RunReport};
pub use simcore::SimTime;
pub use slo::{total_score, violation_score, violation_term, SliSeries, SloScore};
