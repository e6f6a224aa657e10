//! The sequential-sharing scenario: Alice and Bob measure sharply once, a
//! chain of Charlies measures the third qubit one after another.

mod analytic;
mod engine;
mod oracle;
pub mod properties;
mod scenario;

pub use analytic::{analytic_chain, analytic_values, contraction, ChainSolution};
pub use engine::{
    averaged_post_state, avg_correlation, correlation_table, correlation_values, evaluate,
    fixed_setting_correlation, joint_probability, mermin_value, state_before_charlie,
    svetlichny_value, tripartite_correlation, CharlieReport, CorrelationTable, InequalityReport,
    OutcomeTuple, SettingsChoice,
};
pub use oracle::{
    oracle_avg_correlation, oracle_correlation_table, oracle_joint_distribution, JointDistribution,
    Slot, ORACLE_MAX_CHARLIES,
};
pub use scenario::{
    CharlieStage, InequalityKind, InitialState, PartySettings, ScenarioConfig, StateKind,
    MAX_CHARLIES,
};
