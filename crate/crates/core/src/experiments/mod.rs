//! Experiment drivers: the ε trade-off sweep, the out-of-sample safety
//! Monte Carlo and the bound-validation suite.

pub mod config;
pub mod output;
pub mod safety;
pub mod svg;
pub mod tradeoff;
pub mod validation;

pub use config::{BetaRule, ExperimentConfig, RadiusConfig, SafetyConfig, Scenario, ValidationConfig};
pub use safety::{run_safety_mc, SafetyReport, SafetyRow};
pub use tradeoff::{run_tradeoff, run_tradeoff_on, TradeoffOutcome, TradeoffRecord};
pub use validation::{run_bound_validation, ClaimResult, ValidationReport};
