//! Config-driven verification campaigns for `fheat-core`.
//!
//! A campaign is an INI file listing experiments; each experiment picks a
//! model space, solver settings and a set of verifications. Running it
//! produces a versioned JSON report (`schema: 1`) with per-check metrics,
//! refinement tables and pass/fail per acceptance criterion, plus CSV
//! artifacts per experiment. Identical configurations give byte-identical
//! reports: there are no timestamps, and every random stream derives from
//! the campaign seed.

pub mod campaign;
pub mod checks;
pub mod config;
pub mod error;

pub use campaign::{list_catalog, render_report, run, run_config, write_campaign, CampaignReport, RunOptions};
pub use config::{load_config, parse_config, CampaignConfig, Check, ExperimentConfig};
pub use error::{CliError, Result};
