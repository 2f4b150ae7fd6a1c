//! Optimal spectrum sensing and leasing for a virtual operator whose
//! preferences follow prospect theory.
//!
//! The operator first chooses how much bandwidth to sense, observes the
//! fraction that turns out usable, then leases whatever demand is left.
//! [`closed_form`] holds the analytic solutions, [`oracle`] an independent
//! grid search used to check them, and [`sweep`] the parameter studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod config;
pub mod error;
pub mod instances;
pub mod market;
pub mod oracle;
pub mod pt;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
pub use market::{MarketScenario, Provenance, SensingDistribution, SolveResult};
pub use pt::{ReferencePoint, RiskProfile};
