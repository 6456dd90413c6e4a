//! Fractionally supervised classification (FSC) for maxima nomination-sampled data.
//!
//! Under nomination sampling (NS) each recorded observation is the maximum of a set
//! of `k` draws from a two-component mixture. This crate provides:
//!
//! * exact NS densities and the competing correct / single-indicator objectives ([`mixture`]),
//! * data generation under perfect and Dell–Clutter ranking ([`sampling`]),
//! * the weighted-likelihood EM fitters FSC-NS and FSC-SRS ([`em`]),
//! * classification metrics and the enrichment ratio ([`metrics`]),
//! * a Monte Carlo grid harness ([`harness`]) and the WDBC imposed-NS pipeline ([`wdbc`]).

pub mod em;
pub mod error;
pub mod harness;

pub mod metrics;
pub mod mixture;
pub mod normal;
pub mod quadrature;
pub mod sampling;
pub mod wdbc;

pub use error::{Error, Result};
pub use mixture::{ComponentParams, MixtureParams, RareEventParams, SetSize};
