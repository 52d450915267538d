//! Desk-scale simulation of GNSS-based absolute time synchronization for
//! vehicular ad-hoc networks.
//!
//! The crate is organised around the pipeline a GNSS timing receiver in a
//! vehicle goes through, plus the in-band alternatives it is compared with:
//!
//! - [`constellation`]: nominal GPS / BDS orbits and earth-fixed propagation
//! - [`visibility`]: elevation masks (open sky, urban canyon) and availability
//!   statistics
//! - [`estimation`]: pseudorange synthesis, least-squares PVT, DOP and timing
//!   uncertainty
//! - [`clocks`]: quartz clocks, GPS to UTC time transfer, 1 PPS error models and
//!   GNSS-disciplined clocks
//! - [`protocols`]: a discrete-event vehicular network running GNSS sync, TPSN,
//!   RBS, FTSP and CTS
//! - [`analysis`]: offset statistics and requirement calculators
//! - [`scenario`]: declarative, seeded scenario files and the run orchestrator

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod clocks;
pub mod constellation;
pub mod estimation;
pub mod geo;
pub mod protocols;
pub mod rng;
pub mod scenario;
pub mod trajectory;
pub mod visibility;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
