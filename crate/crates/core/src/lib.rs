//! Simulation, time-domain back-projection and residual motion compensation
//! for forward-looking automotive MIMO SAR.
//!
//! The processing chain mirrors a real system: range-compressed data per
//! virtual phase center ([`signal_sim`]), one low-resolution image per pulse
//! focused on a common ground grid ([`tdbp`]), estimation of a constant
//! navigation velocity error from bright ground control points and phase
//! compensation of the stack ([`moco`]), and image-quality metrics
//! ([`metrics`]). [`io`] holds the binary interchange formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod moco;
pub mod signal_sim;
pub mod tdbp;

pub use error::{Error, Result};
pub use geometry::{ArrayConfig, GroundGrid, RangeMode, Trajectory, Vec3};
pub use moco::{AutofocusParams, Gcp, MocoReport, PhaseScreenSet, RefocusOutcome, Weighting, WlsOptions};
pub use signal_sim::{DataCube, RadarConfig, Scatterer, Scene};
pub use tdbp::{ImageStack, Interpolator, SarImage};
