//! Desk-scale laboratory for Hadamard aperture-encoded synthetic-aperture
//! ultrasound imaging.
//!
//! The crate simulates encoded acquisitions of point-scatterer scenes,
//! reconstructs images with the FORCES and READI decompositions, estimates
//! and compensates inter-group motion (EMC²), clutter-filters low-resolution
//! image ensembles, and quantifies image quality — all on synthetic data.
//!
//! The main building blocks:
//!
//! - [`hadamard`] — exact integer Hadamard algebra (Sylvester construction,
//!   inverse identities, Kronecker index maps).
//! - [`simulate`] — analytic pulse-echo forward model for static and moving
//!   point-scatterer scenes, plain and aperture-encoded.
//! - [`beamform`] — FORCES decode + delay-and-sum, READI grouped
//!   reconstruction, coherent compounding, coherence-factor weighting, and
//!   the uFORCES sparse baseline.
//! - [`motion`] — NCC block matching between low-resolution images,
//!   sub-pixel peak refinement, field densification, complex-image warping,
//!   and motion-compensated compounding.
//! - [`analysis`] — gCNR, PSF widths, motion-field RMSE, and SVD clutter
//!   filtering of image ensembles.
//! - [`scenario`] / [`container`] / [`pipeline`] — JSON scenario files, the
//!   binary dataset container, and the `readi-lab` CLI entry points.
//!
//! Run `cargo run --example readi_compounding` (or any other example) for a
//! guided tour, or `readi-lab demo` for the end-to-end validation table.

pub mod analysis;
pub mod beamform;
pub mod container;
pub mod demo;
pub mod hadamard;
pub mod motion;
pub mod pgm;
pub mod pipeline;
pub mod scenario;
pub mod simulate;

pub use beamform::{BeamformConfig, ComplexImage, ImagingGrid};
pub use hadamard::{GroupingScheme, HadamardMatrix};
pub use motion::{MotionConfig, MotionField};
pub use simulate::{ArrayGeometry, PulseDefinition, ScattererScene};
