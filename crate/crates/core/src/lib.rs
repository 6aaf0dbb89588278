//! Electromagnetic wave scattering by many small impedance particles.
//!
//! The crate provides the reduced dipole system for a finite cloud of
//! particles, its continuum limit as an effective medium, and a boundary
//! integral solver for a single small sphere used as a reference.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod export;
pub mod greens;
pub mod incident;
pub mod interaction;
pub mod las;
pub mod limit;
pub mod linalg;
pub mod materials;
pub mod medium;
pub mod oracle;
pub mod particles;
pub mod quadrature;
pub mod study;
pub mod vector;
pub mod voxel;

pub use domain::SimDomain;
pub use error::{Error, Result};
pub use incident::{IncidentField, PlaneWave};
pub use materials::{FieldPreset, MaterialFields};
pub use medium::MediumParams;
pub use vector::{CMat3, CVec3, Vec3};
