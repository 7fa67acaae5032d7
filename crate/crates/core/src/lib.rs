//! Tunneling of a spin in an N-fold symmetric anisotropy with a field along
//! the hard axis, treated two ways:
//!
//! - [`spin_model`]: exact diagonalization of
//!   `H/A = S_z^2 - (lambda/2)(S_+^N + S_-^N) - h S S_z`;
//! - [`semiclassics`] and [`dilute_gas`]: instantons on a ring threaded by
//!   an Aharonov-Bohm flux, whose interference splits the `N` lowest levels
//!   as `E_Nk = omega/2 - 2 D e^{-S_cl} cos((Phi - 2 pi k)/N)`.
//!
//! [`analysis`] sweeps the field and checks where the exact ground
//! splitting vanishes against the flux condition.

pub mod analysis;
pub mod dilute_gas;
pub mod eigen;
pub mod error;
pub mod numerics;
pub mod params;
pub mod semiclassics;
pub mod spin_model;
pub mod verify;

pub use analysis::{SweepResult, SweepRow};
pub use error::{Error, ErrorClass, Result};
pub use params::{validate_params, Purpose, Spin, SpinSystemParams};
pub use semiclassics::SemiclassicalModel;
pub use spin_model::{BandStructure, BandedSymmetricMatrix, Spectrum};
