//! Simulation and optimization toolkit for near-field RIS-assisted RSMA
//! covert communication.
//!
//! The library is organized around six subsystems:
//!
//! - [`channel`] — Saleh-Valenzuela BS-RIS channel, near-field spherical-wave
//!   RIS-user channels, array response vectors, cascaded channels, and the
//!   warden's log-uniform noise-uncertainty model.
//! - [`rsma`] — rate-splitting signal model: common/private SINRs, achievable
//!   rates, common-rate allocation bookkeeping.
//! - [`covertness`] — warden-side analysis: detection error probability in
//!   closed form, optimal detection threshold, leakage budget, and Monte-Carlo
//!   validation of the closed forms.
//! - [`outage`] — per-user SINR CDFs under the Rayleigh cascade statistical
//!   model, approximate and exact-union outage probability, Monte-Carlo
//!   validation.
//! - [`optimizer`] — covert sum-rate maximization by alternating optimization:
//!   SCA-convexified BS precoder and RIS phase subproblems solved by an
//!   interior-point method, plus baseline designers.
//! - [`experiments`] — batch experiment runner: named experiment kinds behind
//!   a registry, seeded sweeps, CSV/JSON emission, plot scripts.
//!
//! All powers are stored internally in linear watts; dBm/dB conversion happens
//! at the configuration boundary (see [`units`]).

pub mod channel;
pub mod config;
pub mod covertness;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod outage;
pub mod rsma;
pub mod schema;
pub mod solver;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Speed of light in m/s (the conventional rounded value used in link budgets).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
