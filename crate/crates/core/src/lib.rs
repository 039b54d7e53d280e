//! Punctured-channel (WRD) MIMO detection.
//!
//! The crate is organised bottom-up: [`linalg`] (QR/WR decompositions),
//! [`modem`] (Gray QAM), [`channel`] (fading, noise and seeded streams),
//! [`detect`] (hard-output detectors with flop counting), [`softout`]
//! (max-log LLRs), [`theory`] (BER, PEP and complexity models) and [`sim`]
//! (the Monte Carlo harness).

pub mod channel;
pub mod detect;
pub mod error;
pub mod linalg;
pub mod modem;
pub mod softout;
pub mod sim;
pub mod theory;

pub use error::{MimoError, Result};
