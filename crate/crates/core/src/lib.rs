//! Current-based protection analytics for transmission lines that connect
//! wind farms to the grid.
//!
//! The toolkit detects disturbances with a half-cycle cumulative-sum ratio,
//! describes short current windows with autoregressive coefficients and a
//! catalog of statistical and spectral features, ranks features with mRMR,
//! decides fault / no-fault with a GA-tuned Mamdani fuzzy system backed by
//! supervisory classifiers, and localizes and classifies faults in stages.
//! A conventional distance relay is included as a baseline.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the common `f64` instantiations.

pub mod classify;
pub mod detector;
pub mod error;
pub mod features;
pub mod fuzzy;
pub mod mrmr;
pub mod relay;
pub mod scalar;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Record = waveform::Record3Ph<f64>;
pub type Record32 = waveform::Record3Ph<f32>;
