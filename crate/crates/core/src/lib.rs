//! Per-slot physical-layer network coding receiver for network-coded slotted
//! ALOHA.
//!
//! K sources transmit M-ary orthogonal symbols simultaneously over a block
//! Rayleigh fading channel. The receiver detects the modulo-2 sum of their
//! bits with a list sphere decoder feeding a network-coded soft demapper.
//! [`harness`] runs the whole chain as a Monte Carlo bit-error-rate
//! experiment and [`cli`] exposes it on the command line.
//!
//! The numeric modules are generic over the scalar type through [`Real`];
//! concrete `f64` / `f32` aliases live at the crate root.

pub mod channel;
pub mod cli;
pub mod constellation;
mod error;
pub mod harness;
pub mod lsd;
pub mod modem;
pub mod somap;

use std::fmt::{Debug, Display};

pub use error::{Error, Result};
pub use num_complex::Complex;

/// Floating point scalar the receiver arithmetic runs on: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or sample.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Complex64 = Complex<f64>;
pub type Complex32 = Complex<f32>;

pub type SubsetSums64 = channel::SubsetSums<f64>;
pub type SubsetSums32 = channel::SubsetSums<f32>;
pub type FadingRealization64 = channel::FadingRealization<f64>;
pub type FadingRealization32 = channel::FadingRealization<f32>;
pub type ObservationFrame64 = channel::ObservationFrame<f64>;
pub type ObservationFrame32 = channel::ObservationFrame<f32>;
pub type SuperSymbol64 = constellation::SuperSymbol<f64>;
pub type SuperSymbol32 = constellation::SuperSymbol<f32>;
pub type CandidateList64 = lsd::CandidateList<f64>;
pub type CandidateList32 = lsd::CandidateList<f32>;
pub type SphereDecoder64 = lsd::SphereDecoder<f64>;
pub type SphereDecoder32 = lsd::SphereDecoder<f32>;
pub type LlrVector64 = somap::LlrVector<f64>;
pub type LlrVector32 = somap::LlrVector<f32>;
