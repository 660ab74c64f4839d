//! Variable-exponent Lorentz spaces `L^{p(·),q(·)}` on `(0, ℓ)` and numerical
//! boundedness experiments for Hardy-type, maximal, fractional, singular and
//! ergodic operators.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `…F64` / `…F32` aliases below fix the scalar.

pub mod config;
pub mod ergodic;
pub mod error;
pub mod exponent;
pub mod grid;
pub mod hardy;
pub mod norms;
pub mod operators;
pub mod protocol;
pub mod quadrature;
pub mod rng;
pub mod runner;
pub mod scalar;

pub use error::{Error, Result};
pub use exponent::ExponentFunction;
pub use grid::{Partition, Rearranged, StepFunction};
pub use hardy::HardySpec;
pub use norms::NormSpec;
pub use protocol::{BoundednessReport, FamilySpec, ProtocolSettings, Verdict};
pub use scalar::Real;

pub type PartitionF64 = Partition<f64>;
pub type StepFunctionF64 = StepFunction<f64>;
pub type ExponentFunctionF64 = ExponentFunction<f64>;
pub type NormSpecF64 = NormSpec<f64>;
pub type HardySpecF64 = HardySpec<f64>;

pub type PartitionF32 = Partition<f32>;
pub type StepFunctionF32 = StepFunction<f32>;
pub type ExponentFunctionF32 = ExponentFunction<f32>;
pub type NormSpecF32 = NormSpec<f32>;
pub type HardySpecF32 = HardySpec<f32>;
