//! Link-level simulator for parametric RSMA/SDMA integrated sensing and
//! communications (ISAC) precoders on an OFDM downlink.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! and `*F32` aliases below name the common concrete instantiations.

pub mod calibration;
pub mod cli;
pub mod comms;
pub mod error;
pub mod model;
pub mod precoder;
pub mod radar;
pub mod region;
pub mod scalar;

pub use error::{IsacError, Result};
pub use model::{generate_channels, scenario_preset, ArrayGeometry, ChannelSet, Preset, Rng, ScenarioConfig};
pub use precoder::{build_precoders, classify_special_case, Family, ParameterPoint, PrecoderSet, SpecialCase};
pub use scalar::Real;

pub type ChannelSetF64 = ChannelSet<f64>;
pub type ChannelSetF32 = ChannelSet<f32>;
pub type PrecoderSetF64 = PrecoderSet<f64>;
pub type PrecoderSetF32 = PrecoderSet<f32>;
