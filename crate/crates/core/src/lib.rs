//! Proprioceptive population coding and self-organizing maps.
//!
//! The pipeline: synthesize reach-and-gaze babbling ([`babble`]), encode
//! joint angles with banks of tuning curves ([`codec`]), train a Kohonen
//! map on the encoded postures ([`som`]), decode map units back to angles
//! ([`decode`]) and score the result ([`metrics`]). [`experiment`] runs the
//! whole matrix of encodings and emits figures through [`plot`].

pub mod babble;
pub mod codec;
pub mod dataset;
pub mod decode;
pub mod error;
pub mod experiment;
pub mod kinematics;
pub mod metrics;
pub mod plot;
pub mod som;

pub use error::{Error, Result};
