//! Tunable-lens presbyopia simulation.
//!
//! A lens controller turns time-of-flight distance and temperature readings
//! into per-eye lens power commands that shrink a young wearer's effective
//! amplitude of accommodation to that of an older decade. Around it sit
//! virtual devices (eye, sensor, push-up rig, study harness) for
//! hardware-in-the-loop validation and an offline defocus-blur renderer.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod device;
pub mod error;
pub mod optics;
pub mod render;
pub mod wearer;

pub use error::{Error, Result};
pub use optics::{AgeBracket, AgeMode, Diopter};
pub use wearer::WearerProfile;
