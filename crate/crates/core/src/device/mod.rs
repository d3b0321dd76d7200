//! Virtual hardware for closed-loop testing: eye, rangefinder, push-up rig,
//! trace replay and a synthetic study population.

pub mod eye;
pub mod pushup;
pub mod study;
pub mod tof;
pub mod trace;

pub use eye::{EyeModel, EyePair};
pub use pushup::{closed_form_near_point, delivered_power, PushUpConfig, PushUpRig};
pub use study::{run_study, StudyConfig, StudyReport};
pub use tof::{TofModel, TofSensor};
pub use trace::{replay, write_command_log, ScenarioTrace};
