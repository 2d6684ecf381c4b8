//! Multi-area load-frequency control.
//!
//! Builds linear state-space models of interconnected power-system areas
//! (inverter-interfaced wind/solar and conventional turbines), synthesizes
//! integral-augmented LQG controllers, and simulates disturbance scenarios.
//!
//! The usual pipeline:
//!
//! 1. [`model::build_plant`] from per-area parameters and tie lines,
//! 2. [`synthesis::design_lqg`] on the plant (integrator augmentation,
//!    LQR and Kalman gains),
//! 3. [`synthesis::assemble_closed_loop`] or [`synthesis::make_droop_baseline`],
//! 4. [`simulation::simulate`] under a [`simulation::Scenario`],
//! 5. [`analysis::metrics`] / [`analysis::compare`] on the resulting traces.

pub mod analysis;
pub mod cli;
pub mod model;
pub mod numerics;
pub mod simulation;
pub mod synthesis;

pub use numerics::Matrix;
