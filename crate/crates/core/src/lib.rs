//! Planning and control toolkit for a two-wheeled differential-drive robot.
//!
//! The crate is organised bottom-up:
//!
//! - [`robot`]: physical parameters, wheel/body kinematics and the wheel-level plant.
//! - [`workspace`]: rectangular field with circular obstacles, loaders and random generation.
//! - [`spline`]: clamped B-spline paths, sampling with finite-difference derivatives.
//! - [`cost`]: collision, velocity and acceleration penalties and the constrained path cost.
//! - [`pso`]: particle swarm search over spline control points.
//! - [`control`]: cascaded four-PID tracking controller and PWM quantization.
//! - [`sim`]: closed-loop simulation and approach-path generation.
//! - [`harness`]: Monte Carlo campaigns and penalty-coefficient sweeps.
//!
//! [`config`], [`export`] and [`svg`] hold the file formats used by the CLI.

pub mod config;
pub mod control;
pub mod cost;
pub mod error;
pub mod export;
pub mod geometry;
pub mod harness;
pub mod integrate;
pub mod pso;
pub mod rng;
pub mod robot;
pub mod sim;
pub mod spline;
pub mod svg;
pub mod workspace;

pub use error::{Error, Result};
pub use geometry::Point;
