//! Projector-guided, feedback-corrected brick placement.
//!
//! The crate covers projector modelling and calibration, brick and course
//! perception from point clouds, adaptive placement corrections, a
//! stochastic workcell simulator and adhesive coverage metrics. The
//! `brickwork` binary wraps it in a command-line tool.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod calibration;
pub mod cli;
pub mod coverage;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod perception;
pub mod projector;
pub mod random;
pub mod simulator;
