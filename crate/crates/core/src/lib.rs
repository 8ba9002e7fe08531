//! Simulation and verification toolkit for Markovian growth-fragmentation
//! processes.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cellsystem;
pub mod cli;
pub mod config;
pub mod cumulant;
pub mod fspec;
pub mod homogeneous;
pub mod levypath;
pub mod mclab;
pub mod measures;
pub mod numeric;
pub mod presets;
pub mod stream;
