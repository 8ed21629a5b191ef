//! Command-line front end for hyper-training experiments.

pub mod config;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod parallel;
pub mod plot;
pub mod runner;
