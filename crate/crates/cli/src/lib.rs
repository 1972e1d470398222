//! Experiment runner for one-resonant germs: configuration, dataset formats and
//! verification suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod plot;
pub mod suites;
