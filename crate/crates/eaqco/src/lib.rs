//! Experiment runner around `eaqco-core`: scenario configs, seeded trials,
//! parameter sweeps and trace export.

pub mod config;
pub mod export;
pub mod experiment;
