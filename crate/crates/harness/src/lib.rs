//! Experiment harness for the biased label distribution learning toolkit:
//! dataset I/O, synthetic data generation, seeded cross-validated experiment
//! runs, and cross-dataset statistics.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod stats_io;
pub mod synth;
