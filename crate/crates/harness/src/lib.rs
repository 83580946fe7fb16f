//! Configuration, experiment runner, metrics files, plot data and self-test
//! for the multi-cell over-the-air federated learning simulator.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod pareto;
pub mod plot;
pub mod selftest;
