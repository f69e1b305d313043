//! Fairness testing and repair for LLM-generated decision code.

pub mod cli;
pub mod experiment;
pub mod fma;
pub mod gateway;
pub mod metamorphic;
pub mod metrics;
pub mod process;
pub mod prompt;
pub mod roles;
pub mod sandbox;
pub mod snippet;
pub mod task;
pub mod value;
