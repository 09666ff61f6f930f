//! Block-wise prequential codelength estimation for labeled token datasets.
//!
//! The library measures how many bits an adaptive ensemble of learners needs
//! to code a dataset's labels given its inputs, and compares that codelength
//! across input transformations to decide which views of the data carry
//! usable signal.

pub mod codelength;
pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod features;
pub mod generators;
pub mod learners;
pub mod rng;
pub mod runner;
pub mod schedule;
pub mod transforms;

pub use codelength::{Bits, Label, LabelSpace, PredictiveDistribution};
pub use error::{Error, Result};
