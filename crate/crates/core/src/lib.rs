//! Functional-connectivity classification of ROI time series.
//!
//! The pipeline: Pearson correlation features per subject, a quartile mask
//! fitted on the training set, optional EROS-neighbour interpolation to
//! double the training set, and a tied-weight autoencoder trained jointly
//! with a single-layer perceptron head.

pub mod augmentation;
pub mod checkpoint;
pub mod cli;
pub mod connectivity;
pub mod eros;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod seeding;
pub mod synthdata;

pub use error::{Error, Result};
