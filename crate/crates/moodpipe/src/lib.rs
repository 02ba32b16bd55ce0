//! Multilabel music-emotion-recognition pipeline.
//!
//! Turns a corpus of WAV tracks plus crowd annotations over the nine GEMS
//! emotions into consensus-validated labels, extracts frame-level audio
//! features aggregated into four track-level statistics, preprocesses them
//! (MDL discretization, CFS or t-test feature selection), trains three
//! classifier families under binary relevance (Naive Bayes, SMO-SVM, MLP)
//! and evaluates per-emotion accuracy and RMSE under k-fold cross-validation.
//!
//! The `moodpipe` binary wires the stages together; each stage is also usable
//! as a library module:
//!
//! * [`corpus`] — annotation CSV and WAV ingestion, corpus validation
//! * [`labeling`] — emotion scores, consensus thresholding, distribution stats
//! * [`features`] — framing, base feature extractors, statistic aggregation
//! * [`preprocess`] — entropy/MDL discretization, CFS and t-test selection
//! * [`learn`] — the three classifier families and the multilabel wrapper
//! * [`eval`] — cross-validation harness, metrics, report tables
//! * [`synth`] — synthetic corpus generator for end-to-end testing

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod hash;
pub mod labeling;
pub mod learn;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
