//! Stance-aware topic analysis of a keyword-filtered tweet stream: ingest and
//! storage, tokenisation, hashtag stance labels, state-level geocoding, LDA
//! topic modelling, time-series and proportion analytics, and poll correlation.

pub mod analytics;
pub mod config;
pub mod corpus;
pub mod error;
pub mod geo;
pub mod lda;
pub mod pipeline;
pub mod stance;
pub mod stats;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
