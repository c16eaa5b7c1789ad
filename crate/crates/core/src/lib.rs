//! Image-suited music recommendation.
//!
//! An image goes through a classification cascade (artwork or photograph,
//! then valence and arousal, then artwork style), the result is turned into
//! music-search keywords, and a provider returns a playlist. The crate also
//! carries the training engine for the classifiers and the statistics used
//! to evaluate recommendations with human raters.

pub mod nn;
pub mod data;
pub mod optim;
pub mod pipeline;
pub mod metadata;
pub mod provider;
pub mod eval;
