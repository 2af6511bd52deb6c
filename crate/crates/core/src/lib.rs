//! Key-pose grid representation for human action recognition.
//!
//! Pipeline stages, each usable on its own:
//!
//! 1. [`pose`]: per-person pose tracks and crops, plus the on-disk track format.
//! 2. [`refine`]: grow boxes so every confident joint is enclosed.
//! 3. [`normalize`]: box-relative joint coordinates with validity masks.
//! 4. [`cluster`]: key-pose selection by k-medoids (PAM), k-means or a GMM.
//! 5. [`grid`]: tile key-pose crops, optionally with the skeleton drawn on.
//! 6. [`classifier`]: linear softmax over downsampled grids.
//!
//! [`synth`] generates labelled corpora for all of the above and
//! [`pipeline`] wires the stages together.

pub mod classifier;
pub mod cluster;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod normalize;
pub mod pipeline;
pub mod pose;
pub mod refine;
pub mod rng;
pub mod synth;

pub use error::{GrarError, Result};
