//! Temporal-attention multi-task attribute recognition over tracklet
//! features.
//!
//! A tracklet is a short image sequence of one pedestrian; each frame
//! arrives as a precomputed spatial feature map (channels × grid). The
//! model reduces frames to per-frame feature vectors through per-channel
//! convolution + pooling units, scores frame importance with per-attribute
//! temporal attention, fuses frames into a single vector, and classifies
//! every attribute group with its own head. Training, the grouped
//! evaluation protocol, ablation variants, and a synthetic planted-signal
//! benchmark are included.

pub mod adam;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod model;
pub mod schema;
pub mod synthetic;
pub mod tape;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{Real, Tensor};
