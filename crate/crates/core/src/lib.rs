//! Synthetic historical directory pages, layout post-processing,
//! reading-order snippet extraction and OCR/layout evaluation.

pub mod augment;
pub mod corpus;
pub mod detectors;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod ocr_bridge;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod seed;
pub mod snippets;
pub mod synthgen;

pub use error::{Error, Result};
