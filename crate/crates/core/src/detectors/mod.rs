//! Detector contract and the two built-in detectors: a ground-truth oracle
//! with controllable perturbation and a run-length smoothing segmenter.

mod oracle;
mod rlsa;

use serde::{Deserialize, Serialize};

use crate::corpus::{Detection, DetectionRecord};
use crate::error::{Error, Result};
use crate::raster::PageImage;

pub use oracle::{oracle_detect, ConfidenceModel, OracleDetector, Perturbation};
pub use rlsa::{
    classify_blocks, connected_components, estimate_char_height, rlsa_segment, rlsa_smooth,
    BlockStats, Component, PageGeometry, RlsaDetector, RlsaParams, RULE_CONFIDENCE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutput {
    pub page_id: String,
    pub detections: Vec<Detection>,
}

impl DetectorOutput {
    /// Checks page containment and confidence range.
    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        for d in &self.detections {
            if !d.bbox.is_valid() || !d.bbox.within_page(width as f64, height as f64) {
                return Err(Error::Engine(format!(
                    "detection {:?} outside the {width}x{height} page '{}'",
                    d.bbox.to_array(),
                    self.page_id
                )));
            }
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(Error::Engine(format!(
                    "confidence {} outside [0, 1]",
                    d.confidence
                )));
            }
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<DetectionRecord> {
        self.detections
            .iter()
            .map(|d| DetectionRecord::from_detection(&self.page_id, d))
            .collect()
    }
}

/// Anything that turns a page raster into layout detections. Implementations
/// must be callable concurrently from several threads.
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;

    fn detect(&self, page: &PageImage, page_id: &str) -> Result<DetectorOutput>;
}
