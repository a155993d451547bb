use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetManifest, PageAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Summary {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // keep min <= mean <= max under rounding
        Summary {
            min,
            max,
            mean: mean.clamp(min, max),
        }
    }
}

/// Aspect ratio (width / height) and scale (sqrt of area) over every box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBoxStats {
    pub ratio: Summary,
    pub scale: Summary,
    pub count: usize,
}

pub fn bbox_stats<'a>(pages: impl IntoIterator<Item = &'a PageAnnotation>) -> Result<BBoxStats> {
    let mut ratios = Vec::new();
    let mut scales = Vec::new();
    for page in pages {
        for e in &page.elements {
            ratios.push(e.bbox.width() / e.bbox.height());
            scales.push(e.bbox.area().sqrt());
        }
    }
    if ratios.is_empty() {
        return Err(Error::DatasetTooSmall(
            "bounding-box statistics need at least one element".into(),
        ));
    }
    Ok(BBoxStats {
        ratio: Summary::of(&ratios),
        scale: Summary::of(&scales),
        count: ratios.len(),
    })
}

/// Statistics over every annotation file listed in the manifest.
pub fn bbox_stats_from_manifest(m: &DatasetManifest, base_dir: &Path) -> Result<BBoxStats> {
    let pages = m
        .entries
        .iter()
        .map(|e| m.load_annotation(e, base_dir))
        .collect::<Result<Vec<_>>>()?;
    bbox_stats(&pages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Element, LayoutClass};
    use crate::geometry::BoundingBox;

    fn page(boxes: &[[f64; 4]]) -> PageAnnotation {
        let mut p = PageAnnotation::new("p", 1000, 1000);
        for b in boxes {
            p.elements.push(Element {
                bbox: BoundingBox::from_array(*b).unwrap(),
                label: LayoutClass::Paragraph,
            });
        }
        p
    }

    #[test]
    fn singleton_box() {
        let s = bbox_stats(&[page(&[[0., 0., 100., 10.]])]).unwrap();
        assert_eq!((s.ratio.min, s.ratio.mean, s.ratio.max), (10.0, 10.0, 10.0));
        assert!((s.scale.mean - 1000f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_boxes() {
        let s = bbox_stats(&[page(&[[0., 0., 10., 10.], [0., 20., 40., 30.]])]).unwrap();
        assert_eq!(s.ratio.min, 1.0);
        assert_eq!(s.ratio.max, 4.0);
        assert!((s.ratio.mean - 2.5).abs() < 1e-12);
        assert_eq!(s.count, 2);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(bbox_stats(&[page(&[])]).is_err());
    }
}
