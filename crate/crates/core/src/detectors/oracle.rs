use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Detector, DetectorOutput};
use crate::corpus::{Detection, LayoutClass, PageAnnotation};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::PageImage;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceModel {
    Fixed {
        value: f64,
    },
    /// Uniform draws, from separate ranges for kept and flipped labels.
    Uniform {
        correct: (f64, f64),
        flipped: (f64, f64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub jitter_sigma: f64,
    pub label_flip_prob: f64,
    pub confidence: ConfidenceModel,
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation {
            jitter_sigma: 0.0,
            label_flip_prob: 0.0,
            confidence: ConfidenceModel::Fixed { value: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| {
            (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi
        };
        let conf_ok = match self.confidence {
            ConfidenceModel::Fixed { value } => (0.0..=1.0).contains(&value),
            ConfidenceModel::Uniform { correct, flipped } => ok_range(correct) && ok_range(flipped),
        };
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite())
            || !(0.0..=1.0).contains(&self.label_flip_prob)
            || !conf_ok
        {
            return Err(Error::InvalidParameter(format!(
                "invalid perturbation {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation::none()
    }
}

fn draw<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Replays ground truth as detections. With no perturbation the output is
/// the annotation itself at confidence 1.
pub fn oracle_detect(a: &PageAnnotation, p: &Perturbation, seed: u64) -> Result<DetectorOutput> {
    p.validate()?;
    let mut rng = rng_for(seed, "oracle", &a.page_id);
    let normal = Normal::new(0.0, p.jitter_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let (w, h) = (a.width as f64, a.height as f64);
    let mut detections = Vec::with_capacity(a.elements.len());
    for e in &a.elements {
        let mut bbox = e.bbox;
        if p.jitter_sigma > 0.0 {
            let mut c = e.bbox.to_array();
            for v in &mut c {
                *v += normal.sample(&mut rng);
            }
            let (x0, x1) = (c[0].min(c[2]), c[0].max(c[2]));
            let (y0, y1) = (c[1].min(c[3]), c[1].max(c[3]));
            bbox = BoundingBox {
                x_min: x0,
                y_min: y0,
                x_max: x1.max(x0 + 1.0),
                y_max: y1.max(y0 + 1.0),
            }
            .clip(w, h)
            .unwrap_or(e.bbox);
        }
        let flipped = p.label_flip_prob > 0.0 && rng.random_bool(p.label_flip_prob);
        let label = if flipped {
            let k = rng.random_range(0..LayoutClass::ALL.len() - 1);
            let others: Vec<LayoutClass> = LayoutClass::ALL
                .into_iter()
                .filter(|&c| c != e.label)
                .collect();
            others[k]
        } else {
            e.label
        };
        let confidence = match p.confidence {
            ConfidenceModel::Fixed { value } => value,
            ConfidenceModel::Uniform {
                correct,
                flipped: f,
            } => draw(&mut rng, if flipped { f } else { correct }),
        };
        detections.push(Detection::new(bbox, label, confidence)?);
    }
    Ok(DetectorOutput {
        page_id: a.page_id.clone(),
        detections,
    })
}

/// Oracle over a fixed set of annotated pages, looked up by page id.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pages: BTreeMap<String, PageAnnotation>,
    pub perturbation: Perturbation,
    pub seed: u64,
}

impl OracleDetector {
    pub fn new(
        pages: impl IntoIterator<Item = PageAnnotation>,
        perturbation: Perturbation,
        seed: u64,
    ) -> Self {
        OracleDetector {
            pages: pages.into_iter().map(|a| (a.page_id.clone(), a)).collect(),
            perturbation,
            seed,
        }
    }
}

impl Detector for OracleDetector {
    fn name(&self) -> &str {
        "oracle"
    }

    fn detect(&self, _page: &PageImage, page_id: &str) -> Result<DetectorOutput> {
        let a = self.pages.get(page_id).ok_or_else(|| {
            Error::Engine(format!("oracle has no annotation for page '{page_id}'"))
        })?;
        oracle_detect(a, &self.perturbation, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Element;

    fn page(n: usize) -> PageAnnotation {
        let mut a = PageAnnotation::new("p", 2000, 2000);
        for i in 0..n {
            let x = (i % 8) as f64 * 240.0 + 10.0;
            let y = (i / 8) as f64 * 30.0 % 1900.0 + 5.0;
            a.elements.push(Element {
                bbox: BoundingBox::new(x, y, x + 200.0, y + 20.0).unwrap(),
                label: LayoutClass::ALL[i % 8],
            });
        }
        a
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let a = page(40);
        let out = oracle_detect(&a, &Perturbation::none(), 3).unwrap();
        assert_eq!(out.detections.len(), 40);
        for (d, e) in out.detections.iter().zip(&a.elements) {
            assert_eq!((d.bbox, d.label, d.confidence), (e.bbox, e.label, 1.0));
        }
    }

    #[test]
    fn flip_rate_within_three_sigma() {
        let a = page(1000);
        let p = Perturbation {
            label_flip_prob: 0.2,
            ..Perturbation::none()
        };
        let out = oracle_detect(&a, &p, 11).unwrap();
        let flipped = out
            .detections
            .iter()
            .zip(&a.elements)
            .filter(|(d, e)| d.label != e.label)
            .count();
        // binomial(1000, 0.2): mean 200, sd 12.6
        assert!((160..=240).contains(&flipped), "{flipped}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = page(50);
        let p = Perturbation {
            jitter_sigma: 2.0,
            label_flip_prob: 0.3,
            confidence: ConfidenceModel::Uniform {
                correct: (0.7, 1.0),
                flipped: (0.3, 0.6),
            },
        };
        assert_eq!(
            oracle_detect(&a, &p, 5).unwrap(),
            oracle_detect(&a, &p, 5).unwrap()
        );
        assert_ne!(
            oracle_detect(&a, &p, 5).unwrap(),
            oracle_detect(&a, &p, 6).unwrap()
        );
    }

    #[test]
    fn confidence_ranges_follow_flip_state() {
        let a = page(200);
        let p = Perturbation {
            jitter_sigma: 0.0,
            label_flip_prob: 0.5,
            confidence: ConfidenceModel::Uniform {
                correct: (0.8, 1.0),
                flipped: (0.2, 0.4),
            },
        };
        let out = oracle_detect(&a, &p, 1).unwrap();
        for (d, e) in out.detections.iter().zip(&a.elements) {
            if d.label == e.label {
                assert!(d.confidence >= 0.8);
            } else {
                assert!(d.confidence <= 0.4);
            }
        }
    }
}
