//! Run-length smoothing segmentation with a rule-based classifier.

use serde::{Deserialize, Serialize};

use super::{Detector, DetectorOutput};
use crate::corpus::{Detection, LayoutClass};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::PageImage;

/// Confidence attached to every rule-classified block.
pub const RULE_CONFIDENCE: f64 = 0.5;

/// Fills every white run shorter than `threshold` that has black pixels on
/// both sides. Runs touching either end are left alone.
pub fn rlsa_smooth(bits: &[bool], threshold: usize) -> Vec<bool> {
    let mut out = bits.to_vec();
    let mut last_black: Option<usize> = None;
    for (i, &b) in bits.iter().enumerate() {
        if b {
            if let Some(j) = last_black {
                let gap = i - j - 1;
                if gap > 0 && gap < threshold {
                    out[j + 1..i].iter_mut().for_each(|v| *v = true);
                }
            }
            last_black = Some(i);
        }
    }
    out
}

fn smooth_rows(bits: &[bool], w: usize, threshold: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(bits.len());
    for row in bits.chunks(w) {
        out.extend(rlsa_smooth(row, threshold));
    }
    out
}

fn smooth_cols(bits: &[bool], w: usize, h: usize, threshold: usize) -> Vec<bool> {
    let mut out = bits.to_vec();
    let mut col = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = bits[y * w + x];
        }
        for (y, v) in rlsa_smooth(&col, threshold).into_iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    out
}

/// One 8-connected component: pixel extents (max exclusive) and size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub pixels: usize,
}

impl Component {
    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

pub fn connected_components(bits: &[bool], w: usize, h: usize) -> Vec<Component> {
    let mut seen = vec![false; bits.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (sx, sy) = (start % w, start / w);
        let mut c = Component {
            x0: sx,
            y0: sy,
            x1: sx + 1,
            y1: sy + 1,
            pixels: 0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            c.pixels += 1;
            c.x0 = c.x0.min(x);
            c.y0 = c.y0.min(y);
            c.x1 = c.x1.max(x + 1);
            c.y1 = c.y1.max(y + 1);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(c);
    }
    out
}

/// Median height of the ink components, used as the character height.
pub fn estimate_char_height(bits: &[bool], w: usize, h: usize) -> Option<f64> {
    let mut hs: Vec<usize> = connected_components(bits, w, h)
        .iter()
        .map(Component::height)
        .collect();
    if hs.is_empty() {
        return None;
    }
    hs.sort_unstable();
    Some(hs[hs.len() / 2] as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlsaParams {
    pub horizontal_threshold_1: u32,
    pub vertical_threshold: u32,
    pub horizontal_threshold_2: u32,
    pub binarize_threshold: u8,
    pub min_block_area: u32,
}

impl RlsaParams {
    /// Thresholds relative to the character height: 8x, 0.8x and 6x.
    pub fn from_char_height(h: f64) -> Self {
        let px = |f: f64| ((f * h).round() as u32).max(1);
        RlsaParams {
            horizontal_threshold_1: px(8.0),
            vertical_threshold: px(0.8),
            horizontal_threshold_2: px(6.0),
            binarize_threshold: 128,
            min_block_area: (h * h).round() as u32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizontal_threshold_1 == 0
            || self.vertical_threshold == 0
            || self.horizontal_threshold_2 == 0
        {
            return Err(Error::InvalidParameter(
                "RLSA thresholds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub black_pixel_density: f64,
    pub aspect_ratio: f64,
    pub height: f64,
}

fn overlaps(a: &Component, b: &Component) -> bool {
    a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1
}

/// Binarize, smooth rows and columns separately, AND them, smooth rows
/// again and take 8-connected components. Components whose boxes overlap
/// are united so the returned boxes are pairwise disjoint.
pub fn rlsa_segment(
    page: &PageImage,
    params: &RlsaParams,
) -> Result<Vec<(BoundingBox, BlockStats)>> {
    params.validate()?;
    let (w, h) = (page.width() as usize, page.height() as usize);
    if w == 0 || h == 0 {
        return Ok(Vec::new());
    }
    let bin = page.binarize(params.binarize_threshold);
    let horiz = smooth_rows(&bin, w, params.horizontal_threshold_1 as usize);
    let vert = smooth_cols(&bin, w, h, params.vertical_threshold as usize);
    let and: Vec<bool> = horiz.iter().zip(&vert).map(|(&a, &b)| a && b).collect();
    let smoothed = smooth_rows(&and, w, params.horizontal_threshold_2 as usize);

    let mut comps = connected_components(&smoothed, w, h);
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < comps.len() {
            let mut j = i + 1;
            while j < comps.len() {
                if overlaps(&comps[i], &comps[j]) {
                    let b = comps.swap_remove(j);
                    let a = &mut comps[i];
                    a.x0 = a.x0.min(b.x0);
                    a.y0 = a.y0.min(b.y0);
                    a.x1 = a.x1.max(b.x1);
                    a.y1 = a.y1.max(b.y1);
                    a.pixels += b.pixels;
                    merged = true;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            break;
        }
    }
    comps.sort_by_key(|c| (c.y0, c.x0));

    let mut out = Vec::new();
    for c in comps {
        let (bw, bh) = (c.x1 - c.x0, c.y1 - c.y0);
        if ((bw * bh) as u32) < params.min_block_area {
            continue;
        }
        out.push(block(&bin, w, c.x0, c.y0, c.x1, c.y1)?);
    }
    Ok(out)
}

fn block(
    bin: &[bool],
    w: usize,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
) -> Result<(BoundingBox, BlockStats)> {
    let (bw, bh) = (x1 - x0, y1 - y0);
    let black: usize = (y0..y1)
        .map(|y| bin[y * w + x0..y * w + x1].iter().filter(|&&b| b).count())
        .sum();
    let bbox = BoundingBox::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64)?;
    Ok((
        bbox,
        BlockStats {
            black_pixel_density: black as f64 / (bw * bh) as f64,
            aspect_ratio: bw as f64 / bh as f64,
            height: bh as f64,
        },
    ))
}

/// Joins line blocks into multi-line blocks. The AND step leaves the blank
/// rows between text lines white, so a paragraph comes out of
/// [`rlsa_segment`] one line at a time. Blocks that overlap horizontally and
/// are separated by fewer than `vertical_threshold` blank rows are united,
/// as are blocks whose boxes then overlap, until nothing changes.
pub fn group_lines(
    page: &PageImage,
    blocks: &[(BoundingBox, BlockStats)],
    params: &RlsaParams,
) -> Result<Vec<(BoundingBox, BlockStats)>> {
    let w = page.width() as usize;
    let mut boxes: Vec<[usize; 4]> = blocks
        .iter()
        .map(|(b, _)| [b.x_min, b.y_min, b.x_max, b.y_max].map(|v| v as usize))
        .collect();
    let gap = params.vertical_threshold as usize;
    let near = |a: &[usize; 4], b: &[usize; 4]| {
        let horizontal = a[0] < b[2] && b[0] < a[2];
        let vgap = a[1].max(b[1]).saturating_sub(a[3].min(b[3]));
        horizontal && vgap < gap
    };
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < boxes.len() {
            let mut j = i + 1;
            while j < boxes.len() {
                if near(&boxes[i], &boxes[j]) {
                    let b = boxes.swap_remove(j);
                    let a = &mut boxes[i];
                    *a = [
                        a[0].min(b[0]),
                        a[1].min(b[1]),
                        a[2].max(b[2]),
                        a[3].max(b[3]),
                    ];
                    merged = true;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            break;
        }
    }
    boxes.sort_by_key(|b| (b[1], b[0]));
    let bin = page.binarize(params.binarize_threshold);
    boxes
        .iter()
        .map(|b| block(&bin, w, b[0], b[1], b[2], b[3]))
        .collect()
}

/// What the classifier needs to know about the page.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageGeometry {
    pub width: f64,
    pub height: f64,
    /// Median line (character) height in pixels.
    pub line_height: f64,
}

/// Rule table:
/// - wider than 0.8 of the page: H1 when at least 1.5 line heights tall,
///   BigParagraph otherwise;
/// - multi-line column blocks: Paragraph;
/// - single-line blocks narrower than 0.6 of the typical paragraph width:
///   H2; wider ones Paragraph.
pub fn classify_blocks(blocks: &[(BoundingBox, BlockStats)], g: &PageGeometry) -> Vec<Detection> {
    let multi_widths = {
        let mut ws: Vec<f64> = blocks
            .iter()
            .filter(|(b, s)| s.height >= 1.5 * g.line_height && b.width() <= 0.8 * g.width)
            .map(|(b, _)| b.width())
            .collect();
        ws.sort_by(f64::total_cmp);
        ws.get(ws.len() / 2).copied()
    };
    blocks
        .iter()
        .map(|(b, s)| {
            let label = if b.width() > 0.8 * g.width {
                if s.height >= 1.5 * g.line_height {
                    LayoutClass::H1
                } else {
                    LayoutClass::BigParagraph
                }
            } else if s.height >= 1.5 * g.line_height {
                LayoutClass::Paragraph
            } else {
                match multi_widths {
                    Some(mw) if b.width() < 0.6 * mw => LayoutClass::H2,
                    _ => LayoutClass::Paragraph,
                }
            };
            Detection {
                bbox: *b,
                label,
                confidence: RULE_CONFIDENCE,
            }
        })
        .collect()
}

/// RLSA detector. Thresholds are derived per page from the estimated
/// character height unless fixed parameters are given.
#[derive(Debug, Clone, Default)]
pub struct RlsaDetector {
    pub params: Option<RlsaParams>,
}

impl Detector for RlsaDetector {
    fn name(&self) -> &str {
        "rlsa"
    }

    fn detect(&self, page: &PageImage, page_id: &str) -> Result<DetectorOutput> {
        let (w, h) = (page.width() as usize, page.height() as usize);
        let threshold = self.params.map(|p| p.binarize_threshold).unwrap_or(128);
        let char_h = match estimate_char_height(&page.binarize(threshold), w, h) {
            Some(c) => c,
            None => {
                return Ok(DetectorOutput {
                    page_id: page_id.to_string(),
                    detections: Vec::new(),
                })
            }
        };
        let params = self
            .params
            .unwrap_or_else(|| RlsaParams::from_char_height(char_h));
        let blocks = group_lines(page, &rlsa_segment(page, &params)?, &params)?;
        let geometry = PageGeometry {
            width: w as f64,
            height: h as f64,
            line_height: char_h,
        };
        Ok(DetectorOutput {
            page_id: page_id.to_string(),
            detections: classify_blocks(&blocks, &geometry),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(rlsa_smooth(&bits(&[1, 0, 0, 1]), 3), bits(&[1, 1, 1, 1]));
        assert_eq!(
            rlsa_smooth(&bits(&[1, 0, 0, 0, 1]), 3),
            bits(&[1, 0, 0, 0, 1])
        );
        assert_eq!(rlsa_smooth(&bits(&[0, 0, 0]), 5), bits(&[0, 0, 0]));
        assert_eq!(
            rlsa_smooth(&bits(&[0, 1, 0, 1, 0]), 5),
            bits(&[0, 1, 1, 1, 0])
        );
    }

    #[test]
    fn components_are_eight_connected() {
        let b = bits(&[1, 0, 0, 0, 1, 0, 0, 0, 1]);
        let c = connected_components(&b, 3, 3);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].pixels, 3);
        let b = bits(&[1, 0, 1, 0, 0, 0, 1, 0, 1]);
        assert_eq!(connected_components(&b, 3, 3).len(), 4);
    }

    fn text_line(img: &mut PageImage, x0: i64, y0: i64, words: usize) {
        // 10-px tall "glyphs", 2 px apart, words 8 px apart
        let mut x = x0;
        for _ in 0..words {
            for _ in 0..5 {
                img.fill_rect(x, y0, x + 6, y0 + 10, 0);
                x += 8;
            }
            x += 8;
        }
    }

    #[test]
    fn single_line_is_one_block() {
        let mut img = PageImage::blank(400, 100);
        text_line(&mut img, 20, 40, 6);
        let blocks = rlsa_segment(&img, &RlsaParams::from_char_height(10.0)).unwrap();
        assert_eq!(blocks.len(), 1);
        let b = blocks[0].0;
        assert!(b.contains(&BoundingBox::new(20.0, 40.0, 20.0 + 6.0 * 48.0 - 10.0, 50.0).unwrap()));
    }

    #[test]
    fn separated_paragraphs_are_separate_blocks() {
        let mut img = PageImage::blank(400, 200);
        for i in 0..3 {
            text_line(&mut img, 20, 20 + i * 14, 6);
            text_line(&mut img, 20, 110 + i * 14, 6);
        }
        let p = RlsaParams::from_char_height(10.0);
        let blocks = rlsa_segment(&img, &p).unwrap();
        assert!(blocks.len() >= 2, "{blocks:?}");
        assert!(blocks
            .iter()
            .all(|(_, s)| (0.0..=1.0).contains(&s.black_pixel_density)));
    }

    #[test]
    fn lines_group_into_paragraphs() {
        let mut img = PageImage::blank(400, 200);
        for i in 0..3 {
            text_line(&mut img, 20, 20 + i * 14, 6);
            text_line(&mut img, 20, 110 + i * 14, 6);
        }
        let p = RlsaParams::from_char_height(10.0);
        let blocks = group_lines(&img, &rlsa_segment(&img, &p).unwrap(), &p).unwrap();
        let boxes: Vec<_> = blocks.iter().map(|(b, _)| b.to_array()).collect();
        assert_eq!(
            boxes,
            [[20.0, 20.0, 298.0, 58.0], [20.0, 110.0, 298.0, 148.0]]
        );
        let (_, s) = blocks[0];
        // 3 lines of 30 glyphs, 6x10 each
        assert_eq!(s.black_pixel_density, 3.0 * 30.0 * 60.0 / (278.0 * 38.0));
    }

    #[test]
    fn blank_page_is_empty() {
        let img = PageImage::blank(50, 50);
        assert!(rlsa_segment(&img, &RlsaParams::from_char_height(10.0))
            .unwrap()
            .is_empty());
        let out = RlsaDetector::default().detect(&img, "blank").unwrap();
        assert!(out.detections.is_empty());
    }

    #[test]
    fn rule_table() {
        let g = PageGeometry {
            width: 1000.0,
            height: 1400.0,
            line_height: 20.0,
        };
        let stats = |h: f64| BlockStats {
            black_pixel_density: 0.3,
            aspect_ratio: 1.0,
            height: h,
        };
        let blocks = vec![
            (
                BoundingBox::new(50.0, 10.0, 950.0, 50.0).unwrap(),
                stats(40.0),
            ),
            (
                BoundingBox::new(50.0, 60.0, 950.0, 80.0).unwrap(),
                stats(20.0),
            ),
            (
                BoundingBox::new(50.0, 100.0, 350.0, 200.0).unwrap(),
                stats(100.0),
            ),
            (
                BoundingBox::new(150.0, 210.0, 250.0, 230.0).unwrap(),
                stats(20.0),
            ),
        ];
        let labels: Vec<LayoutClass> = classify_blocks(&blocks, &g)
            .iter()
            .map(|d| d.label)
            .collect();
        assert_eq!(
            labels,
            [
                LayoutClass::H1,
                LayoutClass::BigParagraph,
                LayoutClass::Paragraph,
                LayoutClass::H2
            ]
        );
        assert!(classify_blocks(&[], &g).is_empty());
        assert!(classify_blocks(&blocks, &g)
            .iter()
            .all(|d| d.confidence == RULE_CONFIDENCE));
    }

    proptest! {
        #[test]
        fn smoothing_is_monotone_and_idempotent(v in proptest::collection::vec(any::<bool>(), 0..64), t in 1usize..10) {
            let once = rlsa_smooth(&v, t);
            prop_assert!(v.iter().zip(&once).all(|(&a, &b)| !a || b));
            prop_assert_eq!(rlsa_smooth(&once, t), once);
        }

        #[test]
        fn segment_boxes_are_disjoint(cells in proptest::collection::vec((0i64..60, 0i64..60, 1i64..8, 1i64..8), 1..12)) {
            let mut img = PageImage::blank(72, 72);
            for (x, y, w, h) in cells {
                img.fill_rect(x, y, x + w, y + h, 0);
            }
            let p = RlsaParams { horizontal_threshold_1: 6, vertical_threshold: 3, horizontal_threshold_2: 4, binarize_threshold: 128, min_block_area: 1 };
            let blocks = rlsa_segment(&img, &p).unwrap();
            for i in 0..blocks.len() {
                for j in i + 1..blocks.len() {
                    prop_assert_eq!(blocks[i].0.intersection_area(&blocks[j].0), 0.0);
                }
            }
        }
    }
}
