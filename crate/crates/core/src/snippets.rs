//! Reading order reconstruction and snippet extraction.

use std::path::{Path, PathBuf};

use crate::corpus::{Detection, LayoutClass};
use crate::error::{Error, Result};
use crate::geometry::{pad_and_clip, BoundingBox};
use crate::raster::PageImage;

pub const DEFAULT_PADDING: f64 = 4.0;
pub const DEFAULT_SCALE: f64 = 1.6;

/// Boxes wider than this share of the page split it into bands.
pub const FULL_WIDTH_SHARE: f64 = 0.8;
/// Column clustering gap as a share of the median element width.
pub const COLUMN_GAP_SHARE: f64 = 0.5;

/// Tolerance in pixels when testing whether a Curly encloses a box.
const MEMBER_TOLERANCE: f64 = 2.0;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn order_group(idx: &[usize], elements: &[(BoundingBox, LayoutClass)], page_w: f64) -> Vec<usize> {
    let b = |i: usize| elements[i].0;
    let (mut full, rest): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| b(i).width() > FULL_WIDTH_SHARE * page_w);
    full.sort_by(|&i, &j| b(i).y_min.total_cmp(&b(j).y_min).then(i.cmp(&j)));

    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); full.len() + 1];
    for i in rest {
        let cy = b(i).center().1;
        let k = full.iter().filter(|&&f| b(f).center().1 < cy).count();
        bands[k].push(i);
    }

    let mut out = Vec::with_capacity(idx.len());
    for (k, band) in bands.into_iter().enumerate() {
        if !band.is_empty() {
            let gap = COLUMN_GAP_SHARE * median(band.iter().map(|&i| b(i).width()).collect());
            let mut by_x = band;
            by_x.sort_by(|&i, &j| b(i).center().0.total_cmp(&b(j).center().0).then(i.cmp(&j)));
            let mut columns: Vec<Vec<usize>> = vec![vec![by_x[0]]];
            let mut right = b(by_x[0]).x_max;
            for w in by_x.windows(2) {
                // elements that overlap the column horizontally stay in it
                let next = b(w[1]);
                if next.center().0 - b(w[0]).center().0 > gap && next.x_min >= right {
                    columns.push(Vec::new());
                    right = next.x_max;
                } else {
                    right = right.max(next.x_max);
                }
                columns.last_mut().expect("nonempty").push(w[1]);
            }
            for mut col in columns {
                col.sort_by(|&i, &j| {
                    b(i).y_min
                        .total_cmp(&b(j).y_min)
                        .then(b(i).x_min.total_cmp(&b(j).x_min))
                        .then(i.cmp(&j))
                });
                out.extend(col);
            }
        }
        if let Some(&f) = full.get(k) {
            out.push(f);
        }
    }
    out
}

/// Reading order as a permutation of the input indices: bands split by
/// full-width elements top to bottom, columns left to right, elements top
/// to bottom. A Curly is followed directly by the elements it encloses,
/// ordered the same way.
pub fn reading_order(elements: &[(BoundingBox, LayoutClass)], page_w: f64) -> Vec<usize> {
    let n = elements.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if elements[i].1 == LayoutClass::Curly {
            continue;
        }
        parent[i] = (0..n)
            .filter(|&c| {
                elements[c].1 == LayoutClass::Curly
                    && elements[c]
                        .0
                        .contains_with_tolerance(&elements[i].0, MEMBER_TOLERANCE)
            })
            .min_by(|&a, &c| {
                elements[a]
                    .0
                    .area()
                    .total_cmp(&elements[c].0.area())
                    .then(a.cmp(&c))
            });
    }
    let top: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let mut out = Vec::with_capacity(n);
    for i in order_group(&top, elements, page_w) {
        out.push(i);
        if elements[i].1 == LayoutClass::Curly {
            let members: Vec<usize> = (0..n).filter(|&j| parent[j] == Some(i)).collect();
            out.extend(order_group(&members, elements, page_w));
        }
    }
    out
}

/// Reading order of detections.
pub fn order_detections(dets: &[Detection], page_w: f64) -> Vec<usize> {
    let els: Vec<(BoundingBox, LayoutClass)> = dets.iter().map(|d| (d.bbox, d.label)).collect();
    reading_order(&els, page_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snippet {
    pub image: PageImage,
    pub source_box: BoundingBox,
    pub label: LayoutClass,
    pub order_index: usize,
    pub page_id: String,
}

impl Snippet {
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.png", self.page_id, self.order_index, self.label)
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        self.image.save_png(&path)?;
        Ok(path)
    }
}

/// Crops the padded box and rescales it so the height becomes
/// `round(scale * crop height)`; the width follows the same factor.
pub fn extract_snippet(
    page: &PageImage,
    page_id: &str,
    d: &Detection,
    order_index: usize,
    padding: f64,
    scale: f64,
) -> Result<Snippet> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let (w, h) = (page.width(), page.height());
    let padded = pad_and_clip(&d.bbox, padding, w as f64, h as f64)?;
    let (x0, y0, x1, y1) = padded.pixel_rect(w, h);
    let crop = page.crop(x0, y0, x1, y1)?;
    let new_h = ((scale * crop.height() as f64).round() as u32).max(1);
    let new_w = ((scale * crop.width() as f64).round() as u32).max(1);
    let image = crop.resize_bilinear(new_w, new_h)?;
    Ok(Snippet {
        image,
        source_box: d.bbox,
        label: d.label,
        order_index,
        page_id: page_id.to_string(),
    })
}

/// Snippets of every non-Curly detection, in reading order. Order indices
/// count all detections, so a Curly leaves a gap in the sequence.
pub fn extract_ordered(
    page: &PageImage,
    page_id: &str,
    dets: &[Detection],
    padding: f64,
    scale: f64,
) -> Result<Vec<Snippet>> {
    let order = order_detections(dets, page.width() as f64);
    let mut out = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if dets[i].label == LayoutClass::Curly {
            continue;
        }
        out.push(extract_snippet(page, page_id, &dets[i], k, padding, scale)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(a: f64, b: f64, c: f64, d: f64) -> BoundingBox {
        BoundingBox::new(a, b, c, d).unwrap()
    }

    const P: LayoutClass = LayoutClass::Paragraph;

    #[test]
    fn single_column_top_to_bottom() {
        let els = vec![
            (bx(10., 200., 300., 250.), P),
            (bx(10., 10., 300., 60.), P),
            (bx(10., 100., 300., 150.), P),
        ];
        assert_eq!(reading_order(&els, 1000.0), vec![1, 2, 0]);
    }

    #[test]
    fn heading_above_two_columns() {
        let els = vec![
            (bx(520., 100., 900., 200.), P),
            (bx(50., 300., 450., 400.), P),
            (bx(50., 10., 950., 60.), LayoutClass::H1),
            (bx(50., 100., 450., 200.), P),
            (bx(520., 300., 900., 400.), P),
        ];
        assert_eq!(reading_order(&els, 1000.0), vec![2, 3, 1, 0, 4]);
    }

    #[test]
    fn wide_block_and_centred_heading_share_a_column() {
        let els = vec![
            (bx(640., 100., 760., 120.), LayoutClass::H4),
            (bx(70., 140., 1180., 300.), LayoutClass::Curly),
            (bx(665., 320., 730., 340.), LayoutClass::H3),
        ];
        assert_eq!(reading_order(&els, 1400.0), vec![0, 1, 2]);
    }

    #[test]
    fn curly_members_follow_curly() {
        let els = vec![
            (bx(10., 10., 400., 60.), P),
            (bx(10., 80., 250., 130.), P),
            (bx(10., 80., 400., 200.), LayoutClass::Curly),
            (bx(300., 120., 390., 140.), LayoutClass::H3),
            (bx(10., 150., 250., 200.), P),
            (bx(10., 220., 400., 260.), P),
        ];
        assert_eq!(reading_order(&els, 1000.0), vec![0, 2, 1, 4, 3, 5]);
    }

    #[test]
    fn snippet_sizes() {
        let page = PageImage::blank(200, 200);
        let d = Detection::new(bx(10., 10., 60., 30.), P, 1.0).unwrap();
        let s = extract_snippet(&page, "p", &d, 0, 0.0, 1.6).unwrap();
        assert_eq!((s.image.width(), s.image.height()), (80, 32));
        let d = Detection::new(bx(10., 10., 60., 110.), P, 1.0).unwrap();
        let s = extract_snippet(&page, "p", &d, 0, 0.0, 1.6).unwrap();
        assert_eq!(s.image.height(), 160);
        let s = extract_snippet(&page, "p", &d, 3, 4.0, 1.0).unwrap();
        assert_eq!((s.image.width(), s.image.height()), (58, 108));
        assert_eq!(s.file_name(), "p_3_Paragraph.png");
    }

    #[test]
    fn unit_scale_without_padding_is_exact_crop() {
        let mut page = PageImage::blank(50, 40);
        for (i, p) in page.pixels_mut().iter_mut().enumerate() {
            *p = (i * 7 % 256) as u8;
        }
        let d = Detection::new(bx(5., 6., 25., 30.), P, 1.0).unwrap();
        let s = extract_snippet(&page, "p", &d, 0, 0.0, 1.0).unwrap();
        assert_eq!(s.image, page.crop(5, 6, 25, 30).unwrap());
    }

    #[test]
    fn bad_scale_is_rejected() {
        let page = PageImage::blank(50, 40);
        let d = Detection::new(bx(5., 6., 25., 30.), P, 1.0).unwrap();
        assert!(extract_snippet(&page, "p", &d, 0, 4.0, 0.0).is_err());
    }

    fn arb_elements() -> impl Strategy<Value = Vec<(BoundingBox, LayoutClass)>> {
        proptest::collection::vec(
            (
                0.0f64..900.0,
                0.0f64..1800.0,
                5.0f64..500.0,
                5.0f64..200.0,
                0usize..8,
            ),
            0..30,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(x, y, w, h, c)| (bx(x, y, x + w, y + h), LayoutClass::ALL[c]))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn order_is_a_permutation(els in arb_elements()) {
            let mut o = reading_order(&els, 1000.0);
            o.sort_unstable();
            prop_assert_eq!(o, (0..els.len()).collect::<Vec<_>>());
        }

        #[test]
        fn vertical_shift_keeps_order(els in arb_elements(), dy in 0.0f64..500.0) {
            let moved: Vec<_> = els.iter().map(|(b, c)| (b.translate(0.0, dy), *c)).collect();
            prop_assert_eq!(reading_order(&els, 1000.0), reading_order(&moved, 1000.0));
        }

        #[test]
        fn snippet_aspect_ratio(x in 0.0f64..100.0, y in 0.0f64..100.0, w in 4.0f64..90.0, h in 4.0f64..90.0, s in 0.5f64..3.0) {
            let page = PageImage::blank(200, 200);
            let d = Detection::new(bx(x, y, x + w, y + h), P, 1.0).unwrap();
            let sn = extract_snippet(&page, "p", &d, 0, 4.0, s).unwrap();
            let crop = pad_and_clip(&d.bbox, 4.0, 200.0, 200.0).unwrap();
            let (x0, y0, x1, y1) = crop.pixel_rect(200, 200);
            let (cw, ch) = ((x1 - x0) as f64, (y1 - y0) as f64);
            let (sw, sh) = (sn.image.width() as f64, sn.image.height() as f64);
            let tol = 1.0 / sw.min(sh) + 1.0 / cw.min(ch);
            prop_assert!((sw / sh - cw / ch).abs() / (cw / ch) <= tol);
        }
    }
}
