//! Confidence filtering and overlap merging of raw detections.

use std::cmp::Ordering;

use crate::corpus::{Detection, LayoutClass};
use crate::geometry::union_box;

pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.1;
pub const DEFAULT_MERGE_IOU: f64 = 0.3;
pub const MAX_MERGE_PASSES: usize = 16;

/// Keeps detections with `confidence >= threshold`, in input order.
pub fn filter_confidence(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.confidence >= threshold)
        .copied()
        .collect()
}

/// Visit order: confidence descending, then `x_min`, `y_min`, then the
/// remaining fields so that equal keys never depend on input order.
fn visit_order(a: &Detection, b: &Detection) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.bbox.x_min.total_cmp(&b.bbox.x_min))
        .then(a.bbox.y_min.total_cmp(&b.bbox.y_min))
        .then(a.label.cmp(&b.label))
        .then(a.bbox.x_max.total_cmp(&b.bbox.x_max))
        .then(a.bbox.y_max.total_cmp(&b.bbox.y_max))
}

fn one_pass(dets: &[Detection], iou_threshold: f64) -> (Vec<Detection>, bool) {
    let mut consumed = vec![false; dets.len()];
    let mut out = Vec::with_capacity(dets.len());
    let mut merged_any = false;
    for i in 0..dets.len() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let lead = dets[i];
        let mut group = vec![lead.bbox];
        for j in i + 1..dets.len() {
            if !consumed[j] && lead.bbox.iou(&dets[j].bbox) > iou_threshold {
                consumed[j] = true;
                group.push(dets[j].bbox);
            }
        }
        if group.len() > 1 {
            merged_any = true;
            out.push(Detection {
                bbox: union_box(&group).expect("nonempty group"),
                ..lead
            });
        } else {
            out.push(lead);
        }
    }
    (out, merged_any)
}

/// Merges non-Curly detections whose IoU with a higher-ranked detection
/// exceeds `iou_threshold` into the union box, keeping the leader's label
/// and confidence. Passes repeat until nothing merges. Curly detections are
/// passed through. Output is sorted in visit order.
pub fn merge_overlapping(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let (mut curly, mut rest): (Vec<Detection>, Vec<Detection>) =
        dets.iter().partition(|d| d.label == LayoutClass::Curly);
    rest.sort_by(visit_order);
    for _ in 0..MAX_MERGE_PASSES {
        let (next, merged) = one_pass(&rest, iou_threshold);
        rest = next;
        rest.sort_by(visit_order);
        if !merged {
            break;
        }
    }
    rest.append(&mut curly);
    rest.sort_by(visit_order);
    rest
}

/// Filter followed by merge with the default thresholds.
pub fn postprocess(dets: &[Detection]) -> Vec<Detection> {
    merge_overlapping(
        &filter_confidence(dets, DEFAULT_MIN_CONFIDENCE),
        DEFAULT_MERGE_IOU,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn det(b: [f64; 4], label: LayoutClass, c: f64) -> Detection {
        Detection::new(BoundingBox::from_array(b).unwrap(), label, c).unwrap()
    }

    #[test]
    fn confidence_filter_boundary() {
        let p = LayoutClass::Paragraph;
        assert!(filter_confidence(&[det([0., 0., 1., 1.], p, 0.05)], 0.1).is_empty());
        assert_eq!(
            filter_confidence(&[det([0., 0., 1., 1.], p, 0.1)], 0.1).len(),
            1
        );
        assert!(filter_confidence(&[], 0.1).is_empty());
    }

    #[test]
    fn overlapping_pair_merges_to_leader() {
        let p = LayoutClass::Paragraph;
        // intersection 100, union 200
        let a = det([0., 0., 20., 10.], p, 0.9);
        let b = det([0., 0., 20., 5.], LayoutClass::H3, 0.7);
        assert!((a.bbox.iou(&b.bbox) - 0.5).abs() < 1e-12);
        let m = merge_overlapping(&[b, a], 0.3);
        assert_eq!(m, vec![det([0., 0., 20., 10.], p, 0.9)]);
    }

    #[test]
    fn weak_overlap_does_not_merge() {
        let p = LayoutClass::Paragraph;
        let a = det([0., 0., 10., 10.], p, 0.9);
        let b = det([0., 6.6666, 10., 16.6666], p, 0.8);
        assert!(a.bbox.iou(&b.bbox) < 0.3);
        assert_eq!(merge_overlapping(&[a, b], 0.3).len(), 2);
    }

    #[test]
    fn exact_threshold_does_not_merge() {
        // intersection 6x10 = 60, union 130 + 130 - 60 = 200, IoU = 0.3 exactly
        let p = LayoutClass::Paragraph;
        let a = det([0., 0., 13., 10.], p, 0.9);
        let b = det([7., 0., 20., 10.], p, 0.8);
        assert_eq!(a.bbox.iou(&b.bbox), 0.3);
        assert_eq!(merge_overlapping(&[a, b], 0.3).len(), 2);
    }

    #[test]
    fn curly_is_never_merged() {
        let c = det([0., 0., 100., 100.], LayoutClass::Curly, 0.98);
        let p = det([0., 0., 100., 80.], LayoutClass::Paragraph, 0.6);
        let mut out = merge_overlapping(&[p, c], 0.3);
        out.sort_by_key(|d| d.label);
        assert_eq!(out, vec![p, c]);
    }

    #[test]
    fn chains_merge_across_passes() {
        let p = LayoutClass::Paragraph;
        let a = det([0., 0., 10., 10.], p, 0.9);
        let b = det([4., 0., 14., 10.], p, 0.8);
        // c only clears the threshold against the first merged box
        let c = det([7., 0., 17., 10.], p, 0.7);
        assert!(a.bbox.iou(&c.bbox) < 0.3);
        let m = merge_overlapping(&[a, b, c], 0.3);
        assert_eq!(m, vec![det([0., 0., 17., 10.], p, 0.9)]);
    }
}
