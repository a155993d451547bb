//! Text and layout evaluation: edit-distance rates, detection matching,
//! classification scores, confusion matrices and confidence summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Detection, Element, LayoutClass};
use crate::error::{Error, Result};

/// Minimum IoU for a prediction to be paired with a ground-truth box.
pub const MATCH_MIN_IOU: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditCounts {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    /// Reference length.
    pub reference_len: usize,
}

impl EditCounts {
    pub fn distance(&self) -> usize {
        self.insertions + self.deletions + self.substitutions
    }

    /// `(I + D + S) / N`.
    pub fn rate(&self) -> Result<f64> {
        if self.reference_len == 0 {
            return Err(Error::EmptyReference);
        }
        Ok(self.distance() as f64 / self.reference_len as f64)
    }
}

/// Insertions, deletions and substitutions of one minimal alignment of
/// `hyp` against `reference`. Among equal-cost alignments a diagonal step
/// is preferred over an insertion, and an insertion over a deletion, when
/// walking back from the end. Uses two rows of memory.
pub fn edit_counts<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditCounts {
    #[derive(Clone, Copy)]
    struct Cell {
        cost: usize,
        i: usize,
        d: usize,
        s: usize,
    }
    let m = hyp.len();
    let mut prev: Vec<Cell> = (0..=m)
        .map(|j| Cell {
            cost: j,
            i: j,
            d: 0,
            s: 0,
        })
        .collect();
    let mut cur = prev.clone();
    for (ri, r) in reference.iter().enumerate() {
        cur[0] = Cell {
            cost: ri + 1,
            i: 0,
            d: ri + 1,
            s: 0,
        };
        for j in 1..=m {
            let sub = r != &hyp[j - 1];
            let diag = prev[j - 1].cost + sub as usize;
            let ins = cur[j - 1].cost + 1;
            let del = prev[j].cost + 1;
            let best = diag.min(ins).min(del);
            cur[j] = if diag == best {
                let p = prev[j - 1];
                Cell {
                    cost: best,
                    s: p.s + sub as usize,
                    ..p
                }
            } else if ins == best {
                let p = cur[j - 1];
                Cell {
                    cost: best,
                    i: p.i + 1,
                    ..p
                }
            } else {
                let p = prev[j];
                Cell {
                    cost: best,
                    d: p.d + 1,
                    ..p
                }
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let c = prev[m];
    EditCounts {
        insertions: c.i,
        deletions: c.d,
        substitutions: c.s,
        reference_len: reference.len(),
    }
}

/// Character error rate over Unicode scalar values.
pub fn cer(reference: &str, hyp: &str) -> Result<f64> {
    let r: Vec<char> = reference.chars().collect();
    let h: Vec<char> = hyp.chars().collect();
    edit_counts(&r, &h).rate()
}

/// Word error rate over whitespace-separated tokens.
pub fn wer(reference: &str, hyp: &str) -> Result<f64> {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hyp.split_whitespace().collect();
    edit_counts(&r, &h).rate()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub gt: usize,
    pub pred: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<Pair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// One-to-one greedy matching: candidate pairs with IoU at least
/// [`MATCH_MIN_IOU`] are taken in descending IoU order while both sides
/// are still free.
pub fn match_detections(gt: &[Element], preds: &[Detection]) -> Matching {
    let mut cand: Vec<Pair> = Vec::new();
    for (g, e) in gt.iter().enumerate() {
        for (p, d) in preds.iter().enumerate() {
            let iou = e.bbox.iou(&d.bbox);
            if iou >= MATCH_MIN_IOU {
                cand.push(Pair {
                    gt: g,
                    pred: p,
                    iou,
                });
            }
        }
    }
    cand.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.gt.cmp(&b.gt))
            .then(a.pred.cmp(&b.pred))
    });
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut pairs = Vec::new();
    for c in cand {
        if !gt_used[c.gt] && !pred_used[c.pred] {
            gt_used[c.gt] = true;
            pred_used[c.pred] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.gt);
    Matching {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..preds.len()).filter(|&i| !pred_used[i]).collect(),
    }
}

/// Mean IoU over ground-truth boxes; unmatched boxes contribute 0.
pub fn bbox_accuracy(m: &Matching, n_gt: usize) -> Result<f64> {
    if n_gt == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(m.pairs.iter().map(|p| p.iou).sum::<f64>() / n_gt as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: BTreeMap<LayoutClass, ClassCounts>,
}

/// Decisions are matched pairs, unmatched predictions and unmatched
/// ground truth. Accuracy is correct matched labels over all decisions;
/// precision, recall and F1 are macro averages over the classes that occur
/// in either ground truth or predictions.
pub fn classification_metrics(
    gt: &[Element],
    preds: &[Detection],
    m: &Matching,
) -> ClassificationMetrics {
    let mut per_class: BTreeMap<LayoutClass, ClassCounts> = BTreeMap::new();
    let mut correct = 0;
    for p in &m.pairs {
        let (g, d) = (gt[p.gt].label, preds[p.pred].label);
        if g == d {
            correct += 1;
            per_class.entry(g).or_default().tp += 1;
        } else {
            per_class.entry(d).or_default().fp += 1;
            per_class.entry(g).or_default().fn_ += 1;
        }
    }
    for &i in &m.unmatched_pred {
        per_class.entry(preds[i].label).or_default().fp += 1;
    }
    for &i in &m.unmatched_gt {
        per_class.entry(gt[i].label).or_default().fn_ += 1;
    }
    let decisions = m.pairs.len() + m.unmatched_pred.len() + m.unmatched_gt.len();
    for c in per_class.values_mut() {
        c.tn = decisions - c.tp - c.fp - c.fn_;
    }
    let k = per_class.len().max(1) as f64;
    ClassificationMetrics {
        accuracy: ratio(correct, decisions),
        precision: per_class.values().map(ClassCounts::precision).sum::<f64>() / k,
        recall: per_class.values().map(ClassCounts::recall).sum::<f64>() / k,
        f1: per_class.values().map(ClassCounts::f1).sum::<f64>() / k,
        per_class,
    }
}

/// Counts over matched pairs; rows are ground truth, columns predictions,
/// both indexed by [`LayoutClass::index`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 8]; 8],
}

impl ConfusionMatrix {
    pub fn add(&mut self, m: &Matching, gt: &[Element], preds: &[Detection]) {
        for p in &m.pairs {
            self.counts[gt[p.gt].label.index()][preds[p.pred].label.index()] += 1;
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn row_present(&self, class: LayoutClass) -> bool {
        self.counts[class.index()].iter().any(|&c| c > 0)
    }

    /// Row-normalized ratios; classes without ground truth give an
    /// all-zero row.
    pub fn normalized(&self) -> [[f64; 8]; 8] {
        let mut out = [[0.0; 8]; 8];
        for (r, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (c, &v) in row.iter().enumerate() {
                    out[r][c] = v as f64 / total as f64;
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("ground_truth");
        for c in LayoutClass::ALL {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        let norm = self.normalized();
        for c in LayoutClass::ALL {
            let _ = write!(s, "{c}");
            for v in norm[c.index()] {
                let _ = write!(s, ",{v:.4}");
            }
            s.push('\n');
        }
        s
    }
}

/// Mean confidences for one predicted class. Correct means matched with
/// the ground-truth label; unmatched predictions count as incorrect.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfidenceStats {
    pub any: Option<f64>,
    pub correct: Option<f64>,
    pub incorrect: Option<f64>,
    pub n_any: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConfidenceAccumulator {
    sums: BTreeMap<LayoutClass, [(f64, usize); 3]>,
}

impl ConfidenceAccumulator {
    pub fn add(&mut self, m: &Matching, gt: &[Element], preds: &[Detection]) {
        let mut is_correct = vec![false; preds.len()];
        for p in &m.pairs {
            is_correct[p.pred] = gt[p.gt].label == preds[p.pred].label;
        }
        for (i, d) in preds.iter().enumerate() {
            let e = self.sums.entry(d.label).or_insert([(0.0, 0); 3]);
            let slot = if is_correct[i] { 1 } else { 2 };
            for k in [0, slot] {
                e[k].0 += d.confidence;
                e[k].1 += 1;
            }
        }
    }

    pub fn finish(&self) -> BTreeMap<LayoutClass, ConfidenceStats> {
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        self.sums
            .iter()
            .map(|(&c, v)| {
                (
                    c,
                    ConfidenceStats {
                        any: mean(v[0]),
                        correct: mean(v[1]),
                        incorrect: mean(v[2]),
                        n_any: v[0].1,
                        n_correct: v[1].1,
                        n_incorrect: v[2].1,
                    },
                )
            })
            .collect()
    }
}

pub fn confidence_stats(
    gt: &[Element],
    preds: &[Detection],
    m: &Matching,
) -> BTreeMap<LayoutClass, ConfidenceStats> {
    let mut acc = ConfidenceAccumulator::default();
    acc.add(m, gt, preds);
    acc.finish()
}

/// Relative improvement of `new` over `old` in percent.
pub fn improvement(old: f64, new: f64) -> Result<f64> {
    if old == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((old - new) / old * 100.0)
}

/// Layout scores of one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageScores {
    pub page_id: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub bbox_accuracy: f64,
    pub n_gt: usize,
    pub n_pred: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wer: Option<f64>,
}

/// Scores one page and the matching they were computed from.
pub fn score_page(
    page_id: &str,
    gt: &[Element],
    preds: &[Detection],
) -> Result<(PageScores, Matching)> {
    let m = match_detections(gt, preds);
    let c = classification_metrics(gt, preds, &m);
    let scores = PageScores {
        page_id: page_id.to_string(),
        accuracy: c.accuracy,
        precision: c.precision,
        recall: c.recall,
        f1: c.f1,
        bbox_accuracy: bbox_accuracy(&m, gt.len())?,
        n_gt: gt.len(),
        n_pred: preds.len(),
        cer: None,
        wer: None,
    };
    Ok((scores, m))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub bbox_accuracy: f64,
    pub cer: Option<f64>,
    pub wer: Option<f64>,
}

/// Unweighted mean over pages. Text rates average over the pages that
/// have them.
pub fn summarize(pages: &[PageScores]) -> Summary {
    let n = pages.len().max(1) as f64;
    let mean = |f: fn(&PageScores) -> f64| pages.iter().map(f).sum::<f64>() / n;
    let opt_mean = |f: fn(&PageScores) -> Option<f64>| {
        let v: Vec<f64> = pages.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Summary {
        accuracy: mean(|p| p.accuracy),
        precision: mean(|p| p.precision),
        recall: mean(|p| p.recall),
        f1: mean(|p| p.f1),
        bbox_accuracy: mean(|p| p.bbox_accuracy),
        cer: opt_mean(|p| p.cer),
        wer: opt_mean(|p| p.wer),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pages: Vec<PageScores>,
    pub summary: Summary,
    pub confusion: ConfusionMatrix,
    pub confidence: BTreeMap<LayoutClass, ConfidenceStats>,
}

/// Accumulates per-page scores and pooled matrices.
#[derive(Debug, Clone, Default)]
pub struct Evaluator {
    pages: Vec<PageScores>,
    confusion: ConfusionMatrix,
    confidence: ConfidenceAccumulator,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_page(
        &mut self,
        page_id: &str,
        gt: &[Element],
        preds: &[Detection],
    ) -> Result<&mut PageScores> {
        let (scores, m) = score_page(page_id, gt, preds)?;
        self.confusion.add(&m, gt, preds);
        self.confidence.add(&m, gt, preds);
        self.pages.push(scores);
        Ok(self.pages.last_mut().expect("just pushed"))
    }

    pub fn finish(self) -> EvalReport {
        EvalReport {
            summary: summarize(&self.pages),
            confusion: self.confusion,
            confidence: self.confidence.finish(),
            pages: self.pages,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    pub fn pages_csv(&self) -> String {
        let mut s = String::from(
            "page_id,n_gt,n_pred,accuracy,precision,recall,f1,bbox_accuracy,cer,wer\n",
        );
        for p in &self.pages {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
                p.page_id,
                p.n_gt,
                p.n_pred,
                p.accuracy,
                p.precision,
                p.recall,
                p.f1,
                p.bbox_accuracy,
                opt(p.cer),
                opt(p.wer)
            );
        }
        s
    }

    pub fn confidence_csv(&self) -> String {
        let mut s = String::from("class,any,correct,incorrect,n_any,n_correct,n_incorrect\n");
        for (c, v) in &self.confidence {
            let _ = writeln!(
                s,
                "{c},{},{},{},{},{},{}",
                opt(v.any),
                opt(v.correct),
                opt(v.incorrect),
                v.n_any,
                v.n_correct,
                v.n_incorrect
            );
        }
        s
    }

    /// Writes `report.json`, `pages.csv`, `confusion.csv` and
    /// `confidence.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("report.json", serde_json::to_string_pretty(self)?),
            ("pages.csv", self.pages_csv()),
            ("confusion.csv", self.confusion.to_csv()),
            ("confidence.csv", self.confidence_csv()),
        ];
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use proptest::prelude::*;

    fn el(b: [f64; 4], label: LayoutClass) -> Element {
        Element {
            bbox: BoundingBox::from_array(b).unwrap(),
            label,
        }
    }

    fn det(b: [f64; 4], label: LayoutClass, c: f64) -> Detection {
        Detection::new(BoundingBox::from_array(b).unwrap(), label, c).unwrap()
    }

    /// Full-table Levenshtein with backtrace.
    fn table_counts<T: PartialEq>(r: &[T], h: &[T]) -> (usize, usize, usize) {
        let (n, m) = (r.len(), h.len());
        let mut d = vec![vec![0usize; m + 1]; n + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, v) in d[0].iter_mut().enumerate() {
            *v = j;
        }
        for i in 1..=n {
            for j in 1..=m {
                let c = (r[i - 1] != h[j - 1]) as usize;
                d[i][j] = (d[i - 1][j - 1] + c)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j] + 1);
            }
        }
        let (mut i, mut j) = (n, m);
        let (mut ins, mut del, mut sub) = (0, 0, 0);
        while i > 0 || j > 0 {
            if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (r[i - 1] != h[j - 1]) as usize {
                sub += (r[i - 1] != h[j - 1]) as usize;
                i -= 1;
                j -= 1;
            } else if j > 0 && d[i][j] == d[i][j - 1] + 1 {
                ins += 1;
                j -= 1;
            } else {
                del += 1;
                i -= 1;
            }
        }
        (ins, del, sub)
    }

    #[test]
    fn textbook_distances() {
        let c = edit_counts(
            &"kitten".chars().collect::<Vec<_>>(),
            &"sitting".chars().collect::<Vec<_>>(),
        );
        assert_eq!(c.distance(), 3);
        assert_eq!((c.substitutions, c.insertions, c.deletions), (2, 1, 0));
        assert!((cer("kitten", "sitting").unwrap() - 0.5).abs() < 1e-12);
        assert!((wer("a b c d", "a x c").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cer("abc", "abc").unwrap(), 0.0);
        assert!(matches!(cer("", "x"), Err(Error::EmptyReference)));
    }

    #[test]
    fn unicode_counts_scalars() {
        assert!((cer("a", "abc").unwrap() - 2.0).abs() < 1e-12);
        assert!((wer("der alte Mann", "der alte Haus").unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((cer("Müller", "Muller").unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_matching_prefers_higher_iou() {
        let gt = vec![
            el([0., 0., 10., 10.], LayoutClass::Paragraph),
            el([0., 0., 10., 12.], LayoutClass::H3),
        ];
        let preds = vec![det([0., 0., 10., 12.], LayoutClass::H3, 0.9)];
        let m = match_detections(&gt, &preds);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].gt, 1);
        assert_eq!(m.unmatched_gt, vec![0]);
    }

    #[test]
    fn low_overlap_is_not_matched() {
        let gt = vec![el([0., 0., 10., 10.], LayoutClass::Paragraph)];
        let preds = vec![det([8., 0., 18., 10.], LayoutClass::Paragraph, 0.9)];
        let m = match_detections(&gt, &preds);
        assert!(m.pairs.is_empty());
        assert_eq!(bbox_accuracy(&m, 1).unwrap(), 0.0);
        assert!(matches!(bbox_accuracy(&m, 0), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn classification_by_hand() {
        let p = LayoutClass::Paragraph;
        let h = LayoutClass::H3;
        let gt = vec![
            el([0., 0., 10., 10.], p),
            el([0., 20., 10., 30.], p),
            el([0., 40., 10., 50.], h),
        ];
        let preds = vec![
            det([0., 0., 10., 10.], p, 0.9),
            det([0., 20., 10., 30.], h, 0.6),
            det([50., 50., 60., 60.], h, 0.3),
        ];
        let m = match_detections(&gt, &preds);
        let c = classification_metrics(&gt, &preds, &m);
        // decisions: 2 pairs + 1 unmatched pred + 1 unmatched gt
        assert!((c.accuracy - 0.25).abs() < 1e-12);
        // Paragraph tp 1 fn 1; H3 fp 2 fn 1
        assert_eq!(
            c.per_class[&p],
            ClassCounts {
                tp: 1,
                fp: 0,
                tn: 2,
                fn_: 1
            }
        );
        assert_eq!(
            c.per_class[&h],
            ClassCounts {
                tp: 0,
                fp: 2,
                tn: 1,
                fn_: 1
            }
        );
        assert!((c.precision - 0.5).abs() < 1e-12);
        assert!((c.recall - 0.25).abs() < 1e-12);
        assert!((c.f1 - (2.0 / 3.0) / 2.0).abs() < 1e-12);

        let s = confidence_stats(&gt, &preds, &m);
        assert_eq!(s[&p].correct, Some(0.9));
        assert_eq!(s[&p].incorrect, None);
        assert!((s[&h].any.unwrap() - 0.45).abs() < 1e-12);
        assert!((s[&h].incorrect.unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn confusion_rows_normalize() {
        let p = LayoutClass::Paragraph;
        let gt = vec![
            el([0., 0., 10., 10.], p),
            el([0., 20., 10., 30.], p),
            el([0., 40., 10., 50.], p),
            el([0., 60., 10., 70.], p),
        ];
        let preds = vec![
            det([0., 0., 10., 10.], p, 1.0),
            det([0., 20., 10., 30.], p, 1.0),
            det([0., 40., 10., 50.], p, 1.0),
            det([0., 60., 10., 70.], LayoutClass::H4, 1.0),
        ];
        let mut cm = ConfusionMatrix::default();
        cm.add(&match_detections(&gt, &preds), &gt, &preds);
        let n = cm.normalized();
        assert_eq!(n[p.index()][p.index()], 0.75);
        assert_eq!(n[p.index()][LayoutClass::H4.index()], 0.25);
        assert!(!cm.row_present(LayoutClass::H1));
        assert!(n[LayoutClass::H1.index()].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn improvement_percent() {
        assert!((improvement(0.2, 0.1).unwrap() - 50.0).abs() < 1e-12);
        assert!(matches!(improvement(0.0, 0.1), Err(Error::ZeroBaseline)));
    }

    proptest! {
        #[test]
        fn counts_match_full_table(r in "[abc ]{0,12}", h in "[abc ]{0,12}") {
            let rc: Vec<char> = r.chars().collect();
            let hc: Vec<char> = h.chars().collect();
            let c = edit_counts(&rc, &hc);
            prop_assert_eq!((c.insertions, c.deletions, c.substitutions), table_counts(&rc, &hc));
        }

        #[test]
        fn distance_is_symmetric(r in "[abc]{0,12}", h in "[abc]{0,12}") {
            let rc: Vec<char> = r.chars().collect();
            let hc: Vec<char> = h.chars().collect();
            let (a, b) = (edit_counts(&rc, &hc), edit_counts(&hc, &rc));
            prop_assert_eq!(a.distance(), b.distance());
            prop_assert!(a.deletions + a.substitutions <= a.reference_len);
            prop_assert_eq!(edit_counts(&rc, &rc).distance(), 0);
        }

        #[test]
        fn triangle_inequality(a in "[ab]{0,10}", b in "[ab]{0,10}", c in "[ab]{0,10}") {
            let v = |s: &str| s.chars().collect::<Vec<_>>();
            let d = |x: &str, y: &str| edit_counts(&v(x), &v(y)).distance();
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        }

        #[test]
        fn cer_bounds(r in "[a-d]{1,20}", h in "[a-d]{0,20}") {
            let v = cer(&r, &h).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(v <= (r.len().max(h.len()) as f64) / r.len() as f64 + 1e-12);
            prop_assert_eq!(cer(&r, &r).unwrap(), 0.0);
        }

        #[test]
        fn matching_is_one_to_one(
            g in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0, 1.0f64..40.0, 1.0f64..40.0), 0..12),
            p in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0, 1.0f64..40.0, 1.0f64..40.0), 0..12),
        ) {
            let gt: Vec<Element> = g.iter().map(|&(x, y, w, h)| el([x, y, x + w, y + h], LayoutClass::Paragraph)).collect();
            let preds: Vec<Detection> = p.iter().map(|&(x, y, w, h)| det([x, y, x + w, y + h], LayoutClass::Paragraph, 0.5)).collect();
            let m = match_detections(&gt, &preds);
            prop_assert_eq!(m.pairs.len() + m.unmatched_gt.len(), gt.len());
            prop_assert_eq!(m.pairs.len() + m.unmatched_pred.len(), preds.len());
            for pair in &m.pairs {
                prop_assert!(pair.iou >= MATCH_MIN_IOU);
            }
            if !gt.is_empty() {
                let a = bbox_accuracy(&m, gt.len()).unwrap();
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
