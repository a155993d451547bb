//! Stratified train/validation split over per-page class histograms.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetManifest, LayoutClass, SplitTag};
use crate::error::{Error, Result};

/// Tags every entry `train` or `val`.
///
/// The train page count is `round(fraction * n)`. Pages are visited in
/// descending order of their normalised class mass (the share of each class
/// total they carry, summed), so pages holding the largest portion of a
/// class are placed while both sides still have room. Ties are broken by a
/// seeded shuffle. Each page goes to the side whose per-class deficit it
/// reduces the most. A swap pass then trades train/val pairs while that
/// lowers the worst per-class deviation, measured in units of the largest
/// single-page count of the class.
pub fn stratified_split(
    m: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    let n = m.entries.len();
    if n < 2 {
        return Err(Error::DatasetTooSmall(format!(
            "a split needs at least 2 pages, got {n}"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let n_val = n - n_train;

    let mut totals: BTreeMap<LayoutClass, f64> = BTreeMap::new();
    for e in &m.entries {
        for (&c, &k) in &e.class_histogram {
            *totals.entry(c).or_insert(0.0) += k as f64;
        }
    }
    let mass = |i: usize| -> f64 {
        m.entries[i]
            .class_histogram
            .iter()
            .filter(|(_, &k)| k > 0)
            .map(|(c, &k)| k as f64 / totals[c])
            .sum()
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let masses: Vec<f64> = (0..n).map(mass).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]));

    let mut train_counts: BTreeMap<LayoutClass, f64> = BTreeMap::new();
    let mut val_counts: BTreeMap<LayoutClass, f64> = BTreeMap::new();
    let (mut assigned_train, mut assigned_val) = (0usize, 0usize);
    let mut tags = vec![SplitTag::None; n];

    for &i in &order {
        let slots_train = n_train - assigned_train;
        let slots_val = n_val - assigned_val;
        let to_train = if slots_train == 0 {
            false
        } else if slots_val == 0 {
            true
        } else {
            let mut score_train = 0.0;
            let mut score_val = 0.0;
            for (&c, &k) in &m.entries[i].class_histogram {
                let total = totals[&c];
                if total == 0.0 {
                    continue;
                }
                let need_train =
                    train_fraction * total - train_counts.get(&c).copied().unwrap_or(0.0);
                let need_val =
                    (1.0 - train_fraction) * total - val_counts.get(&c).copied().unwrap_or(0.0);
                score_train += k as f64 * need_train / total;
                score_val += k as f64 * need_val / total;
            }
            if score_train != score_val {
                score_train > score_val
            } else {
                // equal need: go where relatively more page slots remain
                slots_train * n_val >= slots_val * n_train
            }
        };
        let (tag, counts) = if to_train {
            assigned_train += 1;
            (SplitTag::Train, &mut train_counts)
        } else {
            assigned_val += 1;
            (SplitTag::Val, &mut val_counts)
        };
        tags[i] = tag;
        for (&c, &k) in &m.entries[i].class_histogram {
            *counts.entry(c).or_insert(0.0) += k as f64;
        }
    }

    refine(m, &mut tags, train_fraction);

    let mut out = m.clone();
    for (e, tag) in out.entries.iter_mut().zip(tags) {
        e.split = tag;
    }
    Ok(out)
}

const REFINE_PASSES: usize = 8;

type Score = (f64, f64);

fn score(dev: &[f64; 8], unit: &[f64; 8]) -> Score {
    let mut worst = 0.0f64;
    let mut sq = 0.0;
    for c in 0..8 {
        let d = dev[c] / unit[c];
        worst = worst.max(d.abs());
        sq += d * d;
    }
    (worst, sq)
}

fn better(a: Score, b: Score) -> bool {
    const EPS: f64 = 1e-9;
    a.0 < b.0 - EPS || (a.0 <= b.0 + EPS && a.1 < b.1 - EPS)
}

fn refine(m: &DatasetManifest, tags: &mut [SplitTag], fraction: f64) {
    let hist: Vec<[f64; 8]> = m
        .entries
        .iter()
        .map(|e| {
            let mut h = [0.0; 8];
            for (&c, &k) in &e.class_histogram {
                h[c.index()] = k as f64;
            }
            h
        })
        .collect();
    let mut unit = [1.0f64; 8];
    let mut dev = [0.0; 8];
    for (h, tag) in hist.iter().zip(tags.iter()) {
        for c in 0..8 {
            unit[c] = unit[c].max(h[c]);
            dev[c] -= fraction * h[c];
            if *tag == SplitTag::Train {
                dev[c] += h[c];
            }
        }
    }
    let mut current = score(&dev, &unit);
    for _ in 0..REFINE_PASSES {
        let mut improved = false;
        for i in 0..tags.len() {
            if tags[i] != SplitTag::Train {
                continue;
            }
            for j in 0..tags.len() {
                if tags[j] != SplitTag::Val {
                    continue;
                }
                let mut next = dev;
                for c in 0..8 {
                    next[c] += hist[j][c] - hist[i][c];
                }
                let s = score(&next, &unit);
                if better(s, current) {
                    tags[i] = SplitTag::Val;
                    tags[j] = SplitTag::Train;
                    dev = next;
                    current = s;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
}
