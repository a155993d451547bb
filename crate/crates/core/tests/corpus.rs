use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use schematik::corpus::{
    bbox_stats_from_manifest, read_voc, stratified_split, DatasetManifest, LayoutClass, SplitTag,
};
use schematik::synthgen::{generate_dataset, DatasetPaths, SynthConfig};

fn small_cfg(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        ..SynthConfig::default()
    }
}

/// Pulls every `<tag>value</tag>` out of the text without an XML parser.
fn scan(text: &str, tag: &str) -> Vec<String> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find(&open) {
        let after = &rest[i + open.len()..];
        let j = after.find(&close).expect("closing tag");
        out.push(after[..j].trim().to_string());
        rest = &after[j + close.len()..];
    }
    out
}

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn dataset_generation_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_dataset(&small_cfg(5), 10, a.path()).unwrap();
    generate_dataset(&small_cfg(5), 10, b.path()).unwrap();
    let ta = tree_bytes(a.path());
    assert_eq!(ta.len(), 3 * 10 + 2);
    assert_eq!(ta, tree_bytes(b.path()));
}

#[test]
fn manifest_matches_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&small_cfg(9), 6, dir.path()).unwrap();
    let loaded = DatasetManifest::load(&dir.path().join(DatasetPaths::MANIFEST)).unwrap();
    assert_eq!(m, loaded);
    loaded.verify_histograms(dir.path()).unwrap();
    let ids: Vec<_> = loaded.entries.iter().map(|e| e.page_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn twenty_page_split_keeps_class_shares() {
    for seed in [300, 301, 302] {
        check_twenty_page_split(seed);
    }
}

fn check_twenty_page_split(seed: u64) {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&small_cfg(seed), 20, dir.path()).unwrap();
    let split = stratified_split(&m, 0.8, 1).unwrap();
    assert_eq!(split, stratified_split(&m, 0.8, 1).unwrap());

    // recount classes straight from the XML files
    let mut total: BTreeMap<String, usize> = BTreeMap::new();
    let mut train: BTreeMap<String, usize> = BTreeMap::new();
    let mut page_max: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_train = 0;
    for e in &split.entries {
        assert!(matches!(e.split, SplitTag::Train | SplitTag::Val));
        let xml = fs::read_to_string(dir.path().join(&e.annotation_path)).unwrap();
        let mut here: BTreeMap<String, usize> = BTreeMap::new();
        for name in scan(&xml, "name") {
            *here.entry(name).or_insert(0) += 1;
        }
        if e.split == SplitTag::Train {
            n_train += 1;
        }
        for (c, k) in here {
            *total.entry(c.clone()).or_insert(0) += k;
            if e.split == SplitTag::Train {
                *train.entry(c.clone()).or_insert(0) += k;
            }
            let mx = page_max.entry(c).or_insert(0);
            *mx = (*mx).max(k);
        }
    }
    assert_eq!(n_train, 16);
    assert_eq!(split.entries.len(), 20);
    assert!(total.len() >= 6, "{total:?}");
    for (c, &t) in &total {
        let got = train.get(c).copied().unwrap_or(0) as f64;
        let dev = (got - 0.8 * t as f64).abs();
        assert!(
            dev <= page_max[c] as f64,
            "seed {seed}, {c}: {got} of {t} in train, one page holds at most {}",
            page_max[c]
        );
    }
}

#[test]
fn bbox_stats_match_flat_scan() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&small_cfg(77), 50, dir.path()).unwrap();
    let stats = bbox_stats_from_manifest(&m, dir.path()).unwrap();

    let mut ratios = Vec::new();
    let mut scales = Vec::new();
    for e in fs::read_dir(dir.path().join("annotations")).unwrap() {
        let xml = fs::read_to_string(e.unwrap().path()).unwrap();
        let num =
            |t: &str| -> Vec<f64> { scan(&xml, t).iter().map(|s| s.parse().unwrap()).collect() };
        let (x0, y0, x1, y1) = (num("xmin"), num("ymin"), num("xmax"), num("ymax"));
        for i in 0..x0.len() {
            let (w, h) = (x1[i] - x0[i], y1[i] - y0[i]);
            ratios.push(w / h);
            scales.push((w * h).sqrt());
        }
    }
    assert_eq!(stats.count, ratios.len());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    assert!(close(stats.ratio.min, min(&ratios)));
    assert!(close(stats.ratio.max, max(&ratios)));
    assert!(close(stats.ratio.mean, mean(&ratios)));
    assert!(close(stats.scale.min, min(&scales)));
    assert!(close(stats.scale.max, max(&scales)));
    assert!(close(stats.scale.mean, mean(&scales)));
}

#[test]
fn voc_file_lists_every_element() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&small_cfg(12), 3, dir.path()).unwrap();
    for e in &m.entries {
        let bytes = fs::read(dir.path().join(&e.annotation_path)).unwrap();
        let a = read_voc(&bytes).unwrap();
        assert_eq!(a.page_id, e.page_id);
        assert_eq!(a.class_histogram(), e.class_histogram);
        let names = scan(std::str::from_utf8(&bytes).unwrap(), "name");
        assert_eq!(names.len(), a.elements.len());
        for (n, el) in names.iter().zip(&a.elements) {
            assert_eq!(n.parse::<LayoutClass>().unwrap(), el.label);
        }
    }
}
