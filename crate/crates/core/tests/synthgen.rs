use std::collections::BTreeMap;

use schematik::corpus::LayoutClass;
use schematik::raster::PageImage;
use schematik::snippets::reading_order;
use schematik::synthgen::{generate_page, top_level_histogram, Generator, PageLayout, SynthConfig};

fn layouts(cfg: &SynthConfig, seeds: std::ops::Range<u64>) -> Vec<PageLayout> {
    let g = Generator::new(cfg.clone()).unwrap();
    seeds
        .map(|s| g.layout(&format!("p{s}"), s).unwrap())
        .collect()
}

fn column_spans(cfg: &SynthConfig) -> Vec<(f64, f64)> {
    let cw = cfg.column_width() as f64;
    (0..cfg.column_count)
        .map(|k| {
            let x0 = cfg.margin as f64 + k as f64 * (cw + cfg.column_gap as f64);
            (x0, x0 + cw)
        })
        .collect()
}

fn dark_inside(img: &PageImage, b: &schematik::geometry::BoundingBox) -> (usize, usize) {
    let (x0, y0, x1, y1) = b.pixel_rect(img.width(), img.height());
    let mut total = 0;
    let mut inside = 0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) < 128 {
                total += 1;
                if x >= x0 && x < x1 && y >= y0 && y < y1 {
                    inside += 1;
                }
            }
        }
    }
    (inside, total)
}

#[test]
fn seed_seven_class_geometry() {
    let cfg = SynthConfig::default();
    let page = &layouts(&cfg, 7..8)[0];
    let text_w = cfg.text_width() as f64;
    let col_w = cfg.column_width() as f64;
    assert!(page
        .elements
        .iter()
        .any(|e| e.label == LayoutClass::Paragraph));
    for e in &page.elements {
        match e.label {
            LayoutClass::H1 => assert!(e.bbox.width() > 0.8 * text_w, "{:?}", e.bbox),
            LayoutClass::Paragraph => assert!(e.bbox.width() < col_w, "{:?}", e.bbox),
            _ => {}
        }
    }
}

#[test]
fn placement_rules_hold() {
    for cols in [1, 3, 4] {
        let cfg = SynthConfig {
            column_count: cols,
            ..SynthConfig::default()
        };
        let spans = column_spans(&cfg);
        let text_w = cfg.text_width() as f64;
        for page in layouts(&cfg, 0..12) {
            assert!(!page.elements.is_empty());
            for e in &page.elements {
                assert!(e.bbox.within_page(page.width as f64, page.height as f64));
                if e.label.is_full_width() {
                    assert!(e.bbox.width() > 0.8 * text_w, "{} {:?}", e.label, e.bbox);
                    continue;
                }
                if cols > 1 {
                    assert!(e.bbox.width() < 0.8 * text_w);
                }
                assert!(
                    spans
                        .iter()
                        .any(|&(a, b)| e.bbox.x_min >= a && e.bbox.x_max <= b),
                    "{} {:?} outside every column",
                    e.label,
                    e.bbox
                );
            }
        }
    }
}

#[test]
fn indentation_and_centering() {
    let cfg = SynthConfig::default();
    let spans = column_spans(&cfg);
    let mut checked = BTreeMap::new();
    for page in layouts(&cfg, 0..10) {
        for e in &page.elements {
            match e.label {
                LayoutClass::Paragraph | LayoutClass::BigParagraph => {
                    assert!(e.lines.len() >= 2);
                    let first = e.lines[0].x;
                    for l in &e.lines[1..] {
                        if e.label == LayoutClass::Paragraph {
                            assert!(l.x > first, "hanging indent");
                        } else {
                            assert!(l.x < first, "inverted indent");
                        }
                    }
                }
                LayoutClass::H2 | LayoutClass::H3 | LayoutClass::H4 if e.parent.is_none() => {
                    let (a, b) = spans
                        .iter()
                        .copied()
                        .find(|&(a, b)| e.bbox.x_min >= a && e.bbox.x_max <= b)
                        .unwrap();
                    let centre = (e.bbox.x_min + e.bbox.x_max) / 2.0;
                    assert!(
                        (centre - (a + b) / 2.0).abs() <= 8.0,
                        "{} {:?} not centred",
                        e.label,
                        e.bbox
                    );
                }
                _ => continue,
            }
            *checked.entry(e.label).or_insert(0) += 1;
        }
    }
    assert!(checked.len() >= 4, "{checked:?}");
}

#[test]
fn curly_structure() {
    let cfg = SynthConfig::default();
    let mut seen = 0;
    for page in layouts(&cfg, 0..20) {
        for (i, c) in page.elements.iter().enumerate() {
            if c.label != LayoutClass::Curly {
                continue;
            }
            seen += 1;
            let members: Vec<_> = page
                .elements
                .iter()
                .filter(|e| e.parent == Some(i))
                .collect();
            let paragraphs: Vec<_> = members
                .iter()
                .filter(|e| e.label == LayoutClass::Paragraph)
                .collect();
            let h3: Vec<_> = members
                .iter()
                .filter(|e| e.label == LayoutClass::H3)
                .collect();
            assert!(paragraphs.len() >= 2);
            assert_eq!(h3.len(), 1);
            assert_eq!(paragraphs.len() + h3.len(), members.len());
            for p in &paragraphs {
                assert!(
                    h3[0].bbox.x_min > p.bbox.x_max,
                    "keyword must sit right of the members"
                );
            }
            for m in &members {
                assert!(c.bbox.contains(&m.bbox));
            }
        }
    }
    assert!(seen > 5);
}

#[test]
fn ink_is_contained_in_boxes() {
    let cfg = SynthConfig::default();
    for page in layouts(&cfg, 3..5) {
        for (i, e) in page.elements.iter().enumerate() {
            let img = page.render_isolated(i);
            let (inside, total) = dark_inside(&img, &e.bbox);
            assert!(total > 0);
            assert!(
                inside as f64 >= 0.99 * total as f64,
                "{} {inside}/{total}",
                e.label
            );
        }
    }
}

#[test]
fn boxes_are_tight_around_ink() {
    // hull plus one pixel: each border row or column of the box touches ink
    // exactly one pixel in
    let cfg = SynthConfig::default();
    let page = &layouts(&cfg, 11..12)[0];
    let i = page
        .elements
        .iter()
        .position(|e| e.label == LayoutClass::Paragraph)
        .unwrap();
    let img = page.render_isolated(i);
    let (x0, y0, x1, y1) = page.elements[i].bbox.pixel_rect(img.width(), img.height());
    let dark_col = |x: u32| (y0..y1).any(|y| img.get(x, y) < 128);
    let dark_row = |y: u32| (x0..x1).any(|x| img.get(x, y) < 128);
    assert!(!dark_col(x0) && dark_col(x0 + 1));
    assert!(!dark_col(x1 - 1) && dark_col(x1 - 2));
    assert!(!dark_row(y0) && dark_row(y0 + 1));
    assert!(!dark_row(y1 - 1) && dark_row(y1 - 2));
}

#[test]
fn sibling_boxes_barely_overlap() {
    let cfg = SynthConfig::default();
    for page in layouts(&cfg, 0..15) {
        let plain: Vec<_> = page
            .elements
            .iter()
            .filter(|e| e.label != LayoutClass::Curly)
            .collect();
        for (i, a) in plain.iter().enumerate() {
            for b in &plain[i + 1..] {
                assert!(a.bbox.iou(&b.bbox) < 0.05, "{:?} {:?}", a.bbox, b.bbox);
                assert!(!a.bbox.contains(&b.bbox) && !b.bbox.contains(&a.bbox));
            }
        }
    }
}

#[test]
fn emission_order_is_reading_order() {
    for cols in [1, 3, 4] {
        let cfg = SynthConfig {
            column_count: cols,
            ..SynthConfig::default()
        };
        for page in layouts(&cfg, 100..120) {
            let els: Vec<_> = page.elements.iter().map(|e| (e.bbox, e.label)).collect();
            let order = reading_order(&els, page.width as f64);
            assert_eq!(
                order,
                (0..els.len()).collect::<Vec<_>>(),
                "{} columns, {}",
                cols,
                page.page_id
            );
        }
    }
}

#[test]
fn same_seed_same_page() {
    let cfg = SynthConfig {
        seed: 42,
        ..SynthConfig::default()
    };
    let (a_img, a_ann) = generate_page(&cfg).unwrap();
    let (b_img, b_ann) = generate_page(&cfg).unwrap();
    assert_eq!(a_img.encode_png().unwrap(), b_img.encode_png().unwrap());
    assert_eq!(a_ann, b_ann);
    let (c_img, _) = generate_page(&SynthConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a_img, c_img);
}

#[test]
fn only_h1_gives_stacked_headings() {
    let cfg = SynthConfig::default().only(LayoutClass::H1);
    let text_w = cfg.text_width() as f64;
    for page in layouts(&cfg, 0..3) {
        assert!(page.elements.len() > 3);
        let mut last_bottom = 0.0;
        for e in &page.elements {
            assert_eq!(e.label, LayoutClass::H1);
            assert!(e.bbox.width() > 0.8 * text_w);
            assert!(e.bbox.y_min >= last_bottom);
            last_bottom = e.bbox.y_max;
        }
    }
}

#[test]
fn class_mix_follows_weights() {
    let cfg = SynthConfig::default();
    let mut counts: BTreeMap<LayoutClass, usize> = BTreeMap::new();
    for page in layouts(&cfg, 0..200) {
        for (c, k) in top_level_histogram(&page.transcript()) {
            *counts.entry(c).or_insert(0) += k;
        }
    }
    let total: usize = counts.values().sum();
    let wsum: f64 = LayoutClass::ALL.iter().map(|&c| cfg.weight(c)).sum();
    for c in LayoutClass::ALL {
        let share = counts.get(&c).copied().unwrap_or(0) as f64 / total as f64;
        let want = cfg.weight(c) / wsum;
        assert!(
            (share - want).abs() <= 0.1 * want,
            "{c}: {share:.4} vs {want:.4}"
        );
    }
}

#[test]
fn transcript_lines_spell_the_element_text() {
    let cfg = SynthConfig::default();
    for page in layouts(&cfg, 0..5) {
        for e in page
            .elements
            .iter()
            .filter(|e| e.label != LayoutClass::Curly)
        {
            let joined = e
                .lines
                .iter()
                .map(|l| l.text.as_str())
                .collect::<Vec<_>>()
                .join("");
            let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            assert_eq!(squash(&joined), squash(&e.text));
        }
    }
}
