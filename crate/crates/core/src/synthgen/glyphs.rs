//! Procedural monochrome glyph atlas.
//!
//! Glyph shapes are connected stroke paths on a 3x3 anchor grid, derived
//! deterministically from the code point, so every character renders as a
//! single connected blob spanning the full cap height. Shapes are unique
//! within one atlas.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FontStyle {
    Regular,
    Bold,
    Italic,
}

impl FontStyle {
    pub const ALL: [FontStyle; 3] = [FontStyle::Regular, FontStyle::Bold, FontStyle::Italic];
}

/// Vertical metrics for one font size, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FontMetrics {
    pub size: u32,
    /// Height above the baseline of letters and digits.
    pub cap: u32,
    /// Depth below the baseline reached by descending punctuation.
    pub descent: u32,
    pub space_advance: u32,
}

impl FontMetrics {
    pub fn for_size(size: u32) -> FontMetrics {
        let s = size as f64;
        FontMetrics {
            size,
            cap: (0.72 * s).round().max(3.0) as u32,
            descent: (0.2 * s).round().max(1.0) as u32,
            space_advance: (0.3 * s).round().max(2.0) as u32,
        }
    }

    /// Baseline-to-baseline distance at the given line spacing factor.
    pub fn pitch(&self, line_spacing: f64) -> u32 {
        (self.size as f64 * line_spacing).round() as u32
    }
}

/// A glyph bitmap. Row 0 is `cap` pixels above the baseline; the bitmap is
/// `cap + descent` rows tall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glyph {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
    pub advance: u32,
}

impl Glyph {
    pub fn ink(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    /// Tight ink extents `(x0, y0, x1, y1)`, max exclusive.
    pub fn ink_bounds(&self) -> Option<(u32, u32, u32, u32)> {
        let mut b: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.ink(x, y) {
                    b = Some(match b {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => {
                            (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1))
                        }
                    });
                }
            }
        }
        b
    }
}

/// Decoration symbols mapped onto private-use code points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMap {
    map: BTreeMap<String, char>,
}

impl SymbolMap {
    pub fn new(map: BTreeMap<String, char>) -> Result<Self, String> {
        let targets: BTreeSet<char> = map.values().copied().collect();
        if targets.len() != map.len() {
            return Err("symbol map is not injective".into());
        }
        Ok(SymbolMap { map })
    }

    pub fn get(&self, id: &str) -> Option<char> {
        self.map.get(id).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        self.map.values().copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl Default for SymbolMap {
    /// Placeholder inventory of order and decoration symbols.
    fn default() -> Self {
        let ids = [
            "cross", "star", "crown", "laurel", "sword", "medal", "ring", "shield", "oak", "anchor",
        ];
        let map = ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                (
                    id.to_string(),
                    char::from_u32(0xE000 + i as u32).expect("private-use code point"),
                )
            })
            .collect();
        SymbolMap { map }
    }
}

type Point = (f64, f64);

/// Stroke skeleton in unit coordinates: x across the glyph body, y from the
/// cap line (0) to the baseline (1). y may exceed 1 for descenders.
#[derive(Debug, Clone, PartialEq)]
struct Skeleton {
    segments: Vec<(Point, Point)>,
    width_factor: f64,
}

const ANCHORS: [Point; 9] = [
    (0.0, 0.0),
    (0.5, 0.0),
    (1.0, 0.0),
    (0.0, 0.5),
    (0.5, 0.5),
    (1.0, 0.5),
    (0.0, 1.0),
    (0.5, 1.0),
    (1.0, 1.0),
];

fn dot(y0: f64, y1: f64) -> Vec<(Point, Point)> {
    vec![
        ((0.2, y0), (0.8, y0)),
        ((0.2, y1), (0.8, y1)),
        ((0.2, y0), (0.2, y1)),
        ((0.8, y0), (0.8, y1)),
    ]
}

fn special_skeleton(ch: char) -> Option<Skeleton> {
    let sk = |segments: Vec<(Point, Point)>, width_factor: f64| {
        Some(Skeleton {
            segments,
            width_factor,
        })
    };
    match ch {
        '.' => sk(dot(0.82, 1.0), 0.25),
        ',' => {
            let mut s = dot(0.82, 1.0);
            s.push(((0.8, 1.0), (0.4, 1.25)));
            sk(s, 0.25)
        }
        ':' => {
            let mut s = dot(0.3, 0.48);
            s.extend(dot(0.82, 1.0));
            sk(s, 0.25)
        }
        ';' => {
            let mut s = dot(0.3, 0.48);
            s.extend(dot(0.82, 1.0));
            s.push(((0.8, 1.0), (0.4, 1.25)));
            sk(s, 0.25)
        }
        '-' => sk(vec![((0.0, 0.55), (1.0, 0.55))], 0.4),
        '\'' => sk(vec![((0.5, 0.0), (0.5, 0.3))], 0.15),
        '(' => sk(
            vec![
                ((1.0, -0.05), (0.2, 0.3)),
                ((0.2, 0.3), (0.2, 0.8)),
                ((0.2, 0.8), (1.0, 1.15)),
            ],
            0.3,
        ),
        ')' => sk(
            vec![
                ((0.0, -0.05), (0.8, 0.3)),
                ((0.8, 0.3), (0.8, 0.8)),
                ((0.8, 0.8), (0.0, 1.15)),
            ],
            0.3,
        ),
        _ => None,
    }
}

fn random_skeleton(ch: char, attempt: u32) -> Skeleton {
    let mut rng = ChaCha8Rng::seed_from_u64(((ch as u64) << 8) ^ attempt as u64 ^ 0x5eed_61f4);
    let narrow = matches!(
        ch,
        'i' | 'l' | 'I' | 'j' | 'J' | '1' | 't' | 'f' | 'r' | '!'
    );
    let wide = matches!(ch, 'm' | 'w' | 'M' | 'W' | 'ß' | 'Ö' | 'Ä');
    let private_use = ('\u{E000}'..='\u{F8FF}').contains(&ch);
    let width_factor = if narrow {
        0.3
    } else if wide {
        0.7
    } else if private_use {
        0.75
    } else {
        rng.random_range(0.45..0.6)
    };
    if private_use {
        // ornaments: a cross through the centre plus a random diamond/frame
        let mut segments = vec![((0.5, 0.0), (0.5, 1.0)), ((0.0, 0.45), (1.0, 0.45))];
        if rng.random_bool(0.5) {
            segments.extend([
                ((0.5, 0.0), (1.0, 0.45)),
                ((1.0, 0.45), (0.5, 1.0)),
                ((0.5, 1.0), (0.0, 0.45)),
                ((0.0, 0.45), (0.5, 0.0)),
            ]);
        } else {
            segments.extend([((0.0, 0.0), (1.0, 1.0)), ((1.0, 0.0), (0.0, 1.0))]);
        }
        return Skeleton {
            segments,
            width_factor,
        };
    }
    let stem_col = if narrow {
        1
    } else {
        rng.random_range(0..3usize)
    };
    let mut visited = vec![stem_col, stem_col + 6];
    let mut segments = vec![(ANCHORS[stem_col], ANCHORS[stem_col + 6])];
    let extra = if narrow {
        rng.random_range(0..2)
    } else {
        rng.random_range(2..4)
    };
    for _ in 0..extra {
        let from = visited[rng.random_range(0..visited.len())];
        let mut to = rng.random_range(0..9usize);
        while to == from {
            to = rng.random_range(0..9usize);
        }
        segments.push((ANCHORS[from], ANCHORS[to]));
        visited.push(to);
    }
    Skeleton {
        segments,
        width_factor,
    }
}

fn skeleton_key(s: &Skeleton) -> Vec<(i64, i64, i64, i64)> {
    let mut k: Vec<_> = s
        .segments
        .iter()
        .map(|&((a, b), (c, d))| {
            let p = ((a * 100.0) as i64, (b * 100.0) as i64);
            let q = ((c * 100.0) as i64, (d * 100.0) as i64);
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            (p.0, p.1, q.0, q.1)
        })
        .collect();
    k.sort_unstable();
    k.dedup();
    k
}

fn rasterize(sk: &Skeleton, style: FontStyle, m: &FontMetrics) -> Glyph {
    let s = m.size as f64;
    let base_thickness = (s / 11.0).round().max(1.0);
    let thickness = match style {
        FontStyle::Bold => (base_thickness * 1.8).round().max(2.0),
        _ => base_thickness,
    };
    let body_w = (sk.width_factor * s * 0.95).round().max(thickness);
    let slant = if style == FontStyle::Italic {
        0.22 * m.cap as f64
    } else {
        0.0
    };
    let cap = m.cap as f64;
    let height = m.cap + m.descent;
    let width = (body_w + thickness + slant).ceil() as u32 + 1;
    let mut bits = vec![false; (width * height) as usize];
    let t = thickness as i64;
    let mut stamp = |px: f64, py: f64| {
        let x0 = px.round() as i64;
        let y0 = py.round() as i64;
        for dy in 0..t {
            for dx in 0..t {
                let x = x0 + dx;
                let y = y0 + dy;
                if x >= 0 && y >= 0 && (x as u32) < width && (y as u32) < height {
                    bits[(y as u32 * width + x as u32) as usize] = true;
                }
            }
        }
    };
    let to_px = |(u, v): Point| -> (f64, f64) {
        let y = v * (cap - thickness);
        let x = u * (body_w - thickness) + slant * (1.0 - v.clamp(0.0, 1.0));
        (x, y.max(0.0).min(height as f64 - thickness))
    };
    for &(a, b) in &sk.segments {
        let (ax, ay) = to_px(a);
        let (bx, by) = to_px(b);
        let steps = ((bx - ax).abs().max((by - ay).abs()) * 2.0).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let f = i as f64 / steps as f64;
            stamp(ax + (bx - ax) * f, ay + (by - ay) * f);
        }
    }
    let spacing = (s * 0.12).round().max(1.0) as u32;
    Glyph {
        width,
        height,
        bits,
        advance: width + spacing,
    }
}

/// Bitmaps for every (style, size, character) the generator may draw.
#[derive(Debug, Clone)]
pub struct GlyphAtlas {
    glyphs: HashMap<(FontStyle, u32, char), Glyph>,
    metrics: BTreeMap<u32, FontMetrics>,
}

impl GlyphAtlas {
    pub fn new(sizes: &[u32], charset: &BTreeSet<char>) -> GlyphAtlas {
        let mut skeletons: BTreeMap<char, Skeleton> = BTreeMap::new();
        let mut seen: BTreeSet<Vec<(i64, i64, i64, i64)>> = BTreeSet::new();
        // distinct skeletons can still rasterize identically; compare bitmaps too
        let reference = FontMetrics::for_size(40);
        let mut shapes: BTreeSet<Vec<bool>> = BTreeSet::new();
        for &ch in charset {
            if ch == ' ' {
                continue;
            }
            let sk = match special_skeleton(ch) {
                Some(sk) => sk,
                None => {
                    let mut attempt = 0;
                    loop {
                        let sk = random_skeleton(ch, attempt);
                        let fresh = !seen.contains(&skeleton_key(&sk))
                            && shapes.insert(rasterize(&sk, FontStyle::Regular, &reference).bits);
                        if fresh || attempt > 64 {
                            seen.insert(skeleton_key(&sk));
                            break sk;
                        }
                        attempt += 1;
                    }
                }
            };
            skeletons.insert(ch, sk);
        }
        let mut glyphs = HashMap::new();
        let mut metrics = BTreeMap::new();
        for &size in sizes {
            let m = FontMetrics::for_size(size);
            metrics.insert(size, m);
            for style in FontStyle::ALL {
                for (&ch, sk) in &skeletons {
                    glyphs.insert((style, size, ch), rasterize(sk, style, &m));
                }
            }
        }
        GlyphAtlas { glyphs, metrics }
    }

    pub fn metrics(&self, size: u32) -> Option<&FontMetrics> {
        self.metrics.get(&size)
    }

    pub fn glyph(&self, style: FontStyle, size: u32, ch: char) -> Option<&Glyph> {
        self.glyphs.get(&(style, size, ch))
    }

    /// Horizontal advance; spaces use the size's space advance.
    pub fn advance(&self, style: FontStyle, size: u32, ch: char) -> Option<u32> {
        if ch == ' ' {
            return self.metrics(size).map(|m| m.space_advance);
        }
        self.glyph(style, size, ch).map(|g| g.advance)
    }

    pub fn covers(&self, ch: char) -> bool {
        ch == ' '
            || self.metrics.keys().all(|&s| {
                FontStyle::ALL
                    .iter()
                    .all(|&st| self.glyphs.contains_key(&(st, s, ch)))
            })
    }
}
