//! Column/band page layout and the raster renderer.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SynthConfig;
use super::glyphs::{FontStyle, GlyphAtlas, SymbolMap};
use super::text::{sample_entry, sample_text, StyledText, TextPools, TextRun, MAX_FRAGMENTS};
use crate::corpus::{Element, LayoutClass, PageAnnotation};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::{PageImage, BLACK};

/// Pixel distance kept between column content and the column edges.
const COLUMN_INSET: i64 = 2;
/// Brace members are short entries.
const CURLY_MEMBER_FRAGMENTS: usize = 3;

type Ext = (i64, i64, i64, i64);

fn grow(a: Option<Ext>, b: Ext) -> Ext {
    match a {
        None => b,
        Some(a) => (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Op {
    /// Glyph bitmap with its top-left corner at `(x, y)`.
    Glyph {
        style: FontStyle,
        size: u32,
        ch: char,
        x: i64,
        y: i64,
    },
    Rect {
        x0: i64,
        y0: i64,
        x1: i64,
        y1: i64,
    },
}

impl Op {
    fn translate(self, dx: i64, dy: i64) -> Op {
        match self {
            Op::Glyph {
                style,
                size,
                ch,
                x,
                y,
            } => Op::Glyph {
                style,
                size,
                ch,
                x: x + dx,
                y: y + dy,
            },
            Op::Rect { x0, y0, x1, y1 } => Op::Rect {
                x0: x0 + dx,
                y0: y0 + dy,
                x1: x1 + dx,
                y1: y1 + dy,
            },
        }
    }
}

/// One rendered text line; `y` is the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub text: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct PlacedElement {
    pub label: LayoutClass,
    pub bbox: BoundingBox,
    pub text: String,
    pub lines: Vec<TextLine>,
    /// Index of the enclosing Curly for brace members.
    pub parent: Option<usize>,
    pub(crate) ops: Vec<Op>,
}

#[derive(Debug, Clone)]
struct LocalElement {
    label: LayoutClass,
    text: String,
    lines: Vec<TextLine>,
    parent: Option<usize>,
    ops: Vec<Op>,
}

#[derive(Debug, Clone)]
struct Block {
    height: i64,
    elements: Vec<LocalElement>,
    /// Smaller variant to try when this block does not fit.
    fallback: Option<Box<Block>>,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    ch: char,
    style: FontStyle,
}

type Word = Vec<Piece>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Align {
    Left,
    Justify,
    Center,
}

fn words_of(runs: &[TextRun]) -> Vec<Word> {
    let mut words = Vec::new();
    let mut cur: Word = Vec::new();
    for run in runs {
        for ch in run.text.chars() {
            if ch.is_whitespace() {
                if !cur.is_empty() {
                    words.push(std::mem::take(&mut cur));
                }
            } else {
                cur.push(Piece {
                    ch,
                    style: run.style,
                });
            }
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
}

fn word_text(w: &Word) -> String {
    w.iter().map(|p| p.ch).collect()
}

/// A fully laid out page: placed elements in reading order plus what is
/// needed to rasterize them.
#[derive(Debug, Clone)]
pub struct PageLayout {
    pub page_id: String,
    pub width: u32,
    pub height: u32,
    pub elements: Vec<PlacedElement>,
    atlas: Arc<GlyphAtlas>,
}

impl PageLayout {
    fn draw(&self, img: &mut PageImage, ops: &[Op], mut mark: impl FnMut(i64, i64)) {
        for op in ops {
            match *op {
                Op::Glyph {
                    style,
                    size,
                    ch,
                    x,
                    y,
                } => {
                    if let Some(g) = self.atlas.glyph(style, size, ch) {
                        for gy in 0..g.height {
                            for gx in 0..g.width {
                                if g.ink(gx, gy) {
                                    let (px, py) = (x + gx as i64, y + gy as i64);
                                    img.put(px, py, BLACK);
                                    mark(px, py);
                                }
                            }
                        }
                    }
                }
                Op::Rect { x0, y0, x1, y1 } => {
                    img.fill_rect(x0, y0, x1, y1, BLACK);
                    for py in y0..y1 {
                        for px in x0..x1 {
                            mark(px, py);
                        }
                    }
                }
            }
        }
    }

    pub fn render(&self) -> PageImage {
        let mut img = PageImage::blank(self.width, self.height);
        for e in &self.elements {
            self.draw(&mut img, &e.ops, |_, _| {});
        }
        img
    }

    /// The page with only element `index` drawn. A Curly renders its brace
    /// and its members.
    pub fn render_isolated(&self, index: usize) -> PageImage {
        let mut img = PageImage::blank(self.width, self.height);
        for (i, e) in self.elements.iter().enumerate() {
            if i == index
                || (self.elements[index].label == LayoutClass::Curly && e.parent == Some(index))
            {
                self.draw(&mut img, &e.ops, |_, _| {});
            }
        }
        img
    }

    /// Per-pixel index of the element whose ink covers it.
    pub fn ink_label_map(&self) -> Vec<Option<u32>> {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut map = vec![None; (w * h) as usize];
        let mut scratch = PageImage::blank(self.width, self.height);
        for (i, e) in self.elements.iter().enumerate() {
            self.draw(&mut scratch, &e.ops, |x, y| {
                if x >= 0 && y >= 0 && x < w && y < h {
                    map[(y * w + x) as usize] = Some(i as u32);
                }
            });
        }
        map
    }

    pub fn annotation(&self) -> PageAnnotation {
        PageAnnotation {
            page_id: self.page_id.clone(),
            width: self.width,
            height: self.height,
            elements: self
                .elements
                .iter()
                .map(|e| Element {
                    bbox: e.bbox,
                    label: e.label,
                })
                .collect(),
        }
    }
}

/// Lays out and renders pages for one configuration. The glyph atlas is
/// built once and shared.
#[derive(Debug, Clone)]
pub struct Generator {
    cfg: SynthConfig,
    pools: TextPools,
    symbols: SymbolMap,
    atlas: Arc<GlyphAtlas>,
    bounds: HashMap<(FontStyle, u32, char), Option<Ext>>,
    weights: WeightedIndex<f64>,
}

impl Generator {
    pub fn new(cfg: SynthConfig) -> Result<Self> {
        Self::with_resources(cfg, TextPools::default(), SymbolMap::default())
    }

    pub fn with_resources(cfg: SynthConfig, pools: TextPools, symbols: SymbolMap) -> Result<Self> {
        cfg.validate()?;
        pools.validate().map_err(Error::Config)?;
        let charset = pools.charset(&symbols);
        let sizes = [cfg.h1_size, cfg.h2_size, cfg.text_size];
        let atlas = GlyphAtlas::new(&sizes, &charset);
        let mut bounds = HashMap::new();
        for &size in &sizes {
            for style in FontStyle::ALL {
                for &ch in &charset {
                    if let Some(g) = atlas.glyph(style, size, ch) {
                        let b = g
                            .ink_bounds()
                            .map(|(a, b, c, d)| (a as i64, b as i64, c as i64, d as i64));
                        bounds.insert((style, size, ch), b);
                    }
                }
            }
        }
        let weights = WeightedIndex::new(LayoutClass::ALL.iter().map(|&c| cfg.weight(c)))
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Generator {
            cfg,
            pools,
            symbols,
            atlas: Arc::new(atlas),
            bounds,
            weights,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn atlas(&self) -> &GlyphAtlas {
        &self.atlas
    }

    fn metrics(&self, size: u32) -> (i64, i64, i64, i64) {
        let m = self.atlas.metrics(size).expect("size in atlas");
        (
            m.cap as i64,
            m.descent as i64,
            m.space_advance as i64,
            m.pitch(self.cfg.line_spacing) as i64,
        )
    }

    fn advance(&self, p: Piece, size: u32) -> i64 {
        self.atlas
            .advance(p.style, size, p.ch)
            .or_else(|| self.atlas.metrics(size).map(|m| m.space_advance))
            .unwrap_or(1) as i64
    }

    fn word_width(&self, w: &Word, size: u32) -> i64 {
        w.iter().map(|&p| self.advance(p, size)).sum()
    }

    fn ops_extent(&self, ops: &[Op]) -> Option<Ext> {
        let mut ext = None;
        for op in ops {
            let b = match *op {
                Op::Glyph {
                    style,
                    size,
                    ch,
                    x,
                    y,
                } => match self.bounds.get(&(style, size, ch)) {
                    Some(Some((a, b, c, d))) => (x + a, y + b, x + c, y + d),
                    _ => continue,
                },
                Op::Rect { x0, y0, x1, y1 } => {
                    if x1 <= x0 || y1 <= y0 {
                        continue;
                    }
                    (x0, y0, x1, y1)
                }
            };
            ext = Some(grow(ext, b));
        }
        ext
    }

    /// Splits words wider than `max_w` into pieces that fit.
    fn break_long(&self, words: Vec<Word>, size: u32, max_w: i64) -> Vec<Word> {
        let mut out = Vec::new();
        for w in words {
            if self.word_width(&w, size) <= max_w {
                out.push(w);
                continue;
            }
            let mut cur: Word = Vec::new();
            let mut cur_w = 0;
            for p in w {
                let a = self.advance(p, size);
                if !cur.is_empty() && cur_w + a > max_w {
                    out.push(std::mem::take(&mut cur));
                    cur_w = 0;
                }
                cur.push(p);
                cur_w += a;
            }
            if !cur.is_empty() {
                out.push(cur);
            }
        }
        out
    }

    fn wrap(&self, words: Vec<Word>, size: u32, first_w: i64, rest_w: i64) -> Vec<Vec<Word>> {
        let (_, _, space, _) = self.metrics(size);
        let words = self.break_long(words, size, first_w.min(rest_w));
        let mut lines: Vec<Vec<Word>> = Vec::new();
        let mut cur: Vec<Word> = Vec::new();
        let mut cur_w = 0;
        for w in words {
            let ww = self.word_width(&w, size);
            let limit = if lines.is_empty() { first_w } else { rest_w };
            let needed = if cur.is_empty() {
                ww
            } else {
                cur_w + space + ww
            };
            if !cur.is_empty() && needed > limit {
                lines.push(std::mem::take(&mut cur));
                cur_w = ww;
            } else {
                cur_w = needed;
            }
            cur.push(w);
        }
        if !cur.is_empty() {
            lines.push(cur);
        }
        lines
    }

    fn set_line(
        &self,
        line: &[Word],
        size: u32,
        x0: i64,
        avail: i64,
        baseline: i64,
        align: Align,
    ) -> (Vec<Op>, TextLine) {
        let (cap, _, space, _) = self.metrics(size);
        let widths: Vec<i64> = line.iter().map(|w| self.word_width(w, size)).collect();
        let natural: i64 = widths.iter().sum::<i64>() + space * (line.len() as i64 - 1).max(0);
        let gaps = (line.len() as i64 - 1).max(0);
        let extra = (avail - natural).max(0);
        let mut x = match align {
            Align::Center => x0 + extra / 2,
            _ => x0,
        };
        let start = x;
        let mut ops = Vec::new();
        for (i, w) in line.iter().enumerate() {
            for &p in w {
                ops.push(Op::Glyph {
                    style: p.style,
                    size,
                    ch: p.ch,
                    x,
                    y: baseline - cap,
                });
                x += self.advance(p, size);
            }
            if (i as i64) < gaps {
                x += space;
                if align == Align::Justify {
                    x += extra / gaps + i64::from((i as i64) < extra % gaps);
                }
            }
        }
        let text = line.iter().map(word_text).collect::<Vec<_>>().join(" ");
        (
            ops,
            TextLine {
                text,
                x: start as f64,
                y: baseline as f64,
            },
        )
    }

    fn block_height(&self, size: u32, lines: usize) -> i64 {
        let (cap, descent, _, pitch) = self.metrics(size);
        (lines as i64 - 1) * pitch + cap + descent
    }

    /// Justified paragraph. Normal paragraphs indent every line after the
    /// first; big paragraphs indent only the first.
    fn paragraph(&self, text: &StyledText, width: i64, big: bool) -> (LocalElement, i64, usize) {
        let size = self.cfg.text_size;
        let indent = self.cfg.hanging_indent as i64;
        let (first_off, rest_off) = if big { (indent, 0) } else { (0, indent) };
        let lines = self.wrap(
            words_of(&text.runs),
            size,
            width - first_off,
            width - rest_off,
        );
        let (cap, _, _, pitch) = self.metrics(size);
        let mut ops = Vec::new();
        let mut out_lines = Vec::new();
        let n = lines.len();
        for (i, line) in lines.iter().enumerate() {
            let off = if i == 0 { first_off } else { rest_off };
            let align = if i + 1 < n {
                Align::Justify
            } else {
                Align::Left
            };
            let (o, l) = self.set_line(line, size, off, width - off, cap + i as i64 * pitch, align);
            ops.extend(o);
            out_lines.push(l);
        }
        let label = if big {
            LayoutClass::BigParagraph
        } else {
            LayoutClass::Paragraph
        };
        (
            LocalElement {
                label,
                text: text.plain(),
                lines: out_lines,
                parent: None,
                ops,
            },
            self.block_height(size, n),
            n,
        )
    }

    /// Paragraph text that wraps to at least two lines, so that justified
    /// lines give the element the full available width.
    fn multi_line_paragraph<R: Rng>(
        &self,
        rng: &mut R,
        width: i64,
        big: bool,
        max_fragments: usize,
    ) -> (LocalElement, i64) {
        let mut text = StyledText::default();
        for _ in 0..64 {
            text = sample_entry(&self.pools, &self.symbols, max_fragments, rng);
            let (e, h, n) = self.paragraph(&text, width, big);
            if n >= 2 {
                return (e, h);
            }
        }
        // rare for wide single-column pages: keep appending fragments
        loop {
            let last = text.runs.last_mut().expect("paragraph runs");
            last.text.pop();
            last.text.push_str(", ");
            last.text
                .push_str(self.pools.abbreviations.choose(rng).expect("nonempty"));
            last.text.push('.');
            let (e, h, n) = self.paragraph(&text, width, big);
            if n >= 2 {
                return (e, h);
            }
        }
    }

    fn centered(
        &self,
        label: LayoutClass,
        text: &StyledText,
        size: u32,
        width: i64,
    ) -> (LocalElement, i64) {
        let lines = self.wrap(words_of(&text.runs), size, width, width);
        let (cap, _, _, pitch) = self.metrics(size);
        let mut ops = Vec::new();
        let mut out_lines = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let (mut o, mut l) =
                self.set_line(line, size, 0, width, cap + i as i64 * pitch, Align::Center);
            // centre the ink, not the advance widths
            if let Some((a, _, b, _)) = self.ops_extent(&o) {
                let dx = ((width - (b - a)) / 2).max(0) - a;
                o = o.into_iter().map(|op| op.translate(dx, 0)).collect();
                l.x += dx as f64;
            }
            ops.extend(o);
            out_lines.push(l);
        }
        (
            LocalElement {
                label,
                text: text.plain(),
                lines: out_lines,
                parent: None,
                ops,
            },
            self.block_height(size, lines.len()),
        )
    }

    /// Centered bold heading flanked by rules reaching both text edges.
    fn h1(&self, text: &StyledText, width: i64) -> (LocalElement, i64) {
        let size = self.cfg.h1_size;
        let s = size as i64;
        let lines = self.wrap(words_of(&text.runs), size, width - 6 * s, width - 6 * s);
        let (cap, _, _, pitch) = self.metrics(size);
        let mut ops = Vec::new();
        let mut out_lines = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let (o, l) = self.set_line(
                line,
                size,
                3 * s,
                width - 6 * s,
                cap + i as i64 * pitch,
                Align::Center,
            );
            if i == 0 {
                if let Some((x0, _, x1, _)) = self.ops_extent(&o) {
                    let t = (s / 14).max(2);
                    let y = cap / 2 - t / 2;
                    ops.push(Op::Rect {
                        x0: 0,
                        y0: y,
                        x1: x0 - s / 2,
                        y1: y + t,
                    });
                    ops.push(Op::Rect {
                        x0: x1 + s / 2,
                        y0: y,
                        x1: width,
                        y1: y + t,
                    });
                }
            }
            ops.extend(o);
            out_lines.push(l);
        }
        (
            LocalElement {
                label: LayoutClass::H1,
                text: text.plain(),
                lines: out_lines,
                parent: None,
                ops,
            },
            self.block_height(size, lines.len()),
        )
    }

    fn name_entry_fits(&self, text: &StyledText, width: i64) -> Option<(LocalElement, i64)> {
        let size = self.cfg.text_size;
        let (cap, _, space, _) = self.metrics(size);
        let name = words_of(&text.runs);
        let numbers = words_of(&[TextRun {
            text: text.numbers.clone().unwrap_or_default(),
            style: FontStyle::Regular,
        }]);
        let line_w = |ws: &[Word]| -> i64 {
            ws.iter().map(|w| self.word_width(w, size)).sum::<i64>()
                + space * (ws.len() as i64 - 1).max(0)
        };
        let (nw, numw) = (line_w(&name), line_w(&numbers));
        if nw + 2 * space + numw > width {
            return None;
        }
        let (mut ops, mut l) = self.set_line(&name, size, 0, nw, cap, Align::Left);
        let (o2, l2) = self.set_line(&numbers, size, width - numw, numw, cap, Align::Left);
        ops.extend(o2);
        l.text = format!("{} {}", l.text, l2.text);
        Some((
            LocalElement {
                label: LayoutClass::NameEntry,
                text: text.plain(),
                lines: vec![l],
                parent: None,
                ops,
            },
            self.block_height(size, 1),
        ))
    }

    fn name_entry<R: Rng>(&self, rng: &mut R, width: i64) -> Result<(LocalElement, i64)> {
        let mut last = StyledText::default();
        for _ in 0..32 {
            last = sample_text(&self.pools, &self.symbols, LayoutClass::NameEntry, rng);
            if let Some(r) = self.name_entry_fits(&last, width) {
                return Ok(r);
            }
        }
        // shortest form: surname and a single page number
        last.runs.truncate(1);
        let first = last
            .numbers
            .as_deref()
            .unwrap_or("1")
            .split(", ")
            .next()
            .unwrap_or("1")
            .to_string();
        last.numbers = Some(first);
        self.name_entry_fits(&last, width)
            .ok_or_else(|| Error::Layout(format!("a name entry does not fit a {width}-px column")))
    }

    /// Brace grouping several paragraphs with one H3 keyword at its right.
    /// A brace over 2 to 4 member paragraphs with an H3 keyword to its
    /// right. Variants with fewer members are chained as fallbacks.
    fn curly<R: Rng>(&self, rng: &mut R, width: i64) -> Block {
        let member_w = (self.cfg.curly_member_fraction * width as f64).round() as i64;
        let n = rng.random_range(2..=4);
        let members: Vec<(LocalElement, i64)> = (0..n)
            .map(|_| self.multi_line_paragraph(rng, member_w, false, CURLY_MEMBER_FRAGMENTS))
            .collect();
        let keyword = sample_text(&self.pools, &self.symbols, LayoutClass::H3, rng);
        let mut block: Option<Block> = None;
        for k in 2..=n {
            let mut b = self.assemble_curly(&members[..k], &keyword, member_w, width);
            b.fallback = block.take().map(Box::new);
            block = Some(b);
        }
        block.expect("at least two members")
    }

    fn assemble_curly(
        &self,
        members: &[(LocalElement, i64)],
        keyword: &StyledText,
        member_w: i64,
        width: i64,
    ) -> Block {
        let size = self.cfg.text_size as i64;
        let gap = self.cfg.element_gap() as i64;
        let mut placed = Vec::new();
        let mut y = 0;
        for (i, (e, h)) in members.iter().enumerate() {
            if i > 0 {
                y += gap;
            }
            let mut e = e.clone();
            e.ops = e.ops.into_iter().map(|o| o.translate(0, y)).collect();
            for l in &mut e.lines {
                l.y += y as f64;
            }
            placed.push(e);
            y += h;
        }
        let mem_h = y;

        let t = (size / 11).max(2);
        let pad = size / 2;
        let brace_w = (size * 6 / 10).max(3 * t);
        let bx0 = member_w + pad;
        let bmid = bx0 + brace_w / 2 - t / 2;
        let bx1 = bx0 + brace_w;
        let ymid = mem_h / 2;
        let brace = vec![
            Op::Rect {
                x0: bx0,
                y0: 0,
                x1: bmid + t,
                y1: t,
            },
            Op::Rect {
                x0: bmid,
                y0: 0,
                x1: bmid + t,
                y1: mem_h,
            },
            Op::Rect {
                x0: bx0,
                y0: mem_h - t,
                x1: bmid + t,
                y1: mem_h,
            },
            Op::Rect {
                x0: bmid,
                y0: ymid - t / 2,
                x1: bx1,
                y1: ymid - t / 2 + t,
            },
        ];

        let kx = bx1 + pad;
        let kw = width - kx;
        let (mut h3, h3_h) = self.centered(LayoutClass::H3, keyword, self.cfg.text_size, kw);
        let h3_top = ymid - h3_h / 2;
        h3.ops = h3
            .ops
            .into_iter()
            .map(|o| o.translate(kx, h3_top))
            .collect();
        for l in &mut h3.lines {
            l.x += kx as f64;
            l.y += h3_top as f64;
        }

        let shift = (-h3_top).max(0);
        let height = (mem_h + shift).max(h3_top + shift + h3_h);
        let mut elements = vec![LocalElement {
            label: LayoutClass::Curly,
            text: String::new(),
            lines: Vec::new(),
            parent: None,
            ops: brace,
        }];
        for mut e in placed.into_iter().chain(std::iter::once(h3)) {
            e.parent = Some(0);
            elements.push(e);
        }
        for e in &mut elements {
            e.ops = e.ops.iter().map(|o| o.translate(0, shift)).collect();
            for l in &mut e.lines {
                l.y += shift as f64;
            }
        }
        Block {
            height,
            elements,
            fallback: None,
        }
    }

    fn build_block<R: Rng>(&self, kind: LayoutClass, width: i64, rng: &mut R) -> Result<Block> {
        let single = |(e, h): (LocalElement, i64)| Block {
            height: h,
            elements: vec![e],
            fallback: None,
        };
        Ok(match kind {
            LayoutClass::Paragraph => {
                single(self.multi_line_paragraph(rng, width, false, MAX_FRAGMENTS))
            }
            LayoutClass::BigParagraph => {
                single(self.multi_line_paragraph(rng, width, true, MAX_FRAGMENTS))
            }
            LayoutClass::H1 => {
                let t = sample_text(&self.pools, &self.symbols, kind, rng);
                single(self.h1(&t, width))
            }
            LayoutClass::H2 => {
                let t = sample_text(&self.pools, &self.symbols, kind, rng);
                single(self.centered(kind, &t, self.cfg.h2_size, width))
            }
            LayoutClass::H3 | LayoutClass::H4 => {
                let t = sample_text(&self.pools, &self.symbols, kind, rng);
                single(self.centered(kind, &t, self.cfg.text_size, width))
            }
            LayoutClass::NameEntry => single(self.name_entry(rng, width)?),
            LayoutClass::Curly => self.curly(rng, width),
        })
    }

    /// Columns needed to stack `heights` in order with at most `limit` each.
    fn columns_needed(heights: &[i64], gap: i64, limit: i64) -> usize {
        let mut cols = 1;
        let mut used = 0;
        for &h in heights {
            if h > limit {
                return usize::MAX;
            }
            let need = if used == 0 { h } else { used + gap + h };
            if need > limit {
                cols += 1;
                used = h;
            } else {
                used = need;
            }
        }
        cols
    }

    /// Smallest column height holding `heights` in `n` columns.
    fn balanced_height(heights: &[i64], gap: i64, n: usize) -> i64 {
        if heights.is_empty() {
            return 0;
        }
        let mut lo = *heights.iter().max().expect("nonempty");
        let mut hi = heights.iter().sum::<i64>() + gap * (heights.len() as i64 - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if Self::columns_needed(heights, gap, mid) <= n {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    fn place(&self, block: Block, dx: i64, dy: i64, out: &mut Vec<PlacedElement>) {
        let base = out.len();
        for e in block.elements {
            out.push(PlacedElement {
                label: e.label,
                bbox: BoundingBox {
                    x_min: 0.0,
                    y_min: 0.0,
                    x_max: 1.0,
                    y_max: 1.0,
                },
                text: e.text,
                lines: e
                    .lines
                    .into_iter()
                    .map(|l| TextLine {
                        text: l.text,
                        x: l.x + dx as f64,
                        y: l.y + dy as f64,
                    })
                    .collect(),
                parent: e.parent.map(|p| p + base),
                ops: e.ops.into_iter().map(|o| o.translate(dx, dy)).collect(),
            });
        }
    }

    fn place_band(&self, band: Vec<Block>, top: i64, height: i64, out: &mut Vec<PlacedElement>) {
        let cfg = &self.cfg;
        let gap = cfg.element_gap() as i64;
        let cw = cfg.column_width() as i64;
        let mut col = 0i64;
        let mut used = 0i64;
        for b in band {
            let need = if used == 0 {
                b.height
            } else {
                used + gap + b.height
            };
            let y = if need > height && used > 0 {
                col += 1;
                used = b.height;
                top
            } else {
                let y = if used == 0 { top } else { top + used + gap };
                used = need;
                y
            };
            let x = cfg.margin as i64 + col * (cw + cfg.column_gap as i64) + COLUMN_INSET;
            self.place(b, x, y, out);
        }
    }

    /// Lays out one page from its own seed.
    pub fn layout(&self, page_id: &str, seed: u64) -> Result<PageLayout> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = cfg.element_gap() as i64;
        let n_cols = cfg.column_count as usize;
        let bottom = cfg.page_height as i64 - cfg.margin as i64;
        let full_w = cfg.text_width() as i64;
        let col_w = cfg.column_width() as i64 - 2 * COLUMN_INSET;

        let mut placed: Vec<PlacedElement> = Vec::new();
        let mut pending: Vec<Block> = Vec::new();
        let mut y = cfg.margin as i64;
        let mut first_failures = 0;
        loop {
            let kind = LayoutClass::ALL[self.weights.sample(&mut rng)];
            let full = kind.is_full_width();
            let mut candidate =
                Some(self.build_block(kind, if full { full_w } else { col_w }, &mut rng)?);
            let mut fits = false;
            while let Some(mut block) = candidate.take() {
                let heights: Vec<i64> = pending.iter().map(|b| b.height).collect();
                let fallback = block.fallback.take();
                fits = if full {
                    let band_h = Self::balanced_height(&heights, gap, n_cols);
                    let fy = y + band_h + if pending.is_empty() { 0 } else { gap };
                    if fy + block.height <= bottom {
                        let band = std::mem::take(&mut pending);
                        self.place_band(band, y, band_h, &mut placed);
                        let bh = block.height;
                        self.place(block, cfg.margin as i64, fy, &mut placed);
                        y = fy + bh + gap;
                        true
                    } else {
                        false
                    }
                } else {
                    let mut hs = heights;
                    hs.push(block.height);
                    if Self::columns_needed(&hs, gap, bottom - y) <= n_cols {
                        pending.push(block);
                        true
                    } else {
                        false
                    }
                };
                if !fits {
                    candidate = fallback.map(|b| *b);
                }
            }
            if !fits {
                // the first element that does not fit is dropped and closes the page
                if placed.is_empty() && pending.is_empty() {
                    first_failures += 1;
                    if first_failures < 64 {
                        continue;
                    }
                    return Err(Error::Layout("no element fits on the page".into()));
                }
                break;
            }
        }
        let heights: Vec<i64> = pending.iter().map(|b| b.height).collect();
        let band_h = Self::balanced_height(&heights, gap, n_cols);
        self.place_band(pending, y, band_h, &mut placed);

        // annotation boxes: ink hull grown by one pixel
        let exts: Vec<Option<Ext>> = placed.iter().map(|e| self.ops_extent(&e.ops)).collect();
        let mut hulls = exts.clone();
        for (i, e) in placed.iter().enumerate() {
            if let (Some(p), Some(ext)) = (e.parent, exts[i]) {
                hulls[p] = Some(grow(hulls[p], ext));
            }
        }
        let (pw, ph) = (cfg.page_width as f64, cfg.page_height as f64);
        for (e, hull) in placed.iter_mut().zip(hulls) {
            let (x0, y0, x1, y1) =
                hull.ok_or_else(|| Error::Layout("element without ink".into()))?;
            e.bbox = BoundingBox {
                x_min: (x0 as f64 - 1.0).max(0.0),
                y_min: (y0 as f64 - 1.0).max(0.0),
                x_max: (x1 as f64 + 1.0).min(pw),
                y_max: (y1 as f64 + 1.0).min(ph),
            };
        }
        Ok(PageLayout {
            page_id: page_id.to_string(),
            width: cfg.page_width,
            height: cfg.page_height,
            elements: placed,
            atlas: Arc::clone(&self.atlas),
        })
    }
}
