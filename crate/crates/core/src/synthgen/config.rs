use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LayoutClass;
use crate::error::{Error, Result};

/// Generator settings. Serialized as a flat key/value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub page_width: u32,
    pub page_height: u32,
    pub column_count: u32,
    pub margin: u32,
    pub column_gap: u32,
    pub h1_size: u32,
    pub h2_size: u32,
    /// Size of paragraphs, name entries, H3 and H4.
    pub text_size: u32,
    pub line_spacing: f64,
    /// Vertical gap between elements as a multiple of `text_size`.
    pub element_spacing: f64,
    pub hanging_indent: u32,
    /// Width share of the paragraphs grouped by a brace.
    pub curly_member_fraction: f64,
    pub weight_paragraph: f64,
    pub weight_big_paragraph: f64,
    pub weight_h1: f64,
    pub weight_h2: f64,
    pub weight_h3: f64,
    pub weight_h4: f64,
    pub weight_name_entry: f64,
    pub weight_curly: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            page_width: 1405,
            page_height: 1988,
            column_count: 3,
            margin: 70,
            column_gap: 30,
            h1_size: 40,
            h2_size: 30,
            text_size: 22,
            line_spacing: 1.15,
            element_spacing: 0.7,
            hanging_indent: 24,
            curly_member_fraction: 0.62,
            weight_paragraph: 0.40,
            weight_big_paragraph: 0.06,
            weight_h1: 0.06,
            weight_h2: 0.10,
            weight_h3: 0.12,
            weight_h4: 0.08,
            weight_name_entry: 0.12,
            weight_curly: 0.06,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn weight(&self, c: LayoutClass) -> f64 {
        match c {
            LayoutClass::Paragraph => self.weight_paragraph,
            LayoutClass::BigParagraph => self.weight_big_paragraph,
            LayoutClass::H1 => self.weight_h1,
            LayoutClass::H2 => self.weight_h2,
            LayoutClass::H3 => self.weight_h3,
            LayoutClass::H4 => self.weight_h4,
            LayoutClass::NameEntry => self.weight_name_entry,
            LayoutClass::Curly => self.weight_curly,
        }
    }

    pub fn set_weight(&mut self, c: LayoutClass, w: f64) {
        let slot = match c {
            LayoutClass::Paragraph => &mut self.weight_paragraph,
            LayoutClass::BigParagraph => &mut self.weight_big_paragraph,
            LayoutClass::H1 => &mut self.weight_h1,
            LayoutClass::H2 => &mut self.weight_h2,
            LayoutClass::H3 => &mut self.weight_h3,
            LayoutClass::H4 => &mut self.weight_h4,
            LayoutClass::NameEntry => &mut self.weight_name_entry,
            LayoutClass::Curly => &mut self.weight_curly,
        };
        *slot = w;
    }

    /// Config drawing only the given class.
    pub fn only(mut self, c: LayoutClass) -> Self {
        for k in LayoutClass::ALL {
            self.set_weight(k, if k == c { 1.0 } else { 0.0 });
        }
        self
    }

    pub fn text_width(&self) -> u32 {
        self.page_width.saturating_sub(2 * self.margin)
    }

    pub fn column_width(&self) -> u32 {
        let n = self.column_count.max(1);
        self.text_width().saturating_sub((n - 1) * self.column_gap) / n
    }

    pub fn element_gap(&self) -> u32 {
        (self.element_spacing * self.text_size as f64).round() as u32
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=4).contains(&self.column_count) {
            return bad(format!(
                "column_count must be 1..=4, got {}",
                self.column_count
            ));
        }
        if self.page_width <= 2 * self.margin || self.page_height <= 2 * self.margin {
            return bad("margins leave no text area".into());
        }
        if !(self.h1_size > self.h2_size && self.h2_size > self.text_size) {
            return bad(format!(
                "font sizes must satisfy h1 > h2 > text, got {} / {} / {}",
                self.h1_size, self.h2_size, self.text_size
            ));
        }
        if self.text_size < 8 {
            return bad("text_size must be at least 8".into());
        }
        if !(self.line_spacing >= 1.0 && self.line_spacing.is_finite()) {
            return bad("line_spacing must be at least 1".into());
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return bad("element_spacing must be positive".into());
        }
        if !(self.curly_member_fraction > 0.2 && self.curly_member_fraction < 0.9) {
            return bad("curly_member_fraction must lie in (0.2, 0.9)".into());
        }
        let weights: Vec<f64> = LayoutClass::ALL.iter().map(|&c| self.weight(c)).collect();
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("class weights must be finite and nonnegative".into());
        }
        if weights.iter().all(|&w| w == 0.0) {
            return bad("class weights are all zero".into());
        }
        // the narrowest line must hold a few characters of every heading size
        let inner = self.column_width() as i64 - 4 - self.hanging_indent as i64;
        if inner < 6 * self.h2_size as i64 {
            return bad(format!(
                "a {}-px column cannot hold one line at the configured fonts",
                self.column_width()
            ));
        }
        if (self.text_width() as i64) < 8 * self.h1_size as i64 {
            return bad("text width cannot hold one H1 line".into());
        }
        let usable = self.page_height as i64 - 2 * self.margin as i64;
        if usable < 6 * self.h1_size as i64 {
            return bad("page too short for the configured fonts".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let cfg: SynthConfig = serde_json::from_str(&text)?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }
}
