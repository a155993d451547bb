//! Text pools and the per-class text sampler.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::{FontStyle, SymbolMap};
use crate::corpus::LayoutClass;

const SURNAMES: &[&str] = &[
    "Müller",
    "Gruber",
    "Huber",
    "Wagner",
    "Pichler",
    "Moser",
    "Steiner",
    "Mayer",
    "Hofer",
    "Leitner",
    "Berger",
    "Fuchs",
    "Eder",
    "Fischer",
    "Schmid",
    "Winkler",
    "Weber",
    "Schwarz",
    "Maier",
    "Schneider",
    "Reiter",
    "Mayr",
    "Wimmer",
    "Egger",
    "Brunner",
    "Lang",
    "Baumgartner",
    "Auer",
    "Binder",
    "Lechner",
    "Wolf",
    "Wallner",
    "Aigner",
    "Ebner",
    "Koller",
    "Lehner",
    "Haas",
    "Schuster",
    "Kovács",
    "Nagy",
    "Tóth",
    "Szabó",
    "Horváth",
    "Varga",
    "Kiss",
    "Molnár",
    "Németh",
    "Farkas",
    "Balogh",
    "Papp",
    "Takács",
    "Juhász",
    "Meier",
    "Keller",
    "Frei",
    "Gerber",
    "Widmer",
    "Baumann",
    "Graf",
    "Hartmann",
    "Schulz",
    "Becker",
    "Hoffmann",
    "Koch",
    "Richter",
    "Klein",
    "Neumann",
    "Krüger",
    "Braun",
    "Schäfer",
    "Bauer",
    "Krause",
    "Lorenz",
    "Seidl",
    "Pröll",
    "Kollár",
    "Zichy",
    "Auersperg",
    "Thun",
    "Khevenhüller",
    "Kinsky",
    "Pálffy",
    "Erdődy",
];

const FORENAMES: &[&str] = &[
    "Franz",
    "Josef",
    "Karl",
    "Johann",
    "Anton",
    "Ferdinand",
    "Ludwig",
    "Rudolf",
    "Friedrich",
    "Heinrich",
    "Leopold",
    "Alois",
    "Ignaz",
    "Wenzel",
    "Ernst",
    "Otto",
    "Emil",
    "Alexander",
    "Eduard",
    "Julius",
    "Viktor",
    "Hermann",
    "Gustav",
    "Max",
    "Stefan",
    "Béla",
    "László",
    "Ferenc",
    "István",
    "János",
    "Gyula",
    "Sándor",
    "Konrad",
    "Ulrich",
    "Walter",
    "Georg",
    "Wilhelm",
    "Adolf",
    "Moritz",
    "Theodor",
    "Albert",
    "Hugo",
];

const ABBREVIATIONS: &[&str] = &[
    "k. k. Kämmerer",
    "Dr. d. Rechte",
    "Ritt. d. Leop.-O.",
    "Bes. d. gold. Verd.-Kr. m. d. Kr.",
    "Comth. d. Franz Jos.-O.",
    "Inh. d. Kriegsmed.",
    "Geh. Rat",
    "Hofrat",
    "Statthaltereirat",
    "Ministerialrat",
    "Sektionschef",
    "Oberlandesgerichtsrat",
    "Bezirkshauptmann",
    "Landesschulinsp.",
    "Oberbaurat",
    "Kanzleidir.",
    "Rechnungsrat",
    "Finanzrat",
    "Hofsekr.",
    "Konzipist",
    "Offizial",
    "Adjunkt",
    "Kanzlist",
    "Praktikant",
    "Ehrenbürger v. Wien",
    "Mitgl. d. Herrenh.",
    "Abg. z. Reichsrat",
    "Ritt. d. Eis. Kr.-O. III. Kl.",
    "Bes. d. Mil.-Jub.-Med.",
    "Prof. a. d. Univ.",
    "Dir. d. Staatsgymn.",
    "tit. Oberst",
    "Hauptm. i. R.",
    "Rittm. d. Res.",
    "Oberkomm.",
    "Ob.-Ingen.",
    "Bauadj.",
    "Steuerinsp.",
    "Forstrat",
    "Notar",
    "Postoffiz.",
    "Landesger.-R.",
    "Staatsanw.-Subst.",
    "Ritt. d. Franz Jos.-O.",
    "Offiz. d. Franz Jos.-O.",
    "Bes. d. Ehrenz. f. Kunst u. Wiss.",
];

const ORDER_NAMES: &[&str] = &[
    "Militär-Maria-Theresien-Orden",
    "Königl. Ungar. St. Stephans-Orden",
    "Leopold-Orden",
    "Orden der Eisernen Krone",
    "Franz Joseph-Orden",
    "Elisabeth-Orden",
    "Orden vom Goldenen Vliese",
    "Sternkreuz-Orden",
    "Ehrenzeichen für Kunst und Wissenschaft",
    "Militär-Verdienstkreuz",
    "Goldenes Verdienstkreuz",
    "Kriegsmedaille",
    "Jubiläums-Erinnerungsmedaille",
    "Ehrenzeichen vom Roten Kreuze",
    "Elisabeth-Theresien-Stiftung",
];

const MUNICIPALITIES: &[&str] = &[
    "Wien",
    "Graz",
    "Linz",
    "Salzburg",
    "Innsbruck",
    "Klagenfurt",
    "Laibach",
    "Triest",
    "Görz",
    "Brünn",
    "Troppau",
    "Prag",
    "Lemberg",
    "Krakau",
    "Czernowitz",
    "Zara",
    "Bregenz",
    "Steyr",
    "Wels",
    "Leoben",
    "Villach",
    "Marburg",
    "Cilli",
    "Pettau",
    "Budweis",
    "Pilsen",
    "Olmütz",
    "Iglau",
    "Rovereto",
    "Trient",
    "Bozen",
    "Meran",
    "Baden",
    "Mödling",
    "Krems",
    "Gmunden",
    "Ischl",
    "St. Pölten",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPools {
    pub surnames: Vec<String>,
    pub forenames: Vec<String>,
    pub abbreviations: Vec<String>,
    pub order_names: Vec<String>,
    pub municipality_names: Vec<String>,
    pub years: RangeInclusive<u32>,
}

impl Default for TextPools {
    fn default() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        TextPools {
            surnames: own(SURNAMES),
            forenames: own(FORENAMES),
            abbreviations: own(ABBREVIATIONS),
            order_names: own(ORDER_NAMES),
            municipality_names: own(MUNICIPALITIES),
            years: 1848..=1918,
        }
    }
}

impl TextPools {
    pub fn validate(&self) -> Result<(), String> {
        let lists = [
            ("surnames", &self.surnames),
            ("forenames", &self.forenames),
            ("abbreviations", &self.abbreviations),
            ("order_names", &self.order_names),
            ("municipality_names", &self.municipality_names),
        ];
        for (name, list) in lists {
            if list.is_empty() || list.iter().any(|s| s.trim().is_empty()) {
                return Err(format!(
                    "text pool '{name}' is empty or holds empty strings"
                ));
            }
        }
        if self.years.is_empty() {
            return Err("year range is empty".into());
        }
        Ok(())
    }

    /// Every character the pools, numbers and symbols can produce.
    pub fn charset(&self, symbols: &SymbolMap) -> BTreeSet<char> {
        let mut set: BTreeSet<char> = (' '..='~').collect();
        for list in [
            &self.surnames,
            &self.forenames,
            &self.abbreviations,
            &self.order_names,
            &self.municipality_names,
        ] {
            for s in list {
                set.extend(s.chars());
            }
        }
        set.extend(symbols.symbols());
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRun {
    pub text: String,
    pub style: FontStyle,
}

/// Styled text of one element. `numbers` is set for name entries, whose
/// page references are right-aligned apart from the name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StyledText {
    pub runs: Vec<TextRun>,
    pub numbers: Option<String>,
}

impl StyledText {
    pub fn plain(&self) -> String {
        let mut s: String = self.runs.iter().map(|r| r.text.as_str()).collect();
        if let Some(n) = &self.numbers {
            s.push(' ');
            s.push_str(n);
        }
        s
    }

    fn run(text: impl Into<String>, style: FontStyle) -> TextRun {
        TextRun {
            text: text.into(),
            style,
        }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [String]) -> &'a str {
    xs.choose(rng).map(String::as_str).unwrap_or("")
}

/// Upper bound on abbreviation fragments in a paragraph.
pub const MAX_FRAGMENTS: usize = 6;

/// Bold surname (and sometimes a forename) followed by 1 to
/// `max_fragments` abbreviation fragments and a closing period.
pub fn sample_entry<R: Rng>(
    pools: &TextPools,
    symbols: &SymbolMap,
    max_fragments: usize,
    rng: &mut R,
) -> StyledText {
    let mut bold = pick(rng, &pools.surnames).to_string();
    if rng.random_bool(0.5) {
        bold.push(' ');
        bold.push_str(pick(rng, &pools.forenames));
    }
    let mut rest = String::from(",");
    if !symbols.is_empty() && rng.random_bool(0.3) {
        let syms: Vec<char> = symbols.symbols().collect();
        rest.push(' ');
        rest.push(*syms.choose(rng).expect("nonempty"));
    }
    let n = rng.random_range(1..=max_fragments.max(1));
    for i in 0..n {
        rest.push_str(if i == 0 { " " } else { ", " });
        rest.push_str(pick(rng, &pools.abbreviations));
    }
    if !rest.ends_with('.') {
        rest.push('.');
    }
    StyledText {
        runs: vec![
            StyledText::run(bold, FontStyle::Bold),
            StyledText::run(rest, FontStyle::Regular),
        ],
        numbers: None,
    }
}

/// Samples styled text for one element of the given class. Curly has no
/// text of its own and yields an empty value.
pub fn sample_text<R: Rng>(
    pools: &TextPools,
    symbols: &SymbolMap,
    kind: LayoutClass,
    rng: &mut R,
) -> StyledText {
    match kind {
        LayoutClass::Paragraph | LayoutClass::BigParagraph => {
            sample_entry(pools, symbols, MAX_FRAGMENTS, rng)
        }
        LayoutClass::H1 => StyledText {
            runs: vec![StyledText::run(
                pick(rng, &pools.order_names),
                FontStyle::Bold,
            )],
            numbers: None,
        },
        LayoutClass::H2 => {
            let year = rng.random_range(pools.years.clone());
            let place = pick(rng, &pools.municipality_names);
            let text = if rng.random_bool(0.5) {
                format!("{place} {year}")
            } else {
                format!("{year} {place}")
            };
            StyledText {
                runs: vec![StyledText::run(text, FontStyle::Bold)],
                numbers: None,
            }
        }
        LayoutClass::H3 => StyledText {
            runs: vec![StyledText::run(
                pick(rng, &pools.municipality_names),
                FontStyle::Regular,
            )],
            numbers: None,
        },
        LayoutClass::H4 => {
            let inner = if rng.random_bool(0.5) {
                pick(rng, &pools.municipality_names).to_string()
            } else {
                pick(rng, &pools.abbreviations).to_string()
            };
            StyledText {
                runs: vec![StyledText::run(format!("({inner})"), FontStyle::Italic)],
                numbers: None,
            }
        }
        LayoutClass::NameEntry => {
            let surname = pick(rng, &pools.surnames).to_string();
            let forename = pick(rng, &pools.forenames);
            let refs: Vec<String> = (0..rng.random_range(1..=3))
                .map(|_| rng.random_range(1..=1200u32).to_string())
                .collect();
            StyledText {
                runs: vec![
                    StyledText::run(surname, FontStyle::Bold),
                    StyledText::run(format!(" {forename}"), FontStyle::Regular),
                ],
                numbers: Some(refs.join(", ")),
            }
        }
        LayoutClass::Curly => StyledText::default(),
    }
}
