use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use super::matcher::{pattern_slots, Binding, COUNT_WORDS, SIDE_WORDS};
use super::TaskCategory;
use crate::worldsim::{FloorPattern, Item, WallPainting};

/// Templates shipped with the crate.
pub const BUNDLED_TEMPLATES: &str = include_str!("../../data/templates.tsv");

/// Placeholder filled from a [`Binding`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Item,
    Floor,
    Floor2,
    Wall,
    Count,
    Side,
    First,
    Second,
}

impl Slot {
    pub const ALL: [Slot; 8] =
        [Slot::Item, Slot::Floor, Slot::Floor2, Slot::Wall, Slot::Count, Slot::Side, Slot::First, Slot::Second];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Item => "item",
            Slot::Floor => "floor",
            Slot::Floor2 => "floor2",
            Slot::Wall => "wall",
            Slot::Count => "count",
            Slot::Side => "side",
            Slot::First => "first",
            Slot::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Words a slot can expand to (empty for sub-instruction slots).
    fn value_words(self) -> Vec<&'static str> {
        match self {
            Slot::Item => Item::ALL.iter().map(|i| i.name()).collect(),
            Slot::Floor | Slot::Floor2 => FloorPattern::ALL.iter().map(|f| f.name()).collect(),
            Slot::Wall => WallPainting::ALL.iter().map(|w| w.name()).collect(),
            Slot::Count => COUNT_WORDS.to_vec(),
            Slot::Side => SIDE_WORDS.to_vec(),
            Slot::First | Slot::Second => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piece {
    Word(String),
    /// Alternatives, each a (possibly empty) word sequence.
    Choice(Vec<Vec<String>>),
    Slot(Slot),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub category: TaskCategory,
    pub pattern: String,
    pub text: String,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("slot {{{slot}}} is not bound for pattern {pattern}")]
    UnboundSlot { slot: &'static str, pattern: String },
    #[error("no templates for {category}/{pattern}")]
    Missing { category: TaskCategory, pattern: String },
}

impl Template {
    /// Parse one template string, checking its slots against the pattern's
    /// binding schema.
    pub fn parse(category: TaskCategory, pattern: &str, text: &str) -> Result<Self, String> {
        let schema = pattern_slots(category, pattern).ok_or_else(|| alloc::format!("unknown pattern {category}/{pattern}"))?;
        let mut pieces = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            if let Some(after) = rest.strip_prefix('{') {
                let close = after.find('}').ok_or("unclosed '{'")?;
                let body = &after[..close];
                if body.contains('{') {
                    return Err("nested groups are not supported".into());
                }
                let alts: Vec<Vec<String>> = body
                    .split('|')
                    .map(|a| a.split_whitespace().map(|w| w.to_lowercase()).collect())
                    .collect();
                if alts.len() == 1 {
                    let name = body.trim();
                    let slot = Slot::parse(name).ok_or_else(|| alloc::format!("unknown slot {{{name}}}"))?;
                    if !schema.contains(&slot) {
                        return Err(alloc::format!("slot {{{name}}} is not bound by pattern {pattern}"));
                    }
                    pieces.push(Piece::Slot(slot));
                } else {
                    pieces.push(Piece::Choice(alts));
                }
                rest = after[close + 1..].trim_start();
            } else {
                let end = rest.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(rest.len());
                let word = &rest[..end];
                if word.contains('}') {
                    return Err("unmatched '}'".into());
                }
                pieces.push(Piece::Word(word.to_lowercase()));
                rest = rest[end..].trim_start();
            }
        }
        if pieces.is_empty() {
            return Err("empty template".into());
        }
        Ok(Template { category, pattern: pattern.to_string(), text: text.trim().to_string(), pieces })
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(*s),
            _ => None,
        })
    }
}

/// Fill `template` from `binding`. Alternations are resolved uniformly at
/// random; `{first}`/`{second}` are realized from `set` using the binding's
/// parts.
pub fn realize<R: Rng + ?Sized>(
    template: &Template,
    binding: &Binding,
    set: &TemplateSet,
    rng: &mut R,
) -> Result<Vec<String>, TemplateError> {
    let mut out = Vec::new();
    for piece in &template.pieces {
        match piece {
            Piece::Word(w) => out.push(w.clone()),
            Piece::Choice(alts) => {
                let pick = &alts[rng.random_range(0..alts.len())];
                out.extend(pick.iter().cloned());
            }
            Piece::Slot(slot @ (Slot::First | Slot::Second)) => {
                let part = binding.parts.get(usize::from(*slot == Slot::Second)).ok_or_else(|| {
                    TemplateError::UnboundSlot { slot: slot.name(), pattern: binding.pattern.to_string() }
                })?;
                out.extend(set.realize(part, rng)?);
            }
            Piece::Slot(slot) => {
                let value = binding
                    .slot(*slot)
                    .ok_or_else(|| TemplateError::UnboundSlot { slot: slot.name(), pattern: binding.pattern.to_string() })?;
                out.extend(value.split_whitespace().map(|w| w.to_string()));
            }
        }
    }
    Ok(out)
}

/// Templates grouped by `(category, pattern)`.
#[derive(Clone, Debug, Default)]
pub struct TemplateSet {
    by_key: BTreeMap<(TaskCategory, String), Vec<Template>>,
}

impl TemplateSet {
    /// Parse the line-oriented format `category<TAB>pattern<TAB>template`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| TemplateError::Parse { line, message };
            let mut cols = raw.splitn(3, '\t');
            let (Some(cat), Some(pattern), Some(body)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected three tab-separated columns".into()));
            };
            let category =
                TaskCategory::parse(cat.trim()).ok_or_else(|| err(alloc::format!("unknown category {}", cat.trim())))?;
            let t = Template::parse(category, pattern.trim(), body).map_err(err)?;
            set.insert(t);
        }
        Ok(set)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TEMPLATES).expect("bundled templates are valid")
    }

    pub fn insert(&mut self, t: Template) {
        self.by_key.entry((t.category, t.pattern.clone())).or_default().push(t);
    }

    /// Add every template of `other`.
    pub fn extend(&mut self, other: TemplateSet) {
        for (_, ts) in other.by_key {
            for t in ts {
                self.insert(t);
            }
        }
    }

    pub fn get(&self, category: TaskCategory, pattern: &str) -> &[Template] {
        self.by_key.get(&(category, pattern.to_string())).map_or(&[], |v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Template> {
        self.by_key.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_key.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    pub fn count_for(&self, category: TaskCategory) -> usize {
        self.by_key.iter().filter(|((c, _), _)| *c == category).map(|(_, v)| v.len()).sum()
    }

    pub fn has_pattern(&self, category: TaskCategory, pattern: &str) -> bool {
        !self.get(category, pattern).is_empty()
    }

    /// Realize a binding with a uniformly chosen template of its pattern.
    pub fn realize<R: Rng + ?Sized>(&self, binding: &Binding, rng: &mut R) -> Result<Vec<String>, TemplateError> {
        let options = self.get(binding.category, binding.pattern);
        if options.is_empty() {
            return Err(TemplateError::Missing { category: binding.category, pattern: binding.pattern.to_string() });
        }
        let t = &options[rng.random_range(0..options.len())];
        realize(t, binding, self, rng)
    }

    /// Every token any template in the set can produce.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v = BTreeSet::new();
        for t in self.iter() {
            for p in &t.pieces {
                match p {
                    Piece::Word(w) => {
                        v.insert(w.clone());
                    }
                    Piece::Choice(alts) => v.extend(alts.iter().flatten().cloned()),
                    Piece::Slot(s) => v.extend(s.value_words().into_iter().map(|w| w.to_string())),
                }
            }
        }
        v
    }
}
