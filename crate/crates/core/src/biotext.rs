//! Biography rendering from sentence templates.
//!
//! A bio is an optional opening sentence followed by one sentence per
//! attribute, in the fixed order of [`PersonProfile::attributes`]. The
//! template bank is data (`data/templates.json`); code only substitutes the
//! `{name}`, `{value}` and `{antecedent}` placeholders.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Attribute, PersonProfile};
use crate::error::{Error, Result};

const BUILTIN_TEMPLATES: &str = include_str!("../data/templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Standard,
    Paraphrase,
    Pronoun,
}

impl Style {
    pub const ALL: [Style; 3] = [Style::Standard, Style::Paraphrase, Style::Pronoun];

    pub fn key(self) -> &'static str {
        match self {
            Style::Standard => "standard",
            Style::Paraphrase => "paraphrase",
            Style::Pronoun => "pronoun",
        }
    }
}

/// Sentence templates keyed by style and attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateBank {
    pub opening: BTreeMap<Style, Vec<String>>,
    pub standard: BTreeMap<Attribute, Vec<String>>,
    pub paraphrase: BTreeMap<Attribute, Vec<String>>,
    pub pronoun: BTreeMap<Attribute, Vec<String>>,
    /// "same as" sentences used to chain a bio to an earlier person.
    pub link: BTreeMap<Attribute, Vec<String>>,
}

impl TemplateBank {
    pub fn builtin() -> TemplateBank {
        TemplateBank::from_json_str(BUILTIN_TEMPLATES).expect("shipped templates are valid")
    }

    pub fn from_json_str(text: &str) -> Result<TemplateBank> {
        let bank: TemplateBank = serde_json::from_str(text)?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TemplateBank> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TemplateBank::from_json_str(&text)
    }

    pub fn sentences(&self, style: Style) -> &BTreeMap<Attribute, Vec<String>> {
        match style {
            Style::Standard => &self.standard,
            Style::Paraphrase => &self.paraphrase,
            Style::Pronoun => &self.pronoun,
        }
    }

    pub fn variants(&self, style: Style, attribute: Attribute) -> Result<&[String]> {
        self.sentences(style)
            .get(&attribute)
            .filter(|v| !v.is_empty())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingTemplate {
                attribute: attribute.key().into(),
                style: style.key().into(),
            })
    }

    pub fn openings(&self, style: Style) -> &[String] {
        self.opening.get(&style).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn link_variants(&self, attribute: Attribute) -> Result<&[String]> {
        self.link
            .get(&attribute)
            .filter(|v| !v.is_empty())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingTemplate {
                attribute: attribute.key().into(),
                style: "link".into(),
            })
    }

    fn validate(&self) -> Result<()> {
        for style in Style::ALL {
            for (attr, variants) in self.sentences(style) {
                for t in variants {
                    let name_rule = match style {
                        Style::Pronoun => Count::Zero,
                        _ => Count::AtLeastOne,
                    };
                    check_placeholders(t, name_rule, Count::Exactly(1), Count::Zero)?;
                    if t.trim().is_empty() {
                        return Err(mismatch(t, format!("empty {attr} template")));
                    }
                }
            }
            for t in self.openings(style) {
                if t.is_empty() {
                    continue;
                }
                check_placeholders(t, Count::AtLeastOne, Count::Zero, Count::Zero)?;
            }
        }
        for variants in self.link.values() {
            for t in variants {
                check_placeholders(t, Count::AtLeastOne, Count::Zero, Count::Exactly(1))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Count {
    Zero,
    Exactly(usize),
    AtLeastOne,
}

impl Count {
    fn admits(self, n: usize) -> bool {
        match self {
            Count::Zero => n == 0,
            Count::Exactly(k) => n == k,
            Count::AtLeastOne => n >= 1,
        }
    }
}

fn mismatch(template: &str, reason: String) -> Error {
    Error::PlaceholderMismatch {
        template: template.into(),
        reason,
    }
}

fn check_placeholders(t: &str, name: Count, value: Count, antecedent: Count) -> Result<()> {
    let stripped = t
        .replace("{name}", "")
        .replace("{value}", "")
        .replace("{antecedent}", "");
    if stripped.contains('{') || stripped.contains('}') {
        return Err(mismatch(t, "unknown placeholder".into()));
    }
    for (ph, rule) in [("{name}", name), ("{value}", value), ("{antecedent}", antecedent)] {
        let n = t.matches(ph).count();
        if !rule.admits(n) {
            return Err(mismatch(t, format!("{ph} occurs {n} times")));
        }
    }
    Ok(())
}

/// Cross-person reference installed by [`link_attribute`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub attribute: Attribute,
    pub antecedent: String,
}

/// Template variant picked for one attribute sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceChoice {
    pub attribute: Attribute,
    pub variant: usize,
}

/// A rendered biography.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioRecord {
    pub profile: PersonProfile,
    pub style: Style,
    pub text: String,
    /// Byte range of each attribute sentence within `text`.
    pub spans: BTreeMap<Attribute, (usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
    pub opening: Option<usize>,
    pub sentences: Vec<SentenceChoice>,
}

impl BioRecord {
    pub fn name(&self) -> String {
        self.profile.full_name()
    }

    pub fn sentence(&self, attribute: Attribute) -> Option<&str> {
        self.spans.get(&attribute).map(|&(s, e)| &self.text[s..e])
    }

    /// Re-render `text` and `spans` from the profile and recorded choices.
    pub fn rerender(&mut self, bank: &TemplateBank) -> Result<()> {
        let name = self.profile.full_name();
        let mut text = String::new();
        if let Some(i) = self.opening {
            let t = bank
                .openings(self.style)
                .get(i)
                .ok_or_else(|| missing_variant("opening", self.style))?;
            text.push_str(&t.replace("{name}", &name));
        }
        let mut spans = BTreeMap::new();
        for choice in &self.sentences {
            let sentence = match &self.link {
                Some(link) if link.attribute == choice.attribute => {
                    let t = bank
                        .link_variants(choice.attribute)?
                        .get(choice.variant)
                        .ok_or_else(|| missing_variant(choice.attribute.key(), self.style))?;
                    t.replace("{name}", &name).replace("{antecedent}", &link.antecedent)
                }
                _ => {
                    let t = bank
                        .variants(self.style, choice.attribute)?
                        .get(choice.variant)
                        .ok_or_else(|| missing_variant(choice.attribute.key(), self.style))?;
                    let value = self
                        .profile
                        .value(choice.attribute)
                        .ok_or(Error::AttributeAbsent(choice.attribute))?;
                    t.replace("{name}", &name).replace("{value}", &value)
                }
            };
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(&sentence);
            spans.insert(choice.attribute, (start, text.len()));
        }
        self.text = text;
        self.spans = spans;
        Ok(())
    }
}

fn missing_variant(attribute: &str, style: Style) -> Error {
    Error::MissingTemplate {
        attribute: attribute.into(),
        style: style.key().into(),
    }
}

/// Render `profile` in `style`.
///
/// Standard style consumes no randomness (one template per attribute);
/// paraphrase and pronoun styles pick one variant per sentence uniformly.
pub fn render_bio<R: Rng + ?Sized>(
    profile: &PersonProfile,
    style: Style,
    bank: &TemplateBank,
    rng: &mut R,
) -> Result<BioRecord> {
    let openings = bank.openings(style);
    let opening = match openings.len() {
        0 => None,
        1 if openings[0].is_empty() => None,
        1 => Some(0),
        n => Some(rng.random_range(0..n)),
    };
    let mut sentences = Vec::with_capacity(6);
    for attribute in profile.attributes() {
        let n = bank.variants(style, attribute)?.len();
        let variant = if n == 1 { 0 } else { rng.random_range(0..n) };
        sentences.push(SentenceChoice { attribute, variant });
    }
    let mut bio = BioRecord {
        profile: profile.clone(),
        style,
        text: String::new(),
        spans: BTreeMap::new(),
        link: None,
        opening,
        sentences,
    };
    bio.rerender(bank)?;
    if bio.text.contains('{') {
        return Err(mismatch(&bio.text, "unresolved placeholder after rendering".into()));
    }
    Ok(bio)
}

/// Drop the sentence stating `attribute`.
pub fn strip_attribute(bio: &BioRecord, attribute: Attribute, bank: &TemplateBank) -> Result<BioRecord> {
    let pos = bio
        .sentences
        .iter()
        .position(|c| c.attribute == attribute)
        .ok_or(Error::AttributeAbsent(attribute))?;
    let mut out = bio.clone();
    out.sentences.remove(pos);
    if out.link.as_ref().is_some_and(|l| l.attribute == attribute) {
        out.link = None;
    }
    out.rerender(bank)?;
    Ok(out)
}

/// Replace the `attribute` sentence with a reference to `antecedent`.
///
/// Only the referencing bio changes; the antecedent's own bio is untouched.
pub fn link_attribute(
    bio: &BioRecord,
    attribute: Attribute,
    antecedent: &str,
    bank: &TemplateBank,
) -> Result<BioRecord> {
    if antecedent == bio.name() {
        return Err(Error::SelfReference(antecedent.into()));
    }
    let pos = bio
        .sentences
        .iter()
        .position(|c| c.attribute == attribute)
        .ok_or(Error::AttributeAbsent(attribute))?;
    let variants = bank.link_variants(attribute)?;
    let mut out = bio.clone();
    // Link sentences have their own variant list; keep the choice in range.
    out.sentences[pos].variant %= variants.len();
    out.link = Some(Link {
        attribute,
        antecedent: antecedent.into(),
    });
    out.rerender(bank)?;
    Ok(out)
}
