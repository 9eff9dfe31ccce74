//! Programmatic readers used as offline responders.
//!
//! The oracle answers from the rendered context text alone: it splits the
//! context into segments, finds the segment naming a person and inverts the
//! sentence templates to read attribute values back out. It never looks at
//! the gold answer or the structured profiles.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use regex::Regex;

use crate::biotext::{Style, TemplateBank};
use crate::contextforge::SEPARATOR;
use crate::corpus::{sample_value, Attribute, AttributePool};
use crate::rng::substream;
use crate::scorekit::REFUSAL;
use crate::taskgen::{category_label, initial, Gold, TaskInstance, TaskKind};

static RETRIEVAL_Q: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^What is the (.+?) of (.+)\?$").expect("valid"));
static CALC_Q: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"between (.+) and (.+)\?$").expect("valid"));
static RANK_Q: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"youngest to oldest: (.+)\.$").expect("valid"));
static TWODIFF_Q: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d+) years age difference").expect("valid"));
static ICL_Q: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Which category of university did (.+) graduate from\?").expect("valid"));
static ICL_DEMO: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"Question: Which category of university did (.+) graduate from\? Answer: Category (\d+)")
        .expect("valid")
});
static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^Bio \[(\d+)\]: ").expect("valid"));

const NAME_GROUP: &str = r"((?:\S+ ){2}\S+)";
const VALUE_GROUP: &str = r"([^.]+?)";

/// Canned output of the gibberish responder.
pub const GIBBERISH: &str = "Blorp zindle quastro vemmick; the trellis hums in marmalade.";

/// Turn a sentence template into a regex. `name` replaces `{name}` (or a
/// three-word capture when `None`); `{value}` and `{antecedent}` capture.
fn template_regex(template: &str, name: Option<&str>) -> Regex {
    let mut pattern = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        pattern.push_str(&regex::escape(&rest[..open]));
        let Some(close) = rest[open..].find('}') else {
            pattern.push_str(&regex::escape(&rest[open..]));
            rest = "";
            break;
        };
        match &rest[open + 1..open + close] {
            "name" => match name {
                Some(n) => pattern.push_str(&regex::escape(n)),
                None => pattern.push_str(NAME_GROUP),
            },
            "value" => pattern.push_str(VALUE_GROUP),
            "antecedent" => pattern.push_str(r"(.+?)"),
            other => pattern.push_str(&regex::escape(&format!("{{{other}}}"))),
        }
        rest = &rest[open + close + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    Regex::new(&pattern).expect("escaped template is a valid regex")
}

fn mentions(segment: &str, name: &str) -> bool {
    let mut from = 0;
    while let Some(off) = segment[from..].find(name) {
        let s = from + off;
        let e = s + name.len();
        let before = segment[..s].chars().next_back();
        let after = segment[e..].chars().next();
        if !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric) {
            return true;
        }
        from = e;
    }
    false
}

/// Reads answers from context text.
#[derive(Debug, Clone)]
pub struct Oracle {
    sentences: BTreeMap<Attribute, Vec<String>>,
    links: BTreeMap<Attribute, Vec<String>>,
}

impl Oracle {
    pub fn new(bank: &TemplateBank) -> Oracle {
        let mut sentences: BTreeMap<Attribute, Vec<String>> = BTreeMap::new();
        for style in [Style::Standard, Style::Paraphrase, Style::Pronoun] {
            for (attr, list) in bank.sentences(style) {
                sentences.entry(*attr).or_default().extend(list.iter().cloned());
            }
        }
        Oracle {
            sentences,
            links: bank.link.clone(),
        }
    }

    fn segments(text: &str) -> impl Iterator<Item = (Option<usize>, &str)> {
        text.split(SEPARATOR).map(|seg| match NUMBERED.captures(seg) {
            Some(c) => (c[1].parse().ok(), &seg[c[0].len()..]),
            None => (None, seg),
        })
    }

    /// Value of `attribute` for `name` and the citation number of its segment.
    pub fn lookup(&self, text: &str, name: &str, attribute: Attribute) -> Option<(String, Option<usize>)> {
        self.lookup_depth(text, name, attribute, 0)
    }

    fn lookup_depth(
        &self,
        text: &str,
        name: &str,
        attribute: Attribute,
        depth: usize,
    ) -> Option<(String, Option<usize>)> {
        if depth > 4 {
            return None;
        }
        let patterns: Vec<Regex> = self
            .sentences
            .get(&attribute)
            .map(|ts| ts.iter().map(|t| template_regex(t, Some(name))).collect())
            .unwrap_or_default();
        let links: Vec<Regex> = self
            .links
            .get(&attribute)
            .map(|ts| ts.iter().map(|t| template_regex(t, Some(name))).collect())
            .unwrap_or_default();
        for (number, seg) in Self::segments(text) {
            if !mentions(seg, name) {
                continue;
            }
            for re in &links {
                if let Some(c) = re.captures(seg) {
                    let antecedent = c[1].to_string();
                    if let Some((v, _)) = self.lookup_depth(text, &antecedent, attribute, depth + 1) {
                        return Some((v, number));
                    }
                }
            }
            for re in &patterns {
                if let Some(c) = re.captures(seg) {
                    return Some((c[1].trim().to_string(), number));
                }
            }
        }
        None
    }

    fn age(&self, text: &str, name: &str) -> Option<u32> {
        self.lookup(text, name, Attribute::Age)?.0.parse().ok()
    }

    /// Every `(name, age)` stated in the text.
    pub fn all_ages(&self, text: &str) -> Vec<(String, u32)> {
        let patterns: Vec<Regex> = self
            .sentences
            .get(&Attribute::Age)
            .map(|ts| {
                ts.iter()
                    .filter(|t| t.contains("{name}"))
                    .map(|t| template_regex(t, None))
                    .collect()
            })
            .unwrap_or_default();
        let mut out: Vec<(String, u32)> = Vec::new();
        for (_, seg) in Self::segments(text) {
            for re in &patterns {
                for c in re.captures_iter(seg) {
                    // The name group precedes the value group in every age template.
                    let (n, v) = if re.as_str().find(NAME_GROUP) < re.as_str().find(VALUE_GROUP) {
                        (&c[1], &c[2])
                    } else {
                        (&c[2], &c[1])
                    };
                    if let Ok(age) = v.parse() {
                        if !out.iter().any(|(m, _)| m == n) {
                            out.push((n.to_string(), age));
                        }
                    }
                }
            }
        }
        out
    }

    fn attribute_for_label(label: &str) -> Option<Attribute> {
        Attribute::ALL.iter().copied().find(|a| a.label() == label)
    }

    fn retrieval_line(&self, text: &str, question: &str, cite: bool) -> Option<String> {
        let c = RETRIEVAL_Q.captures(question)?;
        let label = &c[1];
        let name = &c[2];
        let attr = Self::attribute_for_label(label)?;
        let (value, number) = self.lookup(text, name, attr)?;
        Some(match (cite, number) {
            (true, Some(k)) => format!("the {label} of {name} is {value} [{k}]."),
            _ => format!("the {label} of {name} is {value}."),
        })
    }

    /// Answer `instance` from its context text.
    pub fn respond(&self, instance: &TaskInstance) -> String {
        let text = &instance.context.text;
        let q = instance.questions.first().map(String::as_str).unwrap_or("");
        match instance.kind {
            TaskKind::Standard | TaskKind::Paraphrase | TaskKind::Pronoun | TaskKind::Multihop => self
                .retrieval_line(text, q, false)
                .unwrap_or_else(|| format!("{REFUSAL}.")),
            TaskKind::Idk => match self.retrieval_line(text, q, false) {
                Some(line) => line,
                None => format!("{REFUSAL}."),
            },
            TaskKind::MultiStandard | TaskKind::Citation => {
                let cite = instance.kind == TaskKind::Citation;
                instance
                    .questions
                    .iter()
                    .map(|q| {
                        self.retrieval_line(text, q, cite)
                            .unwrap_or_else(|| format!("{REFUSAL}."))
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            TaskKind::Calculation => CALC_Q
                .captures(q)
                .and_then(|c| Some(self.age(text, &c[1])?.abs_diff(self.age(text, &c[2])?)))
                .map_or_else(|| format!("{REFUSAL}."), |d| format!("The answer is {d}.")),
            TaskKind::Rank => {
                let Some(c) = RANK_Q.captures(q) else {
                    return format!("{REFUSAL}.");
                };
                let mut aged: Vec<(u32, String)> = Vec::new();
                for name in c[1].split(", ") {
                    match self.age(text, name) {
                        Some(a) => aged.push((a, name.to_string())),
                        None => return format!("{REFUSAL}."),
                    }
                }
                aged.sort();
                let names: Vec<String> = aged.into_iter().map(|(_, n)| n).collect();
                format!("The answer is {}.", names.join(", "))
            }
            TaskKind::Twodiff => {
                let Some(target) = TWODIFF_Q.captures(q).and_then(|c| c[1].parse::<u32>().ok()) else {
                    return format!("{REFUSAL}.");
                };
                let ages = self.all_ages(text);
                for (i, (a, x)) in ages.iter().enumerate() {
                    for (b, y) in &ages[i + 1..] {
                        if x.abs_diff(*y) == target {
                            return format!("The answer is {a} and {b}.");
                        }
                    }
                }
                format!("{REFUSAL}.")
            }
            TaskKind::Icl => self.icl(text, q).unwrap_or_else(|| "Answer: Category 0".into()),
        }
    }

    fn icl(&self, text: &str, question: &str) -> Option<String> {
        let query = ICL_Q.captures(question)?[1].to_string();
        let mut by_initial: BTreeMap<char, String> = BTreeMap::new();
        for c in ICL_DEMO.captures_iter(text) {
            if c[1] == query {
                continue;
            }
            if let Some((uni, _)) = self.lookup(text, &c[1], Attribute::University) {
                if let Some(i) = initial(&uni) {
                    by_initial.insert(i, c[2].to_string());
                }
            }
        }
        let (uni, _) = self.lookup(text, &query, Attribute::University)?;
        let k = by_initial.get(&initial(&uni)?)?;
        Some(format!("Answer: Category {k}"))
    }
}

/// Offline responder flavours.
#[derive(Debug, Clone)]
pub enum Responder {
    Oracle(Oracle),
    /// Plausible but uninformed answers, reproducible per instance id.
    Random {
        pool: AttributePool,
        seed: u64,
    },
    Gibberish,
}

impl Responder {
    pub fn parse(kind: &str, bank: &TemplateBank, pool: &AttributePool, seed: u64) -> Option<Responder> {
        match kind {
            "oracle" => Some(Responder::Oracle(Oracle::new(bank))),
            "random" => Some(Responder::Random {
                pool: pool.clone(),
                seed,
            }),
            "gibberish" => Some(Responder::Gibberish),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Responder::Oracle(_) => "oracle",
            Responder::Random { .. } => "random",
            Responder::Gibberish => "gibberish",
        }
    }

    pub fn respond(&self, instance: &TaskInstance) -> String {
        match self {
            Responder::Oracle(o) => o.respond(instance),
            Responder::Gibberish => GIBBERISH.to_string(),
            Responder::Random { pool, seed } => random_response(pool, *seed, instance),
        }
    }
}

fn random_response(pool: &AttributePool, seed: u64, instance: &TaskInstance) -> String {
    let mut rng = substream(seed, &["random-responder", &instance.id]);
    let roster = instance.roster();
    let mut guess = |attr: Attribute| -> String {
        match attr {
            Attribute::Age => rng.random_range(20..=70).to_string(),
            a => sample_value(pool, a, &mut rng).unwrap_or_default(),
        }
    };
    match &instance.gold {
        Gold::NameOrder { names } => {
            let mut shuffled = names.clone();
            shuffled.shuffle(&mut substream(seed, &["random-responder", &instance.id, "order"]));
            format!("The answer is {}.", shuffled.join(", "))
        }
        Gold::AgeDifference { .. } => {
            let mut r = substream(seed, &["random-responder", &instance.id, "pair"]);
            let picks: Vec<&String> = roster.choose_multiple(&mut r, 2).collect();
            match picks.as_slice() {
                [a, b] => format!("The answer is {a} and {b}."),
                _ => format!("{REFUSAL}."),
            }
        }
        Gold::Category { .. } => {
            let mut r = substream(seed, &["random-responder", &instance.id, "category"]);
            format!("Answer: {}", category_label(r.random_range(1..=10)))
        }
        Gold::Citation { .. } => {
            let n = instance.context.bios.len().max(1);
            let mut r = substream(seed, &["random-responder", &instance.id, "cite"]);
            instance
                .meta
                .attributes
                .iter()
                .map(|&a| format!("{} [{}].", guess(a), r.random_range(1..=n)))
                .collect::<Vec<_>>()
                .join("\n")
        }
        _ if instance.kind == TaskKind::Calculation => {
            let mut r = substream(seed, &["random-responder", &instance.id, "diff"]);
            format!("The answer is {}.", r.random_range(0..=50))
        }
        _ => instance
            .meta
            .attributes
            .iter()
            .map(|&a| guess(a))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_inversion() {
        let re = template_regex(
            "The hobby of {name} is {value}, which takes up most of the free weekends.",
            Some("Ann Lee Fox"),
        );
        let c = re
            .captures("The hobby of Ann Lee Fox is urban sketching, which takes up most of the free weekends.")
            .unwrap();
        assert_eq!(&c[1], "urban sketching");
    }

    #[test]
    fn lookup_follows_links() {
        let oracle = Oracle::new(&TemplateBank::builtin());
        let text = "Ann Lee Fox was born in Santa Paula and spent the early years of childhood there with family.\n\nThe birthplace of Bo Kim Day is the same as Ann Lee Fox.";
        let (v, _) = oracle.lookup(text, "Bo Kim Day", Attribute::Birthplace).unwrap();
        assert_eq!(v, "Santa Paula");
    }

    #[test]
    fn numbered_segments_report_citation() {
        let oracle = Oracle::new(&TemplateBank::builtin());
        let text = "Bio [1]: Cy Ray Orr is 40 years old.\n\nBio [2]: Ann Lee Fox is 33 years old.";
        assert_eq!(
            oracle.lookup(text, "Ann Lee Fox", Attribute::Age),
            Some(("33".into(), Some(2)))
        );
        assert_eq!(oracle.all_ages(text).len(), 2);
    }

    #[test]
    fn mention_is_word_bounded() {
        assert!(mentions("Hi, I am Ann Lee Fox.", "Ann Lee Fox"));
        assert!(!mentions("Ann Lee Foxley is here", "Ann Lee Fox"));
    }
}
