//! Chat prompts for benchmark instances.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{sample_name, sample_value, Attribute, AttributePool};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::taskgen::{
    calculation_question, rank_question, retrieval_question, twodiff_question, TaskInstance, TaskKind,
};

const BUILTIN_PROMPTS: &str = include_str!("../data/prompts.json");

/// Age range used inside exemplars.
const EXEMPLAR_AGES: (u32, u32) = (20, 70);
const EXEMPLAR_DRAWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
    pub assistant: String,
}

/// Templates keyed by template name (see [`template_key`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptTemplates(pub BTreeMap<String, PromptTemplate>);

impl PromptTemplates {
    pub fn builtin() -> PromptTemplates {
        PromptTemplates::from_json_str(BUILTIN_PROMPTS).expect("builtin prompts are valid")
    }

    pub fn from_json_str(text: &str) -> Result<PromptTemplates> {
        let t: PromptTemplates = serde_json::from_str(text)?;
        for (key, tpl) in &t.0 {
            for s in [&tpl.system, &tpl.user, &tpl.assistant] {
                for name in placeholders(s)? {
                    if !PLACEHOLDERS.contains(&name.as_str()) {
                        return Err(Error::PlaceholderMismatch {
                            template: key.clone(),
                            reason: format!("unknown placeholder {{{name}}}"),
                        });
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PromptTemplates> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PromptTemplates::from_json_str(&text)
    }

    pub fn get(&self, key: &str) -> Result<&PromptTemplate> {
        self.0.get(key).ok_or_else(|| Error::UnregisteredKind(key.into()))
    }
}

const PLACEHOLDERS: [&str; 4] = ["given_context", "question", "question_prefix", "examples"];

fn placeholders(template: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| Error::PlaceholderMismatch {
            template: template.chars().take(40).collect(),
            reason: "unclosed brace".into(),
        })?;
        out.push(after[..close].to_string());
        rest = &after[close + 1..];
    }
    Ok(out)
}

/// Substitute `{name}` placeholders in one pass; substituted text is never rescanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| Error::PlaceholderMismatch {
            template: template.chars().take(40).collect(),
            reason: "unclosed brace".into(),
        })?;
        let name = &after[..close];
        let value =
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::PlaceholderMismatch {
                    template: template.chars().take(40).collect(),
                    reason: format!("no value for {{{name}}}"),
                })?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Template used for an instance.
pub fn template_key(instance: &TaskInstance) -> &'static str {
    match instance.kind {
        TaskKind::Standard | TaskKind::Paraphrase | TaskKind::Pronoun => "standard",
        TaskKind::MultiStandard => "multi_standard",
        TaskKind::Calculation => "calculation",
        TaskKind::Rank => "rank",
        TaskKind::Multihop => "multihop",
        TaskKind::Twodiff => "twodiff",
        TaskKind::Citation if instance.questions.len() > 1 => "citation_multi",
        TaskKind::Citation => "citation",
        TaskKind::Idk => "idk",
        TaskKind::Icl => "icl",
    }
}

/// Exemplars per prompt: none for understanding, IDK and ICL; two otherwise.
pub fn shot_count(kind: TaskKind) -> usize {
    match kind {
        TaskKind::Calculation | TaskKind::Rank | TaskKind::Multihop | TaskKind::Twodiff | TaskKind::Citation => 2,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub id: String,
    pub kind: TaskKind,
    pub template: String,
    pub system: String,
    pub user: String,
    /// Possibly empty.
    pub assistant_prefix: String,
    /// Exemplar block embedded in `user`.
    pub examples: String,
    pub shots: usize,
}

pub struct PromptKit {
    pub templates: PromptTemplates,
    pub pool: AttributePool,
}

impl PromptKit {
    pub fn new(templates: PromptTemplates, pool: AttributePool) -> PromptKit {
        PromptKit { templates, pool }
    }

    pub fn builtin() -> PromptKit {
        PromptKit::new(PromptTemplates::builtin(), AttributePool::builtin())
    }

    /// Render the prompt for `instance`; exemplars are drawn from a stream
    /// keyed by `seed` and the instance id.
    pub fn build_prompt(&self, instance: &TaskInstance, seed: u64) -> Result<PromptBundle> {
        build_prompt(instance, &self.templates, &self.pool, seed)
    }
}

pub fn build_prompt(
    instance: &TaskInstance,
    templates: &PromptTemplates,
    pool: &AttributePool,
    seed: u64,
) -> Result<PromptBundle> {
    let key = template_key(instance);
    let tpl = templates.get(key)?;
    let shots = shot_count(instance.kind);
    let examples = if shots > 0 {
        let roster: HashSet<String> = instance.roster().into_iter().collect();
        let mut rng = substream(seed, &["prompt", &instance.id]);
        few_shot_examples(instance.kind, instance.questions.len(), pool, &roster, &mut rng)?.join("\n\n")
    } else {
        String::new()
    };
    let question = instance.questions.join("\n");
    let prefix = instance.question_prefixes.first().map(String::as_str).unwrap_or("");
    let vars = [
        ("given_context", instance.context.text.as_str()),
        ("question", question.as_str()),
        ("question_prefix", prefix),
        ("examples", examples.as_str()),
    ];
    Ok(PromptBundle {
        id: instance.id.clone(),
        kind: instance.kind,
        template: key.into(),
        system: fill(&tpl.system, &vars)?,
        user: fill(&tpl.user, &vars)?,
        assistant_prefix: fill(&tpl.assistant, &vars)?,
        examples,
        shots,
    })
}

/// Two self-contained worked examples for `kind`, over persons outside `exclude`.
pub fn few_shot_examples(
    kind: TaskKind,
    questions: usize,
    pool: &AttributePool,
    exclude: &HashSet<String>,
    rng: &mut Stream,
) -> Result<Vec<String>> {
    let mut taken = exclude.clone();
    let mut out = Vec::with_capacity(2);
    for _ in 0..2 {
        // Keep the shortest of a few draws; long names and values add up.
        let mut best: Option<(String, HashSet<String>)> = None;
        for _ in 0..EXEMPLAR_DRAWS {
            let mut t = taken.clone();
            let ex = exemplar(kind, questions, pool, &mut t, rng)?;
            if best.as_ref().is_none_or(|(b, _)| ex.len() < b.len()) {
                best = Some((ex, t));
            }
        }
        let (ex, t) = best.expect("at least one draw");
        taken = t;
        out.push(ex);
    }
    Ok(out)
}

fn exemplar(
    kind: TaskKind,
    questions: usize,
    pool: &AttributePool,
    taken: &mut HashSet<String>,
    rng: &mut Stream,
) -> Result<String> {
    let mut name = |rng: &mut Stream| -> Result<String> {
        let n = sample_name(pool, rng, taken)?.to_string();
        taken.insert(n.clone());
        Ok(n)
    };
    let ex = match kind {
        TaskKind::Calculation => {
            let (a, b) = (name(rng)?, name(rng)?);
            let ages = distinct_ages(2, rng);
            let (x, y) = (ages[0], ages[1]);
            format!(
                    "Context: {a} is {x} years old. {b} is {y} years old.\nQuestion: {}\nAnswer: {} - {} = {}. The answer is {}.",
                    calculation_question(&a, &b),
                    x.max(y),
                    x.min(y),
                    x.abs_diff(y),
                    x.abs_diff(y)
                )
        }
        TaskKind::Rank => {
            let (a, b) = (name(rng)?, name(rng)?);
            let ages = distinct_ages(2, rng);
            let mut people = [(a.clone(), ages[0]), (b.clone(), ages[1])];
            people.sort_by_key(|p| p.1);
            format!(
                    "Context: {a} is {} years old. {b} is {} years old.\nQuestion: {}\nAnswer: {} < {}. The answer is {}, {}.",
                    ages[0],
                    ages[1],
                    rank_question(&[a.clone(), b.clone()]),
                    people[0].1,
                    people[1].1,
                    people[0].0,
                    people[1].0
                )
        }
        TaskKind::Twodiff => {
            let (a, b, c) = (name(rng)?, name(rng)?, name(rng)?);
            let ages = unique_pair_ages(rng);
            let (i, j, d) = planted_pair(&ages);
            let names = [&a, &b, &c];
            let (hi, lo) = if ages[i] > ages[j] { (i, j) } else { (j, i) };
            format!(
                    "Context: {a} is {} years old. {b} is {} years old. {c} is {} years old.\nQuestion: {}\nAnswer: {} - {} = {d}. The answer is {} and {}.",
                    ages[0],
                    ages[1],
                    ages[2],
                    twodiff_question(d),
                    ages[hi],
                    ages[lo],
                    names[i],
                    names[j]
                )
        }
        TaskKind::Multihop => {
            let (a, b) = (name(rng)?, name(rng)?);
            let attr = *Attribute::POOLED.choose(rng).expect("non-empty");
            let v = sample_value(pool, attr, rng)?;
            let l = attr.label();
            format!(
                    "Context: The {l} of {a} is {v}. The {l} of {b} is the same as {a}.\nQuestion: {}\nAnswer: It is the same as {a}. The answer is {v}.",
                    retrieval_question(attr, &b)
                )
        }
        TaskKind::Citation => {
            let (a, b) = (name(rng)?, name(rng)?);
            // Two-question exemplars keep the shortest of a few value draws.
            let draws = if questions > 1 { 8 } else { 1 };
            let mut best: Option<(Attribute, Attribute, String, String)> = None;
            for _ in 0..draws {
                let mut attrs = Attribute::POOLED.to_vec();
                attrs.shuffle(rng);
                let (p, q) = (attrs[0], attrs[1]);
                let (vp, vq) = (sample_value(pool, p, rng)?, sample_value(pool, q, rng)?);
                let len = p.label().len() + q.label().len() + vp.len() + vq.len();
                if best
                    .as_ref()
                    .is_none_or(|b| len < b.0.label().len() + b.1.label().len() + b.2.len() + b.3.len())
                {
                    best = Some((p, q, vp, vq));
                }
            }
            let (p, q, vp, vq) = best.expect("at least one draw");
            let context = format!(
                "Context: Bio [1]: The {} of {a} is {vp}. Bio [2]: The {} of {b} is {vq}.",
                p.label(),
                q.label()
            );
            if questions > 1 {
                format!(
                    "{context}\n{}\n{}\nAnswers: {vp} [1]. {vq} [2].",
                    retrieval_question(p, &a),
                    retrieval_question(q, &b)
                )
            } else if rng.random_bool(0.5) {
                format!(
                    "{context}\nQuestion: {}\nAnswer: the {} of {a} is {vp} [1].",
                    retrieval_question(p, &a),
                    p.label()
                )
            } else {
                format!(
                    "{context}\nQuestion: {}\nAnswer: the {} of {b} is {vq} [2].",
                    retrieval_question(q, &b),
                    q.label()
                )
            }
        }
        other => return Err(Error::UnregisteredKind(format!("{other} has no exemplars"))),
    };
    Ok(ex)
}

fn distinct_ages(n: usize, rng: &mut Stream) -> Vec<u32> {
    let mut ages: Vec<u32> = Vec::with_capacity(n);
    while ages.len() < n {
        let a = rng.random_range(EXEMPLAR_AGES.0..=EXEMPLAR_AGES.1);
        if !ages.contains(&a) {
            ages.push(a);
        }
    }
    ages
}

/// Three ages whose pairwise differences are all distinct.
fn unique_pair_ages(rng: &mut Stream) -> Vec<u32> {
    loop {
        let a = distinct_ages(3, rng);
        let d = [a[0].abs_diff(a[1]), a[0].abs_diff(a[2]), a[1].abs_diff(a[2])];
        if d[0] != d[1] && d[0] != d[2] && d[1] != d[2] {
            return a;
        }
    }
}

fn planted_pair(ages: &[u32]) -> (usize, usize, u32) {
    (0, 1, ages[0].abs_diff(ages[1]))
}
