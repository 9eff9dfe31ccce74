//! Benchmark instance generation.
//!
//! Every generator draws needles and questions first and the haystack last,
//! so the same stream yields the same question and gold in bios and essay
//! mode.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::biotext::{link_attribute, render_bio, strip_attribute, BioRecord, Style, TemplateBank};
use crate::contextforge::{
    apply_density_one, build_biah_with, insert_needle_units, insert_needles, needle_reserve, pack_haystack, pack_units,
    top_up, unit_cost, ContextSpec, Density, Depths, EssayCorpus, HaystackMode, PackedContext, TokenCounter, Unit,
    UnitBio,
};
use crate::corpus::{sample_profile, sample_value, Attribute, AttributePool, BirthMode, PersonProfile};
use crate::error::{Error, Result};
use crate::rng::{seeded, substream, Stream};
use crate::SCHEMA_VERSION;

/// Number of ICL categories.
pub const ICL_CATEGORIES: u32 = 10;

const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Standard,
    MultiStandard,
    Paraphrase,
    Pronoun,
    Calculation,
    Rank,
    Multihop,
    Twodiff,
    Citation,
    Idk,
    Icl,
}

impl TaskKind {
    pub const ALL: [TaskKind; 11] = [
        TaskKind::Standard,
        TaskKind::MultiStandard,
        TaskKind::Paraphrase,
        TaskKind::Pronoun,
        TaskKind::Calculation,
        TaskKind::Rank,
        TaskKind::Multihop,
        TaskKind::Twodiff,
        TaskKind::Citation,
        TaskKind::Idk,
        TaskKind::Icl,
    ];

    pub fn key(self) -> &'static str {
        match self {
            TaskKind::Standard => "standard",
            TaskKind::MultiStandard => "multi_standard",
            TaskKind::Paraphrase => "paraphrase",
            TaskKind::Pronoun => "pronoun",
            TaskKind::Calculation => "calculation",
            TaskKind::Rank => "rank",
            TaskKind::Multihop => "multihop",
            TaskKind::Twodiff => "twodiff",
            TaskKind::Citation => "citation",
            TaskKind::Idk => "idk",
            TaskKind::Icl => "icl",
        }
    }

    pub fn from_key(key: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|k| k.key() == key)
    }

    /// Reasoning tasks get chain-of-thought exemplars and a larger output allowance.
    pub fn is_reasoning(self) -> bool {
        matches!(
            self,
            TaskKind::Calculation | TaskKind::Rank | TaskKind::Multihop | TaskKind::Twodiff
        )
    }

    fn default_n(self) -> usize {
        match self {
            TaskKind::MultiStandard
            | TaskKind::Rank
            | TaskKind::Calculation
            | TaskKind::Multihop
            | TaskKind::Twodiff => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// A task with its parameters, e.g. `rank:5` or `multi_standard:10`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub target_diff: Option<u32>,
    #[serde(default)]
    pub demos: Option<usize>,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> TaskSpec {
        TaskSpec {
            kind,
            n: None,
            target_diff: None,
            demos: None,
        }
    }

    pub fn with_n(kind: TaskKind, n: usize) -> TaskSpec {
        TaskSpec {
            n: Some(n),
            ..TaskSpec::new(kind)
        }
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(self.kind.default_n())
    }

    /// Stable label used in ids and reports.
    pub fn label(&self) -> String {
        match self.kind {
            TaskKind::MultiStandard | TaskKind::Rank | TaskKind::Citation => format!("{}_{}", self.kind, self.n()),
            _ => self.kind.key().to_string(),
        }
    }

    /// Parse `kind`, `kind:n` or `kind_n`.
    pub fn parse(text: &str) -> Result<TaskSpec> {
        let text = text.trim();
        if let Some(kind) = TaskKind::from_key(text) {
            return Ok(TaskSpec::new(kind));
        }
        let (head, tail) = text
            .rsplit_once([':', '_'])
            .ok_or_else(|| Error::Config(format!("unknown task `{text}`")))?;
        let kind = TaskKind::from_key(head).ok_or_else(|| Error::Config(format!("unknown task `{text}`")))?;
        let n: usize = tail
            .parse()
            .map_err(|_| Error::Config(format!("bad task parameter in `{text}`")))?;
        let spec = TaskSpec::with_n(kind, n);
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n();
        let ok = match self.kind {
            TaskKind::MultiStandard => n >= 1,
            TaskKind::Rank => n >= 2,
            TaskKind::Citation => n >= 1,
            TaskKind::Calculation | TaskKind::Multihop | TaskKind::Twodiff => n == 2,
            _ => n == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("task `{}` does not take n = {n}", self.kind)))
        }
    }

    /// The ten core tasks at their default parameters plus ICL.
    pub fn default_suite() -> Vec<TaskSpec> {
        vec![
            TaskSpec::new(TaskKind::Standard),
            TaskSpec::with_n(TaskKind::MultiStandard, 2),
            TaskSpec::new(TaskKind::Paraphrase),
            TaskSpec::new(TaskKind::Pronoun),
            TaskSpec::new(TaskKind::Calculation),
            TaskSpec::with_n(TaskKind::Rank, 2),
            TaskSpec::new(TaskKind::Multihop),
            TaskSpec::new(TaskKind::Twodiff),
            TaskSpec::with_n(TaskKind::Citation, 1),
            TaskSpec::new(TaskKind::Idk),
            TaskSpec::new(TaskKind::Icl),
        ]
    }
}

/// What counts as a correct answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Gold {
    Single {
        answer: String,
    },
    Ordered {
        answers: Vec<String>,
    },
    NameOrder {
        names: Vec<String>,
    },
    AgeDifference {
        target: u32,
        planted: [String; 2],
    },
    Citation {
        indices: Vec<usize>,
        answers: Vec<String>,
    },
    /// The fact was removed; `withheld` is the value that must not be produced.
    Refusal {
        withheld: String,
    },
    Category {
        label: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdkLeg {
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    /// Needle persons, in needle order.
    pub needles: Vec<String>,
    /// Questioned attribute per question.
    pub attributes: Vec<Attribute>,
    pub depths: Vec<f64>,
    pub density: Option<f64>,
    pub haystack_mode: HaystackMode,
    pub style: Style,
    pub birth_mode: BirthMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idk_leg: Option<IdkLeg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub schema: String,
    pub id: String,
    pub kind: TaskKind,
    /// Task label with parameters (`rank_5`).
    pub task: String,
    pub length_budget: usize,
    pub context: PackedContext,
    pub questions: Vec<String>,
    /// Answer lead-ins ("the hobby of X is"), one per question, when the task uses them.
    #[serde(default)]
    pub question_prefixes: Vec<String>,
    pub gold: Gold,
    pub meta: Meta,
}

impl TaskInstance {
    /// Full names of every person with a bio in the context.
    pub fn roster(&self) -> Vec<String> {
        self.context.names().collect()
    }
}

// ---------------------------------------------------------------------------
// ICL category map

/// Hidden map from a university's initial letter to a category label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    pub categories: BTreeMap<char, u32>,
}

impl CategoryMap {
    /// Initials sorted alphabetically, dealt round-robin into 10 buckets,
    /// bucket labels permuted by `seed`.
    pub fn build(pool: &AttributePool, seed: u64) -> CategoryMap {
        let initials: Vec<char> = pool
            .universities
            .iter()
            .filter_map(|u| initial(u))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut labels: Vec<u32> = (1..=ICL_CATEGORIES).collect();
        labels.shuffle(&mut substream(seed, &["icl-category-map"]));
        let categories = initials
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c, labels[i % ICL_CATEGORIES as usize]))
            .collect();
        CategoryMap { categories }
    }

    pub fn category(&self, university: &str) -> Option<u32> {
        initial(university).and_then(|c| self.categories.get(&c).copied())
    }
}

pub fn initial(s: &str) -> Option<char> {
    s.chars().next().map(|c| c.to_ascii_uppercase())
}

pub fn category_label(k: u32) -> String {
    format!("Category {k}")
}

pub fn icl_question(name: &str) -> String {
    format!("Which category of university did {name} graduate from?")
}

// ---------------------------------------------------------------------------
// Generator

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenOptions {
    pub age_min: u32,
    pub age_max: u32,
    pub density: Density,
    /// Explicit needle depths; one value is reused for every needle.
    pub depths: Option<Vec<f64>>,
    pub haystack_mode: HaystackMode,
    /// Bios per ICL demonstration.
    pub icl_demo_size: usize,
    /// Fix the questioned attribute of retrieval tasks.
    pub attribute: Option<Attribute>,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            age_min: 20,
            age_max: 70,
            density: Density::Natural,
            depths: None,
            haystack_mode: HaystackMode::Bios,
            icl_demo_size: 2,
            attribute: None,
        }
    }
}

impl GenOptions {
    fn age_mode(&self) -> BirthMode {
        BirthMode::Age {
            min: self.age_min,
            max: self.age_max,
        }
    }
}

pub struct Generator<'a> {
    pub pool: &'a AttributePool,
    pub bank: &'a TemplateBank,
    pub counter: &'a TokenCounter,
    pub essays: &'a EssayCorpus,
    pub options: GenOptions,
    pub category_map: CategoryMap,
}

/// Needles and the knobs for packing around them.
struct Draft {
    needles: Vec<BioRecord>,
    style: Style,
    birth: BirthMode,
    numbered: bool,
    density_target: Option<(Attribute, String)>,
    taken: HashSet<String>,
}

/// Instance fields that are fixed before the context is packed.
struct Shell {
    kind: TaskKind,
    questions: Vec<String>,
    prefixes: Vec<String>,
    gold: Gold,
    attributes: Vec<Attribute>,
}

impl<'a> Generator<'a> {
    pub fn new(
        pool: &'a AttributePool,
        bank: &'a TemplateBank,
        counter: &'a TokenCounter,
        essays: &'a EssayCorpus,
        options: GenOptions,
        run_seed: u64,
    ) -> Generator<'a> {
        Generator {
            category_map: CategoryMap::build(pool, run_seed),
            pool,
            bank,
            counter,
            essays,
            options,
        }
    }

    /// Context spec for `needles` needles under the configured knobs.
    pub fn context_spec(&self, budget: usize, needles: usize) -> Result<ContextSpec> {
        let depths = match &self.options.depths {
            None => Depths::UniformRandom,
            Some(d) if d.len() == needles => Depths::Explicit(d.clone()),
            Some(d) if d.len() == 1 => Depths::Explicit(vec![d[0]; needles]),
            Some(d) => {
                return Err(Error::InvalidSpec(format!(
                    "{} depths configured for {needles} needles",
                    d.len()
                )))
            }
        };
        let spec = ContextSpec {
            token_budget: budget,
            needle_count: needles,
            needle_depths: depths,
            distractor_density: self.options.density,
            haystack_mode: self.options.haystack_mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn person(&self, rng: &mut Stream, birth: BirthMode, taken: &mut HashSet<String>) -> Result<PersonProfile> {
        let p = sample_profile(self.pool, rng, birth, taken)?;
        taken.insert(p.full_name());
        Ok(p)
    }

    fn question_attribute(&self, rng: &mut Stream, profile: &PersonProfile) -> Attribute {
        match self.options.attribute {
            Some(a) if profile.value(a).is_some() => a,
            _ => *profile.attributes().choose(rng).expect("six attributes"),
        }
    }

    fn pack(&self, draft: Draft, spec: &ContextSpec, depths: &[f64], rng: &mut Stream) -> Result<PackedContext> {
        let Draft {
            needles,
            style,
            birth,
            numbered,
            density_target,
            mut taken,
        } = draft;
        if spec.haystack_mode == HaystackMode::Essay {
            return build_biah_with(needles, self.essays, spec, depths, numbered, self.counter);
        }
        let units: Vec<Unit> = needles.iter().cloned().map(Unit::bio).collect();
        let reserve = needle_reserve(&units, numbered, self.counter)?;
        let density = spec.distractor_density;
        let mut next_bio = || {
            let p = self.person(rng, birth, &mut taken)?;
            let bio = render_bio(&p, style, self.bank, rng)?;
            match &density_target {
                Some((attr, value)) => apply_density_one(bio, value, *attr, density, self.bank, rng),
                None => Ok(UnitBio {
                    record: bio,
                    forced_collision: false,
                }),
            }
        };
        let haystack = pack_haystack(&mut next_bio, spec, reserve, numbered, self.counter)?;
        let ctx = insert_needles(haystack, needles, depths, self.counter)?;
        top_up(
            ctx,
            || {
                next_bio().map(|b| {
                    Some(Unit {
                        bios: vec![b],
                        ..Unit::default()
                    })
                })
            },
            self.counter,
        )
    }

    fn finish(
        &self,
        shell: Shell,
        spec: &ContextSpec,
        depths: Vec<f64>,
        style: Style,
        birth: BirthMode,
        context: PackedContext,
    ) -> TaskInstance {
        let needles = context
            .needle_indices
            .iter()
            .map(|&i| context.bios[i].profile.full_name())
            .collect();
        TaskInstance {
            schema: SCHEMA_VERSION.into(),
            id: String::new(),
            kind: shell.kind,
            task: shell.kind.key().into(),
            length_budget: spec.token_budget,
            context,
            questions: shell.questions,
            question_prefixes: shell.prefixes,
            gold: shell.gold,
            meta: Meta {
                needles,
                attributes: shell.attributes,
                depths,
                density: spec.distractor_density.value(),
                haystack_mode: spec.haystack_mode,
                style,
                birth_mode: birth,
                idk_leg: None,
                pair_id: None,
            },
        }
    }

    fn expect_needles(spec: &ContextSpec, n: usize) -> Result<()> {
        if spec.needle_count == n {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "task needs {n} needles, spec has {}",
                spec.needle_count
            )))
        }
    }

    /// Retrieve one attribute of one person.
    pub fn gen_retrieval(&self, style: Style, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        Self::expect_needles(spec, 1)?;
        let mut taken = HashSet::new();
        let p = self.person(rng, BirthMode::Birthdate, &mut taken)?;
        let bio = render_bio(&p, style, self.bank, rng)?;
        let attr = self.question_attribute(rng, &p);
        let value = p.value(attr).ok_or(Error::AttributeAbsent(attr))?;
        let name = p.full_name();
        let depths = spec.resolve_depths(rng);
        let shell = Shell {
            kind: match style {
                Style::Standard => TaskKind::Standard,
                Style::Paraphrase => TaskKind::Paraphrase,
                Style::Pronoun => TaskKind::Pronoun,
            },
            questions: vec![retrieval_question(attr, &name)],
            prefixes: vec![retrieval_prefix(attr, &name)],
            gold: Gold::Single { answer: value.clone() },
            attributes: vec![attr],
        };
        let draft = Draft {
            needles: vec![bio],
            style,
            birth: BirthMode::Birthdate,
            numbered: false,
            density_target: Some((attr, value)),
            taken,
        };
        let ctx = self.pack(draft, spec, &depths, rng)?;
        Ok(self.finish(shell, spec, depths, style, BirthMode::Birthdate, ctx))
    }

    /// `n` retrieval questions over `n` distinct persons (all-or-nothing).
    pub fn gen_multi_retrieval(&self, n: usize, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        self.gen_multi(n, spec, rng, false)
    }

    fn gen_multi(&self, n: usize, spec: &ContextSpec, rng: &mut Stream, numbered: bool) -> Result<TaskInstance> {
        Self::expect_needles(spec, n)?;
        let mut taken = HashSet::new();
        let mut needles = Vec::with_capacity(n);
        let mut questions = Vec::with_capacity(n);
        let mut prefixes = Vec::with_capacity(n);
        let mut answers = Vec::with_capacity(n);
        let mut attributes = Vec::with_capacity(n);
        for _ in 0..n {
            let p = self.person(rng, BirthMode::Birthdate, &mut taken)?;
            let bio = render_bio(&p, Style::Standard, self.bank, rng)?;
            let attr = self.question_attribute(rng, &p);
            let name = p.full_name();
            questions.push(retrieval_question(attr, &name));
            prefixes.push(retrieval_prefix(attr, &name));
            answers.push(p.value(attr).ok_or(Error::AttributeAbsent(attr))?);
            attributes.push(attr);
            needles.push(bio);
        }
        let depths = spec.resolve_depths(rng);
        let density_target = Some((attributes[0], answers[0].clone()));
        let draft = Draft {
            needles,
            style: Style::Standard,
            birth: BirthMode::Birthdate,
            numbered,
            density_target,
            taken,
        };
        let ctx = self.pack(draft, spec, &depths, rng)?;
        let gold = if numbered {
            let mut indices: Vec<usize> = ctx.needle_indices.iter().map(|i| i + 1).collect();
            indices.sort_unstable();
            Gold::Citation { indices, answers }
        } else if n == 1 {
            Gold::Single {
                answer: answers.remove(0),
            }
        } else {
            Gold::Ordered { answers }
        };
        let kind = if numbered {
            TaskKind::Citation
        } else if n == 1 {
            TaskKind::Standard
        } else {
            TaskKind::MultiStandard
        };
        let shell = Shell {
            kind,
            questions,
            prefixes,
            gold,
            attributes,
        };
        Ok(self.finish(shell, spec, depths, Style::Standard, BirthMode::Birthdate, ctx))
    }

    /// Persons in age mode with pairwise-distinct ages.
    fn aged_needles(&self, n: usize, rng: &mut Stream, taken: &mut HashSet<String>) -> Result<Vec<PersonProfile>> {
        let span = (self.options.age_max - self.options.age_min + 1) as usize;
        if n > span {
            return Err(Error::Unsatisfiable(format!("{n} distinct ages in a span of {span}")));
        }
        let mut ages = HashSet::new();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let p = sample_profile(self.pool, rng, self.options.age_mode(), taken)?;
            if ages.insert(p.age) {
                taken.insert(p.full_name());
                out.push(p);
            }
        }
        Ok(out)
    }

    fn render_all(&self, profiles: &[PersonProfile], rng: &mut Stream) -> Result<Vec<BioRecord>> {
        profiles
            .iter()
            .map(|p| render_bio(p, Style::Standard, self.bank, rng))
            .collect()
    }

    /// Age difference of two persons.
    pub fn gen_calculation(&self, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        Self::expect_needles(spec, 2)?;
        let birth = self.options.age_mode();
        let mut taken = HashSet::new();
        let people = self.aged_needles(2, rng, &mut taken)?;
        let needles = self.render_all(&people, rng)?;
        let (a, b) = (&people[0], &people[1]);
        let diff = a.age.unwrap_or(0).abs_diff(b.age.unwrap_or(0));
        let shell = Shell {
            kind: TaskKind::Calculation,
            questions: vec![calculation_question(&a.full_name(), &b.full_name())],
            prefixes: Vec::new(),
            gold: Gold::Single {
                answer: diff.to_string(),
            },
            attributes: vec![Attribute::Age, Attribute::Age],
        };
        let depths = spec.resolve_depths(rng);
        let draft = Draft {
            needles,
            style: Style::Standard,
            birth,
            numbered: false,
            density_target: None,
            taken,
        };
        let ctx = self.pack(draft, spec, &depths, rng)?;
        Ok(self.finish(shell, spec, depths, Style::Standard, birth, ctx))
    }

    /// Order `n` persons from youngest to oldest.
    pub fn gen_rank(&self, n: usize, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        Self::expect_needles(spec, n)?;
        let birth = self.options.age_mode();
        let mut taken = HashSet::new();
        let people = self.aged_needles(n, rng, &mut taken)?;
        let needles = self.render_all(&people, rng)?;
        let mut sorted = people.clone();
        sorted.sort_by_key(|p| p.age);
        let gold: Vec<String> = sorted.iter().map(|p| p.full_name()).collect();
        let mut shown: Vec<String> = people.iter().map(|p| p.full_name()).collect();
        shown.shuffle(rng);
        let shell = Shell {
            kind: TaskKind::Rank,
            questions: vec![rank_question(&shown)],
            prefixes: Vec::new(),
            gold: Gold::NameOrder { names: gold },
            attributes: vec![Attribute::Age; n],
        };
        let depths = spec.resolve_depths(rng);
        let draft = Draft {
            needles,
            style: Style::Standard,
            birth,
            numbered: false,
            density_target: None,
            taken,
        };
        let ctx = self.pack(draft, spec, &depths, rng)?;
        Ok(self.finish(shell, spec, depths, Style::Standard, birth, ctx))
    }

    /// Name any two persons whose ages differ by `target_diff`; one such pair is planted.
    pub fn gen_twodiff(&self, spec: &ContextSpec, target_diff: Option<u32>, rng: &mut Stream) -> Result<TaskInstance> {
        Self::expect_needles(spec, 2)?;
        let (lo, hi) = (self.options.age_min, self.options.age_max);
        let span = hi.saturating_sub(lo);
        let target = match target_diff {
            Some(t) => t,
            None if span >= 1 => rng.random_range(1..=span),
            None => 0,
        };
        if target == 0 || target > span {
            return Err(Error::Unsatisfiable(format!(
                "age difference {target} within ages [{lo}, {hi}]"
            )));
        }
        let birth = self.options.age_mode();
        let mut taken = HashSet::new();
        let young = rng.random_range(lo..=hi - target);
        let mut people = Vec::with_capacity(2);
        for age in [young, young + target] {
            let mut p = self.person(rng, birth, &mut taken)?;
            p.age = Some(age);
            people.push(p);
        }
        let needles = self.render_all(&people, rng)?;
        let planted = [people[0].full_name(), people[1].full_name()];
        let shell = Shell {
            kind: TaskKind::Twodiff,
            questions: vec![twodiff_question(target)],
            prefixes: Vec::new(),
            gold: Gold::AgeDifference { target, planted },
            attributes: vec![Attribute::Age, Attribute::Age],
        };
        let depths = spec.resolve_depths(rng);
        let draft = Draft {
            needles,
            style: Style::Standard,
            birth,
            numbered: false,
            density_target: None,
            taken,
        };
        let ctx = self.pack(draft, spec, &depths, rng)?;
        Ok(self.finish(shell, spec, depths, Style::Standard, birth, ctx))
    }

    /// Two-hop retrieval: the second person's attribute is stated by reference to the first.
    pub fn gen_multihop(&self, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        Self::expect_needles(spec, 2)?;
        let mut taken = HashSet::new();
        let p1 = self.person(rng, BirthMode::Birthdate, &mut taken)?;
        let mut p2 = self.person(rng, BirthMode::Birthdate, &mut taken)?;
        let attr = match self.options.attribute {
            Some(a) if Attribute::POOLED.contains(&a) => a,
            _ => *Attribute::POOLED.choose(rng).expect("non-empty"),
        };
        let value = p1.value(attr).ok_or(Error::AttributeAbsent(attr))?;
        p2.set_value(attr, &value)?;
        let b1 = render_bio(&p1, Style::Standard, self.bank, rng)?;
        let b2 = render_bio(&p2, Style::Standard, self.bank, rng)?;
        let b2 = link_attribute(&b2, attr, &p1.full_name(), self.bank)?;
        let name2 = p2.full_name();
        let shell = Shell {
            kind: TaskKind::Multihop,
            questions: vec![retrieval_question(attr, &name2)],
            prefixes: vec![retrieval_prefix(attr, &name2)],
            gold: Gold::Single { answer: value.clone() },
            attributes: vec![attr],
        };
        let mut depths = spec.resolve_depths(rng);
        let draft = Draft {
            needles: vec![b1, b2],
            style: Style::Standard,
            birth: BirthMode::Birthdate,
            numbered: false,
            density_target: Some((attr, value)),
            taken,
        };
        let mut ctx = self.pack(draft, spec, &depths, rng)?;
        if ctx.needle_indices[0] > ctx.needle_indices[1] {
            ctx.swap_needles(0, 1);
            ctx = ctx.refinalize(self.counter)?;
            depths.swap(0, 1);
        }
        Ok(self.finish(shell, spec, depths, Style::Standard, BirthMode::Birthdate, ctx))
    }

    /// Retrieval with `Bio [k]: ` numbering; gold is the set of needle indices.
    pub fn gen_citation(&self, n: usize, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        self.gen_multi(n, spec, rng, true)
    }

    /// A standard retrieval instance and its twin with the fact removed.
    pub fn gen_idk_pair(&self, spec: &ContextSpec, rng: &mut Stream) -> Result<(TaskInstance, TaskInstance)> {
        let mut present = self.gen_retrieval(Style::Standard, spec, rng)?;
        present.kind = TaskKind::Idk;
        present.task = TaskKind::Idk.key().into();
        present.meta.idk_leg = Some(IdkLeg::Present);
        let mut derived = seeded(rng.random());

        let attr = present.meta.attributes[0];
        let Gold::Single { answer } = &present.gold else {
            unreachable!("retrieval gold is single")
        };
        let withheld = answer.clone();
        let needle = lower(&withheld);
        let mut ctx = present.context.clone();
        let at = ctx.needle_indices[0];
        {
            let ub = ctx.unit_bio_mut(at).expect("needle bio");
            ub.record = strip_attribute(&ub.record, attr, self.bank)?;
        }
        let bios = ctx.bios.len();
        for i in 0..bios {
            let ub = ctx.unit_bio_mut(i).expect("bio index");
            if !lower(&ub.record.text).contains(&needle) {
                continue;
            }
            let present_attrs: Vec<Attribute> = ub.record.sentences.iter().map(|c| c.attribute).collect();
            for a in present_attrs {
                let Some(v) = ub.record.profile.value(a) else { continue };
                if !lower(&v).contains(&needle) || a == Attribute::Age {
                    continue;
                }
                let mut fresh = v;
                for _ in 0..64 {
                    if !lower(&fresh).contains(&needle) {
                        break;
                    }
                    fresh = sample_value(self.pool, a, &mut derived)?;
                }
                ub.record.profile.set_value(a, &fresh)?;
                ub.forced_collision = false;
            }
            ub.record.rerender(self.bank)?;
        }
        let ctx = ctx.refinalize(self.counter)?;
        if lower(&ctx.text).contains(&needle) {
            return Err(Error::Unsatisfiable(format!(
                "withheld value `{withheld}` still occurs in the context"
            )));
        }
        let mut absent = present.clone();
        absent.context = ctx;
        absent.gold = Gold::Refusal { withheld };
        absent.meta.idk_leg = Some(IdkLeg::Absent);
        Ok((present, absent))
    }

    /// Infer a hidden initial-to-category map from in-context demonstrations.
    pub fn gen_icl(&self, num_demos: Option<usize>, spec: &ContextSpec, rng: &mut Stream) -> Result<TaskInstance> {
        if spec.haystack_mode == HaystackMode::Essay {
            return Err(Error::InvalidSpec(
                "icl contexts are built from demonstrations only".into(),
            ));
        }
        let demo_size = self.options.icl_demo_size.max(1);
        // initial -> universities
        let mut by_initial: BTreeMap<char, Vec<&String>> = BTreeMap::new();
        for u in &self.pool.universities {
            if let Some(c) = initial(u) {
                by_initial.entry(c).or_default().push(u);
            }
        }
        let mut eligible: BTreeMap<u32, Vec<char>> = BTreeMap::new();
        for (c, unis) in &by_initial {
            if unis.len() >= 2 {
                if let Some(&k) = self.category_map.categories.get(c) {
                    eligible.entry(k).or_default().push(*c);
                }
            }
        }
        let cats: Vec<u32> = eligible.keys().copied().collect();
        let &category = cats
            .choose(rng)
            .ok_or_else(|| Error::Unsatisfiable("no initial with two universities".into()))?;
        let &init = eligible[&category].choose(rng).expect("non-empty");
        let &query_uni = by_initial[&init].choose(rng).expect("non-empty");
        let query_uni = query_uni.clone();
        let hint_choices: Vec<&&String> = by_initial[&init].iter().filter(|u| ***u != query_uni).collect();
        let hint_uni = (**hint_choices.choose(rng).expect("two universities")).clone();

        let mut taken = HashSet::new();
        // Final group: the queried person plus companions.
        let mut q = self.person(rng, BirthMode::Birthdate, &mut taken)?;
        q.university = query_uni.clone();
        let query_name = q.full_name();
        let mut final_bios = vec![render_bio(&q, Style::Standard, self.bank, rng)?];
        for _ in 1..demo_size {
            let p = self.demo_person(rng, &mut taken, &query_uni)?;
            final_bios.push(render_bio(&p, Style::Standard, self.bank, rng)?);
        }
        let q_offset = rng.random_range(0..final_bios.len());
        final_bios.swap(0, q_offset);
        let final_unit = Unit {
            bios: final_bios.into_iter().map(unit_bio).collect(),
            trailer: None,
            needle: Some((0, q_offset)),
        };

        // Hint demo: its subject shares the query's initial.
        let mut h = self.demo_person(rng, &mut taken, &query_uni)?;
        h.university = hint_uni;
        let mut hint = self.demo_unit(vec![h], demo_size, rng, &mut taken, &query_uni)?;
        if let Some((_, off)) = hint.needle {
            hint.needle = Some((1, off));
        }

        let hint_depth: f64 = rng.random();
        let numbered = false;
        let reserve = unit_cost(&final_unit, 1, numbered, self.counter)? + unit_cost(&hint, 1, numbered, self.counter)?;
        let mut next_demo = || -> Result<Option<Unit>> {
            let mut u = self.demo_unit(Vec::new(), demo_size, rng, &mut taken, &query_uni)?;
            u.needle = None;
            Ok(Some(u))
        };
        let (units, max_unit) = match num_demos {
            Some(k) => {
                let mut units = Vec::new();
                for _ in 1..k.max(1) {
                    units.extend(next_demo()?);
                }
                (units, 0)
            }
            None => {
                if spec.token_budget < reserve {
                    return Err(Error::BudgetTooSmall {
                        budget: spec.token_budget,
                        reserve,
                    });
                }
                let packing = pack_units(&mut next_demo, spec.token_budget, reserve, numbered, self.counter)?;
                (packing.units, packing.max_unit_tokens)
            }
        };
        let haystack = PackedContext::finalize(units, numbered, spec.token_budget, max_unit, self.counter)?;
        let mut ctx = insert_needle_units(haystack, vec![hint, final_unit], &[hint_depth, 1.0], self.counter)?;
        if num_demos.is_none() {
            ctx = top_up(ctx, next_demo, self.counter)?;
        }
        let shell = Shell {
            kind: TaskKind::Icl,
            questions: vec![icl_question(&query_name)],
            prefixes: Vec::new(),
            gold: Gold::Category {
                label: category_label(category),
            },
            attributes: vec![Attribute::University],
        };
        Ok(self.finish(
            shell,
            spec,
            vec![1.0, hint_depth],
            Style::Standard,
            BirthMode::Birthdate,
            ctx,
        ))
    }

    fn demo_person(&self, rng: &mut Stream, taken: &mut HashSet<String>, avoid_uni: &str) -> Result<PersonProfile> {
        let mut p = self.person(rng, BirthMode::Birthdate, taken)?;
        while p.university == avoid_uni {
            p.university = sample_value(self.pool, Attribute::University, rng)?;
        }
        Ok(p)
    }

    /// A demonstration: `demo_size` bios and a question about one of them.
    /// Given `subjects` are used first and the first is the one asked about.
    fn demo_unit(
        &self,
        mut subjects: Vec<PersonProfile>,
        demo_size: usize,
        rng: &mut Stream,
        taken: &mut HashSet<String>,
        avoid_uni: &str,
    ) -> Result<Unit> {
        let forced = !subjects.is_empty();
        while subjects.len() < demo_size {
            subjects.push(self.demo_person(rng, taken, avoid_uni)?);
        }
        let mut bios = subjects
            .iter()
            .map(|p| render_bio(p, Style::Standard, self.bank, rng))
            .collect::<Result<Vec<_>>>()?;
        let asked = if forced {
            let at = rng.random_range(0..bios.len());
            bios.swap(0, at);
            at
        } else {
            rng.random_range(0..bios.len())
        };
        let who = &bios[asked].profile;
        let k = self
            .category_map
            .category(&who.university)
            .ok_or_else(|| Error::Unsatisfiable(format!("no category for `{}`", who.university)))?;
        let trailer = format!(
            "Question: {} Answer: {}",
            icl_question(&who.full_name()),
            category_label(k)
        );
        Ok(Unit {
            bios: bios.into_iter().map(unit_bio).collect(),
            trailer: Some(trailer),
            needle: Some((0, asked)),
        })
    }

    /// Instances for one (task, budget, index) slot. IDK yields two.
    pub fn generate(&self, task: &TaskSpec, budget: usize, index: usize, seed: u64) -> Result<Vec<TaskInstance>> {
        task.check()?;
        let label = task.label();
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = substream(
                seed,
                &[&label, &budget.to_string(), &index.to_string(), &attempt.to_string()],
            );
            match self.generate_once(task, budget, &mut rng) {
                Ok(mut out) => {
                    let base = format!("{label}-{budget}-{index:05}");
                    let paired = out.len() == 2;
                    for inst in &mut out {
                        inst.task = label.clone();
                        inst.id = match inst.meta.idk_leg {
                            Some(IdkLeg::Present) => format!("{base}-present"),
                            Some(IdkLeg::Absent) => format!("{base}-absent"),
                            None => base.clone(),
                        };
                        if paired {
                            inst.meta.pair_id = Some(base.clone());
                        }
                    }
                    return Ok(out);
                }
                Err(Error::Unsatisfiable(m)) => last = Some(m),
                Err(e) => return Err(e),
            }
        }
        Err(Error::Unsatisfiable(format!(
            "{label} at {budget} #{index}: {}",
            last.unwrap_or_default()
        )))
    }

    fn generate_once(&self, task: &TaskSpec, budget: usize, rng: &mut Stream) -> Result<Vec<TaskInstance>> {
        let n = task.n();
        let spec = self.context_spec(budget, if task.kind == TaskKind::Icl { 1 } else { n })?;
        let one = match task.kind {
            TaskKind::Standard => self.gen_retrieval(Style::Standard, &spec, rng)?,
            TaskKind::Paraphrase => self.gen_retrieval(Style::Paraphrase, &spec, rng)?,
            TaskKind::Pronoun => self.gen_retrieval(Style::Pronoun, &spec, rng)?,
            TaskKind::MultiStandard => {
                let mut inst = self.gen_multi_retrieval(n, &spec, rng)?;
                inst.kind = TaskKind::MultiStandard;
                if let Gold::Single { answer } = &inst.gold {
                    inst.gold = Gold::Ordered {
                        answers: vec![answer.clone()],
                    };
                }
                inst
            }
            TaskKind::Calculation => self.gen_calculation(&spec, rng)?,
            TaskKind::Rank => self.gen_rank(n, &spec, rng)?,
            TaskKind::Multihop => self.gen_multihop(&spec, rng)?,
            TaskKind::Twodiff => self.gen_twodiff(&spec, task.target_diff, rng)?,
            TaskKind::Citation => self.gen_citation(n, &spec, rng)?,
            TaskKind::Icl => self.gen_icl(task.demos, &spec, rng)?,
            TaskKind::Idk => {
                let (a, b) = self.gen_idk_pair(&spec, rng)?;
                return Ok(vec![a, b]);
            }
        };
        Ok(vec![one])
    }
}

fn unit_bio(record: BioRecord) -> UnitBio {
    UnitBio {
        record,
        forced_collision: false,
    }
}

fn lower(s: &str) -> String {
    s.to_lowercase()
}

pub fn retrieval_question(attr: Attribute, name: &str) -> String {
    format!("What is the {} of {name}?", attr.label())
}

pub fn retrieval_prefix(attr: Attribute, name: &str) -> String {
    format!("the {} of {name} is", attr.label())
}

pub fn calculation_question(a: &str, b: &str) -> String {
    format!("What is the age difference between {a} and {b}?")
}

pub fn rank_question(names: &[String]) -> String {
    format!(
        "Rank the following people from youngest to oldest: {}.",
        names.join(", ")
    )
}

pub fn twodiff_question(target: u32) -> String {
    format!("Who are the two people with {target} years age difference?")
}

// ---------------------------------------------------------------------------
// Suites

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRequest {
    pub tasks: Vec<TaskSpec>,
    pub budgets: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
}

/// Generate every (task, budget, index) slot; output order is fixed
/// regardless of scheduling.
pub fn generate_suite(generator: &Generator<'_>, request: &SuiteRequest) -> Result<Vec<TaskInstance>> {
    let slots: Vec<(&TaskSpec, usize, usize)> = request
        .tasks
        .iter()
        .flat_map(|t| {
            request
                .budgets
                .iter()
                .flat_map(move |&b| (0..request.instances).map(move |i| (t, b, i)))
        })
        .collect();
    let run = |&(t, b, i): &(&TaskSpec, usize, usize)| generator.generate(t, b, i, request.seed);
    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<TaskInstance>>> = {
        use rayon::prelude::*;
        slots.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<TaskInstance>>> = slots.iter().map(run).collect();
    let mut out = Vec::with_capacity(slots.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

pub fn write_suite<W: Write>(out: W, instances: &[TaskInstance]) -> Result<()> {
    let mut w = BufWriter::new(out);
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n").map_err(|e| Error::io("<suite>", e))?;
    }
    w.flush().map_err(|e| Error::io("<suite>", e))?;
    Ok(())
}

pub fn save_suite(path: impl AsRef<Path>, instances: &[TaskInstance]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_suite(file, instances)
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<TaskInstance>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: TaskInstance = serde_json::from_str(&line)?;
        if inst.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema `{}`", inst.schema)));
        }
        out.push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixture {
        pool: AttributePool,
        bank: TemplateBank,
        counter: TokenCounter,
        essays: EssayCorpus,
    }

    impl Fixture {
        fn new() -> Fixture {
            Fixture {
                pool: AttributePool::builtin(),
                bank: TemplateBank::builtin(),
                counter: TokenCounter::CharsPer4,
                essays: EssayCorpus::builtin(),
            }
        }

        fn generator(&self, options: GenOptions) -> Generator<'_> {
            Generator::new(&self.pool, &self.bank, &self.counter, &self.essays, options, 7)
        }
    }

    #[test]
    fn task_labels_round_trip() {
        for t in TaskSpec::default_suite() {
            assert_eq!(TaskSpec::parse(&t.label()).unwrap().label(), t.label());
        }
        assert_eq!(TaskSpec::parse("rank:5").unwrap().n(), 5);
        assert!(TaskSpec::parse("calculation:3").is_err());
        assert!(TaskSpec::parse("nonsense").is_err());
    }

    #[test]
    fn retrieval_gold_matches_needle() {
        let f = Fixture::new();
        let g = f.generator(GenOptions {
            attribute: Some(Attribute::Hobby),
            ..GenOptions::default()
        });
        let spec = g.context_spec(2048, 1).unwrap();
        let inst = g.gen_retrieval(Style::Standard, &spec, &mut seeded(3)).unwrap();
        let needle = &inst.context.bios[inst.context.needle_indices[0]];
        let Gold::Single { answer } = &inst.gold else { panic!() };
        assert_eq!(&needle.profile.hobby, answer);
        assert!(inst.questions[0].starts_with("What is the hobby of "));
        assert!(inst.context.token_count <= 2048);
    }

    #[test]
    fn pronoun_question_uses_name() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 1).unwrap();
        let inst = g.gen_retrieval(Style::Pronoun, &spec, &mut seeded(4)).unwrap();
        let needle = inst.context.bio_text(inst.context.needle_indices[0]);
        let name = &inst.meta.needles[0];
        assert!(inst.questions[0].contains(name.as_str()));
        assert_eq!(needle.matches(name.as_str()).count(), 1);
    }

    #[test]
    fn rank_gold_sorted_by_age() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 5).unwrap();
        let inst = g.gen_rank(5, &spec, &mut seeded(5)).unwrap();
        let Gold::NameOrder { names } = &inst.gold else {
            panic!()
        };
        let ages: Vec<u32> = names
            .iter()
            .map(|n| {
                inst.context.bios[inst.context.find_bio(n).unwrap()]
                    .profile
                    .age
                    .unwrap()
            })
            .collect();
        assert!(ages.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn twodiff_target_checked() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 2).unwrap();
        assert!(matches!(
            g.gen_twodiff(&spec, Some(51), &mut seeded(1)),
            Err(Error::Unsatisfiable(_))
        ));
        assert!(matches!(
            g.gen_twodiff(&spec, Some(0), &mut seeded(1)),
            Err(Error::Unsatisfiable(_))
        ));
        let inst = g.gen_twodiff(&spec, Some(18), &mut seeded(1)).unwrap();
        let Gold::AgeDifference { target, planted } = &inst.gold else {
            panic!()
        };
        let age = |n: &str| {
            inst.context.bios[inst.context.find_bio(n).unwrap()]
                .profile
                .age
                .unwrap()
        };
        assert_eq!(age(&planted[0]).abs_diff(age(&planted[1])), *target);
    }

    #[test]
    fn multihop_antecedent_first() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 2).unwrap();
        for s in 0..20 {
            let inst = g.gen_multihop(&spec, &mut seeded(s)).unwrap();
            let idx = &inst.context.needle_indices;
            assert!(idx[0] < idx[1]);
            let referencer = &inst.context.bios[idx[1]];
            assert_eq!(referencer.link.as_ref().unwrap().antecedent, inst.meta.needles[0]);
        }
    }

    #[test]
    fn citation_gold_is_one_based() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 2).unwrap();
        let inst = g.gen_citation(2, &spec, &mut seeded(6)).unwrap();
        let Gold::Citation { indices, answers } = &inst.gold else {
            panic!()
        };
        assert_eq!(answers.len(), 2);
        for &k in indices {
            let b = &inst.context.bios[k - 1];
            let prefix = format!("Bio [{k}]: ");
            assert_eq!(&inst.context.text[b.start - prefix.len()..b.start], prefix);
            assert!(inst.meta.needles.contains(&b.profile.full_name()));
        }
    }

    #[test]
    fn idk_present_equals_retrieval() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(2048, 1).unwrap();
        let plain = g.gen_retrieval(Style::Standard, &spec, &mut seeded(8)).unwrap();
        let (present, absent) = g.gen_idk_pair(&spec, &mut seeded(8)).unwrap();
        assert_eq!(present.context, plain.context);
        assert_eq!(present.questions, plain.questions);
        assert_eq!(present.gold, plain.gold);
        let Gold::Refusal { withheld } = &absent.gold else {
            panic!()
        };
        assert!(!absent.context.text.to_lowercase().contains(&withheld.to_lowercase()));
        assert_eq!(absent.questions, present.questions);
    }

    #[test]
    fn icl_constraints() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let spec = g.context_spec(4096, 1).unwrap();
        for s in 0..10 {
            let inst = g.gen_icl(None, &spec, &mut seeded(s)).unwrap();
            let q = &inst.context.bios[inst.context.needle_indices[0]];
            assert_eq!(inst.context.text.matches(q.profile.university.as_str()).count(), 1);
            let k = g.category_map.category(&q.profile.university).unwrap();
            assert_eq!(
                inst.gold,
                Gold::Category {
                    label: category_label(k)
                }
            );
            let hint = &inst.context.bios[inst.context.needle_indices[1]];
            assert_eq!(initial(&hint.profile.university), initial(&q.profile.university));
            assert!(inst.context.text.contains(&format!(
                "{} Answer: {}",
                icl_question(&hint.profile.full_name()),
                category_label(k)
            )));
            // the query group closes the context
            assert!(inst.context.needle_indices[0] + 2 >= inst.context.bios.len());
            assert!(!inst.context.text.ends_with(&category_label(k)));
            assert!(inst.context.token_count <= 4096);
        }
    }

    #[test]
    fn category_map_covers_initials_in_ten_buckets() {
        let pool = AttributePool::builtin();
        let m = CategoryMap::build(&pool, 1);
        assert!(m.categories.len() >= 10);
        let used: HashSet<u32> = m.categories.values().copied().collect();
        assert_eq!(used.len(), 10);
        assert_eq!(m, CategoryMap::build(&pool, 1));
    }

    #[test]
    fn bios_and_essay_share_question_and_gold() {
        let f = Fixture::new();
        let bios = f.generator(GenOptions::default());
        let essay = f.generator(GenOptions {
            haystack_mode: HaystackMode::Essay,
            ..GenOptions::default()
        });
        let a = bios.generate(&TaskSpec::new(TaskKind::Standard), 2048, 3, 11).unwrap();
        let b = essay.generate(&TaskSpec::new(TaskKind::Standard), 2048, 3, 11).unwrap();
        assert_eq!(a[0].questions, b[0].questions);
        assert_eq!(a[0].gold, b[0].gold);
        assert_ne!(a[0].context.text, b[0].context.text);
        assert_eq!(b[0].context.bios.len(), 1);
    }

    #[test]
    fn suite_round_trips_through_jsonl() {
        let f = Fixture::new();
        let g = f.generator(GenOptions::default());
        let req = SuiteRequest {
            tasks: TaskSpec::default_suite(),
            budgets: vec![2048],
            instances: 2,
            seed: 5,
        };
        let suite = generate_suite(&g, &req).unwrap();
        assert_eq!(suite.len(), 2 * 12);
        let mut buf = Vec::new();
        write_suite(&mut buf, &suite).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(&path, &buf).unwrap();
        let back = load_suite(&path).unwrap();
        assert_eq!(back.len(), suite.len());
        for (a, b) in back.iter().zip(&suite) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.context.text, b.context.text);
            assert_eq!(a.gold, b.gold);
        }
    }
}
