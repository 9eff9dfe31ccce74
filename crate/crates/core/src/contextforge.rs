//! Token-budgeted context assembly.
//!
//! A context is a sequence of *units* joined by a blank line. In bios mode
//! every unit is one biography; in essay mode (bio-in-a-haystack) units are
//! essay paragraphs plus the needle bios; in-context-learning contexts use
//! multi-bio demonstration units. Packing appends haystack units while the
//! running count plus the reserved needle tokens stays within budget, then
//! needles are inserted at their depths and the exact count of the final
//! text is taken.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::biotext::{BioRecord, Link, Style, TemplateBank};
use crate::corpus::{Attribute, PersonProfile};
use crate::error::{Error, Result};

/// Joins units in every context.
pub const SEPARATOR: &str = "\n\n";

const BUILTIN_ESSAYS: &str = include_str!("../data/essays.txt");

// ---------------------------------------------------------------------------
// Token counting

/// Pluggable token counter.
#[derive(Clone)]
pub enum TokenCounter {
    /// Unicode scalar values / 4, rounded up.
    CharsPer4,
    /// Whitespace-separated words × 1.3, rounded up.
    WordsX13,
    /// A long-running tokenizer process (see [`ExternalCounter`]).
    External(ExternalCounter),
}

impl std::fmt::Debug for TokenCounter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl TokenCounter {
    /// Parse `chars4`, `words13` or `cmd:<shell command>`.
    pub fn parse(spec: &str) -> Result<TokenCounter> {
        match spec.trim() {
            "chars4" | "chars/4" => Ok(TokenCounter::CharsPer4),
            "words13" | "words*1.3" => Ok(TokenCounter::WordsX13),
            other => match other.strip_prefix("cmd:") {
                Some(cmd) => Ok(TokenCounter::External(ExternalCounter::spawn(cmd.trim())?)),
                None => Err(Error::CounterUnavailable(format!("unknown counter `{other}`"))),
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TokenCounter::CharsPer4 => "chars4".into(),
            TokenCounter::WordsX13 => "words13".into(),
            TokenCounter::External(e) => format!("cmd:{}", e.command),
        }
    }

    pub fn count(&self, text: &str) -> Result<usize> {
        count_tokens(text, self)
    }
}

pub fn count_tokens(text: &str, counter: &TokenCounter) -> Result<usize> {
    match counter {
        TokenCounter::CharsPer4 => Ok(text.chars().count().div_ceil(4)),
        TokenCounter::WordsX13 => {
            let words = text.split_whitespace().count();
            Ok((words * 13).div_ceil(10))
        }
        TokenCounter::External(ext) => ext.count(text),
    }
}

/// Tokenizer process speaking a line protocol: one JSON string per stdin
/// line in, one decimal count per stdout line out.
#[derive(Clone)]
pub struct ExternalCounter {
    command: String,
    inner: Arc<Mutex<ExternalProcess>>,
}

struct ExternalProcess {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ExternalCounter {
    pub fn spawn(command: &str) -> Result<ExternalCounter> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::CounterUnavailable(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = BufReader::new(child.stdout.take().expect("piped"));
        let counter = ExternalCounter {
            command: command.into(),
            inner: Arc::new(Mutex::new(ExternalProcess { child, stdin, stdout })),
        };
        // Fail fast if the process cannot answer.
        counter.count("")?;
        Ok(counter)
    }

    pub fn count(&self, text: &str) -> Result<usize> {
        let unavailable = |e: String| Error::CounterUnavailable(format!("{}: {e}", self.command));
        let mut proc = self.inner.lock().map_err(|_| unavailable("poisoned".into()))?;
        let line = serde_json::to_string(text)?;
        writeln!(proc.stdin, "{line}").map_err(|e| unavailable(e.to_string()))?;
        proc.stdin.flush().map_err(|e| unavailable(e.to_string()))?;
        let mut reply = String::new();
        let n = proc
            .stdout
            .read_line(&mut reply)
            .map_err(|e| unavailable(e.to_string()))?;
        if n == 0 {
            return Err(unavailable("process closed its output".into()));
        }
        reply
            .trim()
            .parse()
            .map_err(|_| unavailable(format!("bad reply `{}`", reply.trim())))
    }
}

// ---------------------------------------------------------------------------
// Specs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Depths {
    UniformRandom,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Natural,
    Fixed(f64),
}

impl Density {
    pub fn value(self) -> Option<f64> {
        match self {
            Density::Natural => None,
            Density::Fixed(d) => Some(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaystackMode {
    #[default]
    Bios,
    Essay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub token_budget: usize,
    pub needle_count: usize,
    pub needle_depths: Depths,
    pub distractor_density: Density,
    pub haystack_mode: HaystackMode,
}

impl ContextSpec {
    pub fn new(token_budget: usize, needle_count: usize) -> ContextSpec {
        ContextSpec {
            token_budget,
            needle_count,
            needle_depths: Depths::UniformRandom,
            distractor_density: Density::Natural,
            haystack_mode: HaystackMode::Bios,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.token_budget == 0 {
            return Err(Error::InvalidSpec("token_budget must be positive".into()));
        }
        if self.needle_count == 0 {
            return Err(Error::InvalidSpec("needle_count must be at least 1".into()));
        }
        if let Depths::Explicit(d) = &self.needle_depths {
            if d.len() != self.needle_count {
                return Err(Error::InvalidSpec(format!(
                    "{} depths for {} needles",
                    d.len(),
                    self.needle_count
                )));
            }
            for &x in d {
                check_depth(x)?;
            }
        }
        if let Density::Fixed(d) = self.distractor_density {
            if !(0.0..=1.0).contains(&d) || d.is_nan() {
                return Err(Error::DensityOutOfRange(d));
            }
        }
        Ok(())
    }

    /// Concrete depths, drawing uniform ones when requested.
    pub fn resolve_depths<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.needle_depths {
            Depths::Explicit(d) => d.clone(),
            Depths::UniformRandom => (0..self.needle_count).map(|_| rng.random::<f64>()).collect(),
        }
    }
}

fn check_depth(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::DepthOutOfRange(d))
    }
}

// ---------------------------------------------------------------------------
// Units and packed contexts

/// Bio metadata kept in the serialized context (text lives in `PackedContext::text`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedBio {
    /// Byte range of the bio text (after any `Bio [k]: ` prefix).
    pub start: usize,
    pub end: usize,
    pub profile: PersonProfile,
    pub style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
    /// Attributes whose sentence is present.
    pub attributes: Vec<Attribute>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced_collision: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitBio {
    pub record: BioRecord,
    pub forced_collision: bool,
}

/// One packing unit: zero or more bios followed by optional trailing text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Unit {
    pub bios: Vec<UnitBio>,
    pub trailer: Option<String>,
    /// `(needle id, bio offset within the unit)` when this unit carries a needle.
    pub needle: Option<(usize, usize)>,
}

impl Unit {
    pub fn bio(record: BioRecord) -> Unit {
        Unit {
            bios: vec![UnitBio {
                record,
                forced_collision: false,
            }],
            ..Unit::default()
        }
    }

    pub fn paragraph(text: impl Into<String>) -> Unit {
        Unit {
            trailer: Some(text.into()),
            ..Unit::default()
        }
    }

    fn render(&self, first_number: usize, numbered: bool, out: &mut String) -> Vec<(usize, usize)> {
        let mut ranges = Vec::with_capacity(self.bios.len());
        for (i, b) in self.bios.iter().enumerate() {
            if i > 0 {
                out.push_str(SEPARATOR);
            }
            if numbered {
                out.push_str(&citation_prefix(first_number + i));
            }
            let start = out.len();
            out.push_str(&b.record.text);
            ranges.push((start, out.len()));
        }
        if let Some(t) = &self.trailer {
            if !self.bios.is_empty() {
                out.push_str(SEPARATOR);
            }
            out.push_str(t);
        }
        ranges
    }

    pub fn text(&self, first_number: usize, numbered: bool) -> String {
        let mut s = String::new();
        self.render(first_number, numbered, &mut s);
        s
    }
}

pub fn citation_prefix(number: usize) -> String {
    format!("Bio [{number}]: ")
}

/// An assembled context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedContext {
    pub text: String,
    /// Bios in context order with byte offsets.
    pub bios: Vec<PlacedBio>,
    /// Position in `bios` of needle k, indexed by needle id.
    pub needle_indices: Vec<usize>,
    pub token_count: usize,
    pub token_budget: usize,
    /// Largest unit cost (tokens incl. separator) seen while packing.
    pub max_unit_tokens: usize,
    /// Bios carry `Bio [k]: ` prefixes.
    #[serde(default)]
    pub numbered: bool,
    #[serde(skip)]
    pub units: Vec<Unit>,
}

impl PackedContext {
    pub fn bio_text(&self, index: usize) -> &str {
        let b = &self.bios[index];
        &self.text[b.start..b.end]
    }

    /// Roster of full names with their bios, in context order.
    pub fn names(&self) -> impl Iterator<Item = String> + '_ {
        self.bios.iter().map(|b| b.profile.full_name())
    }

    /// Index of the bio whose person is `name`.
    pub fn find_bio(&self, name: &str) -> Option<usize> {
        self.bios.iter().position(|b| b.profile.full_name() == name)
    }

    pub fn haystack_len(&self) -> usize {
        self.units.iter().filter(|u| u.needle.is_none()).count()
    }

    /// Re-assemble from `units`, trimming trailing haystack units until
    /// the exact count fits the budget.
    pub fn finalize(
        units: Vec<Unit>,
        numbered: bool,
        token_budget: usize,
        max_unit_tokens: usize,
        counter: &TokenCounter,
    ) -> Result<PackedContext> {
        let mut ctx = PackedContext {
            text: String::new(),
            bios: Vec::new(),
            needle_indices: Vec::new(),
            token_count: 0,
            token_budget,
            max_unit_tokens,
            numbered,
            units,
        };
        loop {
            ctx.assemble();
            ctx.token_count = counter.count(&ctx.text)?;
            if ctx.token_count <= token_budget {
                return Ok(ctx);
            }
            let Some(pos) = ctx.units.iter().rposition(|u| u.needle.is_none()) else {
                return Err(Error::BudgetTooSmall {
                    budget: token_budget,
                    reserve: ctx.token_count,
                });
            };
            let removed = ctx.units.remove(pos);
            let cost = counter.count(&removed.text(1, numbered))? + counter.count(SEPARATOR)?;
            ctx.max_unit_tokens = ctx.max_unit_tokens.max(cost);
        }
    }

    pub fn refinalize(self, counter: &TokenCounter) -> Result<PackedContext> {
        PackedContext::finalize(
            self.units,
            self.numbered,
            self.token_budget,
            self.max_unit_tokens,
            counter,
        )
    }

    fn assemble(&mut self) {
        let mut text = String::new();
        let mut bios = Vec::new();
        let mut needles: Vec<(usize, usize)> = Vec::new();
        for (i, unit) in self.units.iter().enumerate() {
            if i > 0 {
                text.push_str(SEPARATOR);
            }
            let first = bios.len();
            let ranges = unit.render(first + 1, self.numbered, &mut text);
            for (b, (start, end)) in unit.bios.iter().zip(ranges) {
                bios.push(PlacedBio {
                    start,
                    end,
                    profile: b.record.profile.clone(),
                    style: b.record.style,
                    link: b.record.link.clone(),
                    attributes: b.record.sentences.iter().map(|c| c.attribute).collect(),
                    forced_collision: b.forced_collision,
                });
            }
            if let Some((id, offset)) = unit.needle {
                needles.push((id, first + offset));
            }
        }
        needles.sort();
        self.text = text;
        self.bios = bios;
        self.needle_indices = needles.into_iter().map(|(_, i)| i).collect();
    }

    /// Mutable access to the bio at context position `index`.
    pub fn unit_bio_mut(&mut self, index: usize) -> Option<&mut UnitBio> {
        let mut seen = 0;
        for unit in &mut self.units {
            if index < seen + unit.bios.len() {
                return unit.bios.get_mut(index - seen);
            }
            seen += unit.bios.len();
        }
        None
    }

    /// Swap the needle units with ids `a` and `b`.
    pub fn swap_needles(&mut self, a: usize, b: usize) {
        let pa = self.units.iter().position(|u| u.needle.map(|n| n.0) == Some(a));
        let pb = self.units.iter().position(|u| u.needle.map(|n| n.0) == Some(b));
        if let (Some(pa), Some(pb)) = (pa, pb) {
            self.units.swap(pa, pb);
            self.assemble();
        }
    }
}

/// Cost of a unit when packed: its tokens plus one separator.
pub fn unit_cost(unit: &Unit, number_hint: usize, numbered: bool, counter: &TokenCounter) -> Result<usize> {
    Ok(counter.count(&unit.text(number_hint, numbered))? + counter.count(SEPARATOR)?)
}

/// Haystack units packed under a budget, before needle insertion.
#[derive(Debug, Clone)]
pub struct Packing {
    pub units: Vec<Unit>,
    pub used_tokens: usize,
    pub max_unit_tokens: usize,
}

/// Append units from `next` while `used + reserve + cost <= budget`.
///
/// `next` returning `Ok(None)` means the source ran dry before the budget
/// was filled.
pub fn pack_units<F>(
    mut next: F,
    budget: usize,
    reserve: usize,
    numbered: bool,
    counter: &TokenCounter,
) -> Result<Packing>
where
    F: FnMut() -> Result<Option<Unit>>,
{
    if budget < reserve {
        return Err(Error::BudgetTooSmall { budget, reserve });
    }
    let mut packing = Packing {
        units: Vec::new(),
        used_tokens: 0,
        max_unit_tokens: 0,
    };
    let mut bio_number = 1;
    loop {
        let Some(unit) = next()? else {
            return Err(Error::CorpusTooShort {
                available: packing.used_tokens,
                needed: budget - reserve,
            });
        };
        let cost = unit_cost(&unit, bio_number, numbered, counter)?;
        packing.max_unit_tokens = packing.max_unit_tokens.max(cost);
        if packing.used_tokens + reserve + cost > budget {
            return Ok(packing);
        }
        packing.used_tokens += cost;
        bio_number += unit.bios.len();
        packing.units.push(unit);
    }
}

/// Pack haystack bios drawn from `next_bio`, leaving `reserve` tokens for needles.
pub fn pack_haystack<F>(
    mut next_bio: F,
    spec: &ContextSpec,
    reserve: usize,
    numbered: bool,
    counter: &TokenCounter,
) -> Result<PackedContext>
where
    F: FnMut() -> Result<UnitBio>,
{
    spec.validate()?;
    let packing = pack_units(
        || {
            next_bio().map(|b| {
                Some(Unit {
                    bios: vec![b],
                    ..Unit::default()
                })
            })
        },
        spec.token_budget,
        reserve,
        numbered,
        counter,
    )?;
    PackedContext::finalize(
        packing.units,
        numbered,
        spec.token_budget,
        packing.max_unit_tokens,
        counter,
    )
}

/// Unit index at which needle `k` lands among `n` haystack units.
pub fn insertion_index(depth: f64, haystack_len: usize, k: usize) -> usize {
    let slots = haystack_len + k;
    ((depth * slots as f64).round() as usize).min(slots)
}

/// Insert needle units at their depths (one per needle, in needle order).
pub fn insert_needle_units(
    haystack: PackedContext,
    needles: Vec<Unit>,
    depths: &[f64],
    counter: &TokenCounter,
) -> Result<PackedContext> {
    if needles.len() != depths.len() {
        return Err(Error::InvalidSpec(format!(
            "{} needles but {} depths",
            needles.len(),
            depths.len()
        )));
    }
    for &d in depths {
        check_depth(d)?;
    }
    let mut units = haystack.units;
    let n = units.iter().filter(|u| u.needle.is_none()).count();
    let mut max_unit = haystack.max_unit_tokens;
    for (k, (mut unit, &depth)) in needles.into_iter().zip(depths).enumerate() {
        let id = units.iter().filter(|u| u.needle.is_some()).count();
        if unit.needle.is_none() {
            unit.needle = Some((id, 0));
        }
        max_unit = max_unit.max(unit_cost(&unit, 1, haystack.numbered, counter)?);
        let at = insertion_index(depth, n, k);
        units.insert(at, unit);
    }
    PackedContext::finalize(units, haystack.numbered, haystack.token_budget, max_unit, counter)
}

/// Insert single-bio needles.
pub fn insert_needles(
    haystack: PackedContext,
    needles: Vec<BioRecord>,
    depths: &[f64],
    counter: &TokenCounter,
) -> Result<PackedContext> {
    let units = needles.into_iter().map(Unit::bio).collect();
    insert_needle_units(haystack, units, depths, counter)
}

/// Add haystack units from `next` until the next one would overflow the
/// budget. Units go in front of any needles at the very end so end-depth
/// needles stay last. Packing against summed unit costs and a conservative
/// needle reserve can leave more than one unit of room; this closes it.
pub fn top_up<F>(mut ctx: PackedContext, mut next: F, counter: &TokenCounter) -> Result<PackedContext>
where
    F: FnMut() -> Result<Option<Unit>>,
{
    loop {
        let Some(unit) = next()? else {
            return Ok(ctx);
        };
        let trailing = ctx.units.iter().rev().take_while(|u| u.needle.is_some()).count();
        let at = ctx.units.len() - trailing;
        let cost = unit_cost(&unit, ctx.bios.len() + 1, ctx.numbered, counter)?;
        ctx.units.insert(at, unit);
        ctx.assemble();
        let n = counter.count(&ctx.text)?;
        if n > ctx.token_budget {
            ctx.units.remove(at);
            ctx.assemble();
            ctx.max_unit_tokens = ctx.max_unit_tokens.max(cost);
            return Ok(ctx);
        }
        ctx.token_count = n;
        ctx.max_unit_tokens = ctx.max_unit_tokens.max(cost);
    }
}

/// Tokens to set aside for `needles` (unit cost each).
pub fn needle_reserve(needles: &[Unit], numbered: bool, counter: &TokenCounter) -> Result<usize> {
    // Numbered prefixes are costed at a 4-digit index to stay conservative.
    needles.iter().map(|u| unit_cost(u, 1000, numbered, counter)).sum()
}

// ---------------------------------------------------------------------------
// Distractor density

/// With probability `density`, force the haystack bio's `attribute` to the
/// needle's value. Returns whether the collision was forced.
///
/// `Density::Fixed` always consumes exactly one draw.
pub fn apply_density_one<R: Rng + ?Sized>(
    mut bio: BioRecord,
    needle_value: &str,
    attribute: Attribute,
    density: Density,
    bank: &TemplateBank,
    rng: &mut R,
) -> Result<UnitBio> {
    let Density::Fixed(d) = density else {
        return Ok(UnitBio {
            record: bio,
            forced_collision: false,
        });
    };
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::DensityOutOfRange(d));
    }
    let forced = rng.random::<f64>() < d;
    if forced {
        bio.profile.set_value(attribute, needle_value)?;
        bio.rerender(bank)?;
    }
    Ok(UnitBio {
        record: bio,
        forced_collision: forced,
    })
}

/// [`apply_density_one`] over a list of haystack bios.
pub fn apply_density<R: Rng + ?Sized>(
    bios: Vec<BioRecord>,
    needle: &BioRecord,
    attribute: Attribute,
    density: Density,
    bank: &TemplateBank,
    rng: &mut R,
) -> Result<Vec<UnitBio>> {
    let value = needle
        .profile
        .value(attribute)
        .ok_or(Error::AttributeAbsent(attribute))?;
    bios.into_iter()
        .map(|b| apply_density_one(b, &value, attribute, density, bank, rng))
        .collect()
}

// ---------------------------------------------------------------------------
// Essay haystack

/// Paragraph-segmented essay text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssayCorpus {
    pub paragraphs: Vec<String>,
}

impl EssayCorpus {
    pub fn builtin() -> EssayCorpus {
        EssayCorpus::from_text(BUILTIN_ESSAYS)
    }

    /// Paragraphs are separated by blank lines; inner newlines are folded to spaces.
    pub fn from_text(text: &str) -> EssayCorpus {
        let normalized = text.replace("\r\n", "\n");
        let paragraphs = normalized
            .split("\n\n")
            .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .collect();
        EssayCorpus { paragraphs }
    }

    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<EssayCorpus> {
        let mut all = String::new();
        for p in paths {
            let p = p.as_ref();
            all.push_str(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?);
            all.push_str("\n\n");
        }
        Ok(EssayCorpus::from_text(&all))
    }
}

/// Needle bios inside contiguous essay text, at paragraph boundaries.
pub fn build_biah(
    needles: Vec<BioRecord>,
    essays: &EssayCorpus,
    spec: &ContextSpec,
    depths: &[f64],
    counter: &TokenCounter,
) -> Result<PackedContext> {
    build_biah_with(needles, essays, spec, depths, false, counter)
}

/// [`build_biah`] with optional `Bio [k]: ` numbering of the needles.
pub fn build_biah_with(
    needles: Vec<BioRecord>,
    essays: &EssayCorpus,
    spec: &ContextSpec,
    depths: &[f64],
    numbered: bool,
    counter: &TokenCounter,
) -> Result<PackedContext> {
    spec.validate()?;
    let units: Vec<Unit> = needles.into_iter().map(Unit::bio).collect();
    let reserve = needle_reserve(&units, numbered, counter)?;
    let mut paragraphs = essays.paragraphs.iter();
    let mut next = || Ok(paragraphs.next().map(|p| Unit::paragraph(p.clone())));
    let packing = pack_units(&mut next, spec.token_budget, reserve, numbered, counter)?;
    let haystack = PackedContext::finalize(
        packing.units,
        numbered,
        spec.token_budget,
        packing.max_unit_tokens,
        counter,
    )?;
    let ctx = insert_needle_units(haystack, units, depths, counter)?;
    top_up(ctx, next, counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biotext::render_bio;
    use crate::corpus::{sample_profile, AttributePool, BirthMode};
    use crate::rng::seeded;
    use std::collections::HashSet;

    fn bios(n: usize, seed: u64) -> Vec<BioRecord> {
        let pool = AttributePool::builtin();
        let bank = TemplateBank::builtin();
        let mut rng = seeded(seed);
        let mut taken = HashSet::new();
        (0..n)
            .map(|_| {
                let p = sample_profile(&pool, &mut rng, BirthMode::Birthdate, &taken).unwrap();
                taken.insert(p.full_name());
                render_bio(&p, Style::Standard, &bank, &mut rng).unwrap()
            })
            .collect()
    }

    fn haystack_of(list: Vec<BioRecord>) -> PackedContext {
        let units = list.into_iter().map(Unit::bio).collect();
        PackedContext::finalize(units, false, usize::MAX, 0, &TokenCounter::CharsPer4).unwrap()
    }

    #[test]
    fn builtin_counters() {
        assert_eq!(count_tokens("", &TokenCounter::CharsPer4).unwrap(), 0);
        assert_eq!(count_tokens("aaaa", &TokenCounter::CharsPer4).unwrap(), 1);
        assert_eq!(count_tokens("aaaaa", &TokenCounter::CharsPer4).unwrap(), 2);
        assert_eq!(count_tokens("", &TokenCounter::WordsX13).unwrap(), 0);
        assert_eq!(count_tokens("one two three", &TokenCounter::WordsX13).unwrap(), 4);
        assert_eq!(
            count_tokens("a b c d e f g h i j", &TokenCounter::WordsX13).unwrap(),
            13
        );
    }

    #[test]
    fn counter_parse() {
        assert!(matches!(TokenCounter::parse("chars4"), Ok(TokenCounter::CharsPer4)));
        assert!(matches!(TokenCounter::parse("words13"), Ok(TokenCounter::WordsX13)));
        assert!(matches!(
            TokenCounter::parse("bogus"),
            Err(Error::CounterUnavailable(_))
        ));
    }

    #[test]
    fn external_counter_line_protocol() {
        // counts words of the JSON-decoded line with a tiny shell+python-free responder
        let script = r#"while IFS= read -r line; do echo "${#line}"; done"#;
        let c = TokenCounter::parse(&format!("cmd:{script}")).unwrap();
        // JSON-encoded "abc" is 5 bytes including quotes
        assert_eq!(c.count("abc").unwrap(), 5);
        assert_eq!(c.count("").unwrap(), 2);
    }

    #[test]
    fn external_counter_failure_is_reported() {
        let err = TokenCounter::parse("cmd:exit 0").unwrap_err();
        assert!(matches!(err, Error::CounterUnavailable(_)));
    }

    #[test]
    fn depth_zero_and_one_hit_the_ends() {
        let list = bios(12, 1);
        let needle = list[11].clone();
        let hay = haystack_of(list[..11].to_vec());
        let c = TokenCounter::CharsPer4;
        let first = insert_needles(hay.clone(), vec![needle.clone()], &[0.0], &c).unwrap();
        assert_eq!(first.needle_indices, vec![0]);
        let last = insert_needles(hay, vec![needle.clone()], &[1.0], &c).unwrap();
        assert_eq!(last.needle_indices, vec![11]);
        assert_eq!(last.bios[11].profile, needle.profile);
    }

    #[test]
    fn half_depth_over_100_bios() {
        // round(0.5 * 100) = 50, admissible set {50, 51}
        assert_eq!(insertion_index(0.5, 100, 0), 50);
        let list = bios(101, 2);
        let hay = haystack_of(list[..100].to_vec());
        let ctx = insert_needles(hay, vec![list[100].clone()], &[0.5], &TokenCounter::CharsPer4).unwrap();
        assert!([50, 51].contains(&ctx.needle_indices[0]));
    }

    #[test]
    fn depth_out_of_range_is_rejected() {
        let list = bios(3, 3);
        let hay = haystack_of(list[..2].to_vec());
        assert!(matches!(
            insert_needles(hay, vec![list[2].clone()], &[1.5], &TokenCounter::CharsPer4),
            Err(Error::DepthOutOfRange(_))
        ));
    }

    #[test]
    fn pack_respects_budget_and_sandwich() {
        let c = TokenCounter::CharsPer4;
        let pool = bios(200, 4);
        let spec = ContextSpec::new(2048, 1);
        let mut it = pool.into_iter();
        let ctx = pack_haystack(
            || {
                Ok(UnitBio {
                    record: it.next().unwrap(),
                    forced_collision: false,
                })
            },
            &spec,
            0,
            false,
            &c,
        )
        .unwrap();
        assert!(ctx.token_count <= 2048);
        assert!(ctx.token_count + ctx.max_unit_tokens >= 2048);
    }

    #[test]
    fn budget_just_above_one_bio_does_not_fail() {
        let c = TokenCounter::CharsPer4;
        let list = bios(20, 5);
        let one = unit_cost(&Unit::bio(list[0].clone()), 1, false, &c).unwrap();
        let spec = ContextSpec::new(one + 1, 1);
        let mut it = list.into_iter().skip(1);
        let needle = bios(1, 99).pop().unwrap();
        let reserve = needle_reserve(&[Unit::bio(needle.clone())], false, &c).unwrap();
        let spec = ContextSpec {
            token_budget: spec.token_budget.max(reserve + 1),
            ..spec
        };
        let hay = pack_haystack(
            || {
                Ok(UnitBio {
                    record: it.next().unwrap(),
                    forced_collision: false,
                })
            },
            &spec,
            reserve,
            false,
            &c,
        )
        .unwrap();
        let ctx = insert_needles(hay, vec![needle], &[0.5], &c).unwrap();
        assert!(ctx.token_count <= spec.token_budget);
        assert_eq!(ctx.needle_indices.len(), 1);
    }

    #[test]
    fn reserve_above_budget_errors() {
        let spec = ContextSpec::new(10, 1);
        let r = pack_haystack(|| unreachable!(), &spec, 11, false, &TokenCounter::CharsPer4);
        assert!(matches!(r, Err(Error::BudgetTooSmall { .. })));
    }

    #[test]
    fn density_extremes() {
        let bank = TemplateBank::builtin();
        let list = bios(101, 6);
        let needle = list[0].clone();
        let hay = list[1..].to_vec();
        let mut rng = seeded(1);
        let all = apply_density(
            hay.clone(),
            &needle,
            Attribute::Hobby,
            Density::Fixed(1.0),
            &bank,
            &mut rng,
        )
        .unwrap();
        assert!(all
            .iter()
            .all(|b| b.forced_collision && b.record.profile.hobby == needle.profile.hobby));
        assert!(all.iter().all(|b| b.record.text.contains(&needle.profile.hobby)));
        let none = apply_density(
            hay.clone(),
            &needle,
            Attribute::Hobby,
            Density::Fixed(0.0),
            &bank,
            &mut rng,
        )
        .unwrap();
        assert!(none.iter().all(|b| !b.forced_collision));
        for (a, b) in none.iter().zip(&hay) {
            assert_eq!(&a.record, b);
        }
        let natural = apply_density(
            hay.clone(),
            &needle,
            Attribute::Hobby,
            Density::Natural,
            &bank,
            &mut rng,
        )
        .unwrap();
        assert!(natural.iter().zip(&hay).all(|(a, b)| &a.record == b));
        // persons remain distinct
        let names: HashSet<_> = all.iter().map(|b| b.record.name()).collect();
        assert_eq!(names.len(), 100);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ContextSpec::new(1000, 2);
        spec.needle_depths = Depths::Explicit(vec![0.5]);
        assert!(spec.validate().is_err());
        spec.needle_depths = Depths::Explicit(vec![0.5, 1.2]);
        assert!(matches!(spec.validate(), Err(Error::DepthOutOfRange(_))));
        spec.needle_depths = Depths::Explicit(vec![0.5, 1.0]);
        spec.distractor_density = Density::Fixed(1.5);
        assert!(matches!(spec.validate(), Err(Error::DensityOutOfRange(_))));
        assert!(ContextSpec::new(1000, 0).validate().is_err());
    }

    #[test]
    fn biah_depth_zero_starts_with_bio() {
        let c = TokenCounter::CharsPer4;
        let needle = bios(1, 7).pop().unwrap();
        let spec = ContextSpec::new(2048, 1);
        let ctx = build_biah(vec![needle.clone()], &EssayCorpus::builtin(), &spec, &[0.0], &c).unwrap();
        assert!(ctx.text.starts_with(&needle.text));
        assert_eq!(ctx.bios.len(), 1);
        assert!(ctx.token_count <= 2048);
        assert!(ctx.text.len() > needle.text.len() * 4);
    }

    #[test]
    fn biah_short_corpus_errors() {
        let c = TokenCounter::CharsPer4;
        let needle = bios(1, 8).pop().unwrap();
        let tiny = EssayCorpus::from_text("One short paragraph.\n\nAnother one.");
        let spec = ContextSpec::new(4096, 1);
        assert!(matches!(
            build_biah(vec![needle], &tiny, &spec, &[0.5], &c),
            Err(Error::CorpusTooShort { .. })
        ));
    }

    #[test]
    fn numbered_contexts_prefix_every_bio() {
        let list = bios(5, 9);
        let units = list.into_iter().map(Unit::bio).collect();
        let ctx = PackedContext::finalize(units, true, usize::MAX, 0, &TokenCounter::CharsPer4).unwrap();
        for (i, b) in ctx.bios.iter().enumerate() {
            let prefix = citation_prefix(i + 1);
            assert_eq!(&ctx.text[b.start - prefix.len()..b.start], prefix);
        }
        assert!(ctx.text.starts_with("Bio [1]: "));
    }
}
