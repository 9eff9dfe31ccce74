//! Deterministic scoring of responses against gold answers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Attribute;
use crate::error::{Error, Result};
use crate::taskgen::{Gold, IdkLeg, TaskInstance, TaskKind};

/// The refusal sentence IDK prompts ask for.
pub const REFUSAL: &str = "The answer is not explicitly stated";

/// Lead-in every understanding prompt pre-fills; responses often repeat it.
pub const CONTEXT_ECHO: &str = "Based on the provided context,";

static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)the answer is|answer:").expect("valid"));
static BRACKETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[(\d+)\]").expect("valid"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub kind: TaskKind,
    pub task: String,
    pub budget: usize,
    pub verdict: Verdict,
    /// Parsed answer(s) or names, normalized.
    pub parsed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations: Option<Vec<usize>>,
    /// Set on failed single-retrieval records only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hallucinated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl ScoreRecord {
    fn new(instance: &TaskInstance, verdict: Verdict, parsed: Vec<String>) -> ScoreRecord {
        ScoreRecord {
            id: instance.id.clone(),
            kind: instance.kind,
            task: instance.task.clone(),
            budget: instance.length_budget,
            verdict,
            parsed,
            citations: None,
            hallucinated: None,
            notes: None,
            attribute: instance.meta.attributes.first().copied(),
            depth: instance.meta.depths.first().copied(),
            density: instance.meta.density,
        }
    }
}

// ---------------------------------------------------------------------------
// Text handling

/// Lowercase, collapse whitespace, drop surrounding quotes and terminal punctuation.
pub fn normalize_answer(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_start_matches(|c: char| c.is_whitespace() || "\"'“‘(".contains(c))
        .trim_end_matches(|c: char| c.is_whitespace() || ".,;:!?\"'”’)".contains(c))
        .to_string()
}

/// [`normalize_answer`], then remove leading echoes such as the assistant prefix.
pub fn normalize_with_echoes(text: &str, echoes: &[&str]) -> String {
    let mut norm = normalize_answer(text);
    for echo in echoes {
        let e = normalize_answer(echo);
        if !e.is_empty() && norm.starts_with(&e) {
            norm = norm[e.len()..].trim_start_matches([',', ':', ' ']).to_string();
        }
    }
    norm
}

/// The answer part of a response: after the last "the answer is" / "answer:"
/// marker when present, first non-empty line.
pub fn extract_answer(response: &str) -> &str {
    let tail = match MARKER.find_iter(response).last() {
        Some(m) => &response[m.end()..],
        None => response,
    };
    tail.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("")
}

/// Text after the last marker, or the whole response.
fn answer_region(response: &str) -> &str {
    match MARKER.find_iter(response).last() {
        Some(m) => &response[m.end()..],
        None => response,
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Byte offset just past the first word-bounded occurrence of `needle` at or after `from`.
fn find_word(hay: &str, needle: &str, from: usize) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let mut start = from;
    while let Some(off) = hay.get(start..).and_then(|h| h.find(needle)) {
        let s = start + off;
        let e = s + needle.len();
        let before = hay[..s].chars().next_back();
        let after = hay[e..].chars().next();
        if !is_word_char(before) && !is_word_char(after) {
            return Some((s, e));
        }
        start = s + hay[s..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Word-bounded containment of normalized `gold` in normalized `answer`.
pub fn contains_gold(answer: &str, gold: &str) -> bool {
    find_word(&normalize_answer(answer), &normalize_answer(gold), 0).is_some()
}

/// Roster names in order of first appearance; longer names claim text first.
pub fn extract_names(text: &str, roster: &[String]) -> Vec<String> {
    let hay = text.to_lowercase();
    let mut names: Vec<&String> = roster.iter().collect();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let mut claimed: Vec<(usize, usize)> = Vec::new();
    let mut hits: Vec<(usize, &String)> = Vec::new();
    for name in names {
        let needle = name.to_lowercase();
        let mut from = 0;
        while let Some((s, e)) = find_word(&hay, &needle, from) {
            if !claimed.iter().any(|&(a, b)| s < b && a < e) {
                claimed.push((s, e));
                hits.push((s, name));
            }
            from = e;
        }
    }
    hits.sort();
    let mut out: Vec<String> = Vec::new();
    for (_, n) in hits {
        if !out.contains(n) {
            out.push(n.clone());
        }
    }
    out
}

fn echoes(instance: &TaskInstance) -> Vec<&str> {
    let mut e = vec![CONTEXT_ECHO];
    e.extend(instance.question_prefixes.iter().map(String::as_str));
    e
}

fn is_single_retrieval(kind: TaskKind) -> bool {
    matches!(kind, TaskKind::Standard | TaskKind::Paraphrase | TaskKind::Pronoun)
}

// ---------------------------------------------------------------------------
// Scorers

/// Gold containment in the first answer line.
pub fn score_exact(response: &str, instance: &TaskInstance) -> ScoreRecord {
    let gold = match &instance.gold {
        Gold::Single { answer } => answer.as_str(),
        Gold::Category { label } => label.as_str(),
        Gold::Ordered { answers } if answers.len() == 1 => answers[0].as_str(),
        _ => {
            let mut r = ScoreRecord::new(instance, Verdict::Fail, Vec::new());
            r.notes = Some("gold is not a single value".into());
            return r;
        }
    };
    let answer = normalize_with_echoes(extract_answer(response), &echoes(instance));
    let pass = find_word(&answer, &normalize_answer(gold), 0).is_some();
    let mut r = ScoreRecord::new(instance, Verdict::from_bool(pass), vec![answer.clone()]);
    if !pass && is_single_retrieval(instance.kind) {
        r.hallucinated = Some(!normalize_answer(&instance.context.text).contains(&answer));
    }
    r
}

/// All-or-nothing, in question order.
pub fn score_multi(response: &str, instance: &TaskInstance) -> ScoreRecord {
    let Gold::Ordered { answers } = &instance.gold else {
        return score_exact(response, instance);
    };
    let hay = normalize_answer(response);
    let mut pos = 0;
    let mut parsed = Vec::new();
    let mut pass = true;
    for a in answers {
        let g = normalize_answer(a);
        match find_word(&hay, &g, pos) {
            Some((_, e)) => {
                parsed.push(g);
                pos = e;
            }
            None => {
                pass = false;
                break;
            }
        }
    }
    ScoreRecord::new(instance, Verdict::from_bool(pass), parsed)
}

/// Name sequence must equal the gold order exactly.
pub fn score_rank(response: &str, instance: &TaskInstance) -> ScoreRecord {
    let Gold::NameOrder { names } = &instance.gold else {
        return ScoreRecord::new(instance, Verdict::Fail, Vec::new());
    };
    let found = extract_names(answer_region(response), &instance.roster());
    let pass = &found == names;
    ScoreRecord::new(instance, Verdict::from_bool(pass), found)
}

/// Any two context persons whose ages differ by the target.
pub fn score_twodiff(response: &str, instance: &TaskInstance) -> ScoreRecord {
    let Gold::AgeDifference { target, .. } = &instance.gold else {
        return ScoreRecord::new(instance, Verdict::Fail, Vec::new());
    };
    let found = extract_names(answer_region(response), &instance.roster());
    let pass = match found.as_slice() {
        [a, b, ..] => {
            let age = |n: &str| {
                instance
                    .context
                    .find_bio(n)
                    .and_then(|i| instance.context.bios[i].profile.age)
            };
            matches!((age(a), age(b)), (Some(x), Some(y)) if x.abs_diff(y) == *target)
        }
        _ => false,
    };
    let parsed = found.into_iter().take(2).collect();
    ScoreRecord::new(instance, Verdict::from_bool(pass), parsed)
}

/// Set equality between cited `[n]` indices and the needle indices.
pub fn score_citation(response: &str, instance: &TaskInstance) -> ScoreRecord {
    let Gold::Citation { indices, .. } = &instance.gold else {
        return ScoreRecord::new(instance, Verdict::Fail, Vec::new());
    };
    let cited: BTreeSet<usize> = BRACKETED
        .captures_iter(response)
        .filter_map(|c| c[1].parse().ok())
        .collect();
    let gold: BTreeSet<usize> = indices.iter().copied().collect();
    let mut r = ScoreRecord::new(instance, Verdict::from_bool(cited == gold), Vec::new());
    r.citations = Some(cited.into_iter().collect());
    r
}

/// Whether a response contains the refusal sentence.
pub fn is_refusal(response: &str) -> bool {
    normalize_answer(response).contains(&normalize_answer(REFUSAL))
}

/// Pass iff the present leg is answered and the absent leg is refused.
pub fn score_idk(
    present_response: &str,
    absent_response: &str,
    present: &TaskInstance,
    absent: &TaskInstance,
) -> ScoreRecord {
    let leg = score_exact(present_response, present);
    let refused = is_refusal(absent_response);
    let pass = leg.verdict.passed() && refused;
    let mut r = ScoreRecord::new(present, Verdict::from_bool(pass), leg.parsed);
    r.id = present.meta.pair_id.clone().unwrap_or_else(|| present.id.clone());
    r.notes = Some(format!(
        "present={} absent_refused={refused}",
        if leg.verdict.passed() { "pass" } else { "fail" }
    ));
    r.attribute = absent.meta.attributes.first().copied().or(r.attribute);
    r
}

/// Dispatch by task kind (IDK legs are scored in pairs by [`score_all`]).
pub fn score_response(response: &str, instance: &TaskInstance) -> ScoreRecord {
    match instance.kind {
        TaskKind::MultiStandard => score_multi(response, instance),
        TaskKind::Rank => score_rank(response, instance),
        TaskKind::Twodiff => score_twodiff(response, instance),
        TaskKind::Citation => score_citation(response, instance),
        TaskKind::Idk if instance.meta.idk_leg == Some(IdkLeg::Absent) => {
            ScoreRecord::new(instance, Verdict::from_bool(is_refusal(response)), Vec::new())
        }
        _ => score_exact(response, instance),
    }
}

/// Score a suite against `responses` keyed by instance id. IDK pairs yield
/// one record keyed by pair id; a missing response fails.
pub fn score_all(instances: &[TaskInstance], responses: &HashMap<String, String>) -> Vec<ScoreRecord> {
    let by_id: HashMap<&str, &TaskInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut out = Vec::with_capacity(instances.len());
    for inst in instances {
        if inst.kind == TaskKind::Idk {
            if inst.meta.idk_leg != Some(IdkLeg::Present) {
                continue;
            }
            let pair = inst.meta.pair_id.clone().unwrap_or_default();
            let absent_id = format!("{pair}-absent");
            let Some(absent) = by_id.get(absent_id.as_str()) else {
                let mut r = ScoreRecord::new(inst, Verdict::Fail, Vec::new());
                r.notes = Some("absent leg missing from suite".into());
                out.push(r);
                continue;
            };
            match (responses.get(&inst.id), responses.get(&absent_id)) {
                (Some(p), Some(a)) => out.push(score_idk(p, a, inst, absent)),
                _ => {
                    let mut r = ScoreRecord::new(inst, Verdict::Fail, Vec::new());
                    r.id = pair;
                    r.notes = Some("missing response".into());
                    out.push(r);
                }
            }
            continue;
        }
        match responses.get(&inst.id) {
            Some(resp) => out.push(score_response(resp, inst)),
            None => {
                let mut r = ScoreRecord::new(inst, Verdict::Fail, Vec::new());
                r.notes = Some("missing response".into());
                out.push(r);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HallucinationStats {
    pub hallucinated: usize,
    pub failed: usize,
    pub total: usize,
    /// `None` when nothing failed.
    pub rate: Option<f64>,
}

impl HallucinationStats {
    pub fn from_counts(hallucinated: usize, failed: usize, total: usize) -> HallucinationStats {
        HallucinationStats {
            hallucinated,
            failed,
            total,
            rate: (failed > 0).then(|| hallucinated as f64 / failed as f64),
        }
    }
}

/// Among failed single-retrieval records, the share whose answer does not
/// occur in the instance context.
pub fn hallucination_rate(records: &[ScoreRecord], instances: &[TaskInstance]) -> HallucinationStats {
    let by_id: HashMap<&str, &TaskInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut total = 0;
    let mut failed = 0;
    let mut hallucinated = 0;
    for r in records.iter().filter(|r| is_single_retrieval(r.kind)) {
        total += 1;
        if r.verdict.passed() {
            continue;
        }
        failed += 1;
        let answer = r.parsed.first().map(String::as_str).unwrap_or("");
        let absent = match by_id.get(r.id.as_str()) {
            Some(inst) => !normalize_answer(&inst.context.text).contains(answer),
            None => r.hallucinated.unwrap_or(false),
        };
        if absent {
            hallucinated += 1;
        }
    }
    HallucinationStats::from_counts(hallucinated, failed, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Task,
    Budget,
    Attribute,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Task => "task",
            GroupKey::Budget => "budget",
            GroupKey::Attribute => "attribute",
        }
    }

    fn value(self, r: &ScoreRecord) -> String {
        match self {
            GroupKey::Task => r.task.clone(),
            GroupKey::Budget => r.budget.to_string(),
            GroupKey::Attribute => r.attribute.map_or_else(|| "-".into(), |a| a.key().into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: BTreeMap<String, String>,
    pub n: usize,
    pub passed: usize,
    pub accuracy: f64,
}

/// Accuracy per distinct combination of `keys`.
pub fn aggregate(records: &[ScoreRecord], keys: &[GroupKey]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<Vec<String>, (usize, usize)> = BTreeMap::new();
    for r in records {
        let k: Vec<String> = keys.iter().map(|g| g.value(r)).collect();
        let e = groups.entry(k).or_default();
        e.0 += 1;
        e.1 += usize::from(r.verdict.passed());
    }
    groups
        .into_iter()
        .map(|(k, (n, passed))| ReportRow {
            group: keys.iter().map(|g| g.name().to_string()).zip(k).collect(),
            n,
            passed,
            accuracy: passed as f64 / n as f64,
        })
        .collect()
}

/// Per-attribute rows for one task plus an `all` row.
pub fn attribute_split(records: &[ScoreRecord], task: &str) -> Vec<ReportRow> {
    let subset: Vec<ScoreRecord> = records.iter().filter(|r| r.task == task).cloned().collect();
    let mut rows = aggregate(&subset, &[GroupKey::Attribute]);
    if !subset.is_empty() {
        let passed = subset.iter().filter(|r| r.verdict.passed()).count();
        rows.push(ReportRow {
            group: [("attribute".to_string(), "all".to_string())].into(),
            n: subset.len(),
            passed,
            accuracy: passed as f64 / subset.len() as f64,
        });
    }
    rows
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let keys: Vec<String> = rows
        .first()
        .map(|r| r.group.keys().cloned().collect())
        .unwrap_or_default();
    let mut out = keys.join(",");
    if !keys.is_empty() {
        out.push(',');
    }
    out.push_str("accuracy,passed,n\n");
    for r in rows {
        for k in &keys {
            out.push_str(&csv_field(r.group.get(k).map(String::as_str).unwrap_or("")));
            out.push(',');
        }
        out.push_str(&format!("{:.6},{},{}\n", r.accuracy, r.passed, r.n));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub depth: f64,
    pub density: f64,
    pub n: usize,
    pub passed: usize,
    pub accuracy: Option<f64>,
}

/// Depth × density accuracy grid; records snap to the nearest grid value.
pub fn depth_density_grid(records: &[ScoreRecord], depths: &[f64], densities: &[f64]) -> Vec<GridCell> {
    let nearest = |axis: &[f64], x: f64| {
        axis.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
    };
    let mut counts = vec![(0usize, 0usize); depths.len() * densities.len()];
    for r in records {
        let (Some(d), Some(p)) = (r.depth, r.density) else {
            continue;
        };
        let (Some(i), Some(j)) = (nearest(depths, d), nearest(densities, p)) else {
            continue;
        };
        let c = &mut counts[i * densities.len() + j];
        c.0 += 1;
        c.1 += usize::from(r.verdict.passed());
    }
    let mut out = Vec::with_capacity(counts.len());
    for (i, &depth) in depths.iter().enumerate() {
        for (j, &density) in densities.iter().enumerate() {
            let (n, passed) = counts[i * densities.len() + j];
            out.push(GridCell {
                depth,
                density,
                n,
                passed,
                accuracy: (n > 0).then(|| passed as f64 / n as f64),
            });
        }
    }
    out
}

pub fn grid_to_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("depth,density,accuracy,n\n");
    for c in cells {
        let acc = c.accuracy.map_or_else(String::new, |a| format!("{a:.6}"));
        out.push_str(&format!("{},{},{},{}\n", c.depth, c.density, acc, c.n));
    }
    out
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a two-sided p-value from the t approximation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidSpec(format!("{} vs {} observations", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidSpec("spearman needs at least 3 observations".into()));
    }
    let rho = pearson(&average_ranks(xs), &average_ranks(ys))
        .ok_or_else(|| Error::InvalidSpec("constant input has no rank correlation".into()))?;
    let df = (xs.len() - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok((rho, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_vectors() {
        assert_eq!(normalize_answer("Dandyism."), "dandyism");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("  Santa   Paula "), "santa paula");
    }

    #[test]
    fn echo_stripping() {
        let s = normalize_with_echoes(
            "Based on the provided context, the hobby of Ann Lee Fox is chess.",
            &[CONTEXT_ECHO, "the hobby of Ann Lee Fox is"],
        );
        assert_eq!(s, "chess");
    }

    #[test]
    fn extraction_prefers_last_marker() {
        assert_eq!(extract_answer("61 - 43 = 18.\nThe answer is 18."), "18.");
        assert_eq!(extract_answer("\n\n  mycology\nmore"), "mycology");
        assert_eq!(extract_answer("Reasoning...\nAnswer: Category 3"), "Category 3");
    }

    #[test]
    fn word_bounded_containment() {
        assert!(contains_gold("the age difference is 18", "18"));
        assert!(!contains_gold("118", "18"));
        assert!(!contains_gold("Category 10", "Category 1"));
        assert!(contains_gold("Category 3", "Category 3"));
    }

    #[test]
    fn name_extraction_longest_first() {
        let roster = vec![
            "Ann Lee Fox".to_string(),
            "Ann Lee Foxley".to_string(),
            "Bo Kim Day".to_string(),
        ];
        assert_eq!(
            extract_names("Ann Lee Foxley, then Bo Kim Day and ann lee fox", &roster),
            vec!["Ann Lee Foxley", "Bo Kim Day", "Ann Lee Fox"]
        );
    }

    #[test]
    fn hallucination_counts() {
        let s = HallucinationStats::from_counts(14, 24, 800);
        assert!((s.rate.unwrap() - 0.5833333333).abs() < 1e-6);
        assert_eq!(HallucinationStats::from_counts(0, 0, 800).rate, None);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn spearman_extremes() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (r, p) = spearman(&xs, &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(p, 0.0);
        let (r, _) = spearman(&xs, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r, -1.0);
        assert!(spearman(&xs[..2], &xs[..2]).is_err());
        assert!(spearman(&xs, &xs[..4]).is_err());
    }

    #[test]
    fn spearman_p_value_reference() {
        // rho = 0.8 with n = 5: t = 0.8 * sqrt(3 / 0.36) = 2.3094, two-sided p = 0.1041
        let (r, p) = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert!((p - 0.1041).abs() < 1e-3, "{p}");
    }

    #[test]
    fn grid_has_all_cells() {
        let axis = [0.0, 0.25, 0.5, 0.75, 1.0];
        let cells = depth_density_grid(&[], &axis, &axis);
        assert_eq!(cells.len(), 25);
        assert!(cells.iter().all(|c| c.n == 0 && c.accuracy.is_none()));
        assert!(grid_to_csv(&cells).starts_with("depth,density,accuracy,n\n"));
    }
}
