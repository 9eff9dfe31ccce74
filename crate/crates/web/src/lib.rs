//! Browser bindings for the demo page in `www/`.
//!
//! Three operations are exposed: build one task instance with explicit
//! budget/depth/density knobs, answer it with the oracle reader, and score
//! an arbitrary response against it.

use longbio::biotext::TemplateBank;
use longbio::contextforge::{Density, EssayCorpus, HaystackMode, TokenCounter};
use longbio::corpus::AttributePool;
use longbio::oracle::Oracle;
use longbio::scorekit::{score_all, ScoreRecord};
use longbio::taskgen::{GenOptions, Generator, IdkLeg, TaskInstance, TaskSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct BioSpan {
    start: usize,
    end: usize,
    name: String,
    needle: bool,
    forced_collision: bool,
}

#[derive(Serialize)]
struct View<'a> {
    instance: &'a TaskInstance,
    bio_spans: Vec<BioSpan>,
    context_chars: usize,
}

fn view(inst: &TaskInstance) -> View<'_> {
    let ctx = &inst.context;
    let bio_spans = ctx
        .bios
        .iter()
        .enumerate()
        .map(|(i, b)| BioSpan {
            start: b.start,
            end: b.end,
            name: b.profile.full_name(),
            needle: ctx.needle_indices.contains(&i),
            forced_collision: b.forced_collision,
        })
        .collect();
    View {
        instance: inst,
        bio_spans,
        context_chars: ctx.text.len(),
    }
}

/// Everything needed to generate and score in the page.
#[wasm_bindgen]
pub struct Demo {
    pool: AttributePool,
    bank: TemplateBank,
    essays: EssayCorpus,
    counter: TokenCounter,
    oracle: Oracle,
}

impl Default for Demo {
    fn default() -> Self {
        Demo::new()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        let bank = TemplateBank::builtin();
        Demo {
            pool: AttributePool::builtin(),
            oracle: Oracle::new(&bank),
            bank,
            essays: EssayCorpus::builtin(),
            counter: TokenCounter::CharsPer4,
        }
    }

    /// Build one instance. `depth` < 0 draws depths at random; `density` < 0
    /// keeps the natural value distribution. For IDK the absent leg is returned.
    /// The result is JSON: the instance plus per-bio spans for the needle map.
    pub fn generate(
        &self,
        task: &str,
        budget: usize,
        depth: f64,
        density: f64,
        essay: bool,
        seed: u32,
    ) -> Result<String, JsError> {
        self.generate_json(task, budget, depth, density, essay, seed)
            .map_err(|e| JsError::new(&e))
    }

    /// Oracle answer for an instance produced by [`Demo::generate`].
    pub fn answer(&self, instance_json: &str) -> Result<String, JsError> {
        let inst: TaskInstance = serde_json::from_str(instance_json)?;
        Ok(self.oracle.respond(&inst))
    }

    /// Score `response` against an instance; returns a JSON score record.
    pub fn score(&self, instance_json: &str, response: &str) -> Result<String, JsError> {
        score_one(instance_json, response).map_err(|e| JsError::new(&e))
    }
}

impl Demo {
    pub fn generate_json(
        &self,
        task: &str,
        budget: usize,
        depth: f64,
        density: f64,
        essay: bool,
        seed: u32,
    ) -> Result<String, String> {
        let spec = TaskSpec::parse(task).map_err(|e| e.to_string())?;
        let options = GenOptions {
            depths: (depth >= 0.0).then(|| vec![depth]),
            density: if density >= 0.0 {
                Density::Fixed(density)
            } else {
                Density::Natural
            },
            haystack_mode: if essay { HaystackMode::Essay } else { HaystackMode::Bios },
            ..GenOptions::default()
        };
        let g = Generator::new(
            &self.pool,
            &self.bank,
            &self.counter,
            &self.essays,
            options,
            u64::from(seed),
        );
        let out = g
            .generate(&spec, budget, 0, u64::from(seed))
            .map_err(|e| e.to_string())?;
        let inst = out
            .iter()
            .find(|i| i.meta.idk_leg != Some(IdkLeg::Present))
            .or(out.first())
            .ok_or("nothing generated")?;
        serde_json::to_string(&view(inst)).map_err(|e| e.to_string())
    }
}

/// Score one response. IDK legs are scored on their own: the absent leg
/// passes on the refusal sentence.
pub fn score_one(instance_json: &str, response: &str) -> Result<String, String> {
    let inst: TaskInstance = serde_json::from_str(instance_json).map_err(|e| e.to_string())?;
    let record: ScoreRecord = match inst.meta.idk_leg {
        Some(_) => longbio::scorekit::score_response(response, &inst),
        None => {
            let responses = [(inst.id.clone(), response.to_string())].into_iter().collect();
            score_all(std::slice::from_ref(&inst), &responses).remove(0)
        }
    };
    serde_json::to_string(&record).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn instance_of(view_json: &str) -> String {
        let v: Value = serde_json::from_str(view_json).unwrap();
        v["instance"].to_string()
    }

    #[test]
    fn oracle_round_trip_passes() {
        let demo = Demo::new();
        for task in ["standard", "rank:2", "twodiff", "citation:1", "icl", "multihop"] {
            let json = demo.generate_json(task, 2048, -1.0, -1.0, false, 5).unwrap();
            let inst = instance_of(&json);
            let parsed: TaskInstance = serde_json::from_str(&inst).unwrap();
            let answer = demo.oracle.respond(&parsed);
            let rec: Value = serde_json::from_str(&score_one(&inst, &answer).unwrap()).unwrap();
            assert_eq!(rec["verdict"], "pass", "{task}: {answer}");
        }
    }

    #[test]
    fn needle_map_marks_depth() {
        let demo = Demo::new();
        let json = demo.generate_json("standard", 2048, 0.0, 1.0, false, 9).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        let spans = v["bio_spans"].as_array().unwrap();
        assert_eq!(spans[0]["needle"], true);
        let forced = spans.iter().filter(|s| s["forced_collision"] == true).count();
        assert_eq!(forced, spans.len() - 1);
    }

    #[test]
    fn idk_absent_leg_refusal_passes() {
        let demo = Demo::new();
        let json = demo.generate_json("idk", 2048, -1.0, -1.0, false, 3).unwrap();
        let inst = instance_of(&json);
        let rec: Value =
            serde_json::from_str(&score_one(&inst, "The answer is not explicitly stated.").unwrap()).unwrap();
        assert_eq!(rec["verdict"], "pass");
    }

    #[test]
    fn bad_task_is_an_error() {
        assert!(Demo::new()
            .generate_json("juggling", 2048, -1.0, -1.0, false, 1)
            .is_err());
    }
}
