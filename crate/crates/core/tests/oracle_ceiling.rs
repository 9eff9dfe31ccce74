use std::collections::HashMap;

use longbio::biotext::TemplateBank;
use longbio::contextforge::{EssayCorpus, HaystackMode, TokenCounter};
use longbio::corpus::AttributePool;
use longbio::oracle::{Oracle, Responder, GIBBERISH};
use longbio::scorekit::{score_all, ScoreRecord};
use longbio::taskgen::{generate_suite, GenOptions, Generator, SuiteRequest, TaskInstance, TaskKind, TaskSpec};

fn suite(budgets: Vec<usize>, instances: usize, options: GenOptions, tasks: Vec<TaskSpec>) -> Vec<TaskInstance> {
    let pool = AttributePool::builtin();
    let bank = TemplateBank::builtin();
    let essays = EssayCorpus::builtin();
    let counter = TokenCounter::CharsPer4;
    let g = Generator::new(&pool, &bank, &counter, &essays, options, 11);
    generate_suite(
        &g,
        &SuiteRequest {
            tasks,
            budgets,
            instances,
            seed: 11,
        },
    )
    .unwrap()
}

fn answer_all(instances: &[TaskInstance], responder: &Responder) -> HashMap<String, String> {
    instances.iter().map(|i| (i.id.clone(), responder.respond(i))).collect()
}

fn failures(records: &[ScoreRecord]) -> Vec<&ScoreRecord> {
    records.iter().filter(|r| !r.verdict.passed()).collect()
}

#[test]
fn oracle_passes_every_task_at_2k() {
    let instances = suite(vec![2000], 12, GenOptions::default(), TaskSpec::default_suite());
    let oracle = Responder::Oracle(Oracle::new(&TemplateBank::builtin()));
    let records = score_all(&instances, &answer_all(&instances, &oracle));
    assert_eq!(records.len(), 11 * 12);
    let bad = failures(&records);
    assert!(bad.is_empty(), "{:#?}", &bad[..bad.len().min(3)]);
}

#[test]
fn oracle_passes_larger_task_variants() {
    let tasks = ["multi_standard:5", "multi_standard:10", "rank:5", "citation:2"]
        .iter()
        .map(|t| TaskSpec::parse(t).unwrap())
        .collect();
    let instances = suite(vec![4000], 6, GenOptions::default(), tasks);
    let oracle = Responder::Oracle(Oracle::new(&TemplateBank::builtin()));
    let records = score_all(&instances, &answer_all(&instances, &oracle));
    let bad = failures(&records);
    assert!(bad.is_empty(), "{:#?}", &bad[..bad.len().min(3)]);
}

#[test]
fn oracle_passes_in_essay_mode() {
    let options = GenOptions {
        haystack_mode: HaystackMode::Essay,
        ..GenOptions::default()
    };
    let tasks = TaskSpec::default_suite()
        .into_iter()
        .filter(|t| t.kind != TaskKind::Icl)
        .collect();
    let instances = suite(vec![4000], 4, options, tasks);
    let oracle = Responder::Oracle(Oracle::new(&TemplateBank::builtin()));
    let records = score_all(&instances, &answer_all(&instances, &oracle));
    let bad = failures(&records);
    assert!(bad.is_empty(), "{:#?}", &bad[..bad.len().min(3)]);
}

#[test]
fn gibberish_scores_zero() {
    let instances = suite(vec![2000], 6, GenOptions::default(), TaskSpec::default_suite());
    let records = score_all(&instances, &answer_all(&instances, &Responder::Gibberish));
    assert!(records.iter().all(|r| !r.verdict.passed()));
    assert!(!GIBBERISH.is_empty());
}

#[test]
fn oracle_passes_up_the_length_ladder() {
    let instances = suite(
        vec![16384, 65536, 131072],
        1,
        GenOptions::default(),
        TaskSpec::default_suite(),
    );
    for inst in &instances {
        let c = &inst.context;
        assert!(c.token_count <= c.token_budget, "{}", inst.id);
    }
    let oracle = Responder::Oracle(Oracle::new(&TemplateBank::builtin()));
    let records = score_all(&instances, &answer_all(&instances, &oracle));
    let bad = failures(&records);
    assert!(bad.is_empty(), "{:#?}", &bad[..bad.len().min(3)]);
}
