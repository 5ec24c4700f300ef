//! End-to-end harness flows: simulator probes, scripted fixtures, the mock
//! chat-completions server, and record resumability.

use std::sync::Arc;

use nonhalt_core::recipe::{build_query, TemplateId};
use nonhalt_core::sampler::SamplerConfig;
use nonhalt_core::sim::{HashEchoParams, SimModel};
use nonhalt_core::symbol::Vocab;
use nonhalt_harness::mock::{MockReply, MockServer};
use nonhalt_harness::probe::{probe, Classification, ProbeOptions, ProbePrompt};
use nonhalt_harness::record::{read_records, RecordSink};
use nonhalt_harness::remote::RemoteClient;
use nonhalt_harness::runner::{
    find_min_repetitions, run_temperature_sweep, run_wordlist_experiment,
};
use nonhalt_harness::testing::ScriptedClient;
use nonhalt_harness::{FinishReason, ProbeSession, SimClient};

fn greedy(seed: u64) -> SamplerConfig<f64> {
    SamplerConfig::new(0.0, usize::MAX, 1.0, seed).unwrap()
}

fn quick_opts(budget: usize) -> ProbeOptions {
    ProbeOptions {
        output_budget: budget,
        ..ProbeOptions::default()
    }
}

/// TABLE model that repeats symbol 0 forever.
fn forced_cycle_client() -> SimClient {
    let vocab = Vocab::numeric(3, 2).unwrap();
    let model = SimModel::table(4, vocab, vec![(vec![0], vec![10.0, 0.0, 0.0])]).unwrap();
    SimClient::new("sim-cycle", Arc::new(model))
}

#[test]
fn sim_probe_certifies_past_threshold() {
    let client = forced_cycle_client();
    let record = probe(
        &client,
        &ProbePrompt::Raw("0".into()),
        &greedy(0),
        &quick_opts(100),
    )
    .unwrap();
    // b=0, c=1, w=4: ell_star = 5 and the budget is far past it.
    assert_eq!(record.classification, Classification::Certified);
    assert_eq!(record.ell_star, Some(5));
    assert_eq!(record.output.len(), 100);
    assert_eq!(record.finish, FinishReason::Length);
    let anomaly = record.anomaly.unwrap();
    assert_eq!((anomaly.b(), anomaly.c()), (0, 1));
}

#[test]
fn sim_probe_without_declared_context_is_suspected() {
    let client = forced_cycle_client().without_declared_context();
    let record = probe(
        &client,
        &ProbePrompt::Raw("0".into()),
        &greedy(0),
        &quick_opts(100),
    )
    .unwrap();
    assert_eq!(record.classification, Classification::Suspected);
    assert_eq!(record.ell_star, None);
}

#[test]
fn sim_probe_upgrade_to_certified_exactly_at_ell_star() {
    // Budget one short of ell_star stays SUSPECTED; at ell_star CERTIFIED.
    let client = forced_cycle_client();
    let below = probe(
        &client,
        &ProbePrompt::Raw("0".into()),
        &greedy(0),
        &quick_opts(4),
    )
    .unwrap();
    assert_eq!(below.classification, Classification::Suspected);
    let at = probe(
        &client,
        &ProbePrompt::Raw("0".into()),
        &greedy(0),
        &quick_opts(5),
    )
    .unwrap();
    assert_eq!(at.classification, Classification::Certified);
}

#[test]
fn sim_probe_halting() {
    let vocab = Vocab::numeric(3, 2).unwrap();
    let model = SimModel::table(4, vocab, vec![(vec![0], vec![0.0, 0.0, 10.0])]).unwrap();
    let client = SimClient::new("sim-halt", Arc::new(model));
    let record = probe(
        &client,
        &ProbePrompt::Raw("0".into()),
        &greedy(0),
        &quick_opts(100),
    )
    .unwrap();
    assert_eq!(record.classification, Classification::Halted);
    assert_eq!(record.finish, FinishReason::Stop);
}

#[test]
fn suspected_upgrades_on_random_echo_models() {
    // Quantified over random fixtures: at zero temperature, whenever the
    // budget reaches ell_star the SUSPECTED outcome upgrades to CERTIFIED.
    let mut upgrades = 0;
    for seed in 0..40u64 {
        let vocab = Vocab::numeric(8, 7).unwrap();
        let model = SimModel::hash_echo(
            6,
            vocab,
            HashEchoParams {
                seed,
                echo_beta: 0.5,
                eos_bias: 0.2,
            },
        )
        .unwrap();
        let client = SimClient::new(format!("echo-{seed}"), Arc::new(model));
        let big = probe(
            &client,
            &ProbePrompt::Raw("1 2 3".into()),
            &greedy(0),
            &quick_opts(256),
        )
        .unwrap();
        if big.classification != Classification::Certified {
            continue;
        }
        let ell_star = big.ell_star.unwrap();
        let below = probe(
            &client,
            &ProbePrompt::Raw("1 2 3".into()),
            &greedy(0),
            &quick_opts(ell_star - 1),
        )
        .unwrap();
        let at = probe(
            &client,
            &ProbePrompt::Raw("1 2 3".into()),
            &greedy(0),
            &quick_opts(ell_star),
        )
        .unwrap();
        assert_ne!(below.classification, Classification::Certified, "seed {seed}");
        assert_eq!(at.classification, Classification::Certified, "seed {seed}");
        upgrades += 1;
    }
    assert!(upgrades >= 10, "only {upgrades} certifiable fixtures");
}

#[test]
fn probe_respects_output_budget() {
    let server = MockServer::replay(MockReply::repeating("unit ", 10_000)).unwrap();
    let client = RemoteClient::new(server.base_url(), "mock-model").unwrap();
    let record = probe(
        &client,
        &ProbePrompt::Raw("hello".into()),
        &greedy(0),
        &quick_opts(100),
    )
    .unwrap();
    assert_eq!(record.output.len(), 100);
    assert_eq!(record.finish, FinishReason::Length);
    assert_eq!(record.classification, Classification::Suspected);
}

#[test]
fn mock_replay_yields_suspected_with_expected_cycle() {
    let server = MockServer::replay(
        MockReply::repeating("MGUSA ", 300).with_logprobs(vec![-0.01]),
    )
    .unwrap();
    let client = RemoteClient::new(server.base_url(), "mock-gpt").unwrap();
    let query = build_query(TemplateId::ManyWords, "MGUSA@", 3).unwrap();
    let record = probe(
        &client,
        &ProbePrompt::Recipe(query.clone()),
        &greedy(0),
        &quick_opts(4096),
    )
    .unwrap();

    assert_eq!(record.classification, Classification::Suspected);
    assert_eq!(record.finish, FinishReason::Length);
    let anomaly = record.anomaly.as_ref().unwrap();
    assert_eq!(anomaly.c(), 1);
    assert_eq!(anomaly.b(), 0);
    assert_eq!(anomaly.cycle()[0].text(), Some("MGUSA"));
    assert!(record.logprobs.is_some());

    // The prompt travelled byte-exactly.
    let requests = server.requests();
    assert_eq!(requests.len(), 1);
    assert_eq!(requests[0].user_content(), query.rendered);
    assert_eq!(requests[0].max_tokens, Some(4096));
    assert!(requests[0].stream);
}

#[test]
fn mock_stop_yields_halted() {
    let server = MockServer::replay(MockReply::new(
        vec!["five ".into(), "words ".into(), "then ".into(), "a ".into(), "stop".into()],
        "stop",
    ))
    .unwrap();
    let client = RemoteClient::new(server.base_url(), "mock-model").unwrap();
    let record = probe(
        &client,
        &ProbePrompt::Raw("hello".into()),
        &greedy(0),
        &quick_opts(100),
    )
    .unwrap();
    assert_eq!(record.classification, Classification::Halted);
    assert_eq!(record.output.len(), 5);
}

#[test]
fn transport_failure_is_inconclusive() {
    // Nothing listens here.
    let client = RemoteClient::new("http://127.0.0.1:9", "void").unwrap();
    let record = probe(
        &client,
        &ProbePrompt::Raw("hello".into()),
        &greedy(0),
        &quick_opts(10),
    )
    .unwrap();
    assert_eq!(record.finish, FinishReason::Error);
    assert_eq!(record.classification, Classification::Inconclusive);
    assert!(record.error.is_some());
}

#[test]
fn threshold_fixture_finds_minimum_repetitions() {
    let client = ScriptedClient::with_threshold("thresh", "loop", 5, 64);
    let session = ProbeSession::new(&client, quick_opts(64));
    let schedule: Vec<usize> = (1..=10).collect();
    let found = find_min_repetitions(
        &session,
        "loop",
        TemplateId::ManyWords,
        &greedy(0),
        &schedule,
        64,
    )
    .unwrap()
    .expect("threshold within schedule");
    assert_eq!(found.min_reps, 5);

    // Monotonicity: a finer schedule never returns a larger answer.
    let coarse = find_min_repetitions(
        &session,
        "loop",
        TemplateId::ManyWords,
        &greedy(0),
        &[2, 6, 10],
        64,
    )
    .unwrap()
    .unwrap();
    assert!(found.min_reps <= coarse.min_reps);

    // Re-probing at the returned count reproduces the classification.
    let again = find_min_repetitions(
        &session,
        "loop",
        TemplateId::ManyWords,
        &greedy(0),
        &[found.min_reps],
        64,
    )
    .unwrap()
    .unwrap();
    assert_eq!(again.min_reps, found.min_reps);
}

#[test]
fn schedule_validation() {
    let client = ScriptedClient::with_threshold("thresh", "x", 1, 16);
    let session = ProbeSession::new(&client, quick_opts(16));
    assert!(find_min_repetitions(&session, "x", TemplateId::Words, &greedy(0), &[], 16).is_err());
    assert!(
        find_min_repetitions(&session, "x", TemplateId::Words, &greedy(0), &[3, 3], 16).is_err()
    );
    assert!(
        find_min_repetitions(&session, "x", TemplateId::Words, &greedy(0), &[5, 2], 16).is_err()
    );
}

#[test]
fn temperature_sweep_table() {
    // Cycles at 2 reps under zero temperature, never above it.
    let client = ScriptedClient::with_zero_temp_threshold("sweep-fix", "Adam", 2, 64);
    let session = ProbeSession::new(&client, quick_opts(64));
    let table = run_temperature_sweep(
        &session,
        "Adam",
        TemplateId::ManyWords,
        &greedy(0),
        &[0.0, 0.1, 0.2],
        &[1, 2, 3, 4, 5],
        64,
    )
    .unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.rows[0].min_reps, Some(2));
    assert_eq!(table.rows[1].min_reps, None);
    assert_eq!(table.rows[2].min_reps, None);
    let tsv = table.to_tsv();
    assert!(tsv.contains("0\t2"));
    assert!(tsv.contains("0.1\tFAIL"));

    // Empty temperature list is an input error.
    assert!(run_temperature_sweep(
        &session,
        "Adam",
        TemplateId::ManyWords,
        &greedy(0),
        &[],
        &[1, 2],
        64
    )
    .is_err());
}

#[test]
fn wordlist_experiment_and_resume() {
    // Exactly 3 of 10 words cycle, at thresholds 2, 4, 6.
    let client = ScriptedClient::new("wl-fix", |prompt, _| {
        let thresholds = [("alpha", 2usize), ("beta", 4), ("gamma", 6)];
        for (word, threshold) in thresholds {
            let reps = prompt.matches(word).count();
            // One occurrence comes from the context; the instruction does
            // not mention the word.
            if reps >= threshold {
                return nonhalt_harness::testing::Script::cycling(&format!("{word} "), 64);
            }
        }
        nonhalt_harness::testing::Script::halting("no loops today")
    });

    let words: Vec<String> = ["alpha", "beta", "gamma"]
        .iter()
        .map(|w| w.to_string())
        .chain((0..7).map(|i| format!("dull{i}")))
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wordlist.jsonl");
    let schedule: Vec<usize> = (1..=8).collect();

    let first_run_records;
    {
        let (sink, resume) = RecordSink::open(&path, serde_json::json!({"run": "wordlist"})).unwrap();
        let session = ProbeSession::new(&client, quick_opts(64)).with_sink(&sink, &resume);
        let outcome = run_wordlist_experiment(
            &session,
            &words,
            TemplateId::ManyWords,
            &greedy(0),
            &schedule,
            64,
        )
        .unwrap();
        assert_eq!(outcome.summary.success_pct, 30.0);
        assert_eq!(outcome.summary.mean_reps, 4.0);
        assert_eq!(outcome.rows.len(), 10);
        assert_eq!(outcome.rows[0].min_reps, 2);
        assert_eq!(outcome.rows[1].min_reps, 4);
        assert_eq!(outcome.rows[2].min_reps, 6);
        assert!(outcome.rows[3..].iter().all(|r| r.min_reps == 0));
        first_run_records = read_records(&path).unwrap().len();
        assert!(first_run_records > 0);
    }

    // Re-running against the same sink reuses every cell: identical summary,
    // no new records.
    {
        let (sink, resume) = RecordSink::open(&path, serde_json::json!({"run": "wordlist"})).unwrap();
        let session = ProbeSession::new(&client, quick_opts(64)).with_sink(&sink, &resume);
        let outcome = run_wordlist_experiment(
            &session,
            &words,
            TemplateId::ManyWords,
            &greedy(0),
            &schedule,
            64,
        )
        .unwrap();
        assert_eq!(outcome.summary.success_pct, 30.0);
        assert_eq!(outcome.summary.mean_reps, 4.0);
    }
    assert_eq!(read_records(&path).unwrap().len(), first_run_records);
}

#[test]
fn resume_retries_error_cells() {
    // A client that always dies on transport.
    struct FailingClient;
    impl nonhalt_harness::ModelClient for FailingClient {
        fn id(&self) -> &str {
            "flaky"
        }
        fn kind(&self) -> nonhalt_harness::ClientKind {
            nonhalt_harness::ClientKind::Sim
        }
        fn context_size(&self) -> Option<usize> {
            None
        }
        fn default_segment_mode(&self) -> nonhalt_core::segment::SegmentMode {
            nonhalt_core::segment::SegmentMode::Word
        }
        fn complete(
            &self,
            _prompt: &str,
            _config: &SamplerConfig<f64>,
            _max_units: usize,
            _on_unit: &mut dyn FnMut(nonhalt_harness::OutputUnit) -> bool,
        ) -> Result<FinishReason, nonhalt_harness::ClientError> {
            Err(nonhalt_harness::ClientError::Transport("injected outage".into()))
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flaky.jsonl");
    let schedule = [1usize, 2];

    // First run: every cell fails on transport, gets recorded as an error,
    // and the search comes up empty.
    {
        let client = FailingClient;
        let (sink, resume) = RecordSink::open(&path, serde_json::json!({})).unwrap();
        let session = ProbeSession::new(&client, quick_opts(32)).with_sink(&sink, &resume);
        let found = find_min_repetitions(
            &session,
            "loop",
            TemplateId::ManyWords,
            &greedy(0),
            &schedule,
            32,
        )
        .unwrap();
        assert!(found.is_none());
    }
    let after_outage = read_records(&path).unwrap();
    assert_eq!(after_outage.len(), 2);
    assert!(after_outage.iter().all(|l| l.finish == "error"));

    // Second run, same model id, endpoint recovered: error cells are not
    // treated as completed, so they are re-probed and the threshold found.
    {
        let client = ScriptedClient::with_threshold("flaky", "loop", 2, 32);
        let (sink, resume) = RecordSink::open(&path, serde_json::json!({})).unwrap();
        let session = ProbeSession::new(&client, quick_opts(32)).with_sink(&sink, &resume);
        let found = find_min_repetitions(
            &session,
            "loop",
            TemplateId::ManyWords,
            &greedy(0),
            &schedule,
            32,
        )
        .unwrap()
        .expect("recovered endpoint reaches the threshold");
        assert_eq!(found.min_reps, 2);
    }
    assert_eq!(read_records(&path).unwrap().len(), 4);
}

#[test]
fn probe_record_persists_and_replays() {
    // Scripted endpoint that always cycles, with a declared context size so
    // the threshold arithmetic can certify.
    let client = ScriptedClient::with_threshold("scripted", "loop", 1, 50).with_context_size(8);
    let query = build_query(TemplateId::Words, "loop", 1).unwrap();
    let record = probe(
        &client,
        &ProbePrompt::Recipe(query),
        &greedy(0),
        &quick_opts(50),
    )
    .unwrap();
    assert_eq!(record.classification, Classification::Certified);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.jsonl");
    let (sink, _) = RecordSink::open(&path, serde_json::json!({})).unwrap();
    sink.append_record(&record).unwrap();

    let lines = read_records(&path).unwrap();
    assert_eq!(lines.len(), 1);
    let line = &lines[0];
    assert_eq!(line.classification, "CERTIFIED");
    // b=0, c=1, declared w=8.
    assert_eq!(line.ell_star, Some(9));
    assert_eq!(line.finish, "length");
    let anomaly = line.anomaly.as_ref().unwrap();
    assert_eq!(anomaly.ell, 50);

    // Classification replays from persisted fields alone.
    let cycle = nonhalt_core::stream_from_ids(0..anomaly.c as u32);
    let replayed = nonhalt_core::CycleAnomaly::new(
        nonhalt_core::stream_from_ids(100..100 + anomaly.b as u32),
        cycle,
        anomaly.ell as usize,
    )
    .unwrap();
    let w = (line.ell_star.unwrap() as usize) - anomaly.b as usize - anomaly.c as usize;
    let classification = nonhalt_harness::classify_probe(
        anomaly.ell as usize,
        Some(&replayed),
        FinishReason::parse(&line.finish).unwrap(),
        Some(w),
        nonhalt_core::is_deterministic(&SamplerConfig::new(line.tau, line.top_k as usize, line.top_p, line.seed).unwrap()),
    );
    assert_eq!(classification.as_str(), line.classification);
}
