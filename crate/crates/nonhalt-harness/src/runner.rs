//! Experiment runners: repetition escalation, temperature sweeps, word
//! lists.
//!
//! Runners are resumable: with a record sink attached, completed cells
//! (keyed by model, cycle, template, temperature, repetitions) are read back
//! from the file and skipped on re-runs.

use std::sync::atomic::{AtomicUsize, Ordering};

use nonhalt_core::recipe::{build_query, TemplateId};
use nonhalt_core::sampler::SamplerConfig;

use crate::client::{FinishReason, ModelClient};
use crate::error::{HarnessError, Result};
use crate::probe::{probe, Classification, ProbeOptions, ProbePrompt, ProbeRecord};
use crate::record::{cell_key, RecordSink, ResumeIndex};

/// Attempts per probe before an attempt is marked failed-transport.
const TRANSPORT_RETRIES: usize = 2;

/// Escalation schedule: 1..20 by 1, then to 100 by 5, then to 1000 by 50.
/// Dense where cheap models flip, coarse out to the expensive tail.
pub fn default_schedule() -> Vec<usize> {
    let mut s: Vec<usize> = (1..=20).collect();
    s.extend((25..=100).step_by(5));
    s.extend((150..=1000).step_by(50));
    s
}

/// A client plus the bookkeeping shared by every cell of a run.
pub struct ProbeSession<'a> {
    pub client: &'a dyn ModelClient,
    pub options: ProbeOptions,
    pub sink: Option<&'a RecordSink>,
    pub resume: Option<&'a ResumeIndex>,
}

impl<'a> ProbeSession<'a> {
    pub fn new(client: &'a dyn ModelClient, options: ProbeOptions) -> Self {
        Self {
            client,
            options,
            sink: None,
            resume: None,
        }
    }

    pub fn with_sink(mut self, sink: &'a RecordSink, resume: &'a ResumeIndex) -> Self {
        self.sink = Some(sink);
        self.resume = Some(resume);
        self
    }

    /// Previously persisted classification for a cell, if any. Cells whose
    /// attempt died on transport (finish = error) do not count as completed
    /// and are retried.
    fn resumed(&self, cycle_text: &str, template: TemplateId, tau: f64, reps: usize) -> Option<Classification> {
        let index = self.resume?;
        let key = cell_key(
            self.client.id(),
            Some(cycle_text),
            Some(template.name()),
            tau,
            Some(reps as u64),
        );
        let line = index.get(&key)?;
        if line.finish_reason() == Some(FinishReason::Error) {
            return None;
        }
        line.classification_parsed()
    }

    /// One recipe probe with transport retries; errors that survive the
    /// retries yield the error record (finish = error) rather than failing
    /// the run.
    fn probe_cell(
        &self,
        cycle_text: &str,
        template: TemplateId,
        config: &SamplerConfig<f64>,
        reps: usize,
        output_budget: usize,
    ) -> Result<ProbeRecord> {
        let query = build_query(template, cycle_text, reps)?;
        let prompt = ProbePrompt::Recipe(query);
        let opts = ProbeOptions {
            output_budget,
            ..self.options
        };
        let mut last = probe(self.client, &prompt, config, &opts)?;
        let mut attempt = 0;
        while last.finish == FinishReason::Error && attempt < TRANSPORT_RETRIES {
            attempt += 1;
            last = probe(self.client, &prompt, config, &opts)?;
        }
        if let Some(sink) = self.sink {
            sink.append_record(&last)?;
        }
        Ok(last)
    }
}

/// Escalation result: the first repetition count that went non-halting.
#[derive(Clone, Debug)]
pub struct MinReps {
    pub min_reps: usize,
    pub record: Option<ProbeRecord>,
}

/// Probe at each repetition count in schedule order; return the first count
/// classified SUSPECTED or CERTIFIED, or `None` if the whole schedule fails.
pub fn find_min_repetitions(
    session: &ProbeSession<'_>,
    cycle_text: &str,
    template: TemplateId,
    config: &SamplerConfig<f64>,
    schedule: &[usize],
    output_budget: usize,
) -> Result<Option<MinReps>> {
    if schedule.is_empty() {
        return Err(HarnessError::InvalidInput("schedule must be non-empty".into()));
    }
    if !schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(HarnessError::InvalidInput(
            "schedule must be strictly increasing".into(),
        ));
    }
    if output_budget == 0 {
        return Err(HarnessError::InvalidInput("output budget must be positive".into()));
    }
    for &reps in schedule {
        if let Some(previous) = session.resumed(cycle_text, template, config.tau, reps) {
            if previous.is_non_halting() {
                return Ok(Some(MinReps {
                    min_reps: reps,
                    record: None,
                }));
            }
            continue;
        }
        let record = session.probe_cell(cycle_text, template, config, reps, output_budget)?;
        if record.classification.is_non_halting() {
            return Ok(Some(MinReps {
                min_reps: reps,
                record: Some(record),
            }));
        }
    }
    Ok(None)
}

/// One sweep row: repetitions needed at this temperature, or a failure.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub temperature: f64,
    pub min_reps: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Plot-ready table: `temperature<TAB>min_reps` with `FAIL` for misses.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("temperature\tmin_reps\n");
        for row in &self.rows {
            match row.min_reps {
                Some(r) => out.push_str(&format!("{}\t{r}\n", row.temperature)),
                None => out.push_str(&format!("{}\tFAIL\n", row.temperature)),
            }
        }
        out
    }
}

/// For each temperature, run the escalation search and record the outcome.
/// Per-cell transport errors are already absorbed by the escalation; the
/// sweep continues through every temperature.
pub fn run_temperature_sweep(
    session: &ProbeSession<'_>,
    cycle_text: &str,
    template: TemplateId,
    base_config: &SamplerConfig<f64>,
    temps: &[f64],
    schedule: &[usize],
    output_budget: usize,
) -> Result<SweepTable> {
    if temps.is_empty() {
        return Err(HarnessError::InvalidInput("temperature list must be non-empty".into()));
    }
    let mut table = SweepTable::default();
    for &temperature in temps {
        let config = SamplerConfig::new(temperature, base_config.top_k, base_config.top_p, base_config.seed)
            .map_err(HarnessError::Core)?;
        let found = find_min_repetitions(session, cycle_text, template, &config, schedule, output_budget)?;
        table.rows.push(SweepRow {
            temperature,
            min_reps: found.map(|m| m.min_reps),
        });
    }
    Ok(table)
}

/// Per-word outcome; `min_reps = 0` is the failure convention.
#[derive(Clone, Debug, PartialEq)]
pub struct WordRow {
    pub word: String,
    pub min_reps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordlistSummary {
    /// `count(success) / count(words) * 100`.
    pub success_pct: f64,
    /// Mean repetitions over the successful words (0 when none succeeded).
    pub mean_reps: f64,
}

#[derive(Clone, Debug)]
pub struct WordlistOutcome {
    pub rows: Vec<WordRow>,
    pub summary: WordlistSummary,
}

impl WordlistOutcome {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word\tmin_reps\n");
        for row in &self.rows {
            out.push_str(&format!("{}\t{}\n", row.word, row.min_reps));
        }
        out
    }
}

/// Summary statistics over per-word repetition counts (0 = failure).
pub fn summarize_wordlist(rows: &[WordRow]) -> WordlistSummary {
    let successes: Vec<usize> = rows.iter().map(|r| r.min_reps).filter(|&r| r > 0).collect();
    let success_pct = if rows.is_empty() {
        0.0
    } else {
        successes.len() as f64 / rows.len() as f64 * 100.0
    };
    let mean_reps = if successes.is_empty() {
        0.0
    } else {
        successes.iter().sum::<usize>() as f64 / successes.len() as f64
    };
    WordlistSummary {
        success_pct,
        mean_reps,
    }
}

/// Run the escalation search for every word at a fixed config, with at most
/// `options.parallelism` words in flight. Per-word failures score 0 and the
/// experiment continues.
pub fn run_wordlist_experiment(
    session: &ProbeSession<'_>,
    words: &[String],
    template: TemplateId,
    config: &SamplerConfig<f64>,
    schedule: &[usize],
    output_budget: usize,
) -> Result<WordlistOutcome> {
    if words.is_empty() {
        return Err(HarnessError::InvalidInput("word list must be non-empty".into()));
    }
    let workers = session.options.parallelism.clamp(1, words.len());
    let next = AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<WordRow>>>> =
        (0..words.len()).map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= words.len() {
                    break;
                }
                let word = &words[i];
                let outcome =
                    find_min_repetitions(session, word, template, config, schedule, output_budget)
                        .map(|found| WordRow {
                            word: word.clone(),
                            min_reps: found.map(|m| m.min_reps).unwrap_or(0),
                        });
                *results[i].lock().expect("result slot") = Some(outcome);
            });
        }
    });

    let mut rows = Vec::with_capacity(words.len());
    for slot in results {
        rows.push(slot.into_inner().expect("result slot")
            .expect("every word is processed")?);
    }
    let summary = summarize_wordlist(&rows);
    Ok(WordlistOutcome { rows, summary })
}
