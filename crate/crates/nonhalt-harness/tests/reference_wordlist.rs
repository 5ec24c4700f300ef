//! Golden check of the wordlist summary statistics against the bundled
//! reference results (100 words, five endpoints, 0 = failure).
//!
//! The published aggregate row for each endpoint pins both the fixture
//! transcription and the summarizer arithmetic: non-halting percentage and
//! the mean repetitions over the successful words.

use nonhalt_harness::runner::{summarize_wordlist, WordRow};

const FIXTURE: &str = include_str!("../fixtures/reference_wordlist.csv");

fn column(model: &str) -> Vec<WordRow> {
    let mut lines = FIXTURE.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("header row");
    let names: Vec<&str> = header.split(',').collect();
    let idx = names
        .iter()
        .position(|n| *n == model)
        .unwrap_or_else(|| panic!("no column {model}"));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            WordRow {
                word: cells[0].to_string(),
                min_reps: cells[idx].parse().expect("integer cell"),
            }
        })
        .collect()
}

#[test]
fn fixture_has_100_words() {
    assert_eq!(column("chatgpt-4o").len(), 100);
}

#[test]
fn summary_statistics_match_published_aggregates() {
    // (column, non-halting %, mean repetitions over successes). The
    // aggregates were published truncated to one decimal.
    let expected = [
        ("gemini-pro-1.5", 19.0, 685.2),
        ("claude-3.5-sonnet", 44.0, 93.9),
        ("gemma-2-9b-it", 91.0, 30.3),
        ("chatgpt-4o", 97.0, 5.8),
        ("llama-3.1-8b-it", 97.0, 5.2),
    ];
    for (model, pct, mean) in expected {
        let rows = column(model);
        let summary = summarize_wordlist(&rows);
        assert_eq!(
            summary.success_pct, pct,
            "{model}: success % off (got {})",
            summary.success_pct
        );
        let truncated = (summary.mean_reps * 10.0).trunc() / 10.0;
        assert!(
            (truncated - mean).abs() < 1e-9,
            "{model}: mean reps {truncated} (raw {}), expected {mean}",
            summary.mean_reps
        );
    }
}
