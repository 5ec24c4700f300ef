//! Probe harness: drive generation attacks against a local simulator or any
//! OpenAI-compatible endpoint, stream the output through the cycle
//! detector, classify the result, and persist JSON Lines records.
//!
//! The flow is: build a prompt (raw or via the recipe templates), call
//! [`probe::probe`] against a [`client::ModelClient`], and get back a
//! [`probe::ProbeRecord`] whose classification is CERTIFIED (threshold
//! arithmetic against a declared context size under a deterministic
//! sampler), SUSPECTED (cycle still live at a length-truncated finish),
//! HALTED, or INCONCLUSIVE. [`runner`] layers the escalation search,
//! temperature sweeps, and wordlist experiments on top, resumable from
//! their own record files. [`mock`] bundles a scriptable chat-completions
//! server.

pub mod client;
pub mod error;
pub mod mock;
pub mod probe;
pub mod protocol;
pub mod record;
pub mod remote;
pub mod runner;
pub mod testing;

pub use client::{ClientKind, FinishReason, ModelClient, OutputUnit, SimClient};
pub use error::{ClientError, HarnessError};
pub use probe::{
    classify_probe, logprob_summary, probe, Classification, LogprobSummary, ProbeOptions,
    ProbePrompt, ProbeRecord,
};
pub use record::{read_records, RecordLine, RecordSink, ResumeIndex};
pub use remote::RemoteClient;
pub use runner::{
    default_schedule, find_min_repetitions, run_temperature_sweep, run_wordlist_experiment,
    summarize_wordlist, MinReps, ProbeSession, SweepRow, SweepTable, WordRow, WordlistOutcome,
    WordlistSummary,
};
