//! JSON Lines persistence for probe records.
//!
//! One object per line, fields exactly:
//! `ts, model_id, prompt, template_id, cycle_text, reps, tau, top_k, top_p,
//! seed, output_budget, finish, anomaly, ell_star, classification,
//! duration_ms, logprobs`. The first line of every file is a config object
//! (`{"schema": ..., "config": ...}`) so a run can be reproduced from its
//! own records. Appends are serialized and flushed per line; records are
//! immutable once written.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};

use crate::client::FinishReason;
use crate::error::{HarnessError, Result};
use crate::probe::{Classification, ProbeRecord};

pub const RECORD_SCHEMA: &str = "nonhalt-records-v1";

/// Wire form of an anomaly: cycle symbols as display strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyLine {
    pub b: u64,
    pub c: u64,
    pub r_obs: u64,
    pub ell: u64,
    pub cycle: Vec<String>,
}

/// Wire form of one probe record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub ts: String,
    pub model_id: String,
    pub prompt: String,
    pub template_id: Option<String>,
    pub cycle_text: Option<String>,
    pub reps: Option<u64>,
    pub tau: f64,
    pub top_k: u64,
    pub top_p: f64,
    pub seed: u64,
    pub output_budget: u64,
    pub finish: String,
    pub anomaly: Option<AnomalyLine>,
    pub ell_star: Option<u64>,
    pub classification: String,
    pub duration_ms: u64,
    pub logprobs: Option<Vec<f64>>,
}

impl From<&ProbeRecord> for RecordLine {
    fn from(r: &ProbeRecord) -> Self {
        RecordLine {
            ts: r.started_at.to_rfc3339_opts(SecondsFormat::Millis, true),
            model_id: r.model_id.clone(),
            prompt: r.prompt.clone(),
            template_id: r.template_id.map(|t| t.name().to_string()),
            cycle_text: r.cycle_text.clone(),
            reps: r.reps.map(|v| v as u64),
            tau: r.config.tau,
            top_k: r.config.top_k as u64,
            top_p: r.config.top_p,
            seed: r.config.seed,
            output_budget: r.output_budget as u64,
            finish: r.finish.as_str().to_string(),
            anomaly: r.anomaly.as_ref().map(|a| AnomalyLine {
                b: a.b() as u64,
                c: a.c() as u64,
                r_obs: a.r_obs() as u64,
                ell: a.ell() as u64,
                cycle: a.cycle().iter().map(|s| s.to_string()).collect(),
            }),
            ell_star: r.ell_star.map(|v| v as u64),
            classification: r.classification.as_str().to_string(),
            duration_ms: r.duration.as_millis() as u64,
            logprobs: r.logprobs.clone(),
        }
    }
}

impl RecordLine {
    pub fn finish_reason(&self) -> Option<FinishReason> {
        FinishReason::parse(&self.finish)
    }

    pub fn classification_parsed(&self) -> Option<Classification> {
        Classification::parse(&self.classification)
    }

    /// Resume key: one runner cell per (model, cycle, template, tau, reps).
    pub fn cell_key(&self) -> String {
        cell_key(
            &self.model_id,
            self.cycle_text.as_deref(),
            self.template_id.as_deref(),
            self.tau,
            self.reps,
        )
    }
}

pub fn cell_key(
    model_id: &str,
    cycle_text: Option<&str>,
    template_id: Option<&str>,
    tau: f64,
    reps: Option<u64>,
) -> String {
    format!(
        "{model_id}\u{1f}{}\u{1f}{}\u{1f}{tau:?}\u{1f}{}",
        cycle_text.unwrap_or(""),
        template_id.unwrap_or(""),
        reps.map(|r| r.to_string()).unwrap_or_default(),
    )
}

/// Header object written as the first line of a fresh records file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordHeader {
    pub schema: String,
    pub config: serde_json::Value,
}

/// Append-only, flush-on-write sink; appends are serialized by a lock.
pub struct RecordSink {
    writer: Mutex<BufWriter<File>>,
    path: PathBuf,
}

impl RecordSink {
    /// Open for appending, creating the file (and writing the config header)
    /// if it does not exist. Returns the sink and the resume index built
    /// from any existing records.
    pub fn open(path: &Path, config: serde_json::Value) -> Result<(Self, ResumeIndex)> {
        let existed = path.exists();
        let index = if existed {
            ResumeIndex::load(path)?
        } else {
            ResumeIndex::default()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = BufWriter::new(file);
        if !existed {
            let header = RecordHeader {
                schema: RECORD_SCHEMA.to_string(),
                config,
            };
            serde_json::to_writer(&mut writer, &header)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok((
            Self {
                writer: Mutex::new(writer),
                path: path.to_path_buf(),
            },
            index,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Append exactly one line; no partial lines survive an error.
    pub fn append(&self, line: &RecordLine) -> Result<()> {
        let mut bytes = serde_json::to_vec(line)?;
        bytes.push(b'\n');
        let mut writer = self.writer.lock().expect("sink lock");
        writer.write_all(&bytes)?;
        writer.flush()?;
        Ok(())
    }

    pub fn append_record(&self, record: &ProbeRecord) -> Result<()> {
        self.append(&RecordLine::from(record))
    }
}

/// Previously persisted cells, keyed for idempotent re-runs.
#[derive(Debug, Default)]
pub struct ResumeIndex {
    by_key: HashMap<String, RecordLine>,
}

impl ResumeIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let mut index = ResumeIndex::default();
        let file = File::open(path)?;
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(record) = serde_json::from_str::<RecordLine>(&line) {
                index.by_key.insert(record.cell_key(), record);
            } else if serde_json::from_str::<RecordHeader>(&line).is_ok() {
                continue;
            } else {
                return Err(HarnessError::InvalidInput(format!(
                    "{}:{}: neither a record nor a header",
                    path.display(),
                    no + 1
                )));
            }
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&RecordLine> {
        self.by_key.get(key)
    }
}

/// Parse every record line of a file (header skipped).
pub fn read_records(path: &Path) -> Result<Vec<RecordLine>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(record) = serde_json::from_str::<RecordLine>(&line) {
            out.push(record);
        }
    }
    Ok(out)
}
