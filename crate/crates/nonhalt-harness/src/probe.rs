//! One attack attempt against a model endpoint: stream, detect, classify.

use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use nonhalt_core::anomaly::CycleAnomaly;
use nonhalt_core::cycle::StreamingDetector;
use nonhalt_core::recipe::{RecipeQuery, TemplateId};
use nonhalt_core::sampler::{is_deterministic, SamplerConfig};
use nonhalt_core::segment::{SegmentMode, Segmenter};
use nonhalt_core::symbol::SymbolStream;

use crate::client::{FinishReason, ModelClient};
use crate::error::{HarnessError, Result};

/// Outcome classes, strongest first.
///
/// CERTIFIED needs a declared context size and the threshold arithmetic;
/// SUSPECTED is the empirical proxy: a cycle still live at the final unit of
/// a length-truncated stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Certified,
    Suspected,
    Halted,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Certified => "CERTIFIED",
            Classification::Suspected => "SUSPECTED",
            Classification::Halted => "HALTED",
            Classification::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CERTIFIED" => Some(Classification::Certified),
            "SUSPECTED" => Some(Classification::Suspected),
            "HALTED" => Some(Classification::Halted),
            "INCONCLUSIVE" => Some(Classification::Inconclusive),
            _ => None,
        }
    }

    /// A non-halting outcome (either proof or strong suspicion).
    pub fn is_non_halting(&self) -> bool {
        matches!(self, Classification::Certified | Classification::Suspected)
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pure classification of a finished probe.
///
/// The anomaly argument is the detector's state at end of stream, so its
/// `ell` equals the output length exactly when the cycle persisted through
/// the final unit.
pub fn classify_probe(
    output_len: usize,
    anomaly: Option<&CycleAnomaly>,
    finish: FinishReason,
    w_known: Option<usize>,
    deterministic: bool,
) -> Classification {
    if let (Some(a), Some(w)) = (anomaly, w_known) {
        if deterministic && a.ell() >= a.ell_star(w) {
            return Classification::Certified;
        }
    }
    if let Some(a) = anomaly {
        if a.ell() == output_len && finish == FinishReason::Length {
            return Classification::Suspected;
        }
    }
    if finish == FinishReason::Stop {
        return Classification::Halted;
    }
    Classification::Inconclusive
}

/// What to send: a raw prompt or a rendered attack query.
#[derive(Clone, Debug)]
pub enum ProbePrompt {
    Raw(String),
    Recipe(RecipeQuery),
}

impl ProbePrompt {
    pub fn rendered(&self) -> &str {
        match self {
            ProbePrompt::Raw(s) => s,
            ProbePrompt::Recipe(q) => &q.rendered,
        }
    }

    pub fn template_id(&self) -> Option<TemplateId> {
        match self {
            ProbePrompt::Raw(_) => None,
            ProbePrompt::Recipe(q) => Some(q.template_id),
        }
    }

    pub fn cycle_text(&self) -> Option<&str> {
        match self {
            ProbePrompt::Raw(_) => None,
            ProbePrompt::Recipe(q) => Some(&q.cycle_text),
        }
    }

    pub fn repetitions(&self) -> Option<usize> {
        match self {
            ProbePrompt::Raw(_) => None,
            ProbePrompt::Recipe(q) => Some(q.repetitions),
        }
    }
}

/// Probe execution knobs.
#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    /// Maximum detection units to accept; also sent as `max_tokens`.
    pub output_budget: usize,
    /// Override the client's default segmentation.
    pub segment_mode: Option<SegmentMode>,
    pub c_max: usize,
    pub r_min: usize,
    /// Wall-clock cap per probe.
    pub timeout: Duration,
    /// Worker threads for batch runners.
    pub parallelism: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            output_budget: 4096,
            segment_mode: None,
            c_max: 64,
            r_min: 2,
            timeout: Duration::from_secs(300),
            parallelism: 4,
        }
    }
}

/// Everything observed in one attack attempt.
#[derive(Clone, Debug)]
pub struct ProbeRecord {
    pub model_id: String,
    pub prompt: String,
    pub template_id: Option<TemplateId>,
    pub cycle_text: Option<String>,
    pub reps: Option<usize>,
    pub config: SamplerConfig<f64>,
    pub output: SymbolStream,
    pub logprobs: Option<Vec<f64>>,
    pub finish: FinishReason,
    /// Diagnostic when `finish == Error`; not persisted.
    pub error: Option<String>,
    pub anomaly: Option<CycleAnomaly>,
    pub ell_star: Option<usize>,
    pub classification: Classification,
    pub started_at: DateTime<Utc>,
    pub duration: Duration,
    pub output_budget: usize,
}

/// Run one probe: stream the completion through the online detector, stop
/// at the budget, classify, and fill every record field.
pub fn probe(
    client: &dyn ModelClient,
    prompt: &ProbePrompt,
    config: &SamplerConfig<f64>,
    opts: &ProbeOptions,
) -> Result<ProbeRecord> {
    let started_at = Utc::now();
    let t0 = Instant::now();
    let mode = opts.segment_mode.unwrap_or_else(|| client.default_segment_mode());
    let mut segmenter = Segmenter::new(mode);
    let mut detector = StreamingDetector::new(opts.c_max, opts.r_min);
    let mut logprobs: Vec<f64> = Vec::new();
    let mut any_logprob = false;
    let deadline = t0 + opts.timeout;

    let budget = opts.output_budget;
    let mut on_unit = |unit: crate::client::OutputUnit| -> bool {
        if let Some(lp) = unit.logprob {
            logprobs.push(lp);
            any_logprob = true;
        }
        for sym in segmenter.push(&unit.text) {
            if detector.len() < budget {
                detector.feed(sym);
            }
        }
        detector.len() < budget && Instant::now() < deadline
    };

    let outcome = client.complete(prompt.rendered(), config, budget, &mut on_unit);

    let (finish, error) = match outcome {
        Ok(reason) => {
            // Trailing partial word, if the budget still has room for it.
            for sym in segmenter.flush() {
                if detector.len() < budget {
                    detector.feed(sym);
                }
            }
            if Instant::now() >= deadline && detector.len() < budget {
                (FinishReason::Error, Some("probe timeout".to_string()))
            } else {
                (reason, None)
            }
        }
        Err(e) => (FinishReason::Error, Some(e.to_string())),
    };

    let anomaly = detector.current_anomaly();
    let w_known = client.context_size();
    let deterministic = is_deterministic(config);
    let ell_star = match (&anomaly, w_known) {
        (Some(a), Some(w)) => Some(a.ell_star(w)),
        _ => None,
    };
    let classification = classify_probe(
        detector.len(),
        anomaly.as_ref(),
        finish,
        w_known,
        deterministic,
    );

    Ok(ProbeRecord {
        model_id: client.id().to_string(),
        prompt: prompt.rendered().to_string(),
        template_id: prompt.template_id(),
        cycle_text: prompt.cycle_text().map(str::to_string),
        reps: prompt.repetitions(),
        config: *config,
        output: detector.stream().to_vec(),
        logprobs: if any_logprob { Some(logprobs) } else { None },
        finish,
        error,
        anomaly,
        ell_star,
        classification,
        started_at,
        duration: t0.elapsed(),
        output_budget: budget,
    })
}

/// Quartile summary of a captured log-probability trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogprobSummary {
    pub first_quartile_mean: f64,
    pub last_quartile_mean: f64,
    pub converged: bool,
}

/// Convergence read-out: the trace ends near the 0 ceiling, having either
/// risen by more than `quartile_delta` or started near the ceiling already.
pub fn logprob_summary(trace: &[f64], quartile_delta: f64) -> Result<LogprobSummary> {
    if trace.len() < 4 {
        return Err(HarnessError::InvalidInput(format!(
            "trace needs at least 4 entries, got {}",
            trace.len()
        )));
    }
    let q = trace.len() / 4;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let first = mean(&trace[..q]);
    let last = mean(&trace[trace.len() - q..]);
    let near_ceiling = last > -quartile_delta;
    let rose = last > first + quartile_delta;
    let started_high = first > -quartile_delta;
    Ok(LogprobSummary {
        first_quartile_mean: first,
        last_quartile_mean: last,
        converged: near_ceiling && (rose || started_high),
    })
}
