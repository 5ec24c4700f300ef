//! Scripted clients for fixtures whose behaviour is a function of the
//! prompt and sampler settings, not of a real model.

use nonhalt_core::sampler::SamplerConfig;
use nonhalt_core::segment::SegmentMode;

use crate::client::{ClientKind, FinishReason, ModelClient, OutputUnit};
use crate::error::ClientError;

/// Reply script: the units to stream and the finish reason.
#[derive(Clone, Debug)]
pub struct Script {
    pub units: Vec<String>,
    pub finish: FinishReason,
}

impl Script {
    pub fn halting(answer: &str) -> Self {
        Script {
            units: answer.split_whitespace().map(|w| format!("{w} ")).collect(),
            finish: FinishReason::Stop,
        }
    }

    pub fn cycling(unit: &str, n: usize) -> Self {
        Script {
            units: vec![unit.to_string(); n],
            finish: FinishReason::Length,
        }
    }
}

type ScriptFn = dyn Fn(&str, &SamplerConfig<f64>) -> Script + Send + Sync;

/// A client whose reply is computed by a closure over (prompt, config).
pub struct ScriptedClient {
    id: String,
    w: Option<usize>,
    script: Box<ScriptFn>,
}

impl ScriptedClient {
    pub fn new<F>(id: impl Into<String>, script: F) -> Self
    where
        F: Fn(&str, &SamplerConfig<f64>) -> Script + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            w: None,
            script: Box::new(script),
        }
    }

    pub fn with_context_size(mut self, w: usize) -> Self {
        self.w = Some(w);
        self
    }

    /// A client that cycles (finish = length) only when the prompt contains
    /// at least `threshold` copies of `cycle_text`, and otherwise answers
    /// normally and stops: the scripted analogue of a model with a known
    /// repetition threshold.
    pub fn with_threshold(
        id: impl Into<String>,
        cycle_text: &str,
        threshold: usize,
        cycle_units: usize,
    ) -> Self {
        let cycle_text = cycle_text.to_string();
        Self::new(id, move |prompt, _| {
            if count_occurrences(prompt, &cycle_text) >= threshold {
                Script::cycling(&format!("{cycle_text} "), cycle_units)
            } else {
                Script::halting("nothing cyclic to report here")
            }
        })
    }

    /// Like [`Self::with_threshold`], but cycling only at temperature zero.
    pub fn with_zero_temp_threshold(
        id: impl Into<String>,
        cycle_text: &str,
        threshold: usize,
        cycle_units: usize,
    ) -> Self {
        let cycle_text = cycle_text.to_string();
        Self::new(id, move |prompt, config| {
            if config.tau == 0.0 && count_occurrences(prompt, &cycle_text) >= threshold {
                Script::cycling(&format!("{cycle_text} "), cycle_units)
            } else {
                Script::halting("high entropy nonsense wanders away")
            }
        })
    }
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        count += 1;
        start += pos + needle.len();
    }
    count
}

impl ModelClient for ScriptedClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> ClientKind {
        ClientKind::Sim
    }

    fn context_size(&self) -> Option<usize> {
        self.w
    }

    fn default_segment_mode(&self) -> SegmentMode {
        SegmentMode::Word
    }

    fn complete(
        &self,
        prompt: &str,
        config: &SamplerConfig<f64>,
        max_units: usize,
        on_unit: &mut dyn FnMut(OutputUnit) -> bool,
    ) -> Result<FinishReason, ClientError> {
        let script = (self.script)(prompt, config);
        for unit in script.units.iter().take(max_units) {
            if !on_unit(OutputUnit {
                text: unit.clone(),
                logprob: None,
            }) {
                return Ok(FinishReason::Length);
            }
        }
        Ok(script.finish)
    }
}
