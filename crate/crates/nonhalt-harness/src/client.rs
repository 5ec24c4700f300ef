//! The model-client contract and the simulator-backed client.

use std::sync::Arc;

use nonhalt_core::sampler::SamplerConfig;
use nonhalt_core::segment::SegmentMode;
use nonhalt_core::sim::{SimModel, Simulation};

use crate::error::ClientError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientKind {
    Sim,
    Remote,
}

/// Terminal state of a completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinishReason {
    /// The model sampled its halting symbol.
    Stop,
    /// The output hit a length cap (server-side or the probe's budget).
    Length,
    /// Transport or protocol failure.
    Error,
}

impl FinishReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FinishReason::Stop => "stop",
            FinishReason::Length => "length",
            FinishReason::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stop" => Some(FinishReason::Stop),
            "length" => Some(FinishReason::Length),
            "error" => Some(FinishReason::Error),
            _ => None,
        }
    }
}

/// One raw output unit as delivered by a client: a generated symbol for the
/// simulator, a stream delta for remote endpoints.
#[derive(Clone, Debug)]
pub struct OutputUnit {
    pub text: String,
    pub logprob: Option<f64>,
}

/// A black-box generation endpoint.
///
/// `complete` must deliver output units in generation order exactly once and
/// return a terminal finish reason. When the consumer callback returns
/// `false` the stream is aborted and the completion reports
/// [`FinishReason::Length`]; the consumer only stops on budget.
pub trait ModelClient: Send + Sync {
    fn id(&self) -> &str;

    fn kind(&self) -> ClientKind;

    /// Declared context size in output units, when known. Certification
    /// requires it.
    fn context_size(&self) -> Option<usize>;

    /// How this client's output units should be segmented for detection.
    fn default_segment_mode(&self) -> SegmentMode;

    fn complete(
        &self,
        prompt: &str,
        config: &SamplerConfig<f64>,
        max_units: usize,
        on_unit: &mut dyn FnMut(OutputUnit) -> bool,
    ) -> Result<FinishReason, ClientError>;
}

/// Client backed by an in-process [`SimModel`].
///
/// Prompts are whitespace-separated tokens, each resolved against the
/// vocabulary by display text first and then as a numeric id. Each generated
/// symbol is one output unit carrying its sampled log-probability.
pub struct SimClient {
    id: String,
    model: Arc<SimModel<f64>>,
    declared_w: Option<usize>,
}

impl SimClient {
    pub fn new(id: impl Into<String>, model: Arc<SimModel<f64>>) -> Self {
        let declared_w = Some(model.w());
        Self {
            id: id.into(),
            model,
            declared_w,
        }
    }

    /// Pretend the context size is unknown (exercises the SUSPECTED path).
    pub fn without_declared_context(mut self) -> Self {
        self.declared_w = None;
        self
    }

    pub fn model(&self) -> &SimModel<f64> {
        &self.model
    }

    fn parse_prompt(&self, prompt: &str) -> Result<Vec<nonhalt_core::Symbol>, ClientError> {
        let vocab = self.model.vocab();
        let mut symbols = Vec::new();
        for token in prompt.split_whitespace() {
            let index = vocab.index_of_text(token).or_else(|| {
                token
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i < vocab.size())
            });
            match index {
                Some(i) => symbols.push(vocab.symbol(i).expect("index validated").clone()),
                None => {
                    return Err(ClientError::BadPrompt(format!(
                        "token `{token}` is neither a vocabulary text nor an id below {}",
                        vocab.size()
                    )))
                }
            }
        }
        if symbols.is_empty() {
            return Err(ClientError::BadPrompt("prompt resolved to no symbols".into()));
        }
        Ok(symbols)
    }
}

impl ModelClient for SimClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> ClientKind {
        ClientKind::Sim
    }

    fn context_size(&self) -> Option<usize> {
        self.declared_w
    }

    fn default_segment_mode(&self) -> SegmentMode {
        // Simulator units are already symbols; re-splitting would mangle them.
        SegmentMode::Chunk
    }

    fn complete(
        &self,
        prompt: &str,
        config: &SamplerConfig<f64>,
        max_units: usize,
        on_unit: &mut dyn FnMut(OutputUnit) -> bool,
    ) -> Result<FinishReason, ClientError> {
        let symbols = self.parse_prompt(prompt)?;
        let mut sim = Simulation::new(&self.model, &symbols, *config)
            .map_err(|e| ClientError::BadPrompt(e.to_string()))?;
        let mut produced = 0usize;
        while produced < max_units {
            let step = match sim.step().map_err(|e| ClientError::Protocol(e.to_string()))? {
                Some(step) => step,
                None => return Ok(FinishReason::Stop),
            };
            produced += 1;
            let eos = step.eos;
            let keep_going = on_unit(OutputUnit {
                text: step.symbol.to_string(),
                logprob: Some(step.logprob),
            });
            if eos {
                return Ok(FinishReason::Stop);
            }
            if !keep_going {
                return Ok(FinishReason::Length);
            }
        }
        Ok(FinishReason::Length)
    }
}
