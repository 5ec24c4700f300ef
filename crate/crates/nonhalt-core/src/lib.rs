//! Cycle detection, non-halting certification, and sampler semantics for
//! autoregressive generation streams.
//!
//! The central fact this crate operationalizes: for a model that conditions
//! on a window of the most recent `w` symbols and samples deterministically,
//! a generation that repeats a `c`-cycle after a `b`-symbol beginning is
//! non-halting **iff** the repetition is observed through
//! `ell_star = b + c + w`. Everything here serves that threshold: detecting
//! `(b, c, ell)` anomalies in streams ([`cycle`]), the sampler semantics
//! that decide determinism ([`sampler`]), toy w-context models that make the
//! threshold exactly testable ([`sim`]), prompt construction for provoking
//! cycles ([`recipe`]), and stream guards that terminate them ([`guard`]).
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`];
//! aliases for the common instantiations are exported below.

pub mod anomaly;
pub mod cycle;
pub mod dist;
pub mod error;
pub mod guard;
pub mod recipe;
pub mod sampler;
pub mod scalar;
pub mod segment;
pub mod sim;
pub mod symbol;

pub use anomaly::{
    canonical_rotation, is_primitive, primitive_period, primitive_root, CertifyResult,
    CycleAnomaly, NonHaltingCertificate, RefusalReason,
};
pub use cycle::{
    certify_non_halting, check_prefix_persistence, detect_cycle, detect_cycle_summary,
    rotation_window, AnomalySummary, StreamingDetector,
};
pub use dist::{Distribution, Logits};
pub use error::{Error, Result};
pub use sampler::{
    finalize, is_deterministic, sample_token, softmax_temperature, truncate_top_k,
    truncate_top_p, SamplerConfig, SeededRng,
};
pub use scalar::Scalar;
pub use segment::{SegmentMode, Segmenter};
pub use sim::{
    invert_search, parse_table_fixture, run_to_certificate, simulate, verify_theorem_oracle,
    CertSearch, CertSearchOptions, HashEchoParams, InvertHit, InvertOutcome, InvertStats,
    SearchStrategy, SimModel, SimOutcome, TheoremOptions, TheoremReport, TheoremVerdict,
};
pub use symbol::{stream_from_ids, Interner, Symbol, SymbolStream, Vocab};

/// `f64` instantiations, the lane the harness and CLI run on.
pub type Logits64 = Logits<f64>;
pub type Distribution64 = Distribution<f64>;
pub type SamplerConfig64 = SamplerConfig<f64>;
pub type SimModel64 = SimModel<f64>;

/// `f32` instantiations.
pub type Logits32 = Logits<f32>;
pub type Distribution32 = Distribution<f32>;
pub type SamplerConfig32 = SamplerConfig<f32>;
pub type SimModel32 = SimModel<f32>;
