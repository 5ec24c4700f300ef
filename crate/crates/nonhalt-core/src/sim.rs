//! Deterministic and stochastic w-context toy models.
//!
//! These models are the ground truth the certification threshold is checked
//! against: evaluation is a pure function of exactly the most recent
//! `min(w, available)` symbols, so every consequence of that contract
//! (persistence past `ell_star`, prefix persistence, rotation windows) must
//! hold exactly, with zero tolerance.
//!
//! Two kinds are provided:
//!
//! * `TABLE`: hand-built fixtures with exact control. Entries map a window
//!   of up to `w` symbol ids to a full logit vector; the *longest stored
//!   suffix* of the live window wins, and unmapped windows fall back to
//!   uniform logits.
//! * `HASH_ECHO`: seeded random models for property testing. Each symbol
//!   gets a base logit drawn once from the seed through a fixed 64-bit
//!   mixing function (SplitMix64 finalizer), so results are identical on
//!   every platform. On top of the base, each symbol's logit grows by
//!   `echo_beta` per occurrence in the trailing window, and `eos` carries an
//!   additive bias. The echo term makes window counts, and only window
//!   counts, move a token's probability, which is what gives repeated
//!   prompts their pull toward cycles.
//!
//! `TABLE` models load from a plain-text fixture format (UTF-8, `#`
//! comments):
//!
//! ```text
//! # directives first
//! w 4              # context size
//! vocab 3          # vocabulary size N, ids 0..N-1
//! eos 2            # index of the halting symbol
//! sym 0 A          # optional display text for a symbol
//! 0 -> 0,10,0      # window `0` maps to these logits
//! 1 0 -> 0,0,10    # longer suffixes take precedence
//! ```

use std::collections::HashMap;

use crate::anomaly::NonHaltingCertificate;
use crate::cycle::{detect_cycle, rotation_window, StreamingDetector};
use crate::dist::Logits;
use crate::error::{Error, Result};
use crate::sampler::{finalize, is_deterministic, sample_token, SamplerConfig, SeededRng};
use crate::scalar::Scalar;
use crate::symbol::{Symbol, SymbolStream, Vocab};

/// Default per-occurrence logit bonus for `HASH_ECHO` models.
pub const DEFAULT_ECHO_BETA: f64 = 0.5;

/// Default additive eos logit for `HASH_ECHO` models, calibrated so that
/// roughly half of random prompts halt under greedy sampling (measured
/// 50.2% over 8192 random model/prompt pairs with w in [2,16], N in [4,32]).
pub const DEFAULT_EOS_BIAS: f64 = 0.73;

/// Parameters of a `HASH_ECHO` model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HashEchoParams<T> {
    pub seed: u64,
    pub echo_beta: T,
    pub eos_bias: T,
}

impl<T: Scalar> HashEchoParams<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            echo_beta: T::from_f64(DEFAULT_ECHO_BETA).unwrap(),
            eos_bias: T::from_f64(DEFAULT_EOS_BIAS).unwrap(),
        }
    }
}

#[derive(Clone, Debug)]
enum ModelKind<T> {
    Table {
        entries: HashMap<Vec<u32>, Logits<T>>,
        max_window: usize,
    },
    HashEcho {
        params: HashEchoParams<T>,
        base: Vec<T>,
    },
}

/// A w-context model over a fixed vocabulary.
#[derive(Clone, Debug)]
pub struct SimModel<T> {
    w: usize,
    vocab: Vocab,
    kind: ModelKind<T>,
}

/// SplitMix64 finalizer: the fixed mixing function behind `HASH_ECHO` base
/// logits.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform value in [0, 1) from `(seed, symbol index)`.
fn prf_unit(seed: u64, index: u64) -> f64 {
    let h = mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl<T: Scalar> SimModel<T> {
    /// Build a `TABLE` model from explicit window-to-logits entries.
    pub fn table(w: usize, vocab: Vocab, entries: Vec<(Vec<u32>, Vec<T>)>) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidInput("context size w must be positive".into()));
        }
        let n = vocab.size();
        let mut map = HashMap::new();
        let mut max_window = 0usize;
        for (window, scores) in entries {
            if window.is_empty() || window.len() > w {
                return Err(Error::InvalidInput(format!(
                    "table window length {} outside [1, {w}]",
                    window.len()
                )));
            }
            for &id in &window {
                if id as usize >= n {
                    return Err(Error::SymbolOutOfRange {
                        index: id as usize,
                        size: n,
                    });
                }
            }
            if scores.len() != n {
                return Err(Error::LengthMismatch {
                    what: "table logits",
                    len: scores.len(),
                    vocab: n,
                });
            }
            max_window = max_window.max(window.len());
            map.insert(window, Logits::new(scores)?);
        }
        Ok(Self {
            w,
            vocab,
            kind: ModelKind::Table {
                entries: map,
                max_window,
            },
        })
    }

    /// Build a `HASH_ECHO` model; base logits are precomputed from the seed.
    pub fn hash_echo(w: usize, vocab: Vocab, params: HashEchoParams<T>) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidInput("context size w must be positive".into()));
        }
        let base = (0..vocab.size())
            .map(|i| T::from_f64(prf_unit(params.seed, i as u64)).unwrap())
            .collect();
        Ok(Self {
            w,
            vocab,
            kind: ModelKind::HashEcho { params, base },
        })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn is_table(&self) -> bool {
        matches!(self.kind, ModelKind::Table { .. })
    }

    /// Pre-softmax scores for the trailing `min(w, len)` window.
    pub fn next_distribution_logits(&self, window: &[Symbol]) -> Result<Logits<T>> {
        if window.is_empty() {
            return Err(Error::EmptySequence);
        }
        let n = self.vocab.size();
        let start = window.len().saturating_sub(self.w);
        let window = &window[start..];
        for sym in window {
            if sym.id() as usize >= n {
                return Err(Error::SymbolOutOfRange {
                    index: sym.id() as usize,
                    size: n,
                });
            }
        }
        match &self.kind {
            ModelKind::Table {
                entries,
                max_window,
            } => {
                let longest = window.len().min(*max_window);
                for len in (1..=longest).rev() {
                    let key: Vec<u32> =
                        window[window.len() - len..].iter().map(|s| s.id()).collect();
                    if let Some(logits) = entries.get(&key) {
                        return Ok(logits.clone());
                    }
                }
                // Unmapped window: uniform logits.
                Logits::new(vec![T::zero(); n])
            }
            ModelKind::HashEcho { params, base } => {
                let mut counts = vec![0usize; n];
                for sym in window {
                    counts[sym.id() as usize] += 1;
                }
                let eos = self.vocab.eos_index();
                let scores = (0..n)
                    .map(|i| {
                        let mut z = base[i]
                            + params.echo_beta * T::from_usize(counts[i]).unwrap();
                        if i == eos {
                            z = z + params.eos_bias;
                        }
                        z
                    })
                    .collect();
                Logits::new(scores)
            }
        }
    }
}

/// One generated symbol.
#[derive(Clone, Debug)]
pub struct SimStep {
    pub symbol: Symbol,
    pub logprob: f64,
    pub eos: bool,
}

/// A running generation: owns the trailing context and the sampler state.
pub struct Simulation<'m, T: Scalar> {
    model: &'m SimModel<T>,
    config: SamplerConfig<T>,
    combined: Vec<Symbol>,
    rng: SeededRng,
    halted: bool,
    generated: usize,
}

impl<'m, T: Scalar> Simulation<'m, T> {
    pub fn new(model: &'m SimModel<T>, prompt: &[Symbol], config: SamplerConfig<T>) -> Result<Self> {
        if prompt.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Self {
            model,
            config,
            combined: prompt.to_vec(),
            rng: SeededRng::new(config.seed),
            halted: false,
            generated: 0,
        })
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn generated(&self) -> usize {
        self.generated
    }

    /// Sample the next symbol, or `None` once the run has halted.
    pub fn step(&mut self) -> Result<Option<SimStep>> {
        if self.halted {
            return Ok(None);
        }
        let logits = self.model.next_distribution_logits(&self.combined)?;
        let dist = finalize(&logits, &self.config)?;
        let (idx, rng) = sample_token(&dist, self.rng);
        self.rng = rng;
        let symbol = self.model.vocab().symbol(idx)?.clone();
        let logprob = dist.probs()[idx].to_f64().unwrap_or(f64::NEG_INFINITY).ln();
        let eos = idx == self.model.vocab().eos_index();
        self.combined.push(symbol.clone());
        self.generated += 1;
        if eos {
            self.halted = true;
        }
        Ok(Some(SimStep {
            symbol,
            logprob,
            eos,
        }))
    }
}

/// Result of a bounded generation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub output: SymbolStream,
    pub halted: bool,
}

/// Iteratively sample over the trailing `w`-symbol window of
/// `prompt || output`; stop on eos (halted) or at `max_len` (not halted).
pub fn simulate<T: Scalar>(
    model: &SimModel<T>,
    prompt: &[Symbol],
    config: &SamplerConfig<T>,
    max_len: usize,
) -> Result<SimOutcome> {
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be positive".into()));
    }
    let mut sim = Simulation::new(model, prompt, *config)?;
    let mut output = Vec::new();
    while output.len() < max_len {
        match sim.step()? {
            Some(step) => output.push(step.symbol),
            None => break,
        }
    }
    Ok(SimOutcome {
        halted: sim.halted(),
        output,
    })
}

/// Detection parameters used while searching a run for a certificate.
#[derive(Clone, Copy, Debug)]
pub struct CertSearchOptions {
    pub c_max: usize,
    pub r_min: usize,
    /// Pre-certification budget in generated symbols.
    pub max_len: usize,
}

impl CertSearchOptions {
    pub fn for_model<T: Scalar>(model: &SimModel<T>) -> Self {
        let c_max = model.w().max(8);
        Self {
            c_max,
            r_min: 1,
            max_len: 8 * (model.w() + c_max) + 64,
        }
    }
}

/// Outcome of generating until a certificate, halt, or budget exhaustion.
#[derive(Clone, Debug)]
pub enum CertSearch {
    Certified {
        certificate: NonHaltingCertificate,
        stream: SymbolStream,
    },
    Halted {
        stream: SymbolStream,
    },
    Exhausted {
        stream: SymbolStream,
    },
}

impl CertSearch {
    pub fn certificate(&self) -> Option<&NonHaltingCertificate> {
        match self {
            CertSearch::Certified { certificate, .. } => Some(certificate),
            _ => None,
        }
    }
}

enum RunStop {
    Certified(NonHaltingCertificate),
    Halted,
    Exhausted,
}

fn run_until<'m, T: Scalar>(
    model: &'m SimModel<T>,
    prompt: &[Symbol],
    config: &SamplerConfig<T>,
    opts: &CertSearchOptions,
) -> Result<(Simulation<'m, T>, StreamingDetector, RunStop)> {
    if !is_deterministic(config) {
        return Err(Error::NotDeterministic);
    }
    let mut sim = Simulation::new(model, prompt, *config)?;
    let mut detector = StreamingDetector::new(opts.c_max, opts.r_min);
    let w = model.w();
    while detector.len() < opts.max_len {
        let step = match sim.step()? {
            Some(step) => step,
            None => return Ok((sim, detector, RunStop::Halted)),
        };
        let eos = step.eos;
        let summary = detector.feed(step.symbol);
        if eos {
            return Ok((sim, detector, RunStop::Halted));
        }
        if let Some(s) = summary {
            if s.ell >= s.ell_star(w) {
                let anomaly = detector
                    .current_anomaly()
                    .expect("summary implies a materializable anomaly");
                let cert = NonHaltingCertificate::issue(anomaly, w);
                return Ok((sim, detector, RunStop::Certified(cert)));
            }
        }
    }
    Ok((sim, detector, RunStop::Exhausted))
}

/// Generate under a deterministic config until the stream certifies
/// non-halting at `ell_star = b + c + w`, halts, or exhausts the budget.
pub fn run_to_certificate<T: Scalar>(
    model: &SimModel<T>,
    prompt: &[Symbol],
    config: &SamplerConfig<T>,
    opts: &CertSearchOptions,
) -> Result<CertSearch> {
    let (_, detector, stop) = run_until(model, prompt, config, opts)?;
    let stream = detector.stream().to_vec();
    Ok(match stop {
        RunStop::Certified(certificate) => CertSearch::Certified {
            certificate,
            stream,
        },
        RunStop::Halted => CertSearch::Halted { stream },
        RunStop::Exhausted => CertSearch::Exhausted { stream },
    })
}

/// Knobs for [`verify_theorem_oracle`].
#[derive(Clone, Copy, Debug)]
pub struct TheoremOptions {
    pub search: CertSearchOptions,
    /// Rotation windows are replayed for anomalies with `c` up to this.
    pub rotation_c_limit: usize,
    /// Each rotation is extended `rotation_extension_per_c * c` symbols.
    pub rotation_extension_per_c: usize,
}

impl TheoremOptions {
    pub fn for_model<T: Scalar>(model: &SimModel<T>) -> Self {
        Self {
            search: CertSearchOptions::for_model(model),
            rotation_c_limit: 8,
            rotation_extension_per_c: 10,
        }
    }
}

/// Full verdict of one oracle run.
#[derive(Clone, Debug)]
pub enum TheoremVerdict {
    Certified(Box<TheoremReport>),
    Halted { output_len: usize },
    NoAnomaly { simulated: usize },
}

impl TheoremVerdict {
    pub fn report(&self) -> Option<&TheoremReport> {
        match self {
            TheoremVerdict::Certified(r) => Some(r),
            _ => None,
        }
    }
}

/// Checks performed after a certificate was issued.
///
/// Every `_ok` field must be true on a correct implementation; the checks
/// are exact consequences of determinism plus the window contract.
#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub certificate: NonHaltingCertificate,
    /// Symbols simulated past `ell_star`.
    pub extension_symbols: usize,
    /// The cycle persisted through every extension symbol.
    pub extension_ok: bool,
    /// The anomaly condition held at every prefix length in
    /// `[b+c+1, ell_star]`.
    pub prefix_persistence_ok: bool,
    /// Number of rotation windows replayed (0 when `c` exceeded the limit).
    pub rotations_checked: usize,
    /// Every rotation window was itself a `(0, c)` anomaly on the model.
    pub rotations_ok: bool,
    /// Re-detecting on the extended stream finds the same `(b, c)` still
    /// live, and the condition already held at `ell_star`.
    pub converse_ok: bool,
    /// Total output length including the extension.
    pub final_len: usize,
}

impl TheoremReport {
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.extension_ok {
            out.push("extension");
        }
        if !self.prefix_persistence_ok {
            out.push("prefix-persistence");
        }
        if !self.rotations_ok {
            out.push("rotations");
        }
        if !self.converse_ok {
            out.push("converse");
        }
        out
    }

    pub fn is_clean(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Simulate, certify at `ell_star`, then hold the implementation to the
/// exact consequences: the cycle must persist for `extension_cycles * c`
/// further symbols, the anomaly must hold at every prefix up to `ell_star`,
/// every rotation window of the cycle must itself generate a `(0, c)`
/// anomaly, and re-detection on the extended stream must agree.
pub fn verify_theorem_oracle<T: Scalar>(
    model: &SimModel<T>,
    prompt: &[Symbol],
    config: &SamplerConfig<T>,
    extension_cycles: usize,
    opts: &TheoremOptions,
) -> Result<TheoremVerdict> {
    if !is_deterministic(config) {
        return Err(Error::NotDeterministic);
    }
    let (mut sim, mut detector, stop) = run_until(model, prompt, config, &opts.search)?;
    let certificate = match stop {
        RunStop::Halted => {
            return Ok(TheoremVerdict::Halted {
                output_len: detector.len(),
            })
        }
        RunStop::Exhausted => {
            return Ok(TheoremVerdict::NoAnomaly {
                simulated: detector.len(),
            })
        }
        RunStop::Certified(cert) => cert,
    };
    let anomaly = certificate.anomaly().clone();
    let cert_len = detector.len();

    // Extension: past ell_star the window state recurs, so the cycle must
    // repeat forever; any break or halt within the extension is a violation.
    let extension_symbols = extension_cycles * anomaly.c();
    let mut extension_ok = true;
    for t in 0..extension_symbols {
        match sim.step()? {
            Some(step) if step.eos => {
                extension_ok = false;
                break;
            }
            Some(step) => {
                let position = cert_len + t + 1;
                if &step.symbol != anomaly.predicted(position) {
                    extension_ok = false;
                    break;
                }
                detector.feed(step.symbol);
            }
            None => {
                extension_ok = false;
                break;
            }
        }
    }

    let stream = detector.stream();
    let prefix_persistence_ok =
        crate::cycle::check_prefix_persistence(stream, &anomaly).unwrap_or(false);

    // Rotation windows: each of the c rotations, fed as a fresh prompt of
    // exactly w symbols, must continue the cycle in phase.
    let mut rotations_checked = 0usize;
    let mut rotations_ok = true;
    if anomaly.c() <= opts.rotation_c_limit {
        let w = model.w();
        let c = anomaly.c();
        let depth = opts.rotation_extension_per_c * c;
        for i in 0..c {
            rotations_checked += 1;
            let window = rotation_window(anomaly.cycle(), w, i)?;
            let outcome = simulate(model, &window, config, depth)?;
            if outcome.halted || outcome.output.len() != depth {
                rotations_ok = false;
                break;
            }
            let cycle = anomaly.cycle();
            let in_phase = outcome
                .output
                .iter()
                .enumerate()
                .all(|(t, sym)| sym == &cycle[(i + w + t) % c]);
            if !in_phase {
                rotations_ok = false;
                break;
            }
        }
    }

    // Converse: on the extended stream, the minimal detection must be the
    // same (b, c), still live, and its condition must already have held at
    // ell_star.
    let final_len = stream.len();
    let converse_ok = if extension_ok {
        match detect_cycle(stream, opts.search.c_max, opts.search.r_min) {
            Some(again) => {
                let same = again.b() == anomaly.b() && again.c() == anomaly.c();
                let live = again.ell() == final_len;
                let held_at_star = ((anomaly.b() + anomaly.c() + 1)..=certificate.ell_star())
                    .all(|i| stream[i - 1] == stream[i - 1 - anomaly.c()]);
                same && live && held_at_star
            }
            None => false,
        }
    } else {
        false
    };

    let mut certificate = certificate;
    certificate.set_oracle_depth(extension_symbols);

    Ok(TheoremVerdict::Certified(Box::new(TheoremReport {
        certificate,
        extension_symbols,
        extension_ok,
        prefix_persistence_ok,
        rotations_checked,
        rotations_ok,
        converse_ok,
        final_len,
    })))
}

/// Black-box search strategies for prompt inversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Enumerate the whole prompt space; refused when it exceeds the budget.
    Exhaustive,
    /// Uniform random candidates (with replacement).
    Random { seed: u64 },
    /// Single-mutation hill climbing on the count of target occurrences in
    /// the output, with random restarts.
    HillClimb { seed: u64 },
}

/// A discovered non-halting prompt whose certified cycle contains the
/// target.
#[derive(Clone, Debug)]
pub struct InvertHit {
    pub prompt: SymbolStream,
    pub certificate: NonHaltingCertificate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvertStats {
    /// Candidate prompts evaluated.
    pub evaluated: usize,
    /// Candidates whose generation certified non-halting (any cycle).
    pub certified: usize,
    /// Certified candidates whose cycle contains the target.
    pub hits: usize,
    /// Candidates that halted via eos.
    pub halted: usize,
    /// Distinct canonical cycles among the hits.
    pub distinct_cycles: usize,
    /// `hits / evaluated`.
    pub hit_rate: f64,
}

#[derive(Clone, Debug)]
pub struct InvertOutcome {
    pub hits: Vec<InvertHit>,
    pub stats: InvertStats,
}

struct InvertRun<'m, T: Scalar> {
    model: &'m SimModel<T>,
    config: SamplerConfig<T>,
    opts: CertSearchOptions,
    target: u32,
    evaluated: usize,
    certified: usize,
    halted: usize,
    hits: Vec<InvertHit>,
    seen_hit_prompts: std::collections::HashSet<Vec<u32>>,
}

impl<'m, T: Scalar> InvertRun<'m, T> {
    /// Evaluate one candidate; returns the target-occurrence score used by
    /// hill climbing.
    fn evaluate(&mut self, prompt_ids: &[u32]) -> Result<usize> {
        self.evaluated += 1;
        let prompt: SymbolStream = prompt_ids.iter().map(|&id| Symbol::new(id)).collect();
        let search = run_to_certificate(self.model, &prompt, &self.config, &self.opts)?;
        let (score, stream) = match &search {
            CertSearch::Certified {
                certificate,
                stream,
            } => {
                self.certified += 1;
                if certificate
                    .anomaly()
                    .cycle()
                    .iter()
                    .any(|s| s.id() == self.target)
                    && self.seen_hit_prompts.insert(prompt_ids.to_vec())
                {
                    self.hits.push(InvertHit {
                        prompt: prompt.clone(),
                        certificate: certificate.clone(),
                    });
                }
                (usize::MAX, stream)
            }
            CertSearch::Halted { stream } => {
                self.halted += 1;
                (0, stream)
            }
            CertSearch::Exhausted { stream } => (0, stream),
        };
        if score == usize::MAX {
            Ok(usize::MAX)
        } else {
            Ok(stream.iter().filter(|s| s.id() == self.target).count())
        }
    }

    fn finish(self) -> InvertOutcome {
        let mut distinct = std::collections::HashSet::new();
        for hit in &self.hits {
            let canonical = crate::anomaly::canonical_rotation(hit.certificate.anomaly().cycle())
                .expect("certified cycles are primitive");
            distinct.insert(canonical.iter().map(|s| s.id()).collect::<Vec<_>>());
        }
        let stats = InvertStats {
            evaluated: self.evaluated,
            certified: self.certified,
            hits: self.hits.len(),
            halted: self.halted,
            distinct_cycles: distinct.len(),
            hit_rate: if self.evaluated == 0 {
                0.0
            } else {
                self.hits.len() as f64 / self.evaluated as f64
            },
        };
        InvertOutcome {
            hits: self.hits,
            stats,
        }
    }
}

/// Search for prompts of length `prompt_len` whose deterministic generation
/// is certified non-halting with `target` in the cycle, within `budget`
/// candidate evaluations.
pub fn invert_search<T: Scalar>(
    model: &SimModel<T>,
    target: &Symbol,
    prompt_len: usize,
    strategy: SearchStrategy,
    budget: usize,
    config: &SamplerConfig<T>,
    opts: &CertSearchOptions,
) -> Result<InvertOutcome> {
    if !is_deterministic(config) {
        return Err(Error::NotDeterministic);
    }
    if prompt_len == 0 {
        return Err(Error::InvalidInput("prompt_len must be positive".into()));
    }
    let n = model.vocab().size();
    if target.id() as usize >= n {
        return Err(Error::SymbolOutOfRange {
            index: target.id() as usize,
            size: n,
        });
    }
    let mut run = InvertRun {
        model,
        config: *config,
        opts: *opts,
        target: target.id(),
        evaluated: 0,
        certified: 0,
        halted: 0,
        hits: Vec::new(),
        seen_hit_prompts: std::collections::HashSet::new(),
    };
    match strategy {
        SearchStrategy::Exhaustive => {
            let space = (n as u128)
                .checked_pow(prompt_len as u32)
                .unwrap_or(u128::MAX);
            if space > budget as u128 {
                return Err(Error::SearchSpaceTooLarge { space, budget });
            }
            let mut ids = vec![0u32; prompt_len];
            loop {
                run.evaluate(&ids)?;
                // Mixed-radix increment.
                let mut pos = prompt_len;
                loop {
                    if pos == 0 {
                        return Ok(run.finish());
                    }
                    pos -= 1;
                    ids[pos] += 1;
                    if (ids[pos] as usize) < n {
                        break;
                    }
                    ids[pos] = 0;
                }
            }
        }
        SearchStrategy::Random { seed } => {
            let mut rng = SeededRng::new(seed);
            for _ in 0..budget {
                let ids: Vec<u32> = (0..prompt_len)
                    .map(|_| (rng.next_u64() % n as u64) as u32)
                    .collect();
                run.evaluate(&ids)?;
            }
            Ok(run.finish())
        }
        SearchStrategy::HillClimb { seed } => {
            let mut rng = SeededRng::new(seed);
            let random_prompt = |rng: &mut SeededRng| -> Vec<u32> {
                (0..prompt_len)
                    .map(|_| (rng.next_u64() % n as u64) as u32)
                    .collect()
            };
            let mut current = random_prompt(&mut rng);
            let mut current_score = run.evaluate(&current)?;
            let mut stalls = 0usize;
            while run.evaluated < budget {
                if current_score == usize::MAX || stalls >= 8 {
                    current = random_prompt(&mut rng);
                    current_score = run.evaluate(&current)?;
                    stalls = 0;
                    continue;
                }
                let mut candidate = current.clone();
                let pos = (rng.next_u64() % prompt_len as u64) as usize;
                candidate[pos] = (rng.next_u64() % n as u64) as u32;
                let score = run.evaluate(&candidate)?;
                if score > current_score {
                    current = candidate;
                    current_score = score;
                    stalls = 0;
                } else {
                    stalls += 1;
                }
            }
            Ok(run.finish())
        }
    }
}

/// Parse a `TABLE` model from the plain-text fixture format described in
/// the module docs.
pub fn parse_table_fixture<T: Scalar>(text: &str) -> Result<SimModel<T>> {
    let mut w: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut eos: Option<usize> = None;
    let mut texts: Vec<(u32, String)> = Vec::new();
    let mut entries: Vec<(Vec<u32>, Vec<T>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::FixtureParse {
            line: line_no,
            message,
        };
        if let Some((window_part, logits_part)) = line.split_once("->") {
            let window: Vec<u32> = window_part
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|e| err(format!("bad id `{t}`: {e}"))))
                .collect::<Result<_>>()?;
            let scores: Vec<T> = logits_part
                .split(',')
                .map(|t| {
                    let v: f64 = t
                        .trim()
                        .parse()
                        .map_err(|e| err(format!("bad logit `{}`: {e}", t.trim())))?;
                    T::from_f64(v).ok_or_else(|| err(format!("logit {v} out of range")))
                })
                .collect::<Result<_>>()?;
            entries.push((window, scores));
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        match keyword {
            "w" | "vocab" | "eos" => {
                let value: usize = parts
                    .next()
                    .ok_or_else(|| err(format!("`{keyword}` needs a value")))?
                    .parse()
                    .map_err(|e| err(format!("bad `{keyword}` value: {e}")))?;
                match keyword {
                    "w" => w = Some(value),
                    "vocab" => n = Some(value),
                    _ => eos = Some(value),
                }
            }
            "sym" => {
                let id: u32 = parts
                    .next()
                    .ok_or_else(|| err("`sym` needs an id".into()))?
                    .parse()
                    .map_err(|e| err(format!("bad `sym` id: {e}")))?;
                let text: String = parts.collect::<Vec<_>>().join(" ");
                if text.is_empty() {
                    return Err(err("`sym` needs a text".into()));
                }
                texts.push((id, text));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let w = w.ok_or(Error::FixtureParse {
        line: 0,
        message: "missing `w` directive".into(),
    })?;
    let n = n.ok_or(Error::FixtureParse {
        line: 0,
        message: "missing `vocab` directive".into(),
    })?;
    let eos = eos.ok_or(Error::FixtureParse {
        line: 0,
        message: "missing `eos` directive".into(),
    })?;

    let mut symbols: Vec<Symbol> = (0..n).map(|i| Symbol::new(i as u32)).collect();
    for (id, text) in texts {
        if id as usize >= n {
            return Err(Error::SymbolOutOfRange {
                index: id as usize,
                size: n,
            });
        }
        symbols[id as usize] = Symbol::with_text(id, text);
    }
    let vocab = Vocab::new(symbols, eos)?;
    SimModel::table(w, vocab, entries)
}

/// Seed of the shipped inversion fixture, selected by running the
/// exhaustive 3-symbol inversion over candidate seeds and keeping one where
/// at least 90% of targets have a certified inversion.
pub const INVERSION_FIXTURE_SEED: u64 = 7;

/// Eos bias of the shipped inversion fixture: low enough that echoed
/// prompts can outcompete eos from the first step.
pub const INVERSION_FIXTURE_EOS_BIAS: f64 = 0.2;

/// The shipped `HASH_ECHO` inversion fixture: N = 16, w = 8.
pub fn inversion_fixture() -> SimModel<f64> {
    let vocab = Vocab::numeric(16, 15).expect("static fixture vocabulary");
    SimModel::hash_echo(
        8,
        vocab,
        HashEchoParams {
            seed: INVERSION_FIXTURE_SEED,
            echo_beta: DEFAULT_ECHO_BETA,
            eos_bias: INVERSION_FIXTURE_EOS_BIAS,
        },
    )
    .expect("static fixture parameters")
}
