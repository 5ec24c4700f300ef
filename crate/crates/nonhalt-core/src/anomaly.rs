//! Cyclic anomalies and non-halting certificates.
//!
//! A `(b, c, ell)` cyclic anomaly describes a stream that, after a beginning
//! of `b` symbols, repeats a cycle of `c` symbols through position `ell`:
//! `x_i = x_{i-c}` for every `i` in `(b+c, ell]` (1-based). The certificate
//! pairs an anomaly with a context size `w` and the threshold
//! `ell_star = b + c + w`: under deterministic sampling, cyclicity observed
//! at `ell_star` is equivalent to the generation never halting.

use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// Smallest `p >= 1` such that `seq[i] == seq[i - p]` for every `i >= p`.
///
/// Computed from the KMP failure function: the smallest period is the length
/// minus the longest proper border.
pub fn primitive_period(seq: &[Symbol]) -> Result<usize> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = seq.len();
    let mut fail = vec![0usize; n];
    let mut k = 0usize;
    for i in 1..n {
        while k > 0 && seq[i] != seq[k] {
            k = fail[k - 1];
        }
        if seq[i] == seq[k] {
            k += 1;
        }
        fail[i] = k;
    }
    Ok(n - fail[n - 1])
}

/// Length of the shortest block whose repetition yields `cycle`.
///
/// This is the smallest divisor `d` of `|cycle|` that is also a period;
/// a cycle is primitive exactly when the root is the whole cycle.
pub fn primitive_root(cycle: &[Symbol]) -> Result<usize> {
    let p = primitive_period(cycle)?;
    let c = cycle.len();
    if c.is_multiple_of(p) {
        Ok(p)
    } else {
        // The smallest period does not divide the length, so no proper
        // divisor can be a period either (a divisor period would be an even
        // smaller period).
        Ok(c)
    }
}

pub fn is_primitive(cycle: &[Symbol]) -> Result<bool> {
    Ok(primitive_root(cycle)? == cycle.len())
}

/// The rotation of `cycle` least in lexicographic order of symbol ids.
///
/// Rotations of a cycle witness the same periodic behaviour, so the least
/// one serves as the canonical representative when deduplicating. Requires a
/// primitive input; reduce via [`primitive_root`] first.
pub fn canonical_rotation(cycle: &[Symbol]) -> Result<Vec<Symbol>> {
    if cycle.is_empty() {
        return Err(Error::EmptySequence);
    }
    let root = primitive_root(cycle)?;
    if root != cycle.len() {
        return Err(Error::NonPrimitiveCycle {
            root,
            len: cycle.len(),
        });
    }
    let c = cycle.len();
    let mut best = 0usize;
    for candidate in 1..c {
        for offset in 0..c {
            let lhs = cycle[(candidate + offset) % c].id();
            let rhs = cycle[(best + offset) % c].id();
            if lhs < rhs {
                best = candidate;
                break;
            }
            if lhs > rhs {
                break;
            }
        }
    }
    Ok((0..c).map(|k| cycle[(best + k) % c].clone()).collect())
}

/// A witnessed `(b, c, ell)` cyclic anomaly.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleAnomaly {
    beginning: Vec<Symbol>,
    cycle: Vec<Symbol>,
    ell: usize,
    r_obs: usize,
}

impl CycleAnomaly {
    /// Validates the anomaly invariants and canonicalizes the cycle.
    ///
    /// Non-primitive witnesses are accepted and reduced to their primitive
    /// root (the observed repetition count grows accordingly). Requires
    /// `ell > b + c` and at least one full observed repetition.
    pub fn new(beginning: Vec<Symbol>, cycle: Vec<Symbol>, ell: usize) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptySequence);
        }
        let root = primitive_root(&cycle)?;
        let cycle: Vec<Symbol> = cycle[..root].to_vec();
        let b = beginning.len();
        let c = cycle.len();
        if ell <= b + c {
            return Err(Error::InvalidAnomaly(format!(
                "ell must exceed b + c; got ell={ell}, b={b}, c={c}"
            )));
        }
        let r_obs = (ell - b) / c;
        debug_assert!(r_obs >= 1);
        Ok(Self {
            beginning,
            cycle,
            ell,
            r_obs,
        })
    }

    /// Beginning length `b`.
    pub fn b(&self) -> usize {
        self.beginning.len()
    }

    /// Primitive cycle length `c`.
    pub fn c(&self) -> usize {
        self.cycle.len()
    }

    /// Index of the last observed symbol.
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Full repetitions observed: `floor((ell - b) / c)`.
    pub fn r_obs(&self) -> usize {
        self.r_obs
    }

    /// Symbols of the trailing partial cycle: `(ell - b) mod c`.
    pub fn trailing_partial(&self) -> usize {
        (self.ell - self.b()) % self.c()
    }

    pub fn beginning(&self) -> &[Symbol] {
        &self.beginning
    }

    pub fn cycle(&self) -> &[Symbol] {
        &self.cycle
    }

    /// The non-halting threshold for a `w`-context model: `b + c + w`.
    pub fn ell_star(&self, w: usize) -> usize {
        self.b() + self.c() + w
    }

    /// Symbol the anomaly predicts at 1-based stream position `i > b`.
    pub fn predicted(&self, i: usize) -> &Symbol {
        debug_assert!(i > self.b());
        &self.cycle[(i - self.b() - 1) % self.c()]
    }

    /// Whether `stream` actually exhibits this anomaly: the first `ell`
    /// symbols must be the beginning followed by the periodic extension of
    /// the cycle.
    pub fn witnesses(&self, stream: &[Symbol]) -> bool {
        if stream.len() < self.ell {
            return false;
        }
        for (i, sym) in stream.iter().take(self.ell).enumerate() {
            let expected = if i < self.b() {
                &self.beginning[i]
            } else {
                self.predicted(i + 1)
            };
            if sym != expected {
                return false;
            }
        }
        true
    }
}

/// Why a certificate was not issued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefusalReason {
    /// The sampler configuration was not deterministic (Fact 2 fails).
    NotDeterministic,
    /// The anomaly was observed at `ell < b + c + w`.
    BelowThreshold { ell: usize, ell_star: usize },
}

impl std::fmt::Display for RefusalReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefusalReason::NotDeterministic => write!(f, "NOT_DETERMINISTIC"),
            RefusalReason::BelowThreshold { ell, ell_star } => {
                write!(f, "BELOW_THRESHOLD (ell={ell} < ell_star={ell_star})")
            }
        }
    }
}

/// Outcome of a certification attempt; refusal is a normal result.
#[derive(Clone, Debug, PartialEq)]
pub enum CertifyResult {
    Certified(NonHaltingCertificate),
    Refused(RefusalReason),
}

impl CertifyResult {
    pub fn certificate(&self) -> Option<&NonHaltingCertificate> {
        match self {
            CertifyResult::Certified(cert) => Some(cert),
            CertifyResult::Refused(_) => None,
        }
    }

    pub fn into_certificate(self) -> Option<NonHaltingCertificate> {
        match self {
            CertifyResult::Certified(cert) => Some(cert),
            CertifyResult::Refused(_) => None,
        }
    }
}

/// A cyclic anomaly certified non-halting for a `w`-context model.
///
/// Only issued when the sampler was deterministic and the anomaly was
/// observed through `ell_star = b + c + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonHaltingCertificate {
    anomaly: CycleAnomaly,
    w: usize,
    ell_star: usize,
    deterministic: bool,
    oracle_depth: Option<usize>,
}

impl NonHaltingCertificate {
    pub(crate) fn issue(anomaly: CycleAnomaly, w: usize) -> Self {
        let ell_star = anomaly.ell_star(w);
        debug_assert!(anomaly.ell() >= ell_star);
        Self {
            anomaly,
            w,
            ell_star,
            deterministic: true,
            oracle_depth: None,
        }
    }

    pub fn anomaly(&self) -> &CycleAnomaly {
        &self.anomaly
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn ell_star(&self) -> usize {
        self.ell_star
    }

    pub fn deterministic(&self) -> bool {
        self.deterministic
    }

    /// Extra symbols simulated past `ell_star` during oracle verification.
    pub fn oracle_depth(&self) -> Option<usize> {
        self.oracle_depth
    }

    pub fn set_oracle_depth(&mut self, depth: usize) {
        self.oracle_depth = Some(depth);
    }
}
