//! Detection and certification of cyclic anomalies in symbol streams.
//!
//! Detection semantics: among all candidate cycle sizes `c <= c_max`, return
//! the anomaly with the smallest `c`, and for that `c` the smallest
//! beginning `b`, such that `x_i = x_{i-c}` holds for every `i` in
//! `(b+c, ell]` with `ell > b+c` and at least `r_min` full repetitions
//! observed. The batch detector does one backward scan per candidate size;
//! the streaming detector maintains, per size, the start of the live run of
//! matches, at amortized `O(c_max)` per symbol. The two are implemented
//! independently and cross-checked prefix by prefix.

use crate::anomaly::{CertifyResult, CycleAnomaly, NonHaltingCertificate, RefusalReason};
use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// Cheap, copyable view of a detected anomaly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnomalySummary {
    pub b: usize,
    pub c: usize,
    pub ell: usize,
    pub r_obs: usize,
}

impl AnomalySummary {
    pub fn ell_star(&self, w: usize) -> usize {
        self.b + self.c + w
    }
}

fn materialize(stream: &[Symbol], summary: AnomalySummary) -> CycleAnomaly {
    let beginning = stream[..summary.b].to_vec();
    let cycle = stream[summary.b..summary.b + summary.c].to_vec();
    CycleAnomaly::new(beginning, cycle, summary.ell)
        .expect("detector output satisfies the anomaly invariants")
}

/// Batch detection over a full stream.
///
/// For each candidate `c` ascending, a backward scan finds the minimal start
/// `m` with `x_i = x_{i-c}` for all `i` in `[m, ell]`; then `b = m - c - 1`
/// (1-based). The first qualifying `c` wins, which also makes the reported
/// cycle primitive: a divisor period would have qualified earlier.
pub fn detect_cycle(stream: &[Symbol], c_max: usize, r_min: usize) -> Option<CycleAnomaly> {
    detect_cycle_summary(stream, c_max, r_min).map(|s| materialize(stream, s))
}

pub fn detect_cycle_summary(
    stream: &[Symbol],
    c_max: usize,
    r_min: usize,
) -> Option<AnomalySummary> {
    let ell = stream.len();
    if ell < 2 || c_max == 0 {
        return None;
    }
    let r_min = r_min.max(1);
    for c in 1..=c_max.min(ell - 1) {
        // Backward scan: longest run of x[i] == x[i-c] ending at the last
        // symbol (0-based indices here).
        let mut start = ell; // first 0-based index of the run, ell = broken
        let mut i = ell - 1;
        while i >= c && stream[i] == stream[i - c] {
            start = i;
            if i == c {
                break;
            }
            i -= 1;
        }
        if start == ell {
            continue;
        }
        // 1-based m = start + 1, so b = m - c - 1 = start - c.
        let b = start - c;
        let r_obs = (ell - b) / c;
        if r_obs >= r_min {
            return Some(AnomalySummary { b, c, ell, r_obs });
        }
    }
    None
}

/// Online detector equivalent to [`detect_cycle`] at every prefix.
///
/// For each candidate size the state tracks `run_start[c]`: the smallest
/// 1-based index `m` such that `x_i = x_{i-c}` held for every `i` in
/// `[m, len]`, or `len + 1` when the last comparison failed. Feeding a
/// symbol costs `O(c_max)` comparisons; the full stream is retained so
/// anomalies can be materialized with their witness symbols.
#[derive(Clone, Debug)]
pub struct StreamingDetector {
    c_max: usize,
    r_min: usize,
    stream: Vec<Symbol>,
    run_start: Vec<usize>,
}

impl StreamingDetector {
    pub fn new(c_max: usize, r_min: usize) -> Self {
        Self {
            c_max: c_max.max(1),
            r_min: r_min.max(1),
            stream: Vec::new(),
            run_start: vec![1; c_max.max(1)],
        }
    }

    pub fn c_max(&self) -> usize {
        self.c_max
    }

    pub fn r_min(&self) -> usize {
        self.r_min
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    pub fn stream(&self) -> &[Symbol] {
        &self.stream
    }

    /// Feed the next symbol; returns the current anomaly summary, if any.
    pub fn feed(&mut self, next: Symbol) -> Option<AnomalySummary> {
        self.stream.push(next);
        let ell = self.stream.len();
        for c in 1..=self.c_max {
            if ell <= c {
                self.run_start[c - 1] = ell + 1;
                continue;
            }
            if self.stream[ell - 1] == self.stream[ell - 1 - c] {
                // Run alive: keep its start, or begin one at the new index.
                self.run_start[c - 1] = self.run_start[c - 1].min(ell);
            } else {
                self.run_start[c - 1] = ell + 1;
            }
        }
        self.current_summary()
    }

    /// The anomaly visible on everything fed so far, if any.
    pub fn current_summary(&self) -> Option<AnomalySummary> {
        let ell = self.stream.len();
        for c in 1..=self.c_max.min(ell.saturating_sub(1)) {
            let m = self.run_start[c - 1];
            if m > ell {
                continue;
            }
            let b = m - 1 - c;
            let r_obs = (ell - b) / c;
            if r_obs >= self.r_min {
                return Some(AnomalySummary { b, c, ell, r_obs });
            }
        }
        None
    }

    /// Materialized form of [`Self::current_summary`].
    pub fn current_anomaly(&self) -> Option<CycleAnomaly> {
        self.current_summary().map(|s| materialize(&self.stream, s))
    }
}

/// Issue a non-halting certificate for a `w`-context model, or refuse.
///
/// A certificate requires a deterministic sampler and an anomaly observed
/// through `ell_star = b + c + w`; refusal carries the reason.
pub fn certify_non_halting(
    anomaly: &CycleAnomaly,
    w: usize,
    deterministic: bool,
) -> CertifyResult {
    if !deterministic {
        return CertifyResult::Refused(RefusalReason::NotDeterministic);
    }
    let ell_star = anomaly.ell_star(w);
    if anomaly.ell() < ell_star {
        return CertifyResult::Refused(RefusalReason::BelowThreshold {
            ell: anomaly.ell(),
            ell_star,
        });
    }
    CertifyResult::Certified(NonHaltingCertificate::issue(anomaly.clone(), w))
}

/// Whether the anomaly's condition holds on every prefix `x_1..x_{ell'}` for
/// `ell'` in `[b+c+1, ell]` with the same `(b, c)`.
///
/// The quantified prefix checks are evaluated literally; this is the replay
/// used to exercise prefix persistence, not a shortcut through the detector.
pub fn check_prefix_persistence(stream: &[Symbol], anomaly: &CycleAnomaly) -> Result<bool> {
    if stream.len() < anomaly.ell() {
        return Err(Error::StreamTooShort {
            len: stream.len(),
            ell: anomaly.ell(),
        });
    }
    let b = anomaly.b();
    let c = anomaly.c();
    for ell_prime in (b + c + 1)..=anomaly.ell() {
        for i in (b + c + 1)..=ell_prime {
            if stream[i - 1] != stream[i - 1 - c] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `w` consecutive symbols of the infinite periodic extension of `cycle`,
/// starting at cycle position `1 + i` (1-based).
///
/// Built from the piecewise window formulas (for `w >= c` the head slice,
/// the full-cycle repetitions, and the wrapped tail; for `w < c` the two
/// sub-cases by offset) rather than by naive slicing, so the construction
/// can be cross-checked against naive slicing in tests.
pub fn rotation_window(cycle: &[Symbol], w: usize, i: usize) -> Result<Vec<Symbol>> {
    if cycle.is_empty() {
        return Err(Error::EmptySequence);
    }
    if w == 0 {
        return Err(Error::InvalidInput("window size must be positive".into()));
    }
    let c = cycle.len();
    let root = crate::anomaly::primitive_root(cycle)?;
    if root != c {
        return Err(Error::NonPrimitiveCycle { root, len: c });
    }
    if i >= c {
        return Err(Error::RotationOffsetOutOfRange { i, c });
    }
    // 1-based inclusive slice of the cycle; empty when lo > hi.
    let slice = |lo: usize, hi: usize| -> Vec<Symbol> {
        if lo > hi {
            return Vec::new();
        }
        cycle[lo - 1..hi].to_vec()
    };
    let mut out = Vec::with_capacity(w);
    if w >= c {
        let r = w / c;
        let j = w % c;
        out.extend(slice(1 + i, c));
        let reps = r - 1 + (i + j) / c;
        for _ in 0..reps {
            out.extend_from_slice(cycle);
        }
        out.extend(slice(1, (j + i) % c));
    } else if i <= c - w {
        out.extend(slice(1 + i, w + i));
    } else {
        out.extend(slice(1 + i, c));
        out.extend(slice(1, i + w - c));
    }
    debug_assert_eq!(out.len(), w);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{stream_from_ids, SymbolStream};
    use proptest::prelude::*;

    fn syms(ids: &[u32]) -> SymbolStream {
        stream_from_ids(ids.iter().copied())
    }

    #[test]
    fn detects_constant_stream() {
        let a = detect_cycle(&syms(&[0, 0, 0, 0]), 4, 2).unwrap();
        assert_eq!((a.b(), a.c(), a.r_obs(), a.ell()), (0, 1, 4, 4));
    }

    #[test]
    fn aperiodic_stream_yields_none() {
        assert!(detect_cycle(&syms(&[0, 1, 2, 3]), 4, 1).is_none());
        assert!(detect_cycle(&syms(&[0, 1, 2, 3]), 4, 2).is_none());
    }

    #[test]
    fn detects_offset_cycle_in_phase() {
        // [X,A,B,A,B,A] -> b=1, c=2, cycle=[A,B], r_obs=2, ell=6
        let a = detect_cycle(&syms(&[9, 0, 1, 0, 1, 0]), 4, 2).unwrap();
        assert_eq!((a.b(), a.c(), a.r_obs(), a.ell()), (1, 2, 2, 6));
        assert_eq!(a.cycle(), &syms(&[0, 1])[..]);
        assert_eq!(a.beginning(), &syms(&[9])[..]);
    }

    #[test]
    fn respects_c_max() {
        let a = detect_cycle(&syms(&[0, 1, 2, 0, 1, 2, 0, 1, 2]), 2, 1);
        assert!(a.is_none());
        let a = detect_cycle(&syms(&[0, 1, 2, 0, 1, 2, 0, 1, 2]), 3, 1).unwrap();
        assert_eq!(a.c(), 3);
    }

    #[test]
    fn streaming_minimal_qualifying_stream() {
        let mut d = StreamingDetector::new(4, 2);
        assert!(d.feed(Symbol::new(0)).is_none());
        let s = d.feed(Symbol::new(0)).unwrap();
        assert_eq!((s.b, s.c, s.ell, s.r_obs), (0, 1, 2, 2));
    }

    #[test]
    fn streaming_partial_period_does_not_fire() {
        // A,B,A holds only 1.5 periods of c=2.
        let mut d = StreamingDetector::new(4, 2);
        assert!(d.feed(Symbol::new(0)).is_none());
        assert!(d.feed(Symbol::new(1)).is_none());
        assert!(d.feed(Symbol::new(0)).is_none());
    }

    #[test]
    fn certification_thresholds() {
        let a = CycleAnomaly::new(vec![], syms(&[0]), 5).unwrap();
        match certify_non_halting(&a, 4, true) {
            CertifyResult::Certified(cert) => {
                assert_eq!(cert.ell_star(), 5);
                assert_eq!(cert.w(), 4);
                assert!(cert.deterministic());
            }
            CertifyResult::Refused(r) => panic!("expected certificate, got {r}"),
        }

        // ell = 100 against w = 128000 is far below threshold.
        let a = CycleAnomaly::new(vec![], syms(&[0, 1]), 100).unwrap();
        match certify_non_halting(&a, 128_000, true) {
            CertifyResult::Refused(RefusalReason::BelowThreshold { ell, ell_star }) => {
                assert_eq!(ell, 100);
                assert_eq!(ell_star, 128_002);
            }
            other => panic!("expected refusal, got {other:?}"),
        }

        match certify_non_halting(&a, 10, false) {
            CertifyResult::Refused(RefusalReason::NotDeterministic) => {}
            other => panic!("expected NOT_DETERMINISTIC, got {other:?}"),
        }
    }

    #[test]
    fn certification_boundary_is_exact() {
        // Issued at ell = b+c+w, refused at ell = b+c+w-1.
        let stream = syms(&[7, 0, 0, 0, 0, 0, 0]);
        let at = |ell: usize| CycleAnomaly::new(stream[..1].to_vec(), syms(&[0]), ell).unwrap();
        let w = 5;
        assert!(certify_non_halting(&at(7), w, true).certificate().is_some());
        assert!(certify_non_halting(&at(6), w, true).certificate().is_none());
    }

    #[test]
    fn prefix_persistence_examples() {
        let stream = syms(&[0, 0, 0, 0, 0]);
        let a = CycleAnomaly::new(vec![], syms(&[0]), 5).unwrap();
        assert!(check_prefix_persistence(&stream, &a).unwrap());

        let stream = syms(&[9, 0, 1, 0, 1, 0]);
        let a = CycleAnomaly::new(syms(&[9]), syms(&[0, 1]), 6).unwrap();
        assert!(check_prefix_persistence(&stream, &a).unwrap());

        let a = CycleAnomaly::new(syms(&[9]), syms(&[0, 1]), 6).unwrap();
        assert!(matches!(
            check_prefix_persistence(&stream[..4], &a),
            Err(Error::StreamTooShort { len: 4, ell: 6 })
        ));
    }

    #[test]
    fn rotation_window_examples() {
        // cycle=[A], w=3, i=0 -> [A,A,A]
        assert_eq!(rotation_window(&syms(&[0]), 3, 0).unwrap(), syms(&[0, 0, 0]));
        // cycle=[A,B,C], w=4, i=1 -> [B,C,A,B]
        assert_eq!(
            rotation_window(&syms(&[0, 1, 2]), 4, 1).unwrap(),
            syms(&[1, 2, 0, 1])
        );
        // cycle=[A,B,C,D,E], w=3, i=3 -> [D,E,A]
        assert_eq!(
            rotation_window(&syms(&[0, 1, 2, 3, 4]), 3, 3).unwrap(),
            syms(&[3, 4, 0])
        );
        assert!(matches!(
            rotation_window(&syms(&[0, 1]), 3, 2),
            Err(Error::RotationOffsetOutOfRange { i: 2, c: 2 })
        ));
        assert!(rotation_window(&syms(&[0, 1, 0, 1]), 3, 0).is_err());
    }

    // Naive periodic slicing: length-w slice starting at offset i of the
    // cycle repeated enough times.
    fn periodic_slice(cycle: &[Symbol], w: usize, i: usize) -> Vec<Symbol> {
        (0..w).map(|t| cycle[(i + t) % cycle.len()].clone()).collect()
    }

    #[test]
    fn rotation_window_matches_periodic_slicing_exhaustively() {
        // Primitive cycles of each length: distinct ids.
        for c in 1..=8usize {
            let cycle = stream_from_ids(0..c as u32);
            for w in 1..=32usize {
                for i in 0..c {
                    assert_eq!(
                        rotation_window(&cycle, w, i).unwrap(),
                        periodic_slice(&cycle, w, i),
                        "c={c} w={w} i={i}"
                    );
                }
            }
        }
    }

    proptest! {
        // Piecewise formula == naive slicing on arbitrary primitive cycles.
        #[test]
        fn rotation_window_equivalence(
            ids in proptest::collection::vec(0u32..5, 1..9),
            w in 1usize..33,
            i in 0usize..8,
        ) {
            let cycle = stream_from_ids(ids);
            prop_assume!(crate::anomaly::is_primitive(&cycle).unwrap());
            let i = i % cycle.len();
            prop_assert_eq!(
                rotation_window(&cycle, w, i).unwrap(),
                periodic_slice(&cycle, w, i)
            );
        }

        // Streaming report equals batch detection at every prefix.
        #[test]
        fn streaming_equals_batch_at_every_prefix(
            ids in proptest::collection::vec(0u32..3, 1..80),
            c_max in 1usize..8,
            r_min in 1usize..4,
        ) {
            let stream = stream_from_ids(ids);
            let mut det = StreamingDetector::new(c_max, r_min);
            for (idx, sym) in stream.iter().enumerate() {
                let streaming = det.feed(sym.clone());
                let batch = detect_cycle_summary(&stream[..=idx], c_max, r_min);
                prop_assert_eq!(streaming, batch, "prefix len {}", idx + 1);
            }
        }
    }
}
