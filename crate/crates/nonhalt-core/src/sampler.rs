//! The sampling pipeline: temperature softmax, then top-k, then top-p, then
//! a seeded inverse-CDF draw.
//!
//! The stage order is fixed (temperature produces the initial distribution,
//! top-k reduces it, top-p reduces that), and determinism holds exactly when
//! `tau = 0`, `top_k = 1`, or `top_p = 0`.

use crate::dist::{Distribution, Logits};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Full sampler parameterization: temperature, top-k, top-p, seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig<T> {
    pub tau: T,
    pub top_k: usize,
    pub top_p: T,
    pub seed: u64,
}

impl<T: Scalar> SamplerConfig<T> {
    /// Validates `tau >= 0` (infinity allowed), `top_k >= 1`, and
    /// `top_p` in [0, 1]. The `top_k <= N` bound is checked against the
    /// vocabulary at use time.
    pub fn new(tau: T, top_k: usize, top_p: T, seed: u64) -> Result<Self> {
        if tau.is_nan() || tau < T::zero() {
            return Err(Error::InvalidSamplerParameter(format!(
                "temperature must be a non-negative real, got {tau:?}"
            )));
        }
        if top_k == 0 {
            return Err(Error::TopKOutOfRange { k: 0, n: usize::MAX });
        }
        if top_p.is_nan() || top_p < T::zero() || top_p > T::one() {
            return Err(Error::TopPOutOfRange {
                p: top_p.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            tau,
            top_k,
            top_p,
            seed,
        })
    }

    /// Greedy decoding: argmax with full nominal support.
    pub fn greedy(top_k: usize, seed: u64) -> Self {
        Self {
            tau: T::zero(),
            top_k: top_k.max(1),
            top_p: T::one(),
            seed,
        }
    }
}

/// True iff the sampler output is deterministic: `tau = 0`, `top_k = 1`, or
/// `top_p = 0`.
pub fn is_deterministic<T: Scalar>(config: &SamplerConfig<T>) -> bool {
    config.tau == T::zero() || config.top_k == 1 || config.top_p == T::zero()
}

/// Softmax of `z / tau`, computed with max-subtraction.
///
/// `tau = 0` is handled as a separate argmax branch (one-hot, ties broken
/// toward the lowest index); `tau = infinity` degenerates to uniform.
pub fn softmax_temperature<T: Scalar>(logits: &Logits<T>, tau: T) -> Result<Distribution<T>> {
    if tau.is_nan() || tau < T::zero() {
        return Err(Error::InvalidSamplerParameter(format!(
            "temperature must be a non-negative real, got {tau:?}"
        )));
    }
    let z = logits.scores();
    if z.is_empty() {
        return Err(Error::EmptySequence);
    }
    if tau == T::zero() {
        let mut best = 0usize;
        for (i, &v) in z.iter().enumerate() {
            if v > z[best] {
                best = i;
            }
        }
        let mut probs = vec![T::zero(); z.len()];
        probs[best] = T::one();
        return Distribution::new(probs);
    }
    let max = z.iter().cloned().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| ((v - max) / tau).exp()).collect();
    let total = exps.iter().fold(T::zero(), |acc, &e| acc + e);
    Distribution::new(exps.into_iter().map(|e| e / total).collect())
}

/// Vocabulary indices ordered by descending probability, ties toward the
/// lower index.
fn descending_order<T: Scalar>(probs: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    order
}

fn renormalize_kept<T: Scalar>(probs: &[T], kept: &[usize]) -> Result<Distribution<T>> {
    let total = kept.iter().fold(T::zero(), |acc, &i| acc + probs[i]);
    let mut out = vec![T::zero(); probs.len()];
    for &i in kept {
        out[i] = probs[i] / total;
    }
    Distribution::new(out)
}

/// Keep the `k` highest-probability entries, zero the rest, renormalize.
pub fn truncate_top_k<T: Scalar>(dist: &Distribution<T>, k: usize) -> Result<Distribution<T>> {
    let n = dist.len();
    if k == 0 || k > n {
        return Err(Error::TopKOutOfRange { k, n });
    }
    if k == n {
        return Ok(dist.clone());
    }
    let order = descending_order(dist.probs());
    renormalize_kept(dist.probs(), &order[..k])
}

/// Keep the smallest prefix of probability-descending entries whose
/// cumulative sum strictly exceeds `p`, zero the rest, renormalize.
///
/// `p = 1` keeps the full support ("more than 1" is unsatisfiable when
/// totals equal 1); `p = 0` keeps exactly the single max entry.
pub fn truncate_top_p<T: Scalar>(dist: &Distribution<T>, p: T) -> Result<Distribution<T>> {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return Err(Error::TopPOutOfRange {
            p: p.to_f64().unwrap_or(f64::NAN),
        });
    }
    if p == T::one() {
        return Ok(dist.clone());
    }
    let order = descending_order(dist.probs());
    let mut kept = Vec::new();
    let mut cumulative = T::zero();
    for &i in &order {
        kept.push(i);
        cumulative = cumulative + dist.probs()[i];
        if cumulative > p {
            break;
        }
    }
    renormalize_kept(dist.probs(), &kept)
}

/// The full pipeline in the fixed order: temperature first, then top-k, then
/// top-p. `top_k` larger than the vocabulary is clipped to it.
pub fn finalize<T: Scalar>(logits: &Logits<T>, config: &SamplerConfig<T>) -> Result<Distribution<T>> {
    if config.top_k == 0 {
        return Err(Error::TopKOutOfRange {
            k: 0,
            n: logits.len(),
        });
    }
    let tempered = softmax_temperature(logits, config.tau)?;
    let k = config.top_k.min(logits.len());
    let after_k = truncate_top_k(&tempered, k)?;
    truncate_top_p(&after_k, config.top_p)
}

/// SplitMix64: the fixed seeded generator behind every sampled draw.
///
/// Pure 64-bit integer mixing, so golden values are identical on every
/// platform. State is a plain value; advancing returns the draw and mutates
/// in place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Draw an index proportionally to `dist` by inverse CDF over vocabulary
/// order. Identical `(dist, state)` pairs yield identical draws.
pub fn sample_token<T: Scalar>(dist: &Distribution<T>, mut rng: SeededRng) -> (usize, SeededRng) {
    let u = T::from_f64(rng.next_unit()).expect("unit draw fits the scalar");
    let mut cumulative = T::zero();
    let mut chosen = None;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p <= T::zero() {
            continue;
        }
        cumulative = cumulative + p;
        if u < cumulative {
            chosen = Some(i);
            break;
        }
    }
    // Float tails can leave u barely above the final cumulative sum; fall
    // back to the last supported index.
    let idx = chosen.unwrap_or_else(|| *dist.support().last().expect("non-empty support"));
    (idx, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logits(v: &[f64]) -> Logits<f64> {
        Logits::new(v.to_vec()).unwrap()
    }

    fn dist(v: &[f64]) -> Distribution<f64> {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let d = softmax_temperature(&logits(&[1.0, 1.0, 1.0]), 1.0).unwrap();
        assert_close(d.probs(), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-12);
    }

    #[test]
    fn softmax_zero_temperature_is_argmax() {
        let d = softmax_temperature(&logits(&[2.0, 1.0, 0.0]), 0.0).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0]);
        // Ties break toward the lowest index.
        let d = softmax_temperature(&logits(&[5.0, 5.0, 1.0]), 0.0).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_matches_direct_evaluation() {
        // exp(2)/Z, exp(1)/Z, exp(0)/Z with Z = exp(2)+exp(1)+exp(0)
        let d = softmax_temperature(&logits(&[2.0, 1.0, 0.0]), 1.0).unwrap();
        assert_close(d.probs(), &[0.66524, 0.24473, 0.09003], 1e-4);
    }

    #[test]
    fn softmax_infinite_temperature_is_uniform() {
        let d = softmax_temperature(&logits(&[9.0, -3.0, 0.5]), f64::INFINITY).unwrap();
        assert_close(d.probs(), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-12);
    }

    #[test]
    fn top_k_examples() {
        let d = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(truncate_top_k(&d, 3).unwrap().probs(), d.probs());
        assert_eq!(truncate_top_k(&d, 1).unwrap().probs(), &[1.0, 0.0, 0.0]);
        let d2 = truncate_top_k(&d, 2).unwrap();
        assert_close(d2.probs(), &[0.625, 0.375, 0.0], 1e-12);
        assert!(matches!(
            truncate_top_k(&d, 4),
            Err(Error::TopKOutOfRange { k: 4, n: 3 })
        ));
    }

    #[test]
    fn top_p_examples() {
        let d = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(truncate_top_p(&d, 0.0).unwrap().probs(), &[1.0, 0.0, 0.0]);
        assert_eq!(truncate_top_p(&d, 1.0).unwrap().probs(), d.probs());
        // Prefix {0.5} sums 0.5 <= 0.6; prefix {0.5, 0.3} sums 0.8 > 0.6.
        let d2 = truncate_top_p(&d, 0.6).unwrap();
        assert_close(d2.probs(), &[0.625, 0.375, 0.0], 1e-12);
        assert!(truncate_top_p(&d, 1.5).is_err());
    }

    #[test]
    fn finalize_examples() {
        let cfg = SamplerConfig::new(0.0, 40, 0.9, 0).unwrap();
        let d = finalize(&logits(&[2.0, 1.0, 0.0]), &cfg).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0]);

        // Uniform -> top-2 keep (tie toward low index) -> renormalize.
        let cfg = SamplerConfig::new(1.0, 2, 1.0, 0).unwrap();
        let d = finalize(&logits(&[1.0, 1.0, 1.0]), &cfg).unwrap();
        assert_close(d.probs(), &[0.5, 0.5, 0.0], 1e-12);

        // Softmax then top-p prefix of 2, renormalized:
        // 0.66524 <= 0.9 < 0.90997.
        let cfg = SamplerConfig::new(1.0, 3, 0.9, 0).unwrap();
        let d = finalize(&logits(&[2.0, 1.0, 0.0]), &cfg).unwrap();
        assert_close(d.probs(), &[0.731, 0.269, 0.0], 1e-3);

        // Lock-in: the max already exceeds p = 0.6, so the support collapses.
        let cfg = SamplerConfig::new(1.0, 3, 0.6, 0).unwrap();
        let d = finalize(&logits(&[2.0, 1.0, 0.0]), &cfg).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn determinism_classifier() {
        let c = |tau: f64, k: usize, p: f64| SamplerConfig::new(tau, k, p, 0).unwrap();
        assert!(is_deterministic(&c(0.0, 40, 0.9)));
        assert!(is_deterministic(&c(0.8, 1, 0.9)));
        assert!(is_deterministic(&c(0.8, 40, 0.0)));
        assert!(!is_deterministic(&c(0.8, 40, 0.95)));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(-0.1, 1, 0.5, 0).is_err());
        assert!(SamplerConfig::new(0.5, 0, 0.5, 0).is_err());
        assert!(SamplerConfig::new(0.5, 1, 1.5, 0).is_err());
        assert!(SamplerConfig::new(f64::INFINITY, 1, 1.0, 0).is_ok());
    }

    #[test]
    fn one_hot_sampling_ignores_seed() {
        let d = dist(&[0.0, 0.0, 1.0]);
        for seed in 0..32 {
            let (idx, _) = sample_token(&d, SeededRng::new(seed));
            assert_eq!(idx, 2);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_state() {
        let d = dist(&[0.5, 0.5]);
        let (a, s1) = sample_token(&d, SeededRng::new(42));
        let (b, s2) = sample_token(&d, SeededRng::new(42));
        assert_eq!(a, b);
        assert_eq!(s1, s2);
    }

    #[test]
    fn sampling_golden_values() {
        // Frozen from the fixed-seed reference run of this generator.
        let d = dist(&[0.5, 0.5]);
        let mut rng = SeededRng::new(42);
        let first = rng.next_unit();
        assert!((first - 0.741_564_878_771_823_3).abs() < 1e-16);
        let (idx, _) = sample_token(&d, SeededRng::new(42));
        assert_eq!(idx, 1);
    }

    #[test]
    fn f32_pipeline_matches_f64_shape() {
        let z = Logits::<f32>::new(vec![2.0, 1.0, 0.0]).unwrap();
        let cfg = SamplerConfig::<f32>::new(1.0, 3, 0.9, 0).unwrap();
        let d = finalize(&z, &cfg).unwrap();
        assert!((d.probs()[0] - 0.731).abs() < 1e-3);
        assert_eq!(d.probs()[2], 0.0);
    }

    proptest! {
        // finalize output always satisfies the Distribution invariants and
        // has a non-empty support.
        #[test]
        fn finalize_yields_valid_distribution(
            z in proptest::collection::vec(-30.0f64..30.0, 2..24),
            tau in 0.0f64..4.0,
            k in 1usize..40,
            p in 0.0f64..=1.0,
        ) {
            let cfg = SamplerConfig::new(tau, k, p, 0).unwrap();
            let d = finalize(&Logits::new(z).unwrap(), &cfg).unwrap();
            let sum: f64 = d.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(!d.support().is_empty());
        }

        // Shift invariance: adding a constant to all logits leaves the
        // softmax unchanged for tau > 0.
        #[test]
        fn softmax_shift_invariant(
            z in proptest::collection::vec(-20.0f64..20.0, 2..16),
            shift in -50.0f64..50.0,
            tau in 0.01f64..4.0,
        ) {
            let base = softmax_temperature(&Logits::new(z.clone()).unwrap(), tau).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let moved = softmax_temperature(&Logits::new(shifted).unwrap(), tau).unwrap();
            for (a, b) in base.probs().iter().zip(moved.probs()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        // Identity cases: top-k at N and top-p at 1 change nothing.
        #[test]
        fn truncations_are_identity_at_bounds(
            z in proptest::collection::vec(-10.0f64..10.0, 2..16),
        ) {
            let d = softmax_temperature(&Logits::new(z).unwrap(), 1.0).unwrap();
            let by_k = truncate_top_k(&d, d.len()).unwrap();
            let by_p = truncate_top_p(&d, 1.0).unwrap();
            prop_assert_eq!(by_k.probs(), d.probs());
            prop_assert_eq!(by_p.probs(), d.probs());
        }

        // Top-p lock-in: if the max entry strictly exceeds p, the final
        // support is a single index.
        #[test]
        fn top_p_lock_in(
            z in proptest::collection::vec(-10.0f64..10.0, 2..16),
            tau in 0.1f64..2.0,
            p in 0.0f64..1.0,
        ) {
            let d = softmax_temperature(&Logits::new(z).unwrap(), tau).unwrap();
            let max = d.probs().iter().cloned().fold(0.0, f64::max);
            prop_assume!(max > p);
            let after = truncate_top_p(&d, p).unwrap();
            prop_assert_eq!(after.support().len(), 1);
        }

        // Deterministic configs collapse every draw to the same index.
        #[test]
        fn deterministic_configs_ignore_seed(
            z in proptest::collection::vec(-10.0f64..10.0, 2..16),
            which in 0usize..3,
            seed in proptest::num::u64::ANY,
        ) {
            let cfg = match which {
                0 => SamplerConfig::new(0.0, 5, 0.9, 0).unwrap(),
                1 => SamplerConfig::new(1.0, 1, 0.9, 0).unwrap(),
                _ => SamplerConfig::new(1.0, 5, 0.0, 0).unwrap(),
            };
            let d = finalize(&Logits::new(z).unwrap(), &cfg).unwrap();
            let (a, _) = sample_token(&d, SeededRng::new(seed));
            let (b, _) = sample_token(&d, SeededRng::new(seed.wrapping_add(1)));
            prop_assert_eq!(a, b);
        }
    }
}
