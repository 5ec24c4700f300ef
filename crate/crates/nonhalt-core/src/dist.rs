//! Logit vectors and validated probability distributions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pre-softmax scores, aligned to vocabulary order.
#[derive(Clone, Debug, PartialEq)]
pub struct Logits<T> {
    scores: Vec<T>,
}

impl<T: Scalar> Logits<T> {
    /// Every entry must be finite.
    pub fn new(scores: Vec<T>) -> Result<Self> {
        for (index, z) in scores.iter().enumerate() {
            if !z.is_finite() {
                return Err(Error::NonFiniteLogit { index });
            }
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// A probability distribution over the vocabulary.
///
/// Construction validates that every entry lies in [0, 1] and that the total
/// is 1 within [`Scalar::prob_sum_tolerance`]. The support is the set of
/// indices with strictly positive probability, kept in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    probs: Vec<T>,
    support: Vec<usize>,
}

impl<T: Scalar> Distribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let mut sum = T::zero();
        for (index, &p) in probs.iter().enumerate() {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::ProbabilityOutOfRange {
                    index,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            sum = sum + p;
        }
        let tolerance = T::prob_sum_tolerance();
        if (sum - T::one()).abs() > tolerance {
            return Err(Error::ProbabilitySum {
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tolerance: tolerance.to_f64().unwrap_or(f64::NAN),
            });
        }
        let support = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(i, _)| i)
            .collect();
        Ok(Self { probs, support })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most probable entry, ties broken toward the lower index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &p) in self.probs.iter().enumerate() {
            match best {
                Some(b) if self.probs[b] >= p => {}
                _ => best = Some(i),
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logits_reject_non_finite() {
        assert!(Logits::new(vec![0.0, f64::NAN]).is_err());
        assert!(Logits::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(Logits::new(vec![-1.0e300, 1.0e300]).is_ok());
    }

    #[test]
    fn distribution_validates_sum() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        // Deviation above the 1e-9 tolerance is rejected.
        let err = Distribution::new(vec![0.5, 0.5 + 3e-9]).unwrap_err();
        assert!(matches!(err, Error::ProbabilitySum { .. }));
        // Within tolerance passes.
        assert!(Distribution::new(vec![0.5, 0.5 + 5e-10]).is_ok());
    }

    #[test]
    fn distribution_validates_range() {
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn support_tracks_positive_entries() {
        let d = Distribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.support(), &[0, 2]);
        assert_eq!(d.argmax(), Some(0));
    }

    #[test]
    fn f32_uses_scaled_tolerance() {
        let d = Distribution::<f32>::new(vec![0.3333333, 0.3333333, 0.3333334]);
        assert!(d.is_ok());
    }
}
