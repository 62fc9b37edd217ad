//! Network-coded soft demapping.
//!
//! Candidate super-symbols are scored with the complex Gaussian
//! log-likelihood and combined into one LLR per network-coded bit with the
//! Jacobian logarithm. Positive LLRs favour bit value 1.

use num_complex::Complex;

use crate::constellation::squared_distance;
use crate::modem::BitSequence;
use crate::{Error, Real, Result};

/// Saturation applied when a bit hypothesis has no candidate.
pub const DEFAULT_LLR_CLAMP: f64 = 100.0;

/// `ln p(y | x)` for `p = (π N0)^-M exp(-||y - x||² / N0)`.
pub fn log_likelihood<T: Real>(y: &[Complex<T>], x: &[Complex<T>], n0: T) -> T {
    log_likelihood_from_distance(squared_distance(y, x), y.len(), n0)
}

#[inline]
pub fn log_likelihood_from_distance<T: Real>(squared_distance: T, dims: usize, n0: T) -> T {
    let pi = T::of(std::f64::consts::PI);
    -T::of(dims as f64) * (pi * n0).ln() - squared_distance / n0
}

/// `max*(a, b) = max(a, b) + ln(1 + e^{-|a - b|})`.
#[inline]
pub fn max_star2<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// `ln Σ e^{x_i}` by the right-nested pairwise rule
/// `max*(x_1, max*(x_2, ..))`. Empty input gives -∞.
pub fn max_star<T: Real>(values: &[T]) -> T {
    values
        .iter()
        .rev()
        .fold(T::neg_infinity(), |acc, &v| max_star2(v, acc))
}

/// One LLR per network-coded bit, MSB first.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector<T> {
    values: Vec<T>,
    clamp: T,
}

impl<T: Real> LlrVector<T> {
    pub fn new(values: Vec<T>, clamp: T) -> Self {
        let values = values.into_iter().map(|z| z.max(-clamp).min(clamp)).collect();
        Self { values, clamp }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn clamp(&self) -> T {
        self.clamp
    }
}

/// A scored hypothesis: network-coded label (as a μ-bit index) and
/// log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<T> {
    pub label: usize,
    pub log_likelihood: T,
}

#[inline]
fn label_bit(label: usize, i: usize, mu: usize) -> bool {
    (label >> (mu - 1 - i)) & 1 == 1
}

/// Per-bit LLRs of the network-coded label over the candidate list.
///
/// `priors` are a-priori LLRs of the other bits of each candidate; bit `i`
/// uses `log p + Σ_{j≠i} u_j v_j`. When a hypothesis for bit `i` has no
/// candidate its max-star is -∞ and the LLR saturates at `±clamp`.
pub fn nc_llrs<T: Real>(candidates: &[Scored<T>], priors: &[T], mu: usize, clamp: T) -> Result<LlrVector<T>> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    if priors.len() != mu {
        return Err(Error::LengthMismatch(priors.len(), mu));
    }
    let mut ones = Vec::with_capacity(candidates.len());
    let mut zeros = Vec::with_capacity(candidates.len());
    let values = (0..mu)
        .map(|i| {
            ones.clear();
            zeros.clear();
            for c in candidates {
                let prior = (0..mu)
                    .filter(|&j| j != i && label_bit(c.label, j, mu))
                    .fold(T::zero(), |acc, j| acc + priors[j]);
                let metric = c.log_likelihood + prior;
                if label_bit(c.label, i, mu) {
                    ones.push(metric);
                } else {
                    zeros.push(metric);
                }
            }
            match (ones.is_empty(), zeros.is_empty()) {
                (false, true) => clamp,
                (true, false) => -clamp,
                _ => max_star(&ones) - max_star(&zeros),
            }
        })
        .collect();
    Ok(LlrVector::new(values, clamp))
}

/// Bit `i` is 1 iff `z_i > 0`; a zero LLR decides 0.
pub fn hard_decision<T: Real>(llrs: &LlrVector<T>) -> BitSequence {
    BitSequence::from(
        llrs.values()
            .iter()
            .map(|&z| (z > T::zero()) as u8)
            .collect::<Vec<_>>()
            .as_slice(),
    )
}
