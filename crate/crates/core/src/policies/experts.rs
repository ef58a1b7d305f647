//! Single-arm experts algorithms used as greedy subroutines: Hedge for full
//! feedback and Exp3 for bandit feedback.

use rand::Rng;

use crate::domain::ArmId;
use crate::error::{Error, Result};

/// Keeps weights finite: rescale so the largest is 1, floor the rest.
fn renormalize(weights: &mut [f64]) {
    let max = weights.iter().copied().fold(0.0_f64, f64::max);
    if max > 0.0 && max.is_finite() {
        for w in weights.iter_mut() {
            *w = (*w / max).max(f64::MIN_POSITIVE);
        }
    }
}

/// Draws an index from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    // Rounding left `u` just past the end; take the last arm with mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// `k` distinct arms: the first from `probs`, the rest from `probs`
/// renormalized over the remaining arms.
pub(crate) fn sample_distinct<R: Rng + ?Sized>(probs: &[f64], k: usize, rng: &mut R) -> Vec<ArmId> {
    let mut remaining = probs.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(probs.len()) {
        let i = if remaining.iter().all(|p| *p <= 0.0) {
            // Only zero-mass arms left; take them in index order.
            (0..remaining.len())
                .find(|j| !out.contains(&ArmId(*j)))
                .expect("k <= n")
        } else {
            sample_index(&remaining, rng)
        };
        out.push(ArmId(i));
        remaining[i] = 0.0;
    }
    out
}

/// Multiplicative weights over `N` experts.
#[derive(Debug, Clone)]
pub struct Hedge {
    weights: Vec<f64>,
    learning_rate: f64,
}

impl Hedge {
    pub fn new(n_arms: usize, learning_rate: f64) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::param("Hedge needs at least one arm"));
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::OutOfRange {
                what: "learning rate",
                value: learning_rate,
                range: "[0, inf)",
            });
        }
        Ok(Hedge {
            weights: vec![1.0; n_arms],
            learning_rate,
        })
    }

    pub fn n_arms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Sampling distribution, proportional to the weights.
    pub fn distribution(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmId {
        ArmId(sample_index(&self.distribution(), rng))
    }

    /// `w[a] *= exp(-eta * c[a])`.
    pub fn update(&mut self, costs: &[f64]) -> Result<()> {
        if costs.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                what: "cost vector",
                expected: self.weights.len(),
                got: costs.len(),
            });
        }
        for (w, c) in self.weights.iter_mut().zip(costs) {
            *w *= (-self.learning_rate * c).exp();
        }
        renormalize(&mut self.weights);
        Ok(())
    }

    /// Returns the distribution played this round, then applies the update.
    pub fn step(&mut self, costs: &[f64]) -> Result<Vec<f64>> {
        let dist = self.distribution();
        self.update(costs)?;
        Ok(dist)
    }
}

/// Exp3 with importance-weighted loss estimates and uniform mixing.
#[derive(Debug, Clone)]
pub struct Exp3 {
    weights: Vec<f64>,
    gamma: f64,
    learning_rate: f64,
}

impl Exp3 {
    pub fn new(n_arms: usize, gamma: f64, learning_rate: f64) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::param("Exp3 needs at least one arm"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange {
                what: "gamma",
                value: gamma,
                range: "[0, 1]",
            });
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::OutOfRange {
                what: "learning rate",
                value: learning_rate,
                range: "[0, inf)",
            });
        }
        Ok(Exp3 {
            weights: vec![1.0; n_arms],
            gamma,
            learning_rate,
        })
    }

    /// Default `eta = gamma / N`.
    pub fn with_gamma(n_arms: usize, gamma: f64) -> Result<Self> {
        Self::new(n_arms, gamma, gamma / n_arms.max(1) as f64)
    }

    pub fn n_arms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// `(1 - gamma) w / sum(w) + gamma / N`.
    pub fn distribution(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let uniform = self.gamma / self.weights.len() as f64;
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / total + uniform)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmId {
        ArmId(sample_index(&self.distribution(), rng))
    }

    /// Charges `observed_cost / P(pulled)` to the pulled arm only.
    pub fn update(&mut self, pulled: ArmId, observed_cost: f64) -> Result<()> {
        if pulled.0 >= self.weights.len() {
            return Err(Error::InvalidArm {
                index: pulled.0,
                n_arms: self.weights.len(),
            });
        }
        crate::domain::check_unit("observed cost", observed_cost)?;
        let p = self.distribution()[pulled.0];
        if !(p > 0.0) {
            return Err(Error::ContractViolation(format!(
                "arm {pulled} was pulled with probability {p}"
            )));
        }
        let loss = observed_cost / p;
        self.weights[pulled.0] *= (-self.learning_rate * loss).exp();
        renormalize(&mut self.weights);
        Ok(())
    }
}
