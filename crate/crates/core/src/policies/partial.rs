//! Semi-bandit FPML: costs are observed only for pulled arms and turned
//! into importance-weighted estimates by geometric resampling.

use rand::Rng;

use super::fpml::Fpml;
use crate::domain::{ArmId, Selection};
use crate::error::{Error, Result};

/// Cost estimates fed to the full-feedback update, each in `[0, bound]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCostVector {
    pub values: Vec<f64>,
    pub bound: f64,
}

/// Number of fresh replays of `snapshot`'s selection until `arm` is pulled
/// again, capped at `cap`. In expectation this is
/// `(1 - (1 - q)^cap) / q` where `q` is the arm's pull probability.
pub fn geometric_resample_count<R: Rng + ?Sized>(
    snapshot: &Fpml,
    arm: ArmId,
    rng: &mut R,
    cap: u32,
) -> Result<u32> {
    if cap == 0 {
        return Err(Error::param("resampling cap must be at least 1"));
    }
    if arm.0 >= snapshot.n_arms() {
        return Err(Error::InvalidArm {
            index: arm.0,
            n_arms: snapshot.n_arms(),
        });
    }
    if snapshot.budget() == snapshot.n_arms() {
        return Ok(1);
    }
    for count in 1..cap {
        if snapshot.select_fresh(rng).contains(arm) {
            return Ok(count);
        }
    }
    Ok(cap)
}

/// FPML driven by geometric-resampling estimates.
#[derive(Debug, Clone)]
pub struct FpmlPartial {
    inner: Fpml,
    cap: u32,
}

impl FpmlPartial {
    pub fn new(inner: Fpml, cap: u32) -> Result<Self> {
        if cap == 0 {
            return Err(Error::param("resampling cap must be at least 1"));
        }
        Ok(FpmlPartial { inner, cap })
    }

    pub fn inner(&self) -> &Fpml {
        &self.inner
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection {
        self.inner.select(rng)
    }

    /// Builds `c(a) * count(a)` for each observed pulled arm and zero
    /// elsewhere. The current state is the snapshot: nothing has been
    /// updated since the round's selection was made.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        observed: &[(ArmId, f64)],
        rng: &mut R,
    ) -> Result<EstimatedCostVector> {
        let mut values = vec![0.0; self.inner.n_arms()];
        for &(arm, cost) in observed {
            crate::domain::check_unit("observed cost", cost)?;
            if arm.0 >= values.len() {
                return Err(Error::InvalidArm {
                    index: arm.0,
                    n_arms: values.len(),
                });
            }
            if cost == 0.0 {
                continue;
            }
            let count = geometric_resample_count(&self.inner, arm, rng, self.cap)?;
            values[arm.0] = cost * count as f64;
        }
        Ok(EstimatedCostVector {
            values,
            bound: self.cap as f64,
        })
    }

    pub fn update(&mut self, estimate: &EstimatedCostVector) -> Result<()> {
        self.inner.update(&estimate.values)
    }

    /// One full round: select, observe the pulled arms' true costs through
    /// `observe` (same order as the selection), estimate, update.
    pub fn round<R, F>(&mut self, rng: &mut R, observe: F) -> Result<(Selection, EstimatedCostVector)>
    where
        R: Rng + ?Sized,
        F: FnOnce(&Selection) -> Result<Vec<f64>>,
    {
        let selection = self.select(rng);
        let costs = observe(&selection)?;
        if costs.len() != selection.len() {
            return Err(Error::LengthMismatch {
                what: "observed costs",
                expected: selection.len(),
                got: costs.len(),
            });
        }
        let observed: Vec<(ArmId, f64)> = selection.arms().iter().copied().zip(costs).collect();
        let estimate = self.estimate(&observed, rng)?;
        self.update(&estimate)?;
        Ok((selection, estimate))
    }
}
