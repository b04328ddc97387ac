//! Fidelity budgeting: per-truncation fidelity targets and the running
//! certificate they produce.
//!
//! A run that performs `n` truncations and wants the final state to stay
//! within fidelity `f_min` of the exact evolution must spread the allowed
//! loss across those truncations. The ledger hands out one target per
//! truncation, collects what each truncation actually achieved, and
//! maintains `estimate = prod(achieved)`. In a noiseless run the product
//! approximates the final-state fidelity; with channels in the circuit the
//! noise damps the discarded singular-value tails, the product underestimates
//! the true fidelity, and the certificate marks it as a lower bound.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the per-truncation target adapts to fidelity already banked.
///
/// With `n` truncations planned and `r` still to come:
/// * `Naive` hands out the constant `f_min^(1/n)`.
/// * `Global` re-spreads the remaining budget evenly: `(f_min/estimate)^(1/r)`.
/// * `Nearest` pushes the whole surplus or deficit onto the next truncation,
///   assuming the rest only meet the naive target:
///   `f_min / (estimate * (f_min^(1/n))^(r-1))`.
///
/// Targets are clamped to at most 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Naive,
    Nearest,
    Global,
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("minimum fidelity must lie in (0, 1], got {0}")]
    FidelityMinOutOfRange(f64),
    #[error("achieved fidelity must lie in (0, 1], got {0}")]
    AchievedOutOfRange(f64),
    #[error("all {n_planned} planned truncations already recorded")]
    Complete { n_planned: usize },
}

/// One truncation event at a bond.
///
/// `chi_before` is the rank available before discarding (after dropping
/// machine-zero singular values), `chi_after` what was kept. `achieved_f`
/// is the fidelity of the kept state relative to the untruncated one under
/// the active rule (pure overlap or mixed-state fidelity), `discarded_weight`
/// the squared singular-value weight thrown away. `capped` marks events
/// where a bond-dimension cap forced `chi_after` below what `target_f`
/// wanted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationRecord {
    pub gate_index: usize,
    pub bond_site: usize,
    pub chi_before: usize,
    pub chi_after: usize,
    pub target_f: f64,
    pub achieved_f: f64,
    pub discarded_weight: f64,
    pub capped: bool,
}

/// Certificate over a completed (or partial) run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Certificate {
    /// Product of achieved per-truncation fidelities.
    pub estimate: f64,
    /// True when the run contained channels: noise damps the discarded
    /// tails, each recorded fidelity understates how faithful the cut was,
    /// and the product lower-bounds the final-state fidelity. Noiseless
    /// runs report `false`: the product is an approximation, not a bound.
    pub is_lower_bound: bool,
}

/// Tracks the fidelity budget across the planned truncations of one run.
#[derive(Clone, Debug)]
pub struct FidelityLedger {
    f_min: f64,
    n_planned: usize,
    strategy: Strategy,
    achieved: Vec<f64>,
    estimate: f64,
    noisy_regime: bool,
}

impl FidelityLedger {
    pub fn new(f_min: f64, n_planned: usize, strategy: Strategy) -> Result<Self, LedgerError> {
        if !(f_min > 0.0 && f_min <= 1.0) {
            return Err(LedgerError::FidelityMinOutOfRange(f_min));
        }
        Ok(Self {
            f_min,
            n_planned,
            strategy,
            achieved: Vec::with_capacity(n_planned),
            estimate: 1.0,
            noisy_regime: false,
        })
    }

    /// Mark the run as containing non-unitary channels; the certificate then
    /// reports its estimate as a lower bound on the final-state fidelity.
    pub fn set_noisy_regime(&mut self, noisy: bool) {
        self.noisy_regime = noisy;
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn n_planned(&self) -> usize {
        self.n_planned
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn completed(&self) -> usize {
        self.achieved.len()
    }

    pub fn remaining(&self) -> usize {
        self.n_planned - self.achieved.len()
    }

    pub fn is_complete(&self) -> bool {
        self.remaining() == 0
    }

    pub fn achieved(&self) -> &[f64] {
        &self.achieved
    }

    /// Running product of achieved fidelities.
    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    fn naive_target(&self) -> f64 {
        debug_assert!(self.n_planned > 0);
        self.f_min.powf(1.0 / self.n_planned as f64)
    }

    /// Target for the next truncation. Always in (0, 1].
    pub fn next_target(&self) -> Result<f64, LedgerError> {
        let remaining = self.remaining();
        if remaining == 0 {
            return Err(LedgerError::Complete {
                n_planned: self.n_planned,
            });
        }
        let t = match self.strategy {
            Strategy::Naive => self.naive_target(),
            Strategy::Global => (self.f_min / self.estimate).powf(1.0 / remaining as f64),
            Strategy::Nearest => {
                let assumed_rest = self.naive_target().powi(remaining as i32 - 1);
                self.f_min / (self.estimate * assumed_rest)
            }
        };
        Ok(t.min(1.0))
    }

    /// The targets that would be handed out if every remaining truncation
    /// achieved exactly its target.
    pub fn remaining_schedule(&self) -> Vec<f64> {
        let mut probe = self.clone();
        let mut schedule = Vec::with_capacity(probe.remaining());
        while !probe.is_complete() {
            let t = probe.next_target().expect("remaining > 0");
            schedule.push(t);
            probe.record(t).expect("target lies in (0, 1]");
        }
        schedule
    }

    /// Record the fidelity a truncation actually achieved.
    pub fn record(&mut self, achieved_f: f64) -> Result<(), LedgerError> {
        if self.is_complete() {
            return Err(LedgerError::Complete {
                n_planned: self.n_planned,
            });
        }
        if !(achieved_f > 0.0 && achieved_f <= 1.0) {
            return Err(LedgerError::AchievedOutOfRange(achieved_f));
        }
        self.achieved.push(achieved_f);
        self.estimate *= achieved_f;
        Ok(())
    }

    pub fn certify(&self) -> Certificate {
        Certificate {
            estimate: self.estimate,
            is_lower_bound: self.noisy_regime,
        }
    }
}
