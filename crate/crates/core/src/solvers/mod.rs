//! Anytime MAP minimizers over a [`LabeledMrf`].
//!
//! Reduced models are themselves `LabeledMrf`s over partition elements, so
//! the same solvers run at every refinement level.

mod expansion;
mod icm;
pub mod maxflow;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mrf::Label;
use crate::trace::AnytimeTrace;

pub use expansion::{alpha_expansion, alpha_expansion_move, alpha_expansion_until, ExpansionWorkspace};
pub use icm::{icm, icm_until};
pub use maxflow::{max_flow, FlowArc, FlowNetwork, MaxFlow};

/// What one step of the no-improvement counter is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CountUnit {
    /// A single improvement attempt: one expansion move or one ICM sweep.
    Move,
    /// A full pass over all labels.
    Cycle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoppingCriteria {
    /// Stop after this many consecutive attempts without improvement.
    pub no_improve_rounds: usize,
    pub unit: CountUnit,
    pub budget: Option<Duration>,
    /// Smallest decrease that counts as an improvement.
    pub energy_tolerance: f64,
}

impl StoppingCriteria {
    pub fn new(no_improve_rounds: usize) -> Self {
        StoppingCriteria { no_improve_rounds, unit: CountUnit::Move, budget: None, energy_tolerance: 1e-9 }
    }

    pub fn with_unit(mut self, unit: CountUnit) -> Self {
        self.unit = unit;
        self
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.energy_tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.no_improve_rounds == 0 {
            return Err(Error::Config("no-improvement count must be at least 1".into()));
        }
        if !(self.energy_tolerance.is_finite() && self.energy_tolerance >= 0.0) {
            return Err(Error::Config("energy tolerance must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Earliest of this criteria's budget (from `start`) and `outer`.
    pub fn deadline(&self, start: Instant, outer: Option<Instant>) -> Option<Instant> {
        let own = self.budget.map(|b| start + b);
        match (own, outer) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    CriteriaMet,
    Budget,
    Converged,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::CriteriaMet => "criteria-met",
            StopReason::Budget => "budget",
            StopReason::Converged => "converged",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub assignment: Vec<Label>,
    pub energy: f64,
    pub trace: AnytimeTrace,
    pub rounds: usize,
    pub stop: StopReason,
}

/// Result of a solve that writes into a caller-owned trace.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelOutcome {
    pub assignment: Vec<Label>,
    pub energy: f64,
    pub rounds: usize,
    pub stop: StopReason,
}

impl LevelOutcome {
    pub(crate) fn into_report(self, trace: AnytimeTrace) -> SolveReport {
        SolveReport { assignment: self.assignment, energy: self.energy, trace, rounds: self.rounds, stop: self.stop }
    }
}

#[inline]
pub(crate) fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Consecutive-failure counter behind [`StoppingCriteria::no_improve_rounds`].
#[derive(Clone, Debug)]
pub(crate) struct NoImprove {
    limit: usize,
    run: usize,
}

impl NoImprove {
    pub(crate) fn new(limit: usize) -> Self {
        NoImprove { limit, run: 0 }
    }

    /// Registers one attempt; true once the limit is reached.
    pub(crate) fn step(&mut self, improved: bool) -> bool {
        self.run = if improved { 0 } else { self.run + 1 };
        self.run >= self.limit
    }
}
