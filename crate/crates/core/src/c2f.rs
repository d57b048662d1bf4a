//! The coarse-to-fine driver.
//!
//! Levels are solved coarsest first. Each level's solution is lifted to the
//! next, finer partition, where it has the same energy, and used as that
//! level's starting point. The last level is always the unreduced model.

use std::borrow::Cow;
use std::time::{Duration, Instant};

use crate::color_passing::{init_colors, ColorPassingState};
use crate::error::{contract, Error, Result};
use crate::mrf::{Label, LabeledMrf};
use crate::numeric::argmin;
use crate::partition::{build_reduced, expand, lift_assignment, Partition};
use crate::solvers::{
    alpha_expansion_until, expired, icm_until, LevelOutcome, SolveReport, StopReason, StoppingCriteria,
};
use crate::trace::{AnytimeTrace, TraceEvent};

/// Relative tolerance of the energy check at each hand-off.
pub const HANDOFF_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LevelSpec {
    /// `CP(N_L, N_iter)` from the schedule's color-passing lineage.
    Cp { split_threshold: usize, iterations: usize },
    Explicit(Partition),
    /// Every variable in one element.
    Single,
    /// Every variable its own element: the unreduced model.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleLevel {
    pub spec: LevelSpec,
    pub criteria: StoppingCriteria,
}

/// Partition specifications from coarse to fine, followed by the unreduced
/// model (appended when the list does not already end with it).
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementSchedule {
    levels: Vec<ScheduleLevel>,
}

impl RefinementSchedule {
    /// `final_criteria` applies to the unreduced level when it is appended.
    pub fn new(mut levels: Vec<ScheduleLevel>, final_criteria: StoppingCriteria) -> Result<Self> {
        let mut last_cp = (0, 0);
        for l in &levels {
            l.criteria.validate()?;
            if let LevelSpec::Cp { split_threshold, iterations } = l.spec {
                if split_threshold == 0 {
                    return Err(Error::Config("CP split threshold must be at least 1".into()));
                }
                if split_threshold < last_cp.0 || iterations < last_cp.1 {
                    return Err(Error::Config(format!(
                        "CP({split_threshold}, {iterations}) follows CP({}, {}); CP parameters must be non-decreasing",
                        last_cp.0, last_cp.1
                    )));
                }
                last_cp = (split_threshold, iterations);
            }
        }
        final_criteria.validate()?;
        if levels.last().is_none_or(|l| l.spec != LevelSpec::Degenerate) {
            levels.push(ScheduleLevel { spec: LevelSpec::Degenerate, criteria: final_criteria });
        }
        Ok(RefinementSchedule { levels })
    }

    /// Same criteria at every level.
    pub fn uniform(specs: Vec<LevelSpec>, criteria: StoppingCriteria) -> Result<Self> {
        let levels = specs.into_iter().map(|spec| ScheduleLevel { spec, criteria: criteria.clone() }).collect();
        Self::new(levels, criteria)
    }

    pub fn cp_chain(steps: &[(usize, usize)], criteria: StoppingCriteria) -> Result<Self> {
        let specs = steps
            .iter()
            .map(|&(split_threshold, iterations)| LevelSpec::Cp { split_threshold, iterations })
            .collect();
        Self::uniform(specs, criteria)
    }

    pub fn flat(criteria: StoppingCriteria) -> Result<Self> {
        Self::uniform(vec![LevelSpec::Degenerate], criteria)
    }

    /// One fixed reduced model, then the unreduced one.
    pub fn static_lifted(partition: Partition, criteria: StoppingCriteria) -> Result<Self> {
        Self::uniform(vec![LevelSpec::Explicit(partition)], criteria)
    }

    /// Parses a comma-separated list such as `1:1,2:1,3:1,flat`, where
    /// `a:b` is `CP(a, b)`, `single` the one-element partition and `flat`
    /// the unreduced model.
    pub fn parse(text: &str, criteria: StoppingCriteria) -> Result<Self> {
        let mut specs = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let spec = match item {
                "flat" | "degenerate" => LevelSpec::Degenerate,
                "single" => LevelSpec::Single,
                cp => {
                    let bad = || Error::Config(format!("bad schedule item {cp:?}; expected N_L:N_iter, single or flat"));
                    let (a, b) = cp.split_once(':').ok_or_else(bad)?;
                    LevelSpec::Cp {
                        split_threshold: a.trim().parse().map_err(|_| bad())?,
                        iterations: b.trim().parse().map_err(|_| bad())?,
                    }
                }
            };
            specs.push(spec);
        }
        if specs.is_empty() {
            return Err(Error::Config("schedule is empty".into()));
        }
        Self::uniform(specs, criteria)
    }

    pub fn levels(&self) -> &[ScheduleLevel] {
        &self.levels
    }
}

/// A solver the driver can run at every level.
///
/// `prepare(None)` is the unreduced model; `prepare(Some(p))` the model
/// reduced by `p`, whose assignments are indexed by `p`'s elements.
pub trait LevelSolver {
    type Level;

    fn prepare(&mut self, partition: Option<&Partition>) -> Result<Self::Level>;

    fn init_state(&self, level: &Self::Level) -> Vec<Label>;

    fn energy(&self, level: &Self::Level, y: &[Label]) -> f64;

    fn solve(
        &mut self,
        level: &Self::Level,
        start: Vec<Label>,
        criteria: &StoppingCriteria,
        trace: &mut AnytimeTrace,
        deadline: Option<Instant>,
    ) -> Result<LevelOutcome>;
}

/// Per-variable unary argmin, lowest label on ties.
pub fn get_init_state(model: &LabeledMrf) -> Vec<Label> {
    (0..model.num_vars()).map(|i| argmin(model.unary(i))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    AlphaExpansion,
    Icm,
}

/// Runs a plain MRF solver on reduced copies of one base model.
#[derive(Clone, Debug)]
pub struct MrfSolver<'a> {
    mrf: &'a LabeledMrf,
    algorithm: Algorithm,
}

impl<'a> MrfSolver<'a> {
    pub fn new(mrf: &'a LabeledMrf, algorithm: Algorithm) -> Self {
        MrfSolver { mrf, algorithm }
    }

    pub fn expansion(mrf: &'a LabeledMrf) -> Self {
        Self::new(mrf, Algorithm::AlphaExpansion)
    }
}

impl<'a> LevelSolver for MrfSolver<'a> {
    type Level = Cow<'a, LabeledMrf>;

    fn prepare(&mut self, partition: Option<&Partition>) -> Result<Self::Level> {
        Ok(match partition {
            None => Cow::Borrowed(self.mrf),
            Some(p) => Cow::Owned(build_reduced(self.mrf, p)?.into_parts().1),
        })
    }

    fn init_state(&self, level: &Self::Level) -> Vec<Label> {
        get_init_state(level)
    }

    fn energy(&self, level: &Self::Level, y: &[Label]) -> f64 {
        level.energy_unchecked(y)
    }

    fn solve(
        &mut self,
        level: &Self::Level,
        start: Vec<Label>,
        criteria: &StoppingCriteria,
        trace: &mut AnytimeTrace,
        deadline: Option<Instant>,
    ) -> Result<LevelOutcome> {
        match self.algorithm {
            Algorithm::AlphaExpansion => alpha_expansion_until(level, start, criteria, trace, deadline),
            Algorithm::Icm => icm_until(level, start, criteria, trace, deadline),
        }
    }
}

/// The unreduced model solved directly from its initial state.
pub fn run_flat<S: LevelSolver>(
    solver: &mut S,
    criteria: &StoppingCriteria,
    budget: Option<Duration>,
) -> Result<SolveReport> {
    criteria.validate()?;
    let mut trace = AnytimeTrace::new();
    let global = budget.map(|b| trace.origin() + b);
    let level = solver.prepare(None)?;
    let start = solver.init_state(&level);
    trace.record(TraceEvent::Start, solver.energy(&level, &start));
    let deadline = criteria.deadline(Instant::now(), global);
    let out = solver.solve(&level, start, criteria, &mut trace, deadline)?;
    trace.record(TraceEvent::Stop, out.energy);
    Ok(out.into_report(trace))
}

/// Solves one fixed reduced model, then the unreduced one.
pub fn run_static_lifted<S: LevelSolver>(
    cp_model: &LabeledMrf,
    partition: &Partition,
    solver: &mut S,
    criteria: &StoppingCriteria,
    budget: Option<Duration>,
) -> Result<SolveReport> {
    let schedule = RefinementSchedule::static_lifted(partition.clone(), criteria.clone())?;
    run_c2f(cp_model, &schedule, solver, budget)
}

struct Solved {
    partition: Partition,
    outcome: LevelOutcome,
}

/// Runs `schedule` on `solver`. Color-passing levels are computed from
/// `cp_model`, which must have the solver's variables.
///
/// Levels whose partition equals the previous level's are skipped. A level
/// that is not finer than the previous one is a contract error, and a
/// hand-off whose energy moves by more than [`HANDOFF_TOLERANCE`] an
/// invariant error. When `global_budget` runs out the current best
/// assignment is expanded to the variables and returned with stop reason
/// `Budget`.
pub fn run_c2f<S: LevelSolver>(
    cp_model: &LabeledMrf,
    schedule: &RefinementSchedule,
    solver: &mut S,
    global_budget: Option<Duration>,
) -> Result<SolveReport> {
    let mut trace = AnytimeTrace::new();
    let global = global_budget.map(|b| trace.origin() + b);
    let n = cp_model.num_vars();
    let mut lineage: Option<ColorPassingState> = None;
    let mut prev: Option<Solved> = None;
    let mut rounds = 0;
    let mut level_index = 0;

    for (t, lvl) in schedule.levels().iter().enumerate() {
        let p = match &lvl.spec {
            LevelSpec::Degenerate => Partition::degenerate(n),
            LevelSpec::Single => Partition::single(n),
            LevelSpec::Explicit(p) => {
                contract!(p.num_vars() == n, "schedule level {t} partitions {} variables, model has {n}", p.num_vars());
                p.clone()
            }
            &LevelSpec::Cp { split_threshold, iterations } => {
                let state = match lineage.take() {
                    Some(s) => s.advance_to(cp_model, split_threshold, iterations)?,
                    None => init_colors(cp_model, split_threshold)?.advance_to(cp_model, split_threshold, iterations)?,
                };
                let p = state.partition();
                lineage = Some(state);
                p
            }
        };
        if let Some(done) = &prev {
            contract!(
                done.partition.is_coarser(&p)?,
                "schedule level {t} is not a refinement of the level before it"
            );
            if done.partition.num_elements() == p.num_elements() {
                continue;
            }
            if expired(global) {
                break;
            }
        }

        let level = solver.prepare((!p.is_degenerate()).then_some(&p))?;
        trace.set_level(level_index);
        let start = match &prev {
            None => {
                let y = solver.init_state(&level);
                trace.record(TraceEvent::Start, solver.energy(&level, &y));
                y
            }
            Some(done) => {
                let y = lift_assignment(&done.partition, &p, &done.outcome.assignment)?;
                let e = solver.energy(&level, &y);
                let before = done.outcome.energy;
                if (e - before).abs() > HANDOFF_TOLERANCE * before.abs().max(1.0) {
                    return Err(Error::Invariant(format!(
                        "hand-off to level {level_index} changed the energy from {before} to {e}"
                    )));
                }
                trace.record(TraceEvent::Refine, e);
                y
            }
        };
        let deadline = lvl.criteria.deadline(Instant::now(), global);
        let outcome = solver.solve(&level, start, &lvl.criteria, &mut trace, deadline)?;
        rounds += outcome.rounds;
        level_index += 1;
        prev = Some(Solved { partition: p, outcome });
    }

    let done = prev.expect("a schedule has at least one level");
    let preempted = expired(global) && !done.partition.is_degenerate();
    let assignment = if done.partition.is_degenerate() {
        done.outcome.assignment
    } else {
        expand(&done.partition, &done.outcome.assignment)?
    };
    let stop = if preempted { StopReason::Budget } else { done.outcome.stop };
    trace.record(TraceEvent::Stop, done.outcome.energy);
    Ok(SolveReport { assignment, energy: done.outcome.energy, trace, rounds, stop })
}
