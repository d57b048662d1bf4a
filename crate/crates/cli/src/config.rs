use std::path::PathBuf;
use std::time::Duration;

use c2f_core::c2f::{LevelSpec, RefinementSchedule};
use c2f_core::pipelines::segmentation::SegmentationParams;
use c2f_core::pipelines::stereo::StereoParams;
use c2f_core::solvers::{CountUnit, StoppingCriteria};
use c2f_core::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Stereo { left: PathBuf, right: PathBuf, params: StereoParams },
    Segment { image: PathBuf, seeds: PathBuf, num_labels: usize, params: SegmentationParams },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Stereo { .. } => "stereo",
            Task::Segment { .. } => "segment",
        }
    }

    /// Published no-improvement count: 4 for stereo, `|L|` for segmentation.
    pub fn default_k(&self) -> usize {
        match self {
            Task::Stereo { .. } => 4,
            Task::Segment { num_labels, .. } => *num_labels,
        }
    }

    pub fn default_schedule(&self) -> String {
        match self {
            Task::Stereo { .. } => "1:1,2:1,3:1".into(),
            Task::Segment { num_labels, .. } => {
                let half = num_labels.div_ceil(2).max(1);
                format!("{half}:2,{half}:3")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Mode {
    /// The unreduced model only.
    Flat,
    /// One fixed color-passing partition, then the unreduced model.
    Static,
    /// The full refinement schedule.
    C2f,
    /// One fixed unary-distance threshold partition, then the unreduced model.
    Threshold,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Flat => "flat",
            Mode::Static => "static",
            Mode::C2f => "c2f",
            Mode::Threshold => "threshold",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub mode: Mode,
    /// Schedule text as accepted by [`RefinementSchedule::parse`]. For
    /// `static` it names the single partition; for `threshold` without an
    /// explicit threshold, the partition whose element count is matched.
    pub schedule: Option<String>,
    pub threshold: Option<f64>,
    pub k: Option<usize>,
    pub unit: CountUnit,
    pub budget: Option<Duration>,
    pub out: PathBuf,
    /// Also write the trace and partition dumps.
    pub trace: bool,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(task: Task, mode: Mode, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            task,
            mode,
            schedule: None,
            threshold: None,
            k: None,
            unit: CountUnit::Move,
            budget: None,
            out: out.into(),
            trace: false,
            seed: 0,
        }
    }

    pub fn criteria(&self) -> StoppingCriteria {
        StoppingCriteria::new(self.k.unwrap_or_else(|| self.task.default_k())).with_unit(self.unit)
    }

    pub fn schedule_text(&self) -> String {
        self.schedule.clone().unwrap_or_else(|| self.task.default_schedule())
    }

    pub fn schedule(&self) -> Result<RefinementSchedule> {
        RefinementSchedule::parse(&self.schedule_text(), self.criteria())
    }

    /// The one partition level named by `schedule` in static and matched
    /// threshold modes.
    pub fn static_level(&self) -> Result<LevelSpec> {
        let text = self
            .schedule
            .as_deref()
            .ok_or_else(|| Error::Config(format!("mode {} needs --schedule with one partition", self.mode.name())))?;
        let s = RefinementSchedule::parse(text, self.criteria())?;
        match s.levels() {
            [one, last] if last.spec == LevelSpec::Degenerate && one.spec != LevelSpec::Degenerate => Ok(one.spec.clone()),
            _ => Err(Error::Config(format!("mode {} takes exactly one partition, got {text:?}", self.mode.name()))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.criteria().validate()?;
        if self.budget.is_some_and(|b| b.is_zero()) {
            return Err(Error::Config("budget must be positive".into()));
        }
        match self.mode {
            Mode::Flat => {}
            Mode::C2f => {
                self.schedule()?;
            }
            Mode::Static => {
                self.static_level()?;
            }
            Mode::Threshold => match self.threshold {
                Some(t) if !(t.is_finite() && t >= 0.0) => {
                    return Err(Error::Config("threshold must be finite and non-negative".into()))
                }
                Some(_) => {}
                None => {
                    self.static_level()?;
                }
            },
        }
        match &self.task {
            Task::Stereo { params, .. } => params.validate(),
            Task::Segment { num_labels, params, .. } => {
                if *num_labels == 0 {
                    return Err(Error::Config("segmentation needs at least one label".into()));
                }
                params.validate()
            }
        }
    }
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Contract(_) | Error::Refused(_) => 2,
        Error::Io(_) | Error::Parse(_) => 3,
        Error::Invariant(_) => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stereo() -> Task {
        Task::Stereo { left: "l.ppm".into(), right: "r.ppm".into(), params: StereoParams::default() }
    }

    #[test]
    fn static_mode_needs_one_partition() {
        let mut c = RunConfig::new(stereo(), Mode::Static, "out");
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.schedule = Some("1:1,2:1".into());
        assert!(c.validate().is_err());
        c.schedule = Some("2:1".into());
        c.validate().unwrap();
        assert_eq!(c.static_level().unwrap(), LevelSpec::Cp { split_threshold: 2, iterations: 1 });
    }

    #[test]
    fn segmentation_defaults_follow_label_count() {
        let t = Task::Segment { image: "i".into(), seeds: "s".into(), num_labels: 3, params: SegmentationParams::default() };
        assert_eq!(t.default_k(), 3);
        assert_eq!(t.default_schedule(), "2:2,2:3");
        assert_eq!(stereo().default_schedule(), "1:1,2:1,3:1");
    }

    #[test]
    fn threshold_mode_accepts_value_or_target() {
        let mut c = RunConfig::new(stereo(), Mode::Threshold, "out");
        assert!(c.validate().is_err());
        c.threshold = Some(3.0);
        c.validate().unwrap();
        c.threshold = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 3);
        assert_eq!(exit_code(&Error::Invariant("x".into())), 4);
    }
}
