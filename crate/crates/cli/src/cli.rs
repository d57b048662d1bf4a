use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use c2f_core::image::GrayImage;
use c2f_core::pipelines::segmentation::{ConcaveF, SegmentationParams};
use c2f_core::pipelines::stereo::StereoParams;
use c2f_core::solvers::CountUnit;
use c2f_core::synth::{bundled_segmentation, bundled_stereo, spike_scene, stereo_scene, SegmentationScene, StereoScene};
use c2f_core::trace::{compare_traces, compare_traces_on, random_grid, sampling_window, AnytimeTrace, DEFAULT_GRID_POINTS};
use c2f_core::{Error, Result};

use crate::config::{Mode, RunConfig, Task};
use crate::run::run;

#[derive(Debug, Parser)]
#[command(name = "c2f", version, about = "Coarse-to-fine lifted MAP inference on grid MRFs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Disparity estimation on a rectified pair.
    Stereo(StereoArgs),
    /// Seeded segmentation with cooperative edge-group penalties.
    Segment(SegmentArgs),
    /// Write a synthetic instance.
    Gen(GenArgs),
    /// Anytime dominance of trace A over trace B.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Move,
    Cycle,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "flat")]
    pub mode: Mode,
    /// Comma-separated levels such as `1:1,2:1,3:1` (`N_L:N_iter`, `single`, `flat`).
    #[arg(long)]
    pub schedule: Option<String>,
    /// Unary L1 threshold for `--mode threshold`; without it the element
    /// count of `--schedule`'s partition is matched.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Consecutive non-improving attempts before a level stops.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value = "move")]
    pub unit: Unit,
    /// Wall-clock budget in seconds for the whole run.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the trace and the partition dumps.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StereoArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long, default_value_t = 85)]
    pub max_disp: usize,
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    /// Truncation of the pairwise term, in label steps.
    #[arg(long, default_value_t = 2.0)]
    pub truncation: f64,
    /// Per-pixel matching costs are clipped at this value.
    #[arg(long, default_value_t = 4.0)]
    pub cost_truncation: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// PGM with 255 for unseeded pixels and the seed label elsewhere.
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long)]
    pub labels: usize,
    #[arg(long)]
    pub groups_bins: Option<usize>,
    #[arg(long)]
    pub cell: Option<usize>,
    /// Breakpoint of the concave penalty.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Slope of the concave penalty past the breakpoint.
    #[arg(long)]
    pub slope: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Stereo,
    Segment,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disparity labels for stereo; defaults to a third of the size.
    #[arg(long)]
    pub labels: Option<usize>,
    /// Spike width of the segmentation scene.
    #[arg(long, default_value_t = 2)]
    pub spike: usize,
    /// Write the bundled instance of this size instead of a seeded one.
    #[arg(long)]
    pub bundled: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample seeded uniform timepoints instead of the log grid.
    #[arg(long)]
    pub random_grid: Option<u64>,
}

impl RunArgs {
    fn into_config(self, task: Task) -> Result<RunConfig> {
        let budget = match self.budget {
            None => None,
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(Error::Config(format!("budget must be a positive number of seconds, got {s}"))),
        };
        Ok(RunConfig {
            task,
            mode: self.mode,
            schedule: self.schedule,
            threshold: self.threshold,
            k: self.k,
            unit: match self.unit {
                Unit::Move => CountUnit::Move,
                Unit::Cycle => CountUnit::Cycle,
            },
            budget,
            out: self.out,
            trace: self.trace,
            seed: self.seed,
        })
    }
}

impl StereoArgs {
    pub fn into_config(self) -> Result<RunConfig> {
        let params = StereoParams {
            max_disparity: self.max_disp,
            window_radius: self.window,
            smoothness_truncation: self.truncation,
            cost_truncation: self.cost_truncation,
            ..Default::default()
        };
        self.run.into_config(Task::Stereo { left: self.left, right: self.right, params })
    }
}

impl SegmentArgs {
    pub fn into_config(self) -> Result<RunConfig> {
        let d = SegmentationParams::default();
        let params = SegmentationParams {
            num_color_bins: self.groups_bins.unwrap_or(d.num_color_bins),
            cell_size: self.cell.unwrap_or(d.cell_size),
            concave: ConcaveF { theta: self.theta.unwrap_or(d.concave.theta), slope: self.slope.unwrap_or(d.concave.slope) },
            ..d
        };
        self.run.into_config(Task::Segment { image: self.image, seeds: self.seeds, num_labels: self.labels, params })
    }
}

pub fn write_stereo(dir: &Path, s: &StereoScene) -> Result<()> {
    fs::create_dir_all(dir)?;
    s.left.save(&dir.join("left.ppm"))?;
    s.right.save(&dir.join("right.ppm"))?;
    let (w, h) = (s.left.width(), s.left.height());
    GrayImage::new(w, h, s.truth.iter().map(|&d| d as u8).collect())?.save(&dir.join("truth.pgm"))
}

/// Seeds as 255 for unseeded pixels; truth holds raw labels.
pub fn write_segmentation(dir: &Path, s: &SegmentationScene) -> Result<()> {
    fs::create_dir_all(dir)?;
    s.image.save(&dir.join("image.ppm"))?;
    let (w, h) = (s.image.width(), s.image.height());
    GrayImage::new(w, h, s.seeds.iter().map(|v| v.map_or(255, |l| l as u8)).collect())?.save(&dir.join("seeds.pgm"))?;
    GrayImage::new(w, h, s.truth.iter().map(|&l| l as u8).collect())?.save(&dir.join("truth.pgm"))
}

fn gen(a: GenArgs) -> Result<()> {
    match a.kind {
        GenKind::Stereo => {
            let scene = if a.bundled {
                bundled_stereo(a.size).ok_or_else(|| Error::Config(format!("no bundled stereo pair of size {}", a.size)))?
            } else {
                if a.size < 8 {
                    return Err(Error::Config("stereo scenes need at least 8x8 pixels".into()));
                }
                let labels = a.labels.unwrap_or((a.size / 3).max(2));
                if !(2..=256).contains(&labels) {
                    return Err(Error::Config("stereo label count must lie in 2..=256".into()));
                }
                stereo_scene(a.size, a.size, labels, a.seed)
            };
            write_stereo(&a.out, &scene)?;
            println!("wrote {}x{} pair with {} labels to {}", a.size, a.size, scene.num_labels, a.out.display());
        }
        GenKind::Segment => {
            let scene = if a.bundled {
                match a.size {
                    96 => bundled_segmentation("spike"),
                    64 => bundled_segmentation("spike-thin"),
                    _ => None,
                }
                .ok_or_else(|| Error::Config(format!("no bundled segmentation image of size {}", a.size)))?
            } else {
                if a.size < 24 {
                    return Err(Error::Config("segmentation scenes need at least 24x24 pixels".into()));
                }
                spike_scene(a.size, a.spike, a.seed)
            };
            write_segmentation(&a.out, &scene)?;
            println!("wrote {}x{} image with {} labels to {}", a.size, a.size, scene.num_labels, a.out.display());
        }
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let ta = AnytimeTrace::from_csv(&fs::read_to_string(&a.a)?)?;
    let tb = AnytimeTrace::from_csv(&fs::read_to_string(&a.b)?)?;
    let summary = match a.random_grid {
        None => compare_traces(&ta, &tb)?,
        Some(seed) => {
            let (lo, hi) = sampling_window(&ta, &tb)?;
            compare_traces_on(&ta, &tb, &random_grid(lo, hi, DEFAULT_GRID_POINTS, seed), 0.01)?
        }
    };
    fs::write(&a.out, summary.to_csv())?;
    print!("{}", summary.to_key_values());
    Ok(())
}

/// Runs one parsed command line.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stereo(a) => report(run(&a.into_config()?)?),
        Command::Segment(a) => report(run(&a.into_config()?)?),
        Command::Gen(a) => gen(a),
        Command::Compare(a) => compare(a),
    }
}

fn report(out: crate::run::RunOutcome) -> Result<()> {
    println!(
        "final_energy={} stop={} rounds={} wall_time={:.4}",
        out.report.energy, out.report.stop, out.report.rounds, out.wall_time
    );
    Ok(())
}
