use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use c2f_core::c2f::{run_c2f, run_flat, run_static_lifted, LevelSolver, LevelSpec, MrfSolver};
use c2f_core::color_passing::{cp, match_threshold, threshold_partition};
use c2f_core::image::{GrayImage, RgbImage};
use c2f_core::pipelines::segmentation::{CoopCutSolver, SegmentationProblem};
use c2f_core::pipelines::stereo::{build_stereo_mrf, StereoProblem};
use c2f_core::{Error, LabeledMrf, Partition, Result, SolveReport};

use crate::config::{Mode, RunConfig, Task};
use crate::output;

/// Relative gap allowed between matched element counts in threshold mode.
pub const MATCH_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: SolveReport,
    pub width: usize,
    pub height: usize,
    pub num_labels: usize,
    /// Reduced levels in solve order, each with a short name.
    pub partitions: Vec<(String, Partition)>,
    pub threshold: Option<f64>,
    pub wall_time: f64,
}

/// PGM seed map: 255 is unseeded, `0..num_labels` a seed label.
pub fn read_seeds(path: &Path, num_labels: usize) -> Result<Vec<Option<usize>>> {
    let img = GrayImage::load(path)?;
    img.data()
        .iter()
        .enumerate()
        .map(|(i, &v)| match v {
            255 => Ok(None),
            l if (l as usize) < num_labels => Ok(Some(l as usize)),
            l => Err(Error::Parse(format!("seed value {l} at pixel {i} is neither 255 nor below {num_labels}"))),
        })
        .collect()
}

/// Solves the configured problem without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match &cfg.task {
        Task::Stereo { left, right, params } => {
            let p = StereoProblem::new(RgbImage::load(left)?, RgbImage::load(right)?, params.clone())?;
            let mrf = build_stereo_mrf(&p)?;
            let mut solver = MrfSolver::expansion(&mrf);
            drive(cfg, &mrf, &mut solver, (p.width(), p.height()))
        }
        Task::Segment { image, seeds, num_labels, params } => {
            let img = RgbImage::load(image)?;
            let dims = (img.width(), img.height());
            let seeds = read_seeds(seeds, *num_labels)?;
            let p = SegmentationProblem::new(img, seeds, *num_labels, params.clone())?;
            let mut solver = CoopCutSolver::new(&p)?;
            let cp_model = solver.cp_model()?;
            drive(cfg, &cp_model, &mut solver, dims)
        }
    }
}

fn level_partition(cp_model: &LabeledMrf, spec: &LevelSpec) -> Result<Option<Partition>> {
    let n = cp_model.num_vars();
    Ok(match spec {
        LevelSpec::Degenerate => None,
        LevelSpec::Single => Some(Partition::single(n)),
        LevelSpec::Explicit(p) => Some(p.clone()),
        &LevelSpec::Cp { split_threshold, iterations } => Some(cp(cp_model, split_threshold, iterations)?),
    })
}

fn spec_name(spec: &LevelSpec) -> String {
    match spec {
        LevelSpec::Cp { split_threshold, iterations } => format!("cp{split_threshold}-{iterations}"),
        LevelSpec::Single => "single".into(),
        LevelSpec::Explicit(_) => "explicit".into(),
        LevelSpec::Degenerate => "flat".into(),
    }
}

fn drive<S: LevelSolver>(cfg: &RunConfig, cp_model: &LabeledMrf, solver: &mut S, dims: (usize, usize)) -> Result<RunOutcome> {
    let crit = cfg.criteria();
    let started = Instant::now();
    let mut partitions = Vec::new();
    let mut threshold = None;
    let report = match cfg.mode {
        Mode::Flat => run_flat(solver, &crit, cfg.budget)?,
        Mode::C2f => {
            let schedule = cfg.schedule()?;
            let report = run_c2f(cp_model, &schedule, solver, cfg.budget)?;
            if cfg.trace {
                for l in schedule.levels() {
                    if let Some(p) = level_partition(cp_model, &l.spec)? {
                        partitions.push((spec_name(&l.spec), p));
                    }
                }
            }
            report
        }
        Mode::Static => {
            let spec = cfg.static_level()?;
            let p = level_partition(cp_model, &spec)?.expect("static level is not the unreduced model");
            let report = run_static_lifted(cp_model, &p, solver, &crit, cfg.budget)?;
            partitions.push((spec_name(&spec), p));
            report
        }
        Mode::Threshold => {
            let (t, p) = match cfg.threshold {
                Some(t) => (t, threshold_partition(cp_model, t)?),
                None => {
                    let spec = cfg.static_level()?;
                    let target = level_partition(cp_model, &spec)?.expect("static level is not the unreduced model");
                    match_threshold(cp_model, target.num_elements(), MATCH_TOLERANCE)?
                }
            };
            threshold = Some(t);
            let report = run_static_lifted(cp_model, &p, solver, &crit, cfg.budget)?;
            partitions.push(("threshold".into(), p));
            report
        }
    };
    Ok(RunOutcome {
        report,
        width: dims.0,
        height: dims.1,
        num_labels: cp_model.num_labels(),
        partitions,
        threshold,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Solves and writes the artifacts; the manifest goes last.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let mut artifacts: Vec<PathBuf> = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        fs::write(cfg.out.join(name), bytes)?;
        artifacts.push(name.into());
        Ok(())
    };
    let map = GrayImage::from_labels(outcome.width, outcome.height, &outcome.report.assignment, outcome.num_labels)?;
    put("map.pgm", &map.to_pgm())?;
    put("labels.txt", output::labels_text(&outcome.report.assignment).as_bytes())?;
    if cfg.trace {
        put("trace.csv", outcome.report.trace.to_csv().as_bytes())?;
        for (k, (name, p)) in outcome.partitions.iter().enumerate() {
            put(&format!("partition_{k}_{name}.txt"), p.to_text().as_bytes())?;
            put(&format!("partition_{k}_{name}.ppm"), &output::render_partition(p, outcome.width, outcome.height)?.to_ppm())?;
        }
    }
    output::write_manifest(&cfg.out, &output::manifest(cfg, &outcome, &artifacts))?;
    Ok(outcome)
}
