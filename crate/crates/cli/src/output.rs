use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use c2f_core::image::RgbImage;
use c2f_core::{Error, Partition, Result};

use crate::config::{RunConfig, Task};
use crate::run::RunOutcome;

pub const MANIFEST: &str = "manifest.txt";

/// Colors of the ten largest elements; everything else is drawn dark grey.
const PALETTE: [[u8; 3]; 10] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
];

pub fn render_partition(p: &Partition, width: usize, height: usize) -> Result<RgbImage> {
    if p.num_vars() != width * height {
        return Err(Error::Contract(format!("partition covers {} variables, image has {}", p.num_vars(), width * height)));
    }
    let mut color = vec![[40u8, 40, 40]; p.num_elements()];
    for (rank, &e) in p.elements_by_size().iter().take(PALETTE.len()).enumerate() {
        color[e] = PALETTE[rank];
    }
    let data = p.element_ids().iter().flat_map(|&e| color[e]).collect();
    RgbImage::new(width, height, data)
}

/// One label per line, row-major.
pub fn labels_text(x: &[usize]) -> String {
    let mut s = String::with_capacity(x.len() * 3);
    for l in x {
        let _ = writeln!(s, "{l}");
    }
    s
}

pub fn manifest(cfg: &RunConfig, out: &RunOutcome, artifacts: &[PathBuf]) -> String {
    let mut m = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(m, "{k}={v}");
    };
    kv("task", cfg.task.name().into());
    kv("mode", cfg.mode.name().into());
    match &cfg.task {
        Task::Stereo { left, right, params } => {
            kv("left", left.display().to_string());
            kv("right", right.display().to_string());
            kv("max_disparity", params.max_disparity.to_string());
        }
        Task::Segment { image, seeds, num_labels, params } => {
            kv("image", image.display().to_string());
            kv("seeds", seeds.display().to_string());
            kv("labels", num_labels.to_string());
            kv("groups_bins", params.num_color_bins.to_string());
            kv("cell", params.cell_size.to_string());
        }
    }
    kv("schedule", cfg.schedule_text());
    if let Some(t) = out.threshold {
        kv("threshold", t.to_string());
    }
    let crit = cfg.criteria();
    kv("k", crit.no_improve_rounds.to_string());
    kv("unit", format!("{:?}", crit.unit).to_lowercase());
    kv("budget", cfg.budget.map_or_else(|| "none".into(), |b| b.as_secs_f64().to_string()));
    kv("seed", cfg.seed.to_string());
    for (k, (name, p)) in out.partitions.iter().enumerate() {
        kv(&format!("level_{k}"), format!("{name}:{}", p.num_elements()));
    }
    kv("final_energy", out.report.energy.to_string());
    kv("stop", out.report.stop.to_string());
    kv("rounds", out.report.rounds.to_string());
    kv("wall_time", out.wall_time.to_string());
    kv("artifacts", artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","));
    m
}

/// Writes the manifest through a temporary file and a rename, so a reader
/// never sees a partial one.
pub fn write_manifest(dir: &Path, text: &str) -> Result<()> {
    let tmp = dir.join(format!(".{MANIFEST}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, dir.join(MANIFEST))?;
    Ok(())
}

/// `key=value` lines into pairs, in file order.
pub fn parse_manifest(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
