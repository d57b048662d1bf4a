//! Anytime traces and their comparison.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Error, Result};

pub const TRACE_CSV_HEADER: &str = "elapsed_seconds,energy,partition_level,event";

/// Number of sampled timepoints used by [`compare_traces`].
pub const DEFAULT_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Start,
    Move,
    Refine,
    Stop,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceEvent::Start => "start",
            TraceEvent::Move => "move",
            TraceEvent::Refine => "refine",
            TraceEvent::Stop => "stop",
        })
    }
}

impl FromStr for TraceEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "start" => Ok(TraceEvent::Start),
            "move" => Ok(TraceEvent::Move),
            "refine" => Ok(TraceEvent::Refine),
            "stop" => Ok(TraceEvent::Stop),
            other => Err(Error::Parse(format!("unknown trace event {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub elapsed: f64,
    pub energy: f64,
    pub level: usize,
    pub event: TraceEvent,
}

/// Timestamped energy records of one run, measured on a monotonic clock from
/// the trace's origin.
#[derive(Clone, Debug)]
pub struct AnytimeTrace {
    origin: Instant,
    level: usize,
    rows: Vec<TraceRow>,
}

impl Default for AnytimeTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl AnytimeTrace {
    /// Starts the clock now.
    pub fn new() -> Self {
        Self::with_origin(Instant::now())
    }

    pub fn with_origin(origin: Instant) -> Self {
        AnytimeTrace { origin, level: 0, rows: Vec::new() }
    }

    /// A trace made of already-timed rows, e.g. one read back from disk.
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<Self> {
        contract!(
            rows.windows(2).all(|w| w[0].elapsed <= w[1].elapsed),
            "trace timestamps must be non-decreasing"
        );
        let level = rows.last().map_or(0, |r| r.level);
        Ok(AnytimeTrace { origin: Instant::now(), level, rows })
    }

    pub fn origin(&self) -> Instant {
        self.origin
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Partition level stamped on subsequent records.
    pub fn set_level(&mut self, level: usize) {
        self.level = level;
    }

    pub fn record(&mut self, event: TraceEvent, energy: f64) {
        let elapsed = self.origin.elapsed().as_secs_f64();
        // Guards against a clock read that lands before the previous row's.
        let elapsed = self.rows.last().map_or(elapsed, |r| r.elapsed.max(elapsed));
        self.rows.push(TraceRow { elapsed, energy, level: self.level, event });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.rows.last().map(|r| r.energy)
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.rows.first().map(|r| r.energy)
    }

    /// Wall time of the last record.
    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.elapsed)
    }

    /// Step-function value: energy of the last record at or before `t`.
    pub fn energy_at(&self, t: f64) -> Option<f64> {
        let n = self.rows.partition_point(|r| r.elapsed <= t);
        (n > 0).then(|| self.rows[n - 1].energy)
    }

    /// First time the recorded energy is at or below `target`.
    pub fn time_to_reach(&self, target: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.energy <= target).map(|r| r.elapsed)
    }

    /// True if no record's energy exceeds an earlier one's by more than
    /// `rel_tol` relative to the larger magnitude.
    pub fn is_non_increasing(&self, rel_tol: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let scale = w[0].energy.abs().max(w[1].energy.abs()).max(1.0);
            w[1].energy <= w[0].energy + rel_tol * scale
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.elapsed, r.energy, r.level, r.event));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == TRACE_CSV_HEADER => {}
            Some(h) => return Err(Error::Parse(format!("unexpected trace header {h:?}"))),
            None => return Err(Error::Parse("empty trace file".into())),
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let bad = || Error::Parse(format!("malformed trace row {}: {line:?}", n + 2));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            rows.push(TraceRow {
                elapsed: f[0].parse().map_err(|_| bad())?,
                energy: f[1].parse().map_err(|_| bad())?,
                level: f[2].parse().map_err(|_| bad())?,
                event: f[3].parse()?,
            });
        }
        AnytimeTrace::from_rows(rows).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 || hi <= lo {
        return vec![lo; n];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` sorted points drawn log-uniformly from `[lo, hi]`.
pub fn random_grid(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (lo.ln(), hi.max(lo).ln());
    let mut g: Vec<f64> = (0..n).map(|_| (a + (b - a) * rng.random::<f64>()).exp()).collect();
    g.sort_by(f64::total_cmp);
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominanceSummary {
    pub grid: Vec<f64>,
    pub energy_a: Vec<f64>,
    pub energy_b: Vec<f64>,
    /// Fraction of grid points where `a`'s energy is at most `b`'s.
    pub dominance: f64,
    /// Fraction where `a`'s energy is strictly below `b`'s.
    pub strict_dominance: f64,
    /// Lower of the two final energies.
    pub best_final: f64,
    /// Relative gap used for the time-to-within fields.
    pub within: f64,
    pub time_to_within_a: Option<f64>,
    pub time_to_within_b: Option<f64>,
    /// `(E(t) - best_final) / (E_init - best_final)` with `E_init` the larger
    /// initial energy; zero when the two coincide.
    pub normalized_a: Vec<f64>,
    pub normalized_b: Vec<f64>,
}

impl DominanceSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,energy_a,energy_b,normalized_a,normalized_b\n");
        for k in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.grid[k], self.energy_a[k], self.energy_b[k], self.normalized_a[k], self.normalized_b[k]
            ));
        }
        out
    }

    /// Scalar fields as `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |t| t.to_string());
        format!(
            "dominance={}\nstrict_dominance={}\nbest_final={}\nwithin={}\ntime_to_within_a={}\ntime_to_within_b={}\n",
            self.dominance,
            self.strict_dominance,
            self.best_final,
            self.within,
            opt(self.time_to_within_a),
            opt(self.time_to_within_b)
        )
    }
}

/// Sampling window over both traces: from the earlier first record to the
/// later last record. Grid points where either curve is still undefined are
/// left out of the fractions.
pub fn sampling_window(a: &AnytimeTrace, b: &AnytimeTrace) -> Result<(f64, f64)> {
    contract!(!a.is_empty() && !b.is_empty(), "cannot compare an empty trace");
    let lo = a.rows[0].elapsed.min(b.rows[0].elapsed);
    let hi = a.duration().max(b.duration());
    // A log grid needs a positive start.
    let lo = lo.max(1e-6 * hi.max(1e-9));
    Ok((lo, hi.max(lo)))
}

/// Dominance of `a` over `b` on the deterministic 64-point log grid, with
/// time-to-within measured at 1% of the shared best final energy.
pub fn compare_traces(a: &AnytimeTrace, b: &AnytimeTrace) -> Result<DominanceSummary> {
    let (lo, hi) = sampling_window(a, b)?;
    compare_traces_on(a, b, &log_grid(lo, hi, DEFAULT_GRID_POINTS), 0.01)
}

pub fn compare_traces_on(a: &AnytimeTrace, b: &AnytimeTrace, grid: &[f64], within: f64) -> Result<DominanceSummary> {
    contract!(!a.is_empty() && !b.is_empty(), "cannot compare an empty trace");
    contract!(!grid.is_empty(), "sampling grid is empty");
    contract!(within >= 0.0, "time-to-within gap must be non-negative");
    let mut ea = Vec::with_capacity(grid.len());
    let mut eb = Vec::with_capacity(grid.len());
    let (mut le, mut lt, mut used) = (0usize, 0usize, 0usize);
    for &t in grid {
        let va = a.energy_at(t);
        let vb = b.energy_at(t);
        ea.push(va.unwrap_or(f64::INFINITY));
        eb.push(vb.unwrap_or(f64::INFINITY));
        if let (Some(va), Some(vb)) = (va, vb) {
            used += 1;
            le += usize::from(va <= vb);
            lt += usize::from(va < vb);
        }
    }
    let frac = |k: usize| if used == 0 { 0.0 } else { k as f64 / used as f64 };

    let fa = a.final_energy().expect("nonempty");
    let fb = b.final_energy().expect("nonempty");
    let best_final = fa.min(fb);
    let init = a.initial_energy().expect("nonempty").max(b.initial_energy().expect("nonempty"));
    let span = init - best_final;
    let norm = |e: &[f64]| -> Vec<f64> {
        e.iter()
            .map(|&v| if !v.is_finite() { f64::INFINITY } else if span > 0.0 { (v - best_final) / span } else { 0.0 })
            .collect()
    };
    let target = best_final + within * best_final.abs();
    Ok(DominanceSummary {
        grid: grid.to_vec(),
        dominance: frac(le),
        strict_dominance: frac(lt),
        best_final,
        within,
        time_to_within_a: a.time_to_reach(target),
        time_to_within_b: b.time_to_reach(target),
        normalized_a: norm(&ea),
        normalized_b: norm(&eb),
        energy_a: ea,
        energy_b: eb,
    })
}

/// Fraction of entries with `|pred - truth| > tolerance`.
pub fn pixel_error(pred: &[usize], truth: &[usize], tolerance: usize) -> Result<f64> {
    contract!(
        pred.len() == truth.len(),
        "prediction has {} pixels, ground truth has {}",
        pred.len(),
        truth.len()
    );
    if pred.is_empty() {
        return Ok(0.0);
    }
    let bad = pred.iter().zip(truth).filter(|(p, t)| p.abs_diff(**t) > tolerance).count();
    Ok(bad as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rows: &[(f64, f64)]) -> AnytimeTrace {
        AnytimeTrace::from_rows(
            rows.iter()
                .map(|&(t, e)| TraceRow { elapsed: t, energy: e, level: 0, event: TraceEvent::Move })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let mut t = AnytimeTrace::new();
        t.record(TraceEvent::Start, 10.5);
        t.set_level(2);
        t.record(TraceEvent::Refine, 0.1 + 0.2);
        t.record(TraceEvent::Stop, -3.0);
        let back = AnytimeTrace::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.rows(), t.rows());
        assert!(t.to_csv().starts_with("elapsed_seconds,energy,partition_level,event\n"));
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(AnytimeTrace::from_csv("").is_err());
        assert!(AnytimeTrace::from_csv("a,b\n").is_err());
        assert!(AnytimeTrace::from_csv("elapsed_seconds,energy,partition_level,event\n1,2,3,jump\n").is_err());
        assert!(AnytimeTrace::from_csv("elapsed_seconds,energy,partition_level,event\n2,1,0,move\n1,1,0,move\n").is_err());
    }

    #[test]
    fn step_function_lookup() {
        let t = trace(&[(1.0, 5.0), (2.0, 3.0)]);
        assert_eq!(t.energy_at(0.5), None);
        assert_eq!(t.energy_at(1.0), Some(5.0));
        assert_eq!(t.energy_at(1.9), Some(5.0));
        assert_eq!(t.energy_at(7.0), Some(3.0));
    }

    #[test]
    fn identical_traces_tie_for_a() {
        let a = trace(&[(0.01, 9.0), (0.1, 4.0), (1.0, 2.0)]);
        let s = compare_traces(&a, &a).unwrap();
        assert_eq!(s.dominance, 1.0);
        assert_eq!(s.strict_dominance, 0.0);
        assert_eq!(s.grid.len(), 64);
    }

    #[test]
    fn strict_ordering_gives_extremes() {
        let a = trace(&[(0.01, 8.0), (1.0, 1.0)]);
        let b = trace(&[(0.01, 9.0), (1.0, 2.0)]);
        assert_eq!(compare_traces(&a, &b).unwrap().dominance, 1.0);
        assert_eq!(compare_traces(&b, &a).unwrap().dominance, 0.0);
    }

    #[test]
    fn empty_trace_is_an_error() {
        let a = trace(&[(0.1, 1.0)]);
        assert!(compare_traces(&a, &AnytimeTrace::new()).is_err());
    }

    #[test]
    fn pixel_error_is_strict() {
        assert_eq!(pixel_error(&[1, 2, 3], &[1, 2, 3], 1).unwrap(), 0.0);
        assert_eq!(pixel_error(&[2, 3, 4], &[1, 2, 3], 1).unwrap(), 0.0);
        assert_eq!(pixel_error(&[3, 2, 5, 3], &[1, 2, 3, 3], 1).unwrap(), 0.5);
        assert!(pixel_error(&[1], &[1, 2], 1).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.001, 10.0, 64);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 0.001).abs() < 1e-15);
        assert_eq!(g[63], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
