//! Interactive segmentation with cooperative edge-group penalties.
//!
//! Grid edges are clustered into groups by colour contrast and position. The
//! energy applies a concave `F` to the cut weight each group carries on each
//! label's side:
//!
//! `E(x) = sum_i phi_i(x_i) + sum_g sum_l F(sum_{(i,j) in g} w_ij [x_i = l, x_j != l])`
//!
//! Every edge counts in both orientations, so a cut edge feeds the groups of
//! both of its labels. With `F` two-piece linear, fixing which piece is
//! active for every `(g, l)` leaves an ordinary pairwise model; the solver
//! alternates a greedy choice of pieces with expansion moves on that model.

use std::time::Instant;

use rustc_hash::FxHashMap;

use crate::c2f::LevelSolver;
use crate::error::{contract, Error, Result};
use crate::image::RgbImage;
use crate::mrf::{grid_edges, Edge, Label, LabelSet, LabeledMrf, Pairwise};
use crate::numeric::{argmin, CompensatedSum};
use crate::partition::Partition;
use crate::solvers::{expired, CountUnit, ExpansionWorkspace, LevelOutcome, NoImprove, SolveReport, StopReason, StoppingCriteria};
use crate::trace::{AnytimeTrace, TraceEvent};

/// `F(z) = min(z, theta + slope * (z - theta))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcaveF {
    pub theta: f64,
    /// Slope past the breakpoint, in `[0, 1)`.
    pub slope: f64,
}

/// Which linear piece of [`ConcaveF`] bounds a group's cut weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    /// `z`, exact up to the breakpoint.
    Steep,
    /// `theta + slope * (z - theta)`, exact past it.
    Shallow,
}

impl ConcaveF {
    pub fn new(theta: f64, slope: f64) -> Result<Self> {
        let f = ConcaveF { theta, slope };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::Config("concave breakpoint must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.slope) {
            return Err(Error::Config("concave slope must lie in [0, 1)".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        z.min(self.theta + self.slope * (z - self.theta))
    }

    /// `(slope, intercept)` of a piece.
    #[inline]
    pub fn line(&self, piece: Piece) -> (f64, f64) {
        match piece {
            Piece::Steep => (1.0, 0.0),
            Piece::Shallow => (self.slope, self.theta * (1.0 - self.slope)),
        }
    }

    /// The piece that is tight at `z`, steep on ties.
    #[inline]
    pub fn best_piece(&self, z: f64) -> Piece {
        if z <= self.theta {
            Piece::Steep
        } else {
            Piece::Shallow
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationParams {
    /// Multiplies the colour distance to a label's mean seed colour.
    pub unary_scale: f64,
    /// Unary of a seed pixel for every label other than its seed.
    pub seed_penalty: f64,
    /// `lambda` in `w = lambda * exp(-d^2 / (2 sigma^2))`, where `d` is the
    /// lower end of the edge's colour-distance bin.
    pub edge_strength: f64,
    /// `sigma` of the same formula.
    pub contrast_sigma: f64,
    pub num_color_bins: usize,
    pub cell_size: usize,
    pub concave: ConcaveF,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            unary_scale: 0.05,
            seed_penalty: 1e4,
            edge_strength: 6.0,
            contrast_sigma: 100.0,
            num_color_bins: 6,
            cell_size: 16,
            concave: ConcaveF { theta: 4.0, slope: 0.1 },
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.unary_scale.is_finite() && self.unary_scale >= 0.0) {
            return bad("unary scale must be finite and non-negative");
        }
        if !(self.seed_penalty.is_finite() && self.seed_penalty > 0.0) {
            return bad("seed penalty must be positive and finite");
        }
        if !(self.edge_strength.is_finite() && self.edge_strength >= 0.0) {
            return bad("edge strength must be finite and non-negative");
        }
        if !(self.contrast_sigma.is_finite() && self.contrast_sigma > 0.0) {
            return bad("contrast sigma must be positive and finite");
        }
        if self.num_color_bins == 0 || self.cell_size == 0 {
            return bad("colour bins and cell size must be at least 1");
        }
        self.concave.validate()
    }

    /// Weight of an edge in colour-distance bin `bin`. Weights depend on the
    /// bin only, so edges of one bin look alike to colour passing.
    pub fn bin_weight(&self, bin: usize) -> f64 {
        let d = bin as f64 * MAX_COLOR_DISTANCE / self.num_color_bins as f64;
        self.edge_strength * (-d * d / (2.0 * self.contrast_sigma * self.contrast_sigma)).exp()
    }
}

const MAX_COLOR_DISTANCE: f64 = 441.672_955_930_063_7;

/// Bin of the Euclidean colour distance, `num_bins` equal bins over the
/// full range.
pub fn color_bin(a: [u8; 3], b: [u8; 3], num_bins: usize) -> usize {
    let d = color_distance_sq(a, b).sqrt();
    ((d / MAX_COLOR_DISTANCE * num_bins as f64) as usize).min(num_bins - 1)
}

#[inline]
fn color_distance_sq(a: [u8; 3], b: [u8; 3]) -> f64 {
    (0..3).map(|c| (a[c] as f64 - b[c] as f64).powi(2)).sum()
}

/// Grid edges in [`grid_edges`] order with a dense group id each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeGroups {
    edges: Vec<(usize, usize)>,
    group: Vec<u32>,
    num_groups: usize,
}

impl EdgeGroups {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn group_of(&self, edge: usize) -> usize {
        self.group[edge] as usize
    }

    pub fn groups(&self) -> &[u32] {
        &self.group
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }
}

/// Groups keyed by the edge's colour-distance bin and the cell holding its
/// midpoint. Ids are assigned in first-seen edge order, so only non-empty
/// groups exist.
pub fn cluster_edge_groups(image: &RgbImage, num_color_bins: usize, cell_size: usize) -> Result<EdgeGroups> {
    contract!(num_color_bins >= 1 && cell_size >= 1, "colour bins and cell size must be at least 1");
    let w = image.width();
    let edges = grid_edges(w, image.height());
    let mut ids: FxHashMap<(usize, usize, usize), u32> = FxHashMap::default();
    let group = edges
        .iter()
        .map(|&(a, b)| {
            let (xa, ya, xb, yb) = (a % w, a / w, b % w, b / w);
            let bin = color_bin(image.pixel(xa, ya), image.pixel(xb, yb), num_color_bins);
            // Midpoints in doubled coordinates stay integral.
            let key = (bin, (ya + yb) / (2 * cell_size), (xa + xb) / (2 * cell_size));
            let next = ids.len() as u32;
            *ids.entry(key).or_insert(next)
        })
        .collect();
    Ok(EdgeGroups { edges, group, num_groups: ids.len() })
}

#[derive(Clone, Debug)]
pub struct SegmentationProblem {
    image: RgbImage,
    seeds: Vec<Option<Label>>,
    labels: LabelSet,
    params: SegmentationParams,
    groups: EdgeGroups,
    weights: Vec<f64>,
}

impl SegmentationProblem {
    pub fn new(image: RgbImage, seeds: Vec<Option<Label>>, num_labels: usize, params: SegmentationParams) -> Result<Self> {
        params.validate()?;
        let labels = LabelSet::new(num_labels)?;
        let n = image.width() * image.height();
        contract!(seeds.len() == n, "seed map has {} entries, image has {n} pixels", seeds.len());
        if let Some((i, l)) = seeds.iter().enumerate().find_map(|(i, s)| s.filter(|&l| l >= num_labels).map(|l| (i, l))) {
            return Err(Error::Contract(format!("seed label {l} at pixel {i} outside 0..{num_labels}")));
        }
        let groups = cluster_edge_groups(&image, params.num_color_bins, params.cell_size)?;
        let w = image.width();
        let weights = groups
            .edges()
            .iter()
            .map(|&(a, b)| params.bin_weight(color_bin(image.pixel(a % w, a / w), image.pixel(b % w, b / w), params.num_color_bins)))
            .collect();
        Ok(SegmentationProblem { image, seeds, labels, params, groups, weights })
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn seeds(&self) -> &[Option<Label>] {
        &self.seeds
    }

    pub fn num_labels(&self) -> usize {
        self.labels.size()
    }

    pub fn num_vars(&self) -> usize {
        self.seeds.len()
    }

    pub fn params(&self) -> &SegmentationParams {
        &self.params
    }

    pub fn groups(&self) -> &EdgeGroups {
        &self.groups
    }

    /// Edge weights in [`EdgeGroups::edges`] order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major unary table. Fails if some label has no seed pixel.
    pub fn unaries(&self) -> Result<Vec<f64>> {
        let nl = self.num_labels();
        let w = self.image.width();
        let mut sum = vec![[0.0f64; 3]; nl];
        let mut count = vec![0usize; nl];
        for (i, s) in self.seeds.iter().enumerate() {
            if let Some(l) = *s {
                let c = self.image.pixel(i % w, i / w);
                for k in 0..3 {
                    sum[l][k] += c[k] as f64;
                }
                count[l] += 1;
            }
        }
        if let Some(l) = count.iter().position(|&c| c == 0) {
            return Err(Error::Contract(format!("label {l} has no seed pixels")));
        }
        let means: Vec<[f64; 3]> = sum.iter().zip(&count).map(|(s, &c)| s.map(|v| v / c as f64)).collect();
        let mut out = Vec::with_capacity(self.num_vars() * nl);
        for (i, s) in self.seeds.iter().enumerate() {
            match *s {
                Some(seed) => out.extend((0..nl).map(|l| if l == seed { 0.0 } else { self.params.seed_penalty })),
                None => {
                    let c = self.image.pixel(i % w, i / w);
                    out.extend(means.iter().map(|m| {
                        let d2: f64 = (0..3).map(|k| (c[k] as f64 - m[k]).powi(2)).sum();
                        self.params.unary_scale * d2.sqrt()
                    }));
                }
            }
        }
        Ok(out)
    }
}

/// One active piece of `F` per `(group, label)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxiliaryState {
    num_labels: usize,
    modes: Vec<Piece>,
}

impl AuxiliaryState {
    /// Every piece steep.
    pub fn new(num_groups: usize, num_labels: usize) -> Self {
        AuxiliaryState { num_labels, modes: vec![Piece::Steep; num_groups * num_labels] }
    }

    pub fn for_problem(p: &SegmentationProblem) -> Self {
        Self::new(p.groups.num_groups(), p.num_labels())
    }

    /// The piece tight at each group's cut weight under `x`.
    pub fn greedy(p: &SegmentationProblem, x: &[Label]) -> Result<Self> {
        p.labels_check(x)?;
        Ok(Self::from_cut_weights(&p.params.concave, p.num_labels(), &cut_weights(p, x)))
    }

    fn from_cut_weights(f: &ConcaveF, num_labels: usize, z: &[f64]) -> Self {
        AuxiliaryState { num_labels, modes: z.iter().map(|&v| f.best_piece(v)).collect() }
    }

    pub fn num_groups(&self) -> usize {
        self.modes.len() / self.num_labels.max(1)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn get(&self, group: usize, label: Label) -> Piece {
        self.modes[group * self.num_labels + label]
    }

    pub fn set(&mut self, group: usize, label: Label, piece: Piece) {
        self.modes[group * self.num_labels + label] = piece;
    }

    pub fn modes(&self) -> &[Piece] {
        &self.modes
    }
}

impl SegmentationProblem {
    fn labels_check(&self, x: &[Label]) -> Result<()> {
        contract!(x.len() == self.num_vars(), "assignment has {} entries, problem has {} pixels", x.len(), self.num_vars());
        if let Some(i) = x.iter().position(|&l| !self.labels.contains(l)) {
            return Err(Error::Contract(format!("label {} at pixel {i} outside 0..{}", x[i], self.num_labels())));
        }
        Ok(())
    }

    fn check_aux(&self, aux: &AuxiliaryState) -> Result<()> {
        contract!(
            aux.num_labels == self.num_labels() && aux.num_groups() == self.groups.num_groups(),
            "auxiliary state is {}x{}, problem has {} groups and {} labels",
            aux.num_groups(),
            aux.num_labels,
            self.groups.num_groups(),
            self.num_labels()
        );
        Ok(())
    }
}

/// Per `(group, label)`, the weight of cut edges with that label on one side.
fn cut_weights(p: &SegmentationProblem, x: &[Label]) -> Vec<f64> {
    let nl = p.num_labels();
    let mut z = vec![0.0; p.groups.num_groups() * nl];
    for (k, &(a, b)) in p.groups.edges().iter().enumerate() {
        let (la, lb) = (x[a], x[b]);
        if la != lb {
            let g = p.groups.group_of(k);
            z[g * nl + la] += p.weights[k];
            z[g * nl + lb] += p.weights[k];
        }
    }
    z
}

/// Pairwise model for fixed pieces: a cut edge `(i, j)` in group `g` costs
/// `w_ij * (s_{g, x_i} + s_{g, x_j})`, and the offset collects the pieces'
/// intercepts.
pub fn build_segmentation_mrf(p: &SegmentationProblem, aux: &AuxiliaryState) -> Result<LabeledMrf> {
    p.check_aux(aux)?;
    let nl = p.num_labels();
    let f = &p.params.concave;
    let edges = p
        .groups
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let g = p.groups.group_of(k);
            Edge::new(a, b, Pairwise::dense(link_table(f, aux, nl, &[(g as u32, p.weights[k])])))
        })
        .collect();
    let offset = intercepts(f, aux);
    LabeledMrf::new(p.labels, p.num_vars(), p.unaries()?, edges)?
        .with_grid_dims(p.image.width(), p.image.height())?
        .with_offset(offset)
}

/// The pairwise model with every piece steep, i.e. `F(z) = z`.
pub fn plain_pairwise_mrf(p: &SegmentationProblem) -> Result<LabeledMrf> {
    build_segmentation_mrf(p, &AuxiliaryState::for_problem(p))
}

fn link_table(f: &ConcaveF, aux: &AuxiliaryState, nl: usize, groups: &[(u32, f64)]) -> Vec<f64> {
    let mut t = vec![0.0; nl * nl];
    for &(g, w) in groups {
        let g = g as usize;
        for la in 0..nl {
            let sa = f.line(aux.get(g, la)).0;
            for lb in 0..nl {
                if la != lb {
                    t[la * nl + lb] += w * (sa + f.line(aux.get(g, lb)).0);
                }
            }
        }
    }
    t
}

fn intercepts(f: &ConcaveF, aux: &AuxiliaryState) -> f64 {
    aux.modes.iter().map(|&m| f.line(m).1).collect::<CompensatedSum>().value()
}

/// The cooperative objective. All segmentation results are scored by it.
pub fn cogc_energy(p: &SegmentationProblem, x: &[Label]) -> Result<f64> {
    p.labels_check(x)?;
    let unary = p.unaries()?;
    let nl = p.num_labels();
    let mut s: CompensatedSum = x.iter().enumerate().map(|(i, &l)| unary[i * nl + l]).collect();
    for z in cut_weights(p, x) {
        s.add(p.params.concave.eval(z));
    }
    Ok(s.value())
}

/// Elements joined by at least one grid edge, with the edge weight summed
/// per group.
#[derive(Clone, Debug)]
struct Link {
    a: usize,
    b: usize,
    groups: Vec<(u32, f64)>,
}

/// The cooperative energy over the elements of one partition.
#[derive(Clone, Debug)]
pub struct CoopLevel {
    num_vars: usize,
    num_labels: usize,
    num_groups: usize,
    concave: ConcaveF,
    unaries: Vec<f64>,
    links: Vec<Link>,
}

impl CoopLevel {
    fn new(p: &SegmentationProblem, unary: &[f64], partition: Option<&Partition>) -> Self {
        let nl = p.num_labels();
        let elem = |v: usize| partition.map_or(v, |q| q.element_of(v));
        let num_vars = partition.map_or(p.num_vars(), Partition::num_elements);
        let unaries = match partition {
            None => unary.to_vec(),
            Some(q) => {
                let mut u = Vec::with_capacity(num_vars * nl);
                for e in 0..num_vars {
                    for l in 0..nl {
                        let s: CompensatedSum = q.members(e).iter().map(|&v| unary[v * nl + l]).collect();
                        u.push(s.value());
                    }
                }
                u
            }
        };
        let mut index: FxHashMap<(usize, usize), usize> = FxHashMap::default();
        let mut links: Vec<Link> = Vec::new();
        for (k, &(a, b)) in p.groups.edges().iter().enumerate() {
            let (ea, eb) = (elem(a), elem(b));
            if ea == eb {
                continue;
            }
            let key = (ea.min(eb), ea.max(eb));
            let id = *index.entry(key).or_insert_with(|| {
                links.push(Link { a: key.0, b: key.1, groups: Vec::new() });
                links.len() - 1
            });
            let g = p.groups.group_of(k) as u32;
            let gs = &mut links[id].groups;
            match gs.iter_mut().find(|(h, _)| *h == g) {
                Some((_, w)) => *w += p.weights[k],
                None => gs.push((g, p.weights[k])),
            }
        }
        CoopLevel { num_vars, num_labels: nl, num_groups: p.groups.num_groups(), concave: p.params.concave, unaries, links }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn cut_weights(&self, y: &[Label]) -> Vec<f64> {
        let nl = self.num_labels;
        let mut z = vec![0.0; self.num_groups * nl];
        for link in &self.links {
            let (la, lb) = (y[link.a], y[link.b]);
            if la != lb {
                for &(g, w) in &link.groups {
                    z[g as usize * nl + la] += w;
                    z[g as usize * nl + lb] += w;
                }
            }
        }
        z
    }

    pub fn cogc_energy(&self, y: &[Label]) -> f64 {
        let nl = self.num_labels;
        let mut s: CompensatedSum = y.iter().enumerate().map(|(i, &l)| self.unaries[i * nl + l]).collect();
        for z in self.cut_weights(y) {
            s.add(self.concave.eval(z));
        }
        s.value()
    }

    pub fn greedy_aux(&self, y: &[Label]) -> AuxiliaryState {
        AuxiliaryState::from_cut_weights(&self.concave, self.num_labels, &self.cut_weights(y))
    }

    /// The pairwise model for fixed pieces over this level's elements.
    pub fn linearized(&self, aux: &AuxiliaryState) -> Result<LabeledMrf> {
        let nl = self.num_labels;
        let edges = self
            .links
            .iter()
            .map(|l| Edge::new(l.a, l.b, Pairwise::dense(link_table(&self.concave, aux, nl, &l.groups))))
            .collect();
        LabeledMrf::new(LabelSet::new(nl)?, self.num_vars, self.unaries.clone(), edges)?
            .with_offset(intercepts(&self.concave, aux))
    }

    fn init_state(&self) -> Vec<Label> {
        self.unaries.chunks(self.num_labels).map(argmin).collect()
    }

    /// Greedy pieces, then one expansion move on the linearized model, per
    /// attempt. A move is kept only if it strictly lowers the cooperative
    /// energy; otherwise the pieces stay at the last accepted labeling's.
    pub fn descend(
        &self,
        mut x: Vec<Label>,
        criteria: &StoppingCriteria,
        trace: &mut AnytimeTrace,
        deadline: Option<Instant>,
    ) -> Result<LevelOutcome> {
        criteria.validate()?;
        contract!(x.len() == self.num_vars, "start has {} entries, level has {} variables", x.len(), self.num_vars);
        contract!(x.iter().all(|&l| l < self.num_labels), "start label outside 0..{}", self.num_labels);
        let mut energy = self.cogc_energy(&x);
        let mut aux = self.greedy_aux(&x);
        let mut model = self.linearized(&aux)?;
        let mut ws = ExpansionWorkspace::new();
        let mut cand = x.clone();
        let mut counter = NoImprove::new(criteria.no_improve_rounds);
        let mut moves = 0;
        let stop = 'run: loop {
            let mut changed = false;
            let mut cycle_improved = false;
            for alpha in 0..self.num_labels {
                if expired(deadline) {
                    break 'run StopReason::Budget;
                }
                let mut improved = false;
                let switched = ws.switch_set(&model, &x, alpha);
                if !switched.is_empty() {
                    cand.copy_from_slice(&x);
                    for &i in switched {
                        cand[i] = alpha;
                    }
                    let e = self.cogc_energy(&cand);
                    if e < energy {
                        improved = energy - e > criteria.energy_tolerance;
                        std::mem::swap(&mut x, &mut cand);
                        energy = e;
                        changed = true;
                        let next = self.greedy_aux(&x);
                        if next != aux {
                            aux = next;
                            model = self.linearized(&aux)?;
                        }
                    }
                }
                moves += 1;
                trace.record(TraceEvent::Move, energy);
                cycle_improved |= improved;
                if criteria.unit == CountUnit::Move && counter.step(improved) {
                    break 'run StopReason::CriteriaMet;
                }
            }
            if !changed {
                break StopReason::Converged;
            }
            if criteria.unit == CountUnit::Cycle && counter.step(cycle_improved) {
                break StopReason::CriteriaMet;
            }
        };
        Ok(LevelOutcome { assignment: x, energy, rounds: moves, stop })
    }
}

/// Greedy auxiliary descent on the unreduced problem from `start`.
pub fn greedy_aux_descent(p: &SegmentationProblem, start: &[Label], criteria: &StoppingCriteria) -> Result<SolveReport> {
    p.labels_check(start)?;
    let level = CoopLevel::new(p, &p.unaries()?, None);
    let mut trace = AnytimeTrace::new();
    trace.record(TraceEvent::Start, level.cogc_energy(start));
    let deadline = criteria.deadline(Instant::now(), None);
    let out = level.descend(start.to_vec(), criteria, &mut trace, deadline)?;
    trace.record(TraceEvent::Stop, out.energy);
    Ok(out.into_report(trace))
}

/// Cooperative-cut solver for the refinement driver.
///
/// Reduced levels keep the group structure of the edges between elements,
/// so their cooperative energy equals the unreduced one on expanded
/// assignments and the pieces can be chosen greedily at every level.
#[derive(Clone, Debug)]
pub struct CoopCutSolver<'a> {
    problem: &'a SegmentationProblem,
    unary: Vec<f64>,
}

impl<'a> CoopCutSolver<'a> {
    pub fn new(problem: &'a SegmentationProblem) -> Result<Self> {
        Ok(CoopCutSolver { problem, unary: problem.unaries()? })
    }

    /// The model colour passing partitions: unaries plus steep-piece edges.
    pub fn cp_model(&self) -> Result<LabeledMrf> {
        plain_pairwise_mrf(self.problem)
    }
}

impl LevelSolver for CoopCutSolver<'_> {
    type Level = CoopLevel;

    fn prepare(&mut self, partition: Option<&Partition>) -> Result<CoopLevel> {
        if let Some(q) = partition {
            contract!(q.num_vars() == self.problem.num_vars(), "partition covers {} variables, problem has {}", q.num_vars(), self.problem.num_vars());
        }
        Ok(CoopLevel::new(self.problem, &self.unary, partition))
    }

    fn init_state(&self, level: &CoopLevel) -> Vec<Label> {
        level.init_state()
    }

    fn energy(&self, level: &CoopLevel, y: &[Label]) -> f64 {
        level.cogc_energy(y)
    }

    fn solve(
        &mut self,
        level: &CoopLevel,
        start: Vec<Label>,
        criteria: &StoppingCriteria,
        trace: &mut AnytimeTrace,
        deadline: Option<Instant>,
    ) -> Result<LevelOutcome> {
        level.descend(start, criteria, trace, deadline)
    }
}
