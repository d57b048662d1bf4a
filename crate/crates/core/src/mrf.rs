//! Pairwise MRF instances over a dense label set.
//!
//! All tables hold energies (negative log potentials); lower is better.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{contract, Error, Result};
use crate::numeric::CompensatedSum;

pub type Label = usize;

/// Default ceiling on `|L|^n` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Dense, zero-based label set `0..size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabelSet(usize);

impl LabelSet {
    pub fn new(size: usize) -> Result<Self> {
        contract!(size >= 1, "label set must contain at least one label");
        Ok(LabelSet(size))
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }

    #[inline]
    pub fn contains(self, label: Label) -> bool {
        label < self.0
    }

    pub fn iter(self) -> std::ops::Range<Label> {
        0..self.0
    }
}

/// Pairwise energy `ψ(a, b)` between the two endpoints of an edge.
///
/// `Dense` is row-major over `(a, b)`: entry `a * |L| + b`, with `a` the label
/// of the edge's first endpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Pairwise {
    Dense(Arc<[f64]>),
    /// `weight * min(|a - b|, truncation)`.
    TruncatedLinear { weight: f64, truncation: f64 },
}

impl Pairwise {
    pub fn dense(table: Vec<f64>) -> Self {
        Pairwise::Dense(table.into())
    }

    pub fn truncated_linear(weight: f64, truncation: f64) -> Self {
        Pairwise::TruncatedLinear { weight, truncation }
    }

    /// Potts: `weight * [a != b]`.
    pub fn potts(weight: f64) -> Self {
        Pairwise::TruncatedLinear { weight, truncation: 1.0 }
    }

    #[inline]
    pub fn eval(&self, a: Label, b: Label, num_labels: usize) -> f64 {
        match self {
            Pairwise::Dense(t) => t[a * num_labels + b],
            Pairwise::TruncatedLinear { weight, truncation } => {
                let d = a.abs_diff(b) as f64;
                weight * d.min(*truncation)
            }
        }
    }

    pub fn is_symmetric(&self, num_labels: usize) -> bool {
        match self {
            Pairwise::TruncatedLinear { .. } => true,
            Pairwise::Dense(t) => (0..num_labels).all(|a| {
                (a + 1..num_labels).all(|b| t[a * num_labels + b] == t[b * num_labels + a])
            }),
        }
    }

    /// Same potential with its argument order swapped.
    pub fn transposed(&self, num_labels: usize) -> Pairwise {
        match self {
            Pairwise::TruncatedLinear { .. } => self.clone(),
            Pairwise::Dense(t) => {
                let mut out = vec![0.0; t.len()];
                for a in 0..num_labels {
                    for b in 0..num_labels {
                        out[b * num_labels + a] = t[a * num_labels + b];
                    }
                }
                Pairwise::dense(out)
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Pairwise {
        match self {
            Pairwise::Dense(t) => Pairwise::dense(t.iter().map(|v| v * c).collect()),
            Pairwise::TruncatedLinear { weight, truncation } => Pairwise::TruncatedLinear {
                weight: weight * c,
                truncation: *truncation,
            },
        }
    }

    fn validate(&self, num_labels: usize) -> Result<()> {
        match self {
            Pairwise::Dense(t) => {
                contract!(
                    t.len() == num_labels * num_labels,
                    "dense pairwise table has {} entries, expected {}",
                    t.len(),
                    num_labels * num_labels
                );
                contract!(t.iter().all(|v| v.is_finite()), "dense pairwise table has a non-finite entry");
            }
            Pairwise::TruncatedLinear { weight, truncation } => {
                contract!(weight.is_finite(), "truncated-linear weight must be finite");
                contract!(
                    truncation.is_finite() && *truncation >= 0.0,
                    "truncation point must be finite and non-negative"
                );
            }
        }
        Ok(())
    }
}

/// Checked pairwise evaluation.
pub fn pairwise_eval(spec: &Pairwise, labels: LabelSet, a: Label, b: Label) -> Result<f64> {
    contract!(labels.contains(a) && labels.contains(b), "labels ({a}, {b}) outside 0..{}", labels.size());
    Ok(spec.eval(a, b, labels.size()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub pairwise: Pairwise,
}

impl Edge {
    pub fn new(a: usize, b: usize, pairwise: Pairwise) -> Self {
        Edge { a, b, pairwise }
    }
}

/// One edge as seen from one of its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub other: usize,
    /// True when the viewing variable is the edge's first endpoint.
    pub first: bool,
}

/// A pairwise MRF: per-variable unary tables plus weighted edges, and a
/// constant offset that shifts every assignment's energy equally.
#[derive(Clone, Debug)]
pub struct LabeledMrf {
    labels: LabelSet,
    num_vars: usize,
    grid: Option<(usize, usize)>,
    unaries: Vec<f64>,
    edges: Vec<Edge>,
    offset: f64,
    adj_start: Vec<usize>,
    adj: Vec<Incidence>,
}

impl LabeledMrf {
    /// `unaries` is row-major: `unaries[i * |L| + l] = φ_i(l)`.
    pub fn new(labels: LabelSet, num_vars: usize, unaries: Vec<f64>, edges: Vec<Edge>) -> Result<Self> {
        let nl = labels.size();
        contract!(
            unaries.len() == num_vars * nl,
            "unary table has {} entries, expected {} x {}",
            unaries.len(),
            num_vars,
            nl
        );
        contract!(unaries.iter().all(|v| v.is_finite()), "unary table has a non-finite entry");
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            contract!(
                e.a < num_vars && e.b < num_vars,
                "edge {k} references ({}, {}) outside 0..{num_vars}",
                e.a,
                e.b
            );
            contract!(e.a != e.b, "edge {k} is a self-loop on {}", e.a);
            contract!(seen.insert((e.a.min(e.b), e.a.max(e.b))), "duplicate edge ({}, {})", e.a, e.b);
            e.pairwise.validate(nl)?;
        }

        let mut degree = vec![0usize; num_vars + 1];
        for e in &edges {
            degree[e.a + 1] += 1;
            degree[e.b + 1] += 1;
        }
        for i in 0..num_vars {
            degree[i + 1] += degree[i];
        }
        let adj_start = degree;
        let mut fill = adj_start.clone();
        let mut adj = vec![Incidence { edge: 0, other: 0, first: false }; 2 * edges.len()];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = Incidence { edge: k, other: e.b, first: true };
            fill[e.a] += 1;
            adj[fill[e.b]] = Incidence { edge: k, other: e.a, first: false };
            fill[e.b] += 1;
        }

        Ok(LabeledMrf { labels, num_vars, grid: None, unaries, edges, offset: 0.0, adj_start, adj })
    }

    /// Declares the variables to be a row-major `width x height` pixel grid.
    pub fn with_grid_dims(mut self, width: usize, height: usize) -> Result<Self> {
        contract!(
            width * height == self.num_vars,
            "grid {width}x{height} does not match {} variables",
            self.num_vars
        );
        self.grid = Some((width, height));
        Ok(self)
    }

    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        contract!(offset.is_finite(), "energy offset must be finite");
        self.offset = offset;
        Ok(self)
    }

    #[inline]
    pub fn labels(&self) -> LabelSet {
        self.labels
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        self.labels.size()
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        self.grid
    }

    #[inline]
    pub fn unary(&self, var: usize) -> &[f64] {
        let nl = self.labels.size();
        &self.unaries[var * nl..(var + 1) * nl]
    }

    pub fn unaries(&self) -> &[f64] {
        &self.unaries
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn incident(&self, var: usize) -> &[Incidence] {
        &self.adj[self.adj_start[var]..self.adj_start[var + 1]]
    }

    /// Value of edge `k` under labels for its first and second endpoint.
    #[inline]
    pub fn edge_energy(&self, k: usize, la: Label, lb: Label) -> f64 {
        self.edges[k].pairwise.eval(la, lb, self.labels.size())
    }

    pub fn check_assignment(&self, x: &[Label]) -> Result<()> {
        contract!(
            x.len() == self.num_vars,
            "assignment has {} entries, model has {} variables",
            x.len(),
            self.num_vars
        );
        if let Some((i, &l)) = x.iter().enumerate().find(|(_, &l)| !self.labels.contains(l)) {
            return Err(Error::Contract(format!("variable {i} has label {l} outside 0..{}", self.labels.size())));
        }
        Ok(())
    }

    /// Total energy: offset, then unaries in variable order, then edges in
    /// edge order.
    pub fn energy(&self, x: &[Label]) -> Result<f64> {
        self.check_assignment(x)?;
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[Label]) -> f64 {
        let nl = self.labels.size();
        let mut s = CompensatedSum::new();
        s.add(self.offset);
        for (i, &l) in x.iter().enumerate() {
            s.add(self.unaries[i * nl + l]);
        }
        for e in &self.edges {
            s.add(e.pairwise.eval(x[e.a], x[e.b], nl));
        }
        s.value()
    }

    /// Energy terms that involve `var` when it takes `label` and every other
    /// variable keeps its value in `x`.
    #[inline]
    pub fn local_energy(&self, var: usize, label: Label, x: &[Label]) -> f64 {
        let nl = self.labels.size();
        let mut e = self.unaries[var * nl + label];
        for inc in self.incident(var) {
            let pw = &self.edges[inc.edge].pairwise;
            e += if inc.first { pw.eval(label, x[inc.other], nl) } else { pw.eval(x[inc.other], label, nl) };
        }
        e
    }

    /// Same model with every table and the offset multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let unaries = self.unaries.iter().map(|v| v * c).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.a, e.b, e.pairwise.scaled(c)))
            .collect();
        let mut m = LabeledMrf::new(self.labels, self.num_vars, unaries, edges)?.with_offset(self.offset * c)?;
        m.grid = self.grid;
        Ok(m)
    }

    /// Exhaustive MAP with the default enumeration cap.
    pub fn brute_force_map(&self) -> Result<(Vec<Label>, f64)> {
        self.brute_force_map_capped(DEFAULT_ENUMERATION_CAP)
    }

    /// Exhaustive MAP; ties resolve to the lexicographically smallest
    /// assignment.
    pub fn brute_force_map_capped(&self, cap: u64) -> Result<(Vec<Label>, f64)> {
        let nl = self.labels.size() as u64;
        let mut count: u64 = 1;
        for _ in 0..self.num_vars {
            count = count.saturating_mul(nl);
            if count > cap {
                return Err(Error::Refused(format!(
                    "{}^{} assignments exceed the enumeration cap {cap}",
                    nl, self.num_vars
                )));
            }
        }
        let n = self.num_vars;
        let mut x = vec![0; n];
        let mut best = x.clone();
        let mut best_e = self.energy_unchecked(&x);
        // Odometer over the last position first gives lexicographic order, so
        // strict improvement keeps the smallest tied assignment.
        loop {
            let mut pos = n;
            loop {
                if pos == 0 {
                    return Ok((best, best_e));
                }
                pos -= 1;
                x[pos] += 1;
                if x[pos] < self.labels.size() {
                    break;
                }
                x[pos] = 0;
            }
            let e = self.energy_unchecked(&x);
            if e < best_e {
                best_e = e;
                best.copy_from_slice(&x);
            }
        }
    }
}

/// Free-function form of [`LabeledMrf::energy`].
pub fn energy(mrf: &LabeledMrf, x: &[Label]) -> Result<f64> {
    mrf.energy(x)
}

/// Free-function form of [`LabeledMrf::brute_force_map`].
pub fn brute_force_map(mrf: &LabeledMrf) -> Result<(Vec<Label>, f64)> {
    mrf.brute_force_map()
}

/// 4-connected edges of a row-major `width x height` grid: for each pixel in
/// scan order, its right neighbour then its lower neighbour.
pub fn grid_edges(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(2 * width * height);
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if x + 1 < width {
                out.push((i, i + 1));
            }
            if y + 1 < height {
                out.push((i, i + width));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_diff_table(nl: usize) -> Pairwise {
        let mut t = Vec::with_capacity(nl * nl);
        for a in 0..nl {
            for b in 0..nl {
                t.push(a.abs_diff(b) as f64);
            }
        }
        Pairwise::dense(t)
    }

    #[test]
    fn single_unary_energy() {
        let m = LabeledMrf::new(LabelSet::new(2).unwrap(), 1, vec![3.0, 5.0], vec![]).unwrap();
        assert_eq!(m.energy(&[0]).unwrap(), 3.0);
    }

    #[test]
    fn two_variable_chain_energy() {
        let m = LabeledMrf::new(
            LabelSet::new(2).unwrap(),
            2,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![Edge::new(0, 1, abs_diff_table(2))],
        )
        .unwrap();
        assert_eq!(m.energy(&[0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn energy_rejects_bad_assignments() {
        let m = LabeledMrf::new(LabelSet::new(2).unwrap(), 2, vec![0.0; 4], vec![]).unwrap();
        assert!(matches!(m.energy(&[0]), Err(Error::Contract(_))));
        assert!(matches!(m.energy(&[0, 2]), Err(Error::Contract(_))));
    }

    #[test]
    fn construction_rejects_invalid_models() {
        let l = LabelSet::new(2).unwrap();
        assert!(LabeledMrf::new(l, 2, vec![0.0; 3], vec![]).is_err());
        assert!(LabeledMrf::new(l, 2, vec![0.0, f64::NAN, 0.0, 0.0], vec![]).is_err());
        assert!(LabeledMrf::new(l, 2, vec![0.0; 4], vec![Edge::new(0, 0, Pairwise::potts(1.0))]).is_err());
        assert!(LabeledMrf::new(l, 2, vec![0.0; 4], vec![Edge::new(0, 2, Pairwise::potts(1.0))]).is_err());
        let dup = vec![Edge::new(0, 1, Pairwise::potts(1.0)), Edge::new(1, 0, Pairwise::potts(1.0))];
        assert!(LabeledMrf::new(l, 2, vec![0.0; 4], dup).is_err());
        let short = vec![Edge::new(0, 1, Pairwise::dense(vec![0.0; 3]))];
        assert!(LabeledMrf::new(l, 2, vec![0.0; 4], short).is_err());
        assert!(LabelSet::new(0).is_err());
    }

    #[test]
    fn truncated_linear_eval() {
        let l = LabelSet::new(6).unwrap();
        let pw = Pairwise::truncated_linear(2.0, 3.0);
        assert_eq!(pairwise_eval(&pw, l, 0, 5).unwrap(), 6.0);
        assert_eq!(pairwise_eval(&pw, l, 4, 4).unwrap(), 0.0);
        assert!(pairwise_eval(&pw, l, 0, 6).is_err());
    }

    #[test]
    fn dense_eval_reads_back_table() {
        let table: Vec<f64> = (0..16).map(|v| (v * 7 % 11) as f64 - 3.5).collect();
        let pw = Pairwise::dense(table.clone());
        let l = LabelSet::new(4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(pairwise_eval(&pw, l, a, b).unwrap(), table[a * 4 + b]);
            }
        }
        assert!(!pw.is_symmetric(4));
        let t = pw.transposed(4);
        assert_eq!(t.eval(1, 2, 4), pw.eval(2, 1, 4));
    }

    #[test]
    fn brute_force_single_variable() {
        let m = LabeledMrf::new(LabelSet::new(2).unwrap(), 1, vec![3.0, 5.0], vec![]).unwrap();
        assert_eq!(m.brute_force_map().unwrap(), (vec![0], 3.0));
    }

    #[test]
    fn brute_force_homophily_dominates() {
        // Variable 0 prefers label 0 by 3, variable 1 prefers label 1 by 2;
        // a strong Potts edge forces agreement on the stronger preference.
        let m = LabeledMrf::new(
            LabelSet::new(2).unwrap(),
            2,
            vec![0.0, 3.0, 2.0, 0.0],
            vec![Edge::new(0, 1, Pairwise::potts(10.0))],
        )
        .unwrap();
        assert_eq!(m.brute_force_map().unwrap(), (vec![0, 0], 2.0));
    }

    #[test]
    fn brute_force_ties_pick_lexicographic_smallest() {
        let m = LabeledMrf::new(LabelSet::new(3).unwrap(), 2, vec![0.0; 6], vec![]).unwrap();
        assert_eq!(m.brute_force_map().unwrap().0, vec![0, 0]);
    }

    #[test]
    fn brute_force_refuses_above_cap() {
        let m = LabeledMrf::new(LabelSet::new(2).unwrap(), 30, vec![0.0; 60], vec![]).unwrap();
        match m.brute_force_map() {
            Err(Error::Refused(msg)) => assert!(msg.contains(&DEFAULT_ENUMERATION_CAP.to_string())),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn grid_edges_are_four_connected() {
        let e = grid_edges(3, 2);
        assert_eq!(e, vec![(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
    }

    #[test]
    fn incidence_lists_cover_both_endpoints() {
        let edges = grid_edges(2, 2).into_iter().map(|(a, b)| Edge::new(a, b, Pairwise::potts(1.0))).collect();
        let m = LabeledMrf::new(LabelSet::new(2).unwrap(), 4, vec![0.0; 8], edges).unwrap();
        assert_eq!(m.incident(0).len(), 2);
        assert_eq!(m.incident(3).len(), 2);
        let x = [0, 1, 1, 0];
        let direct = m.energy(&x).unwrap();
        let flipped = [1, 1, 1, 0];
        let delta = m.local_energy(0, 1, &x) - m.local_energy(0, 0, &x);
        assert!((m.energy(&flipped).unwrap() - direct - delta).abs() < 1e-12);
    }
}
