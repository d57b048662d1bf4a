//! Partitions of variables into lifted elements, reduced models over them,
//! and assignment hand-off between nested partitions.

use rustc_hash::FxHashMap;
use std::fmt::Write as _;

use crate::error::{contract, Error, Result};
use crate::mrf::{Edge, Label, LabeledMrf, Pairwise};
use crate::numeric::CompensatedSum;

/// A disjoint cover of `0..num_vars`.
///
/// Element ids are canonical: numbered in order of each element's smallest
/// member, so two equal partitions compare equal field by field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    element_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Partition {
    /// Groups variables sharing a key; keys can be any integers.
    pub fn from_keys<K: std::hash::Hash + Eq + Copy>(keys: &[K]) -> Self {
        let mut ids: FxHashMap<K, usize> = FxHashMap::default();
        let mut element_of = Vec::with_capacity(keys.len());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let next = ids.len();
            let id = *ids.entry(*k).or_insert(next);
            if id == members.len() {
                members.push(Vec::new());
            }
            members[id].push(i);
            element_of.push(id);
        }
        Partition { element_of, members }
    }

    /// Every variable in its own element (the finest partition).
    pub fn degenerate(num_vars: usize) -> Self {
        Partition { element_of: (0..num_vars).collect(), members: (0..num_vars).map(|i| vec![i]).collect() }
    }

    /// One element holding every variable (the coarsest partition).
    pub fn single(num_vars: usize) -> Self {
        let members = if num_vars == 0 { vec![] } else { vec![(0..num_vars).collect()] };
        Partition { element_of: vec![0; num_vars], members }
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.element_of.len()
    }

    #[inline]
    pub fn num_elements(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn element_of(&self, var: usize) -> usize {
        self.element_of[var]
    }

    pub fn element_ids(&self) -> &[usize] {
        &self.element_of
    }

    pub fn members(&self, element: usize) -> &[usize] {
        &self.members[element]
    }

    pub fn is_degenerate(&self) -> bool {
        self.members.len() == self.element_of.len()
    }

    /// `self ⪯ finer`: every element of `finer` lies inside one element of
    /// `self`.
    pub fn is_coarser(&self, finer: &Partition) -> Result<bool> {
        contract!(
            self.num_vars() == finer.num_vars(),
            "partitions cover {} and {} variables",
            self.num_vars(),
            finer.num_vars()
        );
        Ok(self.containing_elements(finer).is_some())
    }

    fn containing_elements(&self, finer: &Partition) -> Option<Vec<usize>> {
        let mut host = vec![usize::MAX; finer.num_elements()];
        for (i, &f) in finer.element_of.iter().enumerate() {
            let c = self.element_of[i];
            if host[f] == usize::MAX {
                host[f] = c;
            } else if host[f] != c {
                return None;
            }
        }
        Some(host)
    }

    /// Elements sorted by decreasing size, ties by element id.
    pub fn elements_by_size(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.num_elements()).collect();
        ids.sort_by(|&a, &b| self.members[b].len().cmp(&self.members[a].len()).then(a.cmp(&b)));
        ids
    }

    /// One `var_index element_id` line per variable.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.num_vars() * 8);
        for (i, e) in self.element_of.iter().enumerate() {
            let _ = writeln!(s, "{i} {e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut keys = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize> {
                s.and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("partition line {}: expected `var element`", n + 1)))
            };
            let var = parse(it.next())?;
            let elem = parse(it.next())?;
            if var != keys.len() {
                return Err(Error::Parse(format!("partition line {}: variable {var} out of order", n + 1)));
            }
            keys.push(elem);
        }
        Ok(Partition::from_keys(&keys))
    }

    /// `size,count` rows of the element-size histogram, ascending by size.
    pub fn size_histogram_csv(&self) -> String {
        let mut counts = std::collections::BTreeMap::new();
        for m in &self.members {
            *counts.entry(m.len()).or_insert(0usize) += 1;
        }
        let mut s = String::from("size,count\n");
        for (size, count) in counts {
            let _ = writeln!(s, "{size},{count}");
        }
        s
    }
}

/// For nested partitions `coarse ⪯ fine`, the partition of `fine`'s elements
/// whose groups are `coarse`'s elements: entry `f` is the id of the coarse
/// element containing fine element `f`.
pub fn restrict_partition(coarse: &Partition, fine: &Partition) -> Result<Partition> {
    contract!(
        coarse.num_vars() == fine.num_vars(),
        "partitions cover {} and {} variables",
        coarse.num_vars(),
        fine.num_vars()
    );
    let host = coarse
        .containing_elements(fine)
        .ok_or_else(|| Error::Contract("first partition is not coarser than the second".into()))?;
    let p = Partition::from_keys(&host);
    debug_assert_eq!(p.element_ids(), &host[..]);
    Ok(p)
}

/// Hands a coarse-level assignment to the finer level: every fine element
/// takes the label of the coarse element containing it.
pub fn lift_assignment(coarse: &Partition, fine: &Partition, y: &[Label]) -> Result<Vec<Label>> {
    contract!(
        y.len() == coarse.num_elements(),
        "assignment has {} entries, coarse partition has {} elements",
        y.len(),
        coarse.num_elements()
    );
    let map = restrict_partition(coarse, fine)?;
    Ok(map.element_ids().iter().map(|&c| y[c]).collect())
}

/// `x_i = y_{part(i)}`.
pub fn expand(p: &Partition, y: &[Label]) -> Result<Vec<Label>> {
    contract!(
        y.len() == p.num_elements(),
        "assignment has {} entries, partition has {} elements",
        y.len(),
        p.num_elements()
    );
    Ok(p.element_of.iter().map(|&e| y[e]).collect())
}

/// Reduced model over a partition's elements.
///
/// Lifted unaries hold the summed member unaries plus the diagonal of every
/// edge inside the element; each pair of elements joined by base edges gets
/// one lifted edge whose table is the sum of those edges' tables.
#[derive(Clone, Debug)]
pub struct ReducedMrf {
    partition: Partition,
    model: LabeledMrf,
}

impl ReducedMrf {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// The reduced model as a plain MRF over element variables.
    pub fn model(&self) -> &LabeledMrf {
        &self.model
    }

    pub fn into_parts(self) -> (Partition, LabeledMrf) {
        (self.partition, self.model)
    }

    pub fn lifted_unary(&self, element: usize) -> &[f64] {
        self.model.unary(element)
    }

    pub fn energy(&self, y: &[Label]) -> Result<f64> {
        self.model.energy(y)
    }
}

enum LiftedTable {
    /// Every constituent edge is truncated-linear with this truncation.
    Linear { truncation: f64, weight: CompensatedSum },
    Dense(Vec<CompensatedSum>),
}

impl LiftedTable {
    fn densify(&mut self, nl: usize) {
        if let LiftedTable::Linear { truncation, weight } = self {
            let pw = Pairwise::truncated_linear(weight.value(), *truncation);
            let table = (0..nl * nl).map(|k| std::iter::once(pw.eval(k / nl, k % nl, nl)).collect()).collect();
            *self = LiftedTable::Dense(table);
        }
    }

    fn add(&mut self, pw: &Pairwise, transpose: bool, nl: usize) {
        if let (LiftedTable::Linear { truncation, weight }, Pairwise::TruncatedLinear { weight: w, truncation: t }) =
            (&mut *self, pw)
        {
            if t == truncation {
                weight.add(*w);
                return;
            }
        }
        self.densify(nl);
        let LiftedTable::Dense(acc) = self else { unreachable!() };
        for a in 0..nl {
            for b in 0..nl {
                let v = if transpose { pw.eval(b, a, nl) } else { pw.eval(a, b, nl) };
                acc[a * nl + b].add(v);
            }
        }
    }

    fn finish(self) -> Pairwise {
        match self {
            LiftedTable::Linear { truncation, weight } => Pairwise::truncated_linear(weight.value(), truncation),
            LiftedTable::Dense(acc) => Pairwise::dense(acc.iter().map(|s| s.value()).collect()),
        }
    }
}

/// Builds the reduced model of `mrf` over partition `p`.
///
/// Truncated-linear edges sharing a truncation point aggregate into a single
/// truncated-linear form with summed weight; anything else densifies.
pub fn build_reduced(mrf: &LabeledMrf, p: &Partition) -> Result<ReducedMrf> {
    contract!(
        p.num_vars() == mrf.num_vars(),
        "partition covers {} variables, model has {}",
        p.num_vars(),
        mrf.num_vars()
    );
    let nl = mrf.num_labels();
    let r = p.num_elements();

    let mut unary: Vec<CompensatedSum> = vec![CompensatedSum::new(); r * nl];
    for i in 0..mrf.num_vars() {
        let k = p.element_of(i);
        for (l, &v) in mrf.unary(i).iter().enumerate() {
            unary[k * nl + l].add(v);
        }
    }

    let mut pair_index: FxHashMap<(u32, u32), usize> = FxHashMap::default();
    let mut pairs: Vec<((usize, usize), LiftedTable)> = Vec::new();
    for e in mrf.edges() {
        let (ka, kb) = (p.element_of(e.a), p.element_of(e.b));
        if ka == kb {
            // Truncated-linear terms vanish on the diagonal.
            if let Pairwise::Dense(_) = e.pairwise {
                for l in 0..nl {
                    unary[ka * nl + l].add(e.pairwise.eval(l, l, nl));
                }
            }
            continue;
        }
        let (key, transpose) = if ka < kb { ((ka, kb), false) } else { ((kb, ka), true) };
        let idx = *pair_index.entry((key.0 as u32, key.1 as u32)).or_insert_with(|| {
            let init = match &e.pairwise {
                Pairwise::TruncatedLinear { truncation, .. } => {
                    LiftedTable::Linear { truncation: *truncation, weight: CompensatedSum::new() }
                }
                Pairwise::Dense(_) => LiftedTable::Dense(vec![CompensatedSum::new(); nl * nl]),
            };
            pairs.push((key, init));
            pairs.len() - 1
        });
        pairs[idx].1.add(&e.pairwise, transpose, nl);
    }

    let unaries = unary.iter().map(|s| s.value()).collect();
    let edges = pairs.into_iter().map(|((a, b), t)| Edge::new(a, b, t.finish())).collect();
    let model = LabeledMrf::new(mrf.labels(), r, unaries, edges)?.with_offset(mrf.offset())?;
    Ok(ReducedMrf { partition: p.clone(), model })
}

/// Energy of a partition assignment in the reduced model.
pub fn reduced_energy(rm: &ReducedMrf, y: &[Label]) -> Result<f64> {
    rm.energy(y)
}
