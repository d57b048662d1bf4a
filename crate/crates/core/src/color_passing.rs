//! Approximate-symmetry partitions by color passing over the bipartite
//! variable/potential graph, with unary nodes initialised by the order of
//! their lowest-energy labels.
//!
//! A state is an immutable snapshot; [`color_passing_round`] and
//! [`split_by_next_label`] derive finer states from it. `CP(N_L, N_iter)` is
//! the variable partition of a state reached with split threshold `N_L`
//! after `N_iter` rounds.

use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{contract, Error, Result};
use crate::mrf::{LabeledMrf, Pairwise};
use crate::partition::Partition;

/// The `depth` lowest-energy labels of every variable, in increasing
/// energy with ties broken by label.
#[derive(Debug)]
struct LabelOrders {
    depth: usize,
    order: Vec<u32>,
}

impl LabelOrders {
    fn new(mrf: &LabeledMrf, depth: usize) -> Self {
        let nl = mrf.num_labels();
        let depth = depth.min(nl);
        let mut order = Vec::with_capacity(mrf.num_vars() * depth);
        let mut top: Vec<u32> = Vec::with_capacity(depth + 1);
        for i in 0..mrf.num_vars() {
            let u = mrf.unary(i);
            top.clear();
            for (l, &v) in u.iter().enumerate() {
                if top.len() == depth {
                    if v >= u[top[depth - 1] as usize] {
                        continue;
                    }
                    top.pop();
                }
                // Insertion step; equal energies keep the lower label first.
                top.push(l as u32);
                let mut j = top.len() - 1;
                while j > 0 && u[top[j - 1] as usize] > v {
                    top.swap(j - 1, j);
                    j -= 1;
                }
            }
            order.extend_from_slice(&top);
        }
        LabelOrders { depth, order }
    }

    #[inline]
    fn top(&self, var: usize, n: usize) -> &[u32] {
        let start = var * self.depth;
        &self.order[start..start + n]
    }

    #[inline]
    fn at_rank(&self, var: usize, rank: usize) -> u32 {
        self.order[var * self.depth + rank]
    }
}

/// The `N_L` lowest-energy labels of one unary table, in increasing energy.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnarySignature(pub Vec<usize>);

impl UnarySignature {
    pub fn of(unary: &[f64], split_threshold: usize) -> Result<Self> {
        contract!(
            (1..=unary.len()).contains(&split_threshold),
            "split threshold {split_threshold} outside 1..={}",
            unary.len()
        );
        let mut idx: Vec<usize> = (0..unary.len()).collect();
        idx.sort_by(|&a, &b| unary[a].total_cmp(&unary[b]).then(a.cmp(&b)));
        idx.truncate(split_threshold);
        Ok(UnarySignature(idx))
    }
}

#[derive(Clone, Debug)]
pub struct ColorPassingState {
    var_colors: Vec<u32>,
    unary_colors: Vec<u32>,
    pairwise_colors: Vec<u32>,
    split_threshold: usize,
    iterations: usize,
    orders: Arc<LabelOrders>,
    symmetric: Arc<Vec<bool>>,
}

/// Assigns dense ids to keys in first-seen order.
struct Densifier<K> {
    ids: FxHashMap<K, u32>,
}

impl<K: std::hash::Hash + Eq> Densifier<K> {
    fn new() -> Self {
        Densifier { ids: FxHashMap::default() }
    }

    fn id(&mut self, key: K) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(key).or_insert(next)
    }
}

impl Densifier<Vec<u32>> {
    fn id_of_slice(&mut self, key: &[u32]) -> u32 {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let next = self.ids.len() as u32;
        self.ids.insert(key.to_vec(), next);
        next
    }
}

#[derive(PartialEq, Eq, Hash)]
enum PairwiseKey {
    Linear(u64, u64),
    Dense(Vec<u64>),
}

fn pairwise_key(pw: &Pairwise) -> PairwiseKey {
    // Adding 0.0 folds -0.0 onto 0.0 so equal values hash equally.
    match pw {
        Pairwise::TruncatedLinear { weight, truncation } => {
            PairwiseKey::Linear((weight + 0.0).to_bits(), (truncation + 0.0).to_bits())
        }
        Pairwise::Dense(t) => PairwiseKey::Dense(t.iter().map(|v| (v + 0.0).to_bits()).collect()),
    }
}

impl ColorPassingState {
    pub fn var_colors(&self) -> &[u32] {
        &self.var_colors
    }

    pub fn unary_colors(&self) -> &[u32] {
        &self.unary_colors
    }

    pub fn pairwise_colors(&self) -> &[u32] {
        &self.pairwise_colors
    }

    /// Current `N_L`.
    pub fn split_threshold(&self) -> usize {
        self.split_threshold
    }

    /// Rounds executed so far (`N_iter`).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn num_var_colors(&self) -> usize {
        self.var_colors.iter().max().map_or(0, |&c| c as usize + 1)
    }

    pub fn partition(&self) -> Partition {
        partition_from_colors(self)
    }

    fn check_model(&self, mrf: &LabeledMrf) -> Result<()> {
        contract!(
            self.var_colors.len() == mrf.num_vars() && self.pairwise_colors.len() == mrf.edges().len(),
            "color state does not match the model's variables and edges"
        );
        Ok(())
    }

    /// Applies splits then rounds until the state sits at
    /// `CP(split_threshold, iterations)`.
    pub fn advance_to(&self, mrf: &LabeledMrf, split_threshold: usize, iterations: usize) -> Result<Self> {
        contract!(
            split_threshold >= self.split_threshold && iterations >= self.iterations,
            "cannot move from CP({}, {}) back to CP({split_threshold}, {iterations})",
            self.split_threshold,
            self.iterations
        );
        let mut s = self.clone();
        while s.split_threshold < split_threshold {
            s = split_by_next_label(&s, mrf)?;
        }
        while s.iterations < iterations {
            s = color_passing_round(&s, mrf)?;
        }
        Ok(s)
    }
}

/// Initial coloring: one shared variable color; unary nodes grouped by their
/// top-`N_L` label order; pairwise nodes grouped by exactly equal potentials.
pub fn init_colors(mrf: &LabeledMrf, split_threshold: usize) -> Result<ColorPassingState> {
    contract!(
        (1..=mrf.num_labels()).contains(&split_threshold),
        "split threshold {split_threshold} outside 1..={}",
        mrf.num_labels()
    );
    let orders = LabelOrders::new(mrf, split_threshold + 1);
    let mut unary_ids = Densifier::new();
    let unary_colors = (0..mrf.num_vars()).map(|i| unary_ids.id(orders.top(i, split_threshold))).collect();
    let mut pw_ids = Densifier::new();
    let pairwise_colors = mrf.edges().iter().map(|e| pw_ids.id(pairwise_key(&e.pairwise))).collect();
    let nl = mrf.num_labels();
    let symmetric = mrf.edges().iter().map(|e| e.pairwise.is_symmetric(nl)).collect();
    Ok(ColorPassingState {
        var_colors: vec![0; mrf.num_vars()],
        unary_colors,
        pairwise_colors,
        split_threshold,
        iterations: 0,
        orders: Arc::new(orders),
        symmetric: Arc::new(symmetric),
    })
}

/// One synchronous round. Potential nodes recolor by their own color plus the
/// colors of their variables (argument order kept only for asymmetric
/// tables); variables recolor by their own color plus the multiset of
/// (potential color, argument slot) they receive.
pub fn color_passing_round(state: &ColorPassingState, mrf: &LabeledMrf) -> Result<ColorPassingState> {
    state.check_model(mrf)?;
    let vc = &state.var_colors;

    let mut unary_ids = Densifier::new();
    let unary_colors: Vec<u32> =
        (0..mrf.num_vars()).map(|i| unary_ids.id((state.unary_colors[i], vc[i]))).collect();

    let mut pw_ids = Densifier::new();
    let pairwise_colors: Vec<u32> = mrf
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (ca, cb) = (vc[e.a], vc[e.b]);
            let (ca, cb) = if state.symmetric[k] { (ca.min(cb), ca.max(cb)) } else { (ca, cb) };
            pw_ids.id((state.pairwise_colors[k], ca, cb))
        })
        .collect();

    let mut var_ids = Densifier::new();
    let mut key: Vec<u32> = Vec::new();
    let var_colors = (0..mrf.num_vars())
        .map(|i| {
            key.clear();
            key.push(vc[i]);
            key.push(unary_colors[i]);
            for inc in mrf.incident(i) {
                let slot = if state.symmetric[inc.edge] || inc.first { 0 } else { 1 };
                key.push(pairwise_colors[inc.edge] * 2 + slot);
            }
            key[2..].sort_unstable();
            var_ids.id_of_slice(&key)
        })
        .collect();

    Ok(ColorPassingState {
        var_colors,
        unary_colors,
        pairwise_colors,
        split_threshold: state.split_threshold,
        iterations: state.iterations + 1,
        orders: Arc::clone(&state.orders),
        symmetric: Arc::clone(&state.symmetric),
    })
}

/// Raises `N_L` by one and splits every variable group (and unary color
/// group) by its members' `N_L`-th lowest-energy label.
pub fn split_by_next_label(state: &ColorPassingState, mrf: &LabeledMrf) -> Result<ColorPassingState> {
    state.check_model(mrf)?;
    if state.split_threshold >= mrf.num_labels() {
        return Err(Error::Refused(format!(
            "split threshold already at |L| = {}",
            mrf.num_labels()
        )));
    }
    let rank = state.split_threshold;
    let orders = if rank < state.orders.depth {
        Arc::clone(&state.orders)
    } else {
        Arc::new(LabelOrders::new(mrf, rank + 2))
    };
    let mut var_ids = Densifier::new();
    let var_colors = (0..mrf.num_vars()).map(|i| var_ids.id((state.var_colors[i], orders.at_rank(i, rank)))).collect();
    let mut unary_ids = Densifier::new();
    let unary_colors =
        (0..mrf.num_vars()).map(|i| unary_ids.id((state.unary_colors[i], orders.at_rank(i, rank)))).collect();
    Ok(ColorPassingState {
        var_colors,
        unary_colors,
        pairwise_colors: state.pairwise_colors.clone(),
        split_threshold: rank + 1,
        iterations: state.iterations,
        orders,
        symmetric: Arc::clone(&state.symmetric),
    })
}

pub fn partition_from_colors(state: &ColorPassingState) -> Partition {
    Partition::from_keys(&state.var_colors)
}

/// `CP(N_L, N_iter)` from a fresh initialisation.
pub fn cp(mrf: &LabeledMrf, split_threshold: usize, iterations: usize) -> Result<Partition> {
    let mut s = init_colors(mrf, split_threshold)?;
    for _ in 0..iterations {
        s = color_passing_round(&s, mrf)?;
    }
    Ok(s.partition())
}

/// Runs rounds until the variable partition stops changing, at most
/// `max_rounds` times. Returns the state and the number of rounds it took.
pub fn run_to_fixed_point(
    mrf: &LabeledMrf,
    mut state: ColorPassingState,
    max_rounds: usize,
) -> Result<(ColorPassingState, usize)> {
    for r in 0..max_rounds {
        let next = color_passing_round(&state, mrf)?;
        if next.num_var_colors() == state.num_var_colors() {
            return Ok((next, r + 1));
        }
        state = next;
    }
    Ok((state, max_rounds))
}

#[inline]
fn l1_distance_below(a: &[f64], b: &[f64], threshold: f64) -> bool {
    let mut d = 0.0;
    for (x, y) in a.iter().zip(b) {
        d += (x - y).abs();
        if d >= threshold {
            return false;
        }
    }
    d < threshold
}

/// Greedy clustering of unary tables: variables in index order join the
/// earliest cluster whose first member lies at L1 distance `< threshold`,
/// otherwise they open a new cluster.
pub fn threshold_partition(mrf: &LabeledMrf, threshold: f64) -> Result<Partition> {
    contract!(threshold >= 0.0, "threshold must be non-negative, got {threshold}");
    let n = mrf.num_vars();
    let sums: Vec<f64> = (0..n).map(|i| mrf.unary(i).iter().sum()).collect();
    // |Σa − Σb| ≤ ‖a − b‖₁, so only clusters whose representative sum lies
    // within `threshold` can match. `by_sum` holds (sum, cluster) sorted.
    let mut reps: Vec<usize> = Vec::new();
    let mut by_sum: Vec<(f64, usize)> = Vec::new();
    let mut keys = Vec::with_capacity(n);
    for (i, &s) in sums.iter().enumerate() {
        let lo = by_sum.partition_point(|&(v, _)| v <= s - threshold);
        let mut best = usize::MAX;
        for &(v, c) in &by_sum[lo..] {
            if v >= s + threshold {
                break;
            }
            if c < best && l1_distance_below(mrf.unary(reps[c]), mrf.unary(i), threshold) {
                best = c;
            }
        }
        if best == usize::MAX {
            best = reps.len();
            reps.push(i);
            let at = by_sum.partition_point(|&(v, c)| (v, c) < (s, best));
            by_sum.insert(at, (s, best));
        }
        keys.push(best);
    }
    Ok(Partition::from_keys(&keys))
}

/// Bisection over the threshold for a partition with about `target`
/// elements. Stops once within `rel_tolerance` of the target; otherwise
/// returns the closest partition seen.
pub fn match_threshold(
    mrf: &LabeledMrf,
    target: usize,
    rel_tolerance: f64,
) -> Result<(f64, Partition)> {
    contract!(target >= 1, "target element count must be positive");
    let within = |count: usize| (count as f64 - target as f64).abs() <= rel_tolerance * target as f64;
    let mut hi = (0..mrf.num_vars())
        .map(|i| mrf.unary(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 2.0
        + 1.0;
    let mut lo = 0.0;
    let mut best: Option<(usize, f64, Partition)> = None;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let p = threshold_partition(mrf, mid)?;
        let count = p.num_elements();
        let gap = count.abs_diff(target);
        if best.as_ref().is_none_or(|(g, _, _)| gap < *g) {
            best = Some((gap, mid, p));
        }
        if within(count) {
            break;
        }
        if count > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, thr, p) = best.expect("at least one bisection step");
    Ok((thr, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrf::{Edge, LabelSet};

    fn mrf(unaries: Vec<f64>, nl: usize, edges: Vec<Edge>) -> LabeledMrf {
        let n = unaries.len() / nl;
        LabeledMrf::new(LabelSet::new(nl).unwrap(), n, unaries, edges).unwrap()
    }

    #[test]
    fn same_order_shares_color() {
        let m = mrf(vec![1.0, 2.0, 3.0, 5.0, 6.0, 7.0], 3, vec![]);
        let s = init_colors(&m, 2).unwrap();
        assert_eq!(s.unary_colors()[0], s.unary_colors()[1]);
    }

    #[test]
    fn different_argmin_splits() {
        let m = mrf(vec![1.0, 2.0, 3.0, 2.0, 1.0, 3.0], 3, vec![]);
        let s = init_colors(&m, 1).unwrap();
        assert_ne!(s.unary_colors()[0], s.unary_colors()[1]);
    }

    #[test]
    fn split_appears_at_second_label() {
        let m = mrf(vec![1.0, 2.0, 3.0, 1.0, 3.0, 2.0], 3, vec![]);
        let s1 = init_colors(&m, 1).unwrap();
        assert_eq!(s1.unary_colors()[0], s1.unary_colors()[1]);
        let s2 = init_colors(&m, 2).unwrap();
        assert_ne!(s2.unary_colors()[0], s2.unary_colors()[1]);
    }

    #[test]
    fn init_rejects_bad_threshold() {
        let m = mrf(vec![0.0; 3], 3, vec![]);
        assert!(init_colors(&m, 0).is_err());
        assert!(init_colors(&m, 4).is_err());
        let s = init_colors(&m, 3).unwrap();
        assert!(matches!(split_by_next_label(&s, &m), Err(Error::Refused(_))));
    }

    #[test]
    fn unary_signature_breaks_ties_by_label() {
        assert_eq!(UnarySignature::of(&[2.0, 1.0, 1.0], 3).unwrap().0, vec![1, 2, 0]);
    }

    /// 4-cycle 0-1-2-3-0 with label-0-preferring unaries on 0 and 2 and
    /// label-1-preferring unaries on 1 and 3.
    fn four_cycle() -> LabeledMrf {
        let a = [0.0, 1.0];
        let b = [1.0, 0.0];
        let unaries = [a, b, a, b].concat();
        let edges = vec![
            Edge::new(0, 1, Pairwise::potts(1.0)),
            Edge::new(1, 2, Pairwise::potts(1.0)),
            Edge::new(2, 3, Pairwise::potts(1.0)),
            Edge::new(3, 0, Pairwise::potts(1.0)),
        ];
        mrf(unaries, 2, edges)
    }

    #[test]
    fn four_cycle_diagonals_pair_up() {
        // After one round, variable signatures are (0, unary color, {potts×2}),
        // so exactly the diagonal pairs {0,2} and {1,3} share colors.
        let m = four_cycle();
        let s = color_passing_round(&init_colors(&m, 1).unwrap(), &m).unwrap();
        let p = partition_from_colors(&s);
        assert_eq!(p.num_elements(), 2);
        assert_eq!(p.element_ids(), &[0, 1, 0, 1]);
    }

    #[test]
    fn symmetric_torus_is_a_fixed_point() {
        // 3x3 grid with wraparound, uniform unaries and edges.
        let w = 3;
        let mut edges = Vec::new();
        for y in 0..w {
            for x in 0..w {
                let i = y * w + x;
                edges.push(Edge::new(i, y * w + (x + 1) % w, Pairwise::potts(1.0)));
                edges.push(Edge::new(i, ((y + 1) % w) * w + x, Pairwise::potts(1.0)));
            }
        }
        let m = mrf(vec![0.5; 18], 2, edges);
        let mut s = init_colors(&m, 2).unwrap();
        for _ in 0..5 {
            s = color_passing_round(&s, &m).unwrap();
            assert_eq!(s.num_var_colors(), 1);
        }
    }

    #[test]
    fn different_unary_colors_never_merge() {
        let m = four_cycle();
        let mut s = color_passing_round(&init_colors(&m, 1).unwrap(), &m).unwrap();
        for _ in 0..4 {
            s = color_passing_round(&s, &m).unwrap();
            assert_ne!(s.var_colors()[0], s.var_colors()[1]);
        }
    }

    #[test]
    fn partition_from_uniform_and_distinct_colors() {
        let m = mrf(vec![0.0; 10], 2, vec![]);
        let s = init_colors(&m, 1).unwrap();
        assert_eq!(partition_from_colors(&s).num_elements(), 1);
        // All distinct orderings over 3 labels for 3 variables.
        let m = mrf(vec![0.0, 1.0, 2.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0], 3, vec![]);
        assert!(cp(&m, 3, 4).unwrap().is_degenerate());
    }

    #[test]
    fn cp_zero_rounds_is_single_element() {
        let m = mrf(vec![0.0, 1.0, 0.0, 3.0, 0.0, 2.0], 2, vec![]);
        assert_eq!(cp(&m, 1, 0).unwrap().num_elements(), 1);
    }

    #[test]
    fn split_by_second_label() {
        // Shared argmin 0; second-best labels 1, 1, 2.
        let m = mrf(vec![0.0, 1.0, 2.0, 0.0, 1.0, 3.0, 0.0, 3.0, 1.0], 3, vec![]);
        let s = init_colors(&m, 1).unwrap();
        let s = color_passing_round(&s, &m).unwrap();
        assert_eq!(s.num_var_colors(), 1);
        let s = split_by_next_label(&s, &m).unwrap();
        assert_eq!(s.split_threshold(), 2);
        assert_eq!(partition_from_colors(&s).element_ids(), &[0, 0, 1]);
        // Members sharing the full order never split.
        let m = mrf(vec![0.0, 1.0, 2.0, 0.0, 1.5, 3.0], 3, vec![]);
        let s = split_by_next_label(&init_colors(&m, 1).unwrap(), &m).unwrap();
        let s = split_by_next_label(&s, &m).unwrap();
        assert_eq!(s.num_var_colors(), 1);
    }

    #[test]
    fn advance_rejects_going_backwards() {
        let m = four_cycle();
        let s = init_colors(&m, 2).unwrap();
        assert!(s.advance_to(&m, 1, 0).is_err());
        let s = s.advance_to(&m, 2, 3).unwrap();
        assert_eq!((s.split_threshold(), s.iterations()), (2, 3));
    }

    #[test]
    fn threshold_extremes() {
        let m = mrf(vec![0.0, 1.0, 0.0, 1.0, 5.0, 0.0], 2, vec![]);
        assert!(threshold_partition(&m, 0.0).unwrap().is_degenerate());
        assert_eq!(threshold_partition(&m, f64::INFINITY).unwrap().num_elements(), 1);
        // Identical tables merge at any positive threshold.
        assert_eq!(threshold_partition(&m, 1e-9).unwrap().element_ids(), &[0, 0, 1]);
        assert!(threshold_partition(&m, -1.0).is_err());
    }

    #[test]
    fn threshold_joins_earliest_cluster() {
        // Var 2 lies within 3.0 of both representatives and is nearer to
        // cluster 1, yet joins cluster 0.
        let m = mrf(vec![0.0, 0.0, 2.0, 2.0, 1.2, 1.2], 2, vec![]);
        assert_eq!(threshold_partition(&m, 3.0).unwrap().element_ids(), &[0, 1, 0]);
        assert_eq!(threshold_partition(&m, 2.0).unwrap().element_ids(), &[0, 1, 1]);
        assert_eq!(threshold_partition(&m, 1.0).unwrap().element_ids(), &[0, 1, 2]);
    }
}
