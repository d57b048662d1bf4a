use std::time::Instant;

use super::maxflow::{max_flow, FlowNetwork};
use super::{expired, CountUnit, LevelOutcome, NoImprove, SolveReport, StopReason, StoppingCriteria};
use crate::error::Result;
use crate::mrf::{Label, LabeledMrf};
use crate::trace::{AnytimeTrace, TraceEvent};

const NOT_A_NODE: u32 = u32::MAX;

/// Scratch buffers reused across expansion moves on models of similar size.
#[derive(Clone, Debug, Default)]
pub struct ExpansionWorkspace {
    node_of: Vec<u32>,
    vars: Vec<usize>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    pairs: Vec<(u32, u32, f64)>,
    switched: Vec<usize>,
}

impl ExpansionWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Variables that switch to `alpha` under the minimum cut of the binary
    /// keep-or-switch subproblem around `x`.
    ///
    /// Node `i` on the source side keeps `x[i]`; on the sink side it takes
    /// `alpha`. A pair term with entries `A = E(keep, keep)`, `B = E(keep,
    /// switch)`, `C = E(switch, keep)`, `D = E(switch, switch)` is split as
    /// `A + (C - A) y_i + (D - C) y_j + (B + C - A - D) (1 - y_i) y_j`; when
    /// `B + C < A + D` both `B` and `C` are raised by half the gap first.
    pub fn switch_set(&mut self, model: &LabeledMrf, x: &[Label], alpha: Label) -> &[usize] {
        let n = model.num_vars();
        self.node_of.clear();
        self.node_of.resize(n, NOT_A_NODE);
        self.vars.clear();
        for (i, &l) in x.iter().enumerate() {
            if l != alpha {
                self.node_of[i] = self.vars.len() as u32;
                self.vars.push(i);
            }
        }
        self.switched.clear();
        let m = self.vars.len();
        if m == 0 {
            return &self.switched;
        }

        self.u0.clear();
        self.u1.clear();
        for &i in &self.vars {
            let phi = model.unary(i);
            self.u0.push(phi[x[i]]);
            self.u1.push(phi[alpha]);
        }
        self.pairs.clear();
        for (k, e) in model.edges().iter().enumerate() {
            let (na, nb) = (self.node_of[e.a], self.node_of[e.b]);
            match (na != NOT_A_NODE, nb != NOT_A_NODE) {
                (false, false) => {}
                (true, false) => {
                    self.u0[na as usize] += model.edge_energy(k, x[e.a], alpha);
                    self.u1[na as usize] += model.edge_energy(k, alpha, alpha);
                }
                (false, true) => {
                    self.u0[nb as usize] += model.edge_energy(k, alpha, x[e.b]);
                    self.u1[nb as usize] += model.edge_energy(k, alpha, alpha);
                }
                (true, true) => {
                    let a = model.edge_energy(k, x[e.a], x[e.b]);
                    let mut b = model.edge_energy(k, x[e.a], alpha);
                    let mut c = model.edge_energy(k, alpha, x[e.b]);
                    let d = model.edge_energy(k, alpha, alpha);
                    let excess = b + c - a - d;
                    if excess < 0.0 {
                        b -= 0.5 * excess;
                        c -= 0.5 * excess;
                    }
                    self.u1[na as usize] += c - a;
                    self.u1[nb as usize] += d - c;
                    let w = b + c - a - d;
                    if w > 0.0 {
                        self.pairs.push((na, nb, w));
                    }
                }
            }
        }

        let (s, t) = (m, m + 1);
        let mut net = FlowNetwork::with_capacity(m + 2, s, t, 2 * m + self.pairs.len())
            .expect("terminals are distinct and in range");
        for k in 0..m {
            let lo = self.u0[k].min(self.u1[k]);
            if self.u1[k] > lo {
                net.push_arc(s, k, self.u1[k] - lo);
            }
            if self.u0[k] > lo {
                net.push_arc(k, t, self.u0[k] - lo);
            }
        }
        for &(i, j, w) in &self.pairs {
            net.push_arc(i as usize, j as usize, w);
        }
        let cut = max_flow(&net);
        self.switched
            .extend((0..m).filter(|&k| !cut.source_side[k]).map(|k| self.vars[k]));
        &self.switched
    }
}

/// One alpha-expansion move. Returns `x` itself unless the move strictly
/// lowers the energy.
pub fn alpha_expansion_move(model: &LabeledMrf, x: &[Label], alpha: Label) -> Result<Vec<Label>> {
    model.check_assignment(x)?;
    crate::error::contract!(model.labels().contains(alpha), "alpha {alpha} outside the label set");
    let mut ws = ExpansionWorkspace::new();
    let mut cand = x.to_vec();
    for &i in ws.switch_set(model, x, alpha) {
        cand[i] = alpha;
    }
    if model.energy_unchecked(&cand) < model.energy_unchecked(x) {
        Ok(cand)
    } else {
        Ok(x.to_vec())
    }
}

/// Alpha expansion from `start` with its own trace.
pub fn alpha_expansion(model: &LabeledMrf, start: &[Label], criteria: &StoppingCriteria) -> Result<SolveReport> {
    let mut trace = AnytimeTrace::new();
    model.check_assignment(start)?;
    trace.record(TraceEvent::Start, model.energy_unchecked(start));
    let deadline = criteria.deadline(Instant::now(), None);
    let out = alpha_expansion_until(model, start.to_vec(), criteria, &mut trace, deadline)?;
    trace.record(TraceEvent::Stop, out.energy);
    Ok(out.into_report(trace))
}

/// Cycles `alpha` over all labels, recording a `move` row after every move.
///
/// A move is kept only if it strictly lowers the fully re-evaluated energy.
/// Stops on the no-improvement count, on the deadline, or after a label
/// cycle that changed nothing.
pub fn alpha_expansion_until(
    model: &LabeledMrf,
    mut x: Vec<Label>,
    criteria: &StoppingCriteria,
    trace: &mut AnytimeTrace,
    deadline: Option<Instant>,
) -> Result<LevelOutcome> {
    criteria.validate()?;
    model.check_assignment(&x)?;
    let mut ws = ExpansionWorkspace::new();
    let mut cand = x.clone();
    let mut energy = model.energy_unchecked(&x);
    let mut counter = NoImprove::new(criteria.no_improve_rounds);
    let mut moves = 0;
    let stop = 'run: loop {
        let mut changed = false;
        let mut cycle_improved = false;
        for alpha in model.labels().iter() {
            if expired(deadline) {
                break 'run StopReason::Budget;
            }
            let mut improved = false;
            let switched = ws.switch_set(model, &x, alpha);
            if !switched.is_empty() {
                cand.copy_from_slice(&x);
                for &i in switched {
                    cand[i] = alpha;
                }
                let e = model.energy_unchecked(&cand);
                if e < energy {
                    improved = energy - e > criteria.energy_tolerance;
                    std::mem::swap(&mut x, &mut cand);
                    energy = e;
                    changed = true;
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

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::mrf::{grid_edges, Edge, LabelSet, Pairwise};

    fn potts_grid(w: usize, h: usize, nl: usize, unaries: Vec<f64>, weight: f64) -> LabeledMrf {
        let edges = grid_edges(w, h).into_iter().map(|(a, b)| Edge::new(a, b, Pairwise::potts(weight))).collect();
        LabeledMrf::new(LabelSet::new(nl).unwrap(), w * h, unaries, edges).unwrap()
    }

    #[test]
    fn dominant_label_takes_everything() {
        let mut u = Vec::new();
        for i in 0..9 {
            u.extend([3.0 + i as f64, 0.0, 2.0]);
        }
        let m = potts_grid(3, 3, 3, u, 1.0);
        let x = alpha_expansion_move(&m, &[0; 9], 1).unwrap();
        assert_eq!(x, vec![1; 9]);
    }

    #[test]
    fn optimal_input_is_kept() {
        let m = potts_grid(2, 1, 2, vec![0.0, 5.0, 0.0, 5.0], 1.0);
        assert_eq!(alpha_expansion_move(&m, &[0, 0], 1).unwrap(), vec![0, 0]);
    }

    #[test]
    fn single_label_converges_immediately() {
        let m = potts_grid(2, 2, 1, vec![1.0; 4], 1.0);
        let r = alpha_expansion(&m, &[0; 4], &StoppingCriteria::new(4)).unwrap();
        assert_eq!(r.stop, StopReason::Converged);
        assert_eq!(r.energy, 4.0);
    }

    #[test]
    fn zero_budget_returns_start() {
        let m = potts_grid(2, 2, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 1.0);
        let crit = StoppingCriteria::new(4).with_budget(Duration::ZERO);
        let r = alpha_expansion(&m, &[0; 4], &crit).unwrap();
        assert_eq!(r.stop, StopReason::Budget);
        assert_eq!(r.assignment, vec![0; 4]);
        assert_eq!(r.energy, 4.0);
    }

    #[test]
    fn non_submodular_pair_never_worsens() {
        // Repulsive pair: the same label on both ends is expensive.
        let table = vec![5.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 5.0];
        let m = LabeledMrf::new(
            LabelSet::new(3).unwrap(),
            2,
            vec![0.0; 6],
            vec![Edge::new(0, 1, Pairwise::dense(table))],
        )
        .unwrap();
        for alpha in 0..3 {
            let x = alpha_expansion_move(&m, &[0, 1], alpha).unwrap();
            assert!(m.energy(&x).unwrap() <= 0.0);
        }
    }
}
