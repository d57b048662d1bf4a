use std::time::Instant;

use super::{expired, LevelOutcome, NoImprove, SolveReport, StopReason, StoppingCriteria};
use crate::error::Result;
use crate::mrf::{Label, LabeledMrf};
use crate::trace::{AnytimeTrace, TraceEvent};

/// Iterated conditional modes from `start`.
///
/// Each sweep visits variables in index order and moves a variable only when
/// another label strictly lowers its local energy (lowest label on ties).
pub fn icm(model: &LabeledMrf, start: &[Label], criteria: &StoppingCriteria) -> Result<SolveReport> {
    let mut trace = AnytimeTrace::new();
    model.check_assignment(start)?;
    trace.record(TraceEvent::Start, model.energy_unchecked(start));
    let deadline = criteria.deadline(Instant::now(), None);
    let out = icm_until(model, start.to_vec(), criteria, &mut trace, deadline)?;
    trace.record(TraceEvent::Stop, out.energy);
    Ok(out.into_report(trace))
}

/// ICM recording one `move` row per sweep into `trace`. The sweep count is
/// the unit for the no-improvement counter whatever `criteria.unit` says.
pub fn icm_until(
    model: &LabeledMrf,
    mut x: Vec<Label>,
    criteria: &StoppingCriteria,
    trace: &mut AnytimeTrace,
    deadline: Option<Instant>,
) -> Result<LevelOutcome> {
    criteria.validate()?;
    model.check_assignment(&x)?;
    let nl = model.num_labels();
    let mut energy = model.energy_unchecked(&x);
    let mut counter = NoImprove::new(criteria.no_improve_rounds);
    let mut sweeps = 0;
    let stop = loop {
        if expired(deadline) {
            break StopReason::Budget;
        }
        let mut changes = 0usize;
        for i in 0..model.num_vars() {
            let cur = x[i];
            let mut best = cur;
            let mut best_e = model.local_energy(i, cur, &x);
            for l in 0..nl {
                let e = model.local_energy(i, l, &x);
                if e < best_e {
                    best = l;
                    best_e = e;
                }
            }
            if best != cur {
                x[i] = best;
                changes += 1;
            }
        }
        sweeps += 1;
        let next = model.energy_unchecked(&x);
        let improved = energy - next > criteria.energy_tolerance;
        energy = next.min(energy);
        trace.record(TraceEvent::Move, energy);
        if changes == 0 {
            break StopReason::Converged;
        }
        if counter.step(improved) {
            break StopReason::CriteriaMet;
        }
    };
    Ok(LevelOutcome { energy: model.energy_unchecked(&x), assignment: x, rounds: sweeps, stop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrf::{Edge, LabelSet, Pairwise};

    #[test]
    fn single_variable_takes_unary_argmin() {
        let m = LabeledMrf::new(LabelSet::new(3).unwrap(), 1, vec![4.0, 1.0, 2.0], vec![]).unwrap();
        let r = icm(&m, &[0], &StoppingCriteria::new(4)).unwrap();
        assert_eq!(r.assignment, vec![1]);
        assert_eq!(r.energy, 1.0);
    }

    #[test]
    fn local_minimum_is_returned_unchanged() {
        // Strong Potts coupling makes [0, 0] a local minimum although [1, 1]
        // is global.
        let m = LabeledMrf::new(
            LabelSet::new(2).unwrap(),
            2,
            vec![0.0, 0.5, 1.0, 0.0],
            vec![Edge::new(0, 1, Pairwise::potts(10.0))],
        )
        .unwrap();
        let r = icm(&m, &[0, 0], &StoppingCriteria::new(4)).unwrap();
        assert_eq!(r.assignment, vec![0, 0]);
        assert_eq!(r.stop, StopReason::Converged);
        assert_eq!(r.energy, 1.0);
    }
}
