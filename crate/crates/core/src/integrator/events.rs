//! Sign-change detection on accepted steps and bisection refinement on the
//! step's interpolant.

use super::dense::{DenseSegment, State};
use super::{Event, EventKind, IntegratorOptions, Termination};
use crate::problem::ProblemSpec;

const KINDS: [EventKind; 4] = [
    EventKind::Stationary,
    EventKind::BarrierCrossing,
    EventKind::PositivityLoss,
    EventKind::BlowUp,
];

pub(crate) struct EventScanner<'a> {
    spec: &'a ProblemSpec,
    cap: f64,
    event_tol: f64,
    degenerate_threshold: f64,
    prev: [bool; 4],
    counts: [usize; 4],
}

impl<'a> EventScanner<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        r0: f64,
        y0: State,
        cap: f64,
        opts: &IntegratorOptions,
    ) -> Self {
        let mut scanner = EventScanner {
            spec,
            cap,
            event_tol: opts.event_tol,
            degenerate_threshold: opts.degenerate_threshold,
            prev: [false; 4],
            counts: [0; 4],
        };
        scanner.prev = scanner.signs(r0, &y0);
        scanner
    }

    /// Sign pattern of the indicators `u'`, barrier, `u`, `u - cap`.
    fn signs(&self, r: f64, y: &State) -> [bool; 4] {
        [
            y[1] > 0.0,
            self.spec.barrier_indicator(r, y[0]) > 0.0,
            y[0] > 0.0,
            y[0] > self.cap,
        ]
    }

    fn triggered(&self, i: usize, next: bool) -> bool {
        match KINDS[i] {
            EventKind::Stationary | EventKind::BarrierCrossing => self.prev[i] != next,
            EventKind::PositivityLoss => self.prev[i] && !next,
            EventKind::BlowUp => !self.prev[i] && next,
        }
    }

    fn refine(&self, seg: &DenseSegment, i: usize) -> f64 {
        let (mut lo, mut hi) = (seg.r0, seg.r_end);
        let start = self.prev[i];
        let width = self.event_tol * lo.min(1.0);
        for _ in 0..200 {
            if hi - lo <= width {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.signs(mid, &seg.eval(mid))[i] == start {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Records the events inside `seg` (whose right end state is `y_new`).
    /// Returns the termination class when a terminal event occurred; that
    /// event is then the last one pushed.
    pub fn scan(
        &mut self,
        seg: &DenseSegment,
        y_new: State,
        events: &mut Vec<Event>,
    ) -> Option<Termination> {
        let next = self.signs(seg.r_end, &y_new);
        let mut found: Vec<(f64, usize)> = (0..4)
            .filter(|&i| self.triggered(i, next[i]))
            .map(|i| (self.refine(seg, i), i))
            .collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut outcome = None;
        for (r, i) in found {
            let kind = KINDS[i];
            let y = seg.eval(r);
            let (second_derivative, degenerate) = if kind == EventKind::Stationary {
                let d = seg.eval_derivative(r)[1];
                (Some(d), d.abs() < self.degenerate_threshold)
            } else {
                (None, false)
            };
            events.push(Event {
                kind,
                r,
                index: self.counts[i],
                u_value: y[0],
                second_derivative,
                degenerate,
            });
            self.counts[i] += 1;
            match kind {
                EventKind::PositivityLoss => outcome = Some(Termination::PositivityLoss),
                EventKind::BlowUp => outcome = Some(Termination::BlowUp),
                _ => {}
            }
            if outcome.is_some() {
                break;
            }
        }
        self.prev = next;
        outcome
    }
}
