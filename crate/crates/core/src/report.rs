//! Verdict and report types shared by the qubit and N-level classifiers.

use serde::Serialize;

use crate::rate::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Divisible,
    BlpMonotone,
    EntropyMonotone,
}

/// A maximal interval on which a criterion's test function is negative,
/// with the most negative value seen inside it.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub witness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub holds: bool,
    pub violations: Vec<ViolationInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriterionVerdict {
    pub fn new(criterion: Criterion, violations: Vec<ViolationInterval>) -> Self {
        CriterionVerdict {
            criterion,
            holds: violations.is_empty(),
            violations,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Locate maximal runs of grid points where `series[i] < -tol` and refine
/// the interval endpoints by bisection on the continuous test function.
///
/// `f` must evaluate the same quantity as `series` at arbitrary times.
pub fn find_violation_intervals(
    grid: &TimeGrid,
    series: &[f64],
    f: impl Fn(f64) -> f64,
    tol: f64,
) -> Vec<ViolationInterval> {
    assert_eq!(series.len(), grid.n_points);
    let mut out = Vec::new();
    let mut i = 0;
    while i < series.len() {
        if series[i] >= -tol {
            i += 1;
            continue;
        }
        let start = i;
        while i < series.len() && series[i] < -tol {
            i += 1;
        }
        let end = i - 1; // inclusive
        let witness = series[start..=end].iter().cloned().fold(f64::INFINITY, f64::min);
        let t_start = if start == 0 {
            0.0
        } else {
            bisect_crossing(grid.time(start - 1), grid.time(start), &f, tol)
        };
        let t_end = if end == series.len() - 1 {
            grid.t_max
        } else {
            bisect_crossing(grid.time(end + 1), grid.time(end), &f, tol)
        };
        out.push(ViolationInterval {
            t_start,
            t_end,
            witness,
        });
    }
    out
}

/// Bisect for f(t) = -tol on [a, b] where f(a) >= -tol and f(b) < -tol
/// (either orientation of a, b); resolves t to 1e-6.
fn bisect_crossing(good: f64, bad: f64, f: &impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut a = good;
    let mut b = bad;
    for _ in 0..64 {
        if (a - b).abs() < 1e-6 {
            break;
        }
        let m = 0.5 * (a + b);
        if f(m) < -tol {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}
