//! Deferral and 3G-rate scheduling as a multidimensional multiple-choice
//! knapsack.
//!
//! Every (origin period, application) pair with demand is a group; each
//! item of a group is a choice of target period `k >= origin` and 3G rate
//! `gamma` (plus a WiFi rate `delta` in the network-choice extension).
//! Exactly one item is chosen per group, subject to an expected-spend
//! budget row and per-period capacity rows.

mod budget;
mod build;
mod lagrange;
mod online;
mod oracle;
mod period;

pub use budget::{daily_budget, BudgetState};
pub use build::{PendingGroup, Planner, SolverKind};
pub use lagrange::{repair_infeasible, solve_lagrange};
pub use online::{online_step, DayPlan, PeriodObservation, WifiUpdate};
pub use oracle::{solve_bruteforce, BRUTE_FORCE_LIMIT};
pub use period::{per_period_select, Network, PeriodGroup, Selection};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::trace::App;

/// Absolute tolerance for constraint feasibility.
pub const FEAS_TOL: f64 = 1e-9;
/// Tolerance for comparing objective values.
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum RowKind {
    /// Expected 3G spend over the remaining day.
    Budget,
    /// Sum of 3G rates scheduled into a period.
    Capacity { period: usize },
    /// Sum of WiFi rates scheduled into a period (extension only).
    WifiCapacity { period: usize },
    /// Rows of externally supplied problems.
    Other,
}

impl RowKind {
    pub fn is_capacity(self) -> bool {
        matches!(self, RowKind::Capacity { .. } | RowKind::WifiCapacity { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Row {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: RowKind,
    pub bound: f64,
}

/// What an item means in the offloading model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Choice {
    pub target: usize,
    pub gamma: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Item {
    pub value: f64,
    /// Sparse `(row, coefficient)` pairs, sorted by row.
    pub weights: Vec<(usize, f64)>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub choice: Option<Choice>,
}

impl Item {
    pub fn weight(&self, row: usize) -> f64 {
        self.weights.iter().find(|&&(r, _)| r == row).map_or(0.0, |&(_, w)| w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupKey {
    pub origin: usize,
    pub app: App,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Group {
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub key: Option<GroupKey>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub size: f64,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MmkpProblem {
    pub rows: Vec<Row>,
    pub groups: Vec<Group>,
}

impl MmkpProblem {
    /// Checks structure and sorts item weights by row.
    pub fn validate(&mut self) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            if !row.bound.is_finite() {
                return Err(Error::Validation(format!("row {r} has non-finite bound {}", row.bound)));
            }
        }
        for (g, group) in self.groups.iter_mut().enumerate() {
            if group.items.is_empty() {
                return Err(Error::Validation(format!("group {g} has no items")));
            }
            for (i, item) in group.items.iter_mut().enumerate() {
                if !item.value.is_finite() {
                    return Err(Error::Validation(format!("group {g} item {i} has non-finite value")));
                }
                item.weights.sort_by_key(|&(r, _)| r);
                for w in item.weights.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(Error::Validation(format!("group {g} item {i} repeats row {}", w[0].0)));
                    }
                }
                for &(r, w) in &item.weights {
                    if r >= self.rows.len() {
                        return Err(Error::Validation(format!("group {g} item {i} references missing row {r}")));
                    }
                    if !(w >= 0.0) || !w.is_finite() {
                        return Err(Error::Validation(format!("group {g} item {i} has weight {w} on row {r}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of complete assignments.
    pub fn combinations(&self) -> u128 {
        self.groups.iter().fold(1u128, |acc, g| acc.saturating_mul(g.items.len() as u128))
    }

    pub fn loads(&self, assignment: &[usize]) -> Vec<f64> {
        let mut loads = vec![0.0; self.rows.len()];
        for (g, &a) in self.groups.iter().zip(assignment) {
            for &(r, w) in &g.items[a].weights {
                loads[r] += w;
            }
        }
        loads
    }

    pub fn objective(&self, assignment: &[usize]) -> f64 {
        self.groups.iter().zip(assignment).map(|(g, &a)| g.items[a].value).sum()
    }

    /// Per-group best item ignoring all rows; ties go to the lowest index.
    pub fn unconstrained_argmax(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| {
                let mut best = 0;
                for (i, item) in g.items.iter().enumerate().skip(1) {
                    if item.value > g.items[best].value + VALUE_TOL {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    pub fn evaluate(&self, assignment: Vec<usize>, stats: SolveStats) -> Schedule {
        let loads = self.loads(&assignment);
        let row_ok: Vec<bool> = self.rows.iter().zip(&loads).map(|(row, &l)| l <= row.bound + FEAS_TOL).collect();
        Schedule {
            objective: self.objective(&assignment),
            feasible: row_ok.iter().all(|&ok| ok),
            assignment,
            loads,
            row_ok,
            stats,
        }
    }

    pub fn find_group(&self, key: GroupKey) -> Option<usize> {
        self.groups.iter().position(|g| g.key == Some(key))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Fallback {
    /// Rates in violated capacity rows were scaled down.
    ScaledDown,
    /// Every group was sent immediately at its lowest rate.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveStats {
    /// The warm start was feasible and the repair phase was skipped.
    pub warm_start_used: bool,
    pub repair_steps: usize,
    pub improve_moves: usize,
    pub fallback: Option<Fallback>,
}

/// One chosen item per group, with row loads and feasibility.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub loads: Vec<f64>,
    pub row_ok: Vec<bool>,
    pub feasible: bool,
    pub stats: SolveStats,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule {
            assignment: Vec::new(),
            objective: 0.0,
            loads: Vec::new(),
            row_ok: Vec::new(),
            feasible: true,
            stats: SolveStats::default(),
        }
    }

    /// Slack `bound - load` of every row.
    pub fn slack(&self, problem: &MmkpProblem) -> Vec<f64> {
        problem.rows.iter().zip(&self.loads).map(|(row, &l)| row.bound - l).collect()
    }

    /// The chosen `(target, gamma, delta)` of every group that carries one.
    pub fn choices<'a>(&'a self, problem: &'a MmkpProblem) -> impl Iterator<Item = (Option<GroupKey>, Choice)> + 'a {
        problem
            .groups
            .iter()
            .zip(&self.assignment)
            .filter_map(|(g, &a)| g.items[a].choice.map(|c| (g.key, c)))
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn evaluate_reports_loads_and_feasibility() {
        let mut p = MmkpProblem {
            rows: rows(&[(RowKind::Budget, 1.0), (RowKind::Capacity { period: 0 }, 1.0)]),
            groups: vec![group(&[(1.0, &[0.5, 1.0]), (0.5, &[0.0, 0.25])]), group(&[(2.0, &[0.6, 0.0])])],
        };
        p.validate().unwrap();
        let s = p.evaluate(vec![0, 0], SolveStats::default());
        assert_eq!(s.objective, 3.0);
        assert_eq!(s.loads, vec![1.1, 1.0]);
        assert_eq!(s.row_ok, vec![false, true]);
        assert!(!s.feasible);
        let s = p.evaluate(vec![1, 0], SolveStats::default());
        assert!(s.feasible);
        assert!((s.slack(&p)[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let mut p = MmkpProblem { rows: rows(&[(RowKind::Budget, 1.0)]), groups: vec![group(&[])] };
        assert!(p.validate().is_err());
        let mut p = MmkpProblem { rows: rows(&[(RowKind::Budget, 1.0)]), groups: vec![group(&[(1.0, &[0.0, 2.0])])] };
        assert!(p.validate().is_err());
        let mut p = MmkpProblem { rows: rows(&[(RowKind::Budget, 1.0)]), groups: vec![group(&[(1.0, &[-1.0])])] };
        assert!(p.validate().is_err());
    }
}
