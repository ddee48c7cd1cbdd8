//! Exhaustive solver for small instances, used as a test oracle.

use alloc::vec;
use alloc::vec::Vec;

use super::{MmkpProblem, Schedule, SolveStats, FEAS_TOL, VALUE_TOL};
use crate::error::{Error, Result};

/// Largest number of complete assignments the oracle will consider.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

struct Search<'a> {
    problem: &'a MmkpProblem,
    /// `suffix_best[g]`: sum of the best item value over groups `g..`.
    suffix_best: Vec<f64>,
    /// `suffix_min[g][r]`: sum of the smallest weight on row `r` over groups `g..`.
    suffix_min: Vec<Vec<f64>>,
    loads: Vec<f64>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn dfs(&mut self, g: usize, value: f64) {
        let groups = &self.problem.groups;
        if g == groups.len() {
            if self.best.as_ref().is_none_or(|(b, _)| value > *b + VALUE_TOL) {
                self.best = Some((value, self.current.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if value + self.suffix_best[g] <= *b + VALUE_TOL {
                return;
            }
        }
        for (i, item) in groups[g].items.iter().enumerate() {
            for &(r, w) in &item.weights {
                self.loads[r] += w;
            }
            let fits = self
                .problem
                .rows
                .iter()
                .enumerate()
                .all(|(r, row)| self.loads[r] + self.suffix_min[g + 1][r] <= row.bound + FEAS_TOL);
            if fits {
                self.current[g] = i;
                self.dfs(g + 1, value + item.value);
            }
            for &(r, w) in &item.weights {
                self.loads[r] -= w;
            }
        }
    }
}

/// Exact maximizer by depth-first enumeration in lexicographic order;
/// among assignments within tolerance of the optimum the lexicographically
/// smallest wins.
pub fn solve_bruteforce(problem: &MmkpProblem) -> Result<Schedule> {
    let combinations = problem.combinations();
    if combinations > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { combinations, limit: BRUTE_FORCE_LIMIT });
    }
    if problem.groups.iter().any(|g| g.items.is_empty()) {
        return Err(Error::Infeasible);
    }
    let rows = problem.rows.len();
    let ng = problem.groups.len();
    let mut suffix_best = vec![0.0; ng + 1];
    let mut suffix_min = vec![vec![0.0; rows]; ng + 1];
    for g in (0..ng).rev() {
        let items = &problem.groups[g].items;
        suffix_best[g] = suffix_best[g + 1] + items.iter().map(|i| i.value).fold(f64::NEG_INFINITY, f64::max);
        for r in 0..rows {
            let min = items.iter().map(|i| i.weight(r)).fold(f64::INFINITY, f64::min);
            suffix_min[g][r] = suffix_min[g + 1][r] + min;
        }
    }
    let mut search = Search {
        problem,
        suffix_best,
        suffix_min,
        loads: vec![0.0; rows],
        current: vec![0; ng],
        best: None,
    };
    search.dfs(0, 0.0);
    let (_, assignment) = search.best.ok_or(Error::Infeasible)?;
    Ok(problem.evaluate(assignment, SolveStats::default()))
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::super::RowKind;
    use super::*;

    #[test]
    fn single_group_is_argmax() {
        let p = MmkpProblem { rows: vec![], groups: vec![group(&[(0.2, &[]), (0.9, &[]), (0.5, &[])])] };
        assert_eq!(solve_bruteforce(&p).unwrap().assignment, vec![1]);
    }

    #[test]
    fn hand_enumerated_binding_capacity() {
        // combos: (0,0) w=2 infeasible; (0,1) 3+1=4 ; (1,0) 2+2=4 ; (1,1) 2+1=3
        let p = MmkpProblem {
            rows: rows(&[(RowKind::Capacity { period: 0 }, 1.5)]),
            groups: vec![group(&[(3.0, &[1.0]), (2.0, &[0.5])]), group(&[(2.0, &[1.0]), (1.0, &[0.5])])],
        };
        let s = solve_bruteforce(&p).unwrap();
        assert_eq!(s.objective, 4.0);
        assert_eq!(s.assignment, vec![0, 1]);
        assert!(s.feasible);
    }

    #[test]
    fn infeasible_reported() {
        let p = MmkpProblem {
            rows: rows(&[(RowKind::Capacity { period: 0 }, 0.2)]),
            groups: vec![group(&[(1.0, &[0.25]), (2.0, &[0.5])])],
        };
        assert_eq!(solve_bruteforce(&p), Err(Error::Infeasible));
    }

    #[test]
    fn guard_refuses_large() {
        let empty: &[f64] = &[];
        let g = group(&[(1.0, empty); 10]);
        let p = MmkpProblem { rows: vec![], groups: vec![g; 8] };
        assert!(matches!(solve_bruteforce(&p), Err(Error::TooLarge { .. })));
    }
}
