//! Greedy multiplier-style heuristic: start from the unconstrained optimum,
//! repair the most violated row with the cheapest swaps, then climb with
//! feasibility-preserving swaps.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{Fallback, MmkpProblem, Schedule, SolveStats, FEAS_TOL, VALUE_TOL};

fn scale(bound: f64) -> f64 {
    bound.max(1e-12)
}

/// Sum over rows of relative violation.
fn total_violation(problem: &MmkpProblem, loads: &[f64]) -> f64 {
    problem
        .rows
        .iter()
        .zip(loads)
        .map(|(row, &l)| if l > row.bound + FEAS_TOL { (l - row.bound) / scale(row.bound) } else { 0.0 })
        .sum()
}

fn is_feasible(problem: &MmkpProblem, loads: &[f64]) -> bool {
    problem.rows.iter().zip(loads).all(|(row, &l)| l <= row.bound + FEAS_TOL)
}

/// Loads after swapping group `g` from item `from` to item `to`, restricted to touched rows.
fn swap_delta<'a>(problem: &'a MmkpProblem, g: usize, from: usize, to: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
    let items = &problem.groups[g].items;
    let old = &items[from].weights;
    let new = &items[to].weights;
    old.iter().map(|&(r, w)| (r, -w)).chain(new.iter().copied())
}

fn apply(problem: &MmkpProblem, loads: &mut [f64], g: usize, from: usize, to: usize) {
    for (r, d) in swap_delta(problem, g, from, to) {
        loads[r] += d;
    }
}

/// Change in total relative violation caused by a swap.
fn violation_change(problem: &MmkpProblem, loads: &[f64], g: usize, from: usize, to: usize) -> f64 {
    let row_violation = |r: usize, l: f64| {
        let b = problem.rows[r].bound;
        if l > b + FEAS_TOL {
            (l - b) / scale(b)
        } else {
            0.0
        }
    };
    let items = &problem.groups[g].items;
    let mut before = 0.0;
    let mut after = 0.0;
    // weights are sorted by row, so touched rows can be merged in one pass
    let (a, b) = (&items[from].weights, &items[to].weights);
    let (mut x, mut y) = (0, 0);
    while x < a.len() || y < b.len() {
        let r = match (a.get(x), b.get(y)) {
            (Some(&(ra, _)), Some(&(rb, _))) => ra.min(rb),
            (Some(&(ra, _)), None) => ra,
            (None, Some(&(rb, _))) => rb,
            (None, None) => unreachable!(),
        };
        let mut l = loads[r];
        before += row_violation(r, l);
        if let Some(&(ra, w)) = a.get(x) {
            if ra == r {
                l -= w;
                x += 1;
            }
        }
        if let Some(&(rb, w)) = b.get(y) {
            if rb == r {
                l += w;
                y += 1;
            }
        }
        after += row_violation(r, l);
    }
    after - before
}

/// Per-(group, item) key; an assignment hashes to the XOR of its keys.
fn mix(g: usize, i: usize) -> u64 {
    let mut z = ((g as u64) << 32 | i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn assignment_hash(assignment: &[usize]) -> u64 {
    assignment.iter().enumerate().fold(0, |h, (g, &i)| h ^ mix(g, i))
}

/// Greedy repair towards feasibility. Assignments already visited are not
/// entered again, so the walk cannot cycle; when no move lowers the
/// violation the least harmful one is taken. Returns `true` when feasible.
fn repair(problem: &MmkpProblem, assignment: &mut [usize], loads: &mut [f64], stats: &mut SolveStats) -> bool {
    let total_items: usize = problem.groups.iter().map(|g| g.items.len()).sum();
    let max_steps = 4 * total_items + 64;
    let mut hash = assignment_hash(assignment);
    let mut visited = BTreeSet::from([hash]);
    for _ in 0..max_steps {
        // most violated row by relative violation, ties to the lowest index
        let mut worst: Option<(usize, f64)> = None;
        for (r, row) in problem.rows.iter().enumerate() {
            if loads[r] > row.bound + FEAS_TOL {
                let rel = (loads[r] - row.bound) / scale(row.bound);
                if worst.is_none_or(|(_, v)| rel > v) {
                    worst = Some((r, rel));
                }
            }
        }
        let Some((target, _)) = worst else {
            return true;
        };

        // Swaps that keep satisfied rows satisfied come first. Within a class,
        // free swaps (no value lost) rank by reduction, others by loss per reduction.
        let mut best: Option<(usize, usize, (u8, f64))> = None;
        for (g, group) in problem.groups.iter().enumerate() {
            let a = assignment[g];
            let cur_w = group.items[a].weight(target);
            if cur_w <= 0.0 {
                continue;
            }
            for (b, item) in group.items.iter().enumerate() {
                if b == a || item.weight(target) >= cur_w || visited.contains(&(hash ^ mix(g, a) ^ mix(g, b))) {
                    continue;
                }
                let reduction = -violation_change(problem, loads, g, a, b);
                if reduction <= 1e-15 {
                    continue;
                }
                let clean = swap_delta(problem, g, a, b).all(|(r, _)| {
                    let bound = problem.rows[r].bound + FEAS_TOL;
                    loads[r] > bound || loads[r] - group.items[a].weight(r) + item.weight(r) <= bound
                });
                let loss = group.items[a].value - item.value;
                let key = match (clean, loss <= 0.0) {
                    (true, true) => (0, -reduction),
                    (true, false) => (1, loss / reduction),
                    (false, true) => (2, -reduction),
                    (false, false) => (3, loss / reduction),
                };
                if best.is_none_or(|(_, _, k)| key.0 < k.0 || (key.0 == k.0 && key.1 < k.1)) {
                    best = Some((g, b, key));
                }
            }
        }
        let moves = match best {
            Some((g, b, _)) => vec![(g, b)],
            None => match pair_swap(problem, assignment, loads, hash, &visited) {
                Some((m1, m2)) => vec![m1, m2],
                None => match least_worsening(problem, assignment, loads, hash, &visited) {
                    Some(m) => vec![m],
                    None => return false,
                },
            },
        };
        for (g, b) in moves {
            hash ^= mix(g, assignment[g]) ^ mix(g, b);
            apply(problem, loads, g, assignment[g], b);
            assignment[g] = b;
        }
        visited.insert(hash);
        stats.repair_steps += 1;
    }
    is_feasible(problem, loads)
}

/// Unvisited single swap with the smallest resulting total violation, ties
/// to the smallest value loss; the escape move out of a local minimum.
fn least_worsening(
    problem: &MmkpProblem,
    assignment: &[usize],
    loads: &[f64],
    hash: u64,
    visited: &BTreeSet<u64>,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for (g, group) in problem.groups.iter().enumerate() {
        let a = assignment[g];
        for b in 0..group.items.len() {
            if b == a || visited.contains(&(hash ^ mix(g, a) ^ mix(g, b))) {
                continue;
            }
            let worsening = violation_change(problem, loads, g, a, b);
            let loss = group.items[a].value - group.items[b].value;
            if best.is_none_or(|(_, _, w, l)| worsening < w - 1e-15 || (worsening <= w + 1e-15 && loss < l)) {
                best = Some((g, b, worsening, loss));
            }
        }
    }
    best.map(|(g, b, _, _)| (g, b))
}

/// Instances up to this many items in total also try two simultaneous swaps.
const PAIR_SWAP_ITEMS: usize = 64;

/// Cheapest pair of swaps in different groups that lowers the total violation
/// when no single swap does.
fn pair_swap(
    problem: &MmkpProblem,
    assignment: &[usize],
    loads: &mut [f64],
    hash: u64,
    visited: &BTreeSet<u64>,
) -> Option<((usize, usize), (usize, usize))> {
    let total_items: usize = problem.groups.iter().map(|g| g.items.len()).sum();
    if total_items > PAIR_SWAP_ITEMS {
        return None;
    }
    let base = total_violation(problem, loads);
    let mut best: Option<((usize, usize), (usize, usize), f64)> = None;
    for g1 in 0..problem.groups.len() {
        for b1 in 0..problem.groups[g1].items.len() {
            if b1 == assignment[g1] {
                continue;
            }
            apply(problem, loads, g1, assignment[g1], b1);
            for g2 in g1 + 1..problem.groups.len() {
                for b2 in 0..problem.groups[g2].items.len() {
                    let next = hash ^ mix(g1, assignment[g1]) ^ mix(g1, b1) ^ mix(g2, assignment[g2]) ^ mix(g2, b2);
                    if b2 == assignment[g2] || visited.contains(&next) {
                        continue;
                    }
                    let reduction = base - total_violation(problem, loads) - violation_change(problem, loads, g2, assignment[g2], b2);
                    if reduction <= 1e-15 {
                        continue;
                    }
                    let loss = problem.groups[g1].items[assignment[g1]].value - problem.groups[g1].items[b1].value
                        + problem.groups[g2].items[assignment[g2]].value
                        - problem.groups[g2].items[b2].value;
                    // free moves rank by reduction, priced ones by loss per unit
                    let score = if loss <= 0.0 { -1.0 / reduction } else { loss / reduction };
                    if best.is_none_or(|(_, _, s)| score < s) {
                        best = Some(((g1, b1), (g2, b2), score));
                    }
                }
            }
            apply(problem, loads, g1, b1, assignment[g1]);
        }
    }
    best.map(|(a, b, _)| (a, b))
}

/// Best-improvement single-swap hill climb that never leaves the feasible region.
fn improve(problem: &MmkpProblem, assignment: &mut [usize], loads: &mut [f64], stats: &mut SolveStats) {
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (g, group) in problem.groups.iter().enumerate() {
            let a = assignment[g];
            let cur = group.items[a].value;
            for (b, item) in group.items.iter().enumerate() {
                let gain = item.value - cur;
                if b == a || gain <= VALUE_TOL || best.is_some_and(|(_, _, bg)| gain <= bg + VALUE_TOL) {
                    continue;
                }
                let fits = swap_delta(problem, g, a, b).all(|(r, _)| {
                    let l = loads[r] - group.items[a].weight(r) + item.weight(r);
                    l <= problem.rows[r].bound + FEAS_TOL
                });
                if fits {
                    best = Some((g, b, gain));
                }
            }
        }
        let Some((g, b, _)) = best else {
            return;
        };
        apply(problem, loads, g, assignment[g], b);
        assignment[g] = b;
        stats.improve_moves += 1;
    }
}

/// Subgradient search over row prices: every group takes its best item
/// under `value - sum_r price_r * weight_r / bound_r`, and the prices of
/// violated rows rise until the priced choice is feasible. Each priced
/// assignment is also repaired greedily. Returns the best feasible
/// assignment found.
fn multiplier_search(problem: &MmkpProblem, stats: &mut SolveStats) -> Option<Vec<usize>> {
    const ROUNDS: usize = 200;
    const MAX_ITEMS: usize = 2000;
    if problem.groups.iter().map(|g| g.items.len()).sum::<usize>() > MAX_ITEMS {
        return None;
    }
    let (lo, hi) = problem
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| i.value))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let step = (hi - lo).max(1e-6);
    let mut price = alloc::vec![0.0; problem.rows.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for round in 1..=ROUNDS {
        let assignment: Vec<usize> = problem
            .groups
            .iter()
            .map(|g| {
                let priced = |i: &super::Item| {
                    i.value - i.weights.iter().map(|&(r, w)| price[r] * w / scale(problem.rows[r].bound)).sum::<f64>()
                };
                let mut pick = 0;
                for (b, item) in g.items.iter().enumerate().skip(1) {
                    if priced(item) > priced(&g.items[pick]) + VALUE_TOL {
                        pick = b;
                    }
                }
                pick
            })
            .collect();
        let loads = problem.loads(&assignment);
        let feasible = is_feasible(problem, &loads);
        let mut repaired = assignment;
        let mut repaired_loads = loads.clone();
        if feasible || repair(problem, &mut repaired, &mut repaired_loads, stats) {
            let obj = problem.objective(&repaired);
            if best.as_ref().is_none_or(|(b, _)| obj > *b + VALUE_TOL) {
                best = Some((obj, repaired));
            }
        }
        // subgradient step; slack rows get cheaper again
        for (r, row) in problem.rows.iter().enumerate() {
            let g = (loads[r] - row.bound) / scale(row.bound);
            price[r] = (price[r] + step / libm::sqrt(round as f64) * g).max(0.0);
        }
    }
    best.map(|(_, a)| a)
}

/// Some row is overloaded even when every group takes its lightest item for that row.
fn provably_infeasible(problem: &MmkpProblem) -> bool {
    (0..problem.rows.len()).any(|r| {
        let floor: f64 =
            problem.groups.iter().map(|g| g.items.iter().map(|i| i.weight(r)).fold(f64::INFINITY, f64::min)).sum();
        floor > problem.rows[r].bound + FEAS_TOL
    })
}

/// Heuristic solve. A feasible `warm_start` skips the repair phase.
///
/// The result is feasible whenever repair or a fallback reaches
/// feasibility; otherwise the fallback assignment is returned with
/// `feasible == false`.
pub fn solve_lagrange(problem: &MmkpProblem, warm_start: Option<&[usize]>) -> Schedule {
    let mut stats = SolveStats::default();
    if problem.groups.is_empty() {
        return problem.evaluate(Vec::new(), stats);
    }
    let warm = warm_start.filter(|w| {
        w.len() == problem.groups.len() && w.iter().zip(&problem.groups).all(|(&a, g)| a < g.items.len())
    });
    let (mut assignment, mut loads) = match warm.map(|w| (w.to_vec(), problem.loads(w))) {
        Some((a, l)) if is_feasible(problem, &l) => {
            stats.warm_start_used = true;
            (a, l)
        }
        _ => {
            let a = problem.unconstrained_argmax();
            let l = problem.loads(&a);
            (a, l)
        }
    };

    if stats.warm_start_used || repair(problem, &mut assignment, &mut loads, &mut stats) {
        improve(problem, &mut assignment, &mut loads, &mut stats);
        return problem.evaluate(assignment, stats);
    }

    // repair stalled: restart from the fallback, from the lightest items and from row prices
    let fallback = repair_infeasible(problem, &problem.evaluate(assignment, stats));
    stats.fallback = fallback.stats.fallback;
    if provably_infeasible(problem) {
        return fallback;
    }
    let mut starts = vec![fallback.assignment.clone(), problem.groups.iter().map(lightest_item(problem)).collect()];
    starts.extend(multiplier_search(problem, &mut stats));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mut a in starts {
        let mut l = problem.loads(&a);
        if repair(problem, &mut a, &mut l, &mut stats) {
            improve(problem, &mut a, &mut l, &mut stats);
            let obj = problem.objective(&a);
            if best.as_ref().is_none_or(|(b, _)| obj > *b + VALUE_TOL) {
                best = Some((obj, a));
            }
        }
    }
    problem.evaluate(best.map_or(fallback.assignment, |(_, a)| a), stats)
}

/// Fallback for a schedule the repair phase could not fix.
///
/// When only capacity rows are violated, each violated row is refilled in
/// descending value-density order with the heaviest item that still fits,
/// keeping room for the lightest choice of every group not yet placed; an
/// item is a candidate only if it loads no other row more than the current
/// one. Otherwise every group falls back to its cheapest item: the earliest
/// target at the lowest 3G rate, or the smallest total relative weight when
/// items carry no meaning. Feasible input is returned unchanged.
pub fn repair_infeasible(problem: &MmkpProblem, schedule: &Schedule) -> Schedule {
    let loads = problem.loads(&schedule.assignment);
    let violated: Vec<usize> =
        (0..problem.rows.len()).filter(|&r| loads[r] > problem.rows[r].bound + FEAS_TOL).collect();
    if violated.is_empty() {
        return problem.evaluate(schedule.assignment.clone(), schedule.stats);
    }
    let mut stats = schedule.stats;
    if violated.iter().all(|&r| problem.rows[r].kind.is_capacity()) {
        let mut assignment = schedule.assignment.clone();
        for &r in &violated {
            scale_down_row(problem, &mut assignment, r);
        }
        stats.fallback = Some(Fallback::ScaledDown);
        return problem.evaluate(assignment, stats);
    }
    let assignment = problem.groups.iter().map(cheapest_item(problem)).collect();
    stats.fallback = Some(Fallback::WorstCase);
    problem.evaluate(assignment, stats)
}

fn scale_down_row(problem: &MmkpProblem, assignment: &mut [usize], r: usize) {
    let bound = problem.rows[r].bound;
    let mut members: Vec<usize> =
        (0..problem.groups.len()).filter(|&g| problem.groups[g].items[assignment[g]].weight(r) > 0.0).collect();
    let density = |g: usize| {
        let item = &problem.groups[g].items[assignment[g]];
        item.value / item.weight(r)
    };
    members.sort_by(|&x, &y| density(y).total_cmp(&density(x)).then(x.cmp(&y)));

    let candidates: Vec<Vec<usize>> = members
        .iter()
        .map(|&g| {
            let items = &problem.groups[g].items;
            let cur = &items[assignment[g]];
            (0..items.len())
                .filter(|&b| {
                    let it = &items[b];
                    it.weight(r) > 0.0
                        && it.weight(r) <= cur.weight(r)
                        && it.weights.iter().all(|&(q, w)| q == r || w <= cur.weight(q) + FEAS_TOL)
                        && cur.weights.iter().all(|&(q, _)| q == r || it.weight(q) <= cur.weight(q) + FEAS_TOL)
                })
                .collect()
        })
        .collect();
    let min_weight: Vec<f64> = members
        .iter()
        .zip(&candidates)
        .map(|(&g, c)| c.iter().map(|&b| problem.groups[g].items[b].weight(r)).fold(f64::INFINITY, f64::min))
        .collect();

    let mut used = 0.0;
    for (idx, &g) in members.iter().enumerate() {
        let reserve: f64 = min_weight[idx + 1..].iter().sum();
        let room = bound - used - reserve;
        let items = &problem.groups[g].items;
        let mut pick: Option<usize> = None;
        for &b in &candidates[idx] {
            let w = items[b].weight(r);
            if w > room + FEAS_TOL {
                continue;
            }
            let better = match pick {
                None => true,
                Some(p) => {
                    let pw = items[p].weight(r);
                    w > pw + FEAS_TOL || ((w - pw).abs() <= FEAS_TOL && items[b].value > items[p].value + VALUE_TOL)
                }
            };
            if better {
                pick = Some(b);
            }
        }
        let pick = pick.unwrap_or_else(|| {
            candidates[idx]
                .iter()
                .copied()
                .min_by(|&x, &y| items[x].weight(r).total_cmp(&items[y].weight(r)).then(x.cmp(&y)))
                .unwrap_or(assignment[g])
        });
        assignment[g] = pick;
        used += items[pick].weight(r);
    }
}

fn cheapest_item(problem: &MmkpProblem) -> impl Fn(&super::Group) -> usize + '_ {
    move |group| {
        let items = &group.items;
        if items.iter().all(|i| i.choice.is_some()) {
            let cell = |b: &usize| items[*b].choice.filter(|c| c.gamma > 0.0);
            let first_target = (0..items.len()).filter_map(|b| cell(&b).map(|c| c.target)).min();
            if let Some(k) = first_target {
                return (0..items.len())
                    .filter(|b| cell(b).is_some_and(|c| c.target == k))
                    .min_by(|x, y| {
                        let (cx, cy) = (cell(x).unwrap(), cell(y).unwrap());
                        cx.gamma.total_cmp(&cy.gamma).then(x.cmp(y))
                    })
                    .unwrap_or(0);
            }
        }
        lightest_item(problem)(group)
    }
}

/// Item with the smallest total weight relative to the row bounds.
fn lightest_item(problem: &MmkpProblem) -> impl Fn(&super::Group) -> usize + '_ {
    move |group| {
        let items = &group.items;
        let relative = |b: usize| -> f64 {
            items[b].weights.iter().map(|&(r, w)| w / scale(problem.rows[r].bound)).sum()
        };
        (0..items.len()).min_by(|&x, &y| relative(x).total_cmp(&relative(y)).then(x.cmp(&y))).unwrap_or(0)
    }
}
