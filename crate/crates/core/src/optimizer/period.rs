//! Final network and rate choice for the sessions executing in one period
//! of the network-choice extension.

use alloc::vec::Vec;

use super::{solve_bruteforce, solve_lagrange, Choice, Group, GroupKey, Item, MmkpProblem, Row, RowKind, Planner};

/// Instances with at most this many assignments are solved exactly.
const EXACT_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Network {
    Wifi,
    Cellular,
}

/// A session due in the current period with the 3G rate it was planned at
/// (0 when it was planned for WiFi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodGroup {
    pub key: GroupKey,
    pub size: f64,
    pub planned_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub key: GroupKey,
    pub network: Network,
    pub rate: f64,
    pub value: f64,
}

/// Chooses WiFi at some `delta`, or 3G at a rate no higher than planned,
/// for every session due in `period`, maximizing total utility under the
/// 3G cap and the WiFi capacity `alpha` (infinite means unlimited).
pub fn per_period_select(planner: &Planner, period: usize, groups: &[PeriodGroup], alpha: f64) -> Vec<Selection> {
    if groups.is_empty() {
        return Vec::new();
    }
    let mut rows = alloc::vec![Row { kind: RowKind::Capacity { period }, bound: planner.grid.beta }];
    let wifi_row = alpha.is_finite().then(|| {
        rows.push(Row { kind: RowKind::WifiCapacity { period }, bound: alpha.max(0.0) });
        1
    });
    let min_gamma = planner.grid.min_gamma();
    let deltas: Vec<f64> = planner.grid.positive_delta().collect();
    let problem = MmkpProblem {
        rows,
        groups: groups
            .iter()
            .map(|pg| {
                let delay = period.saturating_sub(pg.key.origin);
                let cap = if pg.planned_gamma > 0.0 { pg.planned_gamma } else { min_gamma };
                let mut items: Vec<Item> = deltas
                    .iter()
                    .map(|&delta| Item {
                        value: planner.value(pg.key.app, 0.0, delay, delta, pg.size),
                        weights: wifi_row.map(|r| alloc::vec![(r, delta)]).unwrap_or_default(),
                        choice: Some(Choice { target: period, gamma: 0.0, delta }),
                    })
                    .collect();
                items.extend(planner.grid.positive_gamma().filter(|&g| g <= cap + 1e-12).map(|gamma| Item {
                    value: planner.value(pg.key.app, planner.price, delay, gamma, pg.size),
                    weights: alloc::vec![(0, gamma)],
                    choice: Some(Choice { target: period, gamma, delta: 0.0 }),
                }));
                Group { key: Some(pg.key), size: pg.size, items }
            })
            .collect(),
    };

    let schedule = if problem.combinations() <= EXACT_LIMIT {
        solve_bruteforce(&problem).unwrap_or_else(|_| solve_lagrange(&problem, None))
    } else {
        solve_lagrange(&problem, None)
    };
    problem
        .groups
        .iter()
        .zip(&schedule.assignment)
        .map(|(g, &a)| {
            let item = &g.items[a];
            let c = item.choice.expect("per-period items carry choices");
            let (network, rate) = if c.delta > 0.0 { (Network::Wifi, c.delta) } else { (Network::Cellular, c.gamma) };
            Selection { key: g.key.expect("per-period groups carry keys"), network, rate, value: item.value }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{App, RateGrid};
    use alloc::vec;

    fn planner() -> Planner {
        Planner::new(4, RateGrid::extended(vec![0.5], 1.0, vec![0.5, 1.0]).unwrap(), 0.01)
    }

    fn pg(origin: usize, app: App, size: f64, planned_gamma: f64) -> PeriodGroup {
        PeriodGroup { key: GroupKey { origin, app }, size, planned_gamma }
    }

    #[test]
    fn single_group_takes_wifi() {
        let s = per_period_select(&planner(), 2, &[pg(2, App::Email, 1.0, 0.0)], 1.0);
        assert_eq!(s[0].network, Network::Wifi);
        assert_eq!(s[0].rate, 1.0);
    }

    #[test]
    fn two_groups_match_enumeration() {
        let p = planner();
        let groups = [pg(1, App::Video, 2.0, 0.5), pg(2, App::Downloads, 3.0, 0.5)];
        let got = per_period_select(&p, 2, &groups, 1.0);

        // (network, rate) options per group: WiFi 0.5, WiFi 1, 3G 0.5
        let options = [(true, 0.5), (true, 1.0), (false, 0.5)];
        let value = |g: &PeriodGroup, (wifi, r): (bool, f64)| {
            let t = 2 - g.key.origin;
            p.value(g.key.app, if wifi { 0.0 } else { p.price }, t, r, g.size)
        };
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for a in 0..3 {
            for b in 0..3 {
                let (oa, ob) = (options[a], options[b]);
                let wifi_load = [oa, ob].iter().filter(|o| o.0).map(|o| o.1).sum::<f64>();
                let cell_load = [oa, ob].iter().filter(|o| !o.0).map(|o| o.1).sum::<f64>();
                if wifi_load > 1.0 + 1e-9 || cell_load > 1.0 + 1e-9 {
                    continue;
                }
                let v = value(&groups[0], oa) + value(&groups[1], ob);
                if v > best.0 + 1e-9 {
                    best = (v, (a, b));
                }
            }
        }
        let total: f64 = got.iter().map(|s| s.value).sum();
        assert!((total - best.0).abs() < 1e-12);
        for (sel, idx) in got.iter().zip([best.1 .0, best.1 .1]) {
            let (wifi, r) = options[idx];
            assert_eq!(sel.network == Network::Wifi, wifi);
            assert_eq!(sel.rate, r);
        }
    }

    #[test]
    fn no_wifi_scales_cellular() {
        let p = Planner::new(4, RateGrid::extended(vec![0.25, 0.5, 1.0], 1.0, vec![1.0]).unwrap(), 0.01);
        let groups = [pg(0, App::Downloads, 1.0, 1.0), pg(0, App::Browsing, 1.0, 1.0)];
        let s = per_period_select(&p, 0, &groups, 0.0);
        assert!(s.iter().all(|x| x.network == Network::Cellular));
        let sum: f64 = s.iter().map(|x| x.rate).sum();
        assert!(sum <= 1.0 + 1e-9);
    }
}
