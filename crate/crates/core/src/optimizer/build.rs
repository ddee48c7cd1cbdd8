//! Problem construction from forecasts.

use alloc::vec::Vec;

use super::{Choice, Group, GroupKey, Item, MmkpProblem, Row, RowKind};
use crate::trace::{App, AppKind, KindMap, RateGrid};
use crate::usage::DemandForecast;
use crate::utility::{utility_unchecked, ParamTable, UtilityContext};
use crate::wifi::WifiForecast;

/// Periods whose WiFi probability is at least this are treated as certain.
const CERTAIN_WIFI: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverKind {
    #[default]
    Lagrange,
    BruteForce,
}

/// Session deferred earlier in the day and not yet executed. Its size is
/// the observed size, not a forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PendingGroup {
    pub origin: usize,
    pub app: App,
    pub size: f64,
    pub choice: Choice,
}

/// Static scheduling context for one user.
#[derive(Debug, Clone)]
pub struct Planner {
    pub n: usize,
    pub grid: RateGrid,
    /// Currency per normalized volume unit.
    pub price: f64,
    pub kinds: KindMap,
    pub params: ParamTable,
    pub solver: SolverKind,
    /// Network-choice model with WiFi capacity `w_k * scale` per period (none where
    /// `w_k` is 0); `None` for the base model.
    pub extension: Option<f64>,
}

impl Planner {
    pub fn new(n: usize, grid: RateGrid, price: f64) -> Self {
        Planner { n, grid, price, kinds: KindMap::default(), params: ParamTable::default(), solver: SolverKind::default(), extension: None }
    }

    pub(crate) fn value(&self, app: App, price: f64, delay: usize, rate: f64, size: f64) -> f64 {
        utility_unchecked(
            self.params.get(app),
            self.kinds.kind(app),
            UtilityContext { price, delay: delay as u32, rate, size },
        )
    }

    /// Expected 3G spend with certainty of using 3G.
    pub fn cell_spend(&self, app: App, gamma: f64, size: f64) -> f64 {
        match self.kinds.kind(app) {
            AppKind::FixedVolume => self.price * size,
            AppKind::FixedTime => self.price * gamma * size,
        }
    }

    /// Groups for every pending session and every forecast (origin >= `current`, app)
    /// pair with positive demand; items are all `(k >= max(origin, current), gamma)`.
    pub fn build_mmkp(
        &self,
        demand: &DemandForecast,
        wifi: &WifiForecast,
        budget: f64,
        current: usize,
        pending: &[PendingGroup],
    ) -> MmkpProblem {
        let n = self.n;
        let mut rows = Vec::new();
        rows.push(Row { kind: RowKind::Budget, bound: budget.max(0.0) });
        let mut cap_row = alloc::vec![None; n];
        for (l, slot) in cap_row.iter_mut().enumerate().skip(current) {
            if wifi.get(l) < CERTAIN_WIFI {
                *slot = Some(rows.len());
                rows.push(Row { kind: RowKind::Capacity { period: l }, bound: self.grid.beta });
            }
        }

        let gammas: Vec<f64> = self.grid.positive_gamma().collect();
        let items_for = |origin: usize, app: App, size: f64| -> Vec<Item> {
            let mut items = Vec::with_capacity((n - current.max(origin)) * gammas.len());
            for k in current.max(origin)..n {
                let w = wifi.get(k).clamp(0.0, 1.0);
                let wifi_value = self.value(app, 0.0, k - origin, 1.0, size);
                for &gamma in &gammas {
                    let value = w * wifi_value + (1.0 - w) * self.value(app, self.price, k - origin, gamma, size);
                    let mut weights = Vec::with_capacity(2);
                    let spend = (1.0 - w) * self.cell_spend(app, gamma, size);
                    if spend > 0.0 {
                        weights.push((0, spend));
                    }
                    if let Some(r) = cap_row[k] {
                        weights.push((r, gamma));
                    }
                    items.push(Item { value, weights, choice: Some(Choice { target: k, gamma, delta: 0.0 }) });
                }
            }
            items
        };

        let mut groups = Vec::new();
        let mut pending: Vec<&PendingGroup> = pending.iter().filter(|p| p.size > 0.0).collect();
        pending.sort_by_key(|p| (p.origin, p.app));
        for p in pending {
            groups.push(Group {
                key: Some(GroupKey { origin: p.origin, app: p.app }),
                size: p.size,
                items: items_for(p.origin, p.app, p.size),
            });
        }
        for origin in current..n {
            for app in App::ALL {
                let size = demand.get(origin, app);
                if size > 0.0 {
                    groups.push(Group { key: Some(GroupKey { origin, app }), size, items: items_for(origin, app, size) });
                }
            }
        }
        MmkpProblem { rows, groups }
    }

    /// Network-choice variant: each item commits to 3G at `gamma` or WiFi at
    /// `delta`, WiFi rates are limited by the forecast WiFi capacity
    /// `alpha[k]` (infinite drops the row) and 3G capacity rows are always present.
    pub fn build_mmkp_ext(
        &self,
        demand: &DemandForecast,
        alpha: &[f64],
        budget: f64,
        current: usize,
        pending: &[PendingGroup],
    ) -> MmkpProblem {
        let n = self.n;
        let mut rows = Vec::new();
        rows.push(Row { kind: RowKind::Budget, bound: budget.max(0.0) });
        let mut cap_row = alloc::vec![0usize; n];
        let mut wifi_row = alloc::vec![None; n];
        for l in current..n {
            cap_row[l] = rows.len();
            rows.push(Row { kind: RowKind::Capacity { period: l }, bound: self.grid.beta });
            let a = alpha.get(l).copied().unwrap_or(0.0);
            if a.is_finite() {
                wifi_row[l] = Some(rows.len());
                rows.push(Row { kind: RowKind::WifiCapacity { period: l }, bound: a.max(0.0) });
            }
        }

        let gammas: Vec<f64> = self.grid.positive_gamma().collect();
        let deltas: Vec<f64> = self.grid.positive_delta().collect();
        let items_for = |origin: usize, app: App, size: f64| -> Vec<Item> {
            let mut items = Vec::new();
            for k in current.max(origin)..n {
                // (k, 0, delta) sorts before (k, gamma > 0, 0)
                for &delta in &deltas {
                    let weights = wifi_row[k].map(|r| alloc::vec![(r, delta)]).unwrap_or_default();
                    items.push(Item {
                        value: self.value(app, 0.0, k - origin, delta, size),
                        weights,
                        choice: Some(Choice { target: k, gamma: 0.0, delta }),
                    });
                }
                for &gamma in &gammas {
                    let mut weights = Vec::with_capacity(2);
                    let spend = self.cell_spend(app, gamma, size);
                    if spend > 0.0 {
                        weights.push((0, spend));
                    }
                    weights.push((cap_row[k], gamma));
                    items.push(Item {
                        value: self.value(app, self.price, k - origin, gamma, size),
                        weights,
                        choice: Some(Choice { target: k, gamma, delta: 0.0 }),
                    });
                }
            }
            items
        };

        let mut groups = Vec::new();
        let mut pending: Vec<&PendingGroup> = pending.iter().filter(|p| p.size > 0.0).collect();
        pending.sort_by_key(|p| (p.origin, p.app));
        for p in pending {
            groups.push(Group {
                key: Some(GroupKey { origin: p.origin, app: p.app }),
                size: p.size,
                items: items_for(p.origin, p.app, p.size),
            });
        }
        for origin in current..n {
            for app in App::ALL {
                let size = demand.get(origin, app);
                if size > 0.0 {
                    groups.push(Group { key: Some(GroupKey { origin, app }), size, items: items_for(origin, app, size) });
                }
            }
        }
        MmkpProblem { rows, groups }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::AppUsage;
    use crate::optimizer::{solve_bruteforce, solve_lagrange};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn demand(n: usize, cells: &[(usize, App, f64)]) -> DemandForecast {
        let mut s = vec![AppUsage::ZERO; n];
        for &(k, a, x) in cells {
            s[k][a] = x;
        }
        DemandForecast { s, window: 3 }
    }

    #[test]
    fn no_demand_is_empty() {
        let p = Planner::new(4, RateGrid::default(), 0.01);
        let prob = p.build_mmkp(&demand(4, &[]), &WifiForecast::fixed(vec![0.0; 4]), 1.0, 0, &[]);
        assert!(prob.is_empty());
        let s = solve_lagrange(&prob, None);
        assert!(s.assignment.is_empty() && s.feasible);
        assert!(solve_bruteforce(&prob).unwrap().assignment.is_empty());
    }

    #[test]
    fn single_group_expansion() {
        let planner = Planner::new(1, RateGrid::base(vec![0.5, 1.0], 1.0).unwrap(), 0.2);
        let prob = planner.build_mmkp(&demand(1, &[(0, App::Email, 3.0)]), &WifiForecast::fixed(vec![0.0]), 5.0, 0, &[]);
        assert_eq!(prob.groups.len(), 1);
        let items = &prob.groups[0].items;
        assert_eq!(items.len(), 2);
        for (item, gamma) in items.iter().zip([0.5, 1.0]) {
            assert_relative_eq!(item.weight(0), 0.2 * 3.0);
            assert_eq!(item.weight(1), gamma);
            assert_eq!(item.choice.unwrap().gamma, gamma);
        }
        assert_eq!(prob.rows[1].kind, RowKind::Capacity { period: 0 });
    }

    #[test]
    fn fixed_time_budget_scales_with_rate() {
        let planner = Planner::new(2, RateGrid::default(), 0.1);
        let wifi = WifiForecast::fixed(vec![0.25, 0.5]);
        let prob = planner.build_mmkp(&demand(2, &[(0, App::Video, 4.0)]), &wifi, 5.0, 0, &[]);
        let item = prob.groups[0].items.iter().find(|i| i.choice.unwrap() == Choice { target: 1, gamma: 0.5, delta: 0.0 });
        assert_relative_eq!(item.unwrap().weight(0), 0.1 * 0.5 * 0.5 * 4.0);
    }

    #[test]
    fn certain_wifi_drops_capacity_row() {
        let planner = Planner::new(3, RateGrid::default(), 0.01);
        let wifi = WifiForecast::fixed(vec![0.0, 1.0, 0.3]);
        let prob = planner.build_mmkp(&demand(3, &[(0, App::Downloads, 1.0)]), &wifi, 1.0, 0, &[]);
        let kinds: Vec<_> = prob.rows.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, vec![RowKind::Budget, RowKind::Capacity { period: 0 }, RowKind::Capacity { period: 2 }]);
        for item in prob.groups[0].items.iter().filter(|i| i.choice.unwrap().target == 1) {
            assert!(item.weights.is_empty());
        }
    }
}
