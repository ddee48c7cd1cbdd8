//! Seeded instance generators shared by the integration tests.
#![allow(dead_code)]

use amuse_core::optimizer::{Group, Item, MmkpProblem, Row, RowKind};
use amuse_core::trace::{DayTrace, LocationId, PeriodRecord};
use amuse_core::App;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to 4 groups of up to 6 items over a budget row and up to 4 capacity
/// rows. Every item weighs on the budget and on each capacity row with
/// probability 1/2. Row bounds are the mean total weight scaled by a
/// factor drawn from `tightness`.
pub fn random_mmkp(seed: u64, tightness: (f64, f64)) -> MmkpProblem {
    let mut r = rng(seed);
    let capacity_rows = r.random_range(0..=4usize);
    let n_groups = r.random_range(1..=4usize);
    let mut rows = vec![Row { kind: RowKind::Budget, bound: 0.0 }];
    rows.extend((0..capacity_rows).map(|p| Row { kind: RowKind::Capacity { period: p }, bound: 0.0 }));
    let groups: Vec<Group> = (0..n_groups)
        .map(|_| {
            let items = r.random_range(1..=6usize);
            Group {
                key: None,
                size: 0.0,
                items: (0..items)
                    .map(|_| {
                        let mut weights = vec![(0, r.random::<f64>())];
                        for row in 1..=capacity_rows {
                            if r.random::<bool>() {
                                weights.push((row, r.random::<f64>()));
                            }
                        }
                        Item { value: r.random::<f64>(), weights, choice: None }
                    })
                    .collect(),
            }
        })
        .collect();
    for (ri, row) in rows.iter_mut().enumerate() {
        let mean_sum: f64 = groups
            .iter()
            .map(|g| g.items.iter().map(|i| i.weight(ri)).sum::<f64>() / g.items.len() as f64)
            .sum();
        row.bound = mean_sum * r.random_range(tightness.0..tightness.1);
    }
    MmkpProblem { rows, groups }
}

/// A 24-period day with one named place per period; `wifi` lists the WiFi periods.
pub fn day(index: u32, wifi: &[usize], usage: &[(usize, App, f64)]) -> DayTrace {
    let periods = (0..24)
        .map(|k| PeriodRecord {
            location: Some(LocationId::new(if wifi.contains(&k) { "cafe" } else { "street" })),
            wifi_available: wifi.contains(&k),
            ..Default::default()
        })
        .collect();
    let mut d = DayTrace { day_index: index, periods };
    for &(k, a, s) in usage {
        d.periods[k].usage[a] += s;
    }
    d
}
