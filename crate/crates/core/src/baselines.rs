//! Reference policies: on-the-spot offloading uses WiFi only when it is
//! there, delayed offloading waits a fixed number of periods for it.

use alloc::vec::Vec;

use crate::execution::ExecutionRecord;
use crate::optimizer::{Network, Planner};
use crate::trace::{App, DayTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Policy {
    OnTheSpot,
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineConfig {
    pub policy: Policy,
    /// Longest wait in periods (delayed only).
    pub deadline: usize,
    /// Split the 3G cap equally among the sessions sharing a period;
    /// otherwise every session gets the full cap.
    pub fair_share: bool,
}

impl BaselineConfig {
    pub fn on_the_spot() -> Self {
        BaselineConfig { policy: Policy::OnTheSpot, deadline: 0, fair_share: true }
    }

    pub fn delayed(deadline: usize) -> Self {
        BaselineConfig { policy: Policy::Delayed, deadline: deadline.max(1), fair_share: true }
    }

    pub fn run(&self, planner: &Planner, day: &DayTrace) -> Vec<ExecutionRecord> {
        let deadline = match self.policy {
            Policy::OnTheSpot => 0,
            Policy::Delayed => self.deadline.max(1),
        };
        run_window(planner, day, deadline, self.fair_share)
    }
}

pub fn run_on_the_spot(planner: &Planner, day: &DayTrace) -> Vec<ExecutionRecord> {
    BaselineConfig::on_the_spot().run(planner, day)
}

pub fn run_delayed(planner: &Planner, day: &DayTrace, deadline: usize) -> Vec<ExecutionRecord> {
    BaselineConfig::delayed(deadline).run(planner, day)
}

fn run_window(planner: &Planner, day: &DayTrace, deadline: usize, fair_share: bool) -> Vec<ExecutionRecord> {
    let n = day.n();
    let beta = planner.grid.beta;
    // (origin, app, size, executed period, over WiFi)
    let mut plan: Vec<(usize, App, f64, usize, bool)> = Vec::new();
    for (i, rec) in day.periods.iter().enumerate() {
        let last = (i + deadline).min(n - 1);
        let wifi_at = (i..=last).find(|&k| day.periods[k].wifi_available);
        for (app, size) in rec.usage.iter().filter(|&(_, s)| s > 0.0) {
            match wifi_at {
                Some(k) => plan.push((i, app, size, k, true)),
                None => plan.push((i, app, size, last, false)),
            }
        }
    }
    let mut cellular = alloc::vec![0usize; n];
    for &(_, _, _, k, wifi) in &plan {
        if !wifi {
            cellular[k] += 1;
        }
    }
    plan.iter()
        .map(|&(i, app, size, k, wifi)| {
            if wifi {
                planner.execute(i, app, k, Network::Wifi, 1.0, size)
            } else {
                let rate = if fair_share { beta / cellular[k] as f64 } else { beta };
                planner.execute(i, app, k, Network::Cellular, rate, size)
            }
        })
        .collect()
}
