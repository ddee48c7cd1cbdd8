//! Per-application demand forecasting.
//!
//! Forecasts are a moving average of past per-period usage. Usage the
//! scheduler moved to a later period is shifted back to its origin before it
//! enters the history, so the average tracks what the user would have done
//! without deferrals. The deferred share credited back to each origin is
//! proportional to the forecast size that was deferred.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::trace::{App, AppUsage};

/// Observed usage `sigma_j(k)` per day.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservedUsage {
    n: usize,
    days: BTreeMap<u32, Vec<AppUsage>>,
}

impl ObservedUsage {
    pub fn new(n: usize) -> Self {
        ObservedUsage { n, days: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn record_usage(&mut self, day: u32, period: usize, app: App, size: f64) -> Result<()> {
        if !(size >= 0.0) {
            return Err(Error::InvalidArgument(format!("usage size must be non-negative, got {size}")));
        }
        if period >= self.n {
            return Err(Error::InvalidArgument(format!("period {period} outside 0..{}", self.n)));
        }
        let n = self.n;
        self.days.entry(day).or_insert_with(|| vec![AppUsage::ZERO; n])[period][app] += size;
        Ok(())
    }

    /// Replaces a whole day, e.g. with its deferral-adjusted usage.
    pub fn set_day(&mut self, day: u32, periods: Vec<AppUsage>) -> Result<()> {
        if periods.len() != self.n {
            return Err(Error::Validation(format!("day {day} has {} periods, expected {}", periods.len(), self.n)));
        }
        self.days.insert(day, periods);
        Ok(())
    }

    pub fn day(&self, day: u32) -> Option<&[AppUsage]> {
        self.days.get(&day).map(Vec::as_slice)
    }

    pub fn days(&self) -> impl Iterator<Item = (u32, &[AppUsage])> + '_ {
        self.days.iter().map(|(&d, v)| (d, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Forecast sizes `s_j(k)` for one day.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DemandForecast {
    pub s: Vec<AppUsage>,
    pub window: usize,
}

impl DemandForecast {
    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn get(&self, period: usize, app: App) -> f64 {
        self.s.get(period).map_or(0.0, |u| u[app])
    }
}

/// Mean of the most recent `window` days (fewer when the history is shorter).
pub fn forecast_usage(history: &ObservedUsage, window: usize) -> Result<DemandForecast> {
    if window == 0 {
        return Err(Error::InvalidArgument("moving-average window must be at least 1 day".into()));
    }
    if history.is_empty() {
        return Err(Error::Empty("usage history"));
    }
    let recent: Vec<&Vec<AppUsage>> = history.days.values().rev().take(window).collect();
    let count = recent.len() as f64;
    let mut s = vec![AppUsage::ZERO; history.n];
    for day in &recent {
        for (acc, obs) in s.iter_mut().zip(day.iter()) {
            for a in App::ALL {
                acc[a] += obs[a];
            }
        }
    }
    for u in &mut s {
        *u = u.scaled(1.0 / count);
    }
    Ok(DemandForecast { s, window })
}

/// An executed deferral of application `app` from period `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Deferral {
    pub app: App,
    pub from: usize,
    pub to: usize,
}

/// When observed usage is shifted back to its origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AdjustPolicy {
    /// Every recorded deferral is shifted back.
    #[default]
    Always,
    /// Only deferrals whose origin saw less than this fraction of its forecast.
    BelowFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjusted {
    pub sigma: Vec<AppUsage>,
    /// Cells that fell below `-1e-9` before clamping at 0.
    pub clamped: usize,
}

/// Shifts deferred usage back to its origin period.
///
/// For each app `j` and target `k` with deferred sources `i`, every source
/// is credited `s_j(i) sigma_j(k) / (s_j(k) + sum_l c_l(k) s_j(l))` and `k`
/// is debited the same total. A zero denominator contributes nothing.
pub fn adjust_for_deferrals(
    sigma: &[AppUsage],
    forecast: &[AppUsage],
    deferrals: &[Deferral],
    policy: AdjustPolicy,
) -> Result<Adjusted> {
    let n = sigma.len();
    if forecast.len() != n {
        return Err(Error::Mismatch(format!("{n} observed periods but {} forecast periods", forecast.len())));
    }
    let mut active: Vec<Deferral> = Vec::with_capacity(deferrals.len());
    for &d in deferrals {
        if d.from >= d.to || d.to >= n {
            return Err(Error::InvalidArgument(format!(
                "deferral {} {} -> {} is not forward within 0..{n}",
                d.app, d.from, d.to
            )));
        }
        let keep = match policy {
            AdjustPolicy::Always => true,
            AdjustPolicy::BelowFraction(f) => sigma[d.from][d.app] < f * forecast[d.from][d.app],
        };
        if keep {
            active.push(d);
        }
    }
    // grouped by (app, to): sources deferred into the same target share its usage
    active.sort_by_key(|d| (d.app, d.to, d.from));
    active.dedup();

    let mut out = sigma.to_vec();
    let mut idx = 0;
    while idx < active.len() {
        let (app, to) = (active[idx].app, active[idx].to);
        let end = active[idx..].iter().position(|d| d.app != app || d.to != to).map_or(active.len(), |p| idx + p);
        let sources = &active[idx..end];
        let denom = forecast[to][app] + sources.iter().map(|d| forecast[d.from][app]).sum::<f64>();
        if denom > 0.0 {
            let observed = sigma[to][app];
            for d in sources {
                let credit = forecast[d.from][app] * observed / denom;
                out[d.from][app] += credit;
                out[to][app] -= credit;
            }
        }
        idx = end;
    }

    let mut clamped = 0;
    for cell in out.iter_mut().flat_map(|u| u.0.iter_mut()) {
        if *cell < -1e-9 {
            clamped += 1;
        }
        if *cell < 0.0 {
            *cell = 0.0;
        }
    }
    Ok(Adjusted { sigma: out, clamped })
}
