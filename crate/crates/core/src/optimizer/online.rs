//! Rolling re-optimization over the periods of a day.

use alloc::vec::Vec;

use super::{BudgetState, Choice, GroupKey, MmkpProblem, PendingGroup, Planner, Schedule};
use crate::error::{Error, Result};
use crate::usage::DemandForecast;
use crate::wifi::{update_forecast, MobilityHistory, Place, WifiForecast, WifiProfile};

/// The schedule currently in force and the inputs it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DayPlan {
    /// First period the plan covers.
    pub current: usize,
    pub wifi: WifiForecast,
    pub budget: f64,
    pub problem: MmkpProblem,
    pub schedule: Schedule,
}

impl DayPlan {
    pub fn choice_for(&self, key: GroupKey) -> Option<Choice> {
        let g = self.problem.find_group(key)?;
        self.problem.groups[g].items[*self.schedule.assignment.get(g)?].choice
    }

    /// Warm start for `problem` mapping every group to the item with the
    /// same choice in this plan; unmatched groups take their unconstrained best.
    pub fn warm_start_for(&self, problem: &MmkpProblem) -> Vec<usize> {
        let fallback = problem.unconstrained_argmax();
        problem
            .groups
            .iter()
            .zip(fallback)
            .map(|(g, best)| {
                g.key
                    .and_then(|k| self.choice_for(k))
                    .and_then(|c| g.items.iter().position(|i| i.choice.is_some_and(|ic| same_choice(ic, c))))
                    .unwrap_or(best)
            })
            .collect()
    }
}

fn same_choice(a: Choice, b: Choice) -> bool {
    a.target == b.target && (a.gamma - b.gamma).abs() <= 1e-12 && (a.delta - b.delta).abs() <= 1e-12
}

/// What happened in the period before the one being planned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodObservation {
    /// The period that just ended.
    pub period: usize,
    /// Realized 3G spend in that period.
    pub spend: f64,
    /// WiFi status already visible at the start of the next period, if any.
    pub wifi_now: Option<bool>,
}

/// Source of the refreshed WiFi forecast.
#[derive(Debug, Clone, Copy)]
pub enum WifiUpdate<'a> {
    /// Mobility-model update from the two most recent locations
    /// (`prev2` is `None` when only one period has been observed).
    Markov { profile: &'a WifiProfile, history: &'a MobilityHistory, prev2: Option<&'a Place>, prev1: &'a Place },
    /// Known probabilities, e.g. realized indicators.
    Fixed(&'a WifiForecast),
}

impl Planner {
    /// Builds the problem for periods `current..n` for the configured model.
    pub fn build(
        &self,
        demand: &DemandForecast,
        wifi: &WifiForecast,
        budget: f64,
        current: usize,
        pending: &[PendingGroup],
    ) -> MmkpProblem {
        match self.extension {
            None => self.build_mmkp(demand, wifi, budget, current, pending),
            Some(scale) => {
                // no WiFi expected means no WiFi capacity, even at an infinite scale
                let alpha: Vec<f64> =
                    (0..self.n).map(|l| if wifi.get(l) > 0.0 { wifi.get(l) * scale } else { 0.0 }).collect();
                self.build_mmkp_ext(demand, &alpha, budget, current, pending)
            }
        }
    }

    pub fn solve(&self, problem: &MmkpProblem, warm_start: Option<&[usize]>) -> Schedule {
        match self.solver {
            super::SolverKind::Lagrange => super::solve_lagrange(problem, warm_start),
            super::SolverKind::BruteForce => {
                super::solve_bruteforce(problem).unwrap_or_else(|_| super::solve_lagrange(problem, warm_start))
            }
        }
    }

    pub fn plan(
        &self,
        demand: &DemandForecast,
        wifi: WifiForecast,
        budget: f64,
        current: usize,
        pending: &[PendingGroup],
        previous: Option<&DayPlan>,
    ) -> DayPlan {
        let problem = self.build(demand, &wifi, budget, current, pending);
        let warm = previous.map(|p| p.warm_start_for(&problem));
        let schedule = self.solve(&problem, warm.as_deref());
        DayPlan { current, wifi, budget, problem, schedule }
    }
}

/// Re-plans from period `obs.period + 1`: charges the realized spend,
/// refreshes the WiFi forecast and re-solves with the old schedule as warm
/// start. `pending` are sessions already observed but not yet executed.
pub fn online_step(
    planner: &Planner,
    state: BudgetState,
    previous: &DayPlan,
    obs: &PeriodObservation,
    update: WifiUpdate<'_>,
    demand: &DemandForecast,
    pending: &[PendingGroup],
) -> Result<(BudgetState, DayPlan)> {
    let i = obs.period + 1;
    if i >= planner.n {
        return Err(Error::InvalidArgument(alloc::format!("no period left after {}", obs.period)));
    }
    let mut state = state;
    state.record_spend(obs.spend.max(0.0));
    let mut wifi = match update {
        WifiUpdate::Markov { profile, history, prev2, prev1 } => update_forecast(profile, history, i, prev2, prev1)?,
        WifiUpdate::Fixed(f) => WifiForecast { as_of: i, ..f.clone() },
    };
    if let Some(now) = obs.wifi_now {
        if let Some(w) = wifi.w.get_mut(i) {
            *w = if now { 1.0 } else { 0.0 };
        }
    }
    let plan = planner.plan(demand, wifi, state.remaining_today(), i, pending, Some(previous));
    Ok((state, plan))
}
