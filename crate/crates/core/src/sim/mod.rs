//! Day-by-day trace-driven simulation of AMUSE and the baselines.
//!
//! Each user is trained on the first `window` days of their trace and then
//! replayed day by day. WiFi availability always comes from the trace, so
//! every algorithm faces the same environment. Sessions that arrive in a
//! period are known to the scheduler when it plans that period; later
//! periods are planned from the usage forecast.

mod compare;
pub mod synthetic;

pub use compare::{compare, ecdf, AlgorithmComparison, CdfPoint, Comparison, GroupMean, UserGroup, UserRatio};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::execution::ExecutionRecord;
use crate::optimizer::{
    online_step, per_period_select, BudgetState, Choice, DayPlan, GroupKey, Network, PendingGroup, PeriodGroup,
    PeriodObservation, Planner, SolverKind, WifiUpdate,
};
use crate::trace::{App, AppUsage, DayTrace, KindMap, PricingPlan, RateGrid};
use crate::usage::{adjust_for_deferrals, forecast_usage, AdjustPolicy, DemandForecast, Deferral, ObservedUsage};
use crate::utility::ParamTable;
use crate::wifi::{fit_profile, initial_forecast, prediction_accuracy, update_forecast, MobilityHistory, WifiForecast, WifiProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Algorithm {
    Amuse,
    OnTheSpot,
    Delayed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Amuse, Algorithm::OnTheSpot, Algorithm::Delayed];

    pub const fn name(self) -> &'static str {
        match self {
            Algorithm::Amuse => "amuse",
            Algorithm::OnTheSpot => "on-the-spot",
            Algorithm::Delayed => "delayed",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "amuse" => Ok(Algorithm::Amuse),
            "on-the-spot" | "onthespot" | "spot" => Ok(Algorithm::OnTheSpot),
            "delayed" => Ok(Algorithm::Delayed),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// How each user's monthly budget is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum BudgetSpec {
    Fixed { amount: f64 },
    /// Normal draw rejected until it falls in `[lo, hi]`.
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec::TruncatedNormal { mean: 30.0, sd: 5.0, lo: 20.0, hi: 40.0 }
    }
}

impl BudgetSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BudgetSpec::Fixed { amount } if !(amount >= 0.0) => {
                Err(Error::Config(format!("monthly budget must be non-negative, got {amount}")))
            }
            BudgetSpec::TruncatedNormal { mean, sd, lo, hi } => {
                if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
                    return Err(Error::Config(format!("budget distribution N({mean}, {sd}) is not valid")));
                }
                if !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() {
                    return Err(Error::Config(format!("budget bounds [{lo}, {hi}] are not valid")));
                }
                if sd == 0.0 && !(lo..=hi).contains(&mean) {
                    return Err(Error::Config(format!("degenerate budget {mean} lies outside [{lo}, {hi}]")));
                }
                Ok(())
            }
            BudgetSpec::Fixed { .. } => Ok(()),
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        self.validate()?;
        match *self {
            BudgetSpec::Fixed { amount } => Ok(amount),
            BudgetSpec::TruncatedNormal { mean, sd, lo, hi } => {
                if sd == 0.0 {
                    return Ok(mean);
                }
                let normal = Normal::new(mean, sd).map_err(|e| Error::Config(format!("budget distribution: {e}")))?;
                for _ in 0..10_000 {
                    let x = normal.sample(rng);
                    if (lo..=hi).contains(&x) {
                        return Ok(x);
                    }
                }
                // bounds far in the tail: fall back to uniform inside them
                Ok(lo + (hi - lo) * rng.random::<f64>())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimConfig {
    /// Periods per day.
    pub n: usize,
    pub grid: RateGrid,
    /// Currency per normalized volume unit.
    pub price: f64,
    pub kinds: KindMap,
    pub params: ParamTable,
    /// Training days, also the moving-average window.
    pub window: usize,
    /// Longest wait of the delayed baseline.
    pub deadline: usize,
    pub fair_share: bool,
    pub budget: BudgetSpec,
    pub month_len: u32,
    pub billing_day: u32,
    pub solver: SolverKind,
    /// WiFi capacity scale of the network-choice model; `None` for the base model.
    pub extension: Option<f64>,
    /// The WiFi status of the period being planned is known to the scheduler.
    pub observe_current_wifi: bool,
    /// Postpone 3G sessions once today's allowance is spent.
    pub strict_budget: bool,
    pub adjust: AdjustPolicy,
    /// Plan with the realized WiFi and demand of the day instead of forecasts.
    pub perfect_information: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 24,
            grid: RateGrid::default(),
            price: PricingPlan::per_unit_from_gb(10.0, 1e6),
            kinds: KindMap::default(),
            params: ParamTable::default(),
            window: 3,
            deadline: 1,
            fair_share: true,
            budget: BudgetSpec::default(),
            month_len: 30,
            billing_day: 0,
            solver: SolverKind::Lagrange,
            extension: None,
            observe_current_wifi: true,
            strict_budget: false,
            adjust: AdjustPolicy::Always,
            perfect_information: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("a day needs at least one period".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("the training window must be at least one day".into()));
        }
        if self.month_len == 0 {
            return Err(Error::Config("a billing month needs at least one day".into()));
        }
        if !(self.price > 0.0) || !self.price.is_finite() {
            return Err(Error::Config(format!("unit price must be positive, got {}", self.price)));
        }
        self.grid.validate().map_err(|e| Error::Config(format!("rate grid: {e}")))?;
        for app in App::ALL {
            self.params.get(app).validate().map_err(|e| Error::Config(format!("{app}: {e}")))?;
        }
        if let Some(scale) = self.extension {
            if !(scale >= 0.0) {
                return Err(Error::Config(format!("WiFi capacity scale must be non-negative, got {scale}")));
            }
            if !self.grid.includes_zero {
                return Err(Error::Config("the network-choice model needs an extended rate grid".into()));
            }
        }
        if let AdjustPolicy::BelowFraction(f) = self.adjust {
            if !(f > 0.0) {
                return Err(Error::Config(format!("adjustment threshold must be positive, got {f}")));
            }
        }
        self.budget.validate()
    }

    pub fn planner(&self) -> Planner {
        Planner {
            n: self.n,
            grid: self.grid.clone(),
            price: self.price,
            kinds: self.kinds,
            params: self.params,
            solver: self.solver,
            extension: self.extension,
        }
    }

    /// Day of the billing month (0-based) and the days left including today.
    fn month_position(&self, day_index: u32) -> (u32, u32) {
        let len = self.month_len;
        let pos = (day_index % len + len - self.billing_day % len) % len;
        (pos, len - pos)
    }
}

/// Everything the scheduler has learned about one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub profile: WifiProfile,
    pub history: MobilityHistory,
    pub usage: ObservedUsage,
    pub monthly_budget: f64,
    pub remaining_month: f64,
}

impl UserState {
    pub fn train(config: &SimConfig, training: &[DayTrace], monthly_budget: f64) -> Result<Self> {
        for d in training {
            d.validate(config.n)?;
        }
        let (profile, history) = fit_profile(training)?;
        let mut usage = ObservedUsage::new(config.n);
        for d in training {
            usage.set_day(d.day_index, d.periods.iter().map(|p| p.usage).collect())?;
        }
        Ok(UserState { profile, history, usage, monthly_budget, remaining_month: monthly_budget })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DaySummary {
    pub day: u32,
    pub utility: f64,
    pub spend: f64,
    /// Volume carried over WiFi.
    pub offloaded: f64,
    /// Volume carried over either network.
    pub volume: f64,
    /// Session sizes in the trace (seconds for fixed-time apps).
    pub demand: f64,
    pub budget: f64,
    pub overshoot: bool,
    pub forced: usize,
    /// One-step-ahead WiFi forecast accuracy; absent under perfect information.
    pub wifi_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub records: Vec<ExecutionRecord>,
    pub summary: DaySummary,
}

/// Replays one day under `algorithm` and folds it into `state`.
pub fn run_day(config: &SimConfig, state: &mut UserState, day: &DayTrace, algorithm: Algorithm) -> Result<DayOutcome> {
    day.validate(config.n)?;
    let planner = config.planner();
    let (pos, days_left) = config.month_position(day.day_index);
    if pos == 0 {
        state.remaining_month = state.monthly_budget;
    }
    let budget = BudgetState::start_day(state.remaining_month, days_left)?;
    let forecast = if config.perfect_information {
        DemandForecast { s: day.periods.iter().map(|p| p.usage).collect(), window: config.window }
    } else {
        forecast_usage(&state.usage, config.window)?
    };

    let wifi_accuracy = if config.perfect_information { None } else { Some(one_step_accuracy(state, day)?) };
    let (records, budget) = match algorithm {
        Algorithm::Amuse => run_amuse(config, &planner, state, day, &forecast, budget)?,
        Algorithm::OnTheSpot | Algorithm::Delayed => {
            let policy = if algorithm == Algorithm::OnTheSpot {
                BaselineConfig::on_the_spot()
            } else {
                BaselineConfig::delayed(config.deadline)
            };
            let records = BaselineConfig { fair_share: config.fair_share, ..policy }.run(&planner, day);
            let mut budget = budget;
            budget.record_spend(records.iter().map(|r| r.spend).sum());
            (records, budget)
        }
    };

    let summary = summarize(config, day, &records, &budget, wifi_accuracy);
    learn_day(config, state, day, &records, &forecast)?;
    state.remaining_month = budget.month_after_today();
    Ok(DayOutcome { records, summary })
}

fn summarize(
    config: &SimConfig,
    day: &DayTrace,
    records: &[ExecutionRecord],
    budget: &BudgetState,
    wifi_accuracy: Option<f64>,
) -> DaySummary {
    let volume = |r: &ExecutionRecord| r.volume(config.kinds.kind(r.app));
    DaySummary {
        day: day.day_index,
        utility: records.iter().map(|r| r.utility).sum(),
        spend: records.iter().map(|r| r.spend).sum(),
        offloaded: records.iter().filter(|r| r.network == Network::Wifi).map(volume).sum(),
        volume: records.iter().map(volume).sum(),
        demand: day.totals().total(),
        budget: budget.daily,
        overshoot: budget.overshot(),
        forced: records.iter().filter(|r| r.forced).count(),
        wifi_accuracy,
    }
}

/// Adds the day to the mobility model and the deferral-adjusted usage history.
fn learn_day(
    config: &SimConfig,
    state: &mut UserState,
    day: &DayTrace,
    records: &[ExecutionRecord],
    forecast: &DemandForecast,
) -> Result<()> {
    let mut sigma = vec![AppUsage::ZERO; config.n];
    let mut deferrals = Vec::new();
    for r in records {
        sigma[r.executed][r.app] += r.size;
        if r.executed > r.origin {
            deferrals.push(Deferral { app: r.app, from: r.origin, to: r.executed });
        }
    }
    let adjusted = adjust_for_deferrals(&sigma, &forecast.s, &deferrals, config.adjust)?;
    state.usage.set_day(day.day_index, adjusted.sigma)?;
    state.profile.add_day(day)?;
    state.history.add_day(day)?;
    Ok(())
}

/// Accuracy of the forecast `w_i` made at the start of each period `i`.
fn one_step_accuracy(state: &UserState, day: &DayTrace) -> Result<f64> {
    let n = day.n();
    let mut w = Vec::with_capacity(n);
    w.push(initial_forecast(&state.profile, &state.history)?.get(0));
    for i in 1..n {
        let prev2 = (i >= 2).then(|| &day.periods[i - 2].location);
        let f = update_forecast(&state.profile, &state.history, i, prev2, &day.periods[i - 1].location)?;
        w.push(f.get(i));
    }
    let realized: Vec<bool> = day.periods.iter().map(|p| p.wifi_available).collect();
    prediction_accuracy(&w, &realized)
}

fn run_amuse(
    config: &SimConfig,
    planner: &Planner,
    state: &UserState,
    day: &DayTrace,
    forecast: &DemandForecast,
    mut budget: BudgetState,
) -> Result<(Vec<ExecutionRecord>, BudgetState)> {
    let n = config.n;
    let realized: Vec<f64> = day.periods.iter().map(|p| if p.wifi_available { 1.0 } else { 0.0 }).collect();
    let perfect = WifiForecast::fixed(realized.clone());
    let top_gamma = planner.grid.positive_gamma().fold(0.0, f64::max);
    let min_gamma = planner.grid.min_gamma();

    let mut demand = forecast.clone();
    let mut pending: Vec<PendingGroup> = Vec::new();
    let mut postponed: BTreeSet<GroupKey> = BTreeSet::new();
    let mut records = Vec::new();
    let mut plan: Option<DayPlan> = None;
    let mut last_spend = 0.0;

    for i in 0..n {
        let wifi_here = day.periods[i].wifi_available;
        // this period's sessions are observed, so they replace its forecast
        for (app, size) in day.periods[i].usage.iter().filter(|&(_, s)| s > 0.0) {
            let key = GroupKey { origin: i, app };
            let choice = plan
                .as_ref()
                .and_then(|p| p.choice_for(key))
                .unwrap_or(Choice { target: i, gamma: top_gamma, delta: 0.0 });
            pending.push(PendingGroup { origin: i, app, size, choice });
        }
        if let Some(row) = demand.s.get_mut(i) {
            *row = AppUsage::ZERO;
        }

        let next = if i == 0 {
            let mut wifi = if config.perfect_information {
                perfect.clone()
            } else {
                initial_forecast(&state.profile, &state.history)?
            };
            if config.observe_current_wifi {
                wifi.w[0] = realized[0];
            }
            planner.plan(&demand, wifi, budget.daily, 0, &pending, None)
        } else {
            let prev = plan.as_ref().expect("plan exists after period 0");
            let obs = PeriodObservation {
                period: i - 1,
                spend: last_spend,
                wifi_now: config.observe_current_wifi.then_some(wifi_here),
            };
            let update = if config.perfect_information {
                WifiUpdate::Fixed(&perfect)
            } else {
                WifiUpdate::Markov {
                    profile: &state.profile,
                    history: &state.history,
                    prev2: (i >= 2).then(|| &day.periods[i - 2].location),
                    prev1: &day.periods[i - 1].location,
                }
            };
            let (b, p) = online_step(planner, budget, prev, &obs, update, &demand, &pending)?;
            budget = b;
            p
        };
        for p in &mut pending {
            if let Some(c) = next.choice_for(GroupKey { origin: p.origin, app: p.app }) {
                p.choice = c;
            }
        }
        plan = Some(next);

        let last = i + 1 == n;
        let (due, rest): (Vec<PendingGroup>, Vec<PendingGroup>) =
            pending.into_iter().partition(|p| last || p.choice.target <= i);
        pending = rest;

        // (group, network, rate) before the budget check
        let mut decided: Vec<(PendingGroup, Network, f64)> = Vec::with_capacity(due.len());
        match config.extension {
            None => {
                for p in due {
                    if wifi_here {
                        decided.push((p, Network::Wifi, 1.0));
                    } else {
                        let gamma = if p.choice.gamma > 0.0 { p.choice.gamma } else { min_gamma };
                        decided.push((p, Network::Cellular, gamma));
                    }
                }
            }
            Some(scale) => {
                let alpha = if wifi_here { scale } else { 0.0 };
                let groups: Vec<PeriodGroup> = due
                    .iter()
                    .map(|p| PeriodGroup {
                        key: GroupKey { origin: p.origin, app: p.app },
                        size: p.size,
                        planned_gamma: p.choice.gamma,
                    })
                    .collect();
                let selections = per_period_select(planner, i, &groups, alpha);
                for (p, s) in due.into_iter().zip(selections) {
                    decided.push((p, s.network, s.rate));
                }
            }
        }

        let mut spend = 0.0;
        for (p, network, rate) in decided {
            let key = GroupKey { origin: p.origin, app: p.app };
            let mut rate = rate;
            if network == Network::Cellular && config.strict_budget {
                let cost = planner.cell_spend(p.app, rate, p.size);
                if budget.remaining_today() - spend < cost - 1e-12 {
                    if !last {
                        postponed.insert(key);
                        pending.push(p);
                        continue;
                    }
                    rate = min_gamma;
                }
            }
            let mut record = planner.execute(p.origin, p.app, i, network, rate, p.size);
            record.forced = postponed.contains(&key);
            spend += record.spend;
            records.push(record);
        }
        last_spend = spend;
    }
    budget.record_spend(last_spend);
    Ok((records, budget))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserTrace {
    pub user: String,
    pub days: Vec<DayTrace>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserReport {
    pub user: String,
    pub monthly_budget: f64,
    pub utility: f64,
    pub spend: f64,
    pub offloaded: f64,
    pub volume: f64,
    pub demand: f64,
    pub overshoot_days: usize,
    pub forced: usize,
    pub days: Vec<DaySummary>,
}

impl UserReport {
    fn from_days(user: String, monthly_budget: f64, days: Vec<DaySummary>) -> Self {
        UserReport {
            user,
            monthly_budget,
            utility: days.iter().map(|d| d.utility).sum(),
            spend: days.iter().map(|d| d.spend).sum(),
            offloaded: days.iter().map(|d| d.offloaded).sum(),
            volume: days.iter().map(|d| d.volume).sum(),
            demand: days.iter().map(|d| d.demand).sum(),
            overshoot_days: days.iter().filter(|d| d.overshoot).count(),
            forced: days.iter().map(|d| d.forced).sum(),
            days,
        }
    }

    /// Mean one-step WiFi forecast accuracy over the days that report it.
    pub fn wifi_accuracy(&self) -> Option<f64> {
        let acc: Vec<f64> = self.days.iter().filter_map(|d| d.wifi_accuracy).collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_hash: Option<String>,
    pub users: Vec<UserReport>,
}

impl SimReport {
    pub fn mean_utility(&self) -> f64 {
        mean(self.users.iter().map(|u| u.utility))
    }

    pub fn mean_spend(&self) -> f64 {
        mean(self.users.iter().map(|u| u.spend))
    }

    pub fn mean_offloaded(&self) -> f64 {
        mean(self.users.iter().map(|u| u.offloaded))
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Monthly budget of the `index`-th user; identical for every algorithm.
pub fn user_budget(config: &SimConfig, index: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    config.budget.draw(&mut rng)
}

/// Simulates one user under one algorithm.
pub fn run_user(config: &SimConfig, index: usize, trace: &UserTrace, algorithm: Algorithm) -> Result<UserReport> {
    if trace.days.len() <= config.window {
        return Err(Error::Validation(format!(
            "user {} has {} days; at least {} are needed ({} for training)",
            trace.user,
            trace.days.len(),
            config.window + 1,
            config.window
        )));
    }
    let monthly_budget = user_budget(config, index)?;
    let (training, evaluation) = trace.days.split_at(config.window);
    let named = |e: Error| Error::Validation(format!("user {}: {e}", trace.user));
    let mut state = UserState::train(config, training, monthly_budget).map_err(named)?;
    let mut days = Vec::with_capacity(evaluation.len());
    for day in evaluation {
        days.push(run_day(config, &mut state, day, algorithm).map_err(named)?.summary);
    }
    Ok(UserReport::from_days(trace.user.clone(), monthly_budget, days))
}

/// Trains on the first `window` days of every user and simulates the rest
/// under each algorithm.
pub fn run_trial(users: &[UserTrace], config: &SimConfig, algorithms: &[Algorithm]) -> Result<Vec<SimReport>> {
    config.validate()?;
    if users.is_empty() {
        return Err(Error::Empty("user traces"));
    }
    algorithms
        .iter()
        .map(|&algorithm| {
            let users = users
                .iter()
                .enumerate()
                .map(|(idx, u)| run_user(config, idx, u, algorithm))
                .collect::<Result<Vec<_>>>()?;
            Ok(SimReport { algorithm, seed: config.seed, config_hash: None, users })
        })
        .collect()
}
