use alloc::format;

use crate::error::{Error, Result};

/// Daily spending allowance `(B_r / m) exp(1 - 1/m)`.
///
/// The factor lets early days spend above the flat average and equals 1 on
/// the last day of the month, when only the remainder may be spent.
pub fn daily_budget(remaining: f64, days_left: u32) -> Result<f64> {
    if days_left < 1 {
        return Err(Error::InvalidArgument("at least one day must remain in the month".into()));
    }
    if !(remaining >= 0.0) {
        return Err(Error::InvalidArgument(format!("remaining budget must be non-negative, got {remaining}")));
    }
    if days_left == 1 {
        return Ok(remaining);
    }
    let m = f64::from(days_left);
    Ok(remaining / m * libm::exp(1.0 - 1.0 / m))
}

/// Budget bookkeeping for the current day.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetState {
    /// Unspent part of the monthly budget at the start of today.
    pub remaining_month: f64,
    pub days_left: u32,
    /// Today's allowance.
    pub daily: f64,
    /// Realized 3G spend so far today.
    pub spent_today: f64,
}

impl BudgetState {
    pub fn start_day(remaining_month: f64, days_left: u32) -> Result<Self> {
        let daily = daily_budget(remaining_month.max(0.0), days_left)?;
        Ok(BudgetState { remaining_month, days_left, daily, spent_today: 0.0 })
    }

    /// Allowance left for the rest of today; negative after an overshoot.
    pub fn remaining_today(&self) -> f64 {
        self.daily - self.spent_today
    }

    pub fn record_spend(&mut self, spend: f64) {
        debug_assert!(spend >= 0.0);
        self.spent_today += spend;
    }

    pub fn overshot(&self) -> bool {
        self.spent_today > self.daily + super::FEAS_TOL
    }

    /// Monthly remainder after today's spend.
    pub fn month_after_today(&self) -> f64 {
        self.remaining_month - self.spent_today
    }
}
