//! Domain types for mobility, WiFi and usage traces.
//!
//! Fixed-volume usage is held in normalized volume units: bytes divided by
//! the WiFi speed in bytes per second, so WiFi always completes one unit per
//! second. Fixed-time usage is held in seconds.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};
use core::str::FromStr;

use crate::error::{Error, Result};

/// Application types scheduled by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum App {
    Email,
    Browsing,
    Video,
    SocialNetworking,
    Downloads,
}

impl App {
    pub const ALL: [App; 5] = [App::Email, App::Browsing, App::Video, App::SocialNetworking, App::Downloads];
    pub const COUNT: usize = 5;

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            App::Email => "email",
            App::Browsing => "browsing",
            App::Video => "video",
            App::SocialNetworking => "social_networking",
            App::Downloads => "downloads",
        }
    }

    /// Video is fixed-time (streaming); everything else is fixed-volume.
    pub const fn default_kind(self) -> AppKind {
        match self {
            App::Video => AppKind::FixedTime,
            _ => AppKind::FixedVolume,
        }
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for App {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "email" => Ok(App::Email),
            "browsing" | "web" => Ok(App::Browsing),
            "video" | "streaming" => Ok(App::Video),
            "social_networking" | "socialnetworking" | "social" => Ok(App::SocialNetworking),
            "downloads" | "download" => Ok(App::Downloads),
            _ => Err(Error::InvalidArgument(format!("unknown application `{s}`"))),
        }
    }
}

/// Whether a session's size is a volume or a duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AppKind {
    /// Volume does not depend on rate (downloads, email). Size is volume.
    FixedVolume,
    /// Duration is fixed and volume scales with rate (streaming). Size is seconds.
    FixedTime,
}

/// Assignment of every application to exactly one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindMap([AppKind; App::COUNT]);

impl Default for KindMap {
    fn default() -> Self {
        KindMap(App::ALL.map(App::default_kind))
    }
}

impl KindMap {
    pub fn kind(&self, app: App) -> AppKind {
        self.0[app.index()]
    }

    pub fn set(&mut self, app: App, kind: AppKind) {
        self.0[app.index()] = kind;
    }
}

/// One value per application.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AppUsage(pub [f64; App::COUNT]);

impl AppUsage {
    pub const ZERO: AppUsage = AppUsage([0.0; App::COUNT]);

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (App, f64)> + '_ {
        App::ALL.iter().map(move |&a| (a, self.0[a.index()]))
    }

    pub fn scaled(&self, factor: f64) -> AppUsage {
        AppUsage(self.0.map(|v| v * factor))
    }
}

impl Index<App> for AppUsage {
    type Output = f64;

    fn index(&self, app: App) -> &f64 {
        &self.0[app.index()]
    }
}

impl IndexMut<App> for AppUsage {
    fn index_mut(&mut self, app: App) -> &mut f64 {
        &mut self.0[app.index()]
    }
}

/// Opaque location identifier taken verbatim from the trace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LocationId(pub String);

impl LocationId {
    pub fn new(id: impl Into<String>) -> Self {
        LocationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LocationId {
    fn from(s: &str) -> Self {
        LocationId(String::from(s))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodRecord {
    pub location: Option<LocationId>,
    pub wifi_available: bool,
    pub usage: AppUsage,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DayTrace {
    pub day_index: u32,
    pub periods: Vec<PeriodRecord>,
}

impl DayTrace {
    /// A day with `n` empty periods and no observed location.
    pub fn empty(day_index: u32, n: usize) -> Self {
        DayTrace { day_index, periods: alloc::vec![PeriodRecord::default(); n] }
    }

    pub fn n(&self) -> usize {
        self.periods.len()
    }

    /// Per-application usage summed over the day.
    pub fn totals(&self) -> AppUsage {
        let mut acc = AppUsage::ZERO;
        for p in &self.periods {
            for a in App::ALL {
                acc[a] += p.usage[a];
            }
        }
        acc
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.periods.len() != n {
            return Err(Error::Validation(format!(
                "day {} has {} periods, expected {n}",
                self.day_index,
                self.periods.len()
            )));
        }
        for (k, p) in self.periods.iter().enumerate() {
            for (app, v) in p.usage.iter() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "day {} period {k}: {app} usage {v} is not a finite non-negative size",
                        self.day_index
                    )));
                }
            }
            if p.wifi_available && p.location.is_none() {
                return Err(Error::Validation(format!(
                    "day {} period {k}: WiFi access without an observed location",
                    self.day_index
                )));
            }
        }
        Ok(())
    }
}

/// Converts raw bytes to normalized volume (WiFi-seconds).
pub fn normalize_volume(bytes: f64, wifi_speed: f64) -> Result<f64> {
    if !(wifi_speed > 0.0) {
        return Err(Error::InvalidArgument(format!("wifi speed must be positive, got {wifi_speed}")));
    }
    Ok(bytes / wifi_speed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PricingPlan {
    /// Currency per normalized volume unit.
    pub unit_price: f64,
    pub monthly_budget: f64,
    pub billing_day: u32,
}

impl PricingPlan {
    pub fn new(unit_price: f64, monthly_budget: f64, billing_day: u32) -> Result<Self> {
        if !(unit_price > 0.0) {
            return Err(Error::InvalidArgument(format!("unit price must be positive, got {unit_price}")));
        }
        if !(monthly_budget >= 0.0) {
            return Err(Error::InvalidArgument(format!("monthly budget must be non-negative, got {monthly_budget}")));
        }
        Ok(PricingPlan { unit_price, monthly_budget, billing_day })
    }

    /// Per-unit price from a price per gigabyte and the WiFi speed used for normalization.
    pub fn per_unit_from_gb(price_per_gb: f64, wifi_speed_bytes_per_sec: f64) -> f64 {
        price_per_gb * wifi_speed_bytes_per_sec / 1e9
    }
}

/// Candidate 3G rates `gamma`, the 3G cap `beta` and WiFi rates `delta`,
/// all relative to a WiFi speed of 1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateGrid {
    pub gamma: Vec<f64>,
    pub beta: f64,
    pub delta: Vec<f64>,
    pub includes_zero: bool,
}

impl Default for RateGrid {
    fn default() -> Self {
        RateGrid { gamma: alloc::vec![0.25, 0.5, 1.0], beta: 1.0, delta: alloc::vec![1.0], includes_zero: false }
    }
}

impl RateGrid {
    /// Grid for the base problem: every rate strictly positive.
    pub fn base(mut gamma: Vec<f64>, beta: f64) -> Result<Self> {
        sort_rates(&mut gamma);
        let grid = RateGrid { gamma, beta, delta: alloc::vec![1.0], includes_zero: false };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid for the network-choice extension; 0 is added to both sets.
    pub fn extended(mut gamma: Vec<f64>, beta: f64, mut delta: Vec<f64>) -> Result<Self> {
        gamma.push(0.0);
        delta.push(0.0);
        sort_rates(&mut gamma);
        sort_rates(&mut delta);
        let grid = RateGrid { gamma, beta, delta, includes_zero: true };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.gamma.iter().filter(|&&g| g > 0.0).count();
        if positive == 0 {
            return Err(Error::Validation("rate grid needs at least one positive 3G rate".into()));
        }
        if !self.includes_zero && self.gamma.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Validation("base rate grid must not contain 0 or negative rates".into()));
        }
        if self.gamma.iter().chain(&self.delta).any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::Validation("rates must be finite and non-negative".into()));
        }
        if !self.gamma.windows(2).all(|w| w[0] < w[1]) || !self.delta.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation("rates must be strictly ascending".into()));
        }
        let max = self.gamma.iter().copied().fold(0.0, f64::max);
        if max > self.beta {
            return Err(Error::Validation(format!("largest 3G rate {max} exceeds the cap {}", self.beta)));
        }
        Ok(())
    }

    pub fn positive_gamma(&self) -> impl Iterator<Item = f64> + '_ {
        self.gamma.iter().copied().filter(|&g| g > 0.0)
    }

    pub fn positive_delta(&self) -> impl Iterator<Item = f64> + '_ {
        self.delta.iter().copied().filter(|&d| d > 0.0)
    }

    pub fn min_gamma(&self) -> f64 {
        self.positive_gamma().fold(f64::INFINITY, f64::min)
    }
}

fn sort_rates(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}
