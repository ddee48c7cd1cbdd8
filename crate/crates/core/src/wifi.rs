//! WiFi availability forecasting.
//!
//! A [`WifiProfile`] holds the probability `v_k(l)` that the user actually
//! connects to WiFi when at location `l` during period `k`. A
//! [`MobilityHistory`] holds location n-gram counts over the training days
//! and drives a second-order Markov location prediction. Combining the two
//! gives the overall WiFi probability `w_k` for each remaining period.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::trace::{DayTrace, LocationId};

/// A location symbol; `None` is the unknown location of a period without a
/// observed location, which never carries WiFi.
pub type Place = Option<LocationId>;

type Dist = BTreeMap<Place, u32>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WifiProfile {
    n: usize,
    /// (period, location) -> (days located there, days WiFi was used there).
    counts: BTreeMap<(usize, LocationId), (u32, u32)>,
}

impl WifiProfile {
    pub fn new(n: usize) -> Self {
        WifiProfile { n, counts: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_day(&mut self, day: &DayTrace) -> Result<()> {
        check_len(day, self.n)?;
        for (k, p) in day.periods.iter().enumerate() {
            if let Some(loc) = &p.location {
                let e = self.counts.entry((k, loc.clone())).or_insert((0, 0));
                e.0 += 1;
                if p.wifi_available {
                    e.1 += 1;
                }
            }
        }
        Ok(())
    }

    /// `v_k(l)`, or `None` when `l` was never visited in period `k`.
    pub fn probability(&self, period: usize, loc: &LocationId) -> Option<f64> {
        self.counts
            .get(&(period, loc.clone()))
            .map(|&(seen, used)| f64::from(used) / f64::from(seen))
    }

    /// `v_k(l)` with unvisited locations and the unknown place at 0.
    pub fn value(&self, period: usize, place: &Place) -> f64 {
        place.as_ref().and_then(|l| self.probability(period, l)).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MobilityHistory {
    n: usize,
    days: u32,
    /// `N^k(l)` per period.
    unigram: Vec<Dist>,
    /// `N^k(a l)` keyed by (k, a).
    bigram: BTreeMap<(usize, Place), Dist>,
    /// `N^k(a b l)` keyed by (k, a, b).
    trigram: BTreeMap<(usize, Place, Place), Dist>,
}

impl MobilityHistory {
    pub fn new(n: usize) -> Self {
        MobilityHistory { n, days: 0, unigram: vec![Dist::new(); n], ..Default::default() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of training days `N`.
    pub fn days(&self) -> u32 {
        self.days
    }

    pub fn add_day(&mut self, day: &DayTrace) -> Result<()> {
        check_len(day, self.n)?;
        let seq: Vec<Place> = day.periods.iter().map(|p| p.location.clone()).collect();
        for k in 0..self.n {
            *self.unigram[k].entry(seq[k].clone()).or_insert(0) += 1;
            if k >= 1 {
                *self.bigram.entry((k, seq[k - 1].clone())).or_default().entry(seq[k].clone()).or_insert(0) += 1;
            }
            if k >= 2 {
                *self
                    .trigram
                    .entry((k, seq[k - 2].clone(), seq[k - 1].clone()))
                    .or_default()
                    .entry(seq[k].clone())
                    .or_insert(0) += 1;
            }
        }
        self.days += 1;
        Ok(())
    }

    /// `N^k(l)`.
    pub fn count1(&self, k: usize, l: &Place) -> u32 {
        self.unigram.get(k).and_then(|d| d.get(l)).copied().unwrap_or(0)
    }

    /// `N^k(a l)`: `a` in period `k - 1`, `l` in period `k`.
    pub fn count2(&self, k: usize, a: &Place, l: &Place) -> u32 {
        self.bigram.get(&(k, a.clone())).and_then(|d| d.get(l)).copied().unwrap_or(0)
    }

    /// `N^k(a b l)`: `a`, `b`, `l` in periods `k - 2`, `k - 1`, `k`.
    pub fn count3(&self, k: usize, a: &Place, b: &Place, l: &Place) -> u32 {
        self.trigram.get(&(k, a.clone(), b.clone())).and_then(|d| d.get(l)).copied().unwrap_or(0)
    }

    /// Locations observed in period `k` (`L_k`).
    pub fn locations(&self, k: usize) -> impl Iterator<Item = &Place> + '_ {
        self.unigram.get(k).into_iter().flat_map(|d| d.keys())
    }

    /// Distribution of the location in period `k` given the two preceding
    /// locations, falling back to first order when the pair is unseen.
    fn transition(&self, k: usize, prev2: Option<&Place>, prev1: &Place) -> Option<(&Dist, u32)> {
        if let Some(a) = prev2 {
            let pair = self.count2(k - 1, a, prev1);
            if pair > 0 {
                if let Some(d) = self.trigram.get(&(k, a.clone(), prev1.clone())) {
                    return Some((d, pair));
                }
            }
        }
        let single = self.count1(k - 1, prev1);
        if single > 0 {
            if let Some(d) = self.bigram.get(&(k, prev1.clone())) {
                return Some((d, single));
            }
        }
        None
    }
}

fn check_len(day: &DayTrace, n: usize) -> Result<()> {
    if day.periods.len() != n {
        return Err(Error::Validation(format!(
            "day {} has {} periods, expected {n}",
            day.day_index,
            day.periods.len()
        )));
    }
    Ok(())
}

/// Per-period WiFi probabilities as forecast at the start of period `as_of`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WifiForecast {
    /// One entry per period of the day; entries before `as_of` are stale.
    pub w: Vec<f64>,
    pub as_of: usize,
    /// Periods whose first-order context was never observed (forecast 0).
    pub unseen_context: Vec<usize>,
}

impl WifiForecast {
    pub fn get(&self, k: usize) -> f64 {
        self.w.get(k).copied().unwrap_or(0.0)
    }

    /// A forecast with known values, e.g. realized indicators.
    pub fn fixed(w: Vec<f64>) -> Self {
        WifiForecast { w, as_of: 0, unseen_context: Vec::new() }
    }
}

pub fn fit_profile(training: &[DayTrace]) -> Result<(WifiProfile, MobilityHistory)> {
    let first = training.first().ok_or(Error::Empty("WiFi training set"))?;
    let n = first.n();
    let mut profile = WifiProfile::new(n);
    let mut history = MobilityHistory::new(n);
    for day in training {
        profile.add_day(day)?;
        history.add_day(day)?;
    }
    Ok((profile, history))
}

fn clamp_probability(w: f64) -> f64 {
    debug_assert!(w > -1e-9 && w < 1.0 + 1e-9, "WiFi probability drifted to {w}");
    w.clamp(0.0, 1.0)
}

/// Forecast for the whole day before any period is observed:
/// `w_k = sum_l v_k(l) N^k(l) / N`.
pub fn initial_forecast(profile: &WifiProfile, history: &MobilityHistory) -> Result<WifiForecast> {
    if history.days == 0 {
        return Err(Error::Empty("mobility history"));
    }
    let total = f64::from(history.days);
    let w = (0..history.n)
        .map(|k| {
            let s: f64 = history.unigram[k]
                .iter()
                .map(|(l, &count)| profile.value(k, l) * f64::from(count) / total)
                .sum();
            clamp_probability(s)
        })
        .collect();
    Ok(WifiForecast { w, as_of: 0, unseen_context: Vec::new() })
}

/// Re-forecasts periods `i..n` once the locations of periods `i - 2` and
/// `i - 1` are known. `prev2` is `None` when `i == 1`.
///
/// Beyond period `i` the conditioning locations are themselves unknown; the
/// most probable predicted location of each period (ties to the smallest
/// id) stands in for it.
pub fn update_forecast(
    profile: &WifiProfile,
    history: &MobilityHistory,
    i: usize,
    prev2: Option<&Place>,
    prev1: &Place,
) -> Result<WifiForecast> {
    let n = history.n;
    if i == 0 || i >= n {
        return Err(Error::InvalidArgument(format!("update period {i} outside 1..{n}")));
    }
    if history.days == 0 {
        return Err(Error::Empty("mobility history"));
    }
    let mut w = vec![0.0; n];
    let mut unseen = Vec::new();
    let mut context: (Option<Place>, Place) = (prev2.cloned(), prev1.clone());
    for k in i..n {
        let (dist, modal) = match history.transition(k, context.0.as_ref(), &context.1) {
            Some((d, denom)) => {
                let denom = f64::from(denom);
                let mut acc = 0.0;
                let mut best: Option<(&Place, u32)> = None;
                for (l, &c) in d {
                    acc += f64::from(c) / denom * profile.value(k, l);
                    if best.is_none_or(|(_, bc)| c > bc) {
                        best = Some((l, c));
                    }
                }
                (acc, best.map(|(l, _)| l.clone()))
            }
            None => {
                unseen.push(k);
                let modal = modal_of(&history.unigram[k]);
                (0.0, modal)
            }
        };
        w[k] = clamp_probability(dist);
        context = (Some(context.1), modal.unwrap_or(None));
    }
    Ok(WifiForecast { w, as_of: i, unseen_context: unseen })
}

fn modal_of(d: &Dist) -> Option<Place> {
    let mut best: Option<(&Place, u32)> = None;
    for (l, &c) in d {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l.clone())
}

/// Fraction of periods where the forecast (`> 0.5` means WiFi) matched what happened.
pub fn prediction_accuracy(forecasts: &[f64], realized: &[bool]) -> Result<f64> {
    if forecasts.len() != realized.len() {
        return Err(Error::Mismatch(format!(
            "{} forecasts for {} realizations",
            forecasts.len(),
            realized.len()
        )));
    }
    if forecasts.is_empty() {
        return Err(Error::Empty("prediction accuracy input"));
    }
    let hits = forecasts.iter().zip(realized).filter(|&(&w, &r)| (w > 0.5) == r).count();
    Ok(hits as f64 / forecasts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::PeriodRecord;
    use approx::assert_relative_eq;

    fn p(s: &str) -> Place {
        Some(LocationId::from(s))
    }

    /// Build a day from (location, wifi) pairs; "" is the unknown place.
    fn day(idx: u32, cells: &[(&str, bool)]) -> DayTrace {
        DayTrace {
            day_index: idx,
            periods: cells
                .iter()
                .map(|&(l, wifi)| PeriodRecord {
                    location: if l.is_empty() { None } else { Some(l.into()) },
                    wifi_available: wifi,
                    ..Default::default()
                })
                .collect(),
        }
    }

    #[test]
    fn profile_hand_count() {
        let days = [
            day(0, &[("home", true), ("work", true)]),
            day(1, &[("home", false), ("work", true)]),
            day(2, &[("home", true), ("cafe", false)]),
        ];
        let (profile, history) = fit_profile(&days).unwrap();
        assert_relative_eq!(profile.probability(0, &"home".into()).unwrap(), 2.0 / 3.0);
        assert_eq!(profile.probability(1, &"work".into()), Some(1.0));
        assert_eq!(profile.probability(0, &"work".into()), None);
        assert_eq!(profile.value(0, &p("work")), 0.0);
        assert_eq!(history.days(), 3);
        assert_eq!(history.count1(1, &p("work")), 2);
        assert_eq!(history.count2(1, &p("home"), &p("cafe")), 1);
        assert!(fit_profile(&[]).is_err());
    }

    #[test]
    fn initial_forecast_examples() {
        // single location visited daily, WiFi on 4 of 5 days
        let days: Vec<_> = (0..5).map(|d| day(d, &[("home", d != 2)])).collect();
        let (pr, h) = fit_profile(&days).unwrap();
        assert_relative_eq!(initial_forecast(&pr, &h).unwrap().w[0], 0.8, epsilon = 1e-15);

        // two locations in period 1: (v, freq) = (1.0, 2/4), (0.5, 2/4)
        let days = [
            day(0, &[("", false), ("a", true)]),
            day(1, &[("", false), ("a", true)]),
            day(2, &[("", false), ("b", true)]),
            day(3, &[("", false), ("b", false)]),
        ];
        let (pr, h) = fit_profile(&days).unwrap();
        let f = initial_forecast(&pr, &h).unwrap();
        assert_relative_eq!(f.w[1], 0.75, epsilon = 1e-15);
        assert_eq!(f.w[0], 0.0);
    }

    #[test]
    fn single_day_history_is_exact() {
        let d = day(0, &[("home", true), ("bus", false), ("work", true), ("", false)]);
        let (pr, h) = fit_profile(core::slice::from_ref(&d)).unwrap();
        assert_eq!(initial_forecast(&pr, &h).unwrap().w, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn deterministic_mobility_matches_initial() {
        let cells = [("home", true), ("bus", false), ("work", true), ("work", false), ("gym", true)];
        let days: Vec<_> = (0..4).map(|d| day(d, &cells)).collect();
        let (pr, h) = fit_profile(&days).unwrap();
        let init = initial_forecast(&pr, &h).unwrap();
        for i in 1..cells.len() {
            let prev2 = if i >= 2 { Some(p(cells[i - 2].0)) } else { None };
            let upd = update_forecast(&pr, &h, i, prev2.as_ref(), &p(cells[i - 1].0)).unwrap();
            assert_eq!(&upd.w[i..], &init.w[i..]);
            assert!(upd.unseen_context.is_empty());
        }
    }

    #[test]
    fn second_order_split() {
        // After (A, B) the user goes to C on 3 of 4 days and D once.
        let days = [
            day(0, &[("a", false), ("b", false), ("c", true)]),
            day(1, &[("a", false), ("b", false), ("c", false)]),
            day(2, &[("a", false), ("b", false), ("c", true)]),
            day(3, &[("a", false), ("b", false), ("d", true)]),
        ];
        let (pr, h) = fit_profile(&days).unwrap();
        let f = update_forecast(&pr, &h, 2, Some(&p("a")), &p("b")).unwrap();
        let v_c = 2.0 / 3.0;
        let v_d = 1.0;
        assert_relative_eq!(f.w[2], 0.75 * v_c + 0.25 * v_d, epsilon = 1e-15);
    }

    #[test]
    fn first_order_fallback() {
        // The pair (x, b) never occurs, but b in period 1 does; fallback uses N^2(b l)/N^1(b).
        let days = [
            day(0, &[("a", false), ("b", false), ("c", true)]),
            day(1, &[("a", false), ("b", false), ("d", false)]),
            day(2, &[("e", false), ("b", false), ("c", true)]),
            day(3, &[("e", false), ("f", false), ("d", true)]),
        ];
        let (pr, h) = fit_profile(&days).unwrap();
        assert_eq!(h.count2(1, &p("x"), &p("b")), 0);
        let f = update_forecast(&pr, &h, 2, Some(&p("x")), &p("b")).unwrap();
        // N^2(b c) = 2, N^2(b d) = 1, N^1(b) = 3; v_2(c) = 1, v_2(d) = 1/2
        assert_relative_eq!(f.w[2], 2.0 / 3.0 * 1.0 + 1.0 / 3.0 * 0.5, epsilon = 1e-15);
        // Second-order branch where the pair exists: (e, b) -> c always.
        let g = update_forecast(&pr, &h, 2, Some(&p("e")), &p("b")).unwrap();
        assert_relative_eq!(g.w[2], 1.0);
    }

    #[test]
    fn unseen_context_flags_zero() {
        let days = [day(0, &[("a", true), ("b", true)])];
        let (pr, h) = fit_profile(&days).unwrap();
        let f = update_forecast(&pr, &h, 1, None, &p("zzz")).unwrap();
        assert_eq!(f.w[1], 0.0);
        assert_eq!(f.unseen_context, vec![1]);
        assert!(update_forecast(&pr, &h, 0, None, &p("a")).is_err());
    }

    #[test]
    fn accuracy_rule() {
        assert_eq!(prediction_accuracy(&[1.0, 1.0], &[true, true]).unwrap(), 1.0);
        assert_relative_eq!(prediction_accuracy(&[0.9, 0.2, 0.6], &[true, false, false]).unwrap(), 2.0 / 3.0);
        assert_eq!(prediction_accuracy(&[0.5], &[false]).unwrap(), 1.0);
        assert!(prediction_accuracy(&[], &[]).is_err());
        assert!(prediction_accuracy(&[0.1], &[]).is_err());
    }
}
