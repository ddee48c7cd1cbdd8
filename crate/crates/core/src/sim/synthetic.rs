//! Seeded synthetic users: routine-driven mobility over 3 to 5 places,
//! per-place WiFi rates and diurnal per-app demand.
//!
//! Each period the user follows their routine with probability 0.85, stays
//! put with 0.1 and jumps to a random place otherwise. After two periods off
//! the routine they return to it with probability 0.95, so the location
//! sequence is second-order Markov.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::UserTrace;
use crate::trace::{App, DayTrace, LocationId, PeriodRecord};

const HOME: usize = 0;
const WORK: usize = 1;
const TRANSIT: usize = 2;
const CAFE: usize = 3;
const GYM: usize = 4;

const NAMES: [&str; 5] = ["home", "work", "transit", "cafe", "gym"];
const WIFI_RATE: [f64; 5] = [0.9, 0.85, 0.0, 0.6, 0.2];

/// Cohort parameters; sizes are in MB at a WiFi speed of 1 MB/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortSpec {
    pub users: usize,
    pub days: usize,
    /// Periods per day; routines are laid out on a 24-hour clock.
    pub n: usize,
    /// Places per user, drawn from 3..=5 when `None`.
    pub locations: Option<usize>,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec { users: 16, days: 10, n: 24, locations: None, seed: 7 }
    }
}

pub fn cohort(spec: &CohortSpec) -> Vec<UserTrace> {
    (0..spec.users)
        .map(|u| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(1_000_003).wrapping_add(u as u64));
            let places = spec.locations.unwrap_or_else(|| rng.random_range(3..=5)).clamp(3, 5);
            user(&mut rng, format!("user{u:02}"), spec.days, spec.n, places)
        })
        .collect()
}

struct Profile {
    has_cafe: bool,
    has_gym: bool,
    /// Demand multiplier.
    scale: f64,
}

impl Profile {
    fn routine(&self, weekend: bool, hour: usize) -> usize {
        if weekend {
            match hour {
                10..=12 if self.has_cafe => CAFE,
                15..=16 if self.has_gym => GYM,
                14 | 17 => TRANSIT,
                _ => HOME,
            }
        } else {
            match hour {
                8 | 18 => TRANSIT,
                12 if self.has_cafe => CAFE,
                9..=17 => WORK,
                19 if self.has_gym => GYM,
                _ => HOME,
            }
        }
    }
}

fn user(rng: &mut ChaCha8Rng, name: String, days: usize, n: usize, places: usize) -> UserTrace {
    let (has_cafe, has_gym) = match places {
        3 => (false, false),
        4 => (true, false),
        _ => (true, true),
    };
    let profile = Profile { has_cafe, has_gym, scale: rng.random_range(0.4..2.0) };
    let visited: Vec<usize> = (0..5).filter(|&l| l <= TRANSIT || (l == CAFE && has_cafe) || (l == GYM && has_gym)).collect();
    let mut location = HOME;
    let mut off_routine = [false; 2];
    let mut out = Vec::with_capacity(days);
    for d in 0..days {
        let weekend = d % 7 >= 5;
        let mut periods = Vec::with_capacity(n);
        for k in 0..n {
            let hour = k * 24 / n;
            let planned = profile.routine(weekend, hour);
            let u: f64 = rng.random();
            location = if off_routine[0] && off_routine[1] {
                if u < 0.95 {
                    planned
                } else {
                    location
                }
            } else if u < 0.85 {
                planned
            } else if u < 0.95 {
                location
            } else {
                visited[rng.random_range(0..visited.len())]
            };
            off_routine = [off_routine[1], location != planned];
            let wifi_available = rng.random::<f64>() < WIFI_RATE[location];
            let mut rec = PeriodRecord { location: Some(LocationId::new(NAMES[location])), wifi_available, ..Default::default() };
            demand(rng, &profile, hour, &mut rec);
            periods.push(rec);
        }
        out.push(DayTrace { day_index: d as u32, periods });
    }
    UserTrace { user: name, days: out }
}

fn demand(rng: &mut ChaCha8Rng, profile: &Profile, hour: usize, rec: &mut PeriodRecord) {
    let awake = if (7..=23).contains(&hour) { 1.0 } else { 0.2 };
    let evening = hour >= 18;
    let table: [(App, f64, f64, f64); 5] = [
        (App::Email, 0.3, 0.5, 3.0),
        (App::Browsing, 0.35, 2.0, 15.0),
        (App::Video, if evening { 0.2 } else { 0.05 }, 30.0, 240.0),
        (App::SocialNetworking, 0.3, 1.0, 8.0),
        (App::Downloads, 0.08, 10.0, 120.0),
    ];
    for (app, p, lo, hi) in table {
        if rng.random::<f64>() < p * awake {
            rec.usage[app] += profile.scale * rng.random_range(lo..hi);
        }
    }
}
