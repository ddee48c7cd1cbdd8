//! Trace CSV with header `day,period,location,wifi,app,usage`.
//!
//! There is one row per `(day, period, app)` with nonzero usage. A period
//! without usage gets a single row with empty `app` and `usage` fields.
//! `usage` is in bytes for fixed-volume apps and in seconds for fixed-time
//! apps. An empty `location` means the place is unknown.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use amuse_core::sim::UserTrace;
use amuse_core::trace::{normalize_volume, App, AppKind, DayTrace, KindMap, LocationId};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

pub const HEADER: [&str; 6] = ["day", "period", "location", "wifi", "app", "usage"];

/// How raw trace sizes map to normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFormat {
    pub n: usize,
    pub wifi_speed: f64,
    pub kinds: KindMap,
}

impl Default for TraceFormat {
    fn default() -> Self {
        TraceFormat { n: 24, wifi_speed: 1e6, kinds: KindMap::default() }
    }
}

impl TraceFormat {
    fn to_units(self, app: App, raw: f64) -> Result<f64> {
        match self.kinds.kind(app) {
            AppKind::FixedVolume => Ok(normalize_volume(raw, self.wifi_speed)?),
            AppKind::FixedTime => Ok(raw),
        }
    }

    fn to_raw(self, app: App, size: f64) -> f64 {
        match self.kinds.kind(app) {
            AppKind::FixedVolume => size * self.wifi_speed,
            AppKind::FixedTime => size,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    day: u32,
    period: usize,
    location: Option<String>,
    wifi: u8,
    app: Option<String>,
    usage: Option<f64>,
}

struct Slot {
    line: u64,
    location: Option<String>,
    wifi: bool,
}

pub fn read_trace<R: Read>(input: R, format: &TraceFormat) -> Result<Vec<DayTrace>> {
    if !(format.wifi_speed > 0.0) {
        return Err(IoError::Config(format!("wifi speed must be positive, got {}", format.wifi_speed)));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        let found: Vec<&str> = header.iter().collect();
        return Err(IoError::Parse { line: 1, message: format!("expected header `{}`, found `{}`", HEADER.join(","), found.join(",")) });
    }

    let mut days: BTreeMap<u32, DayTrace> = BTreeMap::new();
    let mut slots: BTreeMap<(u32, usize), Slot> = BTreeMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| IoError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |message: String| IoError::Parse { line, message };
        let row: Row = record.deserialize(Some(&header)).map_err(|e| at(describe(&e)))?;

        if row.period >= format.n {
            return Err(at(format!("period {} outside 0..{}", row.period, format.n)));
        }
        let wifi = match row.wifi {
            0 => false,
            1 => true,
            w => return Err(at(format!("wifi must be 0 or 1, got {w}"))),
        };
        match slots.get(&(row.day, row.period)) {
            Some(slot) if slot.location != row.location || slot.wifi != wifi => {
                return Err(at(format!(
                    "day {} period {} disagrees with line {} on location or wifi",
                    row.day, row.period, slot.line
                )));
            }
            Some(_) => {}
            None => {
                slots.insert((row.day, row.period), Slot { line, location: row.location.clone(), wifi });
            }
        }
        let day = days.entry(row.day).or_insert_with(|| DayTrace::empty(row.day, format.n));
        let period = &mut day.periods[row.period];
        period.location = row.location.as_deref().map(LocationId::new);
        period.wifi_available = wifi;
        match (row.app.as_deref(), row.usage) {
            (None, None) => {}
            (Some(name), Some(raw)) => {
                let app: App = name.parse().map_err(|e| at(format!("{e}")))?;
                if !(raw >= 0.0) || !raw.is_finite() {
                    return Err(at(format!("{app} usage {raw} must be finite and non-negative")));
                }
                period.usage[app] += format.to_units(app, raw)?;
            }
            (Some(_), None) => return Err(at("app given without usage".into())),
            (None, Some(_)) => return Err(at("usage given without app".into())),
        }
    }

    let mut out = Vec::with_capacity(days.len());
    for (d, day) in days {
        let seen = slots.range((d, 0)..(d, format.n)).count();
        if seen != format.n {
            let missing: Vec<usize> = (0..format.n).filter(|k| !slots.contains_key(&(d, *k))).collect();
            return Err(IoError::Trace(format!("day {d} has {seen} periods, expected {}; missing {missing:?}", format.n)));
        }
        day.validate(format.n)?;
        out.push(day);
    }
    Ok(out)
}

fn describe(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("field `{}`: {}", HEADER.get(f as usize).unwrap_or(&"?"), err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

pub fn write_trace<W: Write>(output: W, days: &[DayTrace], format: &TraceFormat) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(output);
    writer.write_record(HEADER)?;
    for day in days {
        for (k, p) in day.periods.iter().enumerate() {
            let base = |app: Option<App>, usage: Option<f64>| Row {
                day: day.day_index,
                period: k,
                location: p.location.as_ref().map(|l| l.as_str().to_owned()),
                wifi: u8::from(p.wifi_available),
                app: app.map(|a| a.name().to_owned()),
                usage,
            };
            let used: Vec<(App, f64)> = p.usage.iter().filter(|&(_, s)| s > 0.0).collect();
            if used.is_empty() {
                writer.serialize(base(None, None))?;
            }
            for (app, size) in used {
                writer.serialize(base(Some(app), Some(format.to_raw(app, size))))?;
            }
        }
    }
    writer.flush().map_err(|e| IoError::io("trace output", e))?;
    Ok(())
}

pub fn load_trace(path: &Path, format: &TraceFormat) -> Result<Vec<DayTrace>> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_trace(file, format).map_err(|e| IoError::InFile { path: path.into(), inner: Box::new(e) })
}

/// Loads one user from a CSV file, or one user per `*.csv` file in a
/// directory (named by file stem, in name order).
pub fn load_users(path: &Path, format: &TraceFormat) -> Result<Vec<UserTrace>> {
    let user = |p: &Path| -> Result<UserTrace> {
        let name = p.file_stem().map_or_else(|| "user".into(), |s| s.to_string_lossy().into_owned());
        Ok(UserTrace { user: name, days: load_trace(p, format)? })
    };
    if !path.is_dir() {
        return Ok(vec![user(path)?]);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)
        .map_err(|e| IoError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(IoError::Trace(format!("{} holds no .csv traces", path.display())));
    }
    files.iter().map(|p| user(p)).collect()
}

pub fn save_trace(path: &Path, days: &[DayTrace], format: &TraceFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_trace(file, days, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(n: usize) -> TraceFormat {
        TraceFormat { n, ..Default::default() }
    }

    fn parse(text: &str, n: usize) -> Result<Vec<DayTrace>> {
        read_trace(text.as_bytes(), &fmt(n))
    }

    #[test]
    fn all_zero_day_reads_as_empty_usage() {
        let mut text = String::from("day,period,location,wifi,app,usage\n");
        for k in 0..24 {
            text.push_str(&format!("0,{k},home,1,,\n"));
        }
        let days = parse(&text, 24).unwrap();
        assert_eq!(days.len(), 1);
        assert_eq!(days[0].totals().total(), 0.0);
        assert!(days[0].periods.iter().all(|p| p.wifi_available));
    }

    #[test]
    fn negative_usage_rejected() {
        let err = parse("day,period,location,wifi,app,usage\n0,0,home,0,email,-5\n", 1).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn bytes_normalized_seconds_kept() {
        let days = parse("day,period,location,wifi,app,usage\n0,0,,0,downloads,2500000\n0,0,,0,video,90\n", 1).unwrap();
        assert_eq!(days[0].periods[0].usage[App::Downloads], 2.5);
        assert_eq!(days[0].periods[0].usage[App::Video], 90.0);
        assert_eq!(days[0].periods[0].location, None);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let err = parse("day,period,location,wifi,app,usage\n0,0,a,0,,\n0,x,a,0,,\n", 2).unwrap_err();
        match err {
            IoError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("period"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn period_count_checked() {
        let err = parse("day,period,location,wifi,app,usage\n0,0,a,0,,\n", 2).unwrap_err();
        assert!(matches!(err, IoError::Trace(_)), "{err}");
        let err = parse("day,period,location,wifi,app,usage\n0,2,a,0,,\n", 2).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn conflicting_wifi_rejected() {
        let err = parse("day,period,location,wifi,app,usage\n0,0,a,0,email,5\n0,0,a,1,video,3\n", 1).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_header_and_wifi_flag() {
        assert!(matches!(parse("day,period,loc,wifi,app,usage\n", 1), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(parse("day,period,location,wifi,app,usage\n0,0,a,2,,\n", 1), Err(IoError::Parse { line: 2, .. })));
        assert!(matches!(parse("day,period,location,wifi,app,usage\n0,0,,1,,\n", 1), Err(IoError::Core(_))));
    }
}
