//! Run configuration file (TOML).
//!
//! ```toml
//! n = 24                           # periods per day
//! wifi_speed_bytes_per_sec = 1e6   # one normalized unit = this many bytes
//! gamma_set = [0.25, 0.5, 1.0]     # candidate 3G rates, relative to WiFi
//! beta = 1.0                       # 3G capacity per period
//! delta_set = [1.0]                # WiFi rates of the network-choice model
//! unit_price = 10.0                # currency per GB of 3G traffic
//! monthly_budget = 30.0            # or { mean = 30, sd = 5, lo = 20, hi = 40 }
//! billing_day = 0
//! month_len = 30
//! window = 3                       # training days and moving-average window
//! deadline = 1                     # longest wait of the delayed baseline
//! extension_scale = inf            # WiFi capacity scale under --extension
//!
//! [app_kind]
//! video = "fixed_volume"
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use amuse_core::optimizer::SolverKind;
use amuse_core::sim::{BudgetSpec, SimConfig};
use amuse_core::trace::{App, AppKind, KindMap, PricingPlan, RateGrid};
use amuse_core::usage::AdjustPolicy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{IoError, Result};
use crate::tracefile::TraceFormat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetEntry {
    Fixed(f64),
    Spread { mean: f64, sd: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub n: usize,
    pub wifi_speed_bytes_per_sec: f64,
    pub gamma_set: Vec<f64>,
    pub beta: f64,
    pub delta_set: Vec<f64>,
    /// Currency per GB.
    pub unit_price: f64,
    pub monthly_budget: Option<BudgetEntry>,
    pub billing_day: u32,
    pub month_len: u32,
    pub window: usize,
    pub deadline: usize,
    pub fair_share: bool,
    pub strict_budget: bool,
    pub observe_current_wifi: bool,
    pub perfect_information: bool,
    /// Shift observed usage back only where the origin saw less than this
    /// fraction of its forecast.
    pub adjust_below: Option<f64>,
    pub solver: SolverKind,
    pub extension_scale: f64,
    pub seed: u64,
    pub app_kind: BTreeMap<String, AppKind>,
}

impl Default for FileConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        FileConfig {
            n: sim.n,
            wifi_speed_bytes_per_sec: 1e6,
            gamma_set: sim.grid.gamma.clone(),
            beta: sim.grid.beta,
            delta_set: sim.grid.delta.clone(),
            unit_price: 10.0,
            monthly_budget: None,
            billing_day: sim.billing_day,
            month_len: sim.month_len,
            window: sim.window,
            deadline: sim.deadline,
            fair_share: sim.fair_share,
            strict_budget: sim.strict_budget,
            observe_current_wifi: sim.observe_current_wifi,
            perfect_information: sim.perfect_information,
            adjust_below: None,
            solver: sim.solver,
            extension_scale: f64::INFINITY,
            seed: sim.seed,
            app_kind: BTreeMap::new(),
        }
    }
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::parse(&text).map_err(|e| IoError::InFile { path: path.into(), inner: Box::new(e) })
    }

    pub fn kinds(&self) -> Result<KindMap> {
        let mut kinds = KindMap::default();
        for (name, &kind) in &self.app_kind {
            let app: App = name.parse().map_err(|e| IoError::Config(format!("app_kind: {e}")))?;
            kinds.set(app, kind);
        }
        Ok(kinds)
    }

    pub fn trace_format(&self) -> Result<TraceFormat> {
        if !(self.wifi_speed_bytes_per_sec > 0.0) {
            return Err(IoError::Config(format!("wifi_speed_bytes_per_sec must be positive, got {}", self.wifi_speed_bytes_per_sec)));
        }
        Ok(TraceFormat { n: self.n, wifi_speed: self.wifi_speed_bytes_per_sec, kinds: self.kinds()? })
    }

    /// Simulation settings; `extension` selects the network-choice model.
    pub fn sim_config(&self, extension: bool) -> Result<SimConfig> {
        let grid = if extension {
            RateGrid::extended(self.gamma_set.clone(), self.beta, self.delta_set.clone())?
        } else {
            RateGrid::base(self.gamma_set.clone(), self.beta)?
        };
        let budget = match self.monthly_budget {
            None => BudgetSpec::default(),
            Some(BudgetEntry::Fixed(amount)) => BudgetSpec::Fixed { amount },
            Some(BudgetEntry::Spread { mean, sd, lo, hi }) => BudgetSpec::TruncatedNormal { mean, sd, lo, hi },
        };
        let config = SimConfig {
            n: self.n,
            grid,
            price: PricingPlan::per_unit_from_gb(self.unit_price, self.wifi_speed_bytes_per_sec),
            kinds: self.kinds()?,
            window: self.window,
            deadline: self.deadline,
            fair_share: self.fair_share,
            budget,
            month_len: self.month_len,
            billing_day: self.billing_day,
            solver: self.solver,
            extension: extension.then_some(self.extension_scale),
            observe_current_wifi: self.observe_current_wifi,
            strict_budget: self.strict_budget,
            adjust: self.adjust_below.map_or(AdjustPolicy::Always, AdjustPolicy::BelowFraction),
            perfect_information: self.perfect_information,
            seed: self.seed,
            ..SimConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

/// Hex SHA-256 of the settings that shape a run.
pub fn config_hash(config: &SimConfig) -> String {
    let digest = Sha256::digest(format!("{config:?}").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = FileConfig::parse("").unwrap().sim_config(false).unwrap();
        assert_eq!(c, SimConfig::default());
    }

    #[test]
    fn keys_map_onto_settings() {
        let text = r#"
            n = 12
            wifi_speed_bytes_per_sec = 2e6
            gamma_set = [1.0, 0.5]
            beta = 2.0
            unit_price = 5.0
            monthly_budget = { mean = 25, sd = 4, lo = 15, hi = 35 }
            extension_scale = 3.0
            solver = "brute_force"
            [app_kind]
            video = "fixed_volume"
        "#;
        let file = FileConfig::parse(text).unwrap();
        let c = file.sim_config(true).unwrap();
        assert_eq!(c.n, 12);
        assert_eq!(c.grid.gamma, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.grid.delta, vec![0.0, 1.0]);
        assert_eq!(c.price, 5.0 * 2e6 / 1e9);
        assert_eq!(c.extension, Some(3.0));
        assert_eq!(c.solver, SolverKind::BruteForce);
        assert_eq!(c.kinds.kind(App::Video), AppKind::FixedVolume);
        assert_eq!(c.budget, BudgetSpec::TruncatedNormal { mean: 25.0, sd: 4.0, lo: 15.0, hi: 35.0 });
        assert_eq!(file.trace_format().unwrap().wifi_speed, 2e6);
    }

    #[test]
    fn fixed_budget_and_unknown_keys() {
        let c = FileConfig::parse("monthly_budget = 12.5").unwrap().sim_config(false).unwrap();
        assert_eq!(c.budget, BudgetSpec::Fixed { amount: 12.5 });
        assert!(FileConfig::parse("gama_set = [1.0]").is_err());
        assert!(FileConfig::parse("beta = 0.1").unwrap().sim_config(false).is_err());
        assert!(FileConfig::parse("[app_kind]\nfax = \"fixed_time\"").unwrap().kinds().is_err());
    }

    #[test]
    fn hash_tracks_settings() {
        let a = SimConfig::default();
        let b = SimConfig { seed: 1, ..SimConfig::default() };
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
