//! Executed sessions and their realized cost and utility.

use crate::optimizer::{Network, Planner};
use crate::trace::{App, AppKind, KindMap};
use crate::utility::{utility_unchecked, ParamTable, UtilityContext};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExecutionRecord {
    pub origin: usize,
    pub app: App,
    pub executed: usize,
    pub network: Network,
    pub rate: f64,
    /// Volume, or seconds for fixed-time apps.
    pub size: f64,
    pub spend: f64,
    pub utility: f64,
    /// Executed at the end of the day because its planned target was never reached.
    #[cfg_attr(feature = "serde", serde(default))]
    pub forced: bool,
}

impl ExecutionRecord {
    pub fn delay(&self) -> usize {
        self.executed - self.origin
    }

    /// Transferred volume; fixed-time sessions move `rate * seconds`.
    pub fn volume(&self, kind: AppKind) -> f64 {
        match kind {
            AppKind::FixedVolume => self.size,
            AppKind::FixedTime => self.rate * self.size,
        }
    }
}

/// Utility of an executed session: WiFi is free, 3G pays the unit price.
pub fn realized_utility(record: &ExecutionRecord, params: &ParamTable, kinds: &KindMap, price: f64) -> f64 {
    let price = match record.network {
        Network::Wifi => 0.0,
        Network::Cellular => price,
    };
    utility_unchecked(
        params.get(record.app),
        kinds.kind(record.app),
        UtilityContext { price, delay: record.delay() as u32, rate: record.rate, size: record.size },
    )
}

impl Planner {
    /// Builds the record of executing a session, filling in spend and utility.
    pub fn execute(&self, origin: usize, app: App, executed: usize, network: Network, rate: f64, size: f64) -> ExecutionRecord {
        debug_assert!(executed >= origin && rate > 0.0);
        let mut record = ExecutionRecord { origin, app, executed, network, rate, size, spend: 0.0, utility: 0.0, forced: false };
        if network == Network::Cellular {
            record.spend = self.price * record.volume(self.kinds.kind(app));
        }
        record.utility = realized_utility(&record, &self.params, &self.kinds, self.price);
        record
    }
}
