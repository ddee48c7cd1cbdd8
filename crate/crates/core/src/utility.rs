//! Cost, throughput and delay utility of completing a session.
//!
//! Fixed-time sessions: `C exp(-nu + r nu - mu t) - eta p r s`.
//! Fixed-volume sessions: `C exp(-(s / r) nu - mu t) - eta p s`.
//!
//! With `r = 1`, `t = 0` and `p = 0` a fixed-time session is worth exactly `C`.

use alloc::format;

use crate::error::{Error, Result};
use crate::trace::{App, AppKind};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UtilityParams {
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub c: f64,
    pub mu: f64,
    pub nu: f64,
    pub eta: f64,
}

impl UtilityParams {
    pub fn new(c: f64, mu: f64, nu: f64, eta: f64) -> Result<Self> {
        let p = UtilityParams { c, mu, nu, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C", self.c), ("mu", self.mu), ("nu", self.nu), ("eta", self.eta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("utility parameter {name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Fitted survey parameters per application.
pub fn default_params(app: App) -> UtilityParams {
    match app {
        App::Email => UtilityParams { c: 0.9848, mu: 0.1527, nu: 0.1527, eta: 0.0 },
        App::Browsing => UtilityParams { c: 0.6865, mu: 0.3269, nu: 0.0263, eta: 0.0 },
        App::Video => UtilityParams { c: 0.9399, mu: 0.0144, nu: 4.3785, eta: 0.0986 },
        App::SocialNetworking => UtilityParams { c: 0.4738, mu: 0.006, nu: 0.006, eta: 0.0986 },
        App::Downloads => UtilityParams { c: 0.6737, mu: 0.0097, nu: 0.0097, eta: 0.0986 },
    }
}

/// Parameters for every application, indexable by [`App`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamTable(pub [UtilityParams; App::COUNT]);

impl Default for ParamTable {
    fn default() -> Self {
        ParamTable(App::ALL.map(default_params))
    }
}

impl ParamTable {
    pub fn get(&self, app: App) -> &UtilityParams {
        &self.0[app.index()]
    }

    pub fn set(&mut self, app: App, params: UtilityParams) {
        self.0[app.index()] = params;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityContext {
    /// Price per normalized volume unit; 0 for WiFi.
    pub price: f64,
    /// Whole periods deferred.
    pub delay: u32,
    /// Normalized rate, WiFi = 1.
    pub rate: f64,
    /// Volume for fixed-volume sessions, seconds for fixed-time sessions.
    pub size: f64,
}

pub fn utility(params: &UtilityParams, kind: AppKind, ctx: UtilityContext) -> Result<f64> {
    if !(ctx.rate > 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {}", ctx.rate)));
    }
    if !(ctx.size >= 0.0) {
        return Err(Error::InvalidArgument(format!("size must be non-negative, got {}", ctx.size)));
    }
    Ok(utility_unchecked(params, kind, ctx))
}

/// [`utility`] without argument checks, for hot loops over validated grids.
#[inline]
pub(crate) fn utility_unchecked(params: &UtilityParams, kind: AppKind, ctx: UtilityContext) -> f64 {
    let t = f64::from(ctx.delay);
    match kind {
        AppKind::FixedTime => {
            params.c * libm::exp(-params.nu + ctx.rate * params.nu - params.mu * t)
                - params.eta * ctx.price * ctx.rate * ctx.size
        }
        AppKind::FixedVolume => {
            params.c * libm::exp(-(ctx.size / ctx.rate) * params.nu - params.mu * t) - params.eta * ctx.price * ctx.size
        }
    }
}

/// Expected utility of deferring a session by `delay` periods to a period
/// with WiFi probability `wifi_prob`, falling back to 3G at `gamma`.
pub fn choice_value(
    params: &UtilityParams,
    kind: AppKind,
    delay: u32,
    gamma: f64,
    wifi_prob: f64,
    size: f64,
    price: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&wifi_prob) {
        return Err(Error::InvalidArgument(format!("WiFi probability {wifi_prob} outside [0, 1]")));
    }
    let wifi = utility(params, kind, UtilityContext { price: 0.0, delay, rate: 1.0, size })?;
    let cell = utility(params, kind, UtilityContext { price, delay, rate: gamma, size })?;
    Ok(wifi_prob * wifi + (1.0 - wifi_prob) * cell)
}
