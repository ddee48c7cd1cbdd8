//! Receiver-side rate control through the TCP advertisement window.
//!
//! The receiver measures delivered throughput every check period and
//! scales the advertised window by the relative deficit to the target.
//! Because the sender may not have more than `min(cwnd, adv_win)` bytes in
//! flight, the window caps the rate at about `adv_win / rtt`.
//!
//! [`simulate_flow`] drives the controller with a flow-level link model
//! rather than individual packets: each tick the sender delivers
//! `min(cwnd, window) / rtt` bytes per second, where `window` is the value
//! advertised one round trip earlier, capped at the link capacity and
//! thinned by the loss rate.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Bytes per second in one kilobit per second.
pub const BYTES_PER_KBPS: f64 = 125.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerConfig {
    pub min_adv_win: f64,
    pub rcv_buf_size: f64,
    pub check_period: f64,
    pub alpha: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { min_adv_win: 512.0, rcv_buf_size: 256.0 * 1024.0, check_period: 0.2, alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerState {
    /// Bytes per second.
    pub target_bw: f64,
    pub adv_win: f64,
    pub min_adv_win: f64,
    pub rcv_buf_size: f64,
    pub check_period: f64,
    pub alpha: f64,
    pub bytes_accumulated: f64,
    pub last_check_time: f64,
}

impl ControllerState {
    pub fn new(target_bw: f64, config: ControllerConfig) -> Result<Self> {
        if !(target_bw > 0.0) || !target_bw.is_finite() {
            return Err(Error::Config(format!("target bandwidth must be positive, got {target_bw}")));
        }
        if !(config.alpha > 0.0 && config.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", config.alpha)));
        }
        if !(config.check_period > 0.0) {
            return Err(Error::Config(format!("check period must be positive, got {}", config.check_period)));
        }
        if !(config.min_adv_win > 0.0 && config.min_adv_win <= config.rcv_buf_size) {
            return Err(Error::Config("window limits must satisfy 0 < min_adv_win <= rcv_buf_size".into()));
        }
        Ok(ControllerState {
            target_bw,
            adv_win: config.min_adv_win,
            min_adv_win: config.min_adv_win,
            rcv_buf_size: config.rcv_buf_size,
            check_period: config.check_period,
            alpha: config.alpha,
            bytes_accumulated: 0.0,
            last_check_time: 0.0,
        })
    }

    /// Restarts measurement at `now` without touching the window.
    pub fn reset_clock(&mut self, now: f64) {
        self.bytes_accumulated = 0.0;
        self.last_check_time = now;
    }

    /// Accounts `packet_len` bytes received at `now`; once a check period has
    /// passed, adjusts the window and returns the measured throughput.
    pub fn control_step(&mut self, now: f64, packet_len: f64) -> Option<f64> {
        debug_assert!(packet_len >= 0.0);
        self.bytes_accumulated += packet_len;
        let interval = now - self.last_check_time;
        if interval <= self.check_period {
            return None;
        }
        let throughput = self.bytes_accumulated / interval;
        let inc = window_increment(self.adv_win, self.target_bw, throughput, self.alpha);
        self.adv_win = (self.adv_win + inc).clamp(self.min_adv_win, self.rcv_buf_size);
        self.reset_clock(now);
        Some(throughput)
    }

    /// Window to stamp on outgoing ACKs.
    pub fn ack_stamp(&self) -> f64 {
        self.adv_win
    }
}

/// Unclamped window change for a measured throughput.
pub fn window_increment(adv_win: f64, target_bw: f64, throughput: f64, alpha: f64) -> f64 {
    adv_win * (target_bw - throughput) / target_bw * alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LinkPreset {
    EthernetLike,
    WifiLike,
    CellularLike,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkModel {
    /// Seconds.
    pub rtt: f64,
    /// Standard deviation of the round-trip time, seconds.
    pub rtt_jitter: f64,
    pub loss_rate: f64,
    /// Bytes per second.
    pub capacity: f64,
    pub preset: LinkPreset,
}

impl LinkModel {
    pub fn ethernet() -> Self {
        LinkModel { rtt: 0.05, rtt_jitter: 0.0, loss_rate: 0.0, capacity: 12.5e6, preset: LinkPreset::EthernetLike }
    }

    pub fn wifi() -> Self {
        LinkModel { rtt: 0.06, rtt_jitter: 0.01, loss_rate: 0.02, capacity: 2.5e6, preset: LinkPreset::WifiLike }
    }

    pub fn cellular() -> Self {
        LinkModel { rtt: 0.15, rtt_jitter: 0.03, loss_rate: 0.01, capacity: 450_000.0, preset: LinkPreset::CellularLike }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtt > 0.0) || !self.rtt.is_finite() {
            return Err(Error::Config(format!("rtt must be positive, got {}", self.rtt)));
        }
        if !(self.rtt_jitter >= 0.0) {
            return Err(Error::Config(format!("rtt jitter must be non-negative, got {}", self.rtt_jitter)));
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return Err(Error::Config(format!("loss rate must lie in [0, 1), got {}", self.loss_rate)));
        }
        if !(self.capacity > 0.0) {
            return Err(Error::Config(format!("capacity must be positive, got {}", self.capacity)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowSample {
    /// End of the measurement window, seconds.
    pub time: f64,
    /// Mean delivered bytes per second over the window.
    pub throughput: f64,
    /// Window advertised at the end of the window.
    pub adv_win: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub duration: f64,
    /// Seconds before the controller starts; ACKs advertise the full buffer meanwhile.
    pub grace: f64,
    /// Simulation step; `None` uses a tenth of the check period.
    pub tick: Option<f64>,
    /// Sender congestion window in bytes; `None` for unbounded.
    pub cwnd: Option<f64>,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { duration: 30.0, grace: 5.0, tick: None, cwnd: None, seed: 0 }
    }
}

/// Simulates flows with the given targets sharing one link; capacity is
/// split equally per tick among the flows. One sample series per flow,
/// sampled once per check period.
pub fn simulate_flows(
    targets: &[f64],
    link: &LinkModel,
    controller: ControllerConfig,
    flow: &FlowConfig,
) -> Result<Vec<Vec<FlowSample>>> {
    link.validate()?;
    if !(flow.grace >= 0.0) || !(flow.duration > flow.grace) {
        return Err(Error::Config(format!("need duration > grace >= 0, got {} and {}", flow.duration, flow.grace)));
    }
    let dt = flow.tick.unwrap_or(controller.check_period / 10.0);
    if !(dt > 0.0) {
        return Err(Error::Config(format!("tick must be positive, got {dt}")));
    }
    let mut states = targets.iter().map(|&t| ControllerState::new(t, controller)).collect::<Result<Vec<_>>>()?;
    let jitter = Normal::new(0.0, link.rtt_jitter).map_err(|e| Error::Config(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(flow.seed);

    let steps = libm::ceil(flow.duration / dt) as usize;
    let grace_steps = libm::round(flow.grace / dt) as usize;
    let sample_every = libm::round(controller.check_period / dt).max(1.0) as usize;
    // windows in flight: what the sender sees now was advertised one rtt ago
    let delay_steps = libm::round(link.rtt / dt).max(1.0) as usize;
    let mut advertised: Vec<VecDeque<f64>> =
        states.iter().map(|_| core::iter::repeat_n(controller.rcv_buf_size, delay_steps).collect()).collect();
    let mut window_bytes = alloc::vec![0.0; targets.len()];
    let mut samples: Vec<Vec<FlowSample>> = alloc::vec![Vec::new(); targets.len()];
    let share = link.capacity / targets.len().max(1) as f64;

    for step in 1..=steps {
        let now = step as f64 * dt;
        let rtt = (link.rtt + jitter.sample(&mut rng)).max(link.rtt * 0.1);
        for (f, state) in states.iter_mut().enumerate() {
            let seen = advertised[f].pop_front().unwrap_or(state.adv_win);
            let window = flow.cwnd.map_or(seen, |c| c.min(seen));
            let rate = (window / rtt).min(share) * (1.0 - link.loss_rate);
            let bytes = rate * dt;
            window_bytes[f] += bytes;
            if step == grace_steps {
                state.reset_clock(now);
            } else if step > grace_steps {
                state.control_step(now, bytes);
            }
            let stamp = if step < grace_steps { controller.rcv_buf_size } else { state.ack_stamp() };
            advertised[f].push_back(stamp);
            if step % sample_every == 0 {
                let span = sample_every as f64 * dt;
                samples[f].push(FlowSample { time: now, throughput: window_bytes[f] / span, adv_win: stamp });
                window_bytes[f] = 0.0;
            }
        }
    }
    Ok(samples)
}

pub fn simulate_flow(target_bw: f64, link: &LinkModel, controller: ControllerConfig, flow: &FlowConfig) -> Result<Vec<FlowSample>> {
    Ok(simulate_flows(&[target_bw], link, controller, flow)?.remove(0))
}

/// Mean and standard deviation of sampled throughput with `time > from`.
pub fn steady_state(samples: &[FlowSample], from: f64) -> Option<(f64, f64)> {
    let tail: Vec<f64> = samples.iter().filter(|s| s.time > from + 1e-9).map(|s| s.throughput).collect();
    if tail.is_empty() {
        return None;
    }
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some((mean, libm::sqrt(var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(target: f64) -> ControllerState {
        ControllerState::new(target, ControllerConfig::default()).unwrap()
    }

    #[test]
    fn fresh_state_stamps_floor() {
        assert_eq!(state(1000.0).ack_stamp(), 512.0);
    }

    #[test]
    fn formula_example() {
        let mut s = state(37_500.0);
        s.adv_win = 10_000.0;
        let thr = s.control_step(0.25, 25_000.0 * 0.25).unwrap();
        assert_relative_eq!(thr, 25_000.0);
        assert_relative_eq!(s.adv_win, 10_000.0 + 10_000.0 / 3.0 * 0.5, epsilon = 1e-9);
    }

    #[test]
    fn on_target_is_fixed_point() {
        let mut s = state(50_000.0);
        s.adv_win = 4000.0;
        s.control_step(0.25, 50_000.0 * 0.25);
        assert_eq!(s.adv_win, 4000.0);
    }

    #[test]
    fn overshoot_clamps_at_floor() {
        let mut s = state(1000.0);
        s.adv_win = 600.0;
        s.control_step(0.25, 1e6);
        assert_eq!(s.adv_win, 512.0);
    }

    #[test]
    fn no_adjustment_within_check_period() {
        let mut s = state(1000.0);
        assert_eq!(s.control_step(0.1, 10.0), None);
        assert_eq!(s.bytes_accumulated, 10.0);
    }

    #[test]
    fn invalid_configuration() {
        assert!(ControllerState::new(0.0, ControllerConfig::default()).is_err());
        assert!(ControllerState::new(1.0, ControllerConfig { alpha: 0.0, ..Default::default() }).is_err());
        let bad = LinkModel { loss_rate: 1.0, ..LinkModel::ethernet() };
        assert!(simulate_flow(1000.0, &bad, ControllerConfig::default(), &FlowConfig::default()).is_err());
    }

    #[test]
    fn saturates_at_capacity() {
        let link = LinkModel { capacity: 100_000.0, preset: LinkPreset::Custom, ..LinkModel::ethernet() };
        let s = simulate_flow(200_000.0, &link, ControllerConfig::default(), &FlowConfig::default()).unwrap();
        let (mean, _) = steady_state(&s, 20.0).unwrap();
        assert_relative_eq!(mean, 100_000.0, max_relative = 1e-9);
        assert_eq!(s.last().unwrap().adv_win, 256.0 * 1024.0);
    }

    #[test]
    fn shared_link_splits_capacity() {
        let link = LinkModel { capacity: 100_000.0, preset: LinkPreset::Custom, ..LinkModel::ethernet() };
        let s = simulate_flows(&[200_000.0, 200_000.0], &link, ControllerConfig::default(), &FlowConfig::default()).unwrap();
        for series in &s {
            let (mean, _) = steady_state(series, 20.0).unwrap();
            assert_relative_eq!(mean, 50_000.0, max_relative = 1e-9);
        }
    }
}
