//! Switched event-triggered sample-and-hold.
//!
//! Each vehicle axis holds its last transmitted input until
//! `|e|^2 >= sigma |z2|^2`, where `e = z2(t_k) - z2(t)` and `sigma` switches
//! from `delta1` (large error, `|z2| >= epsilon`) to `delta2` (near the
//! origin). The rule is evaluated once per sampling step, so every
//! inter-event interval is at least one step long.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetmConfig {
    delta1: f64,
    delta2: f64,
    epsilon: f64,
}

impl SetmConfig {
    pub fn new(delta1: f64, delta2: f64, epsilon: f64) -> Result<Self> {
        if !(delta1.is_finite()
            && delta2.is_finite()
            && delta1 > 0.0
            && delta1 < delta2
            && delta2 < 1.0)
        {
            return Err(Error::config(
                "setm.delta-order",
                format!("need 0 < delta1 < delta2 < 1, got delta1={delta1} delta2={delta2}"),
            ));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::config(
                "setm.epsilon-positive",
                format!("epsilon {epsilon} must be positive"),
            ));
        }
        Ok(Self {
            delta1,
            delta2,
            epsilon,
        })
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma_max(&self) -> f64 {
        self.delta1.max(self.delta2)
    }

    pub fn switched_sigma(&self, z2_now: f64) -> (f64, Branch) {
        if z2_now.abs() >= self.epsilon {
            (self.delta1, Branch::Transient)
        } else {
            (self.delta2, Branch::Steady)
        }
    }

    /// Theoretical minimum inter-event time for a bound `lipschitz` on `|z2'|`.
    pub fn min_interval_bound(&self, lipschitz: f64) -> f64 {
        self.delta1.sqrt().min(self.delta2.sqrt()) * self.epsilon / lipschitz
    }
}

/// Which threshold was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `|z2| >= epsilon`, `sigma = delta1`.
    Transient,
    /// `|z2| < epsilon`, `sigma = delta2`.
    Steady,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Transient => "delta1",
            Branch::Steady => "delta2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    pub time: f64,
    pub z2: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetmState {
    held_z2: f64,
    held_u: f64,
    events: Vec<TriggerEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterEventStats {
    pub count: usize,
    pub min_interval: Option<f64>,
    pub mean_interval: Option<f64>,
    pub reduction_percent: f64,
}

impl SetmState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_trigger_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    pub fn held_z2(&self) -> f64 {
        self.held_z2
    }

    pub fn held_u(&self) -> f64 {
        self.held_u
    }

    pub fn events(&self) -> &[TriggerEvent] {
        &self.events
    }

    pub fn trigger_count(&self) -> usize {
        self.events.len()
    }

    pub fn measurement_error(&self, z2_now: f64) -> f64 {
        self.held_z2 - z2_now
    }

    /// `Psi = |e|^2 - sigma |z2|^2 >= 0`.
    pub fn should_trigger(&self, cfg: &SetmConfig, z2_now: f64) -> bool {
        let (sigma, _) = cfg.switched_sigma(z2_now);
        self.measurement_error(z2_now).powi(2) >= sigma * z2_now * z2_now
    }

    /// Trigger decision used by the simulator: the first evaluation always
    /// fires, and a zero measurement error never does since the held value
    /// is already exact.
    pub fn fires(&self, cfg: &SetmConfig, z2_now: f64) -> bool {
        if self.events.is_empty() {
            return true;
        }
        self.measurement_error(z2_now) != 0.0 && self.should_trigger(cfg, z2_now)
    }

    pub fn on_trigger(&mut self, t: f64, z2_now: f64, u_new: f64, branch: Branch) -> Result<()> {
        if let Some(previous) = self.last_trigger_time() {
            if !(t > previous) {
                return Err(Error::NonIncreasingTrigger { previous, t });
            }
        }
        self.held_z2 = z2_now;
        self.held_u = u_new;
        self.events.push(TriggerEvent {
            time: t,
            z2: z2_now,
            branch,
        });
        Ok(())
    }

    pub fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.windows(2).map(|w| w[1].time - w[0].time)
    }

    pub fn interevent_stats(&self, horizon: f64, base_period: f64) -> Result<InterEventStats> {
        if !(horizon.is_finite() && horizon > 0.0 && base_period > 0.0) {
            return Err(Error::config(
                "sim.duration-positive",
                "horizon and base period must be positive",
            ));
        }
        let count = self.events.len();
        let samples = (horizon / base_period).round();
        let reduction_percent = 100.0 * (1.0 - count as f64 / samples);
        let (min_interval, mean_interval) = if count >= 2 {
            let (min, sum) = self
                .intervals()
                .fold((f64::INFINITY, 0.0), |(m, s), d| (m.min(d), s + d));
            (Some(min), Some(sum / (count - 1) as f64))
        } else {
            (None, None)
        };
        Ok(InterEventStats {
            count,
            min_interval,
            mean_interval,
            reduction_percent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SetmConfig {
        SetmConfig::new(0.05, 0.5, 0.1).unwrap()
    }

    #[test]
    fn config_ordering() {
        assert!(SetmConfig::new(0.5, 0.05, 0.1).is_err());
        assert!(SetmConfig::new(0.0, 0.5, 0.1).is_err());
        assert!(SetmConfig::new(0.1, 1.0, 0.1).is_err());
        assert!(SetmConfig::new(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn measurement_error_cases() {
        let mut s = SetmState::new();
        s.on_trigger(0.0, 1.0, 5.0, Branch::Transient).unwrap();
        assert_eq!(s.measurement_error(1.0), 0.0);
        assert!((s.measurement_error(0.7) - 0.3).abs() < 1e-15);
        let mut swapped = SetmState::new();
        swapped
            .on_trigger(0.0, 0.7, 0.0, Branch::Transient)
            .unwrap();
        assert_eq!(swapped.measurement_error(1.0), -s.measurement_error(0.7));
    }

    #[test]
    fn sigma_switching() {
        let c = cfg();
        assert_eq!(c.switched_sigma(0.5).0, 0.05);
        assert_eq!(c.switched_sigma(-0.5).0, 0.05);
        assert_eq!(c.switched_sigma(0.01).0, 0.5);
        assert_eq!(c.switched_sigma(0.1), (0.05, Branch::Transient));
    }

    #[test]
    fn trigger_rule() {
        let c = SetmConfig::new(0.25, 0.5, 0.1).unwrap();
        let mut s = SetmState::new();
        s.on_trigger(0.0, 2.0, 0.0, Branch::Transient).unwrap();
        assert!(!s.should_trigger(&c, 2.0));
        let mut zero = SetmState::new();
        zero.on_trigger(0.0, 0.0, 0.0, Branch::Steady).unwrap();
        assert!(zero.should_trigger(&c, 0.0));
        assert!(!zero.fires(&c, 0.0));
        // |e| = 1.001 with |z2| = 2 under sigma = 0.25.
        let mut s = SetmState::new();
        s.on_trigger(0.0, 3.001, 0.0, Branch::Transient).unwrap();
        assert!(s.should_trigger(&c, 2.0));
        assert!(SetmState::new().fires(&c, 1.0));
    }

    #[test]
    fn trigger_log_and_hold() {
        let mut s = SetmState::new();
        s.on_trigger(0.004, 0.3, 10.0, Branch::Transient).unwrap();
        assert_eq!(s.held_u(), 10.0);
        s.on_trigger(0.009, 0.2, 12.0, Branch::Steady).unwrap();
        let times: Vec<f64> = s.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.004, 0.009]);
        assert_eq!(s.trigger_count(), 2);
        assert_eq!(s.held_u(), 12.0);
        assert!(matches!(
            s.on_trigger(0.009, 0.0, 0.0, Branch::Steady),
            Err(Error::NonIncreasingTrigger { .. })
        ));
        assert_eq!(s.held_u(), 12.0);
    }

    fn with_count(n: usize) -> SetmState {
        let mut s = SetmState::new();
        for k in 0..n {
            s.on_trigger(k as f64 * 0.1, 0.0, 0.0, Branch::Steady)
                .unwrap();
        }
        s
    }

    #[test]
    fn reduction_matches_reported_table() {
        for (count, expected) in [(212, 99.58), (301, 99.40), (306, 99.39), (678, 98.64)] {
            let stats = with_count(count).interevent_stats(50.0, 0.001).unwrap();
            assert_eq!(stats.count, count);
            assert!(
                (stats.reduction_percent - expected).abs() < 0.005,
                "{count}: {}",
                stats.reduction_percent
            );
        }
    }

    #[test]
    fn stats_edge_cases() {
        let one = with_count(1).interevent_stats(50.0, 0.001).unwrap();
        assert_eq!(one.count, 1);
        assert!(one.min_interval.is_none() && one.mean_interval.is_none());
        let none = SetmState::new().interevent_stats(50.0, 0.001).unwrap();
        assert_eq!(none.count, 0);
        assert_eq!(none.reduction_percent, 100.0);
        let mut s = SetmState::new();
        for t in [0.0, 0.002, 0.012] {
            s.on_trigger(t, 0.0, 0.0, Branch::Steady).unwrap();
        }
        let st = s.interevent_stats(1.0, 0.001).unwrap();
        assert!((st.min_interval.unwrap() - 0.002).abs() < 1e-15);
        assert!((st.mean_interval.unwrap() - 0.006).abs() < 1e-15);
        assert!(SetmState::new().interevent_stats(0.0, 0.001).is_err());
    }
}
