use serde::{Deserialize, Serialize};

use crate::controller::Reference;
use crate::error::{Error, Result};
use crate::graph::Vec2;

/// Longitudinal speed schedule of the virtual leader: constant cruise,
/// a linear ramp over `[ramp_start, ramp_end]`, then constant again.
/// The leader drives along +x with zero lateral speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderProfile {
    /// m/s
    pub cruise_speed: f64,
    /// m/s
    pub final_speed: f64,
    /// s
    pub ramp_start: f64,
    /// s
    pub ramp_end: f64,
    /// Leader position at t = 0 (m).
    #[serde(default)]
    pub start: [f64; 2],
}

impl LeaderProfile {
    pub fn constant(speed: f64) -> Self {
        Self {
            cruise_speed: speed,
            final_speed: speed,
            ramp_start: 0.0,
            ramp_end: 1.0,
            start: [0.0; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.cruise_speed,
            self.final_speed,
            self.start[0],
            self.start[1],
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("leader profile"));
        }
        if !(self.ramp_start >= 0.0 && self.ramp_end > self.ramp_start) {
            return Err(Error::config(
                "leader.ramp-window",
                format!(
                    "need 0 <= ramp_start < ramp_end, got [{}, {}]",
                    self.ramp_start, self.ramp_end
                ),
            ));
        }
        Ok(())
    }

    fn slope(&self) -> f64 {
        (self.final_speed - self.cruise_speed) / (self.ramp_end - self.ramp_start)
    }

    pub fn speed(&self, t: f64) -> f64 {
        if t < self.ramp_start {
            self.cruise_speed
        } else if t < self.ramp_end {
            self.cruise_speed + self.slope() * (t - self.ramp_start)
        } else {
            self.final_speed
        }
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if t >= self.ramp_start && t < self.ramp_end {
            self.slope()
        } else {
            0.0
        }
    }

    /// Distance travelled since t = 0.
    pub fn distance(&self, t: f64) -> f64 {
        if t < self.ramp_start {
            return self.cruise_speed * t;
        }
        let before = self.cruise_speed * self.ramp_start;
        if t < self.ramp_end {
            let tau = t - self.ramp_start;
            return before + self.cruise_speed * tau + 0.5 * self.slope() * tau * tau;
        }
        let span = self.ramp_end - self.ramp_start;
        let during = 0.5 * (self.cruise_speed + self.final_speed) * span;
        before + during + self.final_speed * (t - self.ramp_end)
    }

    pub fn reference(&self, t: f64) -> Reference {
        Reference {
            position: Vec2::new(self.start[0] + self.distance(t), self.start[1]),
            velocity: Vec2::new(self.speed(t), 0.0),
            acceleration: Vec2::new(self.acceleration(t), 0.0),
        }
    }

    pub fn speed_range(&self) -> (f64, f64) {
        (
            self.cruise_speed.min(self.final_speed),
            self.cruise_speed.max(self.final_speed),
        )
    }
}
