//! Logarithmic constraint mapping.
//!
//! A quantity confined to the open interval `(lower, upper)` is mapped to
//! the whole real line by `s = ln((x - lower) / (upper - x))`. Its
//! derivative `gamma = 1/(x - lower) + 1/(upper - x)` is the transformation
//! gain; it is smallest at the midpoint and grows without bound at either
//! edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintBox {
    #[serde(rename = "min")]
    pub lower: f64,
    #[serde(rename = "max")]
    pub upper: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedValue {
    pub s: f64,
    pub gamma: f64,
}

impl ConstraintBox {
    pub fn new(lower: f64, upper: f64, margin: f64) -> Result<Self> {
        let b = Self {
            lower,
            upper,
            margin,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.margin.is_finite()) {
            return Err(Error::NonFinite("constraint bound"));
        }
        if self.margin < 0.0 {
            return Err(Error::config(
                "constraint.margin-nonnegative",
                format!("margin {} must be nonnegative", self.margin),
            ));
        }
        if self.lower + 2.0 * self.margin >= self.upper {
            return Err(Error::config(
                "constraint.nonempty-interior",
                format!(
                    "need min + 2*margin < max, got min={} max={} margin={}",
                    self.lower, self.upper, self.margin
                ),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Smallest gain over the interior, attained at the midpoint.
    pub fn min_gamma(&self) -> f64 {
        4.0 / self.width()
    }

    /// Strictly inside `(lower, upper)`.
    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    /// Clamp into `[lower + margin, upper - margin]`.
    pub fn project(&self, x: f64) -> f64 {
        x.clamp(self.lower + self.margin, self.upper - self.margin)
    }

    pub fn forward(&self, x: f64) -> Result<MappedValue> {
        if !self.contains(x) {
            return Err(Error::Domain {
                value: x,
                lower: self.lower,
                upper: self.upper,
            });
        }
        let below = x - self.lower;
        let above = self.upper - x;
        Ok(MappedValue {
            s: (below / above).ln(),
            gamma: below.recip() + above.recip(),
        })
    }

    /// `x = lower + width / (1 + e^{-s})`, evaluated without overflow.
    pub fn inverse(&self, s: f64) -> f64 {
        self.lower + self.width() * sigmoid(s)
    }

    /// Derivative of the gain with respect to `x`.
    pub fn gamma_slope(&self, x: f64) -> f64 {
        let below = x - self.lower;
        let above = self.upper - x;
        -below.powi(-2) + above.powi(-2)
    }

    /// Rate of the mapped spacing to the predecessor:
    /// `gamma_d(d) * (p_pred - p_self)^T (v_pred - v_self) / d`.
    pub fn spacing_rate(
        &self,
        p_pred: &Vec2,
        p_self: &Vec2,
        v_pred: &Vec2,
        v_self: &Vec2,
    ) -> Result<f64> {
        let gap = p_pred - p_self;
        let distance = gap.norm();
        if distance == 0.0 {
            return Err(Error::DegenerateGeometry(
                "vehicle coincides with its predecessor".into(),
            ));
        }
        let mapped = self.forward(distance)?;
        Ok(mapped.gamma * gap.dot(&(v_pred - v_self)) / distance)
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}
