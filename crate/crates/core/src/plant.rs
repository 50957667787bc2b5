//! Ground-truth vehicle dynamics.
//!
//! `p' = v`, `v' = f(x) + u / m + d(t)` per axis, with
//! `f(x) = -(c_drag |v| v + c_roll v) / m`. The controller never reads
//! these parameters except the mass, which is the inverse input gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl VehicleState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Self { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .all(|c| c.is_finite())
    }
}

/// Per-axis sinusoid `A sin(w t + phi)` with a declared norm bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    /// Declared bound on `|d(t)|` (m/s^2).
    pub bound: f64,
    pub amplitude: [f64; 2],
    /// rad/s
    pub frequency: [f64; 2],
    pub phase: [f64; 2],
}

impl Disturbance {
    pub fn none() -> Self {
        Self {
            bound: 0.0,
            amplitude: [0.0; 2],
            frequency: [0.0; 2],
            phase: [0.0; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.bound]
            .into_iter()
            .chain(self.amplitude)
            .chain(self.frequency)
            .chain(self.phase);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("disturbance parameter"));
        }
        if self.bound < 0.0 {
            return Err(Error::config(
                "plant.disturbance-bound",
                "disturbance bound must be nonnegative",
            ));
        }
        let peak = self.amplitude[0].hypot(self.amplitude[1]);
        if peak > self.bound {
            return Err(Error::config(
                "plant.disturbance-bound",
                format!(
                    "amplitude norm {peak} exceeds declared bound {}",
                    self.bound
                ),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Vec2 {
        Vec2::from_fn(|k, _| {
            if self.amplitude[k] == 0.0 {
                0.0
            } else {
                self.amplitude[k] * (self.frequency[k] * t + self.phase[k]).sin()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantModel {
    /// kg
    pub mass: f64,
    /// N s^2 / m^2
    pub drag_coeff: f64,
    /// N s / m
    pub roll_coeff: f64,
    pub disturbance: Disturbance,
}

impl PlantModel {
    pub fn new(
        mass: f64,
        drag_coeff: f64,
        roll_coeff: f64,
        disturbance: Disturbance,
    ) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::config(
                "plant.mass-positive",
                format!("mass {mass} must be positive"),
            ));
        }
        if !(drag_coeff.is_finite() && roll_coeff.is_finite())
            || drag_coeff < 0.0
            || roll_coeff < 0.0
        {
            return Err(Error::config(
                "plant.resistance-nonnegative",
                "drag and rolling coefficients must be finite and nonnegative",
            ));
        }
        disturbance.validate()?;
        Ok(Self {
            mass,
            drag_coeff,
            roll_coeff,
            disturbance,
        })
    }

    /// Input gain `g = 1/m`.
    pub fn input_gain(&self) -> f64 {
        self.mass.recip()
    }

    /// Hidden nonlinearity `f(x)` (m/s^2).
    pub fn nonlinearity(&self, velocity: &Vec2) -> Vec2 {
        -(self.drag_coeff * velocity.norm() * velocity + self.roll_coeff * velocity) / self.mass
    }

    pub fn disturbance_sample(&self, t: f64) -> Vec2 {
        self.disturbance.sample(t)
    }

    pub fn plant_accel(&self, state: &VehicleState, u: &Vec2, t: f64) -> Result<Vec2> {
        if !state.is_finite() {
            return Err(Error::NonFinite("vehicle state"));
        }
        if !u.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("control input"));
        }
        let d = self.disturbance_sample(t);
        Ok(self.accel_with(&state.velocity, u, &d))
    }

    fn accel_with(&self, velocity: &Vec2, u: &Vec2, d: &Vec2) -> Vec2 {
        self.nonlinearity(velocity) + u * self.input_gain() + d
    }

    /// One classical RK4 step with `u` and `d(t)` held over `[t, t+h]`.
    pub fn step_vehicle(
        &self,
        state: &VehicleState,
        u: &Vec2,
        t: f64,
        h: f64,
    ) -> Result<VehicleState> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::config(
                "sim.step-positive",
                format!("step {h} must be positive"),
            ));
        }
        if !state.is_finite() {
            return Err(Error::NonFinite("vehicle state"));
        }
        if !u.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("control input"));
        }
        let d = self.disturbance_sample(t);
        let deriv = |v: &Vec2| self.accel_with(v, u, &d);

        let v0 = state.velocity;
        let k1v = deriv(&v0);
        let k1p = v0;
        let v1 = v0 + 0.5 * h * k1v;
        let k2v = deriv(&v1);
        let k2p = v1;
        let v2 = v0 + 0.5 * h * k2v;
        let k3v = deriv(&v2);
        let k3p = v2;
        let v3 = v0 + h * k3v;
        let k4v = deriv(&v3);
        let k4p = v3;

        let next = VehicleState {
            position: state.position + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            velocity: v0 + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        };
        if !next.is_finite() {
            return Err(Error::NonFinite("integrated vehicle state"));
        }
        Ok(next)
    }
}
