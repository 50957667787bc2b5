use nalgebra::DMatrix;

use crate::controller::SpacingFrame;
use crate::graph::Vec2;
use crate::setm::SetmState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleRecord {
    pub position: Vec2,
    pub velocity: Vec2,
    pub z1: Vec2,
    pub z2: Vec2,
    pub alpha: Vec2,
    pub alpha_dot: Vec2,
    pub s_v: Vec2,
    pub gamma_v: Vec2,
    pub spacing: Option<SpacingFrame>,
    /// Freshly computed input (applied only if a trigger fired).
    pub u_candidate: Vec2,
    /// Held input driving the plant over the next step.
    pub u_applied: Vec2,
    pub triggered: [bool; 2],
    pub f_hat: Vec2,
    /// True plant nonlinearity at this state, for residual reporting.
    pub f_true: Vec2,
    pub disturbance: Vec2,
    pub weight_norm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub time: f64,
    /// Observable part of the Lyapunov function, `sum 1/2 |z1|^2 + 1/2 |z2|^2`.
    pub lyapunov: f64,
    pub vehicles: Vec<VehicleRecord>,
}

impl TickRecord {
    pub fn formation_error_norm(&self) -> f64 {
        self.vehicles
            .iter()
            .map(|v| v.z1.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub step: f64,
    pub duration: f64,
    pub ticks: Vec<TickRecord>,
    /// `[longitudinal, lateral]` trigger state per vehicle.
    pub setm: Vec<[SetmState; 2]>,
    pub final_weights: Vec<[DMatrix<f64>; 2]>,
}

impl RunLog {
    pub fn vehicle_count(&self) -> usize {
        self.setm.len()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.ticks.iter().map(|t| t.time)
    }

    pub fn formation_error_series(&self) -> Vec<(f64, f64)> {
        self.ticks
            .iter()
            .map(|t| (t.time, t.formation_error_norm()))
            .collect()
    }

    pub fn trigger_count(&self, vehicle: usize, axis: usize) -> usize {
        self.setm[vehicle][axis].trigger_count()
    }
}
