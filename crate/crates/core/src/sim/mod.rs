//! Fixed-step closed loop.
//!
//! Every tick reads one snapshot of all vehicle states, builds each
//! vehicle's control frame from it, runs the trigger rule per axis, updates
//! the holds and the adaptive weights, then integrates every plant with its
//! held input. Iteration order over vehicles cannot affect the result.

mod audit;
mod leader;
mod log;

pub use audit::{
    constraint_audit, lyapunov_trace, settling_band, settling_time, time_inside_band,
    trigger_table, weight_audit, zeno_audit, AuditReport, ChannelAudit, LyapunovTrace, TriggerRow,
    WeightAudit, WeightRow, ZenoAudit, ZenoRow, AUDIT_SLACK,
};
pub use leader::LeaderProfile;
pub use log::{RunLog, TickRecord, VehicleRecord};

use crate::constraint::ConstraintBox;
use crate::controller::{compose_frame, network_input, ControllerGains, FrameContext};
use crate::error::{Error, Result};
use crate::graph::{FormationGraph, Vec2};
use crate::plant::{PlantModel, VehicleState};
use crate::rbf::RbfNetwork;
use crate::setm::{SetmConfig, SetmState};

/// Spacing and per-axis velocity boxes shared by all vehicles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boxes {
    pub spacing: ConstraintBox,
    /// `[longitudinal, lateral]`
    pub velocity: [ConstraintBox; 2],
}

/// Network hyperparameters. One scalar network per vehicle and axis, with
/// `centers` Gaussians spread uniformly over that axis' velocity box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfSettings {
    pub centers: usize,
    /// Defaults to the grid spacing.
    pub width: Option<f64>,
    pub gain: f64,
    pub leakage: f64,
}

impl RbfSettings {
    /// Scenario networks always leak; the bare network also allows zero.
    pub fn build(&self, velocity_box: &ConstraintBox) -> Result<RbfNetwork> {
        if !(self.leakage.is_finite() && self.leakage > 0.0) {
            return Err(Error::config(
                "rbf.leakage-positive",
                format!("leakage {} must be positive", self.leakage),
            ));
        }
        let lo = velocity_box.lower + velocity_box.margin;
        let hi = velocity_box.upper - velocity_box.margin;
        let width = self.width.unwrap_or_else(|| {
            if self.centers > 1 {
                (hi - lo) / (self.centers - 1) as f64
            } else {
                hi - lo
            }
        });
        RbfNetwork::grid(&[(lo, hi)], self.centers, width, 1, self.gain, self.leakage)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// s
    pub duration: f64,
    /// s
    pub step: f64,
    pub graph: FormationGraph,
    pub predecessors: Vec<Option<usize>>,
    pub plants: Vec<PlantModel>,
    pub boxes: Boxes,
    pub gains: Vec<ControllerGains>,
    pub setm: SetmConfig,
    /// When false every tick transmits (periodic baseline).
    pub event_triggered: bool,
    pub rbf: RbfSettings,
    pub leader: LeaderProfile,
    pub feedforward: bool,
    pub spacing_feedback: bool,
    pub initial_states: Vec<VehicleState>,
}

impl Scenario {
    pub fn vehicle_count(&self) -> usize {
        self.graph.len()
    }

    pub fn tick_count(&self) -> usize {
        (self.duration / self.step).round() as usize
    }

    /// Structural checks plus the feasibility gate on initial conditions.
    pub fn check(&self) -> Result<()> {
        let n = self.vehicle_count();
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config(
                "sim.step-positive",
                format!("step {} must be positive", self.step),
            ));
        }
        if !(self.duration.is_finite() && self.duration >= self.step) {
            return Err(Error::config(
                "sim.duration-positive",
                format!("duration {} must be at least one step", self.duration),
            ));
        }
        for (what, len) in [
            ("plants", self.plants.len()),
            ("gains", self.gains.len()),
            ("predecessors", self.predecessors.len()),
            ("initial states", self.initial_states.len()),
        ] {
            if len != n {
                return Err(Error::config(
                    "scenario.vehicle-count",
                    format!("{what} has {len} entries for {n} vehicles"),
                ));
            }
        }
        for (i, p) in self.predecessors.iter().enumerate() {
            if let Some(j) = *p {
                if j >= n || j == i {
                    return Err(Error::config(
                        "platoon.predecessor",
                        format!("vehicle {i} has invalid predecessor {j}"),
                    ));
                }
            }
        }
        self.boxes.spacing.validate()?;
        for b in &self.boxes.velocity {
            b.validate()?;
        }
        self.leader.validate()?;
        let (lo, hi) = self.leader.speed_range();
        let vx = &self.boxes.velocity[0];
        if !(lo > vx.lower + vx.margin && hi < vx.upper - vx.margin) {
            return Err(Error::Infeasible(format!(
                "leader speeds [{lo}, {hi}] leave the longitudinal velocity box"
            )));
        }
        let lat = &self.boxes.velocity[1];
        if !(lat.lower + lat.margin < 0.0 && 0.0 < lat.upper - lat.margin) {
            return Err(Error::Infeasible(
                "lateral velocity box must contain the leader's zero lateral speed".into(),
            ));
        }
        self.check_feasible()
    }

    fn check_feasible(&self) -> Result<()> {
        for (i, s) in self.initial_states.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFinite("initial state"));
            }
            for axis in 0..2 {
                let b = &self.boxes.velocity[axis];
                let v = s.velocity[axis];
                if !(v > b.lower + b.margin && v < b.upper - b.margin) {
                    return Err(Error::Infeasible(format!(
                        "vehicle {i} axis {axis} velocity {v} outside ({}, {})",
                        b.lower + b.margin,
                        b.upper - b.margin
                    )));
                }
            }
            if let Some(j) = self.predecessors[i] {
                let d = (self.initial_states[j].position - s.position).norm();
                let b = &self.boxes.spacing;
                if !(d > b.lower + b.margin && d < b.upper - b.margin) {
                    return Err(Error::Infeasible(format!(
                        "vehicle {i} spacing {d} to predecessor {j} outside ({}, {})",
                        b.lower + b.margin,
                        b.upper - b.margin
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs the closed loop over the scenario horizon.
pub fn run(scenario: &Scenario) -> Result<RunLog> {
    let order: Vec<usize> = (0..scenario.vehicle_count()).collect();
    run_with_order(scenario, &order)
}

/// Same as [`run`] but visits vehicles in `order` within each tick.
pub fn run_with_order(scenario: &Scenario, order: &[usize]) -> Result<RunLog> {
    scenario.check()?;
    let n = scenario.vehicle_count();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::config(
            "sim.order",
            "iteration order must be a permutation of the vehicles",
        ));
    }
    let h = scenario.step;
    let ticks = scenario.tick_count();

    let mut nets: Vec<[RbfNetwork; 2]> = (0..n)
        .map(|_| {
            Ok([
                scenario.rbf.build(&scenario.boxes.velocity[0])?,
                scenario.rbf.build(&scenario.boxes.velocity[1])?,
            ])
        })
        .collect::<Result<_>>()?;
    let mut setm: Vec<[SetmState; 2]> = vec![[SetmState::new(), SetmState::new()]; n];
    let mut states = scenario.initial_states.clone();
    let mut log = Vec::with_capacity(ticks + 1);

    for tick in 0..=ticks {
        let t = tick as f64 * h;
        let fault = |e: Error| Error::Fault {
            tick,
            time: t,
            source: Box::new(e),
        };
        let snapshot = states.clone();
        let ctx = FrameContext {
            graph: &scenario.graph,
            velocity_boxes: &scenario.boxes.velocity,
            spacing_box: &scenario.boxes.spacing,
            predecessors: &scenario.predecessors,
            reference: scenario.leader.reference(t),
            feedforward: scenario.feedforward,
            spacing_feedback: scenario.spacing_feedback,
        };

        let mut records: Vec<Option<VehicleRecord>> = vec![None; n];
        for &i in order {
            let plant = &scenario.plants[i];
            let frame = compose_frame(&scenario.gains[i], &ctx, i, &snapshot, &nets[i], plant.mass)
                .map_err(fault)?;
            let mut u_applied = Vec2::zeros();
            let mut triggered = [false; 2];
            for axis in 0..2 {
                let z2 = frame.z2[axis];
                let state = &mut setm[i][axis];
                let fire = !scenario.event_triggered || state.fires(&scenario.setm, z2);
                if fire {
                    let (_, branch) = scenario.setm.switched_sigma(z2);
                    state
                        .on_trigger(t, z2, frame.u[axis], branch)
                        .map_err(fault)?;
                    triggered[axis] = true;
                }
                u_applied[axis] = state.held_u();
            }
            let me = &snapshot[i];
            records[i] = Some(VehicleRecord {
                position: me.position,
                velocity: me.velocity,
                z1: frame.z1,
                z2: frame.z2,
                alpha: frame.alpha,
                alpha_dot: frame.alpha_dot,
                s_v: frame.s_v,
                gamma_v: frame.gamma_v,
                spacing: frame.spacing,
                u_candidate: frame.u,
                u_applied,
                triggered,
                f_hat: frame.f_hat,
                f_true: plant.nonlinearity(&me.velocity),
                disturbance: plant.disturbance_sample(t),
                weight_norm: [nets[i][0].weight_norm(), nets[i][1].weight_norm()],
            });

            if tick < ticks {
                for axis in 0..2 {
                    let x = network_input(&scenario.boxes.velocity, me, axis);
                    nets[i][axis]
                        .update_weights(&x, &[frame.z2[axis]], h)
                        .map_err(fault)?;
                }
            }
        }
        let vehicles: Vec<VehicleRecord> = records
            .into_iter()
            .map(|r| r.expect("every vehicle visited"))
            .collect();
        let lyapunov = vehicles
            .iter()
            .map(|v| 0.5 * v.z1.norm_squared() + 0.5 * v.z2.norm_squared())
            .sum();

        if tick < ticks {
            for &i in order {
                states[i] = scenario.plants[i]
                    .step_vehicle(&snapshot[i], &vehicles[i].u_applied, t, h)
                    .map_err(fault)?;
            }
        }
        log.push(TickRecord {
            time: t,
            lyapunov,
            vehicles,
        });
    }

    Ok(RunLog {
        step: h,
        duration: scenario.duration,
        ticks: log,
        setm,
        final_weights: nets
            .into_iter()
            .map(|[a, b]| [a.weights().clone(), b.weights().clone()])
            .collect(),
    })
}
