//! Adaptive backstepping in mapped coordinates.
//!
//! Position layer: `alpha = -k1 z1`. Velocity layer: `z2 = s_v - alpha`
//! where `s_v` is the mapped (projected) velocity. Input:
//! `u = g^{-1} (-k2 z2 - W^T phi + alpha')`.
//!
//! Both axes run the same chain independently with their own velocity box
//! and network. `k1` implicitly carries units of 1/m because it turns a
//! position error into a mapped-velocity target.

use crate::constraint::ConstraintBox;
use crate::error::{Error, Result};
use crate::graph::{FormationGraph, Vec2};
use crate::plant::VehicleState;
use crate::rbf::RbfNetwork;
use crate::setm::SetmConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    k1: f64,
    k2: f64,
}

impl ControllerGains {
    /// Requires `k1 > 0` and `k2 > 1/2 + max(delta1, delta2)/2`.
    pub fn new(k1: f64, k2: f64, setm: &SetmConfig) -> Result<Self> {
        if !(k1.is_finite() && k1 > 0.0) {
            return Err(Error::config(
                "gains.k1-positive",
                format!("k1 = {k1} must be positive"),
            ));
        }
        let floor = 0.5 + 0.5 * setm.delta1().max(setm.delta2());
        if !(k2.is_finite() && k2 > floor) {
            return Err(Error::config(
                "gains.k2-theorem1",
                format!("k2 = {k2} must exceed 1/2 + sigma/2 = {floor}"),
            ));
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn virtual_law(&self, z1: &Vec2) -> Vec2 {
        -self.k1 * z1
    }

    /// Analytic `alpha'` for the neighbor-only error:
    /// `-k1 sum_j a_ij (v_i - v_j)`.
    pub fn alpha_rate(
        &self,
        graph: &FormationGraph,
        i: usize,
        velocities: &[Vec2],
    ) -> Result<Vec2> {
        check_vehicle(graph, i, velocities.len())?;
        Ok(-self.k1 * graph.relative_rate_at(i, velocities))
    }

    pub fn control_law(&self, z2: f64, f_hat: f64, alpha_dot: f64, g_inv: f64) -> Result<f64> {
        if !(g_inv.is_finite() && g_inv > 0.0) {
            return Err(Error::config(
                "plant.mass-positive",
                format!("inverse input gain {g_inv} must be positive"),
            ));
        }
        Ok(g_inv * (-self.k2 * z2 - f_hat + alpha_dot))
    }
}

fn check_vehicle(graph: &FormationGraph, i: usize, len: usize) -> Result<()> {
    if len != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            got: len,
        });
    }
    if i >= graph.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: graph.len(),
        });
    }
    Ok(())
}

/// Exogenous leader trajectory sampled at the current instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
}

/// Everything besides the vehicle states that a frame depends on.
#[derive(Debug, Clone, Copy)]
pub struct FrameContext<'a> {
    pub graph: &'a FormationGraph,
    pub velocity_boxes: &'a [ConstraintBox; 2],
    pub spacing_box: &'a ConstraintBox,
    pub predecessors: &'a [Option<usize>],
    pub reference: Reference,
    /// Adds the mapped leader velocity to `alpha` (and its rate to `alpha'`).
    pub feedforward: bool,
    /// Scales the position-layer gain by `1 + gamma_d`.
    pub spacing_feedback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingFrame {
    pub predecessor: usize,
    pub distance: f64,
    pub s_d: f64,
    pub gamma_d: f64,
    /// Rate of `s_d` (1/s).
    pub s_d_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlFrame {
    pub z1: Vec2,
    pub z1_rate: Vec2,
    pub alpha: Vec2,
    pub alpha_dot: Vec2,
    pub s_v: Vec2,
    pub gamma_v: Vec2,
    pub z2: Vec2,
    pub f_hat: Vec2,
    /// Input that would be applied if a trigger fired now (N).
    pub u: Vec2,
    pub spacing: Option<SpacingFrame>,
}

/// Network input for one axis: the projected axis velocity.
pub fn network_input(boxes: &[ConstraintBox; 2], state: &VehicleState, axis: usize) -> [f64; 1] {
    [boxes[axis].project(state.velocity[axis])]
}

/// Evaluates `z1 -> alpha -> s_v -> z2 -> u` for vehicle `i` against one
/// consistent snapshot of all states.
pub fn compose_frame(
    gains: &ControllerGains,
    ctx: &FrameContext<'_>,
    i: usize,
    states: &[VehicleState],
    nets: &[RbfNetwork; 2],
    g_inv: f64,
) -> Result<ControlFrame> {
    let graph = ctx.graph;
    check_vehicle(graph, i, states.len())?;
    if ctx.predecessors.len() != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            got: ctx.predecessors.len(),
        });
    }
    let positions: Vec<Vec2> = states.iter().map(|s| s.position).collect();
    let velocities: Vec<Vec2> = states.iter().map(|s| s.velocity).collect();
    let me = &states[i];
    let reference = &ctx.reference;
    let pin = graph.pinning()[i];

    let mut z1 = graph.formation_error_at(i, &positions);
    let mut z1_rate = graph.relative_rate_at(i, &velocities);
    if pin > 0.0 {
        z1 += pin * ((me.position - reference.position) - graph.offsets()[i]);
        z1_rate += pin * (me.velocity - reference.velocity);
    }

    let spacing = match ctx.predecessors[i] {
        Some(j) => {
            let pred = states.get(j).ok_or(Error::IndexOutOfRange {
                index: j,
                len: states.len(),
            })?;
            let gap = pred.position - me.position;
            let distance = gap.norm();
            if distance == 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "vehicle {i} coincides with predecessor {j}"
                )));
            }
            // Same projection as the velocity channels; the raw distance is
            // kept for auditing.
            let mapped = ctx.spacing_box.forward(ctx.spacing_box.project(distance))?;
            let s_d_rate = mapped.gamma * gap.dot(&(pred.velocity - me.velocity)) / distance;
            Some(SpacingFrame {
                predecessor: j,
                distance,
                s_d: mapped.s,
                gamma_d: mapped.gamma,
                s_d_rate,
            })
        }
        None => None,
    };

    let mut alpha = gains.virtual_law(&z1);
    let mut alpha_dot = -gains.k1 * z1_rate;
    if ctx.spacing_feedback {
        if let Some(sp) = &spacing {
            let pred = &states[sp.predecessor];
            let gap = pred.position - me.position;
            let distance_rate = gap.dot(&(pred.velocity - me.velocity)) / sp.distance;
            let weight_rate = ctx
                .spacing_box
                .gamma_slope(ctx.spacing_box.project(sp.distance))
                * distance_rate;
            alpha -= gains.k1 * sp.gamma_d * z1;
            alpha_dot -= gains.k1 * (sp.gamma_d * z1_rate + weight_rate * z1);
        }
    }

    let mut s_v = Vec2::zeros();
    let mut gamma_v = Vec2::zeros();
    let mut z2 = Vec2::zeros();
    let mut f_hat = Vec2::zeros();
    let mut u = Vec2::zeros();
    for axis in 0..2 {
        let bx = &ctx.velocity_boxes[axis];
        if ctx.feedforward {
            let r = bx.forward(bx.project(reference.velocity[axis]))?;
            alpha[axis] += r.s;
            alpha_dot[axis] += r.gamma * reference.acceleration[axis];
        }
        let mapped = bx.forward(bx.project(me.velocity[axis]))?;
        s_v[axis] = mapped.s;
        gamma_v[axis] = mapped.gamma;
        z2[axis] = mapped.s - alpha[axis];
        f_hat[axis] = nets[axis].approximate(&network_input(ctx.velocity_boxes, me, axis))[0];
        u[axis] = gains.control_law(z2[axis], f_hat[axis], alpha_dot[axis], g_inv)?;
    }

    Ok(ControlFrame {
        z1,
        z1_rate,
        alpha,
        alpha_dot,
        s_v,
        gamma_v,
        z2,
        f_hat,
        u,
        spacing,
    })
}
