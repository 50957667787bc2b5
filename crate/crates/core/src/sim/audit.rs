//! Post-run analysis over a [`RunLog`]: Lyapunov trace, constraint audit,
//! trigger statistics, inter-event audit and weight boundedness.

use serde::Serialize;

use super::{Boxes, RunLog, Scenario};
use crate::constraint::ConstraintBox;
use crate::error::Result;
use crate::setm::{InterEventStats, SetmConfig};

/// Numerical slack for the strict-inequality audit.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovTrace {
    #[serde(skip)]
    pub values: Vec<(f64, f64)>,
    #[serde(skip)]
    pub deltas: Vec<f64>,
    pub initial: f64,
    pub fraction_increasing: f64,
    /// Max of V over the final 20% of the run.
    pub ultimate_bound: f64,
    /// Max of V over the final 10 s (the whole run if shorter).
    pub final_floor: f64,
    pub note: &'static str,
}

pub fn lyapunov_trace(log: &RunLog) -> LyapunovTrace {
    let values: Vec<(f64, f64)> = log.ticks.iter().map(|t| (t.time, t.lyapunov)).collect();
    let deltas: Vec<f64> = values.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let increasing = deltas.iter().filter(|d| **d > 0.0).count();
    let end = values.last().map(|v| v.0).unwrap_or(0.0);
    let max_after = |from: f64| {
        values
            .iter()
            .filter(|(t, _)| *t >= from)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    LyapunovTrace {
        initial: values.first().map(|v| v.1).unwrap_or(0.0),
        fraction_increasing: if deltas.is_empty() {
            0.0
        } else {
            increasing as f64 / deltas.len() as f64
        },
        ultimate_bound: max_after(0.8 * end),
        final_floor: max_after((end - 10.0).max(0.0)),
        note: "observable part only; the weight-error term is not measurable",
        values,
        deltas,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelAudit {
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub max: f64,
    pub margin_to_lower: f64,
    pub margin_to_upper: f64,
    pub violations: usize,
    pub samples: usize,
}

impl ChannelAudit {
    fn new(b: &ConstraintBox) -> Self {
        Self {
            lower: b.lower,
            upper: b.upper,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            margin_to_lower: f64::INFINITY,
            margin_to_upper: f64::INFINITY,
            violations: 0,
            samples: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.samples += 1;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.margin_to_lower = self.min - self.lower;
        self.margin_to_upper = self.upper - self.max;
        if !(x > self.lower + AUDIT_SLACK && x < self.upper - AUDIT_SLACK) {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditReport {
    pub spacing: ChannelAudit,
    pub longitudinal_velocity: ChannelAudit,
    pub lateral_velocity: ChannelAudit,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.spacing.violations
            + self.longitudinal_velocity.violations
            + self.lateral_velocity.violations
    }
}

pub fn constraint_audit(log: &RunLog, boxes: &Boxes) -> AuditReport {
    let mut spacing = ChannelAudit::new(&boxes.spacing);
    let mut vx = ChannelAudit::new(&boxes.velocity[0]);
    let mut vy = ChannelAudit::new(&boxes.velocity[1]);
    for tick in &log.ticks {
        for v in &tick.vehicles {
            if let Some(sp) = &v.spacing {
                spacing.push(sp.distance);
            }
            vx.push(v.velocity.x);
            vy.push(v.velocity.y);
        }
    }
    AuditReport {
        spacing,
        longitudinal_velocity: vx,
        lateral_velocity: vy,
    }
}

/// Settling band over `[start, end]`: `final + 0.05 (peak - final)`, where
/// `final` is the mean over the last second of the window and `peak` the
/// window maximum. `None` for an empty window.
pub fn settling_band(series: &[(f64, f64)], start: f64, end: f64) -> Option<f64> {
    let window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= start && *t <= end)
        .collect();
    let last = window.last()?.0;
    let tail: Vec<f64> = window
        .iter()
        .filter(|(t, _)| *t >= last - 1.0)
        .map(|(_, v)| *v)
        .collect();
    let settled = tail.iter().sum::<f64>() / tail.len() as f64;
    let peak = window
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(settled + 0.05 * (peak - settled))
}

/// First time in `[start, end]` after which `value` stays at or below
/// `band`. `None` for an empty window.
pub fn time_inside_band(series: &[(f64, f64)], band: f64, start: f64, end: f64) -> Option<f64> {
    let window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= start && *t <= end)
        .collect();
    let last = window.last()?.0;
    match window.iter().rposition(|(_, v)| *v > band) {
        None => Some(window[0].0),
        Some(k) if k + 1 < window.len() => Some(window[k + 1].0),
        Some(_) => Some(last),
    }
}

/// [`time_inside_band`] with the window's own [`settling_band`].
pub fn settling_time(series: &[(f64, f64)], start: f64, end: f64) -> Option<f64> {
    let band = settling_band(series, start, end)?;
    time_inside_band(series, band, start, end)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerRow {
    /// One-based, as in reports.
    pub vehicle: usize,
    pub longitudinal: InterEventStats,
    pub lateral: InterEventStats,
    pub total_triggers: usize,
    pub total_reduction_percent: f64,
}

pub fn trigger_table(log: &RunLog) -> Result<Vec<TriggerRow>> {
    log.setm
        .iter()
        .enumerate()
        .map(|(i, axes)| {
            let longitudinal = axes[0].interevent_stats(log.duration, log.step)?;
            let lateral = axes[1].interevent_stats(log.duration, log.step)?;
            let total = longitudinal.count + lateral.count;
            let samples = 2.0 * (log.duration / log.step).round();
            Ok(TriggerRow {
                vehicle: i + 1,
                longitudinal,
                lateral,
                total_triggers: total,
                total_reduction_percent: 100.0 * (1.0 - total as f64 / samples),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZenoRow {
    pub vehicle: usize,
    pub axis: &'static str,
    pub min_interval: Option<f64>,
    /// Max observed `|z2'|`, finite-differenced per step.
    pub lipschitz_estimate: f64,
    pub t_min_bound: f64,
    pub min_interval_meets_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoAudit {
    pub step: f64,
    pub all_intervals_at_least_step: bool,
    pub overall_min_interval: Option<f64>,
    pub rows: Vec<ZenoRow>,
}

pub fn zeno_audit(log: &RunLog, cfg: &SetmConfig) -> ZenoAudit {
    let h = log.step;
    let mut rows = Vec::new();
    let mut overall: Option<f64> = None;
    let mut all_ok = true;
    for (i, axes) in log.setm.iter().enumerate() {
        for (axis, state) in axes.iter().enumerate() {
            let min_interval = state
                .intervals()
                .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))));
            if let Some(m) = min_interval {
                // Tick times are k*h, so differences carry rounding.
                if m < h * (1.0 - 1e-9) {
                    all_ok = false;
                }
                overall = Some(overall.map_or(m, |o: f64| o.min(m)));
            }
            let lipschitz = log
                .ticks
                .windows(2)
                .map(|w| ((w[1].vehicles[i].z2[axis] - w[0].vehicles[i].z2[axis]) / h).abs())
                .fold(0.0, f64::max);
            let bound = if lipschitz > 0.0 {
                cfg.min_interval_bound(lipschitz)
            } else {
                f64::INFINITY
            };
            rows.push(ZenoRow {
                vehicle: i + 1,
                axis: if axis == 0 { "longitudinal" } else { "lateral" },
                min_interval,
                lipschitz_estimate: lipschitz,
                t_min_bound: bound,
                min_interval_meets_bound: min_interval.map(|m| m >= bound),
            });
        }
    }
    ZenoAudit {
        step: h,
        all_intervals_at_least_step: all_ok,
        overall_min_interval: overall,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightRow {
    pub vehicle: usize,
    pub axis: &'static str,
    pub max_norm: f64,
    pub final_norm: f64,
    /// `max(|W(0)|, lambda_max(G) sqrt(K) Z / sigma_w)` with `Z = max |z2|`.
    pub leakage_bound: f64,
    /// Every 1 s sample over the final 20 s strictly above the previous one.
    pub monotone_growth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAudit {
    pub rows: Vec<WeightRow>,
}

impl WeightAudit {
    pub fn bounded(&self) -> bool {
        self.rows.iter().all(|r| {
            r.max_norm.is_finite()
                && r.max_norm <= r.leakage_bound * (1.0 + 1e-9)
                && !r.monotone_growth
        })
    }
}

pub fn weight_audit(log: &RunLog, scenario: &Scenario) -> WeightAudit {
    let rbf = &scenario.rbf;
    let basis = rbf.centers as f64;
    let end = log.ticks.last().map(|t| t.time).unwrap_or(0.0);
    let mut rows = Vec::new();
    for i in 0..log.vehicle_count() {
        for axis in 0..2 {
            let norms: Vec<(f64, f64)> = log
                .ticks
                .iter()
                .map(|t| (t.time, t.vehicles[i].weight_norm[axis]))
                .collect();
            let z_max = log
                .ticks
                .iter()
                .map(|t| t.vehicles[i].z2[axis].abs())
                .fold(0.0, f64::max);
            let initial = norms.first().map(|n| n.1).unwrap_or(0.0);
            let leakage_bound = initial.max(rbf.gain * basis.sqrt() * z_max / rbf.leakage);
            let mut samples = Vec::new();
            let mut next = (end - 20.0).max(0.0);
            for &(t, w) in &norms {
                if t + 1e-9 >= next {
                    samples.push(w);
                    next += 1.0;
                }
            }
            let monotone_growth = samples.len() >= 2 && samples.windows(2).all(|w| w[1] > w[0]);
            rows.push(WeightRow {
                vehicle: i + 1,
                axis: if axis == 0 { "longitudinal" } else { "lateral" },
                max_norm: norms.iter().map(|n| n.1).fold(0.0, f64::max),
                final_norm: norms.last().map(|n| n.1).unwrap_or(0.0),
                leakage_bound,
                monotone_growth,
            });
        }
    }
    WeightAudit { rows }
}
