//! Scenario files: TOML documents mirroring [`Scenario`], validated into a
//! fully checked scenario or a list of rule violations.
//!
//! Vehicle indices in files are one-based; `predecessor = 0` means the
//! vehicle has no predecessor in the platoon order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintBox;
use crate::controller::ControllerGains;
use crate::error::Error;
use crate::graph::{FormationGraph, Vec2};
use crate::plant::{Disturbance, PlantModel, VehicleState};
use crate::setm::SetmConfig;
use crate::sim::{Boxes, LeaderProfile, RbfSettings, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

/// The square-formation scenario shipped with the crate.
pub const PAPER_SQUARE: &str = include_str!("../scenarios/paper_square.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub simulation: SimulationSection,
    pub graph: GraphSection,
    pub constraints: ConstraintsSection,
    pub setm: SetmSection,
    pub rbf: RbfSection,
    pub leader: LeaderProfile,
    pub vehicles: Vec<VehicleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// s
    pub duration: f64,
    /// s
    pub step: f64,
    #[serde(default = "yes")]
    pub event_triggered: bool,
    #[serde(default = "yes")]
    pub feedforward: bool,
    #[serde(default)]
    pub spacing_feedback: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub adjacency: Vec<Vec<f64>>,
    /// Desired offsets (m).
    pub offsets: Vec<[f64; 2]>,
    /// Leader pinning weights; all zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinning: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    /// m
    pub spacing: ConstraintBox,
    /// m/s
    pub longitudinal_velocity: ConstraintBox,
    /// m/s
    pub lateral_velocity: ConstraintBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetmSection {
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfSection {
    pub centers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    pub gain: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    /// kg
    pub mass: f64,
    /// N s^2/m^2
    #[serde(default)]
    pub drag_coeff: f64,
    /// N s/m
    #[serde(default)]
    pub roll_coeff: f64,
    pub k1: f64,
    pub k2: f64,
    /// One-based index of the vehicle ahead, 0 for none.
    #[serde(default)]
    pub predecessor: usize,
    /// m
    pub position: [f64; 2],
    /// m/s
    pub velocity: [f64; 2],
    #[serde(default = "Disturbance::none")]
    pub disturbance: Disturbance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write every `stride`-th tick to the time-series CSVs.
    pub stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { stride: 1 }
    }
}

/// One problem found while loading a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub rule: String,
    pub message: String,
    /// One-based (line, column) for parse errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<(usize, usize)>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, col)) => write!(f, "{line}:{col}: [{}] {}", self.rule, self.message),
            None => write!(f, "[{}] {}", self.rule, self.message),
        }
    }
}

impl Diagnostic {
    fn new(rule: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            rule: rule.into(),
            message: message.into(),
            location: None,
        }
    }

    pub(crate) fn from_error(context: &str, e: Error) -> Self {
        let rule = match &e {
            Error::Config { rule, .. } => rule.to_string(),
            Error::Infeasible(_) => "scenario.feasible-initial".into(),
            Error::InvalidGraph(_) => "graph.valid".into(),
            Error::LengthMismatch { .. } => "scenario.vehicle-count".into(),
            Error::NonFinite(_) => "scenario.finite".into(),
            Error::Fault { .. } => "simulation.fault".into(),
            _ => "scenario.invalid".into(),
        };
        let message = match e {
            Error::Config { message, .. } => message,
            other => other.to_string(),
        };
        Self::new(rule, format!("{context}: {message}"))
    }
}

/// Which kind of failure a list of diagnostics represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadStage {
    Parse,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadError {
    pub stage: LoadStage,
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.diagnostics.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for LoadError {}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        toml::from_str(text).map_err(|e| {
            let location = e.span().map(|span| line_col(text, span.start));
            LoadError {
                stage: LoadStage::Parse,
                diagnostics: vec![Diagnostic {
                    rule: "parse".into(),
                    message: e.message().to_string(),
                    location,
                }],
            }
        })
    }

    pub fn paper_square() -> Self {
        Self::parse(PAPER_SQUARE).expect("shipped scenario parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks every rule and builds the scenario, or reports all violations.
    pub fn validate(&self) -> Result<Scenario, LoadError> {
        let mut diags = Vec::new();
        let mut check = |context: &str, r: Result<(), Error>| {
            if let Err(e) = r {
                diags.push(Diagnostic::from_error(context, e));
            }
        };

        if self.schema_version != SCHEMA_VERSION {
            check(
                "schema_version",
                Err(Error::config(
                    "schema.version",
                    format!(
                        "unsupported version {}, expected {SCHEMA_VERSION}",
                        self.schema_version
                    ),
                )),
            );
        }
        let n = self.vehicles.len();
        if n == 0 {
            check(
                "vehicles",
                Err(Error::config("scenario.vehicle-count", "no vehicles")),
            );
        }

        let setm = SetmConfig::new(self.setm.delta1, self.setm.delta2, self.setm.epsilon);
        if let Err(e) = &setm {
            check("setm", Err(e.clone()));
        }

        let offsets: Vec<Vec2> = self
            .graph
            .offsets
            .iter()
            .map(|o| Vec2::new(o[0], o[1]))
            .collect();
        let pinning = self
            .graph
            .pinning
            .clone()
            .unwrap_or_else(|| vec![0.0; self.graph.adjacency.len()]);
        let graph = FormationGraph::with_pinning(self.graph.adjacency.clone(), offsets, pinning);
        if let Err(e) = &graph {
            check("graph", Err(e.clone()));
        }
        if let Ok(g) = &graph {
            if g.len() != n {
                check(
                    "graph",
                    Err(Error::config(
                        "scenario.vehicle-count",
                        format!("graph has {} vehicles, file lists {n}", g.len()),
                    )),
                );
            }
        }

        let c = &self.constraints;
        for (name, b) in [
            ("constraints.spacing", &c.spacing),
            (
                "constraints.longitudinal_velocity",
                &c.longitudinal_velocity,
            ),
            ("constraints.lateral_velocity", &c.lateral_velocity),
        ] {
            check(name, b.validate());
        }

        let rbf = RbfSettings {
            centers: self.rbf.centers,
            width: self.rbf.width,
            gain: self.rbf.gain,
            leakage: self.rbf.leakage,
        };
        check("rbf", rbf.build(&c.longitudinal_velocity).map(|_| ()));
        check("leader", self.leader.validate());

        let mut plants = Vec::with_capacity(n);
        let mut gains = Vec::with_capacity(n);
        let mut predecessors = Vec::with_capacity(n);
        let mut initial = Vec::with_capacity(n);
        for (k, v) in self.vehicles.iter().enumerate() {
            let ctx = format!("vehicles[{}]", k + 1);
            match PlantModel::new(v.mass, v.drag_coeff, v.roll_coeff, v.disturbance) {
                Ok(p) => plants.push(p),
                Err(e) => check(&ctx, Err(e)),
            }
            if let Ok(s) = &setm {
                match ControllerGains::new(v.k1, v.k2, s) {
                    Ok(g) => gains.push(g),
                    Err(e) => check(&ctx, Err(e)),
                }
            }
            predecessors.push(match v.predecessor {
                0 => None,
                p if p <= n && p != k + 1 => Some(p - 1),
                p => {
                    check(
                        &ctx,
                        Err(Error::config(
                            "platoon.predecessor",
                            format!("predecessor {p} is not another vehicle in 1..={n}"),
                        )),
                    );
                    None
                }
            });
            initial.push(VehicleState::new(
                Vec2::new(v.position[0], v.position[1]),
                Vec2::new(v.velocity[0], v.velocity[1]),
            ));
        }

        if !diags.is_empty() {
            return Err(LoadError {
                stage: LoadStage::Validation,
                diagnostics: diags,
            });
        }

        let scenario = Scenario {
            name: self.name.clone(),
            duration: self.simulation.duration,
            step: self.simulation.step,
            graph: graph.expect("checked"),
            predecessors,
            plants,
            boxes: Boxes {
                spacing: c.spacing,
                velocity: [c.longitudinal_velocity, c.lateral_velocity],
            },
            gains,
            setm: setm.expect("checked"),
            event_triggered: self.simulation.event_triggered,
            rbf,
            leader: self.leader,
            feedforward: self.simulation.feedforward,
            spacing_feedback: self.simulation.spacing_feedback,
            initial_states: initial,
        };
        scenario.check().map_err(|e| LoadError {
            stage: LoadStage::Validation,
            diagnostics: vec![Diagnostic::from_error("scenario", e)],
        })?;
        Ok(scenario)
    }

    /// File form of a scenario, with default output settings.
    pub fn from_scenario(s: &Scenario) -> Self {
        let pinning = s.graph.pinning();
        Self {
            schema_version: SCHEMA_VERSION,
            name: s.name.clone(),
            simulation: SimulationSection {
                duration: s.duration,
                step: s.step,
                event_triggered: s.event_triggered,
                feedforward: s.feedforward,
                spacing_feedback: s.spacing_feedback,
            },
            graph: GraphSection {
                adjacency: s.graph.adjacency_rows(),
                offsets: s.graph.offsets().iter().map(|o| [o.x, o.y]).collect(),
                pinning: if pinning.iter().all(|b| *b == 0.0) {
                    None
                } else {
                    Some(pinning.to_vec())
                },
            },
            constraints: ConstraintsSection {
                spacing: s.boxes.spacing,
                longitudinal_velocity: s.boxes.velocity[0],
                lateral_velocity: s.boxes.velocity[1],
            },
            setm: SetmSection {
                delta1: s.setm.delta1(),
                delta2: s.setm.delta2(),
                epsilon: s.setm.epsilon(),
            },
            rbf: RbfSection {
                centers: s.rbf.centers,
                width: s.rbf.width,
                gain: s.rbf.gain,
                leakage: s.rbf.leakage,
            },
            leader: s.leader,
            vehicles: (0..s.vehicle_count())
                .map(|i| {
                    let p = &s.plants[i];
                    let st = &s.initial_states[i];
                    VehicleSection {
                        mass: p.mass,
                        drag_coeff: p.drag_coeff,
                        roll_coeff: p.roll_coeff,
                        k1: s.gains[i].k1(),
                        k2: s.gains[i].k2(),
                        predecessor: s.predecessors[i].map_or(0, |j| j + 1),
                        position: [st.position.x, st.position.y],
                        velocity: [st.velocity.x, st.velocity.y],
                        disturbance: p.disturbance,
                    }
                })
                .collect(),
            output: OutputSection::default(),
        }
    }
}

/// Loads and validates the shipped square scenario.
pub fn paper_square() -> Scenario {
    ScenarioFile::paper_square()
        .validate()
        .expect("shipped scenario is valid")
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(e: &LoadError) -> Vec<&str> {
        e.diagnostics.iter().map(|d| d.rule.as_str()).collect()
    }

    #[test]
    fn shipped_scenario_is_valid() {
        let s = paper_square();
        assert_eq!(s.vehicle_count(), 4);
        assert_eq!(s.tick_count(), 50_000);
        let masses: Vec<f64> = s.plants.iter().map(|p| p.mass).collect();
        assert_eq!(masses, vec![1800.0, 1700.0, 1750.0, 1850.0]);
    }

    #[test]
    fn delta_order_rule() {
        let mut f = ScenarioFile::paper_square();
        f.setm.delta1 = 0.5;
        f.setm.delta2 = 0.05;
        let e = f.validate().unwrap_err();
        assert_eq!(e.stage, LoadStage::Validation);
        assert!(rules(&e).contains(&"setm.delta-order"));
    }

    #[test]
    fn k2_gain_rule() {
        let mut f = ScenarioFile::paper_square();
        f.setm.delta1 = 0.05;
        f.setm.delta2 = 0.5;
        f.vehicles[2].k2 = 0.6;
        let e = f.validate().unwrap_err();
        assert_eq!(rules(&e), vec!["gains.k2-theorem1"]);
        assert!(e.diagnostics[0].message.contains("0.75"));
    }

    #[test]
    fn unknown_keys_are_parse_errors_with_location() {
        let text = PAPER_SQUARE.replace("[setm]", "[setm]\nbogus = 1");
        let e = ScenarioFile::parse(&text).unwrap_err();
        assert_eq!(e.stage, LoadStage::Parse);
        let (line, _) = e.diagnostics[0].location.unwrap();
        let expected = text.lines().position(|l| l.starts_with("bogus")).unwrap() + 1;
        assert_eq!(line, expected);
    }

    #[test]
    fn infeasible_start_rejected_before_running() {
        let mut f = ScenarioFile::paper_square();
        f.constraints.spacing.lower = 13.0;
        f.constraints.spacing.upper = 40.0;
        let e = f.validate().unwrap_err();
        assert_eq!(rules(&e), vec!["scenario.feasible-initial"]);
    }

    #[test]
    fn collects_multiple_violations() {
        let mut f = ScenarioFile::paper_square();
        f.schema_version = 9;
        f.vehicles[0].mass = -1.0;
        f.rbf.leakage = 0.0;
        let e = f.validate().unwrap_err();
        let r = rules(&e);
        assert!(r.contains(&"schema.version"));
        assert!(r.contains(&"plant.mass-positive"));
        assert!(r.contains(&"rbf.leakage-positive"));
    }

    #[test]
    fn scenario_round_trips_through_file_form() {
        let s = paper_square();
        let text = ScenarioFile::from_scenario(&s).to_toml();
        let back = ScenarioFile::parse(&text).unwrap().validate().unwrap();
        assert_eq!(back, s);
    }
}
