//! Run, validate and sweep front ends that turn a scenario file into CSV
//! series and a JSON summary.
//!
//! Exit codes used by the binary:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O failure (unreadable input, unwritable output) |
//! | 2 | usage error |
//! | 3 | scenario parse error |
//! | 4 | scenario validation error |
//! | 5 | simulation fault |
//!
//! All outputs of one command are rendered in memory first and then moved
//! into place, so a failed command leaves no partial files behind.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tempfile::{Builder, NamedTempFile};

use crate::error::Error;
use crate::scenario::{Diagnostic, LoadError, LoadStage, ScenarioFile};
use crate::sim::{
    self, constraint_audit, lyapunov_trace, settling_band, time_inside_band, trigger_table,
    weight_audit, zeno_audit, AuditReport, LyapunovTrace, RunLog, Scenario, TriggerRow,
    WeightAudit, ZenoAudit,
};

#[derive(Debug)]
pub enum ReportError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Usage(String),
    Load(LoadError),
    Simulation(Error),
}

impl ReportError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Io { .. } => 1,
            ReportError::Usage(_) => 2,
            ReportError::Load(e) => match e.stage {
                LoadStage::Parse => 3,
                LoadStage::Validation => 4,
            },
            ReportError::Simulation(_) => 5,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            ReportError::Usage(m) => write!(f, "{m}"),
            ReportError::Load(e) => write!(f, "{e}"),
            ReportError::Simulation(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ReportError {}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(ScenarioFile, Scenario), ReportError> {
    let text = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    let file = ScenarioFile::parse(&text).map_err(ReportError::Load)?;
    let scenario = file.validate().map_err(ReportError::Load)?;
    Ok((file, scenario))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettlingSummary {
    pub band: f64,
    /// s
    pub settling_time: f64,
    /// Time after the end of the leader's speed change until the error is
    /// back inside `band` for good (s).
    pub recovery_after_ramp: f64,
}

/// Settling of the formation-error norm over the whole run, and recovery
/// after the leader's speed change measured against the same band.
pub fn settling_summary(log: &RunLog, scenario: &Scenario) -> Option<SettlingSummary> {
    let series = log.formation_error_series();
    let end = series.last()?.0;
    let band = settling_band(&series, 0.0, end)?;
    let settling_time = time_inside_band(&series, band, 0.0, end)?;
    let ramp_end = scenario.leader.ramp_end.min(end);
    let back = time_inside_band(&series, band, ramp_end, end)?;
    Some(SettlingSummary {
        band,
        settling_time,
        recovery_after_ramp: back - ramp_end,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub vehicles: usize,
    /// s
    pub duration: f64,
    /// s
    pub step: f64,
    pub event_triggered: bool,
    pub trigger_table: Vec<TriggerRow>,
    pub constraint_audit: AuditReport,
    pub lyapunov: LyapunovTrace,
    pub settling: Option<SettlingSummary>,
    pub final_formation_error: f64,
    pub zeno: ZenoAudit,
    pub weights: WeightAudit,
    /// Wall-clock time of the simulation itself (s).
    pub runtime_seconds: f64,
}

pub fn summarize(
    scenario: &Scenario,
    log: &RunLog,
    runtime_seconds: f64,
) -> Result<Summary, Error> {
    Ok(Summary {
        scenario: scenario.name.clone(),
        vehicles: scenario.vehicle_count(),
        duration: scenario.duration,
        step: scenario.step,
        event_triggered: scenario.event_triggered,
        trigger_table: trigger_table(log)?,
        constraint_audit: constraint_audit(log, &scenario.boxes),
        lyapunov: lyapunov_trace(log),
        settling: settling_summary(log, scenario),
        final_formation_error: log
            .ticks
            .last()
            .map(|t| t.formation_error_norm())
            .unwrap_or(0.0),
        zeno: zeno_audit(log, &scenario.setm),
        weights: weight_audit(log, scenario),
        runtime_seconds,
    })
}

/// A file rendered in memory, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[String]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    fn with(header: &[&str]) -> Self {
        Self::new(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn finish(self, name: &str) -> Artifact {
        Artifact {
            name: name.to_string(),
            bytes: self.writer.into_inner().expect("in-memory flush"),
        }
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Renders every CSV series of a run. Output depends only on the log and
/// the scenario, never on timing.
pub fn render_csv(scenario: &Scenario, log: &RunLog, stride: usize) -> Vec<Artifact> {
    let stride = stride.max(1);
    let n = log.vehicle_count();
    let sampled: Vec<_> = log
        .ticks
        .iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k + 1 == log.ticks.len())
        .map(|(_, t)| t)
        .collect();

    let mut states = Table::with(&["time", "vehicle", "x", "y", "vx", "vy"]);
    let mut errors = Table::with(&[
        "time",
        "vehicle",
        "z1_x",
        "z1_y",
        "z2_x",
        "z2_y",
        "alpha_x",
        "alpha_y",
        "alpha_dot_x",
        "alpha_dot_y",
        "s_vx",
        "s_vy",
        "gamma_vx",
        "gamma_vy",
    ]);
    let mut spacing = Table::with(&[
        "time",
        "vehicle",
        "predecessor",
        "distance",
        "s_d",
        "gamma_d",
    ]);
    let mut control = Table::with(&[
        "time",
        "vehicle",
        "u_candidate_x",
        "u_candidate_y",
        "u_applied_x",
        "u_applied_y",
        "triggered_x",
        "triggered_y",
        "f_hat_x",
        "f_hat_y",
        "f_true_x",
        "f_true_y",
        "disturbance_x",
        "disturbance_y",
    ]);
    let mut lyapunov = Table::with(&["time", "lyapunov", "formation_error_norm"]);
    let mut weights = Table::with(&["time", "vehicle", "norm_x", "norm_y"]);

    let mut header = vec!["time".to_string(), "ref_x".into(), "ref_y".into()];
    for i in 1..=n {
        for c in ["x", "y", "desired_x", "desired_y"] {
            header.push(format!("{c}_{i}"));
        }
    }
    let mut tracking = Table::new(&header);
    let mut header = vec!["time".to_string(), "lower".into(), "upper".into()];
    header.extend((1..=n).map(|i| format!("distance_{i}")));
    let mut distance = Table::new(&header);
    let mut header = vec![
        "time".to_string(),
        "vx_lower".into(),
        "vx_upper".into(),
        "vy_lower".into(),
        "vy_upper".into(),
    ];
    header.extend((1..=n).map(|i| format!("vx_{i}")));
    header.extend((1..=n).map(|i| format!("vy_{i}")));
    let mut velocity = Table::new(&header);

    let boxes = &scenario.boxes;
    for tick in sampled {
        let t = num(tick.time);
        let reference = scenario.leader.reference(tick.time).position;
        let mut track = vec![t.clone(), num(reference.x), num(reference.y)];
        let mut dist = vec![
            t.clone(),
            num(boxes.spacing.lower),
            num(boxes.spacing.upper),
        ];
        let mut vel = vec![
            t.clone(),
            num(boxes.velocity[0].lower),
            num(boxes.velocity[0].upper),
            num(boxes.velocity[1].lower),
            num(boxes.velocity[1].upper),
        ];
        for (i, v) in tick.vehicles.iter().enumerate() {
            let id = (i + 1).to_string();
            states.row(&[
                t.clone(),
                id.clone(),
                num(v.position.x),
                num(v.position.y),
                num(v.velocity.x),
                num(v.velocity.y),
            ]);
            errors.row(&[
                t.clone(),
                id.clone(),
                num(v.z1.x),
                num(v.z1.y),
                num(v.z2.x),
                num(v.z2.y),
                num(v.alpha.x),
                num(v.alpha.y),
                num(v.alpha_dot.x),
                num(v.alpha_dot.y),
                num(v.s_v.x),
                num(v.s_v.y),
                num(v.gamma_v.x),
                num(v.gamma_v.y),
            ]);
            if let Some(sp) = &v.spacing {
                spacing.row(&[
                    t.clone(),
                    id.clone(),
                    (sp.predecessor + 1).to_string(),
                    num(sp.distance),
                    num(sp.s_d),
                    num(sp.gamma_d),
                ]);
            }
            control.row(&[
                t.clone(),
                id.clone(),
                num(v.u_candidate.x),
                num(v.u_candidate.y),
                num(v.u_applied.x),
                num(v.u_applied.y),
                flag(v.triggered[0]),
                flag(v.triggered[1]),
                num(v.f_hat.x),
                num(v.f_hat.y),
                num(v.f_true.x),
                num(v.f_true.y),
                num(v.disturbance.x),
                num(v.disturbance.y),
            ]);
            weights.row(&[t.clone(), id, num(v.weight_norm[0]), num(v.weight_norm[1])]);

            let desired = reference + scenario.graph.offsets()[i];
            track.extend([
                num(v.position.x),
                num(v.position.y),
                num(desired.x),
                num(desired.y),
            ]);
            dist.push(v.spacing.map(|sp| num(sp.distance)).unwrap_or_default());
        }
        vel.extend(tick.vehicles.iter().map(|v| num(v.velocity.x)));
        vel.extend(tick.vehicles.iter().map(|v| num(v.velocity.y)));
        lyapunov.row(&[t, num(tick.lyapunov), num(tick.formation_error_norm())]);
        tracking.row(&track);
        distance.row(&dist);
        velocity.row(&vel);
    }

    let mut events = Table::with(&["vehicle", "axis", "k", "time", "z2", "branch"]);
    let mut intervals = Table::with(&["vehicle", "axis", "time", "interval"]);
    for (i, axes) in log.setm.iter().enumerate() {
        for (axis, state) in axes.iter().enumerate() {
            let axis_name = if axis == 0 { "longitudinal" } else { "lateral" };
            for (k, e) in state.events().iter().enumerate() {
                events.row(&[
                    (i + 1).to_string(),
                    axis_name.to_string(),
                    k.to_string(),
                    num(e.time),
                    num(e.z2),
                    e.branch.as_str().to_string(),
                ]);
            }
            for (w, d) in state.events().windows(2).zip(state.intervals()) {
                intervals.row(&[
                    (i + 1).to_string(),
                    axis_name.to_string(),
                    num(w[1].time),
                    num(d),
                ]);
            }
        }
    }

    vec![
        states.finish("states.csv"),
        errors.finish("errors.csv"),
        spacing.finish("spacing.csv"),
        control.finish("control.csv"),
        lyapunov.finish("lyapunov.csv"),
        weights.finish("weights.csv"),
        events.finish("events.csv"),
        tracking.finish("plot_tracking.csv"),
        distance.finish("plot_distance.csv"),
        velocity.finish("plot_velocity_audit.csv"),
        intervals.finish("plot_intervals.csv"),
    ]
}

fn json_artifact<T: Serialize>(name: &str, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
    bytes.push(b'\n');
    Artifact {
        name: name.to_string(),
        bytes,
    }
}

fn staging_file(dir: &Path) -> std::io::Result<NamedTempFile> {
    let mut builder = Builder::new();
    builder.prefix(".platoon-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    builder.tempfile_in(dir)
}

/// Writes all artifacts into `dir`, or none of them.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|e| ReportError::io(dir, e))?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = staging_file(dir).map_err(|e| ReportError::io(dir, e))?;
        tmp.write_all(&a.bytes)
            .and_then(|_| tmp.flush())
            .map_err(|e| ReportError::io(tmp.path(), e))?;
        staged.push((tmp, dir.join(&a.name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        if let Err(e) = tmp.persist(&target) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(ReportError::io(&target, e.error));
        }
        written.push(target);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Simulates `scenario` and renders every artifact without touching disk.
pub fn render_run(
    file: &ScenarioFile,
    scenario: &Scenario,
) -> Result<(Summary, Vec<Artifact>), ReportError> {
    let started = Instant::now();
    let log = sim::run(scenario).map_err(ReportError::Simulation)?;
    let runtime = started.elapsed().as_secs_f64();
    let summary = summarize(scenario, &log, runtime).map_err(ReportError::Simulation)?;
    let mut artifacts = render_csv(scenario, &log, file.output.stride);
    artifacts.push(json_artifact("summary.json", &summary));
    Ok((summary, artifacts))
}

pub fn run_command(path: &Path, out_dir: &Path) -> Result<RunOutput, ReportError> {
    let (file, scenario) = load_scenario(path)?;
    let (summary, artifacts) = render_run(&file, &scenario)?;
    let files = write_artifacts(out_dir, &artifacts)?;
    Ok(RunOutput { summary, files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Delta1,
    Delta2,
    Epsilon,
    K1,
    K2,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Delta1 => "delta1",
            SweepParam::Delta2 => "delta2",
            SweepParam::Epsilon => "epsilon",
            SweepParam::K1 => "k1",
            SweepParam::K2 => "k2",
        }
    }

    /// Sets the parameter; gains apply to every vehicle.
    pub fn apply(&self, file: &mut ScenarioFile, value: f64) {
        match self {
            SweepParam::Delta1 => file.setm.delta1 = value,
            SweepParam::Delta2 => file.setm.delta2 = value,
            SweepParam::Epsilon => file.setm.epsilon = value,
            SweepParam::K1 => file.vehicles.iter_mut().for_each(|v| v.k1 = value),
            SweepParam::K2 => file.vehicles.iter_mut().for_each(|v| v.k2 = value),
        }
    }
}

impl FromStr for SweepParam {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "delta1" => SweepParam::Delta1,
            "delta2" => SweepParam::Delta2,
            "epsilon" => SweepParam::Epsilon,
            "k1" => SweepParam::K1,
            "k2" => SweepParam::K2,
            other => {
                return Err(ReportError::Usage(format!(
                    "unknown sweep parameter `{other}` (expected delta1, delta2, epsilon, k1 or k2)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub longitudinal_triggers: usize,
    pub lateral_triggers: usize,
    pub total_triggers: usize,
    pub settling_time: Option<f64>,
    pub final_formation_error: f64,
    pub lyapunov_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedValue {
    pub value: f64,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub parameter: SweepParam,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedValue>,
}

impl SweepReport {
    pub fn csv(&self) -> Artifact {
        let mut t = Table::with(&[
            "value",
            "longitudinal_triggers",
            "lateral_triggers",
            "total_triggers",
            "settling_time",
            "final_formation_error",
            "lyapunov_floor",
        ]);
        for r in &self.rows {
            t.row(&[
                num(r.value),
                r.longitudinal_triggers.to_string(),
                r.lateral_triggers.to_string(),
                r.total_triggers.to_string(),
                r.settling_time.map(num).unwrap_or_default(),
                num(r.final_formation_error),
                num(r.lyapunov_floor),
            ]);
        }
        t.finish("sweep.csv")
    }
}

enum Outcome {
    Row(SweepRow, Option<Vec<Artifact>>),
    Skip(SkippedValue),
}

fn sweep_one(
    base: &ScenarioFile,
    param: SweepParam,
    value: f64,
    with_artifacts: bool,
) -> Result<Outcome, ReportError> {
    let mut file = base.clone();
    param.apply(&mut file, value);
    let scenario = match file.validate() {
        Ok(s) => s,
        Err(e) => {
            return Ok(Outcome::Skip(SkippedValue {
                value,
                diagnostics: e.diagnostics,
            }))
        }
    };
    let started = Instant::now();
    let log = match sim::run(&scenario) {
        Ok(log) => log,
        Err(e) => {
            return Ok(Outcome::Skip(SkippedValue {
                value,
                diagnostics: vec![Diagnostic::from_error("simulation", e)],
            }))
        }
    };
    let runtime = started.elapsed().as_secs_f64();
    let summary = summarize(&scenario, &log, runtime).map_err(ReportError::Simulation)?;
    let longitudinal: usize = summary
        .trigger_table
        .iter()
        .map(|r| r.longitudinal.count)
        .sum();
    let lateral: usize = summary.trigger_table.iter().map(|r| r.lateral.count).sum();
    let row = SweepRow {
        value,
        longitudinal_triggers: longitudinal,
        lateral_triggers: lateral,
        total_triggers: longitudinal + lateral,
        settling_time: summary.settling.map(|s| s.settling_time),
        final_formation_error: summary.final_formation_error,
        lyapunov_floor: summary.lyapunov.final_floor,
    };
    let artifacts = with_artifacts.then(|| {
        let mut a = render_csv(&scenario, &log, file.output.stride);
        a.push(json_artifact("summary.json", &summary));
        a
    });
    Ok(Outcome::Row(row, artifacts))
}

/// Runs one simulation per value in parallel. Values that fail validation
/// or fault are reported in `skipped` with the rule they broke.
pub fn sweep(
    base: &ScenarioFile,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepReport, ReportError> {
    Ok(sweep_with_artifacts(base, param, values)?.0)
}

fn sweep_with_artifacts(
    base: &ScenarioFile,
    param: SweepParam,
    values: &[f64],
) -> Result<(SweepReport, Option<Vec<Artifact>>), ReportError> {
    if values.is_empty() {
        return Err(ReportError::Usage("sweep needs at least one value".into()));
    }
    let single = values.len() == 1;
    let outcomes: Vec<Outcome> = values
        .par_iter()
        .map(|&v| sweep_one(base, param, v, single))
        .collect::<Result<_, _>>()?;
    let mut report = SweepReport {
        parameter: param,
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    let mut run_artifacts = None;
    for o in outcomes {
        match o {
            Outcome::Row(row, artifacts) => {
                report.rows.push(row);
                run_artifacts = artifacts;
            }
            Outcome::Skip(s) => report.skipped.push(s),
        }
    }
    Ok((report, run_artifacts))
}

/// Sweeps `param` over `values` and writes `sweep.csv` and `sweep.json`.
/// A single-value sweep also writes the full run output.
pub fn sweep_command(
    path: &Path,
    param: SweepParam,
    values: &[f64],
    out_dir: &Path,
) -> Result<(SweepReport, Vec<PathBuf>), ReportError> {
    let text = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    let base = ScenarioFile::parse(&text).map_err(ReportError::Load)?;
    let (report, run_artifacts) = sweep_with_artifacts(&base, param, values)?;
    let mut artifacts = run_artifacts.unwrap_or_default();
    artifacts.push(report.csv());
    artifacts.push(json_artifact("sweep.json", &report));
    let files = write_artifacts(out_dir, &artifacts)?;
    Ok((report, files))
}
