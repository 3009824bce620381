//! Configuration files, run outputs and verification reports.
//!
//! Every output carries a schema tag; readers reject any other tag.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deformation::{GaugeKind, GaugeSpec};
use crate::error::{Error, Result};
use crate::flow::{
    dissipation_check, run, DissipationReport, EnergyRecord, FlowConfig, FlowState, IntervalRecord,
    Trajectory,
};
use crate::suite::{run_suite, Selector};
use crate::verification::OracleReport;

pub const ENERGY_SCHEMA: &str = "surfgauge-energy/1";
pub const INTERVALS_SCHEMA: &str = "surfgauge-intervals/1";
pub const SNAPSHOT_SCHEMA: &str = "surfgauge-snapshot/1";
pub const MANIFEST_SCHEMA: &str = "surfgauge-manifest/1";
pub const DIAGNOSTICS_SCHEMA: &str = "surfgauge-diagnostics/1";
pub const VERIFY_SCHEMA: &str = "surfgauge-verify/1";

pub const ENERGY_COLUMNS: [&str; 6] = ["t", "tau", "U_grad", "U_R", "U_total", "dissipation_residual"];
pub const INTERVAL_COLUMNS: [&str; 9] = [
    "t0",
    "t1",
    "U0",
    "U1",
    "rate_secant",
    "rate",
    "grad_norm2",
    "cross_formula",
    "residual",
];

/// Energy increments above this count as a dissipation violation.
pub const INCREASE_TOL: f64 = 1e-10;

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::ParseError(e.to_string())
}

fn canonical_gauges(table: &mut toml::Table) -> Result<()> {
    for key in ["gauge", "timederiv"] {
        if let Some(v) = table.get(key) {
            let s = v.as_str().ok_or_else(|| Error::ValidationError {
                key: key.into(),
                message: format!("expected a name, got {v}"),
            })?;
            let spec = GaugeSpec::parse(1, s).map_err(|e| match e {
                Error::ValidationError { message, .. } => Error::ValidationError {
                    key: key.into(),
                    message,
                },
                other => other,
            })?;
            table.insert(key.into(), toml::Value::String(spec.kind.name().into()));
        }
    }
    Ok(())
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => merge(dst, src),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// Parses one `key=value` override; the value is read as TOML and falls back
/// to a plain string.
fn parse_override(s: &str) -> Result<toml::Table> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| Error::ParseError(format!("override `{s}` is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    let doc = format!("{key} = {value}");
    match doc.parse::<toml::Table>() {
        Ok(t) => Ok(t),
        Err(_) => format!("{key} = {}", toml::Value::String(value.into()))
            .parse::<toml::Table>()
            .map_err(parse_err),
    }
}

/// Config from TOML text plus `key=value` overrides, defaults filled and
/// validated.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<FlowConfig> {
    let mut table: toml::Table = text.parse().map_err(parse_err)?;
    for o in overrides {
        merge(&mut table, parse_override(o)?);
    }
    canonical_gauges(&mut table)?;
    let cfg: FlowConfig = table.try_into().map_err(parse_err)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<FlowConfig> {
    parse_config_with(text, &[])
}

pub fn load_config(path: &Path) -> Result<FlowConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn config_to_toml(cfg: &FlowConfig) -> Result<String> {
    toml::to_string(cfg).map_err(parse_err)
}

/// SHA-256 of the canonical TOML form.
pub fn config_hash(cfg: &FlowConfig) -> Result<String> {
    let digest = Sha256::digest(config_to_toml(cfg)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_csv(path: &Path, schema: &str, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# schema={schema}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(parse_err)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_f64)).map_err(parse_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv(path: &Path, schema: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut first = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut first)?;
    let found = first.trim().strip_prefix("# schema=").unwrap_or("");
    if found != schema {
        return Err(Error::ParseError(format!(
            "{}: schema `{found}` does not match `{schema}`",
            path.display()
        )));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(parse_err)?;
    let got: Vec<String> = r.headers().map_err(parse_err)?.iter().map(String::from).collect();
    if got != header {
        return Err(Error::ParseError(format!(
            "{}: columns {got:?} do not match {header:?}",
            path.display()
        )));
    }
    r.records()
        .map(|rec| {
            rec.map_err(parse_err)?
                .iter()
                .map(|s| s.parse::<f64>().map_err(parse_err))
                .collect()
        })
        .collect()
}

pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    write_csv(
        path,
        ENERGY_SCHEMA,
        &ENERGY_COLUMNS,
        records
            .iter()
            .map(|r| vec![r.t, r.tau, r.u_grad, r.u_r, r.u_total, r.dissipation_residual]),
    )
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRecord>> {
    Ok(read_csv(path, ENERGY_SCHEMA, &ENERGY_COLUMNS)?
        .into_iter()
        .map(|r| EnergyRecord {
            t: r[0],
            tau: r[1],
            u_grad: r[2],
            u_r: r[3],
            u_total: r[4],
            dissipation_residual: r[5],
        })
        .collect())
}

pub fn write_intervals_csv(path: &Path, intervals: &[IntervalRecord], lambda: f64) -> Result<()> {
    write_csv(
        path,
        INTERVALS_SCHEMA,
        &INTERVAL_COLUMNS,
        intervals.iter().map(|iv| {
            vec![
                iv.t0,
                iv.t1,
                iv.u0,
                iv.u1,
                iv.rate_secant,
                iv.mid.rate,
                iv.mid.grad_norm2,
                iv.mid.cross_formula,
                iv.mid.residual(lambda),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub t: f64,
    pub gauge: GaugeKind,
    pub timederiv: GaugeKind,
    pub h: f64,
    pub y2: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// Embedded positions of the line y¹ = 0; other lines are shifted by y¹
    /// in x.
    #[serde(rename = "X_embedded")]
    pub x_embedded: Vec<[f64; 3]>,
}

impl Snapshot {
    pub fn new(state: &FlowState, cfg: &FlowConfig) -> Self {
        Snapshot {
            schema: SNAPSHOT_SCHEMA.into(),
            t: state.t,
            gauge: cfg.gauge,
            timederiv: cfg.timederiv,
            h: cfg.h,
            y2: cfg.y2(),
            f1: state.f1.clone(),
            f2: state.f2.clone(),
            q1: state.q1.clone(),
            q2: state.q2.clone(),
            x_embedded: state.embedded(cfg.h),
        }
    }

    pub fn state(&self) -> FlowState {
        FlowState {
            t: self.t,
            f1: self.f1.clone(),
            f2: self.f2.clone(),
            q1: self.q1.clone(),
            q2: self.q2.clone(),
        }
    }
}

fn check_schema(found: &str, expected: &str, path: &Path) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::ParseError(format!(
            "{}: schema `{found}` does not match `{expected}`",
            path.display()
        )))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(parse_err)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json_checked<T: for<'de> Deserialize<'de>>(path: &Path, schema: &str) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    check_schema(v.get("schema").and_then(|s| s.as_str()).unwrap_or(""), schema, path)?;
    serde_json::from_value(v).map_err(parse_err)
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    write_json(path, snap)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    read_json_checked(path, SNAPSHOT_SCHEMA)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub config: FlowConfig,
    pub config_hash: String,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    /// "running", "ok" or "failed".
    pub status: String,
    pub outputs: Vec<String>,
    pub accepted_steps: Option<usize>,
    pub final_energy: Option<f64>,
    pub error: Option<String>,
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    read_json_checked(path, MANIFEST_SCHEMA)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub schema: String,
    pub dissipation: DissipationReport,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub struct RunOutput {
    pub manifest: RunManifest,
    pub trajectory: Trajectory,
    pub dissipation: DissipationReport,
    pub dir: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ENERGY_FILE: &str = "energy.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

pub fn snapshot_file(index: usize) -> String {
    format!("snapshot_{index:03}.json")
}

/// Runs the flow and writes manifest, energy series, interval diagnostics
/// and snapshots into `dir`. The manifest is written first and rewritten
/// with the outcome.
pub fn run_experiment(cfg: &FlowConfig, dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        config: cfg.clone(),
        config_hash: config_hash(cfg)?,
        started_unix: now_unix(),
        finished_unix: None,
        status: "running".into(),
        outputs: Vec::new(),
        accepted_steps: None,
        final_energy: None,
        error: None,
    };
    write_json(&manifest_path, &manifest)?;

    let traj = match run(cfg) {
        Ok(t) => t,
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            manifest.finished_unix = Some(now_unix());
            write_json(&manifest_path, &manifest)?;
            return Err(e);
        }
    };
    let dissipation = dissipation_check(&traj, cfg, INCREASE_TOL);

    write_energy_csv(&dir.join(ENERGY_FILE), &traj.records)?;
    write_intervals_csv(&dir.join(INTERVALS_FILE), &traj.intervals, cfg.lambda)?;
    let mut outputs = vec![ENERGY_FILE.to_string(), INTERVALS_FILE.to_string()];
    for (k, s) in traj.snapshots.iter().enumerate() {
        let name = snapshot_file(k);
        write_snapshot(&dir.join(&name), &Snapshot::new(s, cfg))?;
        outputs.push(name);
    }
    write_json(
        &dir.join(DIAGNOSTICS_FILE),
        &Diagnostics {
            schema: DIAGNOSTICS_SCHEMA.into(),
            dissipation: dissipation.clone(),
        },
    )?;
    outputs.push(DIAGNOSTICS_FILE.into());

    manifest.status = "ok".into();
    manifest.outputs = outputs;
    manifest.accepted_steps = Some(traj.accepted_steps());
    manifest.final_energy = traj.records.last().map(|r| r.u_total);
    manifest.finished_unix = Some(now_unix());
    write_json(&manifest_path, &manifest)?;
    Ok(RunOutput {
        manifest,
        trajectory: traj,
        dissipation,
        dir: dir.to_path_buf(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub selector: Selector,
    pub passed: bool,
    pub reports: Vec<OracleReport>,
}

pub fn verify_suite(sel: Selector) -> Result<VerifyReport> {
    let reports = run_suite(sel)?;
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.into(),
        selector: sel,
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}

pub fn write_verify_report(path: &Path, report: &VerifyReport) -> Result<()> {
    write_json(path, report)
}

pub fn read_verify_report(path: &Path) -> Result<VerifyReport> {
    read_json_checked(path, VERIFY_SCHEMA)
}
