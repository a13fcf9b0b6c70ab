//! Scenario configuration and the assemble → decompose → project → evolve →
//! diagnose pipeline that writes the run artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    barrier_exit_times, olc_fraction, total_charge, write_diagnostics_csv, DiagnosticsRecord, LightConeSpec,
};
use crate::error::Error;
use crate::evolution::{evolve_many, free_evolve, free_evolve_canonical, initial_wavepacket, project, InitialPacketSpec};
use crate::exec::Execution;
use crate::grid::{density_of, make_grids, DensityProfile, Grids, PhysicalConstants, Representation, TwoComponentState};
use crate::potentials::{BarrierSpec, FourierTable};
use crate::spectral::{
    assemble_canonical_kernel_with, assemble_fw_kernel_with, eigendecompose, validate_spectrum, ValidationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunRepresentation {
    Fw,
    Canonical,
    Both,
}

impl RunRepresentation {
    pub fn representations(self) -> Vec<Representation> {
        match self {
            RunRepresentation::Fw => vec![Representation::Fw],
            RunRepresentation::Canonical => vec![Representation::Canonical],
            RunRepresentation::Both => vec![Representation::Fw, Representation::Canonical],
        }
    }
}

/// Where the OLC fraction is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OlcSampling {
    SnapshotTimes,
    BarrierExits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub representation: RunRepresentation,
    /// Density snapshot times.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub free_reference: bool,
    pub olc_sampling: OlcSampling,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub grid: GridConfig,
    pub barrier: BarrierSpec,
    pub packet: InitialPacketSpec,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fig1" => Some(Preset::Fig1),
            "fig2" => Some(Preset::Fig2),
            "fig3" => Some(Preset::Fig3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        }
    }
}

/// Grid shared by the presets. The spacing dx = 80/2048 ≈ 0.04 resolves the
/// ε = 20 barrier edges well enough for the superradiant growth to stay
/// clean through seven barriers; the box holds the reflected packet up to
/// t = 28.5 with margin.
pub const PRESET_GRID: GridConfig = GridConfig {
    x_min: -40.0,
    x_max: 40.0,
    n_points: 2048,
};

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let base_run = RunConfig {
            representation: RunRepresentation::Fw,
            times: vec![0.0, 6.5, 28.5],
            free_reference: false,
            olc_sampling: OlcSampling::SnapshotTimes,
            output_dir: PathBuf::from(format!("out/{}", preset.name())),
        };
        let run = match preset {
            Preset::Fig1 => base_run,
            Preset::Fig2 => RunConfig {
                representation: RunRepresentation::Both,
                times: vec![28.5],
                free_reference: true,
                ..base_run
            },
            Preset::Fig3 => RunConfig {
                times: vec![],
                olc_sampling: OlcSampling::BarrierExits,
                ..base_run
            },
        };
        Self {
            constants: PhysicalConstants::default(),
            grid: PRESET_GRID,
            barrier: BarrierSpec::reference_train(),
            packet: InitialPacketSpec::reference(),
            run,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Lays the keys present in `text` over this config.
    pub fn merged_with_toml(&self, text: &str) -> Result<Self, Error> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = self.as_table();
        merge_tables(&mut base, overlay);
        Self::from_table(base)
    }

    /// Applies `section.key=value`; the value is read as a TOML literal, or
    /// as a bare string if it does not parse as one.
    pub fn with_override(&self, assignment: &str) -> Result<Self, Error> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not of the form key=value")))?;
        let path = path.trim();
        let value = parse_literal(raw.trim());
        let mut table = self.as_table();
        let mut keys = path.split('.').peekable();
        let mut cursor = &mut table;
        while let Some(key) = keys.next() {
            if keys.peek().is_none() {
                if !cursor.contains_key(key) && !is_optional_key(path) {
                    return Err(Error::Config(format!("override: unknown key '{path}'")));
                }
                cursor.insert(key.to_string(), value);
                break;
            }
            cursor = cursor
                .get_mut(key)
                .and_then(|v| v.as_table_mut())
                .ok_or_else(|| Error::Config(format!("override: unknown section in '{path}'")))?;
        }
        Self::from_table(table)
    }

    fn as_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    fn from_table(table: toml::Table) -> Result<Self, Error> {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn grids(&self) -> Result<Grids, Error> {
        make_grids(self.grid.x_min, self.grid.x_max, self.grid.n_points, self.constants.hbar)
    }

    pub fn light_cone(&self) -> LightConeSpec {
        LightConeSpec::from_packet(&self.packet, 0.0, self.constants.c)
    }

    /// Sampling times of the diagnostics series, with the barrier index
    /// (1-based) for exit sampling.
    pub fn sampling_times(&self) -> Vec<(f64, Option<usize>)> {
        match self.run.olc_sampling {
            OlcSampling::SnapshotTimes => self.run.times.iter().map(|&t| (t, None)).collect(),
            OlcSampling::BarrierExits => barrier_exit_times(&self.barrier, &self.light_cone())
                .into_iter()
                .enumerate()
                .map(|(i, (t, _))| (t, Some(i + 1)))
                .collect(),
        }
    }
}

fn is_optional_key(path: &str) -> bool {
    matches!(path, "packet.normalize_charge" | "run.free_reference" | "run.times")
        || path.starts_with("constants.")
}

fn parse_literal(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn merge_tables(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

fn violation(field: &str, constraint: impl Into<String>) -> Violation {
    Violation {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

/// Every reason the config cannot run; empty when it can.
pub fn validate_config(config: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = &config.constants;
    for (name, v) in [("hbar", k.hbar), ("c", k.c), ("m", k.m), ("q", k.q)] {
        if !(v.is_finite() && v > 0.0) {
            out.push(violation(&format!("constants.{name}"), format!("must be finite and > 0, got {v}")));
        }
    }

    let g = &config.grid;
    if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max) {
        out.push(violation("grid.x_min", format!("must be finite and below grid.x_max ({} vs {})", g.x_min, g.x_max)));
    }
    if g.n_points % 2 != 0 {
        out.push(violation("grid.n_points", format!("must be even, got {}", g.n_points)));
    }
    if g.n_points < 8 {
        out.push(violation("grid.n_points", format!("must be at least 8, got {}", g.n_points)));
    }

    let b = &config.barrier;
    for (name, v) in [("v0", b.v0), ("length", b.length), ("steepness", b.steepness)] {
        if !(v.is_finite() && v > 0.0) {
            out.push(violation(&format!("barrier.{name}"), format!("must be finite and > 0, got {v}")));
        }
    }
    for (i, w) in b.centers.windows(2).enumerate() {
        if !(w[1] - w[0] > b.length) {
            out.push(violation(
                "barrier.centers",
                format!("barriers {} and {} must be separated by more than the length {}", i + 1, i + 2, b.length),
            ));
        }
    }
    if b.centers.iter().any(|c| !c.is_finite()) {
        out.push(violation("barrier.centers", "must be finite"));
    }

    let p = &config.packet;
    if !(p.width.is_finite() && p.width > 0.0) {
        out.push(violation("packet.width", format!("must be finite and > 0, got {}", p.width)));
    } else {
        let (lo, hi) = p.support();
        if lo < g.x_min || hi > g.x_max {
            out.push(violation(
                "packet.x0",
                format!("support [{lo}, {hi}] must lie inside the grid [{}, {}]", g.x_min, g.x_max),
            ));
        }
        for (i, (a, z)) in b.extents().enumerate() {
            if lo < z && a < hi {
                out.push(violation(
                    "packet.x0",
                    format!("support [{lo}, {hi}] overlaps barrier {} at [{a}, {z}]", i + 1),
                ));
            }
        }
    }

    let times = &config.run.times;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        out.push(violation("run.times", "must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        out.push(violation("run.times", "must be non-decreasing"));
    }
    match config.run.olc_sampling {
        OlcSampling::SnapshotTimes if times.is_empty() => {
            out.push(violation("run.times", "must not be empty when olc_sampling = snapshot_times"));
        }
        OlcSampling::BarrierExits if b.centers.is_empty() => {
            out.push(violation("run.olc_sampling", "barrier_exits needs at least one barrier"));
        }
        _ => {}
    }
    if out.is_empty() {
        let cone = config.light_cone();
        let latest = config
            .sampling_times()
            .into_iter()
            .map(|(t, _)| t)
            .fold(f64::NEG_INFINITY, f64::max);
        if latest.is_finite() && cone.position(latest) > g.x_max {
            out.push(violation(
                "grid.x_max",
                format!(
                    "light cone reaches x = {} at t = {latest}, beyond the grid edge {}",
                    cone.position(latest),
                    g.x_max
                ),
            ));
        }
    }
    if config.run.output_dir.as_os_str().is_empty() {
        out.push(violation("run.output_dir", "must not be empty"));
    }
    out
}

/// Pipeline stage, named in every run error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Grid,
    InitialState,
    Potential,
    Kernel,
    Eigensolve,
    Projection,
    Evolution,
    Diagnostics,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Validate => "config validation",
            Stage::Grid => "grid construction",
            Stage::InitialState => "initial wavepacket",
            Stage::Potential => "potential transform",
            Stage::Kernel => "kernel assembly",
            Stage::Eigensolve => "eigendecomposition",
            Stage::Projection => "projection",
            Stage::Evolution => "evolution",
            Stage::Diagnostics => "diagnostics",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config validation failed:\n  {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<Violation>),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Error,
    },
}

impl RunError {
    pub fn is_validation(&self) -> bool {
        matches!(self, RunError::Invalid(_))
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, RunError>;
}

impl<T, E: Into<Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, RunError> {
        self.map_err(|e| RunError::Stage {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    /// Validation report per representation label.
    pub residuals: BTreeMap<String, ValidationReport>,
    /// Written files, relative to the output directory.
    pub files: Vec<String>,
    pub timing: Timing,
}

pub fn density_file_name(rep: Representation, free: bool, t: f64) -> String {
    let free = if free { "_free" } else { "" };
    format!("density_{}{free}_t{t:.3}.csv", rep.label())
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: String, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), RunError> {
        let mut w = BufWriter::new(File::create(self.dir.join(&name)).at(Stage::Output)?);
        body(&mut w).at(Stage::Output)?;
        w.flush().at(Stage::Output)?;
        self.files.push(name);
        Ok(())
    }
}

fn lap(stages: &mut BTreeMap<String, f64>, key: String, start: Instant) {
    *stages.entry(key).or_default() += start.elapsed().as_secs_f64();
}

/// Runs the scenario with the default execution mode.
pub fn run(config: &ScenarioConfig) -> Result<RunManifest, RunError> {
    run_with(config, Execution::default())
}

pub fn run_with(config: &ScenarioConfig, exec: Execution) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }
    let mut stages = BTreeMap::new();
    let dir = config.run.output_dir.as_path();
    fs::create_dir_all(dir).at(Stage::Output)?;
    let mut out = Writer { dir, files: Vec::new() };

    let t = Instant::now();
    let grids = config.grids().at(Stage::Grid)?;
    let k = config.constants;
    let state0 = initial_wavepacket(&config.packet, &grids, Some(&config.barrier), &k).at(Stage::InitialState)?;
    lap(&mut stages, "setup".into(), t);

    let t = Instant::now();
    let table = FourierTable::with_execution(&config.barrier, &grids, exec);
    lap(&mut stages, "potential".into(), t);

    let cone = config.light_cone();
    let samples = config.sampling_times();
    let mut residuals = BTreeMap::new();

    for rep in config.run.representation.representations() {
        let label = rep.label();
        let t = Instant::now();
        let kernel = match rep {
            Representation::Fw => assemble_fw_kernel_with(&grids, &table, &k, exec),
            Representation::Canonical => assemble_canonical_kernel_with(&grids, &table, &k, exec),
        }
        .at(Stage::Kernel)?;
        lap(&mut stages, format!("{label}.kernel"), t);

        let t = Instant::now();
        let decomp = eigendecompose(&kernel).at(Stage::Eigensolve)?;
        let report = validate_spectrum(&decomp, &kernel);
        for flag in &report.flags {
            log::warn!("{label}: {flag}");
        }
        lap(&mut stages, format!("{label}.eigensolve"), t);
        log::info!(
            "{label}: {} complex pairs, max Im ε = {:.4}",
            report.complex_pairs,
            report.max_imag
        );

        let t = Instant::now();
        let coeffs = project(&decomp, &state0.clone().relabel(rep)).at(Stage::Projection)?;
        let snapshots = evolve_many(&decomp, &coeffs, &config.run.times, exec).at(Stage::Evolution)?;
        let sample_times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let sampled = evolve_many(&decomp, &coeffs, &sample_times, exec).at(Stage::Evolution)?;
        lap(&mut stages, format!("{label}.evolution"), t);

        let t = Instant::now();
        let density = |s: &TwoComponentState| -> Result<DensityProfile, RunError> {
            density_of(s, &grids, k.q).at(Stage::Diagnostics)
        };
        let mut records = Vec::with_capacity(samples.len());
        for ((time, index), state) in samples.iter().zip(&sampled) {
            let rho = density(state)?;
            records.push(DiagnosticsRecord {
                t: *time,
                q_total: total_charge(&rho),
                olc_fraction: olc_fraction(&rho, &cone).at(Stage::Diagnostics)?,
                barrier_index: *index,
            });
        }
        let mut profiles = Vec::new();
        for (time, state) in config.run.times.iter().zip(&snapshots) {
            profiles.push((density_file_name(rep, false, *time), density(state)?));
            if config.run.free_reference {
                let free = match rep {
                    Representation::Fw => free_evolve(&state0, *time, &grids, &k),
                    Representation::Canonical => {
                        free_evolve_canonical(&state0.clone().relabel(rep), *time, &grids, &k)
                    }
                }
                .at(Stage::Evolution)?;
                profiles.push((density_file_name(rep, true, *time), density(&free)?));
            }
        }
        lap(&mut stages, format!("{label}.diagnostics"), t);

        let t = Instant::now();
        for (name, profile) in profiles {
            out.write(name, |w| profile.write_csv(w))?;
        }
        out.write(format!("diagnostics_{label}.csv"), |w| write_diagnostics_csv(&records, w))?;
        out.write(format!("eigenvalues_{label}.csv"), |w| decomp.write_eigenvalues_csv(w))?;
        out.write(format!("validation_{label}.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)
        })?;
        lap(&mut stages, format!("{label}.output"), t);
        residuals.insert(label.to_string(), report);
    }

    let mut files = out.files;
    files.push("manifest.json".into());
    let manifest = RunManifest {
        config: config.clone(),
        residuals,
        files,
        timing: Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            stages,
        },
    };
    let mut w = BufWriter::new(File::create(dir.join("manifest.json")).at(Stage::Output)?);
    serde_json::to_writer_pretty(&mut w, &manifest)
        .map_err(std::io::Error::from)
        .at(Stage::Output)?;
    writeln!(w).at(Stage::Output)?;
    w.flush().at(Stage::Output)?;
    Ok(manifest)
}
