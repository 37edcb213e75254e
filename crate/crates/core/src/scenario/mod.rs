//! Scenario configuration, presets, snapshot I/O and the CLI.
//!
//! A [`Scenario`] is a fully resolved run description: grid, medium, initial
//! state, schedule, mode, PML and snapshot times, plus optional companion
//! runs over the same problem with other schedules. Config files and presets
//! both go through [`resolve`], so presets obey exactly the same validation.

pub mod cli;
pub mod config;
pub mod media;
pub mod presets;
pub mod snapshot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{build_wavevectors, Field, Grid, Medium};
use crate::oracle::{self, ErrorReport};
use crate::solver::{CorrectionMode, Pml, PmlConfig, RunOutput, Segment, Solver, StepSchedule};

use config::{
    CRefConfig, CompanionConfig, InitialConfig, MediumConfig, ScenarioConfig, SegmentConfig,
    SCHEMA_VERSION,
};
use media::{default_phantom_labels, HalfRingMedium, PhantomMedium, TissueLabel};
use snapshot::{FieldKind, SnapshotMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunRole {
    Main,
    /// Errors of the other runs are measured against this one.
    Reference,
    Comparison,
}

impl RunRole {
    pub fn name(self) -> &'static str {
        match self {
            RunRole::Main => "main",
            RunRole::Reference => "reference",
            RunRole::Comparison => "comparison",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Companion {
    pub label: String,
    pub role: RunRole,
    pub schedule: StepSchedule,
    pub mode: CorrectionMode,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub grid: Grid,
    pub medium: Medium,
    /// Cells of the heterogeneous inclusion (ring or phantom), if any.
    pub region: Option<Array2<bool>>,
    pub p0: Field,
    pub u0: Vec<Field>,
    pub schedule: StepSchedule,
    pub mode: CorrectionMode,
    pub pml: PmlConfig,
    pub snapshot_times: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub csv: bool,
    pub companions: Vec<Companion>,
    /// Resolution notes (segment counts derived from end times and so on).
    pub log: Vec<String>,
}

impl Scenario {
    /// Cells outside the PML layers.
    pub fn interior_mask(&self) -> Array2<bool> {
        match Pml::new(&self.grid, &self.pml) {
            Some(p) => p.layer_mask().mapv(|m| !m),
            None => Array2::from_elem(self.grid.shape(), true),
        }
    }

    pub fn reference(&self) -> Option<&Companion> {
        self.companions.iter().find(|c| c.role == RunRole::Reference)
    }

    /// Adds a companion run after resolution, with the same checks `resolve`
    /// applies to configured companions.
    pub fn add_companion(&mut self, c: Companion) -> Result<()> {
        let field = format!("companion `{}`", c.label);
        if c.label.is_empty() || c.label == "main" || c.label.contains(['/', '\\']) {
            return Err(schema(field, "invalid label"));
        }
        if self.companions.iter().any(|o| o.label == c.label) {
            return Err(schema(field, "duplicate label"));
        }
        if c.role == RunRole::Reference && self.reference().is_some() {
            return Err(schema(field, "at most one reference run"));
        }
        let wv = build_wavevectors(&self.grid);
        c.schedule
            .check_stability(&wv, self.medium.c_ref)
            .map_err(|e| schema(&field, e.to_string()))?;
        let (t0, t1) = (self.schedule.total_time(), c.schedule.total_time());
        if (t0 - t1).abs() > 1e-9 * t0 {
            return Err(schema(
                &field,
                format!("ends at {t1} s but the main schedule ends at {t0} s"),
            ));
        }
        for &t in &self.snapshot_times {
            c.schedule.level_of(t).map_err(|e| schema(&field, e.to_string()))?;
        }
        self.companions.push(c);
        Ok(())
    }

    /// Every run of the scenario as `(label, role, schedule, mode)`.
    pub fn runs(&self) -> Vec<(String, RunRole, StepSchedule, CorrectionMode)> {
        let mut out = vec![(
            "main".to_string(),
            RunRole::Main,
            self.schedule.clone(),
            self.mode,
        )];
        for c in &self.companions {
            out.push((c.label.clone(), c.role, c.schedule.clone(), c.mode));
        }
        out
    }
}

/// Reads and resolves a scenario file; relative raster paths are taken
/// relative to the file's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let config = ScenarioConfig::from_toml(&text).map_err(|e| Error::Schema {
        field: toml_error_field(&e),
        message: e.message().to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut sc = resolve(&config, base)?;
    if sc.name.is_empty() {
        sc.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(sc)
}

fn toml_error_field(e: &toml::de::Error) -> String {
    // the message names the offending key for unknown fields; the span is the
    // best location available otherwise
    match e.span() {
        Some(span) => format!("<input bytes {}..{}>", span.start, span.end),
        None => "<input>".into(),
    }
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::schema(field, message)
}

fn parse_mode(field: &str, name: Option<&str>) -> Result<CorrectionMode> {
    match name {
        None => Ok(CorrectionMode::Full),
        Some(n) => n.parse().map_err(|e: Error| schema(field, e.to_string())),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(schema(field, format!("must be positive, got {v}")))
    }
}

/// Converts configured segments into a schedule. Segments given by end time
/// get `count = round(duration / dt)`, which must hit the end time exactly.
pub fn resolve_schedule(segments: &[SegmentConfig], field: &str) -> Result<(StepSchedule, Vec<String>)> {
    if segments.is_empty() {
        return Err(schema(field, "at least one segment is required"));
    }
    let mut out = Vec::with_capacity(segments.len());
    let mut log = Vec::new();
    let mut start = 0.0f64;
    for (n, s) in segments.iter().enumerate() {
        let f = format!("{field}[{n}]");
        let dts: Vec<f64> = [
            s.dt_ms.map(|v| v * 1e-3),
            s.dt_us.map(|v| v * 1e-6),
            s.dt_ns.map(|v| v * 1e-9),
        ]
        .into_iter()
        .flatten()
        .collect();
        let dt = match dts.as_slice() {
            [dt] => positive(&format!("{f}.dt"), *dt)?,
            [] => return Err(schema(&f, "one of dt_ms, dt_us, dt_ns is required")),
            _ => return Err(schema(&f, "give only one of dt_ms, dt_us, dt_ns")),
        };
        let until: Vec<f64> = [s.until_s, s.until_us.map(|v| v * 1e-6)]
            .into_iter()
            .flatten()
            .collect();
        let count = match (s.count, until.as_slice()) {
            (Some(c), []) => {
                if c == 0 {
                    return Err(schema(format!("{f}.count"), "must be positive"));
                }
                start += c as f64 * dt;
                c
            }
            (None, [end]) => {
                let duration = end - start;
                if !(duration > 0.0) {
                    return Err(schema(
                        format!("{f}.until"),
                        format!("end time {end} s is not after the segment start {start} s"),
                    ));
                }
                let c = (duration / dt).round();
                if c < 1.0 || (c * dt - duration).abs() > 1e-6 * dt {
                    let lo = (duration / dt).floor();
                    return Err(schema(
                        format!("{f}.until"),
                        format!(
                            "{duration} s is not a whole number of {dt} s steps; nearest end times are {} s and {} s",
                            start + lo * dt,
                            start + (lo + 1.0) * dt
                        ),
                    ));
                }
                let note = format!("{f}: dt = {dt} s until {end} s gives {} steps", c as usize);
                log::info!("{note}");
                log.push(note);
                start = *end;
                c as usize
            }
            (Some(_), [_]) => return Err(schema(&f, "give either count or an end time, not both")),
            (None, []) => return Err(schema(&f, "count or an end time (until_s, until_us) is required")),
            _ => return Err(schema(&f, "give only one of until_s, until_us")),
        };
        out.push(Segment { dt, count });
    }
    Ok((StepSchedule::new(out)?, log))
}

fn resolve_grid(c: &config::GridConfig) -> Result<Grid> {
    positive("grid.dx_m", c.dx_m)?;
    let grid = match c.dims {
        1 => {
            if matches!(c.ny, Some(n) if n != 1) {
                return Err(schema("grid.ny", "must be absent (or 1) for a 1D grid"));
            }
            Grid::new_1d(c.nx, c.dx_m)
        }
        2 => {
            let dy = positive("grid.dy_m", c.dy_m.unwrap_or(c.dx_m))?;
            Grid::new_2d(c.nx, c.ny.unwrap_or(c.nx), c.dx_m, dy)
        }
        d => return Err(schema("grid.dims", format!("must be 1 or 2, got {d}"))),
    }
    .map_err(|e| schema("grid", e.to_string()))?;
    Ok(match c.origin_m {
        Some(o) => grid.with_origin(o),
        None => grid,
    })
}

fn read_raster(base: &Path, file: &str, grid: &Grid, field: &str) -> Result<Field> {
    let path = base.join(file);
    if !path.exists() {
        return Err(schema(field, format!("file {} does not exist", path.display())));
    }
    let (f, _) = snapshot::read_snapshot(&path)?;
    if f.dim() != grid.shape() {
        return Err(schema(
            field,
            format!("raster shape {:?} does not match grid {:?}", f.dim(), grid.shape()),
        ));
    }
    Ok(f)
}

fn resolve_c_ref(
    policy: Option<&CRefConfig>,
    default: CRefConfig,
    c0: &Field,
    region_speed: &dyn Fn(&str) -> Option<f64>,
) -> Result<f64> {
    let policy = policy.cloned().unwrap_or(default);
    let cmax = c0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cmin = c0.iter().cloned().fold(f64::INFINITY, f64::min);
    match policy {
        CRefConfig::Explicit { value_m_per_s } => positive("medium.c_ref.value_m_per_s", value_m_per_s),
        CRefConfig::Max => Ok(cmax),
        CRefConfig::Min => Ok(cmin),
        CRefConfig::Region { region } => region_speed(&region)
            .ok_or_else(|| schema("medium.c_ref.region", format!("unknown region `{region}`"))),
    }
}

fn resolve_medium(c: &MediumConfig, grid: &Grid, base: &Path) -> Result<(Medium, Option<Array2<bool>>)> {
    let bad = |e: Error| schema("medium", e.to_string());
    match c {
        MediumConfig::Homogeneous {
            c0_m_per_s,
            rho0_kg_per_m3,
            c_ref,
        } => {
            let c0 = positive("medium.c0_m_per_s", *c0_m_per_s)?;
            let rho = positive("medium.rho0_kg_per_m3", *rho0_kg_per_m3)?;
            if let Some(CRefConfig::Explicit { value_m_per_s }) = c_ref {
                if *value_m_per_s != c0 {
                    return Err(schema(
                        "medium.c_ref",
                        "a homogeneous medium uses its own sound speed as reference",
                    ));
                }
            }
            Ok((Medium::homogeneous(grid, c0, rho).map_err(bad)?, None))
        }
        MediumConfig::HalfRing {
            inner_radius_m,
            outer_radius_m,
            c_inside_m_per_s,
            c_background_m_per_s,
            rho_background_kg_per_m3,
            center_m,
            c_ref,
        } => {
            let ring = HalfRingMedium {
                inner_radius: *inner_radius_m,
                outer_radius: *outer_radius_m,
                c_inside: *c_inside_m_per_s,
                c_background: *c_background_m_per_s,
                rho_background: *rho_background_kg_per_m3,
                center: center_m.unwrap_or([0.0, 0.0]),
            };
            ring.validate().map_err(bad)?;
            let mask = ring.region_mask(grid);
            let c0 = mask.mapv(|m| if m { ring.c_inside } else { ring.c_background });
            let c_ref = resolve_c_ref(
                c_ref.as_ref(),
                CRefConfig::Region {
                    region: "background".into(),
                },
                &c0,
                &|n| ring.region_speed(n),
            )?;
            Ok((ring.build(grid, c_ref).map_err(bad)?, Some(mask)))
        }
        MediumConfig::Phantom {
            outer_semi_axes_m,
            inner_semi_axes_m,
            center_m,
            inner_center_m,
            labels,
            c_ref,
        } => {
            let table = match labels {
                Some(l) => l
                    .iter()
                    .map(|t| TissueLabel::new(&t.name, t.c0_m_per_s, t.rho0_kg_per_m3))
                    .collect(),
                None => default_phantom_labels(),
            };
            let center = center_m.unwrap_or([0.0, 0.0]);
            let ph = PhantomMedium::two_ellipse(
                grid,
                *outer_semi_axes_m,
                *inner_semi_axes_m,
                center,
                inner_center_m.unwrap_or(center),
                table,
            )
            .map_err(bad)?;
            let c0 = ph.labels.mapv(|l| ph.table[l as usize].c0);
            let water = ph.table[0].name.clone();
            let c_ref = resolve_c_ref(
                c_ref.as_ref(),
                CRefConfig::Region { region: water },
                &c0,
                &|n| ph.region_speed(n),
            )?;
            Ok((ph.build(c_ref).map_err(bad)?, Some(ph.region_mask())))
        }
        MediumConfig::Raster {
            c0_file,
            rho0_file,
            c_ref,
        } => {
            let c0 = read_raster(base, c0_file, grid, "medium.c0_file")?;
            let rho0 = read_raster(base, rho0_file, grid, "medium.rho0_file")?;
            let c_ref = resolve_c_ref(c_ref.as_ref(), CRefConfig::Max, &c0, &|_| None)?;
            let medium = Medium::new(c0, rho0, c_ref).map_err(bad)?;
            let region = medium.c0.mapv(|c| c != c_ref);
            Ok((medium, Some(region)))
        }
    }
}

fn resolve_pml(c: Option<&config::PmlSection>, grid: &Grid, c_ref: f64) -> Result<PmlConfig> {
    let Some(c) = c else {
        return Ok(PmlConfig::disabled());
    };
    if c.thickness_cells == 0 {
        return Ok(PmlConfig::disabled());
    }
    let min_n = if grid.dims() == 2 { grid.nx().min(grid.ny()) } else { grid.nx() };
    if 2 * c.thickness_cells >= min_n {
        return Err(schema("pml.thickness_cells", "layers would cover the whole grid"));
    }
    let mut cfg = match (c.alpha_np_per_cell, c.sigma_max_per_s) {
        (Some(_), Some(_)) => {
            return Err(schema("pml", "give either alpha_np_per_cell or sigma_max_per_s"))
        }
        (None, Some(s)) => {
            if !(s >= 0.0) {
                return Err(schema("pml.sigma_max_per_s", "must be non-negative"));
            }
            PmlConfig {
                thickness_cells: c.thickness_cells,
                sigma_max: s,
                ..PmlConfig::default()
            }
        }
        (alpha, None) => {
            let alpha = alpha.unwrap_or(PmlConfig::DEFAULT_ALPHA);
            if !(alpha >= 0.0) {
                return Err(schema("pml.alpha_np_per_cell", "must be non-negative"));
            }
            let d = if grid.dims() == 2 { grid.dx().min(grid.dy()) } else { grid.dx() };
            PmlConfig::from_alpha(c.thickness_cells, alpha, c_ref, d)
        }
    };
    if let Some(e) = c.profile_exponent {
        cfg.profile_exponent = positive("pml.profile_exponent", e)?;
    }
    Ok(cfg)
}

fn resolve_initial(c: &InitialConfig, grid: &Grid, base: &Path) -> Result<Field> {
    match c {
        InitialConfig::Gaussian {
            width_m,
            center_m,
            amplitude_pa,
        } => {
            let w = positive("initial.width_m", *width_m)?;
            let [cx, cy] = center_m.unwrap_or([0.0, 0.0]);
            let two_d = grid.dims() == 2;
            Ok(grid.sample(|x, y| {
                let dy = if two_d { y - cy } else { 0.0 };
                amplitude_pa * (-((x - cx).powi(2) + dy * dy) / (w * w)).exp()
            }))
        }
        InitialConfig::Raster { file } => read_raster(base, file, grid, "initial.file"),
    }
}

fn resolve_companion(c: &CompanionConfig, n: usize) -> Result<(Companion, Vec<String>)> {
    let f = format!("companion[{n}]");
    let role = match c.role.as_str() {
        "reference" => RunRole::Reference,
        "comparison" => RunRole::Comparison,
        r => {
            return Err(schema(
                format!("{f}.role"),
                format!("expected reference or comparison, got `{r}`"),
            ))
        }
    };
    if c.label.is_empty() || c.label == "main" || c.label.contains(['/', '\\']) {
        return Err(schema(format!("{f}.label"), format!("invalid label `{}`", c.label)));
    }
    let (schedule, log) = resolve_schedule(&c.schedule, &format!("{f}.schedule"))?;
    let mode = parse_mode(&format!("{f}.mode"), c.mode.as_deref())?;
    Ok((
        Companion {
            label: c.label.clone(),
            role,
            schedule,
            mode,
        },
        log,
    ))
}

/// Validates `config` and builds the scenario it describes.
pub fn resolve(config: &ScenarioConfig, base: &Path) -> Result<Scenario> {
    if config.schema_version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", config.schema_version),
        ));
    }
    let grid = resolve_grid(&config.grid)?;
    let (medium, region) = resolve_medium(&config.medium, &grid, base)?;
    let p0 = resolve_initial(&config.initial, &grid, base)?;
    let (schedule, mut log) = resolve_schedule(&config.schedule, "schedule")?;
    let mode = parse_mode("mode", config.mode.as_deref())?;
    let pml = resolve_pml(config.pml.as_ref(), &grid, medium.c_ref)?;

    let wv = build_wavevectors(&grid);
    schedule
        .check_stability(&wv, medium.c_ref)
        .map_err(|e| schema("schedule", e.to_string()))?;

    let mut companions = Vec::new();
    for (n, c) in config.companion.iter().enumerate() {
        let (comp, clog) = resolve_companion(c, n)?;
        comp.schedule
            .check_stability(&wv, medium.c_ref)
            .map_err(|e| schema(format!("companion[{n}].schedule"), e.to_string()))?;
        let (t0, t1) = (schedule.total_time(), comp.schedule.total_time());
        if (t0 - t1).abs() > 1e-9 * t0 {
            return Err(schema(
                format!("companion[{n}].schedule"),
                format!("ends at {t1} s but the main schedule ends at {t0} s"),
            ));
        }
        if companions.iter().any(|o: &Companion| o.label == comp.label) {
            return Err(schema(format!("companion[{n}].label"), "duplicate label"));
        }
        log.extend(clog);
        companions.push(comp);
    }
    if companions.iter().filter(|c| c.role == RunRole::Reference).count() > 1 {
        return Err(schema("companion", "at most one reference run"));
    }

    let mut snapshot_times = config.output.snapshot_times_s.clone();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();
    for &t in &snapshot_times {
        schedule
            .level_of(t)
            .map_err(|e| schema("output.snapshot_times_s", e.to_string()))?;
        for c in &companions {
            c.schedule.level_of(t).map_err(|e| {
                schema(
                    "output.snapshot_times_s",
                    format!("companion `{}`: {e}", c.label),
                )
            })?;
        }
    }

    let u0 = grid.velocity_zeros();
    Ok(Scenario {
        name: config.name.clone().unwrap_or_default(),
        grid,
        medium,
        region,
        p0,
        u0,
        schedule,
        mode,
        pml,
        snapshot_times,
        output_dir: config.output.dir.as_ref().map(|d| base.join(d)),
        csv: config.output.csv,
        companions,
        log,
    })
}

/// One executed run of a scenario.
#[derive(Debug, Clone)]
pub struct LabeledRun {
    pub label: String,
    pub role: RunRole,
    pub mode: CorrectionMode,
    pub schedule: StepSchedule,
    pub output: RunOutput,
}

impl LabeledRun {
    /// Pressure at `t` (a snapshot time or the final time).
    pub fn pressure_at(&self, t: f64) -> Option<&Field> {
        let level = self.schedule.level_of(t).ok()?;
        if level == self.output.steps {
            return Some(&self.output.final_state.p);
        }
        self.output.snapshots.iter().find(|s| s.step == level).map(|s| &s.p)
    }
}

/// Error metrics of one run against the scenario's reference at one time.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub label: String,
    pub mode: CorrectionMode,
    /// Steps taken to reach `time`.
    pub steps: usize,
    pub time: f64,
    /// `oracle` or the label of the reference run.
    pub reference: String,
    pub linf_abs: f64,
    pub linf_rel: f64,
    pub l2_rel: f64,
    /// Largest error outside the PML.
    pub linf_interior: f64,
    /// Largest error outside the PML and outside the heterogeneous region.
    pub linf_outside_region: f64,
    pub linf_inside_region: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub runs: Vec<LabeledRun>,
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

impl ScenarioRun {
    pub fn run(&self, label: &str) -> Option<&LabeledRun> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn row(&self, label: &str, time: f64) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && (r.time - time).abs() <= 1e-9 * time.abs().max(1e-300))
    }

    pub fn final_row(&self, label: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .filter(|r| r.label == label)
            .max_by(|a, b| a.time.total_cmp(&b.time))
    }
}

/// Runs one schedule of `sc` in a fresh solver.
pub fn run_schedule(sc: &Scenario, schedule: &StepSchedule, mode: CorrectionMode) -> Result<RunOutput> {
    let mut solver = Solver::new(sc.grid.clone(), sc.medium.clone(), mode, sc.pml)?;
    solver.run(sc.p0.clone(), sc.u0.clone(), schedule, &sc.snapshot_times)
}

/// Exact reference for homogeneous scenarios without PML.
pub fn oracle_pressure(sc: &Scenario, t: f64) -> Result<Option<Field>> {
    if !sc.medium.is_homogeneous() || sc.pml.is_enabled() {
        return Ok(None);
    }
    let wv = build_wavevectors(&sc.grid);
    let zero_u = sc.u0.iter().all(|c| c.iter().all(|v| *v == 0.0));
    if sc.grid.dims() == 1 && zero_u {
        let c = sc.medium.c0[[0, 0]];
        return Ok(Some(oracle::dalembert_1d(&sc.p0, &wv, c, t)?));
    }
    let (p, _) = oracle::spectral_propagator(&sc.p0, &sc.u0, &sc.medium, &wv, t)?;
    Ok(Some(p))
}

fn report_row(sc: &Scenario, run: &LabeledRun, t: f64, reference: &str, report: &ErrorReport, interior: &Array2<bool>) -> SummaryRow {
    let (outside, inside) = match &sc.region {
        Some(region) => {
            let out = Zip::from(interior).and(region).map_collect(|i, r| *i && !*r);
            let ins = Zip::from(interior).and(region).map_collect(|i, r| *i && *r);
            (report.linf_abs_where(&out), report.linf_abs_where(&ins))
        }
        None => (report.linf_abs_where(interior), 0.0),
    };
    SummaryRow {
        label: run.label.clone(),
        mode: run.mode,
        steps: run.schedule.level_of(t).unwrap_or(run.output.steps),
        time: t,
        reference: reference.to_string(),
        linf_abs: report.linf_abs,
        linf_rel: report.linf_rel,
        l2_rel: report.l2_rel,
        linf_interior: report.linf_abs_where(interior),
        linf_outside_region: outside,
        linf_inside_region: inside,
    }
}

/// Error rows for every non-reference run at every snapshot time and the
/// final time.
pub fn summarize(sc: &Scenario, runs: &[LabeledRun]) -> Result<Vec<SummaryRow>> {
    let mut times = sc.snapshot_times.clone();
    let end = sc.schedule.total_time();
    if !times.iter().any(|t| (t - end).abs() <= 1e-9 * end) {
        times.push(end);
    }
    let interior = sc.interior_mask();
    let reference_run = runs.iter().find(|r| r.role == RunRole::Reference);
    let mut rows = Vec::new();
    for &t in &times {
        let (reference, label) = match reference_run {
            Some(r) => match r.pressure_at(t) {
                Some(p) => (p.clone(), r.label.clone()),
                None => continue,
            },
            None => match oracle_pressure(sc, t)? {
                Some(p) => (p, "oracle".to_string()),
                None => continue,
            },
        };
        for run in runs.iter().filter(|r| r.role != RunRole::Reference) {
            let Some(p) = run.pressure_at(t) else { continue };
            let report = oracle::compare(p, &reference)?;
            rows.push(report_row(sc, run, t, &label, &report, &interior));
        }
    }
    Ok(rows)
}

/// Runs the main schedule and every companion (in parallel on the current
/// rayon pool) and computes the error summary.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioRun> {
    let jobs = sc.runs();
    let outputs: Vec<Result<LabeledRun>> = jobs
        .into_par_iter()
        .map(|(label, role, schedule, mode)| {
            let output = run_schedule(sc, &schedule, mode)?;
            Ok(LabeledRun {
                label,
                role,
                mode,
                schedule,
                output,
            })
        })
        .collect();
    let runs: Vec<LabeledRun> = outputs.into_iter().collect::<Result<_>>()?;
    let warnings = runs
        .iter()
        .flat_map(|r| r.output.warnings.iter().map(move |w| format!("{}: {w}", r.label)))
        .collect();
    let rows = summarize(sc, &runs)?;
    Ok(ScenarioRun {
        runs,
        rows,
        warnings,
    })
}

pub const SUMMARY_HEADER: &str =
    "label,mode,steps,time_s,reference,linf_abs,linf_rel,l2_rel,linf_interior,linf_outside_region,linf_inside_region";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.label,
            r.mode,
            r.steps,
            r.time,
            r.reference,
            r.linf_abs,
            r.linf_rel,
            r.l2_rel,
            r.linf_interior,
            r.linf_outside_region,
            r.linf_inside_region
        );
    }
    out
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<18} {:<15} {:>7} {:>11} {:>11} {:>11} {:>11} {:>11}\n",
        "run", "mode", "steps", "time_s", "linf_abs", "linf_rel", "outside", "inside"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:<15} {:>7} {:>11.6} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            r.label,
            r.mode.name(),
            r.steps,
            r.time,
            r.linf_abs,
            r.linf_rel,
            r.linf_outside_region,
            r.linf_inside_region
        );
    }
    out
}

/// Writes snapshots of every run, the medium, and `summary.csv` into `dir`.
pub fn write_outputs(sc: &Scenario, result: &ScenarioRun, dir: &Path, csv: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |field: &Field, t: f64, kind: FieldKind, path: PathBuf| -> Result<()> {
        snapshot::write_snapshot(field, &SnapshotMeta::for_grid(&sc.grid, t, kind), &path)?;
        if csv && matches!(kind, FieldKind::Pressure | FieldKind::Error) {
            let csv_path = path.with_extension("csv");
            snapshot::write_csv(field, &sc.grid, &csv_path)?;
            written.push(csv_path);
        }
        written.push(path);
        Ok(())
    };
    put(&sc.medium.c0, 0.0, FieldKind::SoundSpeed, dir.join("c0.ksnut"))?;
    put(&sc.medium.rho0, 0.0, FieldKind::Density, dir.join("rho0.ksnut"))?;
    put(&sc.p0, 0.0, FieldKind::Pressure, dir.join("p0.ksnut"))?;
    let ukinds = [FieldKind::VelocityX, FieldKind::VelocityY];
    for run in &result.runs {
        let rdir = dir.join(&run.label);
        fs::create_dir_all(&rdir)?;
        let mut frames: Vec<(f64, usize, &Field, &[Field])> = run
            .output
            .snapshots
            .iter()
            .map(|s| (s.time, s.step, &s.p, s.u.as_slice()))
            .collect();
        if !frames.iter().any(|f| f.1 == run.output.steps) {
            frames.push((
                run.schedule.total_time(),
                run.output.steps,
                &run.output.final_state.p,
                run.output.final_velocity.as_slice(),
            ));
        }
        for (t, step, p, u) in frames {
            put(p, t, FieldKind::Pressure, rdir.join(format!("p_{step:06}.ksnut")))?;
            for (c, kind) in u.iter().zip(ukinds) {
                put(c, t, kind, rdir.join(format!("{}_{step:06}.ksnut", kind.name())))?;
            }
        }
    }
    // pointwise error fields against the reference
    for row in &result.rows {
        let (Some(run), Some(reference)) = (
            result.run(&row.label),
            if row.reference == "oracle" {
                oracle_pressure(sc, row.time)?
            } else {
                result
                    .run(&row.reference)
                    .and_then(|r| r.pressure_at(row.time).cloned())
            },
        ) else {
            continue;
        };
        let Some(p) = run.pressure_at(row.time) else { continue };
        let report = oracle::compare(p, &reference)?;
        let step = run.schedule.level_of(row.time).unwrap_or(run.output.steps);
        put(
            &report.pointwise_abs,
            row.time,
            FieldKind::Error,
            dir.join(&row.label).join(format!("error_{step:06}.ksnut")),
        )?;
    }
    let summary = dir.join("summary.csv");
    fs::write(&summary, summary_csv(&result.rows))?;
    written.push(summary);
    Ok(written)
}
