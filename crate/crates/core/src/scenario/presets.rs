//! Built-in experiments.
//!
//! | name                 | grid            | medium              | schedule (main)                         |
//! |----------------------|-----------------|---------------------|-----------------------------------------|
//! | `hom1d`              | 129, 0.1 m      | c = 1, rho = 1      | 5 ms x 900                              |
//! | `hom1d-step-up`      | 129, 0.1 m      | c = 1, rho = 1      | 5 ms to T/3, then 15 ms                 |
//! | `hom1d-step-down`    | 129, 0.1 m      | c = 1, rho = 1      | 5 ms to T/3, then 1.25 ms               |
//! | `hom2d`              | 129 x 129       | c = 1, rho = 1      | 5 ms x 900                              |
//! | `hom2d-naive`        | 129 x 129       | c = 1, rho = 1      | 5 ms to T/3, then 15 ms, naive swap     |
//! | `halfring`           | 192 x 192, PML  | half ring, c = 0.8  | 15 ms to 1.8 s, 5 ms to 5.94 s, 45 ms   |
//! | `halfring-equalcost` | as `halfring`   | as `halfring`       | as `halfring`, vs uniform 6.75 ms       |
//! | `phantom-desk`       | 188 x 188, 0.8 mm, PML | two ellipses | 91 ns, 13.65 ns, 39 ns                 |
//!
//! The half-ring grid is large enough that the outgoing front stays clear of
//! the absorbing layer until the end of the run. The phantom layer sits
//! outside the 188-cell domain and is thick and gentle, so its own
//! step-size dependence stays below the errors being compared.
//!
//! Sound speeds of the homogeneous and half-ring presets are in units where
//! the background speed is 1 m/s, so one metre of travel takes one second.

use crate::error::{Error, Result};
use crate::scenario::config::{
    CRefConfig, CompanionConfig, GridConfig, InitialConfig, MediumConfig, OutputConfig,
    PmlSection, ScenarioConfig, SegmentConfig, SCHEMA_VERSION,
};
use crate::scenario::{resolve, Scenario};

pub const PRESET_NAMES: [&str; 8] = [
    "hom1d",
    "hom1d-step-up",
    "hom1d-step-down",
    "hom2d",
    "hom2d-naive",
    "halfring",
    "halfring-equalcost",
    "phantom-desk",
];

/// Knobs exposed by the presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    /// Time of the step change as a fraction of the run length (step-change
    /// presets only). Rounded so every segment holds a whole number of steps.
    pub change_fraction: f64,
    /// Use the alternative phantom step set (30 / 7.5 / 15 ns against 7.5 ns
    /// and 10 ns uniform runs).
    pub caption_steps: bool,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            change_fraction: 1.0 / 3.0,
            caption_steps: false,
        }
    }
}

const HOM_NX: usize = 129;
const HOM_DX: f64 = 0.1;
const HOM_DT_MS: f64 = 5.0;
const HOM_STEPS: usize = 900;

fn hom_grid(dims: u8) -> GridConfig {
    GridConfig {
        dims,
        nx: HOM_NX,
        ny: (dims == 2).then_some(HOM_NX),
        dx_m: HOM_DX,
        dy_m: None,
        origin_m: None,
    }
}

fn unit_medium() -> MediumConfig {
    MediumConfig::Homogeneous {
        c0_m_per_s: 1.0,
        rho0_kg_per_m3: 1.0,
        c_ref: None,
    }
}

fn gaussian(width_m: f64, center_m: Option<[f64; 2]>) -> InitialConfig {
    InitialConfig::Gaussian {
        width_m,
        center_m,
        amplitude_pa: 1.0,
    }
}

fn base(name: &str, grid: GridConfig, medium: MediumConfig, initial: InitialConfig) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: Some(name.to_string()),
        mode: None,
        grid,
        medium,
        initial,
        schedule: Vec::new(),
        pml: None,
        output: OutputConfig::default(),
        companion: Vec::new(),
    }
}

/// Base steps before the change, rounded to a multiple of 3 so a tripled
/// step still lands on the end time.
pub(crate) fn change_steps(total: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "change fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = ((fraction * total as f64 / 3.0).round() as usize * 3).clamp(3, total - 3);
    Ok(n)
}

/// `dt` for the first `n1` steps, then `factor * dt` up to the same end time.
fn step_change_schedule(dt_ms: f64, total: usize, factor: f64, fraction: f64) -> Result<Vec<SegmentConfig>> {
    let n1 = change_steps(total, fraction)?;
    let t_end = total as f64 * dt_ms * 1e-3;
    Ok(vec![
        SegmentConfig::ms_count(dt_ms, n1),
        SegmentConfig::ms_until(dt_ms * factor, t_end),
    ])
}

fn hom_snapshots(fraction: f64) -> Result<Vec<f64>> {
    let n1 = change_steps(HOM_STEPS, fraction)?;
    let dt = HOM_DT_MS * 1e-3;
    Ok(vec![n1 as f64 * dt, HOM_STEPS as f64 * dt])
}

fn hom1d(name: &str, opts: &PresetOptions, factor: Option<f64>) -> Result<ScenarioConfig> {
    let mut c = base(name, hom_grid(1), unit_medium(), gaussian(4.0 * HOM_DX, None));
    c.schedule = match factor {
        None => vec![SegmentConfig::ms_count(HOM_DT_MS, HOM_STEPS)],
        Some(f) => step_change_schedule(HOM_DT_MS, HOM_STEPS, f, opts.change_fraction)?,
    };
    c.output.snapshot_times_s = hom_snapshots(opts.change_fraction)?;
    Ok(c)
}

fn hom2d(name: &str, opts: &PresetOptions, naive: bool) -> Result<ScenarioConfig> {
    let mut c = base(name, hom_grid(2), unit_medium(), gaussian(4.0 * HOM_DX, None));
    if naive {
        c.mode = Some("naive-swap".into());
        c.schedule = step_change_schedule(HOM_DT_MS, HOM_STEPS, 3.0, opts.change_fraction)?;
    } else {
        c.schedule = vec![SegmentConfig::ms_count(HOM_DT_MS, HOM_STEPS)];
    }
    let t = HOM_STEPS as f64 * HOM_DT_MS * 1e-3;
    c.output.snapshot_times_s = vec![t / 3.0, 2.0 * t / 3.0, t];
    if naive {
        c.output.snapshot_times_s = hom_snapshots(opts.change_fraction)?;
    }
    Ok(c)
}

fn companion(label: &str, role: &str, schedule: Vec<SegmentConfig>) -> CompanionConfig {
    CompanionConfig {
        label: label.to_string(),
        role: role.to_string(),
        mode: None,
        schedule,
    }
}

const RING_T1: f64 = 1.8;
const RING_T2: f64 = 5.94;
const RING_END: f64 = 6.48;
const RING_NX: usize = 192;

const PHANTOM_NX: usize = 188;
const PHANTOM_PML: usize = 41;

fn halfring(name: &str, equal_cost: bool) -> ScenarioConfig {
    let medium = MediumConfig::HalfRing {
        inner_radius_m: 3.3,
        outer_radius_m: 3.8,
        c_inside_m_per_s: 0.8,
        c_background_m_per_s: 1.0,
        rho_background_kg_per_m3: 1.0,
        center_m: None,
        c_ref: Some(CRefConfig::Region {
            region: "background".into(),
        }),
    };
    let grid = GridConfig {
        nx: RING_NX,
        ny: Some(RING_NX),
        ..hom_grid(2)
    };
    let mut c = base(name, grid, medium, gaussian(4.0 * HOM_DX, None));
    c.schedule = vec![
        SegmentConfig::ms_until(15.0, RING_T1),
        SegmentConfig::ms_until(5.0, RING_T2),
        SegmentConfig::ms_until(45.0, RING_END),
    ];
    c.pml = Some(PmlSection {
        thickness_cells: 16,
        alpha_np_per_cell: Some(2.0),
        sigma_max_per_s: None,
        profile_exponent: None,
    });
    let reference = companion("uniform-5ms", "reference", vec![SegmentConfig::ms_until(5.0, RING_END)]);
    if equal_cost {
        c.companion = vec![
            reference,
            companion("uniform-6.75ms", "comparison", vec![SegmentConfig::ms_until(6.75, RING_END)]),
        ];
        c.output.snapshot_times_s = vec![RING_END];
    } else {
        c.companion = vec![
            reference,
            companion("uniform-15ms", "comparison", vec![SegmentConfig::ms_until(15.0, RING_END)]),
            companion("uniform-45ms", "comparison", vec![SegmentConfig::ms_until(45.0, RING_END)]),
        ];
        c.output.snapshot_times_s = vec![RING_T1, RING_T2, RING_END];
    }
    c
}

fn phantom(name: &str, opts: &PresetOptions) -> ScenarioConfig {
    let medium = MediumConfig::Phantom {
        outer_semi_axes_m: [0.035, 0.03],
        inner_semi_axes_m: [0.018, 0.012],
        center_m: None,
        inner_center_m: Some([0.0, -0.003]),
        labels: None,
        c_ref: Some(CRefConfig::Region {
            region: "water".into(),
        }),
    };
    let grid = GridConfig {
        dims: 2,
        nx: PHANTOM_NX + 2 * PHANTOM_PML,
        ny: Some(PHANTOM_NX + 2 * PHANTOM_PML),
        dx_m: 0.8e-3,
        dy_m: None,
        origin_m: None,
    };
    let mut c = base(name, grid, medium, gaussian(3.2e-3, Some([0.0, 0.06])));
    c.pml = Some(PmlSection {
        thickness_cells: PHANTOM_PML,
        alpha_np_per_cell: Some(0.25),
        sigma_max_per_s: None,
        profile_exponent: Some(4.0),
    });
    let seg = SegmentConfig::ns_until_us;
    if opts.caption_steps {
        c.schedule = vec![seg(30.0, 13.65), seg(7.5, 68.25), seg(15.0, 81.9)];
        c.companion = vec![
            companion("uniform-7.5ns", "reference", vec![seg(7.5, 81.9)]),
            companion("uniform-10ns", "comparison", vec![seg(10.0, 81.9)]),
        ];
        c.output.snapshot_times_s = vec![13.65e-6, 40.95e-6, 68.25e-6, 81.9e-6];
    } else {
        c.schedule = vec![seg(91.0, 13.65), seg(13.65, 68.25), seg(39.0, 81.9)];
        c.companion = vec![
            companion("uniform-13.65ns", "reference", vec![seg(13.65, 81.9)]),
            companion("uniform-18.2ns", "comparison", vec![seg(18.2, 81.9)]),
        ];
        c.output.snapshot_times_s = vec![6.825e-6, 13.65e-6, 40.95e-6, 68.25e-6, 75.075e-6, 81.9e-6];
    }
    c
}

/// Configuration of a preset, before validation.
pub fn preset_config(name: &str, opts: &PresetOptions) -> Result<ScenarioConfig> {
    match name {
        "hom1d" => hom1d(name, opts, None),
        "hom1d-step-up" => hom1d(name, opts, Some(3.0)),
        "hom1d-step-down" => hom1d(name, opts, Some(0.25)),
        "hom2d" => hom2d(name, opts, false),
        "hom2d-naive" => hom2d(name, opts, true),
        "halfring" => Ok(halfring(name, false)),
        "halfring-equalcost" => Ok(halfring(name, true)),
        "phantom-desk" => Ok(phantom(name, opts)),
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

pub fn preset_with(name: &str, opts: &PresetOptions) -> Result<Scenario> {
    resolve(&preset_config(name, opts)?, std::path::Path::new("."))
}

pub fn preset(name: &str) -> Result<Scenario> {
    preset_with(name, &PresetOptions::default())
}
