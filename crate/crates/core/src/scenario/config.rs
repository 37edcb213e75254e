//! TOML schema for scenario files.
//!
//! Every physical quantity carries its unit in the key name. Unknown keys are
//! rejected so a misspelt `dt_sm` cannot silently fall back to a default.
//!
//! ```toml
//! schema_version = 1
//! name = "pulse"
//! mode = "full"
//!
//! [grid]
//! dims = 1
//! nx = 129
//! dx_m = 0.1
//!
//! [medium]
//! kind = "homogeneous"
//! c0_m_per_s = 1.0
//! rho0_kg_per_m3 = 1.0
//!
//! [initial]
//! kind = "gaussian"
//! width_m = 0.4
//!
//! [[schedule]]
//! dt_ms = 5.0
//! count = 900
//!
//! [output]
//! snapshot_times_s = [4.5]
//! ```

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Correction mode name; `full` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub grid: GridConfig,
    pub medium: MediumConfig,
    pub initial: InitialConfig,
    pub schedule: Vec<SegmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pml: Option<PmlSection>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub companion: Vec<CompanionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: u8,
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub dx_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy_m: Option<f64>,
    /// Centre of the first cell; the grid is centred on the origin by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_m: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CRefConfig {
    Explicit { value_m_per_s: f64 },
    Max,
    Min,
    /// Sound speed of a named region (e.g. `background`, `water`).
    Region { region: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub name: String,
    pub c0_m_per_s: f64,
    pub rho0_kg_per_m3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MediumConfig {
    Homogeneous {
        c0_m_per_s: f64,
        rho0_kg_per_m3: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_ref: Option<CRefConfig>,
    },
    HalfRing {
        inner_radius_m: f64,
        outer_radius_m: f64,
        c_inside_m_per_s: f64,
        c_background_m_per_s: f64,
        rho_background_kg_per_m3: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_m: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_ref: Option<CRefConfig>,
    },
    Phantom {
        /// Semi-axes (x, y) of the outer ellipse.
        outer_semi_axes_m: [f64; 2],
        inner_semi_axes_m: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_m: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner_center_m: Option<[f64; 2]>,
        /// Labels in order background, outer, inner.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<LabelConfig>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_ref: Option<CRefConfig>,
    },
    Raster {
        c0_file: String,
        rho0_file: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_ref: Option<CRefConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `amplitude * exp(-|x - center|^2 / width^2)`, zero velocity.
    Gaussian {
        width_m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_m: Option<[f64; 2]>,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        amplitude_pa: f64,
    },
    Raster { file: String },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// One schedule segment: exactly one of the `dt_*` keys and exactly one of
/// `count` / `until_*`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Absolute end time of the segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_us: Option<f64>,
}

impl SegmentConfig {
    pub fn ms_count(dt_ms: f64, count: usize) -> Self {
        Self {
            dt_ms: Some(dt_ms),
            count: Some(count),
            ..Self::default()
        }
    }

    pub fn ms_until(dt_ms: f64, until_s: f64) -> Self {
        Self {
            dt_ms: Some(dt_ms),
            until_s: Some(until_s),
            ..Self::default()
        }
    }

    pub fn ns_until_us(dt_ns: f64, until_us: f64) -> Self {
        Self {
            dt_ns: Some(dt_ns),
            until_us: Some(until_us),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlSection {
    pub thickness_cells: usize,
    /// Peak absorption in nepers per grid-crossing time `dx / c_ref`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_np_per_cell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times_s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanionConfig {
    pub label: String,
    /// `reference` (errors are measured against it) or `comparison`.
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub schedule: Vec<SegmentConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }
}
