//! Snapshot files.
//!
//! Binary layout (all little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 16   | magic `KSNUT001` padded with zero bytes   |
//! | 16     | 4    | `u32` dims (1 or 2)                       |
//! | 20     | 4    | `u32` nx                                  |
//! | 24     | 4    | `u32` ny (1 for 1D)                       |
//! | 28     | 4    | `u32` field kind (see [`FieldKind`])      |
//! | 32     | 8    | `f64` dx (m)                              |
//! | 40     | 8    | `f64` dy (m, equals dx in 1D)             |
//! | 48     | 8    | `f64` t (s)                               |
//! | 56     | 8·nx·ny | `f64` values, row-major: index `i * ny + j` |
//!
//! The CSV export has the header `x,y,value` and one row per cell in the same
//! order, with cell-centre coordinates (`y = 0` in 1D).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const MAGIC: [u8; 16] = *b"KSNUT001\0\0\0\0\0\0\0\0";
pub const HEADER_LEN: usize = 56;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Pressure = 0,
    VelocityX = 1,
    VelocityY = 2,
    SoundSpeed = 3,
    Density = 4,
    Error = 5,
    Other = 6,
}

impl FieldKind {
    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => FieldKind::Pressure,
            1 => FieldKind::VelocityX,
            2 => FieldKind::VelocityY,
            3 => FieldKind::SoundSpeed,
            4 => FieldKind::Density,
            5 => FieldKind::Error,
            6 => FieldKind::Other,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Pressure => "p",
            FieldKind::VelocityX => "ux",
            FieldKind::VelocityY => "uy",
            FieldKind::SoundSpeed => "c0",
            FieldKind::Density => "rho0",
            FieldKind::Error => "error",
            FieldKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub dims: u32,
    pub nx: u32,
    pub ny: u32,
    pub dx: f64,
    pub dy: f64,
    pub t: f64,
    pub kind: FieldKind,
}

impl SnapshotMeta {
    pub fn for_grid(grid: &Grid, t: f64, kind: FieldKind) -> Self {
        Self {
            dims: grid.dims() as u32,
            nx: grid.nx() as u32,
            ny: grid.ny() as u32,
            dx: grid.dx(),
            dy: grid.dy(),
            t,
            kind,
        }
    }

    /// Grid implied by the header (centred on the origin).
    pub fn grid(&self) -> Result<Grid> {
        if self.dims == 1 {
            Grid::new_1d(self.nx as usize, self.dx)
        } else {
            Grid::new_2d(self.nx as usize, self.ny as usize, self.dx, self.dy)
        }
    }
}

pub fn encode_snapshot(field: &Field, meta: &SnapshotMeta) -> Result<Vec<u8>> {
    if field.dim() != (meta.nx as usize, meta.ny as usize) {
        return Err(Error::ShapeMismatch {
            expected: (meta.nx as usize, meta.ny as usize),
            found: field.dim(),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.len());
    out.extend_from_slice(&MAGIC);
    for v in [meta.dims, meta.nx, meta.ny, meta.kind.code()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [meta.dx, meta.dy, meta.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    // iter() walks in logical (row-major) order whatever the memory layout
    for v in field.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(Field, SnapshotMeta)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_error(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    if bytes[..16] != MAGIC {
        return Err(format_error(path, "bad magic, not a snapshot file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let (dims, nx, ny, code) = (u32_at(16), u32_at(20), u32_at(24), u32_at(28));
    let kind = FieldKind::from_code(code)
        .ok_or_else(|| format_error(path, format!("unknown field kind {code}")))?;
    if !(dims == 1 || dims == 2) || (dims == 1 && ny != 1) {
        return Err(format_error(path, format!("inconsistent dims {dims} with ny {ny}")));
    }
    let n = nx as usize * ny as usize;
    let expected = HEADER_LEN + 8 * n;
    if bytes.len() != expected {
        return Err(format_error(
            path,
            format!("payload has {} bytes, expected {}", bytes.len() - HEADER_LEN, 8 * n),
        ));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = Field::from_shape_vec((nx as usize, ny as usize), values)
        .map_err(|e| format_error(path, e.to_string()))?;
    let meta = SnapshotMeta {
        dims,
        nx,
        ny,
        dx: f64_at(32),
        dy: f64_at(40),
        t: f64_at(48),
        kind,
    };
    Ok((field, meta))
}

pub fn write_snapshot(field: &Field, meta: &SnapshotMeta, path: &Path) -> Result<()> {
    let bytes = encode_snapshot(field, meta)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(Field, SnapshotMeta)> {
    let bytes = fs::read(path)?;
    decode_snapshot(&bytes, path)
}

/// CSV text for `field` on `grid`; floats use shortest round-trip formatting.
pub fn csv_string(field: &Field, grid: &Grid) -> Result<String> {
    grid.check_shape(field)?;
    let mut out = String::with_capacity(32 * field.len() + 16);
    out.push_str("x,y,value\n");
    for ((i, j), v) in field.indexed_iter() {
        let y = if grid.dims() == 2 { grid.y(j) } else { 0.0 };
        out.push_str(&format!("{:?},{:?},{:?}\n", grid.x(i), y, v));
    }
    Ok(out)
}

pub fn write_csv(field: &Field, grid: &Grid, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(csv_string(field, grid)?.as_bytes())?;
    Ok(())
}

/// Rows `(x, y, value)` of a CSV export.
pub fn read_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x,y,value") => {}
        other => return Err(format_error(path, format!("bad CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 3 {
                return Err(format_error(path, format!("row {}: expected 3 columns", n + 1)));
            }
            let mut row = [0.0; 3];
            for (slot, c) in row.iter_mut().zip(cols) {
                *slot = c
                    .trim()
                    .parse()
                    .map_err(|e| format_error(path, format!("row {}: {e}", n + 1)))?;
            }
            Ok(row)
        })
        .collect()
}
