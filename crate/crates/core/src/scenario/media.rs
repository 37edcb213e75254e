//! Geometric media: the half ring and the labelled two-ellipse phantom.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Medium};

/// Upper half (`y >= center_y`) of an annulus with reduced sound speed.
/// Density inside is scaled so `c0^2 rho0` matches the background.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfRingMedium {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub c_inside: f64,
    pub c_background: f64,
    pub rho_background: f64,
    pub center: [f64; 2],
}

impl HalfRingMedium {
    pub fn validate(&self) -> Result<()> {
        let ok = self.inner_radius >= 0.0
            && self.outer_radius > self.inner_radius
            && self.c_inside > 0.0
            && self.c_background > 0.0
            && self.rho_background > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMedium(format!("invalid half ring {self:?}")))
        }
    }

    pub fn rho_inside(&self) -> f64 {
        self.rho_background * self.c_background * self.c_background / (self.c_inside * self.c_inside)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let r = dx.hypot(dy);
        dy >= 0.0 && r >= self.inner_radius && r <= self.outer_radius
    }

    pub fn region_mask(&self, grid: &Grid) -> Array2<bool> {
        Array2::from_shape_fn(grid.shape(), |(i, j)| self.contains(grid.x(i), grid.y(j)))
    }

    /// Sound speed of a named region: `background` or `ring`.
    pub fn region_speed(&self, name: &str) -> Option<f64> {
        match name {
            "background" => Some(self.c_background),
            "ring" | "inside" => Some(self.c_inside),
            _ => None,
        }
    }

    pub fn build(&self, grid: &Grid, c_ref: f64) -> Result<Medium> {
        self.validate()?;
        if grid.dims() != 2 {
            return Err(Error::InvalidMedium("the half ring needs a 2D grid".into()));
        }
        let mask = self.region_mask(grid);
        let c0 = mask.mapv(|m| if m { self.c_inside } else { self.c_background });
        let rho_in = self.rho_inside();
        let rho0 = mask.mapv(|m| if m { rho_in } else { self.rho_background });
        Medium::new(c0, rho0, c_ref)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TissueLabel {
    pub name: String,
    pub c0: f64,
    pub rho0: f64,
}

impl TissueLabel {
    pub fn new(name: &str, c0: f64, rho0: f64) -> Self {
        Self {
            name: name.to_string(),
            c0,
            rho0,
        }
    }
}

/// Water, a fatty outer shell and a denser inner core.
pub fn default_phantom_labels() -> Vec<TissueLabel> {
    vec![
        TissueLabel::new("water", 1500.0, 1000.0),
        TissueLabel::new("fat", 1470.0, 950.0),
        TissueLabel::new("gland", 1500.0, 1040.0),
    ]
}

/// Labelled raster; label 0 is the surrounding water.
#[derive(Debug, Clone)]
pub struct PhantomMedium {
    pub labels: Array2<u8>,
    pub table: Vec<TissueLabel>,
}

impl PhantomMedium {
    pub fn from_labels(labels: Array2<u8>, table: Vec<TissueLabel>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidMedium("phantom label table is empty".into()));
        }
        for t in &table {
            if !(t.c0 > 0.0 && t.rho0 > 0.0) {
                return Err(Error::InvalidMedium(format!("label `{}` needs positive c0 and rho0", t.name)));
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= table.len()) {
            return Err(Error::InvalidMedium(format!("label {bad} has no table entry")));
        }
        let m = Self { labels, table };
        m.check_water_border()?;
        Ok(m)
    }

    /// Two nested ellipses on `grid`: label 1 inside `outer`, label 2 inside
    /// `inner`, water elsewhere.
    pub fn two_ellipse(
        grid: &Grid,
        outer_axes: [f64; 2],
        inner_axes: [f64; 2],
        center: [f64; 2],
        inner_center: [f64; 2],
        table: Vec<TissueLabel>,
    ) -> Result<Self> {
        if grid.dims() != 2 {
            return Err(Error::InvalidMedium("the phantom needs a 2D grid".into()));
        }
        if table.len() < 3 {
            return Err(Error::InvalidMedium("the two-ellipse phantom needs three labels".into()));
        }
        if outer_axes.iter().chain(&inner_axes).any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidMedium("ellipse semi-axes must be positive".into()));
        }
        let inside = |x: f64, y: f64, c: [f64; 2], a: [f64; 2]| {
            ((x - c[0]) / a[0]).powi(2) + ((y - c[1]) / a[1]).powi(2) <= 1.0
        };
        let labels = Array2::from_shape_fn(grid.shape(), |(i, j)| {
            let (x, y) = (grid.x(i), grid.y(j));
            if inside(x, y, inner_center, inner_axes) {
                2
            } else if inside(x, y, center, outer_axes) {
                1
            } else {
                0
            }
        });
        Self::from_labels(labels, table)
    }

    fn check_water_border(&self) -> Result<()> {
        let (nx, ny) = self.labels.dim();
        let border = |i: usize, j: usize| i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
        if self
            .labels
            .indexed_iter()
            .any(|((i, j), &l)| border(i, j) && l != 0)
        {
            return Err(Error::InvalidMedium("phantom touches the grid border".into()));
        }
        // water must be one connected region
        let mut seen = Array2::from_elem((nx, ny), false);
        let mut queue = VecDeque::from([(0usize, 0usize)]);
        seen[[0, 0]] = true;
        let mut count = 0usize;
        while let Some((i, j)) = queue.pop_front() {
            count += 1;
            let nbrs = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (a, b) in nbrs {
                if a < nx && b < ny && !seen[[a, b]] && self.labels[[a, b]] == 0 {
                    seen[[a, b]] = true;
                    queue.push_back((a, b));
                }
            }
        }
        let water = self.labels.iter().filter(|&&l| l == 0).count();
        if count != water {
            return Err(Error::InvalidMedium("water region is not connected".into()));
        }
        Ok(())
    }

    pub fn region_mask(&self) -> Array2<bool> {
        self.labels.mapv(|l| l != 0)
    }

    pub fn region_speed(&self, name: &str) -> Option<f64> {
        self.table.iter().find(|t| t.name == name).map(|t| t.c0)
    }

    pub fn build(&self, c_ref: f64) -> Result<Medium> {
        let c0: Field = self.labels.mapv(|l| self.table[l as usize].c0);
        let rho0: Field = self.labels.mapv(|l| self.table[l as usize].rho0);
        Medium::new(c0, rho0, c_ref)
    }
}
