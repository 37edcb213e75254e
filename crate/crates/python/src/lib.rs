//! Python bindings.
//!
//! Fields cross the boundary as nested lists indexed `[i][j]` (shape `nx` by
//! `ny`, `ny == 1` in 1D); `numpy.asarray` turns them into arrays.

use std::path::PathBuf;

use engine::grid::build_wavevectors;
use engine::scenario::snapshot::{self, FieldKind, SnapshotMeta};
use engine::scenario::{self as sc, presets};
use engine::{CorrectionMode, Error, Field, PmlConfig, Segment};
use ndarray::Array2;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;

fn err(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_rows(f: &Field) -> Rows {
    f.outer_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Rows) -> PyResult<Field> {
    let nx = rows.len();
    let ny = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ny) {
        return Err(PyValueError::new_err("ragged field rows"));
    }
    Array2::from_shape_vec((nx, ny), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_mode(mode: &str) -> PyResult<CorrectionMode> {
    mode.parse().map_err(err)
}

#[pyclass(module = "ksnut", frozen, from_py_object)]
#[derive(Clone)]
struct Grid(engine::Grid);

#[pymethods]
impl Grid {
    /// 1D grid when `ny` is omitted; `dy` defaults to `dx`.
    #[new]
    #[pyo3(signature = (nx, dx, ny=None, dy=None))]
    fn new(nx: usize, dx: f64, ny: Option<usize>, dy: Option<f64>) -> PyResult<Self> {
        let g = match ny {
            None => engine::Grid::new_1d(nx, dx),
            Some(ny) => engine::Grid::new_2d(nx, ny, dx, dy.unwrap_or(dx)),
        };
        g.map(Grid).map_err(err)
    }

    #[getter]
    fn dims(&self) -> usize {
        self.0.dims()
    }
    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }
    #[getter]
    fn dy(&self) -> f64 {
        self.0.dy()
    }

    fn x(&self) -> Vec<f64> {
        (0..self.0.nx()).map(|i| self.0.x(i)).collect()
    }

    fn y(&self) -> Vec<f64> {
        (0..self.0.ny()).map(|j| self.0.y(j)).collect()
    }

    /// Isotropic Gaussian `amplitude * exp(-r^2 / width^2)`.
    #[pyo3(signature = (width, center=(0.0, 0.0), amplitude=1.0))]
    fn gaussian(&self, width: f64, center: (f64, f64), amplitude: f64) -> Rows {
        let f = self.0.sample(|x, y| {
            let (dx, dy) = (x - center.0, if self.0.dims() == 2 { y - center.1 } else { 0.0 });
            amplitude * (-(dx * dx + dy * dy) / (width * width)).exp()
        });
        to_rows(&f)
    }

    fn max_stable_step(&self, c_ref: f64) -> f64 {
        engine::kspace::max_stable_step(build_wavevectors(&self.0).kmax(), c_ref)
    }

    fn __repr__(&self) -> String {
        let (nx, ny) = self.0.shape();
        format!("Grid(dims={}, shape=({nx}, {ny}), dx={}, dy={})", self.0.dims(), self.0.dx(), self.0.dy())
    }
}

#[pyclass(module = "ksnut", frozen, from_py_object)]
#[derive(Clone)]
struct Medium(engine::Medium);

#[pymethods]
impl Medium {
    #[new]
    fn new(c0: Rows, rho0: Rows, c_ref: f64) -> PyResult<Self> {
        engine::Medium::new(from_rows(c0)?, from_rows(rho0)?, c_ref).map(Medium).map_err(err)
    }

    #[staticmethod]
    fn homogeneous(grid: &Grid, c0: f64, rho0: f64) -> PyResult<Self> {
        engine::Medium::homogeneous(&grid.0, c0, rho0).map(Medium).map_err(err)
    }

    #[getter]
    fn c_ref(&self) -> f64 {
        self.0.c_ref
    }

    fn is_homogeneous(&self) -> bool {
        self.0.is_homogeneous()
    }
}

#[pyclass(module = "ksnut", frozen, from_py_object)]
#[derive(Clone)]
struct StepSchedule(engine::StepSchedule);

#[pymethods]
impl StepSchedule {
    /// Segments as `(dt, count)` pairs.
    #[new]
    fn new(segments: Vec<(f64, usize)>) -> PyResult<Self> {
        let segs = segments.into_iter().map(|(dt, count)| Segment { dt, count }).collect();
        engine::StepSchedule::new(segs).map(StepSchedule).map_err(err)
    }

    #[staticmethod]
    fn uniform(dt: f64, count: usize) -> PyResult<Self> {
        engine::StepSchedule::uniform(dt, count).map(StepSchedule).map_err(err)
    }

    #[getter]
    fn segments(&self) -> Vec<(f64, usize)> {
        self.0.segments().iter().map(|s| (s.dt, s.count)).collect()
    }
    #[getter]
    fn total_steps(&self) -> usize {
        self.0.total_steps()
    }
    #[getter]
    fn total_time(&self) -> f64 {
        self.0.total_time()
    }

    fn time_levels(&self) -> Vec<f64> {
        self.0.time_levels()
    }

    fn level_of(&self, t: f64) -> PyResult<usize> {
        self.0.level_of(t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("StepSchedule({:?})", self.segments())
    }
}

#[pyclass(module = "ksnut", get_all, frozen)]
struct RunResult {
    /// Final pressure.
    p: Rows,
    /// Velocity components on the final pressure time level.
    u: Vec<Rows>,
    time: f64,
    steps: usize,
    kernel_builds: usize,
    /// `(time, step, p)` per requested snapshot.
    snapshots: Vec<(f64, usize, Rows)>,
    warnings: Vec<String>,
}

#[pyclass(module = "ksnut", unsendable)]
struct Solver(engine::Solver);

#[pymethods]
impl Solver {
    /// `pml_thickness = 0` disables the absorbing layer.
    #[new]
    #[pyo3(signature = (grid, medium, mode="full", pml_thickness=0, pml_alpha=2.0))]
    fn new(grid: &Grid, medium: &Medium, mode: &str, pml_thickness: usize, pml_alpha: f64) -> PyResult<Self> {
        let pml = if pml_thickness == 0 {
            PmlConfig::disabled()
        } else {
            PmlConfig::from_alpha(pml_thickness, pml_alpha, medium.0.c_ref, grid.0.dx().min(grid.0.dy()))
        };
        engine::Solver::new(grid.0.clone(), medium.0.clone(), parse_mode(mode)?, pml)
            .map(Solver)
            .map_err(err)
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode().name()
    }

    #[pyo3(signature = (p0, schedule, u0=None, snapshot_times=Vec::new()))]
    fn run(
        &mut self,
        py: Python<'_>,
        p0: Rows,
        schedule: &StepSchedule,
        u0: Option<Vec<Rows>>,
        snapshot_times: Vec<f64>,
    ) -> PyResult<RunResult> {
        let p0 = from_rows(p0)?;
        let u0 = match u0 {
            Some(u) => u.into_iter().map(from_rows).collect::<PyResult<Vec<_>>>()?,
            None => self.0.grid().velocity_zeros(),
        };
        let sched = schedule.0.clone();
        let solver = &mut self.0;
        let out = py
            .detach(|| solver.run(p0, u0, &sched, &snapshot_times))
            .map_err(err)?;
        Ok(RunResult {
            p: to_rows(&out.final_state.p),
            u: out.final_velocity.iter().map(to_rows).collect(),
            time: sched.total_time(),
            steps: out.steps,
            kernel_builds: out.kernel_builds,
            snapshots: out.snapshots.iter().map(|s| (s.time, s.step, to_rows(&s.p))).collect(),
            warnings: out.warnings,
        })
    }
}

/// Exact pressure at time `t` in a homogeneous medium without PML.
#[pyfunction]
#[pyo3(signature = (p0, medium, grid, t, u0=None))]
fn exact_pressure(p0: Rows, medium: &Medium, grid: &Grid, t: f64, u0: Option<Vec<Rows>>) -> PyResult<Rows> {
    let p0 = from_rows(p0)?;
    let wv = build_wavevectors(&grid.0);
    let u0 = match u0 {
        Some(u) => u.into_iter().map(from_rows).collect::<PyResult<Vec<_>>>()?,
        None => grid.0.velocity_zeros(),
    };
    let (p, _) = engine::oracle::spectral_propagator(&p0, &u0, &medium.0, &wv, t).map_err(err)?;
    Ok(to_rows(&p))
}

/// Error metrics of `num` against `reference`.
#[pyfunction]
fn compare<'py>(py: Python<'py>, num: Rows, reference: Rows) -> PyResult<Bound<'py, PyDict>> {
    let r = engine::oracle::compare(&from_rows(num)?, &from_rows(reference)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("linf_abs", r.linf_abs)?;
    d.set_item("linf_rel", r.linf_rel)?;
    d.set_item("l2_rel", r.l2_rel)?;
    d.set_item("pointwise_abs", to_rows(&r.pointwise_abs))?;
    d.set_item("pointwise_rel_log10", to_rows(&r.pointwise_rel_log10))?;
    Ok(d)
}

/// `(kappa1, kappa2)` for a step change `dt1 -> dt2`.
#[pyfunction]
fn correction_kernels(grid: &Grid, c_ref: f64, dt1: f64, dt2: f64) -> PyResult<(Rows, Rows)> {
    let k = engine::kspace::kappa12_staggered(&build_wavevectors(&grid.0), c_ref, dt1, dt2).map_err(err)?;
    Ok((to_rows(&k.kappa1), to_rows(&k.kappa2)))
}

#[pyclass(module = "ksnut", frozen)]
struct Scenario(sc::Scenario);

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        sc::load_scenario(&path).map(Scenario).map_err(err)
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        presets::preset(name).map(Scenario).map_err(err)
    }

    #[staticmethod]
    fn preset_names() -> Vec<&'static str> {
        presets::PRESET_NAMES.to_vec()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }
    #[getter]
    fn grid(&self) -> Grid {
        Grid(self.0.grid.clone())
    }
    #[getter]
    fn medium(&self) -> Medium {
        Medium(self.0.medium.clone())
    }
    #[getter]
    fn schedule(&self) -> StepSchedule {
        StepSchedule(self.0.schedule.clone())
    }
    #[getter]
    fn p0(&self) -> Rows {
        to_rows(&self.0.p0)
    }
    #[getter]
    fn snapshot_times(&self) -> Vec<f64> {
        self.0.snapshot_times.clone()
    }

    /// Labels of all runs, main first.
    fn labels(&self) -> Vec<String> {
        self.0.runs().into_iter().map(|r| r.0).collect()
    }

    /// Runs every schedule; returns the summary rows as dicts. With `out`,
    /// snapshots and `summary.csv` are written there.
    #[pyo3(signature = (out=None, csv=false))]
    fn run<'py>(&self, py: Python<'py>, out: Option<PathBuf>, csv: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let scenario = &self.0;
        let result = py.detach(|| sc::run_scenario(scenario)).map_err(err)?;
        if let Some(dir) = out {
            sc::write_outputs(scenario, &result, &dir, csv).map_err(err)?;
        }
        result
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("label", &r.label)?;
                d.set_item("mode", r.mode.name())?;
                d.set_item("steps", r.steps)?;
                d.set_item("time", r.time)?;
                d.set_item("reference", &r.reference)?;
                d.set_item("linf_abs", r.linf_abs)?;
                d.set_item("linf_rel", r.linf_rel)?;
                d.set_item("l2_rel", r.l2_rel)?;
                d.set_item("linf_interior", r.linf_interior)?;
                d.set_item("linf_outside_region", r.linf_outside_region)?;
                d.set_item("linf_inside_region", r.linf_inside_region)?;
                Ok(d)
            })
            .collect()
    }
}

/// Reads a snapshot file; returns `(field, meta)`.
#[pyfunction]
fn read_snapshot<'py>(py: Python<'py>, path: PathBuf) -> PyResult<(Rows, Bound<'py, PyDict>)> {
    let (f, m) = snapshot::read_snapshot(&path).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("dims", m.dims)?;
    d.set_item("nx", m.nx)?;
    d.set_item("ny", m.ny)?;
    d.set_item("dx", m.dx)?;
    d.set_item("dy", m.dy)?;
    d.set_item("t", m.t)?;
    d.set_item("kind", m.kind.name())?;
    Ok((to_rows(&f), d))
}

#[pyfunction]
#[pyo3(signature = (path, field, grid, t=0.0, kind=0))]
fn write_snapshot(path: PathBuf, field: Rows, grid: &Grid, t: f64, kind: u32) -> PyResult<()> {
    let kind = FieldKind::from_code(kind).ok_or_else(|| PyValueError::new_err(format!("unknown field kind {kind}")))?;
    snapshot::write_snapshot(&from_rows(field)?, &SnapshotMeta::for_grid(&grid.0, t, kind), &path).map_err(err)
}

#[pyfunction]
fn write_csv(path: PathBuf, field: Rows, grid: &Grid) -> PyResult<()> {
    snapshot::write_csv(&from_rows(field)?, &grid.0, &path).map_err(err)
}

#[pymodule]
fn ksnut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Medium>()?;
    m.add_class::<StepSchedule>()?;
    m.add_class::<Solver>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(exact_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(correction_kernels, m)?)?;
    m.add_function(wrap_pyfunction!(read_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(write_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(write_csv, m)?)?;
    m.add("MODES", CorrectionMode::ALL.iter().map(|m| m.name()).collect::<Vec<_>>())?;
    Ok(())
}
