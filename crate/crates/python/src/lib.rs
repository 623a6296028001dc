//! Python interface to the inventory-routing toolkit: instance generation,
//! model building and export, the exact solver and the oracle algorithms.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use irpkit::expkit::{verify_matrix, VerifyOptions};
use irpkit::formulations::{
    build_irp, build_tsp, build_wagner_whitin_milp, build_wagner_whitin_sp, decode_solution,
    FormulationSpec,
};
use irpkit::instance::{
    generate_design1, generate_design2, generate_verify_instance, DemandPattern, IrpInstance,
    PatternKind, ScenarioSpec,
};
use irpkit::milp::{Model as CoreModel, VarIndex};
use irpkit::oracles;
use irpkit::solver::{self, NodeSelection, SolverConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One IRP instance: warehouse, retailers, demands and costs.
#[pyclass(name = "Instance")]
struct PyInstance {
    inner: IrpInstance,
}

#[pymethods]
impl PyInstance {
    /// Random planar design: stationary per-retailer demand in [10,100],
    /// holding cost in [0.01,0.05], coordinates in [0,500]^2, K = 10, D = 0.
    #[staticmethod]
    fn design1(seed: u64, periods: usize, retailers: usize) -> PyResult<Self> {
        Ok(PyInstance { inner: generate_design1(seed, periods, retailers).map_err(value_err)? })
    }

    /// 16-retailer scenario design (scenario 1..=18); the seed drives the
    /// RAND demand pattern.
    #[staticmethod]
    fn design2(scenario: u8, seed: u64) -> PyResult<Self> {
        let spec = ScenarioSpec::new(scenario).map_err(value_err)?;
        Ok(PyInstance { inner: generate_design2(spec, seed).map_err(value_err)? })
    }

    /// Small random instances used for oracle cross-validation.
    #[staticmethod]
    fn random(seed: u64, retailers: usize, periods: usize) -> PyResult<Self> {
        Ok(PyInstance {
            inner: generate_verify_instance(seed, retailers, periods).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyInstance { inner: IrpInstance::load(path).map_err(value_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(value_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn num_retailers(&self) -> usize {
        self.inner.num_retailers
    }

    #[getter]
    fn num_periods(&self) -> usize {
        self.inner.num_periods
    }

    #[getter]
    fn demand(&self) -> Vec<Vec<u64>> {
        self.inner.demand.clone()
    }

    #[getter]
    fn dist(&self) -> Vec<Vec<f64>> {
        self.inner.dist.clone()
    }

    #[getter]
    fn holding(&self) -> Vec<f64> {
        self.inner.holding.clone()
    }

    #[getter]
    fn ordering(&self) -> Vec<f64> {
        self.inner.ordering.clone()
    }

    #[getter]
    fn dispatch(&self) -> f64 {
        self.inner.dispatch
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(name='{}', retailers={}, periods={})",
            self.inner.name, self.inner.num_retailers, self.inner.num_periods
        )
    }
}

/// A built MILP with its semantic variable index.
#[pyclass(name = "Model")]
struct PyModel {
    model: CoreModel,
    index: VarIndex,
    /// formulation name when built from an instance, for decoding
    formulation: Option<String>,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn name(&self) -> String {
        self.model.name.clone()
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.model.num_vars()
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.model.num_constraints()
    }

    #[getter]
    fn num_integer_vars(&self) -> usize {
        self.model.num_integer_vars()
    }

    /// Same model with all integrality dropped.
    fn relax(&self) -> PyModel {
        PyModel {
            model: self.model.lp_relaxation(),
            index: self.index.clone(),
            formulation: self.formulation.clone(),
        }
    }

    fn export_lp(&self, path: &str) -> PyResult<()> {
        self.model.export_lp(path).map_err(value_err)
    }

    fn export_mps(&self, path: &str) -> PyResult<()> {
        self.model.export_mps(path).map_err(value_err)
    }

    /// Variable name for a column id.
    fn var_name(&self, id: usize) -> PyResult<String> {
        if id >= self.model.num_vars() {
            return Err(value_err(format!("column {id} out of range")));
        }
        Ok(self.model.var(id).name.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(name='{}', vars={}, constraints={})",
            self.model.name,
            self.model.num_vars(),
            self.model.num_constraints()
        )
    }
}

#[pyclass(name = "MipResult")]
struct PyMipResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    objective: Option<f64>,
    #[pyo3(get)]
    bound: f64,
    #[pyo3(get)]
    gap_percent: f64,
    #[pyo3(get)]
    nodes: u64,
    #[pyo3(get)]
    wall_seconds: f64,
    #[pyo3(get)]
    solution: Option<Vec<f64>>,
}

#[pymethods]
impl PyMipResult {
    fn __repr__(&self) -> String {
        format!(
            "MipResult(status='{}', objective={:?}, bound={}, nodes={})",
            self.status, self.objective, self.bound, self.nodes
        )
    }
}

#[pyclass(name = "LpResult")]
struct PyLpResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    values: Vec<f64>,
    #[pyo3(get)]
    iterations: usize,
}

#[pyclass(name = "Plan")]
struct PyPlan {
    #[pyo3(get)]
    total_cost: f64,
    #[pyo3(get)]
    delta: Vec<Vec<bool>>,
    #[pyo3(get)]
    quantities: Vec<Vec<f64>>,
    #[pyo3(get)]
    routes: Vec<Vec<usize>>,
    #[pyo3(get)]
    routing: f64,
    #[pyo3(get)]
    ordering: f64,
    #[pyo3(get)]
    holding: f64,
    #[pyo3(get)]
    dispatch: f64,
}

impl From<oracles::PlanResult> for PyPlan {
    fn from(p: oracles::PlanResult) -> Self {
        PyPlan {
            total_cost: p.total_cost,
            delta: p.delta,
            quantities: p.quantities,
            routes: p.routes,
            routing: p.breakdown.routing,
            ordering: p.breakdown.ordering,
            holding: p.breakdown.holding,
            dispatch: p.breakdown.dispatch,
        }
    }
}

/// Builds the combined IRP model, e.g. `build(inst, "CMILP+SC")`.
#[pyfunction]
fn build(instance: &PyInstance, formulation: &str) -> PyResult<PyModel> {
    let spec = FormulationSpec::parse(formulation).map_err(value_err)?;
    let (model, index) = build_irp(&instance.inner, &spec).map_err(value_err)?;
    Ok(PyModel { model, index, formulation: Some(spec.to_string()) })
}

/// Builds a standalone tour model over a distance matrix, e.g.
/// `tsp_model(dist, "DL+NR+R+2P")`.
#[pyfunction]
fn tsp_model(dist: Vec<Vec<f64>>, variant: &str) -> PyResult<PyModel> {
    // reuse the formulation parser by prefixing a dummy inventory side
    let spec = FormulationSpec::parse(&format!("CMILP+{variant}")).map_err(value_err)?;
    let (model, index) = build_tsp(&dist, &spec.tsp).map_err(value_err)?;
    Ok(PyModel { model, index, formulation: None })
}

/// Builds a standalone lot-sizing model, `kind` is "CMILP" or "SP".
#[pyfunction]
#[pyo3(signature = (demand, k, h, v = 0.0, kind = "CMILP"))]
fn lot_sizing_model(demand: Vec<u64>, k: f64, h: f64, v: f64, kind: &str) -> PyResult<PyModel> {
    let built = match kind.to_ascii_uppercase().as_str() {
        "CMILP" => build_wagner_whitin_milp(&demand, k, h, v),
        "SP" => build_wagner_whitin_sp(&demand, k, h, v),
        other => return Err(value_err(format!("unknown lot-sizing kind `{other}`"))),
    };
    let (model, index) = built.map_err(value_err)?;
    Ok(PyModel { model, index, formulation: None })
}

fn config_from(time_limit: f64, node_limit: Option<u64>, depth_first: bool) -> SolverConfig {
    let mut cfg = SolverConfig::default().with_time_limit(Duration::from_secs_f64(time_limit));
    cfg.node_limit = node_limit;
    if depth_first {
        cfg.node_selection = NodeSelection::DepthFirst;
    }
    cfg
}

/// Branch-and-bound solve.
#[pyfunction]
#[pyo3(signature = (model, time_limit = 3600.0, node_limit = None, depth_first = false))]
fn solve_mip(
    model: &PyModel,
    time_limit: f64,
    node_limit: Option<u64>,
    depth_first: bool,
) -> PyResult<PyMipResult> {
    let res = solver::solve_mip(&model.model, &config_from(time_limit, node_limit, depth_first))
        .map_err(value_err)?;
    Ok(PyMipResult {
        status: res.status.as_str().to_string(),
        objective: res.incumbent,
        bound: res.bound,
        gap_percent: res.gap_percent,
        nodes: res.nodes,
        wall_seconds: res.wall_seconds,
        solution: res.solution,
    })
}

/// Simplex solve of a continuous model (relax first if needed).
#[pyfunction]
fn solve_lp(model: &PyModel) -> PyResult<PyLpResult> {
    let sol = solver::solve_lp(&model.model).map_err(value_err)?;
    Ok(PyLpResult {
        status: format!("{:?}", sol.status).to_lowercase(),
        objective: sol.objective,
        values: sol.values,
        iterations: sol.iterations,
    })
}

/// Builds, solves and decodes one instance/formulation pair; returns
/// (result, plan or None).
#[pyfunction]
#[pyo3(signature = (instance, formulation, time_limit = 3600.0))]
fn solve_irp(
    instance: &PyInstance,
    formulation: &str,
    time_limit: f64,
) -> PyResult<(PyMipResult, Option<PyPlan>)> {
    let spec = FormulationSpec::parse(formulation).map_err(value_err)?;
    let (model, index) = build_irp(&instance.inner, &spec).map_err(value_err)?;
    let res = solver::solve_mip(&model, &config_from(time_limit, None, false)).map_err(value_err)?;
    let plan = match &res.solution {
        Some(values) => Some(
            decode_solution(&instance.inner, &spec, &index, values)
                .map(PyPlan::from)
                .map_err(value_err)?,
        ),
        None => None,
    };
    Ok((
        PyMipResult {
            status: res.status.as_str().to_string(),
            objective: res.incumbent,
            bound: res.bound,
            gap_percent: res.gap_percent,
            nodes: res.nodes,
            wall_seconds: res.wall_seconds,
            solution: res.solution,
        },
        plan,
    ))
}

/// Relative MIP gap in percent.
#[pyfunction]
fn compute_gap(incumbent: f64, bound: f64) -> f64 {
    solver::compute_gap(incumbent, bound)
}

/// LP-relaxation gap of a model against a known MIP optimum, in percent.
#[pyfunction]
fn lp_gap(model: &PyModel, mip_optimum: f64) -> PyResult<f64> {
    solver::lp_gap(&model.model, mip_optimum).map_err(value_err)
}

/// Exact lot-sizing optimum; returns (cost, order_periods).
#[pyfunction]
#[pyo3(signature = (demand, k, h, v = 0.0))]
fn wagner_whitin(demand: Vec<u64>, k: f64, h: f64, v: f64) -> PyResult<(f64, Vec<usize>)> {
    let plan = oracles::wagner_whitin_dp(&demand, k, h, v).map_err(value_err)?;
    Ok((plan.cost, plan.order_periods))
}

/// Exact tour over a distance matrix (2..=18 nodes); returns (cost, order).
#[pyfunction]
fn held_karp(dist: Vec<Vec<f64>>) -> PyResult<(f64, Vec<usize>)> {
    let tour = oracles::held_karp_tsp(&dist).map_err(value_err)?;
    Ok((tour.cost, tour.order))
}

/// Exhaustive IRP optimum for small instances (r*N <= 16).
#[pyfunction]
fn brute_force(instance: &PyInstance) -> PyResult<PyPlan> {
    oracles::brute_force_irp(&instance.inner).map(PyPlan::from).map_err(value_err)
}

/// Demand-pattern series, kind in {STA, LCY1, LCY2, SIN1, SIN2, RAND}.
#[pyfunction]
#[pyo3(signature = (kind, periods, level = 100.0, amplitude = 50.0, seed = 0))]
fn pattern(kind: &str, periods: usize, level: f64, amplitude: f64, seed: u64) -> PyResult<Vec<u64>> {
    let kind = PatternKind::parse(kind).map_err(value_err)?;
    DemandPattern::new(kind)
        .with_level(level)
        .with_amplitude(amplitude)
        .with_seed(seed)
        .generate(periods)
        .map_err(value_err)
}

/// Cross-validates all formulations against the brute-force oracle on small
/// random instances; returns (all_ok, max_rel_err, rows_checked).
#[pyfunction]
#[pyo3(signature = (max_r = 3, max_n = 2, count = 5, bektas = false, time_limit = 120.0))]
fn verify(
    max_r: usize,
    max_n: usize,
    count: usize,
    bektas: bool,
    time_limit: f64,
) -> PyResult<(bool, f64, usize)> {
    let report = verify_matrix(&VerifyOptions {
        max_r,
        max_n,
        count,
        base_seed: 1,
        time_limit: Duration::from_secs_f64(time_limit),
        include_bektas: bektas,
        parallel: true,
    })
    .map_err(value_err)?;
    Ok((report.all_ok(), report.max_rel_err(), report.rows.len()))
}

#[pymodule]
fn irpkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyMipResult>()?;
    m.add_class::<PyLpResult>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add_function(wrap_pyfunction!(tsp_model, m)?)?;
    m.add_function(wrap_pyfunction!(lot_sizing_model, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mip, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_irp, m)?)?;
    m.add_function(wrap_pyfunction!(compute_gap, m)?)?;
    m.add_function(wrap_pyfunction!(lp_gap, m)?)?;
    m.add_function(wrap_pyfunction!(wagner_whitin, m)?)?;
    m.add_function(wrap_pyfunction!(held_karp, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(pattern, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
