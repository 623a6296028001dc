//! Self-contained LP and MILP solver.
//!
//! The LP core is a bounded-variable two-phase revised simplex with an
//! explicit dense basis inverse, Dantzig pricing and a Bland's-rule fallback
//! against stalling. The MILP layer is plain branch and bound over LP
//! relaxations: best-bound (or depth-first) node selection, most-fractional
//! branching, deterministic tie-breaking throughout. No cuts, no presolve —
//! formulation strength is the thing being measured, the solver stays fixed.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::milp::{Model, Relation};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("model has integer variables; take the LP relaxation first")]
    NotContinuous,
    #[error("LP relaxation is unbounded")]
    UnboundedRelaxation,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// LP solve outcome. `objective` is +inf for infeasible and -inf for
/// unbounded models; `values` cover the structural variables in id order.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRule {
    /// Fractional variable closest to one half, ties to the lowest id.
    MostFractional,
    /// Lowest-id fractional variable.
    FirstFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSelection {
    /// Node with the smallest inherited bound first (ties to the oldest
    /// node), with a plunge after every branching: the child nearer the LP
    /// value is processed immediately until its line is fathomed, so
    /// incumbents show up early.
    BestBound,
    /// Strict smallest-bound order, no plunging.
    PureBestBound,
    /// Stack order.
    DepthFirst,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub time_limit: Duration,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Relative gap (fraction, not percent) at which a solve counts as optimal.
    pub rel_gap_tol: f64,
    pub node_limit: Option<u64>,
    pub branching: BranchRule,
    pub node_selection: NodeSelection,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: Duration::from_secs(3600),
            feasibility_tol: 1e-6,
            integrality_tol: 1e-6,
            rel_gap_tol: 1e-6,
            node_limit: None,
            branching: BranchRule::MostFractional,
            node_selection: NodeSelection::BestBound,
        }
    }
}

impl SolverConfig {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.feasibility_tol <= 0.0 || self.integrality_tol <= 0.0 || self.rel_gap_tol <= 0.0 {
            return Err(SolverError::BadConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
    Infeasible,
}

impl MipStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MipStatus::Optimal => "optimal",
            MipStatus::TimeLimit => "time_limit",
            MipStatus::NodeLimit => "node_limit",
            MipStatus::Infeasible => "infeasible",
        }
    }
}

/// Branch-and-bound outcome: incumbent, proven dual bound, relative gap in
/// percent (infinite when no incumbent exists) and search statistics.
#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<f64>,
    pub bound: f64,
    pub gap_percent: f64,
    pub nodes: u64,
    pub wall_seconds: f64,
    pub solution: Option<Vec<f64>>,
}

/// One line of the branch-and-bound trace.
#[derive(Debug, Clone, Copy)]
pub struct NodeEvent {
    pub node: u64,
    pub depth: u32,
    pub lp_objective: Option<f64>,
    pub global_bound: f64,
    pub incumbent: Option<f64>,
}

/// Relative optimality gap in percent: 100 (incumbent - bound) / |incumbent|,
/// zero when the bound has closed (or both are zero).
pub fn compute_gap(incumbent: f64, bound: f64) -> f64 {
    const TOL: f64 = 1e-9;
    if incumbent == 0.0 && bound == 0.0 {
        return 0.0;
    }
    if bound >= incumbent - TOL {
        return 0.0;
    }
    (100.0 * (incumbent - bound)) / incumbent.abs()
}

/// LP-relaxation gap in percent against a known MIP optimum:
/// 100 (mip - lp) / mip.
pub fn lp_gap(model: &Model, mip_optimum: f64) -> Result<f64, SolverError> {
    let lp = solve_lp(&model.lp_relaxation())?;
    if lp.status != LpStatus::Optimal {
        return Err(SolverError::Numerical(format!(
            "LP relaxation not optimal: {:?}",
            lp.status
        )));
    }
    if mip_optimum.abs() < 1e-12 {
        return Ok(if lp.objective.abs() < 1e-9 { 0.0 } else { f64::INFINITY });
    }
    Ok(100.0 * (mip_optimum - lp.objective) / mip_optimum)
}

// ---------------------------------------------------------------------------
// Simplex
// ---------------------------------------------------------------------------

const DTOL: f64 = 1e-7; // reduced-cost tolerance
const PTOL: f64 = 1e-9; // pivot / ratio tolerance
const REFACTOR_EVERY: usize = 100;
const MAX_ITERS: usize = 200_000;

/// A model translated once into computational form; branch-and-bound solves
/// it repeatedly under different structural bounds.
pub(crate) struct LpEngine {
    nstruct: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    logical_lo: Vec<f64>,
    logical_hi: Vec<f64>,
}

impl LpEngine {
    pub fn new(model: &Model) -> Self {
        let nstruct = model.num_vars();
        let m = model.num_constraints();
        let mut cols = vec![Vec::new(); nstruct];
        let mut rhs = Vec::with_capacity(m);
        let mut logical_lo = Vec::with_capacity(m);
        let mut logical_hi = Vec::with_capacity(m);
        for (row, c) in model.constraints().iter().enumerate() {
            for &(v, coef) in &c.terms {
                cols[v].push((row, coef));
            }
            rhs.push(c.rhs);
            let (lo, hi) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            logical_lo.push(lo);
            logical_hi.push(hi);
        }
        let mut obj = vec![0.0; nstruct];
        for &(v, c) in model.objective() {
            obj[v] = c;
        }
        LpEngine { nstruct, m, cols, obj, rhs, logical_lo, logical_hi }
    }

    pub fn model_bounds(model: &Model) -> (Vec<f64>, Vec<f64>) {
        let lo = model.vars().iter().map(|v| v.lo).collect();
        let hi = model.vars().iter().map(|v| v.hi).collect();
        (lo, hi)
    }

    /// Solves under the given structural bounds, retrying once with Bland's
    /// rule from scratch if the default pricing runs into trouble.
    pub fn solve(&self, lo: &[f64], hi: &[f64]) -> Result<LpSolution, SolverError> {
        match self.run(lo, hi, false) {
            Ok(s) => Ok(s),
            Err(_) => self.run(lo, hi, true),
        }
    }

    fn run(&self, lo: &[f64], hi: &[f64], always_bland: bool) -> Result<LpSolution, SolverError> {
        let mut s = SimplexState::new(self, lo, hi, always_bland);
        s.crash();
        if s.has_artificials() {
            s.phase = 1;
            s.iterate()?;
            if s.infeasibility() > 1e-7 * (1.0 + s.rhs_scale) {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: f64::INFINITY,
                    values: Vec::new(),
                    iterations: s.iters,
                });
            }
            s.drive_out_artificials();
            s.fix_artificials();
        }
        s.phase = 2;
        let unbounded = s.iterate()?;
        if unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: f64::NEG_INFINITY,
                values: Vec::new(),
                iterations: s.iters,
            });
        }
        s.postcheck()?;
        let values: Vec<f64> = s.x[..self.nstruct].to_vec();
        let objective = self.obj.iter().zip(&values).map(|(c, x)| c * x).sum();
        Ok(LpSolution { status: LpStatus::Optimal, objective, values, iterations: s.iters })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VState {
    Basic(u32),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

struct SimplexState<'a> {
    e: &'a LpEngine,
    /// bounds over structurals + logicals + artificials
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    art_sign: Vec<f64>,
    art_active: Vec<bool>,
    phase: u8,
    iters: usize,
    pivots_since_refactor: usize,
    degenerate_streak: usize,
    always_bland: bool,
    rhs_scale: f64,
}

impl<'a> SimplexState<'a> {
    fn new(e: &'a LpEngine, slo: &[f64], shi: &[f64], always_bland: bool) -> Self {
        let m = e.m;
        let ntotal = e.nstruct + 2 * m;
        let mut lo = Vec::with_capacity(ntotal);
        let mut hi = Vec::with_capacity(ntotal);
        lo.extend_from_slice(slo);
        hi.extend_from_slice(shi);
        lo.extend_from_slice(&e.logical_lo);
        hi.extend_from_slice(&e.logical_hi);
        lo.extend(std::iter::repeat_n(0.0, m));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));
        let rhs_scale = e.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        SimplexState {
            e,
            lo,
            hi,
            x: vec![0.0; ntotal],
            state: vec![VState::AtLower; ntotal],
            basis: Vec::with_capacity(m),
            binv: vec![0.0; m * m],
            art_sign: vec![1.0; m],
            art_active: vec![false; m],
            phase: 2,
            iters: 0,
            pivots_since_refactor: 0,
            degenerate_streak: 0,
            always_bland,
            rhs_scale,
        }
    }

    fn ntotal(&self) -> usize {
        self.e.nstruct + 2 * self.e.m
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.e.nstruct + self.e.m
    }

    fn cost(&self, j: usize) -> f64 {
        match self.phase {
            1 => {
                if self.is_artificial(j) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                if j < self.e.nstruct {
                    self.e.obj[j]
                } else {
                    0.0
                }
            }
        }
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.e.nstruct;
        let m = self.e.m;
        if j < n {
            for &(row, a) in &self.e.cols[j] {
                f(row, a);
            }
        } else if j < n + m {
            f(j - n, 1.0);
        } else {
            f(j - n - m, self.art_sign[j - n - m]);
        }
    }

    /// Nonbasic resting value of variable j in its current state.
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lo[j],
            VState::AtUpper => self.hi[j],
            VState::Free => 0.0,
            VState::Basic(_) => unreachable!(),
        }
    }

    /// Chooses a starting basis: the row's own logical where the residual
    /// already fits its bounds, an artificial column elsewhere.
    fn crash(&mut self) {
        let n = self.e.nstruct;
        let m = self.e.m;
        // park structurals and logicals at a bound
        for j in 0..n + m {
            self.state[j] = if self.lo[j].is_finite() {
                VState::AtLower
            } else if self.hi[j].is_finite() {
                VState::AtUpper
            } else {
                VState::Free
            };
            self.x[j] = self.nonbasic_value(j);
        }
        // residual of each row given the parked structurals
        let mut resid = self.e.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(row, a) in &self.e.cols[j] {
                    resid[row] -= a * xj;
                }
            }
        }
        self.basis.clear();
        for row in 0..m {
            let logical = n + row;
            let r = resid[row] - self.x[logical]; // logical parked value folded in
            let target = self.x[logical] + r;
            if target >= self.lo[logical] - PTOL && target <= self.hi[logical] + PTOL {
                self.basis.push(logical);
                self.state[logical] = VState::Basic(row as u32);
                self.x[logical] = target;
            } else {
                let art = n + m + row;
                self.art_sign[row] = if target - self.x[logical] >= 0.0 { 1.0 } else { -1.0 };
                self.art_active[row] = true;
                self.basis.push(art);
                self.state[art] = VState::Basic(row as u32);
                self.x[art] = (target - self.x[logical]).abs();
            }
        }
        // diagonal basis: B^{ -1 } is +-1 on the diagonal
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for row in 0..m {
            let j = self.basis[row];
            let sign = if self.is_artificial(j) { self.art_sign[row] } else { 1.0 };
            self.binv[row * m + row] = sign;
        }
    }

    fn has_artificials(&self) -> bool {
        self.art_active.iter().any(|&a| a)
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .filter(|&&j| self.is_artificial(j))
            .map(|&j| self.x[j])
            .sum()
    }

    /// Degenerate pivots replacing zero-valued basic artificials by any
    /// admissible column; rows with no pivot candidate are dependent and the
    /// artificial stays, fixed at zero.
    fn drive_out_artificials(&mut self) {
        let m = self.e.m;
        for pos in 0..m {
            if !self.is_artificial(self.basis[pos]) {
                continue;
            }
            let row = &self.binv[pos * m..(pos + 1) * m];
            let mut candidate = None;
            for j in 0..self.e.nstruct + m {
                if matches!(self.state[j], VState::Basic(_)) {
                    continue;
                }
                let mut alpha = 0.0;
                self.for_col(j, |r, a| alpha += row[r] * a);
                if alpha.abs() > 1e-7 {
                    candidate = Some(j);
                    break;
                }
            }
            if let Some(j) = candidate {
                let w = self.ftran(j);
                let old = self.basis[pos];
                self.apply_pivot(j, pos, &w, self.x[j]);
                self.state[old] = VState::AtLower;
                self.x[old] = 0.0;
            }
        }
    }

    fn fix_artificials(&mut self) {
        let base = self.e.nstruct + self.e.m;
        for row in 0..self.e.m {
            self.lo[base + row] = 0.0;
            self.hi[base + row] = 0.0;
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.e.m;
        let mut w = vec![0.0; m];
        self.for_col(j, |row, a| {
            if a != 0.0 {
                for k in 0..m {
                    w[k] += a * self.binv[k * m + row];
                }
            }
        });
        w
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.e.m;
        let mut y = vec![0.0; m];
        for (pos, &b) in self.basis.iter().enumerate() {
            let cb = self.cost(b);
            if cb != 0.0 {
                let row = &self.binv[pos * m..(pos + 1) * m];
                for k in 0..m {
                    y[k] += cb * row[k];
                }
            }
        }
        y
    }

    /// Runs the current phase to optimality. Returns true if unbounded.
    fn iterate(&mut self) -> Result<bool, SolverError> {
        loop {
            if self.iters > MAX_ITERS {
                return Err(SolverError::Numerical("simplex iteration limit".into()));
            }
            let bland = self.always_bland || self.degenerate_streak > 200;
            let y = self.duals();
            let mut entering: Option<(usize, f64, i8)> = None;
            for j in 0..self.ntotal() {
                if matches!(self.state[j], VState::Basic(_)) {
                    continue;
                }
                if self.lo[j] == self.hi[j] {
                    continue; // fixed
                }
                if self.phase == 2 && self.is_artificial(j) {
                    continue;
                }
                let mut d = self.cost(j);
                self.for_col(j, |row, a| d -= y[row] * a);
                let dir: i8 = match self.state[j] {
                    VState::AtLower => {
                        if d < -DTOL {
                            1
                        } else {
                            continue;
                        }
                    }
                    VState::AtUpper => {
                        if d > DTOL {
                            -1
                        } else {
                            continue;
                        }
                    }
                    VState::Free => {
                        if d < -DTOL {
                            1
                        } else if d > DTOL {
                            -1
                        } else {
                            continue;
                        }
                    }
                    VState::Basic(_) => unreachable!(),
                };
                if bland {
                    entering = Some((j, d, dir));
                    break;
                }
                match entering {
                    Some((_, dbest, _)) if d.abs() <= dbest.abs() => {}
                    _ => entering = Some((j, d, dir)),
                }
            }
            let Some((j, _, dir)) = entering else {
                return Ok(false); // optimal for this phase
            };
            let dir = dir as f64;
            let w = self.ftran(j);

            // ratio test: how far can the entering variable move?
            let mut t = self.hi[j] - self.lo[j]; // own bound flip distance
            let mut leaving: Option<(usize, bool, f64)> = None; // (pos, to_upper, |pivot|)
            for (pos, &b) in self.basis.iter().enumerate() {
                let wk = w[pos];
                if wk.abs() <= PTOL {
                    continue;
                }
                let delta = -dir * wk; // d x_b / d t
                let room = if delta > 0.0 {
                    if self.hi[b].is_infinite() {
                        continue;
                    }
                    ((self.hi[b] - self.x[b]) / delta).max(0.0)
                } else {
                    if self.lo[b].is_infinite() {
                        continue;
                    }
                    ((self.lo[b] - self.x[b]) / delta).max(0.0)
                };
                let better = match leaving {
                    None => room < t - 1e-12,
                    Some((lpos, _, lw)) => {
                        room < t - 1e-12
                            || (room <= t + 1e-12
                                && (wk.abs() > lw + 1e-12
                                    || (wk.abs() >= lw - 1e-12 && b < self.basis[lpos])))
                    }
                };
                if room < t - 1e-12 || (room <= t + 1e-12 && better) {
                    t = room.min(t);
                    leaving = Some((pos, delta > 0.0, wk.abs()));
                }
            }

            if t.is_infinite() {
                return Ok(true); // unbounded in this direction
            }
            self.iters += 1;
            self.degenerate_streak = if t <= 1e-12 { self.degenerate_streak + 1 } else { 0 };

            match leaving {
                None => {
                    // bound flip: entering jumps to its opposite bound
                    let newx = match self.state[j] {
                        VState::AtLower => self.hi[j],
                        VState::AtUpper => self.lo[j],
                        _ => {
                            return Err(SolverError::Numerical(
                                "free variable cannot bound-flip".into(),
                            ))
                        }
                    };
                    for (pos, &b) in self.basis.iter().enumerate() {
                        self.x[b] -= t * dir * w[pos];
                    }
                    self.x[j] = newx;
                    self.state[j] = match self.state[j] {
                        VState::AtLower => VState::AtUpper,
                        VState::AtUpper => VState::AtLower,
                        s => s,
                    };
                }
                Some((pos, to_upper, _)) => {
                    let enter_val = match self.state[j] {
                        VState::AtLower => self.lo[j] + t,
                        VState::AtUpper => self.hi[j] - t,
                        VState::Free => dir * t,
                        VState::Basic(_) => unreachable!(),
                    };
                    for (p, &b) in self.basis.iter().enumerate() {
                        self.x[b] -= t * dir * w[p];
                    }
                    let old = self.basis[pos];
                    self.apply_pivot(j, pos, &w, enter_val);
                    self.state[old] = if to_upper { VState::AtUpper } else { VState::AtLower };
                    self.x[old] = if to_upper { self.hi[old] } else { self.lo[old] };
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    /// Replaces the basic variable at `pos` by `j` and updates the inverse.
    fn apply_pivot(&mut self, j: usize, pos: usize, w: &[f64], enter_val: f64) {
        let m = self.e.m;
        let piv = w[pos];
        debug_assert!(piv.abs() > 1e-12, "pivot {piv} too small");
        let inv = 1.0 / piv;
        // scale pivot row
        for k in 0..m {
            self.binv[pos * m + k] *= inv;
        }
        for p in 0..m {
            if p == pos {
                continue;
            }
            let factor = w[p];
            if factor != 0.0 {
                for k in 0..m {
                    self.binv[p * m + k] -= factor * self.binv[pos * m + k];
                }
            }
        }
        self.basis[pos] = j;
        self.state[j] = VState::Basic(pos as u32);
        self.x[j] = enter_val;
    }

    /// Rebuilds the inverse from the basis columns and recomputes the basic
    /// values, clearing accumulated drift.
    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.e.m;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m]; // basis matrix, column per basis position
        for (pos, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |row, v| a[row * m + pos] = v);
        }
        let mut inv = vec![0.0; m * m];
        for k in 0..m {
            inv[k * m + k] = 1.0;
        }
        // Gauss-Jordan with partial pivoting
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(SolverError::Numerical("singular basis during refactor".into()));
            }
            if piv_row != col {
                for k in 0..m {
                    a.swap(col * m + k, piv_row * m + k);
                    inv.swap(col * m + k, piv_row * m + k);
                }
            }
            let scale = 1.0 / a[col * m + col];
            for k in 0..m {
                a[col * m + k] *= scale;
                inv[col * m + k] *= scale;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        // inv now maps row-space: inv = P-adjusted inverse of B with rows in
        // basis-position order
        self.binv = inv;
        self.pivots_since_refactor = 0;
        // recompute basic values from scratch
        let mut r = self.e.rhs.clone();
        for j in 0..self.ntotal() {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let xj = self.nonbasic_value(j);
            self.x[j] = xj;
            if xj != 0.0 {
                self.for_col(j, |row, a| r[row] -= a * xj);
            }
        }
        for pos in 0..m {
            let mut v = 0.0;
            for k in 0..m {
                v += self.binv[pos * m + k] * r[k];
            }
            self.x[self.basis[pos]] = v;
        }
        Ok(())
    }

    /// Verifies the claimed optimum is actually primal feasible.
    fn postcheck(&mut self) -> Result<(), SolverError> {
        self.refactor()?;
        let scale = 1.0 + self.rhs_scale;
        for j in 0..self.ntotal() {
            let v = self.x[j];
            if v < self.lo[j] - 1e-6 * scale || v > self.hi[j] + 1e-6 * scale {
                return Err(SolverError::Numerical(format!(
                    "variable {j} = {v} escaped [{}, {}]",
                    self.lo[j], self.hi[j]
                )));
            }
        }
        Ok(())
    }
}

/// Solves a continuous model to optimality with the revised simplex.
pub fn solve_lp(model: &Model) -> Result<LpSolution, SolverError> {
    if model.num_integer_vars() > 0 {
        return Err(SolverError::NotContinuous);
    }
    let engine = LpEngine::new(model);
    let (lo, hi) = LpEngine::model_bounds(model);
    engine.solve(&lo, &hi)
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

struct BbNode {
    parent: usize,
    var: usize,
    lo: f64,
    hi: f64,
    depth: u32,
}

struct OpenNode {
    bound: f64,
    id: u64,
    arena: usize,
}

/// Solves a mixed-integer model by branch and bound.
pub fn solve_mip(model: &Model, config: &SolverConfig) -> Result<MipResult, SolverError> {
    solve_mip_traced(model, config, |_| {})
}

/// Same as [`solve_mip`] with a per-node trace callback.
pub fn solve_mip_traced(
    model: &Model,
    config: &SolverConfig,
    mut trace: impl FnMut(&NodeEvent),
) -> Result<MipResult, SolverError> {
    config.validate()?;
    let start = Instant::now();
    let engine = LpEngine::new(model);
    let (mut base_lo, mut base_hi) = LpEngine::model_bounds(model);
    let int_vars: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_integral())
        .map(|(id, _)| id)
        .collect();
    for &v in &int_vars {
        base_lo[v] = base_lo[v].ceil();
        base_hi[v] = base_hi[v].floor();
        if base_lo[v] > base_hi[v] {
            return Ok(MipResult {
                status: MipStatus::Infeasible,
                incumbent: None,
                bound: f64::INFINITY,
                gap_percent: f64::INFINITY,
                nodes: 0,
                wall_seconds: start.elapsed().as_secs_f64(),
                solution: None,
            });
        }
    }

    let mut arena: Vec<BbNode> = vec![BbNode {
        parent: usize::MAX,
        var: usize::MAX,
        lo: 0.0,
        hi: 0.0,
        depth: 0,
    }];
    let mut open: Vec<OpenNode> = vec![OpenNode { bound: f64::NEG_INFINITY, id: 0, arena: 0 }];
    let mut next_id: u64 = 1;
    let mut nodes: u64 = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut lo = base_lo.clone();
    let mut hi = base_hi.clone();

    let finish = |status: MipStatus,
                  incumbent: &Option<(f64, Vec<f64>)>,
                  bound: f64,
                  nodes: u64,
                  start: Instant| {
        let inc = incumbent.as_ref().map(|(v, _)| *v);
        let gap = match inc {
            Some(v) => compute_gap(v, bound),
            None => f64::INFINITY,
        };
        MipResult {
            status,
            incumbent: inc,
            bound,
            gap_percent: gap,
            nodes,
            wall_seconds: start.elapsed().as_secs_f64(),
            solution: incumbent.as_ref().map(|(_, s)| s.clone()),
        }
    };

    // node held out of `open` for an ongoing plunge
    let mut plunge: Option<OpenNode> = None;

    while !open.is_empty() || plunge.is_some() {
        // global dual bound over the remaining tree
        let open_bound = open
            .iter()
            .chain(plunge.iter())
            .map(|n| n.bound)
            .fold(f64::INFINITY, f64::min);
        let global_bound = match &incumbent {
            Some((v, _)) => open_bound.min(*v),
            None => open_bound,
        };
        if let Some((v, _)) = &incumbent {
            if compute_gap(*v, global_bound) <= 100.0 * config.rel_gap_tol {
                return Ok(finish(MipStatus::Optimal, &incumbent, global_bound, nodes, start));
            }
        }
        if nodes > 0 && start.elapsed() >= config.time_limit {
            let b = if global_bound.is_infinite() { f64::NEG_INFINITY } else { global_bound };
            return Ok(finish(MipStatus::TimeLimit, &incumbent, b, nodes, start));
        }
        if let Some(limit) = config.node_limit {
            if nodes >= limit {
                return Ok(finish(MipStatus::NodeLimit, &incumbent, global_bound, nodes, start));
            }
        }

        let node = match plunge.take() {
            Some(held) => held,
            None => {
                let pick = match config.node_selection {
                    NodeSelection::DepthFirst => open.len() - 1,
                    NodeSelection::BestBound | NodeSelection::PureBestBound => {
                        let mut best = 0;
                        for k in 1..open.len() {
                            let (b, i) = (open[k].bound, open[k].id);
                            if b < open[best].bound - 1e-12
                                || (b <= open[best].bound + 1e-12 && i < open[best].id)
                            {
                                best = k;
                            }
                        }
                        best
                    }
                };
                open.swap_remove(pick)
            }
        };

        // prune against the incumbent before paying for the LP
        if let Some((v, _)) = &incumbent {
            if node.bound >= v - 1e-9 * (1.0 + v.abs()) {
                continue;
            }
        }

        // materialize bounds: walk the ancestor chain, nearest override wins
        lo.copy_from_slice(&base_lo);
        hi.copy_from_slice(&base_hi);
        let mut seen: Vec<usize> = Vec::new();
        let mut cursor = node.arena;
        while cursor != 0 {
            let n = &arena[cursor];
            if !seen.contains(&n.var) {
                lo[n.var] = n.lo;
                hi[n.var] = n.hi;
                seen.push(n.var);
            }
            cursor = n.parent;
        }

        nodes += 1;
        let lp = engine.solve(&lo, &hi)?;
        let depth = arena[node.arena].depth;

        match lp.status {
            LpStatus::Infeasible => {
                trace(&NodeEvent {
                    node: node.id,
                    depth,
                    lp_objective: None,
                    global_bound,
                    incumbent: incumbent.as_ref().map(|(v, _)| *v),
                });
                continue;
            }
            LpStatus::Unbounded => return Err(SolverError::UnboundedRelaxation),
            LpStatus::Optimal => {}
        }
        let obj = lp.objective;
        trace(&NodeEvent {
            node: node.id,
            depth,
            lp_objective: Some(obj),
            global_bound,
            incumbent: incumbent.as_ref().map(|(v, _)| *v),
        });
        if let Some((v, _)) = &incumbent {
            if obj >= v - 1e-9 * (1.0 + v.abs()) {
                continue;
            }
        }

        // pick the branching variable
        let frac = |v: f64| (v - v.round()).abs();
        let mut branch_var: Option<usize> = None;
        let mut best_score = -1.0;
        for &v in &int_vars {
            let f = frac(lp.values[v]);
            if f > config.integrality_tol {
                match config.branching {
                    BranchRule::FirstFractional => {
                        branch_var = Some(v);
                        break;
                    }
                    BranchRule::MostFractional => {
                        let score = 0.5 - (lp.values[v].fract().abs() - 0.5).abs();
                        if score > best_score + 1e-12 {
                            best_score = score;
                            branch_var = Some(v);
                        }
                    }
                }
            }
        }

        match branch_var {
            None => {
                // integral: candidate incumbent
                let better = match &incumbent {
                    Some((v, _)) => obj < *v,
                    None => true,
                };
                if better {
                    incumbent = Some((obj, lp.values.clone()));
                }
            }
            Some(v) => {
                let val = lp.values[v];
                let floor = val.floor();
                let parent_idx = node.arena;
                arena.push(BbNode {
                    parent: parent_idx,
                    var: v,
                    lo: lo[v],
                    hi: floor,
                    depth: depth + 1,
                });
                let down = OpenNode { bound: obj, id: next_id, arena: arena.len() - 1 };
                next_id += 1;
                arena.push(BbNode {
                    parent: parent_idx,
                    var: v,
                    lo: floor + 1.0,
                    hi: hi[v],
                    depth: depth + 1,
                });
                let up = OpenNode { bound: obj, id: next_id, arena: arena.len() - 1 };
                next_id += 1;
                // the child nearer the fractional value continues the dive
                let (near, far) = if val - floor <= 0.5 { (down, up) } else { (up, down) };
                match config.node_selection {
                    NodeSelection::BestBound => {
                        open.push(far);
                        plunge = Some(near);
                    }
                    NodeSelection::DepthFirst => {
                        open.push(far);
                        open.push(near);
                    }
                    NodeSelection::PureBestBound => {
                        open.push(near);
                        open.push(far);
                    }
                }
            }
        }
    }

    match &incumbent {
        Some((v, _)) => {
            let v = *v;
            Ok(finish(MipStatus::Optimal, &incumbent, v, nodes, start))
        }
        None => Ok(finish(MipStatus::Infeasible, &incumbent, f64::INFINITY, nodes, start)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinConstraint, VarDef};

    fn simple_lp() -> Model {
        // min x s.t. x >= 3
        let mut m = Model::new("t");
        let x = m.add_var(VarDef::continuous("x", 0.0, f64::INFINITY)).unwrap();
        m.add_constraint(LinConstraint::new(vec![(x, 1.0)], Relation::Ge, 3.0, "lb")).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        m
    }

    #[test]
    fn lp_examples() {
        let s = solve_lp(&simple_lp()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!((s.values[0] - 3.0).abs() < 1e-9);

        // infeasible pair
        let mut m = Model::new("inf");
        let x = m.add_var(VarDef::continuous("x", f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        m.add_constraint(LinConstraint::new(vec![(x, 1.0)], Relation::Le, 0.0, "ub")).unwrap();
        m.add_constraint(LinConstraint::new(vec![(x, 1.0)], Relation::Ge, 1.0, "lb")).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert_eq!(s.objective, f64::INFINITY);

        // unbounded
        let mut m = Model::new("unb");
        let x = m.add_var(VarDef::continuous("x", f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        m.set_objective(vec![(x, 1.0)]).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn lp_rejects_integer_models() {
        let mut m = Model::new("t");
        m.add_var(VarDef::binary("b")).unwrap();
        assert!(matches!(solve_lp(&m), Err(SolverError::NotContinuous)));
        assert!(solve_lp(&m.lp_relaxation()).is_ok());
    }

    #[test]
    fn lp_with_equalities_and_upper_bounds() {
        // min -x - 2y s.t. x + y = 1, 0 <= x,y <= 0.75
        let mut m = Model::new("t");
        let x = m.add_var(VarDef::continuous("x", 0.0, 0.75)).unwrap();
        let y = m.add_var(VarDef::continuous("y", 0.0, 0.75)).unwrap();
        m.add_constraint(LinConstraint::new(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0, "sum"))
            .unwrap();
        m.set_objective(vec![(x, -1.0), (y, -2.0)]).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - (-0.25 - 1.5)).abs() < 1e-9);
        assert!((s.values[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn lp_degenerate_model_terminates() {
        // many redundant rows around a single vertex
        let mut m = Model::new("degen");
        let x = m.add_var(VarDef::continuous("x", 0.0, 10.0)).unwrap();
        let y = m.add_var(VarDef::continuous("y", 0.0, 10.0)).unwrap();
        for k in 0..20 {
            m.add_constraint(LinConstraint::new(
                vec![(x, 1.0 + k as f64 * 0.0), (y, 1.0)],
                Relation::Ge,
                1.0,
                "r",
            ))
            .unwrap();
        }
        m.set_objective(vec![(x, 1.0), (y, 1.0)]).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(compute_gap(100.0, 90.0), 10.0);
        assert_eq!(compute_gap(100.0, 100.0), 0.0);
        assert_eq!(compute_gap(0.0, 0.0), 0.0);
        assert_eq!(compute_gap(50.0, 51.0), 0.0); // bound past the incumbent
        assert!(compute_gap(-10.0, -20.0) > 0.0);
    }

    fn ww_model(demand: &[u64], k: f64, h: f64, v: f64) -> Model {
        crate::formulations::build_wagner_whitin_milp(demand, k, h, v).unwrap().0
    }

    #[test]
    fn mip_solves_lot_sizing() {
        let m = ww_model(&[10, 20], 10.0, 1.0, 0.0);
        let r = solve_mip(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.incumbent.unwrap() - 20.0).abs() < 1e-6);
        assert!(r.bound <= r.incumbent.unwrap() + 1e-6);
        assert_eq!(r.gap_percent, 0.0);
        // incumbent is feasible for the unrelaxed model
        let rep = m.check_feasible(r.solution.as_ref().unwrap(), 1e-6).unwrap();
        assert!(rep.is_feasible(), "{rep}");
    }

    #[test]
    fn mip_infeasible_detected() {
        let mut m = Model::new("inf");
        let b = m.add_var(VarDef::binary("b")).unwrap();
        m.add_constraint(LinConstraint::new(vec![(b, 1.0)], Relation::Ge, 0.5, "lb")).unwrap();
        m.add_constraint(LinConstraint::new(vec![(b, 1.0)], Relation::Le, 0.5, "ub")).unwrap();
        m.set_objective(vec![(b, 1.0)]).unwrap();
        let r = solve_mip(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
        assert!(r.incumbent.is_none());
        assert!(r.gap_percent.is_infinite());
    }

    #[test]
    fn mip_matches_exhaustive_enumeration() {
        // all-binary knapsack-ish models: compare against 2^k enumeration
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for round in 0..25 {
            let k = rng.random_range(3..=10usize);
            let mut m = Model::new(format!("en{round}"));
            let vars: Vec<_> =
                (0..k).map(|i| m.add_var(VarDef::binary(format!("b{i}"))).unwrap()).collect();
            let costs: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0f64)).collect();
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..5.0f64)).collect();
            let cap = rng.random_range(2.0..10.0f64);
            m.add_constraint(LinConstraint::new(
                vars.iter().copied().zip(weights.iter().copied()).collect(),
                Relation::Le,
                cap,
                "cap",
            ))
            .unwrap();
            m.set_objective(vars.iter().copied().zip(costs.iter().copied()).collect()).unwrap();

            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << k) {
                let w: f64 = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| weights[i]).sum();
                if w <= cap + 1e-12 {
                    let c: f64 = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| costs[i]).sum();
                    best = best.min(c);
                }
            }
            let r = solve_mip(&m, &SolverConfig::default()).unwrap();
            assert_eq!(r.status, MipStatus::Optimal);
            assert!(
                (r.incumbent.unwrap() - best).abs() < 1e-6,
                "round {round}: got {} want {best}",
                r.incumbent.unwrap()
            );
        }
    }

    #[test]
    fn mip_is_reproducible() {
        let m = ww_model(&[12, 0, 19, 7, 30], 25.0, 0.7, 0.0);
        let a = solve_mip(&m, &SolverConfig::default()).unwrap();
        let b = solve_mip(&m, &SolverConfig::default()).unwrap();
        assert_eq!(a.incumbent, b.incumbent);
        assert_eq!(a.nodes, b.nodes);

        let dfs = SolverConfig { node_selection: NodeSelection::DepthFirst, ..Default::default() };
        let c = solve_mip(&m, &dfs).unwrap();
        assert!((c.incumbent.unwrap() - a.incumbent.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bound_monotone_and_weak_duality() {
        let m = ww_model(&[9, 14, 3, 22, 11, 40], 30.0, 0.5, 0.0);
        let mut last_bound = f64::NEG_INFINITY;
        let r = solve_mip_traced(&m, &SolverConfig::default(), |ev| {
            assert!(ev.global_bound >= last_bound - 1e-9, "bound went backwards");
            last_bound = ev.global_bound.max(last_bound);
            if let (Some(inc), b) = (ev.incumbent, ev.global_bound) {
                assert!(b <= inc + 1e-6, "weak duality violated: {b} > {inc}");
            }
        })
        .unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!(r.bound <= r.incumbent.unwrap() + 1e-6);
    }

    #[test]
    fn timeout_contract() {
        let m = ww_model(&[13, 27, 8, 41, 19, 33, 25, 16], 35.0, 0.9, 0.0);
        let cfg = SolverConfig::default().with_time_limit(Duration::from_nanos(1));
        let r = solve_mip(&m, &cfg).unwrap();
        assert_eq!(r.status, MipStatus::TimeLimit);
        assert!(r.nodes >= 1, "root must always be processed");
        if let Some(inc) = r.incumbent {
            assert!(r.bound <= inc + 1e-6);
            assert_eq!(r.gap_percent, compute_gap(inc, r.bound));
        } else {
            assert!(r.gap_percent.is_infinite());
        }
    }

    #[test]
    fn node_limit_contract() {
        let m = ww_model(&[13, 27, 8, 41, 19, 33, 25, 16], 35.0, 0.9, 0.0);
        let cfg = SolverConfig { node_limit: Some(1), ..Default::default() };
        let r = solve_mip(&m, &cfg).unwrap();
        assert!(matches!(r.status, MipStatus::NodeLimit | MipStatus::Optimal));
        assert_eq!(r.nodes, 1);
    }

    #[test]
    fn lp_gap_zero_for_integral_relaxations() {
        let m = simple_lp();
        let g = lp_gap(&m, 3.0).unwrap();
        assert!(g.abs() < 1e-9);
    }
}
