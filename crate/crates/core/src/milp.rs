//! Solver-independent MILP representation.
//!
//! A [`Model`] is a list of variables, linear constraints and a minimization
//! objective. Models are mutable while a formulation builds them and shared
//! immutably afterwards. [`VarIndex`] keeps the bidirectional map between
//! semantic variable keys (symbol plus period/node indices) and column ids,
//! which is what makes solutions decodable and exported files diffable.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub type VarId = usize;
pub type ConstraintId = usize;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable id {0}")]
    UnknownVar(VarId),
    #[error("invalid bounds [{lo}, {hi}] for `{name}`")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("assignment has {got} values, model has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("duplicate semantic key `{0}`")]
    DuplicateKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrality {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDef {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integrality: Integrality,
}

impl VarDef {
    pub fn binary(name: impl Into<String>) -> Self {
        VarDef { name: name.into(), lo: 0.0, hi: 1.0, integrality: Integrality::Binary }
    }

    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        VarDef { name: name.into(), lo, hi, integrality: Integrality::Continuous }
    }

    pub fn integer(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        VarDef { name: name.into(), lo, hi, integrality: Integrality::Integer }
    }

    pub fn is_integral(&self) -> bool {
        !matches!(self.integrality, Integrality::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Le => write!(f, "<="),
            Relation::Eq => write!(f, "="),
            Relation::Ge => write!(f, ">="),
        }
    }
}

/// A linear constraint in canonical form: duplicate variable ids merged,
/// tagged with the constraint family that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: String,
}

impl LinConstraint {
    pub fn new(terms: Vec<(VarId, f64)>, relation: Relation, rhs: f64, tag: impl Into<String>) -> Self {
        LinConstraint { terms, relation, rhs, tag: tag.into() }
    }

    fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.relation {
            Relation::Le => (a - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - a).max(0.0),
            Relation::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    pub name: String,
    vars: Vec<VarDef>,
    names: HashMap<String, VarId>,
    constraints: Vec<LinConstraint>,
    objective: Vec<(VarId, f64)>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model { name: name.into(), ..Default::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id]
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Ids are dense and assigned in insertion order.
    pub fn add_var(&mut self, def: VarDef) -> Result<VarId, ModelError> {
        if !def.lo.is_nan() && !def.hi.is_nan() && def.lo > def.hi {
            return Err(ModelError::InvalidBounds { name: def.name, lo: def.lo, hi: def.hi });
        }
        if def.lo.is_nan() || def.hi.is_nan() {
            return Err(ModelError::NonFinite(def.name));
        }
        if def.integrality == Integrality::Binary && (def.lo < 0.0 || def.hi > 1.0) {
            return Err(ModelError::InvalidBounds { name: def.name, lo: def.lo, hi: def.hi });
        }
        let id = self.vars.len();
        match self.names.entry(def.name.clone()) {
            Entry::Occupied(_) => return Err(ModelError::DuplicateName(def.name)),
            Entry::Vacant(e) => {
                e.insert(id);
            }
        }
        self.vars.push(def);
        Ok(id)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    /// Merges duplicate term ids before storing the constraint.
    pub fn add_constraint(&mut self, c: LinConstraint) -> Result<ConstraintId, ModelError> {
        if !c.rhs.is_finite() {
            return Err(ModelError::NonFinite(c.tag));
        }
        let terms = self.canonical_terms(c.terms, &c.tag)?;
        let id = self.constraints.len();
        self.constraints.push(LinConstraint { terms, ..c });
        Ok(id)
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) -> Result<(), ModelError> {
        self.objective = self.canonical_terms(terms, "objective")?;
        Ok(())
    }

    fn canonical_terms(
        &self,
        terms: Vec<(VarId, f64)>,
        ctx: &str,
    ) -> Result<Vec<(VarId, f64)>, ModelError> {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, c) in terms {
            if v >= self.vars.len() {
                return Err(ModelError::UnknownVar(v));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite(ctx.to_string()));
            }
            *merged.entry(v).or_insert(0.0) += c;
        }
        Ok(merged.into_iter().filter(|&(_, c)| c != 0.0).collect())
    }

    /// Same model with every integrality dropped; binaries keep [0,1] bounds.
    pub fn lp_relaxation(&self) -> Model {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.integrality = Integrality::Continuous;
        }
        m
    }

    pub fn num_integer_vars(&self) -> usize {
        self.vars.iter().filter(|v| v.is_integral()).count()
    }

    /// Constraint counts per tag, for structural assertions.
    pub fn tag_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for c in &self.constraints {
            *m.entry(c.tag.clone()).or_insert(0) += 1;
        }
        m
    }

    /// Checks a full assignment against constraints, bounds and integrality.
    pub fn check_feasible(&self, x: &[f64], tol: f64) -> Result<ViolationReport, ModelError> {
        if x.len() != self.vars.len() {
            return Err(ModelError::AssignmentLength { expected: self.vars.len(), got: x.len() });
        }
        let mut report = ViolationReport::default();
        for (id, (v, def)) in x.iter().zip(&self.vars).enumerate() {
            if *v < def.lo - tol || *v > def.hi + tol {
                report.violations.push(Violation::Bound {
                    var: id,
                    value: *v,
                    lo: def.lo,
                    hi: def.hi,
                });
            }
            if def.is_integral() && (*v - v.round()).abs() > tol {
                report.violations.push(Violation::Integrality { var: id, value: *v });
            }
        }
        for (id, c) in self.constraints.iter().enumerate() {
            let violation = c.violation(x);
            if violation > tol {
                report.violations.push(Violation::Constraint {
                    constraint: id,
                    tag: c.tag.clone(),
                    amount: violation,
                });
            }
        }
        Ok(report)
    }

    // -- export ------------------------------------------------------------

    /// Writes the model in LP format plus a `.map` sidecar with the
    /// mangled-name / original-name pairs. Output ordering follows variable
    /// and constraint ids, so repeated exports are byte-identical.
    pub fn export_lp(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let mut out = Vec::new();
        self.write_lp(&mut out)?;
        std::fs::write(path, out)?;
        self.write_map(&path.with_extension("map"))?;
        Ok(())
    }

    pub fn write_lp(&self, w: &mut impl Write) -> Result<(), ModelError> {
        let names: Vec<String> = self.lp_names();
        writeln!(w, "\\ {}", if self.name.is_empty() { "model" } else { &self.name })?;
        writeln!(w, "Minimize")?;
        write_expr(w, " obj:", &self.objective, &names)?;
        writeln!(w, "Subject To")?;
        for (k, c) in self.constraints.iter().enumerate() {
            let label = format!(" {}_{}:", mangle(&c.tag), k);
            let mut line = Vec::new();
            write_expr(&mut line, &label, &c.terms, &names)?;
            // splice relation + rhs before the newline
            let mut s = String::from_utf8(line).expect("ascii");
            s.pop();
            writeln!(w, "{} {} {}", s, c.relation, fmt_num(c.rhs))?;
        }
        writeln!(w, "Bounds")?;
        for (id, v) in self.vars.iter().enumerate() {
            let n = &names[id];
            match (v.lo.is_infinite(), v.hi.is_infinite()) {
                (true, true) => writeln!(w, " {n} free")?,
                (true, false) => writeln!(w, " -infinity <= {n} <= {}", fmt_num(v.hi))?,
                (false, true) => {
                    if v.lo != 0.0 {
                        writeln!(w, " {n} >= {}", fmt_num(v.lo))?;
                    }
                }
                (false, false) => {
                    if v.lo == v.hi {
                        writeln!(w, " {n} = {}", fmt_num(v.lo))?;
                    } else if v.lo != 0.0 || v.integrality == Integrality::Continuous || v.hi != 1.0
                    {
                        writeln!(w, " {} <= {n} <= {}", fmt_num(v.lo), fmt_num(v.hi))?;
                    }
                }
            }
        }
        let binaries: Vec<&str> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integrality == Integrality::Binary)
            .map(|(id, _)| names[id].as_str())
            .collect();
        if !binaries.is_empty() {
            writeln!(w, "Binaries")?;
            for chunk in binaries.chunks(8) {
                writeln!(w, " {}", chunk.join(" "))?;
            }
        }
        let generals: Vec<&str> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integrality == Integrality::Integer)
            .map(|(id, _)| names[id].as_str())
            .collect();
        if !generals.is_empty() {
            writeln!(w, "Generals")?;
            for chunk in generals.chunks(8) {
                writeln!(w, " {}", chunk.join(" "))?;
            }
        }
        writeln!(w, "End")?;
        Ok(())
    }

    /// Writes fixed-format MPS with 8-character column/row ids plus the
    /// `.map` sidecar translating them back to semantic names.
    pub fn export_mps(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let mut out = Vec::new();
        self.write_mps(&mut out)?;
        std::fs::write(path, out)?;
        self.write_map(&path.with_extension("map"))?;
        Ok(())
    }

    pub fn write_mps(&self, w: &mut impl Write) -> Result<(), ModelError> {
        let col = |id: VarId| format!("C{id:07}");
        let row = |id: ConstraintId| format!("R{id:07}");
        writeln!(w, "NAME          {}", if self.name.is_empty() { "MODEL" } else { &self.name })?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  COST")?;
        for (k, c) in self.constraints.iter().enumerate() {
            let kind = match c.relation {
                Relation::Le => 'L',
                Relation::Eq => 'E',
                Relation::Ge => 'G',
            };
            writeln!(w, " {}  {}", kind, row(k))?;
        }
        // column-major entries
        let mut entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); self.vars.len()];
        for (id, &(v, c)) in self.objective.iter().enumerate() {
            let _ = id;
            entries[v].push(("COST".to_string(), c));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            for &(v, coef) in &c.terms {
                entries[v].push((row(k), coef));
            }
        }
        writeln!(w, "COLUMNS")?;
        let mut in_int = false;
        let mut marker = 0usize;
        for (id, v) in self.vars.iter().enumerate() {
            if v.is_integral() != in_int {
                let kind = if v.is_integral() { "'INTORG'" } else { "'INTEND'" };
                writeln!(w, "    MARKER{marker:03}                 'MARKER'                 {kind}")?;
                in_int = v.is_integral();
                marker += 1;
            }
            if entries[id].is_empty() {
                // every column must appear at least once
                writeln!(w, "    {:<8}  {:<8}  {}", col(id), "COST", fmt_mps(0.0))?;
            }
            for (r, coef) in &entries[id] {
                writeln!(w, "    {:<8}  {:<8}  {}", col(id), r, fmt_mps(*coef))?;
            }
        }
        if in_int {
            writeln!(w, "    MARKER{marker:03}                 'MARKER'                 'INTEND'")?;
        }
        writeln!(w, "RHS")?;
        for (k, c) in self.constraints.iter().enumerate() {
            if c.rhs != 0.0 {
                writeln!(w, "    RHS       {:<8}  {}", row(k), fmt_mps(c.rhs))?;
            }
        }
        writeln!(w, "BOUNDS")?;
        for (id, v) in self.vars.iter().enumerate() {
            let n = col(id);
            if v.integrality == Integrality::Binary && v.lo == 0.0 && v.hi == 1.0 {
                writeln!(w, " BV BND       {n:<8}")?;
                continue;
            }
            match (v.lo.is_infinite(), v.hi.is_infinite()) {
                (true, true) => writeln!(w, " FR BND       {n:<8}")?,
                (true, false) => {
                    writeln!(w, " MI BND       {n:<8}")?;
                    writeln!(w, " UP BND       {n:<8}  {}", fmt_mps(v.hi))?;
                }
                (false, true) => {
                    if v.lo != 0.0 {
                        writeln!(w, " LO BND       {n:<8}  {}", fmt_mps(v.lo))?;
                    }
                }
                (false, false) => {
                    if v.lo == v.hi {
                        writeln!(w, " FX BND       {n:<8}  {}", fmt_mps(v.lo))?;
                    } else {
                        if v.lo != 0.0 {
                            writeln!(w, " LO BND       {n:<8}  {}", fmt_mps(v.lo))?;
                        }
                        writeln!(w, " UP BND       {n:<8}  {}", fmt_mps(v.hi))?;
                    }
                }
            }
        }
        writeln!(w, "ENDATA")?;
        Ok(())
    }

    fn lp_names(&self) -> Vec<String> {
        let mut seen: HashMap<String, usize> = HashMap::new();
        self.vars
            .iter()
            .map(|v| {
                let base = mangle(&v.name);
                match seen.entry(base.clone()) {
                    Entry::Vacant(e) => {
                        e.insert(0);
                        base
                    }
                    Entry::Occupied(mut e) => {
                        *e.get_mut() += 1;
                        format!("{base}__{}", e.get())
                    }
                }
            })
            .collect()
    }

    fn write_map(&self, path: &Path) -> Result<(), ModelError> {
        let lp_names = self.lp_names();
        let mut s = String::new();
        s.push_str("# column<TAB>mangled<TAB>mps<TAB>original\n");
        for (id, v) in self.vars.iter().enumerate() {
            s.push_str(&format!("{id}\t{}\tC{id:07}\t{}\n", lp_names[id], v.name));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            s.push_str(&format!("row {k}\t{}_{k}\tR{k:07}\t{}\n", mangle(&c.tag), c.tag));
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

fn write_expr(
    w: &mut impl Write,
    label: &str,
    terms: &[(VarId, f64)],
    names: &[String],
) -> Result<(), ModelError> {
    write!(w, "{label}")?;
    if terms.is_empty() {
        write!(w, " 0 {}", names.first().map(String::as_str).unwrap_or("x"))?;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            writeln!(w)?;
            write!(w, "   ")?;
        }
        let sign = if c < 0.0 { "-" } else if k == 0 { "" } else { "+ " };
        let mag = c.abs();
        if mag == 1.0 {
            write!(w, " {sign}{}", names[v])?;
        } else {
            write!(w, " {sign}{} {}", fmt_num(mag), names[v])?;
        }
    }
    writeln!(w)?;
    Ok(())
}

/// `x(1,0,2)` -> `x_1_0_2`: LP-safe, reversible through the map file.
fn mangle(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        match ch {
            '(' | ',' => out.push('_'),
            ')' => {}
            c if c.is_ascii_alphanumeric() || c == '_' || c == '.' => out.push(c),
            _ => out.push('_'),
        }
    }
    out
}

/// Plain decimal with up to 12 significant digits, trailing zeros trimmed.
fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let mut s = format!("{v:.12}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// Number that fits the 12-character numeric field of fixed MPS, keeping as
/// many significant digits as the field allows.
fn fmt_mps(v: f64) -> String {
    let plain = fmt_num(v);
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (1..=11).rev() {
        let mut s = format!("{v:.prec$}");
        while s.contains('.') && s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.4e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Constraint { constraint: ConstraintId, tag: String, amount: f64 },
    Integrality { var: VarId, value: f64 },
    Bound { var: VarId, value: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        for v in &self.violations {
            match v {
                Violation::Constraint { constraint, tag, amount } => {
                    writeln!(f, "constraint {constraint} [{tag}] violated by {amount:.3e}")?
                }
                Violation::Integrality { var, value } => {
                    writeln!(f, "var {var} = {value} is fractional")?
                }
                Violation::Bound { var, value, lo, hi } => {
                    writeln!(f, "var {var} = {value} outside [{lo}, {hi}]")?
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Semantic variable keys
// ---------------------------------------------------------------------------

/// Variable symbols shared by every formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    /// Arc binary x(t,i,j) / x(i,j).
    X,
    /// Order indicator delta(t,i) / delta(t).
    Delta,
    /// Order quantity q(t,i) / q(t).
    Q,
    /// End-of-period inventory I(t,i) / I(t).
    Inv,
    /// Visit sequence number u(t,i) / u(i).
    U,
    /// First commodity flow y(t,i,j) / y(i,j).
    FlowY,
    /// Second commodity flow z(t,i,j) / z(i,j).
    FlowZ,
    /// Order-coverage arc w(i,t,k) / w(t,k).
    W,
    /// Zero-cost arc skipping a zero-demand period in the order network.
    Skip,
    /// Per-period trip indicator dsp(t).
    Dispatch,
}

impl Sym {
    pub fn prefix(&self) -> &'static str {
        match self {
            Sym::X => "x",
            Sym::Delta => "delta",
            Sym::Q => "q",
            Sym::Inv => "I",
            Sym::U => "u",
            Sym::FlowY => "y",
            Sym::FlowZ => "z",
            Sym::W => "w",
            Sym::Skip => "skip",
            Sym::Dispatch => "dsp",
        }
    }
}

/// Semantic key of one variable: a symbol plus up to three indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemKey {
    pub sym: Sym,
    idx: [u32; 3],
    arity: u8,
}

impl SemKey {
    pub fn new1(sym: Sym, a: usize) -> Self {
        SemKey { sym, idx: [a as u32, 0, 0], arity: 1 }
    }

    pub fn new2(sym: Sym, a: usize, b: usize) -> Self {
        SemKey { sym, idx: [a as u32, b as u32, 0], arity: 2 }
    }

    pub fn new3(sym: Sym, a: usize, b: usize, c: usize) -> Self {
        SemKey { sym, idx: [a as u32, b as u32, c as u32], arity: 3 }
    }

    pub fn indices(&self) -> &[u32] {
        &self.idx[..self.arity as usize]
    }
}

impl fmt::Display for SemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.sym.prefix())?;
        for (k, v) in self.indices().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Bijective map between semantic keys and model columns.
#[derive(Debug, Clone, Default)]
pub struct VarIndex {
    forward: HashMap<SemKey, VarId>,
    reverse: HashMap<VarId, SemKey>,
}

impl VarIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates the variable in `model` under the key's display name and
    /// records the mapping.
    pub fn add_var(
        &mut self,
        model: &mut Model,
        key: SemKey,
        lo: f64,
        hi: f64,
        integrality: Integrality,
    ) -> Result<VarId, ModelError> {
        if self.forward.contains_key(&key) {
            return Err(ModelError::DuplicateKey(key.to_string()));
        }
        let id = model.add_var(VarDef { name: key.to_string(), lo, hi, integrality })?;
        self.forward.insert(key, id);
        self.reverse.insert(id, key);
        Ok(id)
    }

    pub fn get(&self, key: SemKey) -> Option<VarId> {
        self.forward.get(&key).copied()
    }

    /// Column id for a key that must exist; panics otherwise (builder bug).
    pub fn id(&self, key: SemKey) -> VarId {
        self.forward[&key]
    }

    pub fn key_of(&self, id: VarId) -> Option<SemKey> {
        self.reverse.get(&id).copied()
    }

    pub fn value(&self, x: &[f64], key: SemKey) -> Option<f64> {
        self.get(key).map(|id| x[id])
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SemKey, &VarId)> {
        self.forward.iter()
    }
}
