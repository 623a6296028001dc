//! MILP formulations: standalone TSP variants, standalone lot-sizing
//! variants, and the combined IRP models.
//!
//! The routing side offers five subtour-elimination mechanisms over arc
//! binaries x: sequence variables with MTZ or the stronger DL coefficients,
//! a two-node clique strengthening of MTZ, a single-commodity flow and a
//! two-commodity flow. On top of any sequence-variable base, five families
//! of lifted three-node inequalities (3CLQ, NR, R, L3, 2P) can be layered.
//! The inventory side is either the classical big-M lot-sizing MILP (order
//! indicator, quantity, inventory) or the shortest-path order network whose
//! LP relaxation is integral.
//!
//! The combined model instantiates the routing machinery once per period
//! over warehouse + retailers, couples it to the inventory side through the
//! degree constraints (in/out degree of a retailer equals its order
//! indicator, degree of the warehouse equals the per-period trip indicator),
//! and charges the dispatching cost on the trip indicator.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::instance::{InstanceError, IrpInstance};
use crate::milp::{
    ConstraintId, Integrality, LinConstraint, Model, ModelError, Relation, SemKey, Sym, VarId,
    VarIndex,
};
use crate::oracles::{CostBreakdown, PlanResult};

pub use crate::oracles::omega;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid formulation: {0}")]
    Invalid(String),
    #[error("cannot parse formulation `{0}`")]
    Parse(String),
    #[error("model has no sequence variables; inequality sets need a u-based variant")]
    MissingU,
    #[error("cannot decode solution: {0}")]
    Decode(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

// ---------------------------------------------------------------------------
// Variant taxonomy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InventoryVariant {
    /// Classical big-M lot-sizing MILP.
    Cmilp,
    /// Shortest-path order network.
    Sp,
}

impl InventoryVariant {
    pub fn name(&self) -> &'static str {
        match self {
            InventoryVariant::Cmilp => "CMILP",
            InventoryVariant::Sp => "SP",
        }
    }
}

/// Core subtour-elimination mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TspBase {
    Mtz,
    /// MTZ plus the two-node clique inequalities x_ij + x_ji <= 1.
    Mtz2Clq,
    /// Sequence variables with the lifted (n-1)/(n-3) coefficients.
    Dl,
    /// Single-commodity flow.
    Sc,
    /// Two-commodity flow.
    TwoC,
    /// Sequence variables only; subtour elimination comes from the
    /// inequality set (which must contain 2P to be exact).
    Sequencing,
}

impl TspBase {
    fn name(&self) -> &'static str {
        match self {
            TspBase::Mtz => "MTZ",
            TspBase::Mtz2Clq => "MTZ+2CLQ",
            TspBase::Dl => "DL",
            TspBase::Sc => "SC",
            TspBase::TwoC => "2C",
            TspBase::Sequencing => "",
        }
    }

    fn has_u(&self) -> bool {
        matches!(self, TspBase::Mtz | TspBase::Mtz2Clq | TspBase::Dl | TspBase::Sequencing)
    }
}

/// Three-node inequality families over the sequence variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutFamily {
    ThreeClq,
    NonRadical,
    Radical,
    LiftedCircuit,
    TwoPath,
}

impl CutFamily {
    pub const ALL: [CutFamily; 5] = [
        CutFamily::ThreeClq,
        CutFamily::NonRadical,
        CutFamily::Radical,
        CutFamily::LiftedCircuit,
        CutFamily::TwoPath,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CutFamily::ThreeClq => "3CLQ",
            CutFamily::NonRadical => "NR",
            CutFamily::Radical => "R",
            CutFamily::LiftedCircuit => "L3",
            CutFamily::TwoPath => "2P",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "3CLQ" => Some(CutFamily::ThreeClq),
            "NR" => Some(CutFamily::NonRadical),
            "R" => Some(CutFamily::Radical),
            "L3" => Some(CutFamily::LiftedCircuit),
            "2P" => Some(CutFamily::TwoPath),
            _ => None,
        }
    }
}

/// A TSP formulation: a base plus an optional inequality set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TspVariant {
    pub base: TspBase,
    pub cuts: BTreeSet<CutFamily>,
}

impl TspVariant {
    pub fn new(base: TspBase) -> Self {
        TspVariant { base, cuts: BTreeSet::new() }
    }

    pub fn with_cuts(base: TspBase, cuts: impl IntoIterator<Item = CutFamily>) -> Self {
        TspVariant { base, cuts: cuts.into_iter().collect() }
    }

    pub fn mtz() -> Self {
        Self::new(TspBase::Mtz)
    }

    pub fn mtz_2clq() -> Self {
        Self::new(TspBase::Mtz2Clq)
    }

    pub fn dl() -> Self {
        Self::new(TspBase::Dl)
    }

    pub fn sc() -> Self {
        Self::new(TspBase::Sc)
    }

    pub fn two_c() -> Self {
        Self::new(TspBase::TwoC)
    }

    /// The five plain variants compared in every table.
    pub fn exact_five() -> Vec<TspVariant> {
        vec![Self::mtz(), Self::mtz_2clq(), Self::dl(), Self::sc(), Self::two_c()]
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        if !self.cuts.is_empty() && !self.base.has_u() {
            return Err(FormulationError::Invalid(format!(
                "inequality sets need sequence variables, base {} has none",
                self.base.name()
            )));
        }
        if self.base == TspBase::Sequencing && !self.cuts.contains(&CutFamily::TwoPath) {
            return Err(FormulationError::Invalid(
                "a bare sequencing base eliminates subtours only with the 2P family".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for TspVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<&str> = Vec::new();
        if self.base != TspBase::Sequencing {
            parts.push(self.base.name());
        }
        for c in &self.cuts {
            parts.push(c.name());
        }
        write!(f, "{}", parts.join("+"))
    }
}

/// One column of the comparison tables: inventory variant x TSP variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormulationSpec {
    pub inventory: InventoryVariant,
    pub tsp: TspVariant,
}

impl FormulationSpec {
    pub fn new(inventory: InventoryVariant, tsp: TspVariant) -> Self {
        FormulationSpec { inventory, tsp }
    }

    /// Parses names like `CMILP+SC`, `SP+MTZ+2CLQ` or `CMILP+DL+NR+R+2P`.
    pub fn parse(s: &str) -> Result<Self, FormulationError> {
        let err = || FormulationError::Parse(s.to_string());
        let tokens: Vec<String> = s.split('+').map(|t| t.trim().to_ascii_uppercase()).collect();
        if tokens.len() < 2 {
            return Err(err());
        }
        let inventory = match tokens[0].as_str() {
            "CMILP" => InventoryVariant::Cmilp,
            "SP" => InventoryVariant::Sp,
            _ => return Err(err()),
        };
        let mut rest = &tokens[1..];
        let base = match rest[0].as_str() {
            "MTZ" => {
                if rest.len() >= 2 && rest[1] == "2CLQ" {
                    rest = &rest[2..];
                    TspBase::Mtz2Clq
                } else {
                    rest = &rest[1..];
                    TspBase::Mtz
                }
            }
            "DL" => {
                rest = &rest[1..];
                TspBase::Dl
            }
            "SC" => {
                rest = &rest[1..];
                TspBase::Sc
            }
            "2C" => {
                rest = &rest[1..];
                TspBase::TwoC
            }
            _ => TspBase::Sequencing,
        };
        let mut cuts = BTreeSet::new();
        for t in rest {
            let c = CutFamily::parse(t).ok_or_else(err)?;
            cuts.insert(c);
        }
        let spec = FormulationSpec { inventory, tsp: TspVariant { base, cuts } };
        spec.tsp.validate()?;
        Ok(spec)
    }

    /// The ten (inventory x plain TSP variant) combinations.
    pub fn base_ten() -> Vec<FormulationSpec> {
        let mut out = Vec::new();
        for inv in [InventoryVariant::Cmilp, InventoryVariant::Sp] {
            for tsp in TspVariant::exact_five() {
                out.push(FormulationSpec::new(inv, tsp));
            }
        }
        out
    }

    /// The nine inequality-set columns for one inventory variant.
    pub fn bektas_columns(inventory: InventoryVariant) -> Vec<FormulationSpec> {
        use CutFamily::*;
        let dl = |cuts: &[CutFamily]| TspVariant::with_cuts(TspBase::Dl, cuts.iter().copied());
        let seq = |cuts: &[CutFamily]| {
            TspVariant::with_cuts(TspBase::Sequencing, cuts.iter().copied())
        };
        [
            dl(&[ThreeClq]),
            dl(&[NonRadical]),
            dl(&[LiftedCircuit]),
            dl(&[TwoPath]),
            dl(&[Radical]),
            seq(&[Radical, TwoPath]),
            seq(&[NonRadical, TwoPath]),
            seq(&[NonRadical, Radical, TwoPath]),
            dl(&[NonRadical, Radical, TwoPath]),
        ]
        .into_iter()
        .map(|tsp| FormulationSpec::new(inventory, tsp))
        .collect()
    }
}

impl fmt::Display for FormulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.inventory.name(), self.tsp)
    }
}

// ---------------------------------------------------------------------------
// Standalone TSP
// ---------------------------------------------------------------------------

/// Builds a model whose binary arc solution is a minimum-cost tour over
/// `dist` (used as given; asymmetric matrices are allowed). Node 0 is the
/// start; sequence variables, when present, live on nodes 1..n with bounds
/// [1, n-1].
pub fn build_tsp(dist: &[Vec<f64>], variant: &TspVariant) -> Result<(Model, VarIndex), FormulationError> {
    let n = dist.len();
    if n < 2 {
        return Err(FormulationError::Invalid("need at least 2 nodes".into()));
    }
    if dist.iter().any(|row| row.len() != n) {
        return Err(FormulationError::Invalid("distance matrix is not square".into()));
    }
    if dist.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(FormulationError::Invalid("distances must be nonnegative".into()));
    }
    variant.validate()?;

    let mut model = Model::new(format!("tsp-n{n}-{variant}"));
    let mut index = VarIndex::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                index.add_var(&mut model, SemKey::new2(Sym::X, i, j), 0.0, 1.0, Integrality::Binary)?;
            }
        }
    }
    let members: Vec<usize> = (1..n).collect();
    if variant.base.has_u() {
        for &i in &members {
            index.add_var(
                &mut model,
                SemKey::new1(Sym::U, i),
                1.0,
                (n - 1) as f64,
                Integrality::Continuous,
            )?;
        }
    }
    if matches!(variant.base, TspBase::Sc | TspBase::TwoC) {
        for sym in [Sym::FlowY, Sym::FlowZ] {
            if sym == Sym::FlowZ && variant.base != TspBase::TwoC {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        index.add_var(
                            &mut model,
                            SemKey::new2(sym, i, j),
                            0.0,
                            f64::INFINITY,
                            Integrality::Continuous,
                        )?;
                    }
                }
            }
        }
    }

    let x = |i: usize, j: usize| index.id(SemKey::new2(Sym::X, i, j));

    let mut obj = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                obj.push((x(i, j), dist[i][j]));
            }
        }
    }
    model.set_objective(obj)?;

    for j in 0..n {
        let terms: Vec<_> = (0..n).filter(|&i| i != j).map(|i| (x(i, j), 1.0)).collect();
        model.add_constraint(LinConstraint::new(terms, Relation::Eq, 1.0, "assign_in"))?;
    }
    for i in 0..n {
        let terms: Vec<_> = (0..n).filter(|&j| j != i).map(|j| (x(i, j), 1.0)).collect();
        model.add_constraint(LinConstraint::new(terms, Relation::Eq, 1.0, "assign_out"))?;
    }

    if variant.base.has_u() {
        let u = |i: usize| index.id(SemKey::new1(Sym::U, i));
        add_sequence_rows(&mut model, variant.base, n, &members, &x, &u)?;
        add_cut_rows(&mut model, &variant.cuts, n, &members, &x, &u)?;
    } else {
        let nf = (n - 1) as f64;
        match variant.base {
            TspBase::Sc => {
                let y = |i: usize, j: usize| index.id(SemKey::new2(Sym::FlowY, i, j));
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            model.add_constraint(LinConstraint::new(
                                vec![(y(i, j), 1.0), (x(i, j), -nf)],
                                Relation::Le,
                                0.0,
                                "sc_vub",
                            ))?;
                        }
                    }
                }
                let source: Vec<_> = (1..n).map(|j| (y(0, j), 1.0)).collect();
                model.add_constraint(LinConstraint::new(source, Relation::Eq, nf, "sc_source"))?;
                for i in 1..n {
                    let mut terms = Vec::new();
                    for j in 0..n {
                        if j != i {
                            terms.push((y(j, i), 1.0));
                            terms.push((y(i, j), -1.0));
                        }
                    }
                    model.add_constraint(LinConstraint::new(terms, Relation::Eq, 1.0, "sc_balance"))?;
                }
            }
            TspBase::TwoC => {
                let y = |i: usize, j: usize| index.id(SemKey::new2(Sym::FlowY, i, j));
                let z = |i: usize, j: usize| index.id(SemKey::new2(Sym::FlowZ, i, j));
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            model.add_constraint(LinConstraint::new(
                                vec![(y(i, j), 1.0), (z(i, j), 1.0), (x(i, j), -nf)],
                                Relation::Eq,
                                0.0,
                                "twoc_couple",
                            ))?;
                        }
                    }
                }
                let sy: Vec<_> =
                    (1..n).flat_map(|j| [(y(0, j), 1.0), (y(j, 0), -1.0)]).collect();
                model.add_constraint(LinConstraint::new(sy, Relation::Eq, nf, "twoc_source_y"))?;
                let sz: Vec<_> =
                    (1..n).flat_map(|j| [(z(0, j), 1.0), (z(j, 0), -1.0)]).collect();
                model.add_constraint(LinConstraint::new(sz, Relation::Eq, -nf, "twoc_source_z"))?;
                for i in 1..n {
                    let ny: Vec<_> = (0..n)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(y(i, j), 1.0), (y(j, i), -1.0)])
                        .collect();
                    model.add_constraint(LinConstraint::new(ny, Relation::Eq, -1.0, "twoc_node_y"))?;
                    let nz: Vec<_> = (0..n)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(z(i, j), 1.0), (z(j, i), -1.0)])
                        .collect();
                    model.add_constraint(LinConstraint::new(nz, Relation::Eq, 1.0, "twoc_node_z"))?;
                }
                for i in 0..n {
                    let deg: Vec<_> = (0..n)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(y(i, j), 1.0), (z(i, j), 1.0)])
                        .collect();
                    model.add_constraint(LinConstraint::new(deg, Relation::Eq, nf, "twoc_degree"))?;
                }
            }
            _ => unreachable!("u-bases handled above"),
        }
    }

    Ok((model, index))
}

/// Sequence-variable subtour rows for one node set. `ncities` is the size
/// of the full graph the coefficients refer to (nodes plus the start node).
fn add_sequence_rows<FX, FU>(
    model: &mut Model,
    base: TspBase,
    ncities: usize,
    members: &[usize],
    x: &FX,
    u: &FU,
) -> Result<(), ModelError>
where
    FX: Fn(usize, usize) -> VarId,
    FU: Fn(usize) -> VarId,
{
    let nf = ncities as f64;
    for &i in members {
        for &j in members {
            if i == j {
                continue;
            }
            match base {
                TspBase::Mtz | TspBase::Mtz2Clq => {
                    model.add_constraint(LinConstraint::new(
                        vec![(u(i), 1.0), (u(j), -1.0), (x(i, j), nf)],
                        Relation::Le,
                        nf - 1.0,
                        "mtz",
                    ))?;
                }
                TspBase::Dl => {
                    model.add_constraint(LinConstraint::new(
                        vec![(u(i), 1.0), (u(j), -1.0), (x(i, j), nf - 1.0), (x(j, i), nf - 3.0)],
                        Relation::Le,
                        nf - 2.0,
                        "dl",
                    ))?;
                }
                TspBase::Sequencing => {}
                _ => unreachable!(),
            }
        }
    }
    if base == TspBase::Mtz2Clq {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                model.add_constraint(LinConstraint::new(
                    vec![(x(i, j), 1.0), (x(j, i), 1.0)],
                    Relation::Le,
                    1.0,
                    "two_clq",
                ))?;
            }
        }
    }
    Ok(())
}

type Terms = Vec<(VarId, f64)>;

/// The five lifted three-node families over ordered (or, for the summed
/// clique form, unordered) triples of `members`. Returns the created rows.
fn add_cut_rows<FX, FU>(
    model: &mut Model,
    cuts: &BTreeSet<CutFamily>,
    ncities: usize,
    members: &[usize],
    x: &FX,
    u: &FU,
) -> Result<Vec<ConstraintId>, ModelError>
where
    FX: Fn(usize, usize) -> VarId,
    FU: Fn(usize) -> VarId,
{
    let nf = ncities as f64;
    let mut ids = Vec::new();

    // generalized-DL triple inequality
    let eq6 = |i: usize, j: usize, k: usize| -> (Terms, f64) {
        (
            vec![
                (u(i), 1.0),
                (u(k), -1.0),
                (x(i, j), nf - 1.0),
                (x(j, k), nf - 1.0),
                (x(k, j), nf - 3.0),
                (x(j, i), nf - 3.0),
                (x(i, k), nf),
                (x(k, i), nf - 4.0),
            ],
            2.0 * nf - 4.0,
        )
    };
    let eq7 = |i: usize, j: usize, k: usize| -> (Terms, f64) {
        (
            vec![
                (u(i), 2.0),
                (u(j), -1.0),
                (u(k), -1.0),
                (x(i, j), 2.0 * nf - 2.0),
                (x(i, k), 2.0 * nf - 2.0),
                (x(j, i), 2.0 * nf - 8.0),
                (x(k, i), 2.0 * nf - 8.0),
                (x(j, k), 2.0 * nf - 5.0),
                (x(k, j), 2.0 * nf - 5.0),
            ],
            4.0 * nf - 10.0,
        )
    };
    let eq8 = |i: usize, j: usize, k: usize| -> (Terms, f64) {
        (
            vec![
                (u(i), -2.0),
                (u(j), 1.0),
                (u(k), 1.0),
                (x(i, j), 2.0 * nf - 8.0),
                (x(i, k), 2.0 * nf - 8.0),
                (x(j, i), 2.0 * nf - 2.0),
                (x(k, i), 2.0 * nf - 2.0),
                (x(j, k), 2.0 * nf - 5.0),
                (x(k, j), 2.0 * nf - 5.0),
            ],
            4.0 * nf - 10.0,
        )
    };
    let eq9 = |i: usize, j: usize, k: usize| -> (Terms, f64) {
        (
            vec![
                (u(i), 1.0),
                (u(k), -1.0),
                (x(i, k), 2.0 * nf - 3.0),
                (x(k, i), nf - 4.0),
                (x(i, j), nf - 1.0),
                (x(j, k), nf - 1.0),
            ],
            2.0 * nf - 4.0,
        )
    };
    let eq10 = |i: usize, j: usize, k: usize| -> (Terms, f64) {
        (
            vec![
                (u(k), 1.0),
                (u(i), -1.0),
                (x(i, k), 2.0 * nf - 7.0),
                (x(k, i), nf - 1.0),
                (x(i, j), nf - 4.0),
                (x(j, k), nf - 4.0),
            ],
            2.0 * nf - 6.0,
        )
    };

    let m = members.len();
    let mut ordered = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                if a != b && b != c && a != c {
                    ordered.push((members[a], members[b], members[c]));
                }
            }
        }
    }

    for family in cuts {
        match family {
            CutFamily::NonRadical => {
                for &(i, j, k) in &ordered {
                    let (t, rhs) = eq6(i, j, k);
                    ids.push(model.add_constraint(LinConstraint::new(t, Relation::Le, rhs, "nr"))?);
                }
            }
            CutFamily::Radical => {
                for &(i, j, k) in &ordered {
                    let (t, rhs) = eq7(i, j, k);
                    ids.push(model.add_constraint(LinConstraint::new(t, Relation::Le, rhs, "r"))?);
                }
            }
            CutFamily::ThreeClq => {
                // summed radial pair: the sequence terms cancel and the
                // three-node clique remains (scaled)
                for a in 0..m {
                    for b in a + 1..m {
                        for c in b + 1..m {
                            let (i, j, k) = (members[a], members[b], members[c]);
                            let (mut t, r1) = eq7(i, j, k);
                            let (t8, r8) = eq8(i, j, k);
                            t.extend(t8);
                            ids.push(model.add_constraint(LinConstraint::new(
                                t,
                                Relation::Le,
                                r1 + r8,
                                "three_clq",
                            ))?);
                        }
                    }
                }
            }
            CutFamily::TwoPath => {
                for &(i, j, k) in &ordered {
                    let (t, rhs) = eq9(i, j, k);
                    ids.push(model.add_constraint(LinConstraint::new(
                        t,
                        Relation::Le,
                        rhs,
                        "two_path",
                    ))?);
                    let (t, rhs) = eq10(i, j, k);
                    ids.push(model.add_constraint(LinConstraint::new(
                        t,
                        Relation::Le,
                        rhs,
                        "two_path",
                    ))?);
                }
            }
            CutFamily::LiftedCircuit => {
                for &(i, j, k) in &ordered {
                    let (mut t, r9) = eq9(i, j, k);
                    let (t10, r10) = eq10(i, j, k);
                    t.extend(t10);
                    ids.push(model.add_constraint(LinConstraint::new(
                        t,
                        Relation::Le,
                        r9 + r10,
                        "l3",
                    ))?);
                }
            }
        }
    }
    Ok(ids)
}

/// Adds an inequality set to an existing standalone TSP model built with a
/// sequence-variable base. Returns the new constraint ids.
pub fn add_bektas_inequalities(
    model: &mut Model,
    index: &VarIndex,
    cuts: &BTreeSet<CutFamily>,
    n: usize,
) -> Result<Vec<ConstraintId>, FormulationError> {
    let members: Vec<usize> = (1..n).collect();
    for &i in &members {
        if index.get(SemKey::new1(Sym::U, i)).is_none() {
            return Err(FormulationError::MissingU);
        }
    }
    let x = |i: usize, j: usize| index.id(SemKey::new2(Sym::X, i, j));
    let u = |i: usize| index.id(SemKey::new1(Sym::U, i));
    Ok(add_cut_rows(model, cuts, n, &members, &x, &u)?)
}

// ---------------------------------------------------------------------------
// Standalone lot sizing
// ---------------------------------------------------------------------------

/// Classical lot-sizing MILP: order indicator, order quantity and end
/// inventory per period, big-M linking with the remaining-demand sum.
pub fn build_wagner_whitin_milp(
    demand: &[u64],
    k: f64,
    h: f64,
    v: f64,
) -> Result<(Model, VarIndex), FormulationError> {
    let n = demand.len();
    if n < 1 {
        return Err(FormulationError::Invalid("empty demand series".into()));
    }
    if k < 0.0 || h < 0.0 || v < 0.0 {
        return Err(FormulationError::Invalid("costs must be nonnegative".into()));
    }
    let mut model = Model::new(format!("ww-milp-n{n}"));
    let mut index = VarIndex::new();
    for t in 1..=n {
        index.add_var(&mut model, SemKey::new1(Sym::Delta, t), 0.0, 1.0, Integrality::Binary)?;
    }
    for t in 1..=n {
        index.add_var(&mut model, SemKey::new1(Sym::Q, t), 0.0, f64::INFINITY, Integrality::Continuous)?;
    }
    for t in 1..=n {
        index.add_var(&mut model, SemKey::new1(Sym::Inv, t), 0.0, f64::INFINITY, Integrality::Continuous)?;
    }
    let delta = |t: usize| index.id(SemKey::new1(Sym::Delta, t));
    let q = |t: usize| index.id(SemKey::new1(Sym::Q, t));
    let inv = |t: usize| index.id(SemKey::new1(Sym::Inv, t));

    for t in 1..=n {
        let mut terms = vec![(inv(t), 1.0), (q(t), -1.0)];
        if t > 1 {
            terms.push((inv(t - 1), -1.0));
        }
        model.add_constraint(LinConstraint::new(
            terms,
            Relation::Eq,
            -(demand[t - 1] as f64),
            "inv_balance",
        ))?;
        let big_m: u64 = demand[t - 1..].iter().sum();
        model.add_constraint(LinConstraint::new(
            vec![(q(t), 1.0), (delta(t), -(big_m as f64))],
            Relation::Le,
            0.0,
            "inv_bigm",
        ))?;
    }
    let mut obj = Vec::new();
    for t in 1..=n {
        obj.push((delta(t), k));
        obj.push((inv(t), h));
        obj.push((q(t), v));
    }
    model.set_objective(obj)?;
    Ok((model, index))
}

/// Shortest-path lot-sizing model over order-coverage arcs: an order arc
/// (t,k) covers demands t..k-1 at cost omega(t,k); a zero-cost skip arc
/// bridges a single zero-demand period without placing an order, which lets
/// the path defer its first order past leading zeros. The LP relaxation is
/// integral and its optimum equals the dynamic program.
pub fn build_wagner_whitin_sp(
    demand: &[u64],
    k: f64,
    h: f64,
    v: f64,
) -> Result<(Model, VarIndex), FormulationError> {
    let n = demand.len();
    if n < 1 {
        return Err(FormulationError::Invalid("empty demand series".into()));
    }
    if k < 0.0 || h < 0.0 || v < 0.0 {
        return Err(FormulationError::Invalid("costs must be nonnegative".into()));
    }
    let mut model = Model::new(format!("ww-sp-n{n}"));
    let mut index = VarIndex::new();
    let skip_ok: Vec<bool> = demand.iter().map(|&d| d == 0).collect();
    let mut obj = Vec::new();
    for t in 1..=n {
        for kk in t + 1..=n + 1 {
            let id = index.add_var(
                &mut model,
                SemKey::new2(Sym::W, t, kk),
                0.0,
                f64::INFINITY,
                Integrality::Continuous,
            )?;
            obj.push((id, omega(t, kk, demand, k, h, v).expect("valid arc")));
        }
    }
    for t in 1..=n {
        if skip_ok[t - 1] {
            index.add_var(&mut model, SemKey::new1(Sym::Skip, t), 0.0, f64::INFINITY, Integrality::Continuous)?;
        }
    }
    let w = |t: usize, kk: usize| index.id(SemKey::new2(Sym::W, t, kk));
    let skip = |t: usize| index.get(SemKey::new1(Sym::Skip, t));

    // node balances: unit path from node 1 to node n+1
    for node in 1..=n + 1 {
        let mut terms: Terms = Vec::new();
        if node <= n {
            for kk in node + 1..=n + 1 {
                terms.push((w(node, kk), 1.0));
            }
            if let Some(s) = skip(node) {
                terms.push((s, 1.0));
            }
        }
        for t in 1..node {
            terms.push((w(t, node), -1.0));
        }
        if node > 1 {
            if let Some(s) = skip(node - 1) {
                terms.push((s, -1.0));
            }
        }
        let rhs = if node == 1 {
            1.0
        } else if node == n + 1 {
            -1.0
        } else {
            0.0
        };
        model.add_constraint(LinConstraint::new(terms, Relation::Eq, rhs, "sp_path"))?;
    }
    model.set_objective(obj)?;
    Ok((model, index))
}

// ---------------------------------------------------------------------------
// Combined IRP model
// ---------------------------------------------------------------------------

/// Builds the full IRP model for one instance and formulation choice.
///
/// Per period: arc binaries over warehouse + retailers, degree constraints
/// with the order indicators on the right-hand side (trip indicator for the
/// warehouse), the chosen subtour machinery instantiated on the r+1-node
/// graph, and the dispatching link delta <= dsp. The inventory side runs per
/// retailer. Unit ordering cost is not part of this problem.
pub fn build_irp(inst: &IrpInstance, spec: &FormulationSpec) -> Result<(Model, VarIndex), FormulationError> {
    inst.validate()?;
    spec.tsp.validate()?;
    let r = inst.num_retailers;
    let n = inst.num_periods;
    let ncities = r + 1;
    let nf = ncities as f64;

    let mut model = Model::new(format!("irp-{}-{}", inst.name, spec));
    let mut index = VarIndex::new();

    for t in 1..=n {
        for i in 0..=r {
            for j in 0..=r {
                if i != j {
                    index.add_var(
                        &mut model,
                        SemKey::new3(Sym::X, t, i, j),
                        0.0,
                        1.0,
                        Integrality::Binary,
                    )?;
                }
            }
        }
    }
    for t in 1..=n {
        index.add_var(&mut model, SemKey::new1(Sym::Dispatch, t), 0.0, 1.0, Integrality::Binary)?;
    }
    let delta_integrality = match spec.inventory {
        InventoryVariant::Cmilp => Integrality::Binary,
        // order indicators are forced integral by the arc binaries; keeping
        // them continuous leaves branching to the routing side
        InventoryVariant::Sp => Integrality::Continuous,
    };
    for t in 1..=n {
        for i in 1..=r {
            index.add_var(&mut model, SemKey::new2(Sym::Delta, t, i), 0.0, 1.0, delta_integrality)?;
        }
    }

    let x = |idx: &VarIndex, t: usize, i: usize, j: usize| idx.id(SemKey::new3(Sym::X, t, i, j));
    let dsp = |idx: &VarIndex, t: usize| idx.id(SemKey::new1(Sym::Dispatch, t));
    let delta = |idx: &VarIndex, t: usize, i: usize| idx.id(SemKey::new2(Sym::Delta, t, i));

    // routing auxiliaries
    if spec.tsp.base.has_u() {
        for t in 1..=n {
            for i in 1..=r {
                index.add_var(
                    &mut model,
                    SemKey::new2(Sym::U, t, i),
                    1.0,
                    r as f64,
                    Integrality::Continuous,
                )?;
            }
        }
    }
    if matches!(spec.tsp.base, TspBase::Sc | TspBase::TwoC) {
        for sym in [Sym::FlowY, Sym::FlowZ] {
            if sym == Sym::FlowZ && spec.tsp.base != TspBase::TwoC {
                continue;
            }
            for t in 1..=n {
                for i in 0..=r {
                    for j in 0..=r {
                        if i != j {
                            index.add_var(
                                &mut model,
                                SemKey::new3(sym, t, i, j),
                                0.0,
                                f64::INFINITY,
                                Integrality::Continuous,
                            )?;
                        }
                    }
                }
            }
        }
    }

    // inventory variables
    match spec.inventory {
        InventoryVariant::Cmilp => {
            for t in 1..=n {
                for i in 1..=r {
                    index.add_var(
                        &mut model,
                        SemKey::new2(Sym::Q, t, i),
                        0.0,
                        f64::INFINITY,
                        Integrality::Continuous,
                    )?;
                }
            }
            for t in 1..=n {
                for i in 1..=r {
                    // zero final inventory
                    let hi = if t == n { 0.0 } else { f64::INFINITY };
                    index.add_var(&mut model, SemKey::new2(Sym::Inv, t, i), 0.0, hi, Integrality::Continuous)?;
                }
            }
        }
        InventoryVariant::Sp => {
            for i in 1..=r {
                for t in 1..=n {
                    for kk in t + 1..=n + 1 {
                        index.add_var(
                            &mut model,
                            SemKey::new3(Sym::W, i, t, kk),
                            0.0,
                            f64::INFINITY,
                            Integrality::Continuous,
                        )?;
                    }
                }
                for t in 1..=n {
                    if inst.demand_at(t, i) == 0 {
                        index.add_var(
                            &mut model,
                            SemKey::new2(Sym::Skip, i, t),
                            0.0,
                            f64::INFINITY,
                            Integrality::Continuous,
                        )?;
                    }
                }
            }
        }
    }

    // objective
    let mut obj = Vec::new();
    for t in 1..=n {
        for i in 0..=r {
            for j in 0..=r {
                if i != j {
                    obj.push((x(&index, t, i, j), inst.dist[i][j]));
                }
            }
        }
        obj.push((dsp(&index, t), inst.dispatch));
    }
    match spec.inventory {
        InventoryVariant::Cmilp => {
            for t in 1..=n {
                for i in 1..=r {
                    obj.push((delta(&index, t, i), inst.ordering[i - 1]));
                    obj.push((index.id(SemKey::new2(Sym::Inv, t, i)), inst.holding[i - 1]));
                }
            }
        }
        InventoryVariant::Sp => {
            for i in 1..=r {
                let series = inst.demand_series(i);
                for t in 1..=n {
                    for kk in t + 1..=n + 1 {
                        let cost = omega(t, kk, &series, inst.ordering[i - 1], inst.holding[i - 1], 0.0)
                            .expect("valid arc");
                        obj.push((index.id(SemKey::new3(Sym::W, i, t, kk)), cost));
                    }
                }
            }
        }
    }
    model.set_objective(obj)?;

    // degree constraints, linked to the order/trip indicators
    for t in 1..=n {
        for j in 0..=r {
            let mut terms: Terms =
                (0..=r).filter(|&i| i != j).map(|i| (x(&index, t, i, j), 1.0)).collect();
            let target = if j == 0 { dsp(&index, t) } else { delta(&index, t, j) };
            terms.push((target, -1.0));
            model.add_constraint(LinConstraint::new(terms, Relation::Eq, 0.0, "assign_in"))?;
        }
        for i in 0..=r {
            let mut terms: Terms =
                (0..=r).filter(|&j| j != i).map(|j| (x(&index, t, i, j), 1.0)).collect();
            let target = if i == 0 { dsp(&index, t) } else { delta(&index, t, i) };
            terms.push((target, -1.0));
            model.add_constraint(LinConstraint::new(terms, Relation::Eq, 0.0, "assign_out"))?;
        }
        for i in 1..=r {
            model.add_constraint(LinConstraint::new(
                vec![(delta(&index, t, i), 1.0), (dsp(&index, t), -1.0)],
                Relation::Le,
                0.0,
                "dispatch_link",
            ))?;
        }
    }

    // subtour machinery per period
    let members: Vec<usize> = (1..=r).collect();
    for t in 1..=n {
        let xc = |i: usize, j: usize| x(&index, t, i, j);
        if spec.tsp.base.has_u() {
            let uc = |i: usize| index.id(SemKey::new2(Sym::U, t, i));
            add_sequence_rows(&mut model, spec.tsp.base, ncities, &members, &xc, &uc)?;
            add_cut_rows(&mut model, &spec.tsp.cuts, ncities, &members, &xc, &uc)?;
        }
        match spec.tsp.base {
            TspBase::Sc => {
                let y = |i: usize, j: usize| index.id(SemKey::new3(Sym::FlowY, t, i, j));
                let rf = r as f64;
                for i in 0..=r {
                    for j in 0..=r {
                        if i != j {
                            model.add_constraint(LinConstraint::new(
                                vec![(y(i, j), 1.0), (xc(i, j), -rf)],
                                Relation::Le,
                                0.0,
                                "sc_vub",
                            ))?;
                        }
                    }
                }
                // warehouse pushes one unit per visited retailer
                let mut source: Terms = (1..=r).map(|j| (y(0, j), 1.0)).collect();
                for i in 1..=r {
                    source.push((delta(&index, t, i), -1.0));
                }
                model.add_constraint(LinConstraint::new(source, Relation::Eq, 0.0, "sc_source"))?;
                for i in 1..=r {
                    let mut terms: Terms = Vec::new();
                    for j in 0..=r {
                        if j != i {
                            terms.push((y(j, i), 1.0));
                            terms.push((y(i, j), -1.0));
                        }
                    }
                    terms.push((delta(&index, t, i), -1.0));
                    model.add_constraint(LinConstraint::new(terms, Relation::Eq, 0.0, "sc_balance"))?;
                }
            }
            TspBase::TwoC => {
                let y = |i: usize, j: usize| index.id(SemKey::new3(Sym::FlowY, t, i, j));
                let z = |i: usize, j: usize| index.id(SemKey::new3(Sym::FlowZ, t, i, j));
                let rf = r as f64;
                for i in 0..=r {
                    for j in 0..=r {
                        if i != j {
                            model.add_constraint(LinConstraint::new(
                                vec![(y(i, j), 1.0), (z(i, j), 1.0), (xc(i, j), -rf)],
                                Relation::Eq,
                                0.0,
                                "twoc_couple",
                            ))?;
                        }
                    }
                }
                let mut sy: Terms =
                    (1..=r).flat_map(|j| [(y(0, j), 1.0), (y(j, 0), -1.0)]).collect();
                for i in 1..=r {
                    sy.push((delta(&index, t, i), -1.0));
                }
                model.add_constraint(LinConstraint::new(sy, Relation::Eq, 0.0, "twoc_source_y"))?;
                let mut sz: Terms =
                    (1..=r).flat_map(|j| [(z(0, j), 1.0), (z(j, 0), -1.0)]).collect();
                for i in 1..=r {
                    sz.push((delta(&index, t, i), 1.0));
                }
                model.add_constraint(LinConstraint::new(sz, Relation::Eq, 0.0, "twoc_source_z"))?;
                for i in 1..=r {
                    let mut ny: Terms = (0..=r)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(y(i, j), 1.0), (y(j, i), -1.0)])
                        .collect();
                    ny.push((delta(&index, t, i), 1.0));
                    model.add_constraint(LinConstraint::new(ny, Relation::Eq, 0.0, "twoc_node_y"))?;
                    let mut nz: Terms = (0..=r)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(z(i, j), 1.0), (z(j, i), -1.0)])
                        .collect();
                    nz.push((delta(&index, t, i), -1.0));
                    model.add_constraint(LinConstraint::new(nz, Relation::Eq, 0.0, "twoc_node_z"))?;
                }
                for i in 0..=r {
                    let mut deg: Terms = (0..=r)
                        .filter(|&j| j != i)
                        .flat_map(|j| [(y(i, j), 1.0), (z(i, j), 1.0)])
                        .collect();
                    let target = if i == 0 { dsp(&index, t) } else { delta(&index, t, i) };
                    deg.push((target, -rf));
                    model.add_constraint(LinConstraint::new(deg, Relation::Eq, 0.0, "twoc_degree"))?;
                }
            }
            _ => {}
        }
    }

    // inventory constraints
    match spec.inventory {
        InventoryVariant::Cmilp => {
            let q = |idx: &VarIndex, t: usize, i: usize| idx.id(SemKey::new2(Sym::Q, t, i));
            let iv = |idx: &VarIndex, t: usize, i: usize| idx.id(SemKey::new2(Sym::Inv, t, i));
            for i in 1..=r {
                for t in 1..=n {
                    let mut terms = vec![(iv(&index, t, i), 1.0), (q(&index, t, i), -1.0)];
                    if t > 1 {
                        terms.push((iv(&index, t - 1, i), -1.0));
                    }
                    model.add_constraint(LinConstraint::new(
                        terms,
                        Relation::Eq,
                        -(inst.demand_at(t, i) as f64),
                        "inv_balance",
                    ))?;
                    let big_m: u64 = (t..=n).map(|s| inst.demand_at(s, i)).sum();
                    model.add_constraint(LinConstraint::new(
                        vec![(q(&index, t, i), 1.0), (delta(&index, t, i), -(big_m as f64))],
                        Relation::Le,
                        0.0,
                        "inv_bigm",
                    ))?;
                }
            }
        }
        InventoryVariant::Sp => {
            for i in 1..=r {
                let w = |t: usize, kk: usize| index.id(SemKey::new3(Sym::W, i, t, kk));
                let skip = |t: usize| index.get(SemKey::new2(Sym::Skip, i, t));
                for node in 1..=n + 1 {
                    let mut terms: Terms = Vec::new();
                    if node <= n {
                        for kk in node + 1..=n + 1 {
                            terms.push((w(node, kk), 1.0));
                        }
                        if let Some(s) = skip(node) {
                            terms.push((s, 1.0));
                        }
                    }
                    for t in 1..node {
                        terms.push((w(t, node), -1.0));
                    }
                    if node > 1 {
                        if let Some(s) = skip(node - 1) {
                            terms.push((s, -1.0));
                        }
                    }
                    let rhs = if node == 1 {
                        1.0
                    } else if node == n + 1 {
                        -1.0
                    } else {
                        0.0
                    };
                    model.add_constraint(LinConstraint::new(terms, Relation::Eq, rhs, "sp_path"))?;
                }
                for t in 1..=n {
                    let mut terms: Terms = vec![(delta(&index, t, i), 1.0)];
                    for kk in t + 1..=n + 1 {
                        terms.push((w(t, kk), -1.0));
                    }
                    model.add_constraint(LinConstraint::new(terms, Relation::Eq, 0.0, "sp_delta"))?;
                }
            }
        }
    }

    debug_assert!(nf >= 2.0);
    Ok((model, index))
}

/// Reads a solved assignment back into a replenishment plan and re-prices it
/// from the raw instance data.
pub fn decode_solution(
    inst: &IrpInstance,
    spec: &FormulationSpec,
    index: &VarIndex,
    values: &[f64],
) -> Result<PlanResult, FormulationError> {
    let r = inst.num_retailers;
    let n = inst.num_periods;
    let get = |key: SemKey| -> f64 { index.value(values, key).unwrap_or(0.0) };
    let on = |key: SemKey| -> bool { get(key) > 0.5 };

    let mut delta = vec![vec![false; r]; n];
    for t in 1..=n {
        for i in 1..=r {
            delta[t - 1][i - 1] = on(SemKey::new2(Sym::Delta, t, i));
        }
    }

    let mut quantities = vec![vec![0.0; r]; n];
    match spec.inventory {
        InventoryVariant::Cmilp => {
            for t in 1..=n {
                for i in 1..=r {
                    quantities[t - 1][i - 1] = get(SemKey::new2(Sym::Q, t, i));
                }
            }
        }
        InventoryVariant::Sp => {
            for i in 1..=r {
                for t in 1..=n {
                    let mut qty = 0.0;
                    for kk in t + 1..=n + 1 {
                        let flow = get(SemKey::new3(Sym::W, i, t, kk));
                        if flow > 1e-9 {
                            let seg: u64 = (t..kk).map(|s| inst.demand_at(s, i)).sum();
                            qty += flow * seg as f64;
                        }
                    }
                    quantities[t - 1][i - 1] = qty;
                }
            }
        }
    }

    let mut routes = Vec::with_capacity(n);
    let mut routing = 0.0;
    let mut dispatch = 0.0;
    for t in 1..=n {
        if !on(SemKey::new1(Sym::Dispatch, t)) {
            routes.push(Vec::new());
            continue;
        }
        dispatch += inst.dispatch;
        let visited: Vec<usize> = (1..=r).filter(|&i| delta[t - 1][i - 1]).collect();
        let mut succ = vec![usize::MAX; r + 1];
        for i in 0..=r {
            for j in 0..=r {
                if i != j && on(SemKey::new3(Sym::X, t, i, j)) {
                    if succ[i] != usize::MAX {
                        return Err(FormulationError::Decode(format!(
                            "period {t}: node {i} has two outgoing arcs"
                        )));
                    }
                    succ[i] = j;
                }
            }
        }
        let mut route = vec![0usize];
        let mut cur = 0usize;
        loop {
            let nxt = succ[cur];
            if nxt == usize::MAX {
                return Err(FormulationError::Decode(format!(
                    "period {t}: route breaks at node {cur}"
                )));
            }
            routing += inst.dist[cur][nxt];
            if nxt == 0 {
                break;
            }
            route.push(nxt);
            cur = nxt;
        }
        if route.len() != visited.len() + 1 {
            return Err(FormulationError::Decode(format!(
                "period {t}: route covers {} nodes, {} visited",
                route.len() - 1,
                visited.len()
            )));
        }
        routes.push(route);
    }

    let mut ordering = 0.0;
    let mut holding = 0.0;
    for i in 1..=r {
        let mut inv = 0.0;
        for t in 1..=n {
            if delta[t - 1][i - 1] {
                ordering += inst.ordering[i - 1];
            }
            inv += quantities[t - 1][i - 1];
            inv -= inst.demand_at(t, i) as f64;
            if inv < -1e-6 {
                return Err(FormulationError::Decode(format!(
                    "retailer {i} stocks out in period {t} (inventory {inv})"
                )));
            }
            holding += inst.holding[i - 1] * inv;
        }
    }

    let breakdown = CostBreakdown { routing, ordering, holding, dispatch };
    Ok(PlanResult { delta, quantities, routes, total_cost: breakdown.total(), breakdown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_verify_instance;

    #[test]
    fn parse_and_display_roundtrip() {
        for name in [
            "CMILP+MTZ",
            "CMILP+MTZ+2CLQ",
            "CMILP+DL",
            "CMILP+SC",
            "CMILP+2C",
            "SP+MTZ",
            "SP+SC",
            "CMILP+DL+3CLQ",
            "CMILP+DL+NR",
            "CMILP+DL+L3",
            "CMILP+DL+2P",
            "CMILP+DL+R",
            "CMILP+R+2P",
            "CMILP+NR+2P",
            "CMILP+NR+R+2P",
            "CMILP+DL+NR+R+2P",
            "SP+DL+NR+R+2P",
        ] {
            let spec = FormulationSpec::parse(name).unwrap();
            assert_eq!(spec.to_string(), name, "roundtrip failed for {name}");
        }
        assert!(FormulationSpec::parse("CMILP").is_err());
        assert!(FormulationSpec::parse("FOO+MTZ").is_err());
        assert!(FormulationSpec::parse("CMILP+SC+NR").is_err());
        assert!(FormulationSpec::parse("CMILP+NR").is_err()); // no 2P
        assert!(FormulationSpec::parse("CMILP+XYZ").is_err());
        assert_eq!(FormulationSpec::base_ten().len(), 10);
        assert_eq!(FormulationSpec::bektas_columns(InventoryVariant::Cmilp).len(), 9);
    }

    #[test]
    fn tsp_structure_counts() {
        let d = crate::instance::dist_from_coords(&[(0, 0), (10, 0), (0, 10), (10, 10)]);
        let n = 4;
        let (m, _) = build_tsp(&d, &TspVariant::mtz()).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["assign_in"], n);
        assert_eq!(counts["assign_out"], n);
        assert_eq!(counts["mtz"], (n - 1) * (n - 2));

        let (m, _) = build_tsp(&d, &TspVariant::mtz_2clq()).unwrap();
        assert_eq!(m.tag_counts()["two_clq"], 3); // C(3,2)

        let (m, _) = build_tsp(&d, &TspVariant::dl()).unwrap();
        assert_eq!(m.tag_counts()["dl"], (n - 1) * (n - 2));

        let (m, _) = build_tsp(&d, &TspVariant::sc()).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["sc_vub"], n * (n - 1));
        assert_eq!(counts["sc_source"], 1);
        assert_eq!(counts["sc_balance"], n - 1);

        let (m, _) = build_tsp(&d, &TspVariant::two_c()).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["twoc_couple"], n * (n - 1));
        assert_eq!(counts["twoc_degree"], n);

        // cut families over the 3 non-start nodes: P(3,3) = 6 ordered triples
        let (m, _) =
            build_tsp(&d, &TspVariant::with_cuts(TspBase::Dl, [CutFamily::NonRadical])).unwrap();
        assert_eq!(m.tag_counts()["nr"], 6);
        let (m, _) =
            build_tsp(&d, &TspVariant::with_cuts(TspBase::Dl, [CutFamily::TwoPath])).unwrap();
        assert_eq!(m.tag_counts()["two_path"], 12);
        let (m, _) =
            build_tsp(&d, &TspVariant::with_cuts(TspBase::Dl, [CutFamily::ThreeClq])).unwrap();
        assert_eq!(m.tag_counts()["three_clq"], 1);

        assert!(build_tsp(&[vec![0.0]], &TspVariant::mtz()).is_err());
    }

    #[test]
    fn bektas_requires_u_variables() {
        let d = crate::instance::dist_from_coords(&[(0, 0), (10, 0), (0, 10), (10, 10)]);
        let (mut m, idx) = build_tsp(&d, &TspVariant::sc()).unwrap();
        let cuts: BTreeSet<_> = [CutFamily::NonRadical].into_iter().collect();
        assert!(matches!(
            add_bektas_inequalities(&mut m, &idx, &cuts, 4),
            Err(FormulationError::MissingU)
        ));

        let (mut m, idx) = build_tsp(&d, &TspVariant::dl()).unwrap();
        let ids = add_bektas_inequalities(&mut m, &idx, &cuts, 4).unwrap();
        assert_eq!(ids.len(), 6);
    }

    #[test]
    fn ww_milp_structure() {
        let (m, idx) = build_wagner_whitin_milp(&[10, 20], 10.0, 1.0, 0.0).unwrap();
        assert_eq!(m.num_vars(), 6);
        let counts = m.tag_counts();
        assert_eq!(counts["inv_balance"], 2);
        assert_eq!(counts["inv_bigm"], 2);
        assert!(idx.get(SemKey::new1(Sym::Delta, 1)).is_some());
        assert!(build_wagner_whitin_milp(&[], 1.0, 1.0, 0.0).is_err());
        assert!(build_wagner_whitin_milp(&[1], -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ww_sp_structure() {
        let (m, idx) = build_wagner_whitin_sp(&[10, 20], 10.0, 1.0, 0.0).unwrap();
        // arcs (1,2),(1,3),(2,3); no skip arcs; N+2 balance rows
        assert_eq!(m.num_vars(), 3);
        assert_eq!(m.tag_counts()["sp_path"], 3);
        assert!(idx.get(SemKey::new2(Sym::W, 1, 2)).is_some());

        // zero-demand period creates a skip arc
        let (m, idx) = build_wagner_whitin_sp(&[0, 10], 10.0, 1.0, 0.0).unwrap();
        assert!(idx.get(SemKey::new1(Sym::Skip, 1)).is_some());
        assert!(idx.get(SemKey::new1(Sym::Skip, 2)).is_none());
        assert_eq!(m.num_vars(), 4);
    }

    #[test]
    fn irp_structure_counts() {
        let inst = generate_verify_instance(1, 3, 2).unwrap();
        let (r, n) = (3usize, 2usize);
        let spec = FormulationSpec::parse("CMILP+MTZ").unwrap();
        let (m, idx) = build_irp(&inst, &spec).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["assign_in"], n * (r + 1));
        assert_eq!(counts["assign_out"], n * (r + 1));
        assert_eq!(counts["dispatch_link"], n * r);
        assert_eq!(counts["mtz"], n * r * (r - 1));
        assert_eq!(counts["inv_balance"], n * r);
        assert_eq!(counts["inv_bigm"], n * r);
        // x arcs + dsp + u + delta + q + I
        assert_eq!(
            m.num_vars(),
            n * (r + 1) * r + n + n * r + n * r + n * r + n * r
        );
        assert!(idx.get(SemKey::new1(Sym::Dispatch, 1)).is_some());

        let spec = FormulationSpec::parse("SP+SC").unwrap();
        let (m, _) = build_irp(&inst, &spec).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["sc_vub"], n * (r + 1) * r);
        assert_eq!(counts["sc_source"], n);
        assert_eq!(counts["sc_balance"], n * r);
        assert_eq!(counts["sp_path"], r * (n + 1));
        assert_eq!(counts["sp_delta"], r * n);

        let spec = FormulationSpec::parse("CMILP+2C").unwrap();
        let (m, _) = build_irp(&inst, &spec).unwrap();
        let counts = m.tag_counts();
        assert_eq!(counts["twoc_couple"], n * (r + 1) * r);
        assert_eq!(counts["twoc_degree"], n * (r + 1));
    }

    #[test]
    fn omega_reexported() {
        assert_eq!(omega(1, 2, &[10, 20], 10.0, 1.0, 0.0).unwrap(), 10.0);
    }
}
