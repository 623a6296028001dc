//! Problem data for the uncapacitated IRP.
//!
//! An [`IrpInstance`] bundles everything a formulation needs: demands per
//! period and retailer, holding and ordering costs, a distance matrix and an
//! optional coordinate layout. Two generators reproduce the experimental
//! designs used throughout the benchmark harness, and a plain-text format
//! makes instances portable across implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Canonical 17-point layout (warehouse + 16 retailers) used by design 2.
const DEFAULT_LAYOUT17: &str = include_str!("../data/layout17.txt");

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scenario id {0} outside 1..=18")]
    BadScenario(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One IRP instance: a warehouse (node 0), `num_retailers` retailers and a
/// planning horizon of `num_periods` periods. Initial inventories are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IrpInstance {
    pub name: String,
    pub num_retailers: usize,
    pub num_periods: usize,
    /// Integer points for warehouse (index 0) and retailers 1..=r, if known.
    pub coords: Option<Vec<(i64, i64)>>,
    /// (r+1) x (r+1) distances, node 0 = warehouse.
    pub dist: Vec<Vec<f64>>,
    /// N x r demand matrix, `demand[t-1][i-1]` = demand of retailer i in period t.
    pub demand: Vec<Vec<u64>>,
    /// Per-retailer holding cost per unit per period.
    pub holding: Vec<f64>,
    /// Per-retailer fixed ordering cost.
    pub ordering: Vec<f64>,
    /// Fixed dispatching cost charged in every period with at least one visit.
    pub dispatch: f64,
}

impl IrpInstance {
    /// Validates dimensions, signs and finiteness of all fields.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let r = self.num_retailers;
        let n = self.num_periods;
        if r < 1 {
            return Err(InstanceError::InvalidParam("num_retailers must be >= 1".into()));
        }
        if n < 1 {
            return Err(InstanceError::InvalidParam("num_periods must be >= 1".into()));
        }
        if let Some(c) = &self.coords {
            if c.len() != r + 1 {
                return Err(InstanceError::Dimension(format!(
                    "coords has {} points, expected {}",
                    c.len(),
                    r + 1
                )));
            }
        }
        if self.dist.len() != r + 1 || self.dist.iter().any(|row| row.len() != r + 1) {
            return Err(InstanceError::Dimension(format!(
                "dist must be {0}x{0}",
                r + 1
            )));
        }
        for row in &self.dist {
            for &d in row {
                if !d.is_finite() || d < 0.0 {
                    return Err(InstanceError::InvalidParam(format!(
                        "distance {d} is negative or non-finite"
                    )));
                }
            }
        }
        if self.demand.len() != n || self.demand.iter().any(|row| row.len() != r) {
            return Err(InstanceError::Dimension(format!("demand must be {n}x{r}")));
        }
        if self.holding.len() != r {
            return Err(InstanceError::Dimension(format!("holding must have {r} entries")));
        }
        if self.ordering.len() != r {
            return Err(InstanceError::Dimension(format!("ordering must have {r} entries")));
        }
        for &v in self.holding.iter().chain(self.ordering.iter()) {
            if !v.is_finite() || v < 0.0 {
                return Err(InstanceError::InvalidParam(format!(
                    "cost {v} is negative or non-finite"
                )));
            }
        }
        if !self.dispatch.is_finite() || self.dispatch < 0.0 {
            return Err(InstanceError::InvalidParam(format!(
                "dispatch cost {} is negative or non-finite",
                self.dispatch
            )));
        }
        Ok(())
    }

    /// Demand of retailer `i` (1-based) in period `t` (1-based).
    pub fn demand_at(&self, t: usize, i: usize) -> u64 {
        self.demand[t - 1][i - 1]
    }

    /// Demand column of retailer `i` (1-based) across all periods.
    pub fn demand_series(&self, i: usize) -> Vec<u64> {
        self.demand.iter().map(|row| row[i - 1]).collect()
    }

    pub fn total_demand(&self) -> u64 {
        self.demand.iter().flatten().sum()
    }

    /// Restriction to the first `retailers` retailers and `periods` periods,
    /// for desk-scale runs of the benchmark scenarios.
    pub fn truncate(&self, retailers: usize, periods: usize) -> Result<IrpInstance, InstanceError> {
        if retailers < 1 || retailers > self.num_retailers {
            return Err(InstanceError::InvalidParam(format!(
                "cannot take {retailers} of {} retailers",
                self.num_retailers
            )));
        }
        if periods < 1 || periods > self.num_periods {
            return Err(InstanceError::InvalidParam(format!(
                "cannot take {periods} of {} periods",
                self.num_periods
            )));
        }
        let inst = IrpInstance {
            name: format!("{}-r{retailers}n{periods}", self.name),
            num_retailers: retailers,
            num_periods: periods,
            coords: self.coords.as_ref().map(|c| c[..=retailers].to_vec()),
            dist: self.dist[..=retailers].iter().map(|row| row[..=retailers].to_vec()).collect(),
            demand: self.demand[..periods].iter().map(|row| row[..retailers].to_vec()).collect(),
            holding: self.holding[..retailers].to_vec(),
            ordering: self.ordering[..retailers].to_vec(),
            dispatch: self.dispatch,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Serializes the instance in the text format described in the crate docs.
    /// Output is deterministic: equal instances serialize byte-for-byte equal.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = self.num_retailers;
        writeln!(s, "NAME {}", self.name).unwrap();
        writeln!(s, "SIZE {} {}", r, self.num_periods).unwrap();
        if let Some(coords) = &self.coords {
            writeln!(s, "COORDS").unwrap();
            for (i, (x, y)) in coords.iter().enumerate() {
                writeln!(s, "{i} {x} {y}").unwrap();
            }
        }
        // The matrix is omitted when it is exactly the Euclidean matrix of the
        // coordinates; the loader rebuilds it bit-identically.
        let derived = self
            .coords
            .as_ref()
            .map(|c| dist_from_coords(c) == self.dist)
            .unwrap_or(false);
        if !derived {
            writeln!(s, "DIST").unwrap();
            for row in &self.dist {
                let line: Vec<String> = row.iter().map(|v| fmt_sig9(*v)).collect();
                writeln!(s, "{}", line.join(" ")).unwrap();
            }
        }
        writeln!(s, "DEMAND").unwrap();
        for row in &self.demand {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", line.join(" ")).unwrap();
        }
        writeln!(s, "HOLDING").unwrap();
        writeln!(
            s,
            "{}",
            self.holding.iter().map(|v| fmt_sig9(*v)).collect::<Vec<_>>().join(" ")
        )
        .unwrap();
        writeln!(s, "ORDERING").unwrap();
        writeln!(
            s,
            "{}",
            self.ordering.iter().map(|v| fmt_sig9(*v)).collect::<Vec<_>>().join(" ")
        )
        .unwrap();
        writeln!(s, "DISPATCH {}", fmt_sig9(self.dispatch)).unwrap();
        s
    }

    /// Parses the text format. Reports the first offending line on error.
    pub fn from_text(text: &str) -> Result<Self, InstanceError> {
        let mut name = String::new();
        let mut size: Option<(usize, usize)> = None;
        let mut coords: Option<Vec<(i64, i64)>> = None;
        let mut dist: Option<Vec<Vec<f64>>> = None;
        let mut demand: Option<Vec<Vec<u64>>> = None;
        let mut holding: Option<Vec<f64>> = None;
        let mut ordering: Option<Vec<f64>> = None;
        let mut dispatch: Option<f64> = None;

        let err = |line: usize, msg: String| InstanceError::Parse { line, msg };

        // Strip comments and blanks but remember original line numbers.
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();

        let mut pos = 0;
        while pos < lines.len() {
            let (lineno, line) = lines[pos];
            let mut words = line.split_whitespace();
            let keyword = words.next().unwrap();
            match keyword {
                "NAME" => {
                    name = words.collect::<Vec<_>>().join(" ");
                    pos += 1;
                }
                "SIZE" => {
                    let r: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "SIZE expects `r N`".into()))?;
                    let n: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "SIZE expects `r N`".into()))?;
                    size = Some((r, n));
                    pos += 1;
                }
                "COORDS" => {
                    let (r, _) = size.ok_or_else(|| err(lineno, "COORDS before SIZE".into()))?;
                    pos += 1;
                    let mut pts = vec![(0i64, 0i64); r + 1];
                    for k in 0..=r {
                        let (ln, l) = *lines
                            .get(pos)
                            .ok_or_else(|| err(lineno, "COORDS section truncated".into()))?;
                        let mut w = l.split_whitespace();
                        let parse3 = || err(ln, "COORDS line expects `i x y`".into());
                        let i: usize = w.next().and_then(|v| v.parse().ok()).ok_or_else(parse3)?;
                        let x: i64 = w.next().and_then(|v| v.parse().ok()).ok_or_else(parse3)?;
                        let y: i64 = w.next().and_then(|v| v.parse().ok()).ok_or_else(parse3)?;
                        if i != k {
                            return Err(err(ln, format!("expected point index {k}, got {i}")));
                        }
                        pts[k] = (x, y);
                        pos += 1;
                    }
                    coords = Some(pts);
                }
                "DIST" => {
                    let (r, _) = size.ok_or_else(|| err(lineno, "DIST before SIZE".into()))?;
                    pos += 1;
                    let mut m = Vec::with_capacity(r + 1);
                    for _ in 0..=r {
                        let (ln, l) = *lines
                            .get(pos)
                            .ok_or_else(|| err(lineno, "DIST section truncated".into()))?;
                        let row = parse_f64_row(l, ln)?;
                        if row.len() != r + 1 {
                            return Err(err(
                                ln,
                                format!("DIST row has {} entries, expected {}", row.len(), r + 1),
                            ));
                        }
                        m.push(row);
                        pos += 1;
                    }
                    dist = Some(m);
                }
                "DEMAND" => {
                    let (r, n) = size.ok_or_else(|| err(lineno, "DEMAND before SIZE".into()))?;
                    pos += 1;
                    let mut m = Vec::with_capacity(n);
                    for _ in 0..n {
                        let (ln, l) = *lines
                            .get(pos)
                            .ok_or_else(|| err(lineno, "DEMAND section truncated".into()))?;
                        let row: Result<Vec<u64>, _> =
                            l.split_whitespace().map(|w| w.parse::<u64>()).collect();
                        let row = row.map_err(|_| err(ln, "DEMAND expects integers".into()))?;
                        if row.len() != r {
                            return Err(err(
                                ln,
                                format!("DEMAND row has {} entries, expected {}", row.len(), r),
                            ));
                        }
                        m.push(row);
                        pos += 1;
                    }
                    demand = Some(m);
                }
                "HOLDING" | "ORDERING" => {
                    let (r, _) = size.ok_or_else(|| err(lineno, format!("{keyword} before SIZE")))?;
                    pos += 1;
                    let (ln, l) = *lines
                        .get(pos)
                        .ok_or_else(|| err(lineno, format!("{keyword} section truncated")))?;
                    let row = parse_f64_row(l, ln)?;
                    if row.len() != r {
                        return Err(err(
                            ln,
                            format!("{keyword} has {} entries, expected {}", row.len(), r),
                        ));
                    }
                    if keyword == "HOLDING" {
                        holding = Some(row);
                    } else {
                        ordering = Some(row);
                    }
                    pos += 1;
                }
                "DISPATCH" => {
                    let v: f64 = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err(lineno, "DISPATCH expects a value".into()))?;
                    dispatch = Some(v);
                    pos += 1;
                }
                other => {
                    return Err(err(lineno, format!("unknown section `{other}`")));
                }
            }
        }

        let (r, n) = size.ok_or_else(|| err(0, "missing SIZE section".into()))?;
        let demand = demand.ok_or_else(|| err(0, "missing DEMAND section".into()))?;
        let holding = holding.ok_or_else(|| err(0, "missing HOLDING section".into()))?;
        let ordering = ordering.ok_or_else(|| err(0, "missing ORDERING section".into()))?;
        let dispatch = dispatch.ok_or_else(|| err(0, "missing DISPATCH section".into()))?;
        let dist = match (dist, &coords) {
            (Some(m), _) => m,
            (None, Some(c)) => dist_from_coords(c),
            (None, None) => return Err(err(0, "missing COORDS or DIST section".into())),
        };

        let inst = IrpInstance {
            name,
            num_retailers: r,
            num_periods: n,
            coords,
            dist,
            demand,
            holding,
            ordering,
            dispatch,
        };
        inst.validate()?;
        Ok(inst)
    }
}

fn parse_f64_row(line: &str, lineno: usize) -> Result<Vec<f64>, InstanceError> {
    line.split_whitespace()
        .map(|w| {
            w.parse::<f64>().map_err(|_| InstanceError::Parse {
                line: lineno,
                msg: format!("`{w}` is not a number"),
            })
        })
        .collect()
}

/// Formats a float with 9 significant digits; integral values print as integers.
pub(crate) fn fmt_sig9(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.8e}")
    }
}

/// Rounds to 9 significant digits so a value survives serialization exactly.
fn round_sig9(v: f64) -> f64 {
    format!("{v:.8e}").parse().unwrap()
}

/// Straight-line distance between two points.
pub fn euclidean_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    let dx = p.0 - q.0;
    let dy = p.1 - q.1;
    (dx * dx + dy * dy).sqrt()
}

/// Full Euclidean distance matrix of an integer point set.
pub fn dist_from_coords(coords: &[(i64, i64)]) -> Vec<Vec<f64>> {
    let n = coords.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = euclidean_distance(
                    (coords[i].0 as f64, coords[i].1 as f64),
                    (coords[j].0 as f64, coords[j].1 as f64),
                );
            }
        }
    }
    m
}

/// Whether (periods, retailers) is one of the grid cells of design 1.
pub fn is_canonical_design1(periods: usize, retailers: usize) -> bool {
    let in_grid = retailers >= 5 && retailers % 5 == 0;
    match periods {
        3 => in_grid && retailers <= 50,
        6 => in_grid && retailers <= 30,
        _ => false,
    }
}

/// Design 1: random planar instances with per-retailer stationary demand.
///
/// Demands are one uniform integer draw in [10,100] per retailer, repeated
/// across periods; holding costs are uniform in [0.01,0.05] (rounded to 9
/// significant digits); coordinates are uniform integers in [0,500]^2; the
/// ordering cost is 10 for every retailer and there is no dispatching cost.
/// The RNG is ChaCha8 seeded with `seed`, so instances replicate exactly.
pub fn generate_design1(seed: u64, periods: usize, retailers: usize) -> Result<IrpInstance, InstanceError> {
    if retailers < 1 {
        return Err(InstanceError::InvalidParam("retailers must be >= 1".into()));
    }
    if periods < 1 {
        return Err(InstanceError::InvalidParam("periods must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draw order is part of the format: coordinates (warehouse first), then
    // demands, then holding costs.
    let mut coords = Vec::with_capacity(retailers + 1);
    for _ in 0..=retailers {
        let x = rng.random_range(0..=500i64);
        let y = rng.random_range(0..=500i64);
        coords.push((x, y));
    }
    let per_retailer: Vec<u64> = (0..retailers).map(|_| rng.random_range(10..=100u64)).collect();
    let holding: Vec<f64> = (0..retailers)
        .map(|_| round_sig9(rng.random_range(0.01..=0.05f64)))
        .collect();
    let demand = vec![per_retailer; periods];
    let dist = dist_from_coords(&coords);
    let inst = IrpInstance {
        name: format!("d1-s{seed}-n{periods}-r{retailers}"),
        num_retailers: retailers,
        num_periods: periods,
        coords: Some(coords),
        dist,
        demand,
        holding,
        ordering: vec![10.0; retailers],
        dispatch: 0.0,
        };
    inst.validate()?;
    Ok(inst)
}

/// Small random instances for cross-validation against the brute-force
/// oracle: arbitrary (r, N), non-stationary demands that may include zeros,
/// positive holding costs, and a mix of ordering/dispatch cost levels.
pub fn generate_verify_instance(seed: u64, retailers: usize, periods: usize) -> Result<IrpInstance, InstanceError> {
    if retailers < 1 || periods < 1 {
        return Err(InstanceError::InvalidParam("retailers and periods must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(retailers + 1);
    for _ in 0..=retailers {
        coords.push((rng.random_range(0..=100i64), rng.random_range(0..=100i64)));
    }
    let demand: Vec<Vec<u64>> = (0..periods)
        .map(|_| (0..retailers).map(|_| rng.random_range(0..=20u64)).collect())
        .collect();
    let holding: Vec<f64> = (0..retailers)
        .map(|_| round_sig9(rng.random_range(0.1..=2.0f64)))
        .collect();
    let ordering: Vec<f64> = (0..retailers)
        .map(|_| [0.0, 5.0, 20.0][rng.random_range(0..3usize)])
        .collect();
    let dispatch = [0.0, 10.0][rng.random_range(0..2usize)];
    let dist = dist_from_coords(&coords);
    let inst = IrpInstance {
        name: format!("rnd-s{seed}-r{retailers}-n{periods}"),
        num_retailers: retailers,
        num_periods: periods,
        coords: Some(coords),
        dist,
        demand,
        holding,
        ordering,
        dispatch,
    };
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Demand patterns
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Sta,
    Lcy1,
    Lcy2,
    Sin1,
    Sin2,
    Rand,
}

impl PatternKind {
    pub const ALL: [PatternKind; 6] = [
        PatternKind::Sta,
        PatternKind::Lcy1,
        PatternKind::Lcy2,
        PatternKind::Sin1,
        PatternKind::Sin2,
        PatternKind::Rand,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PatternKind::Sta => "STA",
            PatternKind::Lcy1 => "LCY1",
            PatternKind::Lcy2 => "LCY2",
            PatternKind::Sin1 => "SIN1",
            PatternKind::Sin2 => "SIN2",
            PatternKind::Rand => "RAND",
        }
    }

    pub fn parse(s: &str) -> Result<Self, InstanceError> {
        match s.to_ascii_uppercase().as_str() {
            "STA" => Ok(PatternKind::Sta),
            "LCY1" => Ok(PatternKind::Lcy1),
            "LCY2" => Ok(PatternKind::Lcy2),
            "SIN1" => Ok(PatternKind::Sin1),
            "SIN2" => Ok(PatternKind::Sin2),
            "RAND" => Ok(PatternKind::Rand),
            other => Err(InstanceError::InvalidParam(format!("unknown pattern `{other}`"))),
        }
    }
}

/// A parametrized demand pattern. Defaults: level 100, sinusoid amplitude 50
/// with SIN1/SIN2 in opposite phase, life-cycle peak at N/3 (LCY1) or 2N/3
/// (LCY2) rising from `low` 20 to twice the level, random range [50,150].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandPattern {
    pub kind: PatternKind,
    pub level: f64,
    pub amplitude: f64,
    pub low: f64,
    pub rand_range: (u64, u64),
    pub seed: u64,
}

impl DemandPattern {
    pub fn new(kind: PatternKind) -> Self {
        DemandPattern {
            kind,
            level: 100.0,
            amplitude: 50.0,
            low: 20.0,
            rand_range: (50, 150),
            seed: 0,
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Generates a length-`n` nonnegative integer series.
    pub fn generate(&self, n: usize) -> Result<Vec<u64>, InstanceError> {
        if n < 1 {
            return Err(InstanceError::InvalidParam("pattern length must be >= 1".into()));
        }
        if self.level < 0.0 || self.amplitude < 0.0 || self.low < 0.0 {
            return Err(InstanceError::InvalidParam(
                "pattern level/amplitude must be nonnegative".into(),
            ));
        }
        let series = match self.kind {
            PatternKind::Sta => vec![self.level.round().max(0.0) as u64; n],
            PatternKind::Lcy1 => self.life_cycle(n, (n as f64 / 3.0).round() as i64),
            PatternKind::Lcy2 => self.life_cycle(n, (2.0 * n as f64 / 3.0).round() as i64),
            PatternKind::Sin1 => self.sinusoid(n, 1.0),
            PatternKind::Sin2 => self.sinusoid(n, -1.0),
            PatternKind::Rand => {
                let (lo, hi) = self.rand_range;
                if lo > hi {
                    return Err(InstanceError::InvalidParam("empty random range".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n).map(|_| rng.random_range(lo..=hi)).collect()
            }
        };
        debug_assert_eq!(series.len(), n);
        Ok(series)
    }

    /// Unimodal launch/growth/decline shape: `low` ramps linearly to twice
    /// the level at the peak period, then back down to `low`. Degenerates to
    /// a constant series when the horizon is too short for an interior peak.
    fn life_cycle(&self, n: usize, peak: i64) -> Vec<u64> {
        if n < 3 {
            return vec![self.level.round() as u64; n];
        }
        let p = peak.clamp(2, n as i64 - 1) as f64;
        let top = 2.0 * self.level;
        (1..=n as i64)
            .map(|t| {
                let t = t as f64;
                let v = if t <= p {
                    self.low + (top - self.low) * (t - 1.0) / (p - 1.0)
                } else {
                    top - (top - self.low) * (t - p) / (n as f64 - p)
                };
                v.round().max(0.0) as u64
            })
            .collect()
    }

    fn sinusoid(&self, n: usize, sign: f64) -> Vec<u64> {
        (0..n)
            .map(|t| {
                let phase = 2.0 * std::f64::consts::PI * t as f64 / n as f64;
                let v = self.level + sign * self.amplitude * phase.sin();
                v.round().max(0.0) as u64
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Design 2 scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingProfile {
    /// No fixed ordering cost.
    None,
    /// 1000 for every retailer.
    Uniform1000,
    /// 500 for retailers 1-5, 1000 for 6-11, 2000 for 12-16.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandDesign {
    /// Every retailer has stationary demand 100.
    UniformStationary,
    /// Stationary demand 100 for retailers 1-5, 50 for 6-11, 75 for 12-16.
    MixedStationary,
    /// The six-pattern mix (STA, LCY1, LCY2, SIN1, SIN2, RAND) cycled over retailers.
    PatternMix,
}

/// One of the 18 benchmark scenarios of design 2 (16 retailers, 15 periods).
///
/// The id fixes the whole configuration: scenarios 1-9 have no dispatching
/// cost, 10-18 have D = 15000; within each block of nine, the ordering
/// profile steps through none / uniform-1000 / mixed every three scenarios
/// and the demand design cycles with period three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub scenario_id: u8,
}

impl ScenarioSpec {
    pub fn new(scenario_id: u8) -> Result<Self, InstanceError> {
        if !(1..=18).contains(&scenario_id) {
            return Err(InstanceError::BadScenario(scenario_id));
        }
        Ok(ScenarioSpec { scenario_id })
    }

    pub fn dispatch_cost(&self) -> f64 {
        if self.scenario_id >= 10 {
            15000.0
        } else {
            0.0
        }
    }

    pub fn ordering_profile(&self) -> OrderingProfile {
        match ((self.scenario_id - 1) % 9) / 3 {
            0 => OrderingProfile::None,
            1 => OrderingProfile::Uniform1000,
            _ => OrderingProfile::Mixed,
        }
    }

    pub fn demand_design(&self) -> DemandDesign {
        match (self.scenario_id - 1) % 3 {
            0 => DemandDesign::UniformStationary,
            1 => DemandDesign::MixedStationary,
            _ => DemandDesign::PatternMix,
        }
    }

    pub fn ordering_costs(&self) -> Vec<f64> {
        match self.ordering_profile() {
            OrderingProfile::None => vec![0.0; 16],
            OrderingProfile::Uniform1000 => vec![1000.0; 16],
            OrderingProfile::Mixed => {
                let mut k = vec![500.0; 5];
                k.extend(vec![1000.0; 6]);
                k.extend(vec![2000.0; 5]);
                k
            }
        }
    }

    /// Per-retailer demand patterns; `seed` feeds the RAND pattern only.
    pub fn demand_assignment(&self, seed: u64) -> Vec<DemandPattern> {
        match self.demand_design() {
            DemandDesign::UniformStationary => {
                vec![DemandPattern::new(PatternKind::Sta); 16]
            }
            DemandDesign::MixedStationary => {
                let mut p = vec![DemandPattern::new(PatternKind::Sta).with_level(100.0); 5];
                p.extend(vec![DemandPattern::new(PatternKind::Sta).with_level(50.0); 6]);
                p.extend(vec![DemandPattern::new(PatternKind::Sta).with_level(75.0); 5]);
                p
            }
            DemandDesign::PatternMix => (0..16u64)
                .map(|i| {
                    DemandPattern::new(PatternKind::ALL[(i % 6) as usize])
                        .with_seed(seed.wrapping_mul(31).wrapping_add(i))
                })
                .collect(),
        }
    }
}

/// Parses a layout file: one `x y` integer pair per line, warehouse first.
pub fn parse_layout(text: &str) -> Result<Vec<(i64, i64)>, InstanceError> {
    let mut pts = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut w = line.split_whitespace();
        let bad = || InstanceError::Parse {
            line: k + 1,
            msg: "layout line expects `x y`".into(),
        };
        let x: i64 = w.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let y: i64 = w.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        pts.push((x, y));
    }
    Ok(pts)
}

/// Design 2: the 18-scenario benchmark on the bundled 17-point layout
/// (N = 15 periods, 16 retailers, unit holding cost).
pub fn generate_design2(spec: ScenarioSpec, seed: u64) -> Result<IrpInstance, InstanceError> {
    let coords = parse_layout(DEFAULT_LAYOUT17).expect("bundled layout is well-formed");
    generate_design2_with_layout(spec, seed, coords)
}

/// Design 2 on a custom 17-point layout (warehouse first).
pub fn generate_design2_with_layout(
    spec: ScenarioSpec,
    seed: u64,
    coords: Vec<(i64, i64)>,
) -> Result<IrpInstance, InstanceError> {
    const R: usize = 16;
    const N: usize = 15;
    if coords.len() != R + 1 {
        return Err(InstanceError::Dimension(format!(
            "design-2 layout needs {} points, got {}",
            R + 1,
            coords.len()
        )));
    }
    let patterns = spec.demand_assignment(seed);
    let mut demand = vec![vec![0u64; R]; N];
    for (i, p) in patterns.iter().enumerate() {
        let series = p.generate(N)?;
        for (t, v) in series.into_iter().enumerate() {
            demand[t][i] = v;
        }
    }
    let dist = dist_from_coords(&coords);
    let inst = IrpInstance {
        name: format!("d2-sc{}-s{}", spec.scenario_id, seed),
        num_retailers: R,
        num_periods: N,
        coords: Some(coords),
        dist,
        demand,
        holding: vec![1.0; R],
        ordering: spec.ordering_costs(),
        dispatch: spec.dispatch_cost(),
    };
    inst.validate()?;
    Ok(inst)
}

/// Groups scenarios by the (ordering profile, dispatch) block they belong to.
/// Handy for table-style reporting.
pub fn scenario_blocks() -> BTreeMap<&'static str, Vec<u8>> {
    let mut m = BTreeMap::new();
    m.insert("K=0, D=0", vec![1, 2, 3]);
    m.insert("K=1000, D=0", vec![4, 5, 6]);
    m.insert("K mixed, D=0", vec![7, 8, 9]);
    m.insert("K=0, D=15000", vec![10, 11, 12]);
    m.insert("K=1000, D=15000", vec![13, 14, 15]);
    m.insert("K mixed, D=15000", vec![16, 17, 18]);
    m
}
