//! Independent exact algorithms used as ground truth.
//!
//! Nothing here shares code with the MILP formulations or the solver: the
//! lot-sizing dynamic program, the bitmask-DP tour solver and the plan
//! enumerator each compute optima along a completely different route, which
//! is what makes the cross-validation matrix meaningful.

use std::collections::HashMap;

use thiserror::Error;

use crate::instance::IrpInstance;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("node count {0} outside 2..=18")]
    BadSize(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Optimal tour found by the exact solver: `order[0]` is the warehouse, the
/// cost includes the closing arc back to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TourResult {
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Cost split of a replenishment plan.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub routing: f64,
    pub ordering: f64,
    pub holding: f64,
    pub dispatch: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.routing + self.ordering + self.holding + self.dispatch
    }
}

/// A full replenishment plan: who is visited when, the implied order sizes
/// and the per-period routes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// `delta[t-1][i-1]` = retailer i visited in period t.
    pub delta: Vec<Vec<bool>>,
    /// Implied order quantities, same shape as `delta`.
    pub quantities: Vec<Vec<f64>>,
    /// Route per period as a node sequence starting at the warehouse
    /// (empty when nothing is delivered).
    pub routes: Vec<Vec<usize>>,
    pub total_cost: f64,
    pub breakdown: CostBreakdown,
}

/// Optimal lot-sizing plan: cost plus the periods that place an order.
#[derive(Debug, Clone, PartialEq)]
pub struct WwPlan {
    pub cost: f64,
    pub order_periods: Vec<usize>,
}

/// Cost of one order placed in period `i` covering demands of periods
/// `i..j-1` (1-based, `j` up to N+1): fixed cost plus unit and holding cost.
pub fn omega(i: usize, j: usize, demand: &[u64], k: f64, h: f64, v: f64) -> Result<f64, OracleError> {
    let n = demand.len();
    if i < 1 || j <= i || j > n + 1 {
        return Err(OracleError::Invalid(format!("omega needs 1 <= i < j <= {}", n + 1)));
    }
    let mut cost = k;
    for s in i..j {
        let d = demand[s - 1] as f64;
        cost += v * d + h * (s - i) as f64 * d;
    }
    Ok(cost)
}

/// Uncapacitated lot sizing by shortest path over order-coverage arcs.
///
/// Orders start at the first period with positive demand (ordering earlier
/// is never cheaper with nonnegative holding costs); an all-zero series
/// costs nothing and places no order. The plan ends with zero inventory.
pub fn wagner_whitin_dp(demand: &[u64], k: f64, h: f64, v: f64) -> Result<WwPlan, OracleError> {
    let n = demand.len();
    if n < 1 {
        return Err(OracleError::Invalid("empty demand series".into()));
    }
    if k < 0.0 || h < 0.0 || v < 0.0 {
        return Err(OracleError::Invalid("costs must be nonnegative".into()));
    }
    let first = match demand.iter().position(|&d| d > 0) {
        Some(p) => p + 1,
        None => return Ok(WwPlan { cost: 0.0, order_periods: Vec::new() }),
    };
    // best[t] = cheapest way to cover demands first..t-1 arriving at node t
    let mut best = vec![f64::INFINITY; n + 2];
    let mut pred = vec![0usize; n + 2];
    best[first] = 0.0;
    for j in first + 1..=n + 1 {
        for i in first..j {
            if best[i].is_finite() {
                let c = best[i] + omega(i, j, demand, k, h, v)?;
                if c < best[j] {
                    best[j] = c;
                    pred[j] = i;
                }
            }
        }
    }
    let mut order_periods = Vec::new();
    let mut node = n + 1;
    while node > first {
        let p = pred[node];
        order_periods.push(p);
        node = p;
    }
    order_periods.reverse();
    Ok(WwPlan { cost: best[n + 1], order_periods })
}

/// Exact minimum Hamiltonian tour over `dist` (used as given, so asymmetric
/// matrices are fine) via subset dynamic programming. Node 0 is the start.
pub fn held_karp_tsp(dist: &[Vec<f64>]) -> Result<TourResult, OracleError> {
    let n = dist.len();
    if !(2..=18).contains(&n) {
        return Err(OracleError::BadSize(n));
    }
    if dist.iter().any(|row| row.len() != n) {
        return Err(OracleError::Invalid("distance matrix is not square".into()));
    }
    if n == 2 {
        return Ok(TourResult { order: vec![0, 1], cost: dist[0][1] + dist[1][0] });
    }
    let m = n - 1; // nodes 1..n bit-indexed by node-1
    let full = 1usize << m;
    // g[mask][e] = cheapest path 0 -> (mask minus e) -> e
    let mut g = vec![vec![f64::INFINITY; m]; full];
    let mut parent = vec![vec![usize::MAX; m]; full];
    for e in 0..m {
        g[1 << e][e] = dist[0][e + 1];
    }
    for mask in 1..full {
        for e in 0..m {
            if mask & (1 << e) == 0 || !g[mask][e].is_finite() {
                continue;
            }
            let base = g[mask][e];
            for nx in 0..m {
                if mask & (1 << nx) != 0 {
                    continue;
                }
                let nmask = mask | (1 << nx);
                let c = base + dist[e + 1][nx + 1];
                if c < g[nmask][nx] {
                    g[nmask][nx] = c;
                    parent[nmask][nx] = e;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut last = 0;
    for e in 0..m {
        let c = g[full - 1][e] + dist[e + 1][0];
        if c < best {
            best = c;
            last = e;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full - 1;
    let mut e = last;
    while e != usize::MAX {
        order.push(e + 1);
        let p = parent[mask][e];
        mask &= !(1 << e);
        e = p;
    }
    order.push(0);
    order.reverse();
    Ok(TourResult { order, cost: best })
}

/// Routing cost of serving exactly `visited` (1-based retailer ids) from the
/// warehouse, memoized by visit set.
struct RouteCache<'a> {
    dist: &'a [Vec<f64>],
    cache: HashMap<u32, (f64, Vec<usize>)>,
}

impl<'a> RouteCache<'a> {
    fn new(dist: &'a [Vec<f64>]) -> Self {
        RouteCache { dist, cache: HashMap::new() }
    }

    fn tour(&mut self, set: u32) -> Result<(f64, Vec<usize>), OracleError> {
        if set == 0 {
            return Ok((0.0, Vec::new()));
        }
        if let Some(hit) = self.cache.get(&set) {
            return Ok(hit.clone());
        }
        let nodes: Vec<usize> = (0..32)
            .filter(|b| set & (1 << b) != 0)
            .map(|b| b as usize + 1)
            .collect();
        let result = if nodes.len() == 1 {
            let i = nodes[0];
            (self.dist[0][i] + self.dist[i][0], vec![0, i])
        } else {
            let k = nodes.len() + 1;
            let mut sub = vec![vec![0.0; k]; k];
            for (a, &na) in std::iter::once(&0).chain(nodes.iter()).enumerate() {
                for (b, &nb) in std::iter::once(&0).chain(nodes.iter()).enumerate() {
                    sub[a][b] = self.dist[na][nb];
                }
            }
            let tour = held_karp_tsp(&sub)?;
            let order = tour
                .order
                .iter()
                .map(|&v| if v == 0 { 0 } else { nodes[v - 1] })
                .collect();
            (tour.cost, order)
        };
        self.cache.insert(set, result.clone());
        Ok(result)
    }
}

/// Exhaustive IRP optimum: enumerates every visit pattern, forces the order
/// quantities implied by it (each order covers demand until the retailer's
/// next order, ending at zero inventory) and prices routing with the exact
/// tour solver. Ties keep the first pattern in enumeration order, which with
/// zero holding costs means ordering as late as possible never displaces an
/// equally-priced earlier-listed plan.
pub fn brute_force_irp(inst: &IrpInstance) -> Result<PlanResult, OracleError> {
    let r = inst.num_retailers;
    let n = inst.num_periods;
    if r * n > 16 {
        return Err(OracleError::TooLarge(format!("r*N = {} > 16", r * n)));
    }
    if r > 18 {
        return Err(OracleError::TooLarge(format!("r = {r} retailers")));
    }
    let mut routes = RouteCache::new(&inst.dist);
    let bits = r * n;
    let mut best_cost = f64::INFINITY;
    let mut best: Option<(u32, CostBreakdown)> = None;

    'pattern: for mask in 0..(1u32 << bits) {
        let visited = |t: usize, i: usize| mask & (1 << ((t - 1) * r + (i - 1))) != 0;

        let mut ordering = 0.0;
        let mut holding = 0.0;
        for i in 1..=r {
            // coverage: every positive demand needs an order at or before it
            let mut has_order = false;
            for t in 1..=n {
                has_order |= visited(t, i);
                if inst.demand_at(t, i) > 0 && !has_order {
                    continue 'pattern;
                }
            }
            // forced quantities: inventory at end of t = demand of t+1..next order
            let mut inv = 0.0;
            for t in 1..=n {
                if visited(t, i) {
                    ordering += inst.ordering[i - 1];
                    let mut next = n + 1;
                    for s in t + 1..=n {
                        if visited(s, i) {
                            next = s;
                            break;
                        }
                    }
                    let q: u64 = (t..next).map(|s| inst.demand_at(s, i)).sum();
                    inv += q as f64;
                }
                inv -= inst.demand_at(t, i) as f64;
                holding += inst.holding[i - 1] * inv;
            }
        }

        let mut routing = 0.0;
        let mut dispatch = 0.0;
        for t in 1..=n {
            let set: u32 = (1..=r).filter(|&i| visited(t, i)).map(|i| 1 << (i - 1)).sum();
            if set != 0 {
                routing += routes.tour(set)?.0;
                dispatch += inst.dispatch;
            }
        }

        let breakdown = CostBreakdown { routing, ordering, holding, dispatch };
        let total = breakdown.total();
        if total < best_cost {
            best_cost = total;
            best = Some((mask, breakdown));
        }
    }

    let (mask, breakdown) =
        best.ok_or_else(|| OracleError::Invalid("no feasible visit pattern".into()))?;
    let visited = |t: usize, i: usize| mask & (1 << ((t - 1) * r + (i - 1))) != 0;
    let mut delta = vec![vec![false; r]; n];
    let mut quantities = vec![vec![0.0; r]; n];
    let mut period_routes = Vec::with_capacity(n);
    for t in 1..=n {
        for i in 1..=r {
            if visited(t, i) {
                delta[t - 1][i - 1] = true;
                let mut next = n + 1;
                for s in t + 1..=n {
                    if visited(s, i) {
                        next = s;
                        break;
                    }
                }
                quantities[t - 1][i - 1] = (t..next).map(|s| inst.demand_at(s, i)).sum::<u64>() as f64;
            }
        }
        let set: u32 = (1..=r).filter(|&i| visited(t, i)).map(|i| 1 << (i - 1)).sum();
        period_routes.push(routes.tour(set)?.1);
    }
    Ok(PlanResult {
        delta,
        quantities,
        routes: period_routes,
        total_cost: breakdown.total(),
        breakdown,
    })
}
