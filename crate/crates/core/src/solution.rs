//! Hub-route solutions, objective evaluation, capacity loads, the route
//! reversal symmetry map and the interior point generators used to pick
//! sharper Benders cuts.
//!
//! A solution is a hub set, a single allocation of every node to a hub,
//! and one directed cycle per hub through its spokes. Every origin-
//! destination pair has a unique path: forward along the origin's cycle to
//! its hub, one discounted hub edge, then forward along the destination's
//! cycle. Transshipment time is charged at a hub endpoint of the hub edge
//! exactly when that endpoint is not the origin (resp. destination)
//! itself; same-cluster pairs ride the shared cycle with no hub edge and
//! no transshipment. The objective is unweighted by flow volumes; volumes
//! only enter the capacity check.

use crate::instance::ProblemInstance;
use crate::lp::{LinearProgram, RowSense};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("invalid solution structure: {0}")]
    Structure(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// A complete hub-route solution. `routes[h]` lists the spokes of hub `h`
/// in visiting order; the vehicle drives `h -> s1 -> ... -> sm -> h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubRouteSolution {
    pub hubs: Vec<usize>,
    pub alloc: Vec<usize>,
    pub routes: BTreeMap<usize, Vec<usize>>,
}

/// A (possibly fractional) point over the master variables. Matrices are
/// stored row-major with unused diagonals (of `r` and `eta`) kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterState {
    pub n: usize,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub eta: Vec<f64>,
}

impl MasterState {
    pub fn zeros(n: usize) -> Self {
        MasterState { n, z: vec![0.0; n * n], r: vec![0.0; n * n], eta: vec![0.0; n * n] }
    }

    #[inline]
    pub fn z(&self, i: usize, k: usize) -> f64 {
        self.z[i * self.n + k]
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    #[inline]
    pub fn eta(&self, i: usize, j: usize) -> f64 {
        self.eta[i * self.n + j]
    }

    pub fn set_z(&mut self, i: usize, k: usize, v: f64) {
        self.z[i * self.n + k] = v;
    }

    pub fn set_r(&mut self, i: usize, j: usize, v: f64) {
        self.r[i * self.n + j] = v;
    }

    pub fn set_eta(&mut self, i: usize, j: usize, v: f64) {
        self.eta[i * self.n + j] = v;
    }
}

/// Column layout of the master problem: all `z_ik` row-major, then `r_ij`
/// (skipping the diagonal), then `eta_ij` (skipping the diagonal). Shared
/// by the master builder, the interior-point machinery and the tests that
/// substitute points into master rows.
#[derive(Debug, Clone, Copy)]
pub struct MasterLayout {
    pub n: usize,
}

impl MasterLayout {
    pub fn new(n: usize) -> Self {
        MasterLayout { n }
    }

    pub fn num_cols(&self) -> usize {
        let n = self.n;
        n * n + 2 * n * (n - 1)
    }

    #[inline]
    pub fn col_z(&self, i: usize, k: usize) -> usize {
        i * self.n + k
    }

    #[inline]
    pub fn col_r(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        let off = if j > i { j - 1 } else { j };
        self.n * self.n + i * (self.n - 1) + off
    }

    #[inline]
    pub fn col_eta(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        let off = if j > i { j - 1 } else { j };
        self.n * self.n + self.n * (self.n - 1) + i * (self.n - 1) + off
    }

    pub fn to_point(&self, state: &MasterState) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; self.num_cols()];
        for i in 0..n {
            for k in 0..n {
                x[self.col_z(i, k)] = state.z(i, k);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    x[self.col_r(i, j)] = state.r(i, j);
                    x[self.col_eta(i, j)] = state.eta(i, j);
                }
            }
        }
        x
    }

    pub fn from_point(&self, x: &[f64]) -> MasterState {
        let n = self.n;
        let mut s = MasterState::zeros(n);
        for i in 0..n {
            for k in 0..n {
                s.set_z(i, k, x[self.col_z(i, k)]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s.set_r(i, j, x[self.col_r(i, j)]);
                    s.set_eta(i, j, x[self.col_eta(i, j)]);
                }
            }
        }
        s
    }
}

/// Cached cycle geometry for one route: visiting order, node positions and
/// prefix sums of arc times, so forward distances along the cycle are O(1).
struct RouteContext {
    seq: Vec<usize>,
    pos: Vec<Option<usize>>,
    prefix: Vec<f64>,
    total: f64,
}

impl RouteContext {
    fn new(inst: &ProblemInstance, hub: usize, spokes: &[usize]) -> Self {
        let mut seq = Vec::with_capacity(spokes.len() + 1);
        seq.push(hub);
        seq.extend_from_slice(spokes);
        let len = seq.len();
        let mut pos = vec![None; inst.n];
        for (idx, &v) in seq.iter().enumerate() {
            pos[v] = Some(idx);
        }
        let mut prefix = vec![0.0; len + 1];
        for idx in 0..len {
            let a = seq[idx];
            let b = seq[(idx + 1) % len];
            prefix[idx + 1] = prefix[idx] + inst.t[a][b];
        }
        let total = prefix[len];
        RouteContext { seq, pos, prefix, total }
    }

    /// Travel time forward along the cycle from `a` to `b`.
    fn forward(&self, a: usize, b: usize) -> f64 {
        let pa = self.pos[a].expect("node not on route");
        let pb = self.pos[b].expect("node not on route");
        if pa <= pb {
            self.prefix[pb] - self.prefix[pa]
        } else {
            self.total - self.prefix[pa] + self.prefix[pb]
        }
    }

    /// Arcs traversed forward from `a` to `b`, as (tail, head) pairs.
    fn forward_arcs(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        let len = self.seq.len();
        let pa = self.pos[a].unwrap();
        let pb = self.pos[b].unwrap();
        let mut arcs = Vec::new();
        let mut idx = pa;
        while idx != pb {
            let next = (idx + 1) % len;
            arcs.push((self.seq[idx], self.seq[next]));
            idx = next;
        }
        arcs
    }
}

/// Evaluation context for a fixed solution; build once, query many pairs.
pub struct EvalContext<'a> {
    inst: &'a ProblemInstance,
    sol: &'a HubRouteSolution,
    routes: BTreeMap<usize, RouteContext>,
}

impl<'a> EvalContext<'a> {
    pub fn new(inst: &'a ProblemInstance, sol: &'a HubRouteSolution) -> Self {
        let routes = sol
            .routes
            .iter()
            .map(|(&h, spokes)| (h, RouteContext::new(inst, h, spokes)))
            .collect();
        EvalContext { inst, sol, routes }
    }

    /// Travel plus transshipment time of the unique path from `i` to `j`.
    pub fn path_time(&self, i: usize, j: usize) -> f64 {
        let inst = self.inst;
        let k = self.sol.alloc[i];
        let l = self.sol.alloc[j];
        if k == l {
            return self.routes[&k].forward(i, j);
        }
        let mut time = self.routes[&k].forward(i, k);
        if i != k {
            time += inst.phi[k];
        }
        time += inst.alpha * inst.t[k][l];
        if j != l {
            time += inst.phi[l];
        }
        time + self.routes[&l].forward(l, j)
    }

    /// Spoke arcs on the unique path from `i` to `j` (hub edges excluded).
    pub fn path_spoke_arcs(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let k = self.sol.alloc[i];
        let l = self.sol.alloc[j];
        if k == l {
            return self.routes[&k].forward_arcs(i, j);
        }
        let mut arcs = self.routes[&k].forward_arcs(i, k);
        arcs.extend(self.routes[&l].forward_arcs(l, j));
        arcs
    }

    pub fn objective(&self) -> f64 {
        let n = self.inst.n;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += self.path_time(i, j);
                }
            }
        }
        total
    }
}

impl HubRouteSolution {
    /// Check all structural invariants against an instance.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<(), SolutionError> {
        let n = inst.n;
        let err = |msg: String| Err(SolutionError::Structure(msg));
        if self.hubs.is_empty() || self.hubs.len() < inst.q || self.hubs.len() > inst.p {
            return err(format!("hub count {} outside [{}, {}]", self.hubs.len(), inst.q, inst.p));
        }
        if self.hubs.windows(2).any(|w| w[0] >= w[1]) {
            return err("hubs must be strictly increasing".into());
        }
        if self.hubs.iter().any(|&h| h >= n) {
            return err("hub index out of range".into());
        }
        if self.alloc.len() != n {
            return err(format!("alloc length {} != n", self.alloc.len()));
        }
        let is_hub = |v: usize| self.hubs.binary_search(&v).is_ok();
        for (i, &h) in self.alloc.iter().enumerate() {
            if !is_hub(h) {
                return err(format!("node {i} allocated to non-hub {h}"));
            }
            if is_hub(i) && h != i {
                return err(format!("hub {i} not allocated to itself"));
            }
        }
        if self.routes.len() != self.hubs.len() || self.routes.keys().any(|h| !is_hub(*h)) {
            return err("routes must map exactly the hub set".into());
        }
        for (&h, spokes) in &self.routes {
            if spokes.len() + 1 < inst.gamma {
                return err(format!(
                    "route of hub {h} has {} nodes, gamma = {}",
                    spokes.len() + 1,
                    inst.gamma
                ));
            }
            let mut expected: Vec<usize> =
                (0..n).filter(|&v| v != h && self.alloc[v] == h).collect();
            let mut got = spokes.clone();
            got.sort_unstable();
            expected.sort_unstable();
            if got != expected {
                return err(format!("route of hub {h} does not match its allocation"));
            }
        }
        Ok(())
    }

    /// 0/1 encoding over the master variables; `eta` carries the true
    /// per-commodity path times so optimality cuts can be audited at
    /// integral encodings.
    pub fn encode(&self, inst: &ProblemInstance) -> MasterState {
        let ctx = EvalContext::new(inst, self);
        let mut s = MasterState::zeros(inst.n);
        for i in 0..inst.n {
            s.set_z(i, self.alloc[i], 1.0);
        }
        for (&h, spokes) in &self.routes {
            let mut prev = h;
            for &v in spokes {
                s.set_r(prev, v, 1.0);
                prev = v;
            }
            s.set_r(prev, h, 1.0);
        }
        for (i, j) in inst.commodities() {
            s.set_eta(i, j, ctx.path_time(i, j));
        }
        s
    }
}

/// Total time objective of a solution (Eq. objective over all ordered
/// pairs). The solution must satisfy its structural invariants.
pub fn evaluate(inst: &ProblemInstance, sol: &HubRouteSolution) -> Result<f64, SolutionError> {
    sol.validate(inst)?;
    Ok(EvalContext::new(inst, sol).objective())
}

/// Load on one spoke arc of a route.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLoad {
    pub tail: usize,
    pub head: usize,
    pub load: f64,
}

/// Flow volume carried by every spoke arc: each ordered pair contributes
/// its volume to all spoke arcs on its unique path. Arcs are listed per
/// hub in ascending hub order, each route in driving order.
pub fn capacity_loads(inst: &ProblemInstance, sol: &HubRouteSolution) -> Vec<ArcLoad> {
    let ctx = EvalContext::new(inst, sol);
    let n = inst.n;
    let mut load = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || inst.w[i][j] == 0.0 {
                continue;
            }
            for (tail, _) in ctx.path_spoke_arcs(i, j) {
                load[tail] += inst.w[i][j];
            }
        }
    }
    let mut out = Vec::new();
    for (&h, spokes) in &sol.routes {
        let mut prev = h;
        for &v in spokes {
            out.push(ArcLoad { tail: prev, head: v, load: load[prev] });
            prev = v;
        }
        out.push(ArcLoad { tail: prev, head: h, load: load[prev] });
    }
    out
}

pub fn is_capacity_feasible(inst: &ProblemInstance, sol: &HubRouteSolution) -> bool {
    capacity_loads(inst, sol).iter().all(|a| a.load <= inst.capacity + 1e-9)
}

/// Reverse the routes selected by `pi` (indexed in ascending hub order).
/// Hubs and allocation are untouched; in the absence of capacity
/// constraints and for symmetric `t` the objective is invariant.
pub fn reverse_routes(
    sol: &HubRouteSolution,
    pi: &[bool],
) -> Result<HubRouteSolution, SolutionError> {
    if pi.len() != sol.hubs.len() {
        return Err(SolutionError::Params(format!(
            "pi length {} != hub count {}",
            pi.len(),
            sol.hubs.len()
        )));
    }
    let mut out = sol.clone();
    for (idx, &h) in sol.hubs.iter().enumerate() {
        if pi[idx] {
            out.routes.get_mut(&h).unwrap().reverse();
        }
    }
    Ok(out)
}

/// Weighted average of the 0/1 encodings of a symmetric family of
/// solutions (all sharing hubs and allocation); the `eta` coordinates are
/// set to the per-commodity lower bounds `alpha * t_ij`.
pub fn pseudo_average(
    inst: &ProblemInstance,
    solutions: &[HubRouteSolution],
    weights: &[f64],
) -> Result<MasterState, SolutionError> {
    if solutions.is_empty() {
        return Err(SolutionError::Params("empty solution set".into()));
    }
    if solutions.len() != weights.len() || weights.iter().any(|&w| w <= 0.0) {
        return Err(SolutionError::Params("weights must be positive, one per solution".into()));
    }
    let first = &solutions[0];
    for sol in &solutions[1..] {
        if sol.hubs != first.hubs || sol.alloc != first.alloc {
            return Err(SolutionError::Params(
                "solutions must share hub set and allocation".into(),
            ));
        }
    }
    let total: f64 = weights.iter().sum();
    let mut out = MasterState::zeros(inst.n);
    for (sol, &wgt) in solutions.iter().zip(weights) {
        let enc = sol.encode(inst);
        for idx in 0..out.z.len() {
            out.z[idx] += wgt / total * enc.z[idx];
            out.r[idx] += wgt / total * enc.r[idx];
        }
    }
    for (i, j) in inst.commodities() {
        out.set_eta(i, j, inst.alpha * inst.t[i][j]);
    }
    Ok(out)
}

/// A fractional point deep inside the assignment part of the master
/// polytope: `z_kk = (q + p) / 2n`, off-diagonal allocation spread evenly
/// so each allocation row sums to one, and `r_ij = 1/(n-1)`. Computed once
/// per solve and never changed.
pub fn uniform_interior(n: usize, p: usize, q: usize) -> MasterState {
    let mut s = MasterState::zeros(n);
    let diag = (q + p) as f64 / (2.0 * n as f64);
    let off = (1.0 - diag) / (n as f64 - 1.0);
    for i in 0..n {
        for k in 0..n {
            s.set_z(i, k, if i == k { diag } else { off });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s.set_r(i, j, 1.0 / (n as f64 - 1.0));
            }
        }
    }
    s
}

const STRICT_EPS: f64 = 1e-9;
const EQ_TOL: f64 = 1e-7;

/// Strict (relative-interior) feasibility against the master LP: equality
/// rows hold within tolerance, inequality rows with positive slack, and
/// every integer-marked column lies strictly inside its bounds.
fn is_strict_interior(lp: &LinearProgram, x: &[f64]) -> bool {
    for row in &lp.rows {
        let act: f64 = row.coeffs.iter().map(|&(c, v)| v * x[c]).sum();
        match row.sense {
            RowSense::Eq => {
                if (act - row.rhs).abs() > EQ_TOL {
                    return false;
                }
            }
            RowSense::Le => {
                if act > row.rhs - STRICT_EPS {
                    return false;
                }
            }
            RowSense::Ge => {
                if act < row.rhs + STRICT_EPS {
                    return false;
                }
            }
        }
    }
    for j in 0..lp.num_cols() {
        if lp.integer[j] {
            if x[j] < lp.lower[j] + STRICT_EPS || x[j] > lp.upper[j] - STRICT_EPS {
                return false;
            }
        } else if x[j] < lp.lower[j] - EQ_TOL || x[j] > lp.upper[j] + EQ_TOL {
            return false;
        }
    }
    true
}

/// Center the stored incumbents; if the center is not strictly inside the
/// master LP, walk toward `current` by bisection (30 steps). Failure is a
/// normal outcome when no interior point can be produced.
pub fn incumbent_relinking(
    incumbents: &[MasterState],
    current: &MasterState,
    master_lp: &LinearProgram,
) -> Option<MasterState> {
    if incumbents.is_empty() {
        return None;
    }
    let n = incumbents[0].n;
    let layout = MasterLayout::new(n);
    let mut center = vec![0.0; layout.num_cols()];
    for inc in incumbents {
        let v = layout.to_point(inc);
        for (c, vi) in center.iter_mut().zip(v) {
            *c += vi / incumbents.len() as f64;
        }
    }
    if is_strict_interior(master_lp, &center) {
        return Some(layout.from_point(&center));
    }
    let target = layout.to_point(current);
    if center == target || !is_strict_interior(master_lp, &target) {
        return None;
    }
    // Invariant: x(hi) is strictly interior, x(lo) is not.
    let point_at = |t: f64| -> Vec<f64> {
        center
            .iter()
            .zip(&target)
            .map(|(&c, &g)| c + t * (g - c))
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if is_strict_interior(master_lp, &point_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(layout.from_point(&point_at(hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate;
    use std::collections::BTreeMap;

    /// Four nodes, hubs {0, 1}, routes 0:(2) and 1:(3), all t = 1,
    /// alpha = 0.5, all phi = 1 (zero-based version of the hand example).
    pub(crate) fn four_node_instance() -> (ProblemInstance, HubRouteSolution) {
        let n = 4;
        let mut t = vec![vec![1.0; n]; n];
        for i in 0..n {
            t[i][i] = 0.0;
        }
        let inst = ProblemInstance {
            name: "hand4".into(),
            n,
            alpha: 0.5,
            p: 2,
            q: 2,
            gamma: 2,
            capacity: 100.0,
            phi: vec![1.0; n],
            t,
            w: vec![vec![0.0; n]; n],
        };
        let sol = HubRouteSolution {
            hubs: vec![0, 1],
            alloc: vec![0, 1, 0, 1],
            routes: BTreeMap::from([(0, vec![2]), (1, vec![3])]),
        };
        (inst, sol)
    }

    #[test]
    fn hand_example_path_times() {
        let (inst, sol) = four_node_instance();
        sol.validate(&inst).unwrap();
        let ctx = EvalContext::new(&inst, &sol);
        // spoke -> spoke across hubs: 1 + 1 + 0.5 + 1 + 1
        assert!((ctx.path_time(2, 3) - 4.5).abs() < 1e-12);
        // hub -> hub: only the discounted edge, no transshipment
        assert!((ctx.path_time(0, 1) - 0.5).abs() < 1e-12);
        // hub -> own spoke: one cycle arc, no transshipment
        assert!((ctx.path_time(0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_loads_trace_paths() {
        let (mut inst, sol) = four_node_instance();
        // single flow 2 -> 3 of volume 5
        inst.w[2][3] = 5.0;
        let loads = capacity_loads(&inst, &sol);
        let get = |tail: usize, head: usize| {
            loads.iter().find(|a| a.tail == tail && a.head == head).unwrap().load
        };
        assert_eq!(get(2, 0), 5.0);
        assert_eq!(get(1, 3), 5.0);
        assert_eq!(get(0, 2), 0.0);
        assert_eq!(get(3, 1), 0.0);
    }

    #[test]
    fn intra_route_load_tracing() {
        // route 0:(2, 4) with one flow 2 -> 4: only the arc (2, 4) carries it.
        let n = 6;
        let mut t = vec![vec![1.0; n]; n];
        for i in 0..n {
            t[i][i] = 0.0;
        }
        let inst = ProblemInstance {
            name: "six".into(),
            n,
            alpha: 0.5,
            p: 2,
            q: 2,
            gamma: 3,
            capacity: 100.0,
            phi: vec![1.0; n],
            t,
            w: {
                let mut w = vec![vec![0.0; n]; n];
                w[2][4] = 2.0;
                w
            },
        };
        let sol = HubRouteSolution {
            hubs: vec![0, 1],
            alloc: vec![0, 1, 0, 1, 0, 1],
            routes: BTreeMap::from([(0, vec![2, 4]), (1, vec![3, 5])]),
        };
        sol.validate(&inst).unwrap();
        let loads = capacity_loads(&inst, &sol);
        let get = |tail: usize, head: usize| {
            loads.iter().find(|a| a.tail == tail && a.head == head).unwrap().load
        };
        assert_eq!(get(2, 4), 2.0);
        assert_eq!(get(4, 0), 0.0);
        assert_eq!(get(0, 2), 0.0);
    }

    #[test]
    fn all_zero_flow_means_zero_loads() {
        let (inst, sol) = four_node_instance();
        assert!(capacity_loads(&inst, &sol).iter().all(|a| a.load == 0.0));
    }

    #[test]
    fn reversal_identity_and_involution() {
        let sol = HubRouteSolution {
            hubs: vec![0, 1, 2],
            alloc: vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
            routes: BTreeMap::from([(0, vec![3, 6]), (1, vec![4, 7]), (2, vec![5, 8])]),
        };
        let same = reverse_routes(&sol, &[false, false, false]).unwrap();
        assert_eq!(same, sol);
        let all = reverse_routes(&sol, &[true, true, true]).unwrap();
        assert_eq!(all.routes[&0], vec![6, 3]);
        let back = reverse_routes(&all, &[true, true, true]).unwrap();
        assert_eq!(back, sol);
        assert!(reverse_routes(&sol, &[true]).is_err());
    }

    #[test]
    fn single_spoke_route_reversal_is_identity() {
        let (inst, sol) = four_node_instance();
        let rev = reverse_routes(&sol, &[true, true]).unwrap();
        assert_eq!(rev, sol);
        let _ = inst;
    }

    #[test]
    fn evaluation_invariant_under_reversal_for_symmetric_t() {
        // Generated instances have symmetric (Euclidean) t.
        let inst = generate(5, 9, 3, 0.8).unwrap();
        let sol = HubRouteSolution {
            hubs: vec![1, 4, 7],
            alloc: vec![1, 1, 4, 4, 4, 7, 7, 7, 1],
            routes: BTreeMap::from([(1, vec![0, 8]), (4, vec![2, 3]), (7, vec![5, 6])]),
        };
        sol.validate(&inst).unwrap();
        let base = EvalContext::new(&inst, &sol).objective();
        for mask in 0..8u32 {
            let pi = [(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0];
            let rev = reverse_routes(&sol, &pi).unwrap();
            let val = EvalContext::new(&inst, &rev).objective();
            assert!((val - base).abs() < 1e-9, "mask {mask}: {val} vs {base}");
        }
    }

    #[test]
    fn pseudo_average_of_one_solution_is_its_encoding() {
        let inst = generate(2, 9, 3, 0.9).unwrap();
        let sol = HubRouteSolution {
            hubs: vec![0, 1, 2],
            alloc: vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
            routes: BTreeMap::from([(0, vec![3, 6]), (1, vec![4, 7]), (2, vec![5, 8])]),
        };
        let avg = pseudo_average(&inst, &[sol.clone()], &[1.0]).unwrap();
        let enc = sol.encode(&inst);
        assert_eq!(avg.z, enc.z);
        assert_eq!(avg.r, enc.r);
        for (i, j) in inst.commodities() {
            assert!((avg.eta(i, j) - inst.alpha * inst.t[i][j]).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_average_with_full_reversal_halves_route_arcs() {
        let inst = generate(2, 9, 3, 0.9).unwrap();
        let sol = HubRouteSolution {
            hubs: vec![0, 1, 2],
            alloc: vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
            routes: BTreeMap::from([(0, vec![3, 6]), (1, vec![4, 7]), (2, vec![5, 8])]),
        };
        let rev = reverse_routes(&sol, &[true, true, true]).unwrap();
        let avg = pseudo_average(&inst, &[sol.clone(), rev], &[1.0, 1.0]).unwrap();
        let enc = sol.encode(&inst);
        assert_eq!(avg.z, enc.z);
        for i in 0..inst.n {
            for j in 0..inst.n {
                if i != j {
                    let expect = if enc.r(i, j) > 0.0 || enc.r(j, i) > 0.0 { 0.5 } else { 0.0 };
                    assert!((avg.r(i, j) - expect).abs() < 1e-12);
                }
            }
        }
        assert!(pseudo_average(&inst, &[], &[]).is_err());
    }

    #[test]
    fn uniform_interior_properties() {
        let (n, p, q) = (9, 4, 3);
        let s = uniform_interior(n, p, q);
        for i in 0..n {
            let row: f64 = (0..n).map(|k| s.z(i, k)).sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
        let hub_mass: f64 = (0..n).map(|k| s.z(k, k)).sum();
        assert!(hub_mass >= q as f64 - 1e-12 && hub_mass <= p as f64 + 1e-12);
        for i in 0..n {
            for k in 0..n {
                assert!(s.z(i, k) > 0.0 && s.z(i, k) < 1.0);
                if i != k {
                    assert!(s.r(i, k) > 0.0 && s.r(i, k) < 1.0);
                }
            }
        }
    }
}
