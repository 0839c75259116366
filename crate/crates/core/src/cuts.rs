//! Valid-inequality families over the master variables and their
//! separation procedures.
//!
//! Families (named by the proposition that introduces them):
//! * P1 (out/in): a spoke allocated outside a set needs a route arc
//!   leaving (entering) the set; separated by max-flow from a dummy
//!   source.
//! * P2 (out/in): the two-sided variant for a pair of spokes allocated
//!   across the set boundary; max-flow between the pair.
//! * P4: cardinality bound on route arcs inside a set, evaluated on the
//!   witness sets the flow oracles produce.
//! * P6: degree-style bounds linking arc counts to open hubs; max-flow on
//!   a scaled auxiliary graph.
//! * P7: arc-allocation inequality with a closed-form worst-case set.
//! * P10: clique-style bounds found by a small knapsack search.
//! * P11: 2-matching (comb) inequalities, heuristic component search.
//! * Static: rows added to the master up front — allocation consistency
//!   along arcs, aggregate route volume bounds, and single-arc volume
//!   bounds.
//!
//! Every emitted cut is re-verified by direct evaluation at the separated
//! point and carries its violation; anything below the separation
//! tolerance is dropped.

use crate::instance::ProblemInstance;
use crate::lp::RowSense;
use crate::maxflow::max_flow;
use crate::solution::{MasterLayout, MasterState};

pub const SEPARATION_TOL: f64 = 1e-4;

/// Slack used by the knapsack separation of the clique family.
pub const CLIQUE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutFamily {
    P1Out,
    P1In,
    P2Out,
    P2In,
    P4Card,
    P6Degree,
    P7ArcAlloc,
    P10Clique,
    P11TwoMatch,
    Static,
}

impl CutFamily {
    pub fn label(self) -> &'static str {
        match self {
            CutFamily::P1Out => "P1-out",
            CutFamily::P1In => "P1-in",
            CutFamily::P2Out => "P2-out",
            CutFamily::P2In => "P2-in",
            CutFamily::P4Card => "P4-card",
            CutFamily::P6Degree => "P6-degree",
            CutFamily::P7ArcAlloc => "P7-arc-alloc",
            CutFamily::P10Clique => "P10-clique",
            CutFamily::P11TwoMatch => "P11-2match",
            CutFamily::Static => "static",
        }
    }

    pub fn all_dynamic() -> [CutFamily; 9] {
        [
            CutFamily::P1Out,
            CutFamily::P1In,
            CutFamily::P2Out,
            CutFamily::P2In,
            CutFamily::P4Card,
            CutFamily::P6Degree,
            CutFamily::P7ArcAlloc,
            CutFamily::P10Clique,
            CutFamily::P11TwoMatch,
        ]
    }
}

/// A linear inequality over the master `z`/`r` variables.
#[derive(Debug, Clone)]
pub struct CutDescription {
    pub family: CutFamily,
    pub sense: RowSense,
    pub rhs: f64,
    /// (i, k, coefficient) entries on `z_ik`.
    pub z_coeffs: Vec<(usize, usize, f64)>,
    /// (i, j, coefficient) entries on `r_ij`.
    pub r_coeffs: Vec<(usize, usize, f64)>,
    /// Witness node set `S` (empty for static rows).
    pub witness: Vec<usize>,
    /// Witness pair (P2, P7) or tooth arcs (P11), when applicable.
    pub witness_pair: Option<(usize, usize)>,
    pub witness_teeth: Vec<(usize, usize)>,
    /// Violation at the point that produced the cut.
    pub violation: f64,
}

impl CutDescription {
    pub fn activity(&self, s: &MasterState) -> f64 {
        let mut act = 0.0;
        for &(i, k, c) in &self.z_coeffs {
            act += c * s.z(i, k);
        }
        for &(i, j, c) in &self.r_coeffs {
            act += c * s.r(i, j);
        }
        act
    }

    /// Positive iff the point violates the cut.
    pub fn violation_at(&self, s: &MasterState) -> f64 {
        let act = self.activity(s);
        match self.sense {
            RowSense::Le => act - self.rhs,
            RowSense::Ge => self.rhs - act,
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }

    /// Sparse row over the master column layout.
    pub fn to_row(&self, layout: &MasterLayout) -> (Vec<(usize, f64)>, RowSense, f64) {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for &(i, k, c) in &self.z_coeffs {
            coeffs.push((layout.col_z(i, k), c));
        }
        for &(i, j, c) in &self.r_coeffs {
            coeffs.push((layout.col_r(i, j), c));
        }
        (coeffs, self.sense, self.rhs)
    }

    /// Canonical key for deduplication.
    fn key(&self) -> (u8, Vec<(usize, usize, i64)>, Vec<(usize, usize, i64)>, i64) {
        let q = |v: f64| (v * 1e9).round() as i64;
        let mut z: Vec<(usize, usize, i64)> =
            self.z_coeffs.iter().map(|&(i, k, c)| (i, k, q(c))).collect();
        let mut r: Vec<(usize, usize, i64)> =
            self.r_coeffs.iter().map(|&(i, j, c)| (i, j, q(c))).collect();
        z.sort_unstable();
        r.sort_unstable();
        let sense = match self.sense {
            RowSense::Le => 0,
            RowSense::Eq => 1,
            RowSense::Ge => 2,
        };
        (sense, z, r, q(self.rhs))
    }
}

fn dedup(cuts: Vec<CutDescription>) -> Vec<CutDescription> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for c in cuts {
        if seen.insert(c.key()) {
            out.push(c);
        }
    }
    out
}

/// Maximum number of nodes (hence arcs) on one route: every one of the
/// other `q - 1` hubs consumes at least `gamma` nodes.
pub fn max_route_nodes(inst: &ProblemInstance) -> usize {
    inst.n.saturating_sub(inst.q.saturating_sub(1) * inst.gamma).max(2)
}

/// Safe overestimate `beta` for the aggregate route volume rows: a route's
/// volume exceeds one vehicle load only by flow fulfilled inside the
/// route without wrapping past the hub, at most `U(U-1)/2` ordered pairs
/// of `w_max` each. Clamped so `beta * C` admits every single node's own
/// volume.
pub fn beta_factor(inst: &ProblemInstance) -> f64 {
    if inst.capacity <= 0.0 {
        return 1.0;
    }
    let u = max_route_nodes(inst) as f64;
    let wmax = inst.w.iter().flat_map(|row| row.iter().copied()).fold(0.0f64, f64::max);
    let agg = inst.aggregates();
    let peak = agg.outbound.iter().chain(agg.inbound.iter()).fold(0.0f64, |m, &v| m.max(v));
    let base = 1.0 + u * (u - 1.0) * wmax / (2.0 * inst.capacity);
    base.max(peak / inst.capacity)
}

pub struct StaticCuts {
    pub cuts: Vec<CutDescription>,
    pub warnings: Vec<String>,
}

/// Rows added to the master up front: allocation consistency along arcs
/// (all triples when n <= 15, separated lazily above that), aggregate
/// volume rows per hub candidate, and single-arc volume rows for nodes
/// whose own volume exceeds one vehicle.
pub fn static_cuts(inst: &ProblemInstance) -> StaticCuts {
    let n = inst.n;
    let agg = inst.aggregates();
    let beta = beta_factor(inst);
    let mut cuts = Vec::new();
    let mut warnings = Vec::new();

    let peak = agg.outbound.iter().chain(agg.inbound.iter()).fold(0.0f64, |m, &v| m.max(v));
    if beta * inst.capacity < peak - 1e-9 {
        warnings.push(format!(
            "beta*C = {} cannot admit the largest single-node volume {}; no allocation is feasible",
            beta * inst.capacity,
            peak
        ));
    }

    if n <= 15 {
        cuts.extend(arc_allocation_consistency_rows(inst, None));
    }

    // Aggregate route volume per hub candidate k:
    // sum_i O_i z_ik <= beta C z_kk, written with the z_kk term folded in.
    for k in 0..n {
        for vals in [&agg.outbound, &agg.inbound] {
            let mut z_coeffs = Vec::new();
            for i in 0..n {
                let mut c = vals[i];
                if i == k {
                    c -= beta * inst.capacity;
                }
                if c != 0.0 {
                    z_coeffs.push((i, k, c));
                }
            }
            cuts.push(CutDescription {
                family: CutFamily::Static,
                sense: RowSense::Le,
                rhs: 0.0,
                z_coeffs,
                r_coeffs: Vec::new(),
                witness: vec![k],
                witness_pair: None,
                witness_teeth: Vec::new(),
                violation: 0.0,
            });
        }
    }

    // Single-arc volume rows: a node whose inbound volume exceeds C can
    // never be first on a route (r_ki + z_kk <= 1 for every k), one whose
    // outbound exceeds C never last.
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            if agg.inbound[i] > inst.capacity + 1e-9 {
                cuts.push(CutDescription {
                    family: CutFamily::Static,
                    sense: RowSense::Le,
                    rhs: 1.0,
                    z_coeffs: vec![(k, k, 1.0)],
                    r_coeffs: vec![(k, i, 1.0)],
                    witness: vec![k, i],
                    witness_pair: Some((k, i)),
                    witness_teeth: Vec::new(),
                    violation: 0.0,
                });
            }
            if agg.outbound[i] > inst.capacity + 1e-9 {
                cuts.push(CutDescription {
                    family: CutFamily::Static,
                    sense: RowSense::Le,
                    rhs: 1.0,
                    z_coeffs: vec![(k, k, 1.0)],
                    r_coeffs: vec![(i, k, 1.0)],
                    witness: vec![i, k],
                    witness_pair: Some((i, k)),
                    witness_teeth: Vec::new(),
                    violation: 0.0,
                });
            }
        }
    }

    StaticCuts { cuts, warnings }
}

/// Allocation-consistency rows along an arc: if arc {i, j} is in the
/// solution and j is allocated to k, then i is allocated to k as well
/// (`r_ij + r_ji + z_jk - z_ik <= 1`). With `point` given, only violated
/// triples are returned (lazy mode for n > 15).
pub fn arc_allocation_consistency_rows(
    inst: &ProblemInstance,
    point: Option<&MasterState>,
) -> Vec<CutDescription> {
    let n = inst.n;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                let cut = CutDescription {
                    family: CutFamily::Static,
                    sense: RowSense::Le,
                    rhs: 1.0,
                    z_coeffs: vec![(j, k, 1.0), (i, k, -1.0)],
                    r_coeffs: vec![(i, j, 1.0), (j, i, 1.0)],
                    witness: vec![i, j, k],
                    witness_pair: Some((i, j)),
                    witness_teeth: Vec::new(),
                    violation: 0.0,
                };
                match point {
                    None => out.push(cut),
                    Some(p) => {
                        let v = cut.violation_at(p);
                        if v > SEPARATION_TOL {
                            let mut cut = cut;
                            cut.violation = v;
                            out.push(cut);
                        }
                    }
                }
            }
        }
    }
    out
}

fn verify_and_push(mut cut: CutDescription, point: &MasterState, out: &mut Vec<CutDescription>) {
    let v = cut.violation_at(point);
    if v > SEPARATION_TOL {
        cut.violation = v;
        out.push(cut);
    }
}

fn set_mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

pub fn cut_p1(n: usize, i: usize, set: &[usize], outgoing: bool) -> CutDescription {
    let in_set = set_mask(n, set);
    let mut r_coeffs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && in_set[a] && !in_set[b] {
                if outgoing {
                    r_coeffs.push((a, b, 1.0));
                } else {
                    r_coeffs.push((b, a, 1.0));
                }
            }
        }
    }
    let z_coeffs = (0..n).filter(|&j| !in_set[j]).map(|j| (i, j, -1.0)).collect();
    CutDescription {
        family: if outgoing { CutFamily::P1Out } else { CutFamily::P1In },
        sense: RowSense::Ge,
        rhs: 0.0,
        z_coeffs,
        r_coeffs,
        witness: set.to_vec(),
        witness_pair: None,
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Separate P1 (out and in): for each node `i`, send a unit from a dummy
/// source spread over `i`'s allocation row through the route arcs toward
/// `i`; a max-flow below one exposes a set that `i`'s route must leave
/// (or enter).
pub fn separate_allocation(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let s = n; // dummy source id
    let mut out = Vec::new();
    for i in 0..n {
        for outgoing in [true, false] {
            let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
            for j in 0..n {
                if point.z(i, j) > 0.0 {
                    arcs.push((s, j, point.z(i, j)));
                }
            }
            for a in 0..n {
                for b in 0..n {
                    if a != b && point.r(a, b) > 0.0 {
                        // reversed route arcs expose leaving cuts,
                        // forward arcs entering cuts
                        if outgoing {
                            arcs.push((b, a, point.r(a, b)));
                        } else {
                            arcs.push((a, b, point.r(a, b)));
                        }
                    }
                }
            }
            let flow = match max_flow(n + 1, &arcs, s, i) {
                Ok(f) => f,
                Err(_) => continue,
            };
            if flow.value < 1.0 - SEPARATION_TOL {
                let set: Vec<usize> = (0..n).filter(|&v| !flow.source_side[v]).collect();
                if set.is_empty() || set.len() == n {
                    continue;
                }
                verify_and_push(cut_p1(n, i, &set, outgoing), point, &mut out);
            }
        }
    }
    let _ = inst;
    dedup(out)
}

pub fn cut_p2(n: usize, i: usize, ip: usize, set: &[usize], outgoing: bool) -> CutDescription {
    let in_set = set_mask(n, set);
    let mut r_coeffs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && in_set[a] && !in_set[b] {
                if outgoing {
                    r_coeffs.push((a, b, 1.0));
                } else {
                    r_coeffs.push((b, a, 1.0));
                }
            }
        }
    }
    let mut z_coeffs = Vec::new();
    for j in 0..n {
        if !in_set[j] {
            z_coeffs.push((i, j, -1.0));
        } else {
            z_coeffs.push((ip, j, -1.0));
        }
    }
    CutDescription {
        family: if outgoing { CutFamily::P2Out } else { CutFamily::P2In },
        sense: RowSense::Ge,
        rhs: 0.0,
        z_coeffs,
        r_coeffs,
        witness: set.to_vec(),
        witness_pair: Some((i, ip)),
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Separate P2 (out and in) on the `2n` ordered pairs with the largest
/// combined allocation mass on other nodes (ties by index); the
/// restriction bounds the number of max-flow calls and is a recorded
/// completeness trade-off.
pub fn separate_pairs(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let mass: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| point.z(i, j)).sum())
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for ip in 0..n {
            if i != ip {
                pairs.push((i, ip));
            }
        }
    }
    pairs.sort_by(|&(a, b), &(c, d)| {
        (mass[c] + mass[d]).partial_cmp(&(mass[a] + mass[b])).unwrap().then((a, b).cmp(&(c, d)))
    });
    pairs.truncate(2 * n);

    let mut out = Vec::new();
    for (i, ip) in pairs {
        for outgoing in [true, false] {
            // Arc capacities start from the route values (reversed for the
            // entering variant) and are topped up by the allocation terms
            // tied to the endpoints i and i'.
            let mut cap = vec![vec![0.0; n]; n];
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        cap[a][b] = if outgoing { point.r(a, b) } else { point.r(b, a) };
                    }
                }
            }
            for l in 0..n {
                if l != i {
                    cap[i][l] += point.z(ip, l);
                }
            }
            for j in 0..n {
                if j != ip {
                    cap[j][ip] += point.z(i, j);
                }
            }
            let mut arcs = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && cap[a][b] > 0.0 {
                        arcs.push((a, b, cap[a][b]));
                    }
                }
            }
            let flow = match max_flow(n, &arcs, i, ip) {
                Ok(f) => f,
                Err(_) => continue,
            };
            if flow.value < 2.0 - SEPARATION_TOL {
                let set: Vec<usize> = (0..n).filter(|&v| flow.source_side[v]).collect();
                if set.is_empty() || set.len() == n {
                    continue;
                }
                verify_and_push(cut_p2(n, i, ip, &set, outgoing), point, &mut out);
            }
        }
    }
    dedup(out)
}

pub fn cut_p4(n: usize, set: &[usize], route_cap: usize) -> CutDescription {
    let in_set = set_mask(n, set);
    let mut r_coeffs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && in_set[a] && in_set[b] {
                r_coeffs.push((a, b, 1.0));
            }
        }
    }
    let z_coeffs = set.iter().map(|&i| (i, i, -1.0)).collect();
    let rhs = set.len() as f64 - set.len().div_ceil(route_cap) as f64;
    CutDescription {
        family: CutFamily::P4Card,
        sense: RowSense::Le,
        rhs,
        z_coeffs,
        r_coeffs,
        witness: set.to_vec(),
        witness_pair: None,
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Evaluate the cardinality family on the witness sets (and complements)
/// the flow-based oracles produced this round.
pub fn separate_cardinality(
    inst: &ProblemInstance,
    point: &MasterState,
    witness_sets: &[Vec<usize>],
) -> Vec<CutDescription> {
    let n = inst.n;
    let u = max_route_nodes(inst);
    let mut out = Vec::new();
    for set in witness_sets {
        if set.is_empty() {
            continue;
        }
        let complement: Vec<usize> = {
            let m = set_mask(n, set);
            (0..n).filter(|&v| !m[v]).collect()
        };
        for cand in [set.clone(), complement] {
            if cand.is_empty() {
                continue;
            }
            verify_and_push(cut_p4(n, &cand, u), point, &mut out);
        }
    }
    dedup(out)
}

pub fn cut_p6(n: usize, set: &[usize], u: usize, outgoing: bool) -> CutDescription {
    // (U-1) r(delta(S)) + U sum_{i in S} z_ii - sum_{i in S} sum_j z_ij >= 0
    let in_set = set_mask(n, set);
    let uf = u as f64;
    let mut r_coeffs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && in_set[a] && !in_set[b] {
                if outgoing {
                    r_coeffs.push((a, b, uf - 1.0));
                } else {
                    r_coeffs.push((b, a, uf - 1.0));
                }
            }
        }
    }
    let mut z_coeffs = Vec::new();
    for &i in set {
        for j in 0..n {
            let mut c = -1.0;
            if j == i {
                c += uf;
            }
            if c != 0.0 {
                z_coeffs.push((i, j, c));
            }
        }
    }
    CutDescription {
        family: CutFamily::P6Degree,
        sense: RowSense::Ge,
        rhs: 0.0,
        z_coeffs,
        r_coeffs,
        witness: set.to_vec(),
        witness_pair: None,
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Separate P6 (both orientations) with one max-flow on the auxiliary
/// graph: source arcs `U z_kk`, route arcs `(U-1) r`, sink arcs carrying
/// each node's allocation row mass.
pub fn separate_degree(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let u = max_route_nodes(inst);
    let s = n;
    let t = n + 1;
    let mut out = Vec::new();
    for outgoing in [true, false] {
        let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
        for k in 0..n {
            if point.z(k, k) > 0.0 {
                arcs.push((s, k, u as f64 * point.z(k, k)));
            }
            let row: f64 = (0..n).map(|j| point.z(k, j)).sum();
            if row > 0.0 {
                arcs.push((k, t, row));
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && point.r(a, b) > 0.0 {
                    if outgoing {
                        arcs.push((b, a, (u as f64 - 1.0) * point.r(a, b)));
                    } else {
                        arcs.push((a, b, (u as f64 - 1.0) * point.r(a, b)));
                    }
                }
            }
        }
        let flow = match max_flow(n + 2, &arcs, s, t) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if flow.value < n as f64 - SEPARATION_TOL {
            // S = V is a legitimate witness here (it bounds the total hub
            // count from below); only the empty set is meaningless.
            let set: Vec<usize> = (0..n).filter(|&v| !flow.source_side[v]).collect();
            if set.is_empty() {
                continue;
            }
            verify_and_push(cut_p6(n, &set, u, outgoing), point, &mut out);
        }
    }
    dedup(out)
}

pub fn cut_p7(n: usize, i: usize, ip: usize, set: &[usize]) -> CutDescription {
    let in_set = set_mask(n, set);
    let mut z_coeffs = Vec::new();
    for j in 0..n {
        if !in_set[j] {
            z_coeffs.push((i, j, -1.0));
        } else {
            z_coeffs.push((ip, j, -1.0));
        }
    }
    CutDescription {
        family: CutFamily::P7ArcAlloc,
        sense: RowSense::Le,
        rhs: 0.0,
        z_coeffs,
        r_coeffs: vec![(i, ip, 1.0), (ip, i, 1.0)],
        witness: set.to_vec(),
        witness_pair: Some((i, ip)),
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Worst-case set for P7: node `j` goes inside `S` exactly when its
/// contribution there (`z_i'j`) does not exceed its contribution outside
/// (`z_ij`), which minimizes the right-hand side over all valid sets.
pub fn p7_closed_form_set(n: usize, point: &MasterState, i: usize, ip: usize) -> Vec<usize> {
    let mut set = vec![i];
    for j in 0..n {
        if j != i && j != ip && point.z(ip, j) <= point.z(i, j) {
            set.push(j);
        }
    }
    set.sort_unstable();
    set
}

pub fn separate_arc_allocation(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let mut out = Vec::new();
    for i in 0..n {
        for ip in 0..n {
            if i == ip || point.r(i, ip) + point.r(ip, i) <= SEPARATION_TOL {
                continue;
            }
            let set = p7_closed_form_set(n, point, i, ip);
            verify_and_push(cut_p7(n, i, ip, &set), point, &mut out);
        }
    }
    let _ = inst;
    dedup(out)
}

pub fn cut_p10(i: usize, others: &[usize]) -> CutDescription {
    let mut r_coeffs = Vec::new();
    for &j in others {
        r_coeffs.push((i, j, 1.0));
        r_coeffs.push((j, i, 1.0));
    }
    let mut witness = others.to_vec();
    witness.push(i);
    witness.sort_unstable();
    CutDescription {
        family: CutFamily::P10Clique,
        sense: RowSense::Le,
        rhs: others.len() as f64,
        z_coeffs: Vec::new(),
        r_coeffs,
        witness,
        witness_pair: None,
        witness_teeth: Vec::new(),
        violation: 0.0,
    }
}

/// Knapsack search behind the clique family: the largest node set whose
/// internal route mass reaches `|S| - 1 + slack`, exhaustively over
/// subsets (desk scale, n <= 20). Singletons are degenerate — the
/// tournament rows in the relaxation already cover them — and skipped.
fn clique_knapsack(n: usize, point: &MasterState) -> Option<Vec<usize>> {
    if n > 20 {
        return None;
    }
    let mut best: Option<Vec<usize>> = None;
    let mut set: Vec<usize> = Vec::new();
    fn rec(
        v: usize,
        n: usize,
        point: &MasterState,
        set: &mut Vec<usize>,
        best: &mut Option<Vec<usize>>,
    ) {
        if v == n {
            if set.len() < 2 {
                return;
            }
            let mut mass = 0.0;
            for &a in set.iter() {
                for &b in set.iter() {
                    if a != b {
                        mass += point.r(a, b);
                    }
                }
            }
            if mass >= set.len() as f64 - 1.0 + CLIQUE_SLACK {
                match best {
                    Some(b) if b.len() > set.len() || (b.len() == set.len() && *b <= *set) => {}
                    _ => *best = Some(set.clone()),
                }
            }
            return;
        }
        rec(v + 1, n, point, set, best);
        set.push(v);
        rec(v + 1, n, point, set, best);
        set.pop();
    }
    rec(0, n, point, &mut set, &mut best);
    best
}

pub fn separate_clique(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let mut out = Vec::new();
    if let Some(set) = clique_knapsack(n, point) {
        for &i in &set {
            let others: Vec<usize> = set.iter().copied().filter(|&j| j != i).collect();
            verify_and_push(cut_p10(i, &others), point, &mut out);
        }
    }
    let _ = inst;
    dedup(out)
}

pub fn cut_p11(n: usize, set: &[usize], teeth: &[(usize, usize)]) -> CutDescription {
    let mut r_coeffs: Vec<(usize, usize, f64)> = Vec::new();
    let add = |i: usize, j: usize, coeffs: &mut Vec<(usize, usize, f64)>| {
        if let Some(e) = coeffs.iter_mut().find(|e| e.0 == i && e.1 == j) {
            e.2 += 1.0;
        } else {
            coeffs.push((i, j, 1.0));
        }
    };
    for &a in set {
        for &b in set {
            if a < b {
                add(a, b, &mut r_coeffs);
                add(b, a, &mut r_coeffs);
            }
        }
    }
    for &(a, b) in teeth {
        add(a, b, &mut r_coeffs);
        add(b, a, &mut r_coeffs);
    }
    let _ = n;
    CutDescription {
        family: CutFamily::P11TwoMatch,
        sense: RowSense::Le,
        rhs: set.len() as f64 + (teeth.len() as f64 - 1.0) / 2.0,
        z_coeffs: Vec::new(),
        r_coeffs,
        witness: set.to_vec(),
        witness_pair: None,
        witness_teeth: teeth.to_vec(),
        violation: 0.0,
    }
}

/// Heuristic 2-matching separation: drop heavy support edges (threshold
/// sweep), take connected components of the light remainder as handle
/// candidates, and assemble an odd set (>= 3) of vertex-disjoint dropped
/// boundary edges as teeth.
pub fn separate_two_matching(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let n = inst.n;
    let edge = |a: usize, b: usize| point.r(a, b) + point.r(b, a);
    let mut out = Vec::new();
    for threshold in [0.3, 0.5, 0.7] {
        // components of the light-edge graph
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = next;
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    if u != v && comp[u] == usize::MAX {
                        let y = edge(v.min(u), v.max(u));
                        if y > 1e-9 && y < threshold {
                            comp[u] = next;
                            stack.push(u);
                        }
                    }
                }
            }
            next += 1;
        }
        for c in 0..next {
            let set: Vec<usize> = (0..n).filter(|&v| comp[v] == c).collect();
            if set.len() < 2 || set.len() == n {
                continue;
            }
            let in_set = set_mask(n, &set);
            // dropped boundary edges, heaviest first
            let mut boundary: Vec<(usize, usize, f64)> = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if in_set[a] != in_set[b] {
                        let y = edge(a, b);
                        if y >= threshold {
                            boundary.push((a, b, y));
                        }
                    }
                }
            }
            boundary
                .sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap().then((x.0, x.1).cmp(&(y.0, y.1))));
            let mut used = vec![false; n];
            let mut teeth: Vec<(usize, usize)> = Vec::new();
            for &(a, b, _) in &boundary {
                if !used[a] && !used[b] {
                    used[a] = true;
                    used[b] = true;
                    teeth.push((a, b));
                }
            }
            if teeth.len() % 2 == 0 && !teeth.is_empty() {
                teeth.pop();
            }
            if teeth.len() < 3 {
                continue;
            }
            verify_and_push(cut_p11(n, &set, &teeth), point, &mut out);
        }
    }
    let _ = inst;
    dedup(out)
}

/// Run every dynamic family in fixed order; the sets produced by the flow
/// oracles feed the cardinality family as witnesses.
pub fn separate_all(inst: &ProblemInstance, point: &MasterState) -> Vec<CutDescription> {
    let mut cuts = Vec::new();
    let allocation = separate_allocation(inst, point);
    let pairs = separate_pairs(inst, point);
    let mut witnesses: Vec<Vec<usize>> = Vec::new();
    for c in allocation.iter().chain(pairs.iter()) {
        witnesses.push(c.witness.clone());
    }
    cuts.extend(allocation);
    cuts.extend(pairs);
    cuts.extend(separate_cardinality(inst, point, &witnesses));
    cuts.extend(separate_degree(inst, point));
    cuts.extend(separate_arc_allocation(inst, point));
    cuts.extend(separate_clique(inst, point));
    cuts.extend(separate_two_matching(inst, point));
    if inst.n > 15 {
        cuts.extend(arc_allocation_consistency_rows(inst, Some(point)));
    }
    dedup(cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate;
    use crate::solution::HubRouteSolution;
    use std::collections::BTreeMap;

    fn unit_instance(n: usize) -> ProblemInstance {
        let mut t = vec![vec![1.0; n]; n];
        for i in 0..n {
            t[i][i] = 0.0;
        }
        ProblemInstance {
            name: format!("unit{n}"),
            n,
            alpha: 0.9,
            p: 2,
            q: 1,
            gamma: 2,
            capacity: 10.0,
            phi: vec![1.0; n],
            t,
            w: vec![vec![0.0; n]; n],
        }
    }

    fn feasible_encoding() -> (ProblemInstance, MasterState) {
        let inst = generate(3, 9, 3, 0.8).unwrap();
        let sol = HubRouteSolution {
            hubs: vec![0, 1, 2],
            alloc: vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
            routes: BTreeMap::from([(0, vec![3, 6]), (1, vec![4, 7]), (2, vec![5, 8])]),
        };
        let enc = sol.encode(&inst);
        (inst, enc)
    }

    #[test]
    fn integral_feasible_encoding_yields_no_cuts() {
        let (inst, enc) = feasible_encoding();
        assert!(separate_all(&inst, &enc).is_empty());
    }

    #[test]
    fn static_rows_hold_at_feasible_encodings() {
        let (inst, enc) = feasible_encoding();
        for cut in static_cuts(&inst).cuts {
            assert!(cut.violation_at(&enc) <= 1e-9, "static row violated: {cut:?}");
        }
    }

    #[test]
    fn overweight_node_gets_first_arc_ban() {
        let mut inst = generate(3, 9, 3, 0.8).unwrap();
        inst.capacity = 10.0; // far below every D_i
        let cuts = static_cuts(&inst);
        assert!(cuts
            .cuts
            .iter()
            .any(|c| c.rhs == 1.0 && c.r_coeffs.len() == 1 && c.z_coeffs.len() == 1));
    }

    #[test]
    fn zero_flow_makes_volume_rows_vacuous() {
        let mut inst = generate(3, 9, 3, 0.8).unwrap();
        inst.w = vec![vec![0.0; 9]; 9];
        inst.capacity = 1.0;
        let cuts = static_cuts(&inst);
        assert!(cuts.warnings.is_empty());
        // aggregate rows reduce to -beta*C z_kk <= 0
        let agg_rows: Vec<_> = cuts
            .cuts
            .iter()
            .filter(|c| c.r_coeffs.is_empty() && c.rhs == 0.0)
            .collect();
        assert_eq!(agg_rows.len(), 18);
        for row in agg_rows {
            assert_eq!(row.z_coeffs.len(), 1);
            assert!(row.z_coeffs[0].2 < 0.0);
        }
    }

    #[test]
    fn allocation_cut_found_for_disconnected_component() {
        // cycles 0->1->0 and 2->3->4->2, everything allocated to hub 2:
        // nodes 0 and 1 have no route path to their hub.
        let inst = unit_instance(5);
        let mut p = MasterState::zeros(5);
        p.set_r(0, 1, 1.0);
        p.set_r(1, 0, 1.0);
        p.set_r(2, 3, 1.0);
        p.set_r(3, 4, 1.0);
        p.set_r(4, 2, 1.0);
        for i in 0..5 {
            p.set_z(i, 2, 1.0);
        }
        let cuts = separate_allocation(&inst, &p);
        assert!(!cuts.is_empty());
        for c in &cuts {
            assert!(c.violation > SEPARATION_TOL);
            assert!((c.violation_at(&p) - c.violation).abs() < 1e-12);
        }
    }

    #[test]
    fn allocation_cut_for_all_zero_routes() {
        let inst = unit_instance(5);
        let mut p = MasterState::zeros(5);
        for i in 0..5 {
            p.set_z(i, (i + 1) % 5, 1.0);
        }
        assert!(!separate_allocation(&inst, &p).is_empty());
    }

    #[test]
    fn pair_cut_on_crossing_cycles() {
        // two 3-cycles with a pair allocated across them
        let inst = unit_instance(6);
        let mut p = MasterState::zeros(6);
        for (a, b) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            p.set_r(a, b, 1.0);
        }
        // everyone else self-ish; the interesting pair: 0 allocated to 3's
        // side, 3 allocated to 0's side
        p.set_z(0, 4, 1.0);
        p.set_z(3, 1, 1.0);
        p.set_z(1, 1, 1.0);
        p.set_z(2, 2, 1.0);
        p.set_z(4, 4, 1.0);
        p.set_z(5, 5, 1.0);
        let cuts = separate_pairs(&inst, &p);
        assert!(!cuts.is_empty());
    }

    #[test]
    fn cardinality_cut_on_fractional_cycle() {
        // 4-cycle of r = 1 with zero z_ii inside S, |S| = 4, U = 4:
        // lhs 4 > 4 - 1 = 3.
        let mut inst = unit_instance(4);
        inst.q = 1;
        inst.gamma = 2;
        assert_eq!(max_route_nodes(&inst), 4);
        let mut p = MasterState::zeros(4);
        p.set_r(0, 1, 1.0);
        p.set_r(1, 2, 1.0);
        p.set_r(2, 3, 1.0);
        p.set_r(3, 0, 1.0);
        let cuts = separate_cardinality(&inst, &p, &[vec![0, 1, 2, 3]]);
        assert_eq!(cuts.len(), 1);
        assert!((cuts[0].violation - 1.0).abs() < 1e-9);
        // sets with no internal mass are never violated
        let none = separate_cardinality(&inst, &MasterState::zeros(4), &[vec![0, 1]]);
        assert!(none.is_empty());
    }

    #[test]
    fn degree_cut_on_fractional_hub_cycle() {
        // one full r-cycle, z_ii = 0.2 on all five nodes with allocation
        // rows summing to one; with at most U = 3 nodes per route the
        // fractional hub mass 1.0 cannot cover five nodes
        let mut inst = unit_instance(5);
        inst.q = 2;
        inst.gamma = 2;
        assert_eq!(max_route_nodes(&inst), 3);
        let mut p = MasterState::zeros(5);
        for i in 0..5 {
            for j in 0..5 {
                p.set_z(i, j, 0.2);
            }
            p.set_r(i, (i + 1) % 5, 1.0);
        }
        let cuts = separate_degree(&inst, &p);
        assert!(!cuts.is_empty());
        for c in &cuts {
            assert!((c.violation_at(&p) - c.violation).abs() < 1e-9);
        }
    }

    #[test]
    fn arc_allocation_closed_form_dominates() {
        // r_01 = 1 with endpoints allocated to hubs 2 and 3
        let inst = unit_instance(4);
        let mut p = MasterState::zeros(4);
        p.set_r(0, 1, 1.0);
        p.set_z(0, 2, 1.0);
        p.set_z(1, 3, 1.0);
        let cuts = separate_arc_allocation(&inst, &p);
        assert!(!cuts.is_empty());
        let best = cuts.iter().map(|c| c.violation).fold(0.0, f64::max);
        assert!((best - 1.0).abs() < 1e-9);

        let set = p7_closed_form_set(4, &p, 0, 1);
        let closed_viol = cut_p7(4, 0, 1, &set).violation_at(&p);
        for mask in 0..4u32 {
            let mut s = vec![0];
            for (bit, v) in [2usize, 3].iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    s.push(*v);
                }
            }
            let alt = cut_p7(4, 0, 1, &s);
            assert!(alt.violation_at(&p) <= closed_viol + 1e-12);
        }
    }

    #[test]
    fn clique_pair_example() {
        let inst = unit_instance(4);
        let mut p = MasterState::zeros(4);
        p.set_r(0, 1, 0.8);
        p.set_r(1, 0, 0.8);
        let cuts = separate_clique(&inst, &p);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].witness, vec![0, 1]);
        assert!((cuts[0].violation - 0.6).abs() < 1e-9);
    }

    #[test]
    fn two_matching_fractional_configuration() {
        // handle {0,1,2} with half-arcs inside and three unit teeth:
        // lhs 1.5 + 3 = 4.5 > 3 + 1 = 4
        let inst = unit_instance(6);
        let mut p = MasterState::zeros(6);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            p.set_r(a, b, 0.5);
        }
        p.set_r(0, 3, 1.0);
        p.set_r(1, 4, 1.0);
        p.set_r(2, 5, 1.0);
        let cuts = separate_two_matching(&inst, &p);
        assert!(!cuts.is_empty());
        let best = cuts.iter().map(|c| c.violation).fold(0.0, f64::max);
        assert!(best >= 0.5 - 1e-9, "violation {best}");
        for c in &cuts {
            assert!(c.witness_teeth.len() >= 3 && c.witness_teeth.len() % 2 == 1);
        }
    }

    #[test]
    fn integral_cycles_satisfy_two_matching() {
        let (inst, enc) = feasible_encoding();
        assert!(separate_two_matching(&inst, &enc).is_empty());
        assert!(separate_clique(&inst, &enc).is_empty());
    }
}
