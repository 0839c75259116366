//! Brute-force ground truth for small instances, plus exhaustive
//! separation of the valid-inequality families for testing the flow-based
//! oracles.
//!
//! The enumerator walks every hub set of size `q..=p`, every allocation
//! meeting the cardinality floor, and every route order per cluster
//! (rotations are fixed by anchoring the cycle at the hub; reversals are
//! kept — they differ under capacity and asymmetric travel times).
//! Clarity over speed: the only pruning is a cluster-size feasibility
//! check during allocation and the capacity filter per structure.

use crate::cuts::{self, CutDescription, CutFamily};
use crate::instance::ProblemInstance;
use crate::solution::{is_capacity_feasible, EvalContext, HubRouteSolution, MasterState};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("size guard exceeded: {0}")]
    Guard(String),
}

#[derive(Debug, Clone)]
pub enum BruteForceOutcome {
    Optimal { solution: HubRouteSolution, objective: f64 },
    Infeasible,
}

/// Enumerate all solutions; `n <= 9` unless callers opt into 10 via
/// [`brute_force_with_limit`].
pub fn brute_force(inst: &ProblemInstance) -> Result<BruteForceOutcome, OracleError> {
    brute_force_with_limit(inst, 9)
}

pub fn brute_force_with_limit(
    inst: &ProblemInstance,
    max_n: usize,
) -> Result<BruteForceOutcome, OracleError> {
    if inst.n > max_n.min(10) {
        return Err(OracleError::Guard(format!(
            "brute force limited to n <= {} (got {})",
            max_n.min(10),
            inst.n
        )));
    }
    let n = inst.n;
    let mut best: Option<(f64, HubRouteSolution)> = None;

    let mut hubs = Vec::new();
    for h in inst.q..=inst.p.min(n) {
        enumerate_hub_sets(n, h, 0, &mut hubs, &mut |hub_set| {
            enumerate_allocations(inst, hub_set, &mut |alloc| {
                enumerate_routes(inst, hub_set, alloc, &mut |sol| {
                    if !is_capacity_feasible(inst, sol) {
                        return;
                    }
                    let obj = EvalContext::new(inst, sol).objective();
                    match &best {
                        Some((b, bs)) => {
                            if obj < b - 1e-9 || (obj <= b + 1e-9 && lex_key(sol) < lex_key(bs)) {
                                let b = (*b).min(obj);
                                best = Some((b, sol.clone()));
                            }
                        }
                        None => best = Some((obj, sol.clone())),
                    }
                });
            });
        });
    }

    Ok(match best {
        Some((objective, solution)) => BruteForceOutcome::Optimal { solution, objective },
        None => BruteForceOutcome::Infeasible,
    })
}

fn lex_key(sol: &HubRouteSolution) -> (Vec<usize>, Vec<usize>, Vec<Vec<usize>>) {
    (
        sol.hubs.clone(),
        sol.alloc.clone(),
        sol.routes.values().cloned().collect(),
    )
}

fn enumerate_hub_sets(
    n: usize,
    size: usize,
    from: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == size {
        visit(current);
        return;
    }
    let remaining = size - current.len();
    for v in from..n {
        if n - v < remaining {
            break;
        }
        current.push(v);
        enumerate_hub_sets(n, size, v + 1, current, visit);
        current.pop();
    }
}

fn enumerate_allocations(
    inst: &ProblemInstance,
    hubs: &[usize],
    visit: &mut impl FnMut(&[usize]),
) {
    let n = inst.n;
    let need = inst.gamma - 1; // spokes per hub, at minimum
    let spokes: Vec<usize> = (0..n).filter(|v| !hubs.contains(v)).collect();
    let mut alloc = vec![usize::MAX; n];
    for &h in hubs {
        alloc[h] = h;
    }
    let mut counts = vec![0usize; hubs.len()];
    fn rec(
        idx: usize,
        spokes: &[usize],
        hubs: &[usize],
        need: usize,
        alloc: &mut Vec<usize>,
        counts: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if idx == spokes.len() {
            if counts.iter().all(|&c| c >= need) {
                visit(alloc);
            }
            return;
        }
        // prune: the remaining spokes must be able to fill every deficit
        let deficit: usize = counts.iter().map(|&c| need.saturating_sub(c)).sum();
        if deficit > spokes.len() - idx {
            return;
        }
        for (hi, &h) in hubs.iter().enumerate() {
            alloc[spokes[idx]] = h;
            counts[hi] += 1;
            rec(idx + 1, spokes, hubs, need, alloc, counts, visit);
            counts[hi] -= 1;
        }
        alloc[spokes[idx]] = usize::MAX;
    }
    rec(0, &spokes, hubs, need, &mut alloc, &mut counts, visit);
}

fn enumerate_routes(
    inst: &ProblemInstance,
    hubs: &[usize],
    alloc: &[usize],
    visit: &mut impl FnMut(&HubRouteSolution),
) {
    let clusters: Vec<Vec<usize>> = hubs
        .iter()
        .map(|&h| (0..inst.n).filter(|&v| v != h && alloc[v] == h).collect())
        .collect();
    let mut orders: Vec<Vec<usize>> = clusters.iter().map(|c| c.clone()).collect();
    fn rec(
        level: usize,
        hubs: &[usize],
        clusters: &[Vec<usize>],
        orders: &mut Vec<Vec<usize>>,
        alloc: &[usize],
        visit: &mut impl FnMut(&HubRouteSolution),
    ) {
        if level == clusters.len() {
            let sol = HubRouteSolution {
                hubs: hubs.to_vec(),
                alloc: alloc.to_vec(),
                routes: hubs
                    .iter()
                    .zip(orders.iter())
                    .map(|(&h, o)| (h, o.clone()))
                    .collect::<BTreeMap<_, _>>(),
            };
            visit(&sol);
            return;
        }
        let items = clusters[level].clone();
        permute(items, &mut |perm| {
            orders[level] = perm.to_vec();
            rec(level + 1, hubs, clusters, orders, alloc, visit);
        });
    }
    rec(0, hubs, &clusters, &mut orders, alloc, visit);
}

/// Visit all permutations in lexicographic order.
fn permute(items: Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    fn rec(current: &mut Vec<usize>, rest: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if rest.is_empty() {
            visit(current);
            return;
        }
        for idx in 0..rest.len() {
            let v = rest.remove(idx);
            current.push(v);
            rec(current, rest, visit);
            current.pop();
            rest.insert(idx, v);
        }
    }
    let mut rest = items;
    rest.sort_unstable();
    rec(&mut Vec::new(), &mut rest, visit);
}

/// Count of distinct structures the enumerator visits (before the
/// capacity filter); used by tests.
pub fn enumeration_count(inst: &ProblemInstance) -> Result<usize, OracleError> {
    if inst.n > 10 {
        return Err(OracleError::Guard("count limited to n <= 10".into()));
    }
    let mut count = 0usize;
    let mut hubs = Vec::new();
    for h in inst.q..=inst.p.min(inst.n) {
        enumerate_hub_sets(inst.n, h, 0, &mut hubs, &mut |hub_set| {
            enumerate_allocations(inst, hub_set, &mut |alloc| {
                enumerate_routes(inst, hub_set, alloc, &mut |_| count += 1);
            });
        });
    }
    Ok(count)
}

/// Exhaustively search one family for its most violated inequality at a
/// point (n <= 8). Returns the best cut and its violation, if any exceeds
/// the separation tolerance.
pub fn exhaustive_separation(
    inst: &ProblemInstance,
    point: &MasterState,
    family: CutFamily,
) -> Result<Option<CutDescription>, OracleError> {
    let n = inst.n;
    if n > 8 {
        return Err(OracleError::Guard(format!("exhaustive separation limited to n <= 8, got {n}")));
    }
    let u = cuts::max_route_nodes(inst);
    let mut best: Option<CutDescription> = None;
    let mut consider = |cut: CutDescription| {
        let v = cut.violation_at(point);
        if v > cuts::SEPARATION_TOL {
            let mut cut = cut;
            cut.violation = v;
            match &best {
                Some(b) if b.violation >= v => {}
                _ => best = Some(cut),
            }
        }
    };

    let subsets = |proper: bool| {
        let top = 1u32 << n;
        (1..top).filter_map(move |mask| {
            let set: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            if proper && set.len() == n {
                None
            } else {
                Some(set)
            }
        })
    };

    match family {
        CutFamily::P1Out | CutFamily::P1In => {
            let outgoing = family == CutFamily::P1Out;
            for set in subsets(true) {
                for &i in &set {
                    consider(cuts::cut_p1(n, i, &set, outgoing));
                }
            }
        }
        CutFamily::P2Out | CutFamily::P2In => {
            let outgoing = family == CutFamily::P2Out;
            for set in subsets(true) {
                for &i in &set {
                    for ip in 0..n {
                        if !set.contains(&ip) {
                            consider(cuts::cut_p2(n, i, ip, &set, outgoing));
                        }
                    }
                }
            }
        }
        CutFamily::P4Card => {
            for set in subsets(false) {
                consider(cuts::cut_p4(n, &set, u));
            }
        }
        CutFamily::P6Degree => {
            for set in subsets(false) {
                consider(cuts::cut_p6(n, &set, u, true));
                consider(cuts::cut_p6(n, &set, u, false));
            }
        }
        CutFamily::P7ArcAlloc => {
            for set in subsets(true) {
                for &i in &set {
                    for ip in 0..n {
                        if !set.contains(&ip) {
                            consider(cuts::cut_p7(n, i, ip, &set));
                        }
                    }
                }
            }
        }
        CutFamily::P10Clique => {
            for set in subsets(false) {
                if set.len() < 2 {
                    continue;
                }
                for &i in &set {
                    let others: Vec<usize> = set.iter().copied().filter(|&j| j != i).collect();
                    consider(cuts::cut_p10(i, &others));
                }
            }
        }
        CutFamily::P11TwoMatch => {
            for set in subsets(true) {
                if set.len() < 2 {
                    continue;
                }
                // candidate teeth: boundary edges with positive mass
                let mut boundary: Vec<(usize, usize)> = Vec::new();
                for a in 0..n {
                    for b in (a + 1)..n {
                        let cross = set.contains(&a) != set.contains(&b);
                        if cross && point.r(a, b) + point.r(b, a) > 1e-9 {
                            boundary.push((a, b));
                        }
                    }
                }
                if boundary.len() > 16 {
                    continue;
                }
                for mask in 1u32..(1 << boundary.len()) {
                    let teeth: Vec<(usize, usize)> = boundary
                        .iter()
                        .enumerate()
                        .filter(|(idx, _)| mask & (1 << idx) != 0)
                        .map(|(_, &e)| e)
                        .collect();
                    if teeth.len() < 3 || teeth.len() % 2 == 0 {
                        continue;
                    }
                    let mut used = vec![false; n];
                    let mut disjoint = true;
                    for &(a, b) in &teeth {
                        if used[a] || used[b] {
                            disjoint = false;
                            break;
                        }
                        used[a] = true;
                        used[b] = true;
                    }
                    if disjoint {
                        consider(cuts::cut_p11(n, &set, &teeth));
                    }
                }
            }
        }
        CutFamily::Static => {
            for cut in cuts::arc_allocation_consistency_rows(inst, Some(point)) {
                consider(cut);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate;
    use crate::solution::{evaluate, reverse_routes};

    #[test]
    fn enumeration_count_matches_combinatorics() {
        // n = 9, q = p = 3, gamma = 3: C(9,3) hub sets, 6 spokes into three
        // labeled pairs (90 ways), 2 orders each.
        let inst = generate(1, 9, 3, 0.9).unwrap();
        let count = enumeration_count(&inst).unwrap();
        assert_eq!(count, 84 * 90 * 8);
    }

    #[test]
    fn zero_capacity_with_flow_is_infeasible() {
        let mut inst = generate(2, 9, 3, 0.9).unwrap();
        inst.capacity = 0.0;
        match brute_force(&inst).unwrap() {
            BruteForceOutcome::Infeasible => {}
            BruteForceOutcome::Optimal { .. } => panic!("expected infeasible"),
        }
    }

    #[test]
    fn guard_rejects_large_instances() {
        let inst = generate(3, 12, 4, 0.9).unwrap();
        assert!(brute_force(&inst).is_err());
    }

    #[test]
    fn optimum_invariant_under_route_reversal_when_uncapacitated() {
        let mut inst = generate(4, 9, 3, 0.9).unwrap();
        inst.capacity = 1e9; // capacity never binds
        let (sol, obj) = match brute_force(&inst).unwrap() {
            BruteForceOutcome::Optimal { solution, objective } => (solution, objective),
            _ => panic!("feasible"),
        };
        for mask in 0..(1u32 << sol.hubs.len()) {
            let pi: Vec<bool> = (0..sol.hubs.len()).map(|b| mask & (1 << b) != 0).collect();
            let rev = reverse_routes(&sol, &pi).unwrap();
            let val = evaluate(&inst, &rev).unwrap();
            assert!((val - obj).abs() < 1e-9);
        }
    }

    #[test]
    fn optimum_invariant_under_node_relabeling() {
        let mut inst = generate(5, 9, 3, 0.9).unwrap();
        inst.capacity *= 10.0;
        let obj = match brute_force(&inst).unwrap() {
            BruteForceOutcome::Optimal { objective, .. } => objective,
            _ => panic!("feasible"),
        };
        // shuffle labels with a fixed permutation
        let perm: Vec<usize> = vec![3, 1, 4, 0, 8, 2, 7, 5, 6];
        let mut shuffled = inst.clone();
        for i in 0..9 {
            shuffled.phi[perm[i]] = inst.phi[i];
            for j in 0..9 {
                shuffled.t[perm[i]][perm[j]] = inst.t[i][j];
                shuffled.w[perm[i]][perm[j]] = inst.w[i][j];
            }
        }
        let obj2 = match brute_force(&shuffled).unwrap() {
            BruteForceOutcome::Optimal { objective, .. } => objective,
            _ => panic!("feasible"),
        };
        assert!((obj - obj2).abs() < 1e-6);
    }

    fn small8() -> ProblemInstance {
        let mut inst = generate(6, 10, 3, 0.9).unwrap();
        inst.n = 8;
        inst.q = 2;
        inst.p = 2;
        inst.gamma = 2;
        inst.phi.truncate(8);
        inst.t.truncate(8);
        inst.w.truncate(8);
        for row in inst.t.iter_mut().chain(inst.w.iter_mut()) {
            row.truncate(8);
        }
        assert!(inst.validate().is_empty());
        inst
    }

    #[test]
    fn exhaustive_beats_or_matches_flow_oracle() {
        // any point where the flow oracle emits a cut must also show up in
        // enumeration with at least that violation
        let inst = small8();
        let mut p = MasterState::zeros(8);
        for i in 0..8 {
            for j in 0..8 {
                p.set_z(i, j, if i == j { 0.3 } else { 0.1 });
            }
            p.set_r(i, (i + 1) % 8, 0.7);
            p.set_r((i + 1) % 8, i, 0.2);
        }
        let emitted = cuts::separate_allocation(&inst, &p);
        let best_out = exhaustive_separation(&inst, &p, CutFamily::P1Out).unwrap();
        let best_in = exhaustive_separation(&inst, &p, CutFamily::P1In).unwrap();
        for c in &emitted {
            let best = match c.family {
                CutFamily::P1Out => &best_out,
                CutFamily::P1In => &best_in,
                _ => unreachable!(),
            };
            let exh = best.as_ref().expect("exhaustive must find something too");
            assert!(exh.violation >= c.violation - 1e-9);
        }
    }

    #[test]
    fn integral_feasible_points_pass_every_family() {
        let inst = small8();
        let sol = HubRouteSolution {
            hubs: vec![0, 1],
            alloc: vec![0, 1, 0, 1, 0, 1, 0, 1],
            routes: BTreeMap::from([(0, vec![2, 4, 6]), (1, vec![3, 5, 7])]),
        };
        sol.validate(&inst).unwrap();
        let enc = sol.encode(&inst);
        for family in CutFamily::all_dynamic() {
            let found = exhaustive_separation(&inst, &enc, family).unwrap();
            assert!(found.is_none(), "family {:?} violated at a feasible point", family);
        }
    }
}
