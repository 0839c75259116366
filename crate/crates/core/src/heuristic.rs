//! Greedy construction plus relocate/reorder local search.
//!
//! Construction sorts nodes by total volume `O_i + D_i` (descending, ties
//! by index), opens the first `l` as hubs and deals the rest round-robin
//! onto the routes in sorted order, skipping a hub when the partial
//! capacity check fails. The local search is best-improvement steepest
//! descent over two neighborhoods — relocating a spoke to any position of
//! any route and reordering a spoke within its own route — accepting only
//! capacity-feasible improving moves, and stops after `|V|` consecutive
//! non-improving iterations. This is deliberately an inexpensive greedy
//! procedure, not a metaheuristic; its job is a decent warm start.

use crate::instance::ProblemInstance;
use crate::solution::{is_capacity_feasible, EvalContext, HubRouteSolution};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no capacity-respecting construction found for l = {0}")]
    NoFit(usize),
    #[error("heuristic failed for every hub count in [{0}, {1}]")]
    AllInfeasible(usize, usize),
}

#[derive(Debug, Clone)]
pub struct HeuristicRun {
    pub solution: HubRouteSolution,
    pub objective: f64,
    pub hub_count: usize,
    pub seconds: f64,
}

/// Nodes sorted by total volume, descending, ties by ascending index.
pub fn volume_order(inst: &ProblemInstance) -> Vec<usize> {
    let agg = inst.aggregates();
    let mut order: Vec<usize> = (0..inst.n).collect();
    order.sort_by(|&a, &b| {
        let va = agg.outbound[a] + agg.inbound[a];
        let vb = agg.outbound[b] + agg.inbound[b];
        vb.partial_cmp(&va).unwrap().then(a.cmp(&b))
    });
    order
}

/// Loads on the out-arcs of a partially assigned structure (flows among
/// hubs and already-assigned spokes only).
fn partial_loads(inst: &ProblemInstance, hubs: &[usize], routes: &[Vec<usize>]) -> Vec<f64> {
    let n = inst.n;
    let mut cluster_of = vec![usize::MAX; n];
    let mut position = vec![usize::MAX; n];
    for (ci, &h) in hubs.iter().enumerate() {
        cluster_of[h] = ci;
        position[h] = 0;
        for (pi, &v) in routes[ci].iter().enumerate() {
            cluster_of[v] = ci;
            position[v] = pi + 1;
        }
    }
    let mut load = vec![0.0; n];
    let members: Vec<usize> = (0..n).filter(|&v| cluster_of[v] != usize::MAX).collect();
    for &i in &members {
        for &j in &members {
            if i == j || inst.w[i][j] == 0.0 {
                continue;
            }
            let (ci, cj) = (cluster_of[i], cluster_of[j]);
            // forward arcs i -> hub on i's cycle, then hub -> j on j's;
            // same-cluster pairs ride forward from i to j
            let seq_i: &Vec<usize> = &routes[ci];
            let len_i = seq_i.len() + 1;
            let walk = |from: usize, to: usize, seq: &Vec<usize>, hub: usize, load: &mut Vec<f64>| {
                let at = |p: usize| if p == 0 { hub } else { seq[p - 1] };
                let mut pos = position[from];
                let target = position[to];
                let len = seq.len() + 1;
                while pos != target {
                    load[at(pos)] += inst.w[i][j];
                    pos = (pos + 1) % len;
                }
            };
            if ci == cj {
                walk(i, j, seq_i, hubs[ci], &mut load);
            } else {
                walk(i, hubs[ci], seq_i, hubs[ci], &mut load);
                walk(hubs[cj], j, &routes[cj], hubs[cj], &mut load);
            }
            let _ = len_i;
        }
    }
    load
}

/// Build the initial solution for a fixed hub count `l`.
pub fn construct_initial(
    inst: &ProblemInstance,
    l: usize,
) -> Result<HubRouteSolution, HeuristicError> {
    if l < inst.q || l > inst.p {
        return Err(HeuristicError::Params(format!("l = {l} outside [{}, {}]", inst.q, inst.p)));
    }
    let order = volume_order(inst);
    let hubs: Vec<usize> = order[..l].to_vec();
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); l];
    for (idx, &v) in order[l..].iter().enumerate() {
        let base = idx % l;
        let mut placed = false;
        for off in 0..l {
            let target = (base + off) % l;
            routes[target].push(v);
            let loads = partial_loads(inst, &hubs, &routes);
            if loads.iter().all(|&x| x <= inst.capacity + 1e-9) {
                placed = true;
                break;
            }
            routes[target].pop();
        }
        if !placed {
            return Err(HeuristicError::NoFit(l));
        }
    }
    let mut alloc = vec![usize::MAX; inst.n];
    for (ci, &h) in hubs.iter().enumerate() {
        alloc[h] = h;
        for &v in &routes[ci] {
            alloc[v] = h;
        }
    }
    let sol = HubRouteSolution {
        hubs: {
            let mut hs = hubs.clone();
            hs.sort_unstable();
            hs
        },
        alloc,
        routes: hubs
            .iter()
            .zip(routes)
            .map(|(&h, r)| (h, r))
            .collect::<BTreeMap<_, _>>(),
    };
    if sol.validate(inst).is_err() || !is_capacity_feasible(inst, &sol) {
        return Err(HeuristicError::NoFit(l));
    }
    Ok(sol)
}

/// All capacity-feasible structural neighbors of a solution under the
/// relocate and reorder moves, scanned in a fixed order.
fn neighbors(inst: &ProblemInstance, sol: &HubRouteSolution) -> Vec<HubRouteSolution> {
    let mut out = Vec::new();
    let spokes: Vec<usize> =
        (0..inst.n).filter(|&v| sol.alloc[v] != v).collect();
    for &s in &spokes {
        let home = sol.alloc[s];
        for (&target, route) in &sol.routes {
            let positions = if target == home { route.len() } else { route.len() + 1 };
            for pos in 0..positions {
                if target == home {
                    // reorder within the own route
                    let idx = route.iter().position(|&v| v == s).unwrap();
                    let mut new_route = route.clone();
                    new_route.remove(idx);
                    let pos = if pos >= idx { pos + 1 } else { pos };
                    if pos > new_route.len() || pos == idx {
                        continue;
                    }
                    new_route.insert(pos.min(new_route.len()), s);
                    if new_route == *route {
                        continue;
                    }
                    let mut cand = sol.clone();
                    cand.routes.insert(target, new_route);
                    out.push(cand);
                } else {
                    // relocate; the donor route must keep gamma - 1 spokes
                    if sol.routes[&home].len() <= inst.gamma - 1 {
                        continue;
                    }
                    let mut cand = sol.clone();
                    let donor = cand.routes.get_mut(&home).unwrap();
                    donor.retain(|&v| v != s);
                    let recv = cand.routes.get_mut(&target).unwrap();
                    recv.insert(pos, s);
                    cand.alloc[s] = target;
                    out.push(cand);
                }
            }
        }
    }
    out
}

/// Best-improvement descent; the returned objective never exceeds the
/// start's.
pub fn local_search(inst: &ProblemInstance, start: &HubRouteSolution) -> HubRouteSolution {
    let mut current = start.clone();
    let mut current_obj = EvalContext::new(inst, &current).objective();
    let mut stall = 0usize;
    while stall < inst.n {
        let mut best: Option<(f64, HubRouteSolution)> = None;
        for cand in neighbors(inst, &current) {
            if !is_capacity_feasible(inst, &cand) {
                continue;
            }
            let obj = EvalContext::new(inst, &cand).objective();
            if obj < current_obj - 1e-9 {
                match &best {
                    Some((b, _)) if *b <= obj => {}
                    _ => best = Some((obj, cand)),
                }
            }
        }
        match best {
            Some((obj, cand)) => {
                current = cand;
                current_obj = obj;
                stall = 0;
            }
            None => stall += 1,
        }
    }
    current
}

/// Construct and improve for every hub count in `[q, p]`, returning the
/// best feasible result (ties broken toward fewer hubs).
pub fn run(inst: &ProblemInstance) -> Result<HeuristicRun, HeuristicError> {
    let started = Instant::now();
    let mut best: Option<HeuristicRun> = None;
    for l in inst.q..=inst.p.min(inst.n / inst.gamma.max(1)) {
        let start = match construct_initial(inst, l) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let improved = local_search(inst, &start);
        let obj = EvalContext::new(inst, &improved).objective();
        let better = match &best {
            Some(b) => obj < b.objective - 1e-9,
            None => true,
        };
        if better {
            best = Some(HeuristicRun {
                solution: improved,
                objective: obj,
                hub_count: l,
                seconds: 0.0,
            });
        }
    }
    match best {
        Some(mut run) => {
            run.seconds = started.elapsed().as_secs_f64();
            Ok(run)
        }
        None => Err(HeuristicError::AllInfeasible(inst.q, inst.p)),
    }
}
