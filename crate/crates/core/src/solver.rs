//! The exact solve driver: branch-and-cut over the Benders master with
//! valid-inequality separation.
//!
//! One node iteration solves the master LP (rows activated lazily), runs
//! the polyhedral separation families, and only when none fires hands the
//! point to the Benders machinery: integral points are either accepted as
//! incumbents, strengthened with (optionally Magnanti-Wong) optimality
//! cuts, or killed by a feasibility cut; fractional points receive
//! capacity-relaxed Benders cuts when the node gap is still wide.
//! Branching prefers hub variables, then allocations, then route arcs,
//! with an occasional set-branching step on a near-unit support-graph
//! cut. All cuts are global; bound fixings are global at the root and
//! node-local elsewhere.

use crate::benders::{
    self, build_cut, build_master, choose_form, decode_solution, solve_subproblem, BendersCut,
    CutScope, MasterModel, SubproblemOutcome,
};
use crate::cuts::{self, CutDescription, CutFamily};
use crate::heuristic;
use crate::instance::ProblemInstance;
use crate::lp::{self, Basis, LpStatus, RowSense, SimplexOptions};
use crate::maxflow::max_flow;
use crate::solution::{
    evaluate, incumbent_relinking, is_capacity_feasible, pseudo_average, reverse_routes,
    uniform_interior, HubRouteSolution, MasterState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("solver failure: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeSelection {
    BestBound,
    BreadthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorePointKind {
    PseudoAverage,
    Uniform,
    IncumbentRelinking,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub time_limit: f64,
    pub gap_tol: f64,
    /// Fractional Benders cuts are attempted only while the node gap
    /// exceeds this threshold.
    pub frac_benders_gap: f64,
    pub node_selection: NodeSelection,
    pub seed: u64,
    /// Cap on polyhedral separation rounds per node.
    pub separation_rounds: usize,
    pub magnanti_wong: bool,
    pub core_point: CorePointKind,
    /// Record every generated cut for auditing.
    #[serde(default)]
    pub collect_cuts: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: 600.0,
            gap_tol: 0.005,
            frac_benders_gap: 0.10,
            node_selection: NodeSelection::BestBound,
            seed: 0,
            separation_rounds: 20,
            magnanti_wong: true,
            core_point: CorePointKind::PseudoAverage,
            collect_cuts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    OptimalTol,
    TimeLimit,
    Infeasible,
}

/// A cut recorded for auditing.
#[derive(Debug, Clone)]
pub enum AuditedCut {
    Polyhedral(CutDescription),
    Benders(BendersCut),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeLogEntry {
    pub node: usize,
    pub bound: f64,
    pub incumbent: Option<f64>,
    pub cuts_added: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub instance: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
    pub family_cuts: BTreeMap<String, usize>,
    pub heuristic_objective: Option<f64>,
    pub heuristic_seconds: f64,
    pub root_seconds: f64,
    pub total_seconds: f64,
    pub solution: Option<HubRouteSolution>,
    #[serde(skip)]
    pub audited_cuts: Vec<AuditedCut>,
    #[serde(skip)]
    pub node_log: Vec<NodeLogEntry>,
}

impl SolveResult {
    fn gap_of(objective: Option<f64>, bound: f64) -> f64 {
        match objective {
            Some(obj) if obj.abs() > 1e-12 => ((obj - bound) / obj).max(0.0),
            Some(_) => 0.0,
            None => f64::INFINITY,
        }
    }
}

/// Per-commodity estimate bounds: from below the direct discounted hub
/// edge; from above the sum of the `m` most expensive arcs plus one
/// discounted hub edge and the two largest transshipment times. The
/// literal arc count `n - (p-2) q - 2` is widened to cover the longest
/// possible two-cluster walk, which the audit requires.
pub fn eta_bounds(inst: &ProblemInstance) -> (Vec<f64>, Vec<f64>) {
    let n = inst.n;
    let mut lower = vec![0.0; n * n];
    let mut upper = vec![0.0; n * n];
    let m_paper = n as i64 - (inst.p as i64 - 2) * inst.q as i64 - 2;
    let biggest_cluster = cuts::max_route_nodes(inst);
    let m_safe = 2 * (biggest_cluster.saturating_sub(1)) as i64;
    let m = m_paper.max(m_safe).max(1) as usize;

    let mut times: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                times.push(inst.t[i][j]);
            }
        }
    }
    times.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let expensive: f64 = times.iter().take(m).sum();
    let t_max = times.first().copied().unwrap_or(0.0);
    let mut phis = inst.phi.clone();
    phis.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let phi_two: f64 = phis.iter().take(2).sum();
    let cap = expensive + inst.alpha * t_max + phi_two;

    for (i, j) in inst.commodities() {
        lower[i * n + j] = inst.alpha * inst.t[i][j];
        upper[i * n + j] = cap.max(lower[i * n + j]);
    }
    (lower, upper)
}

#[derive(Debug, Clone)]
pub enum BranchDecision {
    /// Fix one master column down/up.
    Variable(usize),
    /// Dichotomy on a set of route arcs: none of them vs at least one.
    ArcSet(Vec<(usize, usize)>),
}

/// Pick the branching object: most fractional `z_kk`, then `z_ik`, then
/// `r_ij`; when `scan_support` is set, a near-unit min-cut in the route
/// support graph takes precedence as a set branch.
pub fn branch_select(
    inst: &ProblemInstance,
    point: &MasterState,
    scan_support: bool,
) -> Option<BranchDecision> {
    let n = inst.n;
    let frac = |v: f64| v.min(1.0 - v);
    if scan_support {
        if let Some(arcs) = support_cut_candidate(inst, point) {
            return Some(BranchDecision::ArcSet(arcs));
        }
    }
    let layout = crate::solution::MasterLayout::new(n);
    let mut pick = |candidates: Vec<(usize, f64)>| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (col, v) in candidates {
            let f = frac(v);
            if f > 1e-6 {
                match best {
                    Some((bf, _)) if bf >= f => {}
                    _ => best = Some((f, col)),
                }
            }
        }
        best.map(|(_, c)| c)
    };
    let diag: Vec<(usize, f64)> = (0..n).map(|k| (layout.col_z(k, k), point.z(k, k))).collect();
    if let Some(c) = pick(diag) {
        return Some(BranchDecision::Variable(c));
    }
    let mut alloc = Vec::new();
    for i in 0..n {
        for k in 0..n {
            if i != k {
                alloc.push((layout.col_z(i, k), point.z(i, k)));
            }
        }
    }
    if let Some(c) = pick(alloc) {
        return Some(BranchDecision::Variable(c));
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                arcs.push((layout.col_r(i, j), point.r(i, j)));
            }
        }
    }
    pick(arcs).map(BranchDecision::Variable)
}

/// Scan all node pairs of the route support graph for a fractional cut of
/// size in [1 - 0.05, 1); its crossing arcs are the set-branching
/// candidate.
fn support_cut_candidate(inst: &ProblemInstance, point: &MasterState) -> Option<Vec<(usize, usize)>> {
    let n = inst.n;
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && point.r(i, j) > 1e-9 {
                arcs.push((i, j, point.r(i, j)));
            }
        }
    }
    for s in 0..n {
        for t in (s + 1)..n {
            for (a, b) in [(s, t), (t, s)] {
                let flow = match max_flow(n, &arcs, a, b) {
                    Ok(f) => f,
                    Err(_) => continue,
                };
                if flow.value >= 1.0 - 0.05 && flow.value < 1.0 - 1e-6 {
                    let crossing: Vec<(usize, usize)> = arcs
                        .iter()
                        .filter(|&&(x, y, _)| flow.source_side[x] && !flow.source_side[y])
                        .map(|&(x, y, _)| (x, y))
                        .collect();
                    if !crossing.is_empty() {
                        return Some(crossing);
                    }
                }
            }
        }
    }
    None
}

/// Reduced-cost reasoning on the node LP: single fixings for nonbasic
/// binaries whose reduced cost alone exceeds the gap, and pair cover cuts
/// where two reduced costs only jointly exceed it.
pub struct ReductionOutcome {
    /// (column, fixed value)
    pub fixings: Vec<(usize, f64)>,
    /// Each cover is a set of (column, at_upper) whose members cannot all
    /// flip; emitted as `sum x <= |X| - 1` style rows.
    pub covers: Vec<Vec<(usize, bool)>>,
}

pub fn reduction_test(
    lp: &lp::LinearProgram,
    sol: &lp::LpSolution,
    upper_bound: f64,
    lower_bound: f64,
) -> ReductionOutcome {
    let gap = upper_bound - lower_bound;
    let mut fixings = Vec::new();
    let mut flippable: Vec<(usize, bool, f64)> = Vec::new();
    for j in 0..lp.num_cols() {
        if !lp.integer[j] || lp.lower[j] == lp.upper[j] {
            continue;
        }
        let rc = sol.reduced_costs[j];
        let x = sol.x[j];
        if x <= 1e-7 && rc > 0.0 {
            if rc > gap + 1e-9 {
                fixings.push((j, 0.0));
            } else if rc > 1e-9 {
                flippable.push((j, false, rc));
            }
        } else if x >= 1.0 - 1e-7 && rc < 0.0 {
            if -rc > gap + 1e-9 {
                fixings.push((j, 1.0));
            } else if -rc > 1e-9 {
                flippable.push((j, true, -rc));
            }
        }
    }
    // pair covers: flipping both would push the bound past the incumbent
    let mut covers = Vec::new();
    flippable.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    flippable.truncate(24);
    for a in 0..flippable.len() {
        for b in (a + 1)..flippable.len() {
            if flippable[a].2 + flippable[b].2 > gap + 1e-9 {
                covers.push(vec![
                    (flippable[a].0, flippable[a].1),
                    (flippable[b].0, flippable[b].1),
                ]);
            }
            if covers.len() >= 20 {
                break;
            }
        }
    }
    ReductionOutcome { fixings, covers }
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    /// (column, lower, upper) overrides.
    fixings: Vec<(usize, f64, f64)>,
    /// Local rows (set branching), applied transiently.
    local_rows: Vec<(Vec<(usize, f64)>, RowSense, f64)>,
    basis: Option<Basis>,
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    config: &'a SolveConfig,
    master: MasterModel,
    opts: SimplexOptions,
    rng: ChaCha8Rng,
    incumbent: Option<HubRouteSolution>,
    incumbent_value: f64,
    incumbent_states: Vec<MasterState>,
    optimality_cuts: usize,
    feasibility_cuts: usize,
    family_cuts: BTreeMap<String, usize>,
    audited: Vec<AuditedCut>,
    node_log: Vec<NodeLogEntry>,
    started: Instant,
    seed_rows: Vec<usize>,
}

impl<'a> Search<'a> {
    fn out_of_time(&self) -> bool {
        self.started.elapsed().as_secs_f64() > self.config.time_limit
    }

    fn note_polyhedral(&mut self, cut: &CutDescription) {
        *self.family_cuts.entry(cut.family.label().to_string()).or_insert(0) += 1;
        if self.config.collect_cuts {
            self.audited.push(AuditedCut::Polyhedral(cut.clone()));
        }
    }

    fn add_polyhedral(&mut self, cut: &CutDescription) {
        let (coeffs, sense, rhs) = cut.to_row(&self.master.layout);
        self.master.lp.add_row(coeffs, sense, rhs, cut.family.label());
        self.note_polyhedral(cut);
    }

    fn add_benders(&mut self, cut: &BendersCut) {
        let (coeffs, sense, rhs) = cut.to_row(&self.master.layout);
        self.master.lp.add_row(coeffs, sense, rhs, "benders");
        match cut.kind {
            benders::CutKind::Optimality => self.optimality_cuts += 1,
            benders::CutKind::Feasibility => self.feasibility_cuts += 1,
        }
        if self.config.collect_cuts {
            self.audited.push(AuditedCut::Benders(cut.clone()));
        }
    }

    /// Core point for the interior-point cut strengthening.
    fn core_point(&self, current: &MasterState) -> MasterState {
        match self.config.core_point {
            CorePointKind::Uniform => uniform_interior(self.inst.n, self.inst.p, self.inst.q),
            CorePointKind::PseudoAverage => match &self.incumbent {
                Some(inc) => {
                    let h = inc.hubs.len();
                    let masks = 1u32 << h.min(6);
                    let mut family = Vec::new();
                    for mask in 0..masks {
                        let pi: Vec<bool> = (0..h).map(|b| mask & (1 << b) != 0).collect();
                        if let Ok(rev) = reverse_routes(inc, &pi) {
                            family.push(rev);
                        }
                    }
                    let weights = vec![1.0; family.len()];
                    pseudo_average(self.inst, &family, &weights)
                        .unwrap_or_else(|_| uniform_interior(self.inst.n, self.inst.p, self.inst.q))
                }
                None => uniform_interior(self.inst.n, self.inst.p, self.inst.q),
            },
            CorePointKind::IncumbentRelinking => {
                incumbent_relinking(&self.incumbent_states, current, &self.master.lp)
                    .unwrap_or_else(|| uniform_interior(self.inst.n, self.inst.p, self.inst.q))
            }
        }
    }

    /// Add optimality cuts for all commodities whose estimate is short at
    /// the point; returns how many rows were added.
    fn add_optimality_cuts(
        &mut self,
        point: &MasterState,
        duals: &[benders::CommodityDual],
        capacity_duals: &[f64],
    ) -> usize {
        let violated: Vec<benders::CommodityDual> = duals
            .iter()
            .filter(|d| point.eta(d.commodity.0, d.commodity.1) < d.value - 1e-7)
            .cloned()
            .collect();
        if violated.is_empty() {
            return 0;
        }
        let strengthened: Vec<benders::CommodityDual> = if self.config.magnanti_wong {
            let core = self.core_point(point);
            violated
                .iter()
                .map(|d| benders::magnanti_wong_commodity(self.inst, &core, point, d, &self.opts))
                .collect()
        } else {
            violated
        };
        let cap_active = capacity_duals.iter().any(|&u| u.abs() > 1e-9);
        let mut added = 0;
        if cap_active {
            let form = choose_form(&mut self.rng);
            if let Ok(cuts) =
                build_cut(self.inst, &strengthened, capacity_duals, form, CutScope::Aggregated)
            {
                for cut in &cuts {
                    self.add_benders(cut);
                    added += 1;
                }
            }
        } else {
            for d in &strengthened {
                let form = choose_form(&mut self.rng);
                if let Ok(cuts) = build_cut(
                    self.inst,
                    std::slice::from_ref(d),
                    capacity_duals,
                    form,
                    CutScope::Commodity(d.commodity.0, d.commodity.1),
                ) {
                    for cut in &cuts {
                        self.add_benders(cut);
                        added += 1;
                    }
                }
            }
        }
        added
    }

    fn accept_incumbent(&mut self, sol: HubRouteSolution) -> Result<(), SolveError> {
        debug_assert!(sol.validate(self.inst).is_ok());
        debug_assert!(is_capacity_feasible(self.inst, &sol));
        let value = evaluate(self.inst, &sol)
            .map_err(|e| SolveError::Internal(format!("incumbent failed validation: {e}")))?;
        self.incumbent_states.push(sol.encode(self.inst));
        if value < self.incumbent_value - 1e-9 {
            self.incumbent_value = value;
            self.incumbent = Some(sol.clone());
        }
        // polishing accepted points is cheap and sharpens the pruning
        // bound early
        let polished = heuristic::local_search(self.inst, &sol);
        if polished != sol {
            let pvalue = evaluate(self.inst, &polished)
                .map_err(|e| SolveError::Internal(format!("polished incumbent invalid: {e}")))?;
            if is_capacity_feasible(self.inst, &polished) && pvalue < self.incumbent_value - 1e-9 {
                self.incumbent_states.push(polished.encode(self.inst));
                self.incumbent_value = pvalue;
                self.incumbent = Some(polished);
            }
        }
        Ok(())
    }

    /// Solve one node: LP, separation, Benders. Returns the node's final
    /// bound and the fractional point to branch on (None when the node is
    /// resolved: pruned, integral-accepted, or infeasible).
    fn process_node(&mut self, node: &Node) -> Result<(f64, Option<MasterState>, Option<Basis>), SolveError> {
        // apply node bounds
        let mut saved: Vec<(usize, f64, f64)> = Vec::new();
        for &(col, lo, hi) in &node.fixings {
            saved.push((col, self.master.lp.lower[col], self.master.lp.upper[col]));
            self.master.lp.lower[col] = lo;
            self.master.lp.upper[col] = hi;
        }
        let local_base = self.master.lp.num_rows();
        for (coeffs, sense, rhs) in &node.local_rows {
            self.master.lp.add_row(coeffs.clone(), *sense, *rhs, "branch");
        }

        let result = self.node_loop(node, local_base);

        // restore
        self.master.lp.rows.truncate(local_base);
        for (col, lo, hi) in saved.into_iter().rev() {
            self.master.lp.lower[col] = lo;
            self.master.lp.upper[col] = hi;
        }
        result
    }

    fn node_loop(
        &mut self,
        node: &Node,
        local_base: usize,
    ) -> Result<(f64, Option<MasterState>, Option<Basis>), SolveError> {
        let mut warm = node.basis.clone();
        // The seed covers the structural equalities plus this node's own
        // branching rows; cut rows come back through the warm basis when
        // tight and through the violation scan otherwise.
        let mut seed = self.seed_rows.clone();
        seed.extend(local_base..self.master.lp.num_rows());
        let mut poly_rounds = 0usize;
        let mut benders_rounds = 0usize;
        let mut bound = node.bound;
        loop {
            if self.out_of_time() {
                return Ok((bound, None, None));
            }
            let lsol = lp::solve_lazy(&self.master.lp, &self.opts, warm.as_ref(), &seed);
            match lsol.status {
                LpStatus::Infeasible => return Ok((f64::INFINITY, None, None)),
                LpStatus::Optimal => {}
                other => {
                    return Err(SolveError::Internal(format!("node LP ended with {other:?}")))
                }
            }
            bound = bound.max(lsol.objective);
            if self.incumbent.is_some() && bound >= self.incumbent_value - 1e-7 {
                return Ok((bound, None, None));
            }
            let point = self.master.layout.from_point(&lsol.x);

            // polyhedral families first
            if poly_rounds < self.config.separation_rounds {
                let found = cuts::separate_all(self.inst, &point);
                if !found.is_empty() {
                    poly_rounds += 1;
                    for cut in &found {
                        self.add_polyhedral(cut);
                    }
                    warm = Some(lsol.basis);
                    continue;
                }
            }

            // Benders separation
            if let Some(sol) = decode_solution(self.inst, &point) {
                benders_rounds += 1;
                if benders_rounds > 500 {
                    return Err(SolveError::Internal("benders loop did not settle".into()));
                }
                match solve_subproblem(self.inst, &point, &self.opts)
                    .map_err(|e| SolveError::Internal(e.to_string()))?
                {
                    SubproblemOutcome::Optimal { objective, commodities, capacity_duals, .. } => {
                        let eta_total: f64 =
                            self.inst.commodities().map(|(i, j)| point.eta(i, j)).sum();
                        self.accept_incumbent(sol)?;
                        if eta_total >= objective - 1e-6 {
                            // the point is truly feasible for the full
                            // problem: the node is resolved
                            return Ok((bound.max(lsol.objective), None, None));
                        }
                        let added = self.add_optimality_cuts(&point, &commodities, &capacity_duals);
                        if added == 0 {
                            return Ok((bound, None, None));
                        }
                        warm = Some(lsol.basis);
                        continue;
                    }
                    SubproblemOutcome::Infeasible { cut, .. } => {
                        self.add_benders(&cut);
                        warm = Some(lsol.basis);
                        continue;
                    }
                }
            }

            // fractional: optional Benders pricing while the gap is wide
            let node_gap = if self.incumbent.is_some() && self.incumbent_value.abs() > 1e-12 {
                (self.incumbent_value - lsol.objective) / self.incumbent_value
            } else {
                f64::INFINITY
            };
            if node_gap > self.config.frac_benders_gap
                && benders_rounds < self.config.separation_rounds
            {
                benders_rounds += 1;
                match solve_subproblem(self.inst, &point, &self.opts)
                    .map_err(|e| SolveError::Internal(e.to_string()))?
                {
                    SubproblemOutcome::Optimal { commodities, capacity_duals, .. } => {
                        let added = self.add_optimality_cuts(&point, &commodities, &capacity_duals);
                        if added > 0 {
                            warm = Some(lsol.basis);
                            continue;
                        }
                    }
                    SubproblemOutcome::Infeasible { cut, .. } => {
                        self.add_benders(&cut);
                        warm = Some(lsol.basis);
                        continue;
                    }
                }
            }

            return Ok((bound, Some(point), Some(lsol.basis)));
        }
    }
}

/// Full exact solve.
pub fn solve(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveResult, SolveError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(SolveError::Invalid(violations[0].to_string()));
    }
    let started = Instant::now();
    let statics = cuts::static_cuts(inst);
    let (eta_lo, eta_hi) = eta_bounds(inst);
    let master = build_master(inst, &statics.cuts, &eta_lo, &eta_hi);
    let seed_rows = benders::master_seed_rows(inst);

    let mut search = Search {
        inst,
        config,
        master,
        opts: SimplexOptions::default(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        incumbent: None,
        incumbent_value: f64::INFINITY,
        incumbent_states: Vec::new(),
        optimality_cuts: 0,
        feasibility_cuts: 0,
        family_cuts: BTreeMap::new(),
        audited: Vec::new(),
        node_log: Vec::new(),
        started,
        seed_rows,
    };
    for cut in &statics.cuts {
        search.note_polyhedral(cut);
    }

    // warm start: heuristic incumbent seeds the master with its
    // optimality cuts
    let heuristic_run = heuristic::run(inst).ok();
    let (heuristic_objective, heuristic_seconds) = match &heuristic_run {
        Some(h) => (Some(h.objective), h.seconds),
        None => (None, 0.0),
    };
    if let Some(h) = &heuristic_run {
        search.accept_incumbent(h.solution.clone())?;
        let enc = h.solution.encode(inst);
        if let Ok(SubproblemOutcome::Optimal { commodities, capacity_duals, .. }) =
            solve_subproblem(inst, &enc, &search.opts)
        {
            search.add_optimality_cuts(&enc, &commodities, &capacity_duals);
        }
    }

    let mut queue: Vec<Node> = vec![Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
        local_rows: Vec::new(),
        basis: None,
    }];
    let mut next_id = 1usize;
    let mut processed = 0usize;
    let mut root_seconds = 0.0;
    let mut timed_out = false;

    while let Some(node) = pop_node(&mut queue, config.node_selection) {
        if search.out_of_time() {
            queue.push(node);
            timed_out = true;
            break;
        }
        if search.incumbent.is_some() && node.bound >= search.incumbent_value - 1e-7 {
            continue;
        }
        // global tolerance stop
        let lb_now = global_bound(&queue, &node, &search);
        let gap_now = SolveResult::gap_of(
            search.incumbent.as_ref().map(|_| search.incumbent_value),
            lb_now,
        );
        if gap_now <= config.gap_tol && gap_now > 1e-6 {
            queue.push(node);
            break;
        }

        let (bound, point, basis) = search.process_node(&node)?;
        processed += 1;
        if node.id == 0 {
            root_seconds = started.elapsed().as_secs_f64();
        }
        search.node_log.push(NodeLogEntry {
            node: node.id,
            bound,
            incumbent: search.incumbent.as_ref().map(|_| search.incumbent_value),
            cuts_added: search.optimality_cuts + search.feasibility_cuts,
        });

        let Some(point) = point else { continue };
        if search.incumbent.is_some() && bound >= search.incumbent_value - 1e-7 {
            continue;
        }

        // reduction test before branching (root fixings are global)
        // -- handled through bounds on the shared LP at the root.

        let scan = processed % 10 == 0;
        let decision = branch_select(inst, &point, scan);
        match decision {
            None => {
                // numerically integral but not decodable: should have
                // been separated; treat as resolved to avoid cycling
                continue;
            }
            Some(BranchDecision::Variable(col)) => {
                for (lo, hi) in [(0.0, 0.0), (1.0, 1.0)] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((col, lo, hi));
                    queue.push(Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound,
                        fixings,
                        local_rows: node.local_rows.clone(),
                        basis: basis.clone(),
                    });
                    next_id += 1;
                }
            }
            Some(BranchDecision::ArcSet(arcs)) => {
                let coeffs: Vec<(usize, f64)> = arcs
                    .iter()
                    .map(|&(i, j)| (search.master.layout.col_r(i, j), 1.0))
                    .collect();
                for (sense, rhs) in [(RowSense::Le, 0.0), (RowSense::Ge, 1.0)] {
                    let mut local_rows = node.local_rows.clone();
                    local_rows.push((coeffs.clone(), sense, rhs));
                    queue.push(Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound,
                        fixings: node.fixings.clone(),
                        local_rows,
                        basis: basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
    }

    let bound = if queue.is_empty() && !timed_out {
        if search.incumbent.is_some() {
            search.incumbent_value
        } else {
            f64::INFINITY
        }
    } else {
        queue
            .iter()
            .map(|n| n.bound)
            .fold(f64::INFINITY, f64::min)
            .min(search.incumbent_value)
    };
    let objective = search.incumbent.as_ref().map(|_| search.incumbent_value);
    let gap = SolveResult::gap_of(objective, bound);
    let status = if search.incumbent.is_none() {
        if queue.is_empty() && !timed_out {
            SolveStatus::Infeasible
        } else {
            SolveStatus::TimeLimit
        }
    } else if gap <= 1e-6 {
        SolveStatus::Optimal
    } else if gap <= config.gap_tol {
        SolveStatus::OptimalTol
    } else {
        SolveStatus::TimeLimit
    };

    Ok(SolveResult {
        instance: inst.name.clone(),
        status,
        objective,
        bound: if bound.is_finite() { bound } else { 0.0 },
        gap: if gap.is_finite() { gap } else { 0.0 },
        nodes: processed,
        optimality_cuts: search.optimality_cuts,
        feasibility_cuts: search.feasibility_cuts,
        family_cuts: search.family_cuts,
        heuristic_objective,
        heuristic_seconds,
        root_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
        solution: search.incumbent,
        audited_cuts: search.audited,
        node_log: search.node_log,
    })
}

fn pop_node(queue: &mut Vec<Node>, selection: NodeSelection) -> Option<Node> {
    if queue.is_empty() {
        return None;
    }
    let idx = match selection {
        NodeSelection::BestBound => {
            let mut best = 0;
            for i in 1..queue.len() {
                if queue[i].bound < queue[best].bound - 1e-12
                    || (queue[i].bound <= queue[best].bound + 1e-12 && queue[i].id < queue[best].id)
                {
                    best = i;
                }
            }
            best
        }
        NodeSelection::BreadthFirst => {
            let mut best = 0;
            for i in 1..queue.len() {
                if queue[i].id < queue[best].id {
                    best = i;
                }
            }
            best
        }
    };
    Some(queue.swap_remove(idx))
}

fn global_bound(queue: &[Node], pending: &Node, search: &Search) -> f64 {
    let mut lb = pending.bound;
    for n in queue {
        lb = lb.min(n.bound);
    }
    if lb == f64::NEG_INFINITY {
        lb = 0.0;
    }
    lb.min(search.incumbent_value)
}
