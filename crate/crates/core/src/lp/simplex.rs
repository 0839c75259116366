//! Bounded-variable revised simplex over an active subset of rows.
//!
//! Standard form: every active row gets a slack column (`<=` slack in
//! `[0, inf)`, `>=` slack in `(-inf, 0]`, `=` slack fixed at zero) so the
//! system is `Ax + s = b` with box constraints on all columns. The basis
//! is maintained as a dense LU factorization plus a product-form eta file,
//! refactorized periodically. Phase 1 minimizes the total bound violation
//! of basic variables (no artificial columns); at a positive phase-1
//! optimum the simplex multipliers of the infeasibility gradient are
//! exactly a Farkas certificate. Pricing is steepest-edge with a switch to
//! Bland's rule after a run of degenerate pivots, and ties break on the
//! lowest index, so solves are deterministic.

use super::{LinearProgram, LpSolution, LpStatus, RowSense, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
    /// Slack of a row that was not part of the solve (lazy rows).
    NonBasicLoose,
}

/// Snapshot of a basis keyed by structural columns and full-LP rows, so it
/// survives row activation changes between solves.
#[derive(Debug, Clone)]
pub struct Basis {
    pub(crate) col_status: Vec<VarStatus>,
    pub(crate) row_status: Vec<VarStatus>,
}

struct DenseLu {
    m: usize,
    f: Vec<f64>,
    swaps: Vec<u32>,
}

impl DenseLu {
    fn new() -> Self {
        DenseLu { m: 0, f: Vec::new(), swaps: Vec::new() }
    }

    /// Factor the m x m matrix given column-wise; returns the first
    /// position whose pivot collapses, if any.
    fn factor(&mut self, m: usize, fill: impl Fn(usize, &mut [f64])) -> Result<(), usize> {
        self.m = m;
        self.f.clear();
        self.f.resize(m * m, 0.0);
        self.swaps.clear();
        self.swaps.resize(m, 0);
        for k in 0..m {
            fill(k, &mut self.f[k * m..(k + 1) * m]);
        }
        for k in 0..m {
            // partial pivoting
            let col = k * m;
            let mut best = k;
            let mut best_abs = self.f[col + k].abs();
            for i in (k + 1)..m {
                let a = self.f[col + i].abs();
                if a > best_abs {
                    best_abs = a;
                    best = i;
                }
            }
            self.swaps[k] = best as u32;
            if best != k {
                for j in 0..m {
                    self.f.swap(j * m + k, j * m + best);
                }
            }
            let piv = self.f[col + k];
            if piv.abs() < 1e-12 {
                return Err(k);
            }
            let inv = 1.0 / piv;
            for i in (k + 1)..m {
                self.f[col + i] *= inv;
            }
            for j in (k + 1)..m {
                let mult_col = j * m;
                let ajk = self.f[mult_col + k];
                if ajk != 0.0 {
                    let (lcol, rest) = self.f.split_at_mut(mult_col);
                    let lcol = &lcol[col..col + m];
                    let target = &mut rest[..m];
                    for i in (k + 1)..m {
                        target[i] -= ajk * lcol[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// Solve B x = v in place.
    fn ftran(&self, v: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let s = self.swaps[k] as usize;
            if s != k {
                v.swap(k, s);
            }
        }
        // L (unit diagonal) forward
        for k in 0..m {
            let vk = v[k];
            if vk != 0.0 {
                let col = &self.f[k * m..(k + 1) * m];
                for i in (k + 1)..m {
                    v[i] -= col[i] * vk;
                }
            }
        }
        // U backward
        for k in (0..m).rev() {
            let col = &self.f[k * m..(k + 1) * m];
            let vk = v[k] / col[k];
            v[k] = vk;
            if vk != 0.0 {
                for i in 0..k {
                    v[i] -= col[i] * vk;
                }
            }
        }
    }

    /// Solve B' y = c in place.
    fn btran(&self, v: &mut [f64]) {
        let m = self.m;
        // U' forward
        for k in 0..m {
            let col = &self.f[k * m..(k + 1) * m];
            let mut acc = v[k];
            for i in 0..k {
                acc -= col[i] * v[i];
            }
            v[k] = acc / col[k];
        }
        // L' backward
        for k in (0..m).rev() {
            let col = &self.f[k * m..(k + 1) * m];
            let mut acc = v[k];
            for i in (k + 1)..m {
                acc -= col[i] * v[i];
            }
            v[k] = acc;
        }
        for k in (0..m).rev() {
            let s = self.swaps[k] as usize;
            if s != k {
                v.swap(k, s);
            }
        }
    }
}

struct Eta {
    pos: u32,
    pivot: f64,
    entries: Vec<(u32, f64)>,
}

enum Pricing {
    Entering { var: usize, reduced: f64 },
    None,
}

enum RatioOutcome {
    Pivot { theta: f64, leave_pos: usize, leave_to_upper: bool },
    BoundFlip { theta: f64 },
    NoBlock,
}

pub(crate) struct SimplexCore<'a> {
    lp: &'a LinearProgram,
    opts: &'a SimplexOptions,
    active: Vec<usize>,
    m: usize,
    ns: usize,
    nt: usize,
    cols: Vec<Vec<(u32, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,

    status: Vec<VarStatus>,
    basic: Vec<usize>,
    pos_of: Vec<i32>,
    xb: Vec<f64>,

    lu: DenseLu,
    etas: Vec<Eta>,
    gamma: Vec<f64>,

    iterations: usize,
    degen_run: usize,

    work: Vec<f64>,
    work2: Vec<f64>,
    work3: Vec<f64>,
}

impl<'a> SimplexCore<'a> {
    pub(crate) fn new(lp: &'a LinearProgram, active: &[usize], opts: &'a SimplexOptions) -> Self {
        let m = active.len();
        let ns = lp.num_cols();
        let nt = ns + m;
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ns];
        for (pos, &r) in active.iter().enumerate() {
            for &(c, v) in &lp.rows[r].coeffs {
                if v != 0.0 {
                    cols[c].push((pos as u32, v));
                }
            }
        }
        let mut cost = Vec::with_capacity(nt);
        let mut lower = Vec::with_capacity(nt);
        let mut upper = Vec::with_capacity(nt);
        cost.extend_from_slice(&lp.objective);
        lower.extend_from_slice(&lp.lower);
        upper.extend_from_slice(&lp.upper);
        let mut rhs = Vec::with_capacity(m);
        for &r in active {
            cost.push(0.0);
            match lp.rows[r].sense {
                RowSense::Le => {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                RowSense::Ge => {
                    lower.push(f64::NEG_INFINITY);
                    upper.push(0.0);
                }
                RowSense::Eq => {
                    lower.push(0.0);
                    upper.push(0.0);
                }
            }
            rhs.push(lp.rows[r].rhs);
        }
        SimplexCore {
            lp,
            opts,
            active: active.to_vec(),
            m,
            ns,
            nt,
            cols,
            cost,
            lower,
            upper,
            rhs,
            status: vec![VarStatus::AtLower; nt],
            basic: Vec::new(),
            pos_of: vec![-1; nt],
            xb: vec![0.0; m],
            lu: DenseLu::new(),
            etas: Vec::new(),
            gamma: vec![1.0; nt],
            iterations: 0,
            degen_run: 0,
            work: vec![0.0; m],
            work2: vec![0.0; m],
            work3: vec![0.0; m],
        }
    }

    fn iter_limit(&self) -> usize {
        if self.opts.iter_limit > 0 {
            self.opts.iter_limit
        } else {
            20_000 + 60 * self.m + 2 * self.nt
        }
    }

    fn nonbasic_default(&self, j: usize) -> VarStatus {
        if self.lower[j].is_finite() {
            VarStatus::AtLower
        } else if self.upper[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    fn init_statuses(&mut self, warm: Option<&Basis>) {
        match warm {
            None => {
                for j in 0..self.ns {
                    self.status[j] = self.nonbasic_default(j);
                }
                for pos in 0..self.m {
                    self.status[self.ns + pos] = VarStatus::Basic;
                }
            }
            Some(b) => {
                for j in 0..self.ns {
                    self.status[j] = if j < b.col_status.len() {
                        b.col_status[j]
                    } else {
                        self.nonbasic_default(j)
                    };
                }
                for (pos, &r) in self.active.iter().enumerate() {
                    let st = if r < b.row_status.len() { b.row_status[r] } else { VarStatus::Basic };
                    // Newly activated rows enter with a basic slack.
                    self.status[self.ns + pos] =
                        if st == VarStatus::NonBasicLoose { VarStatus::Basic } else { st };
                }
            }
        }
        // Sanitize nonbasic statuses against the (possibly changed) bounds.
        for j in 0..self.nt {
            match self.status[j] {
                VarStatus::AtLower if !self.lower[j].is_finite() => {
                    self.status[j] = self.nonbasic_default(j);
                }
                VarStatus::AtUpper if !self.upper[j].is_finite() => {
                    self.status[j] = self.nonbasic_default(j);
                }
                VarStatus::Free if self.lower[j].is_finite() || self.upper[j].is_finite() => {
                    self.status[j] = self.nonbasic_default(j);
                }
                VarStatus::NonBasicLoose => {
                    self.status[j] = self.nonbasic_default(j);
                }
                _ => {}
            }
        }
        // Repair the basic count to exactly m.
        let mut basics: Vec<usize> =
            (0..self.nt).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        if basics.len() > self.m {
            // Demote structural columns first, highest index first.
            let mut excess = basics.len() - self.m;
            for &j in basics.iter().rev() {
                if excess == 0 {
                    break;
                }
                if j < self.ns {
                    self.status[j] = self.nonbasic_default(j);
                    excess -= 1;
                }
            }
            if excess > 0 {
                for &j in basics.iter().rev() {
                    if excess == 0 {
                        break;
                    }
                    if self.status[j] == VarStatus::Basic {
                        self.status[j] = self.nonbasic_default(j);
                        excess -= 1;
                    }
                }
            }
        } else if basics.len() < self.m {
            let mut need = self.m - basics.len();
            for pos in 0..self.m {
                if need == 0 {
                    break;
                }
                let j = self.ns + pos;
                if self.status[j] != VarStatus::Basic {
                    self.status[j] = VarStatus::Basic;
                    need -= 1;
                }
            }
            if need > 0 {
                for j in 0..self.ns {
                    if need == 0 {
                        break;
                    }
                    if self.status[j] != VarStatus::Basic {
                        self.status[j] = VarStatus::Basic;
                        need -= 1;
                    }
                }
            }
        }
        basics = (0..self.nt).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        debug_assert_eq!(basics.len(), self.m);
        self.basic = basics;
        self.pos_of.iter_mut().for_each(|p| *p = -1);
        for (pos, &j) in self.basic.iter().enumerate() {
            self.pos_of[j] = pos as i32;
        }
    }

    fn gather_col(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.ns {
            for &(r, v) in &self.cols[j] {
                out[r as usize] += v;
            }
        } else {
            out[j - self.ns] = 1.0;
        }
    }

    fn refactor(&mut self) -> bool {
        self.etas.clear();
        let mut attempt = 0;
        loop {
            let basic = self.basic.clone();
            let cols = &self.cols;
            let ns = self.ns;
            let res = self.lu.factor(self.m, |pos, out| {
                out.iter_mut().for_each(|v| *v = 0.0);
                let j = basic[pos];
                if j < ns {
                    for &(r, v) in &cols[j] {
                        out[r as usize] += v;
                    }
                } else {
                    out[j - ns] = 1.0;
                }
            });
            match res {
                Ok(()) => return true,
                Err(bad_pos) => {
                    attempt += 1;
                    if attempt > 2 {
                        // Fall back to the all-slack basis.
                        for j in 0..self.ns {
                            if self.status[j] == VarStatus::Basic {
                                self.status[j] = self.nonbasic_default(j);
                            }
                        }
                        for pos in 0..self.m {
                            self.status[self.ns + pos] = VarStatus::Basic;
                            self.basic[pos] = self.ns + pos;
                        }
                        self.pos_of.iter_mut().for_each(|p| *p = -1);
                        for (pos, &j) in self.basic.iter().enumerate() {
                            self.pos_of[j] = pos as i32;
                        }
                        let ok = self
                            .lu
                            .factor(self.m, |pos, out| {
                                out.iter_mut().for_each(|v| *v = 0.0);
                                out[pos] = 1.0;
                            })
                            .is_ok();
                        return ok;
                    }
                    // Swap the offending basic variable for that row's slack.
                    let old = self.basic[bad_pos];
                    let slack = self.ns + bad_pos;
                    if self.pos_of[slack] >= 0 {
                        // Slack already basic elsewhere; move it here.
                        let other = self.pos_of[slack] as usize;
                        self.basic.swap(bad_pos, other);
                        self.pos_of[self.basic[bad_pos]] = bad_pos as i32;
                        self.pos_of[self.basic[other]] = other as i32;
                    } else {
                        self.status[old] = self.nonbasic_default(old);
                        self.pos_of[old] = -1;
                        self.basic[bad_pos] = slack;
                        self.status[slack] = VarStatus::Basic;
                        self.pos_of[slack] = bad_pos as i32;
                    }
                }
            }
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.ftran(v);
        for eta in &self.etas {
            let r = eta.pos as usize;
            let vr = v[r] / eta.pivot;
            v[r] = vr;
            if vr != 0.0 {
                for &(i, w) in &eta.entries {
                    v[i as usize] -= w * vr;
                }
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let r = eta.pos as usize;
            let mut acc = v[r];
            for &(i, w) in &eta.entries {
                acc -= w * v[i as usize];
            }
            v[r] = acc / eta.pivot;
        }
        self.lu.btran(v);
    }

    fn recompute_xb(&mut self) {
        let mut rhs = self.rhs.clone();
        for j in 0..self.nt {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.nonbasic_value(j);
            if xj == 0.0 {
                continue;
            }
            if j < self.ns {
                for &(r, v) in &self.cols[j] {
                    rhs[r as usize] -= v * xj;
                }
            } else {
                rhs[j - self.ns] -= xj;
            }
        }
        self.ftran(&mut rhs);
        self.xb = rhs;
    }

    fn init_gamma(&mut self) {
        for j in 0..self.nt {
            if j < self.ns {
                let norm: f64 = self.cols[j].iter().map(|&(_, v)| v * v).sum();
                self.gamma[j] = 1.0 + norm;
            } else {
                self.gamma[j] = 2.0;
            }
        }
    }

    /// Infeasibility direction of basic variables: +1 above upper, -1
    /// below lower. Returns the total violation.
    fn infeasibility(&self, d: &mut [f64]) -> f64 {
        let tol = self.opts.feas_tol;
        let mut total = 0.0;
        for pos in 0..self.m {
            let j = self.basic[pos];
            let x = self.xb[pos];
            if x > self.upper[j] + tol {
                d[pos] = 1.0;
                total += x - self.upper[j];
            } else if x < self.lower[j] - tol {
                d[pos] = -1.0;
                total += self.lower[j] - x;
            } else {
                d[pos] = 0.0;
            }
        }
        total
    }

    fn dot_col(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.ns {
            self.cols[j].iter().map(|&(r, c)| c * v[r as usize]).sum()
        } else {
            v[j - self.ns]
        }
    }

    /// Select the entering variable given multipliers `y` and the phase
    /// cost vector (`None` in phase 1, structural costs in phase 2).
    fn price(&self, y: &[f64], phase2: bool, bland: bool) -> Pricing {
        let dtol = self.opts.dual_tol;
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..self.nt {
            let st = self.status[j];
            let eligible_dir = match st {
                VarStatus::Basic | VarStatus::NonBasicLoose => continue,
                VarStatus::AtLower => {
                    if self.lower[j] == self.upper[j] {
                        continue;
                    }
                    -1.0
                }
                VarStatus::AtUpper => {
                    if self.lower[j] == self.upper[j] {
                        continue;
                    }
                    1.0
                }
                VarStatus::Free => 0.0,
            };
            let cj = if phase2 { self.cost[j] } else { 0.0 };
            let dj = cj - self.dot_col(j, y);
            let ok = match st {
                VarStatus::AtLower => dj < -dtol,
                VarStatus::AtUpper => dj > dtol,
                VarStatus::Free => dj.abs() > dtol,
                _ => false,
            };
            let _ = eligible_dir;
            if !ok {
                continue;
            }
            if bland {
                return Pricing::Entering { var: j, reduced: dj };
            }
            let score = dj * dj / self.gamma[j].max(1e-10);
            match best {
                Some((s, _, _)) if s >= score => {}
                _ => best = Some((score, j, dj)),
            }
        }
        match best {
            Some((_, j, dj)) => Pricing::Entering { var: j, reduced: dj },
            None => Pricing::None,
        }
    }

    /// Blocking event of basis position `pos` when the entering variable
    /// moves: ratio and the bound hit. In phase 1 infeasible basics block
    /// when they reach the violated bound (turning feasible); feasible
    /// basics block at the bound they move toward.
    fn block_event(&self, pos: usize, sigma: f64, wi: f64) -> Option<(f64, bool)> {
        let ftol = self.opts.feas_tol;
        let j = self.basic[pos];
        let delta = -sigma * wi; // movement of x_B[pos] per unit theta
        let x = self.xb[pos];
        let (bound, to_upper) = if x > self.upper[j] + ftol {
            if delta < 0.0 {
                (self.upper[j], true)
            } else {
                return None;
            }
        } else if x < self.lower[j] - ftol {
            if delta > 0.0 {
                (self.lower[j], false)
            } else {
                return None;
            }
        } else if delta > 0.0 {
            if self.upper[j].is_finite() {
                (self.upper[j], true)
            } else {
                return None;
            }
        } else if delta < 0.0 {
            if self.lower[j].is_finite() {
                (self.lower[j], false)
            } else {
                return None;
            }
        } else {
            return None;
        };
        Some((((bound - x) / delta).max(0.0), to_upper))
    }

    /// Two-pass ratio test: find the exact minimum ratio, then pick the
    /// blocking variable with the largest pivot within a small window of
    /// it (smallest variable index under Bland's rule).
    fn ratio_test(&self, q: usize, sigma: f64, w: &[f64], bland: bool) -> RatioOutcome {
        let ptol = self.opts.pivot_tol;
        let mut theta_min = f64::INFINITY;
        for pos in 0..self.m {
            if w[pos].abs() <= ptol {
                continue;
            }
            if let Some((t, _)) = self.block_event(pos, sigma, w[pos]) {
                if t < theta_min {
                    theta_min = t;
                }
            }
        }
        let flip_range = self.upper[q] - self.lower[q];
        if flip_range.is_finite() && flip_range < theta_min {
            return RatioOutcome::BoundFlip { theta: flip_range };
        }
        if theta_min.is_infinite() {
            return RatioOutcome::NoBlock;
        }
        let window = theta_min + 1e-9 * (1.0 + theta_min.abs());
        let mut leave: Option<(usize, bool, f64)> = None;
        for pos in 0..self.m {
            let wi = w[pos];
            if wi.abs() <= ptol {
                continue;
            }
            if let Some((t, to_upper)) = self.block_event(pos, sigma, wi) {
                if t > window {
                    continue;
                }
                let take = match leave {
                    None => true,
                    Some((lpos, _, lw)) => {
                        if bland {
                            self.basic[pos] < self.basic[lpos]
                        } else {
                            wi.abs() > lw
                        }
                    }
                };
                if take {
                    leave = Some((pos, to_upper, wi.abs()));
                }
            }
        }
        match leave {
            Some((pos, to_upper, _)) => RatioOutcome::Pivot {
                theta: theta_min,
                leave_pos: pos,
                leave_to_upper: to_upper,
            },
            None => RatioOutcome::NoBlock,
        }
    }

    /// Update steepest-edge weights after a pivot (entering q at position
    /// r with direction w). `gamma_q` is the exact weight of q.
    fn update_gamma(&mut self, q: usize, r: usize, w: &[f64], gamma_q: f64) {
        let wr = w[r];
        if wr.abs() < 1e-12 {
            return;
        }
        // rho = B^-T e_r, tau = B^-T w
        self.work2.iter_mut().for_each(|v| *v = 0.0);
        self.work2[r] = 1.0;
        let mut rho = std::mem::take(&mut self.work2);
        self.btran(&mut rho);
        self.work3.copy_from_slice(w);
        let mut tau = std::mem::take(&mut self.work3);
        self.btran(&mut tau);
        for j in 0..self.nt {
            if self.status[j] == VarStatus::Basic || j == q {
                continue;
            }
            let alpha = self.dot_col(j, &rho);
            if alpha.abs() < 1e-12 {
                continue;
            }
            let ratio = alpha / wr;
            let cross = self.dot_col(j, &tau);
            let cand = self.gamma[j] - 2.0 * ratio * cross + ratio * ratio * gamma_q;
            self.gamma[j] = cand.max(1.0 + ratio * ratio);
        }
        // weight of the variable that just left (position r's old var has
        // already been marked nonbasic by the caller before this runs)
        self.work2 = rho;
        self.work3 = tau;
    }

    fn run_phase(&mut self, phase2: bool) -> Result<(), LpStatus> {
        let limit = self.iter_limit();
        let mut d = vec![0.0; self.m];
        loop {
            if self.iterations >= limit {
                return Err(LpStatus::IterationLimit);
            }
            if self.etas.len() >= self.opts.refactor_every {
                if !self.refactor() {
                    return Err(LpStatus::IterationLimit);
                }
                self.recompute_xb();
            }
            // multipliers for the phase objective
            let infeas = self.infeasibility(&mut d);
            if !phase2 && infeas <= self.opts.feas_tol {
                return Ok(());
            }
            let mut y = vec![0.0; self.m];
            if phase2 {
                for pos in 0..self.m {
                    y[pos] = self.cost[self.basic[pos]];
                }
            } else {
                y.copy_from_slice(&d);
            }
            self.btran(&mut y);

            let bland = self.degen_run >= self.opts.bland_after;
            let (q, dq) = match self.price(&y, phase2, bland) {
                Pricing::Entering { var, reduced } => (var, reduced),
                Pricing::None => {
                    if phase2 {
                        return Ok(());
                    }
                    // phase-1 optimum with remaining infeasibility: the
                    // multipliers certify infeasibility
                    self.work.copy_from_slice(&y);
                    return Err(LpStatus::Infeasible);
                }
            };
            let sigma = match self.status[q] {
                VarStatus::AtLower => 1.0,
                VarStatus::AtUpper => -1.0,
                VarStatus::Free => {
                    if dq < 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => unreachable!(),
            };

            let mut w = vec![0.0; self.m];
            self.gather_col(q, &mut w);
            self.ftran(&mut w);

            match self.ratio_test(q, sigma, &w, bland) {
                RatioOutcome::NoBlock => {
                    if phase2 {
                        return Err(LpStatus::Unbounded);
                    }
                    // cannot happen with consistent phase-1 multipliers;
                    // treat as numerical trouble
                    if !self.refactor() {
                        return Err(LpStatus::IterationLimit);
                    }
                    self.recompute_xb();
                    self.iterations += 1;
                    continue;
                }
                RatioOutcome::BoundFlip { theta } => {
                    for pos in 0..self.m {
                        self.xb[pos] -= sigma * theta * w[pos];
                    }
                    self.status[q] = match self.status[q] {
                        VarStatus::AtLower => VarStatus::AtUpper,
                        VarStatus::AtUpper => VarStatus::AtLower,
                        s => s,
                    };
                    self.iterations += 1;
                    if theta <= 1e-10 {
                        self.degen_run += 1;
                    } else {
                        self.degen_run = 0;
                    }
                }
                RatioOutcome::Pivot { theta, leave_pos, leave_to_upper } => {
                    let gamma_q = 1.0 + w.iter().map(|v| v * v).sum::<f64>();
                    let leaver = self.basic[leave_pos];
                    let enter_val = self.nonbasic_value(q) + sigma * theta;
                    for pos in 0..self.m {
                        self.xb[pos] -= sigma * theta * w[pos];
                    }
                    self.status[leaver] = if self.lower[leaver] == self.upper[leaver] {
                        VarStatus::AtLower
                    } else if leave_to_upper {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.pos_of[leaver] = -1;
                    self.basic[leave_pos] = q;
                    self.pos_of[q] = leave_pos as i32;
                    self.status[q] = VarStatus::Basic;
                    self.xb[leave_pos] = enter_val;

                    self.update_gamma(q, leave_pos, &w, gamma_q);
                    let wr = w[leave_pos];
                    self.gamma[leaver] = (gamma_q / (wr * wr)).max(1.0 + 1.0 / (wr * wr));

                    let mut entries: Vec<(u32, f64)> = Vec::new();
                    for (i, &wi) in w.iter().enumerate() {
                        if i != leave_pos && wi.abs() > self.opts.zero_drop {
                            entries.push((i as u32, wi));
                        }
                    }
                    self.etas.push(Eta { pos: leave_pos as u32, pivot: wr, entries });

                    self.iterations += 1;
                    if theta <= 1e-10 {
                        self.degen_run += 1;
                    } else {
                        self.degen_run = 0;
                    }
                }
            }
        }
    }

    fn structural_x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ns];
        for j in 0..self.ns {
            x[j] = if self.status[j] == VarStatus::Basic {
                self.xb[self.pos_of[j] as usize]
            } else {
                self.nonbasic_value(j)
            };
            if x[j].abs() < self.opts.zero_drop {
                x[j] = 0.0;
            }
        }
        x
    }

    fn export_basis(&self) -> Basis {
        let mut col_status = vec![VarStatus::AtLower; self.ns];
        col_status.copy_from_slice(&self.status[..self.ns]);
        let mut row_status = vec![VarStatus::NonBasicLoose; self.lp.num_rows()];
        for (pos, &r) in self.active.iter().enumerate() {
            row_status[r] = self.status[self.ns + pos];
        }
        Basis { col_status, row_status }
    }

    fn finish(&self, status: LpStatus, farkas: Option<Vec<f64>>) -> LpSolution {
        let x = self.structural_x();
        let objective: f64 = self.lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let mut row_duals = vec![0.0; self.lp.num_rows()];
        let mut reduced = vec![0.0; self.ns];
        if status == LpStatus::Optimal {
            let mut y = vec![0.0; self.m];
            for pos in 0..self.m {
                y[pos] = self.cost[self.basic[pos]];
            }
            self.btran(&mut y);
            for (pos, &r) in self.active.iter().enumerate() {
                let d = y[pos];
                row_duals[r] = if d.abs() < self.opts.zero_drop { 0.0 } else { d };
            }
            for j in 0..self.ns {
                let d = self.cost[j] - self.dot_col(j, &y);
                reduced[j] = if d.abs() < self.opts.zero_drop { 0.0 } else { d };
            }
        }
        LpSolution {
            status,
            x,
            objective,
            row_duals,
            reduced_costs: reduced,
            farkas,
            basis: self.export_basis(),
            iterations: self.iterations,
        }
    }

    pub(crate) fn run(&mut self, warm: Option<&Basis>) -> LpSolution {
        self.init_statuses(warm);
        if !self.refactor() {
            return self.finish(LpStatus::IterationLimit, None);
        }
        self.recompute_xb();
        self.init_gamma();

        match self.run_phase(false) {
            Ok(()) => {}
            Err(LpStatus::Infeasible) => {
                // self.work holds the phase-1 multipliers
                let mut farkas = vec![0.0; self.lp.num_rows()];
                for (pos, &r) in self.active.iter().enumerate() {
                    farkas[r] = self.work[pos];
                }
                return self.finish(LpStatus::Infeasible, Some(farkas));
            }
            Err(s) => return self.finish(s, None),
        }
        match self.run_phase(true) {
            Ok(()) => self.finish(LpStatus::Optimal, None),
            Err(s) => self.finish(s, None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves_small_systems() {
        // B = [[2, 1], [1, 3]]; solve B x = [5, 10] -> x = [1, 3]
        let cols = [vec![2.0, 1.0], vec![1.0, 3.0]];
        let mut lu = DenseLu::new();
        lu.factor(2, |k, out| out.copy_from_slice(&cols[k])).unwrap();
        let mut v = vec![5.0, 10.0];
        lu.ftran(&mut v);
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
        // B' y = [4, 7] -> y solves [[2,1],[1,3]]^T y = [4,7]
        let mut y = vec![4.0, 7.0];
        lu.btran(&mut y);
        assert!((2.0 * y[0] + 1.0 * y[1] - 4.0).abs() < 1e-12);
        assert!((1.0 * y[0] + 3.0 * y[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn lu_random_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let m = rng.gen_range(1..25);
            let cols: Vec<Vec<f64>> =
                (0..m).map(|_| (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let mut lu = DenseLu::new();
            if lu.factor(m, |k, out| out.copy_from_slice(&cols[k])).is_err() {
                continue;
            }
            let x0: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            // v = B x0
            let mut v = vec![0.0; m];
            for (k, col) in cols.iter().enumerate() {
                for i in 0..m {
                    v[i] += col[i] * x0[k];
                }
            }
            lu.ftran(&mut v);
            for i in 0..m {
                assert!((v[i] - x0[i]).abs() < 1e-8);
            }
        }
    }
}
