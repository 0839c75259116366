//! Linear programming kernel: a bounded-variable revised simplex with dual
//! values, reduced costs and Farkas infeasibility certificates.
//!
//! The solver always minimizes. Rows carry a sense and a right-hand side;
//! columns carry bounds (either side may be infinite) and an integrality
//! mark that the LP solver itself ignores — branch-and-bound lives
//! elsewhere. [`solve_lazy`] activates rows on demand, which keeps the
//! working basis small for models whose row set is dominated by rarely
//! binding inequalities; its results (including duals and certificates)
//! are valid for the full row set, inactive rows having zero duals.

mod simplex;

pub use simplex::Basis;

use simplex::SimplexCore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub name: String,
}

/// A linear program `min c'x` subject to rows and column bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub col_names: Vec<String>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_col(
        &mut self,
        cost: f64,
        lower: f64,
        upper: f64,
        integer: bool,
        name: impl Into<String>,
    ) -> usize {
        debug_assert!(lower <= upper);
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
        name: impl Into<String>,
    ) -> usize {
        self.rows.push(Row { coeffs, sense, rhs, name: name.into() });
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(c, v)| v * x[c]).sum()
    }

    /// Signed violation of a row at `x` (positive means violated).
    pub fn row_violation(&self, row: usize, x: &[f64]) -> f64 {
        let act = self.row_activity(row, x);
        match self.rows[row].sense {
            RowSense::Le => act - self.rows[row].rhs,
            RowSense::Ge => self.rows[row].rhs - act,
            RowSense::Eq => (act - self.rows[row].rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values per structural column (best known point on
    /// non-optimal statuses).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual value per row: <= 0 for `Le` rows, >= 0 for `Ge`, free for `Eq`.
    pub row_duals: Vec<f64>,
    /// `c_j - y'a_j` per structural column.
    pub reduced_costs: Vec<f64>,
    /// On `Infeasible`: a row multiplier vector proving infeasibility; see
    /// [`verify_farkas`].
    pub farkas: Option<Vec<f64>>,
    pub basis: Basis,
    pub iterations: usize,
}

/// Tolerances and pivot rules. These are configuration rather than
/// constants; the defaults match common simplex practice.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub zero_drop: f64,
    pub refactor_every: usize,
    /// Switch to Bland's rule after this many consecutive degenerate pivots.
    pub bland_after: usize,
    /// 0 means automatic (scaled with problem size).
    pub iter_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            dual_tol: 1e-7,
            pivot_tol: 1e-9,
            zero_drop: 1e-11,
            refactor_every: 64,
            bland_after: 50,
            iter_limit: 0,
        }
    }
}

/// Solve with every row active.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let active: Vec<usize> = (0..lp.num_rows()).collect();
    let mut core = SimplexCore::new(lp, &active, opts);
    core.run(None)
}

/// Solve from a previous basis (all rows active).
pub fn solve_warm(lp: &LinearProgram, opts: &SimplexOptions, warm: &Basis) -> LpSolution {
    let active: Vec<usize> = (0..lp.num_rows()).collect();
    let mut core = SimplexCore::new(lp, &active, opts);
    core.run(Some(warm))
}

/// Solve with lazy row activation: start from `seed_rows` (plus any rows
/// whose slack the warm basis marks basic or tight), then repeatedly add
/// violated rows and re-solve until the full row set holds. Duals and
/// Farkas certificates refer to the full row set.
pub fn solve_lazy(
    lp: &LinearProgram,
    opts: &SimplexOptions,
    warm: Option<&Basis>,
    seed_rows: &[usize],
) -> LpSolution {
    let nr = lp.num_rows();
    let mut active_mask = vec![false; nr];
    for &r in seed_rows {
        active_mask[r] = true;
    }
    if let Some(b) = warm {
        for (r, &st) in b.row_status.iter().enumerate() {
            // keep rows that were tight (nonbasic slack); rows with a
            // basic (loose) slack drop out of the working set and return
            // via the violation scan if ever needed again
            let tight = matches!(st, simplex::VarStatus::AtLower | simplex::VarStatus::AtUpper);
            if r < nr && tight {
                active_mask[r] = true;
            }
        }
    }

    let mut warm_basis: Option<Basis> = warm.cloned();
    let max_outer = 200;
    for _ in 0..max_outer {
        let active: Vec<usize> = (0..nr).filter(|&r| active_mask[r]).collect();
        let mut core = SimplexCore::new(lp, &active, opts);
        let sol = core.run(warm_basis.as_ref());
        match sol.status {
            LpStatus::Optimal => {
                // Scan inactive rows for violations.
                let mut newly = Vec::new();
                for r in 0..nr {
                    if !active_mask[r] && lp.row_violation(r, &sol.x) > opts.feas_tol {
                        newly.push(r);
                    }
                }
                if newly.is_empty() {
                    return sol;
                }
                newly.sort_by(|&a, &b| {
                    lp.row_violation(b, &sol.x)
                        .partial_cmp(&lp.row_violation(a, &sol.x))
                        .unwrap()
                        .then(a.cmp(&b))
                });
                for &r in newly.iter().take(2000) {
                    active_mask[r] = true;
                }
                warm_basis = Some(sol.basis);
            }
            LpStatus::Unbounded => {
                // Inactive rows may bound the ray; activate everything once.
                if active.len() == nr {
                    return sol;
                }
                active_mask.iter_mut().for_each(|m| *m = true);
                warm_basis = Some(sol.basis);
            }
            // A relaxation being infeasible proves the full LP infeasible;
            // iteration limits are reported as-is.
            _ => return sol,
        }
    }
    let active: Vec<usize> = (0..nr).collect();
    let mut core = SimplexCore::new(lp, &active, opts);
    core.run(warm_basis.as_ref())
}

/// Gap of a Farkas certificate: `y'b` minus the box maximum of `y'A x`
/// over the column bounds. A positive gap proves the LP infeasible. Sign
/// conditions on inequality rows are part of the check; an invalid
/// certificate yields `-inf`.
pub fn verify_farkas(lp: &LinearProgram, y: &[f64]) -> f64 {
    let tol = 1e-9;
    let mut ytb = 0.0;
    let mut yta = vec![0.0; lp.num_cols()];
    for (r, row) in lp.rows.iter().enumerate() {
        match row.sense {
            RowSense::Le if y[r] > tol => return f64::NEG_INFINITY,
            RowSense::Ge if y[r] < -tol => return f64::NEG_INFINITY,
            _ => {}
        }
        ytb += y[r] * row.rhs;
        for &(c, v) in &row.coeffs {
            yta[c] += y[r] * v;
        }
    }
    let mut boxmax = 0.0;
    for j in 0..lp.num_cols() {
        let a = yta[j];
        if a > tol {
            if lp.upper[j].is_infinite() {
                return f64::NEG_INFINITY;
            }
            boxmax += a * lp.upper[j];
        } else if a < -tol {
            if lp.lower[j].is_infinite() {
                return f64::NEG_INFINITY;
            }
            boxmax += a * lp.lower[j];
        }
    }
    ytb - boxmax
}

/// Dual objective implied by a solution's duals and reduced costs; equals
/// the primal objective at an optimum (strong duality).
pub fn dual_objective(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    let mut val = 0.0;
    for (r, row) in lp.rows.iter().enumerate() {
        val += sol.row_duals[r] * row.rhs;
    }
    for j in 0..lp.num_cols() {
        let rc = sol.reduced_costs[j];
        if rc > 0.0 && lp.lower[j].is_finite() {
            val += rc * lp.lower[j];
        } else if rc < 0.0 && lp.upper[j].is_finite() {
            val += rc * lp.upper[j];
        }
    }
    val
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions::default()
    }

    #[test]
    fn single_variable_lower_bounding_row() {
        // min x s.t. x >= 3, x in [0, 10] -> x = 3, row dual 1.
        let mut lp = LinearProgram::new();
        let x = lp.add_col(1.0, 0.0, 10.0, false, "x");
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 3.0, "r");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[x] - 3.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.row_duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_vertex() {
        // min -x - y s.t. x + y <= 1, x,y in [0,1]: objective -1 at x+y = 1.
        let mut lp = LinearProgram::new();
        let x = lp.add_col(-1.0, 0.0, 1.0, false, "x");
        let y = lp.add_col(-1.0, 0.0, 1.0, false, "y");
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0, "cap");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!((sol.x[x] + sol.x[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_with_certificate() {
        // x <= 1 and x >= 2 is empty.
        let mut lp = LinearProgram::new();
        let x = lp.add_col(0.0, 0.0, 10.0, false, "x");
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 1.0, "lo");
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 2.0, "hi");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Infeasible);
        let farkas = sol.farkas.expect("certificate");
        assert!(verify_farkas(&lp, &farkas) > 1e-8);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // min x + y s.t. x + y = 2, x - y = 0 with free y.
        let mut lp = LinearProgram::new();
        let x = lp.add_col(1.0, 0.0, f64::INFINITY, false, "x");
        let y = lp.add_col(1.0, f64::NEG_INFINITY, f64::INFINITY, false, "y");
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 2.0, "sum");
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Eq, 0.0, "diff");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[x] - 1.0).abs() < 1e-8);
        assert!((sol.x[y] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_detection() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col(-1.0, 0.0, f64::INFINITY, false, "x");
        lp.add_row(vec![(x, -1.0)], RowSense::Le, 0.0, "noop");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn fixed_variables_and_empty_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col(5.0, 2.0, 2.0, false, "x");
        let y = lp.add_col(1.0, 0.0, 4.0, false, "y");
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0, "r");
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[x] - 2.0).abs() < 1e-9);
        assert!((sol.x[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lazy_solve_matches_full_solve() {
        // A box LP with many redundant rows plus a few binding ones.
        let mut lp = LinearProgram::new();
        let n = 8;
        for j in 0..n {
            lp.add_col(-(j as f64 + 1.0), 0.0, 1.0, false, format!("x{j}"));
        }
        for j in 0..n {
            // redundant
            lp.add_row(vec![(j, 1.0)], RowSense::Le, 5.0, format!("loose{j}"));
        }
        let all: Vec<(usize, f64)> = (0..n).map(|j| (j, 1.0)).collect();
        lp.add_row(all.clone(), RowSense::Le, 2.5, "budget");
        let full = solve(&lp, &opts());
        let lazy = solve_lazy(&lp, &opts(), None, &[]);
        assert_eq!(full.status, LpStatus::Optimal);
        assert_eq!(lazy.status, LpStatus::Optimal);
        assert!((full.objective - lazy.objective).abs() < 1e-9);
        // duals agree on the binding row
        let budget = lp.num_rows() - 1;
        assert!((full.row_duals[budget] - lazy.row_duals[budget]).abs() < 1e-7);
    }

    #[test]
    fn degenerate_lp_terminates() {
        // Many redundant constraints through the optimum.
        let mut lp = LinearProgram::new();
        let x = lp.add_col(-1.0, 0.0, 1.0, false, "x");
        let y = lp.add_col(-1.0, 0.0, 1.0, false, "y");
        for k in 1..=6 {
            lp.add_row(vec![(x, 1.0), (y, k as f64)], RowSense::Le, 1.0 + k as f64, "r");
            lp.add_row(vec![(x, k as f64), (y, 1.0)], RowSense::Le, 1.0 + k as f64, "s");
        }
        let sol = solve(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 2.0).abs() < 1e-8);
    }

    #[test]
    fn strong_duality_and_slackness_on_random_lps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut optimal = 0;
        for _case in 0..120 {
            let n = rng.gen_range(2..14);
            let m = rng.gen_range(1..18);
            let mut lp = LinearProgram::new();
            for j in 0..n {
                let lo = if rng.gen_bool(0.8) { rng.gen_range(-3.0..0.0) } else { f64::NEG_INFINITY };
                let hi = if rng.gen_bool(0.8) { rng.gen_range(0.0..4.0) } else { f64::INFINITY };
                lp.add_col(rng.gen_range(-2.0..2.0), lo, hi, false, format!("x{j}"));
            }
            for r in 0..m {
                let mut coeffs: Vec<(usize, f64)> = Vec::new();
                for j in 0..n {
                    if rng.gen_bool(0.6) {
                        coeffs.push((j, rng.gen_range(-2.0..2.0)));
                    }
                }
                let sense = match rng.gen_range(0..3) {
                    0 => RowSense::Le,
                    1 => RowSense::Ge,
                    _ => RowSense::Eq,
                };
                lp.add_row(coeffs, sense, rng.gen_range(-3.0..3.0), format!("r{r}"));
            }
            let sol = solve(&lp, &opts());
            match sol.status {
                LpStatus::Optimal => {
                    optimal += 1;
                    let gap = (sol.objective - dual_objective(&lp, &sol)).abs();
                    assert!(gap <= 1e-6 * (1.0 + sol.objective.abs()), "duality gap {gap}");
                    // complementary slackness on rows
                    for (r, row) in lp.rows.iter().enumerate() {
                        let slack = (lp.row_activity(r, &sol.x) - row.rhs).abs();
                        assert!(
                            sol.row_duals[r].abs() * slack <= 1e-5,
                            "row {r} dual {} slack {}",
                            sol.row_duals[r],
                            slack
                        );
                    }
                }
                LpStatus::Infeasible => {
                    let f = sol.farkas.as_ref().expect("certificate");
                    assert!(verify_farkas(&lp, f) > 1e-8, "bad certificate");
                }
                LpStatus::Unbounded => {}
                LpStatus::IterationLimit => panic!("iteration limit on tiny LP"),
            }
        }
        assert!(optimal > 30, "suite should contain many optimal cases");
    }
}
