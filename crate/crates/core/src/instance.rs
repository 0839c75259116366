//! Problem data model, validation, deterministic instance generation and
//! file I/O.
//!
//! An instance lives on `n` nodes with travel times `t`, flow volumes `w`,
//! a hub-edge discount `alpha`, hub-count bounds `q..=p`, a per-cluster
//! cardinality floor `gamma` (counting the hub itself), a vehicle capacity
//! `capacity` and per-node transshipment times `phi`. Instances are
//! immutable after construction and safe to share across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// A full problem instance. Field names follow the model parameters:
/// `t[i][j]` is the travel time of arc `(i, j)`, `w[i][j]` the volume
/// shipped from `i` to `j`, `phi[k]` the transshipment time at `k` when
/// it acts as a hub.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstance {
    pub name: String,
    pub n: usize,
    pub alpha: f64,
    pub p: usize,
    pub q: usize,
    pub gamma: usize,
    pub capacity: f64,
    pub phi: Vec<f64>,
    pub t: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

/// Per-node totals `O_i = sum_j w_ij` (outbound) and `D_i = sum_j w_ji`
/// (inbound).
#[derive(Debug, Clone)]
pub struct NodeAggregates {
    pub outbound: Vec<f64>,
    pub inbound: Vec<f64>,
}

impl NodeAggregates {
    pub fn total_flow(&self) -> f64 {
        self.outbound.iter().sum()
    }
}

/// One violated invariant, as data rather than an error: `field` names the
/// offending field and `rule` states the broken rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl ProblemInstance {
    /// All commodity pairs `(i, j)` with `i != j`, in lexicographic order.
    /// Every per-commodity loop in the crate iterates in this order so that
    /// results are deterministic.
    pub fn commodities(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn aggregates(&self) -> NodeAggregates {
        let n = self.n;
        let mut outbound = vec![0.0; n];
        let mut inbound = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                outbound[i] += self.w[i][j];
                inbound[i] += self.w[j][i];
            }
        }
        NodeAggregates { outbound, inbound }
    }

    /// Check every type invariant; an empty list means the instance is
    /// well formed. Violations are data, not failures.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: String| {
            out.push(Violation { field: field.to_string(), rule });
        };
        let n = self.n;
        if n == 0 {
            push("n", "n must be positive".into());
            return out;
        }
        if self.q < 1 {
            push("q", "q >= 1".into());
        }
        if self.q > self.p {
            push("q", format!("q <= p violated ({} > {})", self.q, self.p));
        }
        if self.p > n {
            push("p", format!("p <= n violated ({} > {})", self.p, n));
        }
        if self.gamma < 2 {
            push("gamma", "gamma >= 2".into());
        }
        if n < self.q * self.gamma {
            push(
                "n",
                format!("n >= q*gamma violated ({} < {})", n, self.q * self.gamma),
            );
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            push("alpha", format!("alpha in (0, 1] violated ({})", self.alpha));
        }
        if !(self.capacity >= 0.0) {
            push("capacity", "capacity >= 0".into());
        }
        if self.phi.len() != n {
            push("phi", format!("length {} != n = {}", self.phi.len(), n));
        } else if self.phi.iter().any(|&v| !(v >= 0.0)) {
            push("phi", "entries must be nonnegative".into());
        }
        for (field, m) in [("t", &self.t), ("w", &self.w)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                push(field, format!("matrix must be {n}x{n}"));
                continue;
            }
            for i in 0..n {
                if m[i][i] != 0.0 {
                    push(field, format!("diagonal entry [{i}][{i}] must be zero"));
                }
                for j in 0..n {
                    if !(m[i][j] >= 0.0) {
                        push(field, format!("negative or NaN entry at [{i}][{j}]"));
                    }
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let text = serde_json::to_string_pretty(self).map_err(DataError::Parse)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Load and validate an instance file. The schema is strict: unknown
    /// fields are rejected, and any violated invariant is an error.
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        let inst: ProblemInstance = serde_json::from_str(&text)?;
        let violations = inst.validate();
        if let Some(v) = violations.first() {
            return Err(DataError::Invalid(format!("{} ({} violations)", v, violations.len())));
        }
        Ok(inst)
    }
}

/// Vehicle capacity used by the generator: total flow averaged over the
/// maximum hub count, `C = (sum_i O_i + sum_i D_i) / (2 p)`.
pub fn capacity_for(w: &[Vec<f64>], p: usize) -> f64 {
    let mut total_o = 0.0;
    let mut total_d = 0.0;
    for row in w {
        for &v in row {
            total_o += v;
        }
    }
    for j in 0..w.len() {
        for row in w {
            total_d += row[j];
        }
    }
    (total_o + total_d) / (2.0 * p as f64)
}

/// Generate a synthetic AP-style instance: node coordinates uniform in the
/// `[0, 100]^2` square, `t` the Euclidean distance matrix, flows uniform
/// integers in `[1, 50]`, transshipment times uniform in `[2, 5]`, and
/// `q = gamma = 3`. The same seed always yields the identical instance.
pub fn generate(seed: u64, n: usize, p: usize, alpha: f64) -> Result<ProblemInstance, DataError> {
    const Q: usize = 3;
    const GAMMA: usize = 3;
    if n < Q * GAMMA {
        return Err(DataError::Params(format!("n = {n} too small for q = gamma = 3 (need n >= 9)")));
    }
    if p < Q || p > n {
        return Err(DataError::Params(format!("p = {p} outside [{Q}, {n}]")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(DataError::Params(format!("alpha = {alpha} outside (0, 1]")));
    }

    // Draw order is fixed: coordinates, then flows row by row, then phi.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let mut t = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = coords[i].0 - coords[j].0;
                let dy = coords[i].1 - coords[j].1;
                t[i][j] = (dx * dx + dy * dy).sqrt();
            }
        }
    }
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i][j] = rng.gen_range(1..=50) as f64;
            }
        }
    }
    let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(2.0..5.0)).collect();
    let capacity = capacity_for(&w, p);

    let inst = ProblemInstance {
        name: format!("n{n}_p{p}_{alpha}_s{seed}"),
        n,
        alpha,
        p,
        q: Q,
        gamma: GAMMA,
        capacity,
        phi,
        t,
        w,
    };
    debug_assert!(inst.validate().is_empty());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_valid() -> ProblemInstance {
        generate(1, 10, 3, 0.9).unwrap()
    }

    #[test]
    fn well_formed_instance_has_no_violations() {
        assert!(small_valid().validate().is_empty());
    }

    #[test]
    fn q_greater_than_p_is_flagged() {
        let mut inst = small_valid();
        inst.q = 4;
        inst.p = 3;
        let v = inst.validate();
        assert!(v.iter().any(|v| v.field == "q" && v.rule.contains("q <= p")));
    }

    #[test]
    fn partition_count_rule() {
        // n = 8 with q = 3 and gamma = 3 leaves no feasible partition.
        let mut inst = small_valid();
        inst.n = 8;
        inst.q = 3;
        inst.gamma = 3;
        inst.phi.truncate(8);
        inst.t = vec![vec![0.0; 8]; 8];
        inst.w = vec![vec![0.0; 8]; 8];
        let v = inst.validate();
        assert!(v.iter().any(|v| v.rule.contains("q*gamma")));
    }

    #[test]
    fn generate_is_deterministic() {
        let a = generate(7, 10, 3, 0.9).unwrap();
        let b = generate(7, 10, 3, 0.9).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn generated_phi_is_in_range() {
        for seed in 0..5 {
            let inst = generate(seed, 12, 4, 0.8).unwrap();
            assert!(inst.phi.iter().all(|&v| (2.0..=5.0).contains(&v)));
        }
    }

    #[test]
    fn capacity_formula() {
        // sum O = sum D = 100, p = 4 => C = 25.
        let mut w = vec![vec![0.0; 5]; 5];
        w[0][1] = 60.0;
        w[2][3] = 30.0;
        w[4][0] = 10.0;
        assert_eq!(capacity_for(&w, 4), 25.0);

        let inst = generate(3, 9, 3, 0.7).unwrap();
        let agg = inst.aggregates();
        let expect = (agg.total_flow() + agg.inbound.iter().sum::<f64>()) / (2.0 * 3.0);
        assert!((inst.capacity - expect).abs() < 1e-12);
    }

    #[test]
    fn aggregates_balance() {
        let inst = small_valid();
        let agg = inst.aggregates();
        let o: f64 = agg.outbound.iter().sum();
        let d: f64 = agg.inbound.iter().sum();
        assert!((o - d).abs() < 1e-9);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = small_valid();
        inst.save(&path).unwrap();
        let back = ProblemInstance::load(&path).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn load_rejects_negative_time() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut inst = small_valid();
        inst.t[0][1] = -1.0;
        inst.save(&path).unwrap();
        let err = ProblemInstance::load(&path).unwrap_err();
        assert!(err.to_string().contains("t"));
    }

    #[test]
    fn load_rejects_missing_phi_and_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let inst = small_valid();
        let mut value: serde_json::Value = serde_json::to_value(&inst).unwrap();
        value.as_object_mut().unwrap().remove("phi");
        let path = dir.path().join("missing.json");
        std::fs::write(&path, value.to_string()).unwrap();
        let err = ProblemInstance::load(&path).unwrap_err();
        assert!(err.to_string().contains("phi"));

        let mut value: serde_json::Value = serde_json::to_value(&inst).unwrap();
        value
            .as_object_mut()
            .unwrap()
            .insert("extra".into(), serde_json::json!(1));
        let path = dir.path().join("unknown.json");
        std::fs::write(&path, value.to_string()).unwrap();
        assert!(ProblemInstance::load(&path).is_err());
    }
}
