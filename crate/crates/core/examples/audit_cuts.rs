use bcchrp::instance::generate;
use bcchrp::oracle::{brute_force, BruteForceOutcome};
use bcchrp::solver::{solve, AuditedCut, SolveConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let inst = generate(seed, 9, 3, 0.9).unwrap();
    let optimum = match brute_force(&inst).unwrap() {
        BruteForceOutcome::Optimal { solution, .. } => solution,
        _ => panic!("infeasible"),
    };
    let enc = optimum.encode(&inst);
    let cfg = SolveConfig {
        gap_tol: 1e-9,
        time_limit: 30.0,
        magnanti_wong: false,
        collect_cuts: true,
        ..SolveConfig::default()
    };
    let res = solve(&inst, &cfg).unwrap();
    println!(
        "status {:?} obj {:?} bound {:.3} nodes {} cuts audited {}",
        res.status, res.objective, res.bound, res.nodes, res.audited_cuts.len()
    );
    let mut bad = 0;
    for (idx, cut) in res.audited_cuts.iter().enumerate() {
        let viol = match cut {
            AuditedCut::Polyhedral(c) => c.violation_at(&enc),
            AuditedCut::Benders(c) => c.violation_at(&enc),
        };
        if viol > 1e-6 {
            bad += 1;
            if bad <= 3 {
                println!("cut {idx} violates optimum by {viol:.6}: {cut:?}");
            }
        }
    }
    println!("{bad} invalid cuts out of {}", res.audited_cuts.len());
}
