use bcchrp::instance::generate;
use bcchrp::solver::{solve, SolveConfig};
use std::time::Instant;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mw: bool = std::env::args().nth(2).map(|s| s == "mw").unwrap_or(false);
    let inst = generate(seed, 9, 3, 0.9).unwrap();
    let cfg = SolveConfig {
        gap_tol: 1e-9,
        time_limit: 60.0,
        magnanti_wong: mw,
        ..SolveConfig::default()
    };
    let t = Instant::now();
    let res = solve(&inst, &cfg).unwrap();
    println!(
        "seed {seed} status {:?} obj {:?} bound {:.3} nodes {} ocuts {} fcuts {} heur {:?} time {:.2}s ({:.2}s wall)",
        res.status, res.objective, res.bound, res.nodes, res.optimality_cuts,
        res.feasibility_cuts, res.heuristic_objective, res.total_seconds, t.elapsed().as_secs_f64()
    );
    for (fam, c) in &res.family_cuts {
        println!("  {fam}: {c}");
    }
}
