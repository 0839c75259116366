use bcchrp::instance::generate;
use bcchrp::oracle::{brute_force, BruteForceOutcome};

fn main() {
    for seed in 0..3u64 {
        let inst = generate(seed, 9, 3, 0.9).unwrap();
        match brute_force(&inst).unwrap() {
            BruteForceOutcome::Optimal { objective, solution } => {
                println!("seed {seed}: optimum {objective:.6} hubs {:?}", solution.hubs)
            }
            BruteForceOutcome::Infeasible => println!("seed {seed}: infeasible"),
        }
    }
}
