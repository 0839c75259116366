//! Solvers for the bounded cardinality capacitated hub routing problem
//! (BCCHRP): pick between `q` and `p` hub nodes, allocate every other node
//! to exactly one hub, and serve each hub's spokes on a single directed
//! vehicle route of capacity `C`. Hubs form a complete network with
//! travel times discounted by a factor `alpha`; the objective is the total
//! transport plus transshipment time over all origin-destination pairs.
//!
//! The crate provides:
//! * a data model with a deterministic instance generator ([`instance`]),
//! * route-structure solutions and their evaluator ([`solution`]),
//! * a greedy construction + local search heuristic ([`heuristic`]),
//! * a bounded-variable revised simplex kernel ([`lp`]),
//! * a max-flow/min-cut routine ([`maxflow`]),
//! * separation oracles for the valid-inequality families ([`cuts`]),
//! * the Benders master/subproblem machinery ([`benders`]),
//! * the exact branch-and-cut driver ([`solver`]),
//! * the full four-index formulation and MPS export ([`compact`], [`mps`]),
//! * a brute-force optimum and exhaustive separation oracle ([`oracle`]).

pub mod benders;
pub mod compact;
pub mod cuts;
pub mod heuristic;
pub mod instance;
pub mod lp;
pub mod maxflow;
pub mod mps;
pub mod oracle;
pub mod solution;
pub mod solver;

pub use instance::ProblemInstance;
pub use solution::{HubRouteSolution, MasterState};
