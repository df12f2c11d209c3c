//! Exact solve by best-first branch-and-bound on the delete / Schur
//! complement branching scheme, pruned by the certified factorization bound.
//!
//! Run with: `cargo run --release --example branch_and_bound`

use mesp::exact::{branch_and_bound, brute_force, BoundKind, BoundSpec};
use mesp::instance::Instance;
use mesp::linalg::random_spd;
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let inst = Instance::new(random_spd(12, 19), 5, None, "bnb-demo")?;

    let out = branch_and_bound(
        &inst,
        &BoundSpec::new(BoundKind::DdFact),
        100_000,
        &SolveOpts::default(),
    )?;
    println!(
        "branch-and-bound: z = {:.9}, support {:?}, {} nodes, proven = {}",
        out.best.z,
        out.best.support(),
        out.nodes,
        out.proven,
    );

    let bf = brute_force(&inst)?;
    println!(
        "enumeration:      z = {:.9} over {} subsets (difference {:.2e})",
        bf.z,
        bf.count,
        (bf.z - out.best.z).abs()
    );
    Ok(())
}
