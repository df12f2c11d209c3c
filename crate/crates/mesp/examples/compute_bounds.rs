//! Computes every certified upper bound on a random instance and compares
//! them against the exact optimum.
//!
//! Run with: `cargo run --release --example compute_bounds`

use mesp::exact::{brute_force, compute_bound, heuristic_lb, BoundKind, BoundSpec, GammaMode};
use mesp::instance::Instance;
use mesp::linalg::random_spd;
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let n = 10;
    let s = 4;
    let inst = Instance::new(random_spd(n, 42), s, None, "demo")?;

    let exact = brute_force(&inst)?;
    let lb = heuristic_lb(&inst)?;
    println!("n = {n}, s = {s}");
    println!("exact optimum     z = {:.9}  support {:?}", exact.z, exact.support());
    println!("heuristic LB        = {:.9}  support {:?}", lb.z, lb.support());
    println!();
    println!("{:<24} {:>14} {:>12} {:>10}", "bound", "certified ub", "ub - z", "gamma");

    let opts = SolveOpts::default();
    for (label, spec) in [
        ("factorization", BoundSpec::new(BoundKind::DdFact)),
        ("complementary", BoundSpec::new(BoundKind::CompDdFact)),
        ("linx (gamma = 1)", BoundSpec::new(BoundKind::Linx)),
        ("linx (gamma optimized)", BoundSpec::new(BoundKind::Linx).with_gamma(GammaMode::Optimize)),
    ] {
        let cb = compute_bound(&inst, &spec, &opts)?;
        println!(
            "{:<24} {:>14.9} {:>12.3e} {:>10}",
            label,
            cb.ub,
            cb.ub - exact.z,
            cb.gamma.map_or(String::from("-"), |g| format!("{g:.4}")),
        );
    }
    Ok(())
}
