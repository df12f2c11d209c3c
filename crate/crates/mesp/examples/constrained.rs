//! The constrained problem end to end: generate side constraints that cut
//! off the unconstrained optimum, then bound, fix, and solve under them.
//!
//! Run with: `cargo run --release --example constrained`

use mesp::exact::{brute_force, compute_bound, BoundKind, BoundSpec};
use mesp::instance::{generate_cmesp_constraints, Instance};
use mesp::linalg::random_spd;
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let c = random_spd(9, 123);
    let s = 4;
    let free = Instance::new(c.clone(), s, None, "free")?;
    let z_free = brute_force(&free)?;

    // right-hand sides calibrated so the unconstrained optima are infeasible
    let mut best = Vec::new();
    for sv in [s - 1, s, s + 1] {
        let inst_s = Instance::new(c.clone(), sv, None, "cal")?;
        best.push((sv, brute_force(&inst_s)?.x));
    }
    let side = generate_cmesp_constraints(&free, 2, 9, &best)?;
    let inst = Instance::new(c, s, Some(side), "constrained")?;
    let z = brute_force(&inst)?;

    println!("unconstrained optimum = {:.9} at {:?}", z_free.z, z_free.support());
    println!("constrained optimum   = {:.9} at {:?}", z.z, z.support());

    let opts = SolveOpts::default();
    for spec in [
        BoundSpec::new(BoundKind::DdFact),
        BoundSpec::new(BoundKind::CompDdFact),
        BoundSpec::new(BoundKind::Linx),
    ] {
        let cb = compute_bound(&inst, &spec, &opts)?;
        let fix = cb.fix(z.z, 1e-10);
        println!(
            "{:<12} ub = {:.9} (gap to z {:.3e}), fixes {} vars at the optimum gap",
            spec.kind.name(),
            cb.ub,
            cb.ub - z.z,
            fix.total(),
        );
    }
    Ok(())
}
