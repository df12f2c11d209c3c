//! The factorization bound does not depend on how C is factored, and scaling
//! C shifts it by exactly `-s log gamma`. Both facts checked numerically on
//! a rank-deficient instance.
//!
//! Run with: `cargo run --release --example factorizations`

use mesp::fact_bound::{certify, solve_ddfact, spectral_bound};
use mesp::instance::{factorize, FactorMethod, Instance};
use mesp::linalg::random_psd_with_rank;
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let n = 9;
    let rank = 6;
    let s = 3;
    let inst = Instance::new(random_psd_with_rank(n, rank, 77), s, None, "fac-demo")?;
    let p = inst.polytope();
    let opts = SolveOpts { tol: 1e-10, max_iter: 10_000, ..Default::default() };

    println!("n = {n}, rank(C) = {rank}, s = {s}");
    let mut base = None;
    for method in [FactorMethod::CholeskyPivoted, FactorMethod::Spectral, FactorMethod::Sqrt] {
        let fac = factorize(&inst, method)?;
        let r = solve_ddfact(&fac, &p, &opts)?;
        let cert = certify(&fac, &p, &r.x, 0.0)?;
        println!(
            "{:<18} k = {:>2}: certified bound = {:.12}",
            method.name(),
            fac.k,
            cert.value
        );
        base.get_or_insert(cert.value);
    }
    println!("spectral bound (always weaker) = {:.12}", spectral_bound(inst.c(), s)?);

    let base = base.expect("at least one method ran");
    for gamma in [0.5, 2.0, 10.0] {
        let (scaled, offset) = inst.scale(gamma)?;
        let fac = factorize(&scaled, FactorMethod::Spectral)?;
        let r = solve_ddfact(&fac, &p, &opts)?;
        let v = certify(&fac, &p, &r.x, 0.0)?.value + offset;
        println!("gamma = {gamma:>4}: bound after shifting back = {v:.12} (drift {:.2e})", v - base);
    }
    Ok(())
}
