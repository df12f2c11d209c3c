//! Mixes the factorization bound with linx: searches the pair weight that
//! minimizes the combined bound and certifies the result.
//!
//! Run with: `cargo run --release --example mixing`

use mesp::exact::brute_force;
use mesp::instance::{FactorMethod, Instance};
use mesp::linalg::random_spd;
use mesp::linx_bound::{optimize_gamma, LinxParams};
use mesp::mixing::{optimize_alpha, solve_mix, MixComponent, MixWeights};
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let inst = Instance::new(random_spd(9, 7), 4, None, "mix-demo")?;
    let p = inst.polytope();
    let opts = SolveOpts::default();

    // fix the linx scale factor first; the weight search runs on top of it
    let (gamma, _) = optimize_gamma(&inst, &p, (1e-6, 1e6), &LinxParams::default())?;
    println!("optimized linx gamma = {gamma:.5}");

    let build = || -> mesp::Result<(MixComponent, MixComponent)> {
        Ok((
            MixComponent::ddfact(&inst, FactorMethod::Spectral)?,
            MixComponent::linx(&inst, gamma),
        ))
    };

    let (dd, lx) = build()?;
    let comps = [dd, lx];
    let v_fact = solve_mix(&comps, &MixWeights::pair(1.0), &p, &opts)?.value;
    let v_linx = solve_mix(&comps, &MixWeights::pair(0.0), &p, &opts)?.value;

    let (dd, lx) = build()?;
    let search = optimize_alpha(dd, lx, &p, &opts)?;
    let (_, cert) = search.certify(&p, &opts)?;
    let z = brute_force(&inst)?.z;

    println!("factorization bound  = {v_fact:.9}");
    println!("linx bound           = {v_linx:.9}");
    println!("mixed (alpha = {:.3}) = {:.9} (certified)", search.alpha, cert.value);
    println!("exact optimum        = {z:.9}");
    println!(
        "improvement over the better single bound: {:.3e}",
        v_fact.min(v_linx) - cert.value
    );
    Ok(())
}
