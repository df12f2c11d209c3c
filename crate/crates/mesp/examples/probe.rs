use mesp::exact::{brute_force};
use mesp::instance::{generate_cmesp_constraints, FactorMethod, Instance};
use mesp::linalg::random_spd;
use mesp::mixing::{optimize_alpha, solve_mix, MixComponent, MixWeights};
use mesp::solver::SolveOpts;

fn main() -> mesp::Result<()> {
    let opts = SolveOpts::default();
    // find a seed where ddfact/linx mix strictly improves
    'outer: for seed in 0..60u64 {
        for s in 3..6usize {
            let inst = Instance::new(random_spd(9, seed), s, None, "p")?;
            let p = inst.polytope();
            let build = || -> mesp::Result<_> { Ok((
                MixComponent::ddfact(&inst, FactorMethod::Spectral)?,
                MixComponent::linx(&inst, 1.0))) };
            let (dd, lx) = build()?;
            let comps = [dd, lx];
            let v1 = solve_mix(&comps, &MixWeights::pair(1.0), &p, &opts)?.value;
            let v0 = solve_mix(&comps, &MixWeights::pair(0.0), &p, &opts)?.value;
            if (v1 - v0).abs() > 0.02 { continue; }
            let (dd, lx) = build()?;
            let se = optimize_alpha(dd, lx, &p, &opts)?;
            let imp = v0.min(v1) - se.value;
            if imp > 1e-3 {
                println!("MIX seed={seed} s={s}: dd={v1:.6} lx={v0:.6} mixed={:.6} improvement={imp:.2e} alpha={:.3}", se.value, se.alpha);
                break 'outer;
            }
        }
    }
    // find a seed where generated constraints cut the optimum
    for seed in 0..40u64 {
        let c = random_spd(9, 123);
        let s = 4usize;
        let free = Instance::new(c.clone(), s, None, "f")?;
        let zf = brute_force(&free)?;
        let mut best = Vec::new();
        for sv in [s-1, s, s+1] {
            let i2 = Instance::new(c.clone(), sv, None, "c")?;
            best.push((sv, brute_force(&i2)?.x));
        }
        let side = generate_cmesp_constraints(&free, 2, seed, &best)?;
        let inst = Instance::new(c, s, Some(side), "k")?;
        if let Ok(z) = brute_force(&inst) {
            if z.z < zf.z - 1e-9 {
                println!("CONS seed={seed}: free={:.6} constrained={:.6}", zf.z, z.z);
                break;
            }
        }
    }
    Ok(())
}
