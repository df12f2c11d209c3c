//! Randomized invariants over seeded instances.

use mesp::fact_bound::gamma_s;
use mesp::instance::{factorize, FactorMethod, Instance};
use mesp::linalg::{max_norm, random_spd};
use mesp::polytope::{gap_lp, linear_oracle, Polytope};
use nalgebra::DVector;
use proptest::prelude::*;

fn feasible_binary_points(p: &Polytope) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << p.n) {
        if mask.count_ones() as usize != p.s {
            continue;
        }
        let x = DVector::from_fn(p.n, |j, _| if mask >> j & 1 == 1 { 1.0 } else { 0.0 });
        if p.violation(&x) <= 1e-9 {
            out.push(x);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The oracle without side constraints maximizes over the binary points.
    #[test]
    fn oracle_beats_every_binary_point(
        n in 3usize..8,
        seed in 0u64..5000,
        raw_s in 1usize..7,
    ) {
        let s = 1 + raw_s % (n - 1);
        let p = Polytope::new(n, s, None);
        let c = DVector::from_fn(n, |j, _| ((seed as f64 + j as f64 * 13.7).sin()) * 5.0);
        let (x, v) = linear_oracle(&c, &p).unwrap();
        prop_assert!(p.violation(&x) <= 1e-9);
        for b in feasible_binary_points(&p) {
            prop_assert!(v >= c.dot(&b) - 1e-9);
        }
    }

    /// Strong duality of the gap LP: its optimum equals the oracle value of
    /// its right-hand side, and the equality constraint is satisfied.
    #[test]
    fn gap_lp_strong_duality(
        n in 3usize..8,
        seed in 0u64..5000,
        raw_s in 1usize..7,
    ) {
        let s = 1 + raw_s % (n - 1);
        let p = Polytope::new(n, s, None);
        let d = DVector::from_fn(n, |j, _| ((seed as f64 * 0.37 + j as f64 * 7.1).cos()) * 3.0);
        let sol = gap_lp(&d, s as f64, &p).unwrap();
        let (_, oracle_val) = linear_oracle(&d, &p).unwrap();
        prop_assert!((sol.objective - (oracle_val - s as f64)).abs() <= 1e-8);
        prop_assert!(sol.residual(&d, None) <= 1e-9 * (1.0 + d.amax()));
        prop_assert!(sol.upsilon.iter().all(|&v| v >= 0.0));
        prop_assert!(sol.nu.iter().all(|&v| v >= 0.0));
    }

    /// Concavity of the spectral objective along segments of the box.
    #[test]
    fn gamma_s_is_midpoint_concave(
        n in 4usize..8,
        seed in 0u64..2000,
        raw_s in 1usize..4,
    ) {
        let s = 1 + raw_s % (n - 1);
        let inst = Instance::new(random_spd(n, seed), s, None, "prop").unwrap();
        let fac = factorize(&inst, FactorMethod::Spectral).unwrap();
        let x = DVector::from_fn(n, |j, _| 0.2 + 0.6 * ((seed as f64 + j as f64).sin().abs()));
        let y = DVector::from_fn(n, |j, _| 0.2 + 0.6 * ((seed as f64 * 1.3 + j as f64).cos().abs()));
        let mid = 0.5 * (&x + &y);
        let gx = gamma_s(&fac.f_of_x(&x), s);
        let gy = gamma_s(&fac.f_of_x(&y), s);
        let gm = gamma_s(&fac.f_of_x(&mid), s);
        prop_assert!(gm >= 0.5 * gx + 0.5 * gy - 1e-9, "{gm} < avg of {gx}, {gy}");
    }

    /// Complementing twice returns the original data and the offsets cancel.
    #[test]
    fn complement_is_an_involution(
        n in 3usize..9,
        seed in 0u64..5000,
        raw_s in 1usize..8,
    ) {
        let s = 1 + raw_s % (n - 1);
        let inst = Instance::new(random_spd(n, seed), s, None, "prop").unwrap();
        let (comp, off1) = inst.complement().unwrap();
        prop_assert_eq!(comp.s(), n - s);
        let (back, off2) = comp.complement().unwrap();
        prop_assert!(max_norm(&(back.c() - inst.c())) <= 1e-8);
        prop_assert!((off1 + off2).abs() <= 1e-8);
    }

    /// At binary points the spectral objective is the subset entropy, for
    /// every factorization method.
    #[test]
    fn binary_restriction_all_methods(
        n in 4usize..9,
        seed in 0u64..3000,
        raw_s in 1usize..4,
        mask in 0u32..512,
    ) {
        let s = 1 + raw_s % (n - 1);
        let inst = Instance::new(random_spd(n, seed), s, None, "prop").unwrap();
        // deterministic s-subset from the mask
        let mut support: Vec<usize> = (0..n).collect();
        support.rotate_left((mask as usize) % n);
        support.truncate(s);
        support.sort_unstable();
        let ld = inst.ldet_of(&support);
        prop_assume!(ld.is_finite());
        let x = DVector::from_fn(n, |j, _| if support.contains(&j) { 1.0 } else { 0.0 });
        for method in [FactorMethod::Spectral, FactorMethod::Sqrt, FactorMethod::CholeskyPivoted] {
            let fac = factorize(&inst, method).unwrap();
            let g = gamma_s(&fac.f_of_x(&x), s);
            prop_assert!((g - ld).abs() <= 1e-8, "{method:?}: {g} vs {ld}");
        }
    }
}
