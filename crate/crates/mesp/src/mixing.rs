//! Weighted combinations of the factorization bound, its complementary
//! form, and linx. Any convex combination of the three objectives is itself
//! a valid bound; the Lagrangian dual of the combination yields a single
//! certificate with the same fixing rule as the individual bounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fact_bound::{self, dual_theta, fix_from_duals, FixReport};
use crate::instance::{factorize, FactorMethod, Factorization, Instance};
use crate::linalg;
use crate::linx_bound;
use crate::polytope::{gap_lp, Polytope};
use crate::solver::{frank_wolfe, ConcaveObjective, PrimalResult, SolveOpts};

/// One relaxation wired into a mix: its affine map `L_i(x)`, the concave
/// spectral function applied to it, and the dual pieces `rho_i`, `Omega_i`.
pub enum MixComponent {
    /// `Gamma_s(F^T Diag(x) F)` with `L_{ij} = F_j^T F_j`, `rho = s`.
    DdFact { fac: Factorization },
    /// `Gamma_{n-s}(F~^T Diag(e-x) F~) + ldet C` where `F~ F~^T = C^{-1}`;
    /// `L_{i0} = C^{-1}`, `L_{ij} = -(F^{-1})_{.j} (F^{-1})_{.j}^T`, `rho = n-s`.
    CompDdFact { fac: Factorization, ldet_c: f64 },
    /// `1/2 (ldet K_gamma(x) - s log gamma)` with `L_{i0} = I`,
    /// `L_{ij} = gamma C_j^T C_j - e_j e_j^T`, `rho = n/2`.
    Linx { c: DMatrix<f64>, gamma: f64, s: usize },
}

/// Dual pieces of one component at a point: the matrix, the vector of
/// `Theta . L_{ij}`, the scalar `Theta . L_{i0}`, and `Omega(Theta)`.
pub struct ComponentDual {
    pub theta: DMatrix<f64>,
    pub d: DVector<f64>,
    pub l0_dot: f64,
    pub omega: f64,
}

impl MixComponent {
    pub fn ddfact(inst: &Instance, method: FactorMethod) -> Result<Self> {
        Ok(MixComponent::DdFact { fac: factorize(inst, method)? })
    }

    /// Uses the square-root factor of `C^{-1}`, which equals `F^{-T}` for
    /// `F = C^{1/2}` and keeps the affine map symmetric.
    pub fn comp_ddfact(inst: &Instance) -> Result<Self> {
        let (comp, ldet_c) = inst.complement()?;
        let fac = factorize(&comp, FactorMethod::Sqrt)?;
        Ok(MixComponent::CompDdFact { fac, ldet_c })
    }

    pub fn linx(inst: &Instance, gamma: f64) -> Self {
        assert!(gamma > 0.0);
        MixComponent::Linx { c: inst.c().clone(), gamma, s: inst.s() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MixComponent::DdFact { .. } => "ddfact",
            MixComponent::CompDdFact { .. } => "compddfact",
            MixComponent::Linx { .. } => "linx",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            MixComponent::DdFact { fac } | MixComponent::CompDdFact { fac, .. } => fac.n(),
            MixComponent::Linx { c, .. } => c.nrows(),
        }
    }

    /// Order of the component's matrix space.
    pub fn k(&self) -> usize {
        match self {
            MixComponent::DdFact { fac } | MixComponent::CompDdFact { fac, .. } => fac.k,
            MixComponent::Linx { c, .. } => c.nrows(),
        }
    }

    /// `rho_i = Theta_i . W_i` at the closed-form inner supremum.
    pub fn rho(&self) -> f64 {
        match self {
            MixComponent::DdFact { fac } | MixComponent::CompDdFact { fac, .. } => {
                fac.s() as f64
            }
            MixComponent::Linx { c, .. } => c.nrows() as f64 / 2.0,
        }
    }

    /// Constant term `L_{i0}` of the affine map.
    pub fn l0(&self) -> DMatrix<f64> {
        match self {
            MixComponent::DdFact { fac } => DMatrix::zeros(fac.k, fac.k),
            MixComponent::CompDdFact { fac, .. } => &fac.f * fac.f.transpose(),
            MixComponent::Linx { c, .. } => DMatrix::identity(c.nrows(), c.nrows()),
        }
    }

    /// Coefficient `L_{ij}` of `x_j` in the affine map.
    pub fn l_j(&self, j: usize) -> DMatrix<f64> {
        match self {
            MixComponent::DdFact { fac } => {
                let row = fac.f.row(j);
                row.transpose() * row
            }
            MixComponent::CompDdFact { fac, .. } => {
                // F~^T Diag(e-x) F~ has coefficient -F~_j^T F~_j on x_j
                let row = fac.f.row(j);
                -(row.transpose() * row)
            }
            MixComponent::Linx { c, gamma, .. } => {
                let col = c.column(j);
                let mut m = (&col * col.transpose()) * *gamma;
                m[(j, j)] -= 1.0;
                m
            }
        }
    }

    /// `L_i(x)`.
    pub fn l_of_x(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            MixComponent::DdFact { fac } => fac.f_of_x(x),
            MixComponent::CompDdFact { fac, .. } => {
                let y = DVector::from_fn(x.len(), |j, _| 1.0 - x[j]);
                fac.f_of_x(&y)
            }
            MixComponent::Linx { c, gamma, .. } => linx_bound::k_matrix(c, *gamma, x),
        }
    }

    /// Component objective `f_i(L_i(x))`; `-inf` outside the domain.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        match self {
            MixComponent::DdFact { fac } => fact_bound::gamma_s(&fac.f_of_x(x), fac.s()),
            MixComponent::CompDdFact { fac, ldet_c } => {
                let y = DVector::from_fn(x.len(), |j, _| 1.0 - x[j]);
                fact_bound::gamma_s(&fac.f_of_x(&y), fac.s()) + ldet_c
            }
            MixComponent::Linx { c, gamma, s } => linx_bound::linx_objective(c, *gamma, *s, x),
        }
    }

    /// Value, gradient, and smoothness flag at `x`.
    pub fn grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)> {
        match self {
            MixComponent::DdFact { fac } => {
                let v = fact_bound::gamma_s(&fac.f_of_x(x), fac.s());
                let (g, smooth) = fact_bound::gamma_s_gradient(fac, x)?;
                Ok((v, g, smooth))
            }
            MixComponent::CompDdFact { fac, ldet_c } => {
                let y = DVector::from_fn(x.len(), |j, _| 1.0 - x[j]);
                let v = fact_bound::gamma_s(&fac.f_of_x(&y), fac.s()) + ldet_c;
                let (gy, smooth) = fact_bound::gamma_s_gradient(fac, &y)?;
                Ok((v, -gy, smooth))
            }
            MixComponent::Linx { c, gamma, s } => {
                let v = linx_bound::linx_objective(c, *gamma, *s, x);
                if !v.is_finite() {
                    return Err(Error::Singular);
                }
                Ok((v, linx_bound::linx_gradient(c, *gamma, x)?, true))
            }
        }
    }

    /// Builds the component's dual matrix at `x` and evaluates the dual
    /// pieces needed by the mixed gap LP.
    pub fn dual(&self, x: &DVector<f64>) -> Result<ComponentDual> {
        match self {
            MixComponent::DdFact { fac } => {
                let d = dual_theta(fac, x, 0.0)?;
                Ok(ComponentDual { omega: d.log_term, l0_dot: 0.0, d: d.d, theta: d.theta })
            }
            MixComponent::CompDdFact { fac, ldet_c } => {
                let y = DVector::from_fn(x.len(), |j, _| 1.0 - x[j]);
                let dt = dual_theta(fac, &y, 0.0)?;
                let l0_dot = dt.d.sum();
                Ok(ComponentDual {
                    omega: dt.log_term + ldet_c,
                    l0_dot,
                    d: -dt.d,
                    theta: dt.theta,
                })
            }
            MixComponent::Linx { c, gamma, s } => {
                let theta = linx_bound::linx_dual_theta(c, *gamma, x)?;
                let d = linx_bound::linx_gradient(c, *gamma, x)?;
                let l0_dot = theta.trace();
                let omega = -0.5
                    * (linalg::ldet_spd(&(2.0 * &theta)).ok_or(Error::Singular)?
                        + *s as f64 * gamma.ln());
                Ok(ComponentDual { theta, d, l0_dot, omega })
            }
        }
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixWeights(Vec<f64>);

impl MixWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("mix weights must be nonnegative".into()));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mix weights sum to {total}, expected 1")));
        }
        Ok(MixWeights(w))
    }

    /// `(alpha, 1 - alpha)`.
    pub fn pair(alpha: f64) -> Self {
        assert!((0.0..=1.0).contains(&alpha));
        MixWeights(vec![alpha, 1.0 - alpha])
    }

    pub fn single(m: usize, i: usize) -> Self {
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        MixWeights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `sum_i alpha_i f_i(L_i(x))`; components with zero weight are skipped so a
/// collapsed weight vector reproduces the single bound exactly.
pub fn mix_objective(components: &[MixComponent], alpha: &MixWeights, x: &DVector<f64>) -> f64 {
    assert_eq!(components.len(), alpha.0.len());
    let mut acc = 0.0;
    for (comp, &a) in components.iter().zip(&alpha.0) {
        if a == 0.0 {
            continue;
        }
        let v = comp.objective(x);
        if !v.is_finite() {
            return f64::NEG_INFINITY;
        }
        acc += a * v;
    }
    acc
}

/// Weighted sum of component gradients (subgradients at kinks).
pub fn mix_gradient(
    components: &[MixComponent],
    alpha: &MixWeights,
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>, bool)> {
    assert_eq!(components.len(), alpha.0.len());
    let n = components[0].n();
    let mut val = 0.0;
    let mut g = DVector::zeros(n);
    let mut smooth = true;
    for (comp, &a) in components.iter().zip(&alpha.0) {
        if a == 0.0 {
            continue;
        }
        let (v, gi, si) = comp.grad(x)?;
        val += a * v;
        g += gi * a;
        smooth &= si;
    }
    Ok((val, g, smooth))
}

struct MixObjective<'a> {
    components: &'a [MixComponent],
    alpha: &'a MixWeights,
}

impl ConcaveObjective for MixObjective<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        mix_objective(self.components, self.alpha, x)
    }

    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)> {
        mix_gradient(self.components, self.alpha, x)
    }
}

/// Maximizes the weighted objective over the polytope.
pub fn solve_mix(
    components: &[MixComponent],
    alpha: &MixWeights,
    p: &Polytope,
    opts: &SolveOpts,
) -> Result<PrimalResult> {
    frank_wolfe(&MixObjective { components, alpha }, p, opts)
}

/// A dual-feasible certificate for the mixed bound.
#[derive(Debug, Clone)]
pub struct DmixCertificate {
    pub thetas: Vec<DMatrix<f64>>,
    pub upsilon: DVector<f64>,
    pub nu: DVector<f64>,
    pub pi: DVector<f64>,
    pub tau: f64,
    pub value: f64,
    pub gap: f64,
    pub primal: f64,
}

impl DmixCertificate {
    /// Max residual of the Dmix equality constraint, with every
    /// `Theta_i . L_{ij}` recomputed from the stored matrices.
    pub fn residual(
        &self,
        components: &[MixComponent],
        alpha: &MixWeights,
        p: &Polytope,
    ) -> f64 {
        let n = p.n;
        let at_pi = match &p.side {
            Some(sc) => sc.a.transpose() * &self.pi,
            None => DVector::zeros(n),
        };
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let mut dj = 0.0;
            for (i, comp) in components.iter().enumerate() {
                let a = alpha.0[i];
                if a == 0.0 {
                    continue;
                }
                let lj = comp.l_j(j);
                dj += a * (&self.thetas[i]).dot(&lj);
            }
            worst = worst.max((dj + self.upsilon[j] - self.nu[j] - at_pi[j] - self.tau).abs());
        }
        worst
    }
}

/// Builds the per-component dual matrices at `x`, solves the mixed gap LP
/// with right-hand side `sum_i alpha_i Theta_i . L_{ij}` and constant
/// `sum_i alpha_i (rho_i - Theta_i . L_{i0})`, and assembles the certificate.
pub fn certify_mix(
    components: &[MixComponent],
    alpha: &MixWeights,
    p: &Polytope,
    x: &DVector<f64>,
) -> Result<DmixCertificate> {
    assert_eq!(components.len(), alpha.0.len());
    let n = p.n;
    let mut d = DVector::zeros(n);
    let mut constant = 0.0;
    let mut omega_sum = 0.0;
    let mut thetas = Vec::with_capacity(components.len());
    for (comp, &a) in components.iter().zip(&alpha.0) {
        if a == 0.0 {
            thetas.push(DMatrix::zeros(comp.k(), comp.k()));
            continue;
        }
        let dual = comp.dual(x)?;
        d += &dual.d * a;
        constant += a * (comp.rho() - dual.l0_dot);
        omega_sum += a * dual.omega;
        thetas.push(dual.theta);
    }
    let lp = gap_lp(&d, constant, p)?;
    let value = omega_sum + lp.objective;
    let primal = mix_objective(components, alpha, x);
    Ok(DmixCertificate {
        thetas,
        upsilon: lp.upsilon,
        nu: lp.nu,
        pi: lp.pi,
        tau: lp.tau,
        value,
        gap: value - primal,
        primal,
    })
}

/// Fixing from a mixed certificate (same margin rule as the single bounds).
pub fn fix_mix(cert: &DmixCertificate, lb: f64, threshold: f64) -> FixReport {
    fix_from_duals(cert.value, &cert.upsilon, &cert.nu, lb, threshold)
}

/// Golden-section search on the pair weight `alpha in [0, 1]` minimizing the
/// mixed bound `v(alpha)`, which is convex in `alpha`. Both endpoints are
/// evaluated, so the returned value never exceeds either single bound.
pub fn optimize_alpha(
    comp_a: MixComponent,
    comp_b: MixComponent,
    p: &Polytope,
    opts: &SolveOpts,
) -> Result<AlphaSearch> {
    let components = [comp_a, comp_b];
    let eval = |alpha: f64| -> Result<f64> {
        Ok(solve_mix(&components, &MixWeights::pair(alpha), p, opts)?.value)
    };
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut best = (1.0, eval(1.0)?);
    let v0 = eval(0.0)?;
    if v0 < best.1 {
        best = (0.0, v0);
    }
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let mut f1 = eval(c1)?;
    let mut f2 = eval(c2)?;
    let mut evals = 4;
    while (b - a) > 1e-3 && evals < 30 {
        if f1 <= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = eval(c1)?;
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = eval(c2)?;
        }
        evals += 1;
        let (al, v) = if f1 <= f2 { (c1, f1) } else { (c2, f2) };
        if v < best.1 {
            best = (al, v);
        }
    }
    let [comp_a, comp_b] = components;
    Ok(AlphaSearch { alpha: best.0, value: best.1, comp_a, comp_b })
}

/// Result of the pair-weight search; keeps the components so a certificate
/// can be produced at the chosen weight.
pub struct AlphaSearch {
    pub alpha: f64,
    pub value: f64,
    pub comp_a: MixComponent,
    pub comp_b: MixComponent,
}

impl AlphaSearch {
    /// Re-solves at the chosen weight and certifies.
    pub fn certify(&self, p: &Polytope, opts: &SolveOpts) -> Result<(PrimalResult, DmixCertificate)> {
        let components = [
            clone_component(&self.comp_a),
            clone_component(&self.comp_b),
        ];
        let alpha = MixWeights::pair(self.alpha);
        let primal = solve_mix(&components, &alpha, p, opts)?;
        let cert = certify_mix(&components, &alpha, p, &primal.x)?;
        Ok((primal, cert))
    }
}

fn clone_component(c: &MixComponent) -> MixComponent {
    match c {
        MixComponent::DdFact { fac } => MixComponent::DdFact { fac: fac.clone() },
        MixComponent::CompDdFact { fac, ldet_c } => {
            MixComponent::CompDdFact { fac: fac.clone(), ldet_c: *ldet_c }
        }
        MixComponent::Linx { c, gamma, s } => {
            MixComponent::Linx { c: c.clone(), gamma: *gamma, s: *s }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact_bound::{certify, solve_ddfact};
    use crate::instance::Instance;
    use crate::linalg::random_spd;
    use approx::assert_abs_diff_eq;

    fn inst(c: DMatrix<f64>, s: usize) -> Instance {
        Instance::new(c, s, None, "t").unwrap()
    }

    fn tight() -> SolveOpts {
        SolveOpts { tol: 1e-10, max_iter: 5000, ..Default::default() }
    }

    #[test]
    fn l_of_x_matches_affine_pieces() {
        let i = inst(random_spd(4, 3), 2);
        let x = DVector::from_row_slice(&[0.3, 0.9, 0.1, 0.7]);
        for comp in [
            MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap(),
            MixComponent::comp_ddfact(&i).unwrap(),
            MixComponent::linx(&i, 1.4),
        ] {
            let mut assembled = comp.l0();
            for j in 0..4 {
                assembled += comp.l_j(j) * x[j];
            }
            let direct = comp.l_of_x(&x);
            assert!(
                linalg::max_norm(&(assembled - direct)) < 1e-9,
                "affine pieces disagree for {}",
                comp.name()
            );
        }
    }

    #[test]
    fn weight_collapse_reproduces_single_objective() {
        let i = inst(random_spd(5, 7), 2);
        let x = DVector::from_row_slice(&[0.4, 0.4, 0.4, 0.4, 0.4]);
        let dd = MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap();
        let lx = MixComponent::linx(&i, 1.0);
        let direct = dd.objective(&x);
        let comps = [dd, lx];
        let v = mix_objective(&comps, &MixWeights::single(2, 0), &x);
        assert_abs_diff_eq!(v, direct, epsilon = 1e-14);
    }

    #[test]
    fn half_half_on_identity_is_zero() {
        let i = inst(DMatrix::identity(4, 4), 2);
        let comps = [
            MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap(),
            MixComponent::linx(&i, 1.0),
        ];
        let x = DVector::from_element(4, 0.5);
        assert_abs_diff_eq!(
            mix_objective(&comps, &MixWeights::pair(0.5), &x),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mix_gradient_matches_finite_differences() {
        let i = inst(random_spd(6, 21), 3);
        let comps = [
            MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap(),
            MixComponent::comp_ddfact(&i).unwrap(),
            MixComponent::linx(&i, 0.9),
        ];
        let alpha = MixWeights::new(vec![0.5, 0.2, 0.3]).unwrap();
        let x = DVector::from_row_slice(&[0.45, 0.55, 0.5, 0.6, 0.4, 0.5]);
        let (_, g, smooth) = mix_gradient(&comps, &alpha, &x).unwrap();
        assert!(smooth);
        let h = 1e-5;
        for j in 0..6 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (mix_objective(&comps, &alpha, &xp) - mix_objective(&comps, &alpha, &xm))
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()));
        }
    }

    #[test]
    fn single_ddfact_mix_reproduces_dedicated_certificate() {
        let i = inst(random_spd(6, 33), 3);
        let p = i.polytope();
        let fac = factorize(&i, FactorMethod::Spectral).unwrap();
        let r = solve_ddfact(&fac, &p, &tight()).unwrap();
        let dedicated = certify(&fac, &p, &r.x, 0.0).unwrap();
        let comps = [MixComponent::DdFact { fac }];
        let cert = certify_mix(&comps, &MixWeights::new(vec![1.0]).unwrap(), &p, &r.x).unwrap();
        assert_abs_diff_eq!(cert.value, dedicated.value, epsilon = 1e-9);
        assert_abs_diff_eq!(cert.gap, dedicated.gap, epsilon = 1e-9);
        for j in 0..6 {
            assert_abs_diff_eq!(cert.upsilon[j], dedicated.upsilon[j], epsilon = 1e-9);
            assert_abs_diff_eq!(cert.nu[j], dedicated.nu[j], epsilon = 1e-9);
        }
        assert!(cert.residual(&comps, &MixWeights::new(vec![1.0]).unwrap(), &p) <= 1e-8);
    }

    #[test]
    fn mixed_certificate_gap_small_at_optimum() {
        let i = inst(random_spd(6, 41), 3);
        let p = i.polytope();
        let comps = [
            MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap(),
            MixComponent::linx(&i, 1.0),
        ];
        let alpha = MixWeights::pair(0.5);
        let r = solve_mix(&comps, &alpha, &p, &tight()).unwrap();
        let cert = certify_mix(&comps, &alpha, &p, &r.x).unwrap();
        assert!(cert.gap.abs() <= 1e-6, "gap {}", cert.gap);
        assert!(cert.residual(&comps, &alpha, &p) <= 1e-8);
        let z = crate::exact::brute_force(&i).unwrap().z;
        assert!(cert.value >= z - 1e-8);
    }

    #[test]
    fn single_linx_mix_is_a_valid_bound() {
        let i = inst(random_spd(6, 55), 2);
        let p = i.polytope();
        let comps = [MixComponent::linx(&i, 1.0)];
        let alpha = MixWeights::new(vec![1.0]).unwrap();
        let r = solve_mix(&comps, &alpha, &p, &tight()).unwrap();
        let cert = certify_mix(&comps, &alpha, &p, &r.x).unwrap();
        let z = crate::exact::brute_force(&i).unwrap().z;
        assert!(cert.value >= z - 1e-8);
        assert!(cert.gap.abs() <= 1e-6);
    }

    #[test]
    fn fix_mix_single_component_matches_dedicated() {
        let i = inst(random_spd(7, 61), 3);
        let p = i.polytope();
        let fac = factorize(&i, FactorMethod::Spectral).unwrap();
        let r = solve_ddfact(&fac, &p, &tight()).unwrap();
        let dedicated = certify(&fac, &p, &r.x, 0.0).unwrap();
        let lb = crate::exact::brute_force(&i).unwrap().z;
        let direct_fix = crate::fact_bound::fix_variables(&dedicated, lb, 1e-10);
        let comps = [MixComponent::DdFact { fac }];
        let cert = certify_mix(&comps, &MixWeights::new(vec![1.0]).unwrap(), &p, &r.x).unwrap();
        let mixed_fix = fix_mix(&cert, lb, 1e-10);
        assert_eq!(direct_fix.fixed_zero, mixed_fix.fixed_zero);
        assert_eq!(direct_fix.fixed_one, mixed_fix.fixed_one);
    }

    #[test]
    fn alpha_search_beats_both_endpoints() {
        let i = inst(random_spd(7, 71), 3);
        let p = i.polytope();
        let opts = SolveOpts { tol: 1e-9, ..Default::default() };
        let dd = MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap();
        let lx = MixComponent::linx(&i, 1.0);
        let v_dd = solve_mix(
            &[clone_component(&dd), clone_component(&lx)],
            &MixWeights::pair(1.0),
            &p,
            &opts,
        )
        .unwrap()
        .value;
        let v_lx = solve_mix(
            &[clone_component(&dd), clone_component(&lx)],
            &MixWeights::pair(0.0),
            &p,
            &opts,
        )
        .unwrap()
        .value;
        let search = optimize_alpha(dd, lx, &p, &opts).unwrap();
        assert!(search.value <= v_dd.min(v_lx) + 1e-6);
    }

    #[test]
    fn value_is_convex_in_alpha() {
        let i = inst(random_spd(6, 83), 3);
        let p = i.polytope();
        let comps = [
            MixComponent::ddfact(&i, FactorMethod::Spectral).unwrap(),
            MixComponent::linx(&i, 1.0),
        ];
        let opts = tight();
        let v = |al: f64| solve_mix(&comps, &MixWeights::pair(al), &p, &opts).unwrap().value;
        let (v25, v50, v75) = (v(0.25), v(0.5), v(0.75));
        assert!(v50 <= 0.5 * (v25 + v75) + 1e-8);
    }
}
