//! The factorization bound: the concave spectral objective `Gamma_s`, its
//! gradient, an away-step Frank-Wolfe solver, the closed-form dual matrix
//! construction, duality-gap certification, variable fixing, the spectral
//! bound it dominates, and the complementary-problem wrapper.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::{factorize, FactorMethod, Factorization, Instance};
use crate::linalg::SortedEigen;
use crate::polytope::{gap_lp, Polytope};
use crate::solver::{frank_wolfe, ConcaveObjective, PrimalResult, SolveOpts};

/// Eigenvalues of `F(x)` below `EIG_CLAMP_REL * lambda_1` count as zero.
const EIG_CLAMP_REL: f64 = 1e-12;

/// Default threshold for the fixing rules.
pub const FIX_THRESHOLD: f64 = 1e-10;

/// The unique spectral split of Lemma-13 type: `iota` in `[0, s)` and the
/// averaged tail `delta = (1/(s-iota)) * sum_{l > iota} lambda_l` with
/// `lambda_iota > delta >= lambda_{iota+1}`.
#[derive(Debug, Clone, Copy)]
pub struct IotaResult {
    pub iota: usize,
    pub delta: f64,
}

/// Scans `iota = 0, 1, ..., s-1` for the split point. `lambda` must be
/// nonincreasing and nonnegative with a positive total. The comparison
/// `delta >= lambda_{iota+1}` carries a relative slack: when the tail is
/// uniform the two sides are equal in exact arithmetic and rounding may land
/// on either side.
pub fn iota(lambda: &[f64], s: usize) -> Result<IotaResult> {
    let k = lambda.len();
    assert!(s >= 1 && s <= k, "need 0 < s <= k");
    let lmax = lambda.first().copied().unwrap_or(0.0).max(0.0);
    let tol = EIG_CLAMP_REL * lmax;
    let mut suffix = vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + lambda[i];
    }
    for i in 0..s {
        let head = if i == 0 { f64::INFINITY } else { lambda[i - 1] };
        let delta = suffix[i] / (s - i) as f64;
        let next = lambda[i];
        if head > delta && delta >= next - tol {
            return Ok(IotaResult { iota: i, delta });
        }
    }
    Err(Error::IotaNotFound)
}

/// `phi_s` of a nonincreasing spectrum: the log-determinant surrogate
/// `sum_{l <= iota} log lambda_l + (s - iota) log delta`, or `-inf` when
/// fewer than `s` eigenvalues are numerically positive.
pub fn gamma_s_from_spectrum(lambda: &[f64], s: usize) -> f64 {
    let lmax = lambda.first().copied().unwrap_or(0.0).max(0.0);
    if lmax <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let clamp = EIG_CLAMP_REL * lmax;
    let rank = lambda.iter().filter(|&&v| v > clamp).count();
    if rank < s {
        return f64::NEG_INFINITY;
    }
    let clamped: Vec<f64> = lambda.iter().map(|&v| v.max(0.0)).collect();
    match iota(&clamped, s) {
        Ok(r) => {
            let head: f64 = clamped[..r.iota].iter().map(|v| v.ln()).sum();
            head + (s - r.iota) as f64 * r.delta.ln()
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// `Gamma_s(X)`: `phi_s` applied to the sorted eigenvalues of `X`.
pub fn gamma_s(x_mat: &DMatrix<f64>, s: usize) -> f64 {
    let se = SortedEigen::new(x_mat);
    gamma_s_from_spectrum(se.values.as_slice(), s)
}

/// Spectral data of `F(x)` shared by the gradient and the dual construction.
struct FxSpectrum {
    eigen: SortedEigen,
    split: IotaResult,
    /// numerical rank of F(x)
    r_hat: usize,
}

fn fx_spectrum(fac: &Factorization, x: &DVector<f64>) -> Result<FxSpectrum> {
    let fx = fac.f_of_x(x);
    let eigen = SortedEigen::new(&fx);
    let s = fac.s();
    let r_hat = eigen.rank(EIG_CLAMP_REL);
    if r_hat < s {
        return Err(Error::RankDeficient { rank: r_hat, s });
    }
    let clamped: Vec<f64> = eigen.values.iter().map(|&v| v.max(0.0)).collect();
    let split = iota(&clamped, s)?;
    Ok(FxSpectrum { eigen, split, r_hat })
}

/// Gradient (a subgradient at kinks) of `x -> Gamma_s(F(x))`:
/// `g_j = sum_{l <= iota} (F_j u_l)^2 / lambda_l + sum_{l > iota} (F_j u_l)^2 / delta`.
/// The boolean is true when the strict smoothness condition
/// `delta > lambda_{iota+1}` holds up to rounding.
pub fn gamma_s_gradient(fac: &Factorization, x: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let sp = fx_spectrum(fac, x)?;
    let weights: Vec<f64> = (0..fac.k)
        .map(|l| {
            if l < sp.split.iota {
                1.0 / sp.eigen.values[l]
            } else {
                1.0 / sp.split.delta
            }
        })
        .collect();
    let g = weighted_diag(fac, &sp.eigen.vectors, &weights);
    let lmax = sp.eigen.values[0].max(0.0);
    let next = sp.eigen.values[sp.split.iota].max(0.0);
    let smooth = sp.split.delta > next + EIG_CLAMP_REL * lmax;
    Ok((g, smooth))
}

/// `diag(F U diag(w) U^T F^T)` computed row-wise: entry `j` is
/// `sum_l w_l (F_j. u_l)^2`.
fn weighted_diag(fac: &Factorization, u: &DMatrix<f64>, w: &[f64]) -> DVector<f64> {
    let fu = &fac.f * u;
    DVector::from_fn(fac.n(), |j, _| {
        let mut acc = 0.0;
        for l in 0..fac.k {
            acc += w[l] * fu[(j, l)] * fu[(j, l)];
        }
        acc
    })
}

struct DdfactObjective<'a> {
    fac: &'a Factorization,
}

impl ConcaveObjective for DdfactObjective<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        gamma_s(&self.fac.f_of_x(x), self.fac.s())
    }

    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)> {
        let sp = fx_spectrum(self.fac, x)?;
        let s = self.fac.s();
        let head: f64 =
            sp.eigen.values.iter().take(sp.split.iota).map(|v| v.ln()).sum();
        let val = head + (s - sp.split.iota) as f64 * sp.split.delta.ln();
        let weights: Vec<f64> = (0..self.fac.k)
            .map(|l| {
                if l < sp.split.iota {
                    1.0 / sp.eigen.values[l]
                } else {
                    1.0 / sp.split.delta
                }
            })
            .collect();
        let g = weighted_diag(self.fac, &sp.eigen.vectors, &weights);
        let lmax = sp.eigen.values[0].max(0.0);
        let next = sp.eigen.values[sp.split.iota].max(0.0);
        Ok((val, g, sp.split.delta > next + EIG_CLAMP_REL * lmax))
    }
}

/// Maximizes `Gamma_s(F(x))` over the polytope by away-step Frank-Wolfe.
pub fn solve_ddfact(fac: &Factorization, p: &Polytope, opts: &SolveOpts) -> Result<PrimalResult> {
    frank_wolfe(&DdfactObjective { fac }, p, opts)
}

/// The closed-form dual construction at `x`: eigenvectors of `F(x)` with
/// inverse eigenvalues `1/lambda_l` up to `iota`, `1/delta` through the rank,
/// and `(1+eps)/delta` on the null space.
pub struct DualTheta {
    pub theta: DMatrix<f64>,
    /// eigenvalues of theta matched to the eigenvector order of `F(x)`
    pub beta: Vec<f64>,
    /// `diag(F Theta F^T)`
    pub d: DVector<f64>,
    /// `-sum of the s smallest log-eigenvalues of Theta`, which telescopes
    /// to `Gamma_s(F(x))` exactly in exact arithmetic
    pub log_term: f64,
}

pub fn dual_theta(fac: &Factorization, x: &DVector<f64>, eps: f64) -> Result<DualTheta> {
    assert!(eps >= 0.0, "eps must be nonnegative");
    let sp = fx_spectrum(fac, x)?;
    let s = fac.s();
    let beta: Vec<f64> = (0..fac.k)
        .map(|l| {
            if l < sp.split.iota {
                1.0 / sp.eigen.values[l]
            } else if l < sp.r_hat {
                1.0 / sp.split.delta
            } else {
                (1.0 + eps) / sp.split.delta
            }
        })
        .collect();
    let mut theta = DMatrix::zeros(fac.k, fac.k);
    for l in 0..fac.k {
        let u = sp.eigen.vectors.column(l);
        for a in 0..fac.k {
            let ua = beta[l] * u[a];
            for b in 0..fac.k {
                theta[(a, b)] += ua * u[b];
            }
        }
    }
    let d = weighted_diag(fac, &sp.eigen.vectors, &beta);
    // the s smallest eigenvalues of theta are 1/lambda_l (l <= iota) plus
    // (s - iota) copies of 1/delta
    let head: f64 = sp.eigen.values.iter().take(sp.split.iota).map(|v| v.ln()).sum();
    let log_term = head + (s - sp.split.iota) as f64 * sp.split.delta.ln();
    Ok(DualTheta { theta, beta, d, log_term })
}

/// Convenience wrapper returning just the dual matrix.
pub fn build_dual_theta(fac: &Factorization, x: &DVector<f64>, eps: f64) -> Result<DMatrix<f64>> {
    Ok(dual_theta(fac, x, eps)?.theta)
}

/// A dual-feasible certificate for the factorization bound: the certified
/// value is an upper bound on the problem regardless of how accurately the
/// primal relaxation was solved.
#[derive(Debug, Clone)]
pub struct DFactCertificate {
    pub theta: DMatrix<f64>,
    pub upsilon: DVector<f64>,
    pub nu: DVector<f64>,
    pub pi: DVector<f64>,
    pub tau: f64,
    /// certified upper bound
    pub value: f64,
    /// `value - Gamma_s(F(x))` at the certified point
    pub gap: f64,
    /// primal objective at the certified point
    pub primal: f64,
}

impl DFactCertificate {
    /// Max residual of `diag(F Theta F^T) + upsilon - nu - A^T pi - tau e = 0`,
    /// with the diagonal recomputed from the stored matrix.
    pub fn residual(&self, fac: &Factorization, p: &Polytope) -> f64 {
        let ftf = &fac.f * &self.theta * fac.f.transpose();
        let d = DVector::from_fn(fac.n(), |j, _| ftf[(j, j)]);
        let at_pi = match &p.side {
            Some(sc) => sc.a.transpose() * &self.pi,
            None => DVector::zeros(fac.n()),
        };
        let mut r: f64 = 0.0;
        for j in 0..fac.n() {
            r = r.max((d[j] + self.upsilon[j] - self.nu[j] - at_pi[j] - self.tau).abs());
        }
        r
    }
}

/// Builds the dual matrix at `x` (default `eps = 0`), completes it through
/// the gap LP, and assembles the certificate.
pub fn certify(
    fac: &Factorization,
    p: &Polytope,
    x: &DVector<f64>,
    eps: f64,
) -> Result<DFactCertificate> {
    let dual = dual_theta(fac, x, eps)?;
    let lp = gap_lp(&dual.d, fac.s() as f64, p)?;
    let value = dual.log_term + lp.objective;
    let primal = gamma_s(&fac.f_of_x(x), fac.s());
    Ok(DFactCertificate {
        theta: dual.theta,
        upsilon: lp.upsilon,
        nu: lp.nu,
        pi: lp.pi,
        tau: lp.tau,
        value,
        gap: value - primal,
        primal,
    })
}

/// Index sets fixed at 0/1 by the dual margins, with the margin
/// `dual_j - (bound - LB)` recorded per index (positive means fixed).
#[derive(Debug, Clone, Default)]
pub struct FixReport {
    pub fixed_zero: Vec<usize>,
    pub fixed_one: Vec<usize>,
    pub margins: Vec<f64>,
}

impl FixReport {
    pub fn total(&self) -> usize {
        self.fixed_zero.len() + self.fixed_one.len()
    }

    /// Complement semantics: fixing the complement's variable to 0 fixes the
    /// original to 1 and vice versa.
    pub fn swapped(mut self) -> Self {
        std::mem::swap(&mut self.fixed_zero, &mut self.fixed_one);
        self
    }
}

/// The fixing rule: with `LB` the value of a feasible solution and `zeta` a
/// dual-feasible bound value, index `j` is fixed to 0 when
/// `upsilon_j - (zeta - LB) > threshold` and to 1 when
/// `nu_j - (zeta - LB) > threshold`.
pub fn fix_from_duals(
    zeta: f64,
    upsilon: &DVector<f64>,
    nu: &DVector<f64>,
    lb: f64,
    threshold: f64,
) -> FixReport {
    let gap = zeta - lb;
    let n = upsilon.len();
    let mut report = FixReport { margins: vec![0.0; n], ..Default::default() };
    if !gap.is_finite() {
        return report;
    }
    for j in 0..n {
        let m0 = upsilon[j] - gap;
        let m1 = nu[j] - gap;
        report.margins[j] = m0.max(m1);
        if m0 > threshold {
            report.fixed_zero.push(j);
        } else if m1 > threshold {
            report.fixed_one.push(j);
        }
        debug_assert!(
            !(m0 > threshold && m1 > threshold),
            "contradictory fixing margins at index {j}"
        );
    }
    report
}

/// Fixing from a factorization-bound certificate.
pub fn fix_variables(cert: &DFactCertificate, lb: f64, threshold: f64) -> FixReport {
    fix_from_duals(cert.value, &cert.upsilon, &cert.nu, lb, threshold)
}

/// Sum of the logs of the `s` greatest eigenvalues of `C`. The factorization
/// bound never exceeds it.
pub fn spectral_bound(c: &DMatrix<f64>, s: usize) -> Result<f64> {
    let se = SortedEigen::new(c);
    if se.values[s - 1] <= 0.0 {
        return Err(Error::RankDeficient { rank: se.rank(EIG_CLAMP_REL), s });
    }
    Ok(se.values.iter().take(s).map(|v| v.ln()).sum())
}

/// Result of running the factorization bound on the complementary problem.
#[derive(Debug)]
pub struct CompDdfact {
    /// primal iterate for the complement instance
    pub primal: PrimalResult,
    /// certificate for the complement instance
    pub cert: DFactCertificate,
    /// `ldet C`, the complement offset
    pub ldet_c: f64,
    /// certified upper bound on the original problem
    pub bound: f64,
    pub comp_instance: Instance,
}

impl CompDdfact {
    /// Fixing mapped back to the original problem (0 and 1 swapped).
    pub fn fix(&self, lb_original: f64, threshold: f64) -> FixReport {
        fix_from_duals(
            self.cert.value,
            &self.cert.upsilon,
            &self.cert.nu,
            lb_original - self.ldet_c,
            threshold,
        )
        .swapped()
    }
}

/// Solves DDFact on the complementary instance `(C^{-1}, n-s)` and shifts the
/// certified value back by `ldet C`.
pub fn comp_ddfact(inst: &Instance, method: FactorMethod, opts: &SolveOpts) -> Result<CompDdfact> {
    let (comp, ldet_c) = inst.complement()?;
    let fac = factorize(&comp, method)?;
    let p = comp.polytope();
    let primal = solve_ddfact(&fac, &p, opts)?;
    let cert = certify(&fac, &p, &primal.x, 0.0)?;
    let bound = cert.value + ldet_c;
    Ok(CompDdfact { primal, cert, ldet_c, bound, comp_instance: comp })
}
