//! The scaled linx relaxation: maximize
//! `1/2 (ldet K_gamma(x) - s log gamma)` with
//! `K_gamma(x) = gamma C Diag(x) C + Diag(e - x)` over the polytope.
//! Smooth everywhere on its domain, so the Frank-Wolfe line search can use
//! exact directional first and second derivatives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::polytope::Polytope;
use crate::solver::{frank_wolfe, ConcaveObjective, PrimalResult, SolveOpts};

/// Parameters of a linx solve.
#[derive(Debug, Clone, Copy)]
pub struct LinxParams {
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinxParams {
    fn default() -> Self {
        LinxParams { gamma: 1.0, tol: 1e-8, max_iter: 2000 }
    }
}

impl LinxParams {
    pub fn with_gamma(gamma: f64) -> Self {
        assert!(gamma > 0.0);
        LinxParams { gamma, ..Default::default() }
    }

    fn solve_opts(&self) -> SolveOpts {
        SolveOpts { tol: self.tol, max_iter: self.max_iter, ..Default::default() }
    }
}

/// `K_gamma(x)`.
pub fn k_matrix(c: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        if x[j] == 0.0 {
            continue;
        }
        let col = c.column(j);
        let w = gamma * x[j];
        for a in 0..n {
            let fa = w * col[a];
            if fa == 0.0 {
                continue;
            }
            for b in 0..n {
                k[(a, b)] += fa * col[b];
            }
        }
    }
    for j in 0..n {
        k[(j, j)] += 1.0 - x[j];
    }
    k
}

fn chol_k(c: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> Option<Cholesky<f64, Dyn>> {
    k_matrix(c, gamma, x).cholesky()
}

/// `1/2 (ldet K_gamma(x) - s log gamma)`; `-inf` when `K` is singular.
pub fn linx_objective(c: &DMatrix<f64>, gamma: f64, s: usize, x: &DVector<f64>) -> f64 {
    match chol_k(c, gamma, x) {
        Some(ch) => {
            let l = ch.l();
            let ld: f64 = (0..l.nrows()).map(|i| l[(i, i)].ln()).sum();
            0.5 * (2.0 * ld - s as f64 * gamma.ln())
        }
        None => f64::NEG_INFINITY,
    }
}

/// Gradient `1/2 (diag(gamma C K^{-1} C) - diag(K^{-1}))`.
pub fn linx_gradient(c: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    let ch = chol_k(c, gamma, x).ok_or(Error::Singular)?;
    let kinv = ch.inverse();
    let n = c.nrows();
    let kinv_c = &kinv * c;
    Ok(DVector::from_fn(n, |j, _| {
        let mut ckc = 0.0;
        for i in 0..n {
            ckc += c[(j, i)] * kinv_c[(i, j)];
        }
        0.5 * (gamma * ckc - kinv[(j, j)])
    }))
}

/// Hessian
/// `1/2 (-gamma^2 (C K^{-1} C) o (C K^{-1} C) + gamma (M o M + (M o M)^T) - K^{-1} o K^{-1})`
/// with `M = K^{-1} C`; symmetric and negative semidefinite on the domain.
pub fn linx_hessian(c: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let ch = chol_k(c, gamma, x).ok_or(Error::Singular)?;
    let kinv = ch.inverse();
    let n = c.nrows();
    let m = &kinv * c;
    let ckc = c * &m; // C K^{-1} C
    Ok(DMatrix::from_fn(n, n, |i, j| {
        0.5 * (-gamma * gamma * ckc[(i, j)] * ckc[(i, j)]
            + gamma * (m[(i, j)] * m[(i, j)] + m[(j, i)] * m[(j, i)])
            - kinv[(i, j)] * kinv[(i, j)])
    }))
}

struct LinxObjective<'a> {
    c: &'a DMatrix<f64>,
    gamma: f64,
    s: usize,
}

impl LinxObjective<'_> {
    /// First and second derivative of `t -> 1/2 ldet K(x + t d)` via
    /// `h'(t) = 1/2 tr(K^{-1} dK)`, `h''(t) = -1/2 tr(K^{-1} dK K^{-1} dK)`
    /// where `dK = gamma C Diag(d) C - Diag(d)`.
    fn line_derivs(&self, x: &DVector<f64>, d: &DVector<f64>, t: f64) -> Option<(f64, f64)> {
        let xt = x + d * t;
        let ch = chol_k(self.c, self.gamma, &xt)?;
        let kinv = ch.inverse();
        let n = self.c.nrows();
        let mut dk = DMatrix::zeros(n, n);
        for j in 0..n {
            if d[j] == 0.0 {
                continue;
            }
            let col = self.c.column(j);
            let w = self.gamma * d[j];
            for a in 0..n {
                let fa = w * col[a];
                for b in 0..n {
                    dk[(a, b)] += fa * col[b];
                }
            }
            dk[(j, j)] -= d[j];
        }
        let kd = &kinv * &dk;
        let h1 = 0.5 * kd.trace();
        let mut tr2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr2 += kd[(i, j)] * kd[(j, i)];
            }
        }
        Some((h1, -0.5 * tr2))
    }
}

impl ConcaveObjective for LinxObjective<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        linx_objective(self.c, self.gamma, self.s, x)
    }

    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)> {
        let v = self.value(x);
        if !v.is_finite() {
            return Err(Error::Singular);
        }
        Ok((v, linx_gradient(self.c, self.gamma, x)?, true))
    }

    /// Safeguarded Newton on the concave 1-d slice; falls back to bisection
    /// whenever an iterate leaves the bracket.
    fn line_search(&self, x: &DVector<f64>, d: &DVector<f64>, t_max: f64) -> f64 {
        let Some((d0, _)) = self.line_derivs(x, d, 0.0) else { return 0.0 };
        if d0 <= 0.0 {
            return 0.0;
        }
        match self.line_derivs(x, d, t_max) {
            Some((dmax, _)) if dmax >= 0.0 => return t_max,
            None => {
                // K singular at the far end: shrink into the domain first
                let mut hi = t_max;
                for _ in 0..60 {
                    hi *= 0.5;
                    if self.line_derivs(x, d, hi).is_some() {
                        break;
                    }
                }
                return crate::solver::golden_section_max(
                    |t| self.value(&(x + d * t)),
                    hi,
                    40,
                )
                .0;
            }
            _ => {}
        }
        let (mut lo, mut hi) = (0.0f64, t_max);
        let mut t = 0.5 * t_max;
        for _ in 0..40 {
            let Some((h1, h2)) = self.line_derivs(x, d, t) else {
                hi = t;
                t = 0.5 * (lo + hi);
                continue;
            };
            if h1.abs() <= 1e-13 * (1.0 + d0) {
                return t;
            }
            if h1 > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = if h2 < 0.0 { t - h1 / h2 } else { f64::NAN };
            t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-14 * t_max.max(1.0) {
                return t;
            }
        }
        t
    }
}

/// Maximizes the linx objective over `P` by away-step Frank-Wolfe with the
/// Newton-accelerated line search.
pub fn solve_linx(inst: &Instance, params: &LinxParams, p: &Polytope) -> Result<PrimalResult> {
    assert!(params.gamma > 0.0);
    let obj = LinxObjective { c: inst.c(), gamma: params.gamma, s: inst.s() };
    frank_wolfe(&obj, p, &params.solve_opts())
}

/// Golden-section search on `log gamma` minimizing the linx bound, which is
/// convex in `log gamma`. Returns the best scale factor and its bound value.
pub fn optimize_gamma(
    inst: &Instance,
    p: &Polytope,
    bracket: (f64, f64),
    params: &LinxParams,
) -> Result<(f64, f64)> {
    assert!(bracket.0 > 0.0 && bracket.1 > bracket.0);
    let eval = |lg: f64| -> Result<f64> {
        let params = LinxParams { gamma: lg.exp(), ..*params };
        Ok(solve_linx(inst, &params, p)?.value)
    };
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (bracket.0.ln(), bracket.1.ln());
    let mut best = (a, eval(a)?);
    for (lg, v) in [(b, eval(b)?)] {
        if v < best.1 {
            best = (lg, v);
        }
    }
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let mut f1 = eval(c1)?;
    let mut f2 = eval(c2)?;
    let mut evals = 4;
    while (b - a) > 1e-4 && evals < 60 {
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
        let (lg, v) = if f1 <= f2 { (c1, f1) } else { (c2, f2) };
        if v < best.1 {
            best = (lg, v);
        }
    }
    Ok((best.0.exp(), best.1))
}

/// The dual matrix for linx: `Theta = 1/2 K_gamma(x)^{-1}`, which attains
/// `Omega(Theta) = -1/2 (ldet(2 Theta) + s log gamma)` equal to the linx
/// objective at `x`.
pub fn linx_dual_theta(c: &DMatrix<f64>, gamma: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let ch = chol_k(c, gamma, x).ok_or(Error::Singular)?;
    Ok(0.5 * ch.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::linalg::random_spd;
    use approx::assert_abs_diff_eq;

    fn inst(c: DMatrix<f64>, s: usize) -> Instance {
        Instance::new(c, s, None, "t").unwrap()
    }

    #[test]
    fn objective_identity_and_two_by_two() {
        let c = DMatrix::identity(4, 4);
        let x = DVector::from_row_slice(&[1.0, 0.5, 0.5, 0.0]);
        assert_abs_diff_eq!(linx_objective(&c, 1.0, 2, &x), 0.0, epsilon = 1e-12);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = DVector::from_row_slice(&[1.0, 0.0]);
        assert_abs_diff_eq!(linx_objective(&c, 1.0, 1, &x), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gradient_zero_for_identity() {
        let c = DMatrix::identity(3, 3);
        let x = DVector::from_row_slice(&[0.3, 0.9, 0.8]);
        let g = linx_gradient(&c, 1.0, &x).unwrap();
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = random_spd(6, 4);
        let x = DVector::from_row_slice(&[0.4, 0.6, 0.5, 0.3, 0.7, 0.5]);
        let g = linx_gradient(&c, 1.3, &x).unwrap();
        let h = 1e-5;
        for j in 0..6 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd =
                (linx_objective(&c, 1.3, 3, &xp) - linx_objective(&c, 1.3, 3, &xm)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()));
        }
    }

    #[test]
    fn gradient_permutation_equivariance() {
        let c = random_spd(5, 8);
        let x = DVector::from_row_slice(&[0.2, 0.8, 0.5, 0.6, 0.4]);
        let g = linx_gradient(&c, 2.0, &x).unwrap();
        // swap indices 1 and 3
        let perm = [0usize, 3, 2, 1, 4];
        let cp = DMatrix::from_fn(5, 5, |i, j| c[(perm[i], perm[j])]);
        let xp = DVector::from_fn(5, |i, _| x[perm[i]]);
        let gp = linx_gradient(&cp, 2.0, &xp).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(gp[i], g[perm[i]], epsilon = 1e-10);
        }
    }

    #[test]
    fn hessian_symmetric_fd_and_concave() {
        let c = random_spd(4, 6);
        let x = DVector::from_row_slice(&[0.5, 0.4, 0.6, 0.5]);
        let gamma = 0.8;
        let hmat = linx_hessian(&c, gamma, &x).unwrap();
        assert!(crate::linalg::max_norm(&(&hmat - hmat.transpose())) <= 1e-10);
        let h = 1e-5;
        for i in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let gp = linx_gradient(&c, gamma, &xp).unwrap();
            let gm = linx_gradient(&c, gamma, &xm).unwrap();
            for j in 0..4 {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                assert!(
                    (fd - hmat[(i, j)]).abs() <= 1e-6,
                    "H[{i}{j}] fd {fd} vs {}",
                    hmat[(i, j)]
                );
            }
        }
        // negative semidefinite: quadratic form nonpositive
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            assert!(v.dot(&(&hmat * &v)) <= 1e-9);
        }
    }

    #[test]
    fn solve_identity_zero() {
        let i = inst(DMatrix::identity(5, 5), 2);
        let r = solve_linx(&i, &LinxParams::default(), &i.polytope()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn solve_two_by_two_bounds_z() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let i = inst(c.clone(), 1);
        let r = solve_linx(&i, &LinxParams::default(), &i.polytope()).unwrap();
        // 1-d scan over x = (t, 1-t) confirms the optimum exceeds z = log 2
        let mut scan_best = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let x = DVector::from_row_slice(&[t, 1.0 - t]);
            scan_best = scan_best.max(linx_objective(&c, 1.0, 1, &x));
        }
        assert!(r.value >= 2.0f64.ln() - 1e-9);
        assert!(r.value >= scan_best - 1e-7);
    }

    #[test]
    fn solve_invariant_under_permutation() {
        let c = random_spd(8, 15);
        let i = inst(c.clone(), 4);
        let r = solve_linx(&i, &LinxParams::default(), &i.polytope()).unwrap();
        let perm: Vec<usize> = vec![3, 1, 7, 0, 5, 2, 6, 4];
        let cp = DMatrix::from_fn(8, 8, |a, b| c[(perm[a], perm[b])]);
        let ip = inst(cp, 4);
        let rp = solve_linx(&ip, &LinxParams::default(), &ip.polytope()).unwrap();
        assert_abs_diff_eq!(r.value, rp.value, epsilon = 1e-6);
    }

    #[test]
    fn gamma_search_identity_returns_zero() {
        let i = inst(DMatrix::identity(4, 4), 2);
        let (_, v) = optimize_gamma(&i, &i.polytope(), (1e-6, 1e6), &LinxParams::default()).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn gamma_profile_unimodal_and_scale_absorbed() {
        let c = random_spd(6, 10);
        let i = inst(c.clone(), 3);
        let p = i.polytope();
        // coarse scan of the profile: differences change sign at most once
        let mut vals = Vec::new();
        for k in -6..=6 {
            let g = (k as f64 * 0.5).exp();
            vals.push(solve_linx(&i, &LinxParams::with_gamma(g), &p).unwrap().value);
        }
        let mut increases = 0;
        let mut after_min = false;
        for w in vals.windows(2) {
            if w[1] > w[0] + 1e-7 {
                after_min = true;
            } else if after_min && w[1] < w[0] - 1e-7 {
                increases += 1;
            }
        }
        assert_eq!(increases, 0, "profile not unimodal: {vals:?}");
        // optimizing gamma on 3C and on C gives the same optimal value
        let (_, v1) = optimize_gamma(&i, &p, (1e-6, 1e6), &LinxParams::default()).unwrap();
        let i3 = inst(3.0 * &c, 3);
        let (_, v3) = optimize_gamma(&i3, &p, (1e-6, 1e6), &LinxParams::default()).unwrap();
        // scaled problem shifts by s log 3
        assert_abs_diff_eq!(v3 - 3.0 * 3.0f64.ln(), v1, epsilon = 1e-5);
    }

    #[test]
    fn dual_theta_identity_and_omega() {
        let c = DMatrix::identity(3, 3);
        let x = DVector::from_row_slice(&[0.4, 0.8, 0.8]);
        let th = linx_dual_theta(&c, 1.0, &x).unwrap();
        assert!(crate::linalg::max_norm(&(&th - DMatrix::identity(3, 3) * 0.5)) < 1e-12);
        // Omega(theta) = -1/2 (ldet(2 theta) + s log gamma) equals the objective
        let c = random_spd(5, 19);
        let gamma = 1.7;
        let x = DVector::from_row_slice(&[0.3, 0.7, 0.4, 0.5, 0.1]);
        let th = linx_dual_theta(&c, gamma, &x).unwrap();
        let omega = -0.5
            * (crate::linalg::ldet_spd(&(2.0 * &th)).unwrap() + 2.0 * gamma.ln());
        assert_abs_diff_eq!(omega, linx_objective(&c, gamma, 2, &x), epsilon = 1e-9);
    }
}
