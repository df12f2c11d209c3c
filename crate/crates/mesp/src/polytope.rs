//! The feasible region `P = {x : e^T x = s, Ax <= b, 0 <= x <= e}`, a linear
//! optimization oracle over it, start-point finding, and the duality-gap LP
//! used to complete a dual matrix into a certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::instance::SideConstraints;
use crate::simplex;

/// Feasible region of the continuous relaxations.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub n: usize,
    pub s: usize,
    pub side: Option<SideConstraints>,
}

impl Polytope {
    pub fn new(n: usize, s: usize, side: Option<SideConstraints>) -> Self {
        assert!(s > 0 && s < n);
        Polytope { n, s, side }
    }

    pub fn m(&self) -> usize {
        self.side.as_ref().map_or(0, |sc| sc.m())
    }

    /// Max constraint violation of `x` (0 when feasible).
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let mut v = (x.sum() - self.s as f64).abs();
        for &xi in x.iter() {
            v = v.max(-xi).max(xi - 1.0);
        }
        if let Some(sc) = &self.side {
            let r = &sc.a * x - &sc.b;
            for &ri in r.iter() {
                v = v.max(ri);
            }
        }
        v
    }
}

/// Optimal completion `(upsilon, nu, pi, tau)` of a dual matrix into a
/// feasible certificate, i.e. the solution of
/// `min nu^T e + pi^T b + tau s - constant` subject to
/// `upsilon - nu - A^T pi - tau e = -d`, `upsilon, nu, pi >= 0`.
#[derive(Debug, Clone)]
pub struct GapLpSolution {
    pub upsilon: DVector<f64>,
    pub nu: DVector<f64>,
    pub pi: DVector<f64>,
    pub tau: f64,
    pub objective: f64,
}

impl GapLpSolution {
    /// Max residual of the equality constraint for right-hand side `d`.
    pub fn residual(&self, d: &DVector<f64>, side: Option<&SideConstraints>) -> f64 {
        let n = d.len();
        let at_pi = match side {
            Some(sc) => sc.a.transpose() * &self.pi,
            None => DVector::zeros(n),
        };
        let mut r = 0.0f64;
        for j in 0..n {
            r = r.max((self.upsilon[j] - self.nu[j] - at_pi[j] - self.tau + d[j]).abs());
        }
        r
    }
}

/// Maximizes `c^T x` over `P`. Without side constraints this is the support
/// vector of the `s` greatest entries of `c` (ties to the lowest index);
/// otherwise a dense-simplex LP. The returned point is always a vertex.
pub fn linear_oracle(c: &DVector<f64>, p: &Polytope) -> Result<(DVector<f64>, f64)> {
    assert_eq!(c.len(), p.n);
    match &p.side {
        None => {
            let idx = top_s_indices(c, p.s);
            let mut x = DVector::zeros(p.n);
            let mut val = 0.0;
            for &j in &idx {
                x[j] = 1.0;
                val += c[j];
            }
            Ok((x, val))
        }
        Some(sc) => {
            // vars: x (n), w (m slack of Ax <= b), u (n slack of x <= e)
            let n = p.n;
            let m = sc.m();
            let cols = 2 * n + m;
            let rows = 1 + m + n;
            let mut mat = DMatrix::zeros(rows, cols);
            let mut rhs = DVector::zeros(rows);
            for j in 0..n {
                mat[(0, j)] = 1.0;
            }
            rhs[0] = p.s as f64;
            for i in 0..m {
                for j in 0..n {
                    mat[(1 + i, j)] = sc.a[(i, j)];
                }
                mat[(1 + i, n + i)] = 1.0;
                rhs[1 + i] = sc.b[i];
            }
            for j in 0..n {
                mat[(1 + m + j, j)] = 1.0;
                mat[(1 + m + j, n + m + j)] = 1.0;
                rhs[1 + m + j] = 1.0;
            }
            let mut cost = DVector::zeros(cols);
            for j in 0..n {
                cost[j] = -c[j];
            }
            let sol = simplex::solve_standard_form(&mat, &rhs, &cost)?;
            let x = DVector::from_fn(n, |j, _| sol.y[j].clamp(0.0, 1.0));
            let val = c.dot(&x);
            Ok((x, val))
        }
    }
}

/// Indices of the `s` greatest entries of `c`, ties to the lowest index.
pub fn top_s_indices(c: &DVector<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| c[b].partial_cmp(&c[a]).unwrap().then(a.cmp(&b)));
    let mut chosen: Vec<usize> = idx.into_iter().take(s).collect();
    chosen.sort_unstable();
    chosen
}

/// Solves the duality-gap LP for right-hand side `d` and objective constant
/// `constant`. With no side constraints the closed form applies: `tau` is the
/// s-th greatest entry of `d`, `nu = (d - tau)^+`, `upsilon = (tau - d)^+`,
/// and the objective is the top-`s` sum of `d` minus the constant.
pub fn gap_lp(d: &DVector<f64>, constant: f64, p: &Polytope) -> Result<GapLpSolution> {
    assert_eq!(d.len(), p.n);
    let n = p.n;
    match &p.side {
        None => {
            let idx = top_s_indices(d, p.s);
            // tau is the s-th greatest value of d: the smallest selected entry
            let tau = idx.iter().map(|&j| d[j]).fold(f64::INFINITY, f64::min);
            let mut nu = DVector::zeros(n);
            let mut upsilon = DVector::zeros(n);
            let mut top = 0.0;
            for &j in &idx {
                top += d[j];
            }
            for j in 0..n {
                nu[j] = (d[j] - tau).max(0.0);
                upsilon[j] = (tau - d[j]).max(0.0);
            }
            Ok(GapLpSolution { upsilon, nu, pi: DVector::zeros(0), tau, objective: top - constant })
        }
        Some(sc) => {
            // vars: upsilon (n), nu (n), pi (m), tau+ and tau-
            let m = sc.m();
            let cols = 2 * n + m + 2;
            let mut mat = DMatrix::zeros(n, cols);
            let mut rhs = DVector::zeros(n);
            let mut cost = DVector::zeros(cols);
            for j in 0..n {
                mat[(j, j)] = 1.0;
                mat[(j, n + j)] = -1.0;
                for i in 0..m {
                    mat[(j, 2 * n + i)] = -sc.a[(i, j)];
                }
                mat[(j, 2 * n + m)] = -1.0;
                mat[(j, 2 * n + m + 1)] = 1.0;
                rhs[j] = -d[j];
                cost[n + j] = 1.0;
            }
            for i in 0..m {
                cost[2 * n + i] = sc.b[i];
            }
            cost[2 * n + m] = p.s as f64;
            cost[2 * n + m + 1] = -(p.s as f64);
            let sol = simplex::solve_standard_form(&mat, &rhs, &cost)?;
            let upsilon = DVector::from_fn(n, |j, _| sol.y[j].max(0.0));
            let nu = DVector::from_fn(n, |j, _| sol.y[n + j].max(0.0));
            let pi = DVector::from_fn(m, |i, _| sol.y[2 * n + i].max(0.0));
            let tau = sol.y[2 * n + m] - sol.y[2 * n + m + 1];
            Ok(GapLpSolution { upsilon, nu, pi, tau, objective: sol.objective - constant })
        }
    }
}

/// Finds a start point for the solvers: the uniform point when it is
/// feasible, otherwise the point maximizing the least slack (an LP), falling
/// back to any feasible point. Errors when `P` is empty.
pub fn find_start(p: &Polytope) -> Result<DVector<f64>> {
    let uniform = DVector::from_element(p.n, p.s as f64 / p.n as f64);
    let Some(sc) = &p.side else { return Ok(uniform) };
    if (&sc.a * &uniform - &sc.b).iter().all(|&r| r <= 0.0) {
        return Ok(uniform);
    }
    // vars: x (n), t, w (m), pl (n, x - t e >= 0), qu (n, x + t e <= e)
    let n = p.n;
    let m = sc.m();
    let cols = n + 1 + m + 2 * n;
    let rows = 1 + m + 2 * n;
    let mut mat = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    for j in 0..n {
        mat[(0, j)] = 1.0;
    }
    rhs[0] = p.s as f64;
    for i in 0..m {
        for j in 0..n {
            mat[(1 + i, j)] = sc.a[(i, j)];
        }
        mat[(1 + i, n)] = 1.0;
        mat[(1 + i, n + 1 + i)] = 1.0;
        rhs[1 + i] = sc.b[i];
    }
    for j in 0..n {
        // x_j - t - pl_j = 0
        mat[(1 + m + j, j)] = 1.0;
        mat[(1 + m + j, n)] = -1.0;
        mat[(1 + m + j, n + 1 + m + j)] = -1.0;
        // x_j + t + qu_j = 1
        mat[(1 + m + n + j, j)] = 1.0;
        mat[(1 + m + n + j, n)] = 1.0;
        mat[(1 + m + n + j, n + 1 + m + n + j)] = 1.0;
        rhs[1 + m + n + j] = 1.0;
    }
    let mut cost = DVector::zeros(cols);
    cost[n] = -1.0; // maximize t
    let sol = simplex::solve_standard_form(&mat, &rhs, &cost)?;
    let x = DVector::from_fn(n, |j, _| sol.y[j].clamp(0.0, 1.0));
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_abs_diff_eq;

    fn side(a: &[f64], rows: usize, n: usize, b: &[f64]) -> SideConstraints {
        SideConstraints::new(
            DMatrix::from_row_slice(rows, n, a),
            DVector::from_row_slice(b),
        )
        .unwrap()
    }

    /// All binary points of `P` (used as an enumeration oracle in tests).
    fn binary_points(p: &Polytope) -> Vec<DVector<f64>> {
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

    #[test]
    fn oracle_top_s() {
        let p = Polytope::new(3, 2, None);
        let (x, v) = linear_oracle(&DVector::from_row_slice(&[3.0, 1.0, 2.0]), &p).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0, 1.0]);
        assert_abs_diff_eq!(v, 5.0);
    }

    #[test]
    fn oracle_tie_breaks_low_index() {
        let p = Polytope::new(3, 2, None);
        let (x, v) = linear_oracle(&DVector::from_element(3, 1.0), &p).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(v, 2.0);
    }

    #[test]
    fn oracle_with_side_constraints_matches_enumeration() {
        let p = Polytope::new(
            3,
            2,
            Some(side(&[1.0, 1.0, 0.0], 1, 3, &[1.0])),
        );
        let c = DVector::from_row_slice(&[5.0, 4.0, 1.0]);
        let (x, v) = linear_oracle(&c, &p).unwrap();
        let best = binary_points(&p)
            .iter()
            .map(|x| c.dot(x))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(v, best, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 6.0, epsilon = 1e-9);
        assert!(p.violation(&x) <= 1e-9);
    }

    #[test]
    fn gap_lp_closed_form_uniform() {
        let p = Polytope::new(3, 2, None);
        let sol = gap_lp(&DVector::from_element(3, 1.0), 2.0, &p).unwrap();
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gap_lp_closed_form_spread() {
        let p = Polytope::new(3, 1, None);
        let d = DVector::from_row_slice(&[4.0, 1.0, 1.0]);
        let sol = gap_lp(&d, 1.0, &p).unwrap();
        assert_abs_diff_eq!(sol.objective, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.tau, 4.0, epsilon = 1e-12);
        assert_eq!(sol.nu.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(sol.upsilon.as_slice(), &[0.0, 3.0, 3.0]);
        assert!(sol.residual(&d, None) <= 1e-12);
    }

    #[test]
    fn gap_lp_strong_duality_with_side_constraints() {
        let sc = side(&[1.0, 1.0, 0.0], 1, 3, &[1.0]);
        let p = Polytope::new(3, 2, Some(sc.clone()));
        let d = DVector::from_row_slice(&[2.0, 0.5, -1.0]);
        let sol = gap_lp(&d, 2.0, &p).unwrap();
        let (_, oracle_val) = linear_oracle(&d, &p).unwrap();
        assert_abs_diff_eq!(sol.objective, oracle_val - 2.0, epsilon = 1e-8);
        assert!(sol.residual(&d, Some(&sc)) <= 1e-9 * (1.0 + 2.0));
        assert!(sol.pi.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn find_start_uniform_and_redundant() {
        let p = Polytope::new(4, 2, None);
        assert_eq!(find_start(&p).unwrap(), DVector::from_element(4, 0.5));
        let redundant = Polytope::new(
            4,
            2,
            Some(side(
                &[-1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
                4,
                4,
                &[0.0, 0.0, 0.0, 0.0],
            )),
        );
        assert_eq!(find_start(&redundant).unwrap(), DVector::from_element(4, 0.5));
    }

    #[test]
    fn find_start_interior_under_binding_constraint() {
        let p = Polytope::new(3, 2, Some(side(&[1.0, 1.0, 0.0], 1, 3, &[1.0])));
        let x = find_start(&p).unwrap();
        assert!(p.violation(&x) <= 1e-9);
        // an interior-in-box point exists (e.g. (0.5, 0.5, 1-eps) is not, but
        // (0.45, 0.55, 1.0)... the max-slack LP must at least keep x >= 0)
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn find_start_infeasible_errors() {
        let p = Polytope::new(3, 2, Some(side(&[1.0, 1.0, 1.0], 1, 3, &[0.5])));
        assert!(matches!(find_start(&p), Err(Error::Infeasible)));
    }
}
