//! Dense two-phase primal simplex for standard-form problems
//! `min c^T y  s.t.  M y = q, y >= 0`.
//!
//! Instances here are small and dense, so a full tableau is simpler and more
//! predictable than a revised method. Pivoting uses Dantzig pricing with a
//! permanent switch to Bland's rule after `2 * rows` consecutive degenerate
//! pivots; all ties break on the lowest index so runs are deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub y: DVector<f64>,
    pub objective: f64,
}

pub fn solve_standard_form(m: &DMatrix<f64>, q: &DVector<f64>, c: &DVector<f64>) -> Result<LpSolution> {
    let rows = m.nrows();
    let cols = m.ncols();
    assert_eq!(q.len(), rows);
    assert_eq!(c.len(), cols);

    // tableau: rows x (cols + artificials + rhs); sign-normalize rhs >= 0
    let n_art = rows;
    let width = cols + n_art + 1;
    let mut t = DMatrix::<f64>::zeros(rows, width);
    for i in 0..rows {
        let flip = if q[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..cols {
            t[(i, j)] = flip * m[(i, j)];
        }
        t[(i, cols + i)] = 1.0;
        t[(i, width - 1)] = flip * q[i];
    }
    let mut basis: Vec<usize> = (cols..cols + n_art).collect();

    // phase 1: minimize the sum of artificials (their unit costs reduced
    // against the all-artificial starting basis)
    let mut obj = vec![0.0f64; width];
    for j in cols..cols + n_art {
        obj[j] = 1.0;
    }
    for i in 0..rows {
        for j in 0..width {
            obj[j] -= t[(i, j)];
        }
    }
    let scale = 1.0 + q.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    run_phase(&mut t, &mut basis, &mut obj, cols + n_art)?;
    let phase1 = -obj[width - 1];
    if phase1 > 1e-8 * scale {
        return Err(Error::Infeasible);
    }

    // drive leftover artificial variables out of the basis
    for i in 0..rows {
        if basis[i] >= cols {
            let mut entered = false;
            for j in 0..cols {
                if t[(i, j)].abs() > PIVOT_TOL {
                    pivot(&mut t, &mut basis, &mut obj, i, j);
                    entered = true;
                    break;
                }
            }
            if !entered {
                // redundant row; pin the artificial at zero
                t[(i, width - 1)] = 0.0;
            }
        }
    }

    // phase 2: real costs expressed over the current basis
    let mut obj2 = vec![0.0f64; width];
    for j in 0..cols {
        obj2[j] = c[j];
    }
    for i in 0..rows {
        let b = basis[i];
        if b < cols && c[b] != 0.0 {
            let coef = c[b];
            for j in 0..width {
                obj2[j] -= coef * t[(i, j)];
            }
        }
    }
    // artificials may not re-enter
    for j in cols..cols + n_art {
        obj2[j] = f64::INFINITY;
    }
    run_phase(&mut t, &mut basis, &mut obj2, cols)?;

    let mut y = DVector::zeros(cols);
    for i in 0..rows {
        if basis[i] < cols {
            y[basis[i]] = t[(i, width - 1)];
        }
    }
    let objective = c.dot(&y);
    Ok(LpSolution { y, objective })
}

/// Pivots until no reduced cost is promising. `limit_cols` restricts pricing
/// to the leading columns (used to shut artificials out in phase 2).
fn run_phase(
    t: &mut DMatrix<f64>,
    basis: &mut [usize],
    obj: &mut [f64],
    limit_cols: usize,
) -> Result<()> {
    let rows = t.nrows();
    let width = t.ncols();
    let max_iter = 200 + 40 * (rows + width);
    let mut degenerate_run = 0usize;
    let mut bland = false;

    for _ in 0..max_iter {
        let enter = if bland {
            (0..limit_cols).find(|&j| obj[j] < -RC_TOL)
        } else {
            let mut best = None;
            let mut best_rc = -RC_TOL;
            for j in 0..limit_cols {
                if obj[j] < best_rc {
                    best_rc = obj[j];
                    best = Some(j);
                }
            }
            best
        };
        let Some(enter) = enter else { return Ok(()) };

        // ratio test; Bland mode breaks ties on the smallest basic index
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..rows {
            let a = t[(i, enter)];
            if a > PIVOT_TOL {
                let ratio = t[(i, width - 1)] / a;
                let better = match leave {
                    None => true,
                    Some(prev) => {
                        ratio < best_ratio - DEGEN_TOL
                            || (ratio < best_ratio + DEGEN_TOL
                                && if bland {
                                    basis[i] < basis[prev]
                                } else {
                                    i < prev
                                })
                    }
                };
                if better {
                    best_ratio = ratio.max(0.0);
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else { return Err(Error::LpUnbounded) };

        if best_ratio <= DEGEN_TOL {
            degenerate_run += 1;
            if degenerate_run > 2 * rows {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        pivot(t, basis, obj, leave, enter);
    }
    Err(Error::LpIterationLimit)
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], obj: &mut [f64], row: usize, col: usize) {
    let width = t.ncols();
    let p = t[(row, col)];
    for j in 0..width {
        t[(row, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i != row {
            let f = t[(i, col)];
            if f != 0.0 {
                for j in 0..width {
                    t[(i, j)] -= f * t[(row, j)];
                }
                t[(i, col)] = 0.0;
            }
        }
    }
    let f = obj[col];
    if f != 0.0 && f.is_finite() {
        for j in 0..width {
            if obj[j].is_finite() {
                obj[j] -= f * t[(row, j)];
            }
        }
        obj[col] = 0.0;
    }
    basis[row] = col;
}
