//! Problem data for constrained maximum-entropy sampling: the covariance
//! matrix with its cardinality and optional linear side constraints,
//! factorizations C = F F^T, and the complement / scale / branch transforms
//! that map a problem onto an equivalent one plus an additive offset.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, SortedEigen};

/// Relative tolerance below which an eigenvalue counts as zero for rank.
pub const RANK_REL_TOL: f64 = 1e-10;
const ASYM_TOL: f64 = 1e-10;
const EIG_FLOOR_REL: f64 = 1e-8;

/// Linear side constraints `A x <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideConstraints {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl SideConstraints {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::ConstraintShape { rows: a.nrows(), len: b.len() });
        }
        Ok(SideConstraints { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }
}

/// A CMESP instance: symmetric PSD `C` of order `n`, cardinality `0 < s < n`,
/// optional side constraints, and a label used in reports.
#[derive(Debug, Clone)]
pub struct Instance {
    c: DMatrix<f64>,
    s: usize,
    side: Option<SideConstraints>,
    label: String,
}

impl Instance {
    /// Validates and stores the data. `c` is symmetrized; eigenvalues in
    /// `[-1e-8 lambda_max, 0)` are clamped to zero, anything lower is
    /// rejected.
    pub fn new(
        c: DMatrix<f64>,
        s: usize,
        side: Option<SideConstraints>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = c.nrows();
        if c.ncols() != n {
            return Err(Error::Parse {
                path: String::new(),
                msg: format!("matrix is {}x{}, expected square", n, c.ncols()),
            });
        }
        if s == 0 || s >= n {
            return Err(Error::SOutOfRange { s, n });
        }
        if let Some(sc) = &side {
            if sc.a.ncols() != n {
                return Err(Error::ConstraintShape { rows: sc.a.ncols(), len: n });
            }
        }
        let dev = linalg::asymmetry(&c);
        if dev > ASYM_TOL * (1.0 + linalg::max_norm(&c)) {
            return Err(Error::Asymmetric { max_dev: dev });
        }
        let ct = c.transpose();
        let sym = 0.5 * (c + ct);
        let se = SortedEigen::new(&sym);
        let lmax = se.values[0].max(0.0);
        let lmin = se.values[se.values.len() - 1];
        let floor = -EIG_FLOOR_REL * lmax;
        if lmin < floor {
            return Err(Error::NotPsd { lambda_min: lmin });
        }
        let c = if lmin < 0.0 { se.reconstruct(|v| v.max(0.0)) } else { sym };
        Ok(Instance { c, s, side, label: label.into() })
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn side(&self) -> Option<&SideConstraints> {
        self.side.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The feasible region of the continuous relaxations.
    pub fn polytope(&self) -> crate::polytope::Polytope {
        crate::polytope::Polytope::new(self.n(), self.s, self.side.clone())
    }

    /// Natural-log determinant of the principal submatrix indexed by
    /// `support`; `-inf` when that submatrix is singular or not PD.
    pub fn ldet_of(&self, support: &[usize]) -> f64 {
        let k = support.len();
        let sub = DMatrix::from_fn(k, k, |i, j| self.c[(support[i], support[j])]);
        linalg::ldet_spd(&sub).unwrap_or(f64::NEG_INFINITY)
    }

    /// Complementary instance `(C^{-1}, n-s, -A, b-Ae)` and its additive
    /// offset `ldet C`: any bound for the complement plus the offset bounds
    /// the original problem.
    pub fn complement(&self) -> Result<(Instance, f64)> {
        let se = SortedEigen::new(&self.c);
        let lmax = se.values[0].max(0.0);
        let lmin = se.values[se.values.len() - 1];
        if lmin <= RANK_REL_TOL * lmax {
            return Err(Error::Singular);
        }
        let cinv = se.reconstruct(|v| 1.0 / v);
        let offset: f64 = se.values.iter().map(|v| v.ln()).sum();
        let side = self.side.as_ref().map(|sc| SideConstraints {
            a: -&sc.a,
            b: &sc.b - &sc.a * DVector::from_element(self.n(), 1.0),
        });
        let inst = Instance::new(cinv, self.n() - self.s, side, format!("{}-comp", self.label))?;
        Ok((inst, offset))
    }

    /// Scaled instance `(gamma C, s, A, b)` with offset `-s log gamma`.
    pub fn scale(&self, gamma: f64) -> Result<(Instance, f64)> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidScale(gamma));
        }
        let inst = Instance::new(
            gamma * &self.c,
            self.s,
            self.side.clone(),
            format!("{}-x{}", self.label, gamma),
        )?;
        Ok((inst, -(self.s as f64) * gamma.ln()))
    }

    /// Branches on index `j`. Down: delete row/column `j` (same `s`, offset
    /// zero, constraint column dropped). Up: Schur complement of entry
    /// `(j,j)`, `s-1`, offset `log C_jj`, and `b' = b - A_{.j}`.
    pub fn schur_branch(&self, j: usize, direction: BranchDirection) -> Result<(Instance, f64)> {
        let n = self.n();
        assert!(j < n);
        let keep: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        match direction {
            BranchDirection::Down => {
                let c = DMatrix::from_fn(n - 1, n - 1, |a, b| self.c[(keep[a], keep[b])]);
                let side = self.side.as_ref().map(|sc| SideConstraints {
                    a: DMatrix::from_fn(sc.m(), n - 1, |r, col| sc.a[(r, keep[col])]),
                    b: sc.b.clone(),
                });
                let inst =
                    Instance::new(c, self.s, side, format!("{}-d{}", self.label, j))?;
                Ok((inst, 0.0))
            }
            BranchDirection::Up => {
                let cjj = self.c[(j, j)];
                if cjj <= 1e-12 {
                    return Err(Error::BranchOnZeroDiagonal { j, cjj });
                }
                let c = DMatrix::from_fn(n - 1, n - 1, |a, b| {
                    self.c[(keep[a], keep[b])] - self.c[(keep[a], j)] * self.c[(j, keep[b])] / cjj
                });
                let side = self.side.as_ref().map(|sc| SideConstraints {
                    a: DMatrix::from_fn(sc.m(), n - 1, |r, col| sc.a[(r, keep[col])],),
                    b: &sc.b - sc.a.column(j),
                });
                let inst =
                    Instance::new(c, self.s - 1, side, format!("{}-u{}", self.label, j))?;
                Ok((inst, cjj.ln()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchDirection {
    Down,
    Up,
}

/// How to factor `C = F F^T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMethod {
    /// Diagonal-pivoted outer-product Cholesky, `k = rank(C)` columns.
    CholeskyPivoted,
    /// Columns `sqrt(lambda_l) v_l` of the spectral decomposition, `k = rank(C)`.
    Spectral,
    /// Symmetric square root `C^{1/2}`, `k = n`.
    Sqrt,
}

impl FactorMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FactorMethod::CholeskyPivoted => "cholesky-pivoted",
            FactorMethod::Spectral => "spectral",
            FactorMethod::Sqrt => "sqrt",
        }
    }
}

/// A factorization `C = F F^T` with `F` of shape `n x k`, `rank(C) = r <= k <= n`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub f: DMatrix<f64>,
    pub k: usize,
    pub r: usize,
    pub method: FactorMethod,
    s: usize,
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `F(x) = F^T Diag(x) F`, PSD by construction for `x >= 0`.
    pub fn f_of_x(&self, x: &DVector<f64>) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.n());
        debug_assert!(x.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        let mut m = DMatrix::zeros(self.k, self.k);
        for j in 0..self.n() {
            if x[j] == 0.0 {
                continue;
            }
            let row = self.f.row(j);
            for a in 0..self.k {
                let fa = row[a] * x[j];
                if fa == 0.0 {
                    continue;
                }
                for b in 0..self.k {
                    m[(a, b)] += fa * row[b];
                }
            }
        }
        m
    }
}

/// Factors `inst.c()` with the requested method. Fails when
/// `rank(C) < s` since the factorization bounds need at least `s` positive
/// eigenvalues.
pub fn factorize(inst: &Instance, method: FactorMethod) -> Result<Factorization> {
    let c = inst.c();
    let n = inst.n();
    let se = SortedEigen::new(c);
    let r = se.rank(RANK_REL_TOL);
    if r < inst.s() {
        return Err(Error::RankDeficient { rank: r, s: inst.s() });
    }
    let f = match method {
        FactorMethod::Spectral => {
            let mut f = DMatrix::zeros(n, r);
            for l in 0..r {
                let scale = se.values[l].sqrt();
                for i in 0..n {
                    f[(i, l)] = scale * se.vectors[(i, l)];
                }
            }
            f
        }
        FactorMethod::Sqrt => se.reconstruct(|v| v.max(0.0).sqrt()),
        FactorMethod::CholeskyPivoted => pivoted_cholesky(c, r),
    };
    let k = f.ncols();
    let residual = linalg::max_norm(&(&f * f.transpose() - c));
    if residual > 1e-8 * (1.0 + linalg::max_norm(c)) {
        return Err(Error::Numerical(format!(
            "factorization residual {residual:.3e} out of tolerance"
        )));
    }
    Ok(Factorization { f, k, r, method, s: inst.s() })
}

/// Outer-product Cholesky with diagonal pivoting, truncated at `r` columns.
/// Columns beyond pivot exhaustion stay zero so `k = r` is kept even when
/// rounding stops the pivoting early.
fn pivoted_cholesky(c: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let n = c.nrows();
    let mut work = c.clone();
    let mut f = DMatrix::zeros(n, r);
    let scale = (0..n).fold(0.0f64, |a, i| a.max(c[(i, i)]));
    for col in 0..r {
        let mut piv = col;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if work[(i, i)] > best {
                best = work[(i, i)];
                piv = i;
            }
        }
        if best <= 1e-14 * scale.max(1.0) {
            break;
        }
        let d = best.sqrt();
        for i in 0..n {
            f[(i, col)] = work[(i, piv)] / d;
        }
        // rank-one downdate of the residual
        for i in 0..n {
            for j in 0..n {
                work[(i, j)] -= f[(i, col)] * f[(j, col)];
            }
        }
        for i in 0..n {
            work[(i, piv)] = 0.0;
            work[(piv, i)] = 0.0;
        }
    }
    f
}

/// Reads a dense matrix file: first token `n`, then `n*n` whitespace-separated
/// reals in row-major order.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut toks = text.split_whitespace();
    let p = path.display().to_string();
    let n: usize = toks
        .next()
        .ok_or_else(|| Error::Parse { path: p.clone(), msg: "empty file".into() })?
        .parse()
        .map_err(|e| Error::Parse { path: p.clone(), msg: format!("bad order: {e}") })?;
    let mut vals = Vec::with_capacity(n * n);
    for t in toks {
        let v: f64 = t
            .parse()
            .map_err(|e| Error::Parse { path: p.clone(), msg: format!("bad entry {t:?}: {e}") })?;
        vals.push(v);
    }
    if vals.len() != n * n {
        return Err(Error::Parse {
            path: p,
            msg: format!("expected {} entries, found {}", n * n, vals.len()),
        });
    }
    Ok(DMatrix::from_row_slice(n, n, &vals))
}

/// Reads a constraints file: first token `m`, then `m` rows of `n+1` reals
/// (a row of `A` followed by the entry of `b`).
pub fn read_constraints(path: impl AsRef<Path>, n: usize) -> Result<SideConstraints> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let p = path.display().to_string();
    let mut toks = text.split_whitespace();
    let m: usize = toks
        .next()
        .ok_or_else(|| Error::Parse { path: p.clone(), msg: "empty file".into() })?
        .parse()
        .map_err(|e| Error::Parse { path: p.clone(), msg: format!("bad row count: {e}") })?;
    let mut vals = Vec::with_capacity(m * (n + 1));
    for t in toks {
        let v: f64 = t
            .parse()
            .map_err(|e| Error::Parse { path: p.clone(), msg: format!("bad entry {t:?}: {e}") })?;
        vals.push(v);
    }
    if vals.len() != m * (n + 1) {
        return Err(Error::Parse {
            path: p,
            msg: format!("expected {} entries, found {}", m * (n + 1), vals.len()),
        });
    }
    let a = DMatrix::from_fn(m, n, |i, j| vals[i * (n + 1) + j]);
    let b = DVector::from_fn(m, |i, _| vals[i * (n + 1) + n]);
    SideConstraints::new(a, b)
}

/// Loads and validates an instance from a matrix file and an optional
/// constraints file.
pub fn load_instance(
    matrix_path: impl AsRef<Path>,
    s: usize,
    constraints_path: Option<&Path>,
) -> Result<Instance> {
    let c = read_matrix(&matrix_path)?;
    let side = match constraints_path {
        Some(p) => Some(read_constraints(p, c.nrows())?),
        None => None,
    };
    let label = matrix_path
        .as_ref()
        .file_stem()
        .map(|st| st.to_string_lossy().to_string())
        .unwrap_or_else(|| "instance".into());
    Instance::new(c, s, side, label)
}

/// Writes a matrix in the format `read_matrix` accepts.
pub fn write_matrix(path: impl AsRef<Path>, c: &DMatrix<f64>) -> Result<()> {
    let mut out = format!("{}\n", c.nrows());
    for i in 0..c.nrows() {
        let row: Vec<String> = (0..c.ncols()).map(|j| format!("{:.17e}", c[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|source| Error::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}

/// Writes constraints in the format `read_constraints` accepts.
pub fn write_constraints(path: impl AsRef<Path>, sc: &SideConstraints) -> Result<()> {
    let mut out = format!("{}\n", sc.m());
    for i in 0..sc.m() {
        let mut row: Vec<String> =
            (0..sc.a.ncols()).map(|j| format!("{}", sc.a[(i, j)])).collect();
        row.push(format!("{:.17e}", sc.b[i]));
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|source| Error::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}

/// Random constraint generation for CMESP experiments: each row of `A` is
/// uniform integer in {1..5}^n, and `b_i` is the nearest-rank (rounded up)
/// 80th percentile of `a_i^T x*(s) - 1` over the provided best solutions.
pub fn generate_cmesp_constraints(
    inst: &Instance,
    m: usize,
    seed: u64,
    best_x_per_s: &[(usize, DVector<f64>)],
) -> Result<SideConstraints> {
    assert!(!best_x_per_s.is_empty() || m == 0, "need at least one best solution");
    let n = inst.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(1..=5) as f64;
        }
        let mut vals: Vec<f64> = best_x_per_s
            .iter()
            .map(|(_, x)| a.row(i).transpose().dot(x) - 1.0)
            .collect();
        vals.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b[i] = percentile_nearest_rank(&vals, 80.0);
    }
    SideConstraints::new(a, b)
}

/// Nearest-rank percentile with the rank rounded up; values must be sorted.
fn percentile_nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}
