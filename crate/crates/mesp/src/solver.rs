//! Away-step Frank-Wolfe over the CMESP polytope.
//!
//! The solver only needs a linear-optimization oracle for the feasible
//! region and value/gradient evaluations of a concave objective, which is
//! exactly what the relaxations in this crate provide. Away steps avoid the
//! zig-zagging of plain conditional gradients near faces, and the iterate is
//! kept as an explicit convex combination of oracle vertices so feasibility
//! never drifts.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::polytope::{find_start, linear_oracle, Polytope};

/// Solver options shared by all relaxations.
#[derive(Debug, Clone, Copy)]
pub struct SolveOpts {
    /// Stop when the Frank-Wolfe gap is below `tol * (1 + |value|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restarts from perturbed start points when the objective is -inf.
    pub max_restarts: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts { tol: 1e-8, max_iter: 2000, max_restarts: 5 }
    }
}

/// Outcome of a relaxation solve: a feasible point, its objective value, and
/// solver diagnostics.
#[derive(Debug, Clone)]
pub struct PrimalResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub fw_gap: f64,
    pub smooth_at_solution: bool,
}

/// A concave objective over `[0,1]^n` with a (sub)gradient.
pub trait ConcaveObjective {
    /// Objective value; `-inf` signals a point outside the domain.
    fn value(&self, x: &DVector<f64>) -> f64;

    /// Value, gradient (a subgradient at kinks), and whether the gradient
    /// formula's smoothness condition held.
    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)>;

    /// Step length in `[0, t_max]` maximizing the objective along `x + t d`.
    /// Golden section is the default; smooth objectives may override with
    /// something faster.
    fn line_search(&self, x: &DVector<f64>, d: &DVector<f64>, t_max: f64) -> f64 {
        golden_section_max(|t| self.value(&(x + d * t)), t_max, 40).0
    }
}

/// Maximizes a 1-d function on `[0, hi]` by golden section, also probing the
/// right endpoint so vertex optima are hit exactly. Returns `(t, value)`.
pub fn golden_section_max(h: impl Fn(f64) -> f64, hi: f64, max_evals: usize) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut best_t = hi;
    let mut best_v = h(hi);
    let (mut a, mut b) = (0.0f64, hi);
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let mut f1 = h(c1);
    let mut f2 = h(c2);
    if f1 > best_v {
        best_t = c1;
        best_v = f1;
    }
    if f2 > best_v {
        best_t = c2;
        best_v = f2;
    }
    let mut evals = 3;
    while evals < max_evals {
        if f1 >= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = h(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = h(c2);
        }
        evals += 1;
        let (t, v) = if f1 >= f2 { (c1, f1) } else { (c2, f2) };
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }
    if !best_v.is_finite() {
        // every probe fell outside the objective's domain; do not move
        return (0.0, h(0.0));
    }
    (best_t, best_v)
}

struct ActiveSet {
    vertices: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl ActiveSet {
    fn find(&self, v: &DVector<f64>) -> Option<usize> {
        self.vertices.iter().position(|u| {
            u.iter().zip(v.iter()).all(|(&a, &b)| (a - b).abs() <= 1e-12)
        })
    }

    fn iterate(&self, n: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            x += v * w;
        }
        x
    }

    fn prune_and_renormalize(&mut self) {
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= 1e-14 {
                self.weights.swap_remove(i);
                self.vertices.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }
}

/// Runs away-step Frank-Wolfe from `find_start(P)`. Returns the best iterate
/// seen with the gap measured there.
pub fn frank_wolfe(obj: &dyn ConcaveObjective, p: &Polytope, opts: &SolveOpts) -> Result<PrimalResult> {
    let x0 = find_start(p)?;
    let x0 = ensure_finite_start(obj, p, x0, opts.max_restarts)?;

    let mut active = ActiveSet { vertices: vec![x0.clone()], weights: vec![1.0] };
    let mut x = x0;
    let mut best: Option<PrimalResult> = None;

    for iter in 0..opts.max_iter {
        let (val, g, smooth) = obj.value_grad(&x)?;
        let (v_fw, _) = linear_oracle(&g, p)?;
        let gap_fw = g.dot(&v_fw) - g.dot(&x);

        let improves = best.as_ref().map_or(true, |b| val > b.value);
        if improves {
            best = Some(PrimalResult {
                x: x.clone(),
                value: val,
                iterations: iter,
                fw_gap: gap_fw,
                smooth_at_solution: smooth,
            });
        } else if let Some(b) = best.as_mut() {
            // keep the freshest gap estimate for the reported iterate
            if val == b.value {
                b.fw_gap = b.fw_gap.min(gap_fw);
            }
        }
        if gap_fw <= opts.tol * (1.0 + val.abs()) {
            let mut out = best.expect("set above");
            out.iterations = iter;
            out.fw_gap = gap_fw;
            out.x = x;
            out.value = val;
            out.smooth_at_solution = smooth;
            return Ok(out);
        }

        // away vertex: the active vertex with the worst gradient alignment
        let mut away_idx = 0;
        let mut away_score = f64::INFINITY;
        for (i, v) in active.vertices.iter().enumerate() {
            let sc = g.dot(v);
            if sc < away_score {
                away_score = sc;
                away_idx = i;
            }
        }
        let gap_away = g.dot(&x) - away_score;

        let fw_step = gap_fw >= gap_away || active.vertices.len() == 1;
        if fw_step {
            let d = &v_fw - &x;
            let t = obj.line_search(&x, &d, 1.0).clamp(0.0, 1.0);
            if t >= 1.0 - 1e-15 {
                active.vertices = vec![v_fw.clone()];
                active.weights = vec![1.0];
            } else {
                for w in &mut active.weights {
                    *w *= 1.0 - t;
                }
                match active.find(&v_fw) {
                    Some(i) => active.weights[i] += t,
                    None => {
                        active.vertices.push(v_fw.clone());
                        active.weights.push(t);
                    }
                }
            }
        } else {
            let alpha = active.weights[away_idx];
            let t_max = if alpha < 1.0 { alpha / (1.0 - alpha) } else { 1.0 };
            let d = &x - &active.vertices[away_idx];
            let t = obj.line_search(&x, &d, t_max).clamp(0.0, t_max);
            // x' = (1+t) x - t v_away, so alpha_away' = (1+t) alpha - t
            for w in &mut active.weights {
                *w *= 1.0 + t;
            }
            active.weights[away_idx] = ((1.0 + t) * alpha - t).max(0.0);
        }
        active.prune_and_renormalize();
        x = active.iterate(p.n);
    }

    let mut out = best.ok_or_else(|| Error::Numerical("frank-wolfe made no progress".into()))?;
    out.iterations = opts.max_iter;
    Ok(out)
}

/// Blends the start point toward oracle vertices until the objective is
/// finite; errors after `max_restarts` failed perturbations.
fn ensure_finite_start(
    obj: &dyn ConcaveObjective,
    p: &Polytope,
    x0: DVector<f64>,
    max_restarts: usize,
) -> Result<DVector<f64>> {
    if obj.value(&x0).is_finite() {
        return Ok(x0);
    }
    let mut blend = x0.clone();
    for attempt in 0..max_restarts {
        // direction vertices from deterministic sign patterns
        let c = DVector::from_fn(p.n, |j, _| {
            if (j + attempt) % 2 == 0 {
                1.0 + j as f64 / p.n as f64
            } else {
                -1.0 - j as f64 / p.n as f64
            }
        });
        let (v, _) = linear_oracle(&c, p)?;
        blend = 0.5 * &blend + 0.5 * v;
        if obj.value(&blend).is_finite() {
            return Ok(blend);
        }
    }
    Err(Error::DegenerateStart)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        target: DVector<f64>,
    }

    impl ConcaveObjective for Quadratic {
        fn value(&self, x: &DVector<f64>) -> f64 {
            -(x - &self.target).norm_squared()
        }

        fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, bool)> {
            Ok((self.value(x), -2.0 * (x - &self.target), true))
        }
    }

    #[test]
    fn converges_to_interior_projection() {
        // target inside P: FW should reach it almost exactly
        let p = Polytope::new(4, 2, None);
        let target = DVector::from_row_slice(&[0.7, 0.6, 0.4, 0.3]);
        let obj = Quadratic { target: target.clone() };
        let r = frank_wolfe(&obj, &p, &SolveOpts::default()).unwrap();
        assert!((r.x - target).norm() < 1e-4, "fw_gap {}", r.fw_gap);
    }

    #[test]
    fn converges_to_vertex() {
        let p = Polytope::new(3, 1, None);
        let target = DVector::from_row_slice(&[1.0, 0.0, 0.0]);
        let obj = Quadratic { target: target.clone() };
        let r = frank_wolfe(&obj, &p, &SolveOpts::default()).unwrap();
        assert!((r.x - target).norm() < 1e-7);
    }

    #[test]
    fn golden_section_finds_quadratic_max() {
        let (t, v) = golden_section_max(|t| -(t - 0.3) * (t - 0.3), 1.0, 40);
        assert!((t - 0.3).abs() < 1e-6);
        assert!(v > -1e-12);
    }

    #[test]
    fn golden_section_hits_right_endpoint() {
        let (t, _) = golden_section_max(|t| t, 1.0, 40);
        assert_eq!(t, 1.0);
    }
}
