//! Ground truth and end-to-end drivers: subset enumeration, the
//! greedy/interchange heuristic lower bound, certified-bound evaluation with
//! variable fixing, iterated fixing, and a best-first branch-and-bound on the
//! down/up (delete / Schur complement) branching scheme.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fact_bound::{
    certify, comp_ddfact, fix_from_duals, solve_ddfact, FixReport, FIX_THRESHOLD,
};
use crate::instance::{factorize, BranchDirection, FactorMethod, Instance};
use crate::linx_bound::{self, LinxParams};
use crate::mixing::{certify_mix, MixComponent, MixWeights};
use crate::polytope::linear_oracle;
use crate::solver::{PrimalResult, SolveOpts};

const ENUM_GUARD: u64 = 10_000_000;

/// A binary solution with its objective value and the work counter that
/// produced it (subsets enumerated or nodes processed).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z: f64,
    pub x: DVector<f64>,
    pub count: u64,
}

impl SolveResult {
    /// Sorted support of the solution.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&j| self.x[j] > 0.5).collect()
    }
}

fn binomial(n: usize, s: usize) -> u64 {
    let s = s.min(n - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

fn side_ok(inst: &Instance, support: &[usize]) -> bool {
    match inst.side() {
        None => true,
        Some(sc) => {
            for i in 0..sc.m() {
                let mut lhs = 0.0;
                for &j in support {
                    lhs += sc.a[(i, j)];
                }
                if lhs > sc.b[i] + 1e-9 {
                    return false;
                }
            }
            true
        }
    }
}

fn support_vector(n: usize, support: &[usize]) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for &j in support {
        x[j] = 1.0;
    }
    x
}

/// Enumerates every feasible size-`s` subset and returns the entropy
/// maximizer; ties go to the lexicographically smallest support. Guarded to
/// `C(n, s) <= 1e7` subsets.
pub fn brute_force(inst: &Instance) -> Result<SolveResult> {
    let n = inst.n();
    let s = inst.s();
    let total = binomial(n, s);
    if total > ENUM_GUARD {
        return Err(Error::SubsetGuard { n, s, guard: ENUM_GUARD });
    }
    let mut support: Vec<usize> = (0..s).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count: u64 = 0;
    loop {
        count += 1;
        if side_ok(inst, &support) {
            let v = inst.ldet_of(&support);
            if v.is_finite() && best.as_ref().map_or(true, |(bz, _)| v > *bz) {
                best = Some((v, support.clone()));
            }
        }
        if !next_combination(&mut support, n) {
            break;
        }
    }
    let (z, sup) = best.ok_or(Error::NoFeasibleSubset)?;
    Ok(SolveResult { z, x: support_vector(n, &sup), count })
}

/// Advances `support` to the next size-`s` combination of `0..n` in
/// lexicographic order; false when exhausted.
fn next_combination(support: &mut [usize], n: usize) -> bool {
    let s = support.len();
    for i in (0..s).rev() {
        if support[i] < i + n - s {
            support[i] += 1;
            for l in (i + 1)..s {
                support[l] = support[l - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Incremental Cholesky of the selected principal submatrix; supports the
/// greedy growth step in O(|S|^2) per candidate.
struct GrowingChol {
    l: Vec<Vec<f64>>,
    sel: Vec<usize>,
}

impl GrowingChol {
    fn new() -> Self {
        GrowingChol { l: Vec::new(), sel: Vec::new() }
    }

    /// Marginal determinant factor of appending `j`: `C_jj - w^T w` where
    /// `L w = C[S, j]`. Nonpositive means the extension is singular.
    fn gain(&self, inst: &Instance, j: usize) -> (f64, Vec<f64>) {
        let c = inst.c();
        let t = self.sel.len();
        let mut w = vec![0.0; t];
        for i in 0..t {
            let mut acc = c[(self.sel[i], j)];
            for p in 0..i {
                acc -= self.l[i][p] * w[p];
            }
            w[i] = acc / self.l[i][i];
        }
        let delta = c[(j, j)] - w.iter().map(|v| v * v).sum::<f64>();
        (delta, w)
    }

    fn push(&mut self, j: usize, mut w: Vec<f64>, delta: f64) {
        w.push(delta.max(1e-300).sqrt());
        self.l.push(w);
        self.sel.push(j);
    }
}

/// True when some point of `P` has `x_i = 1` for every `i` in `ones`.
fn completion_feasible(inst: &Instance, ones: &[usize]) -> Result<bool> {
    if inst.side().is_none() {
        return Ok(ones.len() <= inst.s());
    }
    let p = inst.polytope();
    let c = DVector::from_fn(inst.n(), |j, _| if ones.contains(&j) { 1.0 } else { 0.0 });
    match linear_oracle(&c, &p) {
        Ok((_, v)) => Ok(v >= ones.len() as f64 - 1e-7),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Greedy construction (largest marginal log-determinant gain whose partial
/// selection still admits a feasible completion) followed by best-improvement
/// one-in/one-out interchange. The result is feasible, so its value is a
/// valid lower bound.
pub fn heuristic_lb(inst: &Instance) -> Result<SolveResult> {
    let n = inst.n();
    let s = inst.s();
    let mut chol = GrowingChol::new();
    let mut forbidden: Vec<Vec<usize>> = vec![Vec::new()];
    let mut backtracks = 0usize;

    while chol.sel.len() < s {
        let level = chol.sel.len();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        let mut fallback: Option<(usize, Vec<f64>, f64)> = None;
        for j in 0..n {
            if chol.sel.contains(&j) || forbidden[level].contains(&j) {
                continue;
            }
            let mut ones = chol.sel.clone();
            ones.push(j);
            if !completion_feasible(inst, &ones)? {
                continue;
            }
            let (delta, w) = chol.gain(inst, j);
            if delta > 1e-12 {
                if best.as_ref().map_or(true, |(bd, _, _)| delta > *bd) {
                    best = Some((delta, j, w));
                }
            } else if fallback.is_none() {
                fallback = Some((j, w, delta));
            }
        }
        match best {
            Some((delta, j, w)) => {
                chol.push(j, w, delta);
                forbidden.push(Vec::new());
            }
            None => match fallback {
                Some((j, w, delta)) => {
                    chol.push(j, w, delta);
                    forbidden.push(Vec::new());
                }
                None => {
                    // dead end: undo the last pick and forbid it at that level
                    let Some(bad) = chol.sel.pop() else {
                        return Err(Error::NoFeasibleSubset);
                    };
                    chol.l.pop();
                    forbidden.pop();
                    forbidden.last_mut().expect("level exists").push(bad);
                    backtracks += 1;
                    if backtracks > 200 {
                        return Err(Error::NoFeasibleSubset);
                    }
                }
            },
        }
    }

    let mut sel = chol.sel.clone();
    sel.sort_unstable();
    let mut best_val = inst.ldet_of(&sel);

    // interchange: best-improvement swaps preserving feasibility
    for _ in 0..200 {
        let mut improved = false;
        let mut best_swap: Option<(f64, usize, usize)> = None;
        for (pos, &i) in sel.iter().enumerate() {
            for j in 0..n {
                if sel.contains(&j) {
                    continue;
                }
                let mut cand = sel.clone();
                cand[pos] = j;
                cand.sort_unstable();
                if !side_ok(inst, &cand) {
                    continue;
                }
                let v = inst.ldet_of(&cand);
                if v > best_val + 1e-12
                    && best_swap.as_ref().map_or(true, |(bv, _, _)| v > *bv)
                {
                    best_swap = Some((v, i, j));
                }
            }
        }
        if let Some((v, i, j)) = best_swap {
            let pos = sel.iter().position(|&q| q == i).expect("member");
            sel[pos] = j;
            sel.sort_unstable();
            best_val = v;
            improved = true;
        }
        if !improved {
            break;
        }
    }

    Ok(SolveResult { z: best_val, x: support_vector(n, &sel), count: 0 })
}

/// Which relaxation backs a certified bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    DdFact,
    CompDdFact,
    Linx,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::DdFact => "ddfact",
            BoundKind::CompDdFact => "compddfact",
            BoundKind::Linx => "linx",
        }
    }
}

/// Scale-factor handling for linx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    Fixed(f64),
    Optimize,
}

/// Configuration of one certified bound computation.
#[derive(Debug, Clone, Copy)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub gamma: GammaMode,
    pub factor_method: FactorMethod,
    pub eps: f64,
}

impl BoundSpec {
    pub fn new(kind: BoundKind) -> Self {
        BoundSpec { kind, gamma: GammaMode::Fixed(1.0), factor_method: FactorMethod::Spectral, eps: 0.0 }
    }

    pub fn with_gamma(mut self, gamma: GammaMode) -> Self {
        self.gamma = gamma;
        self
    }
}

enum FixData {
    Direct { zeta: f64, upsilon: DVector<f64>, nu: DVector<f64> },
    /// duals live on the complementary problem; 0/1 swap on mapping back
    Comp { zeta: f64, upsilon: DVector<f64>, nu: DVector<f64>, ldet_c: f64 },
}

/// A certified upper bound in original-problem units together with the dual
/// margins needed for fixing. The reported bound is always the certificate
/// value, never the raw primal value.
pub struct CertifiedBound {
    pub kind: BoundKind,
    pub gamma: Option<f64>,
    pub ub: f64,
    pub primal: f64,
    pub gap: f64,
    pub solver: PrimalResult,
    fix_data: FixData,
}

impl CertifiedBound {
    /// Fixing report in original-problem indices, given a valid lower bound
    /// in original-problem units.
    pub fn fix(&self, lb: f64, threshold: f64) -> FixReport {
        match &self.fix_data {
            FixData::Direct { zeta, upsilon, nu } => {
                fix_from_duals(*zeta, upsilon, nu, lb, threshold)
            }
            FixData::Comp { zeta, upsilon, nu, ldet_c } => {
                fix_from_duals(*zeta, upsilon, nu, lb - ldet_c, threshold).swapped()
            }
        }
    }
}

/// Solves the configured relaxation and certifies it.
pub fn compute_bound(inst: &Instance, spec: &BoundSpec, opts: &SolveOpts) -> Result<CertifiedBound> {
    let p = inst.polytope();
    match spec.kind {
        BoundKind::DdFact => {
            let fac = factorize(inst, spec.factor_method)?;
            let solver = solve_ddfact(&fac, &p, opts)?;
            let cert = certify(&fac, &p, &solver.x, spec.eps)?;
            Ok(CertifiedBound {
                kind: spec.kind,
                gamma: None,
                ub: cert.value,
                primal: cert.primal,
                gap: cert.gap,
                solver,
                fix_data: FixData::Direct { zeta: cert.value, upsilon: cert.upsilon, nu: cert.nu },
            })
        }
        BoundKind::CompDdFact => {
            let run = comp_ddfact(inst, spec.factor_method, opts)?;
            Ok(CertifiedBound {
                kind: spec.kind,
                gamma: None,
                ub: run.bound,
                primal: run.cert.primal + run.ldet_c,
                gap: run.cert.gap,
                solver: run.primal,
                fix_data: FixData::Comp {
                    zeta: run.cert.value,
                    upsilon: run.cert.upsilon,
                    nu: run.cert.nu,
                    ldet_c: run.ldet_c,
                },
            })
        }
        BoundKind::Linx => {
            let params = LinxParams { tol: opts.tol, max_iter: opts.max_iter, gamma: 1.0 };
            let gamma = match spec.gamma {
                GammaMode::Fixed(g) => g,
                GammaMode::Optimize => {
                    linx_bound::optimize_gamma(inst, &p, (1e-6, 1e6), &params)?.0
                }
            };
            let solver = linx_bound::solve_linx(inst, &LinxParams { gamma, ..params }, &p)?;
            let comps = [MixComponent::linx(inst, gamma)];
            let alpha = MixWeights::new(vec![1.0]).expect("unit weight");
            let cert = certify_mix(&comps, &alpha, &p, &solver.x)?;
            Ok(CertifiedBound {
                kind: spec.kind,
                gamma: Some(gamma),
                ub: cert.value,
                primal: cert.primal,
                gap: cert.gap,
                solver,
                fix_data: FixData::Direct { zeta: cert.value, upsilon: cert.upsilon, nu: cert.nu },
            })
        }
    }
}

/// Result of shrinking an instance by fixing variables.
enum Reduced {
    Instance {
        inst: Instance,
        /// new index -> old index
        mapping: Vec<usize>,
        offset_delta: f64,
        chosen_local: Vec<usize>,
    },
    /// `s` reached zero: the remaining variables are all zero.
    Empty { offset_delta: f64, chosen_local: Vec<usize>, feasible: bool },
    /// every remaining variable is selected
    Full { value_delta: f64, chosen_local: Vec<usize>, feasible: bool },
}

/// Applies a fixing report: fixed-to-0 indices are deleted, fixed-to-1
/// indices are absorbed by up-branching (Schur complement), accumulating the
/// offsets. Indices in the report refer to `inst`.
fn apply_fixes(inst: &Instance, fix: &FixReport) -> Result<Reduced> {
    let n = inst.n();
    let mut mapping: Vec<usize> = (0..n).collect();
    let mut cur = inst.clone();
    let mut offset = 0.0;
    let mut chosen_local = Vec::new();

    let mut ops: Vec<(usize, bool)> = fix
        .fixed_zero
        .iter()
        .map(|&j| (j, false))
        .chain(fix.fixed_one.iter().map(|&j| (j, true)))
        .collect();
    ops.sort_by(|a, b| b.0.cmp(&a.0)); // descending: later indices stay valid

    for (orig_j, to_one) in ops {
        let local = mapping
            .iter()
            .position(|&m| m == orig_j)
            .expect("fix index refers to the current instance");
        if to_one {
            chosen_local.push(orig_j);
        }
        let ns = cur.n() - 1;
        let s_after = if to_one { cur.s() - 1 } else { cur.s() };
        if s_after == 0 {
            // remaining variables are forced to zero
            let mut off = offset;
            let sel_local = if to_one { vec![local] } else { vec![] };
            if to_one {
                let cjj = cur.c()[(local, local)];
                if cjj <= 1e-12 {
                    return Err(Error::BranchOnZeroDiagonal { j: orig_j, cjj });
                }
                off += cjj.ln();
            }
            let feasible = side_ok(&cur, &sel_local);
            return Ok(Reduced::Empty { offset_delta: off, chosen_local, feasible });
        }
        if ns == s_after {
            // everything that survives is selected; the value telescopes to
            // the log-determinant over the selected set of the current matrix
            let keep: Vec<usize> = (0..cur.n()).filter(|&i| i != local).collect();
            let sel_local: Vec<usize> = if to_one { (0..cur.n()).collect() } else { keep.clone() };
            let value = offset + cur.ldet_of(&sel_local);
            let feasible = side_ok(&cur, &sel_local);
            for &ki in &keep {
                chosen_local.push(mapping[ki]);
            }
            return Ok(Reduced::Full { value_delta: value, chosen_local, feasible });
        }
        let dir = if to_one { BranchDirection::Up } else { BranchDirection::Down };
        let (child, off) = cur.schur_branch(local, dir)?;
        offset += off;
        mapping.remove(local);
        cur = child;
    }

    Ok(Reduced::Instance { inst: cur, mapping, offset_delta: offset, chosen_local })
}

/// One round of iterated fixing.
#[derive(Debug, Clone)]
pub struct FixRound {
    /// dimensions before the round's reduction
    pub n: usize,
    pub s: usize,
    /// best lower bound in original units available this round
    pub lb: f64,
    /// tightest certified bound in original units this round
    pub best_ub: f64,
    /// per-bound certified values, original units
    pub bound_values: Vec<(BoundKind, f64)>,
    /// original-index fixes made this round
    pub fixed_zero: Vec<usize>,
    pub fixed_one: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixStatus {
    /// the instance collapsed; the surviving solution is optimal
    Solved,
    /// a round fixed nothing
    Stalled,
    MaxRounds,
}

/// Outcome of iterated fixing: the per-round log, the chain of reduced
/// instances, and the final state.
pub struct IterFixOutcome {
    pub rounds: Vec<FixRound>,
    pub chain: Vec<Instance>,
    pub status: FixStatus,
    /// accumulated offset: original optimum = reduced optimum + offset
    pub offset: f64,
    /// original indices known to be selected
    pub selection: Vec<usize>,
    /// best feasible solution value seen (original units)
    pub lb: f64,
    /// the proven-optimal solution when `status == Solved`
    pub solution: Option<SolveResult>,
    /// surviving reduced instance when not collapsed
    pub final_instance: Option<Instance>,
}

/// Repeatedly computes certificates, fixes variables, and shrinks the
/// instance until nothing fixes, the instance collapses, or `max_rounds` is
/// hit. The heuristic lower bound is refreshed each round and kept only when
/// it improves on the parent's.
pub fn iterative_fix(
    inst: &Instance,
    bounds: &[BoundSpec],
    max_rounds: usize,
    opts: &SolveOpts,
) -> Result<IterFixOutcome> {
    assert!(!bounds.is_empty(), "need at least one bound");
    let orig_n = inst.n();
    let mut cur = inst.clone();
    let mut mapping: Vec<usize> = (0..orig_n).collect();
    let mut offset = 0.0;
    let mut selection: Vec<usize> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut lb_x: Option<DVector<f64>> = None;
    let mut rounds = Vec::new();
    let mut chain = Vec::new();

    for round in 0..max_rounds {
        if let Ok(h) = heuristic_lb(&cur) {
            let cand = h.z + offset;
            if cand > lb {
                lb = cand;
                let mut x = support_vector(orig_n, &selection);
                for j in h.support() {
                    x[mapping[j]] = 1.0;
                }
                lb_x = Some(x);
            }
        }

        let mut union = FixReport::default();
        union.margins = vec![f64::NEG_INFINITY; cur.n()];
        let mut bound_values = Vec::new();
        let mut best_ub = f64::INFINITY;
        for spec in bounds {
            let cb = match compute_bound(&cur, spec, opts) {
                Ok(cb) => cb,
                Err(Error::Singular) | Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e),
            };
            let ub = cb.ub + offset;
            bound_values.push((spec.kind, ub));
            best_ub = best_ub.min(ub);
            let fix = cb.fix(lb - offset, FIX_THRESHOLD);
            for &j in &fix.fixed_zero {
                if !union.fixed_zero.contains(&j) {
                    union.fixed_zero.push(j);
                }
            }
            for &j in &fix.fixed_one {
                if !union.fixed_one.contains(&j) {
                    union.fixed_one.push(j);
                }
            }
            for j in 0..cur.n() {
                union.margins[j] = union.margins[j].max(fix.margins[j]);
            }
        }
        union.fixed_zero.sort_unstable();
        union.fixed_one.sort_unstable();

        let round_log = FixRound {
            n: cur.n(),
            s: cur.s(),
            lb,
            best_ub,
            bound_values,
            fixed_zero: union.fixed_zero.iter().map(|&j| mapping[j]).collect(),
            fixed_one: union.fixed_one.iter().map(|&j| mapping[j]).collect(),
        };
        let fixed_any = union.total() > 0;
        rounds.push(round_log);
        if !fixed_any {
            return Ok(IterFixOutcome {
                rounds,
                chain,
                status: FixStatus::Stalled,
                offset,
                selection,
                lb,
                solution: lb_x.map(|x| SolveResult { z: lb, x, count: round as u64 }),
                final_instance: Some(cur),
            });
        }

        match apply_fixes(&cur, &union)? {
            Reduced::Instance { inst: next, mapping: local_map, offset_delta, chosen_local } => {
                offset += offset_delta;
                for j in chosen_local {
                    selection.push(mapping[j]);
                }
                mapping = local_map.into_iter().map(|j| mapping[j]).collect();
                chain.push(next.clone());
                cur = next;
            }
            Reduced::Empty { offset_delta, chosen_local, feasible } => {
                if !feasible {
                    return Err(Error::Numerical(
                        "fixing collapsed to an infeasible selection".into(),
                    ));
                }
                offset += offset_delta;
                for j in chosen_local {
                    selection.push(mapping[j]);
                }
                selection.sort_unstable();
                let x = support_vector(orig_n, &selection);
                return Ok(IterFixOutcome {
                    rounds,
                    chain,
                    status: FixStatus::Solved,
                    offset,
                    selection: selection.clone(),
                    lb: lb.max(offset),
                    solution: Some(SolveResult { z: offset, x, count: 0 }),
                    final_instance: None,
                });
            }
            Reduced::Full { value_delta, chosen_local, feasible } => {
                if !feasible {
                    return Err(Error::Numerical(
                        "fixing collapsed to an infeasible selection".into(),
                    ));
                }
                let value = offset + value_delta;
                for j in chosen_local {
                    selection.push(mapping[j]);
                }
                selection.sort_unstable();
                let x = support_vector(orig_n, &selection);
                return Ok(IterFixOutcome {
                    rounds,
                    chain,
                    status: FixStatus::Solved,
                    offset: value,
                    selection: selection.clone(),
                    lb: lb.max(value),
                    solution: Some(SolveResult { z: value, x, count: 0 }),
                    final_instance: None,
                });
            }
        }
    }

    Ok(IterFixOutcome {
        rounds,
        chain,
        status: FixStatus::MaxRounds,
        offset,
        selection,
        lb,
        solution: lb_x.map(|x| SolveResult { z: lb, x, count: max_rounds as u64 }),
        final_instance: Some(cur),
    })
}

struct Node {
    inst: Instance,
    offset: f64,
    mapping: Vec<usize>,
    chosen: Vec<usize>,
    bound: f64,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on bound; FIFO on ties for determinism
        self.bound
            .partial_cmp(&other.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Branch-and-bound outcome: the best solution, whether optimality was
/// proven within the node budget, and the residual bound gap when not.
pub struct BnbOutcome {
    pub best: SolveResult,
    pub proven: bool,
    pub gap: f64,
    pub nodes: u64,
}

const PRUNE_TOL: f64 = 1e-9;

/// Best-first branch-and-bound with the configured certificate as the node
/// bound, fixing at every node, and down/up branching on the most fractional
/// coordinate of the relaxation's solution.
pub fn branch_and_bound(
    inst: &Instance,
    spec: &BoundSpec,
    node_budget: u64,
    opts: &SolveOpts,
) -> Result<BnbOutcome> {
    let orig_n = inst.n();
    let mut incumbent: Option<(f64, DVector<f64>)> = None;
    if let Ok(h) = heuristic_lb(inst) {
        incumbent = Some((h.z, h.x));
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        inst: inst.clone(),
        offset: 0.0,
        mapping: (0..orig_n).collect(),
        chosen: Vec::new(),
        bound: f64::INFINITY,
        seq,
    });
    let mut nodes = 0u64;
    let mut proven = true;
    let mut remaining_bound = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        let inc_z = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(z, _)| *z);
        if node.bound <= inc_z + PRUNE_TOL {
            break; // best-first: every other node is at least as bounded
        }
        if nodes >= node_budget {
            proven = false;
            remaining_bound = node.bound;
            break;
        }
        nodes += 1;

        // small subproblems: enumerate outright
        if binomial(node.inst.n(), node.inst.s()) <= 512 {
            if let Ok(r) = brute_force(&node.inst) {
                let z = r.z + node.offset;
                if incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                    let mut x = support_vector(orig_n, &node.chosen);
                    for j in r.support() {
                        x[node.mapping[j]] = 1.0;
                    }
                    incumbent = Some((z, x));
                }
            }
            continue;
        }

        let cb = match compute_bound(&node.inst, spec, opts) {
            Ok(cb) => cb,
            Err(Error::Singular) | Err(Error::RankDeficient { .. }) | Err(Error::Infeasible) => {
                // the configured bound cannot run here; enumerate instead
                if let Ok(r) = brute_force(&node.inst) {
                    let z = r.z + node.offset;
                    if incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                        let mut x = support_vector(orig_n, &node.chosen);
                        for j in r.support() {
                            x[node.mapping[j]] = 1.0;
                        }
                        incumbent = Some((z, x));
                    }
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let node_bound = cb.ub + node.offset;
        let inc_z = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(z, _)| *z);
        if node_bound <= inc_z + PRUNE_TOL {
            continue;
        }

        // local heuristic may raise the incumbent
        if let Ok(h) = heuristic_lb(&node.inst) {
            let z = h.z + node.offset;
            if incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                let mut x = support_vector(orig_n, &node.chosen);
                for j in h.support() {
                    x[node.mapping[j]] = 1.0;
                }
                incumbent = Some((z, x));
            }
        }
        let inc_z = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(z, _)| *z);

        // node fixing, then either re-queue the reduced node or branch
        let fix = cb.fix(inc_z - node.offset, FIX_THRESHOLD);
        if fix.total() > 0 {
            match apply_fixes(&node.inst, &fix)? {
                Reduced::Instance { inst: next, mapping: local, offset_delta, chosen_local } => {
                    let mut chosen = node.chosen.clone();
                    for j in chosen_local {
                        chosen.push(node.mapping[j]);
                    }
                    let mapping: Vec<usize> =
                        local.into_iter().map(|j| node.mapping[j]).collect();
                    seq += 1;
                    heap.push(Node {
                        inst: next,
                        offset: node.offset + offset_delta,
                        mapping,
                        chosen,
                        bound: node_bound,
                        seq,
                    });
                }
                Reduced::Empty { offset_delta, chosen_local, feasible } => {
                    if feasible {
                        let z = node.offset + offset_delta;
                        if incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                            let mut chosen = node.chosen.clone();
                            for j in chosen_local {
                                chosen.push(node.mapping[j]);
                            }
                            incumbent = Some((z, support_vector(orig_n, &chosen)));
                        }
                    }
                }
                Reduced::Full { value_delta, chosen_local, feasible } => {
                    if feasible {
                        let z = node.offset + value_delta;
                        if incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                            let mut chosen = node.chosen.clone();
                            for j in chosen_local {
                                chosen.push(node.mapping[j]);
                            }
                            incumbent = Some((z, support_vector(orig_n, &chosen)));
                        }
                    }
                }
            }
            continue;
        }

        // branch on the most fractional coordinate of the relaxation point
        let xhat = &cb.solver.x;
        let mut j_branch = 0;
        let mut best_frac = f64::INFINITY;
        for j in 0..node.inst.n() {
            let frac = (xhat[j] - 0.5).abs();
            if frac < best_frac - 1e-15 {
                best_frac = frac;
                j_branch = j;
            }
        }

        for dir in [BranchDirection::Down, BranchDirection::Up] {
            if dir == BranchDirection::Up && node.inst.c()[(j_branch, j_branch)] <= 1e-12 {
                continue; // any subset through this index is singular
            }
            let s_after = match dir {
                BranchDirection::Down => node.inst.s(),
                BranchDirection::Up => node.inst.s() - 1,
            };
            let n_after = node.inst.n() - 1;
            let mut chosen = node.chosen.clone();
            if dir == BranchDirection::Up {
                chosen.push(node.mapping[j_branch]);
            }
            if s_after == 0 || n_after == s_after || s_after > n_after {
                // leaf: the child's selection is fully determined
                if s_after > n_after {
                    continue;
                }
                let keep: Vec<usize> =
                    (0..node.inst.n()).filter(|&i| i != j_branch).collect();
                let mut sel_local: Vec<usize> = Vec::new();
                if dir == BranchDirection::Up {
                    sel_local.push(j_branch);
                }
                if s_after == n_after {
                    sel_local.extend(keep.iter().copied());
                    sel_local.sort_unstable();
                }
                let z = node.offset + node.inst.ldet_of(&sel_local);
                if !side_ok(&node.inst, &sel_local) {
                    continue;
                }
                if z.is_finite() && incumbent.as_ref().map_or(true, |(bz, _)| z > *bz) {
                    for &j in &sel_local {
                        chosen.push(node.mapping[j]);
                    }
                    // up-branch already recorded j_branch in `chosen`
                    chosen.sort_unstable();
                    chosen.dedup();
                    incumbent = Some((z, support_vector(orig_n, &chosen)));
                }
                continue;
            }
            let (child, off2) = match node.inst.schur_branch(j_branch, dir) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let mapping: Vec<usize> = (0..node.inst.n())
                .filter(|&i| i != j_branch)
                .map(|i| node.mapping[i])
                .collect();
            seq += 1;
            heap.push(Node {
                inst: child,
                offset: node.offset + off2,
                mapping,
                chosen,
                bound: node_bound,
                seq,
            });
        }
    }

    let (z, x) = incumbent.ok_or(Error::NoFeasibleSubset)?;
    let gap = if proven { 0.0 } else { (remaining_bound - z).max(0.0) };
    Ok(BnbOutcome { best: SolveResult { z, x, count: nodes }, proven, gap, nodes })
}

/// Helper to build schur-branch children for partition-style tests.
pub fn branch_children(inst: &Instance, j: usize) -> Result<((Instance, f64), Option<(Instance, f64)>)> {
    let down = inst.schur_branch(j, BranchDirection::Down)?;
    let up = if inst.c()[(j, j)] > 1e-12 && inst.s() >= 1 {
        Some(inst.schur_branch(j, BranchDirection::Up)?)
    } else {
        None
    };
    Ok((down, up))
}
