//! Batch front end used by the `mesp` binary: loads instances, runs bounds /
//! heuristics / exact solves / fixing chains / mixing sweeps, and renders CSV.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{
    brute_force, compute_bound, heuristic_lb, iterative_fix, BoundKind, BoundSpec, FixStatus,
    GammaMode,
};
use crate::instance::{
    generate_cmesp_constraints, load_instance, write_constraints, write_matrix, Instance,
};
use crate::linalg::{random_psd_with_rank, random_spd};
use crate::linx_bound::{optimize_gamma, LinxParams};
use crate::mixing::{optimize_alpha, MixComponent};
use crate::solver::SolveOpts;

/// Cardinality selection: a single `s` or an inclusive range.
#[derive(Debug, Clone, Copy)]
pub enum SRange {
    Single(usize),
    Range(usize, usize),
}

impl SRange {
    pub fn values(&self) -> Vec<usize> {
        match *self {
            SRange::Single(s) => vec![s],
            SRange::Range(a, b) => (a..=b).collect(),
        }
    }

    /// Parses "5" or "2:9".
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad s specification {text:?}"));
        if let Some((a, b)) = text.split_once(':') {
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok(SRange::Range(a, b))
        } else {
            Ok(SRange::Single(text.parse().map_err(|_| bad())?))
        }
    }
}

/// What to run and on which files.
#[derive(Debug, Clone)]
pub enum Command {
    Bound {
        matrices: Vec<PathBuf>,
        constraints: Option<PathBuf>,
        s: SRange,
        bounds: Vec<BoundKind>,
        gamma: GammaMode,
    },
    Sweep {
        matrices: Vec<PathBuf>,
        constraints: Option<PathBuf>,
        s: SRange,
        bounds: Vec<BoundKind>,
        gamma: GammaMode,
    },
    Mix {
        matrices: Vec<PathBuf>,
        constraints: Option<PathBuf>,
        s: SRange,
        pair: (BoundKind, BoundKind),
        gamma: GammaMode,
    },
    Fix {
        matrices: Vec<PathBuf>,
        constraints: Option<PathBuf>,
        s: SRange,
        bounds: Vec<BoundKind>,
        gamma: GammaMode,
        max_rounds: usize,
    },
    Exact { matrices: Vec<PathBuf>, constraints: Option<PathBuf>, s: SRange },
    Heuristic { matrices: Vec<PathBuf>, constraints: Option<PathBuf>, s: SRange },
    GenMatrix { n: usize, rank: Option<usize>, seed: u64, out: PathBuf },
    GenConstraints { matrix: PathBuf, m: usize, seed: u64, s: SRange, out: PathBuf },
}

/// Full run configuration (the CLI flags, parsed).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub parallel: bool,
    /// include wall-clock seconds in the CSV; off gives byte-stable output
    pub timing: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub eps: f64,
    pub threshold: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            parallel: false,
            timing: true,
            tol: 1e-8,
            max_iter: 2000,
            eps: 0.0,
            threshold: crate::fact_bound::FIX_THRESHOLD,
        }
    }

    fn opts(&self) -> SolveOpts {
        SolveOpts { tol: self.tol, max_iter: self.max_iter, ..Default::default() }
    }
}

/// Natural-log entropies are printed with 12 significant digits.
pub fn fmt12(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.11e}")
    }
}

fn fmt_support(support: &[usize]) -> String {
    let one_based: Vec<String> = support.iter().map(|j| (j + 1).to_string()).collect();
    format!("{{{}}}", one_based.join(";"))
}

fn secs(cfg: &RunConfig, t: Instant) -> String {
    if cfg.timing {
        format!("{:.3}", t.elapsed().as_secs_f64())
    } else {
        "0.000".into()
    }
}

fn load_cell(matrix: &Path, constraints: Option<&PathBuf>, s: usize) -> Result<Instance> {
    load_instance(matrix, s, constraints.map(|p| p.as_path()))
}

/// Runs the configured command and returns the CSV text (header included).
pub fn run(cfg: &RunConfig) -> Result<String> {
    match &cfg.command {
        Command::Bound { matrices, constraints, s, bounds, gamma } => {
            bound_rows(cfg, matrices, constraints.as_ref(), s, bounds, *gamma, false)
        }
        Command::Sweep { matrices, constraints, s, bounds, gamma } => {
            bound_rows(cfg, matrices, constraints.as_ref(), s, bounds, *gamma, cfg.parallel)
        }
        Command::Mix { matrices, constraints, s, pair, gamma } => {
            mix_rows(cfg, matrices, constraints.as_ref(), s, *pair, *gamma)
        }
        Command::Fix { matrices, constraints, s, bounds, gamma, max_rounds } => {
            fix_rows(cfg, matrices, constraints.as_ref(), s, bounds, *gamma, *max_rounds)
        }
        Command::Exact { matrices, constraints, s } => {
            exact_rows(cfg, matrices, constraints.as_ref(), s, true)
        }
        Command::Heuristic { matrices, constraints, s } => {
            exact_rows(cfg, matrices, constraints.as_ref(), s, false)
        }
        Command::GenMatrix { n, rank, seed, out } => {
            let c = match rank {
                Some(r) => random_psd_with_rank(*n, *r, *seed),
                None => random_spd(*n, *seed),
            };
            write_matrix(out, &c)?;
            Ok(format!("wrote matrix n={n} seed={seed} to {}\n", out.display()))
        }
        Command::GenConstraints { matrix, m, seed, s, out } => {
            let mut best = Vec::new();
            for sv in s.values() {
                let inst = load_instance(matrix, sv, None)?;
                let h = heuristic_lb(&inst)?;
                best.push((sv, h.x));
            }
            let inst = load_instance(matrix, s.values()[0], None)?;
            let sc = generate_cmesp_constraints(&inst, *m, *seed, &best)?;
            write_constraints(out, &sc)?;
            Ok(format!("wrote {m} constraints seed={seed} to {}\n", out.display()))
        }
    }
}

fn check_s(s: &SRange, n: usize) -> Result<()> {
    for sv in s.values() {
        if sv == 0 || sv >= n {
            return Err(Error::SOutOfRange { s: sv, n });
        }
    }
    Ok(())
}

const BOUND_HEADER: &str = "instance,n,s,bound,gamma,ub,lb,gap,fixed0,fixed1,seconds";

fn bound_cell(
    cfg: &RunConfig,
    matrix: &Path,
    constraints: Option<&PathBuf>,
    s: usize,
    bounds: &[BoundKind],
    gamma: GammaMode,
) -> Result<Vec<String>> {
    let inst = load_cell(matrix, constraints, s)?;
    let lb = match heuristic_lb(&inst) {
        Ok(h) => h.z,
        Err(Error::NoFeasibleSubset) => f64::NEG_INFINITY,
        Err(e) => return Err(e),
    };
    let mut rows = Vec::new();
    for kind in bounds {
        let started = Instant::now();
        let spec = BoundSpec { kind: *kind, gamma, factor_method: crate::instance::FactorMethod::Spectral, eps: cfg.eps };
        let cb = compute_bound(&inst, &spec, &cfg.opts())?;
        let fix = cb.fix(lb, cfg.threshold);
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            inst.label(),
            inst.n(),
            s,
            kind.name(),
            cb.gamma.map_or(String::new(), fmt12),
            fmt12(cb.ub),
            fmt12(lb),
            fmt12(cb.ub - lb),
            fix.fixed_zero.len(),
            fix.fixed_one.len(),
            secs(cfg, started),
        ));
    }
    Ok(rows)
}

fn bound_rows(
    cfg: &RunConfig,
    matrices: &[PathBuf],
    constraints: Option<&PathBuf>,
    s: &SRange,
    bounds: &[BoundKind],
    gamma: GammaMode,
    parallel: bool,
) -> Result<String> {
    if bounds.is_empty() {
        return Err(Error::Config("bound selection must be nonempty".into()));
    }
    let mut cells = Vec::new();
    for mpath in matrices {
        for sv in s.values() {
            cells.push((mpath.clone(), sv));
        }
    }
    let results: Vec<Result<Vec<String>>> = if parallel {
        cells
            .par_iter()
            .map(|(mpath, sv)| bound_cell(cfg, mpath, constraints, *sv, bounds, gamma))
            .collect()
    } else {
        cells
            .iter()
            .map(|(mpath, sv)| bound_cell(cfg, mpath, constraints, *sv, bounds, gamma))
            .collect()
    };
    let mut out = String::from(BOUND_HEADER);
    out.push('\n');
    for r in results {
        for row in r? {
            out.push_str(&row);
            out.push('\n');
        }
    }
    Ok(out)
}

fn mix_rows(
    cfg: &RunConfig,
    matrices: &[PathBuf],
    constraints: Option<&PathBuf>,
    s: &SRange,
    pair: (BoundKind, BoundKind),
    gamma: GammaMode,
) -> Result<String> {
    let mut out = String::from("instance,n,s,pair,alpha,gamma,ub,lb,gap,seconds\n");
    for mpath in matrices {
        for sv in s.values() {
            let started = Instant::now();
            let inst = load_cell(mpath, constraints, sv)?;
            let p = inst.polytope();
            let gamma_val = match gamma {
                GammaMode::Fixed(g) => g,
                GammaMode::Optimize => {
                    let params = LinxParams { tol: cfg.tol, max_iter: cfg.max_iter, gamma: 1.0 };
                    optimize_gamma(&inst, &p, (1e-6, 1e6), &params)?.0
                }
            };
            let build = |kind: BoundKind| -> Result<MixComponent> {
                match kind {
                    BoundKind::DdFact => {
                        MixComponent::ddfact(&inst, crate::instance::FactorMethod::Spectral)
                    }
                    BoundKind::CompDdFact => MixComponent::comp_ddfact(&inst),
                    BoundKind::Linx => Ok(MixComponent::linx(&inst, gamma_val)),
                }
            };
            let search = optimize_alpha(build(pair.0)?, build(pair.1)?, &p, &cfg.opts())?;
            let (_, cert) = search.certify(&p, &cfg.opts())?;
            let lb = match heuristic_lb(&inst) {
                Ok(h) => h.z,
                Err(Error::NoFeasibleSubset) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            out.push_str(&format!(
                "{},{},{},{}+{},{},{},{},{},{},{}\n",
                inst.label(),
                inst.n(),
                sv,
                pair.0.name(),
                pair.1.name(),
                fmt12(search.alpha),
                fmt12(gamma_val),
                fmt12(cert.value),
                fmt12(lb),
                fmt12(cert.value - lb),
                secs(cfg, started),
            ));
        }
    }
    Ok(out)
}

fn fix_rows(
    cfg: &RunConfig,
    matrices: &[PathBuf],
    constraints: Option<&PathBuf>,
    s: &SRange,
    bounds: &[BoundKind],
    gamma: GammaMode,
    max_rounds: usize,
) -> Result<String> {
    if bounds.is_empty() {
        return Err(Error::Config("bound selection must be nonempty".into()));
    }
    let mut out = String::from("instance,round,n,s,fixed0,fixed1,lb,ub,status\n");
    for mpath in matrices {
        for sv in s.values() {
            let inst = load_cell(mpath, constraints, sv)?;
            let specs: Vec<BoundSpec> = bounds
                .iter()
                .map(|k| BoundSpec {
                    kind: *k,
                    gamma,
                    factor_method: crate::instance::FactorMethod::Spectral,
                    eps: cfg.eps,
                })
                .collect();
            let run = iterative_fix(&inst, &specs, max_rounds, &cfg.opts())?;
            let rounds = run.rounds.len();
            for (i, round) in run.rounds.iter().enumerate() {
                let status = if i + 1 == rounds {
                    match run.status {
                        FixStatus::Solved => "solved",
                        FixStatus::Stalled => "stalled",
                        FixStatus::MaxRounds => "maxrounds",
                    }
                } else {
                    ""
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    inst.label(),
                    i + 1,
                    round.n,
                    round.s,
                    round.fixed_zero.len(),
                    round.fixed_one.len(),
                    fmt12(round.lb),
                    fmt12(round.best_ub),
                    status,
                ));
            }
        }
    }
    Ok(out)
}

fn exact_rows(
    cfg: &RunConfig,
    matrices: &[PathBuf],
    constraints: Option<&PathBuf>,
    s: &SRange,
    exact: bool,
) -> Result<String> {
    let method = if exact { "exact" } else { "heuristic" };
    let mut out = String::from("instance,n,s,method,value,support,count,seconds\n");
    for mpath in matrices {
        for sv in s.values() {
            let started = Instant::now();
            let inst = load_cell(mpath, constraints, sv)?;
            check_s(s, inst.n())?;
            let r = if exact { brute_force(&inst)? } else { heuristic_lb(&inst)? };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                inst.label(),
                inst.n(),
                sv,
                method,
                fmt12(r.z),
                fmt_support(&r.support()),
                r.count,
                secs(cfg, started),
            ));
        }
    }
    Ok(out)
}

/// Extra sanity check used by the binary before running rows: every
/// requested cardinality must fit every instance.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    let (matrices, s) = match &cfg.command {
        Command::Bound { matrices, s, .. }
        | Command::Sweep { matrices, s, .. }
        | Command::Mix { matrices, s, .. }
        | Command::Fix { matrices, s, .. }
        | Command::Exact { matrices, s, .. }
        | Command::Heuristic { matrices, s, .. } => (matrices, s),
        Command::GenMatrix { n, rank, .. } => {
            if let Some(r) = rank {
                if *r > *n || *r == 0 {
                    return Err(Error::Config(format!("rank {r} out of range for n={n}")));
                }
            }
            return Ok(());
        }
        Command::GenConstraints { .. } => return Ok(()),
    };
    for mpath in matrices {
        let c = crate::instance::read_matrix(mpath)?;
        check_s(s, c.nrows())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn write_tmp(name: &str, content: &str) -> PathBuf {
        let p = std::env::temp_dir().join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn cfg(command: Command) -> RunConfig {
        let mut c = RunConfig::new(command);
        c.timing = false;
        c
    }

    #[test]
    fn bound_command_row_count() {
        let m = write_tmp("mesp_cli_b.txt", "3\n2 0.4 0.1\n0.4 1.5 0.2\n0.1 0.2 1\n");
        let out = run(&cfg(Command::Bound {
            matrices: vec![m],
            constraints: None,
            s: SRange::Single(2),
            bounds: vec![BoundKind::DdFact, BoundKind::Linx],
            gamma: GammaMode::Fixed(1.0),
        }))
        .unwrap();
        let lines: Vec<&str> = out.trim_end().lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 bounds
        assert_eq!(lines[0], BOUND_HEADER);
        assert!(lines[1].starts_with("mesp_cli_b,3,2,ddfact,"));
        assert!(lines[2].starts_with("mesp_cli_b,3,2,linx,"));
    }

    #[test]
    fn sweep_covers_range_in_order() {
        let c = crate::linalg::random_spd(6, 5);
        let mut body = String::from("6\n");
        for i in 0..6 {
            let row: Vec<String> = (0..6).map(|j| format!("{:.17e}", c[(i, j)])).collect();
            body.push_str(&row.join(" "));
            body.push('\n');
        }
        let m = write_tmp("mesp_cli_sweep.txt", &body);
        let out = run(&cfg(Command::Sweep {
            matrices: vec![m],
            constraints: None,
            s: SRange::Range(2, 4),
            bounds: vec![BoundKind::DdFact],
            gamma: GammaMode::Fixed(1.0),
        }))
        .unwrap();
        let lines: Vec<&str> = out.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        for (i, sv) in (2..=4).enumerate() {
            assert!(lines[i + 1].contains(&format!(",6,{sv},ddfact,")));
        }
    }

    #[test]
    fn exact_known_answer() {
        let m = write_tmp("mesp_cli_exact.txt", "2\n2 1\n1 2\n");
        let out = run(&cfg(Command::Exact {
            matrices: vec![m],
            constraints: None,
            s: SRange::Single(1),
        }))
        .unwrap();
        let row = out.lines().nth(1).unwrap();
        assert!(row.contains(&fmt12(2.0f64.ln())), "row: {row}");
        assert!(row.contains("{1}"), "row: {row}");
    }

    #[test]
    fn missing_matrix_is_an_io_error() {
        let out = run(&cfg(Command::Exact {
            matrices: vec![PathBuf::from("/nonexistent/mesp.txt")],
            constraints: None,
            s: SRange::Single(1),
        }));
        match out {
            Err(e) => assert_eq!(e.exit_code(), 2),
            Ok(_) => panic!("expected an error"),
        }
    }

    #[test]
    fn csv_is_stable_without_timing() {
        let m = write_tmp("mesp_cli_stable.txt", "3\n2 0.4 0.1\n0.4 1.5 0.2\n0.1 0.2 1\n");
        let command = Command::Bound {
            matrices: vec![m],
            constraints: None,
            s: SRange::Single(2),
            bounds: vec![BoundKind::DdFact],
            gamma: GammaMode::Fixed(1.0),
        };
        let a = run(&cfg(command.clone())).unwrap();
        let b = run(&cfg(command)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gen_roundtrip() {
        let out_path = std::env::temp_dir().join("mesp_cli_gen.txt");
        run(&cfg(Command::GenMatrix { n: 5, rank: None, seed: 3, out: out_path.clone() }))
            .unwrap();
        let c = crate::instance::read_matrix(&out_path).unwrap();
        assert_eq!(c.nrows(), 5);
        let expect = crate::linalg::random_spd(5, 3);
        assert!(crate::linalg::max_norm(&(c - expect)) < 1e-12);
    }

    #[test]
    fn srange_parse() {
        assert!(matches!(SRange::parse("4").unwrap(), SRange::Single(4)));
        assert!(matches!(SRange::parse("2:9").unwrap(), SRange::Range(2, 9)));
        assert!(SRange::parse("9:2").is_err());
        assert!(SRange::parse("x").is_err());
        let _ = DMatrix::<f64>::identity(1, 1);
    }
}
