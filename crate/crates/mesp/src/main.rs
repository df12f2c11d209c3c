//! `mesp` command line: batch bounds, fixing chains, exact solves, and
//! instance generation over dense matrix files. All logic lives in the
//! library; this binary only parses flags and routes output.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mesp::cli::{run, validate, Command as LibCommand, RunConfig, SRange};
use mesp::exact::{BoundKind, GammaMode};

#[derive(Parser)]
#[command(name = "mesp", about = "bounds and exact solvers for maximum-entropy sampling")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// solver tolerance (relative Frank-Wolfe gap)
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 2000)]
    max_iter: usize,
    /// fixing threshold on the dual margins
    #[arg(long, global = true, default_value_t = 1e-10)]
    threshold: f64,
    /// epsilon of the dual construction
    #[arg(long, global = true, default_value_t = 0.0)]
    eps: f64,
    /// omit wall-clock times so the CSV is byte-stable across runs
    #[arg(long, global = true)]
    no_timing: bool,
    /// run independent (instance, s) cells concurrently (sweep only)
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Args)]
struct InstanceArgs {
    /// dense matrix file(s): first token n, then n*n reals row-major
    #[arg(long = "matrix", required = true, num_args = 1..)]
    matrices: Vec<PathBuf>,
    /// constraints file: first token m, then m rows of n+1 reals (A | b)
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// cardinality: a single value "4" or an inclusive range "2:9"
    #[arg(long, value_parser = parse_srange)]
    s: SRange,
}

#[derive(Args)]
struct GammaArgs {
    /// fixed linx scale factor
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// optimize the linx scale factor by one-dimensional search
    #[arg(long)]
    gamma_opt: bool,
}

impl GammaArgs {
    fn mode(&self) -> GammaMode {
        if self.gamma_opt {
            GammaMode::Optimize
        } else {
            GammaMode::Fixed(self.gamma)
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// certified upper bounds with fixing counts, one CSV row per bound
    Bound {
        #[command(flatten)]
        inst: InstanceArgs,
        /// comma-separated: ddfact, compddfact, linx
        #[arg(long, value_delimiter = ',', required = true)]
        bounds: Vec<String>,
        #[command(flatten)]
        gamma: GammaArgs,
    },
    /// bounds over an s-range (cells may run concurrently with --parallel)
    Sweep {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        bounds: Vec<String>,
        #[command(flatten)]
        gamma: GammaArgs,
    },
    /// optimal weighted mix of a pair of bounds
    Mix {
        #[command(flatten)]
        inst: InstanceArgs,
        /// pair, e.g. ddfact,linx
        #[arg(long, value_delimiter = ',', required = true)]
        pair: Vec<String>,
        #[command(flatten)]
        gamma: GammaArgs,
    },
    /// iterated variable fixing; one CSV row per round
    Fix {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        bounds: Vec<String>,
        #[command(flatten)]
        gamma: GammaArgs,
        #[arg(long, default_value_t = 20)]
        max_rounds: usize,
    },
    /// brute-force optimum (guarded enumeration)
    Exact {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// greedy/interchange lower bound
    Heuristic {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// generate a random instance matrix, or side constraints for one
    Gen {
        /// order of a random SPD matrix to generate
        #[arg(long)]
        n: Option<usize>,
        /// rank of the generated matrix (defaults to full)
        #[arg(long)]
        rank: Option<usize>,
        /// generate constraints for this matrix file instead
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// number of constraint rows
        #[arg(long)]
        m: Option<usize>,
        /// s values whose heuristic solutions calibrate the right-hand side
        #[arg(long, value_parser = parse_srange)]
        s: Option<SRange>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// output file for the generated data
        #[arg(long = "gen-out", required = true)]
        gen_out: PathBuf,
    },
}

fn parse_srange(text: &str) -> Result<SRange, String> {
    SRange::parse(text).map_err(|e| e.to_string())
}

fn parse_bounds(names: &[String]) -> Result<Vec<BoundKind>, mesp::Error> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "ddfact" => Ok(BoundKind::DdFact),
            "compddfact" => Ok(BoundKind::CompDdFact),
            "linx" => Ok(BoundKind::Linx),
            other => Err(mesp::Error::Config(format!("unknown bound {other:?}"))),
        })
        .collect()
}

fn build_config(cli: &Cli) -> Result<RunConfig, mesp::Error> {
    let command = match &cli.command {
        Cmd::Bound { inst, bounds, gamma } => LibCommand::Bound {
            matrices: inst.matrices.clone(),
            constraints: inst.constraints.clone(),
            s: inst.s,
            bounds: parse_bounds(bounds)?,
            gamma: gamma.mode(),
        },
        Cmd::Sweep { inst, bounds, gamma } => LibCommand::Sweep {
            matrices: inst.matrices.clone(),
            constraints: inst.constraints.clone(),
            s: inst.s,
            bounds: parse_bounds(bounds)?,
            gamma: gamma.mode(),
        },
        Cmd::Mix { inst, pair, gamma } => {
            let kinds = parse_bounds(pair)?;
            if kinds.len() != 2 {
                return Err(mesp::Error::Config(format!(
                    "--pair needs exactly two bounds, got {}",
                    kinds.len()
                )));
            }
            LibCommand::Mix {
                matrices: inst.matrices.clone(),
                constraints: inst.constraints.clone(),
                s: inst.s,
                pair: (kinds[0], kinds[1]),
                gamma: gamma.mode(),
            }
        }
        Cmd::Fix { inst, bounds, gamma, max_rounds } => LibCommand::Fix {
            matrices: inst.matrices.clone(),
            constraints: inst.constraints.clone(),
            s: inst.s,
            bounds: parse_bounds(bounds)?,
            gamma: gamma.mode(),
            max_rounds: *max_rounds,
        },
        Cmd::Exact { inst } => LibCommand::Exact {
            matrices: inst.matrices.clone(),
            constraints: inst.constraints.clone(),
            s: inst.s,
        },
        Cmd::Heuristic { inst } => LibCommand::Heuristic {
            matrices: inst.matrices.clone(),
            constraints: inst.constraints.clone(),
            s: inst.s,
        },
        Cmd::Gen { n, rank, matrix, m, s, seed, gen_out } => match (n, matrix) {
            (Some(n), None) => LibCommand::GenMatrix {
                n: *n,
                rank: *rank,
                seed: *seed,
                out: gen_out.clone(),
            },
            (None, Some(matrix)) => {
                let m = m.ok_or_else(|| {
                    mesp::Error::Config("gen with --matrix needs --m".into())
                })?;
                let s = s.ok_or_else(|| {
                    mesp::Error::Config("gen with --matrix needs --s".into())
                })?;
                LibCommand::GenConstraints {
                    matrix: matrix.clone(),
                    m,
                    seed: *seed,
                    s,
                    out: gen_out.clone(),
                }
            }
            _ => {
                return Err(mesp::Error::Config(
                    "gen needs exactly one of --n (matrix) or --matrix (constraints)".into(),
                ))
            }
        },
    };
    let mut cfg = RunConfig::new(command);
    cfg.parallel = cli.parallel;
    cfg.timing = !cli.no_timing;
    cfg.tol = cli.tol;
    cfg.max_iter = cli.max_iter;
    cfg.eps = cli.eps;
    cfg.threshold = cli.threshold;
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let code = match try_main(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn try_main(cli: &Cli) -> Result<(), mesp::Error> {
    let cfg = build_config(cli)?;
    validate(&cfg)?;
    let csv = run(&cfg)?;
    match &cli.out {
        Some(path) => std::fs::write(path, csv).map_err(|source| mesp::Error::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => print!("{csv}"),
    }
    Ok(())
}
