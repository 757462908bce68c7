//! Command-line harness: runs the exact and p-adic routes, scans primes,
//! evaluates the residue combinatorics, and triangularizes dumped
//! matrices. Identical inputs (including seeds) produce identical output
//! apart from the timing fields.

mod commands;
mod report;

use clap::{Parser, Subcommand};

use expsum::error::Error;
use expsum::gnp::GnpContext;
use expsum::polygon::Polygon;

#[derive(Parser)]
#[command(name = "expsum", version, about = "L functions of one-variable exponential sums")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// worker threads for scans
    #[arg(long, global = true, default_value_t = 2)]
    jobs: usize,
    /// output format (json or csv where supported)
    #[arg(long, global = true, default_value = "json")]
    out: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Newton polygon of one polynomial by both routes
    Np {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        a: usize,
        /// a_0,...,a_{d-1}; entries are integers or y-polynomials
        #[arg(long, value_delimiter = ',')]
        coeffs: Vec<String>,
        /// certification target in p-adic digits (default d+5)
        #[arg(long)]
        prec: Option<u32>,
        /// also dump the Frobenius matrices to this file
        #[arg(long)]
        dump: Option<String>,
    },
    /// Infimum of Newton polygons over coefficient vectors, per prime
    Scan {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',')]
        p: Vec<u64>,
        /// exhaustive or sample:<k>
        #[arg(long, default_value = "exhaustive")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Asymptotic generic Newton polygon for one prime
    Gnp {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: u64,
    },
    /// Membership of a coefficient vector in the good loci
    Membership {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',')]
        coeffs: Vec<String>,
    },
    /// Triangularize a dumped matrix and verify the polygon equalities
    Triangularize {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        prec: Option<u32>,
    },
    /// Slope-1/2 family showing the generic statement cannot absorb
    /// p-dependent coefficient families
    Counterexample {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Dilate a polygon by p-1 (the Artin-Schreier curve scale)
    Curve {
        #[arg(long)]
        polygon: String,
        #[arg(long)]
        p: u64,
    },
    /// The combinatorial lower-bound polygon
    Hodge {
        #[arg(long)]
        d: u64,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BadInput(_) | Error::NotPrime(_) => 2,
        Error::HypothesisViolated { .. } | Error::SingularMinor(_) => 2,
        Error::ResourceGuard(_) => 3,
        Error::PrecisionExhausted(_) | Error::NonConvergence(_) => 4,
        Error::IntegralityFailure(_) | Error::Finding(_) => 5,
    }
}

fn run(cli: &Cli) -> expsum::Result<String> {
    match &cli.cmd {
        Cmd::Np {
            d,
            p,
            a,
            coeffs,
            prec,
            dump,
        } => {
            let args = commands::NpArgs {
                d: *d,
                p: *p,
                a: *a,
                coeffs: coeffs.clone(),
                prec: *prec,
            };
            if let Some(path) = dump {
                commands::dump_frobenius(&args, path)?;
            }
            let rep = commands::cmd_np(&args)?;
            Ok(serde_json::to_string_pretty(&rep).unwrap())
        }
        Cmd::Scan { d, p, mode, seed } => {
            let rep = commands::cmd_scan(&commands::ScanArgs {
                d: *d,
                primes: p.clone(),
                mode: mode.clone(),
                seed: *seed,
                jobs: cli.jobs,
            })?;
            if cli.out == "csv" {
                Ok(commands::scan_csv(&rep))
            } else {
                Ok(serde_json::to_string_pretty(&rep).unwrap())
            }
        }
        Cmd::Gnp { d, p } => {
            let r = (*p % *d as u64) as usize;
            let ctx = GnpContext::new(*d, r)?;
            let rep = ctx.gnp_polygon(*p)?;
            let text = serde_json::to_string_pretty(&rep).unwrap();
            if !rep.findings.is_empty() {
                println!("{text}");
                return Err(Error::Finding(format!("{:?}", rep.findings)));
            }
            Ok(text)
        }
        Cmd::Membership { d, r, coeffs } => {
            let rep = commands::cmd_membership(*d, *r, coeffs)?;
            Ok(serde_json::to_string_pretty(&rep).unwrap())
        }
        Cmd::Triangularize { matrix, prec } => {
            let rep = commands::cmd_triangularize(matrix, *prec)?;
            let text = serde_json::to_string_pretty(&rep).unwrap();
            if !rep.findings.is_empty() || !rep.polygons_equal {
                println!("{text}");
                return Err(Error::Finding(format!(
                    "triangularization postconditions failed: {:?}",
                    rep.findings
                )));
            }
            Ok(text)
        }
        Cmd::Counterexample { d, p, seed } => {
            let rep = commands::cmd_counterexample(*d, *p, *seed)?;
            Ok(serde_json::to_string_pretty(&rep).unwrap())
        }
        Cmd::Curve { polygon, p } => {
            let poly = commands::cmd_curve(polygon, *p)?;
            Ok(serde_json::to_string_pretty(&poly).unwrap())
        }
        Cmd::Hodge { d } => {
            let poly = Polygon::hodge(*d)?;
            Ok(serde_json::to_string_pretty(&poly).unwrap())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
