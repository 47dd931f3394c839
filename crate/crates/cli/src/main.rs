//! `tqft`: batch front end over the tqft-core library.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage or parse error, 3 semantic error
//! in the input, 4 not admissible, 5 numerical failure, 6 invalid Pachner
//! site, 7 no positive angles for a 2-3 move.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{ComputeArgs, Function, Move, What};
use config::{Flags, Format, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "tqft", version, about = "Shaped triangulations, quantum dilogarithms and state integrals")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Quantum parameter b (mapped to b ≥ 1).
    #[arg(long, global = true)]
    b: Option<f64>,
    /// ħ in (0, 1/4]; alternative to --b.
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Comma-separated ħ values for sweeps.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cell counts, links, H₂ and admissibility of a triangulation file.
    Info { path: PathBuf },
    /// Volume, partition function, χ functions, ħ sweeps and rate fits.
    Compute {
        what: WhatArg,
        path: Option<PathBuf>,
        /// Function for sweep and volfit (default: chi41 for 2 tetrahedra, chi52 for 3).
        #[arg(long)]
        of: Option<OfArg>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x: f64,
        /// λ of χ₅₂(x, λ).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Applies a shaped 3-2 or 2-3 move.
    Pachner {
        path: PathBuf,
        #[arg(long = "move")]
        kind: MoveArg,
        #[arg(long)]
        edge: Option<usize>,
        #[arg(long, num_args = 2, value_names = ["TET", "FACE"])]
        face: Option<Vec<usize>>,
    },
    /// Point evaluation of Φ_b, or residual checks at random points.
    Qdilog {
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Weil–Gel'fand–Zak transform diagnostics.
    Wgz {
        #[command(subcommand)]
        command: WgzCommand,
    },
}

#[derive(Subcommand)]
enum WgzCommand {
    /// |g_{a,c}| on an n × n grid over [0,1)².
    Grid {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Truncation order M of the lattice sum.
        #[arg(long, default_value_t = 20)]
        order: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhatArg {
    Volume,
    Partition,
    Chi41,
    Chi52,
    Sweep,
    Volfit,
}

#[derive(Clone, Copy, ValueEnum)]
enum OfArg {
    Chi41,
    Chi52,
    Partition,
}

#[derive(Clone, Copy, ValueEnum)]
enum MoveArg {
    #[value(name = "32")]
    ThreeTwo,
    #[value(name = "23")]
    TwoThree,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let flags = Flags { b: g.b, hbar: g.hbar, tol: g.tol, grid: g.grid, format: g.format, out: g.out, seed: g.seed };
    let cfg = RunConfig::resolve(flags, g.config.as_deref())?;
    match cli.command {
        Command::Info { path } => commands::info(&cfg, &path),
        Command::Compute { what, path, of, x, lambda } => {
            let what = match what {
                WhatArg::Volume => What::Volume,
                WhatArg::Partition => What::Partition,
                WhatArg::Chi41 => What::Chi41,
                WhatArg::Chi52 => What::Chi52,
                WhatArg::Sweep => What::Sweep,
                WhatArg::Volfit => What::Volfit,
            };
            let of = of.map(|o| match o {
                OfArg::Chi41 => Function::Chi41,
                OfArg::Chi52 => Function::Chi52,
                OfArg::Partition => Function::Partition,
            });
            commands::compute(&cfg, ComputeArgs { what, path: path.as_deref(), of, x, lambda })
        }
        Command::Pachner { path, kind, edge, face } => {
            let mv = match (kind, edge, face) {
                (MoveArg::ThreeTwo, Some(edge), None) => Move::ThreeTwo { edge },
                (MoveArg::TwoThree, None, Some(f)) => {
                    let face = u8::try_from(f[1]).ok().filter(|&f| f < 4).ok_or_else(|| {
                        CliError::new(error::exit::INVALID_SITE, format!("face {} does not exist", f[1]))
                    })?;
                    Move::TwoThree { tet: f[0], face }
                }
                (MoveArg::ThreeTwo, ..) => return Err(CliError::usage("--move 32 takes --edge <id> only")),
                (MoveArg::TwoThree, ..) => return Err(CliError::usage("--move 23 takes --face <t> <f> only")),
            };
            commands::pachner(&cfg, &path, mv)
        }
        Command::Qdilog { z, samples } => commands::qdilog(&cfg, z.as_deref(), samples),
        Command::Wgz { command: WgzCommand::Grid { a, c, n, order } } => commands::wgz_grid(&cfg, a, c, n, order),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
