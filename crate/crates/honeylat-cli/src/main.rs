mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{config_error, parse_edge, ConfigError, RunConfig};
use output::Outputs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "honeylat", version, about = "Honeycomb Schrödinger operators: Dirac points, edge states and effective models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Default)]
struct Common {
    /// JSON config; flags given on the command line override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// "builtin" or a potential JSON file
    #[arg(long, global = true)]
    potential: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// zigzag, armchair or a1,b1
    #[arg(long, global = true)]
    edge: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    kpar: Option<f64>,
    /// Fourier cutoff
    #[arg(long = "M", global = true)]
    m: Option<usize>,
    /// grid size, slice points or supercell cells
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Band surfaces over the Brillouin zone
    Bands {
        #[arg(long)]
        bands: Option<usize>,
    },
    /// Dirac point data at K
    Dirac,
    /// Dispersion along the edge direction through K
    Slice {
        #[arg(long)]
        bands: Option<usize>,
    },
    /// Check the no-fold condition for the chosen edge
    Nofold {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Edge spectrum against delta at fixed k_par
    EdgeSweep {
        /// comma separated delta values
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        eigs: Option<usize>,
        #[arg(long)]
        kinf: Option<f64>,
        #[arg(long)]
        dump_states: bool,
        #[arg(long)]
        transverse: Option<String>,
    },
    /// Edge spectrum against k_par at fixed delta
    KparSweep {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        eigs: Option<usize>,
        #[arg(long)]
        kinf: Option<f64>,
    },
    /// One-dimensional Dirac model and its zero mode
    #[command(name = "effective-1d")]
    Effective1d {
        #[arg(long)]
        kinf: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// spectral or central
        #[arg(long)]
        discretization: Option<String>,
    },
    /// First Fourier coefficient of a bump lattice against the lattice scale
    #[command(name = "v11-scan")]
    V11Scan {
        /// honeycomb or triangular
        #[arg(long)]
        structure: Option<String>,
        /// gaussian or dog
        #[arg(long)]
        bump: Option<String>,
        #[arg(long)]
        a_min: Option<f64>,
        #[arg(long)]
        a_max: Option<f64>,
        #[arg(long)]
        a_count: Option<usize>,
    },
    /// Run the acceptance criteria
    Verify {
        /// comma separated criterion ids
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
    /// Replay the run recorded in a manifest
    Rerun { manifest: PathBuf },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn build_config(cli: Cli) -> Result<RunConfig> {
    let c = cli.common;
    if let Command::Rerun { manifest } = &cli.command {
        let mut cfg = config::load(manifest)?;
        set(&mut cfg.out, c.out);
        if c.threads.is_some() {
            cfg.threads = c.threads;
        }
        return Ok(cfg);
    }
    let mut cfg = match &c.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.potential, c.potential);
    set(&mut cfg.eps, c.eps);
    set(&mut cfg.delta, c.delta);
    if let Some(e) = &c.edge {
        cfg.edge = parse_edge(e)?;
    }
    cfg.kpar = c.kpar.or(cfg.kpar);
    cfg.m = c.m.or(cfg.m);
    cfg.n = c.n.or(cfg.n);
    cfg.threads = c.threads.or(cfg.threads);
    set(&mut cfg.out, c.out);
    set(&mut cfg.seed, c.seed);
    cfg.command = match cli.command {
        Command::Bands { bands } => {
            set(&mut cfg.n_bands, bands);
            "bands"
        }
        Command::Dirac => "dirac",
        Command::Slice { bands } => {
            set(&mut cfg.n_bands, bands);
            "slice"
        }
        Command::Nofold { a, nu } => {
            set(&mut cfg.a_param, a);
            set(&mut cfg.nu, nu);
            "nofold"
        }
        Command::EdgeSweep {
            deltas,
            eigs,
            kinf,
            dump_states,
            transverse,
        } => {
            set(&mut cfg.deltas, deltas);
            set(&mut cfg.n_eigs, eigs);
            set(&mut cfg.kinf, kinf);
            set(&mut cfg.transverse, transverse);
            cfg.dump_states |= dump_states;
            "edge-sweep"
        }
        Command::KparSweep { count, eigs, kinf } => {
            set(&mut cfg.kpar_count, count);
            set(&mut cfg.n_eigs, eigs);
            set(&mut cfg.kinf, kinf);
            "kpar-sweep"
        }
        Command::Effective1d {
            kinf,
            points,
            discretization,
        } => {
            set(&mut cfg.kinf, kinf);
            cfg.points = points.or(cfg.points);
            set(&mut cfg.discretization, discretization);
            "effective-1d"
        }
        Command::V11Scan {
            structure,
            bump,
            a_min,
            a_max,
            a_count,
        } => {
            set(&mut cfg.structure, structure);
            set(&mut cfg.bump, bump);
            set(&mut cfg.a_min, a_min);
            set(&mut cfg.a_max, a_max);
            set(&mut cfg.a_count, a_count);
            "v11-scan"
        }
        Command::Verify { only } => {
            set(&mut cfg.only, only);
            "verify"
        }
        Command::Rerun { .. } => unreachable!(),
    }
    .into();
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<bool> {
    if let Some(t) = config::thread_count(cfg)? {
        if t == 0 {
            return Err(config_error("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut out = Outputs::new(&cfg.out)?;
    let start = Instant::now();
    let summary = commands::run(cfg, &mut out)?;
    let seconds = start.elapsed().as_secs_f64();
    let files = out.files.clone();
    out.json(
        "manifest.json",
        &serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": cfg.command,
            "config": cfg,
            "seconds": seconds,
            "files": files,
        }),
    )?;
    println!("{}: {}", cfg.command, summary.text);
    Ok(!summary.acceptance_failed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<honeylat::Error>() {
        Some(honeylat::Error::InvalidArgument(_)) | Some(honeylat::Error::Configuration(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = build_config(cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
