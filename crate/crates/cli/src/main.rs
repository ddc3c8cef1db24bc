//! `cayley`: experiments and verifiers for Cayley graph filters.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cayley", version, about = "Cayley graph filters: experiments, verifiers and benchmarks")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Master seed. Overrides any seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving all outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads. All computations are currently sequential, so this
    /// is only recorded in the manifest.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LapArg {
    Unnormalized,
    Normalized,
    ScaledUnnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Exact,
    Jacobi,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a community (or grid) graph as Matrix Market plus labels.
    GenGraph {
        /// CommunitySpec JSON; defaults are used when omitted.
        #[arg(long, conflicts_with = "grid")]
        spec: Option<PathBuf>,
        /// Grid graph instead, as ROWSxCOLS.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "graph.mtx")]
        out: PathBuf,
        /// Community labels, one per line. Defaults to `<out>.labels`.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Dense eigendecomposition: eigenvalues in ascending order.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "unnormalized")]
        kind: LapArg,
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
    },
    /// Eigenvalues mapped by the Cayley transform C(hλ) for several h.
    SpectrumMap {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "unnormalized")]
        kind: LapArg,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        #[arg(long, default_value = "spectrum_map.csv")]
        out: PathBuf,
    },
    /// Apply a Cayley or Chebyshev filter to signals.
    FilterApply {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "unnormalized")]
        kind: LapArg,
        /// Filter JSON: `{c0, c, h}` or `{alpha, lambda_max?}`.
        #[arg(long)]
        filter: PathBuf,
        /// Signal CSV, one column per signal.
        #[arg(long, required_unless_present = "impulse", conflicts_with = "impulse")]
        signal: Option<PathBuf>,
        /// Use the unit impulse at this vertex as the signal.
        #[arg(long)]
        impulse: Option<usize>,
        /// Cayley solve path.
        #[arg(long, value_enum, default_value = "exact")]
        path: PathArg,
        /// Jacobi sweeps per power.
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Rescale each Jacobi power to the input norm.
        #[arg(long)]
        normalize_each_stage: bool,
        #[arg(long, default_value = "filtered.csv")]
        out: PathBuf,
    },
    /// Exact and unrolled gradients against finite differences.
    GradCheck {
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value = "grad_check.json")]
        out: PathBuf,
    },
    /// Localization certificate for the impulse response of a Cayley filter.
    DecayCheck {
        /// Graph file; the default community graph when omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "unnormalized")]
        kind: LapArg,
        /// Cayley filter JSON; a random filter of order `--r` when omitted.
        #[arg(long)]
        filter: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Zoom of the random filter.
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        vertex: usize,
        #[arg(long, default_value = "decay.json")]
        out: PathBuf,
    },
    /// Train and test the community classifier.
    CommunityExperiment {
        /// TrainConfig JSON; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "community")]
        prefix: String,
    },
    /// Community experiment over families, orders, Jacobi sweeps and seeds.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "sweep")]
        prefix: String,
    },
    /// Filter cost against graph size for the Jacobi and exact paths.
    BenchScaling {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's repetition count (minimum 30).
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value = "bench_scaling")]
        prefix: String,
    },
    /// Jacobi accuracy and cost against the number of sweeps.
    BenchJacobi {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "unnormalized")]
        kind: LapArg,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9,10,11,12,13")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value = "bench_jacobi.csv")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let manifest = match cli.command {
        Command::GenGraph {
            spec,
            grid,
            out,
            labels,
        } => commands::gen_graph(g, spec.as_deref(), grid.as_deref(), &out, labels.as_deref()),
        Command::Spectrum { graph, kind, out } => commands::spectrum(g, &graph, kind, &out),
        Command::SpectrumMap { graph, kind, h, out } => commands::spectrum_map(g, &graph, kind, &h, &out),
        Command::FilterApply {
            graph,
            kind,
            filter,
            signal,
            impulse,
            path,
            k,
            normalize_each_stage,
            out,
        } => commands::filter_apply(
            g,
            commands::FilterApplyArgs {
                graph: &graph,
                kind,
                filter: &filter,
                signal: signal.as_deref(),
                impulse,
                path,
                k,
                normalize_each_stage,
                out: &out,
            },
        ),
        Command::GradCheck { cases, out } => commands::grad_check(g, cases, &out),
        Command::DecayCheck {
            graph,
            kind,
            filter,
            r,
            h,
            vertex,
            out,
        } => commands::decay_check(g, graph.as_deref(), kind, filter.as_deref(), r, h, vertex, &out),
        Command::CommunityExperiment { config, prefix } => commands::community(g, config.as_deref(), &prefix),
        Command::Sweep { config, prefix } => commands::sweep(g, config.as_deref(), &prefix),
        Command::BenchScaling { config, reps, prefix } => commands::bench_scaling(g, config.as_deref(), reps, &prefix),
        Command::BenchJacobi {
            graph,
            kind,
            orders,
            ks,
            h,
            reps,
            out,
        } => commands::bench_jacobi(g, graph.as_deref(), kind, &orders, &ks, h, reps, &out),
    }?;
    println!("{}", serde_json::to_string(&manifest).map_err(CliError::internal)?);
    Ok(())
}

fn main() -> ExitCode {
    // clap prints usage and exits with status 2 on argument errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
