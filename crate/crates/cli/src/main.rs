use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use graph_evidence_cli::{
    error_exit_code, run_bayes_factor_sweep, run_bound_default, run_bound_surface, run_er_sweep,
    run_ie_histogram, run_sbm_heatmap, run_select, Config,
};

#[derive(Parser)]
#[command(
    name = "graph-evidence",
    version,
    about = "Bayesian evidence model selection for undirected graphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    #[value(name = "er_sweep")]
    ErSweep,
    #[value(name = "bayes_factor_sweep")]
    BayesFactorSweep,
    #[value(name = "sbm_heatmap")]
    SbmHeatmap,
    #[value(name = "ie_histogram")]
    IeHistogram,
    #[value(name = "bound_surface")]
    BoundSurface,
}

#[derive(Subcommand)]
enum Cmd {
    /// Select the best model for each graph file and print JSON reports.
    Select {
        /// Graph files (edge list, or dense 0/1 CSV with a .csv extension).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Block counts for the SBM candidates.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k: Vec<usize>,
        /// Fixed membership file applied to every SBM candidate.
        #[arg(long)]
        membership: Option<PathBuf>,
        /// Drop self-loops and count pairs as C(n_v, 2).
        #[arg(long)]
        no_loops: bool,
        /// Also write a per-model five-number summary CSV across files.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep and write its CSV.
    Simulate {
        #[arg(value_enum)]
        experiment: Experiment,
        /// Flat key=value settings file; unknown keys are rejected.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Master seed; every sweep cell derives its own stream from it.
        #[arg(long)]
        seed: u64,
        /// Worker threads (defaults to all cores); output is identical either way.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the IE selection lower-bound surface for one graph size.
    Bound {
        /// Number of vertices.
        #[arg(long)]
        nv: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Select {
            files,
            k,
            membership,
            no_loops,
            csv,
        } => run_select(
            &files,
            &k,
            membership.as_deref(),
            no_loops,
            csv.as_deref(),
            &mut std::io::stdout().lock(),
        ),
        Cmd::Simulate {
            experiment,
            config,
            out,
            seed,
            threads,
        } => Config::load(&config).and_then(|cfg| match experiment {
            Experiment::ErSweep => run_er_sweep(&cfg, seed, threads, &out),
            Experiment::BayesFactorSweep => run_bayes_factor_sweep(&cfg, seed, threads, &out),
            Experiment::SbmHeatmap => run_sbm_heatmap(&cfg, seed, threads, &out),
            Experiment::IeHistogram => run_ie_histogram(&cfg, seed, threads, &out),
            Experiment::BoundSurface => run_bound_surface(&cfg, &out),
        }),
        Cmd::Bound { nv, out } => run_bound_default(nv, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
