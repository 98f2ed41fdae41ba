mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use commands::{Bc, Check};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "mixeig", version, about = "Eigenvalue asymptotics for a shrinking Neumann patch")]
struct Cli {
    /// -v info, -vv debug.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build and tag a half-ball mesh.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Mesh file (default: <out>/mesh.txt).
        #[arg(long)]
        mesh_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues and eigenfields on one mesh.
    Eig {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
        bc: Bc,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-space profile and the coefficient C(V, ψ).
    Profile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// H, E, N series of a field file as CSV.
    Frequency {
        field: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Comma-separated radii (default: [frequency] radii of --config).
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ε sweep with rate fit and optional checks.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        check: Vec<Check>,
    },
    /// Summarise a sweep.json.
    Report { input: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.cmd {
        Cmd::Mesh { config, epsilon, mesh_out, out } => {
            commands::mesh(&RunConfig::load(&config)?, epsilon, mesh_out, out)
        }
        Cmd::Eig { config, epsilon, bc, out } => commands::eig(&RunConfig::load(&config)?, epsilon, bc, out),
        Cmd::Profile { config, out } => commands::profile(&RunConfig::load(&config)?, out),
        Cmd::Frequency { field, lambda, radii, config, out } => {
            let radii = match (radii.is_empty(), config) {
                (false, _) => radii,
                (true, Some(c)) => RunConfig::load(&c)?.frequency.radii,
                (true, None) => config::Frequency::default().radii,
            };
            commands::frequency(&field, lambda, &radii, out)
        }
        Cmd::Sweep { config, out, check } => commands::sweep(&RunConfig::load(&config)?, out, &check),
        Cmd::Report { input } => commands::report(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
