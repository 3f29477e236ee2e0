use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wgpca::cli::{run_pipeline, Command, RunConfig, SynthKind, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "wgpca", version, about = "Geodesic PCA of histograms in Wasserstein space")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Wasserstein barycenter of 1D histograms.
    Barycenter,
    /// Log-PCA in the tangent space at the barycenter.
    Logpca,
    /// Iterative geodesic PCA with a t0 search per component.
    GpcaIter,
    /// Geodesic surface fitted jointly, started from the iterative components.
    GpcaSurface,
    /// Geodesic PCA of 2D measures on a pixel lattice.
    #[command(name = "gpca-2d")]
    Gpca2d,
    /// Log-PCA, iterative and surface GPCA with an error table.
    Compare,
    /// Writes a synthetic dataset.
    Synth,
}

#[derive(ValueEnum, Clone, Copy)]
enum Kind {
    Gaussian,
    Blobs,
}

#[derive(Args)]
struct Opts {
    /// Input CSV files. 1D: first column x, one column per histogram. 2D: one file per measure with i,j,weight rows.
    #[arg(long = "input", short, global = true)]
    inputs: Vec<PathBuf>,
    /// Domain ends, e.g. `--omega=-10,10`.
    #[arg(long, global = true, value_name = "A,B", value_parser = parse_pair, allow_hyphen_values = true)]
    omega: Option<(f64, f64)>,
    #[arg(long, global = true, default_value_t = 256)]
    n_grid: usize,
    #[arg(long, global = true, default_value_t = 12)]
    rows: usize,
    #[arg(long, global = true, default_value_t = 12)]
    cols: usize,
    /// Number of components.
    #[arg(long, short, global = true, default_value_t = 2)]
    k: usize,
    /// Candidate midpoints, comma separated. Defaults to 21 points on [-0.95, 0.95].
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    t0: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 1e-8)]
    eta: f64,
    #[arg(long, global = true, default_value_t = 5000)]
    max_outer: usize,
    #[arg(long, global = true, default_value_t = 20000)]
    max_inner: usize,
    /// Quantile levels used for Wasserstein distances.
    #[arg(long, global = true, default_value_t = 10000)]
    q: usize,
    /// Entropic regularization of the 2D barycenter (pixel units).
    #[arg(long, global = true, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Number of synthetic measures.
    #[arg(long, short, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, default_value_t = 21)]
    samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Kind::Gaussian)]
    kind: Kind,
    #[arg(long, short, global = true, env = OUT_DIR_ENV, default_value = "wgpca-out")]
    out_dir: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got '{s}'"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((num(a)?, num(b)?))
}

fn config(cli: Cli) -> RunConfig {
    let o = cli.opts;
    let defaults = RunConfig::default();
    RunConfig {
        command: match cli.command {
            Cmd::Barycenter => Command::Barycenter,
            Cmd::Logpca => Command::Logpca,
            Cmd::GpcaIter => Command::GpcaIter,
            Cmd::GpcaSurface => Command::GpcaSurface,
            Cmd::Gpca2d => Command::Gpca2d,
            Cmd::Compare => Command::Compare,
            Cmd::Synth => Command::Synth,
        },
        inputs: o.inputs,
        omega: o.omega,
        n_grid: o.n_grid,
        rows: o.rows,
        cols: o.cols,
        k: o.k,
        t0_grid: o.t0.unwrap_or(defaults.t0_grid),
        eta: o.eta,
        max_outer: o.max_outer,
        max_inner: o.max_inner,
        q: o.q,
        epsilon: o.epsilon,
        seed: o.seed,
        n: o.n,
        samples: o.samples,
        kind: match o.kind {
            Kind::Gaussian => SynthKind::Gaussian,
            Kind::Blobs => SynthKind::Blobs,
        },
        out_dir: o.out_dir,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = config(cli);
    match run_pipeline(&config) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            for row in &summary.errors {
                println!("{:<14} k={} error={:.6e}", row.method, row.k, row.error);
            }
            for c in &summary.not_converged {
                log::warn!("{c} stopped at the iteration cap");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
