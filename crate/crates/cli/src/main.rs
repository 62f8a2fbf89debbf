use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod run;

#[derive(Debug, Parser, Serialize)]
#[command(name = "widewalk", version, about = "Expanders, s-wide replacement walks and bias amplification")]
pub struct Cli {
    /// System config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Cap on enumerated items or table entries.
    #[arg(long, global = true, default_value_t = 1 << 28)]
    pub budget: u128,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build graphs and measure their spectra.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Sample wide replacement walks.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Run an exact check; exit 0 pass, 1 violation, 4 hypotheses unmet.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Base codes, amplified encoding and code reports.
    #[command(subcommand)]
    Code(CodeCmd),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphCmd {
    /// AGHP small-bias Cayley graph on F_2^r.
    Aghp {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        ell: u32,
    },
    /// Complete graph on F_2^m, optionally tiled into F_2^dim.
    Complete {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        no_selfloop: bool,
        #[arg(long)]
        dim: Option<u32>,
    },
    /// Spectral report of a graph file.
    Spectrum {
        path: PathBuf,
        /// Dense eigen-decomposition instead of character sums.
        #[arg(long)]
        dense: bool,
        /// Random characters to sample instead of an exact scan.
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkCmd {
    Sample {
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Steps; defaults to the config's t.
        #[arg(long)]
        t: Option<usize>,
        /// Start the walk at this position instead of at a_0.
        #[arg(long, default_value_t = 0)]
        pivot: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    /// Wide-walk vs pure-walk trajectories; steps default to 0..=s.
    Pseudorandomness {
        #[arg(long)]
        steps: Option<usize>,
    },
    /// First blocks of k consecutive inner vertices; k defaults to 1..=s.
    Uniformity {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Bounds on eps_k and sigma_k for k = 0..s.
    BaseCase,
    /// Recurrences for s < k <= kmax (default 3s).
    Induction {
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// eps_t <= (2 lambda_B)^(t (1 - 4/s)); t defaults to the config's t.
    BiasLemma {
        #[arg(long)]
        t: Option<usize>,
    },
    /// sigma_k^2 <= E_a[eps_{k-1}(a)^2] + lambda_B^2 sigma_{k-1}^2.
    FirstStep {
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// eps_k computed directly and from a walk started in the middle.
    MiddleStart {
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Pure random-walk bounds on a single graph.
    RandomWalk {
        /// Graph file; defaults to the config's outer graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// balanced, zero, parity:HEX or a JSON file of 0/1 values.
        #[arg(long, default_value = "balanced")]
        f: String,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Closed forms substituted into the recurrences on a parameter grid.
    Arithmetic {
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.2, 0.25])]
        lambdas: Vec<f64>,
        #[arg(long = "s-values", value_delimiter = ',', default_values_t = [5u32, 8, 16, 32])]
        s_values: Vec<u32>,
        #[arg(long, default_value_t = 200)]
        kmax: usize,
    },
    /// Probability of staying inside a set vs the hitting bound.
    Hitting {
        /// Graph file; defaults to the config's outer graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// `first-K` or comma-separated hex vertices.
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 12)]
        tmax: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Spectral,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeCmd {
    /// Random base code with exhaustively verified bias.
    GenBase {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 1000)]
        max_tries: usize,
    },
    /// Amplified codeword of one message, one bit per walk seed.
    Encode {
        #[arg(long)]
        base: PathBuf,
        /// Message in hex, bit i selecting base-code row i.
        #[arg(long)]
        message: String,
        #[arg(long)]
        t: Option<usize>,
        /// Write packed bytes to --out instead of hex.
        #[arg(long)]
        raw: bool,
    },
    /// Bias, rate and distance of the amplified code.
    Report {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value_t = Method::Spectral)]
        method: Method,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(run::exit_code_for(&e))
        }
    }
}
