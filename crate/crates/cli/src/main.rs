mod commands;
mod repl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semnav_core::world::Pose;

const EXIT_INPUT: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "semnav", version, about = "Semantic navigation resolver, simulator, memory and analytics")]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    JsonLines,
}

#[derive(Debug, Clone, Args)]
pub struct Config {
    /// Directory holding nav_graph.geojson, semantic_objects_static.geojson and policy.yaml.
    #[arg(long, global = true, default_value = "fixtures/fiir")]
    pub world_dir: PathBuf,
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true)]
    pub pois: Option<PathBuf>,
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    /// Compiled digest; replaces a script's own digest reference.
    #[arg(long, global = true)]
    pub digest: Option<PathBuf>,
    /// Run without any digest, even if a script names one.
    #[arg(long, global = true, conflicts_with = "digest")]
    pub no_digest: bool,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, global = true, env = "XPLORER_PLATFORM_ID")]
    pub platform_id: Option<String>,
    #[arg(long, global = true, env = "CONTEXT_SERVER_URL")]
    pub context_url: Option<String>,
    /// Scripted oracle backend.
    #[arg(long, global = true, conflicts_with = "vlm_endpoint")]
    pub oracle: Option<PathBuf>,
    /// Chat-completion endpoint of a live model server.
    #[arg(long, global = true)]
    pub vlm_endpoint: Option<String>,
    #[arg(long, global = true, default_value = semnav_core::vlm::DEFAULT_MODEL)]
    pub vlm_model: String,
    /// Overrides the navigation seed of every script.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Deterministic timestamps starting at a fixed instant.
    #[arg(long, global = true)]
    pub frozen_clock: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolve one instruction with the deterministic cascade.
    Resolve {
        instruction: String,
        /// Robot pose as x,y,yaw; defaults to the context bridge or the origin.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Option<Pose>,
        /// Print every evaluated step.
        #[arg(long)]
        trace: bool,
    },
    /// Replay one scenario script.
    RunSession {
        script: PathBuf,
        /// Serve context through a local HTTP bridge.
        #[arg(long)]
        bridge: bool,
    },
    /// Replay several scripts at once, one thread per platform.
    RunConcurrent {
        #[arg(required = true, num_args = 2..)]
        scripts: Vec<PathBuf>,
        /// Also replay sequentially and compare audit multisets.
        #[arg(long)]
        check_sequential: bool,
    },
    /// Serve a simulated platform's context over HTTP.
    ServeBridge {
        #[arg(long, default_value = "127.0.0.1:8765")]
        bind: String,
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Option<Pose>,
        /// Take pose and detections from a scenario script.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Stop after this many seconds instead of running until killed.
        #[arg(long)]
        duration_s: Option<f64>,
    },
    /// Build M1-M5 and a digest from audit logs.
    ExtractMemory {
        /// Audit files or directories of *.jsonl files.
        #[arg(long, required = true, num_args = 1..)]
        logs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        platforms: Vec<String>,
        #[arg(long, default_value = "out/memory")]
        memory_dir: PathBuf,
    },
    /// Validate logs, back up, re-extract, diff and hash the digest.
    RefreshMemory {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        memory_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        platforms: Vec<String>,
    },
    /// Recompile digest.json from the category files in a memory directory.
    CompileDigest {
        #[arg(long)]
        memory_dir: PathBuf,
        /// Defaults to digest.json inside the memory directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-scenario and overall tallies over audit logs.
    Report {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        definitions: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Statistical tests.
    Stats {
        #[command(subcommand)]
        test: StatsCommand,
    },
    /// Type instructions and run them against a simulated platform.
    Repl {
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Option<Pose>,
        /// Serve context over a local HTTP bridge while the REPL runs.
        #[arg(long)]
        bridge: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    ClopperPearson {
        successes: u64,
        n: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    MannWhitney {
        /// Comma-separated sample.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        b: Vec<f64>,
        #[arg(long, value_enum, default_value = "two-sided")]
        alternative: AlternativeArg,
        /// Exact permutation p-value instead of the normal approximation.
        #[arg(long)]
        exact: bool,
    },
    CohensD {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "a_summary")]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "b_summary")]
        b: Vec<f64>,
        /// mean,sd,n of the first group (sample sd).
        #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "a")]
        a_summary: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "b")]
        b_summary: Option<Vec<f64>>,
    },
    /// Two-sided Fisher exact test on [[a, b], [c, d]].
    Fisher { a: u64, b: u64, c: u64, d: u64 },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlternativeArg {
    Greater,
    Less,
    TwoSided,
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y] => Ok(Pose::new(x, y, 0.0)),
        [x, y, yaw] => Ok(Pose::new(x, y, yaw)),
        _ => Err("expected x,y or x,y,yaw".into()),
    }
}

/// Errors classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

pub type CmdResult = Result<(), Failure>;

pub trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn init_tracing(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_tracing(cli.config.verbose);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
