//! `doxa`: model validation and checking, trace monitoring, protocol
//! sessions, simulation, belief curves and the HTTP service.

mod commands;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doxa_core::PatientClass;

#[derive(Debug, Parser)]
#[command(name = "doxa", version, propagate_version = true, about = "Belief-driven cognitive assessment toolkit")]
pub struct Cli {
    /// Belief profile (TOML); the built-in profile when omitted.
    #[arg(long, global = true, env = "DOXA_PROFILE")]
    pub profile: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct ShapeArgs {
    /// Pictures to match in one game.
    #[arg(long, default_value_t = 10)]
    pub rounds: u32,
    /// Maximum number of actions in one game.
    #[arg(long, default_value_t = 60)]
    pub step_cap: u32,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct StopArgs {
    /// Stop once this many tests have been run.
    #[arg(long, default_value_t = 10)]
    pub max_tests: usize,
    /// Stop after this many equal consecutive outcomes.
    #[arg(long, default_value_t = 3)]
    pub steady_k: usize,
    /// Alternations between two classes that count as an oscillation.
    #[arg(long, default_value_t = 4)]
    pub cycles: usize,
    /// Look for oscillations starting anywhere in the trace.
    #[arg(long)]
    pub sliding: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a model file is a well-formed probabilistic automaton.
    Validate {
        model: PathBuf,
    },
    /// Check a property corpus on a model; prints `name,state,result` CSV.
    Check {
        /// Model file (JSON).
        #[arg(required_unless_present = "class", conflicts_with = "class")]
        model: Option<PathBuf>,
        /// Use the built-in model of a class instead of a file.
        #[arg(long)]
        class: Option<PatientClass>,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Property corpus; the built-in corpus when omitted.
        #[arg(long)]
        properties: Option<PathBuf>,
        /// State to check at; the initial state when omitted.
        #[arg(long)]
        state: Option<String>,
    },
    /// Run a protocol session, one game word per input line.
    Protocol {
        /// Starting hypothesis (h, m or M). Taken from the log with --resume.
        #[arg(long, required_unless_present = "resume")]
        hypothesis: Option<PatientClass>,
        /// Read words from this file instead of standard input.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Session log; every step is appended.
        #[arg(long, default_value = "session.jsonl")]
        log: PathBuf,
        /// Continue the session recorded in --log.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Simulate protocol sessions for synthetic patients.
    Simulate {
        #[arg(long)]
        true_class: PatientClass,
        #[arg(long)]
        hypothesis: PatientClass,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        stop: StopArgs,
        /// Directory for report.json and the CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the stop conditions on a class trace; prints JSON.
    Monitor {
        trace: PathBuf,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Sample the belief curves of one test as CSV.
    Curves {
        /// Test whose curves to sample (h, m or M).
        #[arg(long)]
        meta: PatientClass,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Port; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Permit binding to a non-loopback address.
        #[arg(long)]
        allow_external: bool,
        /// Directory where sessions are stored; in memory when omitted.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Origin allowed by CORS (repeatable).
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Write the three class models as JSON files.
    ExportModels {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Class parameter file; Table 1 values when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        shape: ShapeArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("DOXA_LOG").init();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
