use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use txforge_core::node::SubmitMode;
use txforge_core::session::{
    replay, run_in_process, ConfigError, LogError, Mode, SessionConfig, SessionError, SessionLog, SessionOutcome,
    SessionReport, WireSession, LOG_FILE, REPORT_FILE, SUMMARY_FILE,
};

use crate::node::Node;

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATIONS: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "txforge",
    version,
    about = "Drive transactions through their lifecycle and check DApp off-chain state"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the node for an external DApp and traverse what it submits.
    Serve(SessionArgs),
    /// Run a batch session and write its report.
    Run(SessionArgs),
    /// Re-execute a recorded session and re-judge its snapshots.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a written report again.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, env = "TXFORGE_SEED")]
    pub seed: Option<u64>,
    /// traverse or soak; overrides the config mode.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl SessionArgs {
    fn load(&self) -> Result<SessionConfig, CliError> {
        let mut config = SessionConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(mode) = self.mode {
            config.mode = mode;
        }
        if config.mode == Mode::Replay {
            return Err(CliError::Usage("replay sessions run with `txforge replay --log <file>`".into()));
        }
        config.validate()?;
        Ok(config)
    }

    fn out_dir(&self, config: &SessionConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| config.output.clone())
    }
}

/// Runs a command, returning the process exit code.
pub fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.load()?;
            let out = args
                .out_dir(&config)
                .ok_or_else(|| CliError::Usage("`run` needs --out or `output` in the config".into()))?;
            let outcome = if config.in_process() {
                run_in_process(&config)?
            } else {
                if config.serve.max_txs.is_none() && config.serve.idle_timeout_ms.is_none() {
                    return Err(CliError::Usage(
                        "a wire session under `run` needs serve.max_txs or serve.idle_timeout_ms".into(),
                    ));
                }
                wire(&config)?
            };
            finish(&outcome, Some(&out))
        }
        Command::Serve(args) => {
            let config = args.load()?;
            if config.in_process() {
                return Err(CliError::Usage("`serve` attaches an external DApp; use `run` for [dapp] sessions".into()));
            }
            let outcome = wire(&config)?;
            finish(&outcome, args.out_dir(&config).as_deref())
        }
        Command::Replay { log, out } => {
            let recorded = SessionLog::read(&log)?;
            let report = replay(&recorded)?;
            if let Some(dir) = &out {
                report.write(dir).map_err(io_err(dir))?;
            }
            print!("{}", report.summary());
            Ok(code(&report))
        }
        Command::Report { input } => {
            let path = input.join(REPORT_FILE);
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let report = SessionReport::from_json(&text).map_err(CliError::Usage)?;
            let summary = report.summary();
            let target = input.join(SUMMARY_FILE);
            std::fs::write(&target, &summary).map_err(io_err(&target))?;
            print!("{summary}");
            Ok(code(&report))
        }
    }
}

fn code(report: &SessionReport) -> u8 {
    if report.has_violations() {
        EXIT_VIOLATIONS
    } else {
        EXIT_CLEAN
    }
}

fn finish(outcome: &SessionOutcome, out: Option<&Path>) -> Result<u8, CliError> {
    if let Some(dir) = out {
        outcome.report.write(dir).map_err(io_err(dir))?;
        outcome.log.write(&dir.join(LOG_FILE))?;
    }
    print!("{}", outcome.report.summary());
    Ok(code(&outcome.report))
}

/// Probes the sources, starts the listeners and traverses until a stop
/// condition or Ctrl-C.
fn wire(config: &SessionConfig) -> Result<SessionOutcome, CliError> {
    let session = WireSession::connect(config)?;
    let controller = Arc::new(Mutex::new(session.controller()));
    let serve = &config.serve;
    let node = Node::start(&serve.http, &serve.stream, controller.clone(), SubmitMode::Queued)
        .map_err(|source| CliError::Io { path: PathBuf::from(&serve.http), source })?;
    eprintln!("txforge: http on {}, stream on {}", node.http_addr(), node.stream_addr());
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    node.runtime().spawn(async move {
        if tokio::signal::ctrl_c().await.is_ok() {
            flag.store(true, Ordering::Relaxed);
        }
    });
    let outcome = session.run(controller, &stop)?;
    drop(node);
    Ok(outcome)
}
