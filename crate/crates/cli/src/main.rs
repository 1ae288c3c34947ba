//! `taf-twin` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "taf-twin",
    version,
    about = "Headless traffic digital-twin co-simulation kernel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of a scenario config.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Tick length in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario; writes a recording, a lost-time CSV and a summary.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// File stem of the outputs; defaults to the config's stem.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Serve a scenario as co-simulation master over TCP.
    Serve {
        config: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Barrier timeout per frame in milliseconds.
        #[arg(long, default_value_t = 200)]
        timeout_ms: u64,
        /// Simulated seconds per wall-clock second; 0 runs unpaced.
        #[arg(long, default_value_t = 1.0)]
        realtime: f64,
        /// Wait for this many clients before the first frame.
        #[arg(long, default_value_t = 0)]
        min_clients: usize,
        #[arg(long)]
        max_frames: Option<u64>,
        /// Recording written while serving.
        #[arg(long)]
        record: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare two signal programs over several seeds.
    SignalExp {
        base: PathBuf,
        variant: PathBuf,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a ghost-vehicle attack and evaluate the misbehaviour checks.
    Attack {
        config: PathBuf,
        attack: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Project, fuse and track camera detections into an object-list CSV.
    Ingest {
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Local frame origin as `lat,lon[,alt]`.
        #[arg(long, conflicts_with = "network")]
        anchor: Option<String>,
        /// Take the local frame origin from a network file.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        gate: Option<f64>,
        #[arg(long)]
        max_missed: Option<u32>,
    },
    /// Play a recording back as a FRAME stream.
    Replay {
        recording: PathBuf,
        /// Playback speed factor; 0 replays unpaced.
        #[arg(long, default_value_t = 0.0)]
        speed: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Layer one recording onto another.
    Overdub {
        base: PathBuf,
        overlay: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Let the overlay's signal track replace the base track.
        #[arg(long)]
        signal_override: bool,
    },
    /// Check a network file or scenario config.
    Validate { file: PathBuf },
    /// Print the ranked threat register.
    Threats {
        /// Register file; the shipped register when omitted.
        #[arg(long)]
        register: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            name,
            overrides,
        } => commands::run(&config, &out, name, &overrides),
        Command::Serve {
            config,
            port,
            host,
            timeout_ms,
            realtime,
            min_clients,
            max_frames,
            record,
            overrides,
        } => commands::serve(commands::ServeArgs {
            config,
            host,
            port,
            timeout_ms,
            realtime,
            min_clients,
            max_frames,
            record,
            overrides,
        }),
        Command::SignalExp {
            base,
            variant,
            repetitions,
            out,
            overrides,
        } => commands::signal_exp(&base, &variant, repetitions, &out, &overrides),
        Command::Attack {
            config,
            attack,
            out,
            overrides,
        } => commands::attack(&config, &attack, &out, &overrides),
        Command::Ingest {
            calibration,
            detections,
            anchor,
            network,
            out,
            radius,
            gate,
            max_missed,
        } => commands::ingest(commands::IngestArgs {
            calibration,
            detections,
            anchor,
            network,
            out,
            radius,
            gate,
            max_missed,
        }),
        Command::Replay {
            recording,
            speed,
            out,
        } => commands::replay(&recording, speed, out.as_deref()),
        Command::Overdub {
            base,
            overlay,
            out,
            signal_override,
        } => commands::overdub(&base, &overlay, &out, signal_override),
        Command::Validate { file } => commands::validate(&file),
        Command::Threats { register, json } => commands::threats(register.as_deref(), json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taf-twin: {e}");
            ExitCode::from(e.code())
        }
    }
}
