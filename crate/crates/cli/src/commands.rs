use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use taf_twin::cosim::{
    encode_message, overdub as overdub_recordings, playback, serve as serve_kernel, Kernel,
    RecordingError, RecordingHeader, RecordingWriter, ScenarioRecording, ServeOptions,
};
use taf_twin::experiment::{
    attack_experiment, run_scenario, signal_experiment, write_json, write_verdicts_csv,
    ExperimentError,
};
use taf_twin::ingest::{
    export_object_list, ingest as ingest_tracks, load_calibrations, load_detections, IngestError,
    IngestParams,
};
use taf_twin::model::{validate_network, GeoAnchor, RoadNetwork};
use taf_twin::sim::{GhostSpec, Scenario, ScenarioConfig, ScenarioError, SimError, World};
use taf_twin::v2x::{
    default_register, score_threats, PlausibilityConfig, ThreatEntry, TOP_TIER_MIN_SCORE,
};

use crate::Overrides;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid inputs.
    Config(String),
    /// The command started but could not complete.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) -> CliResult {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(runtime_err(e)),
        _ => Ok(()),
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        config_err(e)
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::ConfigMismatch(_)
            | ExperimentError::Invalid(_)
            | ExperimentError::Sim(SimError::Route { .. } | SimError::Signal(_)) => config_err(e),
            _ => runtime_err(e),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        config_err(e)
    }
}

impl From<RecordingError> for CliError {
    fn from(e: RecordingError) -> Self {
        match e {
            RecordingError::InvalidSpeed(_) => config_err(e),
            _ => runtime_err(e),
        }
    }
}

fn load_scenario(path: &Path, o: &Overrides) -> Result<Scenario, CliError> {
    let s = Scenario::load(path)?;
    let mut config = s.config;
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(d) = o.duration {
        config.duration = d;
    }
    if let Some(dt) = o.dt {
        config.dt = dt;
        config.behavior.dt = None;
    }
    Ok(Scenario::new(config, s.network)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime_err(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

pub fn run(config: &Path, out: &Path, name: Option<String>, o: &Overrides) -> CliResult {
    let scenario = load_scenario(config, o)?;
    let stem = name.unwrap_or_else(|| stem_of(config));
    let outputs = run_scenario(&scenario, out, &stem)?;
    let s = &outputs.summary;
    println!("completed trips: {}", s.completed_trips);
    if let Some(lt) = &s.lost_time {
        println!("avg lost time (all): {:.2} s", lt.all.avg);
    }
    for p in [
        &outputs.recording,
        &outputs.lost_time_csv,
        &outputs.summary_json,
    ] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub struct ServeArgs {
    pub config: PathBuf,
    pub host: String,
    pub port: u16,
    pub timeout_ms: u64,
    pub realtime: f64,
    pub min_clients: usize,
    pub max_frames: Option<u64>,
    pub record: Option<PathBuf>,
    pub overrides: Overrides,
}

pub fn serve(args: ServeArgs) -> CliResult {
    let scenario = load_scenario(&args.config, &args.overrides)?;
    if !(args.realtime >= 0.0 && args.realtime.is_finite()) {
        return Err(config_err(format!(
            "--realtime must be >= 0, got {}",
            args.realtime
        )));
    }
    let world = World::new(&scenario).map_err(config_err)?;
    let header = RecordingHeader::new(
        world.anchor(),
        world.dt(),
        scenario.config.environment.clone(),
    );
    let mut kernel = Kernel::new(world);
    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .map_err(|e| runtime_err(format!("cannot listen on {}:{}: {e}", args.host, args.port)))?;
    let addr = listener.local_addr().map_err(runtime_err)?;
    eprintln!("listening on {addr}");

    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)).map_err(runtime_err)?;

    let mut writer = match &args.record {
        Some(p) => Some(RecordingWriter::create(p, header)?),
        None => None,
    };
    let mut write_err = None;
    let opts = ServeOptions {
        timeout: Duration::from_millis(args.timeout_ms),
        realtime_factor: (args.realtime > 0.0).then_some(args.realtime),
        max_frames: args.max_frames,
        min_clients: args.min_clients,
        ..ServeOptions::default()
    };
    let report = serve_kernel(listener, &mut kernel, &opts, &stop, |frame| {
        if let Some(w) = writer.as_mut() {
            if let Err(e) = w.write_frame(frame) {
                write_err.get_or_insert(e);
            }
        }
    })
    .map_err(runtime_err)?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    println!(
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    );
    Ok(())
}

pub fn signal_exp(
    base: &Path,
    variant: &Path,
    repetitions: usize,
    out: &Path,
    o: &Overrides,
) -> CliResult {
    let base = load_scenario(base, o)?;
    let variant = load_scenario(variant, o)?;
    let report = signal_experiment(&base, &variant, repetitions)?;
    std::fs::create_dir_all(out).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
    let csv_path = out.join("signal_experiment.csv");
    let mut file = create(&csv_path)?;
    report.write_csv(&mut file).map_err(runtime_err)?;
    file.flush().map_err(runtime_err)?;
    write_json(&out.join("signal_experiment.json"), &report)?;
    print!("{}", report.table());
    Ok(())
}

pub fn attack(config: &Path, attack: &Path, out: &Path, o: &Overrides) -> CliResult {
    let scenario = load_scenario(config, o)?;
    let spec: GhostSpec = read_json(attack)?;
    std::fs::create_dir_all(out).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
    let outputs = attack_experiment(
        &scenario,
        &spec,
        &PlausibilityConfig::default(),
        Some(&out.join("attack.dtrec")),
    )?;
    let verdicts_path = out.join("verdicts.csv");
    let mut file = create(&verdicts_path)?;
    write_verdicts_csv(&outputs.verdicts, &mut file).map_err(runtime_err)?;
    file.flush().map_err(runtime_err)?;
    write_json(&out.join("labels.json"), &outputs.labels)?;
    write_json(&out.join("attack_report.json"), &outputs.report)?;
    let r = &outputs.report;
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"));
    println!("verdicts: {}", r.verdicts);
    println!("precision: {}", opt(r.precision));
    println!("recall: {}", opt(r.recall));
    println!(
        "victim speed at start (m/s): {}",
        opt(r.victim_speed_at_start)
    );
    println!(
        "victim min speed within 5 s (m/s): {}",
        opt(r.victim_min_speed_5s)
    );
    Ok(())
}

pub struct IngestArgs {
    pub calibration: PathBuf,
    pub detections: PathBuf,
    pub anchor: Option<String>,
    pub network: Option<PathBuf>,
    pub out: PathBuf,
    pub radius: Option<f64>,
    pub gate: Option<f64>,
    pub max_missed: Option<u32>,
}

fn parse_anchor(text: &str) -> Result<GeoAnchor, CliError> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let parts =
        parts.map_err(|_| config_err(format!("--anchor expects lat,lon[,alt], got {text}")))?;
    match parts[..] {
        [lat, lon] => GeoAnchor::new(lat, lon, 0.0).map_err(config_err),
        [lat, lon, alt] => GeoAnchor::new(lat, lon, alt).map_err(config_err),
        _ => Err(config_err(format!(
            "--anchor expects lat,lon[,alt], got {text}"
        ))),
    }
}

pub fn ingest(args: IngestArgs) -> CliResult {
    let anchor = match (&args.anchor, &args.network) {
        (Some(a), _) => parse_anchor(a)?,
        (None, Some(n)) => RoadNetwork::load(n).map_err(config_err)?.anchor,
        (None, None) => return Err(config_err("one of --anchor or --network is required")),
    };
    let mut params = IngestParams::default();
    if let Some(r) = args.radius {
        params.merge_radius_m = r;
    }
    if let Some(g) = args.gate {
        params.tracker.gate_m = g;
    }
    if let Some(m) = args.max_missed {
        params.tracker.max_missed = m;
    }
    let calibs = load_calibrations(&args.calibration)?;
    let dets = load_detections(&args.detections)?;
    let tracks = ingest_tracks(&calibs, &dets, &anchor, &params)?;
    let mut file = create(&args.out)?;
    export_object_list(&tracks, &anchor, &mut file).map_err(runtime_err)?;
    file.flush().map_err(runtime_err)?;
    println!("{} tracks, wrote {}", tracks.len(), args.out.display());
    Ok(())
}

pub fn replay(recording: &Path, speed: f64, out: Option<&Path>) -> CliResult {
    let rec = ScenarioRecording::load(recording)?;
    let speed = if speed == 0.0 { f64::INFINITY } else { speed };
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut write_err = None;
    playback(&rec, speed, |frame| {
        if write_err.is_none() {
            if let Err(e) = sink.write_all(&encode_message(frame)) {
                write_err = Some(e);
            }
        }
    })?;
    match write_err.map_or_else(|| sink.flush(), Err) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(runtime_err(e)),
        _ => Ok(()),
    }
}

pub fn overdub(base: &Path, overlay: &Path, out: &Path, signal_override: bool) -> CliResult {
    let base = ScenarioRecording::load(base)?;
    let mut overlay = ScenarioRecording::load(overlay)?;
    overlay.header.signal_override |= signal_override;
    let merged = overdub_recordings(&base, &overlay).map_err(|e| match e {
        RecordingError::Incompatible(_) => config_err(e),
        e => e.into(),
    })?;
    merged.save(out)?;
    println!(
        "{} frames, {} ids renamed, wrote {}",
        merged.frames.len(),
        merged.header.remap.len(),
        out.display()
    );
    Ok(())
}

pub fn validate(file: &Path) -> CliResult {
    let value: serde_json::Value = read_json(file)?;
    let network = if value.get("lanes").is_some() {
        serde_json::from_value::<RoadNetwork>(value)
            .map_err(|e| config_err(format!("{}: {e}", file.display())))?
    } else {
        let config: ScenarioConfig = serde_json::from_value(value)
            .map_err(|e| config_err(format!("{}: {e}", file.display())))?;
        config.check()?;
        let scenario = Scenario::load(file)?;
        scenario.network
    };
    let report = validate_network(&network);
    if report.is_empty() {
        println!("{}: ok", file.display());
        return Ok(());
    }
    for f in &report.findings {
        println!("{f}");
    }
    Err(config_err(format!(
        "{}: {} finding(s)",
        file.display(),
        report.findings.len()
    )))
}

pub fn threats(register: Option<&Path>, json: bool) -> CliResult {
    let entries: Vec<ThreatEntry> = match register {
        Some(p) => read_json(p)?,
        None => default_register(),
    };
    let scored = score_threats(&entries).map_err(config_err)?;
    let mut text = String::new();
    if json {
        text = serde_json::to_string_pretty(&scored).expect("threats serialize");
        text.push('\n');
    } else {
        text += &format!(
            "{:<5} {:>5} {:>3} {:>3}  {:<4} name\n",
            "id", "score", "L", "D", "tier"
        );
        for t in &scored {
            let tier = if t.score >= TOP_TIER_MIN_SCORE {
                "top"
            } else {
                ""
            };
            text += &format!(
                "{:<5} {:>5} {:>3} {:>3}  {:<4} {}\n",
                t.id,
                t.score,
                t.likelihood,
                t.damage.max(),
                tier,
                t.name
            );
        }
    }
    emit(&text)?;
    Ok(())
}
