//! End-to-end drivers behind the command-line tools: scenario runs with
//! recording, the signal-control comparison and the ghost-attack
//! evaluation.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cosim::{world_frame, RecordingError, RecordingHeader, RecordingWriter};
use crate::model::ParticipantId;
use crate::signals::{
    aggregate_lost_time, write_lost_time_csv, LostTimeRecord, LostTimeStats, LostTimeSummary,
};
use crate::sim::{GhostLabel, GhostSpec, Scenario, SimError, World};
use crate::v2x::{
    plausibility_check, run_attack, MisbehaviorVerdict, PlausibilityConfig, V2xObserver,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Recording(#[from] RecordingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("configs differ beyond the signal program: {0}")]
    ConfigMismatch(String),
    #[error("{0}")]
    Invalid(String),
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn recording_header(world: &World) -> RecordingHeader {
    RecordingHeader::new(
        world.anchor(),
        world.dt(),
        world.config().environment.clone(),
    )
}

/// Runs a scenario to its end and returns the lost-time records. With a
/// path, every frame is streamed into a recording.
pub fn simulate(
    scenario: &Scenario,
    recording: Option<&Path>,
) -> Result<Vec<LostTimeRecord>, ExperimentError> {
    let mut world = World::new(scenario)?;
    let mut writer = match recording {
        Some(p) => Some(RecordingWriter::create(p, recording_header(&world))?),
        None => None,
    };
    loop {
        if let Some(w) = writer.as_mut() {
            w.write_frame(&world_frame(&world))?;
        }
        if world.finished() {
            break;
        }
        world.step();
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(world.lost_time_records().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration: f64,
    pub dt: f64,
    pub signal_program: Option<String>,
    pub environment: crate::sim::Environment,
    pub completed_trips: usize,
    /// `None` when no participant completed its route.
    pub lost_time: Option<LostTimeSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub recording: PathBuf,
    pub lost_time_csv: PathBuf,
    pub summary_json: PathBuf,
    pub summary: RunSummary,
}

/// Writes `<stem>.dtrec`, `<stem>_lost_time.csv` and `<stem>_summary.json`
/// into `out_dir`.
pub fn run_scenario(
    scenario: &Scenario,
    out_dir: &Path,
    stem: &str,
) -> Result<RunOutputs, ExperimentError> {
    std::fs::create_dir_all(out_dir).map_err(io_at(out_dir))?;
    let recording = out_dir.join(format!("{stem}.dtrec"));
    let lost_time_csv = out_dir.join(format!("{stem}_lost_time.csv"));
    let summary_json = out_dir.join(format!("{stem}_summary.json"));
    let records = simulate(scenario, Some(&recording))?;
    let file = std::fs::File::create(&lost_time_csv).map_err(io_at(&lost_time_csv))?;
    write_lost_time_csv(&records, file).map_err(csv_err(&lost_time_csv))?;
    let c = &scenario.config;
    let summary = RunSummary {
        seed: c.seed,
        duration: c.duration,
        dt: c.effective_dt(),
        signal_program: c.signal_program.clone(),
        environment: c.environment.clone(),
        completed_trips: records.len(),
        lost_time: aggregate_lost_time(&records).ok(),
    };
    write_json(&summary_json, &summary)?;
    Ok(RunOutputs {
        recording,
        lost_time_csv,
        summary_json,
        summary,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(io_at(path))
}

/// Checks that two scenarios differ at most in signal program and seed.
pub fn check_comparable(base: &Scenario, variant: &Scenario) -> Result<(), ExperimentError> {
    let strip = |s: &Scenario| {
        let mut c = s.config.clone();
        c.signal_program = None;
        c.seed = 0;
        c.network.clear();
        c
    };
    if base.network != variant.network {
        return Err(ExperimentError::ConfigMismatch("networks differ".into()));
    }
    let (a, b) = (strip(base), strip(variant));
    if a.demand != b.demand {
        return Err(ExperimentError::ConfigMismatch("demand differs".into()));
    }
    if a != b {
        return Err(ExperimentError::ConfigMismatch(
            "behavior, timing or environment differ".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: String,
    /// `None` for the row pooling every seed.
    pub seed: Option<u64>,
    pub summary: LostTimeSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeChange {
    pub vru_pct: Option<f64>,
    pub vehicles_pct: Option<f64>,
    pub all_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalExperimentReport {
    pub base_program: String,
    pub variant_program: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<VariantRow>,
    pub base: LostTimeSummary,
    pub variant: LostTimeSummary,
    /// Change of the average lost time, variant against base, in percent.
    pub change: RelativeChange,
}

fn pct(base: Option<LostTimeStats>, variant: Option<LostTimeStats>) -> Option<f64> {
    let (b, v) = (base?, variant?);
    (b.avg > 0.0).then(|| (v.avg - b.avg) / b.avg * 100.0)
}

/// Runs both scenarios for `repetitions` seeds starting at the base seed.
/// Seeds run in parallel; results do not depend on scheduling.
pub fn signal_experiment(
    base: &Scenario,
    variant: &Scenario,
    repetitions: usize,
) -> Result<SignalExperimentReport, ExperimentError> {
    check_comparable(base, variant)?;
    if repetitions == 0 {
        return Err(ExperimentError::Invalid(
            "repetitions must be at least 1".into(),
        ));
    }
    let seeds: Vec<u64> = (0..repetitions as u64)
        .map(|k| base.config.seed.wrapping_add(k))
        .collect();
    let jobs: Vec<(usize, u64)> = [0, 1]
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let results: Vec<Result<Vec<LostTimeRecord>, ExperimentError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(v, seed)| {
                let mut s = if v == 0 {
                    base.clone()
                } else {
                    variant.clone()
                };
                s.config.seed = seed;
                scope.spawn(move || simulate(&s, None))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let name = |s: &Scenario| {
        s.config
            .signal_program
            .clone()
            .unwrap_or_else(|| "none".into())
    };
    let names = [name(base), name(variant)];
    let mut rows = Vec::new();
    let mut pooled: [Vec<LostTimeRecord>; 2] = [Vec::new(), Vec::new()];
    for (&(v, seed), records) in jobs.iter().zip(results) {
        let records = records?;
        let summary = aggregate_lost_time(&records).map_err(|_| {
            ExperimentError::Invalid(format!("{} seed {seed}: no completed trips", names[v]))
        })?;
        rows.push(VariantRow {
            variant: names[v].clone(),
            seed: Some(seed),
            summary,
        });
        pooled[v].extend(records);
    }
    let base_sum = aggregate_lost_time(&pooled[0]).expect("non-empty by construction");
    let var_sum = aggregate_lost_time(&pooled[1]).expect("non-empty by construction");
    rows.push(VariantRow {
        variant: names[0].clone(),
        seed: None,
        summary: base_sum.clone(),
    });
    rows.push(VariantRow {
        variant: names[1].clone(),
        seed: None,
        summary: var_sum.clone(),
    });
    let change = RelativeChange {
        vru_pct: pct(base_sum.vru, var_sum.vru),
        vehicles_pct: pct(base_sum.vehicles, var_sum.vehicles),
        all_pct: pct(Some(base_sum.all), Some(var_sum.all)).unwrap_or(0.0),
    };
    let [base_program, variant_program] = names;
    Ok(SignalExperimentReport {
        base_program,
        variant_program,
        seeds,
        rows,
        base: base_sum,
        variant: var_sum,
        change,
    })
}

impl SignalExperimentReport {
    /// One line per (variant, seed, bucket); seed `all` marks pooled rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variant", "seed", "bucket", "count", "avg", "max", "min"])?;
        for row in &self.rows {
            let seed = row
                .seed
                .map_or_else(|| "all".to_string(), |s| s.to_string());
            for (bucket, stats) in buckets(&row.summary) {
                let Some(s) = stats else { continue };
                w.write_record([
                    row.variant.clone(),
                    seed.clone(),
                    bucket.to_string(),
                    s.count.to_string(),
                    s.avg.to_string(),
                    s.max.to_string(),
                    s.min.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let fmt = |s: Option<LostTimeStats>| {
            s.map_or_else(
                || "        -        -        -".to_string(),
                |s| format!("{:9.2}{:9.2}{:9.2}", s.avg, s.max, s.min),
            )
        };
        out.push_str(&format!(
            "{:<10}{:>6}  {:<9}{:>9}{:>9}{:>9}\n",
            "variant", "seed", "bucket", "avg", "max", "min"
        ));
        for row in &self.rows {
            let seed = row
                .seed
                .map_or_else(|| "all".to_string(), |s| s.to_string());
            for (bucket, stats) in buckets(&row.summary) {
                out.push_str(&format!(
                    "{:<10}{:>6}  {:<9}{}\n",
                    row.variant,
                    seed,
                    bucket,
                    fmt(stats)
                ));
            }
        }
        let p = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.1} %"));
        out.push_str(&format!(
            "\naverage lost time {} vs {}: VRU {}, vehicles {}, all {}\n",
            self.variant_program,
            self.base_program,
            p(self.change.vru_pct),
            p(self.change.vehicles_pct),
            p(Some(self.change.all_pct)),
        ));
        out
    }
}

fn buckets(s: &LostTimeSummary) -> [(&'static str, Option<LostTimeStats>); 3] {
    [
        ("vru", s.vru),
        ("vehicles", s.vehicles),
        ("all", Some(s.all)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub label: Option<GhostLabel>,
    pub victim_speed_at_start: Option<f64>,
    pub victim_min_speed_5s: Option<f64>,
    /// Seconds from attack start until the victim is below half its speed
    /// at the start.
    pub time_to_half_speed: Option<f64>,
    pub verdicts: usize,
    pub flagged_stations: Vec<ParticipantId>,
    /// Share of verdicts that name a spoofed station; `None` without verdicts.
    pub precision: Option<f64>,
    /// Share of spoofed stations with at least one verdict; `None` without
    /// an attack.
    pub recall: Option<f64>,
}

pub struct AttackOutputs {
    pub report: AttackReport,
    pub verdicts: Vec<MisbehaviorVerdict>,
    pub labels: Vec<GhostLabel>,
}

/// Runs the attack, records the attacked scenario if a path is given and
/// scores the plausibility checks against the injected ground truth.
pub fn attack_experiment(
    scenario: &Scenario,
    spec: &GhostSpec,
    cfg: &PlausibilityConfig,
    recording: Option<&Path>,
) -> Result<AttackOutputs, ExperimentError> {
    let mut world = World::new(scenario)?;
    let mut obs = V2xObserver::new(&world);
    let mut writer = match recording {
        Some(p) => Some(RecordingWriter::create(p, recording_header(&world))?),
        None => None,
    };
    let mut write_err = None;
    let run = run_attack(&mut world, spec, |w| {
        obs.observe(w);
        if let Some(rec) = writer.as_mut() {
            if let Err(e) = rec.write_frame(&world_frame(w)) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    let verdicts = plausibility_check(&obs.cams, &obs.perception, &world.anchor(), cfg);
    let labels = world.ghost_labels().to_vec();
    let spoofed: BTreeSet<ParticipantId> = labels.iter().map(|l| l.ghost_id).collect();
    let flagged: BTreeSet<ParticipantId> = verdicts.iter().map(|v| v.station_id).collect();
    let true_verdicts = verdicts
        .iter()
        .filter(|v| spoofed.contains(&v.station_id))
        .count();
    let precision = (!verdicts.is_empty()).then(|| true_verdicts as f64 / verdicts.len() as f64);
    let recall = (!spoofed.is_empty())
        .then(|| spoofed.intersection(&flagged).count() as f64 / spoofed.len() as f64);
    let v0 = run.speed_at_start();
    let report = AttackReport {
        time_to_half_speed: v0
            .and_then(|v0| run.first_below(0.5 * v0))
            .zip(run.label.as_ref())
            .map(|(t, l)| t - l.start_t),
        victim_min_speed_5s: run
            .label
            .as_ref()
            .and_then(|l| run.min_speed_between(l.start_t, l.start_t + 5.0)),
        victim_speed_at_start: v0,
        label: run.label,
        verdicts: verdicts.len(),
        flagged_stations: flagged.into_iter().collect(),
        precision,
        recall,
    };
    Ok(AttackOutputs {
        report,
        verdicts,
        labels,
    })
}

pub fn write_verdicts_csv<W: Write>(verdicts: &[MisbehaviorVerdict], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "station_id",
        "rule",
        "severity",
        "timestamp",
        "measured",
        "bound",
        "messages",
    ])?;
    for v in verdicts {
        let msgs: Vec<String> = v.evidence.messages.iter().map(|m| m.to_string()).collect();
        w.write_record([
            v.station_id.to_string(),
            format!("{:?}", v.rule),
            format!("{:?}", v.severity).to_lowercase(),
            v.timestamp.to_string(),
            v.evidence.measured.to_string(),
            v.evidence.bound.to_string(),
            msgs.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}
