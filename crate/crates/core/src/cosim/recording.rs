//! `.dtrec` scenario recordings.
//!
//! A recording is JSON lines: one header object, one FRAME message per tick
//! and a final `{"sha256":"..."}` line hashing every preceding byte. Files
//! whose name ends in `.gz` are gzip-compressed; readers detect gzip by its
//! magic bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::protocol::{decode_message, encode_message, FrameMessage, MessageKind};
use crate::model::{GeoAnchor, ParticipantId, Source};
use crate::sim::Environment;

pub const RECORDING_FORMAT: &str = "taf-twin-rec/1";

/// Allowed deviation of a frame's `sim_time` from the dt grid.
const TIME_GRID_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RecordingError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corrupt recording at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("incompatible recordings: {0}")]
    Incompatible(String),
    #[error("playback speed must be positive, got {0}")]
    InvalidSpeed(f64),
}

fn corrupt(line: usize, reason: impl Into<String>) -> RecordingError {
    RecordingError::Corrupt {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub format: String,
    pub anchor: GeoAnchor,
    pub dt: f64,
    #[serde(default)]
    pub metadata: Environment,
    /// Overlay ids renamed by the last over-dub, original → new.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub remap: BTreeMap<ParticipantId, ParticipantId>,
    /// When over-dubbed onto another recording, this signal track wins.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub signal_override: bool,
}

impl RecordingHeader {
    pub fn new(anchor: GeoAnchor, dt: f64, metadata: Environment) -> Self {
        Self {
            format: RECORDING_FORMAT.into(),
            anchor,
            dt,
            metadata,
            remap: BTreeMap::new(),
            signal_override: false,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Trailer {
    sha256: String,
}

/// Checks that `next` may follow `prev` in a recording with step `dt`.
fn check_sequence(prev: Option<&FrameMessage>, next: &FrameMessage, dt: f64) -> Result<(), String> {
    if next.kind != MessageKind::Frame {
        return Err(format!("expected FRAME, found {:?}", next.kind));
    }
    if !next.sim_time.is_finite() {
        return Err("non-finite sim_time".into());
    }
    if let Some(prev) = prev {
        if next.frame_no <= prev.frame_no {
            return Err(format!(
                "frame_no {} does not increase after {}",
                next.frame_no, prev.frame_no
            ));
        }
        let expected = prev.sim_time + (next.frame_no - prev.frame_no) as f64 * dt;
        if (next.sim_time - expected).abs() > TIME_GRID_TOL {
            return Err(format!(
                "sim_time {} off the dt grid (expected {expected})",
                next.sim_time
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecording {
    pub header: RecordingHeader,
    pub frames: Vec<FrameMessage>,
}

impl ScenarioRecording {
    pub fn new(header: RecordingHeader) -> Self {
        Self {
            header,
            frames: Vec::new(),
        }
    }

    pub fn push(&mut self, frame: FrameMessage) -> Result<(), RecordingError> {
        check_sequence(self.frames.last(), &frame, self.header.dt)
            .map_err(|r| corrupt(self.frames.len() + 2, r))?;
        self.frames.push(frame);
        Ok(())
    }

    /// Uncompressed file contents including the hash line.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = serde_json::to_vec(&self.header).expect("header serializes");
        body.push(b'\n');
        for f in &self.frames {
            body.extend_from_slice(&encode_message(f));
        }
        let trailer = Trailer {
            sha256: hex::encode(Sha256::digest(&body)),
        };
        body.extend_from_slice(&serde_json::to_vec(&trailer).expect("trailer serializes"));
        body.push(b'\n');
        body
    }

    /// Parses file contents, gzip-compressed or not.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RecordingError> {
        let text = if bytes.starts_with(&[0x1f, 0x8b]) {
            let mut out = Vec::new();
            GzDecoder::new(bytes).read_to_end(&mut out)?;
            out
        } else {
            bytes.to_vec()
        };
        if text.last() != Some(&b'\n') {
            return Err(corrupt(0, "missing final newline"));
        }
        let inner = &text[..text.len() - 1];
        let split = inner
            .iter()
            .rposition(|&b| b == b'\n')
            .ok_or_else(|| corrupt(1, "missing hash line"))?;
        let (body, trailer) = (&text[..=split], &inner[split + 1..]);
        let line_count = body.iter().filter(|&&b| b == b'\n').count();
        let trailer: Trailer = serde_json::from_slice(trailer)
            .map_err(|e| corrupt(line_count + 1, format!("bad hash line: {e}")))?;
        if hex::encode(Sha256::digest(body)) != trailer.sha256 {
            return Err(corrupt(line_count + 1, "hash mismatch"));
        }

        let mut lines = body.split(|&b| b == b'\n');
        let header: RecordingHeader = serde_json::from_slice(lines.next().unwrap_or_default())
            .map_err(|e| corrupt(1, format!("bad header: {e}")))?;
        if header.format != RECORDING_FORMAT {
            return Err(corrupt(1, format!("unknown format {:?}", header.format)));
        }
        if !(header.dt.is_finite() && header.dt > 0.0) {
            return Err(corrupt(1, format!("invalid dt {}", header.dt)));
        }
        let mut rec = Self::new(header);
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let frame = decode_message(line).map_err(|e| corrupt(i + 2, e.message))?;
            check_sequence(rec.frames.last(), &frame, rec.header.dt)
                .map_err(|r| corrupt(i + 2, r))?;
            rec.frames.push(frame);
        }
        Ok(rec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecordingError> {
        let mut w = RecordingWriter::create(path, self.header.clone())?;
        for f in &self.frames {
            w.write_frame(f)?;
        }
        w.finish()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecordingError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Ids that appear anywhere in the recording.
    pub fn participant_ids(&self) -> BTreeSet<ParticipantId> {
        self.frames
            .iter()
            .flat_map(|f| f.payload.iter().map(|p| p.id))
            .collect()
    }
}

/// Streams a recording to disk so a long run never holds all frames.
pub struct RecordingWriter {
    out: Box<dyn Write + Send>,
    hasher: Sha256,
    dt: f64,
    last: Option<FrameMessage>,
    line: usize,
}

impl RecordingWriter {
    pub fn create(path: impl AsRef<Path>, header: RecordingHeader) -> Result<Self, RecordingError> {
        let path = path.as_ref();
        let file = BufWriter::new(File::create(path)?);
        let gz = path.extension().is_some_and(|e| e == "gz");
        let out: Box<dyn Write + Send> = if gz {
            Box::new(GzEncoder::new(file, Compression::default()))
        } else {
            Box::new(file)
        };
        Self::new(out, header)
    }

    pub fn new(
        out: Box<dyn Write + Send>,
        header: RecordingHeader,
    ) -> Result<Self, RecordingError> {
        let mut w = Self {
            out,
            hasher: Sha256::new(),
            dt: header.dt,
            last: None,
            line: 1,
        };
        let mut bytes = serde_json::to_vec(&header).expect("header serializes");
        bytes.push(b'\n');
        w.emit(&bytes)?;
        Ok(w)
    }

    fn emit(&mut self, bytes: &[u8]) -> Result<(), RecordingError> {
        self.hasher.update(bytes);
        self.out.write_all(bytes)?;
        Ok(())
    }

    pub fn write_frame(&mut self, frame: &FrameMessage) -> Result<(), RecordingError> {
        self.line += 1;
        check_sequence(self.last.as_ref(), frame, self.dt).map_err(|r| corrupt(self.line, r))?;
        self.emit(&encode_message(frame))?;
        self.last = Some(FrameMessage {
            payload: Vec::new(),
            signals: None,
            ..frame.clone()
        });
        Ok(())
    }

    /// Writes the hash line and flushes.
    pub fn finish(mut self) -> Result<(), RecordingError> {
        let trailer = Trailer {
            sha256: hex::encode(self.hasher.clone().finalize()),
        };
        let mut bytes = serde_json::to_vec(&trailer).expect("trailer serializes");
        bytes.push(b'\n');
        self.out.write_all(&bytes)?;
        self.out.flush()?;
        Ok(())
    }
}

/// Frame as emitted during playback.
pub fn as_played(frame: &FrameMessage) -> FrameMessage {
    let mut f = frame.clone();
    for p in &mut f.payload {
        p.source = Source::Recorded;
    }
    f
}

/// Replays `rec` to `sink`, pacing frame `i` at `(t_i - t_0) / speed` wall
/// seconds after the start. An infinite speed replays unpaced. Returns the
/// wall time spent.
pub fn playback(
    rec: &ScenarioRecording,
    speed: f64,
    mut sink: impl FnMut(&FrameMessage),
) -> Result<Duration, RecordingError> {
    if speed.is_nan() || speed <= 0.0 {
        return Err(RecordingError::InvalidSpeed(speed));
    }
    let start = Instant::now();
    let t0 = rec.frames.first().map_or(0.0, |f| f.sim_time);
    for frame in &rec.frames {
        if speed.is_finite() {
            let due = start + Duration::from_secs_f64(((frame.sim_time - t0) / speed).max(0.0));
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        sink(&as_played(frame));
    }
    Ok(start.elapsed())
}

/// Layers `overlay` onto `base` frame by frame (matched on `frame_no`).
/// Overlay ids that also occur in `base` get fresh ids above every id in
/// either recording; the renaming is stored in the result's header.
pub fn overdub(
    base: &ScenarioRecording,
    overlay: &ScenarioRecording,
) -> Result<ScenarioRecording, RecordingError> {
    if base.header.dt != overlay.header.dt {
        return Err(RecordingError::Incompatible(format!(
            "dt {} vs {}",
            base.header.dt, overlay.header.dt
        )));
    }
    if base.header.anchor != overlay.header.anchor {
        return Err(RecordingError::Incompatible("anchor differs".into()));
    }
    let base_ids = base.participant_ids();
    let overlay_ids = overlay.participant_ids();
    let next = base_ids
        .iter()
        .chain(&overlay_ids)
        .max()
        .map_or(0, |m| m + 1);
    let remap: BTreeMap<_, _> = overlay_ids
        .intersection(&base_ids)
        .copied()
        .zip(next..)
        .collect();

    let mut frames: BTreeMap<u64, FrameMessage> = base
        .frames
        .iter()
        .map(|f| (f.frame_no, f.clone()))
        .collect();
    let base_start = base.frames.first().map(|f| (f.frame_no, f.sim_time));
    let overlay_start = overlay.frames.first().map(|f| (f.frame_no, f.sim_time));
    if let (Some((bn, bt)), Some((on, ot))) = (base_start, overlay_start) {
        let expected = bt + (on as f64 - bn as f64) * base.header.dt;
        if (ot - expected).abs() > TIME_GRID_TOL {
            return Err(RecordingError::Incompatible(
                "frame clocks are not aligned".into(),
            ));
        }
    }
    for of in &overlay.frames {
        let mut payload: Vec<_> = of
            .payload
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.id = remap.get(&p.id).copied().unwrap_or(p.id);
                p
            })
            .collect();
        match frames.get_mut(&of.frame_no) {
            Some(f) => {
                f.payload.append(&mut payload);
                f.payload.sort_by_key(|p| p.id);
                if overlay.header.signal_override && of.signals.is_some() {
                    f.signals = of.signals.clone();
                }
            }
            None => {
                payload.sort_by_key(|p| p.id);
                frames.insert(
                    of.frame_no,
                    FrameMessage {
                        payload,
                        ..of.clone()
                    },
                );
            }
        }
    }
    let mut header = base.header.clone();
    header.remap = remap;
    header.signal_override = false;
    let mut out = ScenarioRecording::new(header);
    for f in frames.into_values() {
        out.push(f)?;
    }
    Ok(out)
}
