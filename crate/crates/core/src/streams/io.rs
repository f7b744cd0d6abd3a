use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    to_events, GroundTruthSample, ImuSample, MarkerDetection, MeasurementEvent, StreamKind, WidthSample,
};
use crate::error::{Error, Result};

/// A record type stored one-per-line in a JSON Lines stream.
pub trait StreamRecord: Serialize + DeserializeOwned + Clone {
    fn timestamp(&self) -> f64;

    /// Whether equal consecutive timestamps are rejected.
    const STRICTLY_INCREASING: bool = false;
}

impl StreamRecord for ImuSample {
    fn timestamp(&self) -> f64 {
        self.t
    }
}

impl StreamRecord for MarkerDetection {
    fn timestamp(&self) -> f64 {
        self.t
    }
}

impl StreamRecord for WidthSample {
    fn timestamp(&self) -> f64 {
        self.t
    }
}

impl StreamRecord for GroundTruthSample {
    fn timestamp(&self) -> f64 {
        self.t
    }

    const STRICTLY_INCREASING: bool = true;
}

/// Parses JSON Lines from a reader, validating timestamp order.
///
/// Blank lines are skipped but still counted for error line numbers.
pub fn parse_jsonl<R: StreamRecord>(reader: impl BufRead) -> Result<Vec<R>> {
    let mut out: Vec<R> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: R = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let t = record.timestamp();
        if let Some(prev) = out.last() {
            let p = prev.timestamp();
            if t < p || (R::STRICTLY_INCREASING && t == p) {
                return Err(Error::NonMonotonic { line: line_no, t });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<R: StreamRecord>(path: impl AsRef<Path>) -> Result<Vec<R>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file))
}

/// Reads one stream file and wraps its records as events with source index 0.
pub fn parse_stream(path: impl AsRef<Path>, kind: StreamKind) -> Result<Vec<MeasurementEvent>> {
    Ok(match kind {
        StreamKind::Imu => to_events(0, read_jsonl::<ImuSample>(path)?),
        StreamKind::Detections => to_events(0, read_jsonl::<MarkerDetection>(path)?),
        StreamKind::Width => to_events(0, read_jsonl::<WidthSample>(path)?),
    })
}

/// Writes records in canonical form: compact JSON, one object per line, trailing newline.
pub fn write_jsonl<R: Serialize>(records: &[R], mut writer: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_jsonl_file<R: Serialize>(records: &[R], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_jsonl(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
