//! Corpus directory format.
//!
//! ```text
//! <dir>/manifest.txt
//!     baroslip-corpus
//!     format_version: 1
//!     geometry: 2x3
//!     sample_rate_hz: 100
//!     sequences: <n>
//!     sequence: <i> file=<name> frames=<len> barometer_range=<r> surface=<s> slip_type=<k> max_speed=<v> direction=<d>
//!     ...
//! <dir>/seq_0000.csv
//!     t,p0,p1,p2,p3,p4,p5,vx,vy,omega,label
//!     <one row per frame>
//! ```
//!
//! Reals are written in shortest round-trip form, so a load of a save is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sensor::{
    label_frame, ClassLabel, ConditionTag, LabeledSequence, TactileFrame, CHANNELS, COLS, ROWS,
};
use crate::Corpus;

pub const MAGIC: &str = "baroslip-corpus";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.txt";
pub const RECORD_HEADER: &str = "t,p0,p1,p2,p3,p4,p5,vx,vy,omega,label";

fn record_name(i: usize) -> String {
    format!("seq_{i:04}.csv")
}

pub fn format_record_line(frame: &TactileFrame, label: ClassLabel) -> String {
    let mut line = String::with_capacity(160);
    write!(line, "{}", frame.t).unwrap();
    for p in frame.pressure {
        write!(line, ",{p}").unwrap();
    }
    write!(line, ",{},{},{},{}", frame.v_xy[0], frame.v_xy[1], frame.omega, label).unwrap();
    line
}

pub fn write_sequence_file(path: &Path, seq: &LabeledSequence) -> Result<()> {
    let mut text = String::with_capacity(seq.len() * 160 + 64);
    text.push_str(RECORD_HEADER);
    text.push('\n');
    for (f, &l) in seq.frames.iter().zip(&seq.labels) {
        text.push_str(&format_record_line(f, l));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!(
        "{MAGIC}\nformat_version: {FORMAT_VERSION}\ngeometry: {ROWS}x{COLS}\nsample_rate_hz: 100\nsequences: {}\n",
        corpus.len()
    );
    for (i, seq) in corpus.iter().enumerate() {
        let c = &seq.condition;
        writeln!(
            manifest,
            "sequence: {i} file={} frames={} barometer_range={} surface={} slip_type={} max_speed={} direction={}",
            record_name(i),
            seq.len(),
            seq.barometer_range,
            c.surface,
            c.slip_type,
            c.max_speed,
            c.direction_str()
        )
        .unwrap();
        write_sequence_file(&dir.join(record_name(i)), seq)?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

struct ManifestEntry {
    file: String,
    frames: usize,
    barometer_range: f64,
    condition: ConditionTag,
}

fn header_field<'a>(path: &Path, line_no: usize, line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::parse(path, line_no, format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(':'))
        .map(str::trim)
        .ok_or_else(|| Error::parse(path, line_no, format!("expected `{key}: ...`, found `{line}`")))
}

fn parse_entry(path: &Path, line_no: usize, line: &str, index: usize) -> Result<ManifestEntry> {
    let err = |msg: String| Error::parse(path, line_no, msg);
    let rest = line
        .strip_prefix("sequence:")
        .ok_or_else(|| err(format!("expected a `sequence:` entry, found `{line}`")))?;
    let mut parts = rest.split_whitespace();
    let id: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("missing sequence index".into()))?;
    if id != index {
        return Err(err(format!("sequence index {id} out of order (expected {index})")));
    }
    let mut get = |key: &str| -> Result<String> {
        let kv = parts.next().ok_or_else(|| err(format!("missing `{key}=`")))?;
        kv.strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| err(format!("expected `{key}=...`, found `{kv}`")))
    };
    let file = get("file")?;
    let frames = get("frames")?.parse().map_err(|e| err(format!("frames: {e}")))?;
    let barometer_range: f64 = get("barometer_range")?
        .parse()
        .map_err(|e| err(format!("barometer_range: {e}")))?;
    let surface = get("surface")?.parse().map_err(err)?;
    let slip_type = get("slip_type")?.parse().map_err(err)?;
    let max_speed = get("max_speed")?.parse().map_err(|e| err(format!("max_speed: {e}")))?;
    let direction = match get("direction")?.as_str() {
        "-" => None,
        d => Some(d.parse().map_err(err)?),
    };
    let condition = ConditionTag {
        surface,
        slip_type,
        max_speed,
        direction,
    };
    condition.validate().map_err(|e| err(e.to_string()))?;
    if file.contains('/') || file.contains('\\') {
        return Err(err(format!("record file `{file}` must be a plain file name")));
    }
    Ok(ManifestEntry {
        file,
        frames,
        barometer_range,
        condition,
    })
}

pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(MAGIC) => {}
        other => {
            return Err(Error::parse(&path, 1, format!("bad magic `{}`", other.unwrap_or(""))));
        }
    }
    let version = header_field(&path, 2, lines.next(), "format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Version {
            found: version.to_owned(),
            expected: FORMAT_VERSION,
        });
    }
    let geometry = header_field(&path, 3, lines.next(), "geometry")?;
    if geometry != format!("{ROWS}x{COLS}") {
        return Err(Error::parse(&path, 3, format!("unsupported geometry `{geometry}`")));
    }
    let rate = header_field(&path, 4, lines.next(), "sample_rate_hz")?;
    if rate != "100" {
        return Err(Error::parse(&path, 4, format!("unsupported sample rate `{rate}`")));
    }
    let count: usize = header_field(&path, 5, lines.next(), "sequences")?
        .parse()
        .map_err(|e| Error::parse(&path, 5, format!("sequences: {e}")))?;
    let mut corpus = Vec::with_capacity(count);
    for i in 0..count {
        let line_no = 6 + i;
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(&path, line_no, format!("manifest lists {count} sequences, found {i}")))?;
        let entry = parse_entry(&path, line_no, line, i)?;
        let record = dir.join(&entry.file);
        let rows = read_records(&record)?;
        if rows.len() != entry.frames {
            return Err(Error::parse(
                &record,
                rows.len() + 1,
                format!("expected {} frames, found {}", entry.frames, rows.len()),
            ));
        }
        let (frames, labels) = rows.into_iter().map(|(f, l)| (f, l.expect("labels required"))).unzip();
        corpus.push(LabeledSequence {
            frames,
            labels,
            condition: entry.condition,
            barometer_range: entry.barometer_range,
        });
    }
    if let Some((k, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(&path, 6 + count + k, format!("unexpected trailing line `{extra}`")));
    }
    Ok(corpus)
}

/// Parses one data row (`t,p0..p5,vx,vy,omega[,label]`). A present label must agree with
/// the row's velocities.
pub fn parse_record_line(line: &str) -> std::result::Result<(TactileFrame, Option<ClassLabel>), String> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    if fields.len() != 10 && fields.len() != 11 {
        return Err(format!("expected 10 or 11 fields, found {}", fields.len()));
    }
    let mut nums = [0.0f64; 10];
    for (k, (slot, field)) in nums.iter_mut().zip(&fields).enumerate() {
        *slot = field
            .trim()
            .parse()
            .map_err(|_| format!("field {} (`{field}`) is not a number", k + 1))?;
        if !slot.is_finite() {
            return Err(format!("field {} is not finite", k + 1));
        }
    }
    let frame = TactileFrame {
        t: nums[0],
        pressure: std::array::from_fn(|c| nums[1 + c]),
        v_xy: [nums[1 + CHANNELS], nums[2 + CHANNELS]],
        omega: nums[3 + CHANNELS],
    };
    let label = match fields.get(10) {
        Some(text) => {
            let label: ClassLabel = text.trim().parse()?;
            let expected = label_frame(&frame).map_err(|e| e.to_string())?;
            if label != expected {
                return Err(format!("label `{label}` disagrees with velocities (expected `{expected}`)"));
            }
            Some(label)
        }
        None => None,
    };
    Ok((frame, label))
}

fn read_records(path: &Path) -> Result<Vec<(TactileFrame, Option<ClassLabel>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(RECORD_HEADER) {
        return Err(Error::parse(path, 1, format!("expected header `{RECORD_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let row = parse_record_line(line).map_err(|msg| Error::parse(path, k + 2, msg))?;
            if row.1.is_none() {
                return Err(Error::parse(path, k + 2, "missing label column"));
            }
            Ok(row)
        })
        .collect()
}

/// Reads a single record file as a sequence with a placeholder static condition.
pub fn load_sequence_file(path: &Path) -> Result<LabeledSequence> {
    let rows = read_records(path)?;
    let (frames, labels) = rows.into_iter().map(|(f, l)| (f, l.unwrap())).unzip();
    Ok(LabeledSequence {
        frames,
        labels,
        condition: ConditionTag::static_on(crate::sensor::Surface::Planar),
        barometer_range: 1000.0,
    })
}

pub fn record_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(record_name(index))
}
