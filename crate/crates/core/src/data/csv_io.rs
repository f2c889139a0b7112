//! Flat CSV schemas.
//!
//! Samples: `user,location,label,range,doppler,azimuth,elevation,peak`, one
//! distilled gesture per row. Sample ids are assigned from the 0-based data
//! row index, so reading a written file reproduces the dataset exactly when
//! its ids were 0..n in order.
//!
//! Recordings: `recording_id,frame_idx,user,location,label,<features>,
//! gesture_start,gesture_end`, one frame per row. The window columns are
//! read from the `frame_idx = 0` row and may be left empty elsewhere.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::{
    Alphabet, Dataset, Feature, FeatureVector, GestureRecording, LabeledSample, N_FEATURES,
};

pub const SAMPLE_COLUMNS: [&str; 8] = [
    "user",
    "location",
    "label",
    "range",
    "doppler",
    "azimuth",
    "elevation",
    "peak",
];

pub const RECORDING_COLUMNS: [&str; 12] = [
    "recording_id",
    "frame_idx",
    "user",
    "location",
    "label",
    "range",
    "doppler",
    "azimuth",
    "elevation",
    "peak",
    "gesture_start",
    "gesture_end",
];

struct Table<'a> {
    origin: &'a Path,
    columns: Vec<usize>,
}

impl<'a> Table<'a> {
    fn err(&self, line: u64, msg: impl Into<String>) -> Error {
        Error::Csv {
            path: self.origin.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn open<R: Read>(
        reader: R,
        origin: &'a Path,
        schema: &[&str],
    ) -> Result<(Self, csv::Reader<R>)> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let csv_err = |e: csv::Error| Error::Csv {
            path: origin.to_path_buf(),
            line: e.position().map_or(1, |p| p.line()),
            msg: e.to_string(),
        };
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let mut columns = Vec::with_capacity(schema.len());
        for name in schema {
            let i = headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::Csv {
                    path: origin.to_path_buf(),
                    line: 1,
                    msg: format!("missing column {name:?}"),
                })?;
            columns.push(i);
        }
        Ok((Table { origin, columns }, rdr))
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, schema_idx: usize) -> &'r str {
        rec.get(self.columns[schema_idx]).unwrap_or("")
    }

    fn number(
        &self,
        rec: &csv::StringRecord,
        line: u64,
        schema_idx: usize,
        name: &str,
    ) -> Result<f64> {
        let raw = self.field(rec, schema_idx);
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(line, format!("column {name}: cannot parse {raw:?}")))?;
        if !v.is_finite() {
            return Err(self.err(line, format!("column {name}: value {raw} is not finite")));
        }
        Ok(v)
    }

    fn features(&self, rec: &csv::StringRecord, line: u64, first: usize) -> Result<FeatureVector> {
        let mut values = [0.0; N_FEATURES];
        for (k, f) in Feature::ALL.iter().enumerate() {
            values[k] = self.number(rec, line, first + k, f.name())?;
        }
        FeatureVector::from_array(values)
    }
}

fn rows<'r, R: Read>(
    origin: &'r Path,
    rdr: &'r mut csv::Reader<R>,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'r {
    rdr.records().map(move |r| {
        let rec = r.map_err(|e| Error::Csv {
            path: origin.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((line, rec))
    })
}

/// The gesture alphabet when every label belongs to it (so files missing a
/// class still agree), otherwise the distinct labels in sorted order.
pub fn infer_alphabet<'a>(labels: impl IntoIterator<Item = &'a str>) -> Result<Alphabet> {
    let gestures = Alphabet::gestures();
    let distinct: BTreeSet<&str> = labels.into_iter().collect();
    if distinct.iter().all(|l| gestures.id(l).is_ok()) {
        return Ok(gestures);
    }
    Alphabet::new(distinct)
}

struct RawSample {
    line: u64,
    user: String,
    location: String,
    label: String,
    features: FeatureVector,
}

fn build_dataset(
    raw: Vec<RawSample>,
    alphabet: Option<&Alphabet>,
    origin: &Path,
) -> Result<Dataset> {
    let alphabet = match alphabet {
        Some(a) => a.clone(),
        None => infer_alphabet(raw.iter().map(|r| r.label.as_str()))?,
    };
    let samples = raw
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = alphabet.id(&r.label).map_err(|_| Error::Csv {
                path: origin.to_path_buf(),
                line: r.line,
                msg: format!("label {:?} is not in the alphabet [{alphabet}]", r.label),
            })?;
            Ok(LabeledSample::new(i as u64, r.features, label).with_provenance(r.user, r.location))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(alphabet, samples)
}

/// Parses the samples schema. With `alphabet` given, labels outside it are
/// errors; otherwise the alphabet is inferred (see [`infer_alphabet`]).
pub fn read_samples<R: Read>(
    reader: R,
    origin: &Path,
    alphabet: Option<&Alphabet>,
) -> Result<Dataset> {
    let (table, mut rdr) = Table::open(reader, origin, &SAMPLE_COLUMNS)?;
    let mut raw = Vec::new();
    for row in rows(table.origin, &mut rdr) {
        let (line, rec) = row?;
        raw.push(RawSample {
            line,
            user: table.field(&rec, 0).to_string(),
            location: table.field(&rec, 1).to_string(),
            label: table.field(&rec, 2).to_string(),
            features: table.features(&rec, line, 3)?,
        });
    }
    build_dataset(raw, alphabet, origin)
}

pub fn load_samples_csv(path: impl AsRef<Path>, alphabet: Option<&Alphabet>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(file, path, alphabet)
}

/// Writes the samples schema; floats use shortest round-trip formatting.
pub fn write_samples<W: Write>(ds: &Dataset, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SAMPLE_COLUMNS)?;
    for s in ds.samples() {
        let mut row = vec![
            s.user_id.clone(),
            s.location_id.clone(),
            ds.alphabet().name(s.label).to_string(),
        ];
        row.extend(s.features.as_array().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_samples_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_samples(ds, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// One recording with its provenance, as read from the recordings schema.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingRow {
    pub recording_id: String,
    pub recording: GestureRecording,
    pub label: String,
    pub user: String,
    pub location: String,
}

struct PartialRecording {
    first_line: u64,
    label: String,
    user: String,
    location: String,
    frames: Vec<(usize, u64, FeatureVector)>,
    window: Option<(usize, usize)>,
}

pub fn read_recordings<R: Read>(reader: R, origin: &Path) -> Result<Vec<RecordingRow>> {
    let (table, mut rdr) = Table::open(reader, origin, &RECORDING_COLUMNS)?;
    let mut order: Vec<String> = Vec::new();
    let mut partial: HashMap<String, PartialRecording> = HashMap::new();
    for row in rows(table.origin, &mut rdr) {
        let (line, rec) = row?;
        let id = table.field(&rec, 0).to_string();
        let raw_idx = table.field(&rec, 1);
        let frame_idx: usize = raw_idx
            .parse()
            .map_err(|_| table.err(line, format!("column frame_idx: cannot parse {raw_idx:?}")))?;
        let features = table.features(&rec, line, 5)?;
        let entry = partial.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            PartialRecording {
                first_line: line,
                label: table.field(&rec, 4).to_string(),
                user: table.field(&rec, 2).to_string(),
                location: table.field(&rec, 3).to_string(),
                frames: Vec::new(),
                window: None,
            }
        });
        if table.field(&rec, 4) != entry.label {
            return Err(table.err(line, format!("recording {id:?} changes label")));
        }
        if frame_idx == 0 {
            let parse = |k: usize, name: &str| -> Result<usize> {
                let raw = table.field(&rec, k);
                raw.parse()
                    .map_err(|_| table.err(line, format!("column {name}: cannot parse {raw:?}")))
            };
            entry.window = Some((parse(10, "gesture_start")?, parse(11, "gesture_end")?));
        }
        entry.frames.push((frame_idx, line, features));
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let mut p = partial.remove(&id).expect("every ordered id was inserted");
        p.frames.sort_by_key(|f| f.0);
        for (expected, (idx, line, _)) in p.frames.iter().enumerate() {
            if *idx != expected {
                return Err(table.err(
                    *line,
                    format!("recording {id:?}: expected frame {expected}, found {idx}"),
                ));
            }
        }
        let (start, end) = p
            .window
            .ok_or_else(|| table.err(p.first_line, format!("recording {id:?} has no frame 0")))?;
        let frames = p.frames.into_iter().map(|f| f.2).collect();
        let recording = GestureRecording::new(frames, start, end)
            .map_err(|e| table.err(p.first_line, format!("recording {id:?}: {e}")))?;
        out.push(RecordingRow {
            recording_id: id,
            recording,
            label: p.label,
            user: p.user,
            location: p.location,
        });
    }
    Ok(out)
}

pub fn load_recordings_csv(path: impl AsRef<Path>) -> Result<Vec<RecordingRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_recordings(file, path)
}

/// Averages each recording over its gesture window. With `gesture_frames`
/// set, every window must have exactly that many frames.
pub fn distill(
    rows: &[RecordingRow],
    alphabet: Option<&Alphabet>,
    gesture_frames: Option<usize>,
) -> Result<Dataset> {
    let origin = PathBuf::from("<recordings>");
    let raw = rows
        .iter()
        .map(|r| {
            if let Some(n) = gesture_frames {
                r.recording.check_window_len(n)?;
            }
            Ok(RawSample {
                line: 0,
                user: r.user.clone(),
                location: r.location.clone(),
                label: r.label.clone(),
                features: super::average_frames(&r.recording)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    build_dataset(raw, alphabet, &origin)
}
