//! Getting gestures into a [`Dataset`]: frame averaging, CSV ingestion,
//! partitioning, and a synthetic generator.

mod csv_io;
mod split;
mod synth;

pub use csv_io::{
    distill, infer_alphabet, load_recordings_csv, load_samples_csv, read_recordings, read_samples,
    write_samples, write_samples_csv, RecordingRow, RECORDING_COLUMNS, SAMPLE_COLUMNS,
};
pub use split::{split, SplitSpec};
pub use synth::{synthesize, SynthSpec, UserSpec};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, GestureRecording, N_FEATURES};

/// Mean of each feature over the gesture window only.
pub fn average_frames(rec: &GestureRecording) -> Result<FeatureVector> {
    let (start, end) = rec.window();
    let window = &rec.frames()[start..end];
    if window.is_empty() {
        return Err(Error::InvalidWindow {
            start,
            end,
            frames: rec.frames().len(),
        });
    }
    // Accumulate deviations from the first frame so constant windows are exact.
    let base = *window[0].as_array();
    let mut dev = [0.0; N_FEATURES];
    for frame in &window[1..] {
        for ((acc, v), b) in dev.iter_mut().zip(frame.as_array()).zip(&base) {
            *acc += v - b;
        }
    }
    let n = window.len() as f64;
    let mut mean = base;
    for (m, d) in mean.iter_mut().zip(dev) {
        *m += d / n;
    }
    FeatureVector::from_array(mean)
}
