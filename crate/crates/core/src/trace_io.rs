//! Head-movement traces: CSV ingestion, resampling and synthesis.
//!
//! Two CSV schemas are accepted, each with a mandatory header row:
//!
//! - `t_s,yaw_rad,pitch_rad`
//! - `t_s,qw,qx,qy,qz` (unit quaternion; roll is discarded)
//!
//! A dataset directory is laid out as `<dataset>/<video_id>/<user_id>.csv`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::geometry::{wrap_yaw, yaw_delta, Viewpoint};
use crate::{Error, Result};

const QUAT_NORM_TOL: f64 = 1e-3;
const TIME_EPS: f64 = 1e-9;

pub const YAW_PITCH_HEADER: [&str; 3] = ["t_s", "yaw_rad", "pitch_rad"];
pub const QUATERNION_HEADER: [&str; 5] = ["t_s", "qw", "qx", "qy", "qz"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    YawPitchCsv,
    QuaternionCsv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub trace_id: String,
    pub user_id: String,
    pub video_id: String,
    pub samples: Vec<Viewpoint>,
    pub native_interval: f64,
}

impl Trace {
    pub fn new(
        trace_id: impl Into<String>,
        user_id: impl Into<String>,
        video_id: impl Into<String>,
        samples: Vec<Viewpoint>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("trace", "no samples"));
        }
        for s in &samples {
            s.validate()?;
        }
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::invalid(
                    "trace",
                    format!("timestamps not increasing at t = {}", w[1].t),
                ));
            }
        }
        let native_interval = if samples.len() > 1 {
            (samples[samples.len() - 1].t - samples[0].t) / (samples.len() - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            trace_id: trace_id.into(),
            user_id: user_id.into(),
            video_id: video_id.into(),
            samples,
            native_interval,
        })
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Viewpoint at time `t`, interpolated between the neighbouring samples
    /// along the shortest yaw arc. Times outside the trace are clamped.
    pub fn viewpoint_at(&self, t: f64) -> Viewpoint {
        let s = &self.samples;
        let k = s.partition_point(|v| v.t <= t);
        if k == 0 {
            return Viewpoint { t, ..s[0] };
        }
        if k == s.len() {
            return Viewpoint { t, ..s[k - 1] };
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let w = (t - a.t) / (b.t - a.t);
        Viewpoint::normalized(
            a.yaw + w * yaw_delta(a.yaw, b.yaw),
            a.pitch + w * (b.pitch - a.pitch),
            t,
        )
    }

    /// Samples with `from <= t < to`.
    pub fn samples_in(&self, from: f64, to: f64) -> &[Viewpoint] {
        let lo = self.samples.partition_point(|v| v.t < from - TIME_EPS);
        let hi = self.samples.partition_point(|v| v.t < to - TIME_EPS);
        &self.samples[lo..hi]
    }
}

/// Converts a unit quaternion to the yaw and pitch of the rotated forward
/// (+x) axis, z up. Roll about the forward axis does not change the gaze.
pub fn quaternion_to_yaw_pitch(qw: f64, qx: f64, qy: f64, qz: f64) -> (f64, f64) {
    let fx = 1.0 - 2.0 * (qy * qy + qz * qz);
    let fy = 2.0 * (qx * qy + qw * qz);
    let fz = 2.0 * (qx * qz - qw * qy);
    let yaw = wrap_yaw(fy.atan2(fx));
    let pitch = fz.clamp(-1.0, 1.0).asin();
    (yaw, pitch)
}

fn parse_error(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn read_trace_file(path: &Path, format: TraceFormat, ids: (String, String, String)) -> Result<Trace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let expected: &[&str] = match format {
        TraceFormat::YawPitchCsv => &YAW_PITCH_HEADER,
        TraceFormat::QuaternionCsv => &QUATERNION_HEADER,
    };
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut samples: Vec<Viewpoint> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", expected.len(), record.len()),
            ));
        }
        let mut values = [0.0f64; 5];
        for (k, field) in record.iter().enumerate() {
            values[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, line, format!("`{field}` is not a number")))?;
        }
        let t = values[0];
        let (yaw, pitch) = match format {
            TraceFormat::YawPitchCsv => (values[1], values[2]),
            TraceFormat::QuaternionCsv => {
                let [_, qw, qx, qy, qz] = values;
                let norm = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
                if (norm - 1.0).abs() > QUAT_NORM_TOL {
                    return Err(parse_error(path, line, format!("quaternion norm {norm} is not 1")));
                }
                quaternion_to_yaw_pitch(qw / norm, qx / norm, qy / norm, qz / norm)
            }
        };
        if !(-FRAC_PI_2 - 1e-9..=FRAC_PI_2 + 1e-9).contains(&pitch) {
            return Err(parse_error(path, line, format!("pitch {pitch} outside [-pi/2, pi/2]")));
        }
        if t < 0.0 {
            return Err(parse_error(path, line, format!("negative timestamp {t}")));
        }
        if let Some(prev) = samples.last() {
            if !(t > prev.t) {
                return Err(parse_error(
                    path,
                    line,
                    format!("timestamp {t} does not increase (previous {})", prev.t),
                ));
            }
        }
        samples.push(Viewpoint::normalized(yaw, pitch, t));
    }
    if samples.is_empty() {
        return Err(parse_error(path, 2, "no samples"));
    }
    let (trace_id, user_id, video_id) = ids;
    Trace::new(trace_id, user_id, video_id, samples)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => parse_error(path, line, format!("{kind:?}")),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn trace_ids(root: &Path, file: &Path) -> (String, String, String) {
    let rel = file.strip_prefix(root).unwrap_or(file).with_extension("");
    let parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    let user = parts.last().cloned().unwrap_or_default();
    let video = if parts.len() >= 2 {
        parts[parts.len() - 2].clone()
    } else {
        String::new()
    };
    (parts.join("/"), user, video)
}

/// Loads one trace file, or every `*.csv` below a directory in path order.
pub fn load_traces(path: &Path, format: TraceFormat) -> Result<Vec<Trace>> {
    let meta = fs::metadata(path).map_err(io_error(path))?;
    if meta.is_file() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let video = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![read_trace_file(path, format, (stem.clone(), stem, video))?]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "csv") {
            files.push(entry.into_path());
        }
    }
    files
        .iter()
        .map(|f| read_trace_file(f, format, trace_ids(path, f)))
        .collect()
}

/// Writes a trace in the `t_s,yaw_rad,pitch_rad` schema. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn save_trace(trace: &Trace, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let mut out = String::with_capacity(32 * (trace.samples.len() + 1));
    out.push_str(&YAW_PITCH_HEADER.join(","));
    out.push('\n');
    for s in &trace.samples {
        out.push_str(&format!("{},{},{}\n", s.t, s.yaw, s.pitch));
    }
    let mut file = fs::File::create(path).map_err(io_error(path))?;
    file.write_all(out.as_bytes()).map_err(io_error(path))
}

/// Path of a trace inside a dataset root, following the directory layout.
pub fn dataset_path(root: &Path, trace: &Trace) -> PathBuf {
    root.join(&trace.video_id).join(format!("{}.csv", trace.user_id))
}

/// Re-samples a trace at exact multiples of `tau`, interpolating along the
/// shortest yaw arc.
pub fn resample(trace: &Trace, tau: f64) -> Result<Trace> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("{tau} must be positive")));
    }
    if trace.end() - trace.start() < tau - TIME_EPS {
        return Err(Error::invalid(
            "trace",
            format!(
                "{} spans {} s, shorter than tau = {tau} s",
                trace.trace_id,
                trace.end() - trace.start()
            ),
        ));
    }
    let k0 = (trace.start() / tau - TIME_EPS).ceil() as usize;
    let k1 = (trace.end() / tau + TIME_EPS).floor() as usize;
    let samples = (k0..=k1)
        .map(|k| trace.viewpoint_at(k as f64 * tau))
        .collect();
    Trace::new(
        trace.trace_id.clone(),
        trace.user_id.clone(),
        trace.video_id.clone(),
        samples,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    /// Trace length, seconds.
    pub duration: f64,
    /// Sampling interval, seconds.
    pub interval: f64,
    /// Stationary standard deviation of the yaw rate, rad/s.
    pub yaw_rate_std: f64,
    /// Stationary standard deviation of the pitch rate, rad/s.
    pub pitch_rate_std: f64,
    /// Lag-1 autocorrelation of the angular rates, per sample.
    pub persistence: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 42,
            duration: 60.0,
            interval: 0.2,
            yaw_rate_std: 0.5,
            pitch_rate_std: 0.15,
            persistence: 0.9,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.interval > 0.0 && self.interval <= self.duration) {
            return Err(Error::invalid(
                "synth params",
                format!("duration {} / interval {}", self.duration, self.interval),
            ));
        }
        if !(self.yaw_rate_std >= 0.0 && self.pitch_rate_std >= 0.0) {
            return Err(Error::invalid("synth params", "rate deviations must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return Err(Error::invalid(
                "synth params",
                format!("persistence {} outside [0, 1)", self.persistence),
            ));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.interval).round() as usize
    }
}

fn trace_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Head traces driven by a first-order autoregressive angular velocity.
/// Pitch reflects off the poles, yaw wraps.
pub fn synth_traces(params: &SynthParams, count: usize) -> Result<Vec<Trace>> {
    params.validate()?;
    (0..count).map(|i| synth_one(params, i)).collect()
}

fn synth_one(params: &SynthParams, index: usize) -> Result<Trace> {
    let mut rng = ChaCha8Rng::seed_from_u64(trace_seed(params.seed, index));
    let phi = params.persistence;
    let innovation = (1.0 - phi * phi).sqrt();
    let dt = params.interval;

    let mut yaw = rng.random_range(-PI..PI);
    let mut pitch = rng.random_range(-0.3..0.3);
    let mut yaw_rate = params.yaw_rate_std * rng.sample::<f64, _>(StandardNormal);
    let mut pitch_rate = params.pitch_rate_std * rng.sample::<f64, _>(StandardNormal);

    let n = params.sample_count();
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        samples.push(Viewpoint::normalized(yaw, pitch, k as f64 * dt));
        yaw = wrap_yaw(yaw + yaw_rate * dt);
        pitch += pitch_rate * dt;
        if pitch > FRAC_PI_2 {
            pitch = PI - pitch;
            pitch_rate = -pitch_rate;
        } else if pitch < -FRAC_PI_2 {
            pitch = -PI - pitch;
            pitch_rate = -pitch_rate;
        }
        yaw_rate = phi * yaw_rate
            + innovation * params.yaw_rate_std * rng.sample::<f64, _>(StandardNormal);
        pitch_rate = phi * pitch_rate
            + innovation * params.pitch_rate_std * rng.sample::<f64, _>(StandardNormal);
    }
    let user = format!("user_{index:03}");
    Trace::new(format!("synthetic/{user}"), user, "synthetic", samples)
}

/// Seeded shuffle of trace indices into training and test sets, 8:2.
/// Metadata only; nothing is trained here.
pub fn train_test_split(count: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..count).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (count * 8).div_ceil(10).min(count);
    let test = idx.split_off(n_train);
    (idx, test)
}
