//! Viewpoint predictors and the average degree of overlap (DoO).

use serde::{Deserialize, Serialize};

use crate::geometry::{top_n_tiles, yaw_delta, TileGrid, TileSet, Viewpoint};
use crate::{Error, Result};

const SPACING_TOL: f64 = 1e-9;

/// Viewpoints observed at a fixed sampling interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationWindow {
    samples: Vec<Viewpoint>,
    tau: f64,
}

impl ObservationWindow {
    pub fn new(samples: Vec<Viewpoint>, tau: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyObservation);
        }
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", format!("{tau} must be positive")));
        }
        for w in samples.windows(2) {
            if ((w[1].t - w[0].t) - tau).abs() > SPACING_TOL {
                return Err(Error::invalid(
                    "observation window",
                    format!("samples at {} and {} are not {tau} s apart", w[0].t, w[1].t),
                ));
            }
        }
        for s in &samples {
            s.validate()?;
        }
        Ok(Self { samples, tau })
    }

    pub fn samples(&self) -> &[Viewpoint] {
        &self.samples
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `t_obw = (sample count) · tau`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.tau
    }

    pub fn last(&self) -> &Viewpoint {
        self.samples.last().expect("window is never empty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRequest {
    pub window: ObservationWindow,
    /// Time from the last observation to the start of the prediction window.
    pub gap: f64,
    /// Length of the prediction window (one segment).
    pub horizon: f64,
    pub sample_interval: f64,
}

impl PredictionRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap >= 0.0) {
            return Err(Error::invalid("gap", format!("{} must be non-negative", self.gap)));
        }
        if !(self.horizon > 0.0 && self.sample_interval > 0.0) {
            return Err(Error::invalid(
                "prediction window",
                format!(
                    "horizon {} and sample interval {} must be positive",
                    self.horizon, self.sample_interval
                ),
            ));
        }
        Ok(())
    }

    /// Instants (absolute) of the predicted samples: `k · sample_interval`
    /// after the start of the prediction window, `k = 1..=⌈horizon/interval⌉`.
    pub fn instants(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (self.horizon / self.sample_interval - 1e-9).ceil().max(1.0) as usize;
        let start = self.window.last().t + self.gap;
        (1..=n).map(move |k| start + k as f64 * self.sample_interval)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    /// Repeat the last observed viewpoint.
    #[default]
    TrivialMotion,
    /// Constant angular velocity from the last two samples.
    LinearExtrapolation,
}

impl PredictorKind {
    pub fn min_samples(&self) -> usize {
        match self {
            PredictorKind::TrivialMotion => 1,
            PredictorKind::LinearExtrapolation => 2,
        }
    }
}

pub fn predict(kind: PredictorKind, req: &PredictionRequest) -> Result<Vec<Viewpoint>> {
    req.validate()?;
    let samples = req.window.samples();
    if samples.len() < kind.min_samples() {
        return Err(Error::InsufficientSamples {
            needed: kind.min_samples(),
            got: samples.len(),
        });
    }
    let last = *req.window.last();
    Ok(match kind {
        PredictorKind::TrivialMotion => req
            .instants()
            .map(|t| Viewpoint { t, ..last })
            .collect(),
        PredictorKind::LinearExtrapolation => {
            let prev = samples[samples.len() - 2];
            let dt = last.t - prev.t;
            let yaw_rate = yaw_delta(prev.yaw, last.yaw) / dt;
            let pitch_rate = (last.pitch - prev.pitch) / dt;
            req.instants()
                .map(|t| {
                    let ahead = t - last.t;
                    Viewpoint::normalized(
                        last.yaw + yaw_rate * ahead,
                        last.pitch + pitch_rate * ahead,
                        t,
                    )
                })
                .collect()
        }
    })
}

/// Predicted tile set `e_l`: the `n_fov` tiles nearest to the predicted
/// viewpoint at the middle of the prediction window.
pub fn predicted_tile_set(predicted: &[Viewpoint], grid: &TileGrid, n_fov: usize) -> Result<TileSet> {
    let anchor = midpoint_anchor(predicted)?;
    top_n_tiles(grid, anchor, n_fov)
}

fn midpoint_anchor(predicted: &[Viewpoint]) -> Result<&Viewpoint> {
    let (first, last) = match (predicted.first(), predicted.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::invalid("prediction", "no predicted viewpoints")),
    };
    let mid = 0.5 * (first.t + last.t);
    // earliest sample wins a tie
    Ok(predicted
        .iter()
        .min_by(|a, b| (a.t - mid).abs().total_cmp(&(b.t - mid).abs()))
        .expect("nonempty"))
}

/// Overlap of one segment, `qᵀe / ‖q‖₁`.
pub fn overlap_ratio(real: &TileSet, other: &TileSet) -> Result<f64> {
    if real.is_empty() {
        return Err(Error::invalid("real tile set", "no tiles requested in segment"));
    }
    Ok(other.overlap(real)? as f64 / real.len() as f64)
}

/// Mean over segments of the fraction of really requested tiles that were
/// predicted.
pub fn average_doo(real: &[TileSet], predicted: &[TileSet]) -> Result<f64> {
    if real.len() != predicted.len() {
        return Err(Error::invalid(
            "segments",
            format!("{} real vs {} predicted", real.len(), predicted.len()),
        ));
    }
    if real.is_empty() {
        return Err(Error::invalid("segments", "no segments"));
    }
    let sum = real
        .iter()
        .zip(predicted)
        .map(|(q, e)| overlap_ratio(q, e))
        .sum::<Result<f64>>()?;
    Ok(sum / real.len() as f64)
}
