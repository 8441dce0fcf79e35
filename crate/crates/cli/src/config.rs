use std::path::{Path, PathBuf};

use fovguard_core::optimizer::StreamClock;
use fovguard_core::prediction::PredictorKind;
use fovguard_core::resources::{
    computing_rate, ensemble_average_rate, ChannelConfig, ComputeConfig, Rates, VideoConfig,
    DEFAULT_MC_DRAWS,
};
use fovguard_core::trace_io::{SynthParams, TraceFormat};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Head-movement synthesis settings. Rates are in degrees per second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub interval_s: f64,
    pub yaw_rate_std_deg: f64,
    pub pitch_rate_std_deg: f64,
    pub persistence: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            duration_s: p.duration,
            interval_s: p.interval,
            yaw_rate_std_deg: p.yaw_rate_std.to_degrees(),
            pitch_rate_std_deg: p.pitch_rate_std.to_degrees(),
            persistence: p.persistence,
        }
    }
}

impl SynthConfig {
    pub fn params(&self, seed: u64) -> SynthParams {
        SynthParams {
            seed,
            duration: self.duration_s,
            interval: self.interval_s,
            yaw_rate_std: self.yaw_rate_std_deg.to_radians(),
            pitch_rate_std: self.pitch_rate_std_deg.to_radians(),
            persistence: self.persistence,
        }
    }
}

/// Everything a command needs. Omitted keys take the defaults, which
/// describe a 4K video on a 10x20 grid streamed at 2.85 Gbit/s with a
/// 2.2 Gbit/s renderer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub video: VideoConfig,
    /// Per-user transmission and rendering rates, bit/s. Mutually exclusive
    /// with `channel` + `compute`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<Rates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compute: Option<ComputeConfig>,
    pub mc_draws: usize,
    /// Playback timeline. `video.t_seg` sizes the tiles; the two normally
    /// agree.
    pub clock: StreamClock,
    /// Observation sampling interval, seconds.
    pub tau: f64,
    pub rho_s: f64,
    pub rho_grid: Vec<f64>,
    pub rcc_grid: Vec<f64>,
    pub predictor: PredictorKind,
    /// `trace_id,segment_index,yaw_rad,pitch_rad` CSV; replaces `predictor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    pub fov_diameter_deg: f64,
    pub seed: u64,
    /// Trace file or dataset directory. Synthetic traces are used when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<PathBuf>,
    pub trace_format: TraceFormat,
    pub trace_count: usize,
    pub synth: SynthConfig,
    /// Output file (sweep CSV) or directory (simulate reports, gen-traces).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            video: VideoConfig::reference_4k(),
            rates: None,
            channel: None,
            compute: None,
            mc_draws: DEFAULT_MC_DRAWS,
            clock: StreamClock::new(3, 1.0, 60).expect("valid default clock"),
            tau: 0.2,
            rho_s: 0.0,
            rho_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            rcc_grid: vec![0.6, 1.0, 1.4, 2.0],
            predictor: PredictorKind::TrivialMotion,
            predictions: None,
            fov_diameter_deg: 100.0,
            seed: 42,
            traces: None,
            trace_format: TraceFormat::YawPitchCsv,
            trace_count: 50,
            synth: SynthConfig::default(),
            out: None,
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Field-level checks of everything except the traces.
    pub fn validate(&self) -> Result<(), CliError> {
        self.video.validate().map_err(|e| config_err("video", e))?;
        self.clock.validate().map_err(|e| config_err("clock", e))?;
        match (&self.rates, &self.channel, &self.compute) {
            (Some(r), None, None) => r.validate().map_err(|e| config_err("rates", e))?,
            (None, Some(ch), Some(_)) => ch.validate().map_err(|e| config_err("channel", e))?,
            (None, None, None) => {}
            (Some(_), _, _) => {
                return Err(config_err("rates", "give either rates or channel + compute, not both"))
            }
            _ => return Err(config_err("channel", "channel and compute must be given together")),
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(config_err("tau", format!("{} must be positive", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.rho_s) {
            return Err(config_err("rho_s", format!("{} outside [0, 1]", self.rho_s)));
        }
        if self.rho_grid.is_empty() || self.rho_grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(config_err("rho_grid", "must be non-empty with values in [0, 1]"));
        }
        if self.rcc_grid.is_empty() || self.rcc_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(config_err("rcc_grid", "must be non-empty with positive values"));
        }
        if !(self.fov_diameter_deg > 0.0 && self.fov_diameter_deg <= 360.0) {
            return Err(config_err("fov_diameter_deg", format!("{} outside (0, 360]", self.fov_diameter_deg)));
        }
        if self.mc_draws == 0 {
            return Err(config_err("mc_draws", "must be positive"));
        }
        self.synth
            .params(self.seed)
            .validate()
            .map_err(|e| config_err("synth", e))?;
        Ok(())
    }

    /// Rates given directly, derived from the channel and compute budget, or
    /// the defaults.
    pub fn resolved_rates(&self) -> Result<Rates, CliError> {
        match (&self.rates, &self.channel, &self.compute) {
            (Some(r), _, _) => Ok(*r),
            (None, Some(ch), Some(cp)) => {
                let c_com = ensemble_average_rate(ch, self.seed, self.mc_draws)
                    .map_err(|e| config_err("channel", e))?;
                let c_cpt = computing_rate(cp).map_err(|e| config_err("compute", e))?;
                Rates::new(c_com, c_cpt).map_err(|e| config_err("rates", e))
            }
            _ => Ok(Rates::reference()),
        }
    }
}
