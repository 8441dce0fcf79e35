//! Rendering and transmission resources.
//!
//! Tile sizes follow from the video settings; rates are either supplied
//! directly or derived from a compute budget and a zero-forcing downlink.
//! Sizes are in bits and rates in bit/s throughout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::TileGrid;
use crate::{Error, Result};

pub const MEBIBIT: f64 = 1_048_576.0;

pub const DEFAULT_MC_DRAWS: usize = 100_000;
pub const DEFAULT_MC_SEED: u64 = 0x5eed_f0f0;

const MC_BATCH: usize = 8_192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoConfig {
    /// Tile width in pixels.
    pub px_w: f64,
    /// Tile height in pixels.
    pub px_h: f64,
    /// Bits per pixel.
    pub bits_per_pixel: f64,
    /// Frames per second.
    pub frame_rate: f64,
    /// Playback duration of a segment, seconds.
    pub t_seg: f64,
    /// Compression ratio for transmission.
    pub gamma_c: f64,
    pub grid: TileGrid,
    /// Tiles in one predicted FoV.
    pub n_fov: usize,
}

impl VideoConfig {
    /// 4K (3840x2160) video on a 10x20 grid, 12 bit/pixel, 30 FPS, 1 s
    /// segments, compression 2.41, 33 tiles per FoV.
    pub fn reference_4k() -> Self {
        Self {
            px_w: 3840.0 / 20.0,
            px_h: 2160.0 / 10.0,
            bits_per_pixel: 12.0,
            frame_rate: 30.0,
            t_seg: 1.0,
            gamma_c: 2.41,
            grid: TileGrid::new(10, 20).expect("nonempty grid"),
            n_fov: 33,
        }
    }

    pub fn tile_count(&self) -> usize {
        self.grid.tile_count()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("px_w", self.px_w),
            ("px_h", self.px_h),
            ("bits_per_pixel", self.bits_per_pixel),
            ("frame_rate", self.frame_rate),
            ("t_seg", self.t_seg),
            ("gamma_c", self.gamma_c),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("video config", format!("{name} = {v} must be positive")));
            }
        }
        if self.n_fov == 0 || self.n_fov > self.tile_count() {
            return Err(Error::invalid(
                "video config",
                format!("n_fov = {} outside 1..={}", self.n_fov, self.tile_count()),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileBits {
    /// Bits per tile to transmit (compressed).
    pub s_com: f64,
    /// Bits per tile to render.
    pub s_cpt: f64,
}

/// Per-tile sizes of one segment.
pub fn tile_bits(cfg: &VideoConfig) -> TileBits {
    let s_cpt = cfg.px_w * cfg.px_h * cfg.bits_per_pixel * cfg.frame_rate * cfg.t_seg;
    TileBits {
        s_com: s_cpt / cfg.gamma_c,
        s_cpt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    /// Total BS transmit power, watts.
    pub p_total_w: f64,
    pub n_antennas: usize,
    pub n_users: usize,
    pub distance_m: f64,
    pub path_loss_exp: f64,
    /// Noise power, watts.
    pub noise_w: f64,
    /// Slot duration ΔT, seconds; only the time-average rate uses it.
    pub slot_s: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_antennas < self.n_users {
            return Err(Error::invalid(
                "channel config",
                format!(
                    "need n_antennas >= n_users >= 1, got {} antennas for {} users",
                    self.n_antennas, self.n_users
                ),
            ));
        }
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("p_total_w", self.p_total_w),
            ("distance_m", self.distance_m),
            ("path_loss_exp", self.path_loss_exp),
            ("noise_w", self.noise_w),
            ("slot_s", self.slot_s),
        ] {
            // zero bandwidth is a legitimate (if useless) channel
            let ok = if name == "bandwidth_hz" { v >= 0.0 } else { v > 0.0 };
            if !(v.is_finite() && ok) {
                return Err(Error::invalid("channel config", format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputeConfig {
    /// Rendering budget at the edge server, FLOPS.
    pub flops: f64,
    /// FLOPs needed to render one bit.
    pub flops_per_bit: f64,
    pub n_users: usize,
}

/// Per-user rendering rate `F_cpt / (K · mu_r)`.
pub fn computing_rate(cfg: &ComputeConfig) -> Result<f64> {
    if cfg.n_users == 0 || !(cfg.flops > 0.0) || !(cfg.flops_per_bit > 0.0) {
        return Err(Error::invalid("compute config", format!("{cfg:?}")));
    }
    Ok(cfg.flops / (cfg.n_users as f64 * cfg.flops_per_bit))
}

/// Monte-Carlo ergodic rate of one zero-forcing user with equal power split.
///
/// After zero-forcing with `N_t` antennas and `K` users the effective gain
/// `|h̃|²` is Gamma(N_t − K + 1, 1) under Rayleigh fading; it is drawn here
/// as a sum of that many unit exponentials. Each draw owns a ChaCha stream,
/// so a draw's gain is a pure function of `(seed, draw index)`: results do
/// not depend on thread count, and changing `N_t` only adds terms to every
/// draw's gain.
pub fn ensemble_average_rate(cfg: &ChannelConfig, seed: u64, draws: usize) -> Result<f64> {
    cfg.validate()?;
    if draws == 0 {
        return Err(Error::invalid("draws", "need at least one Monte-Carlo draw"));
    }
    let shape = cfg.n_antennas - cfg.n_users + 1;
    let p = cfg.p_total_w / cfg.n_users as f64;
    let snr_scale = p * cfg.distance_m.powf(-cfg.path_loss_exp) / cfg.noise_w;

    let batches = draws.div_ceil(MC_BATCH);
    let partial: Vec<f64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lo = b * MC_BATCH;
            let hi = (lo + MC_BATCH).min(draws);
            (lo..hi)
                .map(|i| {
                    rng.set_stream(i as u64);
                    rng.set_word_pos(0);
                    let gain: f64 = (0..shape)
                        .map(|_| Distribution::<f64>::sample(&Exp1, &mut rng))
                        .sum();
                    (1.0 + snr_scale * gain).log2()
                })
                .sum::<f64>()
        })
        .collect();
    let mean = partial.iter().sum::<f64>() / draws as f64;
    Ok(cfg.bandwidth_hz * mean)
}

/// Per-user transmission and rendering rates, bit/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub c_com: f64,
    pub c_cpt: f64,
}

impl Rates {
    pub fn new(c_com: f64, c_cpt: f64) -> Result<Self> {
        let r = Self { c_com, c_cpt };
        r.validate()?;
        Ok(r)
    }

    /// 2.85 Gbit/s downlink (K = 4, N_t = 8, 24 dBm, 150 MHz, 5 m) and
    /// 2.2 Gbit/s rendering per user.
    pub fn reference() -> Self {
        Self {
            c_com: 2.85e9,
            c_cpt: 2.2e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_com > 0.0 && self.c_cpt > 0.0) {
            return Err(Error::invalid("rates", format!("{self:?} must be positive")));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c_com: self.c_com * factor,
            c_cpt: self.c_cpt * factor,
        }
    }
}

// Tile counts that land within 1e-9 (relative) of an integer are snapped to
// it, so that durations computed as `s · N / C` deliver exactly N tiles.
fn snap_tiles(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x
    }
}

/// Number of tiles the durations can render and deliver, capped at M.
pub fn capable_tiles(t_com: f64, t_cpt: f64, rates: &Rates, bits: &TileBits, m: usize) -> f64 {
    let by_com = snap_tiles(rates.c_com * t_com / bits.s_com);
    let by_cpt = snap_tiles(rates.c_cpt * t_cpt / bits.s_cpt);
    by_com.min(by_cpt).min(m as f64).max(0.0)
}

/// CC capability: the fraction of a segment's tiles that can be rendered and
/// transmitted in `t_cpt` and `t_com`.
pub fn cc_capability(t_com: f64, t_cpt: f64, rates: &Rates, bits: &TileBits, m: usize) -> f64 {
    capable_tiles(t_com, t_cpt, rates, bits, m) / m as f64
}

/// CC capability per second of communication plus computing time.
pub fn resources_rate(c_cc: f64, t_cc: f64) -> Result<f64> {
    if !(t_cc > 0.0) {
        return Err(Error::invalid("t_cc", format!("{t_cc} must be positive")));
    }
    Ok(c_cc / t_cc)
}
