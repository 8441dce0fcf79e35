//! Spatial degree of privacy (SDoP) and camouflaged tile requests.
//!
//! The HMD pads its tile requests with `N_cf` camouflage tiles so that the
//! edge server cannot tell where the real FoV is. The SDoP is the fraction
//! of non-FoV tiles that are requested as camouflage:
//! `rho_s = N_cf / (M − N_fov)`.
//!
//! [`classify_deployment`] encodes which uploads in the proactive pipeline
//! leak the FoV, with and without camouflage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{ring_expand, TileGrid, TileSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacySpec {
    rho_s: f64,
}

impl PrivacySpec {
    pub fn new(rho_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_s) {
            return Err(Error::invalid("rho_s", format!("{rho_s} outside [0, 1]")));
        }
        Ok(Self { rho_s })
    }

    pub fn none() -> Self {
        Self { rho_s: 0.0 }
    }

    pub fn rho_s(&self) -> f64 {
        self.rho_s
    }

    /// `N_cf = ⌈rho_s · (M − N_fov)⌉`.
    pub fn camouflage_count(&self, m: usize, n_fov: usize) -> Result<usize> {
        check_fov(m, n_fov)?;
        let free = (m - n_fov) as f64;
        // the product can land a hair above an integer (e.g. 0.3 * 10)
        let raw = self.rho_s * free;
        let nearest = raw.round();
        let n = if (raw - nearest).abs() <= 1e-9 * free.max(1.0) {
            nearest
        } else {
            raw.ceil()
        };
        Ok((n as usize).min(m - n_fov))
    }
}

impl TryFrom<f64> for PrivacySpec {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PrivacySpec> for f64 {
    fn from(s: PrivacySpec) -> f64 {
        s.rho_s
    }
}

fn check_fov(m: usize, n_fov: usize) -> Result<()> {
    if n_fov == 0 || n_fov > m {
        return Err(Error::invalid("n_fov", format!("{n_fov} outside 1..={m}")));
    }
    Ok(())
}

/// `N_p = N_fov + ⌈rho_s · (M − N_fov)⌉`, the number of tiles streamed per segment.
pub fn overall_tile_count(spec: &PrivacySpec, m: usize, n_fov: usize) -> Result<usize> {
    Ok(n_fov + spec.camouflage_count(m, n_fov)?)
}

/// SDoP achieved by `n_cf` camouflage tiles.
pub fn sdop_of(n_cf: usize, m: usize, n_fov: usize) -> Result<f64> {
    check_fov(m, n_fov)?;
    if m == n_fov {
        return Err(Error::invalid(
            "n_fov",
            "FoV covers the whole panorama; SDoP is undefined",
        ));
    }
    if n_cf > m - n_fov {
        return Err(Error::NotEnoughTiles {
            requested: n_cf,
            available: m - n_fov,
        });
    }
    Ok(n_cf as f64 / (m - n_fov) as f64)
}

/// How camouflage tiles are placed around the predicted FoV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CamouflageStrategy {
    /// Contiguous rings around the predicted tiles.
    #[default]
    RingExpansion,
}

/// Camouflage set for a predicted FoV of exactly `n_fov` tiles.
pub fn generate_camouflage(
    grid: &TileGrid,
    predicted: &TileSet,
    spec: &PrivacySpec,
    n_fov: usize,
) -> Result<TileSet> {
    generate_camouflage_with(CamouflageStrategy::RingExpansion, grid, predicted, spec, n_fov)
}

pub fn generate_camouflage_with(
    strategy: CamouflageStrategy,
    grid: &TileGrid,
    predicted: &TileSet,
    spec: &PrivacySpec,
    n_fov: usize,
) -> Result<TileSet> {
    if predicted.len() != n_fov {
        return Err(Error::invalid(
            "predicted tiles",
            format!("expected {n_fov} tiles, got {}", predicted.len()),
        ));
    }
    let n_cf = spec.camouflage_count(grid.tile_count(), n_fov)?;
    match strategy {
        CamouflageStrategy::RingExpansion => ring_expand(grid, predicted, n_cf),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionStyle {
    /// Tile requests predicted from past tile requests.
    Direct,
    /// Viewpoints predicted first, then mapped to tiles.
    Indirect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Mec,
    Hmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upload {
    RealTiles,
    PredictedTiles,
    RealViewpoints,
    PredictedViewpoints,
    ModelParams,
    None,
}

impl Upload {
    pub fn label(&self, camouflage: bool) -> &'static str {
        match (self, camouflage) {
            (Upload::RealTiles, false) => "real tile requests",
            (Upload::RealTiles, true) => "real and camouflaged tile requests",
            (Upload::PredictedTiles, false) => "predicted tile requests",
            (Upload::PredictedTiles, true) => "predicted and camouflaged tile requests",
            (Upload::RealViewpoints, _) => "real viewpoints",
            (Upload::PredictedViewpoints, _) => "predicted viewpoints",
            (Upload::ModelParams, _) => "model parameters",
            (Upload::None, _) => "-",
        }
    }
}

/// One way of deploying predictor training and online prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeploymentCase {
    pub prediction_style: PredictionStyle,
    /// `None` when the predictor needs no training.
    pub train_site: Option<Site>,
    pub predict_site: Site,
    pub training_upload: Upload,
    pub prediction_upload: Upload,
    pub camouflage_enabled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Protected,
    Leaked,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Protected => "protected",
            Verdict::Leaked => "leaked",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageVerdicts {
    pub training: Verdict,
    pub prediction: Verdict,
}

impl DeploymentCase {
    /// The canonical case for a style and placement: uploads follow from
    /// where each stage runs. Indirect prediction at the HMD uploads
    /// predicted tiles when camouflage is on and predicted viewpoints
    /// otherwise.
    pub fn canonical(
        prediction_style: PredictionStyle,
        train_site: Option<Site>,
        predict_site: Site,
        camouflage_enabled: bool,
    ) -> Self {
        let real = match prediction_style {
            PredictionStyle::Direct => Upload::RealTiles,
            PredictionStyle::Indirect => Upload::RealViewpoints,
        };
        let training_upload = match train_site {
            None => Upload::None,
            Some(Site::Hmd) => Upload::ModelParams,
            Some(Site::Mec) => real,
        };
        let prediction_upload = match (predict_site, prediction_style, camouflage_enabled) {
            (Site::Mec, _, _) => real,
            (Site::Hmd, PredictionStyle::Direct, _) => Upload::PredictedTiles,
            (Site::Hmd, PredictionStyle::Indirect, true) => Upload::PredictedTiles,
            (Site::Hmd, PredictionStyle::Indirect, false) => Upload::PredictedViewpoints,
        };
        Self {
            prediction_style,
            train_site,
            predict_site,
            training_upload,
            prediction_upload,
            camouflage_enabled,
        }
    }

    /// Case number 1..=12: six direct then six indirect, each ordered
    /// (MEC, MEC), (MEC, HMD), (HMD, HMD), (HMD, MEC), (none, MEC), (none, HMD)
    /// for (training site, prediction site).
    pub fn numbered(no: usize, camouflage_enabled: bool) -> Result<Self> {
        if !(1..=12).contains(&no) {
            return Err(Error::invalid("case number", format!("{no} outside 1..=12")));
        }
        let style = if no <= 6 {
            PredictionStyle::Direct
        } else {
            PredictionStyle::Indirect
        };
        let (train, predict) = match (no - 1) % 6 {
            0 => (Some(Site::Mec), Site::Mec),
            1 => (Some(Site::Mec), Site::Hmd),
            2 => (Some(Site::Hmd), Site::Hmd),
            3 => (Some(Site::Hmd), Site::Mec),
            4 => (None, Site::Mec),
            _ => (None, Site::Hmd),
        };
        Ok(Self::canonical(style, train, predict, camouflage_enabled))
    }

    pub fn validate(&self) -> Result<()> {
        let real = match self.prediction_style {
            PredictionStyle::Direct => Upload::RealTiles,
            PredictionStyle::Indirect => Upload::RealViewpoints,
        };
        let training_ok = match self.train_site {
            None => self.training_upload == Upload::None,
            Some(Site::Hmd) => self.training_upload == Upload::ModelParams,
            Some(Site::Mec) => self.training_upload == real,
        };
        if !training_ok {
            return Err(Error::invalid(
                "deployment case",
                format!(
                    "training at {:?} cannot upload {:?}",
                    self.train_site, self.training_upload
                ),
            ));
        }
        let prediction_ok = match (self.predict_site, self.prediction_style) {
            (Site::Mec, _) => self.prediction_upload == real,
            (Site::Hmd, PredictionStyle::Direct) => self.prediction_upload == Upload::PredictedTiles,
            (Site::Hmd, PredictionStyle::Indirect) => matches!(
                self.prediction_upload,
                Upload::PredictedTiles | Upload::PredictedViewpoints
            ),
        };
        if !prediction_ok {
            return Err(Error::invalid(
                "deployment case",
                format!(
                    "{:?} prediction at {:?} cannot upload {:?}",
                    self.prediction_style, self.predict_site, self.prediction_upload
                ),
            ));
        }
        Ok(())
    }
}

fn upload_verdict(upload: Upload, camouflage: bool) -> Verdict {
    match upload {
        Upload::None | Upload::ModelParams => Verdict::Protected,
        Upload::RealViewpoints | Upload::PredictedViewpoints => Verdict::Leaked,
        Upload::RealTiles | Upload::PredictedTiles if camouflage => Verdict::Protected,
        Upload::RealTiles | Upload::PredictedTiles => Verdict::Leaked,
    }
}

/// Whether the FoV is exposed to the edge server during predictor training
/// and during online prediction. A stage that uploads nothing, or only model
/// parameters, is protected; viewpoints always leak; tile requests leak
/// unless camouflaged.
pub fn classify_deployment(case: &DeploymentCase) -> Result<StageVerdicts> {
    case.validate()?;
    Ok(StageVerdicts {
        training: upload_verdict(case.training_upload, case.camouflage_enabled),
        prediction: upload_verdict(case.prediction_upload, case.camouflage_enabled),
    })
}
