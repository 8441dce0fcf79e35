//! Privacy-aware proactive tile-based 360° video streaming.
//!
//! The crate models a segment pipeline where a head-mounted display observes
//! the viewer's head trace, predicts the next field of view, pads the
//! predicted tiles with camouflage tiles so the edge server cannot localize
//! the real FoV, and has the edge server render and transmit everything
//! before playback. The durations for observation, rendering and
//! transmission are chosen in closed form and the resulting QoE is evaluated
//! over head-movement traces.
//!
//! Module map:
//!
//! - [`geometry`]: tile grid, sphere distances, FoV footprints, ring expansion.
//! - [`privacy`]: spatial degree of privacy, camouflage sets, deployment leakage.
//! - [`prediction`]: viewpoint predictors and the average degree of overlap.
//! - [`resources`]: tile sizes, computing/transmission rates, CC capability.
//! - [`optimizer`]: closed-form duration plan and its brute-force check.
//! - [`simulator`]: per-segment streaming pipeline, QoE and parameter sweeps.
//! - [`trace_io`]: trace CSV formats, resampling and synthetic traces.

pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod prediction;
pub mod privacy;
pub mod resources;
pub mod simulator;
pub mod trace_io;

pub use error::{Error, Result};
pub use geometry::{TileGrid, TileSet, Viewpoint};
