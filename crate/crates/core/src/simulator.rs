//! Per-segment proactive streaming pipeline and QoE accounting.
//!
//! For every proactively streamed segment `l` (from `l0` to `L`) the HMD
//! observes `n_obw` samples that end `t_cc` before the segment starts
//! playing, predicts the viewpoint over the segment, and requests the `N_fov`
//! predicted tiles plus camouflage. The edge server streams the union when
//! its capability covers it; otherwise it falls back to the predicted tiles
//! alone, which exposes the FoV. Each segment then scores the overlap of the
//! really requested tiles with the predicted tiles (DoO) and with the
//! streamed tiles (QoE).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{fov_tiles, TileGrid, TileSet, Viewpoint};
use crate::optimizer::{
    max_resources_rate, optimize_durations, rates_for_resources_rate, DurationPlan, StreamClock,
};
use crate::prediction::{
    overlap_ratio, predict, predicted_tile_set, ObservationWindow, PredictionRequest, PredictorKind,
};
use crate::privacy::{generate_camouflage, PrivacySpec};
use crate::resources::{capable_tiles, tile_bits, Rates, VideoConfig};
use crate::trace_io::Trace;
use crate::{Error, Result};

/// Source of predicted viewpoints for one segment of one trace.
pub trait SegmentPredictor: Sync {
    /// Observation samples needed before a prediction can be made.
    fn min_samples(&self) -> usize {
        1
    }

    fn predict_segment(
        &self,
        trace: &Trace,
        segment: usize,
        req: &PredictionRequest,
    ) -> Result<Vec<Viewpoint>>;
}

impl SegmentPredictor for PredictorKind {
    fn min_samples(&self) -> usize {
        PredictorKind::min_samples(self)
    }

    fn predict_segment(&self, _: &Trace, _: usize, req: &PredictionRequest) -> Result<Vec<Viewpoint>> {
        predict(*self, req)
    }
}

pub const PREDICTIONS_HEADER: [&str; 4] = ["trace_id", "segment_index", "yaw_rad", "pitch_rad"];

/// Viewpoints computed outside this crate (e.g. by a trained deep model),
/// keyed by trace id and segment index.
#[derive(Clone, Debug, Default)]
pub struct PrecomputedPredictions {
    by_segment: HashMap<(String, usize), (f64, f64)>,
}

impl PrecomputedPredictions {
    pub fn insert(&mut self, trace_id: impl Into<String>, segment: usize, yaw: f64, pitch: f64) {
        self.by_segment.insert((trace_id.into(), segment), (yaw, pitch));
    }

    /// Reads a `trace_id,segment_index,yaw_rad,pitch_rad` CSV (header row
    /// mandatory).
    pub fn load(path: &Path) -> Result<Self> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| io(e.into()))?;
        let header = reader.headers().map_err(|e| io(e.into()))?.clone();
        if header.iter().ne(PREDICTIONS_HEADER) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected header {}", PREDICTIONS_HEADER.join(",")),
            });
        }
        let mut out = Self::default();
        for (i, row) in reader.records().enumerate() {
            let line = i as u64 + 2;
            let parse_err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                reason,
            };
            let row = row.map_err(|e| parse_err(e.to_string()))?;
            if row.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, got {}", row.len())));
            }
            let segment: usize = row[1]
                .parse()
                .map_err(|e| parse_err(format!("segment_index: {e}")))?;
            let angle = |k: usize| -> Result<f64> {
                row[k]
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("{}: {e}", PREDICTIONS_HEADER[k])))
            };
            let (yaw, pitch) = (angle(2)?, angle(3)?);
            Viewpoint::new(yaw, pitch, 0.0).map_err(|e| parse_err(e.to_string()))?;
            out.insert(&row[0], segment, yaw, pitch);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.by_segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_segment.is_empty()
    }
}

impl SegmentPredictor for PrecomputedPredictions {
    fn predict_segment(
        &self,
        trace: &Trace,
        segment: usize,
        req: &PredictionRequest,
    ) -> Result<Vec<Viewpoint>> {
        let &(yaw, pitch) = self
            .by_segment
            .get(&(trace.trace_id.clone(), segment))
            .ok_or_else(|| {
                Error::invalid(
                    "precomputed predictions",
                    format!("no entry for {} segment {segment}", trace.trace_id),
                )
            })?;
        let t = req.window.last().t + req.gap + 0.5 * req.horizon;
        Ok(vec![Viewpoint::new(yaw, pitch, t)?])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentRecord {
    pub segment_index: usize,
    /// Really requested tiles `q_l`.
    pub real_set: TileSet,
    /// Predicted tiles `e_l`.
    pub predicted_set: TileSet,
    /// Streamed tiles `s_l`.
    pub streamed_set: TileSet,
    pub doo_term: f64,
    pub qoe_term: f64,
    pub leaked: bool,
    pub fallback_triggered: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub trace_id: String,
    pub rho_s: f64,
    pub plan: DurationPlan,
    pub cc_capability: f64,
    pub average_doo: f64,
    pub average_qoe: f64,
    pub records: Vec<SegmentRecord>,
}

/// Everything a simulation run needs besides the trace and predictor.
#[derive(Clone, Debug)]
pub struct SimSetup {
    pub clock: StreamClock,
    pub video: VideoConfig,
    pub rates: Rates,
    pub spec: PrivacySpec,
    pub plan: DurationPlan,
    /// Diameter of the circular FoV used for the real requests, degrees.
    pub fov_diameter_deg: f64,
}

impl SimSetup {
    /// Setup with the optimal plan for the given parameters.
    pub fn optimized(
        clock: StreamClock,
        video: VideoConfig,
        rates: Rates,
        spec: PrivacySpec,
        tau: f64,
        fov_diameter_deg: f64,
    ) -> Result<Self> {
        let plan = optimize_durations(&clock, tau, &spec, &video, &rates)?;
        Ok(Self {
            clock,
            video,
            rates,
            spec,
            plan,
            fov_diameter_deg,
        })
    }

    /// Whole tiles the plan's durations can render and deliver.
    pub fn capability_tiles(&self) -> usize {
        let bits = tile_bits(&self.video);
        capable_tiles(
            self.plan.t_com,
            self.plan.t_cpt,
            &self.rates,
            &bits,
            self.video.tile_count(),
        )
        .floor() as usize
    }
}

/// Tiles really requested in segment `l`: the union of the FoVs of every
/// trace sample played during the segment.
pub fn real_request_set(
    trace: &Trace,
    segment_index: usize,
    clock: &StreamClock,
    grid: &TileGrid,
    fov_diameter_deg: f64,
) -> Result<TileSet> {
    let from = clock.playback_start(segment_index);
    let samples = trace.samples_in(from, from + clock.t_seg);
    if samples.is_empty() {
        return Err(Error::invalid(
            "trace",
            format!("{} has no samples in segment {segment_index}", trace.trace_id),
        ));
    }
    let mut set = TileSet::empty(*grid);
    for vp in samples {
        set = set.union(&fov_tiles(grid, vp, fov_diameter_deg)?)?;
    }
    Ok(set)
}

/// The tiles the edge server streams. With enough capability it sends the
/// predicted and camouflage tiles; otherwise only predicted tiles, lowest
/// index first, up to its capability (`fallback = true`).
pub fn decide_streamed_set(
    predicted: &TileSet,
    camouflage: &TileSet,
    capability_tiles: usize,
) -> Result<(TileSet, bool)> {
    let requested = predicted.union(camouflage)?;
    if capability_tiles >= requested.len() {
        return Ok((requested, false));
    }
    let kept = TileSet::from_indices(predicted.grid(), predicted.iter().take(capability_tiles))?;
    Ok((kept, true))
}

/// Mean per-segment QoE term.
pub fn qoe_of_records(records: &[SegmentRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("records", "no segments"));
    }
    let sum = records
        .iter()
        .map(|r| overlap_ratio(&r.real_set, &r.streamed_set))
        .sum::<Result<f64>>()?;
    Ok(sum / records.len() as f64)
}

fn observation_window(trace: &Trace, end: f64, n: usize, tau: f64) -> Result<ObservationWindow> {
    let samples = (0..n)
        .map(|k| {
            let t = end - (n - 1 - k) as f64 * tau;
            // a window that starts exactly at t = 0 may land a rounding error below it
            if t < 0.0 && t > -1e-9 {
                trace.viewpoint_at(0.0)
            } else {
                trace.viewpoint_at(t)
            }
        })
        .collect();
    ObservationWindow::new(samples, tau)
}

fn check_coverage(trace: &Trace, clock: &StreamClock) -> Result<()> {
    let needed = clock.segments as f64 * clock.t_seg;
    let covered = trace.end() + trace.native_interval;
    if covered < needed - 1e-9 || trace.start() > 1e-9 {
        return Err(Error::invalid(
            "trace",
            format!(
                "{} covers [{}, {covered}) s but {} segments need [0, {needed}) s",
                trace.trace_id,
                trace.start(),
                clock.segments
            ),
        ));
    }
    Ok(())
}

/// `real_request_set` for every proactively streamed segment `l0..=L`.
pub fn real_request_sets(
    trace: &Trace,
    clock: &StreamClock,
    grid: &TileGrid,
    fov_diameter_deg: f64,
) -> Result<Vec<TileSet>> {
    check_coverage(trace, clock)?;
    (clock.l0..=clock.segments)
        .map(|l| real_request_set(trace, l, clock, grid, fov_diameter_deg))
        .collect()
}

pub fn simulate_trace(
    trace: &Trace,
    predictor: &dyn SegmentPredictor,
    setup: &SimSetup,
) -> Result<SimReport> {
    setup.clock.validate()?;
    let real = real_request_sets(trace, &setup.clock, &setup.video.grid, setup.fov_diameter_deg)?;
    simulate_with_real(trace, &real, predictor, setup)
}

// `real` holds the requested tiles of segments l0..=L.
fn simulate_with_real(
    trace: &Trace,
    real_sets: &[TileSet],
    predictor: &dyn SegmentPredictor,
    setup: &SimSetup,
) -> Result<SimReport> {
    let SimSetup {
        clock,
        video,
        spec,
        plan,
        ..
    } = setup;
    clock.validate()?;
    video.validate()?;
    plan.validate()?;
    check_coverage(trace, clock)?;
    if plan.n_obw_samples == 0 {
        return Err(Error::EmptyObservation);
    }
    if plan.n_obw_samples < predictor.min_samples() {
        return Err(Error::InsufficientSamples {
            needed: predictor.min_samples(),
            got: plan.n_obw_samples,
        });
    }

    if real_sets.len() != clock.segments + 1 - clock.l0 || real_sets.iter().any(|q| q.grid() != video.grid) {
        return Err(Error::invalid("real request sets", "do not match the clock and grid"));
    }
    let grid = video.grid;
    let m = grid.tile_count();
    let capability = setup.capability_tiles();
    let mut records = Vec::with_capacity(clock.segments + 1 - clock.l0);
    for l in clock.l0..=clock.segments {
        let playback = clock.playback_start(l);
        let window_end = playback - plan.t_cc();
        let window = observation_window(trace, window_end, plan.n_obw_samples, plan.tau)?;
        let req = PredictionRequest {
            window,
            gap: plan.t_cc(),
            horizon: clock.t_seg,
            sample_interval: plan.tau,
        };
        let future = predictor.predict_segment(trace, l, &req)?;
        let predicted = predicted_tile_set(&future, &grid, video.n_fov)?;
        let camouflage = generate_camouflage(&grid, &predicted, spec, video.n_fov)?;
        let (streamed, fallback) = decide_streamed_set(&predicted, &camouflage, capability)?;
        let real = real_sets[l - clock.l0].clone();
        records.push(SegmentRecord {
            segment_index: l,
            doo_term: overlap_ratio(&real, &predicted)?,
            qoe_term: overlap_ratio(&real, &streamed)?,
            leaked: fallback || camouflage.is_empty(),
            fallback_triggered: fallback,
            real_set: real,
            predicted_set: predicted,
            streamed_set: streamed,
        });
    }
    let n = records.len() as f64;
    Ok(SimReport {
        trace_id: trace.trace_id.clone(),
        rho_s: spec.rho_s(),
        plan: *plan,
        cc_capability: capability.min(m) as f64 / m as f64,
        average_doo: records.iter().map(|r| r.doo_term).sum::<f64>() / n,
        average_qoe: qoe_of_records(&records)?,
        records,
    })
}

/// Simulates every trace (in parallel), keeping input order.
pub fn simulate_traces(
    traces: &[Trace],
    predictor: &dyn SegmentPredictor,
    setup: &SimSetup,
) -> Result<Vec<SimReport>> {
    traces
        .par_iter()
        .map(|t| simulate_trace(t, predictor, setup))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub traces: usize,
    pub rho_s: f64,
    pub max_resources_rate: f64,
    pub plan: DurationPlan,
    pub cc_capability: f64,
    pub average_doo: f64,
    pub average_qoe: f64,
    pub fallback_segments: usize,
    pub leaked_segments: usize,
}

/// Mean of the per-trace averages, summed in trace order.
pub fn aggregate(reports: &[SimReport], setup: &SimSetup) -> Result<Aggregate> {
    if reports.is_empty() {
        return Err(Error::invalid("reports", "nothing to aggregate"));
    }
    let n = reports.len() as f64;
    Ok(Aggregate {
        traces: reports.len(),
        rho_s: setup.spec.rho_s(),
        max_resources_rate: max_resources_rate(&setup.video, &setup.rates),
        plan: setup.plan,
        cc_capability: reports[0].cc_capability,
        average_doo: reports.iter().map(|r| r.average_doo).sum::<f64>() / n,
        average_qoe: reports.iter().map(|r| r.average_qoe).sum::<f64>() / n,
        fallback_segments: reports
            .iter()
            .flat_map(|r| &r.records)
            .filter(|s| s.fallback_triggered)
            .count(),
        leaked_segments: reports
            .iter()
            .flat_map(|r| &r.records)
            .filter(|s| s.leaked)
            .count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Feasible {
        avg_qoe: f64,
        avg_doo: f64,
        cc_capability: f64,
    },
    Infeasible {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rho_s: f64,
    pub rcc: f64,
    pub outcome: CellOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rho_grid: Vec<f64>,
    pub rcc_grid: Vec<f64>,
    /// Row-major: one row per `rho_s`, one column per resources rate.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, rho_index: usize, rcc_index: usize) -> &SweepCell {
        &self.cells[rho_index * self.rcc_grid.len() + rcc_index]
    }

    pub const CSV_HEADER: &'static str = "rho_s,rcc,avg_qoe,avg_doo,cc_capability,feasible";

    /// One line per cell; infeasible cells leave the metrics empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            match &c.outcome {
                CellOutcome::Feasible {
                    avg_qoe,
                    avg_doo,
                    cc_capability,
                } => writeln!(out, "{},{},{avg_qoe},{avg_doo},{cc_capability},true", c.rho_s, c.rcc),
                CellOutcome::Infeasible { .. } => writeln!(out, "{},{},,,,false", c.rho_s, c.rcc),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Inputs shared by every cell of a sweep.
#[derive(Clone, Debug)]
pub struct SweepSetup {
    pub clock: StreamClock,
    pub video: VideoConfig,
    /// Rates are scaled proportionally from these to hit each target rate.
    pub base_rates: Rates,
    pub tau: f64,
    pub fov_diameter_deg: f64,
}

impl SweepSetup {
    /// Simulation setup of one `(rho_s, rcc)` cell.
    pub fn cell_setup(&self, rho_s: f64, rcc: f64) -> Result<SimSetup> {
        let rates = rates_for_resources_rate(&self.video, &self.base_rates, rcc)?;
        SimSetup::optimized(
            self.clock,
            self.video.clone(),
            rates,
            PrivacySpec::new(rho_s)?,
            self.tau,
            self.fov_diameter_deg,
        )
    }
}

fn is_cell_infeasibility(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible { .. } | Error::EmptyObservation | Error::InsufficientSamples { .. }
    )
}

/// QoE, DoO and CC capability over a grid of privacy levels and resources
/// rates. Cells that cannot be planned or observed are flagged, not dropped.
pub fn sweep(
    traces: &[Trace],
    predictor: &dyn SegmentPredictor,
    rho_grid: &[f64],
    rcc_grid: &[f64],
    setup: &SweepSetup,
) -> Result<SweepResult> {
    if rho_grid.is_empty() || rcc_grid.is_empty() {
        return Err(Error::invalid("sweep grid", "grids must be non-empty"));
    }
    if traces.is_empty() {
        return Err(Error::invalid("sweep", "no traces"));
    }
    setup.clock.validate()?;
    // requested tiles do not depend on the cell
    let real: Vec<Vec<TileSet>> = traces
        .par_iter()
        .map(|t| real_request_sets(t, &setup.clock, &setup.video.grid, setup.fov_diameter_deg))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(rho_grid.len() * rcc_grid.len());
    for &rho_s in rho_grid {
        for &rcc in rcc_grid {
            let outcome = match run_cell(traces, &real, predictor, setup, rho_s, rcc) {
                Ok(agg) => CellOutcome::Feasible {
                    avg_qoe: agg.average_qoe,
                    avg_doo: agg.average_doo,
                    cc_capability: agg.cc_capability,
                },
                Err(e) if is_cell_infeasibility(&e) => CellOutcome::Infeasible {
                    reason: e.to_string(),
                },
                Err(e) => return Err(e),
            };
            cells.push(SweepCell { rho_s, rcc, outcome });
        }
    }
    Ok(SweepResult {
        rho_grid: rho_grid.to_vec(),
        rcc_grid: rcc_grid.to_vec(),
        cells,
    })
}

fn run_cell(
    traces: &[Trace],
    real: &[Vec<TileSet>],
    predictor: &dyn SegmentPredictor,
    setup: &SweepSetup,
    rho_s: f64,
    rcc: f64,
) -> Result<Aggregate> {
    let sim = setup.cell_setup(rho_s, rcc)?;
    let reports = traces
        .par_iter()
        .zip(real)
        .map(|(t, q)| simulate_with_real(t, q, predictor, &sim))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&reports, &sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> TileGrid {
        TileGrid::new(6, 10).unwrap()
    }

    fn set(ix: impl IntoIterator<Item = usize>) -> TileSet {
        TileSet::from_indices(grid(), ix).unwrap()
    }

    fn clock() -> StreamClock {
        StreamClock::new(3, 1.0, 10).unwrap()
    }

    fn still_trace(yaw: f64, pitch: f64) -> Trace {
        let samples = (0..50)
            .map(|k| Viewpoint::new(yaw, pitch, k as f64 * 0.2).unwrap())
            .collect();
        Trace::new("still", "u", "v", samples).unwrap()
    }

    #[test]
    fn stationary_real_set() {
        let tr = still_trace(0.3, 0.2);
        let q = real_request_set(&tr, 4, &clock(), &grid(), 100.0).unwrap();
        assert_eq!(q, fov_tiles(&grid(), &tr.samples[0], 100.0).unwrap());
        let all = real_request_set(&tr, 4, &clock(), &grid(), 360.0).unwrap();
        assert_eq!(all.len(), 60);
        assert!(real_request_set(&tr, 11, &clock(), &grid(), 100.0).is_err());
    }

    #[test]
    fn sweeping_segment_grows_real_set() {
        // half a turn of yaw inside segment 2
        let samples: Vec<Viewpoint> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.1;
                let yaw = if t < 1.0 { -PI / 2.0 } else { -PI / 2.0 + (t - 1.0) * PI };
                Viewpoint::normalized(yaw, 0.0, t)
            })
            .collect();
        let tr = Trace::new("sweep", "u", "v", samples).unwrap();
        let union = real_request_set(&tr, 2, &clock(), &grid(), 60.0).unwrap();
        let widest = tr
            .samples_in(1.0, 2.0)
            .iter()
            .map(|vp| fov_tiles(&grid(), vp, 60.0).unwrap().len())
            .max()
            .unwrap();
        assert!(union.len() > widest);
    }

    #[test]
    fn streamed_set_decisions() {
        let predicted = set((24..=27).chain(34..=37));
        let camo = set((13..=18).chain([23, 28, 33, 38]).chain(43..=48));
        let (s, fb) = decide_streamed_set(&predicted, &camo, 24).unwrap();
        assert!(!fb);
        assert_eq!(s.len(), 24);
        let (s, fb) = decide_streamed_set(&predicted, &camo, 8).unwrap();
        assert!(fb);
        assert_eq!(s, predicted);
        let (s, fb) = decide_streamed_set(&predicted, &camo, 3).unwrap();
        assert!(fb);
        assert_eq!(s.to_vec(), vec![24, 25, 26]);
        let (s, fb) = decide_streamed_set(&predicted, &camo, 0).unwrap();
        assert!(fb && s.is_empty());
    }

    fn record(real: TileSet, streamed: TileSet) -> SegmentRecord {
        SegmentRecord {
            segment_index: 1,
            predicted_set: streamed.clone(),
            doo_term: 0.0,
            qoe_term: 0.0,
            leaked: false,
            fallback_triggered: false,
            real_set: real,
            streamed_set: streamed,
        }
    }

    #[test]
    fn qoe_examples() {
        let q = set([1, 2, 3, 4]);
        assert_eq!(qoe_of_records(&[record(q.clone(), TileSet::full(grid()))]).unwrap(), 1.0);
        assert_eq!(qoe_of_records(&[record(q.clone(), set([9]))]).unwrap(), 0.0);
        let two = [record(q.clone(), set([1])), record(q.clone(), set([1, 2, 3]))];
        assert_eq!(qoe_of_records(&two).unwrap(), 0.5);
        assert!(qoe_of_records(&[]).is_err());
    }

    fn video() -> VideoConfig {
        VideoConfig {
            grid: grid(),
            n_fov: 8,
            ..VideoConfig::reference_4k()
        }
    }

    #[test]
    fn stationary_trace_is_perfect_without_privacy() {
        let setup = SimSetup::optimized(
            clock(),
            video(),
            Rates::reference().scaled(10.0),
            PrivacySpec::none(),
            0.2,
            30.0,
        )
        .unwrap();
        // a 30° FoV at a tile center touches only the nearest tiles
        let tr = still_trace(-PI + 0.3 * PI, 0.0 + PI / 12.0);
        let report = simulate_trace(&tr, &PredictorKind::TrivialMotion, &setup).unwrap();
        assert_eq!(report.records.len(), 8);
        assert_eq!(report.average_qoe, 1.0);
        assert_eq!(report.average_qoe, report.average_doo);
        assert!(report.records.iter().all(|r| r.leaked && !r.fallback_triggered));
    }

    #[test]
    fn manual_plan_triggers_fallback() {
        let mut setup = SimSetup::optimized(
            clock(),
            video(),
            Rates::reference(),
            PrivacySpec::new(0.5).unwrap(),
            0.2,
            100.0,
        )
        .unwrap();
        // durations sized for the FoV alone
        let bits = tile_bits(&setup.video);
        let t_com = bits.s_com * 8.0 / setup.rates.c_com;
        let t_cpt = bits.s_cpt * 8.0 / setup.rates.c_cpt;
        setup.plan = DurationPlan::manual(t_com, t_cpt, 2.0, 0.2, 8).unwrap();
        assert_eq!(setup.capability_tiles(), 8);
        let tr = still_trace(0.5, 0.1);
        let report = simulate_trace(&tr, &PredictorKind::TrivialMotion, &setup).unwrap();
        assert!(report.records.iter().all(|r| r.fallback_triggered && r.leaked));
        assert!(report.records.iter().all(|r| r.streamed_set == r.predicted_set));
    }

    #[test]
    fn short_trace_and_bad_plan_rejected() {
        let setup = SimSetup::optimized(
            clock(),
            video(),
            Rates::reference(),
            PrivacySpec::none(),
            0.2,
            100.0,
        )
        .unwrap();
        let samples = (0..20)
            .map(|k| Viewpoint::new(0.0, 0.0, k as f64 * 0.2).unwrap())
            .collect();
        let short = Trace::new("short", "u", "v", samples).unwrap();
        assert!(simulate_trace(&short, &PredictorKind::TrivialMotion, &setup).is_err());

        let mut unobservable = setup.clone();
        unobservable.plan = DurationPlan::manual(1.0, 0.9, 2.0, 0.2, 8).unwrap();
        assert!(matches!(
            simulate_trace(&still_trace(0.0, 0.0), &PredictorKind::TrivialMotion, &unobservable),
            Err(Error::EmptyObservation)
        ));
    }

    #[test]
    fn precomputed_predictions_are_used() {
        let setup = SimSetup::optimized(
            clock(),
            video(),
            Rates::reference(),
            PrivacySpec::none(),
            0.2,
            100.0,
        )
        .unwrap();
        let tr = still_trace(0.0, 0.0);
        let mut pre = PrecomputedPredictions::default();
        for l in 3..=10 {
            pre.insert("still", l, -2.5, -0.5);
        }
        let report = simulate_trace(&tr, &pre, &setup).unwrap();
        let anchor = Viewpoint::new(-2.5, -0.5, 0.0).unwrap();
        let expected = crate::geometry::top_n_tiles(&grid(), &anchor, 8).unwrap();
        assert!(report.records.iter().all(|r| r.predicted_set == expected));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.csv");
        let mut csv = String::from("trace_id,segment_index,yaw_rad,pitch_rad\n");
        for l in 3..=10 {
            csv.push_str(&format!("still,{l},-2.5,-0.5\n"));
        }
        std::fs::write(&path, csv).unwrap();
        let loaded = PrecomputedPredictions::load(&path).unwrap();
        assert_eq!(loaded.len(), 8);
        let again = simulate_trace(&tr, &loaded, &setup).unwrap();
        assert_eq!(again.average_qoe, report.average_qoe);
        std::fs::write(&path, "trace_id,segment_index,yaw_rad,pitch_rad\nstill,x,0,0\n").unwrap();
        assert!(matches!(
            PrecomputedPredictions::load(&path),
            Err(Error::Parse { line: 2, .. })
        ));
        let mut partial = PrecomputedPredictions::default();
        partial.insert("still", 3, 0.0, 0.0);
        assert!(simulate_trace(&tr, &partial, &setup).is_err());
    }

    #[test]
    fn sweep_flags_infeasible_cells() {
        let tr = still_trace(0.0, 0.0);
        let setup = SweepSetup {
            clock: clock(),
            video: video(),
            base_rates: Rates::reference(),
            tau: 0.2,
            fov_diameter_deg: 100.0,
        };
        // rcc = 0.1: even the FoV alone takes more than T_ps at full privacy
        let res = sweep(&[tr], &PredictorKind::TrivialMotion, &[0.0, 1.0], &[0.1, 2.0], &setup).unwrap();
        assert_eq!(res.cells.len(), 4);
        assert!(matches!(res.cell(1, 0).outcome, CellOutcome::Infeasible { .. }));
        assert!(matches!(res.cell(1, 1).outcome, CellOutcome::Feasible { .. }));
        let csv = res.to_csv();
        assert!(csv.starts_with(SweepResult::CSV_HEADER));
        assert!(csv.contains("1,0.1,,,,false"));
        assert!(sweep(&[], &PredictorKind::TrivialMotion, &[0.0], &[1.0], &setup).is_err());
    }
}
