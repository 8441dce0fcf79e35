//! Closed-form split of the proactive streaming time.
//!
//! Each segment has `T_ps = (l0 − 1) · T_seg` seconds between the start of
//! its observation window and its playback. The plan spends exactly enough
//! time rendering and transmitting the `N_p` tiles the privacy requirement
//! calls for, and gives the rest to observation in whole samples of `tau`:
//!
//! ```text
//! t_com = s_com · N_p / C_com        t_cpt = s_cpt · N_p / C_cpt
//! t_cc  = t_com + t_cpt              n_obw = ⌊(T_ps − t_cc) / tau⌋
//! ```
//!
//! What is left after flooring is kept as `idle_slack`, so
//! `t_obw + idle_slack + t_com + t_cpt = T_ps`.

use serde::{Deserialize, Serialize};

use crate::privacy::{overall_tile_count, PrivacySpec};
use crate::resources::{capable_tiles, tile_bits, Rates, VideoConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamClock {
    /// First proactively streamed segment (1-based).
    pub l0: usize,
    pub t_seg: f64,
    /// Number of segments in the video.
    pub segments: usize,
}

impl StreamClock {
    pub fn new(l0: usize, t_seg: f64, segments: usize) -> Result<Self> {
        let c = Self { l0, t_seg, segments };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l0 < 2 || self.l0 > self.segments {
            return Err(Error::invalid(
                "stream clock",
                format!("need 2 <= l0 <= L, got l0 = {}, L = {}", self.l0, self.segments),
            ));
        }
        if !(self.t_seg.is_finite() && self.t_seg > 0.0) {
            return Err(Error::invalid("stream clock", format!("t_seg = {}", self.t_seg)));
        }
        Ok(())
    }

    /// Proactive streaming time `T_ps`.
    pub fn t_ps(&self) -> f64 {
        (self.l0 - 1) as f64 * self.t_seg
    }

    /// Playback start of segment `l` (1-based); segment 1 starts at t = 0.
    pub fn playback_start(&self, l: usize) -> f64 {
        (l - 1) as f64 * self.t_seg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Ok,
    /// Rendering and transmission fit, but not a single observation sample does.
    NoObservation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationPlan {
    pub t_obw: f64,
    pub t_com: f64,
    pub t_cpt: f64,
    pub idle_slack: f64,
    pub t_ps: f64,
    pub tau: f64,
    pub n_obw_samples: usize,
    /// Tiles streamed per segment.
    pub n_p: usize,
    pub status: PlanStatus,
}

impl DurationPlan {
    pub fn t_cc(&self) -> f64 {
        self.t_com + self.t_cpt
    }

    /// Time available for observation before flooring to whole samples.
    pub fn observation_budget(&self) -> f64 {
        self.t_obw + self.idle_slack
    }

    /// Builds a plan from hand-picked durations. Observation gets as many
    /// whole samples as fit in what remains of `t_ps`.
    pub fn manual(t_com: f64, t_cpt: f64, t_ps: f64, tau: f64, n_p: usize) -> Result<Self> {
        if !(t_com >= 0.0 && t_cpt >= 0.0) {
            return Err(Error::invalid("plan", "durations must be non-negative"));
        }
        check_tau(tau)?;
        let budget = t_ps - t_com - t_cpt;
        if budget < 0.0 {
            return Err(Error::Infeasible {
                required: t_com + t_cpt,
                available: t_ps,
            });
        }
        Ok(split_observation(t_com, t_cpt, t_ps, tau, n_p))
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.t_obw + self.idle_slack + self.t_com + self.t_cpt;
        if (sum - self.t_ps).abs() > 1e-9 {
            return Err(Error::invalid(
                "plan",
                format!("durations sum to {sum} s instead of {} s", self.t_ps),
            ));
        }
        if [self.t_obw, self.idle_slack, self.t_com, self.t_cpt]
            .iter()
            .any(|&d| d < 0.0)
        {
            return Err(Error::invalid("plan", "negative duration"));
        }
        if (self.t_obw - self.n_obw_samples as f64 * self.tau).abs() > 1e-9 {
            return Err(Error::invalid("plan", "t_obw is not a whole number of samples"));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("{tau} must be positive")));
    }
    Ok(())
}

fn split_observation(t_com: f64, t_cpt: f64, t_ps: f64, tau: f64, n_p: usize) -> DurationPlan {
    let budget = (t_ps - t_com - t_cpt).max(0.0);
    // guard the floor against budgets like 0.6 / 0.2 = 2.9999999999999996
    let ratio = budget / tau;
    let n = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.floor()
    } as usize;
    let t_obw = n as f64 * tau;
    DurationPlan {
        t_obw,
        t_com,
        t_cpt,
        idle_slack: (t_ps - t_com - t_cpt - t_obw).max(0.0),
        t_ps,
        tau,
        n_obw_samples: n,
        n_p,
        status: if n == 0 {
            PlanStatus::NoObservation
        } else {
            PlanStatus::Ok
        },
    }
}

/// Durations that stream exactly `N_p` tiles and leave the most whole
/// observation samples. Fails with [`Error::Infeasible`] when rendering and
/// transmission alone overrun `T_ps`; a plan with no room for even one
/// sample is returned with [`PlanStatus::NoObservation`].
pub fn optimize_durations(
    clock: &StreamClock,
    tau: f64,
    spec: &PrivacySpec,
    video: &VideoConfig,
    rates: &Rates,
) -> Result<DurationPlan> {
    clock.validate()?;
    video.validate()?;
    rates.validate()?;
    check_tau(tau)?;
    let n_p = overall_tile_count(spec, video.tile_count(), video.n_fov)?;
    let bits = tile_bits(video);
    let t_com = bits.s_com * n_p as f64 / rates.c_com;
    let t_cpt = bits.s_cpt * n_p as f64 / rates.c_cpt;
    let t_ps = clock.t_ps();
    if t_com + t_cpt > t_ps {
        return Err(Error::Infeasible {
            required: t_com + t_cpt,
            available: t_ps,
        });
    }
    Ok(split_observation(t_com, t_cpt, t_ps, tau, n_p))
}

/// Largest resources rate, `1 / (s_com·M/C_com + s_cpt·M/C_cpt)`: the
/// inverse of the time needed to render and send a whole segment.
pub fn max_resources_rate(video: &VideoConfig, rates: &Rates) -> f64 {
    let bits = tile_bits(video);
    let m = video.tile_count() as f64;
    1.0 / (bits.s_com * m / rates.c_com + bits.s_cpt * m / rates.c_cpt)
}

/// Rates proportional to `base` whose maximal resources rate is `target`.
pub fn rates_for_resources_rate(video: &VideoConfig, base: &Rates, target: f64) -> Result<Rates> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::invalid("resources rate", format!("{target} must be positive")));
    }
    base.validate()?;
    Ok(base.scaled(target / max_resources_rate(video, base)))
}

/// Exhaustive search over `(t_com, t_cpt)` on a grid of `step` seconds.
///
/// A grid point is accepted when, within half a step of each duration, that
/// resource can handle `N_p` tiles; i.e. the grid cell around the point meets
/// the constraint. Among accepted points with `t_com + t_cpt <= T_ps` the one
/// leaving the longest observation budget wins. Test oracle only.
pub fn brute_force_plan(
    clock: &StreamClock,
    tau: f64,
    spec: &PrivacySpec,
    video: &VideoConfig,
    rates: &Rates,
    step: f64,
) -> Result<DurationPlan> {
    clock.validate()?;
    video.validate()?;
    rates.validate()?;
    check_tau(tau)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("grid step", format!("{step} must be positive")));
    }
    let m = video.tile_count();
    let n_p = overall_tile_count(spec, m, video.n_fov)?;
    let bits = tile_bits(video);
    let t_ps = clock.t_ps();
    let cells = (t_ps / step).floor() as usize + 1;

    let can_stream = |t_com: f64, t_cpt: f64| {
        capable_tiles(t_com + step / 2.0, t_cpt + step / 2.0, rates, &bits, m) >= n_p as f64
    };

    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..cells {
        let t_com = i as f64 * step;
        for j in 0..cells {
            let t_cpt = j as f64 * step;
            let budget = t_ps - t_com - t_cpt;
            if budget < 0.0 {
                break;
            }
            if can_stream(t_com, t_cpt) && best.is_none_or(|(b, _, _)| budget > b) {
                best = Some((budget, t_com, t_cpt));
            }
        }
    }
    let (_, t_com, t_cpt) = best.ok_or(Error::NoGridPlan { step })?;
    Ok(split_observation(t_com, t_cpt, t_ps, tau, n_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::cc_capability;

    fn clock() -> StreamClock {
        StreamClock::new(3, 1.0, 60).unwrap()
    }

    fn rho(v: f64) -> PrivacySpec {
        PrivacySpec::new(v).unwrap()
    }

    #[test]
    fn full_privacy_reference_setup() {
        let video = VideoConfig::reference_4k();
        let plan = optimize_durations(&clock(), 0.2, &rho(1.0), &video, &Rates::reference()).unwrap();
        assert_eq!(plan.n_p, 200);
        assert!((plan.t_com - 0.4347).abs() < 1e-4, "{}", plan.t_com);
        assert!((plan.t_cpt - 1.3573).abs() < 1e-4, "{}", plan.t_cpt);
        assert!((plan.t_cc() - 1.792).abs() < 1e-3);
        assert_eq!(plan.n_obw_samples, 1);
        assert_eq!(plan.status, PlanStatus::Ok);
        plan.validate().unwrap();
        let bits = tile_bits(&video);
        assert_eq!(cc_capability(plan.t_com, plan.t_cpt, &Rates::reference(), &bits, 200), 1.0);
    }

    #[test]
    fn no_privacy_reference_setup() {
        let video = VideoConfig::reference_4k();
        let plan = optimize_durations(&clock(), 0.2, &rho(0.0), &video, &Rates::reference()).unwrap();
        assert_eq!(plan.n_p, 33);
        assert!((plan.t_cc() - 0.2957).abs() < 1e-4);
        assert_eq!(plan.n_obw_samples, 8);
        plan.validate().unwrap();
    }

    #[test]
    fn unlimited_rates() {
        let video = VideoConfig::reference_4k();
        let rates = Rates::new(1e30, 1e30).unwrap();
        let plan = optimize_durations(&clock(), 0.2, &rho(1.0), &video, &rates).unwrap();
        assert!(plan.t_cc() < 1e-15);
        assert_eq!(plan.n_obw_samples, 10);
    }

    #[test]
    fn infeasible_and_unobservable() {
        let video = VideoConfig::reference_4k();
        let tight = StreamClock::new(2, 0.1, 10).unwrap();
        assert!(matches!(
            optimize_durations(&tight, 0.05, &rho(0.0), &video, &Rates::reference()),
            Err(Error::Infeasible { .. })
        ));
        // t_cc = 1.792 s of 2 s, tau = 0.5 s: nothing left to observe
        let plan = optimize_durations(&clock(), 0.5, &rho(1.0), &video, &Rates::reference()).unwrap();
        assert_eq!(plan.status, PlanStatus::NoObservation);
        assert_eq!(plan.n_obw_samples, 0);
        plan.validate().unwrap();
    }

    #[test]
    fn max_resources_rate_examples() {
        let video = VideoConfig::reference_4k();
        let r = max_resources_rate(&video, &Rates::reference());
        assert!((0.55..=0.62).contains(&r), "{r}");
        let bits = tile_bits(&video);
        let unit = Rates::new(bits.s_com * 200.0, bits.s_cpt * 200.0).unwrap();
        assert!((max_resources_rate(&video, &unit) - 0.5).abs() < 1e-12);
        let doubled = max_resources_rate(&video, &Rates::reference().scaled(2.0));
        assert!((doubled - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn rescaling_hits_target() {
        let video = VideoConfig::reference_4k();
        for target in [0.6, 1.0, 1.4, 2.0] {
            let rates = rates_for_resources_rate(&video, &Rates::reference(), target).unwrap();
            assert!((max_resources_rate(&video, &rates) - target).abs() < 1e-12);
        }
        assert!(rates_for_resources_rate(&video, &Rates::reference(), 0.0).is_err());
    }

    #[test]
    fn manual_plan() {
        let p = DurationPlan::manual(0.3, 0.5, 2.0, 0.2, 33).unwrap();
        assert_eq!(p.n_obw_samples, 6);
        p.validate().unwrap();
        assert!(DurationPlan::manual(1.5, 0.6, 2.0, 0.2, 33).is_err());
    }

    #[test]
    fn clock_validation() {
        assert!(StreamClock::new(1, 1.0, 10).is_err());
        assert!(StreamClock::new(11, 1.0, 10).is_err());
        assert!(StreamClock::new(3, 0.0, 10).is_err());
        assert_eq!(clock().t_ps(), 2.0);
    }

    #[test]
    fn brute_force_orders_privacy_levels() {
        let video = VideoConfig::reference_4k();
        let bf = |r| {
            brute_force_plan(&clock(), 0.2, &rho(r), &video, &Rates::reference(), 0.02).unwrap()
        };
        assert!(bf(0.0).t_cc() < bf(1.0).t_cc());
    }

    #[test]
    fn brute_force_agrees_on_reference() {
        let video = VideoConfig::reference_4k();
        for r in [0.0, 0.3, 1.0] {
            let cf = optimize_durations(&clock(), 0.2, &rho(r), &video, &Rates::reference()).unwrap();
            let bf = brute_force_plan(&clock(), 0.2, &rho(r), &video, &Rates::reference(), 0.02)
                .unwrap();
            assert!((cf.observation_budget() - bf.observation_budget()).abs() <= 0.02 + 1e-12);
        }
    }

    #[test]
    fn brute_force_infeasible() {
        let video = VideoConfig::reference_4k();
        let tight = StreamClock::new(2, 0.1, 10).unwrap();
        assert!(matches!(
            brute_force_plan(&tight, 0.05, &rho(0.0), &video, &Rates::reference(), 0.005),
            Err(Error::NoGridPlan { .. })
        ));
    }
}
