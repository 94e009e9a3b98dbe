//! Calibration plus involvement/vehicle-count sweeps for one RAT.

use crate::config::{Involvement, ScenarioConfig};
use crate::engine::{pilot_tags, run_campaign_map, EnginePilot, PilotTags, ReplicationLog, RunSetup};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, MetricsReport, RoundStats};
use crate::rat::RatProfile;
use crate::scenario::{calibrate_bs_distance, CalibrationStep};

/// Default sweep over the number of assisting vehicles.
pub const DEFAULT_VEHICLE_SWEEP: [u32; 7] = [0, 5, 10, 20, 50, 100, 200];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub involvements: Vec<Involvement>,
    pub vehicles: Vec<u32>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            involvements: vec![Involvement::Baseline, Involvement::Type1, Involvement::Type2],
            vehicles: DEFAULT_VEHICLE_SWEEP.to_vec(),
        }
    }
}

/// BS distance for `profile`: the configured one if set, else calibrated.
pub fn bs_distance(cfg: &ScenarioConfig, profile: &RatProfile) -> Result<(f64, Vec<CalibrationStep>)> {
    if let Some(d) = cfg.bs_distance_m {
        return Ok((d, Vec::new()));
    }
    let mut c = cfg.clone();
    c.rat = profile.name;
    match calibrate_bs_distance(&c, profile, &EnginePilot { rounds: c.calibration_rounds }) {
        Err(Error::Calibration { target_db, lo_m, hi_m, sinr_near_db, sinr_far_db }) if cfg.calibration_best_effort => {
            let d = if (sinr_near_db - target_db).abs() <= (sinr_far_db - target_db).abs() { lo_m } else { hi_m };
            log::warn!(
                "{}: {target_db} dB unreachable ({sinr_near_db:.3} dB at {lo_m} m, {sinr_far_db:.3} dB at {hi_m} m); using {d} m",
                profile.name
            );
            Ok((d, Vec::new()))
        }
        other => other,
    }
}

/// Per-round statistics of every sweep point, kept for inspection.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub involvement: Involvement,
    pub n_assisting: u32,
    pub rounds: Vec<RoundStats>,
    pub report: MetricsReport,
}

/// Runs the baseline campaign and then every `(involvement, n)` of `plan`.
/// Type-2 points reuse the baseline pilot of the same seed. The baseline row
/// comes first. `on_log` sees every replication log before it is dropped.
pub fn run_sweep<F>(setup: &RunSetup, plan: &SweepPlan, on_log: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(&ReplicationLog) -> Result<()> + Sync,
{
    let cfg = &setup.cfg;
    let rat = setup.profile.name;
    let base_setup = setup.with_involvement(Involvement::Baseline, 0);
    let base: Vec<(RoundStats, PilotTags)> = run_campaign_map(&base_setup, cfg.seed, cfg.rounds, None, |_, log| {
        on_log(&log)?;
        Ok((RoundStats::from_log(&log), pilot_tags(&log)))
    })?;
    let (base_stats, tags): (Vec<RoundStats>, Vec<PilotTags>) = base.into_iter().unzip();
    let mut out = vec![SweepPoint {
        involvement: Involvement::Baseline,
        n_assisting: 0,
        report: aggregate(rat, Involvement::Baseline, 0, &base_stats, Some(&base_stats))?,
        rounds: base_stats.clone(),
    }];
    for &inv in &plan.involvements {
        if inv == Involvement::Baseline {
            continue;
        }
        for &n in &plan.vehicles {
            let s = setup.with_involvement(inv, n);
            let stats = run_campaign_map(&s, cfg.seed, cfg.rounds, Some(&tags), |_, log| {
                on_log(&log)?;
                Ok(RoundStats::from_log(&log))
            })?;
            let report = aggregate(rat, inv, s.cfg.effective_assisting(), &stats, Some(&base_stats))?;
            log::info!(
                "{rat} {inv} n={n}: SINR {:.3} dB, EE gain {:?}",
                report.mean_sinr_db,
                report.ee_gain_vs_baseline
            );
            out.push(SweepPoint { involvement: inv, n_assisting: n, rounds: stats, report });
        }
    }
    Ok(out)
}
