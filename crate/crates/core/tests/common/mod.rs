//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uilsim::engine::{ReplicationLog, TransmissionRecord};
use uilsim::involvement::Target;
use uilsim::{Rat, RatTable, RunSetup, ScenarioConfig};

pub fn setup(rat: Rat, cfg: ScenarioConfig, bs_distance_m: f64) -> RunSetup {
    RunSetup::new(cfg, RatTable::builtin().get(rat).clone(), bs_distance_m)
}

/// Default scenario at a reduced scale for quick runs.
pub fn small_cfg() -> ScenarioConfig {
    ScenarioConfig {
        n_stationary: 200,
        n_wearable: 300,
        n_vehicles: 300,
        n_pedestrians: 300,
        sim_duration_s: 120.0,
        rounds: 2,
        ..Default::default()
    }
}

fn overlaps(a: &TransmissionRecord, b: &TransmissionRecord) -> bool {
    a.start_s < b.start_s + b.airtime_s && b.start_s < a.start_s + a.airtime_s
}

/// Received power of `j` at the receiver of `r`, in dBm.
fn rx_power_dbm(log: &ReplicationLog, j: &TransmissionRecord, r: &TransmissionRecord) -> f64 {
    let l = &log.link;
    let d = j.tx_pos.distance(r.rx_pos).max(l.ref_distance_m);
    let mean = -(l.pl0_db + 10.0 * l.exponent * (d / l.ref_distance_m).log10());
    let gain = (mean - log.shadow.loss_db(j.tx_pos, r.rx())).min(0.0);
    j.tx_power_dbm + gain
}

/// SINR of record `i` by scanning every other record of the log.
pub fn brute_force_sinr(log: &ReplicationLog, i: usize) -> f64 {
    let r = &log.records[i];
    let aloha = matches!(log.rat, Rat::Sigfox | Rat::Lorawan);
    let mut denom_mw = 10f64.powf(log.noise_dbm / 10.0);
    for (k, j) in log.records.iter().enumerate() {
        if k == i || j.channel != r.channel || !overlaps(j, r) {
            continue;
        }
        let counts = aloha || matches!(j.target, Target::Vehicle(_)) && j.target != r.target;
        if counts {
            denom_mw += 10f64.powf(rx_power_dbm(log, j, r) / 10.0);
        }
    }
    rx_power_dbm(log, r, r) - 10.0 * denom_mw.log10()
}

/// Largest airtime inside any `window`-long interval, by checking every
/// interval that ends at a transmission end.
pub fn max_window_airtime(tx: &[(f64, f64)], window: f64) -> f64 {
    let mut best: f64 = 0.0;
    for &(s, a) in tx {
        let end = s + a;
        let mut used = 0.0;
        for &(s2, a2) in tx {
            let lo = s2.max(end - window);
            let hi = (s2 + a2).min(end);
            if hi > lo {
                used += hi - lo;
            }
        }
        best = best.max(used);
    }
    best
}

/// Per-transmitter `(start, airtime)` lists of a log.
pub fn per_node_schedule(log: &ReplicationLog) -> Vec<Vec<(f64, f64)>> {
    let n = log.machine_energy_j.len();
    let mut out = vec![Vec::new(); n];
    for r in &log.records {
        out[r.tx_id as usize].push((r.start_s, r.airtime_s));
    }
    out
}

/// Best (rate, then lowest power) pair by enumerating the whole grid.
pub fn grid_search_link(
    profile: &uilsim::RatProfile,
    gain_db: f64,
    noise_dbm: f64,
    margin_db: f64,
) -> (u8, f64, bool) {
    let mut best: Option<(f64, f64, u8)> = None;
    for m in &profile.mcs_table {
        for &p in &profile.tx_power_dbm_set {
            if p + gain_db - noise_dbm >= m.sinr_threshold_db + margin_db {
                let better = match best {
                    None => true,
                    Some((rate, pw, _)) => m.data_rate_bps > rate || (m.data_rate_bps == rate && p < pw),
                };
                if better {
                    best = Some((m.data_rate_bps, p, m.index));
                }
            }
        }
    }
    match best {
        Some((_, p, idx)) => (idx, p, true),
        None => {
            let slow = profile
                .mcs_table
                .iter()
                .min_by(|a, b| a.data_rate_bps.total_cmp(&b.data_rate_bps))
                .unwrap();
            let pmax = profile.tx_power_dbm_set.iter().copied().fold(f64::MIN, f64::max);
            (slow.index, pmax, false)
        }
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Within-cluster sum of squares for the given centroids.
pub fn wcss_of(points: &[[f64; 2]], centroids: &[[f64; 2]]) -> f64 {
    points.iter().map(|&p| centroids.iter().map(|&c| sq_dist(p, c)).fold(f64::INFINITY, f64::min)).sum()
}

/// Plain Lloyd from `k` distinct random points, run to convergence.
fn lloyd_random_start(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut c: Vec<[f64; 2]> = idx[..k].iter().map(|&i| points[i]).collect();
    for _ in 0..1000 {
        let mut sum = vec![[0.0, 0.0]; k];
        let mut cnt = vec![0usize; k];
        for &p in points {
            let (a, _) = c.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &ci)| {
                let d = sq_dist(p, ci);
                if d < b.1 { (i, d) } else { b }
            });
            sum[a][0] += p[0];
            sum[a][1] += p[1];
            cnt[a] += 1;
        }
        let next: Vec<[f64; 2]> = (0..k)
            .map(|i| if cnt[i] == 0 { c[i] } else { [sum[i][0] / cnt[i] as f64, sum[i][1] / cnt[i] as f64] })
            .collect();
        if next == c {
            break;
        }
        c = next;
    }
    wcss_of(points, &c)
}

/// Lowest WCSS over `restarts` random-start Lloyd runs.
pub fn kmeans_restart_oracle(points: &[[f64; 2]], k: usize, restarts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts).map(|_| lloyd_random_start(points, k, &mut rng)).fold(f64::INFINITY, f64::min)
}

/// Three loose blobs of ten points each.
pub fn thirty_point_instance() -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let centers = [[100.0, 120.0], [600.0, 300.0], [350.0, 800.0]];
    let mut pts = Vec::new();
    for c in centers {
        for _ in 0..10 {
            pts.push([c[0] + rng.random_range(-90.0..90.0), c[1] + rng.random_range(-90.0..90.0)]);
        }
    }
    pts
}

/// Turn counts, crossing count and whether every walker stayed in the area.
#[derive(Debug, Default)]
pub struct MobilityStats {
    pub straight: u64,
    pub left: u64,
    pub right: u64,
    pub wraps: u64,
    pub all_inside: bool,
    pub walkers_before: usize,
    pub walkers_after: usize,
}

impl MobilityStats {
    pub fn crossings(&self) -> u64 {
        self.straight + self.left + self.right
    }

    pub fn freq(&self) -> (f64, f64, f64) {
        let n = self.crossings() as f64;
        (self.straight as f64 / n, self.left as f64 / n, self.right as f64 / n)
    }
}

/// Steps every walker of a freshly built world for `duration_s`.
pub fn mobility_stats(cfg: &ScenarioConfig, seed: u64, duration_s: f64) -> MobilityStats {
    use uilsim::mobility::Turn;
    use uilsim::rng::{stream_rng, Stream};
    let mut world = uilsim::scenario::build_world(cfg, &mut stream_rng(seed, Stream::Placement)).unwrap();
    let layout = world.layout;
    let mut st = MobilityStats { all_inside: true, walkers_before: world.walkers.len(), ..Default::default() };
    let dt = cfg.mobility_dt_s;
    let steps = (duration_s / dt).round() as u64;
    for (w, m) in world.walkers.iter_mut().enumerate() {
        let mut rng = stream_rng(seed, Stream::Walker(w as u32));
        for _ in 0..steps {
            let out = m.step(&layout, dt, &mut rng).unwrap();
            match out.turn {
                Some(Turn::Straight) => st.straight += 1,
                Some(Turn::Left) => st.left += 1,
                Some(Turn::Right) => st.right += 1,
                None => {}
            }
            st.wraps += u64::from(out.wrapped);
            let (x, y) = m.planar(&layout);
            if !(0.0..layout.width()).contains(&x) || !(0.0..layout.height()).contains(&y) {
                st.all_inside = false;
            }
        }
    }
    st.walkers_after = world.walkers.len();
    st
}
