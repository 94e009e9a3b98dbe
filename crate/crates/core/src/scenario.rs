//! World construction: street grid, machine and mobile-node placement, base
//! station placement and its distance calibration.

use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::config::{Involvement, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::Heading;
use crate::mobility::MobilityState;
use crate::rat::RatProfile;
use crate::{Layout, Point3};

/// Distance used when neither the config nor a calibration supplies one.
pub const DEFAULT_BS_DISTANCE_M: f64 = 1000.0;

/// Search bracket for the calibrated base-station distance.
pub const CALIBRATION_BRACKET_M: (f64, f64) = (10.0, 100_000.0);

/// Accepted deviation of the calibrated mean SINR from the target.
pub const CALIBRATION_TOLERANCE_DB: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    StationaryMachine,
    WearableMachine,
    Pedestrian,
    Vehicle,
    BaseStation,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::StationaryMachine => "STATIONARY_MACHINE",
            NodeKind::WearableMachine => "WEARABLE_MACHINE",
            NodeKind::Pedestrian => "PEDESTRIAN",
            NodeKind::Vehicle => "VEHICLE",
            NodeKind::BaseStation => "BASE_STATION",
        }
    }

    pub fn is_machine(self) -> bool {
        matches!(self, NodeKind::StationaryMachine | NodeKind::WearableMachine)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    pub position: Point3,
    pub heading: Option<Heading>,
    pub assisting: bool,
    pub carried_by: Option<u32>,
}

/// Contiguous id ranges. Ids are assigned stationary machines first, then
/// wearables, pedestrians, vehicles and finally the base station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdRanges {
    pub stationary: Range<u32>,
    pub wearable: Range<u32>,
    pub pedestrian: Range<u32>,
    pub vehicle: Range<u32>,
    pub bs: u32,
}

impl IdRanges {
    fn new(cfg: &ScenarioConfig) -> Self {
        let s = cfg.n_stationary;
        let w = s + cfg.n_wearable;
        let p = w + cfg.n_pedestrians;
        let v = p + cfg.n_vehicles;
        Self { stationary: 0..s, wearable: s..w, pedestrian: w..p, vehicle: p..v, bs: v }
    }

    pub fn machines(&self) -> Range<u32> {
        self.stationary.start..self.wearable.end
    }

    pub fn n_machines(&self) -> usize {
        self.wearable.end as usize
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub layout: Layout,
    pub nodes: Vec<Node>,
    /// Pedestrians first, then vehicles, in id order.
    pub walkers: Vec<MobilityState>,
    pub ids: IdRanges,
}

impl World {
    pub fn walker_index(&self, id: u32) -> Option<usize> {
        if self.ids.pedestrian.contains(&id) || self.ids.vehicle.contains(&id) {
            Some((id - self.ids.pedestrian.start) as usize)
        } else {
            None
        }
    }

    pub fn walker(&self, id: u32) -> Option<&MobilityState> {
        self.walker_index(id).map(|i| &self.walkers[i])
    }

    pub fn walker_mut(&mut self, id: u32) -> Option<&mut MobilityState> {
        self.walker_index(id).map(move |i| &mut self.walkers[i])
    }

    pub fn bs_position(&self) -> Point3 {
        self.nodes[self.ids.bs as usize].position
    }

    /// Base station due east of the area center.
    pub fn place_bs(&mut self, distance_m: f64, height_m: f64) {
        let (cx, cy) = self.layout.center();
        self.nodes[self.ids.bs as usize].position = Point3::new(cx + distance_m, cy, height_m);
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Deployment snapshot `(node_id, kind, x_m, y_m, z_m, assisting)`.
    pub fn write_snapshot_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "node_id,kind,x_m,y_m,z_m,assisting")?;
        for n in &self.nodes {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                n.id,
                n.kind.name(),
                n.position.x,
                n.position.y,
                n.position.z,
                u8::from(n.assisting)
            )?;
        }
        Ok(())
    }
}

/// Places every node. The base station goes to `cfg.bs_distance_m` (or the
/// default) and can be moved with [`World::place_bs`].
pub fn build_world(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<World> {
    cfg.validate()?;
    let layout = cfg.layout();
    let ids = IdRanges::new(cfg);
    let mut nodes = Vec::with_capacity(ids.bs as usize + 1);

    let [h_lo, h_hi] = cfg.stationary_height_range_m;
    for id in ids.stationary.clone() {
        let (x, y) = sample_sidewalk_point(&layout, rng);
        let z = rng.random_range(h_lo..h_hi);
        nodes.push(Node {
            id,
            kind: NodeKind::StationaryMachine,
            position: Point3::new(x, y, z),
            heading: None,
            assisting: false,
            carried_by: None,
        });
    }

    let walkers_ped: Vec<MobilityState> = ids
        .pedestrian
        .clone()
        .map(|id| place_pedestrian(&layout, id, cfg.pedestrian_speed_mps(), rng))
        .collect();

    for (k, id) in ids.wearable.clone().enumerate() {
        let carrier = &walkers_ped[k];
        let (x, y) = carrier.planar(&layout);
        nodes.push(Node {
            id,
            kind: NodeKind::WearableMachine,
            position: Point3::new(x, y, cfg.wearable_height_m),
            heading: Some(carrier.heading),
            assisting: false,
            carried_by: Some(carrier.node_id),
        });
    }
    for w in &walkers_ped {
        let (x, y) = w.planar(&layout);
        nodes.push(Node {
            id: w.node_id,
            kind: NodeKind::Pedestrian,
            position: Point3::new(x, y, cfg.wearable_height_m),
            heading: Some(w.heading),
            assisting: false,
            carried_by: None,
        });
    }

    let walkers_veh = place_vehicles(&layout, ids.vehicle.clone(), cfg.vehicle_speed_mps(), cfg.mean_inter_vehicle_m, rng)?;
    for w in &walkers_veh {
        let (x, y) = w.planar(&layout);
        nodes.push(Node {
            id: w.node_id,
            kind: NodeKind::Vehicle,
            position: Point3::new(x, y, cfg.car_roof_height_m),
            heading: Some(w.heading),
            assisting: false,
            carried_by: None,
        });
    }

    nodes.push(Node {
        id: ids.bs,
        kind: NodeKind::BaseStation,
        position: Point3::new(0.0, 0.0, cfg.bs_height_m),
        heading: None,
        assisting: false,
        carried_by: None,
    });

    let mut walkers = walkers_ped;
    walkers.extend(walkers_veh);
    let mut world = World { layout, nodes, walkers, ids };
    world.place_bs(cfg.bs_distance_m.unwrap_or(DEFAULT_BS_DISTANCE_M), cfg.bs_height_m);
    Ok(world)
}

/// Uniform point on the sidewalk ring of a uniformly chosen block.
fn sample_sidewalk_point(layout: &Layout, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let i = rng.random_range(0..layout.blocks_x);
    let j = rng.random_range(0..layout.blocks_y);
    let (x0, y0) = layout.block_origin(i, j);
    let b = layout.block_size;
    let s = layout.sidewalk_width;
    loop {
        let u = rng.random::<f64>() * b;
        let v = rng.random::<f64>() * b;
        if u < s || u >= b - s || v < s || v >= b - s {
            return (x0 + u, y0 + v);
        }
    }
}

/// Pedestrian on the middle line of a uniformly chosen sidewalk side,
/// walking along it in either direction.
fn place_pedestrian(layout: &Layout, id: u32, speed: f64, rng: &mut ChaCha8Rng) -> MobilityState {
    let p = layout.period();
    let o = layout.sidewalk_line_offset();
    let i = rng.random_range(0..layout.blocks_x) as f64;
    let j = rng.random_range(0..layout.blocks_y) as f64;
    let side = rng.random_range(0..4u8);
    let along = o + rng.random::<f64>() * (p - 2.0 * o);
    let forward = rng.random::<bool>();
    let other = if rng.random::<bool>() { o } else { -o };
    let (x, y, heading, offset) = match side {
        // west and east sides run north-south
        0 => (i * p + o, j * p + along, if forward { Heading::N } else { Heading::S }, (o, other)),
        1 => ((i + 1.0) * p - o, j * p + along, if forward { Heading::N } else { Heading::S }, (-o, other)),
        // south and north sides run east-west
        2 => (i * p + along, j * p + o, if forward { Heading::E } else { Heading::W }, (other, o)),
        _ => (i * p + along, (j + 1.0) * p - o, if forward { Heading::E } else { Heading::W }, (other, -o)),
    };
    MobilityState {
        node_id: id,
        x: layout.wrap_x(x),
        y: layout.wrap_y(y),
        heading,
        speed_mps: speed,
        offset,
        lane_shift: false,
        parked: false,
    }
}

/// One directed driving lane: street index and heading.
fn lanes(layout: &Layout) -> Vec<(u32, Heading)> {
    let mut out = Vec::new();
    for k in 0..layout.blocks_x {
        out.push((k, Heading::N));
        out.push((k, Heading::S));
    }
    for k in 0..layout.blocks_y {
        out.push((k, Heading::E));
        out.push((k, Heading::W));
    }
    out
}

/// Vehicles pick a lane uniformly; each lane's vehicles form a platoon with
/// exponential gaps behind a uniformly placed leader.
fn place_vehicles(
    layout: &Layout,
    ids: Range<u32>,
    speed: f64,
    mean_gap: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MobilityState>> {
    let all = lanes(layout);
    let mut per_lane = vec![0u32; all.len()];
    for _ in ids.clone() {
        per_lane[rng.random_range(0..all.len())] += 1;
    }
    let gap = Exp::new(1.0 / mean_gap).map_err(|e| Error::Config(format!("mean_inter_vehicle_m: {e}")))?;
    let p = layout.period();
    let mut out = Vec::with_capacity(ids.len());
    let mut next_id = ids.start;
    for (lane, &count) in all.iter().zip(&per_lane) {
        let (street, heading) = *lane;
        let length = if heading.is_vertical() { layout.height() } else { layout.width() };
        let mut along = rng.random::<f64>() * length;
        for k in 0..count {
            if k > 0 {
                // followers trail the leader
                let g = gap.sample(rng);
                along = if heading.is_positive() { along - g } else { along + g };
            }
            let a = crate::geometry::wrap(along, length);
            let c = street as f64 * p;
            let (x, y) = if heading.is_vertical() { (c, a) } else { (a, c) };
            out.push(MobilityState {
                node_id: next_id,
                x,
                y,
                heading,
                speed_mps: speed,
                offset: (0.0, 0.0),
                lane_shift: true,
                parked: false,
            });
            next_id += 1;
        }
    }
    Ok(out)
}

/// Initial longitudinal gaps between consecutive vehicles on each lane,
/// excluding the wrap-around gap behind the last vehicle of each lane.
pub fn initial_vehicle_gaps(world: &World) -> Vec<f64> {
    let mut by_lane: std::collections::BTreeMap<(u32, bool, bool), Vec<f64>> = Default::default();
    for id in world.ids.vehicle.clone() {
        let w = world.walker(id).expect("vehicle walker");
        let (street, along) = w.lane_position(&world.layout);
        by_lane.entry((street, w.heading.is_vertical(), w.heading.is_positive())).or_default().push(along);
    }
    let mut gaps = Vec::new();
    for ((_, vertical, _), mut pos) in by_lane {
        if pos.len() < 2 {
            continue;
        }
        let length = if vertical { world.layout.height() } else { world.layout.width() };
        pos.sort_by(f64::total_cmp);
        let mut g: Vec<f64> = pos.windows(2).map(|w| w[1] - w[0]).collect();
        g.push(pos[0] + length - pos[pos.len() - 1]);
        // the largest circular gap is the free road ahead of the platoon
        let (imax, _) = g.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        g.remove(imax);
        gaps.extend(g);
    }
    gaps
}

/// Mean baseline SINR as a function of BS distance, evaluated over a pilot
/// campaign. Supplied by the engine so calibration stays independent of it.
pub trait PilotEvaluator {
    fn mean_sinr_db(&self, cfg: &ScenarioConfig, profile: &RatProfile, bs_distance_m: f64) -> Result<f64>;
}

/// One probe of the calibration search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationStep {
    pub distance_m: f64,
    pub mean_sinr_db: f64,
}

/// Bisection in log-distance for the BS distance whose baseline mean SINR is
/// within tolerance of `cfg.target_baseline_sinr_db`. The first probe is at
/// 1 km. Mean SINR is taken to decrease with distance.
pub fn calibrate_bs_distance<E: PilotEvaluator + ?Sized>(
    cfg: &ScenarioConfig,
    profile: &RatProfile,
    eval: &E,
) -> Result<(f64, Vec<CalibrationStep>)> {
    let mut pilot = cfg.clone();
    pilot.involvement = Involvement::Baseline;
    pilot.n_assisting_vehicles = 0;
    let target = cfg.target_baseline_sinr_db;
    let mut steps = Vec::new();
    let probe = |d: f64, steps: &mut Vec<CalibrationStep>| -> Result<f64> {
        let s = eval.mean_sinr_db(&pilot, profile, d)?;
        log::debug!("calibration {}: d = {d:.3} m, mean SINR = {s:.4} dB", profile.name);
        steps.push(CalibrationStep { distance_m: d, mean_sinr_db: s });
        Ok(s)
    };
    let within = |s: f64| (s - target).abs() <= CALIBRATION_TOLERANCE_DB;

    let first = DEFAULT_BS_DISTANCE_M;
    let s_first = probe(first, &mut steps)?;
    if within(s_first) {
        return Ok((first, steps));
    }
    let (bracket_lo, bracket_hi) = CALIBRATION_BRACKET_M;
    let (mut lo, mut hi, mut s_lo, mut s_hi);
    if s_first > target {
        lo = first;
        s_lo = s_first;
        hi = bracket_hi;
        s_hi = probe(hi, &mut steps)?;
        if within(s_hi) {
            return Ok((hi, steps));
        }
        if s_hi > target {
            return Err(calibration_error(target, lo, hi, s_lo, s_hi));
        }
    } else {
        hi = first;
        s_hi = s_first;
        lo = bracket_lo;
        s_lo = probe(lo, &mut steps)?;
        if within(s_lo) {
            return Ok((lo, steps));
        }
        if s_lo < target {
            return Err(calibration_error(target, lo, hi, s_lo, s_hi));
        }
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let s = probe(mid, &mut steps)?;
        if within(s) {
            return Ok((mid, steps));
        }
        if s > target {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
        if hi / lo < 1.0 + 1e-9 {
            break;
        }
    }
    Err(calibration_error(target, lo, hi, s_lo, s_hi))
}

fn calibration_error(target: f64, lo: f64, hi: f64, s_lo: f64, s_hi: f64) -> Error {
    Error::Calibration { target_db: target, lo_m: lo, hi_m: hi, sinr_near_db: s_lo, sinr_far_db: s_hi }
}
