//! Replication engine.
//!
//! A replication runs in two passes. The first walks message attempts in
//! time order: it associates each machine with a receiver, adapts the link,
//! applies the duty-cycle gate and emits one record per frame. The second
//! resolves the SINR of every record against all time-overlapping co-channel
//! records, so the log alone is enough to recompute every value.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{path_gain, sinr_db, LinkParams, Rx, ShadowField};
use crate::config::{Involvement, Rat, ScenarioConfig};
use crate::error::{Error, Result};
use crate::involvement::{choose_type1_assistants, choose_type2_parking, Target, VehicleIndex};
use crate::mobility::Track;
use crate::rat::{duty_cycle_gate, select_link_params, Gate, RatProfile, TxHistory};
use crate::rng::{stream_rng, Stream};
use crate::scenario::{build_world, PilotEvaluator, World};
use crate::traffic::schedule_all;
use crate::Point3;

/// Side of the vehicle index cells.
const INDEX_CELL_M: f64 = 50.0;
/// The vehicle index is rebuilt every this many ticks.
const INDEX_EPOCH_TICKS: u64 = 10;

/// Everything fixed across the replications of one campaign.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub cfg: ScenarioConfig,
    pub profile: RatProfile,
    pub bs_distance_m: f64,
}

impl RunSetup {
    pub fn new(cfg: ScenarioConfig, profile: RatProfile, bs_distance_m: f64) -> Self {
        let mut cfg = cfg;
        cfg.rat = profile.name;
        Self { cfg, profile, bs_distance_m }
    }

    pub fn with_involvement(&self, involvement: Involvement, n_assisting: u32) -> Self {
        let mut s = self.clone();
        s.cfg.involvement = involvement;
        s.cfg.n_assisting_vehicles = n_assisting;
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRecord {
    /// Index into [`ReplicationLog::messages`].
    pub msg: u32,
    pub fragment: u16,
    pub tx_id: u32,
    pub target: Target,
    pub start_s: f64,
    pub airtime_s: f64,
    pub channel: u32,
    pub mcs: u8,
    pub tx_power_dbm: f64,
    pub tx_pos: Point3,
    pub rx_pos: Point3,
    pub sinr_db: f64,
    pub success: bool,
    pub energy_j: f64,
}

impl TransmissionRecord {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.airtime_s
    }

    pub fn rx(&self) -> Rx {
        match self.target {
            Target::Bs => Rx::Bs(self.rx_pos),
            Target::Vehicle(_) => Rx::Node(self.rx_pos),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageOutcome {
    pub machine_id: u32,
    pub created_at: f64,
    pub payload_b: u32,
    /// First record of this message; meaningful when `n_records > 0`.
    pub first_record: u32,
    pub n_records: u16,
    pub delivered: bool,
    /// Never transmitted: the duty-cycle gate pushed it past the end of the run.
    pub dropped: bool,
}

#[derive(Debug, Clone)]
pub struct ReplicationLog {
    pub seed: u64,
    pub cfg_hash: String,
    pub rat: Rat,
    pub involvement: Involvement,
    pub n_assisting: u32,
    pub profile: RatProfile,
    pub link: LinkParams,
    pub noise_dbm: f64,
    pub bs_position: Point3,
    pub shadow: ShadowField,
    pub records: Vec<TransmissionRecord>,
    pub messages: Vec<MessageOutcome>,
    /// Indexed by machine id.
    pub machine_energy_j: Vec<f64>,
    pub assistants: Vec<u32>,
    pub bs_node_id: u32,
}

impl ReplicationLog {
    pub fn total_energy_j(&self) -> f64 {
        self.records.iter().map(|r| r.energy_j).sum()
    }

    /// Whether `j` adds interference at the receiver of `r`.
    pub fn interferes(&self, j: &TransmissionRecord, r: &TransmissionRecord) -> bool {
        interferes(self.rat, j, r)
    }

    /// CSV `(t_s, tx_id, target_kind, target_id, channel, mcs, tx_dbm,
    /// sinr_db, success, energy_j)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_s,tx_id,target_kind,target_id,channel,mcs,tx_dbm,sinr_db,success,energy_j")?;
        for r in &self.records {
            let target_id = match r.target {
                Target::Bs => self.bs_id(),
                Target::Vehicle(v) => v,
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.start_s,
                r.tx_id,
                r.target.kind_name(),
                target_id,
                r.channel,
                r.mcs,
                r.tx_power_dbm,
                r.sinr_db,
                u8::from(r.success),
                r.energy_j
            )?;
        }
        Ok(())
    }

    fn bs_id(&self) -> u32 {
        self.bs_node_id
    }
}

/// Interference rule. ALOHA technologies collide with every co-channel
/// overlap; scheduled ones are orthogonal inside the cell and only see
/// transmissions towards a different relay.
pub fn interferes(rat: Rat, j: &TransmissionRecord, r: &TransmissionRecord) -> bool {
    if j.channel != r.channel || j.start_s >= r.end_s() || r.start_s >= j.end_s() {
        return false;
    }
    if rat.is_ism_aloha() {
        true
    } else {
        j.target.is_vehicle() && j.target != r.target
    }
}

/// Mobile positions of one replication.
struct Movers {
    /// Indexed by walker index; only walkers that matter are tracked.
    tracks: Vec<Option<Track>>,
    /// Per machine: carrier walker index for wearables.
    carrier: Vec<Option<usize>>,
    wearable_z: f64,
    roof_z: f64,
}

impl Movers {
    fn machine_pos(&mut self, world: &World, m: u32, t: f64) -> Result<Point3> {
        match self.carrier[m as usize] {
            None => Ok(world.nodes[m as usize].position),
            Some(w) => {
                let (x, y) = self.tracks[w].as_mut().expect("carrier track").planar_at(t, &world.layout)?;
                Ok(Point3::new(x, y, self.wearable_z))
            }
        }
    }

    fn vehicle_pos(&mut self, world: &World, v: u32, t: f64) -> Result<Point3> {
        let w = world.walker_index(v).expect("vehicle walker");
        match self.tracks[w].as_mut() {
            Some(tr) => {
                let (x, y) = tr.planar_at(t, &world.layout)?;
                Ok(Point3::new(x, y, self.roof_z))
            }
            None => Ok(world.nodes[v as usize].position),
        }
    }

    fn vehicle_pos_at_tick(&mut self, world: &World, v: u32, k: u64) -> Result<Point3> {
        let w = world.walker_index(v).expect("vehicle walker");
        match self.tracks[w].as_mut() {
            Some(tr) => {
                let (x, y) = tr.planar_at_tick(k, &world.layout)?;
                Ok(Point3::new(x, y, self.roof_z))
            }
            None => Ok(world.nodes[v as usize].position),
        }
    }
}

/// Per-machine mean baseline SINR (dB), `NaN` where a machine has no record.
pub type PilotTags = Vec<f64>;

pub fn pilot_tags(log: &ReplicationLog) -> PilotTags {
    let n = log.machine_energy_j.len();
    let mut sum = vec![0.0; n];
    let mut cnt = vec![0u32; n];
    for r in &log.records {
        sum[r.tx_id as usize] += r.sinr_db;
        cnt[r.tx_id as usize] += 1;
    }
    sum.iter().zip(&cnt).map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect()
}

/// One replication. Type-2 runs first simulate the same-seed baseline to
/// find the machines that need help.
pub fn run_replication(setup: &RunSetup, seed: u64) -> Result<ReplicationLog> {
    let needs_pilot = setup.cfg.involvement == Involvement::Type2 && setup.cfg.effective_assisting() > 0;
    if needs_pilot {
        let base = run_replication_with_pilot(&setup.with_involvement(Involvement::Baseline, 0), seed, None)?;
        let tags = pilot_tags(&base);
        drop(base);
        run_replication_with_pilot(setup, seed, Some(&tags))
    } else {
        run_replication_with_pilot(setup, seed, None)
    }
}

/// Builds the world of a replication, including assistant selection and
/// parking, without simulating traffic.
pub fn prepare_world(setup: &RunSetup, seed: u64, pilot: Option<&PilotTags>) -> Result<(World, Vec<u32>)> {
    let cfg = &setup.cfg;
    let mut world = build_world(cfg, &mut stream_rng(seed, Stream::Placement))?;
    world.place_bs(setup.bs_distance_m, cfg.bs_height_m);
    let n_assist = cfg.effective_assisting();
    let vehicles: Vec<u32> = world.ids.vehicle.clone().collect();
    let assistants = match cfg.involvement {
        Involvement::Baseline => Vec::new(),
        Involvement::Type1 => {
            let ids = choose_type1_assistants(&vehicles, n_assist, &mut stream_rng(seed, Stream::Assistants))?;
            for &v in &ids {
                world.nodes[v as usize].assisting = true;
            }
            ids
        }
        Involvement::Type2 => {
            if n_assist == 0 {
                Vec::new()
            } else {
                let tags = pilot.ok_or_else(|| Error::Argument("type-2 run needs baseline pilot tags".into()))?;
                if tags.len() != world.ids.n_machines() {
                    return Err(Error::Argument(format!(
                        "pilot tags cover {} machines, world has {}",
                        tags.len(),
                        world.ids.n_machines()
                    )));
                }
                let machines: Vec<((f64, f64), f64)> = world
                    .ids
                    .machines()
                    .map(|m| {
                        let p = world.nodes[m as usize].position;
                        ((p.x, p.y), tags[m as usize])
                    })
                    .collect();
                let parked = choose_type2_parking(
                    &mut world,
                    &machines,
                    n_assist,
                    cfg.suffering_sinr_threshold_db,
                    &mut stream_rng(seed, Stream::Assistants),
                    &mut stream_rng(seed, Stream::Clustering),
                )?;
                parked.into_iter().map(|(v, _)| v).collect()
            }
        }
    };
    Ok((world, assistants))
}

/// One replication with externally supplied pilot tags (Type 2 only).
pub fn run_replication_with_pilot(setup: &RunSetup, seed: u64, pilot: Option<&PilotTags>) -> Result<ReplicationLog> {
    let cfg = &setup.cfg;
    let profile = &setup.profile;
    if cfg.rat != profile.name {
        return Err(Error::Argument(format!("config RAT {} but profile {}", cfg.rat, profile.name)));
    }
    let mut cfg_seeded = cfg.clone();
    cfg_seeded.seed = seed;
    let cfg_hash = cfg_seeded.hash();

    let (world, assistants) = prepare_world(setup, seed, pilot)?;
    let layout = world.layout;
    let link = LinkParams::resolve(&cfg.channel, profile.carrier_hz);
    let noise_dbm = profile.noise_dbm(cfg.channel.thermal_noise_dbm_per_hz);
    let shadow = ShadowField::new(
        &mut stream_rng(seed, Stream::Shadowing),
        cfg.channel.shadowing_sigma_db,
        cfg.channel.shadowing_corr_m,
        layout.width(),
        layout.height(),
    );
    let bs_pos = world.bs_position();
    let n_machines = world.ids.n_machines();

    // mobile nodes that matter: wearable carriers and driving assistants
    let dt = cfg.mobility_dt_s;
    let mut movers = Movers {
        tracks: vec![None; world.walkers.len()],
        carrier: vec![None; n_machines],
        wearable_z: cfg.wearable_height_m,
        roof_z: cfg.car_roof_height_m,
    };
    for m in world.ids.wearable.clone() {
        let carrier = world.nodes[m as usize].carried_by.expect("wearable carrier");
        let w = world.walker_index(carrier).expect("carrier walker");
        movers.carrier[m as usize] = Some(w);
        movers.tracks[w] = Some(Track::new(world.walkers[w].clone(), stream_rng(seed, Stream::Walker(w as u32)), dt, &layout));
    }
    let driving: Vec<u32> = assistants.iter().copied().filter(|&v| !world.walker(v).expect("vehicle").parked).collect();
    for &v in &driving {
        let w = world.walker_index(v).expect("vehicle walker");
        movers.tracks[w] = Some(Track::new(world.walkers[w].clone(), stream_rng(seed, Stream::Walker(w as u32)), dt, &layout));
    }
    let parked: Vec<(u32, Point3)> = assistants
        .iter()
        .copied()
        .filter(|&v| world.walker(v).expect("vehicle").parked)
        .map(|v| (v, world.nodes[v as usize].position))
        .collect();
    let slack = cfg.vehicle_speed_mps() * (INDEX_EPOCH_TICKS + 1) as f64 * dt + 2.0 * layout.lane_offset() + 1.0;
    let mut index = VehicleIndex::new(layout.width(), layout.height(), INDEX_CELL_M);
    let mut index_epoch = u64::MAX;
    let rebuild_parked_only = driving.is_empty();
    if rebuild_parked_only {
        for &(v, p) in &parked {
            index.insert_bounded(v, p, shadow.node_field_min_near(p, 0.0));
        }
    }

    // traffic
    let schedules = schedule_all(cfg, &world, &mut stream_rng(seed, Stream::Traffic));
    let mut messages: Vec<MessageOutcome> = Vec::with_capacity(schedules.iter().map(Vec::len).sum());
    let mut first_msg = vec![0u32; n_machines + 1];
    for (m, sched) in schedules.iter().enumerate() {
        first_msg[m] = messages.len() as u32;
        for e in sched {
            messages.push(MessageOutcome {
                machine_id: e.machine_id,
                created_at: e.created_at,
                payload_b: e.payload_b,
                first_record: 0,
                n_records: 0,
                delivered: false,
                dropped: false,
            });
        }
    }
    first_msg[n_machines] = messages.len() as u32;
    drop(schedules);

    let mut hop_rng = stream_rng(seed, Stream::Hopping);
    let duty_limited = profile.name.is_ism_aloha() && profile.duty_cycle_limit < 1.0;
    let mut histories: Vec<TxHistory> = if duty_limited { vec![TxHistory::new(); n_machines] } else { Vec::new() };
    let mut next_msg: Vec<u32> = first_msg[..n_machines].to_vec();
    let mut heap: BinaryHeap<Reverse<(OrdF64, u32)>> = BinaryHeap::new();
    for m in 0..n_machines {
        if first_msg[m] < first_msg[m + 1] {
            heap.push(Reverse((OrdF64(messages[first_msg[m] as usize].created_at), m as u32)));
        }
    }
    let mcs_pos: BTreeMap<u8, usize> = profile.mcs_table.iter().enumerate().map(|(i, m)| (m.index, i)).collect();
    let beacon_eirp = profile.max_power_dbm();
    let duration = cfg.sim_duration_s;
    let mut records: Vec<TransmissionRecord> = Vec::with_capacity(messages.len());
    let mut machine_energy = vec![0.0; n_machines];

    while let Some(Reverse((OrdF64(t), m))) = heap.pop() {
        let mi = next_msg[m as usize] as usize;
        if t >= duration {
            messages[mi].dropped = true;
            advance(m, t, &mut next_msg, &first_msg, &messages, &mut heap);
            continue;
        }

        let tx_pos = movers.machine_pos(&world, m, t)?;
        // association
        let k = (t / dt).floor() as u64;
        if !rebuild_parked_only && k / INDEX_EPOCH_TICKS != index_epoch {
            index_epoch = k / INDEX_EPOCH_TICKS;
            index.clear();
            for &(v, p) in &parked {
                index.insert_bounded(v, p, shadow.node_field_min_near(p, 0.0));
            }
            let tick = index_epoch * INDEX_EPOCH_TICKS;
            for &v in &driving {
                let p = movers.vehicle_pos_at_tick(&world, v, tick)?;
                insert_driving(&mut index, &shadow, &layout, v, p, slack);
            }
        }
        let mut pos_err: Option<Error> = None;
        let decision = index.associate(m, tx_pos, bs_pos, &link, &shadow, beacon_eirp, t, slack, |v, p| {
            if world.walker(v).map(|w| w.parked).unwrap_or(true) {
                return p;
            }
            match movers.vehicle_pos(&world, v, t) {
                Ok(q) => q,
                Err(e) => {
                    pos_err.get_or_insert(e);
                    p
                }
            }
        });
        if let Some(e) = pos_err {
            return Err(e);
        }

        let choice = select_link_params(profile, decision.path_gain_db, noise_dbm, cfg.link_margin_db)?;
        let mcs = &profile.mcs_table[mcs_pos[&choice.mcs_index]];
        let payload = messages[mi].payload_b;
        let frags = profile.fragments(payload);
        let mut airtimes = Vec::with_capacity(frags.len());
        for &f in &frags {
            airtimes.push(profile.airtime(mcs, f)?);
        }
        let total: f64 = airtimes.iter().sum();

        let gate = if duty_limited {
            let h = &mut histories[m as usize];
            h.prune(t);
            duty_cycle_gate(h, profile, t, total)
        } else {
            Gate::Allow
        };
        match gate {
            Gate::DeferUntil(t2) => {
                if t2 < duration {
                    heap.push(Reverse((OrdF64(t2), m)));
                } else {
                    messages[mi].dropped = true;
                    advance(m, t, &mut next_msg, &first_msg, &messages, &mut heap);
                }
                continue;
            }
            Gate::Allow => {}
        }

        messages[mi].first_record = records.len() as u32;
        messages[mi].n_records = frags.len() as u16;
        let mut start = t;
        for (fi, &air) in airtimes.iter().enumerate() {
            let channel = if profile.n_channels > 1 { hop_rng.random_range(0..profile.n_channels) } else { 0 };
            let (fpos, rpos) = if fi == 0 {
                (tx_pos, decision.rx_pos)
            } else {
                let fp = movers.machine_pos(&world, m, start)?;
                let rp = match decision.target {
                    Target::Bs => bs_pos,
                    Target::Vehicle(v) => movers.vehicle_pos(&world, v, start)?,
                };
                (fp, rp)
            };
            let energy = profile.consumed_power_w(choice.tx_power_dbm) * air;
            machine_energy[m as usize] += energy;
            if duty_limited {
                histories[m as usize].push(start, air);
            }
            records.push(TransmissionRecord {
                msg: mi as u32,
                fragment: fi as u16,
                tx_id: m,
                target: decision.target,
                start_s: start,
                airtime_s: air,
                channel,
                mcs: choice.mcs_index,
                tx_power_dbm: choice.tx_power_dbm,
                tx_pos: fpos,
                rx_pos: rpos,
                sinr_db: f64::NAN,
                success: false,
                energy_j: energy,
            });
            start += air;
        }
        advance(m, start, &mut next_msg, &first_msg, &messages, &mut heap);
    }

    resolve_sinr(profile, &link, &shadow, noise_dbm, &mut records);
    for msg in messages.iter_mut() {
        if msg.n_records > 0 {
            let a = msg.first_record as usize;
            msg.delivered = records[a..a + msg.n_records as usize].iter().all(|r| r.success);
        }
    }

    Ok(ReplicationLog {
        seed,
        cfg_hash,
        rat: profile.name,
        involvement: cfg.involvement,
        n_assisting: cfg.effective_assisting(),
        profile: profile.clone(),
        link,
        noise_dbm,
        bs_position: bs_pos,
        shadow,
        records,
        messages,
        machine_energy_j: machine_energy,
        assistants,
        bs_node_id: world.ids.bs,
    })
}

/// Indexes a driving vehicle, plus wrapped copies when it may cross an edge
/// of the torus before the next rebuild.
fn insert_driving(index: &mut VehicleIndex, shadow: &ShadowField, layout: &crate::Layout, v: u32, p: Point3, slack: f64) {
    let rx_min = shadow.node_field_min_near(p, slack);
    let (w, h) = (layout.width(), layout.height());
    let shifts = |c: f64, size: f64| -> Vec<f64> {
        let mut out = vec![0.0];
        if c < slack {
            out.push(size);
        }
        if c > size - slack {
            out.push(-size);
        }
        out
    };
    for dx in shifts(p.x, w) {
        for dy in shifts(p.y, h) {
            index.insert_bounded(v, Point3::new(p.x + dx, p.y + dy, p.z), rx_min);
        }
    }
}

type AttemptHeap = BinaryHeap<Reverse<(OrdF64, u32)>>;

/// Moves machine `m` to its next message, not earlier than `not_before`.
fn advance(m: u32, not_before: f64, next_msg: &mut [u32], first_msg: &[u32], messages: &[MessageOutcome], heap: &mut AttemptHeap) {
    next_msg[m as usize] += 1;
    let nm = next_msg[m as usize];
    if nm < first_msg[m as usize + 1] {
        let at = messages[nm as usize].created_at.max(not_before);
        heap.push(Reverse((OrdF64(at), m)));
    }
}

/// Total order on finite times.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Fills `sinr_db` and `success` of every record.
pub fn resolve_sinr(profile: &RatProfile, link: &LinkParams, shadow: &ShadowField, noise_dbm: f64, records: &mut [TransmissionRecord]) {
    let rat = profile.name;
    // candidate interferers per (channel, mcs), sorted by start
    let mut groups: BTreeMap<(u32, u8), (Vec<usize>, f64)> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if rat.is_ism_aloha() || r.target.is_vehicle() {
            let g = groups.entry((r.channel, r.mcs)).or_insert_with(|| (Vec::new(), 0.0));
            g.0.push(i);
            g.1 = g.1.max(r.airtime_s);
        }
    }
    for g in groups.values_mut() {
        g.0.sort_by(|&a, &b| records[a].start_s.total_cmp(&records[b].start_s).then(a.cmp(&b)));
    }
    let thresholds: BTreeMap<u8, f64> = profile.mcs_table.iter().map(|m| (m.index, m.sinr_threshold_db)).collect();
    let mut interferers = Vec::new();
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let rx = r.rx();
        interferers.clear();
        for (_, (idx, max_air)) in groups.range((r.channel, 0)..=(r.channel, u8::MAX)) {
            let lo = r.start_s - max_air;
            let from = idx.partition_point(|&j| records[j].start_s <= lo);
            for &j in &idx[from..] {
                let rj = &records[j];
                if rj.start_s >= r.end_s() {
                    break;
                }
                if j != i && interferes(rat, rj, r) {
                    interferers.push(rj.tx_power_dbm + path_gain(link, rj.tx_pos, rx, shadow));
                }
            }
        }
        let signal = r.tx_power_dbm + path_gain(link, r.tx_pos, rx, shadow);
        let s = sinr_db(signal, interferers.iter().copied(), noise_dbm);
        out.push((s, s >= thresholds[&r.mcs]));
    }
    for (r, (s, ok)) in records.iter_mut().zip(out) {
        r.sinr_db = s;
        r.success = ok;
    }
}

/// Runs `rounds` replications with seeds `base_seed + i` and maps each log
/// through `f` as soon as it is produced. Results keep replication order.
/// With `pilots`, replication `i` uses `pilots[i]` instead of simulating its
/// own baseline.
pub fn run_campaign_map<T, F>(setup: &RunSetup, base_seed: u64, rounds: u32, pilots: Option<&[PilotTags]>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, ReplicationLog) -> Result<T> + Sync,
{
    if let Some(p) = pilots {
        if p.len() != rounds as usize {
            return Err(Error::Argument(format!("{} pilot tag sets for {rounds} rounds", p.len())));
        }
    }
    (0..rounds as usize)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let log = match pilots {
                Some(p) if setup.cfg.involvement == Involvement::Type2 => run_replication_with_pilot(setup, seed, Some(&p[i])),
                _ => run_replication(setup, seed),
            };
            log.and_then(|l| f(i, l)).map_err(|e| Error::Replication { index: i, source: Box::new(e) })
        })
        .collect()
}

pub fn run_campaign(setup: &RunSetup, base_seed: u64, rounds: u32) -> Result<Vec<ReplicationLog>> {
    run_campaign_map(setup, base_seed, rounds, None, |_, l| Ok(l))
}

/// Pooled mean record SINR of a baseline campaign, used by calibration.
#[derive(Debug, Clone, Copy)]
pub struct EnginePilot {
    pub rounds: u32,
}

impl PilotEvaluator for EnginePilot {
    fn mean_sinr_db(&self, cfg: &ScenarioConfig, profile: &RatProfile, bs_distance_m: f64) -> Result<f64> {
        let setup = RunSetup::new(cfg.clone(), profile.clone(), bs_distance_m);
        let sums = run_campaign_map(&setup, cfg.seed, self.rounds, None, |_, l| {
            Ok((l.records.iter().map(|r| r.sinr_db).sum::<f64>(), l.records.len()))
        })?;
        let (s, n) = sums.iter().fold((0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1));
        if n == 0 {
            return Err(Error::Metric("no transmissions in calibration pilot".into()));
        }
        Ok(s / n as f64)
    }
}
