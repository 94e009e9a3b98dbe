//! Connectivity target selection and the two user-involvement strategies.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{path_gain, LinkParams, Rx, ShadowField};
use crate::error::{Error, Result};
use crate::mobility::park_vehicle;
use crate::num::Scalar;
use crate::scenario::World;
use crate::Point3;

/// Receiver of an uplink transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Bs,
    Vehicle(u32),
}

impl Target {
    pub fn kind_name(self) -> &'static str {
        match self {
            Target::Bs => "BS",
            Target::Vehicle(_) => "VEHICLE",
        }
    }

    pub fn is_vehicle(self) -> bool {
        matches!(self, Target::Vehicle(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationDecision {
    pub machine_id: u32,
    pub target: Target,
    /// Position of the chosen receiver at decision time.
    pub rx_pos: Point3,
    /// Path gain to the chosen receiver.
    pub path_gain_db: f64,
    pub beacon_rx_power_dbm: f64,
    pub decided_at: f64,
}

/// True if `(gain, target)` beats the incumbent: higher gain wins, equal gain
/// keeps the BS, then the lower vehicle id.
fn better(gain: f64, target: Target, best_gain: f64, best: Target) -> bool {
    if gain != best_gain {
        return gain > best_gain;
    }
    match (target, best) {
        (Target::Vehicle(a), Target::Vehicle(b)) => a < b,
        _ => false,
    }
}

/// Strongest beacon among the BS and the given assisting vehicles. All
/// beacons share the same EIRP, so the comparison is on path gain.
#[allow(clippy::too_many_arguments)]
pub fn associate<I: IntoIterator<Item = (u32, Point3)>>(
    machine_id: u32,
    machine_pos: Point3,
    bs_pos: Point3,
    vehicles: I,
    link: &LinkParams,
    shadow: &ShadowField,
    beacon_eirp_dbm: f64,
    t: f64,
) -> AssociationDecision {
    let mut best = Target::Bs;
    let mut best_gain = path_gain(link, machine_pos, Rx::Bs(bs_pos), shadow);
    let mut best_pos = bs_pos;
    for (id, pos) in vehicles {
        let g = path_gain(link, machine_pos, Rx::Node(pos), shadow);
        if better(g, Target::Vehicle(id), best_gain, best) {
            best = Target::Vehicle(id);
            best_gain = g;
            best_pos = pos;
        }
    }
    AssociationDecision {
        machine_id,
        target: best,
        rx_pos: best_pos,
        path_gain_db: best_gain,
        beacon_rx_power_dbm: beacon_eirp_dbm + best_gain,
        decided_at: t,
    }
}

/// Uniform grid of vehicle positions for pruned association searches.
#[derive(Debug, Clone)]
pub struct VehicleIndex {
    cell_m: f64,
    nx: usize,
    ny: usize,
    /// `(id, indexed position, lowest node-field value it can reach)`.
    cells: Vec<Vec<(u32, Point3, f64)>>,
    len: usize,
}

impl VehicleIndex {
    pub fn new(width: f64, height: f64, cell_m: f64) -> Self {
        let nx = (width / cell_m).ceil().max(1.0) as usize;
        let ny = (height / cell_m).ceil().max(1.0) as usize;
        Self { cell_m, nx, ny, cells: vec![Vec::new(); nx * ny], len: 0 }
    }

    pub fn clear(&mut self) {
        for c in &mut self.cells {
            c.clear();
        }
        self.len = 0;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.cell_m).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((y / self.cell_m).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    pub fn insert(&mut self, id: u32, pos: Point3) {
        self.insert_bounded(id, pos, f64::NEG_INFINITY);
    }

    /// Insert with a lower bound on the receiver's node-field value over the
    /// positions it can reach before the next rebuild.
    pub fn insert_bounded(&mut self, id: u32, pos: Point3, rx_field_min: f64) {
        let (i, j) = self.cell_of(pos.x, pos.y);
        self.cells[j * self.nx + i].push((id, pos, rx_field_min));
        self.len += 1;
    }

    /// Association over the indexed vehicles. `exact_pos` maps an indexed
    /// vehicle to its position at decision time, which may differ from the
    /// indexed one by at most `slack_m`.
    #[allow(clippy::too_many_arguments)]
    pub fn associate<F: FnMut(u32, Point3) -> Point3>(
        &self,
        machine_id: u32,
        machine_pos: Point3,
        bs_pos: Point3,
        link: &LinkParams,
        shadow: &ShadowField,
        beacon_eirp_dbm: f64,
        t: f64,
        slack_m: f64,
        mut exact_pos: F,
    ) -> AssociationDecision {
        let mut best = Target::Bs;
        let mut best_gain = path_gain(link, machine_pos, Rx::Bs(bs_pos), shadow);
        let mut best_pos = bs_pos;
        if self.len > 0 {
            let shadow_lb = shadow.min_node_loss_from(machine_pos);
            let (ci, cj) = self.cell_of(machine_pos.x, machine_pos.y);
            let max_ring = self.nx.max(self.ny);
            for r in 0..=max_ring {
                if r >= 1 {
                    let d_lb = ((r as f64 - 1.0) * self.cell_m - slack_m).max(0.0);
                    let ub = (link.mean_gain_db(d_lb) - shadow_lb).min(0.0);
                    if ub < best_gain {
                        break;
                    }
                }
                self.for_ring(ci, cj, r, |id, pos, rx_min| {
                    let d_lb = (machine_pos.distance_2d(pos) - slack_m).max(0.0);
                    let loss_lb = shadow.node_loss_lower_bound(machine_pos, rx_min).max(shadow_lb);
                    if (link.mean_gain_db(d_lb) - loss_lb).min(0.0) < best_gain {
                        return;
                    }
                    let p = exact_pos(id, pos);
                    let g = path_gain(link, machine_pos, Rx::Node(p), shadow);
                    if better(g, Target::Vehicle(id), best_gain, best) {
                        best = Target::Vehicle(id);
                        best_gain = g;
                        best_pos = p;
                    }
                });
            }
        }
        AssociationDecision {
            machine_id,
            target: best,
            rx_pos: best_pos,
            path_gain_db: best_gain,
            beacon_rx_power_dbm: beacon_eirp_dbm + best_gain,
            decided_at: t,
        }
    }

    fn for_ring<F: FnMut(u32, Point3, f64)>(&self, ci: usize, cj: usize, r: usize, mut f: F) {
        let (ci, cj, r) = (ci as isize, cj as isize, r as isize);
        let mut visit = |i: isize, j: isize| {
            if i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny {
                for &(id, pos, rx_min) in &self.cells[j as usize * self.nx + i as usize] {
                    f(id, pos, rx_min);
                }
            }
        };
        if r == 0 {
            visit(ci, cj);
            return;
        }
        for i in ci - r..=ci + r {
            visit(i, cj - r);
            visit(i, cj + r);
        }
        for j in cj - r + 1..cj + r {
            visit(ci - r, j);
            visit(ci + r, j);
        }
    }
}

/// Uniform random subset of `vehicles` of size `n`, returned sorted.
pub fn choose_type1_assistants(vehicles: &[u32], n: u32, rng: &mut ChaCha8Rng) -> Result<Vec<u32>> {
    if n as usize > vehicles.len() {
        return Err(Error::Config(format!("{n} assisting vehicles requested but only {} exist", vehicles.len())));
    }
    let mut ids: Vec<u32> = rand::seq::index::sample(rng, vehicles.len(), n as usize)
        .into_iter()
        .map(|i| vehicles[i])
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Clusters the machines whose baseline SINR is below `threshold_db` and
/// parks one assisting vehicle at the lane point nearest to each centroid.
///
/// `machines` holds `(planar position, mean baseline SINR)` per machine;
/// machines with no baseline sample carry `NaN` and are never suffering.
pub fn choose_type2_parking(
    world: &mut World,
    machines: &[((f64, f64), f64)],
    n_assisting: u32,
    threshold_db: f64,
    assist_rng: &mut ChaCha8Rng,
    cluster_rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, Point3)>> {
    if n_assisting == 0 {
        return Ok(Vec::new());
    }
    let vehicles: Vec<u32> = world.ids.vehicle.clone().collect();
    let chosen = choose_type1_assistants(&vehicles, n_assisting, assist_rng)?;
    let mut points: Vec<[f64; 2]> =
        machines.iter().filter(|(_, s)| *s < threshold_db).map(|&((x, y), _)| [x, y]).collect();
    if points.is_empty() {
        log::warn!("no machine below {threshold_db} dB baseline SINR; clustering all machines");
        points = machines.iter().map(|&((x, y), _)| [x, y]).collect();
    }
    if points.is_empty() {
        return Err(Error::Placement("no machines to cluster".into()));
    }
    let k = (n_assisting as usize).min(points.len());
    let km = kmeans(&points, k, KMEANS_MAX_ITER, KMEANS_TOL_M, cluster_rng);
    let mut out = Vec::with_capacity(chosen.len());
    for (i, &vid) in chosen.iter().enumerate() {
        let c = km.centroids[i % k];
        let pos = park_vehicle(world, vid, (c[0], c[1]))?;
        world.nodes[vid as usize].assisting = true;
        out.push((vid, pos));
    }
    Ok(out)
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL_M: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans<T> {
    pub centroids: Vec<[T; 2]>,
    pub assignment: Vec<usize>,
    pub wcss: T,
    pub iterations: usize,
}

fn dist2<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Index of the nearest centroid; ties go to the lower index.
pub fn nearest<T: Scalar>(p: [T; 2], centroids: &[[T; 2]]) -> (usize, T) {
    let mut best = (0, dist2(p, centroids[0]));
    for (i, &c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Within-cluster sum of squares with nearest-centroid assignment.
pub fn wcss<T: Scalar>(points: &[[T; 2]], centroids: &[[T; 2]]) -> T {
    points.iter().fold(T::zero(), |acc, &p| acc + nearest(p, centroids).1)
}

/// k-means++ seeding: first centroid uniform, the rest drawn with
/// probability proportional to squared distance.
pub fn kmeans_pp_init<T: Scalar, R: Rng + ?Sized>(points: &[[T; 2]], k: usize, rng: &mut R) -> Vec<[T; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<T> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total = d2.iter().fold(T::zero(), |a, &b| a + b).to_f64().unwrap_or(0.0);
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                let w = w.to_f64().unwrap_or(0.0);
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        centroids.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            let nd = dist2(p, c);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Lloyd iterations from the given centroids until no centroid moves more
/// than `tol` or `max_iter` is reached. Empty clusters keep their centroid.
pub fn lloyd<T: Scalar>(points: &[[T; 2]], mut centroids: Vec<[T; 2]>, max_iter: usize, tol: T) -> KMeans<T> {
    let k = centroids.len();
    let mut assignment = vec![0usize; points.len()];
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        for (a, &p) in assignment.iter_mut().zip(points) {
            *a = nearest(p, &centroids).0;
        }
        let mut sums = vec![[T::zero(), T::zero()]; k];
        let mut counts = vec![0usize; k];
        for (&a, &p) in assignment.iter().zip(points) {
            sums[a][0] = sums[a][0] + p[0];
            sums[a][1] = sums[a][1] + p[1];
            counts[a] += 1;
        }
        let mut shift = T::zero();
        for c in 0..k {
            if counts[c] > 0 {
                let n = T::from_usize(counts[c]).unwrap();
                let new = [sums[c][0] / n, sums[c][1] / n];
                shift = shift.max(dist2(new, centroids[c]).sqrt());
                centroids[c] = new;
            }
        }
        if shift <= tol {
            break;
        }
    }
    for (a, &p) in assignment.iter_mut().zip(points) {
        *a = nearest(p, &centroids).0;
    }
    let wcss = wcss(points, &centroids);
    KMeans { centroids, assignment, wcss, iterations }
}

/// k-means with k-means++ seeding.
pub fn kmeans<T: Scalar, R: Rng + ?Sized>(points: &[[T; 2]], k: usize, max_iter: usize, tol: T, rng: &mut R) -> KMeans<T> {
    assert!(k >= 1 && k <= points.len(), "need 1 <= k <= number of points");
    let init = kmeans_pp_init(points, k, rng);
    lloyd(points, init, max_iter, tol)
}
