//! Large-scale propagation and SINR.
//!
//! Path gain is log-distance with log-normal shadowing. Shadowing comes from
//! two frozen, spatially correlated unit-variance Gaussian fields built per
//! replication:
//!
//! * links to the base station use `sigma * F_bs(terminal)`;
//! * links between two nodes inside the area use
//!   `sigma * (F(a) + F(b)) / sqrt(2)`.
//!
//! Each field is a sum of random cosines whose wave numbers follow the
//! spectrum of an exponential autocorrelation `exp(-d / corr)`. Values inside
//! the area are read from a precomputed grid by bilinear interpolation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::ChannelParams;
use crate::num::{db_to_linear, linear_to_db, Scalar};
use crate::Point3;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const N_WAVES: usize = 64;
const GRID_STEP_M: f64 = 5.0;

/// Free-space loss at distance `d` for carrier `f`.
pub fn free_space_loss_db<T: Scalar>(distance_m: T, carrier_hz: T) -> T {
    let four_pi = T::lit(4.0) * T::PI();
    T::lit(20.0) * (four_pi * distance_m * carrier_hz / T::lit(SPEED_OF_LIGHT)).log10()
}

/// Deterministic part of the path gain (no shadowing). Distances below the
/// reference distance are clamped to it.
pub fn log_distance_gain_db<T: Scalar>(pl0_db: T, exponent: T, ref_distance_m: T, distance_m: T) -> T {
    let d = distance_m.max(ref_distance_m);
    -(pl0_db + T::lit(10.0) * exponent * (d / ref_distance_m).log10())
}

/// SINR in dB from received powers in dBm.
pub fn sinr_db<T: Scalar, I: IntoIterator<Item = T>>(signal_dbm: T, interferers_dbm: I, noise_dbm: T) -> T {
    let denom = interferers_dbm.into_iter().fold(db_to_linear(noise_dbm), |acc, p| acc + db_to_linear(p));
    signal_dbm - linear_to_db(denom)
}

/// Channel constants with the reference loss resolved for one carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub pl0_db: f64,
    pub ref_distance_m: f64,
    pub exponent: f64,
    pub shadowing_sigma_db: f64,
    pub shadowing_corr_m: f64,
    pub thermal_noise_dbm_per_hz: f64,
}

impl LinkParams {
    pub fn resolve(params: &ChannelParams, carrier_hz: f64) -> Self {
        Self {
            pl0_db: params.pl0_db.unwrap_or_else(|| free_space_loss_db(params.ref_distance_m, carrier_hz)),
            ref_distance_m: params.ref_distance_m,
            exponent: params.exponent,
            shadowing_sigma_db: params.shadowing_sigma_db,
            shadowing_corr_m: params.shadowing_corr_m,
            thermal_noise_dbm_per_hz: params.thermal_noise_dbm_per_hz,
        }
    }

    pub fn mean_gain_db(&self, distance_m: f64) -> f64 {
        log_distance_gain_db(self.pl0_db, self.exponent, self.ref_distance_m, distance_m)
    }
}

/// Where a link terminates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rx {
    Bs(Point3),
    Node(Point3),
}

impl Rx {
    pub fn pos(self) -> Point3 {
        match self {
            Rx::Bs(p) | Rx::Node(p) => p,
        }
    }
}

#[derive(Debug, Clone)]
struct CosineField {
    waves: Vec<(f64, f64, f64)>,
    origin: (f64, f64),
    nx: usize,
    ny: usize,
    grid: Vec<f64>,
}

impl CosineField {
    fn new(rng: &mut ChaCha8Rng, corr_m: f64, width: f64, height: f64) -> Self {
        let waves = (0..N_WAVES)
            .map(|_| {
                // radial wave number with CDF 1 - 1/sqrt(1 + (k L)^2)
                let u: f64 = rng.random();
                let k = ((1.0 / (1.0 - u)).powi(2) - 1.0).sqrt() / corr_m;
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                (k * theta.cos(), k * theta.sin(), phase)
            })
            .collect();
        let margin = 2.0 * GRID_STEP_M;
        let origin = (-margin, -margin);
        let nx = ((width + 2.0 * margin) / GRID_STEP_M).ceil() as usize + 1;
        let ny = ((height + 2.0 * margin) / GRID_STEP_M).ceil() as usize + 1;
        let mut f = Self { waves, origin, nx, ny, grid: Vec::new() };
        // rows are filled by rotating each wave's phasor one grid step at a time
        let mut grid = vec![0.0; nx * ny];
        let scale = (2.0 / N_WAVES as f64).sqrt();
        for &(kx, ky, ph) in &f.waves {
            let (ds, dc) = (kx * GRID_STEP_M).sin_cos();
            for j in 0..ny {
                let y = origin.1 + j as f64 * GRID_STEP_M;
                let (mut s, mut c) = (kx * origin.0 + ky * y + ph).sin_cos();
                for v in &mut grid[j * nx..(j + 1) * nx] {
                    *v += c * scale;
                    (c, s) = (c * dc - s * ds, s * dc + c * ds);
                }
            }
        }
        f.grid = grid;
        f
    }

    fn eval_exact(&self, x: f64, y: f64) -> f64 {
        let s: f64 = self.waves.iter().map(|&(kx, ky, ph)| (kx * x + ky * y + ph).cos()).sum();
        s * (2.0 / N_WAVES as f64).sqrt()
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let gx = (x - self.origin.0) / GRID_STEP_M;
        let gy = (y - self.origin.1) / GRID_STEP_M;
        if gx < 0.0 || gy < 0.0 || gx >= (self.nx - 1) as f64 || gy >= (self.ny - 1) as f64 {
            return self.eval_exact(x, y);
        }
        let i = gx as usize;
        let j = gy as usize;
        let fx = gx - i as f64;
        let fy = gy - j as f64;
        let g = |i: usize, j: usize| self.grid[j * self.nx + i];
        let a = g(i, j) * (1.0 - fx) + g(i + 1, j) * fx;
        let b = g(i, j + 1) * (1.0 - fx) + g(i + 1, j + 1) * fx;
        a * (1.0 - fy) + b * fy
    }

    /// Minimum over the grid nodes of the cell square around `(x, y)`; the
    /// bilinear interpolant inside it cannot go lower.
    fn min_near(&self, x: f64, y: f64, radius: f64) -> Option<f64> {
        let i0 = ((x - radius - self.origin.0) / GRID_STEP_M).floor();
        let j0 = ((y - radius - self.origin.1) / GRID_STEP_M).floor();
        let i1 = ((x + radius - self.origin.0) / GRID_STEP_M).ceil();
        let j1 = ((y + radius - self.origin.1) / GRID_STEP_M).ceil();
        if i0 < 0.0 || j0 < 0.0 || i1 > (self.nx - 1) as f64 || j1 > (self.ny - 1) as f64 {
            return None;
        }
        let mut m = f64::INFINITY;
        for j in j0 as usize..=j1 as usize {
            for &v in &self.grid[j * self.nx + i0 as usize..=j * self.nx + i1 as usize] {
                m = m.min(v);
            }
        }
        Some(m)
    }

    fn grid_min(&self) -> f64 {
        self.grid.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Frozen shadowing for one replication.
#[derive(Debug, Clone)]
pub struct ShadowField {
    sigma_db: f64,
    node_field: CosineField,
    bs_field: CosineField,
    node_min: f64,
}

impl ShadowField {
    pub fn new(rng: &mut ChaCha8Rng, sigma_db: f64, corr_m: f64, width: f64, height: f64) -> Self {
        let node_field = CosineField::new(rng, corr_m, width, height);
        let bs_field = CosineField::new(rng, corr_m, width, height);
        let node_min = node_field.grid_min();
        Self { sigma_db, node_field, bs_field, node_min }
    }

    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }

    /// Shadowing loss in dB (positive means extra loss).
    pub fn loss_db(&self, tx: Point3, rx: Rx) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        match rx {
            Rx::Bs(_) => self.sigma_db * self.bs_field.eval(tx.x, tx.y),
            Rx::Node(p) => {
                self.sigma_db * (self.node_field.eval(tx.x, tx.y) + self.node_field.eval(p.x, p.y))
                    * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// Lowest node-field value over grid nodes within `radius` of `p`
    /// (Chebyshev), or over the whole grid when that square leaves the grid.
    pub fn node_field_min_near(&self, p: Point3, radius: f64) -> f64 {
        self.node_field.min_near(p.x, p.y, radius).unwrap_or(self.node_min)
    }

    /// Lower bound of the node-to-node shadowing loss from `a` to any receiver
    /// whose node-field value is at least `rx_field_min`.
    pub fn node_loss_lower_bound(&self, a: Point3, rx_field_min: f64) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        self.sigma_db * (self.node_field.eval(a.x, a.y) + rx_field_min) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Lower bound of the node-to-node shadowing loss for a link with one end
    /// at `a` and the other anywhere on the grid.
    pub fn min_node_loss_from(&self, a: Point3) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        self.sigma_db * (self.node_field.eval(a.x, a.y) + self.node_min) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Path gain in dB, capped at 0.
pub fn path_gain(params: &LinkParams, tx: Point3, rx: Rx, shadow: &ShadowField) -> f64 {
    let d = tx.distance(rx.pos());
    (params.mean_gain_db(d) - shadow.loss_db(tx, rx)).min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use crate::geometry::Vec3;

    fn field(sigma: f64) -> ShadowField {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        ShadowField::new(&mut rng, sigma, 50.0, 1050.0, 1050.0)
    }

    fn params(pl0: f64) -> LinkParams {
        LinkParams {
            pl0_db: pl0,
            ref_distance_m: 1.0,
            exponent: 3.5,
            shadowing_sigma_db: 0.0,
            shadowing_corr_m: 50.0,
            thermal_noise_dbm_per_hz: -174.0,
        }
    }

    #[test]
    fn hundred_metres_by_hand() {
        let g = path_gain(
            &params(38.0),
            Vec3::new(0.0, 0.0, 0.0),
            Rx::Node(Vec3::new(100.0, 0.0, 0.0)),
            &field(0.0),
        );
        assert_relative_eq!(g, -108.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_distance_anchor_and_clamp() {
        let p = params(38.0);
        assert_relative_eq!(p.mean_gain_db(1.0), -38.0);
        assert_relative_eq!(p.mean_gain_db(0.2), -38.0);
        assert_relative_eq!(log_distance_gain_db(38.0_f32, 3.5, 1.0, 100.0), -108.0, epsilon = 1e-4);
    }

    #[test]
    fn free_space_at_one_metre_868() {
        assert_relative_eq!(free_space_loss_db(1.0, 868.1e6), 31.21, epsilon = 0.01);
    }

    #[test]
    fn frozen_field_is_deterministic() {
        let f = field(8.0);
        let a = Vec3::new(100.0, 200.0, 1.5);
        let b = Rx::Node(Vec3::new(130.0, 250.0, 1.5));
        assert_eq!(f.loss_db(a, b), f.loss_db(a, b));
        let f2 = field(8.0);
        assert_eq!(f.loss_db(a, b), f2.loss_db(a, b));
    }

    #[test]
    fn field_has_roughly_unit_variance_and_correlation() {
        let f = field(1.0);
        let mut vals = Vec::new();
        let mut near = 0.0;
        let mut far = 0.0;
        let mut n = 0.0;
        for i in 0..60 {
            for j in 0..60 {
                let x = 10.0 + i as f64 * 17.0;
                let y = 10.0 + j as f64 * 17.0;
                let v = f.bs_field.eval(x, y);
                vals.push(v);
                near += v * f.bs_field.eval(x + 5.0, y);
                far += v * f.bs_field.eval(x + 400.0, y);
                n += 1.0;
            }
        }
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((0.5..1.5).contains(&var), "variance {var}");
        assert!(near / n > 0.6 * var, "5 m neighbours should be strongly correlated");
        assert!((far / n).abs() < 0.4, "400 m apart should be weakly correlated");
    }

    #[test]
    fn interpolation_is_exact_on_grid_nodes() {
        let f = field(1.0);
        for (i, j) in [(2, 2), (50, 71), (100, 3)] {
            let (x, y) = (i as f64 * GRID_STEP_M - 2.0 * GRID_STEP_M, j as f64 * GRID_STEP_M - 2.0 * GRID_STEP_M);
            assert!((f.node_field.eval(x, y) - f.node_field.eval_exact(x, y)).abs() < 1e-9);
        }
        // between nodes the value stays inside the corner envelope
        let v = f.node_field.eval(333.3, 777.7);
        let c: Vec<f64> = [(330.0, 775.0), (335.0, 775.0), (330.0, 780.0), (335.0, 780.0)]
            .iter()
            .map(|&(x, y)| f.node_field.eval_exact(x, y))
            .collect();
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn sinr_noise_only_by_hand() {
        // -110 dBm over 100 Hz of -174 dBm/Hz noise: noise -154 dBm
        let s = sinr_db(-110.0, std::iter::empty(), -174.0 + 20.0);
        assert_relative_eq!(s, 44.0, epsilon = 1e-12);
    }

    #[test]
    fn sinr_equal_interferer_is_zero_db() {
        let s = sinr_db(-80.0, [-80.0], -300.0);
        assert_relative_eq!(s, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn min_node_loss_is_a_bound() {
        let f = field(8.0);
        let a = Vec3::new(500.0, 500.0, 1.5);
        let bound = f.min_node_loss_from(a);
        for i in 0..100 {
            let b = Vec3::new(i as f64 * 10.3, 1049.0 - i as f64 * 9.1, 1.5);
            assert!(f.loss_db(a, Rx::Node(b)) >= bound - 1e-12);
        }
    }
}
