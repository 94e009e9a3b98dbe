//! Scenario configuration, loaded from a single JSON document.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Radio access technology under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Rat {
    Sigfox,
    Lorawan,
    Halow,
    Nbiot,
}

impl Rat {
    pub const ALL: [Rat; 4] = [Rat::Sigfox, Rat::Lorawan, Rat::Halow, Rat::Nbiot];

    pub fn name(self) -> &'static str {
        match self {
            Rat::Sigfox => "SIGFOX",
            Rat::Lorawan => "LORAWAN",
            Rat::Halow => "HALOW",
            Rat::Nbiot => "NBIOT",
        }
    }

    /// Unlicensed-band technologies that use ALOHA with per-frame hopping
    /// and are subject to duty-cycle limits.
    pub fn is_ism_aloha(self) -> bool {
        matches!(self, Rat::Sigfox | Rat::Lorawan)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "SIGFOX" => Ok(Rat::Sigfox),
            "LORAWAN" | "LORA" => Ok(Rat::Lorawan),
            "HALOW" | "WIFIHALOW" => Ok(Rat::Halow),
            "NBIOT" => Ok(Rat::Nbiot),
            other => Err(Error::Config(format!("unknown RAT '{other}'"))),
        }
    }
}

/// User-involvement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Involvement {
    Baseline,
    Type1,
    Type2,
}

impl Involvement {
    pub fn name(self) -> &'static str {
        match self {
            Involvement::Baseline => "BASELINE",
            Involvement::Type1 => "TYPE1",
            Involvement::Type2 => "TYPE2",
        }
    }
}

impl fmt::Display for Involvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Involvement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Involvement::Baseline),
            "type1" => Ok(Involvement::Type1),
            "type2" => Ok(Involvement::Type2),
            other => Err(Error::Config(format!("unknown involvement '{other}'"))),
        }
    }
}

/// Large-scale propagation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Loss at the reference distance. `None` uses free-space loss at the
    /// RAT's carrier frequency.
    pub pl0_db: Option<f64>,
    pub ref_distance_m: f64,
    pub exponent: f64,
    pub shadowing_sigma_db: f64,
    pub shadowing_corr_m: f64,
    pub thermal_noise_dbm_per_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pl0_db: None,
            ref_distance_m: 1.0,
            exponent: 3.5,
            shadowing_sigma_db: 8.0,
            shadowing_corr_m: 50.0,
            thermal_noise_dbm_per_hz: -174.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(2.0..=6.0).contains(&self.exponent) {
            return Err(Error::Config(format!("channel.exponent {} outside [2, 6]", self.exponent)));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::Config("channel.shadowing_sigma_db must be >= 0".into()));
        }
        if !(self.ref_distance_m > 0.0) || !(self.shadowing_corr_m > 0.0) {
            return Err(Error::Config("channel distances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub block_size_m: f64,
    pub street_width_m: f64,
    pub grid_blocks: [u32; 2],
    pub area_m: [f64; 2],
    pub n_stationary: u32,
    pub n_wearable: u32,
    pub n_vehicles: u32,
    pub n_pedestrians: u32,
    pub vehicle_speed_kmh: f64,
    pub pedestrian_speed_kmh: f64,
    pub mean_inter_vehicle_m: f64,
    pub bs_height_m: f64,
    pub car_roof_height_m: f64,
    /// Half-open interval `[lo, hi)`.
    pub stationary_height_range_m: [f64; 2],
    pub wearable_height_m: f64,
    #[serde(alias = "stationary_payload_B")]
    pub stationary_payload_b: u32,
    #[serde(alias = "wearable_payload_B")]
    pub wearable_payload_b: u32,
    pub stationary_period_s: f64,
    pub wearable_period_s: f64,
    pub target_baseline_sinr_db: f64,
    pub rat: Rat,
    pub involvement: Involvement,
    pub n_assisting_vehicles: u32,
    pub rounds: u32,
    pub sim_duration_s: f64,
    pub seed: u64,
    pub channel: ChannelParams,

    /// Width of the sidewalk strip along each block edge.
    pub sidewalk_width_m: f64,
    /// Fixed BS distance from the area center; `None` means calibrate.
    pub bs_distance_m: Option<f64>,
    pub link_margin_db: f64,
    /// Machines whose mean baseline SINR falls below this are clustered for
    /// parked-vehicle placement.
    pub suffering_sinr_threshold_db: f64,
    /// Replications per calibration evaluation.
    pub calibration_rounds: u32,
    /// On an unreachable calibration target, use the probed bracket end
    /// whose SINR is closest to it instead of failing.
    pub calibration_best_effort: bool,
    pub mobility_dt_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            block_size_m: 80.0,
            street_width_m: 25.0,
            grid_blocks: [10, 10],
            area_m: [1050.0, 1050.0],
            n_stationary: 2000,
            n_wearable: 3000,
            n_vehicles: 1000,
            n_pedestrians: 3000,
            vehicle_speed_kmh: 30.0,
            pedestrian_speed_kmh: 5.0,
            mean_inter_vehicle_m: 3.0,
            bs_height_m: 10.0,
            car_roof_height_m: 1.5,
            stationary_height_range_m: [0.0, 10.0],
            wearable_height_m: 1.5,
            stationary_payload_b: 10,
            wearable_payload_b: 100,
            stationary_period_s: 5.0,
            wearable_period_s: 60.0,
            target_baseline_sinr_db: 10.0,
            rat: Rat::Nbiot,
            involvement: Involvement::Baseline,
            n_assisting_vehicles: 0,
            rounds: 100,
            sim_duration_s: 600.0,
            seed: 1,
            channel: ChannelParams::default(),
            sidewalk_width_m: 2.0,
            bs_distance_m: None,
            link_margin_db: 3.0,
            suffering_sinr_threshold_db: 10.0,
            calibration_rounds: 10,
            calibration_best_effort: false,
            mobility_dt_s: 0.1,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.grid_blocks[0] == 0 || self.grid_blocks[1] == 0 {
            return cfg_err("grid_blocks must be positive".into());
        }
        if !(self.block_size_m > 0.0) || !(self.street_width_m > 0.0) {
            return cfg_err("block_size_m and street_width_m must be positive".into());
        }
        let period = self.block_size_m + self.street_width_m;
        for axis in 0..2 {
            let expect = self.grid_blocks[axis] as f64 * period;
            if (self.area_m[axis] - expect).abs() > 1e-6 {
                return cfg_err(format!(
                    "area_m[{axis}] = {} does not tile: {} blocks x {} m = {} m",
                    self.area_m[axis], self.grid_blocks[axis], period, expect
                ));
            }
        }
        if !(self.sidewalk_width_m > 0.0) || self.sidewalk_width_m * 2.0 >= self.block_size_m {
            return cfg_err("sidewalk_width_m must be positive and narrower than half a block".into());
        }
        if self.n_stationary + self.n_wearable == 0 {
            return cfg_err("at least one machine is required".into());
        }
        if self.n_wearable > self.n_pedestrians {
            return cfg_err(format!(
                "n_wearable ({}) exceeds n_pedestrians ({}): every wearable needs a carrier",
                self.n_wearable, self.n_pedestrians
            ));
        }
        if self.n_assisting_vehicles > self.n_vehicles {
            return cfg_err(format!(
                "n_assisting_vehicles ({}) exceeds n_vehicles ({})",
                self.n_assisting_vehicles, self.n_vehicles
            ));
        }
        if self.rounds == 0 || self.calibration_rounds == 0 {
            return cfg_err("rounds and calibration_rounds must be positive".into());
        }
        let [lo, hi] = self.stationary_height_range_m;
        if !(lo >= 0.0 && lo < hi) {
            return cfg_err("stationary_height_range_m must satisfy 0 <= lo < hi".into());
        }
        for (name, v) in [
            ("vehicle_speed_kmh", self.vehicle_speed_kmh),
            ("pedestrian_speed_kmh", self.pedestrian_speed_kmh),
            ("mean_inter_vehicle_m", self.mean_inter_vehicle_m),
            ("stationary_period_s", self.stationary_period_s),
            ("wearable_period_s", self.wearable_period_s),
            ("mobility_dt_s", self.mobility_dt_s),
            ("bs_height_m", self.bs_height_m),
        ] {
            if !(v > 0.0) {
                return cfg_err(format!("{name} must be positive"));
            }
        }
        if self.stationary_payload_b == 0 || self.wearable_payload_b == 0 {
            return cfg_err("payload sizes must be positive".into());
        }
        if !(self.sim_duration_s >= 0.0) || !self.sim_duration_s.is_finite() {
            return cfg_err("sim_duration_s must be finite and >= 0".into());
        }
        if let Some(d) = self.bs_distance_m {
            if !(d > 0.0) {
                return cfg_err("bs_distance_m must be positive".into());
            }
        }
        self.channel.validate()
    }

    /// Number of assisting vehicles actually in effect; baseline forces zero.
    pub fn effective_assisting(&self) -> u32 {
        match self.involvement {
            Involvement::Baseline => 0,
            _ => self.n_assisting_vehicles,
        }
    }

    pub fn layout(&self) -> crate::Layout {
        crate::geometry::Layout {
            block_size: self.block_size_m,
            street_width: self.street_width_m,
            blocks_x: self.grid_blocks[0],
            blocks_y: self.grid_blocks[1],
            sidewalk_width: self.sidewalk_width_m,
        }
    }

    pub fn vehicle_speed_mps(&self) -> f64 {
        self.vehicle_speed_kmh / 3.6
    }

    pub fn pedestrian_speed_mps(&self) -> f64 {
        self.pedestrian_speed_kmh / 3.6
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Hash ignoring the seed, used to check that logs belong to one campaign.
    pub fn hash_without_seed(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        c.hash()
    }
}
