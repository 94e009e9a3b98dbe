//! Vehicle-assisted LPWAN uplink simulator for a Manhattan-grid city.
//!
//! Numeric kernels (geometry, dB arithmetic, path gain, k-means) are generic
//! over [`num::Scalar`]; the simulator runs in `f64` through the aliases
//! below.

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod involvement;
pub mod metrics;
pub mod mobility;
pub mod num;
pub mod rat;
pub mod rng;
pub mod scenario;
pub mod traffic;

pub type Real = f64;
pub type Point3 = geometry::Vec3<f64>;
pub type Layout = geometry::Layout<f64>;

pub use config::{Involvement, Rat, ScenarioConfig};
pub use engine::{run_campaign, run_replication, ReplicationLog, RunSetup, TransmissionRecord};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use rat::{RatProfile, RatTable};
