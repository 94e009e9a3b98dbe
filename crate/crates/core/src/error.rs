use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("radio profile error: {0}")]
    Profile(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("step size {dt_s} s exceeds one-intersection bound {max_s} s")]
    StepSize { dt_s: f64, max_s: f64 },

    #[error("placement error: {0}")]
    Placement(String),

    #[error("calibration failed: target {target_db} dB not reachable, mean SINR {sinr_near_db:.3} dB at {lo_m} m and {sinr_far_db:.3} dB at {hi_m} m")]
    Calibration {
        target_db: f64,
        lo_m: f64,
        hi_m: f64,
        sinr_near_db: f64,
        sinr_far_db: f64,
    },

    #[error("undefined metric: {0}")]
    Metric(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
