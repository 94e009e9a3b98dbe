//! Mean SINR, energy efficiency and EE gain over campaigns.

use std::io::{BufRead, Write};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{Involvement, Rat};
use crate::engine::ReplicationLog;
use crate::error::{Error, Result};
use crate::num::{db_to_linear, linear_to_db};

/// Summary CSV columns, in order.
pub const SUMMARY_COLUMNS: [&str; 9] = [
    "rat",
    "involvement",
    "n_assisting",
    "mean_sinr_db",
    "sinr_ci95_db",
    "energy_efficiency_bit_per_j",
    "ee_gain_vs_baseline",
    "delivery_ratio",
    "rounds",
];

/// Audit CSV columns, in order.
pub const AUDIT_COLUMNS: [&str; 5] = ["rat", "involvement", "n_assisting", "mean_sinr_linear_db", "per_machine_median_ee_bit_per_j"];

/// Sufficient statistics of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundStats {
    pub seed: u64,
    pub n_records: u64,
    pub sum_sinr_db: f64,
    pub sum_sinr_linear: f64,
    pub delivered_bits: f64,
    pub energy_j: f64,
    pub offered: u64,
    pub delivered: u64,
    /// Delivered bits over energy for every machine that spent energy.
    pub machine_ee: Vec<f64>,
}

impl RoundStats {
    pub fn from_log(log: &ReplicationLog) -> Self {
        let n = log.machine_energy_j.len();
        let mut bits = vec![0.0; n];
        let mut delivered = 0u64;
        for m in &log.messages {
            if m.delivered {
                delivered += 1;
                bits[m.machine_id as usize] += 8.0 * m.payload_b as f64;
            }
        }
        let machine_ee = log
            .machine_energy_j
            .iter()
            .zip(&bits)
            .filter(|(&e, _)| e > 0.0)
            .map(|(&e, &b)| b / e)
            .collect();
        Self {
            seed: log.seed,
            n_records: log.records.len() as u64,
            sum_sinr_db: log.records.iter().map(|r| r.sinr_db).sum(),
            sum_sinr_linear: log.records.iter().map(|r| db_to_linear(r.sinr_db)).sum(),
            delivered_bits: bits.iter().sum(),
            energy_j: log.total_energy_j(),
            offered: log.messages.len() as u64,
            delivered,
            machine_ee,
        }
    }

    pub fn mean_sinr_db(&self) -> Option<f64> {
        (self.n_records > 0).then(|| self.sum_sinr_db / self.n_records as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rat: Rat,
    pub involvement: Involvement,
    pub n_assisting: u32,
    pub mean_sinr_db: f64,
    /// Half-width; infinite with fewer than two rounds.
    pub sinr_ci95_db: f64,
    pub energy_efficiency_bit_per_j: f64,
    pub ee_gain_vs_baseline: Option<f64>,
    pub delivery_ratio: f64,
    pub rounds: u32,
    /// Mean SINR averaged in the linear domain, in dB.
    pub mean_sinr_linear_db: f64,
    pub per_machine_median_ee: f64,
}

/// Pooled delivered bits per joule.
pub fn energy_efficiency(rounds: &[RoundStats]) -> Result<f64> {
    let energy: f64 = rounds.iter().map(|r| r.energy_j).sum();
    if energy <= 0.0 {
        return Err(Error::Metric("zero total energy".into()));
    }
    Ok(rounds.iter().map(|r| r.delivered_bits).sum::<f64>() / energy)
}

/// Half-width of the 95% t-interval of `samples`' mean.
pub fn ci95_half_width(samples: &[f64]) -> f64 {
    let k = samples.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64).expect("dof > 0").inverse_cdf(0.975);
    t * (var / k as f64).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// EE ratio against a baseline campaign run on the same seeds. `None` when
/// the seeds differ or the baseline delivered nothing.
pub fn ee_gain(rounds: &[RoundStats], baseline: &[RoundStats]) -> Result<Option<f64>> {
    let mut a: Vec<u64> = rounds.iter().map(|r| r.seed).collect();
    let mut b: Vec<u64> = baseline.iter().map(|r| r.seed).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Ok(None);
    }
    let base = energy_efficiency(baseline)?;
    if base <= 0.0 {
        return Ok(None);
    }
    Ok(Some(energy_efficiency(rounds)? / base))
}

pub fn aggregate(
    rat: Rat,
    involvement: Involvement,
    n_assisting: u32,
    rounds: &[RoundStats],
    baseline: Option<&[RoundStats]>,
) -> Result<MetricsReport> {
    if rounds.is_empty() {
        return Err(Error::Metric("no rounds".into()));
    }
    let n: u64 = rounds.iter().map(|r| r.n_records).sum();
    if n == 0 {
        return Err(Error::Metric("no transmissions".into()));
    }
    let mean_sinr_db = rounds.iter().map(|r| r.sum_sinr_db).sum::<f64>() / n as f64;
    let mean_lin = rounds.iter().map(|r| r.sum_sinr_linear).sum::<f64>() / n as f64;
    let per_round: Vec<f64> = rounds.iter().filter_map(RoundStats::mean_sinr_db).collect();
    let offered: u64 = rounds.iter().map(|r| r.offered).sum();
    let delivered: u64 = rounds.iter().map(|r| r.delivered).sum();
    let ee_gain_vs_baseline = match baseline {
        Some(b) => ee_gain(rounds, b)?,
        None => None,
    };
    Ok(MetricsReport {
        rat,
        involvement,
        n_assisting,
        mean_sinr_db,
        sinr_ci95_db: ci95_half_width(&per_round),
        energy_efficiency_bit_per_j: energy_efficiency(rounds)?,
        ee_gain_vs_baseline,
        delivery_ratio: if offered > 0 { delivered as f64 / offered as f64 } else { 0.0 },
        rounds: rounds.len() as u32,
        mean_sinr_linear_db: linear_to_db(mean_lin),
        per_machine_median_ee: median(rounds.iter().flat_map(|r| r.machine_ee.iter().copied()).collect()),
    })
}

pub fn write_summary_csv<W: Write>(mut w: W, reports: &[MetricsReport]) -> std::io::Result<()> {
    writeln!(w, "{}", SUMMARY_COLUMNS.join(","))?;
    for r in reports {
        let gain = r.ee_gain_vs_baseline.map(|g| g.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.rat,
            r.involvement,
            r.n_assisting,
            r.mean_sinr_db,
            r.sinr_ci95_db,
            r.energy_efficiency_bit_per_j,
            gain,
            r.delivery_ratio,
            r.rounds
        )?;
    }
    Ok(())
}

pub fn write_audit_csv<W: Write>(mut w: W, reports: &[MetricsReport]) -> std::io::Result<()> {
    writeln!(w, "{}", AUDIT_COLUMNS.join(","))?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.rat, r.involvement, r.n_assisting, r.mean_sinr_linear_db, r.per_machine_median_ee
        )?;
    }
    Ok(())
}

/// One parsed summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rat: Rat,
    pub involvement: Involvement,
    pub n_assisting: u32,
    pub mean_sinr_db: f64,
    pub sinr_ci95_db: f64,
    pub energy_efficiency_bit_per_j: f64,
    pub ee_gain_vs_baseline: Option<f64>,
    pub delivery_ratio: f64,
    pub rounds: u32,
}

/// Reads a summary CSV, rejecting any header other than [`SUMMARY_COLUMNS`].
pub fn read_summary_csv<R: BufRead>(r: R) -> Result<Vec<SummaryRow>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Metric("empty summary".into()))??;
    if header != SUMMARY_COLUMNS.join(",") {
        return Err(Error::Metric(format!("unexpected summary header {header:?}")));
    }
    let bad = |l: &str| Error::Metric(format!("bad summary row {l:?}"));
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != SUMMARY_COLUMNS.len() {
            return Err(bad(&line));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&line));
        out.push(SummaryRow {
            rat: f[0].parse()?,
            involvement: f[1].parse()?,
            n_assisting: f[2].parse().map_err(|_| bad(&line))?,
            mean_sinr_db: num(f[3])?,
            sinr_ci95_db: num(f[4])?,
            energy_efficiency_bit_per_j: num(f[5])?,
            ee_gain_vs_baseline: if f[6].is_empty() { None } else { Some(num(f[6])?) },
            delivery_ratio: num(f[7])?,
            rounds: f[8].parse().map_err(|_| bad(&line))?,
        });
    }
    Ok(out)
}
