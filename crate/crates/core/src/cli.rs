//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage, 3 unreadable config,
//! 4 invalid config or radio profile. Failures print one line on stderr:
//! `error kind=<kind> msg="<message>"`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

use crate::config::{Involvement, Rat, ScenarioConfig};
use crate::engine::{prepare_world, RunSetup};
use crate::error::{Error, Result};
use crate::experiment::{bs_distance, run_sweep, SweepPlan, DEFAULT_VEHICLE_SWEEP};
use crate::metrics::{write_audit_csv, write_summary_csv, MetricsReport};
use crate::rat::RatTable;

#[derive(Debug, Parser)]
#[command(name = "uilsim", version, about = "Vehicle-assisted LPWAN uplink simulator")]
pub struct Args {
    /// Scenario configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Radio technology; repeatable. Defaults to the configured one.
    #[arg(long = "rat")]
    pub rats: Vec<String>,
    /// baseline, type1 or type2; repeatable. Defaults to all three.
    #[arg(long = "involvement")]
    pub involvements: Vec<String>,
    /// Number of assisting vehicles; repeatable.
    #[arg(long = "vehicles")]
    pub vehicles: Vec<u32>,
    #[arg(long)]
    pub rounds: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the calibrated BS distance and stop.
    #[arg(long)]
    pub calibrate_only: bool,
    /// Write snapshot.csv with the baseline deployment.
    #[arg(long)]
    pub emit_snapshot: bool,
    /// Write one CSV per replication under logs/.
    #[arg(long)]
    pub write_logs: bool,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) => 2,
        Error::Io(_) | Error::Json(_) => 3,
        Error::Config(_) | Error::Profile(_) => 4,
        _ => 1,
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Profile(_) => "profile",
        Error::Argument(_) => "usage",
        Error::StepSize { .. } => "step_size",
        Error::Placement(_) => "placement",
        Error::Calibration { .. } => "calibration",
        Error::Metric(_) => "metric",
        Error::Replication { .. } => "replication",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn report_error(kind: &str, msg: &str) {
    let msg = msg.replace('\n', " ").replace('"', "'");
    eprintln!("error kind={kind} msg=\"{msg}\"");
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report_error("usage", e.to_string().lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&args, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            report_error(error_kind(&e), &e.to_string());
            exit_code(&e)
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config_hash: String,
    seed: u64,
    rounds: u32,
    bs_distance_m: Vec<(String, f64)>,
    involvements: Vec<String>,
    vehicles: Vec<u32>,
}

/// Runs the plan described by `args`, writing progress lines to `out`.
pub fn execute<W: Write>(args: &Args, out: &mut W) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(r) = args.rounds {
        cfg.rounds = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let rats: Vec<Rat> = if args.rats.is_empty() {
        vec![cfg.rat]
    } else {
        args.rats.iter().map(|s| s.parse().map_err(|_| Error::Argument(format!("unknown RAT '{s}'")))).collect::<Result<_>>()?
    };
    let involvements: Vec<Involvement> = if args.involvements.is_empty() {
        vec![Involvement::Baseline, Involvement::Type1, Involvement::Type2]
    } else {
        args.involvements
            .iter()
            .map(|s| s.parse().map_err(|_| Error::Argument(format!("unknown involvement '{s}'"))))
            .collect::<Result<_>>()?
    };
    let vehicles = if args.vehicles.is_empty() { DEFAULT_VEHICLE_SWEEP.to_vec() } else { args.vehicles.clone() };
    let plan = SweepPlan { involvements, vehicles };
    let table = RatTable::builtin();

    fs::create_dir_all(&args.out)?;
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut distances = Vec::new();
    for (ri, &rat) in rats.iter().enumerate() {
        let profile = table.get(rat).clone();
        let (d, _) = bs_distance(&cfg, &profile)?;
        writeln!(out, "rat={rat} calibrated_distance_m={d}")?;
        distances.push((rat.to_string(), d));
        if args.calibrate_only {
            continue;
        }
        let setup = RunSetup::new(cfg.clone(), profile, d);
        if args.emit_snapshot && ri == 0 {
            let (world, _) = prepare_world(&setup.with_involvement(Involvement::Baseline, 0), cfg.seed, None)?;
            let mut buf = Vec::new();
            world.write_snapshot_csv(&mut buf)?;
            write_atomic(&args.out.join("snapshot.csv"), &buf)?;
        }
        let logs_dir = args.out.join("logs");
        if args.write_logs {
            fs::create_dir_all(&logs_dir)?;
        }
        let points = run_sweep(&setup, &plan, |log| {
            if !args.write_logs {
                return Ok(());
            }
            let name = format!("{}_{}_{}_seed{}.csv", log.rat, log.involvement, log.n_assisting, log.seed);
            let mut buf = Vec::new();
            log.write_csv(&mut buf)?;
            write_atomic(&logs_dir.join(name), &buf)
        })?;
        reports.extend(points.into_iter().map(|p| p.report));
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        rounds: cfg.rounds,
        bs_distance_m: distances,
        involvements: plan.involvements.iter().map(|i| i.to_string()).collect(),
        vehicles: plan.vehicles.clone(),
    };
    write_atomic(&args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    if args.calibrate_only {
        return Ok(());
    }
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &reports)?;
    write_atomic(&args.out.join("summary.csv"), &buf)?;
    let mut buf = Vec::new();
    write_audit_csv(&mut buf, &reports)?;
    write_atomic(&args.out.join("summary_audit.csv"), &buf)?;
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
