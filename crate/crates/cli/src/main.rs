use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use disclimit::config::{ConfigMap, KEYS};
use disclimit::rigid::{rate_fit, trace_norm, RigidProjector};
use disclimit::solver::{energy_check, run, RunOutput};
use disclimit::spectral::norm;
use disclimit::study::{run_study_with_progress, run_with_tracer, StudyConfig};
use disclimit::tracer::{advect_from, SnapshotSeries, VelocityProvider};
use disclimit::{DiscGeometry, Error, Norm, RegionMask, Result};

#[derive(Parser)]
#[command(name = "disclimit", version, about = "Penalized Navier-Stokes with a small immersed disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a configuration key, e.g. `--set n=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled run; writes trajectory.csv and optional snapshots.
    Simulate(Common),
    /// Disc-free run with the fluid particle from h0; writes baseline.csv.
    Baseline(Common),
    /// Advect a particle from h0 through a snapshot directory; writes tracer.csv.
    Tracer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshots: PathBuf,
    },
    /// Projection error over `radii` for the initial field; writes project_study.csv.
    ProjectStudy(Common),
    /// Boundary trace norm over `radii` for the initial field; writes trace_study.csv.
    TraceStudy(Common),
    /// Vanishing-radius study; writes the report CSV and JSON.
    LimitStudy(Common),
    /// Coupled run with an energy budget summary; writes energy.json.
    EnergyCheck(Common),
}

fn keys_help() -> String {
    let mut s = String::from("Configuration keys (name [units] default: description):\n");
    for k in KEYS {
        let d = if k.default.is_empty() { "(empty)" } else { k.default };
        s.push_str(&format!("  {:<16} [{}] {}: {}\n", k.name, k.units, d, k.help));
    }
    s.push_str("\nExit status: 0 ok, 2 unknown key, 3 invalid configuration, 4 runtime failure.");
    s
}

fn load(common: &Common) -> Result<ConfigMap> {
    let mut map = ConfigMap::load(&common.config)?;
    for kv in &common.overrides {
        map.apply_override(kv)?;
    }
    std::fs::create_dir_all(&common.out)?;
    Ok(map)
}

fn header(map: &ConfigMap) -> String {
    format!("# config_hash={}\n", map.hash())
}

fn write_trajectory(path: &Path, map: &ConfigMap, out: &RunOutput) -> Result<()> {
    let mut s = header(map);
    s.push_str("t,h_x,h_y,hdot_x,hdot_y,energy,visc_diss,penal_diss,force_x,force_y\n");
    for r in &out.records {
        let d = &r.diag;
        s.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            d.time,
            r.h[0],
            r.h[1],
            r.hdot[0],
            r.hdot[1],
            d.total_energy(),
            d.viscous_dissipation,
            d.penal_dissipation,
            d.penal_force[0],
            d.penal_force[1]
        ));
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let map = load(common)?;
    let cfg = map.sim_config()?;
    let snaps = (cfg.snapshot_stride > 0).then_some(common.out.as_path());
    let out = run(&cfg, snaps, "sim")?;
    write_trajectory(&common.out.join("trajectory.csv"), &map, &out)
}

fn baseline(common: &Common) -> Result<()> {
    let map = load(common)?;
    let traj = run_with_tracer(&map.sim_config()?, |_| Ok(()))?;
    traj.write_csv(&common.out.join("baseline.csv"), &format!("config_hash={}", map.hash()))
}

fn tracer(common: &Common, snapshots: &Path) -> Result<()> {
    let map = load(common)?;
    let cfg = map.sim_config()?;
    let series = SnapshotSeries::from_dir(snapshots)?;
    let (t0, t1) = series.time_range();
    let t_end = cfg.t_end.unwrap_or(t1).min(t1);
    let dt = cfg.dt.unwrap_or((t1 - t0) / 1000.0);
    let traj = advect_from(&series, cfg.h0, t0, dt, t_end)?;
    traj.write_csv(&common.out.join("tracer.csv"), &format!("config_hash={}", map.hash()))
}

/// Rows of `(r, |u - P_r u|, |u|_{L2(dB_r)})` for the initial field at `h0`.
fn radius_sweep(common: &Common, name: &str, use_trace: bool) -> Result<()> {
    let map = load(common)?;
    let cfg = map.sim_config()?;
    let radii = map.list("radii")?;
    if radii.is_empty() {
        return Err(Error::Config("`radii` must list at least one radius".into()));
    }
    let u = cfg.initial_field()?;
    let h1 = norm(&u, &RegionMask::full(u.grid), Norm::H1)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let disc = DiscGeometry::new(cfg.h0, r);
        let p = RigidProjector::new(&u.grid, &disc)?;
        rows.push((r, u.sub(&p.project(&u)?).l2_norm(), trace_norm(&u, &disc)?));
    }
    let samples: Vec<(f64, f64)> = rows.iter().map(|&(r, e, t)| (r, if use_trace { t } else { e })).collect();
    let slope = if samples.len() >= 2 { rate_fit(&samples).map(|f| f.slope).unwrap_or(f64::NAN) } else { f64::NAN };
    let mut s = header(&map);
    s.push_str("r,proj_error_L2,trace_norm_L2,h1_norm,fitted_slope\n");
    for (r, e, t) in rows {
        s.push_str(&format!("{r},{e:.17e},{t:.17e},{h1:.17e},{slope:.17e}\n"));
    }
    std::fs::write(common.out.join(name), s)?;
    Ok(())
}

fn limit_study(common: &Common) -> Result<()> {
    let map = load(common)?;
    let cfg = StudyConfig::from_map(&map, Some(&common.out))?;
    let report = run_study_with_progress(&cfg, |s| eprintln!("{s}"))?;
    for r in &report.records {
        if let Some(f) = &r.failure {
            eprintln!("radius {} failed: {f}", r.r);
        }
    }
    Ok(())
}

fn energy(common: &Common) -> Result<()> {
    let map = load(common)?;
    let out = run(&map.sim_config()?, None, "energy")?;
    let chk = energy_check(&out.diagnostics());
    let json = serde_json::json!({ "config_hash": map.hash(), "energy_check": chk, "monotone": chk.is_monotone(0.0) });
    std::fs::write(common.out.join("energy.json"), serde_json::to_string_pretty(&json)?)?;
    println!("{}", serde_json::to_string(&json)?);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownKey(_) => 2,
        Error::InvalidParameter(_) | Error::UnderResolved(_) | Error::Invariant(_) | Error::Config(_) | Error::Format { .. } => 3,
        Error::NonFinite(_) | Error::Unstable { .. } | Error::Linalg(_) | Error::Io(_) | Error::Json(_) => 4,
    }
}

fn main() -> ExitCode {
    let help = keys_help();
    let matches = Cli::command().after_help(help.clone()).mut_subcommands(|s| s.after_help(help.clone())).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let res = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Baseline(c) => baseline(c),
        Command::Tracer { common, snapshots } => tracer(common, snapshots),
        Command::ProjectStudy(c) => radius_sweep(c, "project_study.csv", false),
        Command::TraceStudy(c) => radius_sweep(c, "trace_study.csv", true),
        Command::LimitStudy(c) => limit_study(c),
        Command::EnergyCheck(c) => energy(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error[{code}]: {}", e.to_string().replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
