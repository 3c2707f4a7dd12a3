//! The `bundle`, `scan` and `rdas` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex;
use serde_json::json;
use spiral_anchor::config::Config;
use spiral_anchor::dynamics::{anchoring_center, integrate, wedge_scan, write_scan_csv};
use spiral_anchor::rdas::{read_snapshot, write_snapshot, RdasModel, RdasState, Simulation};

use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

/// Everything a subcommand needs besides its own section of the config.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: Config,
    pub out: PathBuf,
    pub override_cfl: bool,
    /// Snapshot to continue an `rdas` run from.
    pub resume: Option<PathBuf>,
}

impl RunOptions {
    pub fn new(config: Config, out: impl Into<PathBuf>) -> Self {
        Self { config, out: out.into(), override_cfl: false, resume: None }
    }
}

fn create(dir: &Path, rel: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(format!("creating {}", parent.display())))?;
    }
    File::create(&path).map(BufWriter::new).map_err(CliError::io(format!("creating {}", path.display())))
}

fn finish_file(mut w: BufWriter<File>, rel: &str) -> CliResult<()> {
    w.flush().map_err(CliError::io(format!("writing {rel}")))
}

/// Writes the resolved config and the manifest next to the outputs.
fn seal(opts: &RunOptions, subcommand: &str, started: Instant, mut files: Vec<String>, summary: serde_json::Value) -> CliResult<RunManifest> {
    std::fs::write(opts.out.join("config.toml"), opts.config.emit()).map_err(CliError::io("writing config.toml"))?;
    files.push("config.toml".into());
    let outputs = RunManifest::digest_outputs(&opts.out, &files)?;
    let manifest = RunManifest {
        subcommand: subcommand.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(&opts.config).map_err(|e| CliError::Failed(e.to_string()))?,
        threads: rayon::current_num_threads(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs,
        summary,
    };
    manifest.write(&opts.out)?;
    Ok(manifest)
}

fn prepare(opts: &RunOptions) -> CliResult<()> {
    std::fs::create_dir_all(&opts.out).map_err(CliError::io(format!("creating {}", opts.out.display())))
}

/// Integrates the bundle equations from `integrate.p0` and writes `trajectory.csv`.
pub fn cmd_bundle(opts: &RunOptions) -> CliResult<RunManifest> {
    let started = Instant::now();
    let system = opts.config.bundle()?.to_system::<f64>()?;
    let ic = &opts.config.integrate;
    let p0 = Complex::new(ic.p0[0], ic.p0[1]);
    prepare(opts)?;
    let traj = integrate(&system, p0, ic.t0, ic.t_end, ic.samples, ic.tolerance())?;
    let rel = "trajectory.csv";
    let mut w = create(&opts.out, rel)?;
    let io = CliError::io(format!("writing {rel}"));
    (|| -> std::io::Result<()> {
        writeln!(w, "t,p_re,p_im")?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            writeln!(w, "{t:e},{:e},{:e}", s[0].re, s[0].im)?;
        }
        Ok(())
    })()
    .map_err(io)?;
    finish_file(w, rel)?;

    let path = traj.component(0);
    let closure = (path[path.len() - 1] - path[0]).norm();
    let one_period = ic.t0 == 0.0 && (ic.t_end - std::f64::consts::TAU).abs() < 1e-12;
    let center = if one_period { anchoring_center(&traj.times, &path, ic.tol).ok() } else { None };
    let summary = json!({
        "closure": closure,
        "accepted_steps": traj.stats.accepted,
        "rejected_steps": traj.stats.rejected,
        "anchor_center": center.map(|c| [c.re, c.im]),
    });
    seal(opts, "bundle", started, vec![rel.into()], summary)
}

/// Runs the configured wedge scan and writes `scan.csv`.
pub fn cmd_scan(opts: &RunOptions) -> CliResult<RunManifest> {
    let started = Instant::now();
    let system = opts.config.bundle()?.to_system::<f64>()?;
    let scan = opts.config.scan()?;
    prepare(opts)?;
    let records = wedge_scan(&system, &scan.grid(), &scan.options())?;
    let rel = "scan.csv";
    let mut w = create(&opts.out, rel)?;
    write_scan_csv(&records, system.params().n(), &mut w).map_err(CliError::io(format!("writing {rel}")))?;
    finish_file(w, rel)?;
    let converged = records.iter().filter(|r| r.converged()).count();
    for r in records.iter().filter(|r| !r.converged()) {
        if let Err(e) = &r.outcome {
            log::info!("scan point ({}, {}) failed: {e}", r.row, r.col);
        }
    }
    let summary = json!({ "points": records.len(), "converged": converged });
    seal(opts, "scan", started, vec![rel.into()], summary)
}

fn snapshot_name(step: u64) -> String {
    format!("snapshots/step_{step:09}.bin")
}

fn save_snapshot(dir: &Path, rel: &str, t: f64, state: &RdasState<f64>) -> spiral_anchor::Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(&path)?);
    write_snapshot(&mut w, t, &[&state.u, &state.v])?;
    w.flush()?;
    Ok(())
}

/// Runs the excitable-media experiment: `tip_path.csv`, `revolutions.csv`,
/// snapshots under `snapshots/` and the final state in `final.bin`.
pub fn cmd_rdas(opts: &RunOptions) -> CliResult<RunManifest> {
    let started = Instant::now();
    let cfg = &opts.config.rdas;
    if !cfg.cfl_ok() {
        let msg = format!("dt (4/h^2 + |a1|/h) = {:.4} exceeds 1; the explicit scheme may be unstable", cfg.cfl_number());
        eprintln!("warning: {msg}");
        if !opts.override_cfl {
            return Err(CliError::OverrideRequired(format!("{msg}; rerun with --override-cfl to proceed")));
        }
    }
    prepare(opts)?;
    let model = RdasModel::<f64>::new(cfg)?;
    let mut sim = match &opts.resume {
        None => Simulation::start(cfg)?,
        Some(path) => {
            let file = File::open(path).map_err(CliError::io(format!("opening {}", path.display())))?;
            let snap = read_snapshot(std::io::BufReader::new(file))?;
            if snap.n != cfg.n || (snap.h - cfg.h()).abs() > 1e-12 * cfg.h() {
                return Err(CliError::Config(format!(
                    "snapshot grid (N = {}, h = {}) does not match the configured grid (N = {}, h = {})",
                    snap.n,
                    snap.h,
                    cfg.n,
                    cfg.h()
                )));
            }
            let state = snap.to_state(model.origin, cfg.dt)?;
            Simulation::new(cfg, model, state)?
        }
    };

    let mut files = Vec::new();
    let stride = cfg.snapshot_stride;
    let dt = cfg.dt;
    let out = opts.out.clone();
    let mut written = Vec::new();
    sim.advance_to(cfg.steps(), |state| {
        if stride > 0 && state.step % stride == 0 {
            let rel = snapshot_name(state.step);
            save_snapshot(&out, &rel, dt * state.step as f64, state)?;
            written.push(rel);
        }
        Ok(())
    })?;
    files.extend(written);
    let t_final = sim.time();
    let start_step = sim.path.samples.first().map(|s| s.step);
    let (path, state) = sim.finish(cfg.late_fraction)?;
    save_snapshot(&opts.out, "final.bin", t_final, &state)?;
    files.push("final.bin".into());

    let rel = "tip_path.csv";
    let mut w = create(&opts.out, rel)?;
    path.write_csv(&mut w).map_err(CliError::io(format!("writing {rel}")))?;
    finish_file(w, rel)?;
    files.push(rel.into());

    let rel = "revolutions.csv";
    let mut w = create(&opts.out, rel)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "t_start,t_end,center_x1,center_x2")?;
        for r in &path.revolutions {
            writeln!(w, "{:e},{:e},{:e},{:e}", r.t_start, r.t_end, r.center.0, r.center.1)?;
        }
        Ok(())
    })()
    .map_err(CliError::io(format!("writing {rel}")))?;
    finish_file(w, rel)?;
    files.push(rel.into());

    let bump = cfg.bump_center;
    let summary = json!({
        "steps": state.step,
        "first_recorded_step": start_step,
        "tip_samples": path.samples.len(),
        "missing_tips": path.missing.len(),
        "revolutions": path.revolutions.len(),
        "loop_center": path.loop_center.map(|c| [c.0, c.1]),
        "distance_from_bump": path.loop_center.map(|c| (c.0 - bump[0]).hypot(c.1 - bump[1])),
        "center_spread_last_5": path.center_spread(5),
        "h": cfg.h(),
    });
    seal(opts, "rdas", started, files, summary)
}
