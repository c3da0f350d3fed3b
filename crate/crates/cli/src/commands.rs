use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use rydbroad_core::fitting::{collapse, fit_exp_decay, fit_lorentzian, Family, Volumes};
use rydbroad_core::io::{
    digest, read_measurements, read_spectrum, read_text, read_trace, write_collapse, write_json, write_predictions,
    write_timeseries, FitReport, OperatingPointRecord, PredictionRow, RunManifest, SimConfig,
};
use rydbroad_core::kinetics::{predict_dipole, predict_vdw, OperatingPoint};
use rydbroad_core::units::{
    angular_to_mhz, beta3, bundled_channels, load_channels, mhz_to_angular, scale_beta3_with_n, AtomicSystem,
    ContaminantChannel,
};
use serde::Serialize;

use crate::args::{
    BetaArgs, Cli, CollapseArgs, Command, FamilyArg, FitArgs, FitModel, PredictArgs, SimulateArgs, SweepArgs,
    VolumeArgs,
};

/// How a command that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    NotConverged,
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Beta(a) => beta(a),
        Command::Predict(a) => predict(cli, a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::Collapse(a) => collapse_cmd(cli, a),
    }
}

fn channels_from(path: Option<&Path>) -> Result<Vec<ContaminantChannel>> {
    Ok(match path {
        Some(p) => load_channels(p)?,
        None => bundled_channels(),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Serialize)]
struct ChannelLine {
    label: String,
    contribution_um3: f64,
}

#[derive(Serialize)]
struct BetaReport {
    beta3_um3: f64,
    beta6_um3: f64,
    n_star: f64,
    channels: Vec<ChannelLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rescaled: Option<Rescaled>,
}

#[derive(Serialize)]
struct Rescaled {
    n_star: f64,
    beta3_um3: f64,
}

fn beta(args: &BetaArgs) -> Result<Status> {
    let channels = channels_from(args.channels.as_deref())?;
    let b3 = beta3(&channels)?;
    let system = AtomicSystem::rb87_18s();
    let report = BetaReport {
        beta3_um3: b3,
        beta6_um3: system.beta6()?,
        n_star: system.n_star,
        channels: channels
            .iter()
            .map(|c| ChannelLine {
                label: c.label.clone(),
                contribution_um3: c.volume(),
            })
            .collect(),
        rescaled: args
            .nstar
            .map(|n| {
                scale_beta3_with_n(b3, system.n_star, n).map(|b| Rescaled {
                    n_star: n,
                    beta3_um3: b,
                })
            })
            .transpose()?,
    };
    let mut out = std::io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        return Ok(Status::Done);
    }
    writeln!(out, "{:<20} {:>14}", "channel", "beta3 (um^3)")?;
    for c in &report.channels {
        writeln!(out, "{:<20} {:>14.4}", c.label, c.contribution_um3)?;
    }
    writeln!(out, "beta3 = {:.3} um^3", report.beta3_um3)?;
    writeln!(out, "beta6 = {:.4} um^3", report.beta6_um3)?;
    if let Some(r) = &report.rescaled {
        writeln!(
            out,
            "beta3(n* = {}) = {:.3} um^3 (from n* = {:.4})",
            r.n_star, r.beta3_um3, report.n_star
        )?;
    }
    Ok(Status::Done)
}

fn resolved_beta3(v: &VolumeArgs) -> Result<f64> {
    match &v.channels {
        Some(p) => Ok(beta3(&load_channels(p)?)?),
        None => Ok(v.beta3),
    }
}

fn prediction_row(op: &OperatingPoint, b3: f64, system: &AtomicSystem, truth: FamilyArg) -> Result<PredictionRow> {
    let d = predict_dipole(op, b3)?;
    let v = predict_vdw(op, system.beta6()?, system.gamma0)?;
    let chosen = match truth {
        FamilyArg::Dipole => d,
        FamilyArg::Vdw => v,
    };
    Ok(PredictionRow {
        omega_MHz: angular_to_mhz(op.omega),
        delta_MHz: angular_to_mhz(op.delta),
        f: op.fraction_f,
        rho_g_um3: op.rho_g,
        gamma_MHz: angular_to_mhz(chosen.gamma),
        r0_MHz: angular_to_mhz(chosen.r0),
        gamma_dipole_MHz: angular_to_mhz(d.gamma),
        r0_dipole_MHz: angular_to_mhz(d.r0),
        gamma_vdw_MHz: angular_to_mhz(v.gamma),
        r0_vdw_MHz: angular_to_mhz(v.r0),
    })
}

fn emit_csv(output: Option<&Path>, rows: &[PredictionRow]) -> Result<()> {
    match output {
        Some(p) => {
            let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_predictions(file, rows)?;
        }
        None => write_predictions(std::io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn predict(cli: &Cli, args: &PredictArgs) -> Result<Status> {
    let record = match (args.omega_mhz, args.f, &cli.config) {
        (Some(omega), Some(f), _) => OperatingPointRecord {
            omega_MHz: omega,
            delta_MHz: args.delta_mhz,
            f,
        },
        (None, None, Some(path)) => serde_json::from_str(&read_text(path)?)
            .with_context(|| format!("parsing operating point {}", path.display()))?,
        _ => bail!("predict needs --omega-mhz and --f, or --config with an operating point JSON"),
    };
    let op = record.to_internal().context("row 1")?;
    let system = AtomicSystem::rb87_18s();
    let row = prediction_row(&op, resolved_beta3(&args.volumes)?, &system, args.volumes.truth).context("row 1")?;
    emit_csv(args.output.as_deref(), &[row])?;
    Ok(Status::Done)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        bail!("grid bounds must satisfy 0 < min <= max (got {lo}, {hi})");
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

fn sweep(args: &SweepArgs) -> Result<Status> {
    let omegas = log_grid(args.omega_min_mhz, args.omega_max_mhz, args.n_omega)?;
    let fs = log_grid(args.f_min, args.f_max, args.n_f)?;
    let b3 = resolved_beta3(&args.volumes)?;
    let system = AtomicSystem::rb87_18s();
    let mut rows = Vec::with_capacity(omegas.len() * fs.len());
    for &om in &omegas {
        for &f in &fs {
            let row = rows.len() + 1;
            let op = OperatingPoint::from_fraction(mhz_to_angular(om), mhz_to_angular(args.delta_mhz), f)
                .with_context(|| format!("row {row}"))?;
            rows.push(prediction_row(&op, b3, &system, args.volumes.truth).with_context(|| format!("row {row}"))?);
        }
    }
    emit_csv(args.output.as_deref(), &rows)?;
    Ok(Status::Done)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<Status> {
    let Some(config_path) = &cli.config else {
        bail!("simulate needs --config");
    };
    let mut cfg = SimConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = args.t_max_us {
        cfg.t_max_us = t;
    }
    cfg.validate()?;
    ensure_dir(&cli.out_dir)?;

    let started = Instant::now();
    let run = cfg.run()?;
    let wall = started.elapsed().as_secs_f64();
    info!("{} steps in {wall:.2} s", run.report.iterations);

    let series_path = cli.out_dir.join("timeseries.csv");
    let report_path = cli.out_dir.join("steady_state.json");
    write_timeseries(&series_path, &run.series)?;
    write_json(&report_path, &run.report)?;

    let mut manifest = RunManifest::new("simulate", serde_json::to_value(&cfg)?, Some(cfg.seed));
    manifest.inputs.push(digest(config_path)?);
    manifest.outputs = vec![digest(&series_path)?, digest(&report_path)?];
    manifest.wall_clock_s = wall;
    manifest.steps = Some(run.report.iterations);
    manifest.rejected_steps = Some(run.report.rejected_steps);
    write_json(&cli.out_dir.join("manifest.json"), &manifest)?;

    println!("{}", serde_json::to_string_pretty(&run.report)?);
    if run.report.converged {
        Ok(Status::Done)
    } else {
        eprintln!(
            "not converged: residual {:.3e} /us at t = {} us (tol {:e})",
            run.report.residual, run.report.time_us, cfg.tol
        );
        Ok(Status::NotConverged)
    }
}

fn manifest_for_file_command(
    cli: &Cli,
    command: &str,
    config: serde_json::Value,
    input: &Path,
    outputs: &[PathBuf],
    started: Instant,
) -> Result<()> {
    let mut m = RunManifest::new(command, config, None);
    m.inputs.push(digest(input)?);
    for o in outputs {
        m.outputs.push(digest(o)?);
    }
    m.wall_clock_s = started.elapsed().as_secs_f64();
    write_json(&cli.out_dir.join(format!("{command}_manifest.json")), &m)?;
    Ok(())
}

fn fit(cli: &Cli, args: &FitArgs) -> Result<Status> {
    let started = Instant::now();
    let (report, name) = match args.model {
        FitModel::Lorentzian => {
            let spec = read_spectrum(&args.input)?;
            let gamma0 = AtomicSystem::rb87_18s().gamma0;
            (
                FitReport::lorentzian(&fit_lorentzian(&spec)?, gamma0),
                "fit_lorentzian.json",
            )
        }
        FitModel::Decay => (
            FitReport::decay(&fit_exp_decay(&read_trace(&args.input)?)?),
            "fit_decay.json",
        ),
    };
    ensure_dir(&cli.out_dir)?;
    let out = cli.out_dir.join(name);
    write_json(&out, &report)?;
    let config = serde_json::json!({ "model": report.model, "input": args.input.display().to_string() });
    manifest_for_file_command(cli, "fit", config, &args.input, &[out], started)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}

fn collapse_cmd(cli: &Cli, args: &CollapseArgs) -> Result<Status> {
    let started = Instant::now();
    let measurements = read_measurements(&args.input)?;
    let system = AtomicSystem::rb87_18s();
    let b3 = match &args.channels {
        Some(p) => beta3(&load_channels(p)?)?,
        None => args.beta3,
    };
    let volumes = Volumes {
        beta3: b3,
        beta6: system.beta6()?,
        gamma0: system.gamma0,
    };
    let family = match args.family {
        FamilyArg::Dipole => Family::Dipole,
        FamilyArg::Vdw => Family::Vdw,
    };
    let table = collapse(&measurements, &volumes, family)?;
    ensure_dir(&cli.out_dir)?;
    let summary = write_collapse(&cli.out_dir, &table)?;
    let outputs: Vec<PathBuf> = ["collapse_width.csv", "collapse_rate.csv", "collapse_summary.json"]
        .iter()
        .map(|n| cli.out_dir.join(n))
        .collect();
    let config = serde_json::json!({
        "family": family.name(),
        "beta3_um3": volumes.beta3,
        "beta6_um3": volumes.beta6,
        "gamma0_MHz": angular_to_mhz(volumes.gamma0),
    });
    manifest_for_file_command(cli, "collapse", config, &args.input, &outputs, started)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(Status::Done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.003, 0.14, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.003).abs() < 1e-15);
        assert!((g[4] - 0.14).abs() < 1e-15);
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 2.0, 0).unwrap().is_empty());
    }
}
