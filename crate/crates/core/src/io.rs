//! File schemas: simulation configs, CSV tables and run manifests.
//!
//! Everything on disk is in MHz (ordinary frequency), µs and µm. Column
//! headers carry their units and loaders refuse headers whose units differ.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::{
    CollapseTable, DecayPoint, DecayTrace, FitResult, LogLogFit, Measurement, Spectrum, SpectrumPoint,
};
use crate::kinetics::OperatingPoint;
use crate::meanfield::{
    build_coupling_table, random_init, Boundary, LatticeConfig, Level, MeanField, Rates, SeriesRow, SiteState,
    SteadyStateOptions, SteadyStateRun,
};
use crate::units::{angular_to_mhz, mhz_to_angular, DriveParams, LATTICE_SPACING_UM};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, format!("line {}, column {}: {e}", e.line(), e.column())))
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    #[default]
    Ground,
    /// Independent random density matrix per site, drawn from `seed`.
    Random,
}

fn default_spacing() -> f64 {
    LATTICE_SPACING_UM
}
fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_tol() -> f64 {
    1e-9
}
fn default_t_max() -> f64 {
    200.0
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dims: [usize; 3],
    #[serde(default = "default_spacing")]
    pub spacing_um: f64,
    /// Defaults to five lattice spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_um: Option<f64>,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    pub omega_MHz: f64,
    pub delta_MHz: f64,
    pub gamma_s_MHz: f64,
    pub gamma_p_MHz: f64,
    pub gamma_r_MHz: f64,
    pub c3_MHz_um3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_max")]
    pub t_max_us: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_us: Option<f64>,
}

impl SimConfig {
    /// Reads a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| parse_err(path, format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("tool").is_some() => cfg.clone(),
            _ => value,
        };
        let cfg: SimConfig = serde_json::from_value(inner).map_err(|e| parse_err(path, e.to_string()))?;
        cfg.validate().map_err(|e| parse_err(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice()?;
        self.rates()?;
        DriveParams::effective(mhz_to_angular(self.omega_MHz), mhz_to_angular(self.delta_MHz))?;
        if !self.c3_MHz_um3.is_finite() {
            return Err(Error::invalid("c3_MHz_um3 must be finite"));
        }
        if let Some(dt) = self.dt_us {
            if !(dt > 0.0) {
                return Err(Error::invalid("dt_us must be > 0"));
            }
        }
        if !(self.tol > 0.0) || !(self.t_max_us >= 0.0) {
            return Err(Error::invalid("tol must be > 0 and t_max_us >= 0"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeConfig> {
        let cfg = LatticeConfig {
            dims: self.dims,
            spacing: self.spacing_um,
            quantization_axis: self.axis,
            cutoff_radius: self.cutoff_um.unwrap_or(5.0 * self.spacing_um),
            boundary: Boundary::Open,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rates(&self) -> Result<Rates> {
        Rates::new(
            mhz_to_angular(self.gamma_s_MHz),
            mhz_to_angular(self.gamma_p_MHz),
            mhz_to_angular(self.gamma_r_MHz),
        )
    }

    pub fn drive(&self) -> Result<DriveParams> {
        DriveParams::effective(mhz_to_angular(self.omega_MHz), mhz_to_angular(self.delta_MHz))
    }

    pub fn options(&self) -> SteadyStateOptions {
        SteadyStateOptions {
            tol: self.tol,
            t_max: self.t_max_us,
            dt: self.dt_us,
            sample_interval: self.sample_us,
            ..SteadyStateOptions::default()
        }
    }

    pub fn initial_states(&self) -> Vec<SiteState> {
        let n = self.dims.iter().product();
        match self.init {
            InitialState::Ground => vec![SiteState::pure(Level::Ground); n],
            InitialState::Random => random_init(n, self.seed),
        }
    }

    /// Build the lattice and integrate to steady state.
    pub fn run(&self) -> Result<SteadyStateRun> {
        self.validate()?;
        let table = build_coupling_table(&self.lattice()?, mhz_to_angular(self.c3_MHz_um3))?;
        let mf = MeanField::new(self.drive()?, &table, self.rates()?)?;
        mf.evolve(self.initial_states(), &self.options())
    }
}

// ---------------------------------------------------------------- CSV

/// Header lookup that distinguishes a missing column from one in other units.
struct Columns {
    headers: Vec<String>,
}

impl Columns {
    fn find(&self, path: &Path, name: &str) -> Result<Option<usize>> {
        if let Some(i) = self.headers.iter().position(|h| h == name) {
            return Ok(Some(i));
        }
        let base = name.rsplit_once('_').map_or(name, |(b, _)| b);
        if name.contains('_') {
            if let Some(h) = self
                .headers
                .iter()
                .find(|h| h.as_str() == base || h.rsplit_once('_').is_some_and(|(b, _)| b == base))
            {
                return Err(parse_err(
                    path,
                    format!("column '{h}' has missing or unsupported units; expected '{name}'"),
                ));
            }
        }
        Ok(None)
    }

    fn require(&self, path: &Path, name: &str) -> Result<usize> {
        self.find(path, name)?
            .ok_or_else(|| parse_err(path, format!("missing column '{name}'")))
    }
}

struct CsvTable {
    path: PathBuf,
    columns: Columns,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl CsvTable {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| parse_err(path, e.to_string()))?;
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(path, e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(CsvTable {
            path: path.to_path_buf(),
            columns: Columns { headers },
            rows,
        })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let (line, rec) = &self.rows[row];
        let name = &self.columns.headers[col];
        let raw = rec.get(col).unwrap_or("");
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            parse_err(
                &self.path,
                format!(
                    "row {} (line {line}), column '{name}': '{raw}' is not a finite number",
                    row + 1
                ),
            )
        })
    }

    fn optional_number(&self, row: usize, col: usize) -> Result<Option<f64>> {
        match self.rows[row].1.get(col) {
            None | Some("") => Ok(None),
            Some(_) => self.number(row, col).map(Some),
        }
    }
}

pub fn write_timeseries(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
    if rows.is_empty() {
        w.write_record(["t_us", "pop_g", "pop_s", "pop_p", "max_ps_coherence", "residual"])
            .map_err(|e| parse_err(path, e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| parse_err(path, e.to_string()))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Operating-point sidecar of a spectrum file, in file units.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointRecord {
    pub omega_MHz: f64,
    #[serde(default)]
    pub delta_MHz: f64,
    pub f: f64,
}

impl OperatingPointRecord {
    pub fn to_internal(self) -> Result<OperatingPoint> {
        OperatingPoint::from_fraction(mhz_to_angular(self.omega_MHz), mhz_to_angular(self.delta_MHz), self.f)
    }
}

/// `spectrum.csv` → `spectrum.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let t = CsvTable::read(path)?;
    let cd = t.columns.require(path, "delta_MHz")?;
    let cs = t.columns.require(path, "signal")?;
    let csig = t.columns.find(path, "sigma")?;
    let mut points = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        points.push(SpectrumPoint {
            delta: mhz_to_angular(t.number(i, cd)?),
            signal: t.number(i, cs)?,
            sigma: match csig {
                Some(c) => t.optional_number(i, c)?,
                None => None,
            },
        });
    }
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let rec: OperatingPointRecord = read_json(&side)?;
        Some(rec.to_internal().map_err(|e| parse_err(&side, e.to_string()))?)
    } else {
        None
    };
    Ok(Spectrum { points, meta })
}

pub fn write_spectrum(path: &Path, spec: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
    let with_sigma = spec.points.iter().any(|p| p.sigma.is_some());
    let header: &[&str] = if with_sigma {
        &["delta_MHz", "signal", "sigma"]
    } else {
        &["delta_MHz", "signal"]
    };
    w.write_record(header).map_err(|e| parse_err(path, e.to_string()))?;
    for p in &spec.points {
        let mut rec = vec![angular_to_mhz(p.delta).to_string(), p.signal.to_string()];
        if with_sigma {
            rec.push(p.sigma.map(|s| s.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).map_err(|e| parse_err(path, e.to_string()))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    if let Some(op) = spec.meta {
        let rec = OperatingPointRecord {
            omega_MHz: angular_to_mhz(op.omega),
            delta_MHz: angular_to_mhz(op.delta),
            f: op.fraction_f,
        };
        write_json(&sidecar_path(path), &rec)?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<DecayTrace> {
    let t = CsvTable::read(path)?;
    let ct = t.columns.require(path, "t_us")?;
    let cc = t.columns.require(path, "counts")?;
    let points = (0..t.rows.len())
        .map(|i| {
            Ok(DecayPoint {
                t: t.number(i, ct)?,
                counts: t.number(i, cc)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DecayTrace { points })
}

pub fn write_trace(path: &Path, trace: &DecayTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
    w.write_record(["t_us", "counts"])
        .map_err(|e| parse_err(path, e.to_string()))?;
    for p in &trace.points {
        w.write_record([p.t.to_string(), p.counts.to_string()])
            .map_err(|e| parse_err(path, e.to_string()))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Rows of the prediction table written by `predict` and `sweep`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub omega_MHz: f64,
    pub delta_MHz: f64,
    pub f: f64,
    pub rho_g_um3: f64,
    /// Width and rate used as "measured" values by `collapse`.
    pub gamma_MHz: f64,
    pub r0_MHz: f64,
    pub gamma_dipole_MHz: f64,
    pub r0_dipole_MHz: f64,
    pub gamma_vdw_MHz: f64,
    pub r0_vdw_MHz: f64,
}

pub const PREDICTION_HEADER: [&str; 10] = [
    "omega_MHz",
    "delta_MHz",
    "f",
    "rho_g_um3",
    "gamma_MHz",
    "r0_MHz",
    "gamma_dipole_MHz",
    "r0_dipole_MHz",
    "gamma_vdw_MHz",
    "r0_vdw_MHz",
];

pub fn write_predictions<W: std::io::Write>(out: W, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let fail = |e: csv::Error| Error::invalid(format!("writing CSV: {e}"));
    w.write_record(PREDICTION_HEADER).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("writing CSV: {e}")))
}

/// Collapse input: omega_MHz, f, gamma_MHz, r0_MHz (delta_MHz optional); other columns ignored.
pub fn read_measurements(path: &Path) -> Result<Vec<Measurement>> {
    let t = CsvTable::read(path)?;
    let co = t.columns.require(path, "omega_MHz")?;
    let cf = t.columns.require(path, "f")?;
    let cg = t.columns.require(path, "gamma_MHz")?;
    let cr = t.columns.require(path, "r0_MHz")?;
    let cd = t.columns.find(path, "delta_MHz")?;
    (0..t.rows.len())
        .map(|i| {
            let delta = match cd {
                Some(c) => t.optional_number(i, c)?.unwrap_or(0.0),
                None => 0.0,
            };
            let op = OperatingPoint::from_fraction(
                mhz_to_angular(t.number(i, co)?),
                mhz_to_angular(delta),
                t.number(i, cf)?,
            )
            .map_err(|e| parse_err(path, format!("row {}: {e}", i + 1)))?;
            Ok(Measurement {
                op,
                gamma: mhz_to_angular(t.number(i, cg)?),
                r0: mhz_to_angular(t.number(i, cr)?),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSummary {
    pub family: String,
    pub n_points: usize,
    /// Fits of the MHz-valued columns.
    pub width: LogLogFit,
    pub rate: LogLogFit,
    pub total_scatter: f64,
}

/// Writes `collapse_width.csv`, `collapse_rate.csv` and `collapse_summary.json` into `dir`.
pub fn write_collapse(dir: &Path, table: &CollapseTable) -> Result<CollapseSummary> {
    let family = table.family.name();
    let mhz = |rows: &[(f64, f64)]| -> Result<LogLogFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .map(|&(x, y)| (angular_to_mhz(x), angular_to_mhz(y)))
            .unzip();
        crate::fitting::loglog_fit(&x, &y)
    };
    let mut fits = Vec::new();
    for (name, pick) in [
        (
            "collapse_width.csv",
            (|r: &crate::fitting::CollapseRow| (r.x_width, r.y_width)) as fn(&_) -> _,
        ),
        ("collapse_rate.csv", |r| (r.x_rate, r.y_rate)),
    ] {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| parse_err(&path, e.to_string()))?;
        w.write_record(["x", "y", "omega_MHz", "f", "family"])
            .map_err(|e| parse_err(&path, e.to_string()))?;
        let mut xy = Vec::new();
        for r in &table.rows {
            let (x, y) = pick(r);
            xy.push((x, y));
            w.write_record([
                angular_to_mhz(x).to_string(),
                angular_to_mhz(y).to_string(),
                angular_to_mhz(r.omega).to_string(),
                r.fraction_f.to_string(),
                family.to_string(),
            ])
            .map_err(|e| parse_err(&path, e.to_string()))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        fits.push(mhz(&xy)?);
    }
    let (width, rate) = (fits[0], fits[1]);
    let summary = CollapseSummary {
        family: family.to_string(),
        n_points: table.rows.len(),
        total_scatter: (0.5 * (width.rms_scatter.powi(2) + rate.rms_scatter.powi(2))).sqrt(),
        width,
        rate,
    };
    write_json(&dir.join("collapse_summary.json"), &summary)?;
    Ok(summary)
}

/// Fit parameters converted to file units: rad/µs quantities become MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub chi2_reduced: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_over_gamma0: Option<f64>,
}

impl FitReport {
    pub fn lorentzian(fit: &FitResult, gamma0: f64) -> Self {
        let conv = |m: &BTreeMap<String, f64>| -> BTreeMap<String, f64> {
            m.iter()
                .map(|(k, &v)| match k.as_str() {
                    "gamma" | "center" => (format!("{k}_MHz"), angular_to_mhz(v)),
                    _ => (k.clone(), v),
                })
                .collect()
        };
        FitReport {
            model: "lorentzian".into(),
            params: conv(&fit.params),
            stderr: conv(&fit.stderr),
            chi2_reduced: fit.chi2_reduced,
            converged: fit.converged,
            iterations: fit.iterations,
            gamma_over_gamma0: crate::fitting::width_ratio(fit.param("gamma"), gamma0).ok(),
        }
    }

    pub fn decay(fit: &FitResult) -> Self {
        let conv = |m: &BTreeMap<String, f64>| -> BTreeMap<String, f64> {
            m.iter()
                .map(|(k, &v)| {
                    if k == "tau" {
                        ("tau_us".to_string(), v)
                    } else {
                        (k.clone(), v)
                    }
                })
                .collect()
        };
        FitReport {
            model: "decay".into(),
            params: conv(&fit.params),
            stderr: conv(&fit.stderr),
            chi2_reduced: fit.chi2_reduced,
            converged: fit.converged,
            iterations: fit.iterations,
            gamma_over_gamma0: None,
        }
    }
}

// ---------------------------------------------------------------- manifest

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected_steps: Option<u32>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            tool: "rydbroad".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            steps: None,
            rejected_steps: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Paths of recorded outputs whose current contents differ from the recorded hash.
    pub fn changed_outputs(&self) -> Result<Vec<String>> {
        let mut changed = Vec::new();
        for d in &self.outputs {
            if sha256_file(Path::new(&d.path))? != d.sha256 {
                changed.push(d.path.clone());
            }
        }
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn sample_config() -> SimConfig {
        serde_json::from_str(
            r#"{"dims":[2,1,1],"omega_MHz":0.14,"delta_MHz":0.0,"gamma_s_MHz":0.036,
                "gamma_p_MHz":0.025,"gamma_r_MHz":0.009,"c3_MHz_um3":1.0,"t_max_us":5.0}"#,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_and_unknown_fields() {
        let cfg = sample_config();
        assert_eq!(cfg.spacing_um, LATTICE_SPACING_UM);
        assert_eq!(cfg.tol, 1e-9);
        assert_relative_eq!(cfg.lattice().unwrap().cutoff_radius, 5.0 * LATTICE_SPACING_UM);
        assert_relative_eq!(cfg.drive().unwrap().omega, 2.0 * std::f64::consts::PI * 0.14);
        let bad = r#"{"dims":[1,1,1],"omega_kHz":140,"delta_MHz":0,"gamma_s_MHz":0.036,
            "gamma_p_MHz":0.02,"gamma_r_MHz":0.009,"c3_MHz_um3":1}"#;
        assert!(serde_json::from_str::<SimConfig>(bad).is_err());
    }

    #[test]
    fn config_loads_from_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = sample_config();
        let m = RunManifest::new("simulate", serde_json::to_value(&cfg).unwrap(), Some(0));
        let p = dir.path().join("manifest.json");
        write_json(&p, &m).unwrap();
        assert_eq!(SimConfig::load(&p).unwrap(), cfg);
    }

    #[test]
    fn spectrum_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let spec = Spectrum {
            points: (0..5)
                .map(|i| SpectrumPoint {
                    delta: mhz_to_angular(i as f64 * 0.1),
                    signal: i as f64,
                    sigma: Some(0.5),
                })
                .collect(),
            meta: Some(OperatingPoint::from_fraction(mhz_to_angular(0.14), 0.0, 0.5).unwrap()),
        };
        let p = dir.path().join("s.csv");
        write_spectrum(&p, &spec).unwrap();
        let back = read_spectrum(&p).unwrap();
        assert_eq!(back.points.len(), 5);
        for (a, b) in back.points.iter().zip(&spec.points) {
            assert_relative_eq!(a.delta, b.delta, max_relative = 1e-14);
            assert_eq!(a.sigma, b.sigma);
        }
        assert_relative_eq!(back.meta.unwrap().omega, spec.meta.unwrap().omega, max_relative = 1e-14);
    }

    #[test]
    fn schema_errors_name_column_and_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "delta_MHz,signal\n0.1,1\n0.2,oops\n");
        let msg = read_spectrum(&p).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("'signal'"), "{msg}");

        let p = write(dir.path(), "b.csv", "delta_kHz,signal\n0.1,1\n");
        let msg = read_spectrum(&p).unwrap_err().to_string();
        assert!(msg.contains("delta_kHz") && msg.contains("units"), "{msg}");

        let p = write(dir.path(), "c.csv", "t_us\n0.1\n");
        let msg = read_trace(&p).unwrap_err().to_string();
        assert!(msg.contains("missing column 'counts'"), "{msg}");
    }

    #[test]
    fn measurements_ignore_extra_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.csv",
            "omega_MHz,f,gamma_MHz,r0_MHz,note_x\n0.1,0.5,1.0,0.01,7\n",
        );
        let m = read_measurements(&p).unwrap();
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m[0].op.rho_g, 28.5);
    }

    #[test]
    fn hashes_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.txt", "abc");
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
