//! Scaling collapse of measured widths and rates onto the two broadening laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{OperatingPoint, FULL_GROUND_DENSITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dipole,
    Vdw,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Dipole => "dipole",
            Family::Vdw => "vdw",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dipole" => Ok(Family::Dipole),
            "vdw" => Ok(Family::Vdw),
            other => Err(Error::invalid(format!("unknown collapse family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Volumes {
    /// µm³
    pub beta3: f64,
    /// µm³
    pub beta6: f64,
    /// rad/µs
    pub gamma0: f64,
}

/// One measured point: operating conditions plus fitted Γ and R0 (rad/µs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub op: OperatingPoint,
    pub gamma: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub omega: f64,
    pub fraction_f: f64,
    pub x_width: f64,
    pub y_width: f64,
    pub x_rate: f64,
    pub y_rate: f64,
}

/// Ordinary least squares of log y on log x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` with only two points.
    pub slope_stderr: Option<f64>,
    pub intercept_stderr: Option<f64>,
    /// RMS of the log residuals.
    pub rms_scatter: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseTable {
    pub family: Family,
    pub rows: Vec<CollapseRow>,
    pub width_fit: LogLogFit,
    pub rate_fit: LogLogFit,
}

impl CollapseTable {
    /// Combined RMS scatter over both panels.
    pub fn total_scatter(&self) -> f64 {
        (0.5 * (self.width_fit.rms_scatter.powi(2) + self.rate_fit.rms_scatter.powi(2))).sqrt()
    }
}

fn check_volumes(v: &Volumes, family: Family) -> Result<()> {
    let needed = match family {
        Family::Dipole => v.beta3,
        Family::Vdw => v.beta6.min(v.gamma0),
    };
    if !(needed > 0.0 && needed.is_finite()) {
        return Err(Error::domain(format!(
            "{} collapse needs positive interaction volumes",
            family.name()
        )));
    }
    Ok(())
}

/// (x_width, x_rate) for an operating point; both families satisfy x_width·x_rate = Ω².
pub fn collapse_coordinates(op: &OperatingPoint, volumes: &Volumes, family: Family) -> Result<(f64, f64)> {
    check_volumes(volumes, family)?;
    if !(op.omega > 0.0 && op.rho_g > 0.0) {
        return Err(Error::domain("collapse needs omega > 0 and rho_g > 0"));
    }
    Ok(match family {
        Family::Dipole => {
            let root = (op.rho_g * volumes.beta3).sqrt();
            (op.omega * root, op.omega / root)
        }
        Family::Vdw => {
            let v23 = (op.rho_g * volumes.beta6).powf(2.0 / 3.0);
            let om2 = op.omega * op.omega;
            (
                (om2 * om2 / volumes.gamma0).cbrt() * v23,
                (om2 * volumes.gamma0).cbrt() / v23,
            )
        }
    })
}

/// Invert the collapse coordinates back to (Ω, ρg).
pub fn recover_operating_point(x_width: f64, x_rate: f64, volumes: &Volumes, family: Family) -> Result<(f64, f64)> {
    check_volumes(volumes, family)?;
    if !(x_width > 0.0 && x_rate > 0.0) {
        return Err(Error::domain("collapse coordinates must be > 0"));
    }
    let omega = (x_width * x_rate).sqrt();
    let rho = match family {
        Family::Dipole => (x_width / x_rate) / volumes.beta3,
        Family::Vdw => {
            // x_w/x_r = (Ω²/Γ0^2)^{1/3}(ρβ6)^{4/3}
            let ratio = x_width / x_rate;
            (ratio * (volumes.gamma0 * volumes.gamma0 / (omega * omega)).cbrt()).powf(0.75) / volumes.beta6
        }
    };
    Ok((omega, rho))
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("a log-log fit needs at least 2 points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("log-log fit needs finite positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = n as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all collapse x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = ss / (m - 2.0);
        (Some((s2 / sxx).sqrt()), Some((s2 * (1.0 / m + mx * mx / sxx)).sqrt()))
    } else {
        (None, None)
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        rms_scatter: (ss / m).sqrt(),
        n,
    })
}

pub fn collapse(points: &[Measurement], volumes: &Volumes, family: Family) -> Result<CollapseTable> {
    if points.len() < 2 {
        return Err(Error::invalid("collapse needs at least 2 measurements"));
    }
    let rows = points
        .iter()
        .map(|m| {
            if !(m.gamma > 0.0 && m.r0 > 0.0) {
                return Err(Error::domain("measured widths and rates must be > 0"));
            }
            let (x_width, x_rate) = collapse_coordinates(&m.op, volumes, family)?;
            Ok(CollapseRow {
                omega: m.op.omega,
                fraction_f: m.op.rho_g / FULL_GROUND_DENSITY,
                x_width,
                y_width: m.gamma,
                x_rate,
                y_rate: m.r0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&CollapseRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let width_fit = loglog_fit(&col(|r| r.x_width), &col(|r| r.y_width))?;
    let rate_fit = loglog_fit(&col(|r| r.x_rate), &col(|r| r.y_rate))?;
    Ok(CollapseTable {
        family,
        rows,
        width_fit,
        rate_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{predict_dipole, predict_vdw};
    use approx::assert_relative_eq;

    fn volumes() -> Volumes {
        Volumes {
            beta3: 116.0,
            beta6: 0.8f64.powi(6) * 0.3,
            gamma0: 0.3,
        }
    }

    fn dipole_data() -> Vec<Measurement> {
        let mut out = Vec::new();
        for &om in &[0.3, 0.6, 0.9, 1.4] {
            for &f in &[0.05, 0.2, 0.5, 1.0] {
                let op = OperatingPoint::from_fraction(om, 0.0, f).unwrap();
                let p = predict_dipole(&op, 116.0).unwrap();
                out.push(Measurement {
                    op,
                    gamma: p.gamma,
                    r0: p.r0,
                });
            }
        }
        out
    }

    #[test]
    fn dipole_data_collapses_exactly() {
        let t = collapse(&dipole_data(), &volumes(), Family::Dipole).unwrap();
        for fit in [t.width_fit, t.rate_fit] {
            assert!((fit.slope - 1.0).abs() < 1e-12);
            assert!(fit.intercept.abs() < 1e-10);
            assert!(fit.rms_scatter < 1e-12);
        }
    }

    #[test]
    fn vdw_family_misfits_dipole_data() {
        let t = collapse(&dipole_data(), &volumes(), Family::Vdw).unwrap();
        assert!((t.width_fit.slope - 0.75).abs() < 1e-9);
        assert!(t.rate_fit.rms_scatter > 1e-3);
        let d = collapse(&dipole_data(), &volumes(), Family::Dipole).unwrap();
        assert!(t.total_scatter() > d.total_scatter());
    }

    #[test]
    fn vdw_data_collapses_on_vdw_family() {
        let v = volumes();
        let pts: Vec<_> = [(0.3, 0.1), (0.7, 0.4), (1.1, 0.9)]
            .iter()
            .map(|&(om, f)| {
                let op = OperatingPoint::from_fraction(om, 0.0, f).unwrap();
                let p = predict_vdw(&op, v.beta6, v.gamma0).unwrap();
                Measurement {
                    op,
                    gamma: p.gamma,
                    r0: p.r0,
                }
            })
            .collect();
        let t = collapse(&pts, &v, Family::Vdw).unwrap();
        assert_relative_eq!(t.width_fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.rate_fit.slope, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fraction_only_scan_spans_sqrt_f() {
        let v = volumes();
        let a = collapse_coordinates(
            &OperatingPoint::from_fraction(0.5, 0.0, 0.04).unwrap(),
            &v,
            Family::Dipole,
        )
        .unwrap();
        let b = collapse_coordinates(
            &OperatingPoint::from_fraction(0.5, 0.0, 1.0).unwrap(),
            &v,
            Family::Dipole,
        )
        .unwrap();
        assert_relative_eq!(b.0 / a.0, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn coordinates_invert() {
        let v = volumes();
        for family in [Family::Dipole, Family::Vdw] {
            let op = OperatingPoint::from_fraction(0.77, 0.0, 0.35).unwrap();
            let (xw, xr) = collapse_coordinates(&op, &v, family).unwrap();
            assert_relative_eq!(xw * xr, 0.77 * 0.77, max_relative = 1e-12);
            let (om, rho) = recover_operating_point(xw, xr, &v, family).unwrap();
            assert_relative_eq!(om, 0.77, max_relative = 1e-12);
            assert_relative_eq!(rho, op.rho_g, max_relative = 1e-12);
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(collapse(&dipole_data()[..1], &volumes(), Family::Dipole).is_err());
        let two = collapse(&dipole_data()[..2], &volumes(), Family::Dipole).unwrap();
        assert!(two.width_fit.slope_stderr.is_none());
    }
}
