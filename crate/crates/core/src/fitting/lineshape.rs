use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::solver::{self, Model, Solution, SolverOptions};
use crate::error::{Error, Result};
use crate::kinetics::OperatingPoint;

/// a / (1 + 4(δ − δ0)²/Γ²) + c with p = [a, Γ, δ0, c].
#[derive(Debug, Clone, Copy, Default)]
pub struct LorentzianModel;

impl Model for LorentzianModel {
    fn n_params(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let u = 2.0 * (x - p[2]) / p[1];
        p[0] / (1.0 + u * u) + p[3]
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (a, gamma, center) = (p[0], p[1], p[2]);
        let d = x - center;
        let u = 2.0 * d / gamma;
        let inv = 1.0 / (1.0 + u * u);
        out[0] = inv;
        out[1] = a * inv * inv * 8.0 * d * d / (gamma * gamma * gamma);
        out[2] = a * inv * inv * 8.0 * d / (gamma * gamma);
        out[3] = 1.0;
    }
}

/// a·exp(−t/τ) + c with p = [a, τ, c].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpDecayModel;

impl Model for ExpDecayModel {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2]
    }

    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-t / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * t / (p[1] * p[1]);
        out[2] = 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// rad/µs
    pub delta: f64,
    pub signal: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub meta: Option<OperatingPoint>,
}

impl Spectrum {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 4 {
            return Err(Error::invalid("a spectrum needs at least 4 points"));
        }
        if self
            .points
            .iter()
            .any(|p| !p.delta.is_finite() || !p.signal.is_finite())
        {
            return Err(Error::invalid("spectrum contains non-finite values"));
        }
        let first = self.points[0].delta;
        if self.points.iter().all(|p| p.delta == first) {
            return Err(Error::invalid("spectrum detunings are all equal"));
        }
        let with_sigma = self.points.iter().filter(|p| p.sigma.is_some()).count();
        if with_sigma != 0 && with_sigma != self.points.len() {
            return Err(Error::invalid("sigma must be given for every point or for none"));
        }
        if self.points.iter().filter_map(|p| p.sigma).any(|s| !(s > 0.0)) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.sigma.map_or(1.0, |s| 1.0 / (s * s)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    /// µs
    pub t: f64,
    pub counts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub points: Vec<DecayPoint>,
}

impl DecayTrace {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 4 {
            return Err(Error::invalid("a decay trace needs at least 4 points"));
        }
        if self
            .points
            .iter()
            .any(|p| !p.t.is_finite() || !(p.counts >= 0.0) || !p.counts.is_finite())
        {
            return Err(Error::invalid("decay trace needs finite times and non-negative counts"));
        }
        if self.points.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("decay trace times must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub chi2_reduced: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after every accepted step.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn error(&self, name: &str) -> f64 {
        self.stderr[name]
    }

    fn from_solution(names: &[&str], sol: Solution, n_points: usize) -> Self {
        let dof = n_points.saturating_sub(names.len());
        let chi2_reduced = if dof > 0 { sol.objective / dof as f64 } else { f64::NAN };
        let params = names
            .iter()
            .zip(&sol.params)
            .map(|(n, v)| (n.to_string(), *v))
            .collect();
        let stderr = names
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let var = sol.covariance.as_ref().map_or(f64::NAN, |c| c[(k, k)] * chi2_reduced);
                (n.to_string(), var.max(0.0).sqrt())
            })
            .collect();
        FitResult {
            params,
            stderr,
            chi2_reduced,
            converged: sol.converged,
            iterations: sol.iterations,
            objective_history: sol.history,
        }
    }
}

fn lorentzian_guess(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let half = ymin + 0.5 * (ymax - ymin);
    let center = xs[imax];

    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if ys[i] < half {
                let frac = (ys[prev] - half) / (ys[prev] - ys[i]);
                return Some(xs[prev] + frac * (xs[i] - xs[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..imax).rev());
    let right = crossing(&mut (imax + 1..xs.len()));
    let span = xs[xs.len() - 1] - xs[0];
    let width = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (center - l),
        (None, Some(r)) => 2.0 * (r - center),
        (None, None) => 0.5 * span,
    };
    let width = if width > 0.0 { width } else { 0.5 * span };
    [ymax - ymin, width, center, ymin]
}

/// Lorentzian fit of a spectrum. Γ is the full width at half maximum.
pub fn fit_lorentzian(spec: &Spectrum) -> Result<FitResult> {
    spec.validate()?;
    let mut pts = spec.points.clone();
    pts.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let xs: Vec<f64> = pts.iter().map(|p| p.delta).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.signal).collect();
    let weights: Vec<f64> = Spectrum {
        points: pts,
        meta: None,
    }
    .weights();
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi == lo {
        return Err(Error::Degenerate("spectrum signal is flat".into()));
    }

    let p0 = lorentzian_guess(&xs, &ys);
    let sol = solver::solve(&LorentzianModel, &xs, &ys, &weights, &p0, &SolverOptions::default());
    let mut fit = FitResult::from_solution(&["amplitude", "gamma", "center", "offset"], sol, xs.len());
    // Γ enters squared
    if let Some(g) = fit.params.get_mut("gamma") {
        *g = g.abs();
    }
    if !(fit.param("gamma") > 0.0) || !fit.param("gamma").is_finite() {
        fit.converged = false;
    }
    Ok(fit)
}

fn decay_guess(ts: &[f64], ys: &[f64]) -> [f64; 3] {
    let n = ts.len();
    let tail = (n / 10).max(1);
    let c0 = ys[n - tail..].iter().sum::<f64>() / tail as f64;
    let span = ts[n - 1] - ts[0];
    let head = ys[0] - c0;

    let mut tau = span / 3.0;
    if head > 0.0 {
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .zip(ys)
            .filter(|(_, &y)| y - c0 > 0.1 * head)
            .map(|(&t, &y)| (t, (y - c0).ln()))
            .collect();
        if pts.len() >= 2 {
            let m = pts.len() as f64;
            let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let lm = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let num: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
            let den: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
            let slope = num / den;
            if slope < 0.0 {
                tau = -1.0 / slope;
            }
        }
    }
    [head * (ts[0] / tau).exp(), tau, c0]
}

/// Exponential decay fit; τ in µs.
pub fn fit_exp_decay(trace: &DecayTrace) -> Result<FitResult> {
    trace.validate()?;
    let ts: Vec<f64> = trace.points.iter().map(|p| p.t).collect();
    let ys: Vec<f64> = trace.points.iter().map(|p| p.counts).collect();
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::Degenerate("decay trace is constant".into()));
    }
    let weights = vec![1.0; ts.len()];
    let p0 = decay_guess(&ts, &ys);
    let sol = solver::solve(&ExpDecayModel, &ts, &ys, &weights, &p0, &SolverOptions::default());
    let mut fit = FitResult::from_solution(&["amplitude", "tau", "offset"], sol, ts.len());
    let (a, tau) = (fit.param("amplitude"), fit.param("tau"));
    if !(tau > 0.0 && tau.is_finite() && a > 0.0) {
        fit.converged = false;
    }
    Ok(fit)
}

/// Γ in units of Γ0.
pub fn width_ratio(gamma_fit: f64, gamma0: f64) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(Error::domain("gamma0 must be > 0"));
    }
    Ok(gamma_fit / gamma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_angular, GAMMA0_MHZ};
    use approx::assert_relative_eq;

    fn lorentz_spec(a: f64, g: f64, d0: f64, c: f64, n: usize) -> Spectrum {
        let points = (0..n)
            .map(|i| {
                let delta = d0 - 3.0 * g + 6.0 * g * i as f64 / (n - 1) as f64;
                SpectrumPoint {
                    delta,
                    signal: LorentzianModel.value(delta, &[a, g, d0, c]),
                    sigma: None,
                }
            })
            .collect();
        Spectrum { points, meta: None }
    }

    #[test]
    fn exact_lorentzian_recovered() {
        let fit = fit_lorentzian(&lorentz_spec(2.5, 0.8, 0.3, 0.1, 31)).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.param("amplitude"), 2.5, max_relative = 1e-8);
        assert_relative_eq!(fit.param("gamma"), 0.8, max_relative = 1e-8);
        assert_relative_eq!(fit.param("center"), 0.3, max_relative = 1e-8);
        assert_relative_eq!(fit.param("offset"), 0.1, max_relative = 1e-8);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn flat_and_short_spectra_rejected() {
        let mut s = lorentz_spec(1.0, 1.0, 0.0, 0.0, 10);
        for p in &mut s.points {
            p.signal = 0.5;
        }
        assert!(matches!(fit_lorentzian(&s), Err(Error::Degenerate(_))));
        let short = Spectrum {
            points: lorentz_spec(1.0, 1.0, 0.0, 0.0, 10).points[..3].to_vec(),
            meta: None,
        };
        assert!(fit_lorentzian(&short).is_err());
        let mut mixed = lorentz_spec(1.0, 1.0, 0.0, 0.0, 10);
        mixed.points[0].sigma = Some(0.1);
        assert!(fit_lorentzian(&mixed).is_err());
    }

    #[test]
    fn exact_decay_recovered() {
        let points = (0..40)
            .map(|i| {
                let t = 0.5 * i as f64;
                DecayPoint {
                    t,
                    counts: 800.0 * (-t / 3.5).exp() + 12.0,
                }
            })
            .collect();
        let fit = fit_exp_decay(&DecayTrace { points }).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.param("tau"), 3.5, max_relative = 1e-8);
        assert_relative_eq!(fit.param("amplitude"), 800.0, max_relative = 1e-8);
        assert_relative_eq!(fit.param("offset"), 12.0, max_relative = 1e-8);
    }

    #[test]
    fn degenerate_traces() {
        let flat = DecayTrace {
            points: (0..10)
                .map(|i| DecayPoint {
                    t: i as f64,
                    counts: 5.0,
                })
                .collect(),
        };
        assert!(fit_exp_decay(&flat).is_err());
        let rising = DecayTrace {
            points: (0..20)
                .map(|i| DecayPoint {
                    t: i as f64,
                    counts: (i as f64 / 4.0).exp(),
                })
                .collect(),
        };
        assert!(!fit_exp_decay(&rising).unwrap().converged);
        let unordered = DecayTrace {
            points: vec![
                DecayPoint { t: 0.0, counts: 3.0 },
                DecayPoint { t: 2.0, counts: 2.0 },
                DecayPoint { t: 1.0, counts: 1.0 },
                DecayPoint { t: 3.0, counts: 0.0 },
            ],
        };
        assert!(fit_exp_decay(&unordered).is_err());
    }

    #[test]
    fn width_ratios() {
        let g0 = mhz_to_angular(GAMMA0_MHZ);
        assert_relative_eq!(
            width_ratio(mhz_to_angular(9.0), g0).unwrap(),
            200.0,
            max_relative = 1e-12
        );
        assert_eq!(width_ratio(g0, g0).unwrap(), 1.0);
        assert_relative_eq!(
            width_ratio(mhz_to_angular(0.135), g0).unwrap(),
            3.0,
            max_relative = 1e-12
        );
    }
}
