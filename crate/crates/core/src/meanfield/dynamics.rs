use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::CouplingTable;
use super::site::{Mat3, Rates, SiteState, G, P, S};
use crate::error::{Error, Result};
use crate::units::DriveParams;

/// Per-step trace drift above which a step is rejected.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
/// Density-matrix entries are bounded by 1; this much overshoot means the step blew up.
const AMPLITUDE_LIMIT: f64 = 1.0 + 1e-3;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lookup of neighbour coherences ⟨σ_j^ps⟩ by site index.
pub trait CoherenceSource {
    fn coherence(&self, site: usize) -> Option<Complex64>;
}

impl CoherenceSource for [Complex64] {
    fn coherence(&self, site: usize) -> Option<Complex64> {
        self.get(site).copied()
    }
}

impl CoherenceSource for Vec<Complex64> {
    fn coherence(&self, site: usize) -> Option<Complex64> {
        self.get(site).copied()
    }
}

impl CoherenceSource for HashMap<usize, Complex64> {
    fn coherence(&self, site: usize) -> Option<Complex64> {
        self.get(&site).copied()
    }
}

impl CoherenceSource for BTreeMap<usize, Complex64> {
    fn coherence(&self, site: usize) -> Option<Complex64> {
        self.get(&site).copied()
    }
}

/// −δσ^ss + (Ω/2)(σ^sg + σ^gs) + field·σ^sp + h.c.
pub fn local_hamiltonian(omega: f64, delta: f64, field: Complex64) -> Mat3 {
    let mut h = Mat3::zeros();
    h[(S, S)] = Complex64::new(-delta, 0.0);
    h[(S, G)] = Complex64::new(0.5 * omega, 0.0);
    h[(G, S)] = Complex64::new(0.5 * omega, 0.0);
    h[(S, P)] = field;
    h[(P, S)] = field.conj();
    h
}

/// Mean-field Hamiltonian of one site given its neighbours' ⟨σ^ps⟩.
pub fn effective_hamiltonian<C>(site: usize, drive: &DriveParams, table: &CouplingTable, coherences: &C) -> Result<Mat3>
where
    C: CoherenceSource + ?Sized,
{
    if site >= table.n_sites() {
        return Err(Error::invalid(format!(
            "site {site} outside a {}-site table",
            table.n_sites()
        )));
    }
    let mut field = Complex64::new(0.0, 0.0);
    for (j, v) in table.row(site) {
        let c = coherences
            .coherence(j)
            .ok_or(Error::MissingCoherence { site, neighbor: j })?;
        field += c * v;
    }
    Ok(local_hamiltonian(drive.omega, drive.delta, field))
}

/// Adds rate·D[|to⟩⟨from|]ρ to `out`.
#[inline]
fn dissipate(out: &mut Mat3, rho: &Mat3, from: usize, to: usize, rate: f64) {
    if rate == 0.0 {
        return;
    }
    out[(to, to)] += rho[(from, from)] * rate;
    let half = 0.5 * rate;
    for k in 0..3 {
        out[(from, k)] -= rho[(from, k)] * half;
        out[(k, from)] -= rho[(k, from)] * half;
    }
}

#[inline]
fn rhs(rho: &Mat3, h: &Mat3, rates: &Rates) -> Mat3 {
    let mut out = (h * rho - rho * h) * (-I);
    dissipate(&mut out, rho, S, G, rates.gamma_s);
    dissipate(&mut out, rho, P, G, rates.gamma_p);
    dissipate(&mut out, rho, S, P, rates.gamma_r);
    out
}

/// dρ/dt = −i[H, ρ] + Γs D[σ^gs]ρ + Γp D[σ^gp]ρ + Γr D[σ^ps]ρ.
pub fn lindblad_rhs(rho: &SiteState, h_eff: &Mat3, rates: &Rates) -> Mat3 {
    rhs(&rho.0, h_eff, rates)
}

/// Drive, couplings and rates of a mean-field lattice.
#[derive(Debug, Clone, Copy)]
pub struct MeanField<'a> {
    pub drive: DriveParams,
    pub table: &'a CouplingTable,
    pub rates: Rates,
}

impl<'a> MeanField<'a> {
    pub fn new(drive: DriveParams, table: &'a CouplingTable, rates: Rates) -> Result<Self> {
        rates.validate()?;
        Ok(MeanField { drive, table, rates })
    }

    /// Right-hand side for every site. All sites read the same input coherences.
    fn derivative(&self, states: &[Mat3]) -> Vec<Mat3> {
        let coherences: Vec<Complex64> = states.iter().map(|m| m[(S, P)]).collect();
        states
            .par_iter()
            .enumerate()
            .with_min_len(8)
            .map(|(i, rho)| {
                let mut field = Complex64::new(0.0, 0.0);
                for (j, v) in self.table.row(i) {
                    field += coherences[j] * v;
                }
                let h = local_hamiltonian(self.drive.omega, self.drive.delta, field);
                rhs(rho, &h, &self.rates)
            })
            .collect()
    }

    /// 0.01 / max(|δ|, Ω, max|V|, Γ_total).
    pub fn default_dt(&self) -> f64 {
        let scale = self
            .drive
            .delta
            .abs()
            .max(self.drive.omega)
            .max(self.table.max_abs())
            .max(self.rates.total());
        if scale > 0.0 {
            0.01 / scale
        } else {
            0.01
        }
    }

    fn advance(&self, y: &[Mat3], k1: &[Mat3], dt: f64, t: f64) -> Result<Vec<Mat3>> {
        let axpy = |base: &[Mat3], k: &[Mat3], h: f64| -> Vec<Mat3> {
            base.iter()
                .zip(k)
                .map(|(b, d)| b + d * Complex64::new(h, 0.0))
                .collect()
        };
        let k2 = self.derivative(&axpy(y, k1, 0.5 * dt));
        let k3 = self.derivative(&axpy(y, &k2, 0.5 * dt));
        let k4 = self.derivative(&axpy(y, &k3, dt));
        let w = Complex64::new(dt / 6.0, 0.0);
        let two = Complex64::new(2.0, 0.0);
        let next: Vec<Mat3> = (0..y.len())
            .map(|i| y[i] + (k1[i] + k2[i] * two + k3[i] * two + k4[i]) * w)
            .collect();

        for (i, (old, new)) in y.iter().zip(&next).enumerate() {
            let drift = (new.trace() - old.trace()).norm();
            let finite = new.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite || drift > TRACE_DRIFT_LIMIT {
                return Err(Error::StepRejected {
                    time_us: t,
                    dt_us: dt,
                    reason: format!("site {i}: trace drift {drift:e}"),
                });
            }
            let amp = new.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            if amp > AMPLITUDE_LIMIT {
                return Err(Error::StepRejected {
                    time_us: t,
                    dt_us: dt,
                    reason: format!("site {i}: density-matrix entry {amp:.3e} exceeds 1"),
                });
            }
        }
        Ok(next)
    }

    /// One classical RK4 step of the whole lattice.
    pub fn step(&self, states: &[SiteState], dt: f64) -> Result<Vec<SiteState>> {
        if !(dt > 0.0) {
            return Err(Error::domain("time step must be > 0"));
        }
        self.check_size(states.len())?;
        let y: Vec<Mat3> = states.iter().map(|s| s.0).collect();
        let k1 = self.derivative(&y);
        Ok(self.advance(&y, &k1, dt, 0.0)?.into_iter().map(SiteState).collect())
    }

    fn check_size(&self, n: usize) -> Result<()> {
        if n != self.table.n_sites() {
            return Err(Error::invalid(format!(
                "{n} site states for a {}-site coupling table",
                self.table.n_sites()
            )));
        }
        Ok(())
    }
}

pub fn rk4_step(
    states: &[SiteState],
    dt: f64,
    drive: &DriveParams,
    table: &CouplingTable,
    rates: &Rates,
) -> Result<Vec<SiteState>> {
    MeanField::new(*drive, table, *rates)?.step(states, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    /// Residual threshold on max site ‖dρ/dt‖_F, 1/µs.
    pub tol: f64,
    pub t_max: f64,
    /// Fixed step; `None` picks [`MeanField::default_dt`].
    pub dt: Option<f64>,
    /// Steps between convergence checks.
    pub check_every: usize,
    /// Consecutive sub-tolerance checks required.
    pub sustain: usize,
    /// Spacing of time-series rows, µs; `None` gives about 500 rows.
    pub sample_interval: Option<f64>,
    /// How many times a rejected step may be retried at half the step.
    pub max_halvings: u32,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            tol: 1e-9,
            t_max: 200.0,
            dt: None,
            check_every: 10,
            sustain: 10,
            sample_interval: None,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t_us: f64,
    pub pop_g: f64,
    pub pop_s: f64,
    pub pop_p: f64,
    pub max_ps_coherence: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub converged: bool,
    /// max over sites of |⟨σ^ps⟩|
    pub max_ps_coherence: f64,
    /// Lattice-averaged (g, s, p) populations.
    pub populations: [f64; 3],
    pub iterations: u64,
    /// max over sites of ‖dρ/dt‖_F at the final state, 1/µs
    pub residual: f64,
    pub time_us: f64,
    pub dt_us: f64,
    pub rejected_steps: u32,
    /// Worst |tr ρ − 1| seen at any check.
    pub max_trace_defect: f64,
    /// Worst ‖ρ − ρ†‖_max seen at any check.
    pub max_hermiticity_defect: f64,
    /// Smallest eigenvalue over sites of the final state.
    pub min_eigenvalue: f64,
    /// Largest per-site Σ|V| beyond the cutoff radius, rad/µs.
    pub cutoff_tail: f64,
}

#[derive(Debug, Clone)]
pub struct SteadyStateRun {
    pub report: SteadyStateReport,
    pub states: Vec<SiteState>,
    pub series: Vec<SeriesRow>,
}

fn frobenius(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn summarize(t: f64, states: &[Mat3], k: &[Mat3]) -> SeriesRow {
    let n = states.len() as f64;
    let mut pops = [0.0; 3];
    let mut max_c: f64 = 0.0;
    for m in states {
        pops[0] += m[(G, G)].re;
        pops[1] += m[(S, S)].re;
        pops[2] += m[(P, P)].re;
        max_c = max_c.max(m[(S, P)].norm());
    }
    SeriesRow {
        t_us: t,
        pop_g: pops[0] / n,
        pop_s: pops[1] / n,
        pop_p: pops[2] / n,
        max_ps_coherence: max_c,
        residual: k.iter().map(frobenius).fold(0.0, f64::max),
    }
}

pub fn evolve_to_steady_state(
    init: Vec<SiteState>,
    drive: &DriveParams,
    table: &CouplingTable,
    rates: &Rates,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateRun> {
    MeanField::new(*drive, table, *rates)?.evolve(init, opts)
}

impl MeanField<'_> {
    /// Integrate until the residual stays below `opts.tol` or `opts.t_max` is reached.
    pub fn evolve(&self, init: Vec<SiteState>, opts: &SteadyStateOptions) -> Result<SteadyStateRun> {
        if !(opts.tol > 0.0) {
            return Err(Error::domain("steady-state tolerance must be > 0"));
        }
        if !(opts.t_max >= 0.0) {
            return Err(Error::domain("t_max must be >= 0"));
        }
        self.check_size(init.len())?;
        let mut dt = opts.dt.unwrap_or_else(|| self.default_dt());
        if !(dt > 0.0) {
            return Err(Error::domain("time step must be > 0"));
        }
        let sample_every = opts.sample_interval.unwrap_or(opts.t_max / 500.0).max(dt);
        let check_every = opts.check_every.max(1) as u64;

        let mut y: Vec<Mat3> = init.into_iter().map(|s| s.0).collect();
        let mut k1 = self.derivative(&y);
        let mut t = 0.0;
        let mut steps: u64 = 0;
        let mut rejected = 0u32;
        let mut below = 0usize;
        let mut converged = false;
        let mut max_trace: f64 = 0.0;
        let mut max_herm: f64 = 0.0;
        let mut series = Vec::new();
        let mut next_sample = 0.0;

        loop {
            let at_check = steps.is_multiple_of(check_every);
            if at_check {
                for m in &y {
                    let s = SiteState(*m);
                    max_trace = max_trace.max(s.trace_defect());
                    max_herm = max_herm.max(s.hermiticity_defect());
                }
                let residual = k1.iter().map(frobenius).fold(0.0, f64::max);
                if residual < opts.tol {
                    below += 1;
                    if below >= opts.sustain.max(1) {
                        converged = true;
                    }
                } else {
                    below = 0;
                }
            }
            if t >= next_sample || converged {
                series.push(summarize(t, &y, &k1));
                next_sample += sample_every;
            }
            if converged || t >= opts.t_max - 0.5 * dt {
                break;
            }

            let next = loop {
                match self.advance(&y, &k1, dt, t) {
                    Ok(next) => break next,
                    Err(err @ Error::StepRejected { .. }) => {
                        rejected += 1;
                        if rejected > opts.max_halvings {
                            log::error!("giving up after {rejected} rejected steps: {err}");
                            return Err(err);
                        }
                        log::warn!("{err}; retrying with dt = {:e} us", dt / 2.0);
                        dt *= 0.5;
                    }
                    Err(err) => return Err(err),
                }
            };
            y = next;
            t += dt;
            steps += 1;
            k1 = self.derivative(&y);
        }

        let last = summarize(t, &y, &k1);
        if series.last().map(|r| r.t_us) != Some(t) {
            series.push(last);
        }
        let states: Vec<SiteState> = y.into_iter().map(SiteState).collect();
        for s in &states {
            max_trace = max_trace.max(s.trace_defect());
            max_herm = max_herm.max(s.hermiticity_defect());
        }
        let min_eig = states
            .iter()
            .map(SiteState::min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let report = SteadyStateReport {
            converged,
            max_ps_coherence: last.max_ps_coherence,
            populations: [last.pop_g, last.pop_s, last.pop_p],
            iterations: steps,
            residual: last.residual,
            time_us: t,
            dt_us: dt,
            rejected_steps: rejected,
            max_trace_defect: max_trace,
            max_hermiticity_defect: max_herm,
            min_eigenvalue: min_eig,
            cutoff_tail: self.table.truncated_tail(),
        };
        Ok(SteadyStateRun { report, states, series })
    }
}
