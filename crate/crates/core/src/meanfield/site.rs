use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<Complex64>;

/// Basis ordering of the three-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Ground = 0,
    S = 1,
    P = 2,
}

pub const G: usize = Level::Ground as usize;
pub const S: usize = Level::S as usize;
pub const P: usize = Level::P as usize;

/// Single-site density matrix over (g, s, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteState(pub Mat3);

impl SiteState {
    pub fn pure(level: Level) -> Self {
        let mut m = Mat3::zeros();
        m[(level as usize, level as usize)] = Complex64::new(1.0, 0.0);
        SiteState(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.0[(G, G)].re, self.0[(S, S)].re, self.0[(P, P)].re]
    }

    /// ⟨σ^ps⟩ = tr(ρ |p⟩⟨s|) = ρ_sp.
    pub fn ps_coherence(&self) -> Complex64 {
        self.0[(S, P)]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn trace_defect(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.0 + self.0.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().min()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Check the density-matrix invariants at the given tolerances.
    pub fn validate(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        if self.hermiticity_defect() > herm_tol {
            return Err(Error::invalid(format!(
                "density matrix not Hermitian (defect {:e})",
                self.hermiticity_defect()
            )));
        }
        if self.trace_defect() > trace_tol {
            return Err(Error::invalid(format!(
                "density matrix trace off by {:e}",
                self.trace_defect()
            )));
        }
        let lam = self.min_eigenvalue();
        if lam < -eig_tol {
            return Err(Error::invalid(format!("density matrix eigenvalue {lam:e} < 0")));
        }
        Ok(())
    }
}

/// Lindblad decay rates, rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// s → g
    pub gamma_s: f64,
    /// p → g
    pub gamma_p: f64,
    /// s → p
    pub gamma_r: f64,
}

impl Rates {
    pub fn new(gamma_s: f64, gamma_p: f64, gamma_r: f64) -> Result<Self> {
        let r = Rates {
            gamma_s,
            gamma_p,
            gamma_r,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(self.gamma_s) && ok(self.gamma_p) && ok(self.gamma_r) {
            Ok(())
        } else {
            Err(Error::invalid("decay rates must be finite and >= 0"))
        }
    }

    pub fn total(&self) -> f64 {
        self.gamma_s + self.gamma_p + self.gamma_r
    }
}

/// One random density matrix per site, ρ = AA†/tr(AA†) with complex Gaussian A.
pub fn random_init(n_sites: usize, seed: u64) -> Vec<SiteState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sites).map(|_| random_density_matrix(&mut rng)).collect()
}

fn random_density_matrix<R: Rng>(rng: &mut R) -> SiteState {
    let a = Mat3::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let m = a * a.adjoint();
    let tr = m.trace().re;
    SiteState(m.unscale(tr))
}
