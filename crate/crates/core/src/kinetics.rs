//! Closed-form broadening laws and timescales.
//!
//! Widths are full widths at half maximum in rad/µs. Resonant rates R0 are
//! carried in the same angular units as Ω so that Γ·R0 = Ω² holds without
//! stray factors of 2π; files report both divided by 2π.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::AtomicSystem;

/// Ground-state density at full participation (f = 1), µm⁻³.
pub const FULL_GROUND_DENSITY: f64 = 57.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// rad/µs
    pub omega: f64,
    /// rad/µs
    pub delta: f64,
    /// µm⁻³
    pub rho_g: f64,
    pub fraction_f: f64,
}

impl OperatingPoint {
    /// ρg = f × 57 µm⁻³.
    pub fn from_fraction(omega: f64, delta: f64, fraction_f: f64) -> Result<Self> {
        let op = OperatingPoint {
            omega,
            delta,
            rho_g: fraction_f * FULL_GROUND_DENSITY,
            fraction_f,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(
                "operating point needs finite omega >= 0 and finite delta",
            ));
        }
        if !(self.rho_g.is_finite() && self.rho_g >= 0.0) {
            return Err(Error::invalid("ground density must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.fraction_f) {
            return Err(Error::invalid("participating fraction f must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Predicted linewidth and resonant excitation rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub gamma: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateDensities {
    /// µm⁻³
    pub rho_s: f64,
    /// (channel label, µm⁻³)
    pub rho_np: Vec<(String, f64)>,
}

/// R0 / (1 + 4δ²/Γ²).
pub fn lorentzian_rate(delta: f64, r0: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain("Lorentzian width must be > 0"));
    }
    if r0 < 0.0 {
        return Err(Error::domain("peak rate must be >= 0"));
    }
    let x = 2.0 * delta / gamma;
    Ok(r0 / (1.0 + x * x))
}

/// Resonant dipole broadening: Γ = Ω√(ρgβ3), R0 = Ω/√(ρgβ3).
pub fn predict_dipole(op: &OperatingPoint, beta3: f64) -> Result<Prediction> {
    let volume = op.rho_g * beta3;
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::domain("dipole prediction needs rho_g * beta3 > 0"));
    }
    let root = volume.sqrt();
    Ok(Prediction {
        gamma: op.omega * root,
        r0: op.omega / root,
    })
}

/// van der Waals broadening: Γ = (Ω⁴/Γ0)^⅓(ρgβ6)^⅔, R0 = (Ω²Γ0)^⅓(ρgβ6)^−⅔.
pub fn predict_vdw(op: &OperatingPoint, beta6: f64, gamma0: f64) -> Result<Prediction> {
    let volume = op.rho_g * beta6;
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::domain("van der Waals prediction needs rho_g * beta6 > 0"));
    }
    if !(gamma0 > 0.0) {
        return Err(Error::domain("gamma0 must be > 0"));
    }
    let om2 = op.omega * op.omega;
    let v23 = volume.powf(2.0 / 3.0);
    Ok(Prediction {
        gamma: (om2 * om2 / gamma0).cbrt() * v23,
        r0: (om2 * gamma0).cbrt() / v23,
    })
}

/// ρ_s = ρg·R0/Γ0 and ρ_np = ρg·R0·b_np/Γ_np.
pub fn steady_state_densities(op: &OperatingPoint, r0: f64, system: &AtomicSystem) -> Result<SteadyStateDensities> {
    if !(r0 >= 0.0) {
        return Err(Error::domain("excitation rate must be >= 0"));
    }
    if !(system.gamma0 > 0.0) {
        return Err(Error::domain("gamma0 must be > 0"));
    }
    let flux = op.rho_g * r0;
    Ok(SteadyStateDensities {
        rho_s: flux / system.gamma0,
        rho_np: system
            .channels
            .iter()
            .map(|c| (c.label.clone(), flux * c.branching / c.gamma_np))
            .collect(),
    })
}

/// Σ|C3|·ρ_np, the dipole width scale implied by a set of contaminant densities.
pub fn dipole_width_from_densities(densities: &SteadyStateDensities, system: &AtomicSystem) -> f64 {
    system
        .channels
        .iter()
        .zip(&densities.rho_np)
        .map(|(c, (_, rho))| c.c3_abs * rho)
        .sum()
}

/// Far-detuned single-atom scattering time 4δ²/(Γ0Ω²), µs.
pub fn scattering_time(delta: f64, omega: f64, gamma0: f64) -> Result<f64> {
    if !(omega > 0.0) || !(gamma0 > 0.0) {
        return Err(Error::domain("scattering time needs omega > 0 and gamma0 > 0"));
    }
    if delta.abs() < 10.0 * omega.max(gamma0) {
        log::warn!(
            "scattering time at |delta| = {} rad/us is outside the far-detuned regime (omega = {}, gamma0 = {})",
            delta.abs(),
            omega,
            gamma0
        );
    }
    Ok(4.0 * delta * delta / (gamma0 * omega * omega))
}

/// Expected wait τs/(b·N0) for the first contaminant atom, µs.
pub fn first_contaminant_time(tau_s: f64, b: f64, n0: f64) -> Result<f64> {
    if !(b > 0.0) || !(n0 >= 1.0) {
        return Err(Error::domain("first-contaminant time needs b > 0 and N0 >= 1"));
    }
    Ok(tau_s / (b * n0))
}

/// Contaminant density Ω²/(|δ|C3) above which one contaminant out-couples a dressed pair, µm⁻³.
pub fn dressing_threshold(omega: f64, delta: f64, c3: f64) -> Result<f64> {
    if delta == 0.0 || !(c3 > 0.0) {
        return Err(Error::domain("dressing threshold needs delta != 0 and c3 > 0"));
    }
    Ok(omega * omega / (delta.abs() * c3))
}

/// Dressing threshold rescaled to another n* (∝ n*⁻⁴).
pub fn threshold_n_scaling(threshold_ref: f64, n_star_ref: f64, n_star_new: f64) -> Result<f64> {
    if !(n_star_ref > 0.0 && n_star_new > 0.0) {
        return Err(Error::domain("effective principal quantum numbers must be > 0"));
    }
    Ok(threshold_ref * (n_star_new / n_star_ref).powi(-4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{angular_to_mhz, mhz_to_angular, GAMMA0_MHZ};
    use approx::assert_relative_eq;

    fn g0() -> f64 {
        mhz_to_angular(GAMMA0_MHZ)
    }

    #[test]
    fn lorentzian_landmarks() {
        assert_eq!(lorentzian_rate(0.0, 3.0, 2.0).unwrap(), 3.0);
        assert_relative_eq!(lorentzian_rate(1.0, 3.0, 2.0).unwrap(), 1.5);
        assert_relative_eq!(lorentzian_rate(-2.0, 3.0, 2.0).unwrap(), 0.6);
        assert!(lorentzian_rate(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn dipole_reference_point() {
        let op = OperatingPoint::from_fraction(mhz_to_angular(0.14), 0.0, 1.0).unwrap();
        let p = predict_dipole(&op, 116.0).unwrap();
        assert!((angular_to_mhz(p.gamma) - 11.4).abs() < 0.05);
        assert!((angular_to_mhz(p.r0) * 1e3 - 1.72).abs() < 0.01);
        assert_relative_eq!(p.gamma * p.r0, op.omega * op.omega, max_relative = 1e-14);

        let dense = OperatingPoint {
            rho_g: 4.0 * op.rho_g,
            ..op
        };
        let q = predict_dipole(&dense, 116.0).unwrap();
        assert_relative_eq!(q.gamma, 2.0 * p.gamma, max_relative = 1e-14);
        assert_relative_eq!(q.r0, 0.5 * p.r0, max_relative = 1e-14);

        let empty = OperatingPoint { rho_g: 0.0, ..op };
        assert!(predict_dipole(&empty, 116.0).is_err());
    }

    #[test]
    fn vdw_reference_point() {
        let op = OperatingPoint::from_fraction(mhz_to_angular(0.14), 0.0, 1.0).unwrap();
        let p = predict_vdw(&op, 0.512, g0()).unwrap();
        assert!(
            (angular_to_mhz(p.gamma) - 1.94).abs() < 0.01,
            "{}",
            angular_to_mhz(p.gamma)
        );
        assert_relative_eq!(p.gamma * p.r0, op.omega * op.omega, max_relative = 1e-13);
        let fast = OperatingPoint {
            omega: 2.0 * op.omega,
            ..op
        };
        let q = predict_vdw(&fast, 0.512, g0()).unwrap();
        assert_relative_eq!(q.gamma / p.gamma, 2f64.powf(4.0 / 3.0), max_relative = 1e-13);
        assert!(predict_vdw(&OperatingPoint { rho_g: 0.0, ..op }, 0.512, g0()).is_err());
    }

    #[test]
    fn densities() {
        let sys = AtomicSystem::rb87_18s();
        let op = OperatingPoint::from_fraction(mhz_to_angular(0.14), 0.0, 1.0).unwrap();
        let zero = steady_state_densities(&op, 0.0, &sys).unwrap();
        assert_eq!(zero.rho_s, 0.0);
        assert!(zero.rho_np.iter().all(|(_, r)| *r == 0.0));

        let d = steady_state_densities(&op, mhz_to_angular(1.72e-3), &sys).unwrap();
        assert!((d.rho_s - 2.18).abs() < 0.01, "{}", d.rho_s);
        for (c, (_, rho)) in sys.channels.iter().zip(&d.rho_np) {
            assert_relative_eq!(
                *rho,
                d.rho_s * c.branching * sys.gamma0 / c.gamma_np,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn timescales() {
        let om = mhz_to_angular(0.14);
        let t1 = scattering_time(mhz_to_angular(2.04), om, g0()).unwrap();
        assert!((t1 / 3000.0 - 1.0).abs() < 0.01, "{t1}");
        let t2 = scattering_time(mhz_to_angular(3.90), om, g0()).unwrap();
        assert!((t2 / 11000.0 - 1.0).abs() < 0.01, "{t2}");
        let t3 = scattering_time(mhz_to_angular(4.08), om, g0()).unwrap();
        assert_relative_eq!(t3, 4.0 * t1, max_relative = 1e-12);
        assert!(scattering_time(1.0, 0.0, g0()).is_err());

        assert_relative_eq!(
            first_contaminant_time(3000.0, 0.2, 4e4).unwrap(),
            0.375,
            max_relative = 1e-14
        );
        assert_eq!(first_contaminant_time(7.0, 1.0, 1.0).unwrap(), 7.0);
        assert_relative_eq!(
            first_contaminant_time(7.0, 0.5, 20.0).unwrap(),
            first_contaminant_time(7.0, 0.5, 10.0).unwrap() / 2.0
        );
        assert!(first_contaminant_time(1.0, 0.0, 10.0).is_err());
        assert!(first_contaminant_time(1.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn dressing() {
        let om = mhz_to_angular(0.14);
        let c3 = g0() * 16f64.powi(3);
        let th = dressing_threshold(om, mhz_to_angular(2.04), c3).unwrap();
        assert!((th / 5.2e-5 - 1.0).abs() < 0.01, "{th}");
        assert_relative_eq!(
            dressing_threshold(2.0 * om, 1.0, c3).unwrap(),
            4.0 * dressing_threshold(om, 1.0, c3).unwrap(),
            max_relative = 1e-14
        );
        assert!(dressing_threshold(om, 1.0, 1e12).unwrap() < 1e-12);
        assert!(dressing_threshold(om, 0.0, c3).is_err());
        assert!(dressing_threshold(om, 1.0, 0.0).is_err());

        assert_eq!(threshold_n_scaling(5.2e-5, 16.7, 16.7).unwrap(), 5.2e-5);
        assert_relative_eq!(threshold_n_scaling(1.0, 2.0, 4.0).unwrap(), 1.0 / 16.0);
        let hi = threshold_n_scaling(5.2e-5, 16.7, 37.0).unwrap();
        assert!((hi / 2.2e-6 - 1.0).abs() < 0.03, "{hi}");
        assert!(threshold_n_scaling(1.0, -1.0, 2.0).is_err());
    }
}
