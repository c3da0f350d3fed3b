//! Unit conventions, atomic constants and interaction volumes.
//!
//! Internally every angular frequency is in rad/µs, lengths in µm and times
//! in µs. Files and command-line values use ordinary frequency in MHz; the
//! 2π lives only in [`mhz_to_angular`] / [`angular_to_mhz`].

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural linewidth of 87Rb 18s including blackbody transfer, Γ0/2π in MHz.
pub const GAMMA0_MHZ: f64 = 0.045;
/// Fraction of 18s decay that ends outside the initial ground state.
pub const BRANCH_OTHER: f64 = 0.45;
/// Separation at which the 18s van der Waals shift equals Γ0, µm.
pub const VDW_EQUAL_LINEWIDTH_UM: f64 = 0.8;
/// Minimum site separation of the optical lattice, µm.
pub const LATTICE_SPACING_UM: f64 = 0.406;
/// Rb s-state quantum defect (δ0, δ2).
pub const RB_S_QUANTUM_DEFECT: (f64, f64) = (3.131_180_4, 0.1784);

/// RMS of (1 − 3cos²θ) over the unit sphere, 2/√5.
pub const RMS_ANGULAR_FACTOR: f64 = 0.894_427_190_999_915_9;

const BUNDLED_CHANNELS: &str = include_str!("../data/rb87_18s_channels.json");

#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

#[inline]
pub fn angular_to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Effective principal quantum number n − δ(n) for an Rb s state.
pub fn rb_s_effective_n(n: u32) -> f64 {
    let (d0, d2) = RB_S_QUANTUM_DEFECT;
    let n = f64::from(n);
    n - d0 - d2 / (n - d0).powi(2)
}

/// A p-level populated from the driven s state that exchanges excitation with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminantChannel {
    pub label: String,
    /// |C3| including the RMS angular factor, rad·µm³/µs.
    pub c3_abs: f64,
    /// Branching ratio from the s state into this channel.
    pub branching: f64,
    /// Total decay rate of the channel state, rad/µs.
    pub gamma_np: f64,
}

impl ContaminantChannel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c3_abs.is_finite() && self.c3_abs >= 0.0) {
            return Err(Error::invalid(format!("channel {}: c3_abs must be >= 0", self.label)));
        }
        if !(0.0..=1.0).contains(&self.branching) {
            return Err(Error::invalid(format!(
                "channel {}: branching must lie in [0, 1]",
                self.label
            )));
        }
        if !(self.gamma_np.is_finite() && self.gamma_np > 0.0) {
            return Err(Error::invalid(format!("channel {}: gamma_np must be > 0", self.label)));
        }
        Ok(())
    }

    /// This channel's term |C3|·b/Γ of β3, µm³.
    pub fn volume(&self) -> f64 {
        self.c3_abs * self.branching / self.gamma_np
    }
}

/// On-disk channel record; frequencies in MHz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRecord {
    pub label: String,
    #[serde(rename = "c3_abs_MHz_um3")]
    pub c3_abs_mhz_um3: f64,
    pub branching: f64,
    #[serde(rename = "gamma_np_MHz")]
    pub gamma_np_mhz: f64,
}

impl From<&ChannelRecord> for ContaminantChannel {
    fn from(r: &ChannelRecord) -> Self {
        ContaminantChannel {
            label: r.label.clone(),
            c3_abs: mhz_to_angular(r.c3_abs_mhz_um3),
            branching: r.branching,
            gamma_np: mhz_to_angular(r.gamma_np_mhz),
        }
    }
}

impl From<&ContaminantChannel> for ChannelRecord {
    fn from(c: &ContaminantChannel) -> Self {
        ChannelRecord {
            label: c.label.clone(),
            c3_abs_mhz_um3: angular_to_mhz(c.c3_abs),
            branching: c.branching,
            gamma_np_mhz: angular_to_mhz(c.gamma_np),
        }
    }
}

/// Parse a channel file body. Errors carry the line/column from the JSON parser.
pub fn parse_channels(text: &str) -> Result<Vec<ContaminantChannel>> {
    let records: Vec<ChannelRecord> = serde_json::from_str(text)
        .map_err(|e| Error::invalid(format!("channel data, line {} column {}: {}", e.line(), e.column(), e)))?;
    let channels: Vec<ContaminantChannel> = records.iter().map(Into::into).collect();
    validate_channels(&channels)?;
    Ok(channels)
}

pub fn load_channels(path: &Path) -> Result<Vec<ContaminantChannel>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_channels(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// The 17p/18p channel set for 87Rb 18s shipped with the crate.
pub fn bundled_channels() -> Vec<ContaminantChannel> {
    parse_channels(BUNDLED_CHANNELS).expect("bundled channel data is valid")
}

pub fn bundled_channels_json() -> &'static str {
    BUNDLED_CHANNELS
}

fn validate_channels(channels: &[ContaminantChannel]) -> Result<()> {
    for c in channels {
        c.validate()?;
    }
    let total: f64 = channels.iter().map(|c| c.branching).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "channel branching ratios sum to {total}, exceeding 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSystem {
    /// Angular decay rate of the s state, rad/µs.
    pub gamma0: f64,
    /// Fraction decaying to states other than the initial ground state.
    pub branch_other: f64,
    pub channels: Vec<ContaminantChannel>,
    /// van der Waals coefficient, rad·µm⁶/µs.
    pub c6: f64,
    pub n_star: f64,
}

impl AtomicSystem {
    /// 87Rb 18s with the bundled channel data.
    pub fn rb87_18s() -> Self {
        let gamma0 = mhz_to_angular(GAMMA0_MHZ);
        AtomicSystem {
            gamma0,
            branch_other: BRANCH_OTHER,
            channels: bundled_channels(),
            c6: gamma0 * VDW_EQUAL_LINEWIDTH_UM.powi(6),
            n_star: rb_s_effective_n(18),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(Error::invalid("gamma0 must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.branch_other) {
            return Err(Error::invalid("branch_other must lie in [0, 1]"));
        }
        if !(self.c6.is_finite() && self.c6 >= 0.0) {
            return Err(Error::invalid("c6 must be >= 0"));
        }
        validate_channels(&self.channels)
    }

    pub fn beta3(&self) -> Result<f64> {
        beta3(&self.channels)
    }

    pub fn beta6(&self) -> Result<f64> {
        beta6(self.c6, self.gamma0)
    }
}

/// Drive parameters. `omega` and `delta` are what the dynamics use; the
/// single-photon legs are kept for provenance when the drive was derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega1: f64,
    pub omega2: f64,
    pub delta_int: f64,
    pub omega: f64,
    pub delta: f64,
}

impl DriveParams {
    /// A drive given directly by its two-photon Rabi frequency and detuning.
    pub fn effective(omega: f64, delta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) || !delta.is_finite() {
            return Err(Error::domain("omega must be finite and >= 0, delta finite"));
        }
        Ok(DriveParams {
            omega1: 0.0,
            omega2: 0.0,
            delta_int: 0.0,
            omega,
            delta,
        })
    }

    pub fn from_legs(omega1: f64, omega2: f64, delta_int: f64, delta: f64) -> Result<Self> {
        let omega = two_photon_rabi(omega1, omega2, delta_int)?;
        if omega < 0.0 {
            return Err(Error::domain("two-photon Rabi frequency must be >= 0"));
        }
        Ok(DriveParams {
            omega1,
            omega2,
            delta_int,
            omega,
            delta,
        })
    }
}

/// AC Stark shift Ω²/(4Δ) of a single far-detuned leg.
pub fn light_shift(omega_single: f64, delta_int: f64) -> Result<f64> {
    if delta_int == 0.0 {
        return Err(Error::domain("light shift needs a non-zero intermediate detuning"));
    }
    Ok(omega_single * omega_single / (4.0 * delta_int))
}

/// Inverse of [`light_shift`]: Ω = 2√(shift·Δ).
pub fn calibrate_rabi(shift: f64, delta_int: f64) -> Result<f64> {
    let product = shift * delta_int;
    if product < 0.0 || !product.is_finite() {
        return Err(Error::domain(format!(
            "light shift {shift} inconsistent with detuning sign {delta_int}"
        )));
    }
    Ok(2.0 * product.sqrt())
}

pub fn two_photon_rabi(omega1: f64, omega2: f64, delta_int: f64) -> Result<f64> {
    if delta_int == 0.0 {
        return Err(Error::domain(
            "two-photon Rabi frequency needs a non-zero intermediate detuning",
        ));
    }
    Ok(omega1 * omega2 / (2.0 * delta_int))
}

/// Dipole interaction volume Σ|C3|·b/Γ over the contaminant channels, µm³.
pub fn beta3(channels: &[ContaminantChannel]) -> Result<f64> {
    if channels.is_empty() {
        return Err(Error::domain("beta3 of an empty channel list"));
    }
    for c in channels {
        c.validate()?;
    }
    Ok(channels.iter().map(ContaminantChannel::volume).sum())
}

/// van der Waals interaction volume √(C6/Γ0), µm³.
pub fn beta6(c6: f64, gamma0: f64) -> Result<f64> {
    if c6 < 0.0 {
        return Err(Error::domain("c6 must be >= 0"));
    }
    if !(gamma0 > 0.0) {
        return Err(Error::domain("gamma0 must be > 0"));
    }
    Ok((c6 / gamma0).sqrt())
}

/// β3 rescaled to another effective principal quantum number (β3 ∝ n*⁷).
pub fn scale_beta3_with_n(beta3_ref: f64, n_star_ref: f64, n_star_new: f64) -> Result<f64> {
    if !(n_star_ref > 0.0 && n_star_new > 0.0) {
        return Err(Error::domain("effective principal quantum numbers must be > 0"));
    }
    Ok(beta3_ref * (n_star_new / n_star_ref).powi(7))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chan(c3: f64, b: f64, g: f64) -> ContaminantChannel {
        ContaminantChannel {
            label: "x".into(),
            c3_abs: c3,
            branching: b,
            gamma_np: g,
        }
    }

    #[test]
    fn light_shift_reference_point() {
        let shift = light_shift(mhz_to_angular(10.0), mhz_to_angular(235.0)).unwrap();
        // 10² / (4·235) MHz
        assert_relative_eq!(angular_to_mhz(shift), 100.0 / 940.0, max_relative = 1e-12);
        assert_relative_eq!(angular_to_mhz(shift), 0.1064, max_relative = 1e-3);
        assert_eq!(light_shift(0.0, 3.0).unwrap(), 0.0);
        let s1 = light_shift(2.0, 7.0).unwrap();
        let s2 = light_shift(4.0, 7.0).unwrap();
        assert_relative_eq!(s2, 4.0 * s1, max_relative = 1e-15);
        assert!(light_shift(1.0, -2.0).unwrap() < 0.0);
        assert!(matches!(light_shift(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn calibrate_inverts_shift() {
        let omega = calibrate_rabi(mhz_to_angular(0.1064), mhz_to_angular(235.0)).unwrap();
        assert_relative_eq!(angular_to_mhz(omega), 10.0, max_relative = 2e-4);
        assert_eq!(calibrate_rabi(0.0, 5.0).unwrap(), 0.0);
        assert!(calibrate_rabi(0.1, -5.0).is_err());
        // negative detuning with negative shift is consistent
        let s = light_shift(3.0, -5.0).unwrap();
        assert_relative_eq!(calibrate_rabi(s, -5.0).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn two_photon_reference_point() {
        let om = two_photon_rabi(mhz_to_angular(10.0), mhz_to_angular(7.0), mhz_to_angular(235.0)).unwrap();
        assert_relative_eq!(angular_to_mhz(om), 70.0 / 470.0, max_relative = 1e-12);
        assert!((angular_to_mhz(om) - 0.149).abs() < 5e-4);
        assert_eq!(two_photon_rabi(0.0, 1.0, 2.0).unwrap(), 0.0);
        let a = two_photon_rabi(1.0, 1.0, 2.0).unwrap();
        let b = two_photon_rabi(1.0, 1.0, 4.0).unwrap();
        assert_relative_eq!(b, a / 2.0);
        assert!(two_photon_rabi(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn beta3_arithmetic() {
        assert_relative_eq!(beta3(&[chan(10.0, 0.1, 0.5)]).unwrap(), 2.0, max_relative = 1e-15);
        let two = beta3(&[chan(10.0, 0.1, 0.5), chan(10.0, 0.1, 0.5)]).unwrap();
        assert_relative_eq!(two, 4.0, max_relative = 1e-15);
        assert!(matches!(beta3(&[]), Err(Error::Domain(_))));
        assert!(beta3(&[chan(-1.0, 0.1, 0.5)]).is_err());
    }

    #[test]
    fn beta6_reference_points() {
        let g0 = mhz_to_angular(GAMMA0_MHZ);
        assert_relative_eq!(beta6(g0 * 0.8f64.powi(6), g0).unwrap(), 0.512, max_relative = 1e-12);
        assert_relative_eq!(beta6(g0, g0).unwrap(), 1.0);
        assert_eq!(beta6(0.0, g0).unwrap(), 0.0);
        assert!(beta6(-1.0, g0).is_err());
        assert!(beta6(1.0, 0.0).is_err());
    }

    #[test]
    fn n_scaling() {
        assert_eq!(scale_beta3_with_n(116.0, 16.7, 16.7).unwrap(), 116.0);
        assert_relative_eq!(
            scale_beta3_with_n(116.0, 16.7, 33.4).unwrap(),
            14_848.0,
            max_relative = 1e-12
        );
        assert!(scale_beta3_with_n(1.0, 0.0, 2.0).is_err());
        assert!(scale_beta3_with_n(1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn rms_factor_matches_closed_form() {
        assert_relative_eq!(RMS_ANGULAR_FACTOR, 2.0 / 5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn default_system_is_valid() {
        let sys = AtomicSystem::rb87_18s();
        sys.validate().unwrap();
        assert_relative_eq!(1.0 / sys.gamma0, 3.537, max_relative = 1e-3);
        assert_relative_eq!(sys.beta6().unwrap(), 0.512, max_relative = 1e-12);
        assert!((sys.n_star - 14.868).abs() < 1e-3);
    }

    #[test]
    fn channel_parse_errors_name_the_line() {
        let text = "[\n  {\"label\": \"a\", \"c3_abs_MHz_um3\": 1.0,\n   \"branching\": oops}\n]";
        let err = parse_channels(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let unknown = r#"[{"label":"a","c3_abs":1,"branching":0.1,"gamma_np_MHz":1}]"#;
        assert!(parse_channels(unknown).is_err());
        let over = r#"[{"label":"a","c3_abs_MHz_um3":1,"branching":0.7,"gamma_np_MHz":1},
                       {"label":"b","c3_abs_MHz_um3":1,"branching":0.7,"gamma_np_MHz":1}]"#;
        assert!(parse_channels(over).is_err());
    }

    #[test]
    fn channel_record_converts_units() {
        let chans =
            parse_channels(r#"[{"label":"17p","c3_abs_MHz_um3":2.0,"branching":0.1,"gamma_np_MHz":0.5}]"#).unwrap();
        assert_relative_eq!(chans[0].c3_abs, TAU * 2.0);
        assert_relative_eq!(chans[0].gamma_np, TAU * 0.5);
        // 2π cancels in the volume
        assert_relative_eq!(chans[0].volume(), 0.4, max_relative = 1e-15);
        let back = ChannelRecord::from(&chans[0]);
        assert_relative_eq!(back.c3_abs_mhz_um3, 2.0, max_relative = 1e-15);
    }
}
