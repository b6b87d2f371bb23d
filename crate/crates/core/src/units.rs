//! Unit conventions.
//!
//! Natural units with ħ = 1: energies and angular frequencies in eV, time in
//! ħ/eV, lengths in Å, fields in MV/cm.

use std::f64::consts::TAU;

/// ħ in eV·fs. One natural time unit is this many femtoseconds.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// Planck's constant in eV·s.
pub const PLANCK_EV_S: f64 = 4.135_667_696e-15;

/// 1 MV/cm expressed in V/Å.
pub const MV_PER_CM_IN_V_PER_ANGSTROM: f64 = 0.01;

/// How a frequency quoted in THz is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyConvention {
    /// Cycles per second; ħω = h·f.
    #[default]
    Linear,
    /// Radians per second; ħω = ħ·f.
    Angular,
}

/// Photon energy ħω in eV for a frequency given in THz.
pub fn thz_to_ev(freq_thz: f64, convention: FrequencyConvention) -> f64 {
    let hz = freq_thz * 1e12;
    match convention {
        FrequencyConvention::Linear => PLANCK_EV_S * hz,
        FrequencyConvention::Angular => PLANCK_EV_S / TAU * hz,
    }
}

pub fn natural_time_to_fs(t: f64) -> f64 {
    t * HBAR_EV_FS
}

/// Energy gained by a unit charge across one lattice spacing, a·E, in eV.
pub fn field_energy(a_angstrom: f64, field_mv_cm: f64) -> f64 {
    a_angstrom * field_mv_cm * MV_PER_CM_IN_V_PER_ANGSTROM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drive_photon_energy() {
        let w = thz_to_ev(32.9, FrequencyConvention::Linear);
        assert!((w - 0.136_063).abs() < 1e-5, "{w}");
        let w_ang = thz_to_ev(32.9, FrequencyConvention::Angular);
        assert!((w_ang - 0.021_655).abs() < 1e-5, "{w_ang}");
    }

    #[test]
    fn field_energy_matches_unit_arithmetic() {
        assert!((field_energy(4.0, 10.0) - 0.4).abs() < 1e-15);
    }
}
