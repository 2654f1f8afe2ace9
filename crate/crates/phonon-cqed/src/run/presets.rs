//! Coupling strengths and phonon cutoffs of common emitter platforms.

use crate::rates::ModeVolumeParams;
use crate::units::mev_to_ps_inv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPreset {
    pub name: &'static str,
    /// ħg in meV.
    pub hbar_g_mev: f64,
    /// ħξ in meV.
    pub hbar_xi_mev: f64,
    /// How the coupling was obtained.
    pub source: &'static str,
}

impl MaterialPreset {
    pub fn g(&self) -> f64 {
        mev_to_ps_inv(self.hbar_g_mev)
    }

    pub fn xi(&self) -> f64 {
        mev_to_ps_inv(self.hbar_xi_mev)
    }

    /// `2g/ξ`; above one the polariton splitting clears the phonon band.
    pub fn splitting_over_cutoff(&self) -> f64 {
        2.0 * self.hbar_g_mev / self.hbar_xi_mev
    }

    pub fn decoupled(&self) -> bool {
        self.splitting_over_cutoff() > 1.0
    }
}

pub const PRESETS: [MaterialPreset; 8] = [
    MaterialPreset {
        name: "WS2",
        hbar_g_mev: 93.0,
        hbar_xi_mev: 53.0,
        source: "measured; 82 meV also reported",
    },
    MaterialPreset {
        name: "WSe2",
        hbar_g_mev: 70.0,
        hbar_xi_mev: 50.0,
        source: "measured",
    },
    MaterialPreset {
        name: "methylene blue",
        hbar_g_mev: 305.0,
        hbar_xi_mev: 213.0,
        source: "measured",
    },
    MaterialPreset {
        name: "QD microcavity",
        hbar_g_mev: 0.018,
        hbar_xi_mev: 3.0,
        source: "measured, tunable microcavity",
    },
    MaterialPreset {
        name: "QD photonic crystal",
        hbar_g_mev: 0.113,
        hbar_xi_mev: 0.84,
        source: "measured",
    },
    MaterialPreset {
        name: "QD bowtie",
        hbar_g_mev: 2.0,
        hbar_xi_mev: 2.23,
        source: "predicted from the mode volume",
    },
    MaterialPreset {
        name: "NV (g = 0.005 meV)",
        hbar_g_mev: 0.005,
        hbar_xi_mev: 65.0,
        source: "inferred from the Purcell rate, photonic crystal cavity",
    },
    MaterialPreset {
        name: "NV (g = 0.010 meV)",
        hbar_g_mev: 0.010,
        hbar_xi_mev: 65.0,
        source: "predicted, nanobeam cavity",
    },
];

pub fn list_presets() -> &'static [MaterialPreset] {
    &PRESETS
}

/// Case-insensitive lookup by name.
pub fn find_preset(name: &str) -> Option<&'static MaterialPreset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name.trim()))
}

/// Self-assembled quantum dot (d = 9·10⁻²⁹ C·m, 950 nm, GaAs ε_r = 12.25)
/// in a bowtie cavity with a mode volume of 7.01·10⁻⁵ λ³.
pub fn bowtie_mode_volume() -> ModeVolumeParams {
    ModeVolumeParams::with_volume_in_wavelengths(9e-29, 950e-9, 12.25, 7.01e-5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ps_inv_to_mev;

    #[test]
    fn table_rows() {
        assert_eq!(list_presets().len(), 8);
        let mb = find_preset("Methylene Blue").unwrap();
        assert_eq!((mb.hbar_g_mev, mb.hbar_xi_mev), (305.0, 213.0));
        assert!(find_preset("WS2").unwrap().decoupled());
        assert!(!find_preset("NV (g = 0.005 meV)").unwrap().decoupled());
        for p in list_presets() {
            assert!(p.hbar_g_mev > 0.0 && p.hbar_xi_mev > 0.0);
            assert!((ps_inv_to_mev(p.g()) - p.hbar_g_mev).abs() <= 1e-10 * p.hbar_g_mev.max(1.0));
            assert!((ps_inv_to_mev(p.xi()) - p.hbar_xi_mev).abs() <= 1e-10 * p.hbar_xi_mev.max(1.0));
        }
    }

    #[test]
    fn decoupled_platforms() {
        let decoupled: Vec<&str> = list_presets().iter().filter(|p| p.decoupled()).map(|p| p.name).collect();
        assert_eq!(decoupled, ["WS2", "WSe2", "methylene blue", "QD bowtie"]);
    }
}
