//! Unit conversions. Internally ħ = k_B = 1, frequencies and rates are in
//! ps⁻¹ and temperatures enter only through [`thermal_frequency`].

/// ħ in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// k_B in meV/K.
pub const KB_MEV_PER_K: f64 = 8.617_333_262e-2;

/// k_B/ħ in ps⁻¹/K (≈ 0.1309).
pub const KB_OVER_HBAR: f64 = KB_MEV_PER_K / HBAR_MEV_PS;

/// ps⁻¹ per meV (≈ 1.5193).
pub const PS_INV_PER_MEV: f64 = 1.0 / HBAR_MEV_PS;

/// ħ in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn mev_to_ps_inv(e: f64) -> f64 {
    e * PS_INV_PER_MEV
}

pub fn ps_inv_to_mev(w: f64) -> f64 {
    w * HBAR_MEV_PS
}

/// k_B T/ħ in ps⁻¹.
pub fn thermal_frequency(temperature: f64) -> f64 {
    KB_OVER_HBAR * temperature
}
