//! Polariton scattering rates in the variational frame, Purcell formulas
//! and the light–matter coupling implied by a cavity mode volume.

use num_complex::Complex64;

use crate::bath::{spectral_density, BathSpec};
use crate::error::{Error, Result};
use crate::quadrature::composite;
use crate::system::SystemParams;
use crate::units::{EPSILON_0, HBAR_MEV_PS, HBAR_SI, SPEED_OF_LIGHT};
use crate::varpol::VariationalSolution;

/// Convergence factors `σ` (ps⁻¹) for the half-range time integrals.
pub const CONVERGENCE_FACTORS: [f64; 3] = [0.1, 0.05, 0.025];

/// The three contributions to `Γ_A = Γ_{+−} − Γ_{−+}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBreakdown {
    pub eps_zz: f64,
    pub eps_yy: f64,
    pub eps_zy: f64,
    pub gamma_a: f64,
}

impl RateBreakdown {
    fn new(eps_zz: f64, eps_yy: f64, eps_zy: f64) -> Self {
        RateBreakdown {
            eps_zz,
            eps_yy,
            eps_zy,
            gamma_a: eps_zz + eps_yy + eps_zy,
        }
    }
}

/// Variational-frame bath correlation functions at one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalCorrelations {
    pub c_xx: Complex64,
    pub c_yy: Complex64,
    pub c_zz: Complex64,
    pub c_yz: Complex64,
    pub c_zy: Complex64,
    pub phi: Complex64,
}

/// Per-node weights of the three spectral integrals, tabulated once.
struct Tabulated {
    nu: Vec<f64>,
    coth: Vec<f64>,
    zz: Vec<f64>,
    phi: Vec<f64>,
    yz: Vec<f64>,
    b_v: f64,
}

impl Tabulated {
    fn new(sol: &VariationalSolution, spec: &BathSpec) -> Result<Self> {
        let spec = spec.with_temperature(sol.temperature());
        let n = sol.nu_grid.len();
        let mut t = Tabulated {
            nu: sol.nu_grid.clone(),
            coth: Vec::with_capacity(n),
            zz: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            yz: Vec::with_capacity(n),
            b_v: sol.b_v,
        };
        for i in 0..n {
            let nu = sol.nu_grid[i];
            let f = sol.f[i];
            let wj = sol.weights[i] * spectral_density(nu, &spec)?;
            t.coth.push(spec.coth_half(nu));
            t.zz.push(wj * (1.0 - f * f));
            t.phi.push(wj * f * f / (nu * nu));
            t.yz.push(wj * f * (1.0 - f) / nu);
        }
        Ok(t)
    }

    fn eval(&self, tau: f64) -> VariationalCorrelations {
        let (mut zz, mut phi, mut yz) = (Complex64::default(), Complex64::default(), Complex64::default());
        for i in 0..self.nu.len() {
            let (s, c) = (self.nu[i] * tau).sin_cos();
            let ch = self.coth[i];
            zz += self.zz[i] * Complex64::new(ch * c, -s);
            phi += self.phi[i] * Complex64::new(ch * c, -s);
            yz += self.yz[i] * Complex64::new(ch * s, c);
        }
        let b2 = self.b_v * self.b_v;
        let (ep, em) = (phi.exp(), (-phi).exp());
        let c_yz = -self.b_v * yz;
        VariationalCorrelations {
            c_xx: 0.5 * b2 * (ep + em - 2.0),
            c_yy: 0.5 * b2 * (ep - em),
            c_zz: zz,
            c_yz,
            c_zy: -c_yz,
            phi,
        }
    }
}

/// `C_XX … C_ZY` and `φ` at delay `tau` for a converged displacement.
pub fn variational_bath_correlations(
    tau: f64,
    sol: &VariationalSolution,
    spec: &BathSpec,
) -> Result<VariationalCorrelations> {
    Ok(Tabulated::new(sol, spec)?.eval(tau))
}

/// `∫₀^∞ f(τ) dτ` with `f` oscillatory and slowly decaying: damped by
/// `e^{−στ}` for each convergence factor, then extrapolated to `σ = 0`.
pub fn damped_half_range<F: Fn(f64) -> f64>(f: F, tau_max: f64) -> Result<f64> {
    let panels = (tau_max / 0.1).ceil().max(1.0) as usize;
    let rule = composite(0.0, tau_max, panels, 8);
    let values: Vec<f64> = rule.nodes.iter().map(|&t| f(t)).collect();
    let at = |sigma: f64| -> f64 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .zip(&values)
            .map(|((t, w), v)| w * v * (-sigma * t).exp())
            .sum()
    };
    let [h0, h1, h2] = CONVERGENCE_FACTORS.map(at);
    // quadratic through (σ, I(σ)) evaluated at σ = 0 for σ, σ/2, σ/4
    let extrapolated = (h0 - 6.0 * h1 + 8.0 * h2) / 3.0;
    let scale = h0.abs().max(h1.abs()).max(h2.abs()).max(1e-300);
    let (d1, d2) = ((h1 - h0).abs(), (h2 - h1).abs());
    if !extrapolated.is_finite() || (d2 > d1 && d2 > 1e-6 * scale) {
        return Err(Error::numerical(
            "convergence-factor extrapolation did not settle",
            vec![h0, h1, h2],
        ));
    }
    Ok(extrapolated)
}

fn tau_max(spec: &BathSpec) -> f64 {
    20.0 / spec.xi
}

fn require_resonant(sol: &VariationalSolution) -> Result<()> {
    if sol.delta_v.abs() > 1e-6 * sol.eta_v.max(1e-3) {
        return Err(Error::Domain(format!(
            "polariton rates need a resonant variational frame, got delta_v = {}",
            sol.delta_v
        )));
    }
    Ok(())
}

/// `ε_ZZ`, `ε_YY`, `ε_ZY` at `δ_v = 0`. `ε_ZZ` and `ε_ZY` use their closed
/// forms; `ε_YY` needs a time quadrature for the part of `C_YY` beyond
/// first order in `φ`.
pub fn epsilon_contributions(sol: &VariationalSolution, spec: &BathSpec, p: &SystemParams) -> Result<RateBreakdown> {
    require_resonant(sol)?;
    let spec_t = spec.with_temperature(sol.temperature());
    let w = 2.0 * sol.g_v;
    if w <= 0.0 || spec.alpha == 0.0 {
        return Ok(RateBreakdown::new(0.0, 0.0, 0.0));
    }
    let j = spectral_density(w, &spec_t)?;
    let f = sol.displacement_at(w, &spec_t);
    let eps_zz = 0.5 * std::f64::consts::PI * j * (1.0 - f * f);
    let eps_zy = -std::f64::consts::PI * j * f * (1.0 - f);

    // C_YY = B²(φ + [sinh φ − φ]); the part linear in φ integrates in
    // closed form, the remainder decays fast enough for quadrature.
    let b2 = sol.b_v * sol.b_v;
    let linear = 0.5 * std::f64::consts::PI * j * f * f * (p.g * p.g * b2) / (sol.g_v * sol.g_v);
    let tab = Tabulated::new(sol, spec)?;
    let remainder = damped_half_range(
        |t| {
            let c = tab.eval(t);
            (w * t).sin() * (c.c_yy - b2 * c.phi).im
        },
        tau_max(spec),
    )?;
    let eps_yy = linear - 4.0 * p.g * p.g * remainder;
    Ok(RateBreakdown::new(eps_zz, eps_yy, eps_zy))
}

/// `ε_ZZ` as the half-range time integral `−∫ sin(2g_vτ) Im C_ZZ(τ) dτ`.
pub fn eps_zz_quadrature(sol: &VariationalSolution, spec: &BathSpec) -> Result<f64> {
    let tab = Tabulated::new(sol, spec)?;
    let w = 2.0 * sol.g_v;
    Ok(-damped_half_range(|t| (w * t).sin() * tab.eval(t).c_zz.im, tau_max(spec))?)
}

/// `ε_YY` entirely by time quadrature, `−4g² ∫ sin(2g_vτ) Im C_YY(τ) dτ`.
pub fn eps_yy_quadrature(sol: &VariationalSolution, spec: &BathSpec, p: &SystemParams) -> Result<f64> {
    let tab = Tabulated::new(sol, spec)?;
    let w = 2.0 * sol.g_v;
    Ok(-4.0 * p.g * p.g * damped_half_range(|t| (w * t).sin() * tab.eval(t).c_yy.im, tau_max(spec))?)
}

/// `ε_ZY` as the half-range time integral `−4g ∫ cos(2g_vτ) Im C_ZY(τ) dτ`.
pub fn eps_zy_quadrature(sol: &VariationalSolution, spec: &BathSpec, p: &SystemParams) -> Result<f64> {
    let tab = Tabulated::new(sol, spec)?;
    let w = 2.0 * sol.g_v;
    Ok(-4.0 * p.g * damped_half_range(|t| (w * t).cos() * tab.eval(t).c_zy.im, tau_max(spec))?)
}

/// Differential polariton scattering rate `Γ_A`.
pub fn differential_polariton_rate(sol: &VariationalSolution, spec: &BathSpec, p: &SystemParams) -> Result<f64> {
    Ok(epsilon_contributions(sol, spec, p)?.gamma_a)
}

/// Single-term estimate `Γ_A ≈ (π/2) J(2g_v)[1 − F²(2g_v)]`.
pub fn approximate_polariton_rate(sol: &VariationalSolution, spec: &BathSpec) -> Result<f64> {
    let spec = spec.with_temperature(sol.temperature());
    let w = 2.0 * sol.g_v;
    if w <= 0.0 {
        return Ok(0.0);
    }
    let f = sol.displacement_at(w, &spec);
    Ok(0.5 * std::f64::consts::PI * spectral_density(w, &spec)? * (1.0 - f * f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurcellQuantities {
    /// `Γ = 4g²/(κ + γ*)` in ps⁻¹.
    pub gamma: f64,
    /// `Γ/(Γ + γ)`.
    pub efficiency: f64,
    /// Coupling recovered from `Γ` through `g = √(Γκ/4)`.
    pub g_from_gamma: f64,
}

/// Purcell-enhanced emission rate and the efficiency it implies.
pub fn purcell_quantities(p: &SystemParams) -> Result<PurcellQuantities> {
    if !(p.kappa > 0.0) {
        return Err(Error::Domain(format!("Purcell rate needs kappa > 0, got {}", p.kappa)));
    }
    let gamma = 4.0 * p.g * p.g / (p.kappa + p.gamma_star);
    Ok(PurcellQuantities {
        gamma,
        efficiency: purcell_efficiency(gamma, p.gamma),
        g_from_gamma: coupling_from_purcell_rate(gamma, p.kappa),
    })
}

pub fn purcell_efficiency(gamma_purcell: f64, gamma: f64) -> f64 {
    gamma_purcell / (gamma_purcell + gamma)
}

/// `g = √(Γκ/4)`.
pub fn coupling_from_purcell_rate(gamma_purcell: f64, kappa: f64) -> f64 {
    (gamma_purcell * kappa / 4.0).sqrt()
}

/// Emitter dipole and cavity mode, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVolumeParams {
    /// Dipole moment in C·m.
    pub dipole: f64,
    /// Emission wavelength in m.
    pub wavelength: f64,
    pub epsilon_r: f64,
    /// Mode volume in m³.
    pub mode_volume: f64,
}

impl ModeVolumeParams {
    /// Mode volume given in units of λ³.
    pub fn with_volume_in_wavelengths(dipole: f64, wavelength: f64, epsilon_r: f64, v_lambda3: f64) -> Self {
        ModeVolumeParams {
            dipole,
            wavelength,
            epsilon_r,
            mode_volume: v_lambda3 * wavelength.powi(3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub ps_inv: f64,
    pub mev: f64,
}

/// `g = √(d²ω / (2ħε₀ε_r V))` with `ω = 2πc/λ`.
pub fn coupling_from_mode_volume(mv: &ModeVolumeParams) -> Result<Coupling> {
    for (name, v) in [
        ("dipole", mv.dipole),
        ("wavelength", mv.wavelength),
        ("epsilon_r", mv.epsilon_r),
        ("mode_volume", mv.mode_volume),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / mv.wavelength;
    let g_rad_s = (mv.dipole * mv.dipole * omega / (2.0 * HBAR_SI * EPSILON_0 * mv.epsilon_r * mv.mode_volume)).sqrt();
    let ps_inv = g_rad_s * 1e-12;
    Ok(Coupling {
        ps_inv,
        mev: ps_inv * HBAR_MEV_PS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::FrequencyGrid;
    use crate::varpol::solve_variational_displacement;

    fn gaas(t: f64) -> BathSpec {
        BathSpec::new(0.025, 2.23, t)
    }

    fn solve(g: f64, t: f64) -> VariationalSolution {
        solve_variational_displacement(&gaas(t), &SystemParams::new(g, 0.5, 0.0), true).unwrap()
    }

    #[test]
    fn correlation_limits() {
        let spec = gaas(4.0);
        let mut sol = solve(1.1, 4.0);
        sol.f.iter_mut().for_each(|f| *f = 0.0);
        for tau in [0.0, 0.3, 2.0] {
            let c = variational_bath_correlations(tau, &sol, &spec).unwrap();
            assert_eq!(c.c_yy, Complex64::default());
            assert_eq!(c.c_xx, Complex64::default());
        }
        sol.f.iter_mut().for_each(|f| *f = 1.0);
        let c = variational_bath_correlations(0.7, &sol, &spec).unwrap();
        assert_eq!(c.c_zz, Complex64::default());

        let sol = solve(1.1, 4.0);
        let c = variational_bath_correlations(0.0, &sol, &spec).unwrap();
        let grid = FrequencyGrid::new(&spec, sol.nu_grid.len());
        let direct = grid.integrate_j(|i| (1.0 - sol.f[i].powi(2)) * grid.coth[i]);
        assert_eq!(c.c_zz.im, 0.0);
        assert!((c.c_zz.re - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn antisymmetric_pair() {
        let spec = gaas(4.0);
        let sol = solve(1.1, 4.0);
        let grid = FrequencyGrid::new(&spec, sol.nu_grid.len());
        let mut x = 0.123_f64;
        for _ in 0..100 {
            x = (x * 7.919 + 0.31).fract();
            let tau = 10.0 * x;
            let c = variational_bath_correlations(tau, &sol, &spec).unwrap();
            assert_eq!(c.c_zy, -c.c_yz);
            // independent quadrature of C_ZY = B∫(J/ν)F(1−F)[i cos + coth sin]
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..grid.len() {
                let nu = grid.nu[i];
                let a = grid.weight[i] * grid.j[i] / nu * sol.f[i] * (1.0 - sol.f[i]);
                re += a * grid.coth[i] * (nu * tau).sin();
                im += a * (nu * tau).cos();
            }
            let direct = sol.b_v * Complex64::new(re, im);
            assert!((c.c_zy - direct).norm() < 1e-10 * direct.norm().max(1e-3));
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let spec = gaas(4.0);
        for g in [0.6, 1.1, 2.0] {
            let sol = solve(g, 4.0);
            let p = SystemParams::new(g, 0.5, 0.0);
            let b = epsilon_contributions(&sol, &spec, &p).unwrap();
            let zz = eps_zz_quadrature(&sol, &spec).unwrap();
            assert!((zz - b.eps_zz).abs() < 0.01 * b.eps_zz, "g={g}: {zz} vs {}", b.eps_zz);
            let zy = eps_zy_quadrature(&sol, &spec, &p).unwrap();
            assert!((zy - b.eps_zy).abs() < 0.01 * b.eps_zy.abs(), "g={g}: {zy} vs {}", b.eps_zy);
            let yy = eps_yy_quadrature(&sol, &spec, &p).unwrap();
            assert!((yy - b.eps_yy).abs() < 0.01 * b.eps_yy.abs(), "g={g}: {yy} vs {}", b.eps_yy);
            assert_eq!(b.gamma_a, b.eps_zz + b.eps_yy + b.eps_zy);
        }
    }

    #[test]
    fn zz_at_bath_cutoff() {
        let spec = gaas(4.0);
        let sol = solve(1.1, 4.0);
        let mut s = sol.clone();
        s.g_v = spec.xi / 2.0;
        s.eta_v = spec.xi;
        let b = epsilon_contributions(&s, &spec, &SystemParams::new(1.1, 0.5, 0.0)).unwrap();
        let f = s.displacement_at(spec.xi, &spec);
        let expected = 0.5 * std::f64::consts::PI * spectral_density(spec.xi, &spec).unwrap() * (1.0 - f * f);
        assert!((b.eps_zz - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn decoupling_and_cancellation() {
        let spec = gaas(4.0);
        let strong = solve(10.0, 4.0);
        let b = epsilon_contributions(&strong, &spec, &SystemParams::new(10.0, 0.5, 0.0)).unwrap();
        assert!(b.eps_zz.abs() < 1e-6 && b.eps_yy.abs() < 1e-6 && b.eps_zy.abs() < 1e-6);
        assert!(b.gamma_a < 1e-4);

        // J(2g_v) peaks at 2g_v = ξ√(3/2)
        let target = spec.xi * 1.5f64.sqrt() / 2.0;
        let g = target / solve(target, 4.0).b_v;
        let sol = solve(g, 4.0);
        let b = epsilon_contributions(&sol, &spec, &SystemParams::new(g, 0.5, 0.0)).unwrap();
        assert!((b.eps_yy + b.eps_zy).abs() < 0.25 * b.eps_zz, "{b:?}");

        let free = solve(1.0, 4.0);
        let none = BathSpec::new(0.0, 2.23, 4.0);
        assert_eq!(differential_polariton_rate(&free, &none, &SystemParams::new(1.0, 0.5, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_detuned_frame() {
        let spec = gaas(4.0);
        let p = SystemParams::new(1.0, 0.5, 0.0).with_delta(0.5);
        let sol = solve_variational_displacement(&spec, &p, false).unwrap();
        assert!(matches!(epsilon_contributions(&sol, &spec, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn purcell_examples() {
        let q = purcell_quantities(&SystemParams::new(0.05, 0.5, 0.01)).unwrap();
        assert!((q.gamma - 0.02).abs() < 1e-15);
        assert!((q.efficiency - 2.0 / 3.0).abs() < 1e-12);
        assert!((4.0 * q.g_from_gamma.powi(2) / 0.5 - q.gamma).abs() < 1e-15);
        assert!((purcell_efficiency(0.02, 0.01) - 2.0 / 3.0).abs() < 1e-15);
        assert!(purcell_quantities(&SystemParams::new(0.05, 0.0, 0.0)).is_err());
    }

    #[test]
    fn mode_volume_coupling() {
        let mv = ModeVolumeParams::with_volume_in_wavelengths(9e-29, 950e-9, 12.25, 7.01e-5);
        let g = coupling_from_mode_volume(&mv).unwrap();
        assert!((g.mev - 2.0).abs() < 0.15 * 2.0, "{}", g.mev);
        assert!((g.mev - 2.25).abs() < 0.02);
        let g4 = coupling_from_mode_volume(&ModeVolumeParams {
            mode_volume: 4.0 * mv.mode_volume,
            ..mv
        })
        .unwrap();
        assert!((g4.ps_inv / g.ps_inv - 0.5).abs() < 1e-14);
        let g2 = coupling_from_mode_volume(&ModeVolumeParams {
            dipole: 2.0 * mv.dipole,
            ..mv
        })
        .unwrap();
        assert!((g2.ps_inv / g.ps_inv - 2.0).abs() < 1e-14);
        assert!(coupling_from_mode_volume(&ModeVolumeParams { epsilon_r: 0.0, ..mv }).is_err());
    }

    #[test]
    fn rate_shape() {
        let spec = gaas(4.0);
        let spec0 = gaas(0.0);
        let gs: Vec<f64> = (0..40).map(|k| 0.1 + 11.9 * k as f64 / 39.0).collect();
        let mut rates = Vec::new();
        let mut peak_j = (0.0, 0.0);
        for &g in &gs {
            let p = SystemParams::new(g, 0.5, 0.0);
            let sol = solve(g, 4.0);
            rates.push(differential_polariton_rate(&sol, &spec, &p).unwrap());
            let j = spectral_density(2.0 * sol.g_v, &spec).unwrap();
            if j > peak_j.0 {
                peak_j = (j, g);
            }
            let sol0 = solve_variational_displacement(&spec0, &p, true).unwrap();
            assert!(differential_polariton_rate(&sol0, &spec0, &p).unwrap() >= -1e-14);
        }
        let imax = (0..rates.len()).max_by(|&a, &b| rates[a].total_cmp(&rates[b])).unwrap();
        assert!(imax > 0 && imax < rates.len() - 1);
        assert!((gs[imax] - peak_j.1).abs() < 1.0, "{} vs {}", gs[imax], peak_j.1);
        let last = gs.iter().position(|&g| 2.0 * solve(g, 4.0).g_v > 2.0 * spec.xi).unwrap();
        for k in last + 1..rates.len() {
            assert!(rates[k] <= rates[k - 1] + 1e-14);
        }
    }
}
