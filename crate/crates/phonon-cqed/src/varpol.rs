//! Variational polaron analytics.
//!
//! The phonon displacement `f_k = g_k F(ν_k)` is optimised by minimising the
//! Feynman–Bogoliubov bound on the free energy. The stationarity condition is
//!
//! ```text
//! F(ν) = [1 − (δ_v/η_v) t] / [1 − (δ_v/η_v) t + (2g_v²/(ν η_v)) t coth(βν/2)]
//! ```
//!
//! with `t = tanh(βη_v/2)`, `B_v = exp[−½∫ J F²/ν² coth(βν/2) dν]`,
//! `R_v = ∫ (J/ν) F(F−2) dν`, `g_v = g B_v`, `δ_v = δ + R_v` and
//! `η_v = √(4g_v² + δ_v²)`. It is solved by damped fixed-point iteration
//! from two seeds; the solution with the lower bound is reported.

use crate::bath::{BathSpec, FrequencyGrid};
use crate::error::{Error, Result};
use crate::system::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalOptions {
    /// Gauss–Legendre nodes on `[0, nu_max]`.
    pub nodes: usize,
    /// Mixing `m` in `F ← (1−m)F + m·RHS`.
    pub mixing: f64,
    /// Max-norm tolerance on `F` and on `B_v`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        VariationalOptions {
            nodes: 400,
            mixing: 0.5,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Starting guess for the displacement function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    /// `F ≡ 1`, the full polaron.
    Polaron,
    /// `F ≡ 0`, no displacement.
    Bare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub nu_grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// `F(ν)` on `nu_grid`.
    pub f: Vec<f64>,
    pub b_v: f64,
    pub r_v: f64,
    pub g_v: f64,
    /// Lab detuning the solution was computed at (`−R_v` in resonance mode).
    pub delta: f64,
    pub delta_v: f64,
    pub eta_v: f64,
    pub free_energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub seed: Seed,
    /// Nodes where the stationarity denominator vanished; `F` is held there.
    pub excluded_nodes: Vec<usize>,
    /// How many times an iterate had to be clipped into `[0, 1]`.
    pub clipped: usize,
    /// Free energies of every converged seed, for inspection.
    pub seed_free_energies: Vec<(Seed, f64)>,
    temperature: f64,
    g: f64,
}

impl VariationalSolution {
    /// `F(ν)` at an arbitrary frequency from the converged parameters.
    pub fn displacement_at(&self, nu: f64, spec: &BathSpec) -> f64 {
        let spec = spec.with_temperature(self.temperature);
        displacement(nu, self.g_v, self.delta_v, self.eta_v, &spec)
            .unwrap_or(0.0)
            .clamp(0.0, 1.0)
    }

    /// Lab detuning placing the cavity on the polaron-shifted exciton line.
    pub fn resonant_detuning(&self) -> f64 {
        -self.r_v
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn bare_coupling(&self) -> f64 {
        self.g
    }
}

/// Right-hand side of the stationarity condition at one frequency, `None`
/// where its denominator vanishes. Not clipped.
fn displacement(nu: f64, g_v: f64, delta_v: f64, eta_v: f64, spec: &BathSpec) -> Option<f64> {
    if g_v == 0.0 {
        // the bound no longer depends on the shape of F beyond R_v
        return Some(1.0);
    }
    let t = spec.tanh_half(eta_v);
    let num = 1.0 - delta_v / eta_v * t;
    let den = num + 2.0 * g_v * g_v / (nu * eta_v) * t * spec.coth_half(nu);
    if !(den.abs() > 1e-300) || !den.is_finite() {
        return None;
    }
    Some(num / den)
}

/// `(B_v, R_v)` for a displacement tabulated on `grid`.
pub fn renormalization_factors(f: &[f64], grid: &FrequencyGrid) -> Result<(f64, f64)> {
    if f.len() != grid.len() {
        return Err(Error::Domain(format!(
            "displacement has {} values for a {}-node grid",
            f.len(),
            grid.len()
        )));
    }
    if let Some(bad) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("displacement value {bad} outside [0, 1]")));
    }
    let mut exponent = 0.0;
    let mut r = 0.0;
    for i in 0..grid.len() {
        let (nu, wj) = (grid.nu[i], grid.weight[i] * grid.j[i]);
        exponent += wj * f[i] * f[i] / (nu * nu) * grid.coth[i];
        r += wj / nu * f[i] * (f[i] - 2.0);
    }
    Ok(((-0.5 * exponent).exp(), r))
}

/// Renormalised parameters `(g_v, δ_v, η_v)`.
fn dressed(g: f64, delta: f64, b_v: f64, r_v: f64) -> (f64, f64, f64) {
    let g_v = g * b_v;
    let delta_v = delta + r_v;
    (g_v, delta_v, (4.0 * g_v * g_v + delta_v * delta_v).sqrt())
}

/// `A = (R_v − δ)/2 − k_BT ln[2 cosh(η_v/2k_BT)]`: the F-dependent part of
/// the bound, from the single-excitation partition function. The log-cosh
/// is evaluated in overflow-free form; at T = 0 it reduces to `η_v/2`.
fn bound(r_v: f64, delta: f64, eta_v: f64, spec: &BathSpec) -> f64 {
    let kt = spec.thermal_frequency();
    let centre = 0.5 * (r_v - delta);
    if kt == 0.0 {
        return centre - 0.5 * eta_v;
    }
    let x = eta_v / (2.0 * kt);
    // ln(2 cosh x) = x + ln(1 + e^{−2x})
    centre - kt * (x + (-2.0 * x).exp().ln_1p())
}

/// Free-energy bound of an arbitrary displacement at lab detuning `p.delta`.
pub fn free_energy_of(f: &[f64], grid: &FrequencyGrid, spec: &BathSpec, p: &SystemParams) -> Result<f64> {
    let (b_v, r_v) = renormalization_factors(f, grid)?;
    let (_, _, eta_v) = dressed(p.g, p.delta, b_v, r_v);
    Ok(bound(r_v, p.delta, eta_v, spec))
}

/// Free-energy bound of a converged solution at `temperature`, evaluated at
/// the detuning the solution was found for (`p` supplies the bare coupling).
pub fn free_energy_bound(sol: &VariationalSolution, p: &SystemParams, temperature: f64) -> f64 {
    let spec = BathSpec::new(0.0, 1.0, temperature);
    let (_, _, eta_v) = dressed(p.g, sol.delta, sol.b_v, sol.r_v);
    bound(sol.r_v, sol.delta, eta_v, &spec)
}

struct Iterate {
    f: Vec<f64>,
    b_v: f64,
    r_v: f64,
    delta: f64,
    iterations: usize,
    residual: f64,
    excluded: Vec<usize>,
    clipped: usize,
}

fn iterate(
    grid: &FrequencyGrid,
    spec: &BathSpec,
    p: &SystemParams,
    resonance: bool,
    seed: Seed,
    opts: &VariationalOptions,
) -> Result<Iterate> {
    let n = grid.len();
    let mut f = vec![if seed == Seed::Polaron { 1.0 } else { 0.0 }; n];
    let (mut b_v, mut r_v) = renormalization_factors(&f, grid)?;
    let mut history = Vec::new();
    let mut clipped = 0usize;
    for it in 1..=opts.max_iterations {
        let delta = if resonance { -r_v } else { p.delta };
        let (g_v, delta_v, eta_v) = dressed(p.g, delta, b_v, r_v);
        let mut change = 0.0f64;
        let mut excluded = Vec::new();
        let mut next = f.clone();
        for i in 0..n {
            match displacement(grid.nu[i], g_v, delta_v, eta_v, spec) {
                Some(rhs) => {
                    let mut v = (1.0 - opts.mixing) * f[i] + opts.mixing * rhs;
                    if !(0.0..=1.0).contains(&v) {
                        v = v.clamp(0.0, 1.0);
                        clipped += 1;
                    }
                    change = change.max((v - f[i]).abs());
                    next[i] = v;
                }
                None => excluded.push(i),
            }
        }
        let (nb, nr) = renormalization_factors(&next, grid)?;
        let db = (nb - b_v).abs();
        f = next;
        b_v = nb;
        r_v = nr;
        history.push(change.max(db));
        if change < opts.tolerance && db < opts.tolerance {
            let delta = if resonance { -r_v } else { p.delta };
            let (g_v, delta_v, eta_v) = dressed(p.g, delta, b_v, r_v);
            let residual = (0..n)
                .filter_map(|i| displacement(grid.nu[i], g_v, delta_v, eta_v, spec).map(|v| (v.clamp(0.0, 1.0) - f[i]).abs()))
                .fold(0.0, f64::max);
            if !excluded.is_empty() {
                log::warn!("variational solve excluded {} degenerate nodes", excluded.len());
            }
            return Ok(Iterate {
                f,
                b_v,
                r_v,
                delta,
                iterations: it,
                residual,
                excluded,
                clipped,
            });
        }
    }
    let tail = history.len().saturating_sub(20);
    Err(Error::numerical(
        format!(
            "variational fixed point did not converge in {} iterations (seed {seed:?})",
            opts.max_iterations
        ),
        history.split_off(tail),
    ))
}

/// Self-consistent displacement with default options.
pub fn solve_variational_displacement(
    spec: &BathSpec,
    p: &SystemParams,
    resonance_mode: bool,
) -> Result<VariationalSolution> {
    solve_with_options(spec, p, resonance_mode, &VariationalOptions::default())
}

pub fn solve_with_options(
    spec: &BathSpec,
    p: &SystemParams,
    resonance_mode: bool,
    opts: &VariationalOptions,
) -> Result<VariationalSolution> {
    spec.validate()?;
    p.validate()?;
    let grid = FrequencyGrid::new(spec, opts.nodes);
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for seed in [Seed::Polaron, Seed::Bare] {
        match iterate(&grid, spec, p, resonance_mode, seed, opts) {
            Ok(it) => candidates.push((seed, it)),
            Err(e) => failures.push(e),
        }
    }
    if candidates.is_empty() {
        return Err(failures.remove(0));
    }
    // In resonance mode every candidate carries its own detuning; compare
    // them at a common one so the bound refers to the same Hamiltonian.
    let common = candidates.iter().map(|(_, c)| c.delta).sum::<f64>() / candidates.len() as f64;
    let mut scored: Vec<(Seed, f64, Iterate)> = candidates
        .into_iter()
        .map(|(seed, it)| {
            let delta = if resonance_mode { common } else { it.delta };
            let (_, _, eta_v) = dressed(p.g, delta, it.b_v, it.r_v);
            (seed, bound(it.r_v, delta, eta_v, spec), it)
        })
        .collect();
    let seed_free_energies = scored.iter().map(|(s, a, _)| (*s, *a)).collect();
    let best = (0..scored.len())
        .min_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1))
        .expect("at least one candidate");
    let (seed, _, it) = scored.swap_remove(best);
    let (g_v, delta_v, eta_v) = dressed(p.g, it.delta, it.b_v, it.r_v);
    let free_energy = bound(it.r_v, it.delta, eta_v, spec);
    Ok(VariationalSolution {
        nu_grid: grid.nu.clone(),
        weights: grid.weight.clone(),
        f: it.f,
        b_v: it.b_v,
        r_v: it.r_v,
        g_v,
        delta: it.delta,
        delta_v,
        eta_v,
        free_energy,
        iterations: it.iterations,
        residual: it.residual,
        seed,
        excluded_nodes: it.excluded,
        clipped: it.clipped,
        seed_free_energies,
        temperature: spec.temperature,
        g: p.g,
    })
}

/// Lab detuning `δ = −R_v` that makes the cavity resonant with the
/// polaron-shifted exciton, solved jointly with the displacement.
pub fn resonance_condition(spec: &BathSpec, p: &SystemParams) -> Result<f64> {
    Ok(solve_variational_displacement(spec, p, true)?.resonant_detuning())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaas(t: f64) -> BathSpec {
        BathSpec::new(0.025, 2.23, t)
    }

    #[test]
    fn zero_coupling_limit() {
        let spec = gaas(0.0);
        let sol = solve_variational_displacement(&spec, &SystemParams::new(1e-6, 0.5, 0.0), true).unwrap();
        assert!(sol.f.iter().all(|&f| (f - 1.0).abs() < 1e-2));
        let mean = sol.f.iter().zip(&sol.weights).map(|(f, w)| f * w).sum::<f64>() / spec.nu_max;
        assert!((mean - 1.0).abs() < 1e-4);
        let analytic = (-spec.alpha * spec.xi * spec.xi / 4.0).exp();
        assert!((sol.b_v - analytic).abs() < 1e-3);
        assert!((analytic - 0.9694).abs() < 1e-4);
    }

    #[test]
    fn resonant_zero_temperature_form() {
        let spec = gaas(0.0);
        for g in [0.3, 1.1, 4.0] {
            let sol = solve_variational_displacement(&spec, &SystemParams::new(g, 0.5, 0.0), true).unwrap();
            assert!(sol.delta_v.abs() < 1e-9);
            for (nu, f) in sol.nu_grid.iter().zip(&sol.f) {
                assert!((f - nu / (nu + sol.g_v)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn renormalization_examples() {
        let spec = gaas(0.0);
        let grid = FrequencyGrid::new(&spec, 400);
        let (b, r) = renormalization_factors(&vec![0.0; 400], &grid).unwrap();
        assert_eq!((b, r), (1.0, 0.0));
        let (b, r) = renormalization_factors(&vec![1.0; 400], &grid).unwrap();
        assert!((b - (-spec.alpha * spec.xi.powi(2) / 4.0).exp()).abs() < 1e-10);
        let analytic = -spec.alpha * spec.xi.powi(3) * std::f64::consts::PI.sqrt() / 4.0;
        assert!((r - analytic).abs() < 1e-10);
        assert!((r + 0.1229).abs() < 1e-4);
        let f: Vec<f64> = grid.nu.iter().map(|nu| nu / (nu + 1.0)).collect();
        let mut last = 2.0;
        for t in [0.0, 20.0, 100.0] {
            let g = FrequencyGrid::new(&spec.with_temperature(t), 400);
            let (b, _) = renormalization_factors(&f, &g).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(renormalization_factors(&vec![1.5; 400], &grid).is_err());
    }

    #[test]
    fn invariants() {
        let spec = gaas(4.0);
        let grid = FrequencyGrid::new(&spec, 400);
        for g in [0.2, 1.1, 2.0] {
            let sol = solve_variational_displacement(&spec, &SystemParams::new(g, 0.5, 0.01), true).unwrap();
            assert!(sol.f.iter().all(|f| (0.0..=1.0).contains(f)));
            assert!(sol.r_v <= 0.0);
            assert!(sol.residual < 1e-9);
            // stationarity against the right-hand side
            for (i, &nu) in grid.nu.iter().enumerate() {
                let rhs = displacement(nu, sol.g_v, sol.delta_v, sol.eta_v, &spec).unwrap().clamp(0.0, 1.0);
                assert!((rhs - sol.f[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn minimality_under_perturbation() {
        let spec = gaas(4.0);
        let p = SystemParams::new(1.1, 0.5, 0.0).with_delta(0.05);
        let sol = solve_variational_displacement(&spec, &p, false).unwrap();
        let grid = FrequencyGrid::new(&spec, 400);
        let a0 = free_energy_of(&sol.f, &grid, &spec, &p).unwrap();
        assert!((a0 - sol.free_energy).abs() < 1e-12);
        for k in 0..10 {
            let perturbed: Vec<f64> = sol
                .f
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let dir = ((i * (k + 3)) as f64 * 0.7 + k as f64).sin();
                    (f * (1.0 + 0.01 * dir)).clamp(0.0, 1.0)
                })
                .collect();
            assert!(a0 <= free_energy_of(&perturbed, &grid, &spec, &p).unwrap() + 1e-15);
        }
    }

    #[test]
    fn zero_coupling_bound_depends_only_on_shift() {
        let spec = gaas(4.0);
        let grid = FrequencyGrid::new(&spec, 400);
        let p = SystemParams::new(0.0, 0.5, 0.0).with_delta(-0.3);
        let f1 = vec![0.3; 400];
        let f2: Vec<f64> = grid.nu.iter().map(|nu| (nu / 5.0).min(1.0)).collect();
        for f in [f1, f2] {
            let (_, r) = renormalization_factors(&f, &grid).unwrap();
            let a = free_energy_of(&f, &grid, &spec, &p).unwrap();
            let kt = spec.thermal_frequency();
            let dv: f64 = p.delta + r;
            let expected = 0.5 * (r - p.delta) - kt * (2.0 * (dv.abs() / (2.0 * kt)).cosh()).ln();
            assert!((a - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn selects_lower_bound() {
        let spec = gaas(4.0);
        for g in [0.9, 1.1, 1.3] {
            let sol = solve_variational_displacement(&spec, &SystemParams::new(g, 0.5, 0.0), true).unwrap();
            for (_, a) in &sol.seed_free_energies {
                assert!(sol.seed_free_energies.iter().any(|(s, b)| *s == sol.seed && b <= a));
            }
        }
    }

    #[test]
    fn coupling_trend() {
        let spec = gaas(4.0);
        let mut last = 0.0;
        for k in 0..20 {
            let g = 12.0 * k as f64 / 19.0;
            let sol = solve_variational_displacement(&spec, &SystemParams::new(g, 0.5, 0.0), true).unwrap();
            assert!(sol.b_v >= last - 1e-12, "g={g} b={}", sol.b_v);
            last = sol.b_v;
        }
        let strong = solve_variational_displacement(&spec, &SystemParams::new(10.0, 0.5, 0.0), true).unwrap();
        assert!(strong.b_v > 0.99);
        let weak = resonance_condition(&gaas(0.0), &SystemParams::new(1e-6, 0.5, 0.0)).unwrap();
        assert!((weak - 0.1229).abs() < 1e-3);
        let alpha0 = resonance_condition(&BathSpec::new(0.0, 2.23, 4.0), &SystemParams::new(1.0, 0.5, 0.0)).unwrap();
        assert_eq!(alpha0, 0.0);
        let r10 = resonance_condition(&gaas(0.0), &SystemParams::new(10.0, 0.5, 0.0)).unwrap();
        assert!(r10.abs() < weak.abs());
    }
}
