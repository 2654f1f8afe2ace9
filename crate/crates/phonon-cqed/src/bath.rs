//! Phonon environment: super-ohmic spectral density, thermal occupation,
//! bath correlation function, discretised memory kernel and the
//! virtual-phonon pure-dephasing rate.
//!
//! The correlation function is
//! `C(τ) = ∫ J(ν) [coth(βν/2) cos ντ − i sin ντ] dν`, normalised so that the
//! same `J` enters the polaron factor `B = exp(−½∫ J/ν² coth(βν/2) dν)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::units::thermal_frequency;

/// Parameters of the phonon bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Overall coupling strength α (ps²).
    pub alpha: f64,
    /// Cutoff frequency ξ (ps⁻¹).
    pub xi: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Virtual-scattering strength μ (ps²) entering the pure-dephasing rate.
    pub mu: f64,
    /// Upper limit of every frequency integral (ps⁻¹).
    pub nu_max: f64,
    /// Number of Gauss–Legendre nodes on `[0, nu_max]`.
    pub n_quad: usize,
}

impl BathSpec {
    /// GaAs-like defaults for μ, `nu_max = 8ξ` and 2000 quadrature nodes.
    pub fn new(alpha: f64, xi: f64, temperature: f64) -> Self {
        BathSpec {
            alpha,
            xi,
            temperature,
            mu: 0.023,
            nu_max: 8.0 * xi,
            n_quad: 2000,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            bad.push(format!("alpha must be >= 0 (got {})", self.alpha));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            bad.push(format!("xi must be > 0 (got {})", self.xi));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            bad.push(format!("temperature must be >= 0 (got {})", self.temperature));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            bad.push(format!("mu must be >= 0 (got {})", self.mu));
        }
        if !(self.nu_max >= 5.0 * self.xi) {
            bad.push(format!("nu_max must be >= 5 xi (got {})", self.nu_max));
        }
        if self.n_quad < 2 {
            bad.push(format!("n_quad must be >= 2 (got {})", self.n_quad));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(bad.join("; ")))
        }
    }

    /// k_B T/ħ in ps⁻¹.
    pub fn thermal_frequency(&self) -> f64 {
        thermal_frequency(self.temperature)
    }

    /// β = ħ/k_B T in ps, `None` at zero temperature.
    pub fn beta(&self) -> Option<f64> {
        if self.temperature > 0.0 {
            Some(1.0 / self.thermal_frequency())
        } else {
            None
        }
    }

    /// coth(βν/2), equal to 1 at zero temperature.
    pub fn coth_half(&self, nu: f64) -> f64 {
        match self.beta() {
            Some(beta) => 1.0 / (0.5 * beta * nu).tanh(),
            None => 1.0,
        }
    }

    /// tanh(βx/2), equal to 1 at zero temperature for positive `x`.
    pub fn tanh_half(&self, x: f64) -> f64 {
        match self.beta() {
            Some(beta) => (0.5 * beta * x).tanh(),
            None if x > 0.0 => 1.0,
            None if x < 0.0 => -1.0,
            None => 0.0,
        }
    }

    fn j(&self, nu: f64) -> f64 {
        let x = nu / self.xi;
        self.alpha * nu * nu * nu * (-x * x).exp()
    }
}

/// `J(ν) = α ν³ exp(−ν²/ξ²)`.
pub fn spectral_density(nu: f64, spec: &BathSpec) -> Result<f64> {
    if !(nu >= 0.0) {
        return Err(Error::Domain(format!("spectral density needs nu >= 0, got {nu}")));
    }
    Ok(spec.j(nu))
}

/// Bose occupation `1/(e^{ν/T} − 1)` with `ν` in ps⁻¹ and `T` in K.
pub fn bose_occupation(nu: f64, temperature: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("Bose occupation needs nu > 0, got {nu}")));
    }
    if temperature <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (nu / thermal_frequency(temperature)).exp_m1())
}

/// Frequency nodes on `[0, nu_max]` with the bath factors tabulated.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    pub nu: Vec<f64>,
    pub weight: Vec<f64>,
    /// `J(ν)` at each node.
    pub j: Vec<f64>,
    /// `coth(βν/2)` at each node.
    pub coth: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(spec: &BathSpec, n: usize) -> Self {
        let rule = gauss_legendre(n, 0.0, spec.nu_max);
        let j = rule.nodes.iter().map(|&nu| spec.j(nu)).collect();
        let coth = rule.nodes.iter().map(|&nu| spec.coth_half(nu)).collect();
        FrequencyGrid {
            nu: rule.nodes,
            weight: rule.weights,
            j,
            coth,
        }
    }

    /// Grid with the default node count.
    pub fn for_spec(spec: &BathSpec) -> Self {
        Self::new(spec, spec.n_quad)
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// `∫ J(ν) w(ν) dν` for a weight tabulated on the nodes.
    pub fn integrate_j<F: Fn(usize) -> f64>(&self, w: F) -> f64 {
        (0..self.len()).map(|i| self.weight[i] * self.j[i] * w(i)).sum()
    }

    fn correlation(&self, tau: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..self.len() {
            let (s, c) = (self.nu[i] * tau).sin_cos();
            let wj = self.weight[i] * self.j[i];
            re += wj * self.coth[i] * c;
            im -= wj * s;
        }
        Complex64::new(re, im)
    }
}

/// Repeated evaluation of `C(τ)` with an embedded error estimate from a
/// half-size rule.
#[derive(Debug, Clone)]
pub struct CorrelationEvaluator {
    fine: FrequencyGrid,
    coarse: FrequencyGrid,
    scale: f64,
    tolerance: f64,
}

impl CorrelationEvaluator {
    pub fn new(spec: &BathSpec) -> Result<Self> {
        spec.validate()?;
        let fine = FrequencyGrid::for_spec(spec);
        let coarse = FrequencyGrid::new(spec, (spec.n_quad / 2).max(1));
        let scale = fine.integrate_j(|i| fine.coth[i]);
        Ok(CorrelationEvaluator {
            fine,
            coarse,
            scale,
            tolerance: 1e-9,
        })
    }

    pub fn eval(&self, tau: f64) -> Result<Complex64> {
        if !tau.is_finite() {
            return Err(Error::Domain(format!("correlation needs finite tau, got {tau}")));
        }
        let fine = self.fine.correlation(tau);
        let coarse = self.coarse.correlation(tau);
        let err = (fine - coarse).norm();
        if err > self.tolerance * self.scale.max(f64::MIN_POSITIVE) {
            return Err(Error::numerical(
                format!(
                    "bath correlation quadrature not converged at tau = {tau} ps \
                     (estimated error {err:.3e}); increase n_quad"
                ),
                vec![tau, fine.re, fine.im, err],
            ));
        }
        Ok(fine)
    }
}

/// `C(τ) = ∫ J(ν)[coth(βν/2) cos ντ − i sin ντ] dν`.
pub fn bath_correlation(tau: f64, spec: &BathSpec) -> Result<Complex64> {
    CorrelationEvaluator::new(spec)?.eval(tau)
}

/// Discretised memory kernel `η_0 … η_K` for timestep `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    pub dt: f64,
    pub eta: Vec<Complex64>,
}

impl MemoryKernel {
    /// Memory length `K` (largest lag kept).
    pub fn k_mem(&self) -> usize {
        self.eta.len() - 1
    }

    /// Kernel truncated to lags `0..=k`.
    pub fn truncated(&self, k: usize) -> MemoryKernel {
        MemoryKernel {
            dt: self.dt,
            eta: self.eta[..=k.min(self.k_mem())].to_vec(),
        }
    }

    /// Zero kernel of length `k + 1` (no bath).
    pub fn zero(dt: f64, k: usize) -> MemoryKernel {
        MemoryKernel {
            dt,
            eta: vec![Complex64::new(0.0, 0.0); k + 1],
        }
    }
}

// (x − sin x)/x³ without cancellation.
fn x_minus_sin_over_cube(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362_880.0
    } else {
        (x - x.sin()) / (x * x * x)
    }
}

struct KernelWeights {
    nu: Vec<f64>,
    // J(ν)·4 sin²(ν dt/2)/ν² (times quadrature weight)
    square: Vec<f64>,
    coth: Vec<f64>,
    diag: Complex64,
}

impl KernelWeights {
    fn new(grid: &FrequencyGrid, dt: f64) -> Self {
        let mut square = Vec::with_capacity(grid.len());
        let mut diag = Complex64::new(0.0, 0.0);
        for i in 0..grid.len() {
            let nu = grid.nu[i];
            let wj = grid.weight[i] * grid.j[i];
            let s = (0.5 * nu * dt).sin();
            let sq = 4.0 * s * s / (nu * nu);
            square.push(wj * sq);
            let x = nu * dt;
            diag += Complex64::new(
                wj * grid.coth[i] * 0.5 * sq,
                -wj * dt * dt * dt * nu * x_minus_sin_over_cube(x),
            );
        }
        KernelWeights {
            nu: grid.nu.clone(),
            square,
            coth: grid.coth.clone(),
            diag,
        }
    }

    fn eta(&self, k: usize, dt: f64) -> Complex64 {
        if k == 0 {
            return self.diag;
        }
        let t = k as f64 * dt;
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..self.nu.len() {
            let (s, c) = (self.nu[i] * t).sin_cos();
            re += self.square[i] * self.coth[i] * c;
            im -= self.square[i] * s;
        }
        Complex64::new(re, im)
    }
}

/// Memory kernel elements `η_k = ∫∫ C(t′ − t″) dt′ dt″` over the timestep
/// squares (`k ≥ 1`) and the triangle (`k = 0`), with the time integrals
/// done analytically under one frequency quadrature.
pub fn memory_kernel(dt: f64, k_max: usize, spec: &BathSpec) -> Result<MemoryKernel> {
    if !(dt > 0.0) || k_max < 1 {
        return Err(Error::Domain(format!(
            "memory kernel needs dt > 0 and k_max >= 1 (got dt = {dt}, k_max = {k_max})"
        )));
    }
    spec.validate()?;
    let fine = KernelWeights::new(&FrequencyGrid::for_spec(spec), dt);
    let coarse = KernelWeights::new(&FrequencyGrid::new(spec, (spec.n_quad / 2).max(1)), dt);
    let scale = fine.diag.norm().max(f64::MIN_POSITIVE);
    let mut eta = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let e = fine.eta(k, dt);
        let err = (e - coarse.eta(k, dt)).norm();
        if spec.alpha > 0.0 && err > 1e-9 * scale {
            return Err(Error::numerical(
                format!("memory kernel quadrature not converged at lag {k}; increase n_quad"),
                vec![k as f64, e.re, e.im, err],
            ));
        }
        eta.push(e);
    }
    Ok(MemoryKernel { dt, eta })
}

/// Memory kernel truncated at the smallest `K` beyond which
/// `|η_k|/|η_0| < tolerance` for a sustained run of lags.
pub fn memory_kernel_for_tolerance(
    dt: f64,
    tolerance: f64,
    spec: &BathSpec,
    k_cap: usize,
) -> Result<MemoryKernel> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::Domain(format!("memory tolerance must lie in (0,1), got {tolerance}")));
    }
    if spec.alpha == 0.0 {
        return Ok(MemoryKernel::zero(dt, 1));
    }
    spec.validate()?;
    let w = KernelWeights::new(&FrequencyGrid::for_spec(spec), dt);
    let eta0 = w.diag.norm();
    let run = ((2.0 / (spec.xi * dt)).ceil() as usize).max(16);
    let mut eta = vec![w.diag];
    let mut last_above = 0usize;
    let mut k = 1usize;
    loop {
        let e = w.eta(k, dt);
        eta.push(e);
        if e.norm() >= tolerance * eta0 {
            last_above = k;
        }
        if k >= last_above + run {
            break;
        }
        if k >= k_cap {
            return Err(Error::Resource(format!(
                "memory kernel still above tolerance {tolerance:e} at lag {k} (cap {k_cap}); \
                 raise the memory tolerance or the lag cap"
            )));
        }
        k += 1;
    }
    let k_mem = last_above.max(1);
    eta.truncate(k_mem + 1);
    // Same quadrature-sanity check as the fixed-length routine.
    let coarse = KernelWeights::new(&FrequencyGrid::new(spec, (spec.n_quad / 2).max(1)), dt);
    for probe in [0, k_mem / 2, k_mem] {
        let err = (eta[probe] - coarse.eta(probe, dt)).norm();
        if err > 1e-9 * eta0 {
            return Err(Error::numerical(
                format!("memory kernel quadrature not converged at lag {probe}; increase n_quad"),
                vec![probe as f64, err],
            ));
        }
    }
    Ok(MemoryKernel { dt, eta })
}

/// Pure-dephasing rate from virtual phonon scattering,
/// `γ*(T) = (α²μ/ξ⁴) ∫ ν¹⁰ e^{−2ν²/ξ²} n(n+1) dν`.
pub fn pure_dephasing_rate(spec: &BathSpec) -> Result<f64> {
    spec.validate()?;
    let kt = spec.thermal_frequency();
    if kt == 0.0 || spec.alpha == 0.0 || spec.mu == 0.0 {
        return Ok(0.0);
    }
    let integrand = |nu: f64| {
        let x = nu / spec.xi;
        let q = (-nu / kt).exp();
        let occ = q / ((1.0 - q) * (1.0 - q));
        nu.powi(10) * (-2.0 * x * x).exp() * occ
    };
    let fine = gauss_legendre(spec.n_quad, 0.0, spec.nu_max).integrate(integrand);
    let coarse = gauss_legendre((spec.n_quad / 2).max(1), 0.0, spec.nu_max).integrate(integrand);
    if (fine - coarse).abs() > 1e-8 * fine.abs() {
        return Err(Error::numerical(
            "pure-dephasing quadrature not converged",
            vec![fine, coarse],
        ));
    }
    Ok(spec.alpha * spec.alpha * spec.mu / spec.xi.powi(4) * fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;

    fn gaas(t: f64) -> BathSpec {
        BathSpec::new(0.025, 2.23, t)
    }

    #[test]
    fn spectral_density_values() {
        let s = gaas(0.0);
        assert_eq!(spectral_density(0.0, &s).unwrap(), 0.0);
        assert!((spectral_density(2.23, &s).unwrap() - 0.1020).abs() < 1e-4);
        assert!(spectral_density(5.0 * 2.23, &s).unwrap() < 1e-9);
        assert!(spectral_density(-1.0, &s).is_err());
    }

    #[test]
    fn bose_values() {
        assert_eq!(bose_occupation(1.3, 0.0).unwrap(), 0.0);
        let t = 10.0;
        let nu = thermal_frequency(t);
        let expected = 1.0 / (std::f64::consts::E - 1.0);
        assert!((bose_occupation(nu, t).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.5820).abs() < 1e-4);
        let small = 0.005 * nu;
        let n = bose_occupation(small, t).unwrap();
        assert!((n * small / nu - 1.0).abs() < 0.01);
        assert!(bose_occupation(0.0, t).is_err());
        assert!(bose_occupation(-2.0, t).is_err());
    }

    #[test]
    fn correlation_at_zero_time() {
        let s = gaas(0.0);
        let c0 = bath_correlation(0.0, &s).unwrap();
        let analytic = s.alpha * s.xi.powi(4) / 2.0;
        assert!((c0.re - analytic).abs() < 1e-10 * analytic);
        assert_eq!(c0.im, 0.0);
        for t in [4.0, 150.0] {
            assert_eq!(bath_correlation(0.0, &gaas(t)).unwrap().im, 0.0);
        }
        // At finite temperature the Gaussian cutoff dominates the decay; at
        // T = 0 the ν³ onset leaves an algebraic τ⁻⁴ tail (≈ 1.5e-3 here).
        let warm = gaas(4.0);
        let far = bath_correlation(10.0 / warm.xi, &warm).unwrap();
        assert!(far.norm() < 1e-3 * bath_correlation(0.0, &warm).unwrap().norm());
    }

    #[test]
    fn correlation_hermitian() {
        let ev = CorrelationEvaluator::new(&gaas(4.0)).unwrap();
        for k in 0..25 {
            let tau = 0.37 * k as f64 - 3.0;
            let a = ev.eval(tau).unwrap();
            let b = ev.eval(-tau).unwrap();
            assert!((a - b.conj()).norm() < 1e-13);
        }
    }

    // Nested time quadrature of C over the step square or triangle.
    fn nested_eta(ev: &CorrelationEvaluator, dt: f64, k: usize) -> Complex64 {
        let rule = composite(0.0, dt, 1, 24);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
            if k == 0 {
                // ∫_0^dt (dt − s) C(s) ds
                acc += wu * (dt - u) * ev.eval(u).unwrap();
            } else {
                for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
                    acc += wu * wv * ev.eval(k as f64 * dt + u - v).unwrap();
                }
            }
        }
        acc
    }

    #[test]
    fn kernel_matches_nested_quadrature() {
        for t in [0.0, 4.0, 150.0] {
            let spec = gaas(t);
            let ev = CorrelationEvaluator::new(&spec).unwrap();
            for dt in [0.01, 0.05, 0.1] {
                let kernel = memory_kernel(dt, 8, &spec).unwrap();
                for k in 0..=8 {
                    let oracle = nested_eta(&ev, dt, k);
                    let rel = (kernel.eta[k] - oracle).norm() / oracle.norm();
                    assert!(rel < 1e-8, "T={t} dt={dt} k={k} rel={rel:e}");
                }
            }
        }
    }

    #[test]
    fn kernel_small_step_scaling() {
        let spec = gaas(4.0);
        let a = memory_kernel(0.01, 1, &spec).unwrap().eta[0];
        let b = memory_kernel(0.005, 1, &spec).unwrap().eta[0];
        let ratio = b.norm() / a.norm();
        assert!((ratio - 0.25).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn kernel_tolerance_truncation() {
        let spec = gaas(4.0);
        let k = memory_kernel_for_tolerance(0.05, 1e-7, &spec, 100_000).unwrap();
        let eta0 = k.eta[0].norm();
        let beyond = memory_kernel(0.05, k.k_mem() + 40, &spec).unwrap();
        for e in &beyond.eta[k.k_mem() + 1..] {
            assert!(e.norm() < 1e-7 * eta0);
        }
        assert!(k.eta[k.k_mem()].norm() >= 1e-7 * eta0);
        assert_eq!(memory_kernel_for_tolerance(0.05, 1e-7, &BathSpec::new(0.0, 2.23, 4.0), 10)
            .unwrap()
            .eta
            .len(), 2);
    }

    #[test]
    fn dephasing_rate_paper_values() {
        let spec = BathSpec::new(0.025, 2.2, 4.0);
        assert_eq!(pure_dephasing_rate(&spec.with_temperature(0.0)).unwrap(), 0.0);
        let g4 = pure_dephasing_rate(&spec).unwrap();
        assert!((g4 / 6.7e-6 - 1.0).abs() < 0.1, "{g4:e}");
        let g150 = pure_dephasing_rate(&spec.with_temperature(150.0)).unwrap();
        assert!((g150 / 0.08 - 1.0).abs() < 0.1, "{g150:e}");
    }

    #[test]
    fn dephasing_rate_monotone() {
        let spec = gaas(0.0);
        let mut last = -1.0;
        for i in 0..20 {
            let t = 200.0 * i as f64 / 19.0;
            let g = pure_dephasing_rate(&spec.with_temperature(t)).unwrap();
            assert!(g > last || (i == 0 && g == 0.0));
            last = g;
        }
    }

    #[test]
    fn zero_temperature_detailed_balance() {
        let spec = gaas(0.0);
        let ev = CorrelationEvaluator::new(&spec).unwrap();
        let half = 20.0;
        let step = 0.05;
        let n = (half / step) as i64;
        let samples: Vec<(f64, Complex64)> = (-n..=n)
            .map(|k| {
                let tau = k as f64 * step;
                let hann = 0.5 * (1.0 + (std::f64::consts::PI * tau / half).cos());
                (tau, hann * ev.eval(tau).unwrap())
            })
            .collect();
        let (mut neg, mut total) = (0.0, 0.0);
        for m in -400..=400 {
            let omega = m as f64 * 0.05;
            let s: Complex64 = samples
                .iter()
                .map(|&(tau, c)| c * Complex64::from_polar(step, omega * tau))
                .sum();
            total += s.norm();
            if omega < 0.0 {
                neg += s.norm();
            }
        }
        assert!(neg < 0.01 * total, "negative-frequency weight {}", neg / total);
    }

    #[test]
    fn validation() {
        let mut s = gaas(4.0);
        s.nu_max = 3.0 * s.xi;
        assert!(s.validate().is_err());
        assert!(BathSpec::new(-1.0, 2.0, 1.0).validate().is_err());
        assert!(BathSpec::new(0.1, 0.0, 1.0).validate().is_err());
    }
}
