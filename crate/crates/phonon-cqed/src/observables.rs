//! Physical outputs derived from populations and two-time correlations.
//!
//! Frequencies are in ps⁻¹ relative to the bare exciton line. A component
//! of `a(t)` oscillating as `e^{−iω₀t}` appears at `+ω₀`, so emission
//! red-shifted by phonon emission sits at negative `ω`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::ptensor::{CorrelationGrid, PopulationSeries};
use crate::rates::purcell_quantities;
use crate::system::SystemParams;
use crate::varpol::VariationalSolution;

/// Largest transform length per axis for the two-dimensional spectrum.
pub const MAX_MATRIX_DIM: usize = 4096;

/// Fraction of the time window covered by the raised-cosine taper.
pub const TAPER_FRACTION: f64 = 0.1;

/// Relative threshold on the final photon correlation below which the
/// window is considered complete.
pub const WINDOW_DECAY: f64 = 1e-4;

/// Largest residual excitation tolerated by the efficiency integral.
pub const RESIDUAL_EXCITATION: f64 = 1e-3;

/// Default relative prominence for peak detection.
pub const PEAK_PROMINENCE: f64 = 0.05;

/// Smallest sideband weight, relative to its line, reported as a feature.
pub const SIDEBAND_MIN_FRACTION: f64 = 0.002;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Increasing frequency grid, ps⁻¹.
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// `Σ S(ω) Δω`, equal to `2π η`.
    pub norm: f64,
    /// Number of negative leakage values set to zero.
    pub clipped: usize,
}

impl Spectrum {
    pub fn d_omega(&self) -> f64 {
        if self.omega.len() < 2 {
            return 0.0;
        }
        self.omega[1] - self.omega[0]
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Weight in `[lo, hi]`.
    pub fn weight_between(&self, lo: f64, hi: f64) -> f64 {
        self.omega
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(_, s)| s)
            .sum::<f64>()
            * self.d_omega()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn taper(grid: &CorrelationGrid) -> Vec<f64> {
    let n = grid.len();
    let t_max = grid.t_max;
    let start = (1.0 - TAPER_FRACTION) * t_max;
    (0..n)
        .map(|i| {
            let t = i as f64 * grid.dt;
            if t <= start || t_max == 0.0 {
                1.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * (t - start) / (TAPER_FRACTION * t_max)).cos())
            }
        })
        .collect()
}

fn trapezoid(n: usize) -> Vec<f64> {
    let mut c = vec![1.0; n];
    if n > 1 {
        c[0] = 0.5;
        c[n - 1] = 0.5;
    }
    c
}

/// Factor restoring the trapezoidal diagonal weight after tapering.
fn renormalization(grid: &CorrelationGrid, w: &[f64]) -> f64 {
    let diag = grid.diagonal();
    let trap: f64 = trapezoid(diag.len()).iter().zip(&diag).map(|(c, g)| c * g).sum();
    let tapered: f64 = w.iter().zip(&diag).map(|(w, g)| w * w * g).sum();
    if tapered > 0.0 {
        trap / tapered
    } else {
        1.0
    }
}

fn frequencies(n_fft: usize, dt: f64) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / (n_fft as f64 * dt);
    let half = n_fft / 2;
    (0..n_fft).map(|k| (k as f64 - half as f64) * step).collect()
}

/// Index into an unshifted FFT output for position `k` of the shifted axis.
fn unshift(k: usize, n_fft: usize) -> usize {
    (k + n_fft - n_fft / 2) % n_fft
}

fn check_grid(grid: &CorrelationGrid, kappa: f64) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Domain("correlation grid needs at least two time points".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// `S(ω) = κ ∬ e^{−iω(t−t′)} ⟨a†(t)a(t′)⟩ dt dt′` on an FFT grid of length
/// `2·n·padding`.
pub fn emission_spectrum(grid: &CorrelationGrid, kappa: f64, padding: usize) -> Result<Spectrum> {
    check_grid(grid, kappa)?;
    if padding == 0 {
        return Err(Error::Domain("padding must be at least 1".into()));
    }
    let n = grid.len();
    let w = taper(grid);
    let r = renormalization(grid, &w);
    let n_fft = 2 * n * padding;
    let mut buf = vec![Complex64::default(); n_fft];
    for m in 0..n {
        buf[m] = (0..n - m).map(|j| w[j + m] * w[j] * grid.g[(j + m, j)]).sum();
    }
    let h0 = buf[0].re;
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let scale = kappa * grid.dt * grid.dt * r;
    let omega = frequencies(n_fft, grid.dt);
    let mut values: Vec<f64> = (0..n_fft).map(|k| scale * (2.0 * buf[unshift(k, n_fft)].re - h0)).collect();
    let clipped = clip_negative(&mut values);
    let norm = values.iter().sum::<f64>() * (omega[1] - omega[0]);
    Ok(Spectrum {
        omega,
        values,
        norm,
        clipped,
    })
}

fn clip_negative(values: &mut [f64]) -> usize {
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut count = 0;
    let mut worst = 0.0f64;
    for v in values.iter_mut() {
        if *v < 0.0 {
            worst = worst.min(*v);
            *v = 0.0;
            count += 1;
        }
    }
    if worst < -1e-10 * max {
        log::warn!("spectrum had negative values down to {worst:e} (max {max:e}); clipped {count}");
    }
    count
}

/// Two-frequency spectrum `S(ω, ω′)` on the same axis as
/// `emission_spectrum(grid, kappa, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub omega: Vec<f64>,
    pub s: DMatrix<Complex64>,
}

pub fn spectral_correlation_matrix(grid: &CorrelationGrid, kappa: f64) -> Result<SpectralMatrix> {
    check_grid(grid, kappa)?;
    let n = grid.len();
    let n_fft = 2 * n;
    if n_fft > MAX_MATRIX_DIM {
        return Err(Error::Resource(format!(
            "spectral matrix would be {n_fft}×{n_fft}; limit is {MAX_MATRIX_DIM} per axis"
        )));
    }
    let w = taper(grid);
    let r = renormalization(grid, &w);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    // rows: inverse transform over t′ gives e^{+iω′t′}
    let mut rows = vec![vec![Complex64::default(); n_fft]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for j in 0..n {
            row[j] = w[i] * w[j] * grid.g[(i, j)];
        }
        inv.process(row);
    }
    let scale = kappa * grid.dt * grid.dt * r;
    let mut s = DMatrix::from_element(n_fft, n_fft, Complex64::default());
    let mut col = vec![Complex64::default(); n_fft];
    for l in 0..n_fft {
        col.iter_mut().for_each(|c| *c = Complex64::default());
        let src = unshift(l, n_fft);
        for i in 0..n {
            col[i] = rows[i][src];
        }
        fwd.process(&mut col);
        for k in 0..n_fft {
            s[(k, l)] = scale * col[unshift(k, n_fft)];
        }
    }
    Ok(SpectralMatrix {
        omega: frequencies(n_fft, grid.dt),
        s,
    })
}

fn check_window(grid: &CorrelationGrid) -> Result<()> {
    let diag = grid.diagonal();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let last = *diag.last().expect("non-empty grid");
    if max <= 0.0 {
        return Err(Error::Usage("correlation grid carries no photon population".into()));
    }
    if last > WINDOW_DECAY * max {
        return Err(Error::Usage(format!(
            "photon population at t_max is {:.2e} of its maximum (needs < {WINDOW_DECAY:e}); increase t_max",
            last / max
        )));
    }
    Ok(())
}

fn clip_unit(name: &str, v: f64) -> f64 {
    if !(0.0..=1.0).contains(&v) {
        log::warn!("{name} = {v} outside [0, 1]; clipped");
    }
    v.clamp(0.0, 1.0)
}

/// `I = κ² ∬ |G(t, t′)|² dt dt′ / η²`, the time-domain form of the
/// spectral definition.
pub fn indistinguishability(grid: &CorrelationGrid, kappa: f64) -> Result<f64> {
    check_grid(grid, kappa)?;
    check_window(grid)?;
    let n = grid.len();
    let c = trapezoid(n);
    let mut num = 0.0;
    for j in 0..n {
        for i in 0..n {
            num += c[i] * c[j] * grid.g[(i, j)].norm_sqr();
        }
    }
    let den: f64 = (0..n).map(|i| c[i] * grid.g[(i, i)].re).sum();
    Ok(clip_unit("indistinguishability", num / (den * den)))
}

/// `I = ∬|S(ω,ω′)|² dω dω′ / [∫S(ω,ω) dω]²` from the two-frequency spectrum.
pub fn indistinguishability_spectral(grid: &CorrelationGrid, kappa: f64) -> Result<f64> {
    check_window(grid)?;
    let m = spectral_correlation_matrix(grid, kappa)?;
    let num: f64 = m.s.iter().map(|z| z.norm_sqr()).sum();
    let den: f64 = (0..m.s.nrows()).map(|k| m.s[(k, k)].re).sum();
    Ok(clip_unit("indistinguishability", num / (den * den)))
}

/// `η = κ ∫ ⟨a†a⟩ dt` by the trapezoidal rule.
pub fn quantum_efficiency(series: &PopulationSeries, kappa: f64) -> Result<f64> {
    if series.states.len() < 2 {
        return Err(Error::Domain("population series needs at least two points".into()));
    }
    let last = series.states.last().expect("non-empty series");
    let residual = last[(1, 1)].re + last[(2, 2)].re;
    if residual > RESIDUAL_EXCITATION {
        return Err(Error::Usage(format!(
            "excitation {residual:.2e} remains at t = {:.3} ps; extend the time window",
            series.dt * (series.states.len() - 1) as f64
        )));
    }
    Ok(clip_unit("efficiency", efficiency_integral(&series.photon_number(), series.dt, kappa)))
}

/// `κ ∫ ⟨a†a⟩ dt` from the diagonal of a correlation grid.
pub fn efficiency_from_grid(grid: &CorrelationGrid, kappa: f64) -> Result<f64> {
    check_grid(grid, kappa)?;
    check_window(grid)?;
    Ok(clip_unit("efficiency", efficiency_integral(&grid.diagonal(), grid.dt, kappa)))
}

fn efficiency_integral(photons: &[f64], dt: f64, kappa: f64) -> f64 {
    kappa * dt * trapezoid(photons.len()).iter().zip(photons).map(|(c, n)| c * n).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Parabolically refined position.
    pub omega: f64,
    /// Parabolically refined height.
    pub height: f64,
    pub prominence: f64,
}

fn parabolic(s: &Spectrum, i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= s.len() {
        return (s.omega[i], s.values[i]);
    }
    let (a, b, c) = (s.values[i - 1], s.values[i], s.values[i + 1]);
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return (s.omega[i], b);
    }
    let x = 0.5 * (a - c) / den;
    (s.omega[i] + x * s.d_omega(), b - 0.25 * (a - c) * x)
}

/// Local maxima whose prominence exceeds `rel_prominence` times the global
/// maximum, in increasing frequency.
pub fn find_peaks(s: &Spectrum, rel_prominence: f64) -> Vec<Peak> {
    let v = &s.values;
    let n = v.len();
    let max = s.max_value();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            // handle plateaus by stepping to their right edge
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                let prominence = prominence(v, i);
                if prominence > rel_prominence * max {
                    let (omega, height) = parabolic(s, i);
                    peaks.push(Peak {
                        index: i,
                        omega,
                        height,
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn prominence(v: &[f64], i: usize) -> f64 {
    let h = v[i];
    let mut left_min = h;
    for k in (0..i).rev() {
        if v[k] > h {
            break;
        }
        left_min = left_min.min(v[k]);
    }
    let mut right_min = h;
    for &x in &v[i + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

/// Polariton asymmetry `A = (S₋ − S₊)/(S₋ + S₊)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Asymmetry {
    Resolved { value: f64, lower: Peak, upper: Peak },
    NotApplicable(String),
}

impl Asymmetry {
    pub fn value(&self) -> Option<f64> {
        match self {
            Asymmetry::Resolved { value, .. } => Some(*value),
            Asymmetry::NotApplicable(_) => None,
        }
    }
}

/// Peaks nearest the polariton lines `R_v ± g_v` give `S₋` and `S₊`.
pub fn polariton_asymmetry(spectrum: &Spectrum, sol: &VariationalSolution) -> Asymmetry {
    asymmetry_near(spectrum, sol.r_v, 0.5 * sol.eta_v)
}

/// Asymmetry of the peaks nearest `centre ± half_splitting`.
pub fn asymmetry_near(spectrum: &Spectrum, centre: f64, half_splitting: f64) -> Asymmetry {
    let peaks = find_peaks(spectrum, PEAK_PROMINENCE);
    let tol = (0.5 * half_splitting).max(2.0 * spectrum.d_omega());
    let nearest = |target: f64| {
        peaks
            .iter()
            .filter(|p| (p.omega - target).abs() < tol)
            .min_by(|a, b| (a.omega - target).abs().total_cmp(&(b.omega - target).abs()))
            .copied()
    };
    let (lo, hi) = (centre - half_splitting, centre + half_splitting);
    match (nearest(lo), nearest(hi)) {
        (Some(lower), Some(upper)) if lower.index != upper.index => Asymmetry::Resolved {
            value: (lower.height - upper.height) / (lower.height + upper.height),
            lower,
            upper,
        },
        _ => Asymmetry::NotApplicable(format!(
            "no pair of resolved peaks near {lo:.4} and {hi:.4} ps⁻¹ ({} peaks found)",
            peaks.len()
        )),
    }
}

/// Lorentzian plus quadratic baseline fitted inside a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub centre: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    /// `π·amplitude·fwhm/2`, the integrated Lorentzian weight.
    pub weight: f64,
    pub baseline: [f64; 3],
    pub rms_residual: f64,
}

impl LineFit {
    pub fn lorentzian(&self, omega: f64) -> f64 {
        let x = 2.0 * (omega - self.centre) / self.fwhm;
        self.amplitude / (1.0 + x * x)
    }
}

fn fit_fixed(points: &[(f64, f64)], centre: f64, fwhm: f64) -> Option<(f64, [f64; 3], f64)> {
    let m = points.len();
    let a = DMatrix::from_fn(m, 4, |i, k| {
        let x = points[i].0 - centre;
        match k {
            0 => 1.0 / (1.0 + (2.0 * x / fwhm).powi(2)),
            1 => 1.0,
            2 => x,
            _ => x * x,
        }
    });
    let b = DVector::from_iterator(m, points.iter().map(|p| p.1));
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let resid = (&a * &coef - &b).norm_squared();
    Some((coef[0], [coef[1], coef[2], coef[3]], resid))
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Least-squares Lorentzian with a quadratic baseline on
/// `[centre − half_window, centre + half_window]`.
pub fn fit_line(spectrum: &Spectrum, centre_guess: f64, half_window: f64) -> Result<LineFit> {
    let points: Vec<(f64, f64)> = spectrum
        .omega
        .iter()
        .zip(&spectrum.values)
        .filter(|(w, _)| (**w - centre_guess).abs() <= half_window)
        .map(|(w, s)| (*w, *s))
        .collect();
    if points.len() < 8 {
        return Err(Error::Usage(format!(
            "line window ±{half_window} ps⁻¹ holds only {} samples; refine the frequency grid",
            points.len()
        )));
    }
    let dw = spectrum.d_omega();
    let cost = |c: f64, w: f64| fit_fixed(&points, c, w).map_or(f64::INFINITY, |f| f.2);
    let (mut c, mut w) = (centre_guess, half_window);
    for _ in 0..4 {
        let lw = golden(|lw| cost(c, lw.exp()), (0.5 * dw).ln(), (4.0 * half_window).ln(), 60);
        w = lw.exp();
        c = golden(|x| cost(x, w), c - 2.0 * dw, c + 2.0 * dw, 60);
    }
    let (amplitude, baseline, resid) = fit_fixed(&points, c, w)
        .ok_or_else(|| Error::numerical("line fit failed", vec![c, w]))?;
    Ok(LineFit {
        centre: c,
        fwhm: w,
        amplitude,
        weight: 0.5 * std::f64::consts::PI * amplitude * w,
        baseline,
        rms_residual: (resid / points.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sideband {
    /// `1 − (line weight)/(total weight)`.
    pub fraction: f64,
    /// Share of the sideband weight lying below the line centre.
    pub red_fraction: f64,
    pub line: LineFit,
}

/// Default half-window `3(Γ + γ + 2γ*)` around the zero-phonon line.
pub fn default_line_window(p: &SystemParams) -> Result<f64> {
    let q = purcell_quantities(p)?;
    Ok(3.0 * (q.gamma + p.gamma + 2.0 * p.gamma_star))
}

/// Splits a spectrum into its dominant narrow line and the remainder.
pub fn sideband_fraction(spectrum: &Spectrum, half_window: f64) -> Result<Sideband> {
    if spectrum.norm <= 0.0 {
        return Err(Error::Usage("spectrum carries no weight".into()));
    }
    let peaks = find_peaks(spectrum, PEAK_PROMINENCE);
    let main = peaks
        .iter()
        .max_by(|a, b| a.height.total_cmp(&b.height))
        .ok_or_else(|| Error::Usage("spectrum has no detectable line".into()))?;
    if let Some(other) = peaks.iter().find(|p| p.index != main.index && (p.omega - main.omega).abs() < half_window) {
        return Err(Error::Usage(format!(
            "line window ±{half_window} ps⁻¹ reaches the neighbouring peak at {:.4} ps⁻¹",
            other.omega
        )));
    }
    let line = fit_line(spectrum, main.omega, half_window)?;
    let fraction = (1.0 - line.weight / spectrum.norm).clamp(0.0, 1.0);
    let (mut red, mut all) = (0.0, 0.0);
    for (&w, &s) in spectrum.omega.iter().zip(&spectrum.values) {
        let rest = (s - line.lorentzian(w)).max(0.0);
        all += rest;
        if w < line.centre {
            red += rest;
        }
    }
    Ok(Sideband {
        fraction,
        red_fraction: if all > 0.0 { red / all } else { 0.5 },
        line,
    })
}

/// Full width at half maximum of the peak at `index`, from linear
/// interpolation of the half-height crossings.
pub fn half_width(s: &Spectrum, index: usize) -> f64 {
    let half = 0.5 * s.values[index];
    let v = &s.values;
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
        for k in range {
            if v[k] < half {
                let inner = (k as isize - step) as usize;
                let frac = (v[inner] - half) / (v[inner] - v[k]);
                return s.omega[inner] + frac * (s.omega[k] - s.omega[inner]);
            }
        }
        s.omega[if step > 0 { v.len() - 1 } else { 0 }]
    };
    let right = cross(&mut (index + 1..v.len()), 1);
    let left = cross(&mut (0..index).rev(), -1);
    right - left
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Narrow line detected directly in the spectrum.
    Line,
    /// Excess weight on the red side of a line.
    Sideband,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub kind: FeatureKind,
    pub omega: f64,
    pub height: f64,
    /// Integrated weight: `πhw/2` for a line, the positive residual for a
    /// sideband.
    pub weight: f64,
}

/// Lines plus their red phonon sidebands.
///
/// Each line is modelled as a Lorentzian with its measured height and
/// width. The positive remainder on the red side of a line, between three
/// line widths and `span` below its centre and away from every other line,
/// counts as a sideband when it carries at least `min_fraction` of the line
/// weight. A sideband is placed at the centroid of that remainder.
pub fn spectral_features(s: &Spectrum, span: f64, min_fraction: f64) -> Vec<Feature> {
    let lines: Vec<(f64, f64, f64)> = find_peaks(s, PEAK_PROMINENCE)
        .iter()
        .map(|p| (p.omega, p.height, half_width(s, p.index).max(2.0 * s.d_omega())))
        .collect();
    let model = |w: f64| -> f64 {
        lines
            .iter()
            .map(|&(c, h, fw)| h / (1.0 + (2.0 * (w - c) / fw).powi(2)))
            .sum()
    };
    let dw = s.d_omega();
    let mut features = Vec::new();
    for &(c, h, fw) in &lines {
        let weight = 0.5 * std::f64::consts::PI * h * fw;
        features.push(Feature {
            kind: FeatureKind::Line,
            omega: c,
            height: h,
            weight,
        });
        let (mut excess, mut moment, mut top) = (0.0, 0.0, 0.0f64);
        for (&w, &v) in s.omega.iter().zip(&s.values) {
            if w < c - span || w > c - 3.0 * fw {
                continue;
            }
            if lines.iter().any(|&(c2, _, fw2)| (w - c2).abs() < 3.0 * fw2) {
                continue;
            }
            let r = (v - model(w)).max(0.0);
            excess += r * dw;
            moment += r * w * dw;
            top = top.max(r);
        }
        if excess >= min_fraction * weight && excess > 0.0 {
            features.push(Feature {
                kind: FeatureKind::Sideband,
                omega: moment / excess,
                height: top,
                weight: excess,
            });
        }
    }
    features.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    features
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{initial_state, lindblad_correlation_grid, lindblad_trajectory};

    fn markov_grid(p: &SystemParams, dt: f64, steps: usize) -> CorrelationGrid {
        CorrelationGrid::new(dt, lindblad_correlation_grid(p, &initial_state(), dt, steps))
    }

    fn series(p: &SystemParams, dt: f64, steps: usize) -> PopulationSeries {
        PopulationSeries {
            dt,
            states: lindblad_trajectory(p, &initial_state(), dt, steps),
        }
    }

    #[test]
    fn pure_photon_limits() {
        let p = SystemParams::new(0.3, 0.5, 0.0);
        let grid = markov_grid(&p, 0.1, 500);
        assert!((indistinguishability(&grid, p.kappa).unwrap() - 1.0).abs() < 1e-3);
        let eta = quantum_efficiency(&series(&p, 0.1, 500), p.kappa).unwrap();
        assert!((eta - 1.0).abs() < 1e-3);
        let s = emission_spectrum(&grid, p.kappa, 2).unwrap();
        assert!((s.norm / (2.0 * std::f64::consts::PI) - eta).abs() < 0.01 * eta);
    }

    #[test]
    fn purcell_efficiency_and_width() {
        let p = SystemParams::new(0.05, 0.5, 0.01);
        let eta = quantum_efficiency(&series(&p, 0.2, 3000), p.kappa).unwrap();
        assert!((eta - 2.0 / 3.0).abs() < 0.02 * 2.0 / 3.0);
        let grid = markov_grid(&p, 0.5, 1200);
        let s = emission_spectrum(&grid, p.kappa, 4).unwrap();
        let fit = fit_line(&s, 0.0, 0.15).unwrap();
        assert!((fit.fwhm - 0.03).abs() < 0.1 * 0.03, "{}", fit.fwhm);
        assert!(fit.centre.abs() < s.d_omega());
        assert!(quantum_efficiency(&series(&p, 0.2, 100), p.kappa).is_err());
    }

    #[test]
    fn doublet_splitting() {
        let p = SystemParams::new(1.1, 0.5, 0.0);
        let grid = markov_grid(&p, 0.05, 1000);
        let s = emission_spectrum(&grid, p.kappa, 4).unwrap();
        let peaks = find_peaks(&s, PEAK_PROMINENCE);
        assert_eq!(peaks.len(), 2);
        let split = peaks[1].omega - peaks[0].omega;
        assert!((split - 2.2).abs() < 0.05 * 2.2, "{split}");
        let a = asymmetry_near(&s, 0.0, 1.1).value().unwrap();
        assert!(a.abs() < 1e-3);
    }

    #[test]
    fn dephasing_against_regression() {
        let p = SystemParams::new(0.05, 0.5, 0.0).with_gamma_star(0.01);
        let dt = 0.5;
        let grid = markov_grid(&p, dt, 1000);
        let i = indistinguishability(&grid, p.kappa).unwrap();
        // fine-grid reference of the same regression-theorem grid
        let fine = markov_grid(&p, 0.25, 2000);
        let reference = indistinguishability(&fine, p.kappa).unwrap();
        assert!((i - reference).abs() < 1e-3, "{i} vs {reference}");
        assert!(i < 0.9);
        let spectral = indistinguishability_spectral(&grid, p.kappa).unwrap();
        assert!((spectral - reference).abs() < 0.01 * reference);
    }

    #[test]
    fn matrix_properties() {
        let p = SystemParams::new(0.2, 0.5, 0.0);
        let grid = markov_grid(&p, 0.1, 300);
        let m = spectral_correlation_matrix(&grid, p.kappa).unwrap();
        let s = emission_spectrum(&grid, p.kappa, 1).unwrap();
        let max = s.max_value();
        for k in 0..s.len() {
            assert!((m.s[(k, k)].re - s.values[k]).abs() < 1e-10 * max);
            assert!(m.s[(k, k)].im.abs() < 1e-10 * max);
        }
        let n = m.omega.len();
        let mut x = 0.37_f64;
        for _ in 0..100 {
            x = (x * 9.13 + 0.17).fract();
            let k = (x * n as f64) as usize;
            let l = ((x * 1.7).fract() * n as f64) as usize;
            assert!((m.s[(k, l)] - m.s[(l, k)].conj()).norm() < 1e-10 * max);
        }
        // pure photon: rank one
        for k in [n / 2 - 3, n / 2, n / 2 + 5] {
            for l in [n / 2 - 7, n / 2 + 1, n / 2 + 2] {
                let lhs = m.s[(k, l)].norm_sqr();
                let rhs = m.s[(k, k)].re * m.s[(l, l)].re;
                assert!((lhs - rhs).abs() < 0.01 * rhs);
            }
        }
        let big = CorrelationGrid::new(0.1, DMatrix::from_element(3000, 3000, Complex64::default()));
        assert!(matches!(spectral_correlation_matrix(&big, 0.5), Err(Error::Resource(_))));
    }

    #[test]
    fn padding_invariance_and_window() {
        let p = SystemParams::new(0.3, 0.5, 0.02);
        let grid = markov_grid(&p, 0.1, 500);
        let n1 = emission_spectrum(&grid, p.kappa, 1).unwrap().norm;
        let n4 = emission_spectrum(&grid, p.kappa, 4).unwrap().norm;
        assert!((n1 - n4).abs() < 1e-3 * n1);
        let short = markov_grid(&p, 0.1, 50);
        assert!(matches!(indistinguishability(&short, p.kappa), Err(Error::Usage(_))));
    }

    #[test]
    fn symmetric_spectrum_has_zero_asymmetry() {
        let omega: Vec<f64> = (-400..400).map(|k| k as f64 * 0.01).collect();
        let values = omega
            .iter()
            .map(|w| 1.0 / (1.0 + ((w - 1.0) / 0.1).powi(2)) + 1.0 / (1.0 + ((w + 1.0) / 0.1).powi(2)))
            .collect::<Vec<_>>();
        let norm = values.iter().sum::<f64>() * 0.01;
        let s = Spectrum {
            omega,
            values,
            norm,
            clipped: 0,
        };
        assert!(asymmetry_near(&s, 0.0, 1.0).value().unwrap().abs() < 1e-12);
        assert!(matches!(asymmetry_near(&s, 0.0, 2.5), Asymmetry::NotApplicable(_)));
    }

    #[test]
    fn sideband_of_synthetic_line() {
        let dw = 0.005;
        let omega: Vec<f64> = (-2000..2000).map(|k| k as f64 * dw).collect();
        let values: Vec<f64> = omega
            .iter()
            .map(|&w| {
                let line = 2.0 / (1.0 + (2.0 * w / 0.05).powi(2));
                let band = 0.02 * (-(w + 2.0).powi(2)).exp();
                line + band
            })
            .collect();
        let norm = values.iter().sum::<f64>() * dw;
        let s = Spectrum {
            omega,
            values,
            norm,
            clipped: 0,
        };
        let sb = sideband_fraction(&s, 0.45).unwrap();
        let line_w = 0.5 * std::f64::consts::PI * 2.0 * 0.05;
        let expected = 1.0 - line_w / norm;
        assert!((sb.fraction - expected).abs() < 0.005, "{} vs {expected}", sb.fraction);
        assert!(sb.red_fraction > 0.6);
        assert!((sb.line.fwhm - 0.05).abs() < 0.005);
    }

    #[test]
    fn doublet_with_red_sidebands() {
        let dw = 0.01;
        let omega: Vec<f64> = (-2000..2000).map(|k| k as f64 * dw).collect();
        let build = |band: f64| -> Spectrum {
            let values: Vec<f64> = omega
                .iter()
                .map(|&w| {
                    let lines = 7.0 / (1.0 + (2.0 * (w + 10.0) / 0.26).powi(2))
                        + 7.0 / (1.0 + (2.0 * (w - 10.0) / 0.26).powi(2));
                    lines + band * ((-(w + 12.0).powi(2)).exp() + (-(w - 8.0).powi(2)).exp())
                })
                .collect();
            let norm = values.iter().sum::<f64>() * dw;
            Spectrum {
                omega: omega.clone(),
                values,
                norm,
                clipped: 0,
            }
        };
        let f = spectral_features(&build(0.01), 4.5, 0.002);
        let kinds: Vec<FeatureKind> = f.iter().map(|x| x.kind).collect();
        use FeatureKind::*;
        assert_eq!(kinds, vec![Sideband, Line, Sideband, Line], "{f:?}");
        assert!((f[0].omega + 12.0).abs() < 0.5 && (f[2].omega - 8.0).abs() < 0.5);
        assert!((f[1].weight - 0.5 * std::f64::consts::PI * 7.0 * 0.26).abs() < 0.05);
        assert_eq!(spectral_features(&build(0.0), 4.5, 0.002).len(), 2);
    }

    #[test]
    fn no_phonons_no_sideband() {
        let p = SystemParams::new(0.05, 0.5, 0.01);
        let grid = markov_grid(&p, 0.5, 1200);
        let s = emission_spectrum(&grid, p.kappa, 4).unwrap();
        let sb = sideband_fraction(&s, default_line_window(&p).unwrap()).unwrap();
        assert!(sb.fraction < 1e-3 + 0.01, "{}", sb.fraction);
    }
}
