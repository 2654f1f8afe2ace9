//! Contraction of the tensor train with the system propagators.
//!
//! The state carried between steps is `Ψ[b, α]`: bond index `b` of the
//! influence network times the Liouville index `α`. One timestep applies
//! `V`, the class core (diagonal in `α`), then `V` again; the reduced
//! density matrix is `ρ[α] = Σ_b Ψ[b, α] r[b]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ProcessTensor, CLASSES};
use crate::error::{Error, Result};
use crate::system::{
    annihilation, build_liouvillian, expectation_row, exciton_population, half_step_propagator,
    photon_number, unvectorize, vectorize, Basis, LiouvilleVector, Operator, Superoperator, SystemParams,
    DIM, LIOUVILLE_DIM,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Free half-step propagator tagged with its timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemPropagator {
    pub dt: f64,
    pub half: Superoperator,
    /// Structural non-zero pattern of the generator (plus the diagonal).
    pattern: [[bool; LIOUVILLE_DIM]; LIOUVILLE_DIM],
}

impl SystemPropagator {
    pub fn new(p: &SystemParams, dt: f64) -> Result<Self> {
        p.validate()?;
        let l = build_liouvillian(p);
        let pattern = std::array::from_fn(|a| std::array::from_fn(|b| a == b || l[(a, b)] != ZERO));
        Ok(SystemPropagator {
            dt,
            half: half_step_propagator(p, dt)?,
            pattern,
        })
    }

    /// Smallest set of Liouville indices containing `seed` and closed under
    /// the generator.
    fn closure(&self, seed: [bool; LIOUVILLE_DIM]) -> [bool; LIOUVILLE_DIM] {
        let mut set = seed;
        loop {
            let mut changed = false;
            for a in 0..LIOUVILLE_DIM {
                if !set[a] && (0..LIOUVILLE_DIM).any(|b| set[b] && self.pattern[a][b]) {
                    set[a] = true;
                    changed = true;
                }
            }
            if !changed {
                return set;
            }
        }
    }
}

/// Reduced density matrices `ρ(t_i)`, `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries {
    pub dt: f64,
    pub states: Vec<Operator>,
}

impl PopulationSeries {
    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// `⟨a†a⟩(t_i)`.
    pub fn photon_number(&self) -> Vec<f64> {
        self.states.iter().map(photon_number).collect()
    }

    pub fn exciton_population(&self) -> Vec<f64> {
        self.states.iter().map(exciton_population).collect()
    }

    /// Largest `|Tr ρ − 1|` over the series.
    pub fn max_trace_error(&self) -> f64 {
        self.states.iter().map(|r| (r.trace() - Complex64::new(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }

    /// Largest `‖ρ − ρ†‖` over the series.
    pub fn max_hermiticity_error(&self) -> f64 {
        self.states.iter().map(|r| (r - r.adjoint()).norm()).fold(0.0, f64::max)
    }

    /// Most negative eigenvalue of the Hermitian part over the series.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(|r| {
                let h = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
                nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Two-time photon correlation `G[i][j] = ⟨a†(t_i) a(t_j)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub dt: f64,
    pub t_max: f64,
    pub g: DMatrix<Complex64>,
}

impl CorrelationGrid {
    pub fn new(dt: f64, g: DMatrix<Complex64>) -> Self {
        let t_max = dt * (g.nrows().saturating_sub(1)) as f64;
        CorrelationGrid { dt, t_max, g }
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// `⟨a†a⟩(t_i)` read off the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.g[(i, i)].re).collect()
    }
}

struct Contractor<'a> {
    pt: &'a ProcessTensor,
    prop: &'a SystemPropagator,
    classes: [usize; LIOUVILLE_DIM],
    cores_t: Vec<DMatrix<Complex64>>,
}

impl<'a> Contractor<'a> {
    fn new(pt: &'a ProcessTensor, prop: &'a SystemPropagator) -> Result<Self> {
        let rel = (pt.dt - prop.dt).abs() / pt.dt.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-12 {
            return Err(Error::Usage(format!(
                "process tensor built for dt = {} but system propagator uses dt = {}",
                pt.dt, prop.dt
            )));
        }
        Ok(Contractor {
            pt,
            prop,
            classes: Basis::default().classes(),
            cores_t: pt.cores.iter().map(|c| c.transpose()).collect(),
        })
    }

    fn start(&self, rho0: &Operator) -> DMatrix<Complex64> {
        let v = vectorize(rho0);
        let l = &self.pt.left;
        DMatrix::from_fn(l.len(), LIOUVILLE_DIM, |b, a| l[b] * v[a])
    }

    fn support(&self, psi: &DMatrix<Complex64>) -> [bool; LIOUVILLE_DIM] {
        let seed = std::array::from_fn(|a| psi.column(a).iter().any(|&x| x != ZERO));
        self.prop.closure(seed)
    }

    fn half(&self, psi: &mut DMatrix<Complex64>, active: &[bool; LIOUVILLE_DIM], scratch: &mut DMatrix<Complex64>) {
        let v = &self.prop.half;
        scratch.fill(ZERO);
        for a in 0..LIOUVILLE_DIM {
            if !active[a] {
                continue;
            }
            let mut out = scratch.column_mut(a);
            for b in 0..LIOUVILLE_DIM {
                if active[b] && v[(a, b)] != ZERO {
                    out.axpy(v[(a, b)], &psi.column(b), Complex64::new(1.0, 0.0));
                }
            }
        }
        std::mem::swap(psi, scratch);
    }

    fn core(&self, psi: &mut DMatrix<Complex64>, active: &[bool; LIOUVILLE_DIM]) {
        let d = psi.nrows();
        for c in 0..CLASSES {
            let cols: Vec<usize> = (0..LIOUVILLE_DIM).filter(|&a| active[a] && self.classes[a] == c).collect();
            if cols.is_empty() {
                continue;
            }
            let mut x = DMatrix::from_element(d, cols.len(), ZERO);
            for (k, &a) in cols.iter().enumerate() {
                x.column_mut(k).copy_from(&psi.column(a));
            }
            let y = &self.cores_t[c] * x;
            for (k, &a) in cols.iter().enumerate() {
                psi.column_mut(a).copy_from(&y.column(k));
            }
        }
    }

    fn step(&self, psi: &mut DMatrix<Complex64>, active: &[bool; LIOUVILLE_DIM], scratch: &mut DMatrix<Complex64>) {
        self.half(psi, active, scratch);
        self.core(psi, active);
        self.half(psi, active, scratch);
    }

    fn readout(&self, psi: &DMatrix<Complex64>) -> LiouvilleVector {
        let r: &DVector<Complex64> = &self.pt.right;
        LiouvilleVector::from_fn(|a, _| psi.column(a).dot(r))
    }
}

/// Populations with an explicit system propagator.
pub fn propagate_with(pt: &ProcessTensor, prop: &SystemPropagator, rho0: &Operator) -> Result<PopulationSeries> {
    let ctr = Contractor::new(pt, prop)?;
    let mut psi = ctr.start(rho0);
    let mut scratch = psi.clone();
    let active = ctr.support(&psi);
    let mut states = Vec::with_capacity(pt.steps + 1);
    states.push(*rho0);
    for _ in 0..pt.steps {
        ctr.step(&mut psi, &active, &mut scratch);
        states.push(unvectorize(&ctr.readout(&psi)));
    }
    Ok(PopulationSeries { dt: pt.dt, states })
}

/// `ρ(t_i)` for `i = 0..=pt.steps`.
pub fn propagate_populations(pt: &ProcessTensor, p: &SystemParams, rho0: &Operator) -> Result<PopulationSeries> {
    propagate_with(pt, &SystemPropagator::new(p, pt.dt)?, rho0)
}

/// Correlation grid with an explicit system propagator.
pub fn two_time_correlation_grid_with(
    pt: &ProcessTensor,
    prop: &SystemPropagator,
    rho0: &Operator,
) -> Result<CorrelationGrid> {
    let ctr = Contractor::new(pt, prop)?;
    let n = pt.steps + 1;
    let a = annihilation();
    let row = expectation_row(&a.adjoint());
    let read: Vec<usize> = (0..LIOUVILLE_DIM).filter(|&k| row[k] != ZERO).collect();
    let rvec = &pt.right;
    let mut g = DMatrix::from_element(n, n, ZERO);

    let mut psi = ctr.start(rho0);
    let mut scratch = psi.clone();
    let active = ctr.support(&psi);
    let mut inj = psi.clone();
    let mut inj_scratch = psi.clone();
    for j in 0..n {
        // a acting on the ket: (aρ)_{s r} = Σ_{s'} a_{s s'} ρ_{s' r}
        inj.fill(ZERO);
        for s in 0..DIM {
            for sp in 0..DIM {
                let coeff = a[(s, sp)];
                if coeff == ZERO {
                    continue;
                }
                for r in 0..DIM {
                    let src = psi.column(DIM * sp + r).into_owned();
                    inj.column_mut(DIM * s + r).axpy(coeff, &src, Complex64::new(1.0, 0.0));
                }
            }
        }
        let inj_active = ctr.support(&inj);
        let value = |m: &DMatrix<Complex64>| -> Complex64 { read.iter().map(|&k| row[k] * m.column(k).dot(rvec)).sum() };
        let v = value(&inj);
        g[(j, j)] = v;
        for i in j + 1..n {
            ctr.step(&mut inj, &inj_active, &mut inj_scratch);
            let v = value(&inj);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        if j + 1 < n {
            ctr.step(&mut psi, &active, &mut scratch);
        }
    }
    Ok(CorrelationGrid::new(pt.dt, g))
}

/// `G[i][j] = ⟨a†(t_i) a(t_j)⟩` on the `(steps+1)²` grid. Entries with
/// `i ≥ j` are propagated; the rest follow from Hermitian symmetry.
pub fn two_time_correlation_grid(pt: &ProcessTensor, p: &SystemParams, rho0: &Operator) -> Result<CorrelationGrid> {
    two_time_correlation_grid_with(pt, &SystemPropagator::new(p, pt.dt)?, rho0)
}
