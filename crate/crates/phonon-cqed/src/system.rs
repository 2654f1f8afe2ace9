//! Three-level exciton–cavity system in the frame rotating at the exciton
//! frequency: basis, Hamiltonian, Lindblad generator and propagators.
//!
//! Basis order is `s = 0: |0,0⟩`, `s = 1: |1,0⟩` (one photon),
//! `s = 2: |0,X⟩` (exciton). Density matrices are vectorised row-major,
//! `vec(ρ)[3s + r] = ρ_{sr}`, so `ρ ↦ AρB` becomes `A ⊗ Bᵀ`.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Operator = Matrix3<Complex64>;
pub type Superoperator = SMatrix<Complex64, 9, 9>;
pub type LiouvilleVector = SVector<Complex64, 9>;

pub const DIM: usize = 3;
pub const LIOUVILLE_DIM: usize = 9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Composite Liouville index of `|s⟩⟨r|`.
pub fn liouville_index(s: usize, r: usize) -> usize {
    DIM * s + r
}

/// Parameters of the emitter–cavity system (all in ps⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Lab detuning ω_X − ω_c.
    pub delta: f64,
    /// Light–matter coupling.
    pub g: f64,
    /// Cavity decay.
    pub kappa: f64,
    /// Exciton radiative decay.
    pub gamma: f64,
    /// Pure dephasing rate γ*; enters the generator as 2γ*D[|X⟩⟨X|].
    pub gamma_star: f64,
}

impl SystemParams {
    pub fn new(g: f64, kappa: f64, gamma: f64) -> Self {
        SystemParams {
            delta: 0.0,
            g,
            kappa,
            gamma,
            gamma_star: 0.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_gamma_star(mut self, gamma_star: f64) -> Self {
        self.gamma_star = gamma_star;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_star", self.gamma_star),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be >= 0 (got {v})"));
            }
        }
        if !self.delta.is_finite() {
            bad.push(format!("delta must be finite (got {})", self.delta));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(bad.join("; ")))
        }
    }
}

/// Basis labels and the eigenvalues of the phonon-coupled operator |X⟩⟨X|.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub states: [&'static str; 3],
    pub lambda: [f64; 3],
}

impl Default for Basis {
    fn default() -> Self {
        Basis {
            states: ["|0,0>", "|1,0>", "|0,X>"],
            lambda: [0.0, 0.0, 1.0],
        }
    }
}

impl Basis {
    /// Class `2λ_s + λ_r ∈ {0,1,2,3}` of the Liouville index `α = (s, r)`.
    /// Influence tensors depend on `α` only through this class.
    pub fn class(&self, alpha: usize) -> usize {
        let (s, r) = (alpha / DIM, alpha % DIM);
        2 * self.lambda[s] as usize + self.lambda[r] as usize
    }

    pub fn classes(&self) -> [usize; LIOUVILLE_DIM] {
        std::array::from_fn(|a| self.class(a))
    }
}

/// Cavity annihilation operator `a = |0,0⟩⟨1,0|`.
pub fn annihilation() -> Operator {
    let mut a = Operator::zeros();
    a[(0, 1)] = ONE;
    a
}

/// Exciton lowering operator `|0,0⟩⟨0,X|`.
pub fn exciton_lowering() -> Operator {
    let mut s = Operator::zeros();
    s[(0, 2)] = ONE;
    s
}

/// Projector `|X⟩⟨X|` onto the exciton state.
pub fn exciton_projector() -> Operator {
    let mut p = Operator::zeros();
    p[(2, 2)] = ONE;
    p
}

/// `H = −δ a†a + g(|X⟩⟨0|a + h.c.)`.
pub fn build_system_hamiltonian(p: &SystemParams) -> Operator {
    let mut h = Operator::zeros();
    h[(1, 1)] = Complex64::new(-p.delta, 0.0);
    h[(1, 2)] = Complex64::new(p.g, 0.0);
    h[(2, 1)] = Complex64::new(p.g, 0.0);
    h
}

/// Superoperator of `ρ ↦ AρB`.
pub fn sandwich(a: &Operator, b: &Operator) -> Superoperator {
    let mut out = Superoperator::zeros();
    for s in 0..DIM {
        for sp in 0..DIM {
            if a[(s, sp)] == ZERO {
                continue;
            }
            for r in 0..DIM {
                for rp in 0..DIM {
                    out[(liouville_index(s, r), liouville_index(sp, rp))] = a[(s, sp)] * b[(rp, r)];
                }
            }
        }
    }
    out
}

fn dissipator(l: &Operator) -> Superoperator {
    let id = Operator::identity();
    let ldl = l.adjoint() * l;
    sandwich(l, &l.adjoint()) - (sandwich(&ldl, &id) + sandwich(&id, &ldl)) * Complex64::new(0.5, 0.0)
}

/// `L[ρ] = −i[H,ρ] + κD[a] + γD[|0⟩⟨X|] + 2γ*D[|X⟩⟨X|]`.
pub fn build_liouvillian(p: &SystemParams) -> Superoperator {
    let h = build_system_hamiltonian(p);
    let id = Operator::identity();
    let mut l = (sandwich(&h, &id) - sandwich(&id, &h)) * (-I);
    l += dissipator(&annihilation()) * Complex64::new(p.kappa, 0.0);
    l += dissipator(&exciton_lowering()) * Complex64::new(p.gamma, 0.0);
    l += dissipator(&exciton_projector()) * Complex64::new(2.0 * p.gamma_star, 0.0);
    l
}

/// `e^{L t}`.
pub fn propagator(p: &SystemParams, t: f64) -> Superoperator {
    (build_liouvillian(p) * Complex64::new(t, 0.0)).exp()
}

/// `V = e^{L dt/2}`, the free half-step of the Trotter splitting.
pub fn half_step_propagator(p: &SystemParams, dt: f64) -> Result<Superoperator> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("half-step propagator needs dt > 0, got {dt}")));
    }
    Ok(propagator(p, 0.5 * dt))
}

/// Exciton initialised with no photon, `|0,X⟩⟨0,X|`.
pub fn initial_state() -> Operator {
    exciton_projector()
}

pub fn vectorize(rho: &Operator) -> LiouvilleVector {
    LiouvilleVector::from_fn(|k, _| rho[(k / DIM, k % DIM)])
}

pub fn unvectorize(v: &LiouvilleVector) -> Operator {
    Operator::from_fn(|s, r| v[liouville_index(s, r)])
}

/// Linear functional `vec(ρ) ↦ Tr[O ρ]` as a row of coefficients.
pub fn expectation_row(o: &Operator) -> [Complex64; LIOUVILLE_DIM] {
    std::array::from_fn(|k| o[(k % DIM, k / DIM)])
}

/// Photon number `⟨a†a⟩ = ρ_{11}`.
pub fn photon_number(rho: &Operator) -> f64 {
    rho[(1, 1)].re
}

/// Exciton population `ρ_{22}`.
pub fn exciton_population(rho: &Operator) -> f64 {
    rho[(2, 2)].re
}

/// Markovian reference: `ρ(t_i)` for `i = 0..=steps` under the Lindblad
/// generator alone.
pub fn lindblad_trajectory(p: &SystemParams, rho0: &Operator, dt: f64, steps: usize) -> Vec<Operator> {
    let u = propagator(p, dt);
    let mut v = vectorize(rho0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*rho0);
    for _ in 0..steps {
        v = u * v;
        out.push(unvectorize(&v));
    }
    out
}

/// Markovian reference for `⟨a†(t_i) a(t_j)⟩` via the quantum regression
/// theorem, full `(steps+1)²` grid.
pub fn lindblad_correlation_grid(
    p: &SystemParams,
    rho0: &Operator,
    dt: f64,
    steps: usize,
) -> DMatrix<Complex64> {
    let u = propagator(p, dt);
    let a = annihilation();
    let row = expectation_row(&a.adjoint());
    let inject = sandwich(&a, &Operator::identity());
    let n = steps + 1;
    let mut g = DMatrix::from_element(n, n, ZERO);
    let mut v = vectorize(rho0);
    for j in 0..n {
        let mut w = inject * v;
        for i in j..n {
            let val: Complex64 = (0..LIOUVILLE_DIM).map(|k| row[k] * w[k]).sum();
            g[(i, j)] = val;
            g[(j, i)] = val.conj();
            w = u * w;
        }
        v = u * v;
    }
    g
}
