//! Numerically exact non-Markovian engine.
//!
//! The phonon influence functional
//! `F(α_1..α_n) = Π_{i≥j} b_{i−j}(α_i, α_j)` is compressed into a uniform
//! tensor train: a left boundary `l`, one core matrix per λ-class and a
//! right boundary `r`, so that `F ≈ l·M[c(α_1)]···M[c(α_n)]·r` for any
//! number of steps. The cores are built once per memory kernel by a
//! sequence of truncated-SVD sweeps over lag layers `K … 1`; propagation
//! then interleaves them with the free half-step propagators.

mod build;
pub mod cache;
mod contract;

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64;

use crate::bath::MemoryKernel;
use crate::system::{Basis, LIOUVILLE_DIM};

pub use build::{build_process_tensor, build_process_tensor_with, BuildOptions};
pub use contract::{
    propagate_populations, propagate_with, two_time_correlation_grid, two_time_correlation_grid_with,
    CorrelationGrid, PopulationSeries, SystemPropagator,
};

/// Number of distinct λ-classes of a Liouville index.
pub const CLASSES: usize = 4;

/// Class-compressed influence tensor: `values[(c_i, c_j)]`.
pub type ClassTensor = SMatrix<Complex64, CLASSES, CLASSES>;

/// `λ_s` and `λ_r` of a class index `2λ_s + λ_r`.
pub fn class_lambdas(c: usize) -> (f64, f64) {
    ((c / 2) as f64, (c % 2) as f64)
}

/// Influence tensor for one lag, indexed by composite Liouville indices.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTensor {
    pub k: usize,
    pub values: SMatrix<Complex64, LIOUVILLE_DIM, LIOUVILLE_DIM>,
}

/// `b(c_i, c_j) = exp[−(λ_{s_i} − λ_{r_i})(η λ_{s_j} − η* λ_{r_j})]`.
pub fn class_tensor(eta: Complex64) -> ClassTensor {
    ClassTensor::from_fn(|ci, cj| {
        let (si, ri) = class_lambdas(ci);
        let (sj, rj) = class_lambdas(cj);
        let diff = si - ri;
        if diff == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        (-(eta * sj - eta.conj() * rj) * diff).exp()
    })
}

/// One tensor per lag `0..=K_mem`.
pub fn influence_tensors(kernel: &MemoryKernel, basis: &Basis) -> Vec<InfluenceTensor> {
    let classes = basis.classes();
    kernel
        .eta
        .iter()
        .enumerate()
        .map(|(k, &eta)| {
            let b = class_tensor(eta);
            InfluenceTensor {
                k,
                values: SMatrix::from_fn(|a, bb| b[(classes[a], classes[bb])]),
            }
        })
        .collect()
}

/// Explicit product `Π_{i≥j, i−j≤K} b_{i−j}(α_i, α_j)` for one path of
/// Liouville indices; lags beyond the kernel contribute 1.
pub fn influence_functional(tensors: &[InfluenceTensor], path: &[usize]) -> Complex64 {
    let mut f = Complex64::new(1.0, 0.0);
    for i in 0..path.len() {
        for j in 0..=i {
            if let Some(t) = tensors.get(i - j) {
                f *= t.values[(path[i], path[j])];
            }
        }
    }
    f
}

/// Diagnostics gathered while building the tensor train.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildStats {
    /// Bond dimension after each lag layer, in build order (`K … 1`).
    pub layer_bonds: Vec<usize>,
    /// Sum over layers of the discarded relative singular weight.
    pub discarded_weight: f64,
    /// `‖M[0]·r − r‖` after normalisation.
    pub boundary_residual: f64,
    /// Relative size of the rank-one correction that makes the
    /// population-diagonal cores fix the right boundary.
    pub trace_correction: f64,
}

/// Compressed influence functional usable for any number of steps up to
/// `steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessTensor {
    pub dt: f64,
    pub steps: usize,
    pub memory_steps: usize,
    pub svd_cutoff: f64,
    pub left: DVector<Complex64>,
    /// One core per λ-class, all `D × D`.
    pub cores: [DMatrix<Complex64>; CLASSES],
    pub right: DVector<Complex64>,
    pub stats: BuildStats,
}

impl ProcessTensor {
    /// Bond dimension `D` of the uniform cores.
    pub fn bond_dim(&self) -> usize {
        self.left.len()
    }

    /// Bond dimension at each cut of a `steps`-long chain: `[1, D, …, D, 1]`.
    pub fn bonds(&self) -> Vec<usize> {
        let mut b = vec![self.bond_dim(); self.steps + 1];
        b[0] = 1;
        b[self.steps] = 1;
        b
    }

    /// Largest bond reached during construction.
    pub fn max_layer_bond(&self) -> usize {
        self.stats.layer_bonds.iter().copied().max().unwrap_or(1)
    }

    /// Same cores with a different chain length.
    pub fn with_steps(&self, steps: usize) -> ProcessTensor {
        let mut pt = self.clone();
        pt.steps = steps;
        pt
    }

    /// `l·M[c_1]···M[c_n]·r` for a path of class indices.
    pub fn evaluate_classes(&self, classes: &[usize]) -> Complex64 {
        let mut v = self.left.transpose();
        for &c in classes {
            v = v * &self.cores[c];
        }
        (v * &self.right)[(0, 0)]
    }

    /// Influence functional for a path of Liouville indices.
    pub fn evaluate(&self, basis: &Basis, path: &[usize]) -> Complex64 {
        let classes: Vec<usize> = path.iter().map(|&a| basis.class(a)).collect();
        self.evaluate_classes(&classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{memory_kernel, BathSpec};

    #[test]
    fn tensor_entries() {
        let spec = BathSpec::new(0.025, 2.23, 4.0);
        let kernel = memory_kernel(0.05, 3, &spec).unwrap();
        let basis = Basis::default();
        let ts = influence_tensors(&kernel, &basis);
        assert_eq!(ts.len(), 4);
        for t in &ts {
            for a in 0..9 {
                let (s, r) = (a / 3, a % 3);
                if basis.lambda[s] == basis.lambda[r] {
                    for b in 0..9 {
                        assert_eq!(t.values[(a, b)], Complex64::new(1.0, 0.0));
                    }
                }
            }
        }
        // λ_s = 1, λ_r = 0 on both legs at lag 0 → e^{−η_0}
        let a = 3 * 2;
        let expected = (-kernel.eta[0]).exp();
        assert!((ts[0].values[(a, a)] - expected).norm() < 1e-12);

        let zero = influence_tensors(&MemoryKernel::zero(0.1, 3), &basis);
        for t in zero {
            assert!(t.values.iter().all(|&v| v == Complex64::new(1.0, 0.0)));
        }
    }
}
