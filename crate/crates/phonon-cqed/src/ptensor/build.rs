//! Construction of the uniform tensor train.
//!
//! The influence functional is written on a chain with two sites per
//! timestep: one carries the present index `α_i`, the other a copy `z` of
//! an earlier index. Starting from the all-ones state, layer `d` (from `K`
//! down to 1) multiplies in `b_d(α, z)` on neighbouring pairs and swaps the
//! two sites; alternating the bond acted on makes the swaps a brickwork that
//! slides the `z` sub-lattice one timestep per layer relative to the `α`
//! sub-lattice, so every lag meets its gate once. After layer 1 each `z` sits
//! next to the `α` it copies and the pair is merged into a single core with
//! `b_0` on its diagonal. Each two-site update is an SVD in Hastings' form,
//! truncated relative to the largest singular value.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use super::{class_tensor, BuildStats, ClassTensor, ProcessTensor, CLASSES};
use crate::bath::MemoryKernel;
use crate::error::{Error, Result};
use crate::system::Basis;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Singular values below this fraction of the largest are always dropped.
const RANK_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Relative singular-value cutoff; 0 keeps everything above round-off.
    pub svd_cutoff: f64,
    /// Hard cap on the bond dimension.
    pub max_bond: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            svd_cutoff: 1e-7,
            max_bond: 512,
        }
    }
}

type Site = [DMatrix<Complex64>; CLASSES];

fn trivial_site() -> Site {
    std::array::from_fn(|_| DMatrix::from_element(1, 1, ONE))
}

struct Update {
    left: Site,
    right: Site,
    lambda: Vec<f64>,
    discarded: f64,
}

/// Contract `left[p]·right[q]·gate(p, q)`, swap the two physical legs,
/// scale rows by the environment weights, split by SVD and return the new
/// pair in Hastings' form. The new left site carries the old right index.
fn two_site_update(
    left: &Site,
    right: &Site,
    env: &[f64],
    gate: impl Fn(usize, usize) -> Complex64,
    opts: &BuildOptions,
    layer: usize,
) -> Result<Update> {
    let dl = left[0].nrows();
    let dr = right[0].ncols();
    debug_assert_eq!(env.len(), dl);
    let mut theta = DMatrix::from_element(CLASSES * dl, CLASSES * dr, Complex64::new(0.0, 0.0));
    for p in 0..CLASSES {
        for q in 0..CLASSES {
            let block = &left[p] * &right[q] * gate(p, q);
            theta.view_mut((q * dl, p * dr), (dl, dr)).copy_from(&block);
        }
    }
    let mut scaled = theta.clone();
    for q in 0..CLASSES {
        for i in 0..dl {
            scaled.row_mut(q * dl + i).scale_mut(env[i]);
        }
    }

    let svd = SVD::try_new(scaled, true, true, f64::EPSILON, 0).ok_or_else(|| {
        Error::numerical(format!("SVD failed to converge at lag layer {layer}"), vec![layer as f64])
    })?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let smax = sv[order[0]];
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(Error::numerical(
            format!("degenerate two-site tensor at lag layer {layer}"),
            vec![smax],
        ));
    }
    let threshold = smax * opts.svd_cutoff.max(RANK_FLOOR);
    let kept: Vec<usize> = order.iter().copied().filter(|&k| sv[k] > threshold).collect();
    let chi = kept.len();
    if chi > opts.max_bond {
        return Err(Error::Resource(format!(
            "bond dimension {chi} exceeds the cap {} at lag layer {layer} (memory step {layer}); \
             loosen svd_cutoff or raise max_bond",
            opts.max_bond
        )));
    }
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let kept_weight: f64 = kept.iter().map(|&k| sv[k] * sv[k]).sum();
    let discarded = ((total - kept_weight) / total).max(0.0);
    let norm = kept_weight.sqrt();

    // Rows of V† for the kept values, with the phase fixed so that the
    // largest-magnitude entry of the matching left vector is positive real.
    let mut vh = DMatrix::from_element(chi, CLASSES * dr, Complex64::new(0.0, 0.0));
    for (row, &k) in kept.iter().enumerate() {
        let col = u.column(k);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].norm() > col[best].norm() {
                best = i;
            }
        }
        let phase = if col[best].norm() > 0.0 {
            col[best] / col[best].norm()
        } else {
            ONE
        };
        vh.row_mut(row).copy_from(&(v_t.row(k) * phase));
    }

    let right_new: Site = std::array::from_fn(|q| vh.columns(q * dr, dr).into_owned());
    let merged = theta * vh.adjoint() / Complex64::new(norm, 0.0);
    let left_new: Site = std::array::from_fn(|p| merged.rows(p * dl, dl).into_owned());
    let lambda = kept.iter().map(|&k| sv[k] / norm).collect();
    Ok(Update {
        left: left_new,
        right: right_new,
        lambda,
        discarded,
    })
}

/// Dominant eigenvalue and left/right eigenvectors of the neutral-class
/// transfer matrix, by repeated squaring followed by a short power
/// refinement.
fn dominant_pair(t: &DMatrix<Complex64>) -> Result<(Complex64, DVector<Complex64>, DVector<Complex64>)> {
    let n = t.nrows();
    let normalise = |m: DMatrix<Complex64>| -> Option<DMatrix<Complex64>> {
        let pivot = m.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        if pivot.norm() == 0.0 || !pivot.norm().is_finite() {
            return None;
        }
        Some(m / pivot)
    };
    let fail = || Error::numerical("process-tensor transfer matrix has no dominant eigenvalue", vec![]);
    let mut p = normalise(t.clone()).ok_or_else(fail)?;
    for _ in 0..64 {
        let q = normalise(&p * &p).ok_or_else(fail)?;
        let change = (&q - &p).norm();
        p = q;
        if change < 1e-14 * (n as f64).sqrt() {
            break;
        }
    }
    let col = (0..n).max_by(|&a, &b| p.column(a).norm().total_cmp(&p.column(b).norm())).unwrap();
    let row = (0..n).max_by(|&a, &b| p.row(a).norm().total_cmp(&p.row(b).norm())).unwrap();
    let mut r: DVector<Complex64> = p.column(col).into_owned();
    let mut l: DVector<Complex64> = p.row(row).transpose();
    r /= Complex64::new(r.norm(), 0.0);
    l /= Complex64::new(l.norm(), 0.0);
    let mut mu = Complex64::new(0.0, 0.0);
    for _ in 0..4 {
        let tr = t * &r;
        let overlap = (l.transpose() * &r)[(0, 0)];
        if overlap.norm() < 1e-300 {
            return Err(fail());
        }
        mu = (l.transpose() * &tr)[(0, 0)] / overlap;
        let nr = tr.norm().max(f64::MIN_POSITIVE);
        r = tr / Complex64::new(nr, 0.0);
        let lt = t.transpose() * &l;
        l = lt.clone() / Complex64::new(lt.norm().max(f64::MIN_POSITIVE), 0.0);
    }
    if mu.norm() == 0.0 || !mu.norm().is_finite() {
        return Err(fail());
    }
    Ok((mu, l, r))
}

/// Build with the default bond cap.
pub fn build_process_tensor(
    kernel: &MemoryKernel,
    basis: &Basis,
    steps: usize,
    svd_cutoff: f64,
) -> Result<ProcessTensor> {
    build_process_tensor_with(
        kernel,
        basis,
        steps,
        &BuildOptions {
            svd_cutoff,
            ..BuildOptions::default()
        },
    )
}

pub fn build_process_tensor_with(
    kernel: &MemoryKernel,
    basis: &Basis,
    steps: usize,
    opts: &BuildOptions,
) -> Result<ProcessTensor> {
    if steps < 1 {
        return Err(Error::Domain("process tensor needs at least one step".into()));
    }
    if !(opts.svd_cutoff >= 0.0 && opts.svd_cutoff < 1.0) {
        return Err(Error::Domain(format!("svd_cutoff must lie in [0, 1), got {}", opts.svd_cutoff)));
    }
    if kernel.eta.is_empty() {
        return Err(Error::Domain("empty memory kernel".into()));
    }
    if basis.lambda.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::Domain("basis eigenvalues must be 0 or 1".into()));
    }
    let k_mem = kernel.k_mem();
    let gates: Vec<ClassTensor> = kernel.eta.iter().map(|&e| class_tensor(e)).collect();

    // `even` starts as the present-index site, `odd` as the lagged copy; at
    // every gate the left site holds the present index.
    let mut even = trivial_site();
    let mut odd = trivial_site();
    let mut lam_eo = vec![1.0];
    let mut lam_oe = vec![1.0];
    let mut stats = BuildStats::default();

    for d in (1..=k_mem).rev() {
        let gate = &gates[d];
        let up = if (k_mem - d) % 2 == 0 {
            let up = two_site_update(&even, &odd, &lam_oe, |p, q| gate[(p, q)], opts, d)?;
            even = up.left;
            odd = up.right;
            lam_eo = up.lambda;
            up.discarded
        } else {
            let up = two_site_update(&odd, &even, &lam_eo, |p, q| gate[(p, q)], opts, d)?;
            odd = up.left;
            even = up.right;
            lam_oe = up.lambda;
            up.discarded
        };
        stats.discarded_weight += up;
        stats.layer_bonds.push(lam_eo.len().max(lam_oe.len()));
        log::trace!("lag layer {d}: bonds {} / {}", lam_eo.len(), lam_oe.len());
    }

    let diag = &gates[0];
    let mut cores: [DMatrix<Complex64>; CLASSES] = std::array::from_fn(|c| {
        let m = if k_mem % 2 == 0 { &even[c] * &odd[c] } else { &odd[c] * &even[c] };
        m * diag[(c, c)]
    });

    let (mu, l, r) = dominant_pair(&cores[0])?;
    for core in cores.iter_mut() {
        *core /= mu;
    }
    let overlap = (l.transpose() * &r)[(0, 0)];
    let left = l / overlap;
    let right = r;
    // Classes with λ_s = λ_r leave every later factor at 1, so in the exact
    // functional their cores fix the right boundary; this is what makes the
    // propagation trace preserving. Truncation breaks it at the cutoff level
    // and a rank-one correction along `r` restores it.
    let rr = right.dotc(&right);
    for c in [0, CLASSES - 1] {
        let defect = &right - &cores[c] * &right;
        stats.trace_correction = stats.trace_correction.max(defect.norm() / rr.re.sqrt());
        cores[c] += &defect * right.adjoint() / rr;
    }
    stats.boundary_residual = (&cores[0] * &right - &right).norm();
    if stats.boundary_residual > 1e-6 {
        log::warn!("process-tensor boundary residual {:.3e}", stats.boundary_residual);
    }

    Ok(ProcessTensor {
        dt: kernel.dt,
        steps,
        memory_steps: k_mem,
        svd_cutoff: opts.svd_cutoff,
        left,
        cores,
        right,
        stats,
    })
}
