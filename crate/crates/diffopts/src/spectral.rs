// SPDX-License-Identifier: Apache-2.0

//! Spectral analysis of the lazy walk through the normalized Laplacian.
//!
//! For symmetric graphs the walk spectrum comes from the symmetric
//! eigendecomposition of `N`; eigenvalues map through `omega = 1 - nu/2` and
//! eigenvectors through `phi = D^{-1/2} psi`, `phitilde = D^{1/2} psi`, giving
//! the biorthogonal left/right eigenvector pairs of `W`. For directed graphs
//! the same mapping is applied to the positive-semidefinite polar factor of
//! `N`, which carries the spectral content of the non-symmetric Laplacian.

use nalgebra::{DMatrix, DVector};

use crate::graph::{StateGraph, WalkMatrices};
use crate::{Error, Result};

/// Full spectrum of the lazy walk, in walk form.
///
/// Eigenvalues `omegas` are descending with `omegas[0] = 1` on connected
/// symmetric graphs; `nus` are the matching Laplacian eigenvalues ascending.
/// Column `i` of `psi` is the orthonormal Laplacian eigenvector, of `left`
/// the left walk eigenvector `phi_i`, of `right` the right walk eigenvector
/// `phitilde_i`.
#[derive(Debug, Clone)]
pub struct WalkSpectrum {
    omegas: DVector<f64>,
    nus: DVector<f64>,
    psi: DMatrix<f64>,
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    pi0: DVector<f64>,
}

impl WalkSpectrum {
    /// Walk eigenvalues, descending.
    pub fn omegas(&self) -> &DVector<f64> {
        &self.omegas
    }

    /// Laplacian eigenvalues, ascending.
    pub fn nus(&self) -> &DVector<f64> {
        &self.nus
    }

    /// Orthonormal Laplacian eigenvectors, one per column.
    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Left walk eigenvectors `phi_i = D^{-1/2} psi_i`, one per column.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// Right walk eigenvectors `phitilde_i = D^{1/2} psi_i`, one per column.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Stationary distribution of the walk.
    pub fn pi0(&self) -> &DVector<f64> {
        &self.pi0
    }

    /// Number of states.
    pub fn num_states(&self) -> usize {
        self.omegas.len()
    }

    /// Rebuild the walk matrix from the spectrum: `sum_i omega_i phitilde_i
    /// phi_i^T`.
    pub fn reconstruct_walk(&self) -> DMatrix<f64> {
        &self.right * DMatrix::from_diagonal(&self.omegas) * self.left.transpose()
    }
}

/// Positive-semidefinite polar factor of a square matrix.
#[derive(Debug, Clone)]
pub struct PositivePart {
    /// Symmetric positive-semidefinite factor `R = A Sigma A^T`.
    pub r: DMatrix<f64>,
    /// Orthogonal factor `U = A B^T`, so that `R U` rebuilds the input.
    pub u: DMatrix<f64>,
}

/// Polar decomposition `N = R U` via the singular value decomposition.
///
/// With `N = A Sigma B^T`, the positive part is `R = A Sigma A^T` and the
/// orthogonal part is `U = A B^T`. For symmetric positive-semidefinite input
/// the positive part is the input itself.
pub fn polar_positive_part(n: &DMatrix<f64>) -> Result<PositivePart> {
    let svd =
        nalgebra::SVD::try_new(n.clone(), true, true, f64::EPSILON, 0).ok_or(Error::SvdFailure)?;
    let a = svd.u.as_ref().ok_or(Error::SvdFailure)?;
    let b_t = svd.v_t.as_ref().ok_or(Error::SvdFailure)?;
    let sigma = DMatrix::from_diagonal(&svd.singular_values);
    let r = a * &sigma * a.transpose();
    let u = a * b_t;
    Ok(PositivePart { r, u })
}

/// Eigendecomposition of the walk, dispatching on graph symmetry.
///
/// Symmetric graphs decompose `N` directly; directed graphs decompose the
/// polar positive part of `N`. Eigenpairs are sorted by ascending Laplacian
/// eigenvalue and each eigenvector's sign is fixed so its first significant
/// entry is positive, making repeated decompositions bitwise identical.
pub fn decompose(g: &StateGraph, wm: &WalkMatrices) -> Result<WalkSpectrum> {
    let target = if g.symmetric() {
        wm.n.clone()
    } else {
        polar_positive_part(&wm.n)?.r
    };
    let eig =
        nalgebra::SymmetricEigen::try_new(target, f64::EPSILON, 0).ok_or(Error::EvdFailure)?;

    let n = g.num_states();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let nus = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut psi = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        psi.set_column(col, &eig.eigenvectors.column(i));
    }

    // On symmetric graphs the top eigenvector is known in closed form:
    // N D^{1/2} 1 = 0, so psi_1 is proportional to sqrt(d). The solver's
    // finite residual would otherwise leak a sqrt(d) component into the
    // other eigenvectors and break their zero weighted sums; substitute the
    // exact vector and project it out of the rest.
    if g.symmetric() {
        let mut top = g.d().map(f64::sqrt);
        top /= top.norm();
        psi.set_column(0, &top);
        for i in 1..n {
            let mut v = psi.column(i).into_owned();
            let along = top.dot(&v);
            v.axpy(-along, &top, 1.0);
            v /= v.norm();
            psi.set_column(i, &v);
        }
    }
    for col in 0..n {
        let mut v = psi.column(col).into_owned();
        if let Some(true) = sign_flip(&v) {
            v.neg_mut();
            psi.set_column(col, &v);
        }
    }

    let omegas = nus.map(|nu| 1.0 - nu / 2.0);
    let sqrt_d = g.d().map(f64::sqrt);
    let mut left = psi.clone();
    let mut right = psi.clone();
    for s in 0..n {
        let row_scale = sqrt_d[s];
        for i in 0..n {
            left[(s, i)] /= row_scale;
            right[(s, i)] *= row_scale;
        }
    }
    Ok(WalkSpectrum {
        omegas,
        nus,
        psi,
        left,
        right,
        pi0: wm.pi0.clone(),
    })
}

/// Whether `v` must be negated so its first significant entry is positive.
/// Returns `None` for the all-zero vector.
fn sign_flip(v: &DVector<f64>) -> Option<bool> {
    let max = v.abs().max();
    if max == 0.0 {
        return None;
    }
    v.iter()
        .find(|x| x.abs() > 1e-8 * max)
        .map(|&first| first < 0.0)
}

/// Diffusion distance `D_t(s, s')`: the L2 distance between the `t`-step
/// occupation distributions started at `s` and at `s'`.
///
/// Computed spectrally as the norm of `sum_i omega_i^t (phi_i(s) -
/// phi_i(s')) phitilde_i`, which equals `|W^t delta_s - W^t delta_s'|`.
pub fn diffusion_distance(sp: &WalkSpectrum, s: usize, s2: usize, t: u32) -> f64 {
    let n = sp.num_states();
    let coeff = DVector::from_iterator(
        n,
        (0..n).map(|i| sp.omegas[i].powi(t as i32) * (sp.left[(s, i)] - sp.left[(s2, i)])),
    );
    (&sp.right * coeff).norm()
}

/// Diffusion-map embedding: column `i` (zero-based) is `omega_{i+1}^t
/// phitilde_{i+1}`, taking the `l` leading eigenpairs.
///
/// The Euclidean geometry of the full-dimension embedding reproduces the
/// degree-weighted form of the diffusion distance; truncation error shrinks
/// monotonically as `l` grows.
pub fn diffusion_map(sp: &WalkSpectrum, t: u32, l: usize) -> DMatrix<f64> {
    let n = sp.num_states();
    assert!(l >= 1 && l <= n, "embedding dimension must be in [1, |S|]");
    let mut map = DMatrix::zeros(n, l);
    for i in 0..l {
        let scale = sp.omegas[i].powi(t as i32);
        for s in 0..n {
            map[(s, i)] = scale * sp.right[(s, i)];
        }
    }
    map
}
