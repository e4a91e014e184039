//! Dense symmetric eigendecomposition, Gibbs weights and free energies.
//!
//! The two-point-measurement scheme needs the complete eigenbasis of both
//! endpoint Hamiltonians. At the sector sizes of interest (dim <= 4900) a
//! dense divide-and-conquer decomposition is tractable, so no iterative
//! solver is used. Degenerate subspaces get whatever orthonormal basis the
//! solver picks; every downstream quantity is invariant under that choice
//! once equal work values are merged.

use crate::error::{CoreError, Result};
use crate::lapack;
use crate::sparse::SparseOperator;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Cap on the dense decomposition size (the L = 8 half-filled sector).
pub const DECOMPOSE_DIM_CAP: usize = 4900;

/// Full spectrum and eigenbasis of a real symmetric operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// ascending eigenvalues
    pub eigenvalues: Vec<f64>,
    /// row k is the k-th eigenvector (i.e. the matrix V^T, row-major)
    vectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// k-th eigenvector.
    pub fn vector(&self, k: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(k)
    }

    /// Matrix whose rows are the eigenvectors (V^T). `V^T M` projects the
    /// columns of M onto the eigenbasis.
    pub fn vectors_t(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    /// Same eigenbasis with every eigenvalue rigidly shifted by `c`
    /// (the spectrum of H + c I).
    pub fn with_energy_shift(&self, c: f64) -> Self {
        SpectralDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|e| e + c).collect(),
            vectors: self.vectors.clone(),
        }
    }

    /// Largest deviation of V V^T from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.dot(&self.vectors.t());
        let n = self.dim();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((g[(i, j)] - want).abs());
            }
        }
        defect
    }

    /// Largest entry of H - V diag(e) V^T.
    pub fn reconstruction_defect(&self, h: &SparseOperator) -> f64 {
        let e = Array1::from(self.eigenvalues.clone());
        let scaled = &self.vectors * &e.view().insert_axis(ndarray::Axis(1));
        let rebuilt = self.vectors.t().dot(&scaled);
        let dense = h.to_dense();
        let mut defect = 0.0f64;
        for (a, b) in rebuilt.iter().zip(dense.iter()) {
            defect = defect.max((a - b).abs());
        }
        defect
    }
}

/// Dense eigendecomposition of a symmetric sector operator.
pub fn decompose(h: &SparseOperator) -> Result<SpectralDecomposition> {
    if h.dim > DECOMPOSE_DIM_CAP {
        return Err(CoreError::DimensionCap {
            dim: h.dim,
            cap: DECOMPOSE_DIM_CAP,
        });
    }
    let n = h.dim;
    let dense = h.to_dense();
    let (values, vec_buf) = lapack::symmetric_eigen(dense.into_raw_vec_and_offset().0, n)?;
    let vectors = Array2::from_shape_vec((n, n), vec_buf)
        .expect("eigenvector buffer has the decomposition shape");
    Ok(SpectralDecomposition {
        eigenvalues: values,
        vectors,
    })
}

/// Boltzmann weights over an eigenspectrum.
#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    /// p_n = exp(-beta e_n - log_z), in eigenvalue order
    pub weights: Vec<f64>,
    /// ln Z at this beta
    pub log_z: f64,
    pub beta: f64,
}

impl ThermalEnsemble {
    /// Von Neumann entropy -sum p ln p of the ensemble (0 ln 0 = 0).
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }

    /// Mean energy sum p_n e_n.
    pub fn mean_energy(&self, eigenvalues: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(eigenvalues)
            .map(|(p, e)| p * e)
            .sum()
    }
}

/// log(sum exp(x_i)) evaluated stably.
pub fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Shift-stable Gibbs weights p_n over the spectrum at inverse temperature
/// `beta`.
pub fn gibbs_weights(spec: &SpectralDecomposition, beta: f64) -> Result<ThermalEnsemble> {
    if !(beta > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let log_z = logsumexp(spec.eigenvalues.iter().map(|e| -beta * e));
    let weights = spec
        .eigenvalues
        .iter()
        .map(|e| (-beta * e - log_z).exp())
        .collect();
    Ok(ThermalEnsemble {
        weights,
        log_z,
        beta,
    })
}

/// Equilibrium free-energy change -(ln Z_f - ln Z_0)/beta between two
/// spectra; depends on the endpoint Hamiltonians only.
pub fn free_energy_difference(
    spec0: &SpectralDecomposition,
    spec_f: &SpectralDecomposition,
    beta: f64,
) -> f64 {
    let log_z0 = logsumexp(spec0.eigenvalues.iter().map(|e| -beta * e));
    let log_zf = logsumexp(spec_f.eigenvalues.iter().map(|e| -beta * e));
    -(log_zf - log_z0) / beta
}
