//! Thin safe wrappers over the LAPACK routines we need.
//!
//! `dsyevd` (divide and conquer) is used for the full decompositions; the
//! plain QR `dsyev` in the usual wrapper crates is several times slower at
//! the sector sizes this code runs (up to 4900). `zheev` with jobz='N'
//! supplies eigenvalues of complex Hermitian matrices for trace distances
//! and von Neumann entropies.
//!
//! LAPACK is column-major. Real symmetric input is layout-agnostic; for the
//! Hermitian case the row-major buffer reads as the transpose, i.e. the
//! complex conjugate, which has the same (real) spectrum, so eigenvalue-only
//! calls need no conversion. Eigenvector output columns land contiguously,
//! which a row-major view reads as one eigenvector per row.

use crate::error::{CoreError, Result};
use lapack_sys::{dsyevd_, zheev_, c_double_complex};
use num_complex::Complex64;
use std::ffi::c_char;

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
///
/// `a` is the matrix in any layout (symmetry makes them equal), length
/// n*n, destroyed on exit. Returns (eigenvalues, vectors) where row k of
/// `vectors` (row-major n x n) is the k-th eigenvector.
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let n_i = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;

    // workspace query
    let mut work_len = [0.0f64];
    let mut iwork_len = [0i32];
    let minus_one = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work_len.as_mut_ptr(),
            &minus_one,
            iwork_len.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver(info));
    }
    let lwork = work_len[0] as usize;
    let liwork = iwork_len[0].max(1) as usize;
    let mut work = vec![0.0f64; lwork.max(1)];
    let mut iwork = vec![0i32; liwork];
    let lwork_i = work.len() as i32;
    let liwork_i = iwork.len() as i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork_i,
            iwork.as_mut_ptr(),
            &liwork_i,
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver(info));
    }
    Ok((w, a))
}

/// Eigenvalues (ascending) of a complex Hermitian matrix given row-major;
/// the buffer is destroyed.
pub fn hermitian_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let jobz = b'N' as c_char;
    let uplo = b'L' as c_char;
    let n_i = n as i32;
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; (3 * n - 2).max(1)];
    let mut info: i32 = 0;

    let mut work_len = [Complex64::new(0.0, 0.0)];
    let minus_one = -1i32;
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr() as *mut c_double_complex,
            &n_i,
            w.as_mut_ptr(),
            work_len.as_mut_ptr() as *mut c_double_complex,
            &minus_one,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver(info));
    }
    let lwork = work_len[0].re as usize;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1)];
    let lwork_i = work.len() as i32;
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr() as *mut c_double_complex,
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut c_double_complex,
            &lwork_i,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver(info));
    }
    Ok(w)
}
