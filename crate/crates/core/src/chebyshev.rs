//! Chebyshev expansion of the unitary step exp(-i theta H) acting on
//! blocks of state vectors.
//!
//! With the spectrum of H enclosed in [lo, hi] (Gershgorin), write
//! H = c + r X with spec(X) in [-1, 1]. Then
//!
//! ```text
//! exp(-i theta H) = e^{-i theta c} sum_k (2 - d_{k0}) (-i)^k J_k(theta r) T_k(X)
//! ```
//!
//! and the Bessel coefficients J_k decay superexponentially once
//! k > theta r, so the series is truncated at machine precision. The
//! recurrence T_{k+1} = 2 X T_k - T_{k-1} needs one sparse
//! matrix-block product per term, and since (-i)^k cycles through
//! {1, -i, -1, i}, the whole evolution runs on separate real and
//! imaginary planes with real axpys only.
//!
//! Blocks are processed in column panels sized to stay cache-resident;
//! columns evolve independently, which is also where the parallelism
//! lives (one task per panel, no shared mutable state).

use crate::sparse::SparseOperator;

/// Truncated coefficient set for one exp(-i theta H) application.
#[derive(Debug, Clone, Default)]
pub struct ExpActionPlan {
    /// g_0 = J_0(z), g_k = 2 J_k(z) for k >= 1
    pub coeffs: Vec<f64>,
    /// spectral center c
    pub center: f64,
    /// spectral half-width r (>= 0)
    pub half_width: f64,
    /// theta of this application
    pub theta: f64,
}

/// Coefficients J_0(z) .. J_kmax(z) by Miller's downward recurrence.
///
/// Accurate to ~1e-15 relative to J's magnitude for the z range used here
/// (z up to a few hundred).
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    assert!(z >= 0.0);
    if z == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    // start well above both kmax and the turning point k ~ z
    let start = kmax + 40 + (1.3 * z) as usize;
    let mut jp1 = 0.0f64; // J_{k+1}
    let mut jk = 1e-300f64; // J_k seed
    let mut out = vec![0.0; kmax + 1];
    let mut norm = 0.0f64; // J_0 + 2 sum_{even k >= 2} J_k
    for k in (0..=start).rev() {
        let jm1 = 2.0 * (k as f64 + 1.0) / z * jk - jp1;
        jp1 = jk;
        jk = jm1;
        // renormalize to dodge overflow on the way down
        if jk.abs() > 1e250 {
            jk *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        if k <= kmax {
            out[k] = jk;
        }
        if k > 0 && k % 2 == 0 {
            norm += 2.0 * jk;
        }
    }
    norm += jk; // J_0 term (jk now holds J_0's unnormalized value)
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Build the truncated plan for exp(-i theta H) with spec(H) in [lo, hi].
pub fn plan_exp_action(theta: f64, lo: f64, hi: f64) -> ExpActionPlan {
    debug_assert!(hi >= lo);
    let center = 0.5 * (hi + lo);
    // slight inflation keeps the mapped spectrum strictly inside [-1, 1]
    let half_width = 0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-14;
    let z = (theta.abs() * half_width).max(0.0);
    // superexponential decay sets in at k ~ z; the additive term covers the
    // slow pre-asymptotic range at small z
    let kmax = (z + 12.0 * (z + 1.0).cbrt() + 24.0).ceil() as usize;
    let js = bessel_j_sequence(z, kmax);
    // truncate where the tail is numerically irrelevant
    let mut last = js.len();
    while last > 1 && js[last - 1].abs() < 1e-16 && js[last - 2].abs() < 1e-16 {
        last -= 1;
    }
    let mut coeffs: Vec<f64> = js[..last].to_vec();
    for c in coeffs.iter_mut().skip(1) {
        *c *= 2.0;
    }
    ExpActionPlan {
        coeffs,
        center,
        half_width,
        theta,
    }
}

/// One panel of state vectors split into real and imaginary planes,
/// stored row-major as dim x width.
#[derive(Debug, Clone)]
pub struct Panel {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub dim: usize,
    pub width: usize,
}

impl Panel {
    pub fn zeros(dim: usize, width: usize) -> Self {
        Panel {
            re: vec![0.0; dim * width],
            im: vec![0.0; dim * width],
            dim,
            width,
        }
    }

    /// Squared l2 norm of each column.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        let w = self.width;
        let mut out = vec![0.0; w];
        for r in 0..self.dim {
            let re = &self.re[r * w..(r + 1) * w];
            let im = &self.im[r * w..(r + 1) * w];
            for q in 0..w {
                out[q] += re[q] * re[q] + im[q] * im[q];
            }
        }
        out
    }

    /// Max over columns of the l2 distance to `other`.
    pub fn max_column_distance(&self, other: &Panel) -> f64 {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.width, other.width);
        let w = self.width;
        let mut acc = vec![0.0f64; w];
        for r in 0..self.dim {
            let (a, b) = (&self.re[r * w..(r + 1) * w], &other.re[r * w..(r + 1) * w]);
            let (c, d) = (&self.im[r * w..(r + 1) * w], &other.im[r * w..(r + 1) * w]);
            for q in 0..w {
                let dr = a[q] - b[q];
                let di = c[q] - d[q];
                acc[q] += dr * dr + di * di;
            }
        }
        acc.into_iter().fold(0.0f64, f64::max).sqrt()
    }
}

/// Scratch buffers for the Chebyshev recurrence, reused across steps.
pub struct PanelScratch {
    t: Panel,
    u: Panel,
    row_acc: Vec<f64>,
}

impl PanelScratch {
    pub fn new(dim: usize, width: usize) -> Self {
        PanelScratch {
            t: Panel::zeros(dim, width),
            u: Panel::zeros(dim, width),
            row_acc: vec![0.0; width],
        }
    }
}

/// dst[r,:] = inv_r * (sum_csr h[r,c] src[c,:] + alpha[r] * src[r,:])
/// i.e. one application of X = (H_s + lambda D - c I)/r to a plane.
fn apply_x_plane(
    h: &SparseOperator,
    alpha: &[f64],
    inv_r: f64,
    src: &[f64],
    dst: &mut [f64],
    width: usize,
    row_acc: &mut [f64],
) {
    for r in 0..h.dim {
        let (cols, vals) = h.row(r);
        let acc = &mut row_acc[..width];
        acc.fill(0.0);
        for (c, v) in cols.iter().zip(vals) {
            let x = &src[*c as usize * width..(*c as usize + 1) * width];
            let v = *v;
            for q in 0..width {
                acc[q] += v * x[q];
            }
        }
        let xr = &src[r * width..(r + 1) * width];
        let a = alpha[r];
        let out = &mut dst[r * width..(r + 1) * width];
        for q in 0..width {
            out[q] = inv_r * (acc[q] + a * xr[q]);
        }
    }
}

/// dst[r,:] = 2 * X srcU - dst[r,:]  (fused Chebyshev step)
fn cheb_step_plane(
    h: &SparseOperator,
    alpha: &[f64],
    inv_r: f64,
    src: &[f64],
    dst: &mut [f64],
    width: usize,
    row_acc: &mut [f64],
) {
    let two_inv_r = 2.0 * inv_r;
    for r in 0..h.dim {
        let (cols, vals) = h.row(r);
        let acc = &mut row_acc[..width];
        acc.fill(0.0);
        for (c, v) in cols.iter().zip(vals) {
            let x = &src[*c as usize * width..(*c as usize + 1) * width];
            let v = *v;
            for q in 0..width {
                acc[q] += v * x[q];
            }
        }
        let xr = &src[r * width..(r + 1) * width];
        let a = alpha[r];
        let out = &mut dst[r * width..(r + 1) * width];
        for q in 0..width {
            out[q] = two_inv_r * (acc[q] + a * xr[q]) - out[q];
        }
    }
}

/// Apply exp(-i theta (H_s + lambda D)) to `psi` in place.
///
/// `alpha[r]` must hold lambda*d[r] - center. The plan's coefficients,
/// center and half-width must match (theta, lambda); the caller owns that
/// consistency because it also owns the spectral bounds.
pub fn exp_action(
    h: &SparseOperator,
    alpha: &[f64],
    plan: &ExpActionPlan,
    psi: &mut Panel,
    scratch: &mut PanelScratch,
) {
    let n = psi.dim;
    let w = psi.width;
    debug_assert_eq!(h.dim, n);
    debug_assert_eq!(alpha.len(), n);
    let deg = plan.coeffs.len() - 1;
    let inv_r = 1.0 / plan.half_width;

    let t = &mut scratch.t;
    let u = &mut scratch.u;
    // T_0 = psi
    t.re[..n * w].copy_from_slice(&psi.re);
    t.im[..n * w].copy_from_slice(&psi.im);

    if deg >= 1 {
        // T_1 = X psi
        apply_x_plane(h, alpha, inv_r, &t.re, &mut u.re, w, &mut scratch.row_acc);
        apply_x_plane(h, alpha, inv_r, &t.im, &mut u.im, w, &mut scratch.row_acc);
    }

    // acc = g0 T_0 (+ g1 * (-i) T_1), accumulated into psi
    let g0 = plan.coeffs[0];
    for (p, tv) in psi.re.iter_mut().zip(&t.re) {
        *p = g0 * tv;
    }
    for (p, tv) in psi.im.iter_mut().zip(&t.im) {
        *p = g0 * tv;
    }
    if deg >= 1 {
        let g1 = plan.coeffs[1];
        // a_1 = -i g1: re += g1*u_im ; im -= g1*u_re
        for (p, uv) in psi.re.iter_mut().zip(&u.im) {
            *p += g1 * uv;
        }
        for (p, uv) in psi.im.iter_mut().zip(&u.re) {
            *p -= g1 * uv;
        }
    }

    for k in 2..=deg {
        // t <- 2 X u - t, then swap so u holds T_k
        cheb_step_plane(h, alpha, inv_r, &u.re, &mut t.re, w, &mut scratch.row_acc);
        cheb_step_plane(h, alpha, inv_r, &u.im, &mut t.im, w, &mut scratch.row_acc);
        std::mem::swap(t, u);
        let g = plan.coeffs[k];
        match k % 4 {
            0 => {
                for (p, uv) in psi.re.iter_mut().zip(&u.re) {
                    *p += g * uv;
                }
                for (p, uv) in psi.im.iter_mut().zip(&u.im) {
                    *p += g * uv;
                }
            }
            1 => {
                for (p, uv) in psi.re.iter_mut().zip(&u.im) {
                    *p += g * uv;
                }
                for (p, uv) in psi.im.iter_mut().zip(&u.re) {
                    *p -= g * uv;
                }
            }
            2 => {
                for (p, uv) in psi.re.iter_mut().zip(&u.re) {
                    *p -= g * uv;
                }
                for (p, uv) in psi.im.iter_mut().zip(&u.im) {
                    *p -= g * uv;
                }
            }
            _ => {
                for (p, uv) in psi.re.iter_mut().zip(&u.im) {
                    *p -= g * uv;
                }
                for (p, uv) in psi.im.iter_mut().zip(&u.re) {
                    *p += g * uv;
                }
            }
        }
    }

    // global phase e^{-i theta c}
    let phi = plan.theta * plan.center;
    let (cp, sp) = (phi.cos(), phi.sin());
    for (re, im) in psi.re.iter_mut().zip(psi.im.iter_mut()) {
        let r = *re;
        let i = *im;
        *re = r * cp + i * sp;
        *im = i * cp - r * sp;
    }
}

/// y = -i (H_s + lambda D) psi, used by the RK4 oracle backend.
pub fn apply_minus_i_h(
    h: &SparseOperator,
    drive: &[f64],
    lambda: f64,
    psi: &Panel,
    out: &mut Panel,
    row_acc: &mut [f64],
) {
    let w = psi.width;
    // -i (A + iB) = B - iA with A = H psi_re, B = H psi_im
    let alpha: Vec<f64> = drive.iter().map(|d| lambda * d).collect();
    apply_x_plane(h, &alpha, 1.0, &psi.im, &mut out.re, w, row_acc);
    apply_x_plane(h, &alpha, 1.0, &psi.re, &mut out.im, w, row_acc);
    for v in out.im.iter_mut() {
        *v = -*v;
    }
}
