//! Self-contained brute-force reference for the L = 2 dimer.
//!
//! Everything here is deliberately independent of the library's
//! implementation path: the 4x4 sector matrices are written out by hand in
//! the occupation basis {|ud,0>, |u,d>, |d,u>, |0,ud>}, eigenproblems are
//! solved with a cyclic Jacobi sweep, the dynamics is a fixed-step RK4
//! integration of the full 4x4 propagator at dt = 1e-4, and every
//! statistic is a direct sum over the 16 transition pairs. Complex
//! Hermitian eigenvalues go through the real symmetric embedding
//! [[Re, -Im], [Im, Re]], which doubles each eigenvalue.

use num_complex::Complex64;

pub const DIM: usize = 4;

/// Static dimer Hamiltonian in the hand-enumerated basis. All four hopping
/// elements carry the same sign with the site-major, up-before-down
/// operator ordering.
pub fn h_static(u: f64) -> [[f64; DIM]; DIM] {
    let j = 1.0;
    [
        [u, -j, -j, 0.0],
        [-j, 0.0, 0.0, -j],
        [-j, 0.0, 0.0, -j],
        [0.0, -j, -j, u],
    ]
}

/// Full-strength drive diagonal: site potentials Delta_1 = A, Delta_2 = 2A
/// weighing the site charges of each basis state.
pub fn drive_diagonal(a: f64) -> [f64; DIM] {
    [2.0 * a, 3.0 * a, 3.0 * a, 4.0 * a]
}

pub fn h_final(u: f64, a: f64) -> [[f64; DIM]; DIM] {
    let mut h = h_static(u);
    let d = drive_diagonal(a);
    for i in 0..DIM {
        h[i][i] += d[i];
    }
    h
}

/// Eigenvalues (ascending) and eigenvectors (columns) by cyclic Jacobi.
pub fn jacobi_eigen<const N: usize>(mut a: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..N {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    // sort ascending
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut w = [0.0; N];
    let mut vs = [[0.0; N]; N];
    for (new, &old) in order.iter().enumerate() {
        w[new] = a[old][old];
        for r in 0..N {
            vs[r][new] = v[r][old];
        }
    }
    (w, vs)
}

/// Fixed-step RK4 on i dU/dt = H(t) U from U = 1, H(t) = H_s + (t/tau) D.
/// Returns the final 4x4 propagator, column n = evolved |site basis n>.
pub fn rk4_propagator(u: f64, a: f64, tau: f64, dt: f64) -> [[Complex64; DIM]; DIM] {
    let hs = h_static(u);
    let d = drive_diagonal(a);
    let mut psi = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for (i, row) in psi.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    if tau == 0.0 {
        return psi;
    }
    let n_steps = (tau / dt).round().max(1.0) as usize;
    let h = tau / n_steps as f64;
    let rhs = |t: f64, y: &[[Complex64; DIM]; DIM]| {
        let lam = t / tau;
        let mut out = [[Complex64::new(0.0, 0.0); DIM]; DIM];
        for col in 0..DIM {
            for r in 0..DIM {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..DIM {
                    let mut hval = hs[r][c];
                    if r == c {
                        hval += lam * d[r];
                    }
                    acc += hval * y[c][col];
                }
                out[r][col] = Complex64::new(0.0, -1.0) * acc;
            }
        }
        out
    };
    let lin = |y: &[[Complex64; DIM]; DIM], k: &[[Complex64; DIM]; DIM], s: f64| {
        let mut out = *y;
        for r in 0..DIM {
            for c in 0..DIM {
                out[r][c] += s * k[r][c];
            }
        }
        out
    };
    for step in 0..n_steps {
        let t = step as f64 * h;
        let k1 = rhs(t, &psi);
        let k2 = rhs(t + 0.5 * h, &lin(&psi, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &lin(&psi, &k2, 0.5 * h));
        let k4 = rhs(t + h, &lin(&psi, &k3, h));
        for r in 0..DIM {
            for c in 0..DIM {
                psi[r][c] +=
                    (h / 6.0) * (k1[r][c] + 2.0 * k2[r][c] + 2.0 * k3[r][c] + k4[r][c]);
            }
        }
    }
    psi
}

/// Complete TPM statistics of the dimer protocol, assembled by direct
/// summation.
pub struct DimerReference {
    pub eps0: [f64; DIM],
    pub eps_f: [f64; DIM],
    pub weights: [f64; DIM],
    /// p[m][n] = |<m_f| U |n_0>|^2
    pub probs: [[f64; DIM]; DIM],
    /// all 16 (W, probability) pairs, unsorted
    pub pairs: Vec<(f64, f64)>,
    pub mean: f64,
    pub variance: f64,
    pub skew3: f64,
    pub delta_f: f64,
    pub sigma: f64,
    pub d_eq: f64,
    pub d_adiab: f64,
}

pub fn dimer_reference(u: f64, a: f64, tau: f64, beta: f64, dt: f64) -> DimerReference {
    let (eps0, v0) = jacobi_eigen(h_static(u));
    let (eps_f, vf) = jacobi_eigen(h_final(u, a));
    let prop = rk4_propagator(u, a, tau, dt);

    // amplitudes <m|U|n> with all vectors real: columns of v0, vf
    let mut amp = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for m in 0..DIM {
        for n in 0..DIM {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..DIM {
                let mut urn = Complex64::new(0.0, 0.0);
                for c in 0..DIM {
                    urn += prop[r][c] * v0[c][n];
                }
                acc += vf[r][m] * urn;
            }
            amp[m][n] = acc;
        }
    }
    let mut probs = [[0.0; DIM]; DIM];
    for m in 0..DIM {
        for n in 0..DIM {
            probs[m][n] = amp[m][n].norm_sqr();
        }
    }

    let z0: f64 = eps0.iter().map(|e| (-beta * e).exp()).sum();
    let zf: f64 = eps_f.iter().map(|e| (-beta * e).exp()).sum();
    let weights: [f64; DIM] = std::array::from_fn(|n| (-beta * eps0[n]).exp() / z0);
    let delta_f = -(zf.ln() - z0.ln()) / beta;

    let mut pairs = Vec::with_capacity(16);
    for n in 0..DIM {
        for m in 0..DIM {
            pairs.push((eps_f[m] - eps0[n], weights[n] * probs[m][n]));
        }
    }
    let mean: f64 = pairs.iter().map(|(w, p)| w * p).sum();
    let variance: f64 = pairs.iter().map(|(w, p)| (w - mean).powi(2) * p).sum();
    let skew3: f64 = pairs.iter().map(|(w, p)| (w - mean).powi(3) * p).sum();

    // rho_tau in the site basis: sum_n w_n (U v0_n)(U v0_n)^dagger
    let mut rho = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for n in 0..DIM {
        let mut evolved = [Complex64::new(0.0, 0.0); DIM];
        for r in 0..DIM {
            for c in 0..DIM {
                evolved[r] += prop[r][c] * v0[c][n];
            }
        }
        for r in 0..DIM {
            for c in 0..DIM {
                rho[r][c] += weights[n] * evolved[r] * evolved[c].conj();
            }
        }
    }

    // entropy production without the unitarity shortcut:
    // sigma = -S_vN(rho) + beta Tr(H_f rho) + ln Z_f
    let svn: f64 = hermitian_eigenvalues_4(&rho)
        .into_iter()
        .filter(|p| *p > 1e-300)
        .map(|p| -p * p.ln())
        .sum();
    let hf = h_final(u, a);
    let mut tr_h_rho = 0.0;
    for r in 0..DIM {
        for c in 0..DIM {
            tr_h_rho += (hf[r][c] * rho[c][r]).re;
        }
    }
    let sigma = -svn + beta * tr_h_rho + zf.ln();

    // trace distances against the diagonal references in the final basis
    let mut rho_f = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for m in 0..DIM {
        for mp in 0..DIM {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..DIM {
                acc += weights[n] * amp[m][n] * amp[mp][n].conj();
            }
            rho_f[m][mp] = acc;
        }
    }
    let mut diff_eq = rho_f;
    let mut diff_ad = rho_f;
    for m in 0..DIM {
        diff_eq[m][m] -= (-beta * eps_f[m]).exp() / zf;
        diff_ad[m][m] -= weights[m]; // rank transport n -> n
    }
    let d_eq = 0.5
        * hermitian_eigenvalues_4(&diff_eq)
            .into_iter()
            .map(f64::abs)
            .sum::<f64>();
    let d_adiab = 0.5
        * hermitian_eigenvalues_4(&diff_ad)
            .into_iter()
            .map(f64::abs)
            .sum::<f64>();

    DimerReference {
        eps0,
        eps_f,
        weights,
        probs,
        pairs,
        mean,
        variance,
        skew3,
        delta_f,
        sigma,
        d_eq,
        d_adiab,
    }
}

/// Eigenvalues of a 4x4 complex Hermitian matrix via the 8x8 real
/// symmetric embedding (each eigenvalue comes out twice).
pub fn hermitian_eigenvalues_4(h: &[[Complex64; DIM]; DIM]) -> [f64; DIM] {
    let mut e = [[0.0; 8]; 8];
    for r in 0..DIM {
        for c in 0..DIM {
            e[r][c] = h[r][c].re;
            e[r + DIM][c + DIM] = h[r][c].re;
            e[r][c + DIM] = -h[r][c].im;
            e[r + DIM][c] = h[r][c].im;
        }
    }
    let (w, _) = jacobi_eigen(e);
    // ascending, doubled: take every other
    [w[0], w[2], w[4], w[6]]
}

/// Sorted, merged stems from raw pairs (the oracle's own merging).
pub fn merged_stems(pairs: &[(f64, f64)], tol: f64, floor: f64) -> Vec<(f64, f64)> {
    let mut ps: Vec<(f64, f64)> = pairs.iter().filter(|(_, p)| *p >= floor).copied().collect();
    ps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (w, p) in ps {
        match out.last_mut() {
            Some((wl, pl)) if w - *wl <= tol => {
                let total = *pl + p;
                *wl = (*wl * *pl + w * p) / total;
                *pl = total;
            }
            _ => out.push((w, p)),
        }
    }
    let total: f64 = out.iter().map(|(_, p)| p).sum();
    for (_, p) in out.iter_mut() {
        *p /= total;
    }
    out
}
