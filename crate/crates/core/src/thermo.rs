//! Entropy production, trace distances, and the fluctuation-dissipation
//! diagnostics of the driven protocol.
//!
//! States are density matrices kept as real/imaginary planes. The entropy
//! production S(rho_tau || rho_tau^eq) reduces, for a Gibbs reference, to
//!
//! ```text
//! sigma = -S_vN(rho_tau) + beta Tr(H_f rho_tau) + ln Z_tau
//! ```
//!
//! exactly (ln of a Gibbs state is affine in H), so no matrix logarithm is
//! ever needed. The default path additionally uses unitarity,
//! S_vN(rho_tau) = S_vN(rho_0), supplying the entropy from the initial
//! Gibbs weights; [`entropy_production_spectral`] instead diagonalizes
//! rho_tau and is kept for cross-validation.
//!
//! The adiabatic reference transports initial populations to final
//! eigenstates by energy rank, which assumes no level crossings along the
//! ramp; the sweep records the minimum instantaneous gap so that this
//! assumption stays visible.

use crate::error::{CoreError, Result};
use crate::lapack;
use crate::propagator::{FinalBasisAmplitudes, PropagatedSet};
use crate::spectral::{logsumexp, SpectralDecomposition, ThermalEnsemble};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Hermitian, positive semidefinite, unit-trace state.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut re = Array2::zeros((n, n));
        for (i, v) in d.iter().enumerate() {
            re[(i, i)] = *v;
        }
        DensityMatrix {
            re,
            im: Array2::zeros((n, n)),
        }
    }

    pub fn trace(&self) -> f64 {
        self.re.diag().sum()
    }

    /// Tr rho^2 = sum |rho_ij|^2 for Hermitian rho.
    pub fn purity(&self) -> f64 {
        self.re.iter().map(|v| v * v).sum::<f64>() + self.im.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max(self.im[(i, i)].abs());
            for j in (i + 1)..n {
                d = d.max((self.re[(i, j)] - self.re[(j, i)]).abs());
                d = d.max((self.im[(i, j)] + self.im[(j, i)]).abs());
            }
        }
        d
    }

    /// Ascending eigenvalues (destructive LAPACK call on a copy).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
        for (r, i) in self.re.iter().zip(self.im.iter()) {
            buf.push(Complex64::new(*r, *i));
        }
        lapack::hermitian_eigenvalues(&mut buf, n)
    }

    /// Von Neumann entropy -Tr rho ln rho, clipping tiny negative
    /// eigenvalues (0 ln 0 = 0).
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln())
            .sum())
    }

    /// Contract checks: unit trace, hermiticity, spectrum >= -1e-12.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidParameter(format!(
                "density matrix trace {} != 1",
                self.trace()
            )));
        }
        if self.hermiticity_defect() > 1e-10 {
            return Err(CoreError::InvalidParameter(format!(
                "density matrix not Hermitian (defect {:.3e})",
                self.hermiticity_defect()
            )));
        }
        let min = self
            .eigenvalues()?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }
}

/// rho_tau = sum_n p_n |psi_n(tau)><psi_n(tau)| over the retained set,
/// renormalized over the kept weight. Errors when the propagation cutoff
/// discarded too much weight for state-level quantities.
pub fn evolved_state(prop: &PropagatedSet) -> Result<DensityMatrix> {
    if prop.discarded_weight > 1e-9 {
        return Err(CoreError::CutoffTooAggressive(prop.discarded_weight));
    }
    let kept: f64 = prop.weights.iter().sum();
    let scale: Vec<f64> = prop.weights.iter().map(|w| (w / kept).sqrt()).collect();
    weighted_outer(&prop.re, &prop.im, &scale)
}

/// rho expressed in the final eigenbasis from the projected amplitudes,
/// with the same retained-weight renormalization as [`evolved_state`].
pub fn evolved_in_final_basis(
    amps: &FinalBasisAmplitudes,
    weights: &[f64],
    discarded_weight: f64,
) -> Result<DensityMatrix> {
    if discarded_weight > 1e-9 {
        return Err(CoreError::CutoffTooAggressive(discarded_weight));
    }
    let kept: f64 = weights.iter().sum();
    let scale: Vec<f64> = weights.iter().map(|w| (w / kept).sqrt()).collect();
    weighted_outer(&amps.re, &amps.im, &scale)
}

/// B diag(s)^2 B^dagger for B given as planes, s real: the mixed state
/// assembled from weighted columns.
fn weighted_outer(re: &Array2<f64>, im: &Array2<f64>, scale: &[f64]) -> Result<DensityMatrix> {
    if re.ncols() != scale.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} columns vs {} weights",
            re.ncols(),
            scale.len()
        )));
    }
    let s = Array1::from(scale.to_vec());
    let b_re = re * &s; // scales columns
    let b_im = im * &s;
    let rho_re = b_re.dot(&b_re.t()) + b_im.dot(&b_im.t());
    let rho_im = b_im.dot(&b_re.t()) - b_re.dot(&b_im.t());
    Ok(DensityMatrix {
        re: rho_re,
        im: rho_im,
    })
}

/// Gibbs state of a decomposed Hamiltonian in the site basis.
pub fn equilibrium_state(spec: &SpectralDecomposition, ens: &ThermalEnsemble) -> DensityMatrix {
    let vt = spec.vectors_t();
    let s = Array1::from(ens.weights.iter().map(|w| w.sqrt()).collect::<Vec<_>>());
    let b = &vt.to_owned() * &s.view().insert_axis(ndarray::Axis(1)); // scale rows
    DensityMatrix {
        re: b.t().dot(&b),
        im: Array2::zeros((spec.dim(), spec.dim())),
    }
}

/// Adiabatic reference in the site basis: initial populations transported
/// to final eigenstates by energy rank.
pub fn adiabatic_reference(
    ensemble0: &ThermalEnsemble,
    spec_f: &SpectralDecomposition,
) -> DensityMatrix {
    let vt = spec_f.vectors_t();
    let s = Array1::from(
        ensemble0
            .weights
            .iter()
            .map(|w| w.sqrt())
            .collect::<Vec<_>>(),
    );
    let b = &vt.to_owned() * &s.view().insert_axis(ndarray::Axis(1));
    DensityMatrix {
        re: b.t().dot(&b),
        im: Array2::zeros((spec_f.dim(), spec_f.dim())),
    }
}

/// D_Tr(rho, sigma) = sum |eig(rho - sigma)| / 2.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "trace distance between dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let n = rho.dim();
    let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
    for ((ar, ai), (br, bi)) in rho
        .re
        .iter()
        .zip(rho.im.iter())
        .zip(sigma.re.iter().zip(sigma.im.iter()))
    {
        buf.push(Complex64::new(ar - br, ai - bi));
    }
    let eigs = lapack::hermitian_eigenvalues(&mut buf, n)?;
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

/// Entropy production via the Gibbs-reference identity with the conserved
/// entropy supplied by the caller (S_vN(rho_tau) = S_vN(rho_0) under the
/// unitary protocol).
pub fn entropy_production(
    rho_tau: &DensityMatrix,
    spec_f: &SpectralDecomposition,
    beta: f64,
    svn_conserved: f64,
) -> f64 {
    let log_z_f = logsumexp(spec_f.eigenvalues.iter().map(|e| -beta * e));
    -svn_conserved + beta * trace_h_rho(spec_f, rho_tau) + log_z_f
}

/// As [`entropy_production`] but with S_vN computed from the eigenvalues of
/// rho_tau itself; slower, makes no unitarity assumption.
pub fn entropy_production_spectral(
    rho_tau: &DensityMatrix,
    spec_f: &SpectralDecomposition,
    beta: f64,
) -> Result<f64> {
    let svn = rho_tau.von_neumann_entropy()?;
    Ok(entropy_production(rho_tau, spec_f, beta, svn))
}

/// Tr(H rho) for a site-basis rho through the eigendecomposition of H.
fn trace_h_rho(spec: &SpectralDecomposition, rho: &DensityMatrix) -> f64 {
    let vt = spec.vectors_t();
    // diag of Vt rho Vt^T; the antisymmetric imaginary part drops out
    let c = vt.dot(&rho.re);
    let mut acc = 0.0;
    for (m, e) in spec.eigenvalues.iter().enumerate() {
        let mut diag = 0.0;
        let crow = c.row(m);
        let vrow = vt.row(m);
        for (a, b) in crow.iter().zip(vrow.iter()) {
            diag += a * b;
        }
        acc += e * diag;
    }
    acc
}

/// 2 <Sigma> / (beta^2 Var W); `None` marks degenerate variance.
pub fn fdr_ratio(sigma: f64, variance: f64, beta: f64) -> Option<f64> {
    if variance > 0.0 {
        Some(2.0 * sigma / (beta * beta * variance))
    } else {
        None
    }
}

/// <W> - dF - beta Var(W)/2, the distance to the linear-response relation.
pub fn linear_response_gap(mean_work: f64, delta_f: f64, variance: f64, beta: f64) -> f64 {
    mean_work - delta_f - 0.5 * beta * variance
}

/// Thermodynamic summary of one grid point. Energies in units of J.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoRecord {
    pub mean_work: f64,
    pub variance: f64,
    /// raw third central moment, units J^3
    pub skew3: f64,
    /// dimensionless skewness, absent for degenerate variance
    pub skew_standardized: Option<f64>,
    pub delta_f: f64,
    /// entropy production, dimensionless
    pub sigma: f64,
    /// dissipated energy if thermalization followed the protocol
    pub sigma_over_beta: f64,
    /// trace distance to the final equilibrium state
    pub d_eq: Option<f64>,
    /// trace distance to the adiabatic reference
    pub d_adiab: Option<f64>,
    /// 2 sigma / (beta^2 Var W)
    pub fdr_ratio: Option<f64>,
    /// linear-response residual, units J
    pub lr_gap: f64,
    /// |<e^{-beta W}> e^{beta dF} - 1|
    pub jarzynski_residual: f64,
}

impl ThermoRecord {
    pub fn validate(&self) -> Result<()> {
        if self.sigma < -1e-9 {
            return Err(CoreError::InvalidParameter(format!(
                "entropy production {} below the non-negativity slack",
                self.sigma
            )));
        }
        for (name, v) in [("d_eq", self.d_eq), ("d_adiab", self.d_adiab)] {
            if let Some(v) = v {
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(CoreError::InvalidParameter(format!(
                        "{name} = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::half_filled_sector;
    use crate::hamiltonian::{build_drive, build_static, final_hamiltonian, HubbardParams};
    use crate::propagator::{propagate, transition_matrix, PropagationConfig};
    use crate::spectral::{decompose, free_energy_difference, gibbs_weights};

    struct Setup {
        params: HubbardParams,
        spec0: SpectralDecomposition,
        spec_f: SpectralDecomposition,
        ens0: ThermalEnsemble,
        ens_f: ThermalEnsemble,
        prop: PropagatedSet,
        amps: FinalBasisAmplitudes,
    }

    fn dimer(u: f64, tau: f64) -> Setup {
        let params = HubbardParams {
            l: 2,
            u,
            tau,
            ..Default::default()
        };
        let basis = half_filled_sector(2).unwrap();
        let hs = build_static(&basis, &params).unwrap();
        let hd = build_drive(&basis, &params).unwrap();
        let hf = final_hamiltonian(&hs, &hd);
        let spec0 = decompose(&hs).unwrap();
        let spec_f = decompose(&hf).unwrap();
        let ens0 = gibbs_weights(&spec0, params.beta).unwrap();
        let ens_f = gibbs_weights(&spec_f, params.beta).unwrap();
        let prop = propagate(
            &spec0,
            &ens0,
            &hs,
            &hd,
            params.tau,
            &PropagationConfig::default(),
        )
        .unwrap();
        let (_, amps) = transition_matrix(&prop, &spec0, &spec_f);
        Setup {
            params,
            spec0,
            spec_f,
            ens0,
            ens_f,
            prop,
            amps,
        }
    }

    #[test]
    fn evolved_state_is_a_valid_state_with_conserved_purity() {
        let s = dimer(4.0, 1.0);
        let rho = evolved_state(&s.prop).unwrap();
        rho.validate().unwrap();
        let rho0 = equilibrium_state(&s.spec0, &s.ens0);
        rho0.validate().unwrap();
        assert!((rho.purity() - rho0.purity()).abs() < 1e-9);
    }

    #[test]
    fn site_and_eigenbasis_routes_agree() {
        let s = dimer(3.0, 0.7);
        let rho_site = evolved_state(&s.prop).unwrap();
        let rho_eig =
            evolved_in_final_basis(&s.amps, &s.prop.weights, s.prop.discarded_weight).unwrap();
        // trace distance to equilibrium must match across representations
        let eq_site = equilibrium_state(&s.spec_f, &s.ens_f);
        let eq_eig = DensityMatrix::from_diagonal(&s.ens_f.weights);
        let d1 = trace_distance(&rho_site, &eq_site).unwrap();
        let d2 = trace_distance(&rho_eig, &eq_eig).unwrap();
        assert!((d1 - d2).abs() < 1e-10, "{d1} vs {d2}");
        // entropy production likewise
        let svn = s.ens0.entropy();
        let s1 = entropy_production(&rho_site, &s.spec_f, s.params.beta, svn);
        let rho_diag: Vec<f64> = (0..4).map(|m| s.spec_f.eigenvalues[m]).collect();
        let tr_h = s
            .amps
            .re
            .columns()
            .into_iter()
            .zip(s.amps.im.columns())
            .enumerate()
            .map(|(n, (re, im))| {
                let w = s.prop.weights[n];
                rho_diag
                    .iter()
                    .enumerate()
                    .map(|(m, e)| e * (re[m] * re[m] + im[m] * im[m]))
                    .sum::<f64>()
                    * w
            })
            .sum::<f64>();
        let log_zf = logsumexp(s.spec_f.eigenvalues.iter().map(|e| -s.params.beta * e));
        let s2 = -svn + s.params.beta * tr_h + log_zf;
        assert!((s1 - s2).abs() < 1e-9, "{s1} vs {s2}");
    }

    #[test]
    fn identity_protocol_has_zero_entropy_production() {
        // equilibrium state against its own Hamiltonian
        let s = dimer(2.0, 1.0);
        let rho_eq = equilibrium_state(&s.spec0, &s.ens0);
        let svn = s.ens0.entropy();
        let sigma = entropy_production(&rho_eq, &s.spec0, s.params.beta, svn);
        assert!(sigma.abs() < 1e-10, "sigma = {sigma}");
        let sigma_direct =
            entropy_production_spectral(&rho_eq, &s.spec0, s.params.beta).unwrap();
        assert!(sigma_direct.abs() < 1e-9);
        assert!(trace_distance(&rho_eq, &rho_eq).unwrap() < 1e-12);
    }

    #[test]
    fn entropy_identity_beta_w_minus_df() {
        // sigma = beta (<W> - dF) under unitary dynamics
        let s = dimer(5.0, 2.0);
        let rho = evolved_state(&s.prop).unwrap();
        let svn = s.ens0.entropy();
        let sigma = entropy_production(&rho, &s.spec_f, s.params.beta, svn);
        let (table, _) = transition_matrix(&s.prop, &s.spec0, &s.spec_f);
        let dist =
            crate::workstats::build_distribution(&table, 1e-9, 0.0).unwrap();
        let df = free_energy_difference(&s.spec0, &s.spec_f, s.params.beta);
        let identity = s.params.beta * (dist.mean() - df);
        assert!(
            (sigma - identity).abs() < 1e-8,
            "sigma {sigma} vs beta(W - dF) {identity}"
        );
        // and the spectral route agrees
        let sigma_direct =
            entropy_production_spectral(&rho, &s.spec_f, s.params.beta).unwrap();
        assert!((sigma - sigma_direct).abs() < 1e-8);
        assert!(sigma >= -1e-9);
    }

    #[test]
    fn trace_distance_classical_and_pure_cases() {
        let a = DensityMatrix::from_diagonal(&[0.7, 0.3]);
        let b = DensityMatrix::from_diagonal(&[0.3, 0.7]);
        assert!((trace_distance(&a, &b).unwrap() - 0.4).abs() < 1e-12);
        let p0 = DensityMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = DensityMatrix::from_diagonal(&[0.0, 1.0]);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_axioms_on_protocol_states() {
        let s = dimer(6.0, 0.5);
        let rho = evolved_state(&s.prop).unwrap();
        let eq = equilibrium_state(&s.spec_f, &s.ens_f);
        let ad = adiabatic_reference(&s.ens0, &s.spec_f);
        ad.validate().unwrap();
        let d_re = trace_distance(&rho, &eq).unwrap();
        let d_er = trace_distance(&eq, &rho).unwrap();
        assert!((d_re - d_er).abs() < 1e-12, "symmetry");
        let d_ra = trace_distance(&rho, &ad).unwrap();
        let d_ae = trace_distance(&ad, &eq).unwrap();
        assert!(d_re <= d_ra + d_ae + 1e-12, "triangle inequality");
        for d in [d_re, d_ra, d_ae] {
            assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn unitary_invariance_of_trace_distance() {
        // evolve two different Gibbs states with the same propagator; their
        // distance must be conserved
        let s = dimer(4.0, 1.0);
        let beta2 = 2.0 * s.params.beta;
        let ens_b2 = gibbs_weights(&s.spec0, beta2).unwrap();

        let rho_a0 = equilibrium_state(&s.spec0, &s.ens0);
        let rho_b0 = equilibrium_state(&s.spec0, &ens_b2);
        let d_before = trace_distance(&rho_a0, &rho_b0).unwrap();

        // same propagated vectors, different weights
        let kept_a: f64 = s.prop.weights.iter().sum();
        assert!((kept_a - 1.0).abs() < 1e-12);
        let rho_a = evolved_state(&s.prop).unwrap();
        let wb: Vec<f64> = s.prop.indices.iter().map(|&n| ens_b2.weights[n]).collect();
        let scale: Vec<f64> = wb.iter().map(|w| w.sqrt()).collect();
        let rho_b = super::weighted_outer(&s.prop.re, &s.prop.im, &scale).unwrap();
        let d_after = trace_distance(&rho_a, &rho_b).unwrap();
        assert!(
            (d_before - d_after).abs() < 1e-9,
            "{d_before} vs {d_after}"
        );
    }

    #[test]
    fn adiabatic_reference_at_identity_is_initial_state() {
        let s = dimer(3.0, 1.0);
        let ad = adiabatic_reference(&s.ens0, &s.spec0);
        let rho0 = equilibrium_state(&s.spec0, &s.ens0);
        assert!(trace_distance(&ad, &rho0).unwrap() < 1e-12);
    }

    #[test]
    fn fdr_and_linear_response_edge_cases() {
        assert_eq!(fdr_ratio(1.0, 0.0, 0.4), None);
        let beta: f64 = 0.4;
        let var = 3.0;
        let sigma = 0.5 * beta * beta * var;
        let r = fdr_ratio(sigma, var, beta).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(linear_response_gap(2.0, 2.0, 0.0, beta).abs() < 1e-15);
        // at exact linear response the gap closes: <W> = dF + beta Var/2
        let mean = 1.0 + 0.5 * beta * var;
        assert!(linear_response_gap(mean, 1.0, var, beta).abs() < 1e-15);
    }

    /// Shifting H_f rigidly moves <W> and dF equally: sigma and the ratio
    /// are invariant.
    #[test]
    fn fdr_invariant_under_global_energy_shift() {
        let s = dimer(4.0, 1.5);
        let (table, _) = transition_matrix(&s.prop, &s.spec0, &s.spec_f);
        let dist = crate::workstats::build_distribution(&table, 1e-9, 0.0).unwrap();
        let df = free_energy_difference(&s.spec0, &s.spec_f, s.params.beta);
        let sigma = s.params.beta * (dist.mean() - df);

        // shifted final spectrum: same eigenvectors, energies + c
        let c = 3.3;
        let shifted = s.spec_f.with_energy_shift(c);
        let (table2, _) = transition_matrix(&s.prop, &s.spec0, &shifted);
        let dist2 = crate::workstats::build_distribution(&table2, 1e-9, 0.0).unwrap();
        let df2 = free_energy_difference(&s.spec0, &shifted, s.params.beta);
        let sigma2 = s.params.beta * (dist2.mean() - df2);
        assert!((sigma - sigma2).abs() < 1e-9);
        assert!((dist.variance() - dist2.variance()).abs() < 1e-9);
        let r1 = fdr_ratio(sigma, dist.variance(), s.params.beta).unwrap();
        let r2 = fdr_ratio(sigma2, dist2.variance(), s.params.beta).unwrap();
        assert!((r1 - r2).abs() < 1e-9);
    }
}
