//! Two-point-measurement work distribution and its moments.
//!
//! ```text
//! P(W) = sum_{n,m} p_n^0 p_{m|n}^tau  delta[W - (e_m^tau - e_n^0)]
//! ```
//!
//! The support is genuinely discrete at these system sizes, so the
//! distribution is kept as stems (W_i, P_i): pairs are accumulated, sorted,
//! and stems closer than `merge_tol` are combined by probability-weighted
//! averaging. The raw (n, m) pair count before merging is reported
//! separately since degenerate energies can merge lines.
//!
//! The third moment is reported raw (units J^3), not standardized; the
//! standardized value is available as a derived quantity.

pub use crate::propagator::TransitionTable;
use crate::error::{CoreError, Result};
use crate::propagator::PropagatedSet;
use crate::sparse::SparseOperator;
use crate::spectral::logsumexp;
use serde::{Deserialize, Serialize};

/// Stem (line) representation of P(W) on its merged support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkDistribution {
    /// ascending work values
    pub support: Vec<f64>,
    /// P(W_i), normalized to 1
    pub probs: Vec<f64>,
    /// energy tolerance used to combine degenerate lines
    pub merge_tol: f64,
    /// (n, m) pairs with mass above the floor, before merging
    pub raw_pair_count: usize,
    /// probability mass dropped by the floor (before renormalization)
    pub dropped_mass: f64,
    /// initial weight dropped by the propagation cutoff
    pub discarded_weight: f64,
}

pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
pub const DEFAULT_PROB_FLOOR: f64 = 1e-14;

/// Accumulate, merge and normalize the work stems of a transition table.
pub fn build_distribution(
    table: &TransitionTable,
    merge_tol: f64,
    prob_floor: f64,
) -> Result<WorkDistribution> {
    if merge_tol < 0.0 || prob_floor < 0.0 {
        return Err(CoreError::InvalidParameter(
            "merge_tol and prob_floor must be non-negative".into(),
        ));
    }
    let retained = table.retained();
    let dim_f = table.eps_f.len();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(retained * dim_f);
    let mut dropped = 0.0;
    for m in 0..dim_f {
        let e_m = table.eps_f[m];
        let row = table.probs.row(m);
        for n in 0..retained {
            let p = table.weights0[n] * row[n];
            if p >= prob_floor {
                pairs.push((e_m - table.eps0[n], p));
            } else {
                dropped += p;
            }
        }
    }
    let raw_pair_count = pairs.len();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // chain-merge stems within merge_tol, probability-weighted support
    let mut support = Vec::new();
    let mut probs = Vec::new();
    let mut iter = pairs.into_iter();
    if let Some((w0, p0)) = iter.next() {
        let mut w_acc = w0 * p0;
        let mut p_acc = p0;
        let mut w_last = w0;
        for (w, p) in iter {
            if w - w_last <= merge_tol {
                w_acc += w * p;
                p_acc += p;
            } else {
                support.push(w_acc / p_acc);
                probs.push(p_acc);
                w_acc = w * p;
                p_acc = p;
            }
            w_last = w;
        }
        support.push(w_acc / p_acc);
        probs.push(p_acc);
    }

    // renormalize over the kept mass (floor drops and cutoff discards)
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in probs.iter_mut() {
            *p /= total;
        }
    }
    Ok(WorkDistribution {
        support,
        probs,
        merge_tol,
        raw_pair_count,
        dropped_mass: dropped,
        discarded_weight: table.discarded_weight,
    })
}

impl WorkDistribution {
    pub fn normalization_defect(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(w, p)| w * p)
            .sum()
    }

    /// k-th central moment <(W - <W>)^k>.
    pub fn central_moment(&self, k: u32) -> f64 {
        let mean = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(w, p)| (w - mean).powi(k as i32) * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    /// Raw third central moment, units J^3 (the figure-axis convention).
    pub fn skew3(&self) -> f64 {
        self.central_moment(3)
    }

    /// Dimensionless skewness m3 / m2^(3/2); None for degenerate variance.
    pub fn standardized_skewness(&self) -> Option<f64> {
        let v = self.variance();
        if v <= 0.0 {
            None
        } else {
            Some(self.skew3() / v.powf(1.5))
        }
    }

    /// <e^{-beta W}>, accumulated in the log domain.
    pub fn jarzynski_estimator(&self, beta: f64) -> f64 {
        self.log_jarzynski_estimator(beta).exp()
    }

    /// ln <e^{-beta W}>.
    pub fn log_jarzynski_estimator(&self, beta: f64) -> f64 {
        logsumexp(
            self.support
                .iter()
                .zip(&self.probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(w, p)| p.ln() - beta * w)
                .collect::<Vec<_>>()
                .into_iter(),
        )
    }

    /// |<e^{-beta W}> e^{beta dF} - 1|, the Jarzynski residual. Exactly zero
    /// for perfect two-point-measurement statistics under unitary dynamics.
    pub fn jarzynski_residual(&self, beta: f64, delta_f: f64) -> f64 {
        ((self.log_jarzynski_estimator(beta) + beta * delta_f).exp() - 1.0).abs()
    }
}

/// <W> computed along two independent routes: the distribution average and
/// the Heisenberg-picture energy balance Tr(H_f rho_tau) - Tr(H_0 rho_0)
/// evaluated with sparse quadratic forms on the propagated vectors.
pub fn mean_energy_crosscheck(
    table: &TransitionTable,
    prop: &PropagatedSet,
    h_f: &SparseOperator,
) -> (f64, f64) {
    // TPM route
    let dist_mean: f64 = {
        let mut acc = 0.0;
        for m in 0..table.eps_f.len() {
            let row = table.probs.row(m);
            for n in 0..table.retained() {
                acc += table.weights0[n] * row[n] * (table.eps_f[m] - table.eps0[n]);
            }
        }
        let kept: f64 = table.weights0.iter().sum();
        acc / kept
    };
    // unitary route: sum_n p_n (<psi_n|H_f|psi_n> - e_n^0)
    let kept: f64 = prop.weights.iter().sum();
    let dim = prop.dim();
    let mut hre = vec![0.0; dim];
    let mut him = vec![0.0; dim];
    let mut unitary = 0.0;
    for (k, &w) in prop.weights.iter().enumerate() {
        let re: Vec<f64> = prop.re.column(k).to_vec();
        let im: Vec<f64> = prop.im.column(k).to_vec();
        h_f.matvec(&re, &mut hre);
        h_f.matvec(&im, &mut him);
        let expect: f64 = re
            .iter()
            .zip(&hre)
            .chain(im.iter().zip(&him))
            .map(|(a, b)| a * b)
            .sum();
        unitary += w * (expect - table.eps0[k]);
    }
    (dist_mean, unitary / kept)
}
