//! Driven Hubbard chain: static operator, drive operator, and H(t).
//!
//! ```text
//! H(t) = -J sum_{j,s} (c†_{j,s} c_{j+1,s} + h.c.) + U sum_j n_{j,up} n_{j,dn}
//!        + (t/tau) sum_j Delta_j (n_{j,up} + n_{j,dn}),   Delta_j = A j / (L-1)
//! ```
//!
//! with open boundaries and the 1-based site index j = 1..L in Delta_j. The
//! drive couples to the total site charge, and the linear ramp keeps the
//! final Hamiltonian H_f = H_static + H_drive independent of tau. The raw
//! Delta_j offset (no re-centering) is kept deliberately: a constant shift
//! per particle moves the mean work but none of the higher central moments.

use crate::basis::{apply_hop, double_occupancy, HopDirection, SectorBasis, Spin};
use crate::error::{CoreError, Result};
use crate::sparse::{SparseOperator, TripletBuilder};
use serde::{Deserialize, Serialize};

/// Physical parameters of one run. Energies are multiples of the hopping
/// scale `j` (leave `j = 1` to work in reduced units), times multiples of
/// 1/J, `beta` a multiple of 1/J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    /// chain length
    pub l: usize,
    /// hopping energy, the global energy unit
    pub j: f64,
    /// on-site repulsion U
    pub u: f64,
    /// drive amplitude A: total potential drop across the chain at t = tau
    pub a: f64,
    /// inverse temperature of the initial Gibbs state
    pub beta: f64,
    /// driving time; 0 is the exact sudden quench
    pub tau: f64,
}

impl Default for HubbardParams {
    fn default() -> Self {
        // k_B T = 2.5 J  <=>  beta = 0.4 / J
        Self {
            l: 4,
            j: 1.0,
            u: 0.0,
            a: 10.0,
            beta: 0.4,
            tau: 1.0,
        }
    }
}

impl HubbardParams {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "need at least 2 sites, got {}",
                self.l
            )));
        }
        if !(self.j > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "hopping must be positive, got {}",
                self.j
            )));
        }
        if self.u < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "repulsive U required, got {}",
                self.u
            )));
        }
        if !(self.beta > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.tau < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "tau must be non-negative, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Site potential Delta_j at full drive, internal 0-based site index.
    pub fn delta(&self, site: usize) -> f64 {
        self.a * self.j * (site + 1) as f64 / (self.l - 1) as f64
    }
}

/// Hopping + interaction part, H(0).
pub fn build_static(basis: &SectorBasis, params: &HubbardParams) -> Result<SparseOperator> {
    params.validate()?;
    if basis.l != params.l {
        return Err(CoreError::DimensionMismatch(format!(
            "basis is for L={}, params ask L={}",
            basis.l, params.l
        )));
    }
    let mut b = TripletBuilder::new(basis.dim());
    let hop = -params.j;
    for (source, state) in basis.states.iter().enumerate() {
        // interaction: U per doubly occupied site
        let docc: u32 = (0..basis.l).map(|s| double_occupancy(state, s)).sum();
        if docc > 0 {
            b.add(source, source, params.u * params.j * docc as f64);
        }
        // hopping: both spins, both directions over every bond
        for bond in 0..basis.l - 1 {
            for spin in [Spin::Up, Spin::Down] {
                for dir in [HopDirection::Left, HopDirection::Right] {
                    if let Some((hopped, sign)) = apply_hop(state, bond, spin, dir) {
                        let target = basis
                            .index_of(&hopped)
                            .expect("hop left the symmetry sector");
                        // <hopped| H |state>
                        b.add(target, source, hop * sign as f64);
                    }
                }
            }
        }
    }
    let h = b.build();
    debug_assert!(h.symmetry_defect() == 0.0);
    Ok(h)
}

/// Diagonal drive operator D with D[s,s] = sum_j Delta_j (n_up + n_dn)(j).
/// H(t) = H_static + (t/tau) D.
pub fn build_drive(basis: &SectorBasis, params: &HubbardParams) -> Result<SparseOperator> {
    params.validate()?;
    if basis.l != params.l {
        return Err(CoreError::DimensionMismatch(format!(
            "basis is for L={}, params ask L={}",
            basis.l, params.l
        )));
    }
    let d: Vec<f64> = basis
        .states
        .iter()
        .map(|s| {
            (0..basis.l)
                .map(|site| params.delta(site) * s.charge(site) as f64)
                .sum()
        })
        .collect();
    Ok(SparseOperator::from_diagonal(&d))
}

/// H(t) = H_static + (t/tau) H_drive as an assembled operator.
///
/// For tau = 0 (sudden quench) only the endpoints are meaningful: pass
/// t = 0 for the initial operator or use [`final_hamiltonian`] for H_f,
/// which is independent of tau by construction.
pub fn hamiltonian_at(
    t: f64,
    params: &HubbardParams,
    h_static: &SparseOperator,
    h_drive: &SparseOperator,
) -> Result<SparseOperator> {
    let lambda = ramp_fraction(t, params.tau)?;
    Ok(h_static.with_added_diagonal(&h_drive.diagonal(), lambda))
}

/// H_f = H_static + H_drive, the tau-independent endpoint.
pub fn final_hamiltonian(h_static: &SparseOperator, h_drive: &SparseOperator) -> SparseOperator {
    h_static.with_added_diagonal(&h_drive.diagonal(), 1.0)
}

/// Ramp coefficient t/tau with domain checks; tau = 0 maps t = 0 to the
/// final value 1.0 only at t = 0 when explicitly requested via t = 0 -> 0.
pub fn ramp_fraction(t: f64, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return if t == 0.0 {
            Ok(0.0)
        } else {
            Err(CoreError::TimeOutOfRange { t, tau })
        };
    }
    if t < 0.0 || t > tau {
        return Err(CoreError::TimeOutOfRange { t, tau });
    }
    Ok(t / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::half_filled_sector;
    use crate::spectral::decompose;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dimer_free_spectrum() {
        let basis = half_filled_sector(2).unwrap();
        let params = HubbardParams {
            l: 2,
            u: 0.0,
            ..Default::default()
        };
        let h = build_static(&basis, &params).unwrap();
        let spec = decompose(&h).unwrap();
        let want = [-2.0, 0.0, 0.0, 2.0];
        for (e, w) in spec.eigenvalues.iter().zip(want) {
            assert!(close(*e, w, 1e-12), "got {e}, want {w}");
        }
    }

    #[test]
    fn dimer_interacting_spectrum() {
        // singlet/triplet dimer: {0, U, (U +- sqrt(U^2 + 16 J^2))/2}
        for u in [1.0, 5.0, 10.0] {
            let basis = half_filled_sector(2).unwrap();
            let params = HubbardParams {
                l: 2,
                u,
                ..Default::default()
            };
            let h = build_static(&basis, &params).unwrap();
            let spec = decompose(&h).unwrap();
            let root = (u * u + 16.0).sqrt();
            let mut want = [0.0, u, 0.5 * (u - root), 0.5 * (u + root)];
            want.sort_by(f64::total_cmp);
            for (e, w) in spec.eigenvalues.iter().zip(want) {
                assert!(close(*e, w, 1e-10), "U={u}: got {e}, want {w}");
            }
        }
    }

    /// U = 0 many-body spectrum is every way of filling the open-chain
    /// single-particle levels -2J cos(k pi / (L+1)) per spin species.
    #[test]
    fn free_spectrum_from_single_particle_levels() {
        let l = 4;
        let basis = half_filled_sector(l).unwrap();
        let params = HubbardParams {
            l,
            u: 0.0,
            ..Default::default()
        };
        let h = build_static(&basis, &params).unwrap();
        let spec = decompose(&h).unwrap();

        let levels: Vec<f64> = (1..=l)
            .map(|k| -2.0 * (k as f64 * std::f64::consts::PI / (l as f64 + 1.0)).cos())
            .collect();
        // all ways of choosing 2 of 4 levels per species
        let mut sums = Vec::new();
        let choices: Vec<(usize, usize)> = (0..l)
            .flat_map(|i| ((i + 1)..l).map(move |j| (i, j)))
            .collect();
        for up in &choices {
            for dn in &choices {
                sums.push(levels[up.0] + levels[up.1] + levels[dn.0] + levels[dn.1]);
            }
        }
        sums.sort_by(f64::total_cmp);
        assert_eq!(sums.len(), spec.eigenvalues.len());
        for (e, w) in spec.eigenvalues.iter().zip(sums) {
            assert!(close(*e, w, 1e-9), "got {e}, want {w}");
        }
    }

    #[test]
    fn assembled_operators_are_symmetric() {
        for l in [2, 4, 6] {
            let basis = half_filled_sector(l).unwrap();
            let params = HubbardParams {
                l,
                u: 3.0,
                ..Default::default()
            };
            let h = build_static(&basis, &params).unwrap();
            assert_eq!(h.symmetry_defect(), 0.0);
            let d = build_drive(&basis, &params).unwrap();
            assert_eq!(d.symmetry_defect(), 0.0);
        }
    }

    #[test]
    fn drive_potential_drop_is_a() {
        for l in [2, 4, 7, 8] {
            let params = HubbardParams {
                l,
                ..Default::default()
            };
            assert!(close(
                params.delta(l - 1) - params.delta(0),
                params.a,
                1e-12
            ));
        }
        // L=4: Delta = (10/3) J {1,2,3,4}
        let params = HubbardParams {
            l: 4,
            ..Default::default()
        };
        for (j, want) in [(0, 10.0 / 3.0), (1, 20.0 / 3.0), (2, 10.0), (3, 40.0 / 3.0)] {
            assert!(close(params.delta(j), want, 1e-12));
        }
    }

    #[test]
    fn ramp_endpoints_and_linearity() {
        let basis = half_filled_sector(4).unwrap();
        let params = HubbardParams {
            l: 4,
            u: 2.0,
            tau: 3.0,
            ..Default::default()
        };
        let hs = build_static(&basis, &params).unwrap();
        let hd = build_drive(&basis, &params).unwrap();

        // t = 0 is the static operator
        let h0 = hamiltonian_at(0.0, &params, &hs, &hd).unwrap();
        let d0 = &h0.to_dense() - &hs.to_dense();
        assert!(d0.iter().all(|x| x.abs() == 0.0));

        // t = tau equals H_f regardless of tau
        let hf = hamiltonian_at(params.tau, &params, &hs, &hd).unwrap();
        let params2 = HubbardParams {
            tau: 0.7,
            ..params
        };
        let hf2 = hamiltonian_at(params2.tau, &params2, &hs, &hd).unwrap();
        let diff = &hf.to_dense() - &hf2.to_dense();
        assert!(diff.iter().all(|x| *x == 0.0), "H_f depends on tau");

        // midpoint has exactly half the drive (up to the rounding of the
        // diagonal sum)
        let mid = hamiltonian_at(1.5, &params, &hs, &hd).unwrap();
        let lin = &mid.to_dense() - &hs.to_dense() - &(hd.to_dense() * 0.5);
        assert!(lin.iter().all(|x| x.abs() < 1e-13));

        // out-of-range time is rejected
        assert!(hamiltonian_at(3.1, &params, &hs, &hd).is_err());
        assert!(hamiltonian_at(-0.1, &params, &hs, &hd).is_err());
    }

    #[test]
    fn null_drive_means_static_evolution() {
        let basis = half_filled_sector(2).unwrap();
        let params = HubbardParams {
            l: 2,
            a: 0.0,
            tau: 2.0,
            ..Default::default()
        };
        let hs = build_static(&basis, &params).unwrap();
        let hd = build_drive(&basis, &params).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let h = hamiltonian_at(t, &params, &hs, &hd).unwrap();
            let diff = &h.to_dense() - &hs.to_dense();
            assert!(diff.iter().all(|x| *x == 0.0));
        }
    }

    /// Shifting the drive by a constant c per particle shifts every
    /// eigenvalue by c N, protecting the Delta_j offset convention.
    #[test]
    fn diagonal_shift_moves_spectrum_rigidly() {
        let l = 4;
        let n_particles = 4.0;
        let basis = half_filled_sector(l).unwrap();
        let params = HubbardParams {
            l,
            u: 2.5,
            ..Default::default()
        };
        let hs = build_static(&basis, &params).unwrap();
        let hd = build_drive(&basis, &params).unwrap();
        let hf = final_hamiltonian(&hs, &hd);
        let spec = decompose(&hf).unwrap();

        let c = 1.75;
        let shift = vec![c * n_particles; basis.dim()];
        let shifted = decompose(&hf.with_added_diagonal(&shift, 1.0)).unwrap();
        for (a, b) in spec.eigenvalues.iter().zip(&shifted.eigenvalues) {
            assert!(close(a + c * n_particles, *b, 1e-9));
        }
    }
}
