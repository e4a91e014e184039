//! Occupation-number basis of a fixed (L, N_up, N_down) fermion sector.
//!
//! Sites are indexed 0..L-1 internally; the 1-based site index j of the
//! drive potential maps to internal j-1. Basis kets are ordered products of
//! creation operators, site-ascending within each spin species and with all
//! spin-up operators to the left of all spin-down operators:
//!
//! ```text
//! |s> = c†_{j1,up} ... c†_{jk,up} c†_{i1,dn} ... c†_{im,dn} |0>,  j1 < j2 < ...
//! ```
//!
//! With this ordering the cross-species anticommutation strings cancel for
//! every particle-number-conserving same-species operator, so hopping signs
//! are determined by the same-species occupations strictly between the two
//! sites alone.

use crate::error::{CoreError, Result};
use std::collections::HashMap;

/// Largest chain length the bit representation supports.
pub const MAX_SITES: usize = 14;

/// Default cap on the sector dimension (the L = 8 half-filled sector).
pub const DEFAULT_DIM_CAP: usize = 4900;

/// Occupation pattern of one spin species: bit j set means site j occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinOccupation(pub u32);

impl SpinOccupation {
    #[inline]
    pub fn occupied(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Particles on sites strictly between `a` and `b` (order-insensitive).
    #[inline]
    pub fn count_between(self, a: usize, b: usize) -> u32 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mask = ((1u32 << hi) - 1) & !((1u32 << (lo + 1)) - 1);
        (self.0 & mask).count_ones()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Up,
    Down,
}

/// Hop direction along the chain: `Right` moves a particle from site j to
/// j+1 (applies c†_{j+1} c_j), `Left` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopDirection {
    Left,
    Right,
}

/// One many-body basis ket, lexicographically ordered by (up, down) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub up: SpinOccupation,
    pub down: SpinOccupation,
}

impl BasisState {
    #[inline]
    pub fn occupation(&self, spin: Spin) -> SpinOccupation {
        match spin {
            Spin::Up => self.up,
            Spin::Down => self.down,
        }
    }

    /// Total charge on `site` (0, 1 or 2).
    #[inline]
    pub fn charge(&self, site: usize) -> u32 {
        self.up.occupied(site) as u32 + self.down.occupied(site) as u32
    }
}

/// Enumerated symmetry sector with index lookup.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub l: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub states: Vec<BasisState>,
    index_of: HashMap<BasisState, usize>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index_of.get(state).copied()
    }

    pub fn state(&self, idx: usize) -> BasisState {
        self.states[idx]
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Enumerate every occupation pattern of `n` particles on `l` sites in
/// ascending bit order.
fn patterns(l: usize, n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(l, n));
    if n == 0 {
        out.push(0);
        return out;
    }
    if n > l {
        return out;
    }
    // Gosper's hack: next integer with the same popcount.
    let mut v: u32 = (1 << n) - 1;
    let limit: u32 = 1 << l;
    while v < limit {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Enumerate the (L, n_up, n_down) sector in deterministic lexicographic
/// order on (up, down) bit patterns, guarding against dimension blow-up.
pub fn enumerate_sector(l: usize, n_up: usize, n_down: usize) -> Result<SectorBasis> {
    enumerate_sector_capped(l, n_up, n_down, DEFAULT_DIM_CAP)
}

pub fn enumerate_sector_capped(
    l: usize,
    n_up: usize,
    n_down: usize,
    cap: usize,
) -> Result<SectorBasis> {
    if l == 0 || l > MAX_SITES {
        return Err(CoreError::InvalidParameter(format!(
            "site count {l} outside 1..={MAX_SITES}"
        )));
    }
    if n_up > l || n_down > l {
        return Err(CoreError::InvalidParameter(format!(
            "particle numbers ({n_up}, {n_down}) exceed {l} sites"
        )));
    }
    let dim = binomial(l, n_up) * binomial(l, n_down);
    if dim > cap {
        return Err(CoreError::DimensionCap { dim, cap });
    }
    let ups = patterns(l, n_up);
    let downs = patterns(l, n_down);
    let mut states = Vec::with_capacity(dim);
    for &u in &ups {
        for &d in &downs {
            states.push(BasisState {
                up: SpinOccupation(u),
                down: SpinOccupation(d),
            });
        }
    }
    let index_of = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(SectorBasis {
        l,
        n_up,
        n_down,
        states,
        index_of,
    })
}

/// Half-filled, S_z = 0 sector (n_up = n_down = L/2). Requires L even.
pub fn half_filled_sector(l: usize) -> Result<SectorBasis> {
    if l % 2 != 0 {
        return Err(CoreError::InvalidParameter(format!(
            "half filling with S_z = 0 requires even L, got {l}"
        )));
    }
    enumerate_sector(l, l / 2, l / 2)
}

/// Apply the same-species transfer c†_to c_from to one spin species.
///
/// Returns the new state and the fermionic sign from the operator ordering,
/// or `None` when the operator annihilates the ket (source empty or target
/// occupied). The sign is (-1)^(occupied sites strictly between); the
/// cross-species string cancels by the ordering convention.
pub fn apply_transfer(
    state: &BasisState,
    from: usize,
    to: usize,
    spin: Spin,
) -> Option<(BasisState, i32)> {
    let occ = state.occupation(spin);
    if !occ.occupied(from) || occ.occupied(to) || from == to {
        return None;
    }
    let sign = if occ.count_between(from, to) % 2 == 0 {
        1
    } else {
        -1
    };
    let new_bits = SpinOccupation(occ.0 ^ (1 << from) ^ (1 << to));
    let new_state = match spin {
        Spin::Up => BasisState {
            up: new_bits,
            down: state.down,
        },
        Spin::Down => BasisState {
            up: state.up,
            down: new_bits,
        },
    };
    Some((new_state, sign))
}

/// Nearest-neighbour hop across the open-boundary bond (j, j+1).
///
/// `Right` applies c†_{j+1,s} c_{j,s}; `Left` applies c†_{j,s} c_{j+1,s}.
/// Returns `None` (vacuum) when Pauli exclusion kills the hop. For nearest
/// neighbours the anticommutation string is empty, so the sign is always +1;
/// it is still computed through the general transfer for safety.
pub fn apply_hop(
    state: &BasisState,
    bond: usize,
    spin: Spin,
    direction: HopDirection,
) -> Option<(BasisState, i32)> {
    let (from, to) = match direction {
        HopDirection::Right => (bond, bond + 1),
        HopDirection::Left => (bond + 1, bond),
    };
    apply_transfer(state, from, to, spin)
}

/// 1 if site j holds both a spin-up and a spin-down particle, else 0.
#[inline]
pub fn double_occupancy(state: &BasisState, site: usize) -> u32 {
    (state.up.occupied(site) && state.down.occupied(site)) as u32
}
