// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Logical bases and the controlled-sign target of the encoding circuit.
//!
//! Gates are defined on mode occupations (a direct sum of single-photon
//! subspaces), never as tensor products of polarization and OAM factors.
//!
//! Full computational mode order:
//!
//! | index | mode    |
//! |-------|---------|
//! | 0     | H_A     |
//! | 1     | V_A     |
//! | 2     | H↺_A1   |
//! | 3     | H↻_A1   |
//! | 4     | V↺_A1   |
//! | 5     | V↻_A1   |
//!
//! Ancilla modes follow the computational modes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::metrics::ContractionMap;

pub const FULL_MODE_LABELS: [&str; 6] = ["H_A", "V_A", "H↺_A1", "H↻_A1", "V↺_A1", "V↻_A1"];

/// The three modes touched by the reduced transformation.
pub const REDUCED_MODE_LABELS: [&str; 3] = ["V_A", "V↻_A1", "V↺_A1"];

const A1_STATES: [&str; 4] = ["H↺", "H↻", "V↺", "V↻"];

/// Ordered logical basis states and their Fock images on the computational
/// modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalBasis {
    pub labels: Vec<String>,
    pub states: Vec<FockState>,
    pub mode_labels: Vec<String>,
}

impl LogicalBasis {
    pub fn new(labels: Vec<String>, states: Vec<FockState>, mode_labels: Vec<String>) -> Result<Self> {
        if labels.len() != states.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} basis states",
                labels.len(),
                states.len()
            )));
        }
        if let Some(s) = states.iter().find(|s| s.mode_count() != mode_labels.len()) {
            return Err(Error::Dimension(format!(
                "basis state {s} does not span {} modes",
                mode_labels.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Dimension(format!("duplicate basis state {s}")));
            }
        }
        Ok(Self {
            labels,
            states,
            mode_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// The 8-state product basis `{H,V}_A x {H↺,H↻,V↺,V↻}_A1` on six modes.
///
/// The six states left invariant by the controlled sign come first, then
/// `V_A⊗V↺_A1` and `V_A⊗V↻_A1`.
pub fn quad_rail_basis() -> LogicalBasis {
    let mut labels = Vec::with_capacity(8);
    let mut states = Vec::with_capacity(8);
    for (pol_index, pol) in ["H", "V"].iter().enumerate() {
        for (k, a1) in A1_STATES.iter().enumerate() {
            labels.push(format!("{pol}_A⊗{a1}_A1"));
            let mut occ = vec![0; 6];
            occ[pol_index] = 1;
            occ[2 + k] = 1;
            states.push(FockState::new(occ));
        }
    }
    LogicalBasis {
        labels,
        states,
        mode_labels: FULL_MODE_LABELS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Occupation sectors of the reduced three-mode problem on
/// `(V_A, V↻_A1, V↺_A1)`: `n1 ∈ {0,1}` photons in `V_A`, and at most one
/// photon among the two `A1` modes.
pub fn reduced_basis() -> LogicalBasis {
    let a1_options: [(&str, [usize; 2]); 3] = [("-", [0, 0]), ("V↻", [1, 0]), ("V↺", [0, 1])];
    let mut labels = Vec::with_capacity(6);
    let mut states = Vec::with_capacity(6);
    for n1 in 0..2 {
        for (name, occ) in a1_options {
            labels.push(format!("n1={n1},A1={name}"));
            states.push(FockState::new(vec![n1, occ[0], occ[1]]));
        }
    }
    LogicalBasis {
        labels,
        states,
        mode_labels: REDUCED_MODE_LABELS.iter().map(|s| s.to_string()).collect(),
    }
}

/// A unitary to be implemented on a logical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGate {
    pub basis: LogicalBasis,
    pub matrix: DMatrix<Complex64>,
}

impl TargetGate {
    pub fn new(basis: LogicalBasis, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "{}x{} target on a {d}-state basis",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = (matrix.adjoint() * &matrix - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation >= 1e-12 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { basis, matrix })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn diagonal(basis: LogicalBasis, phases: impl Fn(&FockState) -> f64) -> Self {
        let diag: Vec<Complex64> = basis.states.iter().map(|s| Complex64::new(phases(s), 0.0)).collect();
        let matrix = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
        Self { basis, matrix }
    }
}

/// Controlled sign on the quad-rail basis: `-1` on `V_A⊗V↺_A1` and
/// `V_A⊗V↻_A1`, `+1` elsewhere.
pub fn target_csign() -> TargetGate {
    TargetGate::diagonal(quad_rail_basis(), |s| {
        let occ = s.occupations();
        if occ[1] == 1 && (occ[4] == 1 || occ[5] == 1) {
            -1.0
        } else {
            1.0
        }
    })
}

/// Reduced controlled sign: phase `(-1)^(n1 * n2)` where `n2` counts the
/// photon in the `A1` vertical modes.
pub fn reduced_csign() -> TargetGate {
    TargetGate::diagonal(reduced_basis(), |s| {
        let occ = s.occupations();
        if occ[0] == 1 && occ[1] + occ[2] == 1 {
            -1.0
        } else {
            1.0
        }
    })
}

/// Complex factors picked up by photons in the spectator modes
/// (`H_A`, `H↺_A1`, `H↻_A1`) that bypass the active device.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorFactors {
    pub h_a: Complex64,
    pub h_ccw_a1: Complex64,
    pub h_cw_a1: Complex64,
}

impl Default for SpectatorFactors {
    fn default() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            h_a: one,
            h_ccw_a1: one,
            h_cw_a1: one,
        }
    }
}

impl SpectatorFactors {
    fn max_modulus(&self) -> f64 {
        self.h_a.norm().max(self.h_ccw_a1.norm()).max(self.h_cw_a1.norm())
    }
}

/// How a full quad-rail basis state splits into a reduced sector plus
/// spectator photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Routing {
    reduced_index: usize,
    // (H_A present, index of the occupied H mode of A1 if any)
    spectators: (bool, Option<usize>),
}

fn route(full_index: usize) -> Routing {
    let pol_a = full_index / 4;
    let a1 = full_index % 4;
    let a1_reduced = match a1 {
        3 => 1, // V↻
        2 => 2, // V↺
        _ => 0,
    };
    Routing {
        reduced_index: pol_a * 3 + a1_reduced,
        spectators: (pol_a == 0, (a1 < 2).then_some(a1)),
    }
}

fn spectator_factor(spectators: (bool, Option<usize>), f: &SpectatorFactors) -> Complex64 {
    let mut z = if spectators.0 { f.h_a } else { Complex64::new(1.0, 0.0) };
    match spectators.1 {
        Some(0) => z *= f.h_ccw_a1,
        Some(1) => z *= f.h_cw_a1,
        _ => {}
    }
    z
}

fn spectator_count(spectators: (bool, Option<usize>)) -> usize {
    usize::from(spectators.0) + usize::from(spectators.1.is_some())
}

/// Extends a contraction map on the reduced basis to the 8-state quad-rail
/// basis. Spectator photons pass the device untouched apart from their
/// `factors`; reduced transitions that would change the spectator content
/// leave the logical subspace and are dropped.
pub fn lift_reduced_to_full(reduced: &ContractionMap, factors: &SpectatorFactors) -> Result<ContractionMap> {
    if reduced.basis.dim() != 6 || reduced.matrix.nrows() != 6 || reduced.matrix.ncols() != 6 {
        return Err(Error::Dimension(format!(
            "reduced map must be 6x6 on the reduced basis, got {}x{}",
            reduced.matrix.nrows(),
            reduced.matrix.ncols()
        )));
    }
    let basis = quad_rail_basis();
    let matrix = DMatrix::from_fn(8, 8, |j, i| {
        let (rj, ri) = (route(j), route(i));
        if rj.spectators != ri.spectators {
            return Complex64::new(0.0, 0.0);
        }
        reduced.matrix[(rj.reduced_index, ri.reduced_index)] * spectator_factor(ri.spectators, factors)
    });
    let photon_numbers = (0..8)
        .map(|i| {
            let r = route(i);
            reduced.photon_numbers[r.reduced_index] + spectator_count(r.spectators)
        })
        .collect();
    Ok(ContractionMap {
        basis,
        matrix,
        photon_numbers,
        scale: reduced.scale.max(factors.max_modulus()),
    })
}

/// Inverse of [`lift_reduced_to_full`] on maps that act trivially outside
/// the active sector. Each reduced column is read from a representative full
/// basis state (`H↺_A1` for the "no A1 vertical photon" sectors).
pub fn restrict_full_to_reduced(full: &ContractionMap, factors: &SpectatorFactors) -> Result<ContractionMap> {
    if full.matrix.nrows() != 8 || full.matrix.ncols() != 8 {
        return Err(Error::Dimension(format!(
            "full map must be 8x8, got {}x{}",
            full.matrix.nrows(),
            full.matrix.ncols()
        )));
    }
    // reduced index -> representative full index
    let representative = [0usize, 3, 2, 4, 7, 6];
    let basis = reduced_basis();
    let matrix = DMatrix::from_fn(6, 6, |rj, ri| {
        let (j, i) = (representative[rj], representative[ri]);
        let (routing_j, routing_i) = (route(j), route(i));
        if routing_j.spectators != routing_i.spectators {
            return Complex64::new(0.0, 0.0);
        }
        full.matrix[(j, i)] / spectator_factor(routing_i.spectators, factors)
    });
    let photon_numbers = representative
        .iter()
        .map(|&i| full.photon_numbers[i] - spectator_count(route(i).spectators))
        .collect();
    Ok(ContractionMap {
        basis,
        matrix,
        photon_numbers,
        scale: full.scale,
    })
}
