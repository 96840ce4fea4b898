// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unitary dilation of contractions and triangular beamsplitter meshes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    apply_transform, enumerate_basis, postselect, transition_amplitude, FockState, ModeTransform, PhotonicState,
};

/// Singular values within this distance of 1 count as exactly 1.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-9;

/// Singular values in descending order.
pub fn singular_values(m: &ModeTransform) -> Vec<f64> {
    let mut s: Vec<f64> = m.matrix().clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// A unitary embedding of a contraction.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub unitary: ModeTransform,
    /// Number of vacuum modes appended after the original modes.
    pub extra_modes: usize,
    /// `max |U[..M, ..M] - m|`, nonzero only when singular values within the
    /// rank tolerance of 1 were snapped to 1.
    pub snap_distance: f64,
}

/// Embeds `m` into a unitary with one extra mode per singular value below
/// `1 - DEFAULT_RANK_TOLERANCE`.
pub fn dilate(m: &ModeTransform) -> Result<Dilation> {
    dilate_with_tolerance(m, DEFAULT_RANK_TOLERANCE)
}

/// Like [`dilate`], treating singular values in `[1 - tol, 1 + tol]` as 1.
pub fn dilate_with_tolerance(m: &ModeTransform, tol: f64) -> Result<Dilation> {
    let n = m.mode_count();
    let svd = m.matrix().clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("svd computed with both factors"),
    };
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    if sigma_max > 1.0 + tol {
        return Err(Error::NotAContraction { sigma_max });
    }
    let deficient: Vec<usize> = (0..n).filter(|&i| sigma[i] < 1.0 - tol).collect();
    let k = deficient.len();

    if k == 0 && m.is_unitary(1e-12) {
        return Ok(Dilation {
            unitary: m.clone(),
            extra_modes: 0,
            snap_distance: 0.0,
        });
    }

    let snapped: Vec<f64> = sigma.iter().map(|&s| if s >= 1.0 - tol { 1.0 } else { s }).collect();
    let mut w = DMatrix::<Complex64>::zeros(n + k, n + k);
    let mut top = DMatrix::<Complex64>::zeros(n, n);
    for (i, &s) in snapped.iter().enumerate() {
        let outer = u.column(i) * v_t.row(i) * Complex64::new(s, 0.0);
        top += outer;
    }
    w.view_mut((0, 0), (n, n)).copy_from(&top);
    for (l, &i) in deficient.iter().enumerate() {
        let defect = Complex64::new((1.0 - sigma[i] * sigma[i]).max(0.0).sqrt(), 0.0);
        for r in 0..n {
            w[(r, n + l)] = u[(r, i)] * defect;
            w[(n + l, r)] = defect * v_t[(i, r)];
        }
        w[(n + l, n + l)] = Complex64::new(-sigma[i], 0.0);
    }
    let snap_distance = (top - m.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(Dilation {
        unitary: ModeTransform::new(w)?,
        extra_modes: k,
        snap_distance,
    })
}

/// One optical element of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterferometerElement {
    /// `[[cos θ, -e^{-iφ} sin θ], [e^{iφ} sin θ, cos θ]]` on `(modes[0], modes[1])`.
    Beamsplitter { modes: [usize; 2], theta: f64, phi: f64 },
    /// `e^{i phase}` on a single mode.
    PhaseShifter { mode: usize, phase: f64 },
}

impl InterferometerElement {
    pub fn is_beamsplitter(&self) -> bool {
        matches!(self, Self::Beamsplitter { .. })
    }

    fn max_mode(&self) -> usize {
        match *self {
            Self::Beamsplitter { modes, .. } => modes[0].max(modes[1]),
            Self::PhaseShifter { mode, .. } => mode,
        }
    }

    /// Left-multiplies `w` by this element.
    fn apply_left(&self, w: &mut DMatrix<Complex64>) {
        match *self {
            Self::Beamsplitter {
                modes: [p, q],
                theta,
                phi,
            } => {
                let (s, c) = theta.sin_cos();
                let e = Complex64::from_polar(1.0, phi);
                for col in 0..w.ncols() {
                    let (a, b) = (w[(p, col)], w[(q, col)]);
                    w[(p, col)] = a * c - e.conj() * b * s;
                    w[(q, col)] = e * a * s + b * c;
                }
            }
            Self::PhaseShifter { mode, phase } => {
                let e = Complex64::from_polar(1.0, phase);
                for col in 0..w.ncols() {
                    w[(mode, col)] *= e;
                }
            }
        }
    }
}

/// Elements listed in the order light traverses them, followed by a global
/// phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub mode_count: usize,
    pub elements: Vec<InterferometerElement>,
    pub global_phase: f64,
}

impl Netlist {
    pub fn beamsplitter_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_beamsplitter()).count()
    }
}

/// Factorizes a unitary into `N(N-1)/2` beamsplitters, `N-1` phase shifters
/// and a global phase.
///
/// Column `c = 0..N-1` is cleared below the diagonal from the bottom up,
/// each step mixing rows `(r-1, r)`. The remaining diagonal becomes the
/// phase shifters, which act first; the inverted beamsplitters follow in
/// reverse nulling order.
pub fn reck_decompose(u: &ModeTransform) -> Result<Netlist> {
    let deviation = u.unitarity_deviation();
    if deviation >= 1e-9 {
        return Err(Error::NotUnitary { deviation });
    }
    let n = u.mode_count();
    let mut w = u.matrix().clone();
    let mut nulling = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for c in 0..n.saturating_sub(1) {
        for r in (c + 1..n).rev() {
            let (a, b) = (w[(r - 1, c)], w[(r, c)]);
            let (theta, phi) = if b.norm() == 0.0 {
                (0.0, 0.0)
            } else {
                (b.norm().atan2(a.norm()), b.arg() - a.arg() + PI)
            };
            let bs = InterferometerElement::Beamsplitter {
                modes: [r - 1, r],
                theta,
                phi,
            };
            bs.apply_left(&mut w);
            nulling.push((r - 1, r, theta, phi));
        }
    }
    let global_phase = if n > 0 { w[(0, 0)].arg() } else { 0.0 };
    let mut elements: Vec<InterferometerElement> = (1..n)
        .map(|k| InterferometerElement::PhaseShifter {
            mode: k,
            phase: w[(k, k)].arg() - global_phase,
        })
        .collect();
    elements.extend(
        nulling
            .iter()
            .rev()
            .map(|&(p, q, theta, phi)| InterferometerElement::Beamsplitter {
                modes: [p, q],
                theta: -theta,
                phi,
            }),
    );
    Ok(Netlist {
        mode_count: n,
        elements,
        global_phase,
    })
}

/// Multiplies out a netlist.
pub fn recompose(netlist: &Netlist) -> Result<ModeTransform> {
    let n = netlist.mode_count;
    let mut w = DMatrix::<Complex64>::identity(n, n);
    for e in &netlist.elements {
        if e.max_mode() >= n {
            return Err(Error::InvalidNetlist(format!(
                "element {e:?} addresses a mode outside 0..{n}"
            )));
        }
        if let InterferometerElement::Beamsplitter { modes: [p, q], .. } = *e {
            if p == q {
                return Err(Error::InvalidNetlist(format!("beamsplitter on a single mode {p}")));
            }
        }
        e.apply_left(&mut w);
    }
    let phase = Complex64::from_polar(1.0, netlist.global_phase);
    ModeTransform::new(w.map(|z| z * phase))
}

/// Largest deviation, over all inputs of up to `max_photons` photons on the
/// first `block.mode_count()` modes, between evolving through `unitary` with
/// vacuum in the remaining modes and postselecting vacuum there, and
/// evaluating `block` directly.
pub fn vacuum_postselection_error(block: &ModeTransform, unitary: &ModeTransform, max_photons: usize) -> Result<f64> {
    let n = block.mode_count();
    let total = unitary.mode_count();
    if total < n {
        return Err(Error::Dimension(format!("{total}-mode unitary cannot embed {n} modes")));
    }
    let extra: Vec<usize> = (n..total).collect();
    let vacuum = vec![0; total - n];
    let mut worst: f64 = 0.0;
    for photons in 1..=max_photons {
        let basis = enumerate_basis(n, photons);
        for input in &basis {
            let padded = input.concat(&FockState::vacuum(total - n));
            let evolved = apply_transform(unitary, &PhotonicState::basis(padded))?;
            let kept = postselect(&evolved, &extra, &vacuum)?;
            for output in &basis {
                let direct = transition_amplitude(block, input, output)?;
                worst = worst.max((kept.amplitude(output) - direct).norm());
            }
        }
    }
    Ok(worst)
}

/// Result of taking a matrix to an optical netlist.
#[derive(Clone, Debug)]
pub struct Compilation {
    /// The input was divided by this (1 when already a contraction).
    pub rescale: f64,
    /// Of the input, before rescaling.
    pub singular_values: Vec<f64>,
    pub dilation: Dilation,
    pub netlist: Netlist,
    /// Frobenius norm of `recompose(netlist) - dilation.unitary`.
    pub round_trip_error: f64,
    /// [`vacuum_postselection_error`] of the recomposed circuit against the
    /// embedded block.
    pub postselection_error: f64,
}

/// Rescale if needed, dilate, decompose, and check both steps.
pub fn compile(m: &ModeTransform, rank_tolerance: f64, max_photons: usize) -> Result<Compilation> {
    let singular_values = singular_values(m);
    let top = singular_values.first().copied().unwrap_or(0.0);
    let rescale = if top > 1.0 + rank_tolerance { top } else { 1.0 };
    let contraction = m.scaled(1.0 / rescale);
    let dilation = dilate_with_tolerance(&contraction, rank_tolerance)?;
    let netlist = reck_decompose(&dilation.unitary)?;
    let circuit = recompose(&netlist)?;
    let round_trip_error = (circuit.matrix() - dilation.unitary.matrix()).norm();
    let embedded = dilation.unitary.submatrix(&(0..m.mode_count()).collect::<Vec<_>>())?;
    let postselection_error = vacuum_postselection_error(&embedded, &circuit, max_photons)?;
    Ok(Compilation {
        rescale,
        singular_values,
        dilation,
        netlist,
        round_trip_error,
        postselection_error,
    })
}
