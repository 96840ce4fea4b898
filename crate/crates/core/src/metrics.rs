// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Heralded contraction maps and their fidelity and success probability.
//!
//! For a logical basis `{|i>}` with Fock images `f(i)` on the computational
//! modes and a measurement scheme injecting `a_in` ancilla photons and
//! heralding on `a_out`, the contraction map is
//!
//! `A[j, i] = <f(j) ⊕ a_out| U(T) |f(i) ⊕ a_in>`.
//!
//! Metrics are computed after rescaling `T` to unit largest singular value,
//! so an entry with `n` photons is divided by `sigma_max^n`:
//!
//! * fidelity `F = |tr(Ω^dag Ã)|^2 / (d tr(Ã^dag Ã))`
//! * success probability `P = tr(Ã^dag Ã) / d`

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilation::singular_values;
use crate::error::{Error, Result};
use crate::fock::{FockState, ModeTransform, MAX_PHOTONS};
use crate::permanent::{permanent_row_major, permanent_with_gradient};
use crate::targets::{LogicalBasis, TargetGate};

/// Success probability of combining two of Knill's two-ancilla
/// controlled-sign gates, one per OAM value: `(2/27)^2`.
pub const KNILL_COMBINATION_PROBABILITY: f64 = (2.0 / 27.0) * (2.0 / 27.0);

/// Ancilla preparation and heralding pattern of a measurement-assisted gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementScheme {
    pub ancilla_modes: Vec<usize>,
    pub ancilla_input: Vec<usize>,
    pub herald_pattern: Vec<usize>,
}

impl MeasurementScheme {
    pub fn new(ancilla_modes: Vec<usize>, ancilla_input: Vec<usize>, herald_pattern: Vec<usize>) -> Result<Self> {
        let scheme = Self {
            ancilla_modes,
            ancilla_input,
            herald_pattern,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// One photon injected into and heralded in each of three ancilla modes
    /// placed after `computational_modes`.
    pub fn three_single_photons(computational_modes: usize) -> Self {
        Self {
            ancilla_modes: (computational_modes..computational_modes + 3).collect(),
            ancilla_input: vec![1, 1, 1],
            herald_pattern: vec![1, 1, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.ancilla_modes.len();
        if self.ancilla_input.len() != k || self.herald_pattern.len() != k {
            return Err(Error::Dimension(format!(
                "{k} ancilla modes with input pattern of length {} and herald of length {}",
                self.ancilla_input.len(),
                self.herald_pattern.len()
            )));
        }
        for (i, m) in self.ancilla_modes.iter().enumerate() {
            if self.ancilla_modes[..i].contains(m) {
                return Err(Error::Dimension(format!("ancilla mode {m} listed twice")));
            }
        }
        Ok(())
    }

    pub fn input_photons(&self) -> usize {
        self.ancilla_input.iter().sum()
    }

    /// Places computational occupations on the non-ancilla modes (in order)
    /// and `ancilla` on the ancilla modes.
    fn embed(&self, computational: &FockState, ancilla: &[usize], mode_count: usize) -> FockState {
        let mut occ = vec![0; mode_count];
        let mut comp = computational.occupations().iter();
        for (mode, slot) in occ.iter_mut().enumerate() {
            if let Some(k) = self.ancilla_modes.iter().position(|&a| a == mode) {
                *slot = ancilla[k];
            } else if let Some(&n) = comp.next() {
                *slot = n;
            }
        }
        FockState::new(occ)
    }
}

/// The heralded (non-unitary) operator a gate realizes on its logical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionMap {
    pub basis: LogicalBasis,
    pub matrix: DMatrix<Complex64>,
    /// Total photon number (computational plus ancilla) for each basis state.
    pub photon_numbers: Vec<usize>,
    /// Largest singular value of the parent mode transform; metrics divide
    /// `n`-photon entries by `scale^n`.
    pub scale: f64,
}

impl ContractionMap {
    /// A map with no physical rescaling attached.
    pub fn unscaled(basis: LogicalBasis, matrix: DMatrix<Complex64>) -> Self {
        let photon_numbers = basis.states.iter().map(|s| s.photon_count()).collect();
        Self {
            basis,
            matrix,
            photon_numbers,
            scale: 1.0,
        }
    }

    /// The matrix after dividing by `scale^n` entrywise.
    pub fn rescaled_matrix(&self) -> DMatrix<Complex64> {
        if self.scale == 1.0 {
            return self.matrix.clone();
        }
        DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |j, i| {
            self.matrix[(j, i)] / self.scale.powi(self.photon_numbers[i] as i32)
        })
    }

    pub fn scaled_by(&self, factor: Complex64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * factor),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub fidelity: f64,
    pub success_probability: f64,
}

/// The heralded map of `t` on `basis` under `scheme`.
pub fn contraction_map(t: &ModeTransform, basis: &LogicalBasis, scheme: &MeasurementScheme) -> Result<ContractionMap> {
    let plan = ContractionPlan::new(t.mode_count(), basis, scheme)?;
    let matrix = plan.evaluate(t.matrix());
    let scale = singular_values(t).first().copied().unwrap_or(1.0);
    Ok(ContractionMap {
        basis: basis.clone(),
        matrix,
        photon_numbers: plan.photon_numbers.clone(),
        scale,
    })
}

/// Fidelity and success probability of `a` against `target`.
pub fn metrics(a: &ContractionMap, target: &TargetGate) -> Result<GateMetrics> {
    let d = target.dim();
    if a.matrix.nrows() != d || a.matrix.ncols() != d {
        return Err(Error::Dimension(format!(
            "{}x{} contraction map against a {d}-dimensional target",
            a.matrix.nrows(),
            a.matrix.ncols()
        )));
    }
    Ok(raw_metrics(&a.rescaled_matrix(), &target.matrix))
}

/// Metrics of a matrix taken as is, without rescaling.
pub(crate) fn raw_metrics(a: &DMatrix<Complex64>, target: &DMatrix<Complex64>) -> GateMetrics {
    let d = target.nrows() as f64;
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return GateMetrics {
            fidelity: 0.0,
            success_probability: 0.0,
        };
    }
    let overlap: Complex64 = target.iter().zip(a.iter()).map(|(w, z)| w.conj() * z).sum();
    GateMetrics {
        fidelity: (overlap.norm_sqr() / (d * norm)).min(1.0),
        success_probability: norm / d,
    }
}

/// One nonzero entry of a contraction map: `A[out, inp]` is the permanent of
/// `T[rows | cols]` times `weight`.
#[derive(Clone, Debug)]
struct PlanEntry {
    out: usize,
    inp: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    weight: f64,
}

/// Precomputed index structure for evaluating a contraction map, and its
/// derivatives, for many matrices of the same shape.
#[derive(Clone, Debug)]
pub struct ContractionPlan {
    mode_count: usize,
    dim: usize,
    entries: Vec<PlanEntry>,
    photon_numbers: Vec<usize>,
}

impl ContractionPlan {
    pub fn new(mode_count: usize, basis: &LogicalBasis, scheme: &MeasurementScheme) -> Result<Self> {
        scheme.validate()?;
        let ancillas = scheme.ancilla_modes.len();
        if basis.mode_count() + ancillas != mode_count {
            return Err(Error::Dimension(format!(
                "{} computational + {ancillas} ancilla modes for a {mode_count}-mode transform",
                basis.mode_count()
            )));
        }
        if let Some(&bad) = scheme.ancilla_modes.iter().find(|&&a| a >= mode_count) {
            return Err(Error::Dimension(format!("ancilla mode {bad} out of range")));
        }
        let inputs: Vec<FockState> = basis
            .states
            .iter()
            .map(|s| scheme.embed(s, &scheme.ancilla_input, mode_count))
            .collect();
        let outputs: Vec<FockState> = basis
            .states
            .iter()
            .map(|s| scheme.embed(s, &scheme.herald_pattern, mode_count))
            .collect();
        let photon_numbers: Vec<usize> = inputs.iter().map(|s| s.photon_count()).collect();
        if let Some(&n) = photon_numbers.iter().find(|&&n| n > MAX_PHOTONS) {
            return Err(Error::TooManyPhotons {
                photons: n,
                max: MAX_PHOTONS,
            });
        }
        let mut entries = Vec::new();
        for (inp, input) in inputs.iter().enumerate() {
            for (out, output) in outputs.iter().enumerate() {
                if input.photon_count() != output.photon_count() {
                    continue;
                }
                entries.push(PlanEntry {
                    out,
                    inp,
                    rows: output.mode_indices(),
                    cols: input.mode_indices(),
                    weight: 1.0 / (input.factorial_product() * output.factorial_product()).sqrt(),
                });
            }
        }
        Ok(Self {
            mode_count,
            dim: basis.dim(),
            entries,
            photon_numbers,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn photon_numbers(&self) -> &[usize] {
        &self.photon_numbers
    }

    /// `(out, inp)` positions of the structurally nonzero entries, in the
    /// order used by [`Jacobian::entry_derivatives`].
    pub fn nonzero_entries(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.out, e.inp)).collect()
    }

    fn gather(entry: &PlanEntry, m: &DMatrix<Complex64>, buf: &mut Vec<Complex64>) {
        buf.clear();
        for &r in &entry.rows {
            for &c in &entry.cols {
                buf.push(m[(r, c)]);
            }
        }
    }

    /// The contraction map of `m` (no rescaling).
    pub fn evaluate(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        debug_assert_eq!(m.nrows(), self.mode_count);
        let mut a = DMatrix::zeros(self.dim, self.dim);
        let mut buf = Vec::new();
        for e in &self.entries {
            Self::gather(e, m, &mut buf);
            a[(e.out, e.inp)] = permanent_row_major(e.rows.len(), &buf) * e.weight;
        }
        a
    }

    /// The contraction map of `m` together with its Jacobian.
    pub fn evaluate_with_jacobian(&self, m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Jacobian<'_>) {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        let mut buf = Vec::new();
        let mut grads = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            Self::gather(e, m, &mut buf);
            let n = e.rows.len();
            let mut g = vec![Complex64::new(0.0, 0.0); n * n];
            a[(e.out, e.inp)] = permanent_with_gradient(n, &buf, &mut g) * e.weight;
            g.iter_mut().for_each(|z| *z *= e.weight);
            grads.push(g);
        }
        (a, Jacobian { plan: self, grads })
    }
}

/// Derivatives `dA[out, inp] / dT[r, c]` of a contraction map.
pub struct Jacobian<'a> {
    plan: &'a ContractionPlan,
    grads: Vec<Vec<Complex64>>,
}

impl Jacobian<'_> {
    /// Real gradient of a real function `f(A)` with respect to the transform.
    ///
    /// `adjoint[j, i]` must hold the Wirtinger derivative `df / d conj(A[j, i])`.
    /// Entry `(r, c)` of the result packs `df/d Re T[r,c] + i df/d Im T[r,c]`.
    pub fn pullback(&self, adjoint: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let m = self.plan.mode_count;
        let mut out = DMatrix::zeros(m, m);
        for (e, g) in self.plan.entries.iter().zip(&self.grads) {
            let adj = adjoint[(e.out, e.inp)];
            if adj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let n = e.cols.len();
            for (ri, &r) in e.rows.iter().enumerate() {
                for (ci, &c) in e.cols.iter().enumerate() {
                    out[(r, c)] += 2.0 * adj * g[ri * n + ci].conj();
                }
            }
        }
        out
    }

    /// Holomorphic derivatives `dA[out, inp] / dT` of every structurally
    /// nonzero entry, as dense matrices.
    pub fn entry_derivatives(&self) -> Vec<((usize, usize), DMatrix<Complex64>)> {
        let m = self.plan.mode_count;
        self.plan
            .entries
            .iter()
            .zip(&self.grads)
            .map(|(e, g)| {
                let mut d = DMatrix::zeros(m, m);
                let n = e.cols.len();
                for (ri, &r) in e.rows.iter().enumerate() {
                    for (ci, &c) in e.cols.iter().enumerate() {
                        d[(r, c)] += g[ri * n + ci];
                    }
                }
                ((e.out, e.inp), d)
            })
            .collect()
    }
}

/// Wirtinger adjoints `df/d conj(A)` of the raw fidelity and success
/// probability, with their values.
pub(crate) fn metric_adjoints(
    a: &DMatrix<Complex64>,
    target: &DMatrix<Complex64>,
) -> (GateMetrics, DMatrix<Complex64>, DMatrix<Complex64>) {
    let d = target.nrows() as f64;
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let overlap: Complex64 = target.iter().zip(a.iter()).map(|(w, z)| w.conj() * z).sum();
    let prob_adj = a.map(|z| z / d);
    if norm == 0.0 {
        let zero = DMatrix::zeros(a.nrows(), a.ncols());
        return (
            GateMetrics {
                fidelity: 0.0,
                success_probability: 0.0,
            },
            zero.clone(),
            zero,
        );
    }
    let s2 = overlap.norm_sqr();
    let fid_adj = DMatrix::from_fn(a.nrows(), a.ncols(), |j, i| {
        (overlap * target[(j, i)] * norm - a[(j, i)] * s2) / (d * norm * norm)
    });
    (
        GateMetrics {
            fidelity: s2 / (d * norm),
            success_probability: norm / d,
        },
        fid_adj,
        prob_adj,
    )
}
