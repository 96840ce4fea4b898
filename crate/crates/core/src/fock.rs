// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Multi-photon Fock-space simulation of linear-optical mode transformations.
//!
//! A mode transformation `T` maps creation operators as
//! `a_j^dag -> sum_i T[i, j] a_i^dag`. The amplitude between Fock states
//! `|s>` and `|t>` with equal photon number is
//!
//! `perm(T[t|s]) / sqrt(prod s_j! * prod t_i!)`
//!
//! where `T[t|s]` repeats column `j` of `T` `s_j` times and row `i` `t_i`
//! times. Non-unitary matrices are evaluated by the same formula, which is
//! the amplitude of their unitary dilation with the extra modes in vacuum at
//! both ends.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permanent::permanent_row_major;

/// Largest total photon number accepted by the simulator.
pub const MAX_PHOTONS: usize = 12;

/// Amplitudes below this magnitude are dropped after a transformation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

const FACTORIALS: [f64; MAX_PHOTONS + 1] = {
    let mut table = [1.0; MAX_PHOTONS + 1];
    let mut k = 1;
    while k <= MAX_PHOTONS {
        table[k] = table[k - 1] * k as f64;
        k += 1;
    }
    table
};

/// Occupation numbers of a set of optical modes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    pub fn vacuum(mode_count: usize) -> Self {
        Self(vec![0; mode_count])
    }

    /// Single photon in `mode`.
    pub fn single(mode_count: usize, mode: usize) -> Self {
        let mut occ = vec![0; mode_count];
        occ[mode] = 1;
        Self(occ)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn photon_count(&self) -> usize {
        self.0.iter().sum()
    }

    /// Concatenates the occupations of `other` after those of `self`.
    pub fn concat(&self, other: &FockState) -> FockState {
        let mut occ = self.0.clone();
        occ.extend_from_slice(&other.0);
        FockState(occ)
    }

    /// Row (or column) indices of the transfer-matrix submatrix: mode `i`
    /// repeated `occupation[i]` times.
    pub(crate) fn mode_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count))
            .collect()
    }

    pub(crate) fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&k| FACTORIALS[k.min(MAX_PHOTONS)]).product()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

impl From<Vec<usize>> for FockState {
    fn from(occ: Vec<usize>) -> Self {
        Self(occ)
    }
}

/// All Fock states of `photon_count` photons in `mode_count` modes, in
/// descending lexicographic order: `(n,0,..,0)` first, `(0,..,0,n)` last.
pub fn enumerate_basis(mode_count: usize, photon_count: usize) -> Vec<FockState> {
    fn fill(remaining: usize, prefix: &mut Vec<usize>, modes_left: usize, out: &mut Vec<FockState>) {
        if modes_left == 1 {
            prefix.push(remaining);
            out.push(FockState(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(remaining - k, prefix, modes_left - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if mode_count == 0 {
        if photon_count == 0 {
            out.push(FockState(Vec::new()));
        }
        return out;
    }
    fill(photon_count, &mut Vec::with_capacity(mode_count), mode_count, &mut out);
    out
}

/// A square complex matrix acting on mode creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTransform {
    matrix: DMatrix<Complex64>,
}

impl ModeTransform {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "mode transform must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { matrix })
    }

    pub fn identity(mode_count: usize) -> Self {
        Self {
            matrix: DMatrix::identity(mode_count, mode_count),
        }
    }

    pub fn from_row_major(mode_count: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != mode_count * mode_count {
            return Err(Error::Dimension(format!(
                "{} entries for a {mode_count}-mode transform",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(mode_count, mode_count, entries))
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// `max |U^dag U - I|` over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.mode_count();
        let gram = self.matrix.adjoint() * &self.matrix;
        (gram - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() < tol
    }

    /// Matrix product `self * first`: apply `first`, then `self`.
    pub fn after(&self, first: &ModeTransform) -> Result<ModeTransform> {
        if self.mode_count() != first.mode_count() {
            return Err(Error::Dimension(format!(
                "composing {}-mode and {}-mode transforms",
                self.mode_count(),
                first.mode_count()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    pub fn scaled(&self, factor: f64) -> ModeTransform {
        Self {
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    /// Principal submatrix on the given modes, in the given order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<ModeTransform> {
        let n = self.mode_count();
        if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
            return Err(Error::Dimension(format!("mode {bad} out of range for {n} modes")));
        }
        Ok(Self {
            matrix: DMatrix::from_fn(modes.len(), modes.len(), |i, j| self.matrix[(modes[i], modes[j])]),
        })
    }

    /// Relabels modes: entry `(i, j)` of the result is `self[(order[i], order[j])]`.
    pub fn permuted(&self, order: &[usize]) -> Result<ModeTransform> {
        if order.len() != self.mode_count() {
            return Err(Error::Dimension(format!(
                "mode order of length {} for {} modes",
                order.len(),
                self.mode_count()
            )));
        }
        self.submatrix(order)
    }
}

/// A (possibly subnormalized) superposition of Fock states over a fixed
/// number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonicState {
    mode_count: usize,
    terms: BTreeMap<FockState, Complex64>,
}

impl PhotonicState {
    pub fn zero(mode_count: usize) -> Self {
        Self {
            mode_count,
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(state: FockState) -> Self {
        let mode_count = state.mode_count();
        let mut terms = BTreeMap::new();
        terms.insert(state, Complex64::new(1.0, 0.0));
        Self { mode_count, terms }
    }

    pub fn from_terms<I>(mode_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockState, Complex64)>,
    {
        let mut state = Self::zero(mode_count);
        for (basis, amp) in terms {
            state.add(basis, amp)?;
        }
        Ok(state)
    }

    /// Adds `amplitude` to the coefficient of `basis`.
    pub fn add(&mut self, basis: FockState, amplitude: Complex64) -> Result<()> {
        if basis.mode_count() != self.mode_count {
            return Err(Error::Dimension(format!(
                "{}-mode basis state added to a {}-mode state",
                basis.mode_count(),
                self.mode_count
            )));
        }
        *self.terms.entry(basis).or_insert(Complex64::new(0.0, 0.0)) += amplitude;
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn amplitude(&self, basis: &FockState) -> Complex64 {
        self.terms.get(basis).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        self
    }
}

fn check_photons(n: usize) -> Result<()> {
    if n > MAX_PHOTONS {
        return Err(Error::TooManyPhotons {
            photons: n,
            max: MAX_PHOTONS,
        });
    }
    Ok(())
}

/// Amplitude `<output| U(t) |input>`; zero when photon numbers differ.
pub fn transition_amplitude(t: &ModeTransform, input: &FockState, output: &FockState) -> Result<Complex64> {
    let m = t.mode_count();
    if input.mode_count() != m || output.mode_count() != m {
        return Err(Error::Dimension(format!(
            "states on {}/{} modes for a {m}-mode transform",
            input.mode_count(),
            output.mode_count()
        )));
    }
    let n = input.photon_count();
    if n != output.photon_count() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_photons(n)?;
    let cols = input.mode_indices();
    let rows = output.mode_indices();
    let sub: Vec<Complex64> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .map(|(r, c)| t.matrix()[(r, c)])
        .collect();
    let norm = (input.factorial_product() * output.factorial_product()).sqrt();
    Ok(permanent_row_major(n, &sub) / norm)
}

/// Evolves a state through `t`, the linear extension of
/// [`transition_amplitude`] over the state's terms.
pub fn apply_transform(t: &ModeTransform, s: &PhotonicState) -> Result<PhotonicState> {
    let m = t.mode_count();
    if s.mode_count() != m {
        return Err(Error::Dimension(format!(
            "{}-mode state through a {m}-mode transform",
            s.mode_count()
        )));
    }
    let mut sectors: BTreeMap<usize, Vec<FockState>> = BTreeMap::new();
    let mut out = PhotonicState::zero(m);
    for (input, &amp) in s.terms() {
        let n = input.photon_count();
        check_photons(n)?;
        let outputs = sectors.entry(n).or_insert_with(|| enumerate_basis(m, n));
        for output in outputs.iter() {
            let a = transition_amplitude(t, input, output)?;
            if a != Complex64::new(0.0, 0.0) {
                out.add(output.clone(), amp * a)?;
            }
        }
    }
    Ok(out.pruned())
}

/// Keeps the terms whose occupations on `ancilla_modes` equal `pattern` and
/// removes those modes. The result is not renormalized: its squared norm is
/// the probability of observing `pattern`.
pub fn postselect(s: &PhotonicState, ancilla_modes: &[usize], pattern: &[usize]) -> Result<PhotonicState> {
    let m = s.mode_count();
    if ancilla_modes.len() != pattern.len() {
        return Err(Error::Dimension(format!(
            "{} ancilla modes but a pattern of length {}",
            ancilla_modes.len(),
            pattern.len()
        )));
    }
    if let Some(&bad) = ancilla_modes.iter().find(|&&a| a >= m) {
        return Err(Error::Dimension(format!(
            "ancilla mode {bad} out of range for {m} modes"
        )));
    }
    let kept: Vec<usize> = (0..m).filter(|i| !ancilla_modes.contains(i)).collect();
    let mut out = PhotonicState::zero(kept.len());
    for (basis, &amp) in s.terms() {
        let occ = basis.occupations();
        if ancilla_modes.iter().zip(pattern).all(|(&mode, &k)| occ[mode] == k) {
            let rest = FockState(kept.iter().map(|&i| occ[i]).collect());
            out.add(rest, amp)?;
        }
    }
    Ok(out)
}
