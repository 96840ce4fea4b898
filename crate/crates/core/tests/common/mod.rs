// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use hyperqec::fock::{apply_transform, postselect, FockState, PhotonicState};
use hyperqec::io::MatrixFile;
use hyperqec::{Complex64, LogicalBasis, MeasurementScheme, ModeTransform};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary: QR of a Gaussian matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> ModeTransform {
    let qr = gaussian_matrix(n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    ModeTransform::new(q).unwrap()
}

/// Sum over all permutations.
pub fn naive_permanent(a: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    permute(&mut idx, 0, &mut |p| {
        total += (0..n).map(|i| a[(i, p[i])]).product::<Complex64>();
    });
    total
}

fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, f);
        idx.swap(k, i);
    }
}

/// Contraction map by evolving every padded input through `t` and
/// postselecting the herald pattern.
pub fn evolve_postselect_map(
    t: &ModeTransform,
    basis: &LogicalBasis,
    scheme: &MeasurementScheme,
) -> DMatrix<Complex64> {
    let ancilla_in = FockState::new(scheme.ancilla_input.clone());
    let d = basis.dim();
    let mut out = DMatrix::zeros(d, d);
    for (i, input) in basis.states.iter().enumerate() {
        let padded = input.concat(&ancilla_in);
        let evolved = apply_transform(t, &PhotonicState::basis(padded)).unwrap();
        let kept = postselect(&evolved, &scheme.ancilla_modes, &scheme.herald_pattern).unwrap();
        for (j, output) in basis.states.iter().enumerate() {
            out[(j, i)] = kept.amplitude(output);
        }
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn fixture(name: &str) -> ModeTransform {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name);
    MatrixFile::read(&path).unwrap().to_transform().unwrap()
}

/// A 0.0133 solution found by the optimizer (seed 7, cycle 0).
pub const PLATEAU_FIXTURE: &str = "plateau_solution.json";

/// Its success probability from a permutation-sum evaluation of the
/// contraction map.
pub const PLATEAU_FIXTURE_PROBABILITY: f64 = 0.013296364027310983;
