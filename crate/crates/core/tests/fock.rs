// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{gaussian_matrix, naive_permanent, random_unitary, rng};
use hyperqec::fock::{apply_transform, enumerate_basis, transition_amplitude, FockState, PhotonicState};
use hyperqec::{permanent, Complex64, ModeTransform};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ryser_agrees_with_permutation_sum(k in 0usize..=5, seed in any::<u64>()) {
        let a = gaussian_matrix(k, &mut rng(seed));
        let fast = permanent(&a).unwrap();
        let slow = naive_permanent(&a);
        let scale = slow.norm().max(1e-300);
        prop_assert!((fast - slow).norm() / scale < 1e-12 || (fast - slow).norm() < 1e-14,
            "k={k}: {fast} vs {slow}");
    }

    #[test]
    fn unitary_evolution_conserves_norm_and_photons(
        modes in 2usize..=5,
        photons in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let u = random_unitary(modes, &mut r);
        let basis = enumerate_basis(modes, photons);
        let mut state = PhotonicState::zero(modes);
        let mut norm = 0.0;
        for b in &basis {
            let z = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            norm += z.norm_sqr();
            state.add(b.clone(), z).unwrap();
        }
        let out = apply_transform(&u, &state).unwrap();
        prop_assert!((out.norm_sqr() - norm).abs() < 1e-10 * norm);
        for (s, _) in out.terms() {
            prop_assert_eq!(s.photon_count(), photons);
        }
    }
}

use rand::Rng;

#[test]
fn permanent_known_values() {
    let ones = nalgebra::DMatrix::from_element(4, 4, Complex64::new(1.0, 0.0));
    assert!((permanent(&ones).unwrap() - Complex64::new(24.0, 0.0)).norm() < 1e-12);
    let empty = nalgebra::DMatrix::<Complex64>::zeros(0, 0);
    assert_eq!(permanent(&empty).unwrap(), Complex64::new(1.0, 0.0));
}

#[test]
fn hong_ou_mandel_dip() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bs = ModeTransform::from_row_major(
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    )
    .unwrap();
    let input = FockState::new(vec![1, 1]);
    let coincidence = transition_amplitude(&bs, &input, &FockState::new(vec![1, 1])).unwrap();
    assert!(coincidence.norm() < 1e-15);
    let bunched = transition_amplitude(&bs, &input, &FockState::new(vec![2, 0])).unwrap();
    assert!((bunched.norm_sqr() - 0.5).abs() < 1e-15);
}

#[test]
fn identity_transform_is_trivial() {
    let id = ModeTransform::identity(4);
    let s = FockState::new(vec![2, 0, 1, 0]);
    let out = apply_transform(&id, &PhotonicState::basis(s.clone())).unwrap();
    assert_eq!(out.len(), 1);
    assert!((out.amplitude(&s) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
}
