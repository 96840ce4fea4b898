// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix permanents by Ryser's inclusion-exclusion formula.
//!
//! `perm(A) = (-1)^n * sum_{S ⊆ cols} (-1)^|S| * prod_i sum_{j ∈ S} a_ij`
//!
//! Subsets are walked in Gray-code order so each step updates the row sums
//! with a single column, giving `O(2^n n)` work.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Permanent of a square complex matrix. The empty matrix has permanent 1.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "permanent of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let row_major: Vec<Complex64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect();
    Ok(permanent_row_major(n, &row_major))
}

/// Permanent of an `n x n` matrix stored row-major in `a`.
pub(crate) fn permanent_row_major(n: usize, a: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), n * n);
    match n {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[0],
        2 => return a[0] * a[3] + a[1] * a[2],
        _ => {}
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let bit = 1u64 << col;
        gray ^= bit;
        if gray & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[i * n + col];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[i * n + col];
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Permanent together with all of its first derivatives.
///
/// On return `grad[r * n + c]` holds `d perm / d a_rc`, which is the
/// permanent of the minor with row `r` and column `c` removed.
pub(crate) fn permanent_with_gradient(n: usize, a: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(grad.len(), n * n);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    grad.iter_mut().for_each(|g| *g = zero);
    if n == 0 {
        return one;
    }
    if n == 1 {
        grad[0] = one;
        return a[0];
    }

    let mut row_sums = vec![zero; n];
    let mut prefix = vec![one; n + 1];
    let mut suffix = vec![one; n + 1];
    let mut total = zero;
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let bit = 1u64 << col;
        gray ^= bit;
        let adding = gray & bit != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[i * n + col];
            } else {
                *s -= a[i * n + col];
            }
        }
        for i in 0..n {
            prefix[i + 1] = prefix[i] * row_sums[i];
        }
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * row_sums[i];
        }
        let odd = gray.count_ones() % 2 == 1;
        if odd {
            total -= prefix[n];
        } else {
            total += prefix[n];
        }
        for r in 0..n {
            let mut excl = prefix[r] * suffix[r + 1];
            if odd {
                excl = -excl;
            }
            let mut cols = gray;
            while cols != 0 {
                let c = cols.trailing_zeros() as usize;
                cols &= cols - 1;
                grad[r * n + c] += excl;
            }
        }
    }
    if n % 2 == 1 {
        total = -total;
        grad.iter_mut().for_each(|g| *g = -*g);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn naive(n: usize, a: &[Complex64]) -> Complex64 {
        fn rec(n: usize, a: &[Complex64], row: usize, used: &mut [bool]) -> Complex64 {
            if row == n {
                return Complex64::new(1.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..n {
                if !used[col] {
                    used[col] = true;
                    acc += a[row * n + col] * rec(n, a, row + 1, used);
                    used[col] = false;
                }
            }
            acc
        }
        rec(n, a, 0, &mut vec![false; n])
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n * n)
            .map(|_| {
                let mut next = || {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
                };
                c(next(), next())
            })
            .collect()
    }

    #[test]
    fn two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]);
        assert_eq!(permanent(&m).unwrap(), c(10.0, 0.0));
    }

    #[test]
    fn empty_and_identity() {
        assert_eq!(permanent(&DMatrix::zeros(0, 0)).unwrap(), c(1.0, 0.0));
        for k in 1..=6 {
            let id = DMatrix::<Complex64>::identity(k, k);
            assert!((permanent(&id).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_square_is_an_error() {
        let m = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(permanent(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn ryser_matches_naive() {
        for n in 0..=7 {
            for seed in 0..5 {
                let a = pseudo_random(n, seed * 31 + n as u64);
                let expected = naive(n, &a);
                let got = permanent_row_major(n, &a);
                let scale = expected.norm().max(1e-300);
                assert!((got - expected).norm() / scale < 1e-12, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn gradient_entries_are_minor_permanents() {
        for n in 1..=6 {
            let a = pseudo_random(n, 99 + n as u64);
            let mut grad = vec![c(0., 0.); n * n];
            let p = permanent_with_gradient(n, &a, &mut grad);
            assert!((p - naive(n, &a)).norm() < 1e-12 * naive(n, &a).norm().max(1.0));
            for r in 0..n {
                for col in 0..n {
                    let minor: Vec<Complex64> = (0..n)
                        .filter(|&i| i != r)
                        .flat_map(|i| (0..n).filter(move |&j| j != col).map(move |j| (i, j)))
                        .map(|(i, j)| a[i * n + j])
                        .collect();
                    let expected = naive(n - 1, &minor);
                    assert!((grad[r * n + col] - expected).norm() < 1e-12, "n={n} r={r} c={col}");
                }
            }
        }
    }
}
