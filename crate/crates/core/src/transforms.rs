//! Fast orthonormal transforms.
//!
//! The Walsh–Hadamard transform is computed in place by an iterative
//! butterfly and normalized by `1/sqrt(n)`, so it is orthonormal, symmetric
//! and its own inverse. A permuted identity is provided as a maximally
//! coherent control.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest dimension [`OrthonormalTransform::materialize`] will allocate.
pub const MATERIALIZE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    WalshHadamard,
    IdentityPermuted,
}

/// A square orthonormal map with a fast apply.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalTransform {
    kind: TransformKind,
    n: usize,
    /// `perm[i]` is the output slot of input coordinate `i` (permuted identity only).
    perm: Vec<usize>,
}

/// Orthonormal Walsh–Hadamard transform in place.
///
/// The buffer length must be a power of two (including 1).
pub fn fwht_inplace(buf: &mut [f64]) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    butterfly(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Unnormalized Sylvester-ordered butterfly. Length must be a power of two.
fn butterfly(buf: &mut [f64]) {
    let n = buf.len();
    let mut half = 1;
    while half < n {
        for block in buf.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Zero-pad `x` to the next power of two.
pub fn pad_to_power_of_two(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    out.resize(x.len().max(1).next_power_of_two(), 0.0);
    out
}

impl OrthonormalTransform {
    pub fn walsh_hadamard(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(Self {
            kind: TransformKind::WalshHadamard,
            n,
            perm: Vec::new(),
        })
    }

    /// Walsh–Hadamard over the smallest power of two `>= n`. Inputs of length
    /// `n` are zero-padded by the caller (see [`pad_to_power_of_two`]).
    pub fn walsh_hadamard_padded(n: usize) -> Self {
        Self {
            kind: TransformKind::WalshHadamard,
            n: n.max(1).next_power_of_two(),
            perm: Vec::new(),
        }
    }

    /// A uniformly random permutation matrix, drawn from `seed`.
    pub fn identity_permuted(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(seed, "transform/permutation", 0));
        Ok(Self {
            kind: TransformKind::IdentityPermuted,
            n,
            perm,
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Apply in place. `buf.len()` must equal the dimension.
    pub fn apply_inplace(&self, buf: &mut [f64]) -> Result<()> {
        if buf.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: buf.len(),
            });
        }
        match self.kind {
            TransformKind::WalshHadamard => fwht_inplace(buf),
            TransformKind::IdentityPermuted => {
                let input = buf.to_vec();
                for (i, &v) in input.iter().enumerate() {
                    buf[self.perm[i]] = v;
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut buf = x.to_vec();
        self.apply_inplace(&mut buf)?;
        Ok(buf)
    }

    /// Dense matrix whose column `j` is the transform of `e_j`.
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        if self.n > MATERIALIZE_LIMIT {
            return Err(Error::DimensionTooLarge {
                n: self.n,
                limit: MATERIALIZE_LIMIT,
            });
        }
        let mut out = DMatrix::zeros(self.n, self.n);
        let mut col = vec![0.0; self.n];
        for j in 0..self.n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.apply_inplace(&mut col)?;
            out.column_mut(j).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// Coherence `sqrt(n) * max |F_ij|`, known in closed form for both kinds.
    pub fn coherence(&self) -> f64 {
        match self.kind {
            TransformKind::WalshHadamard => 1.0,
            TransformKind::IdentityPermuted => (self.n as f64).sqrt(),
        }
    }
}

/// Coherence of an explicit square matrix: `sqrt(n)` times its largest entry magnitude.
pub fn coherence_of_matrix(f: &DMatrix<f64>) -> f64 {
    let n = f.nrows() as f64;
    n.sqrt() * f.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fwht_small_cases() {
        let mut one = [5.0];
        fwht_inplace(&mut one).unwrap();
        assert_eq!(one, [5.0]);

        let mut two = [1.0, 0.0];
        fwht_inplace(&mut two).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(two[0], r, epsilon = 1e-15);
        assert_abs_diff_eq!(two[1], r, epsilon = 1e-15);
    }

    #[test]
    fn fwht_rejects_non_power_of_two() {
        let mut buf = vec![0.0; 6];
        assert!(matches!(fwht_inplace(&mut buf), Err(Error::NotPowerOfTwo(6))));
        assert!(matches!(fwht_inplace(&mut []), Err(Error::NotPowerOfTwo(0))));
    }

    #[test]
    fn materialize_hadamard_two_and_four() {
        let h2 = OrthonormalTransform::walsh_hadamard(2).unwrap().materialize().unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = DMatrix::from_row_slice(2, 2, &[r, r, r, -r]);
        assert!((h2 - expected).abs().max() < 1e-15);

        let h4 = OrthonormalTransform::walsh_hadamard(4).unwrap().materialize().unwrap();
        assert!(h4.iter().all(|v| (v.abs() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn permuted_identity_is_a_permutation() {
        let t = OrthonormalTransform::identity_permuted(3, 11).unwrap();
        let p = t.materialize().unwrap();
        for i in 0..3 {
            assert_eq!(p.row(i).iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(p.column(i).iter().filter(|v| **v == 1.0).count(), 1);
        }
        assert_eq!(p.iter().filter(|v| **v == 0.0).count(), 6);
        assert_eq!(t.coherence(), 3f64.sqrt());
    }

    #[test]
    fn coherence_closed_forms() {
        assert_eq!(OrthonormalTransform::walsh_hadamard(64).unwrap().coherence(), 1.0);
        assert_eq!(OrthonormalTransform::identity_permuted(4, 0).unwrap().coherence(), 2.0);
        let h8 = OrthonormalTransform::walsh_hadamard(8).unwrap().materialize().unwrap();
        assert_abs_diff_eq!(coherence_of_matrix(&h8), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn materialize_guard() {
        let t = OrthonormalTransform::walsh_hadamard(8192).unwrap();
        assert!(matches!(t.materialize(), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn padding_wrapper() {
        assert_eq!(pad_to_power_of_two(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0, 0.0]);
        assert_eq!(OrthonormalTransform::walsh_hadamard_padded(5).dim(), 8);
        assert_eq!(OrthonormalTransform::walsh_hadamard_padded(8).dim(), 8);
    }

    #[test]
    fn apply_checks_length() {
        let t = OrthonormalTransform::walsh_hadamard(4).unwrap();
        assert!(matches!(t.apply(&[1.0; 3]), Err(Error::LengthMismatch { .. })));
    }
}
