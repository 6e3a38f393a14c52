//! Sketching operators `A: R^n -> R^m`.
//!
//! A SORS operator is `sqrt(N/m) * R * F * D` where `D` is a random sign
//! diagonal, `F` an orthonormal transform of size `N >= n` (inputs are
//! zero-padded to `N`) and `R` selects `m` rows uniformly at random. The
//! `sqrt(N/m)` factor makes `E ||Ax||^2 = ||x||^2`. The Gaussian baseline
//! stores a dense matrix with i.i.d. `N(0, 1/m)` entries.
//!
//! Everything random is a pure function of the descriptor, so an operator
//! round-trips through its JSON descriptor bit for bit.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::transforms::{OrthonormalTransform, TransformKind, MATERIALIZE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Sors,
    Gaussian,
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::Sors => "sors",
            EnsembleKind::Gaussian => "gaussian",
        })
    }
}

fn default_transform() -> TransformKind {
    TransformKind::WalshHadamard
}

fn default_replacement() -> bool {
    true
}

/// Everything needed to rebuild an operator exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchDescriptor {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default = "default_replacement")]
    pub replacement: bool,
    #[serde(default = "default_transform")]
    pub transform: TransformKind,
}

#[derive(Debug, Clone)]
enum Body {
    Sors {
        transform: OrthonormalTransform,
        row_indices: Vec<usize>,
        signs: Vec<f64>,
    },
    /// Row-major `m x n`.
    Gaussian { entries: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct SketchOperator {
    desc: SketchDescriptor,
    scale: f64,
    body: Body,
}

impl SketchOperator {
    /// SORS operator over the given transform; the ambient dimension is `t.dim()`.
    pub fn build_sors(t: OrthonormalTransform, m: usize, seed: u64, replacement: bool) -> Result<Self> {
        let n = t.dim();
        Self::sors_with_ambient(t, n, m, seed, replacement)
    }

    fn sors_with_ambient(
        t: OrthonormalTransform,
        n: usize,
        m: usize,
        seed: u64,
        replacement: bool,
    ) -> Result<Self> {
        let big_n = t.dim();
        if m == 0 || m > n || n > big_n {
            return Err(Error::SketchDimension { m, n });
        }
        let mut sign_rng = rng::stream(seed, "sors/signs", 0);
        let signs: Vec<f64> = (0..n)
            .map(|_| if sign_rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut row_rng = rng::stream(seed, "sors/rows", 0);
        let row_indices: Vec<usize> = if replacement {
            (0..m).map(|_| row_rng.gen_range(0..big_n)).collect()
        } else {
            rand::seq::index::sample(&mut row_rng, big_n, m).into_vec()
        };
        Ok(Self {
            desc: SketchDescriptor {
                kind: EnsembleKind::Sors,
                n,
                m,
                seed,
                replacement,
                transform: t.kind(),
            },
            scale: (big_n as f64 / m as f64).sqrt(),
            body: Body::Sors {
                transform: t,
                row_indices,
                signs,
            },
        })
    }

    /// SORS over Walsh–Hadamard for any `n`, zero-padding to the next power of two.
    pub fn sors(n: usize, m: usize, seed: u64, replacement: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::SketchDimension { m, n });
        }
        Self::sors_with_ambient(OrthonormalTransform::walsh_hadamard_padded(n), n, m, seed, replacement)
    }

    /// SORS over a permuted identity (coherence `sqrt(n)`), the worst case for row sampling.
    /// The permutation is derived from `seed`.
    pub fn sors_identity_control(n: usize, m: usize, seed: u64, replacement: bool) -> Result<Self> {
        let t = OrthonormalTransform::identity_permuted(n, rng::child_seed(seed, "sors/permutation", 0))?;
        Self::build_sors(t, m, seed, replacement)
    }

    /// Dense Gaussian baseline with i.i.d. `N(0, 1/m)` entries.
    pub fn build_gaussian(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::SketchDimension { m, n });
        }
        let sd = 1.0 / (m as f64).sqrt();
        let mut entries = vec![0.0; m * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let mut r = rng::stream(seed, "gaussian/entries", row as u64);
            for v in chunk.iter_mut() {
                *v = sd * r.sample::<f64, _>(StandardNormal);
            }
        });
        Ok(Self {
            desc: SketchDescriptor {
                kind: EnsembleKind::Gaussian,
                n,
                m,
                seed,
                replacement: false,
                transform: TransformKind::WalshHadamard,
            },
            scale: 1.0,
            body: Body::Gaussian { entries },
        })
    }

    pub fn from_descriptor(desc: &SketchDescriptor) -> Result<Self> {
        match desc.kind {
            EnsembleKind::Gaussian => Self::build_gaussian(desc.n, desc.m, desc.seed),
            EnsembleKind::Sors => match desc.transform {
                TransformKind::WalshHadamard => Self::sors(desc.n, desc.m, desc.seed, desc.replacement),
                TransformKind::IdentityPermuted => {
                    Self::sors_identity_control(desc.n, desc.m, desc.seed, desc.replacement)
                }
            },
        }
    }

    pub fn descriptor(&self) -> &SketchDescriptor {
        &self.desc
    }

    pub fn kind(&self) -> EnsembleKind {
        self.desc.kind
    }

    pub fn n(&self) -> usize {
        self.desc.n
    }

    pub fn m(&self) -> usize {
        self.desc.m
    }

    pub fn seed(&self) -> u64 {
        self.desc.seed
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Dimension the transform runs at (`n` rounded up to a power of two for
    /// Walsh–Hadamard; `n` for Gaussian).
    pub fn effective_dim(&self) -> usize {
        match &self.body {
            Body::Sors { transform, .. } => transform.dim(),
            Body::Gaussian { .. } => self.desc.n,
        }
    }

    /// Coherence of the underlying transform (1 for Gaussian by convention).
    pub fn coherence(&self) -> f64 {
        match &self.body {
            Body::Sors { transform, .. } => transform.coherence(),
            Body::Gaussian { .. } => 1.0,
        }
    }

    pub fn row_indices(&self) -> Option<&[usize]> {
        match &self.body {
            Body::Sors { row_indices, .. } => Some(row_indices),
            Body::Gaussian { .. } => None,
        }
    }

    pub fn signs(&self) -> Option<&[f64]> {
        match &self.body {
            Body::Sors { signs, .. } => Some(signs),
            Body::Gaussian { .. } => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.desc.m];
        let mut scratch = Vec::new();
        self.apply_into(x, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Allocation-free apply; `scratch` is resized as needed.
    pub fn apply_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        if x.len() != self.desc.n {
            return Err(Error::LengthMismatch {
                expected: self.desc.n,
                actual: x.len(),
            });
        }
        if out.len() != self.desc.m {
            return Err(Error::LengthMismatch {
                expected: self.desc.m,
                actual: out.len(),
            });
        }
        match &self.body {
            Body::Sors {
                transform,
                row_indices,
                signs,
            } => {
                scratch.clear();
                scratch.extend(x.iter().zip(signs).map(|(v, s)| v * s));
                scratch.resize(transform.dim(), 0.0);
                transform.apply_inplace(scratch)?;
                for (o, &r) in out.iter_mut().zip(row_indices) {
                    *o = self.scale * scratch[r];
                }
            }
            Body::Gaussian { entries } => {
                for (o, row) in out.iter_mut().zip(entries.chunks_exact(self.desc.n)) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
        Ok(())
    }

    /// Explicit `m x n` matrix (oracle support).
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let n = self.desc.n;
        if n > MATERIALIZE_LIMIT {
            return Err(Error::DimensionTooLarge {
                n,
                limit: MATERIALIZE_LIMIT,
            });
        }
        match &self.body {
            Body::Gaussian { entries } => Ok(DMatrix::from_row_slice(self.desc.m, n, entries)),
            Body::Sors { .. } => {
                let mut out = DMatrix::zeros(self.desc.m, n);
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = self.apply(&e)?;
                    out.column_mut(j).copy_from_slice(&col);
                    e[j] = 0.0;
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn full_sampling_without_replacement_is_an_isometry() {
        let t = OrthonormalTransform::walsh_hadamard(64).unwrap();
        let op = SketchOperator::build_sors(t, 64, 3, false).unwrap();
        assert_eq!(op.scale(), 1.0);
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = op.apply(&x).unwrap();
        assert!((norm(&y) - norm(&x)).abs() < 1e-10);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let build = || {
            SketchOperator::build_sors(OrthonormalTransform::walsh_hadamard(8).unwrap(), 3, 42, true).unwrap()
        };
        let (a, b) = (build(), build());
        assert_eq!(a.row_indices(), b.row_indices());
        assert_eq!(a.signs(), b.signs());
        assert_eq!(a.row_indices().unwrap().len(), 3);
        assert!(a.signs().unwrap().iter().all(|s| *s == 1.0 || *s == -1.0));
    }

    #[test]
    fn rejects_bad_m_and_lengths() {
        let t = OrthonormalTransform::walsh_hadamard(8).unwrap();
        assert!(SketchOperator::build_sors(t.clone(), 0, 1, true).is_err());
        assert!(SketchOperator::build_sors(t.clone(), 9, 1, true).is_err());
        let op = SketchOperator::build_sors(t, 4, 1, true).unwrap();
        assert!(matches!(op.apply(&[0.0; 7]), Err(Error::LengthMismatch { .. })));
        assert!(SketchOperator::build_gaussian(8, 0, 1).is_err());
    }

    #[test]
    fn zero_maps_to_zero() {
        let op = SketchOperator::sors(16, 4, 9, true).unwrap();
        assert!(op.apply(&[0.0; 16]).unwrap().iter().all(|v| *v == 0.0));
        let g = SketchOperator::build_gaussian(16, 4, 9).unwrap();
        assert!(g.apply(&[0.0; 16]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_by_two_materialization() {
        // Find a seed whose signs are [+1, +1].
        let op = (0..64)
            .map(|seed| {
                SketchOperator::build_sors(OrthonormalTransform::walsh_hadamard(2).unwrap(), 2, seed, false)
                    .unwrap()
            })
            .find(|op| op.signs().unwrap() == [1.0, 1.0])
            .unwrap();
        let a = op.materialize().unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut rows: Vec<Vec<f64>> = (0..2).map(|i| a.row(i).iter().copied().collect()).collect();
        rows.sort_by(|p, q| q[1].partial_cmp(&p[1]).unwrap());
        assert!((rows[0][0] - r).abs() < 1e-15 && (rows[0][1] - r).abs() < 1e-15);
        assert!((rows[1][0] - r).abs() < 1e-15 && (rows[1][1] + r).abs() < 1e-15);
    }

    #[test]
    fn gaussian_materialization_matches_apply() {
        let g = SketchOperator::build_gaussian(12, 5, 4).unwrap();
        let a = g.materialize().unwrap();
        let x: Vec<f64> = (0..12).map(|i| i as f64 - 5.5).collect();
        let y = g.apply(&x).unwrap();
        let yd = &a * nalgebra::DVector::from_vec(x);
        for i in 0..5 {
            assert!((y[i] - yd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn padded_dimension() {
        let op = SketchOperator::sors(10, 4, 1, true).unwrap();
        assert_eq!(op.effective_dim(), 16);
        assert!((op.scale() - 2.0).abs() < 1e-15);
        assert_eq!(op.apply(&[1.0; 10]).unwrap().len(), 4);
    }

    #[test]
    fn descriptor_json_round_trip() {
        for op in [
            SketchOperator::sors(32, 7, 5, true).unwrap(),
            SketchOperator::build_gaussian(9, 3, 5).unwrap(),
        ] {
            let json = serde_json::to_string(op.descriptor()).unwrap();
            assert!(!json.contains("row_indices") && !json.contains("signs"));
            let back: SketchDescriptor = serde_json::from_str(&json).unwrap();
            let rebuilt = SketchOperator::from_descriptor(&back).unwrap();
            assert_eq!(rebuilt.materialize().unwrap(), op.materialize().unwrap());
        }
    }
}
