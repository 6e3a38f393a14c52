//! Test sets, Gaussian mean width and the dimension-bound calculators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rip::ceil_guarded;
use crate::rng;

/// Orthonormality tolerance for subspace bases.
const BASIS_TOL: f64 = 1e-10;

/// A set `T` in `R^n` with an exact support function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SetFamily {
    FinitePoints { n: usize, points: Vec<Vec<f64>> },
    /// Unit vectors with at most `s` nonzeros. `s = n` is the whole sphere.
    SparseUnit { n: usize, s: usize },
    /// Unit sphere of the span of `basis` (`k` orthonormal columns of length `n`).
    SubspaceBall { n: usize, basis: Vec<Vec<f64>> },
    L1Ball { n: usize, radius: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl SetFamily {
    pub fn finite_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.first().ok_or(Error::Empty)?.len();
        if n == 0 {
            return Err(Error::InvalidParameter("points must have positive dimension".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(Self::FinitePoints { n, points })
    }

    pub fn sparse_unit(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s > n {
            return Err(Error::InvalidParameter(format!("sparsity {s} not in 1..={n}")));
        }
        Ok(Self::SparseUnit { n, s })
    }

    /// The full unit sphere `S^{n-1}`.
    pub fn sphere(n: usize) -> Result<Self> {
        Self::sparse_unit(n, n)
    }

    pub fn subspace_ball(basis: Vec<Vec<f64>>) -> Result<Self> {
        let n = basis.first().ok_or(Error::Empty)?.len();
        for (i, u) in basis.iter().enumerate() {
            if u.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: u.len(),
                });
            }
            for (j, v) in basis.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(u, v) - target).abs() > BASIS_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "basis columns {j} and {i} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self::SubspaceBall { n, basis })
    }

    /// A uniformly random `k`-dimensional subspace, from the QR factor of a Gaussian matrix.
    pub fn random_subspace(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("subspace dimension {k} not in 1..={n}")));
        }
        let mut r = rng::stream(seed, "geometry/subspace", 0);
        let g = DMatrix::from_fn(n, k, |_, _| r.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let basis = (0..k).map(|j| q.column(j).iter().copied().collect()).collect();
        Self::subspace_ball(basis)
    }

    pub fn l1_ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 || !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad l1 ball (n={n}, radius={radius})")));
        }
        Ok(Self::L1Ball { n, radius })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::FinitePoints { n, .. }
            | Self::SparseUnit { n, .. }
            | Self::SubspaceBall { n, .. }
            | Self::L1Ball { n, .. } => *n,
        }
    }

    /// `sup_{v in T} <g, v>`, in closed form per variant.
    pub fn sup_gaussian(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: g.len(),
            });
        }
        Ok(match self {
            Self::FinitePoints { points, .. } => points
                .iter()
                .map(|p| dot(p, g))
                .fold(f64::NEG_INFINITY, f64::max),
            Self::SparseUnit { s, .. } => top_s_norm(g, *s),
            Self::SubspaceBall { basis, .. } => basis.iter().map(|u| dot(u, g).powi(2)).sum::<f64>().sqrt(),
            Self::L1Ball { radius, .. } => radius * g.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        })
    }

    /// `rad(T) = sup_{v in T} ||v||_2`.
    pub fn max_norm(&self) -> f64 {
        match self {
            Self::FinitePoints { points, .. } => points.iter().map(|p| norm(p)).fold(0.0, f64::max),
            Self::SparseUnit { .. } | Self::SubspaceBall { .. } => 1.0,
            Self::L1Ball { radius, .. } => *radius,
        }
    }

    /// Deterministic member point number `index` of the stream `seed`.
    pub fn sample_point(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, "geometry/sample", index);
        match self {
            Self::FinitePoints { points, .. } => points[r.gen_range(0..points.len())].clone(),
            Self::SparseUnit { n, s } => {
                let support = rand::seq::index::sample(&mut r, *n, *s);
                let mut x = vec![0.0; *n];
                for i in support.iter() {
                    x[i] = r.sample(StandardNormal);
                }
                normalize_or_axis(&mut x, support.index(0));
                x
            }
            Self::SubspaceBall { n, basis } => {
                let coef: Vec<f64> = basis.iter().map(|_| r.sample(StandardNormal)).collect();
                let cn = norm(&coef);
                let mut x = vec![0.0; *n];
                for (c, u) in coef.iter().zip(basis) {
                    for (xi, ui) in x.iter_mut().zip(u) {
                        *xi += c / cn * ui;
                    }
                }
                x
            }
            Self::L1Ball { n, radius } => {
                let mut x = vec![0.0; *n];
                if r.gen::<bool>() {
                    let i = r.gen_range(0..*n);
                    x[i] = if r.gen::<bool>() { *radius } else { -*radius };
                } else {
                    let w: Vec<f64> = (0..*n).map(|_| r.sample::<f64, _>(Exp1)).collect();
                    let total: f64 = w.iter().sum();
                    let shrink = r.gen::<f64>().powf(1.0 / *n as f64);
                    for (xi, wi) in x.iter_mut().zip(&w) {
                        let sign = if r.gen::<bool>() { 1.0 } else { -1.0 };
                        *xi = sign * radius * shrink * wi / total;
                    }
                }
                x
            }
        }
    }

    /// Points the family exposes explicitly: every finite point, the `l1`
    /// vertices `r e_i` (the quadratic distortion is even, so `-r e_i` adds
    /// nothing), and each subspace basis direction.
    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        match self {
            Self::FinitePoints { points, .. } => points.clone(),
            Self::SparseUnit { .. } => Vec::new(),
            Self::SubspaceBall { basis, .. } => basis.clone(),
            Self::L1Ball { n, radius } => (0..*n)
                .map(|i| {
                    let mut e = vec![0.0; *n];
                    e[i] = *radius;
                    e
                })
                .collect(),
        }
    }

    /// Membership test with tolerance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.n() {
            return false;
        }
        match self {
            Self::FinitePoints { points, .. } => points
                .iter()
                .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)),
            Self::SparseUnit { s, .. } => {
                x.iter().filter(|v| **v != 0.0).count() <= *s && (norm(x) - 1.0).abs() <= tol
            }
            Self::SubspaceBall { basis, .. } => {
                let mut resid = x.to_vec();
                for u in basis {
                    let c = dot(u, x);
                    for (ri, ui) in resid.iter_mut().zip(u) {
                        *ri -= c * ui;
                    }
                }
                norm(&resid) <= tol && (norm(x) - 1.0).abs() <= tol
            }
            Self::L1Ball { radius, .. } => x.iter().map(|v| v.abs()).sum::<f64>() <= radius + tol,
        }
    }
}

fn normalize_or_axis(x: &mut [f64], fallback: usize) {
    let nx = norm(x);
    if nx > 0.0 {
        x.iter_mut().for_each(|v| *v /= nx);
    } else {
        x[fallback] = 1.0;
    }
}

/// Euclidean norm of the `s` largest-magnitude entries of `g`.
pub fn top_s_norm(g: &[f64], s: usize) -> f64 {
    if s >= g.len() {
        return norm(g);
    }
    let mut sq: Vec<f64> = g.iter().map(|v| v * v).collect();
    sq.select_nth_unstable_by(s - 1, |a, b| b.total_cmp(a));
    sq[..s].iter().sum::<f64>().sqrt()
}

/// Monte-Carlo estimate of `omega(T) = E sup_{v in T} <g, v>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub omega_hat: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Default number of Gaussian draws for width estimation.
pub const DEFAULT_WIDTH_TRIALS: usize = 10_000;

pub fn width_estimate(family: &SetFamily, trials: usize, seed: u64) -> Result<WidthEstimate> {
    if trials < 2 {
        return Err(Error::InvalidParameter("width estimation needs at least 2 trials".into()));
    }
    let n = family.n();
    let draws: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, "geometry/width", t as u64);
            let g: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
            family.sup_gaussian(&g).expect("draw has family dimension")
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / trials as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(WidthEstimate {
        omega_hat: mean,
        stderr: (var / trials as f64).sqrt(),
        trials,
        seed,
    })
}

/// Gaussian dimension requirement `ceil((omega + eta)^2 / delta^2)`, `delta in (0, 1)`.
pub fn gordon_bound(omega: f64, eta: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(omega >= 0.0 && eta >= 0.0) {
        return Err(Error::InvalidParameter("omega and eta must be non-negative".into()));
    }
    Ok(ceil_guarded((omega + eta).powi(2) / (delta * delta)))
}

/// SORS dimension requirement
/// `ceil(C Delta^2 (1 + eta)^2 ln^4 n max(1, omega^2 / rad^2) / delta^2)`.
pub fn sors_bound(omega: f64, rad: f64, eta: f64, delta: f64, n: f64, coherence: f64, c: f64) -> Result<u64> {
    for (name, v) in [("rad", rad), ("delta", delta), ("n", n), ("coherence", coherence), ("C", c)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(omega >= 0.0 && eta >= 0.0) {
        return Err(Error::InvalidParameter("omega and eta must be non-negative".into()));
    }
    let ratio = (omega * omega / (rad * rad)).max(1.0);
    Ok(ceil_guarded(
        c * coherence * coherence * (1.0 + eta).powi(2) * n.ln().powi(4) * ratio / (delta * delta),
    ))
}

/// Distortion `delta` a SORS operator with `m` rows is guaranteed by [`sors_bound`] (inverse in `m`).
pub fn sors_delta_for_m(omega: f64, rad: f64, eta: f64, m: usize, n: f64, coherence: f64, c: f64) -> f64 {
    let ratio = (omega * omega / (rad * rad)).max(1.0);
    (c * coherence * coherence * (1.0 + eta).powi(2) * n.ln().powi(4) * ratio / m as f64).sqrt()
}

/// Distortion `delta` implied by [`gordon_bound`] at dimension `m`.
pub fn gordon_delta_for_m(omega: f64, eta: f64, m: usize) -> f64 {
    (omega + eta) / (m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_examples() {
        let f = SetFamily::finite_points(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(f.sup_gaussian(&[3.0, -1.0]).unwrap(), 3.0);

        let sphere = SetFamily::sphere(3).unwrap();
        let g = [1.0, -2.0, 2.0];
        assert_eq!(sphere.sup_gaussian(&g).unwrap(), 3.0);

        let one_sparse = SetFamily::sparse_unit(3, 1).unwrap();
        assert_eq!(one_sparse.sup_gaussian(&[1.0, -2.0, 0.5]).unwrap(), 2.0);

        let l1 = SetFamily::l1_ball(3, 2.0).unwrap();
        assert_eq!(l1.sup_gaussian(&[1.0, -2.0, 0.5]).unwrap(), 4.0);

        assert!(matches!(sphere.sup_gaussian(&[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn radius_examples() {
        assert_eq!(SetFamily::sparse_unit(5, 2).unwrap().max_norm(), 1.0);
        assert_eq!(SetFamily::l1_ball(5, 2.5).unwrap().max_norm(), 2.5);
        let f = SetFamily::finite_points(vec![vec![3.0, 4.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(f.max_norm(), 5.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(SetFamily::finite_points(vec![]), Err(Error::Empty)));
        assert!(SetFamily::finite_points(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(SetFamily::sparse_unit(3, 4).is_err());
        assert!(SetFamily::subspace_ball(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(SetFamily::l1_ball(3, -1.0).is_err());
    }

    #[test]
    fn samples_are_members() {
        let fams = [
            SetFamily::finite_points(vec![vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 0.5]]).unwrap(),
            SetFamily::sparse_unit(10, 2).unwrap(),
            SetFamily::random_subspace(10, 3, 5).unwrap(),
            SetFamily::l1_ball(10, 1.5).unwrap(),
        ];
        for f in &fams {
            for i in 0..200 {
                let x = f.sample_point(9, i);
                assert!(f.contains(&x, 1e-12), "{f:?} {x:?}");
            }
        }
        let sparse = &fams[1];
        let x = sparse.sample_point(1, 0);
        assert!(x.iter().filter(|v| **v != 0.0).count() <= 2);
        assert!((norm(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn width_of_single_point_is_zero_mean() {
        let f = SetFamily::finite_points(vec![vec![1.0, 0.0, 0.0]]).unwrap();
        let w = width_estimate(&f, 5000, 3).unwrap();
        assert!(w.omega_hat.abs() <= 3.0 * w.stderr);
        assert!(width_estimate(&f, 1, 3).is_err());
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(gordon_bound(10.0, 2.0, 0.5).unwrap(), 576);
        let a = gordon_bound(3.0, 0.0, 0.2).unwrap();
        let b = gordon_bound(3.0, 0.0, 0.1).unwrap();
        assert_eq!(b, 4 * a);
        assert!(gordon_bound(1.0, 0.0, 1.0).is_err());

        let e = std::f64::consts::E;
        assert_eq!(sors_bound(4.0, 1.0, 0.0, 0.5, e, 1.0, 1.0).unwrap(), 64);
        assert_eq!(sors_bound(0.5, 1.0, 0.0, 0.5, e, 1.0, 1.0).unwrap(), 4);
        let small = sors_bound(4.0, 1.0, 0.0, 0.5, 16.0, 1.0, 1.0).unwrap() as f64;
        let big = sors_bound(4.0, 1.0, 0.0, 0.5, 256.0, 1.0, 1.0).unwrap() as f64;
        assert!((big / small / 16.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn family_json_round_trip() {
        let f = SetFamily::l1_ball(4, 2.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"variant\":\"l1_ball\""));
        assert_eq!(serde_json::from_str::<SetFamily>(&s).unwrap(), f);
    }
}
