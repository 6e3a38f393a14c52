//! Restricted isometry certification and sample-complexity calculators.
//!
//! Distortions use the squared-norm convention
//! `| ||Ax||^2 - ||x||^2 | <= max(delta, delta^2) ||x||^2`, with `delta`
//! allowed above 1. For a support `S` the worst relative distortion is the
//! spectral norm of `A_S^T A_S - I`; by eigenvalue interlacing it suffices
//! to enumerate supports of size exactly `s`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sketch::SketchDescriptor;

/// Maximum number of supports enumerated by [`rip_constant_exact`].
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Supports sampled by the randomized fallback.
pub const RANDOMIZED_SUPPORTS: usize = 100_000;

const BLOCK: u128 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMethod {
    ExactEnumeration,
    RandomizedSupports,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub s: usize,
    /// Worst `| ||Ax||^2 / ||x||^2 - 1 |` over the examined supports.
    pub epsilon: f64,
    /// Solution of `max(delta, delta^2) = epsilon`.
    pub delta: f64,
    pub worst_support: Vec<usize>,
    pub method: RipMethod,
    pub supports_examined: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<SketchDescriptor>,
}

/// Inverse of `delta -> max(delta, delta^2)` on `[0, inf)`.
pub fn delta_from_epsilon(epsilon: f64) -> f64 {
    if epsilon <= 1.0 {
        epsilon
    } else {
        epsilon.sqrt()
    }
}

/// `max(delta, delta^2)`.
pub fn distortion_bound(delta: f64) -> f64 {
    delta.max(delta * delta)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// The `rank`-th `k`-subset of `0..n` in colexicographic order.
fn colex_unrank(mut rank: u128, k: usize, out: &mut [usize]) {
    for i in (1..=k).rev() {
        // largest c with C(c, i) <= rank
        let mut c = i - 1;
        while binomial(c + 1, i) <= rank {
            c += 1;
        }
        out[i - 1] = c;
        rank -= binomial(c, i);
    }
}

/// Advance to the next subset in colex order. Returns false after the last one.
fn colex_next(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in 0..k {
        let limit = if i + 1 < k { c[i + 1] } else { n };
        if c[i] + 1 < limit {
            c[i] += 1;
            for (j, v) in c.iter_mut().enumerate().take(i) {
                *v = j;
            }
            return true;
        }
    }
    false
}

fn support_epsilon(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    if k == 1 {
        let d = gram[(support[0], support[0])];
        return (d - 1.0).abs();
    }
    let sub = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
    let eig = SymmetricEigen::new(sub);
    eig.eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max((l - 1.0).abs()))
}

/// Keep the larger epsilon; on ties keep the earlier support.
fn better(a: (f64, u128, Vec<usize>), b: (f64, u128, Vec<usize>)) -> (f64, u128, Vec<usize>) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn effective_sparsity(n: usize, s: usize) -> Result<usize> {
    if s == 0 {
        return Err(Error::InvalidParameter("sparsity must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    Ok(s.min(n))
}

/// Exact RIP constant by enumerating every support of size `min(s, n)`.
pub fn rip_constant_exact(a: &DMatrix<f64>, s: usize) -> Result<RipReport> {
    let n = a.ncols();
    let k = effective_sparsity(n, s)?;
    let count = binomial(n, k);
    if count > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            s: k,
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let gram = a.transpose() * a;
    let blocks = count.div_ceil(BLOCK);
    let (epsilon, _, worst) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(count);
            let mut c = vec![0; k];
            colex_unrank(start, k, &mut c);
            let mut best = (f64::NEG_INFINITY, u128::MAX, Vec::new());
            for rank in start..end {
                let eps = support_epsilon(&gram, &c);
                if eps > best.0 {
                    best = (eps, rank, c.clone());
                }
                if rank + 1 < end {
                    colex_next(&mut c, n);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u128::MAX, Vec::new()), better);
    Ok(RipReport {
        s,
        epsilon,
        delta: delta_from_epsilon(epsilon),
        worst_support: worst,
        method: RipMethod::ExactEnumeration,
        supports_examined: count as u64,
        provenance: None,
    })
}

/// Lower estimate of the RIP constant from `samples` uniformly random supports.
pub fn rip_constant_randomized(a: &DMatrix<f64>, s: usize, samples: usize, seed: u64) -> Result<RipReport> {
    let n = a.ncols();
    let k = effective_sparsity(n, s)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sampled support".into()));
    }
    let gram = a.transpose() * a;
    let (epsilon, _, worst) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, "rip/supports", i as u64);
            let mut support = rand::seq::index::sample(&mut r, n, k).into_vec();
            support.sort_unstable();
            (support_epsilon(&gram, &support), i as u128, support)
        })
        .reduce(|| (f64::NEG_INFINITY, u128::MAX, Vec::new()), better);
    Ok(RipReport {
        s,
        epsilon,
        delta: delta_from_epsilon(epsilon),
        worst_support: worst,
        method: RipMethod::RandomizedSupports,
        supports_examined: samples as u64,
        provenance: None,
    })
}

/// Exact when the enumeration fits the budget, randomized otherwise.
pub fn rip_constant(a: &DMatrix<f64>, s: usize, seed: u64) -> Result<RipReport> {
    match rip_constant_exact(a, s) {
        Err(Error::BudgetExceeded { .. }) => rip_constant_randomized(a, s, RANDOMIZED_SUPPORTS, seed),
        other => other,
    }
}

/// Whether `a` satisfies RIP(delta, s).
pub fn rip_check(a: &DMatrix<f64>, s: usize, delta: f64) -> Result<(bool, RipReport)> {
    let report = rip_constant_exact(a, s)?;
    Ok((report.delta <= delta, report))
}

/// One resolution level: RIP(`delta`, `s`) at index `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MripLevel {
    pub level: usize,
    pub delta: f64,
    pub s: usize,
}

/// Geometric schedule `(2^{l/2} delta, 2^l s)` for `l = 1..=L`, `L = ceil(log2 n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MripLevels {
    pub num_levels: usize,
    pub levels: Vec<MripLevel>,
}

impl MripLevels {
    pub fn new(n: usize, s: usize, delta: f64) -> Self {
        let num_levels = ceil_log2(n);
        let levels = (1..=num_levels)
            .map(|l| {
                let half = (l / 2) as i32;
                let mut d = delta * 2f64.powi(half);
                if l % 2 == 1 {
                    d *= std::f64::consts::SQRT_2;
                }
                MripLevel {
                    level: l,
                    delta: d,
                    s: s << l,
                }
            })
            .collect();
        Self { num_levels, levels }
    }
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MripReport {
    pub passed: bool,
    pub s: usize,
    pub delta: f64,
    pub schedule: MripLevels,
    /// `(level, passed, report)` for each level.
    pub levels: Vec<(usize, bool, RipReport)>,
}

/// Multiresolution RIP: RIP(delta_l, s_l) at every level `l = 1..=L`.
/// Vacuously true when `n = 1` (no levels).
pub fn mrip_check(a: &DMatrix<f64>, s: usize, delta: f64) -> Result<MripReport> {
    let schedule = MripLevels::new(a.ncols(), s, delta);
    let mut levels = Vec::with_capacity(schedule.levels.len());
    for lvl in &schedule.levels {
        let (ok, report) = rip_check(a, lvl.s, lvl.delta).map_err(|e| Error::Level {
            level: lvl.level,
            source: Box::new(e),
        })?;
        levels.push((lvl.level, ok, report));
    }
    Ok(MripReport {
        passed: levels.iter().all(|(_, ok, _)| *ok),
        s,
        delta,
        schedule,
        levels,
    })
}

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn ceil_guarded(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative and finite, got {v}")))
    }
}

/// Smallest integer `m` with `m >= C Delta^2 s (ln^3 n ln m + eta) / delta^2`.
///
/// The right-hand side is increasing in `m`, so iterating `m <- ceil(rhs(m))`
/// from `m = 1` climbs monotonically to the least solution.
pub fn rip_sample_bound(n: usize, s: usize, delta: f64, eta: f64, coherence: f64, c: f64) -> Result<u64> {
    if n == 0 || s == 0 {
        return Err(Error::InvalidParameter("n and s must be positive".into()));
    }
    check_positive("delta", delta)?;
    check_nonnegative("eta", eta)?;
    check_positive("coherence", coherence)?;
    check_positive("C", c)?;
    let ln_n = (n as f64).ln();
    let factor = c * coherence * coherence * s as f64 / (delta * delta);
    let rhs = |m: u64| factor * (ln_n.powi(3) * (m as f64).ln() + eta);
    let mut m: u64 = 1;
    for _ in 0..100 {
        let next = ceil_guarded(rhs(m)).max(1);
        if next <= m {
            return Ok(m);
        }
        m = next;
    }
    Err(Error::NoConvergence { upper: m })
}

/// `ceil(C (1 + eta) Delta^2 s ln^4 n / delta_tilde^2)`.
pub fn mrip_sample_bound(n: f64, s: f64, delta_tilde: f64, eta: f64, coherence: f64, c: f64) -> Result<u64> {
    check_positive("n", n)?;
    check_positive("s", s)?;
    check_positive("delta_tilde", delta_tilde)?;
    check_nonnegative("eta", eta)?;
    check_positive("coherence", coherence)?;
    check_positive("C", c)?;
    let ln_n = n.ln();
    Ok(ceil_guarded(
        c * (1.0 + eta) * coherence * coherence * s * ln_n.powi(4) / (delta_tilde * delta_tilde),
    ))
}

/// RIP parameters sufficient for a random-sign discrete JL embedding of a finite set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwRequirements {
    pub sparsity: u64,
    pub delta: f64,
}

impl KwRequirements {
    pub fn capped(self, n: usize) -> Self {
        Self {
            sparsity: self.sparsity.min(n as u64),
            ..self
        }
    }
}

/// `s = ceil(40 (ln(4 |T|) + eta))`, `delta = epsilon / 4`.
pub fn kw_requirements(set_size: usize, epsilon: f64, eta: f64) -> Result<KwRequirements> {
    if set_size == 0 {
        return Err(Error::InvalidParameter("set size must be at least 1".into()));
    }
    check_positive("epsilon", epsilon)?;
    check_nonnegative("eta", eta)?;
    Ok(KwRequirements {
        sparsity: ceil_guarded(40.0 * ((4.0 * set_size as f64).ln() + eta)),
        delta: epsilon / 4.0,
    })
}

/// MRIP levels a matrix `H` must satisfy for `H D` to embed a set with
/// width `omega` and radius `rad` at distortion `max(delta, delta^2) rad^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MripTarget {
    /// `150 (1 + eta)`.
    pub sparsity: f64,
    pub delta_tilde: f64,
}

impl MripTarget {
    pub fn sparsity_ceil(&self) -> u64 {
        ceil_guarded(self.sparsity)
    }
}

pub fn theorem31_params(omega: f64, rad: f64, delta: f64, eta: f64, c: f64) -> Result<MripTarget> {
    check_positive("rad", rad)?;
    check_positive("C", c)?;
    check_nonnegative("omega", omega)?;
    check_nonnegative("eta", eta)?;
    check_positive("delta", delta)?;
    Ok(MripTarget {
        sparsity: 150.0 * (1.0 + eta),
        delta_tilde: delta * rad / (c * rad.max(omega)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_inverse() {
        assert_eq!(delta_from_epsilon(0.5), 0.5);
        assert_eq!(delta_from_epsilon(1.0), 1.0);
        assert_eq!(delta_from_epsilon(3.0), 3f64.sqrt());
        for eps in [0.0, 0.3, 1.0, 2.0, 9.0] {
            assert!((distortion_bound(delta_from_epsilon(eps)) - eps).abs() < 1e-15);
        }
    }

    #[test]
    fn small_exact_cases() {
        let id = DMatrix::<f64>::identity(5, 5);
        for s in 1..=5 {
            let r = rip_constant_exact(&id, s).unwrap();
            assert!(r.delta.abs() < 1e-12);
        }

        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let r = rip_constant_exact(&diag, 1).unwrap();
        assert!((r.epsilon - 3.0).abs() < 1e-12);
        assert!((r.delta - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.worst_support, vec![1]);
        assert!(!rip_check(&diag, 1, 1.0).unwrap().0);

        let zero = DMatrix::<f64>::zeros(3, 4);
        let r = rip_constant_exact(&zero, 1).unwrap();
        assert_eq!((r.epsilon, r.delta), (1.0, 1.0));

        assert!(rip_check(&id, 2, 0.1).unwrap().0);
    }

    #[test]
    fn budget_guard() {
        let a = DMatrix::<f64>::identity(40, 40);
        // C(40, 10) is about 8.5e8
        assert!(matches!(rip_constant_exact(&a, 10), Err(Error::BudgetExceeded { .. })));
        let r = rip_constant(&a, 10, 1).unwrap();
        assert_eq!(r.method, RipMethod::RandomizedSupports);
        assert!(r.epsilon.abs() < 1e-12);
    }

    #[test]
    fn colex_enumeration_visits_every_subset_once() {
        let (n, k) = (7, 3);
        let mut c: Vec<usize> = (0..k).collect();
        let mut seen = vec![c.clone()];
        while colex_next(&mut c, n) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len() as u128, binomial(n, k));
        for (rank, sub) in seen.iter().enumerate() {
            let mut u = vec![0; k];
            colex_unrank(rank as u128, k, &mut u);
            assert_eq!(&u, sub);
        }
        let mut sorted = seen.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), seen.len());
    }

    #[test]
    fn mrip_schedule() {
        let lv = MripLevels::new(8, 1, 0.2);
        assert_eq!(lv.num_levels, 3);
        let r2 = std::f64::consts::SQRT_2;
        let expected = [(r2 * 0.2, 2), (0.4, 4), (r2 * 0.4, 8)];
        for (got, want) in lv.levels.iter().zip(expected) {
            assert_eq!((got.delta, got.s), want);
        }
        assert!(lv.levels.last().unwrap().s >= 8);
        assert_eq!(MripLevels::new(5, 1, 0.1).num_levels, 3);
        assert_eq!(MripLevels::new(1, 1, 0.1).num_levels, 0);
    }

    #[test]
    fn mrip_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        let r = mrip_check(&id, 1, 0.1).unwrap();
        assert!(r.passed);
        assert_eq!(r.levels.len(), 2);

        let zero = DMatrix::<f64>::zeros(4, 4);
        let r = mrip_check(&zero, 1, 0.5).unwrap();
        assert!(!r.passed);
        assert!(!r.levels[0].1);
    }

    #[test]
    fn sample_bound_calculators() {
        assert_eq!(mrip_sample_bound(std::f64::consts::E, 1.0, 0.5, 0.0, 1.0, 1.0).unwrap(), 4);
        assert_eq!(mrip_sample_bound(std::f64::consts::E, 1.0, 0.3, 0.0, 1.0, 1.0).unwrap(), 12);
        let a = mrip_sample_bound(1024.0, 150.0, 0.2, 1.0, 1.0, 1.0).unwrap();
        let b = mrip_sample_bound(1024.0, 150.0, 0.1, 1.0, 1.0, 1.0).unwrap();
        assert!((b as f64 / a as f64 - 4.0).abs() < 1e-6);

        let k = kw_requirements(1, 0.4, 0.0).unwrap();
        assert_eq!(k.sparsity, 56);
        assert!((k.delta - 0.1).abs() < 1e-15);
        assert_eq!(k.capped(20).sparsity, 20);

        let t = theorem31_params(0.5, 1.0, 0.5, 0.0, 2.0).unwrap();
        assert_eq!(t.sparsity_ceil(), 150);
        assert!((t.delta_tilde - 0.25).abs() < 1e-15);
        let t = theorem31_params(10.0, 1.0, 0.5, 0.0, 1.0).unwrap();
        assert!((t.delta_tilde - 0.05).abs() < 1e-15);
        assert!(theorem31_params(1.0, 0.0, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn rip_sample_bound_scalings() {
        let base = rip_sample_bound(1024, 10, 0.5, 1.0, 1.0, 1.0).unwrap();
        let half = rip_sample_bound(1024, 10, 1.0, 1.0, 1.0, 1.0).unwrap();
        let ratio = base as f64 / half as f64;
        // log m shrinks with m, so the ratio sits slightly above 4
        assert!((4.0..5.0).contains(&ratio), "ratio {ratio}");
        let double_s = rip_sample_bound(1024, 20, 0.5, 1.0, 1.0, 1.0).unwrap();
        let ratio = double_s as f64 / base as f64;
        assert!((2.0..2.5).contains(&ratio), "ratio {ratio}");
        assert!(rip_sample_bound(1024, 10, 0.0, 1.0, 1.0, 1.0).is_err());
    }
}
