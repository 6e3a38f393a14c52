//! Experiments: empirical distortion over a set, JL checks, dimension
//! sweeps and timing benchmarks.
//!
//! Distortion here is always the squared-norm quantity
//! `| ||Ax||^2 - ||x||^2 |`, maximized over a finite sample of the set plus
//! the extreme points the family exposes. It is an empirical sup, a lower
//! bound on the true sup over a continuous set.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, SetFamily, WidthEstimate};
use crate::rip::distortion_bound;
use crate::rng;
use crate::sketch::{EnsembleKind, SketchOperator};

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `max | ||Ax||^2 - ||x||^2 |` over `num_points` samples of `family` and its extreme points.
pub fn empirical_distortion(family: &SetFamily, op: &SketchOperator, num_points: usize, seed: u64) -> Result<f64> {
    if family.n() != op.n() {
        return Err(Error::LengthMismatch {
            expected: op.n(),
            actual: family.n(),
        });
    }
    let extremes = family.extreme_points();
    let total = extremes.len() + num_points;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || (Vec::new(), vec![0.0; op.m()]),
            |(scratch, out), i| {
                let sampled;
                let x: &[f64] = if i < extremes.len() {
                    &extremes[i]
                } else {
                    sampled = family.sample_point(seed, (i - extremes.len()) as u64);
                    &sampled
                };
                op.apply_into(x, scratch, out).expect("dimensions checked");
                (sq_norm(out) - sq_norm(x)).abs()
            },
        )
        .collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JlOutcome {
    pub passed: bool,
    /// Point with the largest `| ||Ax|| / ||x|| - 1 |`; `None` if every point is zero.
    pub worst_index: Option<usize>,
    pub worst_ratio: f64,
}

/// Whether `(1 - delta) ||x|| <= ||Ax|| <= (1 + delta) ||x||` holds for every point.
pub fn jl_check(points: &[Vec<f64>], op: &SketchOperator, delta: f64) -> Result<JlOutcome> {
    if let Some(bad) = points.iter().find(|p| p.len() != op.n()) {
        return Err(Error::LengthMismatch {
            expected: op.n(),
            actual: bad.len(),
        });
    }
    let ratios: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| {
            let nx = sq_norm(x).sqrt();
            if nx == 0.0 {
                return None;
            }
            let y = op.apply(x).expect("dimensions checked");
            Some(sq_norm(&y).sqrt() / nx)
        })
        .collect();
    let mut outcome = JlOutcome {
        passed: true,
        worst_index: None,
        worst_ratio: 1.0,
    };
    for (i, r) in ratios.iter().enumerate() {
        let Some(r) = *r else { continue };
        if !(1.0 - delta <= r && r <= 1.0 + delta) {
            outcome.passed = false;
        }
        if outcome.worst_index.is_none() || (r - 1.0).abs() > (outcome.worst_ratio - 1.0).abs() {
            outcome.worst_index = Some(i);
            outcome.worst_ratio = r;
        }
    }
    Ok(outcome)
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            p50: quantile_sorted(&v, 0.5),
            p95: quantile_sorted(&v, 0.95),
            max: *v.last().expect("nonempty"),
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateFit {
            needed: 3,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("x values must not all coincide".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    /// Row sampling with replacement (SORS only).
    pub replacement: bool,
}

impl EnsembleSpec {
    pub fn build(&self, n: usize, m: usize, seed: u64) -> Result<SketchOperator> {
        match self.kind {
            EnsembleKind::Sors => SketchOperator::sors(n, m, seed, self.replacement),
            EnsembleKind::Gaussian => SketchOperator::build_gaussian(n, m, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Sampled points per trial, on top of the family's extreme points.
    pub num_points: usize,
    /// Confidence parameter used in the predicted bound.
    pub eta: f64,
    /// Absolute constant in the SORS bound.
    pub constant_c: f64,
    pub width_trials: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            num_points: 200,
            eta: 1.0,
            constant_c: 1.0,
            width_trials: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub family: SetFamily,
    pub ensemble: EnsembleSpec,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub num_test_points: usize,
    /// Per-trial empirical sup distortion.
    pub max_distortion: Vec<f64>,
    pub quantiles: Quantiles,
    /// Distortion implied by `m` through the matching dimension bound.
    pub delta_implied: f64,
    /// `max(delta, delta^2) rad(T)^2`.
    pub predicted_bound: f64,
    pub seed: u64,
    pub op_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<DistortionReport>,
    pub width: WidthEstimate,
    pub rad: f64,
    /// Least-squares slope of `ln p95` against `ln m`.
    pub slope: f64,
    pub config: SweepConfig,
}

impl SweepResult {
    /// CSV with columns `m,p50,p95,max,predicted_bound`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m", "p50", "p95", "max", "predicted_bound"])?;
        for r in &self.reports {
            w.write_record([
                r.m.to_string(),
                r.quantiles.p50.to_string(),
                r.quantiles.p95.to_string(),
                r.quantiles.max.to_string(),
                r.predicted_bound.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Per-trial empirical distortion across a grid of sketch dimensions, with a log-log slope fit.
pub fn distortion_sweep(
    family: &SetFamily,
    ensemble: EnsembleSpec,
    m_grid: &[usize],
    trials: usize,
    seed: u64,
    config: SweepConfig,
) -> Result<SweepResult> {
    if m_grid.len() < 3 {
        return Err(Error::DegenerateFit {
            needed: 3,
            got: m_grid.len(),
        });
    }
    if m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("m grid must be strictly increasing".into()));
    }
    if trials < 20 {
        return Err(Error::InvalidParameter(format!("need at least 20 trials, got {trials}")));
    }
    let n = family.n();
    let rad = family.max_norm();
    let width = geometry::width_estimate(family, config.width_trials, rng::child_seed(seed, "sweep/width", 0))?;
    let omega = width.omega_hat.max(0.0);

    let mut reports = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let op_seeds: Vec<u64> = (0..trials as u64)
            .map(|t| rng::child_seed(seed, &format!("sweep/{}/m{m}", ensemble.kind), t))
            .collect();
        let per_trial: Vec<f64> = op_seeds
            .iter()
            .enumerate()
            .map(|(t, &op_seed)| {
                let op = ensemble.build(n, m, op_seed)?;
                empirical_distortion(family, &op, config.num_points, rng::child_seed(seed, "sweep/points", t as u64))
            })
            .collect::<Result<_>>()?;
        let delta_implied = match ensemble.kind {
            EnsembleKind::Gaussian => geometry::gordon_delta_for_m(omega, config.eta, m),
            EnsembleKind::Sors => {
                geometry::sors_delta_for_m(omega, rad, config.eta, m, n as f64, 1.0, config.constant_c)
            }
        };
        reports.push(DistortionReport {
            family: family.clone(),
            ensemble,
            m,
            n,
            trials,
            num_test_points: config.num_points + family.extreme_points().len(),
            quantiles: Quantiles::of(&per_trial),
            max_distortion: per_trial,
            delta_implied,
            predicted_bound: distortion_bound(delta_implied) * rad * rad,
            seed,
            op_seeds,
        });
    }
    let ms: Vec<f64> = reports.iter().map(|r| r.m as f64).collect();
    let p95: Vec<f64> = reports.iter().map(|r| r.quantiles.p95).collect();
    let slope = loglog_slope(&ms, &p95)?;
    Ok(SweepResult {
        reports,
        width,
        rad,
        slope,
        config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub ensemble: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    /// Fitted exponent of median time against `n`, per ensemble (needs 3+ sizes).
    pub sors_exponent: Option<f64>,
    pub gaussian_exponent: Option<f64>,
}

impl BenchResult {
    pub fn median(&self, kind: EnsembleKind, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.ensemble == kind && r.n == n)
            .map(|r| r.median_seconds)
    }

    /// CSV with columns `ensemble,n,m,median_seconds`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["ensemble", "n", "m", "median_seconds"])?;
        for r in &self.rows {
            w.write_record([
                r.ensemble.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                format!("{:e}", r.median_seconds),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn median_apply_seconds(op: &SketchOperator, x: &[f64], trials: usize) -> f64 {
    let mut scratch = Vec::with_capacity(op.effective_dim());
    let mut out = vec![0.0; op.m()];
    op.apply_into(x, &mut scratch, &mut out).expect("sizes match");
    let mut times: Vec<f64> = (0..trials)
        .map(|_| {
            let start = Instant::now();
            op.apply_into(std::hint::black_box(x), &mut scratch, &mut out)
                .expect("sizes match");
            std::hint::black_box(&out);
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    quantile_sorted(&times, 0.5)
}

/// Median single-vector apply time for SORS and Gaussian operators over `n_grid`.
/// `m` is clamped to `n` for sizes smaller than `m`.
pub fn bench(n_grid: &[usize], m: usize, trials: usize, seed: u64) -> Result<BenchResult> {
    if let Some(bad) = n_grid.iter().find(|n| !n.is_power_of_two()) {
        return Err(Error::NotPowerOfTwo(*bad));
    }
    if trials == 0 || m == 0 {
        return Err(Error::InvalidParameter("trials and m must be positive".into()));
    }
    let mut rows = Vec::with_capacity(2 * n_grid.len());
    for &n in n_grid {
        let mm = m.min(n);
        let mut r = rng::stream(seed, "bench/x", n as u64);
        let x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let sors = SketchOperator::sors(n, mm, seed, true)?;
        rows.push(BenchRow {
            ensemble: EnsembleKind::Sors,
            n,
            m: mm,
            median_seconds: median_apply_seconds(&sors, &x, trials),
        });
        drop(sors);
        let gauss = SketchOperator::build_gaussian(n, mm, seed)?;
        rows.push(BenchRow {
            ensemble: EnsembleKind::Gaussian,
            n,
            m: mm,
            median_seconds: median_apply_seconds(&gauss, &x, trials),
        });
    }
    let exponent = |kind: EnsembleKind| {
        let (ns, ts): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.ensemble == kind)
            .map(|r| (r.n as f64, r.median_seconds.max(1e-12)))
            .unzip();
        loglog_slope(&ns, &ts).ok()
    };
    Ok(BenchResult {
        sors_exponent: exponent(EnsembleKind::Sors),
        gaussian_exponent: exponent(EnsembleKind::Gaussian),
        rows,
    })
}
