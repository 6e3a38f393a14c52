//! Successive covers and an upper estimate of the gamma_2 functional.
//!
//! Level `l` partitions the point set into at most `N_l` cells (`N_0 = 1`,
//! `N_l = 2^(2^l)`), each cell contained in one cell of level `l - 1`. Cells
//! are grown by farthest-point seeding inside their parent cell and the
//! cover `T_l` holds the minimum-enclosing-ball centre of every cell. While
//! a level is not yet exact the previous cover is kept inside `T_l`, so
//! `e_l(v) = dist(v, T_l)` never increases with `l`; that costs `|T_{l-1}|`
//! of the `N_l` slots. Once `N_l` reaches the number of points every cell is
//! a singleton and the hierarchy stops.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SetFamily;

/// Deepest level accepted by [`build_covers`].
pub const MAX_LEVEL: usize = 6;

/// Default net size when a continuous family is discretized.
pub const DEFAULT_NET_SIZE: usize = 4096;

const MEB_TOL: f64 = 1e-9;
const MEB_MAX_ITER: usize = 20_000;

/// `N_l`: 1 at level 0, `2^(2^l)` afterwards.
pub fn level_capacity(level: usize) -> u128 {
    match level {
        0 => 1,
        l if l <= MAX_LEVEL => 1u128 << (1u32 << l),
        _ => u128::MAX,
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Approximate minimum enclosing ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    /// Largest distance from `center` to a point, so the ball does enclose the set.
    pub radius: f64,
}

/// Minimum enclosing ball by Frank–Wolfe iterations with away steps on the
/// dual simplex problem. Stops once the radius is within a factor
/// `1 + 1e-9` of the dual lower bound.
pub fn enclosing_ball(points: &[&[f64]]) -> Result<Ball> {
    let first = *points.first().ok_or(Error::Empty)?;
    let dim = first.len();
    let farthest = |c: &[f64]| {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, c);
            if d > best.1 {
                best = (i, d);
            }
        }
        best
    };

    let (a, _) = farthest(first);
    let (b, _) = farthest(points[a]);
    let mut weights = vec![0.0; points.len()];
    weights[a] += 0.5;
    weights[b] += 0.5;
    let mut center: Vec<f64> = points[a].iter().zip(points[b]).map(|(x, y)| 0.5 * x + 0.5 * y).collect();

    for _ in 0..MEB_MAX_ITER {
        let (j, far) = farthest(&center);
        // dual objective sum_i u_i ||p_i - c||^2 and the closest active point
        let mut gamma = 0.0;
        let mut near = (usize::MAX, f64::INFINITY);
        for (i, (&w, p)) in weights.iter().zip(points).enumerate() {
            if w > 0.0 {
                let d = dist2(p, &center);
                gamma += w * d;
                if d < near.1 {
                    near = (i, d);
                }
            }
        }
        if gamma <= 0.0 {
            break;
        }
        let up = far / gamma - 1.0;
        let down = 1.0 - near.1 / gamma;
        if up.max(down) <= 2.0 * MEB_TOL {
            break;
        }
        if up >= down {
            let step = up / (2.0 * (1.0 + up));
            weights.iter_mut().for_each(|w| *w *= 1.0 - step);
            weights[j] += step;
            for (c, p) in center.iter_mut().zip(points[j]) {
                *c = (1.0 - step) * *c + step * p;
            }
        } else {
            let k = near.0;
            let wk = weights[k];
            let step = if wk >= 1.0 {
                down / (2.0 * (1.0 - down))
            } else {
                (down / (2.0 * (1.0 - down))).min(wk / (1.0 - wk))
            };
            weights.iter_mut().for_each(|w| *w *= 1.0 + step);
            weights[k] -= step;
            if weights[k] < 1e-15 {
                weights[k] = 0.0;
            }
            for (c, p) in center.iter_mut().zip(points[k]) {
                *c = (1.0 + step) * *c - step * p;
            }
        }
    }
    debug_assert_eq!(center.len(), dim);
    let radius = farthest(&center).1.max(0.0).sqrt();
    Ok(Ball { center, radius })
}

/// Radius of the approximate minimum enclosing ball.
pub fn enclosing_radius(points: &[Vec<f64>]) -> Result<f64> {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    Ok(enclosing_ball(&refs)?.radius)
}

/// One level of the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub level: usize,
    /// The cover `T_l`.
    pub centers: Vec<Vec<f64>>,
    /// Partition cells as indices into the build points.
    pub cells: Vec<Vec<usize>>,
    /// For each cell, the index of the enclosing cell one level up (0 at level 0).
    pub parents: Vec<usize>,
    /// `max_v e_l(v)` over the build points.
    pub max_distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverHierarchy {
    pub levels: Vec<Cover>,
    /// `e_l(v)` for every build point, indexed `[level][point]`.
    pub distortions: Vec<Vec<f64>>,
    /// `sup_v sum_l 2^(l/2) e_l(v)` over the build points.
    pub gamma2_upper: f64,
}

/// Greedy successive covers of `points` up to `max_level` (at most [`MAX_LEVEL`]).
pub fn build_covers(points: &[Vec<f64>], max_level: usize) -> Result<CoverHierarchy> {
    let dim = points.first().ok_or(Error::Empty)?.len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    if max_level > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "max_level {max_level} exceeds {MAX_LEVEL}"
        )));
    }
    let count = points.len();

    // Farthest-point seeding starts from the largest-norm point, lowest index on ties.
    let first_seed = (0..count)
        .map(|i| (i, points[i].iter().map(|v| v * v).sum::<f64>()))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;

    let mut seeds: Vec<usize> = vec![first_seed];
    // seed slot of each point and its squared distance to that seed
    let mut owner = vec![0usize; count];
    let mut owner_d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[first_seed])).collect();

    let all: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    let root = enclosing_ball(&all)?;
    let mut levels = vec![Cover {
        level: 0,
        centers: vec![root.center],
        cells: vec![(0..count).collect()],
        parents: vec![0],
        max_distortion: 0.0,
    }];
    // cell of each point at the previous level
    let mut prev_cell = vec![0usize; count];

    for level in 1..=max_level {
        let capacity = level_capacity(level);
        let prev = levels.last().expect("level 0 exists");
        if count as u128 <= capacity {
            levels.push(Cover {
                level,
                centers: points.to_vec(),
                cells: (0..count).map(|i| vec![i]).collect(),
                parents: prev_cell.clone(),
                max_distortion: 0.0,
            });
            break;
        }
        let target = (capacity - prev.centers.len() as u128).min(count as u128) as usize;

        // A new seed only captures points of its own previous-level cell, which
        // keeps the partitions nested.
        while seeds.len() < target {
            let (far, d2) = owner_d2
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
            if d2 <= 0.0 {
                break;
            }
            let slot = seeds.len();
            let cell = prev_cell[far];
            seeds.push(far);
            for i in 0..count {
                if prev_cell[i] == cell {
                    let d = dist2(&points[i], &points[far]);
                    if d < owner_d2[i] {
                        owner_d2[i] = d;
                        owner[i] = slot;
                    }
                }
            }
        }

        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); seeds.len()];
        for (i, &o) in owner.iter().enumerate() {
            cells[o].push(i);
        }
        let keep: Vec<usize> = (0..seeds.len()).filter(|&s| !cells[s].is_empty()).collect();
        let cells: Vec<Vec<usize>> = keep.iter().map(|&s| std::mem::take(&mut cells[s])).collect();
        let parents: Vec<usize> = cells.iter().map(|c| prev_cell[c[0]]).collect();

        let mut centers: Vec<Vec<f64>> = cells
            .iter()
            .map(|c| {
                let refs: Vec<&[f64]> = c.iter().map(|&i| points[i].as_slice()).collect();
                enclosing_ball(&refs).map(|b| b.center)
            })
            .collect::<Result<_>>()?;
        centers.extend(prev.centers.iter().cloned());

        for (ci, c) in cells.iter().enumerate() {
            for &i in c {
                prev_cell[i] = ci;
            }
        }
        levels.push(Cover {
            level,
            centers,
            cells,
            parents,
            max_distortion: 0.0,
        });
    }

    let distortions: Vec<Vec<f64>> = levels
        .iter()
        .map(|cover| points.par_iter().map(|p| distance_to_cover(p, &cover.centers)).collect())
        .collect();
    for (cover, e) in levels.iter_mut().zip(&distortions) {
        cover.max_distortion = e.iter().copied().fold(0.0, f64::max);
    }
    let gamma2_upper = (0..count)
        .map(|i| {
            distortions
                .iter()
                .enumerate()
                .map(|(l, e)| level_weight(l) * e[i])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);

    Ok(CoverHierarchy {
        levels,
        distortions,
        gamma2_upper,
    })
}

fn level_weight(level: usize) -> f64 {
    2f64.powf(level as f64 / 2.0)
}

fn distance_to_cover(v: &[f64], centers: &[Vec<f64>]) -> f64 {
    centers
        .iter()
        .map(|c| dist2(v, c))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Smallest level whose capacity covers `count` points, capped at [`MAX_LEVEL`].
pub fn default_max_level(count: usize) -> usize {
    (0..=MAX_LEVEL)
        .find(|&l| level_capacity(l) >= count as u128)
        .unwrap_or(MAX_LEVEL)
}

/// `sup_v sum_l 2^(l/2) dist(v, T_l)` over `test_points`.
pub fn gamma2_estimate(hierarchy: &CoverHierarchy, test_points: &[Vec<f64>]) -> Result<f64> {
    let dim = hierarchy.levels[0].centers[0].len();
    if let Some(bad) = test_points.iter().find(|p| p.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    let sums: Vec<f64> = test_points
        .par_iter()
        .map(|v| {
            hierarchy
                .levels
                .iter()
                .map(|cover| level_weight(cover.level) * distance_to_cover(v, &cover.centers))
                .sum()
        })
        .collect();
    Ok(sums.into_iter().fold(0.0, f64::max))
}

/// A finite net of `size` sampled members of `family`.
pub fn net_from_family(family: &SetFamily, size: usize, seed: u64) -> Vec<Vec<f64>> {
    match family {
        SetFamily::FinitePoints { points, .. } => points.clone(),
        _ => (0..size as u64).map(|i| family.sample_point(seed, i)).collect(),
    }
}

/// JSON-friendly summary: per-level sizes and worst distortion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub capacity: String,
    pub cells: usize,
    pub centers: Vec<Vec<f64>>,
    pub max_distortion: f64,
}

impl CoverHierarchy {
    pub fn summary(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .map(|c| LevelSummary {
                level: c.level,
                capacity: level_capacity(c.level).to_string(),
                cells: c.cells.len(),
                centers: c.centers.clone(),
                max_distortion: c.max_distortion,
            })
            .collect()
    }
}
