//! One-dimensional conditional machinery: gridded conditional slices,
//! inverse-CDF sampling, total variation distance, and maximal coupling.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::target::TargetSpec;

/// Strictly increasing grid spanning one coordinate of the target box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("points must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi; // pin the right endpoint exactly
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Trapezoid quadrature weight of each point (half cells at the ends).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        let p = &self.points;
        (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { p[i] - p[i - 1] };
                let right = if i == n - 1 { 0.0 } else { p[i + 1] - p[i] };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// One grid per coordinate of a target, shared by the kernel machinery.
#[derive(Debug, Clone)]
pub struct GridSet {
    grids: Vec<Arc<Grid1D>>,
}

impl GridSet {
    /// Uniform grids with `points_per_axis` points spanning each box interval.
    pub fn uniform(target: &TargetSpec, points_per_axis: usize) -> Result<Self> {
        let grids = (0..target.dim())
            .map(|k| {
                let (lo, hi) = target.interval(k);
                Grid1D::uniform(lo, hi, points_per_axis).map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grids })
    }

    pub fn grid(&self, k: usize) -> &Arc<Grid1D> {
        &self.grids[k]
    }

    pub fn dim(&self) -> usize {
        self.grids.len()
    }
}

/// Normalized probability weights on a grid (trapezoid-cell masses).
///
/// Weight `i` is the mass of the trapezoid cell centered at `t_i`, so the
/// piecewise-linear CDF takes the value `sum_{j <= i} w_j - w_i / 2` at the
/// knot `t_i` (the midpoint of cell `i`'s mass).
#[derive(Debug, Clone)]
pub struct DiscretePMF {
    grid: Arc<Grid1D>,
    weights: Vec<f64>,
    /// CDF knot values at the grid points (midpoint convention).
    cdf: Vec<f64>,
}

impl DiscretePMF {
    pub fn new(grid: Arc<Grid1D>, raw_weights: Vec<f64>) -> Result<Self> {
        if raw_weights.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for a grid of {} points",
                raw_weights.len(),
                grid.len()
            )));
        }
        if raw_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = raw_weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateSlice);
        }
        let weights: Vec<f64> = raw_weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cdf.push(acc - 0.5 * w);
        }
        Ok(Self { grid, weights, cdf })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mass of the set of grid points selected by `keep`.
    pub fn mass_where(&self, mut keep: impl FnMut(f64) -> bool) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| keep(**t))
            .map(|(_, w)| w)
            .sum()
    }

    fn same_grid(&self, other: &DiscretePMF) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.points() == other.grid.points()
    }

    /// Dumps `point,weight` rows for debugging.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "point,weight")?;
        for (t, w) in self.grid.points().iter().zip(&self.weights) {
            writeln!(out, "{t:.17e},{w:.17e}")?;
        }
        Ok(())
    }
}

/// A conditional slice: the gridded conditional law plus the log of its
/// unnormalized mass `log int exp(-U) dt` over the slice, which is the
/// negated marginal potential value used by the regularity checks.
#[derive(Debug, Clone)]
pub struct SliceConditional {
    pub pmf: DiscretePMF,
    pub log_normalizer: f64,
}

/// Conditional law of coordinate `k` given the other coordinates of `x`,
/// discretized on `grid` with trapezoid cell integration of `exp(-U)`.
///
/// The slice maximum of `-U` is subtracted before exponentiating, so very
/// negative potentials do not underflow.
pub fn slice_conditional(
    target: &TargetSpec,
    k: usize,
    x: &[f64],
    grid: &Arc<Grid1D>,
) -> Result<SliceConditional> {
    let d = target.dim();
    if k >= d {
        return Err(Error::InvalidArgument(format!(
            "coordinate index {k} out of range for dimension {d}"
        )));
    }
    let (lo, hi) = target.interval(k);
    if grid.lo() != lo || grid.hi() != hi {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] does not span coordinate {k}'s box interval [{lo}, {hi}]",
            grid.lo(),
            grid.hi()
        )));
    }
    let mut scratch = x.to_vec();
    let points = grid.points();
    let n = points.len();
    let mut neg_u = Vec::with_capacity(n);
    let mut max_phi = f64::NEG_INFINITY;
    for &t in points {
        scratch[k] = t;
        let phi = -target.potential_eval(&scratch)?;
        if phi > max_phi {
            max_phi = phi;
        }
        neg_u.push(phi);
    }
    let cell = grid.quadrature_weights();
    let mut raw = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        let w = cell[i] * (neg_u[i] - max_phi).exp();
        total += w;
        raw.push(w);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateSlice);
    }
    let log_normalizer = max_phi + total.ln();
    Ok(SliceConditional {
        pmf: DiscretePMF::new(Arc::clone(grid), raw)?,
        log_normalizer,
    })
}

/// Point where the piecewise-linear CDF first reaches `u`.
///
/// Ties on a flat stretch resolve to the smallest such point; `u = 0` maps to
/// the left endpoint of the first positive-mass cell, and `u` at or beyond
/// the last knot maps to the last positive-mass point.
pub fn sample_inverse_cdf(pmf: &DiscretePMF, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!(
            "inverse-cdf argument {u} outside [0, 1]"
        )));
    }
    let points = pmf.grid.points();
    if u == 0.0 {
        let first = pmf
            .weights
            .iter()
            .position(|w| *w > 0.0)
            .ok_or(Error::DegenerateSlice)?;
        return Ok(if first == 0 { points[0] } else { points[first - 1] });
    }
    if u >= *pmf.cdf.last().unwrap() {
        let last = pmf
            .weights
            .iter()
            .rposition(|w| *w > 0.0)
            .ok_or(Error::DegenerateSlice)?;
        return Ok(points[last]);
    }
    let j = pmf.cdf.partition_point(|c| *c < u);
    if j == 0 {
        // inside the left half-cell of the first point
        return Ok(points[0]);
    }
    let prev = pmf.cdf[j - 1];
    let seg = pmf.cdf[j] - prev;
    if seg <= 0.0 {
        return Ok(points[j - 1]);
    }
    Ok(points[j - 1] + (u - prev) / seg * (points[j] - points[j - 1]))
}

/// Total variation distance `0.5 * sum |p_i - q_i|` between two laws on the
/// same grid.
pub fn tv_distance_pmf(p: &DiscretePMF, q: &DiscretePMF) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    Ok(0.5
        * p.weights
            .iter()
            .zip(&q.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

fn sample_index_from(weights: impl Iterator<Item = f64>, total: f64, u: f64) -> usize {
    let level = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if acc >= level && w > 0.0 {
            return i;
        }
    }
    last
}

/// One draw `(w, w', met)` from the maximal coupling of `p` and `q`.
///
/// With probability `sum_i min(p_i, q_i)` a common grid point is drawn from
/// the normalized overlap (then `w == w'` exactly); otherwise `w` and `w'`
/// come independently from the normalized positive parts of `p - q` and
/// `q - p`. Marginals are `p` and `q`, and the meeting probability equals
/// `1 - tv_distance_pmf(p, q)` exactly on the grid.
pub fn maximal_coupling_sample<R: Rng + ?Sized>(
    p: &DiscretePMF,
    q: &DiscretePMF,
    rng: &mut R,
) -> Result<(f64, f64, bool)> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    let points = p.grid.points();
    let overlap: f64 = p
        .weights
        .iter()
        .zip(&q.weights)
        .map(|(a, b)| a.min(*b))
        .sum();
    let residual = 1.0 - overlap;
    let select: f64 = rng.random();
    if select < overlap || residual <= 0.0 {
        let u: f64 = rng.random();
        let idx = sample_index_from(
            p.weights.iter().zip(&q.weights).map(|(a, b)| a.min(*b)),
            overlap,
            u,
        );
        let t = points[idx];
        Ok((t, t, true))
    } else {
        let up: f64 = rng.random();
        let uq: f64 = rng.random();
        let ip = sample_index_from(
            p.weights.iter().zip(&q.weights).map(|(a, b)| (a - b).max(0.0)),
            residual,
            up,
        );
        let iq = sample_index_from(
            p.weights.iter().zip(&q.weights).map(|(a, b)| (b - a).max(0.0)),
            residual,
            uq,
        );
        Ok((points[ip], points[iq], false))
    }
}
