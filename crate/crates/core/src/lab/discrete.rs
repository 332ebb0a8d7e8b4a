//! Exact finite-state models: discretized targets and their Gibbs transition
//! matrices.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bounds::coupon_block_length;
use crate::conditional::Grid1D;
use crate::error::{Error, Result};
use crate::target::TargetSpec;

/// Weight floor applied before renormalizing an underflowed discretization.
pub const PI_FLOOR: f64 = 1e-300;

/// A 1- or 2-dimensional target reduced to a finite product grid.
///
/// For dimension 2, state `(i, j)` has flat index `i * n_1 + j` where `n_1`
/// is the size of the coordinate-1 grid.
#[derive(Debug, Clone)]
pub struct DiscreteTarget {
    grids: Vec<Arc<Grid1D>>,
    pi: Vec<f64>,
    floored: bool,
}

impl DiscreteTarget {
    pub fn dim(&self) -> usize {
        self.grids.len()
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn grids(&self) -> &[Arc<Grid1D>] {
        &self.grids
    }

    /// Whether any weight underflowed and was floored at [`PI_FLOOR`].
    pub fn floored(&self) -> bool {
        self.floored
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        self.grids[axis].len()
    }

    /// Multi-index of a flat state index.
    pub fn unflatten(&self, idx: usize) -> Vec<usize> {
        match self.grids.len() {
            1 => vec![idx],
            2 => {
                let n1 = self.grids[1].len();
                vec![idx / n1, idx % n1]
            }
            _ => unreachable!(),
        }
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        match self.grids.len() {
            1 => multi[0],
            2 => multi[0] * self.grids[1].len() + multi[1],
            _ => unreachable!(),
        }
    }

    /// Coordinates of a state.
    pub fn state_coords(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.grids[axis].points()[i])
            .collect()
    }

    /// Euclidean distance between two states.
    pub fn state_distance(&self, a: usize, b: usize) -> f64 {
        let xa = self.state_coords(a);
        let xb = self.state_coords(b);
        xa.iter()
            .zip(&xb)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }

    /// Mass of a state set.
    pub fn mass(&self, states: impl IntoIterator<Item = usize>) -> f64 {
        states.into_iter().map(|s| self.pi[s]).sum()
    }
}

/// Cell masses of `exp(-U)` on a product grid via per-axis trapezoid weights,
/// normalized; weights that underflow are floored at [`PI_FLOOR`] and the
/// result is flagged.
pub fn discretize_target(target: &TargetSpec, resolution: &[usize]) -> Result<DiscreteTarget> {
    let d = target.dim();
    if d > 2 {
        return Err(Error::InvalidArgument(format!(
            "exact discretization supports dimension <= 2, got {d}"
        )));
    }
    if resolution.len() != d {
        return Err(Error::InvalidArgument(format!(
            "{} resolutions for dimension {d}",
            resolution.len()
        )));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::InvalidArgument("resolution must be >= 2 per axis".into()));
    }
    let grids: Vec<Arc<Grid1D>> = (0..d)
        .map(|k| {
            let (lo, hi) = target.interval(k);
            Grid1D::uniform(lo, hi, resolution[k]).map(Arc::new)
        })
        .collect::<Result<_>>()?;
    let cell: Vec<Vec<f64>> = grids.iter().map(|g| g.quadrature_weights()).collect();

    let mut neg_u = Vec::new();
    match d {
        1 => {
            for &t in grids[0].points() {
                neg_u.push(-target.potential_eval(&[t])?);
            }
        }
        2 => {
            for &t in grids[0].points() {
                for &u in grids[1].points() {
                    neg_u.push(-target.potential_eval(&[t, u])?);
                }
            }
        }
        _ => unreachable!(),
    }
    let max_phi = neg_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max_phi.is_finite() {
        return Err(Error::DegenerateSlice);
    }
    let mut pi = Vec::with_capacity(neg_u.len());
    match d {
        1 => {
            for (i, phi) in neg_u.iter().enumerate() {
                pi.push(cell[0][i] * (phi - max_phi).exp());
            }
        }
        2 => {
            let n1 = grids[1].len();
            for (flat, phi) in neg_u.iter().enumerate() {
                let (i, j) = (flat / n1, flat % n1);
                pi.push(cell[0][i] * cell[1][j] * (phi - max_phi).exp());
            }
        }
        _ => unreachable!(),
    }
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSlice);
    }
    let mut floored = false;
    for w in pi.iter_mut() {
        *w /= total;
        if *w < PI_FLOOR {
            *w = PI_FLOOR;
            floored = true;
        }
    }
    if floored {
        let total: f64 = pi.iter().sum();
        for w in pi.iter_mut() {
            *w /= total;
        }
    }
    Ok(DiscreteTarget { grids, pi, floored })
}

/// A row-stochastic transition matrix over the states of a [`DiscreteTarget`].
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    mat: DMatrix<f64>,
    reversible_wrt_pi: bool,
}

impl TransitionMatrix {
    /// Validates row sums (1e-10) and, when `expect_reversible`, detailed
    /// balance against `pi` (1e-10 relative).
    pub fn new(mat: DMatrix<f64>, pi: &[f64], expect_reversible: bool) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n || pi.len() != n {
            return Err(Error::InvalidArgument("matrix shape mismatch".into()));
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = mat[(i, j)];
                if !(v >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "negative entry at ({i}, {j}): {v}"
                    )));
                }
                row_sum += v;
            }
            if (row_sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "row {i} sums to {row_sum}"
                )));
            }
        }
        let reversible = detailed_balance_max_violation(&mat, pi) <= 1e-10;
        if expect_reversible && !reversible {
            return Err(Error::NotReversible);
        }
        Ok(Self {
            mat,
            reversible_wrt_pi: reversible,
        })
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.mat.row(i).iter().cloned().collect()
    }

    pub fn reversible_wrt_pi(&self) -> bool {
        self.reversible_wrt_pi
    }
}

/// Largest relative detailed-balance violation `|pi_i P_ij - pi_j P_ji|`.
pub fn detailed_balance_max_violation(mat: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = mat.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = pi[i] * mat[(i, j)];
            let b = pi[j] * mat[(j, i)];
            let scale = a.abs().max(b.abs()).max(1e-300);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

/// The exact Gibbs kernels of a discretized target.
#[derive(Debug, Clone)]
pub struct GibbsMatrices {
    /// One single-coordinate kernel per axis; each row is the renormalized
    /// slice of pi along that axis's line through the state.
    pub p_coord: Vec<TransitionMatrix>,
    /// Systematic scan: coordinate 1 acts first.
    pub p_ss: TransitionMatrix,
    /// Random scan: the uniform mixture of the coordinate kernels.
    pub p_rs: TransitionMatrix,
    /// Random scan iterated `N_d = ceil(4 d ln d)` times (absent for d = 1).
    pub p_rs_coupon: Option<TransitionMatrix>,
    /// Number of iterations in `p_rs_coupon`.
    pub coupon_n: Option<usize>,
    /// Multiplicative reversibilization: forward then backward sweep.
    pub p_rev: TransitionMatrix,
}

/// Builds the exact conditional kernels of a discretized target.
pub fn build_gibbs_matrices(disc: &DiscreteTarget, cap: Option<usize>) -> Result<GibbsMatrices> {
    let cap = cap.unwrap_or(4096);
    let n = disc.n_states();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let d = disc.dim();
    let pi = disc.pi();

    let mut p_coord_mats: Vec<DMatrix<f64>> = Vec::with_capacity(d);
    for axis in 0..d {
        let mut m = DMatrix::<f64>::zeros(n, n);
        match d {
            1 => {
                // single line: every row equals pi
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = pi[j];
                    }
                }
            }
            2 => {
                let n1 = disc.axis_len(1);
                let n0 = disc.axis_len(0);
                if axis == 0 {
                    // resample i holding j: line over i at fixed j
                    for j in 0..n1 {
                        let line_sum: f64 = (0..n0).map(|i| pi[i * n1 + j]).sum();
                        for i in 0..n0 {
                            for i2 in 0..n0 {
                                m[(i * n1 + j, i2 * n1 + j)] = pi[i2 * n1 + j] / line_sum;
                            }
                        }
                    }
                } else {
                    for i in 0..n0 {
                        let line_sum: f64 = (0..n1).map(|j| pi[i * n1 + j]).sum();
                        for j in 0..n1 {
                            for j2 in 0..n1 {
                                m[(i * n1 + j, i * n1 + j2)] = pi[i * n1 + j2] / line_sum;
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        p_coord_mats.push(m);
    }

    // coordinate 1 acts first: with row-stochastic matrices and row vectors
    // mu' = mu P, the first-acting factor is the leftmost in the product
    let mut ss = p_coord_mats[0].clone();
    for m in &p_coord_mats[1..] {
        ss = &ss * m;
    }

    let mut rev = p_coord_mats[0].clone();
    for m in &p_coord_mats[1..] {
        rev = &rev * m;
    }
    for m in p_coord_mats[..d.saturating_sub(1)].iter().rev() {
        rev = &rev * m;
    }

    let mut rs = DMatrix::<f64>::zeros(n, n);
    for m in &p_coord_mats {
        rs += m;
    }
    rs /= d as f64;

    let (p_rs_coupon, coupon_n) = if d >= 2 {
        let nd = coupon_block_length(d)?;
        let mut pow = rs.clone();
        for _ in 1..nd {
            pow = &pow * &rs;
        }
        (
            Some(TransitionMatrix::new(normalize_rows(pow), pi, true)?),
            Some(nd),
        )
    } else {
        (None, None)
    };

    Ok(GibbsMatrices {
        p_coord: p_coord_mats
            .into_iter()
            .map(|m| TransitionMatrix::new(m, pi, true))
            .collect::<Result<_>>()?,
        p_ss: TransitionMatrix::new(ss, pi, d == 1)?,
        p_rs: TransitionMatrix::new(rs, pi, true)?,
        p_rs_coupon,
        coupon_n,
        p_rev: TransitionMatrix::new(rev, pi, true)?,
    })
}

/// Clears accumulated rounding from repeated matrix products.
fn normalize_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).iter().sum();
        if s > 0.0 {
            for j in 0..m.ncols() {
                m[(i, j)] /= s;
            }
        }
    }
    m
}
