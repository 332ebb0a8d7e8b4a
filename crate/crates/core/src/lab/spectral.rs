//! Brute-force conductance, spectral gaps, TV decay curves, and the discrete
//! Rayleigh-quotient diagnostic.

use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lab::discrete::{DiscreteTarget, TransitionMatrix};

/// How a conductance value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConductanceMode {
    /// Exact minimum over every subset with `pi(S) <= 1/2`.
    Exhaustive,
    /// Minimum over spectral-ordering prefixes and coordinate half-spaces;
    /// an upper bound on the true conductance.
    Sweep,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConductanceResult {
    pub phi: f64,
    pub argmin: Vec<usize>,
    pub mode: ConductanceMode,
}

/// Maximum state count for the exhaustive subset enumeration.
pub const EXHAUSTIVE_CAP: usize = 22;

/// Conductance of `p` with respect to the discretized target's weights.
///
/// `Exhaustive` enumerates all subsets in Gray-code order with incremental
/// flow updates; `Sweep` scans level sets of the second eigenvector of the
/// additive reversibilization plus axis-sorted prefixes, which only upper
/// bounds the conductance.
pub fn exact_conductance(
    disc: &DiscreteTarget,
    p: &TransitionMatrix,
    mode: ConductanceMode,
) -> Result<ConductanceResult> {
    match mode {
        ConductanceMode::Exhaustive => exhaustive_conductance(disc.pi(), p),
        ConductanceMode::Sweep => sweep_conductance(disc, p),
    }
}

/// Exact ergodic flow and mass of the subset encoded in `mask`.
fn exact_cut(pi: &[f64], mat: &DMatrix<f64>, mask: u64) -> (f64, f64) {
    let n = pi.len();
    let mut flow = 0.0;
    let mut mass = 0.0;
    for i in 0..n {
        if mask & (1u64 << i) == 0 {
            continue;
        }
        mass += pi[i];
        for j in 0..n {
            if mask & (1u64 << j) == 0 {
                flow += pi[i] * mat[(i, j)];
            }
        }
    }
    (flow, mass)
}

fn exhaustive_conductance(pi: &[f64], p: &TransitionMatrix) -> Result<ConductanceResult> {
    let n = pi.len();
    if n > EXHAUSTIVE_CAP {
        return Err(Error::CapExceeded {
            n,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let mat = p.matrix();
    let mut member = vec![false; n];
    let mut mass = 0.0f64;
    let mut flow = 0.0f64; // sum_{i in S, j notin S} pi_i P_ij
    let mut best = f64::INFINITY;
    let mut best_mask: u64 = 0;
    let mut mask: u64 = 0;
    let total: u64 = 1u64 << n;
    // Gray-code walk: subset g(t) = t ^ (t >> 1), each step toggles one state.
    // The incremental flow accumulates rounding, so it only serves as a
    // filter; any candidate improvement is re-verified with an exact cut
    // computation before it can become the minimum.
    for t in 1..total {
        let toggle = (t.trailing_zeros()) as usize;
        let adding = !member[toggle];
        // flow delta for toggling state v:
        //   add:    + pi_v P(v, S^c \ v)  - sum_{i in S} pi_i P(i, v)
        //   remove: - pi_v P(v, S^c)      + sum_{i in S \ v} pi_i P(i, v)
        let mut out_v = 0.0;
        let mut into_v = 0.0;
        for j in 0..n {
            if j == toggle {
                continue;
            }
            if member[j] {
                into_v += pi[j] * mat[(j, toggle)];
            } else {
                out_v += pi[toggle] * mat[(toggle, j)];
            }
        }
        if adding {
            member[toggle] = true;
            mass += pi[toggle];
            flow += out_v - into_v;
            mask |= 1u64 << toggle;
        } else {
            member[toggle] = false;
            mass -= pi[toggle];
            flow += into_v - out_v;
            mask &= !(1u64 << toggle);
        }
        if mask == 0 || mask == total - 1 {
            continue;
        }
        if mass > 0.0 && mass <= 0.5 + 1e-12 {
            let ratio = (flow / mass).max(0.0);
            // tiny masses amplify the drift beyond the filter's resolution,
            // so they always get the exact treatment
            if ratio < best * (1.0 + 1e-6) + 1e-12 || mass < 1e-9 {
                let (exact_flow, exact_mass) = exact_cut(pi, mat, mask);
                let exact_ratio = exact_flow / exact_mass;
                if exact_ratio < best {
                    best = exact_ratio;
                    best_mask = mask;
                }
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::InvalidArgument(
            "no admissible subset with positive mass at most 1/2".into(),
        ));
    }
    Ok(ConductanceResult {
        phi: best,
        argmin: (0..n).filter(|i| best_mask & (1u64 << i) != 0).collect(),
        mode: ConductanceMode::Exhaustive,
    })
}

fn cut_ratio(pi: &[f64], mat: &DMatrix<f64>, states: &[usize]) -> Option<(f64, f64)> {
    let n = pi.len();
    let mut in_set = vec![false; n];
    for &s in states {
        in_set[s] = true;
    }
    let mass: f64 = states.iter().map(|&s| pi[s]).sum();
    if mass <= 0.0 {
        return None;
    }
    let mut flow = 0.0;
    for &i in states {
        for j in 0..n {
            if !in_set[j] {
                flow += pi[i] * mat[(i, j)];
            }
        }
    }
    Some((flow / mass, mass))
}

fn sweep_conductance(disc: &DiscreteTarget, p: &TransitionMatrix) -> Result<ConductanceResult> {
    let pi = disc.pi();
    let n = pi.len();
    let mat = p.matrix();

    // additive reversibilization (P + P*)/2 symmetrized by D^{1/2} . D^{-1/2};
    // for reversible p this is exactly the symmetrized kernel
    let mut sym = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let forward = pi[i] * mat[(i, j)];
            let backward = pi[j] * mat[(j, i)];
            sym[(i, j)] = 0.5 * (forward + backward) / (pi[i] * pi[j]).sqrt();
        }
    }
    let eig = SymmetricEigen::new(sym);
    // second eigenvector by eigenvalue order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let v2 = eig.eigenvectors.column(order[1]);

    let mut candidates: Vec<Vec<usize>> = Vec::new();
    // level sets of the second eigenvector (in the pi-weighted geometry)
    let mut spectral_order: Vec<usize> = (0..n).collect();
    spectral_order.sort_by(|&a, &b| {
        (v2[a] / pi[a].sqrt())
            .total_cmp(&(v2[b] / pi[b].sqrt()))
            .then(a.cmp(&b))
    });
    for cut in 1..n {
        candidates.push(spectral_order[..cut].to_vec());
    }
    // coordinate half-spaces
    for axis in 0..disc.dim() {
        let mut axis_order: Vec<usize> = (0..n).collect();
        axis_order.sort_by(|&a, &b| {
            disc.state_coords(a)[axis]
                .total_cmp(&disc.state_coords(b)[axis])
                .then(a.cmp(&b))
        });
        for cut in 1..n {
            candidates.push(axis_order[..cut].to_vec());
        }
    }

    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    for cand in candidates {
        if let Some((ratio, mass)) = cut_ratio(pi, mat, &cand) {
            let (ratio, states) = if mass <= 0.5 + 1e-12 {
                (ratio, cand)
            } else {
                // use the complement, whose mass is admissible
                let comp: Vec<usize> = (0..n).filter(|s| !cand.contains(s)).collect();
                match cut_ratio(pi, mat, &comp) {
                    Some((r, m)) if m <= 0.5 + 1e-12 => (r, comp),
                    _ => continue,
                }
            };
            if ratio < best {
                best = ratio;
                argmin = states;
            }
        }
    }
    Ok(ConductanceResult {
        phi: best,
        argmin,
        mode: ConductanceMode::Sweep,
    })
}

/// Spectral gap `1 - lambda_2` of a reversible kernel via the symmetrized
/// similarity transform `D^{1/2} P D^{-1/2}` and a dense symmetric
/// eigensolve.
pub fn exact_spectral_gap(disc: &DiscreteTarget, p: &TransitionMatrix) -> Result<f64> {
    if !p.reversible_wrt_pi() {
        return Err(Error::NotReversible);
    }
    let pi = disc.pi();
    let n = pi.len();
    let mat = p.matrix();
    let mut sym = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = mat[(i, j)] * (pi[i] / pi[j]).sqrt();
        }
    }
    // clear rounding asymmetry before the symmetric eigensolve
    let symt = sym.transpose();
    let sym = (sym + symt) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    if (vals[0] - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "top eigenvalue {} is not 1; matrix is not stochastic enough",
            vals[0]
        )));
    }
    Ok(1.0 - vals[1])
}

/// Exact total variation `||mu P^k - pi||` for `k = 0..=k_max`, plus the
/// warm-start constant `Omega = max_i mu_i / pi_i`.
pub fn tv_decay_curve(
    disc: &DiscreteTarget,
    p: &TransitionMatrix,
    mu0: &[f64],
    k_max: usize,
) -> Result<(Vec<f64>, f64)> {
    let pi = disc.pi();
    let n = pi.len();
    if mu0.len() != n {
        return Err(Error::InvalidArgument("mu0 length mismatch".into()));
    }
    let total: f64 = mu0.iter().sum();
    if (total - 1.0).abs() > 1e-9 || mu0.iter().any(|m| *m < 0.0) {
        return Err(Error::InvalidArgument("mu0 must be a probability vector".into()));
    }
    let omega = mu0
        .iter()
        .zip(pi)
        .map(|(m, p)| m / p)
        .fold(0.0f64, f64::max);
    let mut mu = RowDVector::from_row_slice(mu0);
    let pi_vec = DVector::from_column_slice(pi);
    let mut curve = Vec::with_capacity(k_max + 1);
    for _ in 0..=k_max {
        let tv = 0.5
            * mu.iter()
                .zip(pi_vec.iter())
                .map(|(m, p)| (m - p).abs())
                .sum::<f64>();
        curve.push(tv);
        mu *= p.matrix();
    }
    Ok((curve, omega))
}

/// Discrete Rayleigh-quotient estimate of the `L^2` Poincare constant of a
/// one-dimensional discretized target: the smallest nonzero eigenvalue of the
/// weighted graph Laplacian pencil `A f = lambda diag(pi) f`.
///
/// Reported as a diagnostic only; grid functions are a strict subset of the
/// continuum test functions.
pub fn rayleigh_pi2_diagnostic(disc: &DiscreteTarget) -> Result<f64> {
    if disc.dim() != 1 {
        return Err(Error::InvalidArgument(
            "the Rayleigh diagnostic is one-dimensional".into(),
        ));
    }
    let pi = disc.pi();
    let n = pi.len();
    let pts = disc.grids()[0].points();
    // stiffness: sum over edges of edge_mass * ((f_{i+1} - f_i)/h)^2
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n - 1 {
        let h = pts[i + 1] - pts[i];
        let edge_mass = 0.5 * (pi[i] + pi[i + 1]);
        let w = edge_mass / (h * h);
        a[(i, i)] += w;
        a[(i + 1, i + 1)] += w;
        a[(i, i + 1)] -= w;
        a[(i + 1, i)] -= w;
    }
    // generalized problem A f = lambda M f with M = diag(pi):
    // B = M^{-1/2} A M^{-1/2}, whose kernel is spanned by M^{1/2} 1
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = a[(i, j)] / (pi[i] * pi[j]).sqrt();
        }
    }
    let bt = b.transpose();
    let b = (b + bt) * 0.5;
    let eig = SymmetricEigen::new(b);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    // vals[0] ~ 0 (constants); the next one is the Poincare constant
    Ok(vals[1])
}
