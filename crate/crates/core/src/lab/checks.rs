//! Standalone numeric checks: the exact coupon-collector probability, the
//! `rho(x) = x log(1/x)` lemma, marginal regularity, and empirical
//! close-coupling verification.

use rand::Rng;

use crate::bounds::CloseCouplingCert;
use crate::conditional::{slice_conditional, GridSet};
use crate::error::{Error, Result};
use crate::kernels::{estimate_meeting_probability, run_chain, KernelKind};
use crate::rng::{RngFactory, STREAM_CHAIN, STREAM_PAIRS};
use crate::target::TargetSpec;

/// Exact probability that `n` uniform draws from `{1..d}` cover all `d`
/// values, by inclusion-exclusion with compensated summation.
///
/// Binomial coefficients go through the log domain above d = 60 to avoid
/// overflow.
pub fn coupon_probability_exact(d: usize, n: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    if (n as usize) < d {
        return Ok(0.0);
    }
    let df = d as f64;
    // Neumaier compensated sum of (-1)^k C(d,k) ((d-k)/d)^n
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |term: f64| {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    };
    if d <= 60 {
        let mut binom = 1.0f64; // C(d, k)
        for k in 0..=d {
            let frac = (df - k as f64) / df;
            let term = binom * frac.powf(n as f64);
            add(if k % 2 == 0 { term } else { -term });
            binom = binom * (df - k as f64) / (k as f64 + 1.0);
        }
    } else {
        let mut log_binom = 0.0f64; // ln C(d, k)
        for k in 0..=d {
            let frac = (df - k as f64) / df;
            let term = if frac > 0.0 {
                (log_binom + n as f64 * frac.ln()).exp()
            } else {
                0.0
            };
            add(if k % 2 == 0 { term } else { -term });
            log_binom += ((df - k as f64) / (k as f64 + 1.0)).ln();
        }
    }
    Ok((sum + comp).clamp(0.0, 1.0))
}

/// Grid verification of the properties of `rho(x) = x ln(1/x)` on `[0, 1]`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RhoReport {
    /// Largest violation of `rho(x + h) >= rho(x) - h` over the grid.
    pub max_violation: f64,
    /// Grid location of the maximum of rho.
    pub argmax: f64,
    pub max_value: f64,
    /// Smallest of rho over interior grid points (positivity witness).
    pub min_interior: f64,
    pub pass: bool,
}

fn rho(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        0.0
    } else {
        x * (1.0 / x).ln()
    }
}

/// Checks positivity on (0,1), the location of the maximum at `e^{-1}`, and
/// `rho(x+h) >= rho(x) - h` on a uniform grid over `{x, h >= 0, x + h <= 1}`
/// with tolerance `tol`.
pub fn check_rho_lemma(grid_size: usize, tol: f64) -> Result<RhoReport> {
    if grid_size < 3 {
        return Err(Error::InvalidArgument("need grid_size >= 3".into()));
    }
    let n = grid_size - 1;
    let step = 1.0 / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| rho(i as f64 * step)).collect();

    let mut max_violation = 0.0f64;
    for i in 0..=n {
        for j in 0..=(n - i) {
            // x = i/n, h = j/n, x + h = (i + j)/n lands back on the grid
            let violation = (values[i] - j as f64 * step) - values[i + j];
            if violation > max_violation {
                max_violation = violation;
            }
        }
    }
    let (argmax_idx, max_value) = values
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let argmax = argmax_idx as f64 * step;
    let min_interior = values[1..n].iter().cloned().fold(f64::INFINITY, f64::min);
    let e_inv = (-1.0f64).exp();
    let pass = max_violation <= tol && (argmax - e_inv).abs() <= step && min_interior > 0.0;
    Ok(RhoReport {
        max_violation,
        argmax,
        max_value,
        min_interior,
        pass,
    })
}

/// Empirical Lipschitz and smoothness constants of the marginal potential
/// `V(s) = -log int exp(-U(t, s)) dt` of a 2-dimensional target, measured by
/// finite differences of the quadrature-computed `V` on a grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MarginalReport {
    pub l_emp_lip: f64,
    pub l_emp_smooth: f64,
}

/// `axis` is the coordinate kept (the marginal variable); the other one is
/// integrated out through the conditional-slice normalizer.
pub fn check_marginal_regularity(
    target: &TargetSpec,
    axis: usize,
    marginal_points: usize,
    slice_points: usize,
) -> Result<MarginalReport> {
    if target.dim() != 2 {
        return Err(Error::InvalidArgument(
            "marginal regularity check works on 2-dimensional targets".into(),
        ));
    }
    if axis > 1 {
        return Err(Error::InvalidArgument("axis must be 0 or 1".into()));
    }
    let integrated = 1 - axis;
    let grids = GridSet::uniform(target, slice_points)?;
    let (lo, hi) = target.interval(axis);
    let n = marginal_points.max(8);
    let h = (hi - lo) / (n - 1) as f64;
    let mut v = Vec::with_capacity(n);
    let mut x = vec![0.0; 2];
    for i in 0..n {
        let s = lo + h * i as f64;
        x[axis] = s;
        x[integrated] = 0.0;
        let slice = slice_conditional(target, integrated, &x, grids.grid(integrated))?;
        v.push(-slice.log_normalizer);
    }
    let mut l_lip = 0.0f64;
    for w in v.windows(2) {
        l_lip = l_lip.max((w[1] - w[0]).abs() / h);
    }
    let mut l_smooth = 0.0f64;
    for w in v.windows(3) {
        l_smooth = l_smooth.max(((w[2] - 2.0 * w[1] + w[0]) / (h * h)).abs());
    }
    Ok(MarginalReport {
        l_emp_lip: l_lip,
        l_emp_smooth: l_smooth,
    })
}

/// Per-pair outcome of a close-coupling experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PairOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub meeting_freq: f64,
    pub stderr: f64,
    /// `1 - meeting_freq + 3 stderr`.
    pub tv_upper: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CloseCouplingReport {
    pub pairs: Vec<PairOutcome>,
    pub max_tv_ub: f64,
    /// `1 - eps_exact + 3 * aggregate stderr`, the certified ceiling.
    pub threshold: f64,
    pub pass: bool,
}

/// Verifies a `(delta, eps)`-close-coupling certificate empirically: draws
/// `n_pairs` pairs at distance exactly `cert.delta` (x from a burned-in
/// chain, y a random perturbation), estimates each pair's meeting
/// probability with `n_reps` coupled transitions, and compares the worst TV
/// upper bound `1 - freq + 3 se` against `1 - eps_exact + 3 se_max`.
pub fn check_close_coupling(
    target: &TargetSpec,
    grids: &GridSet,
    cert: &CloseCouplingCert,
    variant: KernelKind,
    n_pairs: usize,
    n_reps: usize,
    factory: &RngFactory,
) -> Result<CloseCouplingReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("need n_pairs >= 1".into()));
    }
    let d = target.dim();
    let mut chain_rng = factory.stream(STREAM_CHAIN);
    let x0 = vec![0.0; d];
    let burn = run_chain(target, grids, KernelKind::Systematic, &x0, 200, 1, &mut chain_rng)?;
    let mut state = burn.states.last().unwrap().clone();

    let mut pair_rng = factory.stream(STREAM_PAIRS);
    let mut pairs = Vec::with_capacity(n_pairs);
    for pair_idx in 0..n_pairs {
        // advance the chain between pairs so the x's are spread over the target
        for _ in 0..5 {
            crate::kernels::step_kernel(
                target,
                grids,
                KernelKind::Systematic,
                &mut state,
                &mut chain_rng,
            )?;
        }
        let y = perturb_at_distance(target, &state, cert.delta, &mut pair_rng)?;
        let distance = state
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let (freq, se) = estimate_meeting_probability(
            target,
            grids,
            variant,
            &state,
            &y,
            n_reps,
            &factory.derive(1000 + pair_idx as u64),
        )?;
        pairs.push(PairOutcome {
            x: state.clone(),
            y,
            distance,
            meeting_freq: freq,
            stderr: se,
            tv_upper: 1.0 - freq + 3.0 * se,
        });
    }
    let max_tv_ub = pairs.iter().map(|p| p.tv_upper).fold(0.0f64, f64::max);
    let se_max = pairs.iter().map(|p| p.stderr).fold(0.0f64, f64::max);
    let threshold = 1.0 - cert.eps_exact + 3.0 * se_max;
    Ok(CloseCouplingReport {
        pairs,
        max_tv_ub,
        threshold,
        pass: max_tv_ub <= threshold,
    })
}

/// A point at Euclidean distance exactly `delta` from `x`, inside the box.
fn perturb_at_distance<R: Rng + ?Sized>(
    target: &TargetSpec,
    x: &[f64],
    delta: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = x.len();
    for _ in 0..256 {
        // gaussian direction via Box-Muller on uniform draws
        let mut dir: Vec<f64> = Vec::with_capacity(d);
        while dir.len() < d {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            dir.push(r * (2.0 * std::f64::consts::PI * u2).cos());
            if dir.len() < d {
                dir.push(r * (2.0 * std::f64::consts::PI * u2).sin());
            }
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let y: Vec<f64> = x
            .iter()
            .zip(&dir)
            .map(|(xi, di)| xi + delta * di / norm)
            .collect();
        if target.contains(&y) {
            return Ok(y);
        }
    }
    Err(Error::InvalidArgument(
        "could not place a perturbed point inside the box".into(),
    ))
}
