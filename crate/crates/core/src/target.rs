//! Target distributions given by potentials `U` (density proportional to
//! `exp(-U)`), together with the regularity metadata the bound calculators
//! consume.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::parse_potential;
use crate::quad::log_integral_exp;

/// Which functional inequality a constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiKind {
    Poincare,
    LogSobolev,
}

/// An `L^q` Poincare or log-Sobolev inequality with its (largest) constant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FunctionalInequality {
    pub kind: FiKind,
    pub q: f64,
    pub constant: f64,
}

impl FunctionalInequality {
    pub fn new(kind: FiKind, q: f64, constant: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "functional inequality order q must be >= 1, got {q}"
            )));
        }
        if !(constant > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "functional inequality constant must be > 0, got {constant}"
            )));
        }
        Ok(Self { kind, q, constant })
    }
}

/// Hoelder continuity of the one-dimensional conditionals in total variation:
/// `tv(pi(.|x_-k), pi(.|y_-k)) <= M |x_-k - y_-k|^beta`.
///
/// `m == 0` is allowed as the degenerate constant-potential case.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TvContinuity {
    pub m: f64,
    pub beta: f64,
}

impl TvContinuity {
    pub fn new(m: f64, beta: f64) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tv continuity constant M must be >= 0, got {m}"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tv continuity exponent beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(Self { m, beta })
    }
}

/// Regularity metadata attached to a target.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularityProfile {
    /// `U` is Lipschitz with this constant.
    pub lipschitz_l: Option<f64>,
    /// `grad U` is Lipschitz with this constant.
    pub smooth_l: Option<f64>,
    /// A functional inequality satisfied by the target.
    pub fi: Option<FunctionalInequality>,
    /// Explicit TV continuity of the conditionals, overriding derivation.
    pub tv: Option<TvContinuity>,
}

impl RegularityProfile {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lipschitz_l {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "lipschitz_l must be a finite value >= 0, got {l}"
                )));
            }
        }
        if let Some(l) = self.smooth_l {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "smooth_l must be a finite value >= 0, got {l}"
                )));
            }
        }
        // An explicit tv pair must be at least as strong as the one implied by
        // lipschitz_l: beta >= 1/2 and M <= sqrt(L).
        if let (Some(tv), Some(l)) = (self.tv, self.lipschitz_l) {
            if tv.beta < 0.5 || tv.m > l.sqrt() + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "explicit tv ({}, {}) is weaker than the ({}, 0.5) pair implied by lipschitz_l = {l}",
                    tv.m,
                    tv.beta,
                    l.sqrt()
                )));
            }
        }
        Ok(())
    }
}

/// Strongest TV-continuity pair available from a regularity profile.
///
/// Preference order: explicit pair, then `(sqrt(L), 1)` from smoothness, then
/// `(sqrt(L), 1/2)` from Lipschitz continuity.
pub fn derive_tv_continuity(reg: &RegularityProfile) -> Result<TvContinuity> {
    if let Some(tv) = reg.tv {
        return Ok(tv);
    }
    if let Some(l) = reg.smooth_l {
        return TvContinuity::new(l.sqrt(), 1.0);
    }
    if let Some(l) = reg.lipschitz_l {
        return TvContinuity::new(l.sqrt(), 0.5);
    }
    Err(Error::NoRegularity)
}

type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A target distribution on a truncation box, with potential and metadata.
///
/// Immutable after construction and shareable across workers; all methods are
/// pure.
#[derive(Clone)]
pub struct TargetSpec {
    name: String,
    dim: usize,
    bounds: Vec<(f64, f64)>,
    potential: PotentialFn,
    regularity: RegularityProfile,
}

impl std::fmt::Debug for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .field("regularity", &self.regularity)
            .finish_non_exhaustive()
    }
}

impl TargetSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        bounds: Vec<(f64, f64)>,
        potential: PotentialFn,
        regularity: RegularityProfile,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if bounds.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "box has {} intervals for dimension {dim}",
                bounds.len()
            )));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidGrid(format!(
                    "box interval {k} = [{lo}, {hi}] must have positive width"
                )));
            }
        }
        regularity.validate()?;
        Ok(Self {
            name: name.into(),
            dim,
            bounds,
            potential,
            regularity,
        })
    }

    /// Builds a target from a potential expression (see [`crate::expr`]).
    pub fn from_expression(
        name: impl Into<String>,
        src: &str,
        dim: usize,
        bounds: Vec<(f64, f64)>,
        regularity: RegularityProfile,
    ) -> Result<Self> {
        let compiled = parse_potential(src, dim)?;
        Self::new(
            name,
            dim,
            bounds,
            Arc::new(move |x: &[f64]| compiled.eval(x)),
            regularity,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        self.bounds[k]
    }

    pub fn regularity(&self) -> &RegularityProfile {
        &self.regularity
    }

    /// Replaces the regularity metadata (constants are config inputs and may
    /// be supplied after construction).
    pub fn with_regularity(mut self, regularity: RegularityProfile) -> Result<Self> {
        regularity.validate()?;
        self.regularity = regularity;
        Ok(self)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    fn check_in_box(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, target dimension is {}",
                x.len(),
                self.dim
            )));
        }
        for (k, (&v, &(lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(Error::OutOfBox {
                    coord: k,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Evaluates the potential `U(x)`. Points outside the box are an error,
    /// not silently clamped.
    pub fn potential_eval(&self, x: &[f64]) -> Result<f64> {
        self.check_in_box(x)?;
        let u = (self.potential)(x);
        if !u.is_finite() {
            return Err(Error::NonFinitePotential);
        }
        Ok(u)
    }
}

fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Surface area of the unit sphere `S^k` embedded in `R^{k+1}`.
fn sphere_surface(k: usize) -> f64 {
    // 2 pi^{(k+1)/2} / Gamma((k+1)/2), with Gamma on (half-)integers by
    // recursion from Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
    let twice = (k + 1) as u64; // argument is twice/2
    let gamma = if twice % 2 == 0 {
        let mut g = 1.0;
        for j in 1..(twice / 2) {
            g *= j as f64;
        }
        g
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut z = 0.5;
        while z + 1.0 <= twice as f64 / 2.0 {
            g *= z;
            z += 1.0;
        }
        g
    };
    2.0 * std::f64::consts::PI.powf((k + 1) as f64 / 2.0) / gamma
}

/// Uniformly spaced table with Catmull-Rom interpolation.
#[derive(Debug, Clone)]
struct UniformTable {
    step: f64,
    values: Vec<f64>,
}

impl UniformTable {
    fn build(step: f64, max: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = (max / step).ceil() as usize + 3;
        let values = (0..n).map(|i| f(i as f64 * step)).collect();
        Self { step, values }
    }

    fn eval(&self, s: f64) -> f64 {
        let n = self.values.len();
        let u = (s / self.step).clamp(0.0, (n - 2) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let t = u - i as f64;
        let p0 = self.values[i.saturating_sub(1)];
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        let p3 = self.values[(i + 2).min(n - 1)];
        0.5 * (2.0 * p1
            + (-p0 + p2) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
    }
}

const MIX_QUAD_TOL: f64 = 1e-8;
const MIX_R_MAX: f64 = 24.0;

/// Log of the spherical-shell factor `A(kappa, d) = int_{S^{d-1}} exp(kappa <u, w>) dw`.
#[derive(Debug, Clone)]
enum Angular {
    /// d = 1: `2 cosh(kappa)`.
    Cosh,
    /// d = 3: `4 pi sinh(kappa) / kappa`.
    SinhOverK,
    /// General d: tabulated `log int_0^pi exp(kappa (cos t - 1)) sin^{d-2} t dt`.
    Table { dim: usize, residual: UniformTable },
}

impl Angular {
    fn build(dim: usize, kappa_max: f64) -> Self {
        match dim {
            1 => Angular::Cosh,
            3 => Angular::SinhOverK,
            _ => {
                let pow = (dim - 2) as f64;
                let residual = UniformTable::build(1.0 / 32.0, kappa_max, |kappa| {
                    let g = move |theta: f64| {
                        let s = theta.sin();
                        let base = kappa * (theta.cos() - 1.0);
                        if pow == 0.0 {
                            base
                        } else if s <= 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            base + pow * s.ln()
                        }
                    };
                    log_integral_exp(&g, 0.0, std::f64::consts::PI, 1e-12)
                });
                Angular::Table { dim, residual }
            }
        }
    }

    fn log_a(&self, kappa: f64) -> f64 {
        match self {
            Angular::Cosh => kappa.abs() + (1.0 + (-2.0 * kappa.abs()).exp()).ln(),
            Angular::SinhOverK => {
                // log(4 pi sinh(k)/k), stable for both small and large k
                let lead = (4.0 * std::f64::consts::PI).ln();
                if kappa < 1e-8 {
                    lead + (1.0 + kappa * kappa / 6.0).ln()
                } else {
                    lead + kappa + ((1.0 - (-2.0 * kappa).exp()) / (2.0 * kappa)).ln()
                }
            }
            Angular::Table { dim, residual } => {
                sphere_surface(dim - 2).ln() + kappa + residual.eval(kappa)
            }
        }
    }
}

/// Potential of the continuous Gaussian mixture: a standard Gaussian whose
/// mean is drawn from the spherically symmetric law with density proportional
/// to `exp(-| |t|^2 - 4 |)`.
///
/// The mixture density depends only on `|x|`, so the potential is tabulated
/// on a radial grid; each table entry comes from adaptive quadrature over the
/// radial law of the mixing distribution.
#[derive(Debug, Clone)]
struct GaussianMixturePotential {
    table: UniformTable,
}

impl GaussianMixturePotential {
    fn build(dim: usize, s_max: f64) -> Self {
        let d = dim as f64;
        let angular = Angular::build(dim, s_max * MIX_R_MAX + 2.0);
        let radial_pow = d - 1.0;
        let log_r_term = move |r: f64| {
            if radial_pow == 0.0 {
                0.0
            } else if r <= 0.0 {
                f64::NEG_INFINITY
            } else {
                radial_pow * r.ln()
            }
        };
        // normalizer of the mixing law nu
        let log_z_nu = sphere_surface(dim - 1).ln()
            + log_integral_exp(
                &|r: f64| -(r * r - 4.0).abs() + log_r_term(r),
                0.0,
                MIX_R_MAX,
                MIX_QUAD_TOL,
            );
        let log_gauss_const = -0.5 * d * (2.0 * std::f64::consts::PI).ln();
        let step = if dim == 1 { 0.005 } else { 0.01 };
        let table = UniformTable::build(step, s_max, |s| {
            let g = |r: f64| {
                -0.5 * r * r - (r * r - 4.0).abs() + log_r_term(r) + angular.log_a(s * r)
            };
            let log_j = log_integral_exp(&g, 0.0, MIX_R_MAX, MIX_QUAD_TOL);
            let log_density = log_gauss_const - log_z_nu - 0.5 * s * s + log_j;
            -log_density
        });
        Self { table }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.table.eval(euclidean_norm(x))
    }
}

const DEFAULT_BOX_RADIUS: f64 = 20.0;

fn symmetric_box(dim: usize, radius: f64) -> Vec<(f64, f64)> {
    vec![(-radius, radius); dim]
}

fn take_params(
    params: &BTreeMap<String, f64>,
    recognized: &[&str],
) -> Result<BTreeMap<String, f64>> {
    for key in params.keys() {
        if !recognized.contains(&key.as_str()) {
            return Err(Error::InvalidParam {
                name: key.clone(),
                reason: format!("not recognized; expected one of {recognized:?}"),
            });
        }
    }
    Ok(params.clone())
}

fn fi_from_params(params: &BTreeMap<String, f64>) -> Result<Option<FunctionalInequality>> {
    let po = params.get("poincare_constant");
    let ls = params.get("lsi_constant");
    match (po, ls) {
        (Some(_), Some(_)) => Err(Error::InvalidParam {
            name: "lsi_constant".into(),
            reason: "give either a poincare or a log-Sobolev constant, not both".into(),
        }),
        (Some(&c), None) => {
            let q = params.get("poincare_q").copied().unwrap_or(2.0);
            Ok(Some(FunctionalInequality::new(FiKind::Poincare, q, c)?))
        }
        (None, Some(&c)) => {
            let q = params.get("lsi_q").copied().unwrap_or(2.0);
            Ok(Some(FunctionalInequality::new(FiKind::LogSobolev, q, c)?))
        }
        (None, None) => Ok(None),
    }
}

const COMMON_PARAMS: [&str; 5] = [
    "box_radius",
    "poincare_q",
    "poincare_constant",
    "lsi_q",
    "lsi_constant",
];

/// Builds one of the builtin targets.
///
/// Names: `gaussian_product`, `gaussian_mixture_continuous`, `laplace_mixture`,
/// `perturbed_laplace`. Recognized params for all of them: `box_radius` and
/// functional-inequality constants (`poincare_q`/`poincare_constant` or
/// `lsi_q`/`lsi_constant`); constants the source formulas do not pin down are
/// never hardcoded. `gaussian_mixture_continuous` additionally accepts
/// `smooth_l`.
pub fn builtin_target(name: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<TargetSpec> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let radius = match params.get("box_radius") {
        Some(&r) if r.is_finite() && r > 0.0 => r,
        Some(&r) => {
            return Err(Error::InvalidParam {
                name: "box_radius".into(),
                reason: format!("must be a finite value > 0, got {r}"),
            })
        }
        None => DEFAULT_BOX_RADIUS,
    };
    let bounds = symmetric_box(dim, radius);
    let fi = fi_from_params(params)?;

    match name {
        "gaussian_product" => {
            let recognized: Vec<&str> = COMMON_PARAMS.to_vec();
            take_params(params, &recognized)?;
            TargetSpec::new(
                name,
                dim,
                bounds,
                Arc::new(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
                RegularityProfile {
                    smooth_l: Some(1.0),
                    fi,
                    ..Default::default()
                },
            )
        }
        "laplace_mixture" => {
            let recognized: Vec<&str> = COMMON_PARAMS.to_vec();
            take_params(params, &recognized)?;
            let d = dim;
            TargetSpec::new(
                name,
                dim,
                bounds,
                Arc::new(move |x: &[f64]| {
                    let mut a = 0.0; // -|x - m1|^2 accumulators
                    let mut b = 0.0;
                    for k in 0..d {
                        let dp = x[k] - 1.0;
                        let dm = x[k] + 1.0;
                        a += dp * dp;
                        b += dm * dm;
                    }
                    let half = 0.5f64.ln();
                    -log_sum_exp2(half - a.sqrt(), half - b.sqrt())
                }),
                RegularityProfile {
                    lipschitz_l: Some(1.0),
                    fi,
                    ..Default::default()
                },
            )
        }
        "perturbed_laplace" => {
            let recognized: Vec<&str> = COMMON_PARAMS.to_vec();
            take_params(params, &recognized)?;
            TargetSpec::new(
                name,
                dim,
                bounds,
                Arc::new(|x: &[f64]| {
                    let r = euclidean_norm(x);
                    r - 2.0 * r.cos()
                }),
                RegularityProfile {
                    lipschitz_l: Some(3.0),
                    fi,
                    ..Default::default()
                },
            )
        }
        "gaussian_mixture_continuous" => {
            let mut recognized: Vec<&str> = COMMON_PARAMS.to_vec();
            recognized.push("smooth_l");
            take_params(params, &recognized)?;
            let smooth_l = match params.get("smooth_l") {
                Some(&l) if l.is_finite() && l > 0.0 => Some(l),
                Some(&l) => {
                    return Err(Error::InvalidParam {
                        name: "smooth_l".into(),
                        reason: format!("must be a finite value > 0, got {l}"),
                    })
                }
                None => None,
            };
            let s_max = radius * (dim as f64).sqrt() + 1.0;
            let pot = GaussianMixturePotential::build(dim, s_max);
            TargetSpec::new(
                name,
                dim,
                bounds,
                Arc::new(move |x: &[f64]| pot.eval(x)),
                RegularityProfile {
                    smooth_l,
                    fi,
                    ..Default::default()
                },
            )
        }
        other => Err(Error::UnknownTarget(other.to_string())),
    }
}

/// Direct (non-radial) quadrature of the d=1 Gaussian-mixture potential;
/// slow, but it never touches the radial factorization or the interpolation
/// table. Exposed for verification.
pub fn gaussian_mixture_potential_reference_1d(x: f64) -> f64 {
    let log_z_nu = log_integral_exp(
        &|t: f64| -(t * t - 4.0).abs(),
        -MIX_R_MAX,
        MIX_R_MAX,
        1e-12,
    );
    let log_dens = log_integral_exp(
        &|t: f64| -0.5 * (x - t) * (x - t) - (t * t - 4.0).abs(),
        -MIX_R_MAX,
        MIX_R_MAX,
        1e-12,
    ) - 0.5 * (2.0 * std::f64::consts::PI).ln();
    -(log_dens - log_z_nu)
}
