//! Closed-form bound calculators: three-set isoperimetric profiles, close
//! coupling certificates, the conductance lower bound, warm-start mixing-time
//! and TV-decay envelopes, the Cheeger interval, iterated-kernel transfer,
//! and functional-inequality conversions.

use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::target::{FiKind, FunctionalInequality, TvContinuity};

/// The `(Upsilon, Psi)` pair of a three-set isoperimetric inequality derived
/// from an `L^q` Poincare or log-Sobolev inequality.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IsoperimetricProfile {
    pub kind: FiKind,
    pub q: f64,
    pub constant: f64,
}

impl IsoperimetricProfile {
    pub fn new(kind: FiKind, q: f64, constant: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("q must be >= 1, got {q}")));
        }
        if !(constant > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "constant must be > 0, got {constant}"
            )));
        }
        Ok(Self { kind, q, constant })
    }

    pub fn from_fi(fi: &FunctionalInequality) -> Result<Self> {
        Self::new(fi.kind, fi.q, fi.constant)
    }

    /// `Upsilon(t)`: the gap-dependent factor of the three-set inequality.
    ///
    /// Poincare: `C t^q / (2^{2q} (1 + 2^q C t^q))`;
    /// log-Sobolev: `C t^q / (1 + (1 + e^{-1}) C t^q)`.
    pub fn upsilon(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "upsilon argument must be > 0, got {t}"
            )));
        }
        let c = self.constant;
        let tq = t.powf(self.q);
        Ok(match self.kind {
            FiKind::Poincare => {
                let four_q = (2.0f64).powf(2.0 * self.q);
                let two_q = (2.0f64).powf(self.q);
                c * tq / (four_q * (1.0 + two_q * c * tq))
            }
            FiKind::LogSobolev => {
                let e_inv = (-1.0f64).exp();
                c * tq / (1.0 + (1.0 + e_inv) * c * tq)
            }
        })
    }

    /// `Psi(t)` on `(0, 1/2)`: identity for Poincare, `t/2 * log(2/t)` for
    /// log-Sobolev.
    pub fn psi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "psi argument must lie in (0, 1/2), got {t}"
            )));
        }
        Ok(match self.kind {
            FiKind::Poincare => t,
            FiKind::LogSobolev => 0.5 * t * (2.0 / t).ln(),
        })
    }

    /// Numeric admissibility check on a log-spaced grid: `Upsilon`
    /// nondecreasing on `(0, inf)` and `Psi` nondecreasing with `Psi/id`
    /// nonincreasing on `(0, 1/2)`.
    pub fn check_admissible(&self, n_points: usize) -> Result<bool> {
        let n = n_points.max(8);
        let mut ok = true;
        let tol = 1e-12;
        let mut prev_upsilon = f64::NEG_INFINITY;
        for i in 0..n {
            // log-spaced between 1e-8 and 1e8
            let t = 10f64.powf(-8.0 + 16.0 * i as f64 / (n - 1) as f64);
            let u = self.upsilon(t)?;
            ok &= u >= prev_upsilon - tol * prev_upsilon.abs();
            prev_upsilon = u;
        }
        let mut prev_psi = f64::NEG_INFINITY;
        let mut prev_ratio = f64::INFINITY;
        for i in 0..n {
            let t = 10f64.powf(-8.0 + (0.49f64.log10() + 8.0) * i as f64 / (n - 1) as f64);
            let p = self.psi(t)?;
            ok &= p >= prev_psi - tol * prev_psi.abs();
            ok &= p / t <= prev_ratio * (1.0 + tol);
            prev_psi = p;
            prev_ratio = p / t;
        }
        Ok(ok)
    }
}

/// Which epsilon a certificate-consuming bound should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    /// The finite-d provable value `(1 - 1/d)^d` (or `(1/2)(1 - 1/N)^N`).
    Exact,
    /// The asymptotic constant `e^{-1}` (or `(2e)^{-1}`).
    Asymptotic,
}

/// A `(delta, eps)`-close-coupling certificate for a Gibbs kernel.
///
/// `n_steps` is 1 for the systematic scan and `N_d = ceil(4 d ln d)` for the
/// iterated random scan. Both the finite-d provable epsilon and the
/// asymptotic constant are carried; the exact one is the default downstream.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CloseCouplingCert {
    pub delta: f64,
    pub eps_exact: f64,
    pub eps_asymptotic: f64,
    pub n_steps: usize,
}

impl CloseCouplingCert {
    pub fn eps(&self, mode: EpsMode) -> f64 {
        match mode {
            EpsMode::Exact => self.eps_exact,
            EpsMode::Asymptotic => self.eps_asymptotic,
        }
    }
}

fn check_m_beta(m: f64, beta: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("need M > 0, got {m}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need beta in (0, 1], got {beta}"
        )));
    }
    Ok(())
}

/// Certificate for the systematic-scan kernel of an `(M, beta)`-TV-continuous
/// target: `delta = (M d)^{-1/beta}` with asymptotic `eps = e^{-1}` and exact
/// `eps = (1 - 1/d)^d` (degenerate 0 at d = 1).
pub fn close_coupling_ss(m: f64, beta: f64, d: usize) -> Result<CloseCouplingCert> {
    check_m_beta(m, beta)?;
    if d == 0 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    let df = d as f64;
    Ok(CloseCouplingCert {
        delta: (m * df).powf(-1.0 / beta),
        eps_exact: (1.0 - 1.0 / df).powi(d as i32),
        eps_asymptotic: (-1.0f64).exp(),
        n_steps: 1,
    })
}

/// Number of random-scan updates after which the coupon-collector bound
/// guarantees full coordinate coverage with probability at least 1/2.
pub fn coupon_block_length(d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidArgument(
            "iterated random scan certificates need d >= 2 (ln d vanishes at d = 1)".into(),
        ));
    }
    Ok((4.0 * d as f64 * (d as f64).ln()).ceil() as usize)
}

/// Certificate for the `N_d`-iterated random-scan kernel:
/// `N_d = ceil(4 d ln d)`, `delta = (M N_d)^{-1/beta}`, asymptotic
/// `eps = (2e)^{-1}`, exact `eps = (1/2)(1 - 1/N_d)^{N_d}`. The certified
/// `delta` always dominates `(5 M d ln d)^{-1/beta}`.
pub fn close_coupling_rs(m: f64, beta: f64, d: usize) -> Result<CloseCouplingCert> {
    check_m_beta(m, beta)?;
    let n = coupon_block_length(d)?;
    let nf = n as f64;
    Ok(CloseCouplingCert {
        delta: (m * nf).powf(-1.0 / beta),
        eps_exact: 0.5 * (1.0 - 1.0 / nf).powi(n as i32),
        eps_asymptotic: 0.5 * (-1.0f64).exp(),
        n_steps: n,
    })
}

/// The conductance lower bound as a bare formula:
/// `eps * Psi(1/4) / 2 * min(1 / (2 Psi(1/4)), Upsilon(delta))`.
pub fn conductance_lower_raw(upsilon_delta: f64, psi_quarter: f64, eps: f64) -> f64 {
    0.5 * eps * psi_quarter * (0.5 / psi_quarter).min(upsilon_delta)
}

/// Conductance lower bound from an isoperimetric profile and a close-coupling
/// certificate.
pub fn conductance_lower(
    profile: &IsoperimetricProfile,
    cert: &CloseCouplingCert,
    mode: EpsMode,
) -> Result<f64> {
    let eps = cert.eps(mode);
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok(conductance_lower_raw(
        profile.upsilon(cert.delta)?,
        profile.psi(0.25)?,
        eps,
    ))
}

/// Warm-start mixing time bound `tau(zeta, P) <= 2 / phi^2 * ln(sqrt(Omega) / zeta)`.
///
/// Returns 0 when `sqrt(Omega) <= zeta` (already mixed at the start).
pub fn mixing_time_upper(phi: f64, omega: f64, zeta: f64) -> Result<f64> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need conductance in (0, 1], got {phi}"
        )));
    }
    if !(omega >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need warm-start constant >= 1, got {omega}"
        )));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need zeta in (0, 1), got {zeta}"
        )));
    }
    let ratio = omega.sqrt() / zeta;
    if ratio <= 1.0 {
        return Ok(0.0);
    }
    Ok(2.0 / (phi * phi) * ratio.ln())
}

/// Warm-start TV decay envelope `min(1, sqrt(Omega) e^{-k phi^2 / 2})`.
pub fn tv_envelope(phi: f64, omega: f64, k: u64) -> f64 {
    (omega.sqrt() * (-(k as f64) * phi * phi / 2.0).exp()).min(1.0)
}

/// Cheeger interval `(phi^2 / 2, phi)` implied by a conductance value.
///
/// The upper half holds for reversible kernels with additional structure; the
/// verification suite measures where it fails (the two-state flip chain is a
/// counterexample as stated) and reports it as a known discrepancy.
pub fn cheeger_interval(phi: f64) -> (f64, f64) {
    (0.5 * phi * phi, phi)
}

/// Which quantity an iterated-kernel value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IteratedQuantity {
    Conductance,
    SpectralGap,
    MixingTime,
}

/// Transfers a bound on the N-fold kernel to the single-step kernel:
/// conductance and spectral gap divide by N, mixing time multiplies by N.
pub fn single_step_from_iterated(value: f64, n: usize, which: IteratedQuantity) -> f64 {
    match which {
        IteratedQuantity::Conductance | IteratedQuantity::SpectralGap => value / n as f64,
        IteratedQuantity::MixingTime => value * n as f64,
    }
}

/// Lower bound on the `L^r` log-Sobolev constant from the `L^q` one
/// (`1 <= q <= r`): `(5/128) (4/105)^{r/q} (q/r)^r c_q^{r/q}`.
pub fn lsi_hierarchy_constant(q: f64, r: f64, c_q: f64) -> Result<f64> {
    if !(q >= 1.0 && r >= q) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= q <= r, got q = {q}, r = {r}"
        )));
    }
    if !(c_q > 0.0) {
        return Err(Error::InvalidArgument(format!("need c_q > 0, got {c_q}")));
    }
    Ok((5.0 / 128.0) * (4.0 / 105.0f64).powf(r / q) * (q / r).powf(r) * c_q.powf(r / q))
}

/// Poincare constant implied by a log-Sobolev constant of the same order:
/// `c_PI >= 4 c_LS / ln 2`.
pub fn pi_from_lsi(c_lsi: f64) -> f64 {
    4.0 * c_lsi / (2.0f64).ln()
}

/// All inputs, intermediates, and outputs of one composed bound evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundReport {
    pub target: String,
    pub dim: usize,
    pub kernel: String,
    pub fi_kind: FiKind,
    pub q: f64,
    pub fi_constant: f64,
    pub tv_m: f64,
    pub tv_beta: f64,
    pub omega: f64,
    pub zeta: f64,
    pub eps_mode: EpsMode,
    /// Coupled block length: 1 for systematic scan, `N_d` for random scan.
    pub n_coupled: usize,
    pub delta: f64,
    pub eps_exact: f64,
    pub eps_asymptotic: f64,
    pub eps_used: f64,
    pub upsilon_delta: f64,
    pub psi_quarter: f64,
    /// Conductance lower bound for the coupled kernel (`P_SS` or `P_RS^{N_d}`).
    pub phi_block_lower: f64,
    /// Conductance lower bound for the kernel named in `kernel`.
    pub phi_lower: f64,
    /// Spectral gap lower bound when the kernel is reversible.
    pub lambda2_lower: Option<f64>,
    /// Mixing time upper bound, in steps of the kernel named in `kernel`.
    pub tau_upper: f64,
}

/// Chains certificate, profile, conductance bound, Cheeger / iterated-kernel
/// transfer, and the warm-start mixing bound for the requested kernel.
pub fn compose_bound_report(
    target_name: &str,
    dim: usize,
    fi: &FunctionalInequality,
    tv: &TvContinuity,
    kind: KernelKind,
    omega: f64,
    zeta: f64,
    eps_mode: EpsMode,
) -> Result<BoundReport> {
    if tv.m <= 0.0 {
        return Err(Error::Unavailable(
            "a positive tv-continuity constant M (the degenerate M = 0 case needs no bound)"
                .into(),
        ));
    }
    let profile = IsoperimetricProfile::from_fi(fi)?;
    let (cert, transfer) = match kind {
        KernelKind::Systematic => (close_coupling_ss(tv.m, tv.beta, dim)?, None),
        KernelKind::RandomScan => {
            let cert = close_coupling_rs(tv.m, tv.beta, dim)?;
            let n = cert.n_steps;
            (cert, Some(n))
        }
        KernelKind::RandomScanIterated { n } => {
            let cert = close_coupling_rs(tv.m, tv.beta, dim)?;
            if n != cert.n_steps {
                return Err(Error::Unavailable(format!(
                    "a certificate for the iterated random scan at N = {n}; the coupon bound \
                     certifies N_d = {}",
                    cert.n_steps
                )));
            }
            (cert, None)
        }
        KernelKind::ReversibilizedSystematic => {
            return Err(Error::Unavailable(
                "a close-coupling certificate for the reversibilized systematic scan".into(),
            ))
        }
    };
    let eps_used = cert.eps(eps_mode);
    if eps_used <= 0.0 {
        return Err(Error::Unavailable(format!(
            "a non-degenerate coupling epsilon: got {eps_used} (the exact epsilon vanishes at d = 1)"
        )));
    }
    if tv.m * cert.delta.powf(tv.beta) >= 1.0 {
        return Err(Error::Unavailable(format!(
            "an applicable certificate: M delta^beta = {} >= 1 makes the coupling bound vacuous",
            tv.m * cert.delta.powf(tv.beta)
        )));
    }
    let upsilon_delta = profile.upsilon(cert.delta)?;
    let psi_quarter = profile.psi(0.25)?;
    let phi_block_lower = conductance_lower_raw(upsilon_delta, psi_quarter, eps_used);
    let (phi_lower, lambda2_lower, tau_upper) = match (kind, transfer) {
        (KernelKind::Systematic, _) => {
            // not reversible for d >= 2, so no spectral gap is reported
            let lambda2 = if dim == 1 {
                Some(cheeger_interval(phi_block_lower).0)
            } else {
                None
            };
            (
                phi_block_lower,
                lambda2,
                mixing_time_upper(phi_block_lower, omega, zeta)?,
            )
        }
        (KernelKind::RandomScan, Some(n)) => {
            let phi = single_step_from_iterated(phi_block_lower, n, IteratedQuantity::Conductance);
            let gap_block = cheeger_interval(phi_block_lower).0;
            let gap = single_step_from_iterated(gap_block, n, IteratedQuantity::SpectralGap);
            let tau_block = mixing_time_upper(phi_block_lower, omega, zeta)?;
            let tau = single_step_from_iterated(tau_block, n, IteratedQuantity::MixingTime);
            (phi, Some(gap), tau)
        }
        (KernelKind::RandomScanIterated { .. }, _) => (
            phi_block_lower,
            Some(cheeger_interval(phi_block_lower).0),
            mixing_time_upper(phi_block_lower, omega, zeta)?,
        ),
        _ => unreachable!(),
    };
    Ok(BoundReport {
        target: target_name.to_string(),
        dim,
        kernel: kind.label(),
        fi_kind: fi.kind,
        q: fi.q,
        fi_constant: fi.constant,
        tv_m: tv.m,
        tv_beta: tv.beta,
        omega,
        zeta,
        eps_mode,
        n_coupled: cert.n_steps,
        delta: cert.delta,
        eps_exact: cert.eps_exact,
        eps_asymptotic: cert.eps_asymptotic,
        eps_used,
        upsilon_delta,
        psi_quarter,
        phi_block_lower,
        phi_lower,
        lambda2_lower,
        tau_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poincare(q: f64, c: f64) -> IsoperimetricProfile {
        IsoperimetricProfile::new(FiKind::Poincare, q, c).unwrap()
    }

    fn lsi(q: f64, c: f64) -> IsoperimetricProfile {
        IsoperimetricProfile::new(FiKind::LogSobolev, q, c).unwrap()
    }

    #[test]
    fn upsilon_golden_values() {
        assert_relative_eq!(
            poincare(1.0, 1.0).upsilon(1.0).unwrap(),
            1.0 / 12.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lsi(1.0, 1.0).upsilon(1.0).unwrap(),
            1.0 / (2.0 + (-1.0f64).exp()),
            max_relative = 1e-12
        );
        // limit 2^{-3q} approached from below
        let p = poincare(1.0, 1.0);
        let big = p.upsilon(1e12).unwrap();
        assert!(big < 0.125);
        assert_relative_eq!(big, 0.125, max_relative = 1e-9);
    }

    #[test]
    fn psi_golden_values() {
        assert_eq!(poincare(1.0, 1.0).psi(0.25).unwrap(), 0.25);
        assert_relative_eq!(
            lsi(1.0, 1.0).psi(0.25).unwrap(),
            0.125 * (8.0f64).ln(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lsi(1.0, 1.0).psi(0.5 - 1e-12).unwrap(),
            0.25 * (4.0f64).ln(),
            max_relative = 1e-9
        );
        assert!(poincare(1.0, 1.0).psi(0.5).is_err());
        assert!(poincare(1.0, 1.0).psi(0.0).is_err());
    }

    #[test]
    fn profiles_are_admissible() {
        for profile in [poincare(1.0, 1.0), poincare(2.0, 0.3), lsi(1.0, 1.0), lsi(2.0, 0.5)] {
            assert!(profile.check_admissible(1000).unwrap());
        }
    }

    #[test]
    fn small_t_equivalents() {
        let t = 1e-8;
        let p = poincare(2.0, 0.7);
        let ratio = p.upsilon(t).unwrap() / (0.7 * t * t / 16.0);
        assert_relative_eq!(ratio, 1.0, max_relative = 1e-6);
        let l = lsi(2.0, 0.7);
        let ratio = l.upsilon(t).unwrap() / (0.7 * t * t);
        assert_relative_eq!(ratio, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn systematic_certificate_golden_values() {
        let c = close_coupling_ss(1.0, 1.0, 4).unwrap();
        assert_relative_eq!(c.delta, 0.25, max_relative = 1e-15);
        assert_relative_eq!(c.eps_asymptotic, (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(c.eps_exact, 0.31640625, max_relative = 1e-15);
        assert_eq!(c.n_steps, 1);

        let c = close_coupling_ss(2.0, 0.5, 4).unwrap();
        assert_relative_eq!(c.delta, 0.015625, max_relative = 1e-15);

        // the finite-d guarantee degenerates at d = 1
        let c = close_coupling_ss(1.0, 1.0, 1).unwrap();
        assert_eq!(c.eps_exact, 0.0);
    }

    #[test]
    fn random_scan_certificate_golden_values() {
        let c = close_coupling_rs(1.0, 1.0, 4).unwrap();
        assert_eq!(c.n_steps, 23);
        assert_relative_eq!(c.delta, 1.0 / 23.0, max_relative = 1e-15);
        // direct arithmetic oracle: (1/2)(22/23)^23
        let oracle = 0.5 * (22.0f64 / 23.0).powi(23);
        assert_relative_eq!(c.eps_exact, oracle, max_relative = 1e-15);
        assert_relative_eq!(c.eps_exact, 0.17986697669007098, max_relative = 1e-12);
        assert!(close_coupling_rs(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn random_scan_delta_dominates_paper_floor() {
        for d in [2usize, 3, 5, 17, 100, 512] {
            for &(m, beta) in &[(1.0, 1.0), (2.0, 0.5), (0.3, 0.8)] {
                let c = close_coupling_rs(m, beta, d).unwrap();
                let floor = (5.0 * m * d as f64 * (d as f64).ln()).powf(-1.0 / beta);
                assert!(
                    c.delta >= floor - 1e-18,
                    "delta {} below floor {floor} at d = {d}",
                    c.delta
                );
            }
        }
    }

    #[test]
    fn conductance_lower_golden_value() {
        // Upsilon(1/48) = (1/48) / (4 (1 + 2/48)) = 1/200
        let p = poincare(1.0, 1.0);
        let u = p.upsilon(1.0 / 48.0).unwrap();
        assert_relative_eq!(u, 0.005, max_relative = 1e-12);
        let cert = CloseCouplingCert {
            delta: 1.0 / 48.0,
            eps_exact: (-1.0f64).exp(),
            eps_asymptotic: (-1.0f64).exp(),
            n_steps: 1,
        };
        let bound = conductance_lower(&p, &cert, EpsMode::Exact).unwrap();
        assert_relative_eq!(bound, 2.2992465073215146e-4, max_relative = 1e-9);
    }

    #[test]
    fn conductance_lower_saturated_min_and_degenerate_eps() {
        // when Upsilon(delta) >= 1/(2 Psi(1/4)) the bound collapses to eps/4
        assert_relative_eq!(
            conductance_lower_raw(3.0, 0.25, 0.2),
            0.05,
            max_relative = 1e-15
        );
        let p = poincare(1.0, 1.0);
        let cert = CloseCouplingCert {
            delta: 1.0,
            eps_exact: 0.0,
            eps_asymptotic: (-1.0f64).exp(),
            n_steps: 1,
        };
        assert_eq!(conductance_lower(&p, &cert, EpsMode::Exact).unwrap(), 0.0);
    }

    #[test]
    fn conductance_lower_monotone_in_parameters() {
        let cs = [0.3, 0.5, 1.0, 2.0, 5.0];
        let mut prev = 0.0;
        for &c in &cs {
            let p = poincare(1.0, c);
            let cert = close_coupling_ss(1.0, 1.0, 6).unwrap();
            let b = conductance_lower(&p, &cert, EpsMode::Exact).unwrap();
            assert!(b >= prev, "not nondecreasing in C");
            prev = b;
        }
        for q in [1.0, 1.5, 2.0] {
            for &kindc in &[(FiKind::Poincare, 1.3), (FiKind::LogSobolev, 0.4)] {
                let p = IsoperimetricProfile::new(kindc.0, q, kindc.1).unwrap();
                let mut prev = f64::INFINITY;
                for d in 2..40 {
                    let cert = close_coupling_ss(1.7, 0.5, d).unwrap();
                    let b = conductance_lower(&p, &cert, EpsMode::Exact).unwrap();
                    assert!(b <= prev + 1e-18, "not nonincreasing in d at d = {d}");
                    prev = b;
                }
                let mut prev = f64::INFINITY;
                for &m in &[0.2, 0.5, 1.0, 3.0, 10.0] {
                    let cert = close_coupling_ss(m, 0.5, 8).unwrap();
                    let b = conductance_lower(&p, &cert, EpsMode::Exact).unwrap();
                    assert!(b <= prev + 1e-18, "not nonincreasing in M");
                    prev = b;
                }
            }
        }
    }

    #[test]
    fn eps_exact_approaches_asymptotic_constant() {
        let c = close_coupling_ss(1.0, 1.0, 10_000).unwrap();
        assert!((c.eps_exact - c.eps_asymptotic).abs() < 1e-3);
        let c = close_coupling_rs(1.0, 1.0, 10_000).unwrap();
        assert!((c.eps_exact - c.eps_asymptotic).abs() < 1e-3);
    }

    #[test]
    fn mixing_time_golden_values() {
        let got = mixing_time_upper(0.1, (2.0f64).exp(), 0.01).unwrap();
        assert_relative_eq!(got, 200.0 * (100.0 * std::f64::consts::E).ln(), max_relative = 1e-12);
        assert_relative_eq!(got, 1121.0340371976184, max_relative = 1e-9);
        // direct arithmetic: 800 ln(1e4)
        let got = mixing_time_upper(0.05, 1e4, 0.01).unwrap();
        assert_relative_eq!(got, 800.0 * (1e4f64).ln(), max_relative = 1e-12);
        // warm start already within zeta: vanishes as zeta -> 1
        assert!(mixing_time_upper(1.0, 1.0, 0.999999).unwrap() < 1e-5);
        assert!(mixing_time_upper(1.0, 1.0, 1.0 - 1e-12).unwrap() < 1e-11);
    }

    #[test]
    fn envelope_golden_values() {
        assert_eq!(tv_envelope(0.3, 1.0, 0), 1.0);
        assert_relative_eq!(
            tv_envelope(0.5, 4.0, 16),
            2.0 * (-2.0f64).exp(),
            max_relative = 1e-12
        );
        // no decay at phi = 0: constant min(1, sqrt(Omega))
        assert_eq!(tv_envelope(0.0, 9.0, 1_000_000), 1.0);
    }

    #[test]
    fn cheeger_interval_values() {
        assert_eq!(cheeger_interval(0.2), (0.020000000000000004, 0.2));
        assert_eq!(cheeger_interval(1.0), (0.5, 1.0));
        assert_eq!(cheeger_interval(0.0), (0.0, 0.0));
    }

    #[test]
    fn iterated_transfer_values() {
        assert_relative_eq!(
            single_step_from_iterated(0.46, 23, IteratedQuantity::Conductance),
            0.02,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            single_step_from_iterated(0.46, 23, IteratedQuantity::MixingTime),
            10.58,
            max_relative = 1e-12
        );
        assert_eq!(
            single_step_from_iterated(0.37, 1, IteratedQuantity::SpectralGap),
            0.37
        );
    }

    #[test]
    fn lsi_hierarchy_golden_values() {
        assert_relative_eq!(
            lsi_hierarchy_constant(1.0, 2.0, 1.0).unwrap(),
            1.4172335600907032e-5,
            max_relative = 1e-9
        );
        // r = q keeps the bound consistent (below the input constant)
        for &c in &[0.1, 1.0, 7.3] {
            let b = lsi_hierarchy_constant(2.0, 2.0, c).unwrap();
            assert_relative_eq!(b, (5.0 / 128.0) * (4.0 / 105.0) * c, max_relative = 1e-12);
            assert!(b <= c);
        }
        // direct arithmetic oracle for (2, 4, 0.25)
        let oracle = (5.0 / 128.0) * (4.0f64 / 105.0).powi(2) * 0.5f64.powi(4) * 0.25f64.powi(2);
        assert_relative_eq!(
            lsi_hierarchy_constant(2.0, 4.0, 0.25).unwrap(),
            oracle,
            max_relative = 1e-12
        );
        assert!(lsi_hierarchy_constant(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pi_from_lsi_values() {
        assert_relative_eq!(pi_from_lsi(1.0), 5.770780163555856, max_relative = 1e-9);
        assert_eq!(pi_from_lsi(0.0), 0.0);
        assert_relative_eq!(pi_from_lsi((2.0f64).ln() / 4.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn composed_report_matches_manual_composition() {
        let fi = FunctionalInequality::new(FiKind::Poincare, 1.0, 1.0).unwrap();
        let tv = TvContinuity::new(3.0f64.sqrt(), 0.5).unwrap();
        let report = compose_bound_report(
            "perturbed_laplace",
            4,
            &fi,
            &tv,
            KernelKind::Systematic,
            100.0,
            0.01,
            EpsMode::Asymptotic,
        )
        .unwrap();
        // delta = (sqrt(3) * 4)^{-2} = 1/48, Upsilon = 1/200
        assert_relative_eq!(report.delta, 1.0 / 48.0, max_relative = 1e-12);
        assert_relative_eq!(report.upsilon_delta, 0.005, max_relative = 1e-12);
        assert_relative_eq!(report.phi_lower, 2.2992465073215146e-4, max_relative = 1e-9);
        // manual recomposition is bit-identical
        let profile = IsoperimetricProfile::from_fi(&fi).unwrap();
        let cert = close_coupling_ss(tv.m, tv.beta, 4).unwrap();
        let phi = conductance_lower(&profile, &cert, EpsMode::Asymptotic).unwrap();
        assert_eq!(report.phi_lower.to_bits(), phi.to_bits());
        assert_eq!(
            report.tau_upper.to_bits(),
            mixing_time_upper(phi, 100.0, 0.01).unwrap().to_bits()
        );
        assert!(report.lambda2_lower.is_none());
    }

    #[test]
    fn composed_report_random_scan_applies_iterated_transfer() {
        let fi = FunctionalInequality::new(FiKind::Poincare, 1.0, 1.0).unwrap();
        let tv = TvContinuity::new(1.0, 1.0).unwrap(); // smooth_l = 1
        let report = compose_bound_report(
            "gaussian_product",
            2,
            &fi,
            &tv,
            KernelKind::RandomScan,
            16.0,
            0.01,
            EpsMode::Exact,
        )
        .unwrap();
        assert_eq!(report.n_coupled, 6); // ceil(8 ln 2)
        assert_relative_eq!(report.delta, 1.0 / 6.0, max_relative = 1e-12);
        assert_eq!(report.phi_lower, report.phi_block_lower / 6.0);
        let tau_block = mixing_time_upper(report.phi_block_lower, 16.0, 0.01).unwrap();
        assert_eq!(report.tau_upper, 6.0 * tau_block);
        assert_eq!(
            report.lambda2_lower.unwrap(),
            0.5 * report.phi_block_lower * report.phi_block_lower / 6.0
        );
    }

    #[test]
    fn composed_report_degenerate_and_unavailable_cases() {
        let fi = FunctionalInequality::new(FiKind::Poincare, 1.0, 1.0).unwrap();
        let tv = TvContinuity::new(1.0, 1.0).unwrap();
        // d = 1 with exact epsilon: degenerate
        let err = compose_bound_report(
            "g",
            1,
            &fi,
            &tv,
            KernelKind::Systematic,
            4.0,
            0.01,
            EpsMode::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unavailable(_)));
        // reversibilized scan has no certificate
        let err = compose_bound_report(
            "g",
            4,
            &fi,
            &tv,
            KernelKind::ReversibilizedSystematic,
            4.0,
            0.01,
            EpsMode::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unavailable(_)));
        // iterated random scan at a non-certified N
        let err = compose_bound_report(
            "g",
            4,
            &fi,
            &tv,
            KernelKind::RandomScanIterated { n: 10 },
            4.0,
            0.01,
            EpsMode::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unavailable(_)));
    }
}
