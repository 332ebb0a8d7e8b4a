//! Exact finite-state oracles and property checkers: discretized targets and
//! their Gibbs matrices, brute-force conductance and spectral gaps, TV-decay
//! curves against the warm-start envelope, three-set inequality sweeps, the
//! coupon-collector formula, and the regularity lemma checks.

mod checks;
mod discrete;
mod spectral;
mod threeset;

pub use checks::{
    check_close_coupling, check_marginal_regularity, check_rho_lemma, coupon_probability_exact,
    CloseCouplingReport, MarginalReport, PairOutcome, RhoReport,
};
pub use discrete::{
    build_gibbs_matrices, detailed_balance_max_violation, discretize_target, DiscreteTarget,
    GibbsMatrices, TransitionMatrix, PI_FLOOR,
};
pub use spectral::{
    exact_conductance, exact_spectral_gap, rayleigh_pi2_diagnostic, tv_decay_curve,
    ConductanceMode, ConductanceResult, EXHAUSTIVE_CAP,
};
pub use threeset::{check_three_set, PartitionTriple, ThreeSetReport};
