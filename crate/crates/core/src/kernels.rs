//! Gibbs kernels (systematic scan, random scan, iterated random scan,
//! reversibilized systematic scan), their sequential maximal couplings, and
//! chain runners.

use rand::Rng;
use rayon::prelude::*;

use crate::conditional::{maximal_coupling_sample, sample_inverse_cdf, slice_conditional, GridSet};
use crate::error::{Error, Result};
use crate::rng::{RngFactory, STREAM_COUPLING, STREAM_SCAN_INDICES};
use crate::target::TargetSpec;

/// Which Gibbs kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelKind {
    /// One sweep updating coordinates 1..d in order (coordinate 1 acts first).
    Systematic,
    /// A single uniformly chosen coordinate update.
    RandomScan,
    /// `n` consecutive random-scan updates as one step.
    RandomScanIterated { n: usize },
    /// Forward sweep followed by a backward sweep: 1..d then d-1..1.
    ReversibilizedSystematic,
}

impl KernelKind {
    pub fn label(&self) -> String {
        match self {
            KernelKind::Systematic => "systematic".into(),
            KernelKind::RandomScan => "random_scan".into(),
            KernelKind::RandomScanIterated { n } => format!("random_scan_iterated({n})"),
            KernelKind::ReversibilizedSystematic => "reversibilized_systematic".into(),
        }
    }
}

/// Deterministic coordinate update order of a kernel, if it has one.
///
/// The composition convention is that the rightmost factor of a kernel
/// product acts first, so the systematic scan updates coordinate 0 first and
/// the reversibilized variant traces 0,..,d-1,..,0 (2d - 1 updates).
pub fn scan_order(kind: KernelKind, dim: usize) -> Option<Vec<usize>> {
    match kind {
        KernelKind::Systematic => Some((0..dim).collect()),
        KernelKind::ReversibilizedSystematic => {
            let mut order: Vec<usize> = (0..dim).collect();
            order.extend((0..dim.saturating_sub(1)).rev());
            Some(order)
        }
        KernelKind::RandomScan | KernelKind::RandomScanIterated { .. } => None,
    }
}

/// Resamples coordinate `k` from its conditional; all other coordinates stay
/// bit-identical.
pub fn step_coordinate<R: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    k: usize,
    state: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    let slice = slice_conditional(target, k, state, grids.grid(k))?;
    let u: f64 = rng.random();
    state[k] = sample_inverse_cdf(&slice.pmf, u)?;
    Ok(())
}

/// One step of the chosen kernel, in place.
pub fn step_kernel<R: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    kind: KernelKind,
    state: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    match kind {
        KernelKind::Systematic | KernelKind::ReversibilizedSystematic => {
            for k in scan_order(kind, target.dim()).unwrap() {
                step_coordinate(target, grids, k, state, rng)?;
            }
            Ok(())
        }
        KernelKind::RandomScan => {
            let k = rng.random_range(0..target.dim());
            step_coordinate(target, grids, k, state, rng)
        }
        KernelKind::RandomScanIterated { n } => {
            if n == 0 {
                return Err(Error::InvalidArgument(
                    "iterated random scan needs n >= 1".into(),
                ));
            }
            for _ in 0..n {
                let k = rng.random_range(0..target.dim());
                step_coordinate(target, grids, k, state, rng)?;
            }
            Ok(())
        }
    }
}

/// Two chains evolved under a common coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub coalesced: bool,
}

impl CoupledPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(
                "coupled states must share a dimension".into(),
            ));
        }
        let coalesced = states_equal(&x, &y);
        Ok(Self { x, y, coalesced })
    }

    fn refresh_coalesced(&mut self) {
        self.coalesced = states_equal(&self.x, &self.y);
    }
}

fn states_equal(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits())
}

fn rest_equal(x: &[f64], y: &[f64], skip: usize) -> bool {
    x.iter()
        .zip(y)
        .enumerate()
        .all(|(i, (a, b))| i == skip || a.to_bits() == b.to_bits())
}

fn couple_coordinate<R: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    k: usize,
    pair: &mut CoupledPair,
    rng: &mut R,
) -> Result<()> {
    let slice_x = slice_conditional(target, k, &pair.x, grids.grid(k))?;
    // identical conditioning contexts share one slice, so their maximal
    // coupling meets with probability one and coalescence is preserved
    let (w, wp, _met) = if rest_equal(&pair.x, &pair.y, k) {
        maximal_coupling_sample(&slice_x.pmf, &slice_x.pmf, rng)?
    } else {
        let slice_y = slice_conditional(target, k, &pair.y, grids.grid(k))?;
        maximal_coupling_sample(&slice_x.pmf, &slice_y.pmf, rng)?
    };
    pair.x[k] = w;
    pair.y[k] = wp;
    Ok(())
}

/// One sweep of the sequential maximal coupling of the systematic-scan kernel:
/// for k = 1..d, draw the two conditionals at coordinate k maximally coupled
/// and write the pair into the two chains.
pub fn coupled_step_systematic<R: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    pair: &mut CoupledPair,
    rng: &mut R,
) -> Result<()> {
    for k in 0..target.dim() {
        couple_coordinate(target, grids, k, pair, rng)?;
    }
    pair.refresh_coalesced();
    Ok(())
}

/// `n_steps` coupled random-scan updates driven by a shared index sequence.
///
/// The scan indices are common randomness for both chains and are drawn from
/// `idx_rng`, a stream independent of the conditional-coupling draws in
/// `coup_rng`. Returns whether the index sequence covered all coordinates.
pub fn coupled_step_random_scan<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    pair: &mut CoupledPair,
    n_steps: usize,
    idx_rng: &mut R1,
    coup_rng: &mut R2,
) -> Result<bool> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("need n_steps >= 1".into()));
    }
    let d = target.dim();
    let mut seen = vec![false; d];
    for _ in 0..n_steps {
        let k = idx_rng.random_range(0..d);
        seen[k] = true;
        couple_coordinate(target, grids, k, pair, coup_rng)?;
        pair.refresh_coalesced();
    }
    Ok(seen.iter().all(|s| *s))
}

/// Monte Carlo estimate of the probability that one coupled transition from
/// `(x, y)` coalesces, with its binomial standard error.
///
/// `Systematic` runs one coupled sweep per repetition;
/// `RandomScanIterated { n }` runs one n-step coupled block. Repetitions use
/// disjoint random streams and run in parallel; the result is independent of
/// scheduling.
pub fn estimate_meeting_probability(
    target: &TargetSpec,
    grids: &GridSet,
    kind: KernelKind,
    x: &[f64],
    y: &[f64],
    n_reps: usize,
    factory: &RngFactory,
) -> Result<(f64, f64)> {
    if n_reps == 0 {
        return Err(Error::InvalidArgument("need n_reps >= 1".into()));
    }
    let met_flags: Vec<Result<bool>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let sub = factory.derive(rep as u64);
            let mut pair = CoupledPair::new(x.to_vec(), y.to_vec())?;
            match kind {
                KernelKind::Systematic => {
                    let mut rng = sub.stream(STREAM_COUPLING);
                    coupled_step_systematic(target, grids, &mut pair, &mut rng)?;
                }
                KernelKind::RandomScanIterated { n } => {
                    let mut idx = sub.stream(STREAM_SCAN_INDICES);
                    let mut coup = sub.stream(STREAM_COUPLING);
                    coupled_step_random_scan(target, grids, &mut pair, n, &mut idx, &mut coup)?;
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "meeting probability is estimated for systematic or iterated \
                         random scan kernels, not {}",
                        other.label()
                    )))
                }
            }
            Ok(pair.coalesced)
        })
        .collect();
    let mut met = 0usize;
    for flag in met_flags {
        if flag? {
            met += 1;
        }
    }
    let p = met as f64 / n_reps as f64;
    let stderr = (p * (1.0 - p) / n_reps as f64).sqrt();
    Ok((p, stderr))
}

/// A recorded chain trajectory (state 0 is the start, then every `thin`-th
/// state).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub thin: u64,
    pub steps: Vec<u64>,
    pub states: Vec<Vec<f64>>,
}

/// Runs `n_steps` kernel steps from `x0`, recording every `thin`-th state.
pub fn run_chain<R: Rng + ?Sized>(
    target: &TargetSpec,
    grids: &GridSet,
    kind: KernelKind,
    x0: &[f64],
    n_steps: u64,
    thin: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    if thin == 0 {
        return Err(Error::InvalidArgument("thin must be >= 1".into()));
    }
    if !target.contains(x0) {
        return Err(Error::InvalidArgument(
            "initial state outside the target box".into(),
        ));
    }
    let mut state = x0.to_vec();
    let mut traj = Trajectory {
        thin,
        steps: vec![0],
        states: vec![state.clone()],
    };
    for step in 1..=n_steps {
        step_kernel(target, grids, kind, &mut state, rng)?;
        if step % thin == 0 {
            traj.steps.push(step);
            traj.states.push(state.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::STREAM_CHAIN;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn gaussian(dim: usize, radius: f64) -> TargetSpec {
        let mut p = BTreeMap::new();
        p.insert("box_radius".to_string(), radius);
        crate::target::builtin_target("gaussian_product", dim, &p).unwrap()
    }

    fn perturbed(dim: usize) -> TargetSpec {
        crate::target::builtin_target("perturbed_laplace", dim, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn scan_orders_are_definitional() {
        assert_eq!(scan_order(KernelKind::Systematic, 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(
            scan_order(KernelKind::ReversibilizedSystematic, 3).unwrap(),
            vec![0, 1, 2, 1, 0]
        );
        assert_eq!(
            scan_order(KernelKind::ReversibilizedSystematic, 1).unwrap(),
            vec![0]
        );
        assert!(scan_order(KernelKind::RandomScan, 3).is_none());
    }

    #[test]
    fn step_coordinate_keeps_other_coordinates_bit_identical() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let mut state = vec![5.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        step_coordinate(&t, &grids, 0, &mut state, &mut rng).unwrap();
        assert_eq!(state[1].to_bits(), 2.0f64.to_bits());
        assert_ne!(state[0], 5.0);
    }

    #[test]
    fn random_scan_changes_at_most_one_coordinate() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let mut state = vec![1.0, -1.5];
            let before = state.clone();
            step_kernel(&t, &grids, KernelKind::RandomScan, &mut state, &mut rng).unwrap();
            let changed = state
                .iter()
                .zip(&before)
                .filter(|(a, b)| a.to_bits() != b.to_bits())
                .count();
            assert!(changed <= 1);
        }
    }

    #[test]
    fn single_coordinate_update_has_exact_conditional_moments() {
        // for the product Gaussian the conditional is N(0,1) regardless of
        // the frozen coordinate
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 1025).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let mut state = vec![0.0, 1.7];
            step_coordinate(&t, &grids, 0, &mut state, &mut rng).unwrap();
            sum += state[0];
            sumsq += state[0] * state[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn coupled_systematic_preserves_coalescence_forever() {
        let t = perturbed(3);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut pair = CoupledPair::new(vec![0.5, -0.5, 1.0], vec![0.5, -0.5, 1.0]).unwrap();
        assert!(pair.coalesced);
        for _ in 0..20 {
            coupled_step_systematic(&t, &grids, &mut pair, &mut rng).unwrap();
            assert!(pair.coalesced);
            assert_eq!(pair.x, pair.y);
        }
    }

    #[test]
    fn one_random_scan_step_cannot_equalize_two_differing_coordinates() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        for seed in 0..40 {
            let f = RngFactory::new(seed);
            let mut idx = f.stream(STREAM_SCAN_INDICES);
            let mut coup = f.stream(STREAM_COUPLING);
            let mut pair = CoupledPair::new(vec![0.3, 0.4], vec![-0.2, 1.1]).unwrap();
            coupled_step_random_scan(&t, &grids, &mut pair, 1, &mut idx, &mut coup).unwrap();
            assert!(!pair.coalesced);
        }
    }

    #[test]
    fn meeting_probability_trivial_cases() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let f = RngFactory::new(99);
        let (p, se) = estimate_meeting_probability(
            &t,
            &grids,
            KernelKind::Systematic,
            &[0.4, 0.4],
            &[0.4, 0.4],
            200,
            &f,
        )
        .unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(se, 0.0);

        // far-apart pair on a correlated target: the conditional means drift
        // apart with the frozen coordinate, so the conditionals are nearly
        // disjoint (product or radial targets would still couple by symmetry)
        let t = TargetSpec::from_expression(
            "tilted",
            "x1^2/2 + x2^2/2 + 0.5*x1*x2",
            2,
            vec![(-8.0, 8.0), (-8.0, 8.0)],
            Default::default(),
        )
        .unwrap();
        let grids = GridSet::uniform(&t, 513).unwrap();
        let (p, _) = estimate_meeting_probability(
            &t,
            &grids,
            KernelKind::Systematic,
            &[-6.0, -6.0],
            &[6.0, 6.0],
            200,
            &f.derive(1),
        )
        .unwrap();
        assert!(p < 0.05, "far pair met with frequency {p}");
    }

    #[test]
    fn meeting_probability_close_gaussian_pair_is_high() {
        // per-coordinate tv of the shifted normal conditionals is about 0.04,
        // so the product bound gives roughly (1 - 0.04)^2
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 513).unwrap();
        let f = RngFactory::new(1234);
        let (p, _) = estimate_meeting_probability(
            &t,
            &grids,
            KernelKind::Systematic,
            &[0.0, 0.0],
            &[0.1, 0.1],
            10_000,
            &f,
        )
        .unwrap();
        assert!(p >= 0.8, "meeting estimate {p}");
    }

    #[test]
    fn meeting_probability_is_deterministic_given_seed() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let f = RngFactory::new(5150);
        let run = || {
            estimate_meeting_probability(
                &t,
                &grids,
                KernelKind::RandomScanIterated { n: 6 },
                &[0.0, 0.1],
                &[0.05, 0.0],
                500,
                &f,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn run_chain_zero_steps_records_start_only() {
        let t = gaussian(1, 8.0);
        let grids = GridSet::uniform(&t, 257).unwrap();
        let mut rng = RngFactory::new(0).stream(STREAM_CHAIN);
        let traj = run_chain(&t, &grids, KernelKind::Systematic, &[0.5], 0, 1, &mut rng).unwrap();
        assert_eq!(traj.states, vec![vec![0.5]]);
        assert_eq!(traj.steps, vec![0]);
    }

    #[test]
    fn gaussian_chain_moments_match_target() {
        let t = gaussian(2, 8.0);
        let grids = GridSet::uniform(&t, 1025).unwrap();
        let mut rng = RngFactory::new(77).stream(STREAM_CHAIN);
        let traj = run_chain(
            &t,
            &grids,
            KernelKind::Systematic,
            &[0.0, 0.0],
            100_000,
            1,
            &mut rng,
        )
        .unwrap();
        for k in 0..2 {
            let vals: Vec<f64> = traj.states.iter().map(|s| s[k]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 0.02, "coordinate {k} mean {mean}");
            assert!((var - 1.0).abs() < 0.03, "coordinate {k} var {var}");
        }
    }

    #[test]
    fn reversibilized_step_consumes_updates_in_palindromic_order() {
        // d = 1 makes each coordinate update an independent draw from pi, so
        // counting rng consumption pins the number of updates; the order
        // itself is pinned by scan_order
        let t = gaussian(3, 8.0);
        let grids = GridSet::uniform(&t, 129).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = vec![0.1, 0.2, 0.3];
        let before = state.clone();
        step_kernel(
            &t,
            &grids,
            KernelKind::ReversibilizedSystematic,
            &mut state,
            &mut rng,
        )
        .unwrap();
        // 5 updates consumed for d = 3: one uniform each
        let mut reference = ChaCha8Rng::seed_from_u64(1);
        let mut manual = before;
        for k in [0usize, 1, 2, 1, 0] {
            step_coordinate(&t, &grids, k, &mut manual, &mut reference).unwrap();
        }
        assert_eq!(state, manual);
    }
}
