//! Distributional checks tying the continuous kernel machinery to the exact
//! discrete matrices: per-step transition laws, coupling faithfulness, and
//! the displayed close-coupling bound.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gibbs_core::conditional::GridSet;
use gibbs_core::kernels::{
    coupled_step_systematic, run_chain, step_kernel, CoupledPair, KernelKind,
};
use gibbs_core::lab::{build_gibbs_matrices, discretize_target};
use gibbs_core::rng::RngFactory;
use gibbs_core::target::{builtin_target, TargetSpec};

fn gaussian2(radius: f64) -> TargetSpec {
    let mut p = BTreeMap::new();
    p.insert("box_radius".to_string(), radius);
    builtin_target("gaussian_product", 2, &p).unwrap()
}

/// Bin index of a sampled coordinate value under the piecewise-linear CDF
/// model: 0 for the left-endpoint atom, then one bin per grid segment, plus a
/// right-endpoint atom.
fn segment_bin(points: &[f64], t: f64) -> usize {
    if t <= points[0] {
        return 0;
    }
    if t >= *points.last().unwrap() {
        return points.len();
    }
    // first index with points[j] >= t, giving segment (t_{j-1}, t_j]
    points.partition_point(|p| *p < t)
}

/// Expected bin probabilities of one coordinate update: the atom at each
/// endpoint carries half that point's weight, each segment the mean of its
/// endpoint weights.
fn segment_probs(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.5 * weights[0]);
    for j in 1..n {
        out.push(0.5 * (weights[j - 1] + weights[j]));
    }
    out.push(0.5 * weights[n - 1]);
    out
}

#[test]
fn step_kernel_transitions_match_the_exact_matrix_rows() {
    // the exact P_k rows of the gridded target are the same renormalized
    // slices the sampler draws from, so single-step frequencies from a fixed
    // state must match the matrix row within multinomial noise
    let t = gaussian2(8.0);
    let points_per_axis = 9;
    let disc = discretize_target(&t, &[points_per_axis, points_per_axis]).unwrap();
    let gm = build_gibbs_matrices(&disc, None).unwrap();
    let grids = GridSet::uniform(&t, points_per_axis).unwrap();

    // start at the grid state (i, j) = (5, 3)
    let start_idx = disc.flatten(&[5, 3]);
    let start = disc.state_coords(start_idx);
    let n_samples = 20_000usize;

    for axis in 0..2 {
        let mut rng = ChaCha8Rng::seed_from_u64(42 + axis as u64);
        let mut counts = vec![0usize; points_per_axis + 1];
        for _ in 0..n_samples {
            let mut state = start.clone();
            gibbs_core::kernels::step_coordinate(&t, &grids, axis, &mut state, &mut rng).unwrap();
            counts[segment_bin(grids.grid(axis).points(), state[axis])] += 1;
        }
        // matrix row restricted to the line through `start` along `axis`
        let row = gm.p_coord[axis].row(start_idx);
        let mut line_weights = Vec::with_capacity(points_per_axis);
        for v in 0..points_per_axis {
            let mut multi = disc.unflatten(start_idx);
            multi[axis] = v;
            line_weights.push(row[disc.flatten(&multi)]);
        }
        let expected = segment_probs(&line_weights);
        for (bin, (&c, &p)) in counts.iter().zip(&expected).enumerate() {
            let sigma = (p * (1.0 - p) / n_samples as f64).sqrt();
            let freq = c as f64 / n_samples as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma + 2e-4,
                "axis {axis} bin {bin}: freq {freq} vs expected {p} (sigma {sigma})"
            );
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn coupled_marginals_are_indistinguishable_from_plain_chains() {
    let mut params = BTreeMap::new();
    params.insert("box_radius".to_string(), 10.0);
    let t = builtin_target("laplace_mixture", 2, &params).unwrap();
    let grids = GridSet::uniform(&t, 1025).unwrap();
    let n = 5000usize;
    let burn = 200usize;

    // coupled pair started apart; collect the x-marginal
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pair = CoupledPair::new(vec![1.0, 1.0], vec![-1.0, -1.0]).unwrap();
    let mut coupled_samples = Vec::with_capacity(n);
    for step in 0..(n + burn) {
        coupled_step_systematic(&t, &grids, &mut pair, &mut rng).unwrap();
        if step >= burn {
            coupled_samples.push(pair.x[0]);
        }
    }

    // plain systematic chain from the same start
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let traj = run_chain(
        &t,
        &grids,
        KernelKind::Systematic,
        &[1.0, 1.0],
        (n + burn) as u64,
        1,
        &mut rng,
    )
    .unwrap();
    let plain_samples: Vec<f64> = traj.states[burn + 1..].iter().map(|s| s[0]).collect();

    let d = ks_statistic(coupled_samples, plain_samples);
    // two-sample critical value at significance 1e-3
    let critical = 1.94947 * (2.0 / n as f64).sqrt();
    assert!(d <= critical, "ks statistic {d} above critical {critical}");
}

#[test]
fn systematic_coupling_meets_at_least_as_often_as_the_displayed_bound() {
    // non-meeting frequency <= 1 - (1 - M t^beta)^d + 4 sigma for pairs at
    // distance <= t, with (M, beta) = (sqrt(3), 1/2)
    let t = builtin_target("perturbed_laplace", 3, &BTreeMap::new()).unwrap();
    let grids = GridSet::uniform(&t, 513).unwrap();
    let dist = 0.05f64;
    let m = 3.0f64.sqrt();
    let bound = 1.0 - (1.0 - m * dist.sqrt()).powi(3);

    let factory = RngFactory::new(2718);
    let mut pair_rng = factory.stream(9);
    let n_pairs = 10;
    let n_reps = 2000;
    for pair_idx in 0..n_pairs {
        use rand::Rng;
        let x: Vec<f64> = (0..3).map(|_| pair_rng.random_range(-4.0..4.0)).collect();
        let mut y = x.clone();
        // random direction scaled to length `dist`
        let dir: Vec<f64> = (0..3).map(|_| pair_rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        for (yi, di) in y.iter_mut().zip(&dir) {
            *yi += dist * di / norm;
        }
        let (meet, se) = gibbs_core::kernels::estimate_meeting_probability(
            &t,
            &grids,
            KernelKind::Systematic,
            &x,
            &y,
            n_reps,
            &factory.derive(pair_idx),
        )
        .unwrap();
        let non_meet = 1.0 - meet;
        assert!(
            non_meet <= bound + 4.0 * se,
            "pair {pair_idx}: non-meeting {non_meet} above bound {bound} + 4 se"
        );
    }
}

#[test]
fn laplace_mixture_chain_matches_quadrature_moments() {
    let mut params = BTreeMap::new();
    params.insert("box_radius".to_string(), 20.0);
    let t = builtin_target("laplace_mixture", 2, &params).unwrap();

    // quadrature oracle for the per-coordinate variance of the mixture
    let n_quad = 801;
    let h = 40.0 / (n_quad - 1) as f64;
    let mut total = 0.0;
    let mut second = 0.0;
    for i in 0..n_quad {
        let x = -20.0 + h * i as f64;
        for j in 0..n_quad {
            let y = -20.0 + h * j as f64;
            let w = (-t.potential_eval(&[x, y]).unwrap()).exp()
                * if i == 0 || i == n_quad - 1 { 0.5 } else { 1.0 }
                * if j == 0 || j == n_quad - 1 { 0.5 } else { 1.0 };
            total += w;
            second += w * x * x;
        }
    }
    let oracle_var = second / total; // mean is 0 by symmetry

    let grids = GridSet::uniform(&t, 1025).unwrap();
    let mut rng = RngFactory::new(99).stream(0);
    let traj = run_chain(
        &t,
        &grids,
        KernelKind::RandomScan,
        &[0.0, 0.0],
        200_000,
        1,
        &mut rng,
    )
    .unwrap();
    for k in 0..2 {
        let vals: Vec<f64> = traj.states.iter().map(|s| s[k]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 0.05, "coordinate {k}: mean {mean}");
        assert!(
            (var - oracle_var).abs() < 0.15,
            "coordinate {k}: var {var} vs quadrature {oracle_var}"
        );
    }
}

#[test]
fn random_scan_iterated_step_changes_nothing_but_visited_coordinates() {
    let t = gaussian2(8.0);
    let grids = GridSet::uniform(&t, 257).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = vec![0.25, -0.75];
    step_kernel(
        &t,
        &grids,
        KernelKind::RandomScanIterated { n: 1 },
        &mut state,
        &mut rng,
    )
    .unwrap();
    let before = [0.25f64, -0.75];
    let changed = state
        .iter()
        .zip(before.iter())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    assert!(changed <= 1);
}
