//! Three-set isoperimetric inequality checks over random gapped partitions
//! and deterministic cut families.

use rand::Rng;

use crate::bounds::IsoperimetricProfile;
use crate::error::{Error, Result};
use crate::lab::discrete::DiscreteTarget;

/// A partition of the grid states into `S1 | S2 | S3` with the measured gap
/// between `S1` and `S2`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PartitionTriple {
    /// Per-state label: 0 for S1, 1 for S2, 2 for S3.
    pub labels: Vec<u8>,
    /// Min pairwise Euclidean distance between S1 and S2 states.
    pub gap: f64,
    pub mass: [f64; 3],
}

impl PartitionTriple {
    fn from_labels(disc: &DiscreteTarget, labels: Vec<u8>) -> Option<Self> {
        let mut mass = [0.0f64; 3];
        for (s, &l) in labels.iter().enumerate() {
            mass[l as usize] += disc.pi()[s];
        }
        let any = |side: u8| labels.iter().any(|&l| l == side);
        // S1 and S2 must be nonempty; an empty S3 is a grid artifact with no
        // continuum counterpart (one cannot split R^d into two sets at
        // positive distance), so those draws are rejected too
        if !any(0) || !any(1) || !any(2) {
            return None;
        }
        let gap = min_cross_distance(disc, &labels)?;
        Some(Self { labels, gap, mass })
    }
}

fn min_cross_distance(disc: &DiscreteTarget, labels: &[u8]) -> Option<f64> {
    if disc.dim() == 1 {
        // single scan over the sorted line
        let pts = disc.grids()[0].points();
        let mut last: [Option<f64>; 2] = [None, None];
        let mut best = f64::INFINITY;
        for (s, &l) in labels.iter().enumerate() {
            if l > 1 {
                continue;
            }
            let t = pts[s];
            if let Some(other) = last[1 - l as usize] {
                best = best.min(t - other);
            }
            last[l as usize] = Some(t);
        }
        return best.is_finite().then_some(best);
    }
    let s1: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] == 0).collect();
    let s2: Vec<usize> = (0..labels.len()).filter(|&s| labels[s] == 1).collect();
    let mut best = f64::INFINITY;
    for &a in &s1 {
        for &b in &s2 {
            let d = disc.state_distance(a, b);
            if d < best {
                best = d;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Result of a three-set sweep: the smallest observed slack
/// `pi(S3) - Upsilon(gap) * Psi(min(pi(S1), pi(S2)))` and the partition that
/// attains it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ThreeSetReport {
    pub min_slack: f64,
    pub worst: PartitionTriple,
    pub tested: usize,
    pub resampled: usize,
}

fn slack(profile: &IsoperimetricProfile, part: &PartitionTriple) -> Result<f64> {
    let min_side = part.mass[0].min(part.mass[1]);
    // min(pi(S1), pi(S2)) < 1/2 whenever S3 carries mass; clamp the boundary
    // case away from the open endpoint
    let arg = min_side.min(0.5 - 1e-15).max(1e-300);
    Ok(part.mass[2] - profile.upsilon(part.gap)? * profile.psi(arg)?)
}

/// Deterministic interval cuts for 1d targets: `S1 = (-inf, t_a]`,
/// `S2 = [t_b, inf)` over every index pair `b >= a + 2`.
fn interval_family(
    disc: &DiscreteTarget,
    profile: &IsoperimetricProfile,
    best: &mut Option<(f64, PartitionTriple)>,
    tested: &mut usize,
) -> Result<()> {
    let pi = disc.pi();
    let pts = disc.grids()[0].points();
    let n = pi.len();
    let mut prefix = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &w in pi {
        acc += w;
        prefix.push(acc);
    }
    for a in 0..n.saturating_sub(2) {
        let m1 = prefix[a];
        if m1 <= 0.0 {
            continue;
        }
        for b in (a + 2)..n {
            let m2 = 1.0 - prefix[b - 1];
            if m2 <= 0.0 {
                break;
            }
            let m3 = (prefix[b - 1] - prefix[a]).max(0.0);
            let gap = pts[b] - pts[a];
            let part = PartitionTriple {
                labels: Vec::new(), // reconstructed only if it becomes the worst case
                gap,
                mass: [m1, m2, m3],
            };
            let s = slack(profile, &part)?;
            *tested += 1;
            if best.as_ref().map_or(true, |(cur, _)| s < *cur) {
                let mut labels = vec![2u8; n];
                for (i, l) in labels.iter_mut().enumerate() {
                    if i <= a {
                        *l = 0;
                    } else if i >= b {
                        *l = 1;
                    }
                }
                *best = Some((s, PartitionTriple { labels, gap, mass: part.mass }));
            }
        }
    }
    Ok(())
}

/// Deterministic slab cuts for 2d targets: half-plane pairs along each axis
/// and annuli around the origin. `S1 = {value <= level_a}`,
/// `S2 = {value >= level_b}` with at least one full level of S3 in between,
/// so the sets never touch.
fn half_space_and_annulus_family(
    disc: &DiscreteTarget,
    profile: &IsoperimetricProfile,
    best: &mut Option<(f64, PartitionTriple)>,
    tested: &mut usize,
) -> Result<()> {
    let n = disc.n_states();
    let mut families: Vec<Vec<f64>> = Vec::new();
    for axis in 0..disc.dim() {
        families.push((0..n).map(|s| disc.state_coords(s)[axis]).collect());
    }
    families.push(
        (0..n)
            .map(|s| {
                disc.state_coords(s)
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect(),
    );

    // bands thinner than the grid resolution leave S1 and S2 interleaved at
    // neighbor distance with a sparse S3, which no continuum partition matches
    let max_spacing = disc
        .grids()
        .iter()
        .map(|g| {
            g.points()
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max);
    let min_band = 2.5 * max_spacing;

    for values in families {
        let mut levels: Vec<f64> = values.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let m = levels.len();
        let step = (m / 24).max(1);
        for a in (0..m.saturating_sub(2)).step_by(step) {
            for b in ((a + 2)..m).step_by(step) {
                if levels[b] - levels[a] < min_band {
                    continue;
                }
                let labels: Vec<u8> = values
                    .iter()
                    .map(|&v| {
                        if v <= levels[a] {
                            0u8
                        } else if v >= levels[b] {
                            1
                        } else {
                            2
                        }
                    })
                    .collect();
                if let Some(part) = PartitionTriple::from_labels(disc, labels) {
                    let s = slack(profile, &part)?;
                    *tested += 1;
                    if best.as_ref().map_or(true, |(cur, _)| s < *cur) {
                        *best = Some((s, part));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Randomized gapped partition: grow S1 and S2 from random center sets by
/// nearest-neighbor assignment, excluding a buffer strip of random width.
///
/// The buffer is kept at least a few grid cells wide; a thinner band has no
/// grid points, which leaves a partition whose measured gap is a full cell
/// while the band mass a continuum S3 would carry is lost to quantization.
fn random_gapped_partition<R: Rng + ?Sized>(
    disc: &DiscreteTarget,
    rng: &mut R,
) -> Option<Vec<u8>> {
    let n = disc.n_states();
    let k1 = rng.random_range(1..=3usize);
    let k2 = rng.random_range(1..=3usize);
    let mut centers: Vec<usize> = Vec::with_capacity(k1 + k2);
    for _ in 0..(k1 + k2) {
        let mut c = rng.random_range(0..n);
        let mut guard = 0;
        while centers.contains(&c) && guard < 64 {
            c = rng.random_range(0..n);
            guard += 1;
        }
        centers.push(c);
    }
    let diameter = disc.state_distance(0, n - 1).max(1e-12);
    let max_spacing = disc
        .grids()
        .iter()
        .map(|g| {
            g.points()
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max);
    let width = (rng.random_range(0.0..0.25) * diameter).max(2.5 * max_spacing);
    let labels: Vec<u8> = (0..n)
        .map(|s| {
            let d1 = centers[..k1]
                .iter()
                .map(|&c| disc.state_distance(s, c))
                .fold(f64::INFINITY, f64::min);
            let d2 = centers[k1..]
                .iter()
                .map(|&c| disc.state_distance(s, c))
                .fold(f64::INFINITY, f64::min);
            if (d1 - d2).abs() <= width {
                2
            } else if d1 < d2 {
                0
            } else {
                1
            }
        })
        .collect();
    Some(labels)
}

/// Sweeps `n_partitions` random gapped partitions plus the deterministic cut
/// families and returns the minimum slack of the three-set inequality.
pub fn check_three_set<R: Rng + ?Sized>(
    disc: &DiscreteTarget,
    profile: &IsoperimetricProfile,
    n_partitions: usize,
    rng: &mut R,
) -> Result<ThreeSetReport> {
    let mut best: Option<(f64, PartitionTriple)> = None;
    let mut tested = 0usize;
    let mut resampled = 0usize;

    if disc.dim() == 1 {
        interval_family(disc, profile, &mut best, &mut tested)?;
    } else {
        half_space_and_annulus_family(disc, profile, &mut best, &mut tested)?;
    }

    let mut produced = 0usize;
    let mut attempts = 0usize;
    let max_attempts = n_partitions.saturating_mul(50).max(1000);
    while produced < n_partitions && attempts < max_attempts {
        attempts += 1;
        let labels = match random_gapped_partition(disc, rng) {
            Some(l) => l,
            None => {
                resampled += 1;
                continue;
            }
        };
        match PartitionTriple::from_labels(disc, labels) {
            Some(part) => {
                let s = slack(profile, &part)?;
                tested += 1;
                produced += 1;
                if best.as_ref().map_or(true, |(cur, _)| s < *cur) {
                    best = Some((s, part));
                }
            }
            None => resampled += 1,
        }
    }

    let (min_slack, worst) = best.ok_or_else(|| {
        Error::InvalidArgument("no admissible partition was generated".into())
    })?;
    Ok(ThreeSetReport {
        min_slack,
        worst,
        tested,
        resampled,
    })
}
