use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GraphError, SimilarityMatrix, ViewId};

const MAX_SWAP_ROUNDS: usize = 100;
const RESTARTS: usize = 10;
/// Instances with at most this many candidate medoid sets are solved exactly.
const EXACT_LIMIT: u128 = 4096;

/// Sum over views of the distance `1 − s` to the closest medoid.
pub fn kmedoids_cost(sim: &SimilarityMatrix, medoids: &[ViewId]) -> f64 {
    (0..sim.n())
        .map(|o| medoids.iter().map(|m| sim.distance(o, *m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// `k` keyframe roots by k-medoids clustering on `1 − s`: k-medoids++ seeding
/// followed by best-improvement swaps until no swap lowers the cost, keeping
/// the best of several seeded restarts. Small instances are enumerated
/// exhaustively instead. Returned ids are ascending.
pub fn kmedoids_roots(sim: &SimilarityMatrix, k: usize, seed: u64) -> Result<Vec<ViewId>, GraphError> {
    let n = sim.n();
    if k == 0 || k > n {
        return Err(GraphError::InvalidClusterCount { k, n });
    }
    if k == n {
        return Ok((0..n).collect());
    }
    if binomial(n, k) <= EXACT_LIMIT {
        return Ok(exhaustive(sim, k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<ViewId>)> = None;
    for _ in 0..RESTARTS {
        let medoids = swap_phase(sim, seed_plus_plus(sim, k, &mut rng));
        let cost = kmedoids_cost(sim, &medoids);
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-12) {
            best = Some((cost, medoids));
        }
    }
    let mut medoids = best.expect("at least one restart").1;
    medoids.sort_unstable();
    Ok(medoids)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lowest-cost medoid set over all `k`-subsets in lexicographic order; the
/// first minimum wins.
fn exhaustive(sim: &SimilarityMatrix, k: usize) -> Vec<ViewId> {
    let n = sim.n();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = (kmedoids_cost(sim, &idx), idx.clone());
    loop {
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return best.1;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
        let cost = kmedoids_cost(sim, &idx);
        if cost < best.0 - 1e-12 {
            best = (cost, idx.clone());
        }
    }
}

fn swap_phase(sim: &SimilarityMatrix, mut medoids: Vec<ViewId>) -> Vec<ViewId> {
    let (n, k) = (sim.n(), medoids.len());
    for _ in 0..MAX_SWAP_ROUNDS {
        let (nearest, d_near, d_second) = assignments(sim, &medoids);
        let mut best = (-1e-12, usize::MAX, usize::MAX);
        for x in 0..n {
            if medoids.contains(&x) {
                continue;
            }
            let mut shared = 0.0;
            let mut per_medoid = vec![0.0; k];
            for o in 0..n {
                let dxo = sim.distance(x, o);
                shared += (dxo - d_near[o]).min(0.0);
                per_medoid[nearest[o]] += dxo.min(d_second[o]) - dxo.min(d_near[o]);
            }
            for (m, extra) in per_medoid.iter().enumerate() {
                let delta = shared + extra;
                if delta < best.0 {
                    best = (delta, m, x);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        medoids[best.1] = best.2;
    }
    medoids
}

fn seed_plus_plus(sim: &SimilarityMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<ViewId> {
    let n = sim.n();
    let mut medoids = vec![rng.random_range(0..n)];
    let mut d: Vec<f64> = (0..n).map(|o| sim.distance(o, medoids[0])).collect();
    while medoids.len() < k {
        let total: f64 = d.iter().map(|x| x * x).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (o, x) in d.iter().enumerate() {
                if medoids.contains(&o) || *x <= 0.0 {
                    continue;
                }
                chosen = Some(o);
                target -= x * x;
                if target <= 0.0 {
                    break;
                }
            }
            chosen
        } else {
            None
        };
        let pick = pick.unwrap_or_else(|| (0..n).find(|o| !medoids.contains(o)).expect("k < n"));
        medoids.push(pick);
        for (o, x) in d.iter_mut().enumerate() {
            *x = x.min(sim.distance(o, pick));
        }
    }
    medoids
}

/// Per view: index into `medoids` of the closest one, its distance, and the
/// distance to the second closest (`∞` when there is only one medoid).
fn assignments(sim: &SimilarityMatrix, medoids: &[ViewId]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = sim.n();
    let mut nearest = vec![0; n];
    let mut d1 = vec![f64::INFINITY; n];
    let mut d2 = vec![f64::INFINITY; n];
    for o in 0..n {
        for (mi, m) in medoids.iter().enumerate() {
            let d = sim.distance(o, *m);
            if d < d1[o] {
                d2[o] = d1[o];
                d1[o] = d;
                nearest[o] = mi;
            } else if d < d2[o] {
                d2[o] = d;
            }
        }
    }
    (nearest, d1, d2)
}
