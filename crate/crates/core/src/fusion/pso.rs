use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::search::{compare_keys, Search};
use super::WeightVector;

/// Constriction-coefficient particle swarm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-coordinate velocity bound.
    pub velocity_clamp: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            swarm_size: 30,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: 0.5,
        }
    }
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    best_position: Vec<f64>,
    best_key: (f64, f64),
}

/// Swarm search in `[0, 1]^M`. The first particles start on equal weights
/// and the one-hot corners, the rest uniformly at random. Fitness of the
/// whole swarm is evaluated as one batch per iteration; the velocity update
/// is sequential and consumes the RNG in a fixed order.
pub(super) fn run(search: &mut Search<'_>, params: &PsoParams, iterations: usize, seed: u64) {
    let m = search.dim();
    let swarm_size = params.swarm_size.max(1);
    let vmax = params.velocity_clamp;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(swarm_size);
    starts.push(WeightVector::equal(m).0);
    starts.extend((0..m).map(|j| WeightVector::one_hot(m, j).0));
    starts.truncate(swarm_size);
    while starts.len() < swarm_size {
        starts.push((0..m).map(|_| rng.random::<f64>()).collect());
    }

    let scored = search.evaluate_batch(&starts);
    let mut swarm: Vec<Particle> = starts
        .into_iter()
        .zip(&scored)
        .map(|(position, c)| Particle {
            velocity: (0..m).map(|_| rng.random_range(-vmax..=vmax)).collect(),
            best_position: position.clone(),
            best_key: c.key(),
            position,
        })
        .collect();

    for _ in 0..iterations {
        let leader = swarm
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| compare_keys(a.best_key, b.best_key).then(i.cmp(j)))
            .map(|(_, p)| p.best_position.clone())
            .expect("swarm is nonempty");

        for p in &mut swarm {
            #[allow(clippy::needless_range_loop)]
            for d in 0..m {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = params.inertia * p.velocity[d]
                    + params.cognitive * r1 * (p.best_position[d] - p.position[d])
                    + params.social * r2 * (leader[d] - p.position[d]);
                p.velocity[d] = v.clamp(-vmax, vmax);
                p.position[d] = (p.position[d] + p.velocity[d]).clamp(0.0, 1.0);
            }
        }

        let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.position.clone()).collect();
        let scored = search.evaluate_batch(&positions);
        for (p, c) in swarm.iter_mut().zip(&scored) {
            if compare_keys(c.key(), p.best_key).is_lt() {
                p.best_key = c.key();
                p.best_position.clone_from(&p.position);
            }
        }
    }
}
