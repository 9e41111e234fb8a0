use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::search::{compare_keys, Search};
use super::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowellParams {
    /// Golden-section stops once the bracket is narrower than this.
    pub tolerance: f64,
    /// Evenly spaced probes along a line before the golden-section refine.
    /// The error surface is piecewise constant, so a pure bracket search
    /// would stall on the first plateau.
    pub line_samples: usize,
}

impl Default for PowellParams {
    fn default() -> Self {
        PowellParams {
            tolerance: 1e-6,
            line_samples: 16,
        }
    }
}

type Key = (f64, f64);

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn point(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    x.iter()
        .zip(d)
        .map(|(xi, di)| (xi + t * di).clamp(0.0, 1.0))
        .collect()
}

/// Range of `t` keeping `x + t d` inside `[0, 1]^M`.
fn feasible_range(x: &[f64], d: &[f64]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&xi, &di) in x.iter().zip(d) {
        if di > 0.0 {
            lo = lo.max(-xi / di);
            hi = hi.min((1.0 - xi) / di);
        } else if di < 0.0 {
            lo = lo.max((1.0 - xi) / di);
            hi = hi.min(-xi / di);
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

/// Minimizes along `d` from `x`. Returns the new point and its key if it
/// strictly improves on `fx`.
fn line_minimize(
    search: &mut Search<'_>,
    x: &[f64],
    fx: Key,
    d: &[f64],
    params: &PowellParams,
) -> Option<(Vec<f64>, Key)> {
    let (lo, hi) = feasible_range(x, d);
    if hi - lo <= params.tolerance || (hi - lo).is_nan() {
        return None;
    }
    let n = params.line_samples.max(2);
    let ts: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let probes: Vec<Vec<f64>> = ts.iter().map(|&t| point(x, d, t)).collect();
    let keys: Vec<Key> = search
        .evaluate_batch(&probes)
        .iter()
        .map(|c| c.key())
        .collect();

    let k = (0..keys.len())
        .min_by(|&i, &j| compare_keys(keys[i], keys[j]).then(i.cmp(&j)))
        .expect("at least two probes");
    let mut best_t = ts[k];
    let mut best_key = keys[k];

    // golden-section refine inside the neighbouring probes
    let mut a = ts[k.saturating_sub(1)];
    let mut b = ts[(k + 1).min(n)];
    let mut c = b - INV_PHI * (b - a);
    let mut e = a + INV_PHI * (b - a);
    let mut fc = search.evaluate(&point(x, d, c)).key();
    let mut fe = search.evaluate(&point(x, d, e)).key();
    while b - a > params.tolerance {
        if compare_keys(fc, best_key).is_lt() {
            best_key = fc;
            best_t = c;
        }
        if compare_keys(fe, best_key).is_lt() {
            best_key = fe;
            best_t = e;
        }
        if compare_keys(fc, fe).is_le() {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_PHI * (b - a);
            fc = search.evaluate(&point(x, d, c)).key();
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_PHI * (b - a);
            fe = search.evaluate(&point(x, d, e)).key();
        }
    }

    compare_keys(best_key, fx)
        .is_lt()
        .then(|| (point(x, d, best_t), best_key))
}

/// Powell's direction-set method with random restarts. Starts from equal
/// weights with the coordinate axes as directions; a sweep that does not
/// improve the current point triggers a restart from a point drawn from the
/// seeded RNG. `sweeps` bounds the total number of sweeps.
pub(super) fn run(search: &mut Search<'_>, params: &PowellParams, sweeps: usize, seed: u64) {
    let m = search.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = || -> Vec<Vec<f64>> { (0..m).map(|j| WeightVector::one_hot(m, j).0).collect() };

    let mut x = WeightVector::equal(m).0;
    let mut fx = search.evaluate(&x).key();
    let mut directions = axes();

    for _ in 0..sweeps {
        if search.best_error() == 0.0 {
            break;
        }
        let x_start = x.clone();
        let f_start = fx;
        let mut largest_drop = (0usize, 0.0f64);
        for (i, d) in directions.iter().enumerate() {
            if let Some((nx, nf)) = line_minimize(search, &x, fx, d, params) {
                let drop = (fx.0 - nf.0) + (fx.1 - nf.1);
                if drop > largest_drop.1 {
                    largest_drop = (i, drop);
                }
                x = nx;
                fx = nf;
            }
        }

        if compare_keys(fx, f_start).is_lt() {
            let new_dir: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
            if new_dir.iter().any(|v| v.abs() > params.tolerance) {
                if let Some((nx, nf)) = line_minimize(search, &x, fx, &new_dir, params) {
                    x = nx;
                    fx = nf;
                }
                directions.remove(largest_drop.0);
                directions.push(new_dir);
            }
        } else {
            // stalled: restart from a random point with fresh directions
            x = (0..m).map(|_| rng.random::<f64>()).collect();
            fx = search.evaluate(&x).key();
            directions = axes();
        }
    }
}
