use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::search::{compare_keys, Search};
use super::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadParams {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset of the initial simplex vertices from the start point.
    pub initial_step: f64,
    /// A restart begins once the simplex diameter drops below this.
    pub xtol: f64,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        NelderMeadParams {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.1,
            xtol: 1e-6,
        }
    }
}

type Vertex = (Vec<f64>, (f64, f64));

fn clamp_box(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// `a + t (a - b)` clamped to the box.
fn along(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| ai + t * (ai - bi)).collect();
    clamp_box(&mut x);
    x
}

fn diameter(simplex: &[Vertex]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn initial_simplex(search: &mut Search<'_>, start: &[f64], step: f64) -> Vec<Vertex> {
    let m = start.len();
    let mut points = vec![start.to_vec()];
    for i in 0..m {
        let mut x = start.to_vec();
        x[i] = if x[i] + step <= 1.0 {
            x[i] + step
        } else {
            x[i] - step
        };
        points.push(x);
    }
    let scored = search.evaluate_batch(&points);
    points
        .into_iter()
        .zip(scored)
        .map(|(x, c)| (x, c.key()))
        .collect()
}

/// Nelder-Mead over `[0, 1]^M` with restarts. The first run starts from
/// equal weights; once a simplex collapses, the next run starts from a
/// point drawn from the seeded RNG. `iterations` bounds the total number of
/// simplex steps across runs.
pub(super) fn run(
    search: &mut Search<'_>,
    params: &NelderMeadParams,
    iterations: usize,
    seed: u64,
) {
    let m = search.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = WeightVector::equal(m).0;
    let mut used = 0;

    while used < iterations {
        let mut simplex = initial_simplex(search, &start, params.initial_step);
        while used < iterations {
            used += 1;
            // stable sort keeps earlier vertices first on ties
            simplex.sort_by(|a, b| compare_keys(a.1, b.1));
            if diameter(&simplex) < params.xtol || search.best_error() == 0.0 {
                break;
            }
            let worst = simplex.len() - 1;
            let centroid: Vec<f64> = (0..m)
                .map(|d| simplex[..worst].iter().map(|(x, _)| x[d]).sum::<f64>() / worst as f64)
                .collect();

            let reflected = along(&centroid, &simplex[worst].0, params.reflection);
            let fr = search.evaluate(&reflected).key();
            if compare_keys(fr, simplex[0].1).is_lt() {
                let expanded = along(
                    &centroid,
                    &simplex[worst].0,
                    params.reflection * params.expansion,
                );
                let fe = search.evaluate(&expanded).key();
                simplex[worst] = if compare_keys(fe, fr).is_lt() {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if compare_keys(fr, simplex[worst - 1].1).is_lt() {
                simplex[worst] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if compare_keys(fr, simplex[worst].1).is_lt() {
                let x = along(
                    &centroid,
                    &simplex[worst].0,
                    params.reflection * params.contraction,
                );
                let f = search.evaluate(&x).key();
                (x, f)
            } else {
                let x = along(&centroid, &simplex[worst].0, -params.contraction);
                let f = search.evaluate(&x).key();
                (x, f)
            };
            if compare_keys(fc, simplex[worst].1).is_lt() && compare_keys(fc, fr).is_le() {
                simplex[worst] = (contracted, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            let shrunk: Vec<Vec<f64>> = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    best.iter()
                        .zip(x)
                        .map(|(b, xi)| b + params.shrink * (xi - b))
                        .collect()
                })
                .collect();
            let scored = search.evaluate_batch(&shrunk);
            for (slot, (x, c)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(scored)) {
                *slot = (x, c.key());
            }
        }
        if search.best_error() == 0.0 {
            break;
        }
        start = (0..m).map(|_| rng.random::<f64>()).collect();
    }
}
