use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dist, sq_dist, EmbeddingMatrix, ReductionConfig, ReductionMethod, Result, TopicError};
use crate::par;

/// Reduces `emb` to `cfg.n_components` dimensions. Deterministic for a
/// given config; identical input rows always map to identical output rows.
pub fn reduce(emb: &EmbeddingMatrix, cfg: &ReductionConfig) -> Result<EmbeddingMatrix> {
    let d = emb.dim();
    if cfg.n_components < 2 {
        return Err(TopicError::InvalidConfig(format!(
            "n_components must be at least 2, got {}",
            cfg.n_components
        )));
    }
    match cfg.method {
        ReductionMethod::Pca => {
            if cfg.n_components > d {
                return Err(TopicError::InvalidConfig(format!(
                    "n_components {} exceeds the input dimensionality {d}",
                    cfg.n_components
                )));
            }
            Ok(pca(emb, cfg.n_components))
        }
        ReductionMethod::NeighborEmbedding => {
            if cfg.n_components >= d {
                return Err(TopicError::InvalidConfig(format!(
                    "n_components {} must be below the input dimensionality {d}",
                    cfg.n_components
                )));
            }
            if cfg.n_neighbours < 2 {
                return Err(TopicError::InvalidConfig(format!(
                    "n_neighbours must be at least 2, got {}",
                    cfg.n_neighbours
                )));
            }
            if emb.n_rows() <= cfg.n_neighbours {
                return Err(TopicError::TooFewDocuments {
                    n: emb.n_rows(),
                    n_neighbours: cfg.n_neighbours,
                });
            }
            Ok(neighbor_embedding(emb, cfg))
        }
    }
}

/// Principal axes of the centered rows, strongest first. Each axis is
/// oriented so its largest-magnitude coordinate is positive.
fn principal_axes(rows: &[&[f64]], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n.max(1) as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in rows {
        let c: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let axes = order
        .into_iter()
        .map(|k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let pivot = (0..d)
                .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
                .unwrap_or(0);
            if v[pivot] < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            v
        })
        .collect();
    (mean, axes)
}

fn project(row: &[f64], mean: &[f64], axes: &[Vec<f64>]) -> Vec<f64> {
    axes.iter()
        .map(|axis| {
            row.iter()
                .zip(mean)
                .zip(axis)
                .map(|((v, m), a)| (v - m) * a)
                .sum()
        })
        .collect()
}

/// PCA projection to `k` components. With `k` equal to the input
/// dimensionality this is a rigid motion and preserves pairwise distances.
pub fn pca(emb: &EmbeddingMatrix, k: usize) -> EmbeddingMatrix {
    let rows: Vec<&[f64]> = emb.rows().collect();
    let (mean, mut axes) = principal_axes(&rows, emb.dim());
    axes.truncate(k);
    let projected = par::map(&rows, |r| project(r, &mean, &axes));
    EmbeddingMatrix::new(emb.row_ids().to_vec(), k, projected.concat())
        .expect("projection of finite rows is finite")
}

/// Curve parameters `(a, b)` of `1 / (1 + a d^(2b))` fitted to the
/// `min_dist` offset exponential with unit spread, by least squares over a
/// fixed grid.
fn fit_curve(min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (1..300).map(|i| i as f64 * 0.01).collect();
    let target: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist)).exp()
            }
        })
        .collect();
    let loss = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&target)
            .map(|(&x, &t)| {
                let y = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (y - t) * (y - t)
            })
            .sum()
    };
    // coarse grid then coordinate refinement
    let (mut a, mut b) = (1.0, 1.0);
    let mut best = loss(a, b);
    let mut step = 0.5;
    while step > 1e-6 {
        let mut moved = false;
        for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (na, nb) = (a + da, b + db);
            if na > 0.0 && nb > 0.0 {
                let l = loss(na, nb);
                if l < best {
                    best = l;
                    a = na;
                    b = nb;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (a, b)
}

/// Weighted symmetric k-NN graph over distinct points.
fn fuzzy_graph(points: &[&[f64]], k: usize) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let knn: Vec<Vec<(usize, f64)>> = par::map_range(n, |i| {
        let mut d: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, dist(points[i], points[j])))
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.truncate(k);
        d
    });

    let target = (k as f64).log2();
    let mut directed: HashMap<(usize, usize), f64> = HashMap::new();
    for (i, neigh) in knn.iter().enumerate() {
        let rho = neigh.first().map_or(0.0, |x| x.1);
        let membership = |sigma: f64| -> f64 {
            neigh
                .iter()
                .map(|&(_, d)| (-((d - rho).max(0.0)) / sigma).exp())
                .sum()
        };
        let (mut lo, mut hi, mut sigma) = (0.0, f64::INFINITY, 1.0);
        for _ in 0..64 {
            let s = membership(sigma);
            if (s - target).abs() < 1e-5 {
                break;
            }
            if s > target {
                hi = sigma;
                sigma = (lo + hi) / 2.0;
            } else {
                lo = sigma;
                sigma = if hi.is_finite() {
                    (lo + hi) / 2.0
                } else {
                    sigma * 2.0
                };
            }
        }
        let sigma = sigma.max(1e-3 * mean_distance(neigh));
        for &(j, d) in neigh {
            let w = if d <= rho {
                1.0
            } else {
                (-(d - rho) / sigma).exp()
            };
            directed.insert((i, j), w);
        }
    }

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        if i < j || back == 0.0 {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            edges.push((a, b, w + back - w * back));
        }
    }
    edges.sort_by_key(|x| (x.0, x.1));
    edges
}

fn mean_distance(neigh: &[(usize, f64)]) -> f64 {
    if neigh.is_empty() {
        return 1.0;
    }
    let m = neigh.iter().map(|x| x.1).sum::<f64>() / neigh.len() as f64;
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Neighbor-graph layout: fuzzy k-NN graph, PCA initialization scaled to a
/// box of half-width 10, then epochs of edge-sampled attractive moves and
/// negative-sampled repulsive moves with a linearly decaying learning rate.
/// Duplicate rows are embedded once and copied.
fn neighbor_embedding(emb: &EmbeddingMatrix, cfg: &ReductionConfig) -> EmbeddingMatrix {
    let dim = cfg.n_components;
    let mut unique_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique_rows: Vec<&[f64]> = Vec::new();
    let row_to_unique: Vec<usize> = emb
        .rows()
        .map(|r| {
            // +0.0 folds -0.0 into 0.0
            let bits: Vec<u64> = r.iter().map(|v| (v + 0.0).to_bits()).collect();
            *unique_of.entry(bits).or_insert_with(|| {
                unique_rows.push(r);
                unique_rows.len() - 1
            })
        })
        .collect();
    let n = unique_rows.len();

    let layout = if n == 1 {
        vec![vec![0.0; dim]]
    } else {
        let k = cfg.n_neighbours.min(n - 1);
        let edges = fuzzy_graph(&unique_rows, k);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut coords = initial_layout(&unique_rows, emb.dim(), dim, &mut rng);
        optimize_layout(&mut coords, &edges, cfg, &mut rng);
        coords
    };

    let mut values = Vec::with_capacity(emb.n_rows() * dim);
    for &u in &row_to_unique {
        values.extend_from_slice(&layout[u]);
    }
    EmbeddingMatrix::new(emb.row_ids().to_vec(), dim, values).expect("layout is finite")
}

fn initial_layout(rows: &[&[f64]], d: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (mean, mut axes) = principal_axes(rows, d);
    axes.truncate(dim);
    let mut coords: Vec<Vec<f64>> = rows.iter().map(|r| project(r, &mean, &axes)).collect();
    let max_abs = coords
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max_abs > 0.0 { 10.0 / max_abs } else { 1.0 };
    for c in &mut coords {
        for v in c.iter_mut() {
            *v = *v * scale + rng.random_range(-1e-4..1e-4);
        }
    }
    coords
}

fn optimize_layout(
    coords: &mut [Vec<f64>],
    edges: &[(usize, usize, f64)],
    cfg: &ReductionConfig,
    rng: &mut ChaCha8Rng,
) {
    const NEGATIVE_RATE: f64 = 5.0;
    const CLIP: f64 = 4.0;
    let (a, b) = fit_curve(cfg.min_dist);
    let n = coords.len();
    let n_epochs = cfg.n_epochs.max(1);
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    if max_w <= 0.0 {
        return;
    }
    let edges: Vec<&(usize, usize, f64)> = edges
        .iter()
        .filter(|e| e.2 >= max_w / n_epochs as f64)
        .collect();
    let per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let per_negative: Vec<f64> = per_sample.iter().map(|p| p / NEGATIVE_RATE).collect();
    let mut next_sample = per_sample.clone();
    let mut next_negative = per_negative.clone();
    let dim = coords[0].len();

    for epoch in 0..n_epochs {
        let alpha = 1.0 - epoch as f64 / n_epochs as f64;
        let now = epoch as f64;
        for (e, &&(i, j, _)) in edges.iter().enumerate() {
            if next_sample[e] > now {
                continue;
            }
            let d2 = sq_dist(&coords[i], &coords[j]);
            if d2 > 0.0 {
                let coeff = -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b));
                #[allow(clippy::needless_range_loop)]
                for k in 0..dim {
                    let g = (coeff * (coords[i][k] - coords[j][k])).clamp(-CLIP, CLIP) * alpha;
                    coords[i][k] += g;
                    coords[j][k] -= g;
                }
            }
            next_sample[e] += per_sample[e];

            let n_neg = ((now - next_negative[e]) / per_negative[e])
                .floor()
                .max(0.0) as usize;
            for _ in 0..n_neg {
                let other = rng.random_range(0..n);
                if other == i {
                    continue;
                }
                let d2 = sq_dist(&coords[i], &coords[other]);
                let coeff = if d2 > 0.0 {
                    2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)))
                } else {
                    0.0
                };
                #[allow(clippy::needless_range_loop)]
                for k in 0..dim {
                    let g = if coeff > 0.0 {
                        (coeff * (coords[i][k] - coords[other][k])).clamp(-CLIP, CLIP)
                    } else {
                        CLIP
                    };
                    coords[i][k] += g * alpha;
                }
            }
            next_negative[e] += n_neg as f64 * per_negative[e];
        }
    }
}
