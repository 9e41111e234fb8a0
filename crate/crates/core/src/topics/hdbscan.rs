use super::{dist, ClusterAssignment, EmbeddingMatrix, Result, TopicError};
use crate::par;

/// Distance to the `min_samples`-th nearest point, counting the point itself.
fn core_distances(points: &[&[f64]], min_samples: usize) -> Vec<f64> {
    let n = points.len();
    let k = min_samples.clamp(1, n) - 1;
    par::map_range(n, |i| {
        let mut d: Vec<f64> = points.iter().map(|p| dist(points[i], p)).collect();
        d.select_nth_unstable_by(k, f64::total_cmp);
        d[k]
    })
}

/// Prim's algorithm on the dense mutual reachability graph. Returns edges
/// `(a, b, weight)` in insertion order.
fn minimum_spanning_tree(points: &[&[f64]], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let mr = dist(points[current], points[j])
                .max(core[current])
                .max(core[j]);
            if mr < best[j] {
                best[j] = mr;
                from[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        current = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage dendrogram node `n + k` merging `left` and `right`.
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

fn single_linkage(n: usize, mut mst: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    mst.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut uf = UnionFind::new(2 * n - 1);
    let mut size = vec![1usize; 2 * n - 1];
    let mut merges = Vec::with_capacity(n - 1);
    for (k, (a, b, w)) in mst.into_iter().enumerate() {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = n + k;
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: w,
            size: size[node],
        });
    }
    merges
}

/// Condensed-tree edge: `child` is a point (`< n`) or a cluster (`>= n`).
#[derive(Debug, Clone, Copy)]
struct Condensed {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

fn condense(n: usize, merges: &[Merge], min_cluster_size: usize) -> Vec<Condensed> {
    let node_size = |x: usize| if x < n { 1 } else { merges[x - n].size };
    let leaves = |x: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            if y < n {
                out.push(y);
            } else {
                stack.push(merges[y - n].right);
                stack.push(merges[y - n].left);
            }
        }
        out
    };

    let root = 2 * n - 2;
    let mut label = vec![usize::MAX; 2 * n - 1];
    label[root] = n;
    let mut next_label = n + 1;
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let m = &merges[node - n];
        let lambda = lambda_of(m.distance);
        let parent = label[node];
        let (l, r) = (m.left, m.right);
        let (ls, rs) = (node_size(l), node_size(r));
        let fall_out = |x: usize, out: &mut Vec<Condensed>| {
            for p in leaves(x) {
                out.push(Condensed {
                    parent,
                    child: p,
                    lambda,
                    size: 1,
                });
            }
        };
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (child, size) in [(l, ls), (r, rs)] {
                    label[child] = next_label;
                    out.push(Condensed {
                        parent,
                        child: next_label,
                        lambda,
                        size,
                    });
                    next_label += 1;
                    queue.push_back(child);
                }
            }
            (false, false) => {
                fall_out(l, &mut out);
                fall_out(r, &mut out);
            }
            (true, false) => {
                label[l] = parent;
                fall_out(r, &mut out);
                queue.push_back(l);
            }
            (false, true) => {
                label[r] = parent;
                fall_out(l, &mut out);
                queue.push_back(r);
            }
        }
    }
    out
}

/// `(lambda - birth) * size`, treating simultaneous infinite lambdas as zero.
fn excess(lambda: f64, birth: f64, size: usize) -> f64 {
    if lambda == birth {
        0.0
    } else {
        (lambda - birth) * size as f64
    }
}

/// Excess-of-mass selection; the root is never selected.
fn select_clusters(n: usize, tree: &[Condensed]) -> Vec<bool> {
    let n_clusters = tree
        .iter()
        .map(|e| e.parent.max(if e.child >= n { e.child } else { 0 }))
        .max()
        .map_or(1, |m| m - n + 1);
    let mut birth = vec![0.0; n_clusters];
    let mut parent_of = vec![usize::MAX; n_clusters];
    for e in tree.iter().filter(|e| e.child >= n) {
        birth[e.child - n] = e.lambda;
        parent_of[e.child - n] = e.parent - n;
    }
    let mut stability = vec![0.0; n_clusters];
    for e in tree {
        let c = e.parent - n;
        stability[c] += excess(e.lambda, birth[c], e.size);
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for c in 1..n_clusters {
        children[parent_of[c]].push(c);
    }
    let mut selected = vec![false; n_clusters];
    // children always carry larger labels than their parents
    for c in (1..n_clusters).rev() {
        let subtree: f64 = children[c].iter().map(|&k| stability[k]).sum();
        if children[c].is_empty() || stability[c] >= subtree {
            selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(k) = stack.pop() {
                selected[k] = false;
                stack.extend(children[k].iter().copied());
            }
        } else {
            stability[c] = subtree;
        }
    }
    selected
}

/// HDBSCAN over Euclidean distance. `min_samples` sets the core distance
/// neighbourhood (the point itself included). Points outside every selected
/// cluster are labeled `-1`. Fewer points than `min_cluster_size` yields
/// all noise; a set of identical points forms a single cluster.
pub fn cluster(
    reduced: &EmbeddingMatrix,
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<ClusterAssignment> {
    if min_cluster_size < 2 {
        return Err(TopicError::MinClusterSize(min_cluster_size));
    }
    let n = reduced.n_rows();
    if n < min_cluster_size {
        return Ok(ClusterAssignment {
            labels: vec![-1; n],
            n_clusters: 0,
        });
    }
    let points: Vec<&[f64]> = reduced.rows().collect();
    if points.iter().all(|p| *p == points[0]) {
        return Ok(ClusterAssignment {
            labels: vec![0; n],
            n_clusters: 1,
        });
    }

    let core = core_distances(&points, min_samples);
    let mst = minimum_spanning_tree(&points, &core);
    let merges = single_linkage(n, mst);
    let tree = condense(n, &merges, min_cluster_size);
    let selected = select_clusters(n, &tree);

    let mut cluster_parent = vec![usize::MAX; selected.len()];
    let mut point_parent = vec![n; n];
    for e in &tree {
        if e.child >= n {
            cluster_parent[e.child - n] = e.parent - n;
        } else {
            point_parent[e.child] = e.parent - n;
        }
    }
    let raw: Vec<Option<usize>> = point_parent
        .iter()
        .map(|&c| {
            let mut c = c;
            while c != 0 {
                if selected[c] {
                    return Some(c);
                }
                c = cluster_parent[c];
            }
            None
        })
        .collect();

    // renumber by first member
    let mut renumber = vec![usize::MAX; selected.len()];
    let mut k = 0;
    let labels = raw
        .iter()
        .map(|r| match r {
            Some(c) => {
                if renumber[*c] == usize::MAX {
                    renumber[*c] = k;
                    k += 1;
                }
                renumber[*c] as i64
            }
            None => -1,
        })
        .collect();
    Ok(ClusterAssignment {
        labels,
        n_clusters: k,
    })
}
