//! HDBSCAN over a precomputed distance matrix: mutual reachability, minimum
//! spanning tree, single-linkage hierarchy, condensed tree and excess-of-mass
//! cluster selection.

use serde::{Deserialize, Serialize};

use super::distance::DistanceMatrix;
use crate::error::{Error, Result};

pub const NOISE: i32 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbourhood size for core distances, counting the point itself.
    pub min_samples: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 15,
            min_samples: 5,
        }
    }
}

/// Merge distances this small are treated as this value so that lambdas stay finite.
const MIN_MERGE_DISTANCE: f64 = 1e-12;

struct Merge {
    left: usize,
    right: usize,
    dist: f64,
    size: usize,
}

#[derive(Clone, Copy)]
enum Child {
    Cluster(usize),
    Point(usize),
}

struct Entry {
    parent: usize,
    child: Child,
    lambda: f64,
    size: usize,
}

fn core_distances(d: &DistanceMatrix, min_samples: usize) -> Vec<f64> {
    let n = d.len();
    let k = min_samples.clamp(1, n) - 1;
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| d.get(i, j)).collect();
            row.select_nth_unstable_by(k, f64::total_cmp);
            row[k]
        })
        .collect()
}

/// Prim's algorithm on the dense mutual-reachability graph; ties pick the lowest index.
fn minimum_spanning_tree(d: &DistanceMatrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mr = |i: usize, j: usize| d.get(i, j).max(core[i]).max(core[j]);
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mr(current, j);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage merges; node `n + k` is `merges[k]`.
fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (a, b, w) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + merges.len();
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            dist: w,
            size: size[node],
        });
    }
    merges
}

fn leaves(n: usize, merges: &[Merge], node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = &merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

/// Condensed tree entries and the number of clusters (cluster 0 is the root).
fn condense(n: usize, merges: &[Merge], mcs: usize) -> (Vec<Entry>, usize) {
    let size_of = |x: usize| if x < n { 1 } else { merges[x - n].size };
    let mut entries = Vec::new();
    let mut next_cluster = 1;
    let mut queue = std::collections::VecDeque::from([(2 * n - 2, 0usize)]);
    while let Some((node, label)) = queue.pop_front() {
        let m = &merges[node - n];
        let lambda = 1.0 / m.dist.max(MIN_MERGE_DISTANCE);
        let (l, r) = (m.left, m.right);
        let (ls, rs) = (size_of(l), size_of(r));
        let fall_out = |x: usize, entries: &mut Vec<Entry>| {
            let mut pts = Vec::new();
            leaves(n, merges, x, &mut pts);
            entries.extend(pts.into_iter().map(|p| Entry {
                parent: label,
                child: Child::Point(p),
                lambda,
                size: 1,
            }));
        };
        match (ls >= mcs, rs >= mcs) {
            (true, true) => {
                for (child, size) in [(l, ls), (r, rs)] {
                    let id = next_cluster;
                    next_cluster += 1;
                    entries.push(Entry {
                        parent: label,
                        child: Child::Cluster(id),
                        lambda,
                        size,
                    });
                    queue.push_back((child, id));
                }
            }
            (false, false) => {
                fall_out(l, &mut entries);
                fall_out(r, &mut entries);
            }
            (true, false) => {
                fall_out(r, &mut entries);
                queue.push_back((l, label));
            }
            (false, true) => {
                fall_out(l, &mut entries);
                queue.push_back((r, label));
            }
        }
    }
    (entries, next_cluster)
}

/// Density-based clustering of a precomputed distance matrix. Returns one
/// label per point, [`NOISE`] for outliers; cluster labels are numbered in
/// order of each cluster's smallest member index.
pub fn cluster(d: &DistanceMatrix, p: &ClusterParams) -> Result<Vec<i32>> {
    if p.min_cluster_size < 2 || p.min_samples < 1 {
        return Err(Error::config("min_cluster_size must be at least 2 and min_samples at least 1"));
    }
    let n = d.len();
    if n < p.min_cluster_size {
        return Ok(vec![NOISE; n]);
    }
    let core = core_distances(d, p.min_samples);
    let edges = minimum_spanning_tree(d, &core);

    // No density structure at all: every mutual-reachability edge is equal.
    if edges.iter().all(|e| e.2 == edges[0].2) {
        return Ok(vec![0; n]);
    }

    let merges = single_linkage(n, edges);
    let (entries, k) = condense(n, &merges, p.min_cluster_size);

    let mut birth = vec![0.0f64; k];
    let mut cluster_parent = vec![usize::MAX; k];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for e in &entries {
        if let Child::Cluster(c) = e.child {
            birth[c] = e.lambda;
            cluster_parent[c] = e.parent;
            children[e.parent].push(c);
        }
    }
    let mut stability = vec![0.0f64; k];
    for e in &entries {
        stability[e.parent] += (e.lambda - birth[e.parent]) * e.size as f64;
    }

    let mut selected = vec![false; k];
    if children[0].is_empty() {
        selected[0] = true;
    } else {
        // children always carry larger ids than their parents
        for c in (1..k).rev() {
            let child_sum: f64 = children[c].iter().map(|&x| stability[x]).sum();
            if child_sum > stability[c] {
                stability[c] = child_sum;
            } else {
                selected[c] = true;
                let mut stack = children[c].clone();
                while let Some(x) = stack.pop() {
                    selected[x] = false;
                    stack.extend(children[x].iter().copied());
                }
            }
        }
    }

    // Root-only result keeps just the points that stay until the end.
    let root_max_lambda = entries
        .iter()
        .filter(|e| e.parent == 0)
        .map(|e| e.lambda)
        .fold(f64::MIN, f64::max);

    let mut raw = vec![usize::MAX; n];
    for e in &entries {
        let Child::Point(pt) = e.child else { continue };
        let mut c = e.parent;
        loop {
            if selected[c] {
                if c != 0 || e.lambda >= root_max_lambda {
                    raw[pt] = c;
                }
                break;
            }
            if c == 0 {
                break;
            }
            c = cluster_parent[c];
        }
    }

    let mut order: Vec<usize> = Vec::new();
    for &c in &raw {
        if c != usize::MAX && !order.contains(&c) {
            order.push(c);
        }
    }
    Ok(raw
        .iter()
        .map(|&c| {
            if c == usize::MAX {
                NOISE
            } else {
                order.iter().position(|&x| x == c).expect("cluster was ordered") as i32
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(points: &[(f64, f64)]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| {
            let (a, b) = (points[i], points[j]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
        .unwrap()
    }

    fn blobs(seed: u64, per: usize, centers: &[(f64, f64)]) -> (Vec<(f64, f64)>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push((cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0)));
                truth.push(c);
            }
        }
        (pts, truth)
    }

    #[test]
    fn separates_two_blobs() {
        let (pts, truth) = blobs(3, 50, &[(0.0, 0.0), (20.0, 0.0)]);
        let labels = cluster(&euclid(&pts), &ClusterParams::default()).unwrap();
        let ids: std::collections::BTreeSet<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
        assert_eq!(ids.len(), 2, "{labels:?}");
        for c in 0..2 {
            let in_blob: Vec<i32> = labels.iter().zip(&truth).filter(|(_, &t)| t == c).map(|(&l, _)| l).collect();
            let majority = in_blob.iter().filter(|&&l| l == in_blob[0]).count();
            assert!(majority * 10 >= in_blob.len() * 9);
        }
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let d = DistanceMatrix::from_fn(20, |_, _| 0.0).unwrap();
        assert_eq!(cluster(&d, &ClusterParams::default()).unwrap(), vec![0; 20]);
    }

    #[test]
    fn too_few_points_are_noise() {
        let d = euclid(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(cluster(&d, &ClusterParams::default()).unwrap(), vec![NOISE; 3]);
    }

    #[test]
    fn far_outlier_is_noise() {
        let (mut pts, _) = blobs(5, 30, &[(0.0, 0.0), (30.0, 0.0)]);
        pts.push((1000.0, 1000.0));
        let labels = cluster(&euclid(&pts), &ClusterParams { min_cluster_size: 10, min_samples: 5 }).unwrap();
        assert_eq!(*labels.last().unwrap(), NOISE);
    }

    #[test]
    fn labels_follow_first_member_order() {
        let (pts, _) = blobs(9, 20, &[(50.0, 0.0), (0.0, 0.0)]);
        let labels = cluster(&euclid(&pts), &ClusterParams { min_cluster_size: 5, min_samples: 3 }).unwrap();
        assert_eq!(labels.iter().find(|&&l| l >= 0), Some(&0));
    }

    #[test]
    fn rejects_bad_params() {
        let d = euclid(&[(0.0, 0.0)]);
        assert!(cluster(&d, &ClusterParams { min_cluster_size: 1, min_samples: 1 }).is_err());
    }
}
