//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use swarm_core::geometry::{distance, unit_f64, PointSet};
use std::ops::Range;
use swarm_core::energy::CostModel;
use swarm_core::geometry::generate_points;
use swarm_core::graph::{build_knn_graph, DirectedGraph, SwarmClassification};
use swarm_core::protocol::prune;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn uniform(r: &mut Xoshiro256PlusPlus) -> f64 {
    unit_f64(r.next_u64())
}

/// Neighbour indices of `i` by sorting every other vertex on
/// (distance, index).
pub fn brute_knn(points: &PointSet, i: usize, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| (j, distance(points.get(i), points.get(j))))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Random digraph with each ordered pair present with probability `p`.
pub fn random_digraph(n: usize, p: f64, seed: u64) -> DirectedGraph {
    let mut r = rng(seed);
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| v != u && uniform(&mut r) < p).collect())
        .collect();
    DirectedGraph::from_adjacency(&adj).unwrap()
}

/// Floyd–Warshall transitive closure; `reach[u][v]` iff a path u → v
/// exists (every vertex reaches itself).
pub fn closure(graph: &DirectedGraph) -> Vec<Vec<bool>> {
    let n = graph.n();
    let mut reach = vec![vec![false; n]; n];
    for (u, row) in reach.iter_mut().enumerate() {
        row[u] = true;
        for v in graph.successors(u) {
            row[v] = true;
        }
    }
    for w in 0..n {
        for u in 0..n {
            if reach[u][w] {
                for v in 0..n {
                    if reach[w][v] {
                        reach[u][v] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Mutual-reachability classes, as a canonical "same class" matrix.
pub fn same_class(reach: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = reach.len();
    (0..n)
        .map(|u| (0..n).map(|v| reach[u][v] && reach[v][u]).collect())
        .collect()
}

/// Column sums of the closure: how many vertices reach each vertex.
pub fn closure_in_sizes(reach: &[Vec<bool>]) -> Vec<usize> {
    let n = reach.len();
    (0..n).map(|v| (0..n).filter(|&u| reach[u][v]).count()).collect()
}

/// Draws from the generalized gamma law with integer `d/p = k`:
/// `(x/a)^p` is Gamma(k, 1), a sum of `k` unit exponentials.
pub fn sample_gg(r: &mut Xoshiro256PlusPlus, a: f64, k: usize, p: f64) -> f64 {
    let y: f64 = (0..k).map(|_| -(1.0 - uniform(r)).ln()).sum();
    a * y.powf(1.0 / p)
}

/// Composite 16-point Gauss–Legendre rule on `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.7554044083550030,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            X.iter()
                .zip(W.iter())
                .map(|(&x, &w)| w * (f(mid - half * x) + f(mid + half * x)))
                .sum::<f64>()
                * half
        })
        .sum()
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    std_error(xs) * (xs.len() as f64).sqrt()
}

/// Builds a random allocation instance from a pruned k-NN graph, with
/// residuals on a 1/1024 grid and a power-of-two job cost so that the
/// oracle's repeated subtraction is exact.
pub fn allocation_instance(seed: u64) -> (DirectedGraph, Vec<f64>, f64) {
    let mut r = rng(seed ^ 0xa11c);
    let n = 20 + (seed as usize * 13) % 60;
    let ps = generate_points(n, seed).unwrap();
    let g = build_knn_graph(&ps, 3 + seed as usize % 4).unwrap();
    let model = CostModel::new(n, 5, true).unwrap();
    let e_max = model.quantile(0.2 + 0.79 * uniform(&mut r)).unwrap();
    let pruned = prune(&g, e_max).graph;
    let residuals: Vec<f64> = (0..n)
        .map(|_| (uniform(&mut r) * 40.0 * 1024.0).floor() / 1024.0)
        .collect();
    let job_cost = [0.25, 0.5, 1.0, 2.0][seed as usize % 4];
    (pruned, residuals, job_cost)
}

/// Hands out jobs one at a time, worker by worker, spending `job_cost`
/// from each worker's energy per job. Returns each worker's job range and
/// the enumerated pair pool.
pub fn greedy_allocation(
    c: &SwarmClassification,
    residuals: &[f64],
    job_cost: f64,
) -> (Vec<(usize, Range<u64>)>, Vec<(usize, usize)>) {
    let pool: Vec<(usize, usize)> = c
        .in_comp
        .iter()
        .enumerate()
        .flat_map(|(a, &u)| c.in_comp[a + 1..].iter().map(move |&v| (u, v)))
        .collect();
    let mut workers: Vec<usize> = c.lscc.clone();
    workers.extend(c.out_comp.iter().filter(|v| !c.lscc.contains(v)));
    let mut next = 0usize;
    let mut ranges = Vec::new();
    for &w in &workers {
        let mut energy = residuals[w];
        let start = next;
        while next < pool.len() && energy >= job_cost {
            energy -= job_cost;
            next += 1;
        }
        ranges.push((w, start as u64..next as u64));
    }
    (ranges, pool)
}
