//! Energy-budgeted operation of the swarm: choose a per-satellite budget
//! from a cost quantile, prune edges the budget cannot pay for, hand out
//! cross-correlation jobs in label order and score the result.
//!
//! Units: one job costs `job_cost` energy, fixed by requiring that the full
//! set of `C(n, 2)` jobs uses a `beta` fraction of the swarm's `n · e_max`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::energy::{expected_residual, CostModel};
use crate::error::{Result, SwarmError};
use crate::graph::{DirectedGraph, Edge, SccDecomposition, SwarmClassification};

pub fn pairs(m: usize) -> u64 {
    let m = m as u64;
    m * m.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub n: usize,
    pub k: usize,
    pub e_max: f64,
    pub p_level: f64,
    pub beta: f64,
    pub job_cost: f64,
}

/// `job_cost · C(n, 2) = n · beta · e_max`.
pub fn job_cost(n: usize, beta: f64, e_max: f64) -> Result<f64> {
    if n < 2 {
        return Err(SwarmError::invalid("a swarm needs at least two satellites"));
    }
    Ok(n as f64 * beta * e_max / pairs(n) as f64)
}

/// Budget `e_max = q(p_level)` under the finite-size corrected cost law.
pub fn budget_from_quantile(p_level: f64, n: usize, k: usize, beta: f64) -> Result<EnergyBudget> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(SwarmError::invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    let model = CostModel::new(n, k, true)?;
    let e_max = model.quantile(p_level)?;
    Ok(EnergyBudget {
        n,
        k,
        e_max,
        p_level,
        beta,
        job_cost: job_cost(n, beta, e_max)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedNetwork {
    pub graph: DirectedGraph,
    /// Squared length of each vertex's farthest retained edge, 0 if none.
    pub realized_cost: Vec<f64>,
    pub removed_edges: usize,
}

/// Drops, per vertex, the most expensive out-edges until the squared length
/// of the farthest remaining edge fits in `e_max`. With a broadcast cost
/// model this is the same as keeping exactly the edges with
/// `length² <= e_max`.
pub fn prune(graph: &DirectedGraph, e_max: f64) -> PrunedNetwork {
    let n = graph.n();
    let mut removed = 0;
    let mut realized = Vec::with_capacity(n);
    let kept: Vec<Vec<Edge>> = (0..n)
        .map(|v| {
            let edges = graph.out_edges(v);
            let keep: Vec<Edge> = edges
                .iter()
                .copied()
                .filter(|e| e.length * e.length <= e_max)
                .collect();
            removed += edges.len() - keep.len();
            realized.push(
                keep.iter()
                    .map(|e| e.length * e.length)
                    .fold(0.0, f64::max),
            );
            keep
        })
        .collect();
    PrunedNetwork {
        graph: DirectedGraph::new(kept).expect("subgraph of a valid graph"),
        realized_cost: realized,
        removed_edges: removed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerAssignment {
    pub vertex: usize,
    /// 1-based protocol label.
    pub label: usize,
    pub capacity: u64,
    /// Half-open range of 0-based job indices.
    pub jobs: Range<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub assignments: Vec<WorkerAssignment>,
    pub total_assigned: u64,
    /// Size of the LSCC (number of first-class workers).
    pub m: usize,
    pub job_pool_size: u64,
    /// In-component of the LSCC, ascending; job `j` pairs two of these.
    pub pool: Vec<usize>,
}

impl Allocation {
    /// The vertex pair of 0-based job `j` in lexicographic order over
    /// `pool` positions.
    pub fn job_pair(&self, j: u64) -> Option<(usize, usize)> {
        let (r, s) = pair_at(self.pool.len(), j)?;
        Some((self.pool[r], self.pool[s]))
    }
}

/// Offset of the first pair whose first position is `r`.
fn row_start(p: u64, r: u64) -> u64 {
    r * (2 * p - r - 1) / 2
}

/// Positions `(r, s)`, `r < s`, of the `j`-th pair among `p` items.
pub(crate) fn pair_at(p: usize, j: u64) -> Option<(usize, usize)> {
    let p64 = p as u64;
    if j >= pairs(p) {
        return None;
    }
    // largest r in [0, p - 2] with row_start(r) <= j
    let (mut lo, mut hi) = (0u64, p64 - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if row_start(p64, mid) <= j {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = lo;
    let s = r + 1 + (j - row_start(p64, r));
    Some((r as usize, s as usize))
}

/// Hands out jobs in label order: LSCC members by ascending vertex index,
/// then the rest of the out-component. Worker `i` takes the next
/// `⌊residual_i / job_cost⌋` jobs until the pool runs out.
pub fn allocate(
    classification: &SwarmClassification,
    residuals: &[f64],
    job_cost: f64,
) -> Result<Allocation> {
    if !(job_cost > 0.0) || !job_cost.is_finite() {
        return Err(SwarmError::invalid(format!(
            "job cost must be positive and finite, got {job_cost}"
        )));
    }
    if residuals.len() != classification.n() {
        return Err(SwarmError::invalid(format!(
            "{} residuals for {} satellites",
            residuals.len(),
            classification.n()
        )));
    }
    if let Some(r) = residuals.iter().find(|r| !r.is_finite()) {
        return Err(SwarmError::invalid(format!("residual energy {r} is not finite")));
    }
    let workers = classification.lscc.iter().copied().chain(
        classification
            .out_comp
            .iter()
            .copied()
            .filter(|&v| !classification.is_lscc(v)),
    );
    let pool = classification.in_comp.clone();
    let job_pool_size = pairs(pool.len());
    let mut next = 0u64;
    let assignments: Vec<WorkerAssignment> = workers
        .enumerate()
        .map(|(i, v)| {
            let capacity = (residuals[v].max(0.0) / job_cost).floor() as u64;
            let start = next;
            next = next.saturating_add(capacity).min(job_pool_size);
            WorkerAssignment {
                vertex: v,
                label: i + 1,
                capacity,
                jobs: start..next,
            }
        })
        .collect();
    Ok(Allocation {
        assignments,
        total_assigned: next,
        m: classification.lscc.len(),
        job_pool_size,
        pool,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub rho_l: f64,
    pub alpha_l: f64,
    pub alpha: f64,
    /// Assigned jobs with both endpoints in the post-pruning LSCC.
    pub lscc_jobs: u64,
}

/// Counts assigned jobs (the first `alloc.total_assigned` pool pairs) whose
/// endpoints both satisfy `in_lscc`, one pool row at a time.
pub fn lscc_assigned_jobs(in_lscc: &[bool], alloc: &Allocation) -> u64 {
    let p = alloc.pool.len();
    // suffix[r] = LSCC members among pool positions r..p
    let mut suffix = vec![0u64; p + 1];
    for r in (0..p).rev() {
        suffix[r] = suffix[r + 1] + in_lscc[alloc.pool[r]] as u64;
    }
    let mut remaining = alloc.total_assigned;
    let mut count = 0;
    for r in 0..p {
        if remaining == 0 {
            break;
        }
        let row_len = (p - r - 1) as u64;
        let take = row_len.min(remaining);
        remaining -= take;
        if in_lscc[alloc.pool[r]] {
            let end = r + 1 + take as usize;
            count += suffix[r + 1] - suffix[end];
        }
    }
    count
}

/// Scores an allocation against the largest strongly connected component
/// before (`pre`) and after (`post`) pruning. Both LSCCs come from the SCC
/// decomposition, not from the in-component classification the satellites
/// used to allocate, so a misclassification lowers coverage instead of
/// redefining it.
pub fn coverage(
    pre: &SccDecomposition,
    post: &SccDecomposition,
    alloc: &Allocation,
    n: usize,
) -> Result<CoverageMetrics> {
    let pre_size = pre.lscc_size();
    if pre_size == 0 {
        return Err(SwarmError::invalid("pre-pruning LSCC is empty"));
    }
    if n < 2 {
        return Err(SwarmError::invalid("coverage needs at least two satellites"));
    }
    if post.component_id.len() != n {
        return Err(SwarmError::invalid("post-pruning decomposition has the wrong size"));
    }
    let post_size = post.lscc_size();
    let in_lscc: Vec<bool> = post.component_id.iter().map(|&c| c == post.lscc_id).collect();
    let lscc_jobs = lscc_assigned_jobs(&in_lscc, alloc);
    let alpha_l = if post_size < 2 {
        0.0
    } else {
        lscc_jobs as f64 / pairs(post_size) as f64
    };
    Ok(CoverageMetrics {
        rho_l: post_size as f64 / pre_size as f64,
        alpha_l,
        alpha: lscc_jobs as f64 / pairs(n) as f64,
        lscc_jobs,
    })
}

/// Large-`n` approximation `min(η₊ · 2 E[E] / n, η₋²)` with the expected
/// residual measured in jobs, clamped to `[0, 1]`.
pub fn alpha_theory(
    n: usize,
    k: usize,
    e_max: f64,
    job_cost: f64,
    eta_plus: f64,
    eta_minus: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta_plus) || !(0.0..=1.0).contains(&eta_minus) {
        return Err(SwarmError::invalid("component fractions must lie in [0, 1]"));
    }
    if e_max == 0.0 {
        return Ok(0.0);
    }
    if !(job_cost > 0.0) {
        return Err(SwarmError::invalid("job cost must be positive"));
    }
    let jobs = expected_residual(e_max, n, k, true)? / job_cost;
    let v = (eta_plus * 2.0 * jobs / n as f64).min(eta_minus * eta_minus);
    Ok(v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{classify, scc, SatelliteType};

    fn line_graph(lengths: &[f64]) -> DirectedGraph {
        // vertex 0 points at 1..=len with the given lengths
        let mut adj = vec![lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Edge {
                target: i + 1,
                length: l,
            })
            .collect::<Vec<_>>()];
        adj.extend((0..lengths.len()).map(|_| Vec::new()));
        DirectedGraph::new(adj).unwrap()
    }

    fn cycle(n: usize) -> DirectedGraph {
        let adj: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + 1) % n]).collect();
        DirectedGraph::from_adjacency(&adj).unwrap()
    }

    #[test]
    fn job_cost_identity() {
        let b = budget_from_quantile(0.7, 300, 5, 0.4).unwrap();
        let lhs = b.job_cost * pairs(300) as f64;
        let rhs = 300.0 * 0.4 * b.e_max;
        assert!((lhs - rhs).abs() <= 1e-15 * rhs);
        assert!((b.job_cost - 2.0 * 0.4 * b.e_max / 299.0).abs() < 1e-18);
    }

    #[test]
    fn budget_rejects_bad_levels() {
        assert!(budget_from_quantile(0.0, 300, 5, 0.4).is_err());
        assert!(budget_from_quantile(1.0, 300, 5, 0.4).is_err());
        assert!(budget_from_quantile(0.5, 300, 5, 0.0).is_err());
        assert!(budget_from_quantile(0.5, 300, 5, 1.5).is_err());
    }

    #[test]
    fn budget_grows_with_level() {
        let levels = [0.1, 0.5, 0.9, 0.99, 0.999999];
        let e: Vec<f64> = levels
            .iter()
            .map(|&p| budget_from_quantile(p, 600, 5, 1.0).unwrap().e_max)
            .collect();
        assert!(e.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn prune_hand_example() {
        let g = line_graph(&[0.1, 0.2, 0.3]);
        let pr = prune(&g, 0.05);
        let kept: Vec<f64> = pr.graph.out_edges(0).iter().map(|e| e.length).collect();
        assert_eq!(kept, vec![0.1, 0.2]);
        assert_eq!(pr.removed_edges, 1);
        assert!((pr.realized_cost[0] - 0.04).abs() < 1e-15);
        assert_eq!(pr.realized_cost[1], 0.0);
    }

    #[test]
    fn prune_extremes() {
        let g = line_graph(&[0.1, 0.2, 0.3]);
        assert_eq!(prune(&g, 1.0).removed_edges, 0);
        let none = prune(&g, 0.0);
        assert_eq!(none.graph.edge_count(), 0);
        assert_eq!(none.realized_cost, vec![0.0; 4]);
    }

    #[test]
    fn pair_indexing() {
        let p = 5;
        let mut j = 0;
        for r in 0..p {
            for s in r + 1..p {
                assert_eq!(pair_at(p, j), Some((r, s)));
                j += 1;
            }
        }
        assert_eq!(pair_at(p, j), None);
        assert_eq!(pair_at(2, 0), Some((0, 1)));
        assert_eq!(pair_at(1, 0), None);
    }

    fn three_cycle_with_pool(extra_in: usize) -> SwarmClassification {
        // cycle 0 -> 1 -> 2 -> 0, plus `extra_in` vertices feeding vertex 0
        let mut adj: Vec<Vec<usize>> = vec![vec![1], vec![2], vec![0]];
        for _ in 0..extra_in {
            adj.push(vec![0]);
        }
        classify(&DirectedGraph::from_adjacency(&adj).unwrap()).unwrap()
    }

    #[test]
    fn allocate_floor_arithmetic() {
        // pool of 5 in-component vertices gives C(5,2) = 10 jobs
        let c = three_cycle_with_pool(2);
        assert_eq!(c.in_comp.len(), 5);
        let residuals = [2.5, 1.2, 0.8, 9.0, 9.0];
        let a = allocate(&c, &residuals, 1.0).unwrap();
        assert_eq!(a.job_pool_size, 10);
        let caps: Vec<u64> = a.assignments.iter().map(|w| w.capacity).collect();
        assert_eq!(caps, vec![2, 1, 0]);
        let ranges: Vec<Range<u64>> = a.assignments.iter().map(|w| w.jobs.clone()).collect();
        assert_eq!(ranges, vec![0..2, 2..3, 3..3]);
        assert_eq!(a.total_assigned, 3);
        assert_eq!(a.m, 3);
    }

    #[test]
    fn allocate_caps_at_pool() {
        let c = three_cycle_with_pool(0);
        let a = allocate(&c, &[2.0, 5.0, 5.0], 1.0).unwrap();
        assert_eq!(a.job_pool_size, 3);
        assert_eq!(a.total_assigned, 3);
        assert_eq!(a.assignments[1].jobs, 2..3);
        assert_eq!(a.assignments[2].jobs, 3..3);
    }

    #[test]
    fn allocate_labels_out_component_after_lscc() {
        let g = DirectedGraph::from_adjacency(&[vec![1], vec![2], vec![0, 3], vec![]]).unwrap();
        let c = classify(&g).unwrap();
        assert_eq!(c.types[3], SatelliteType::OutComponent);
        let a = allocate(&c, &[0.0, 0.0, 0.0, 2.0], 1.0).unwrap();
        let last = a.assignments.last().unwrap();
        assert_eq!((last.vertex, last.label), (3, 4));
        assert_eq!(last.jobs, 0..2);
    }

    #[test]
    fn allocate_rejects_bad_cost() {
        let c = three_cycle_with_pool(0);
        assert!(allocate(&c, &[1.0; 3], 0.0).is_err());
        assert!(allocate(&c, &[1.0; 3], -1.0).is_err());
        assert!(allocate(&c, &[1.0; 2], 1.0).is_err());
    }

    #[test]
    fn saturated_coverage() {
        let g = cycle(6);
        let pre = scc(&g);
        let post = classify(&g).unwrap();
        let a = allocate(&post, &[100.0; 6], 1.0).unwrap();
        let m = coverage(&pre, &pre, &a, 6).unwrap();
        assert_eq!((m.rho_l, m.alpha_l, m.alpha), (1.0, 1.0, 1.0));

        // the same LSCC inside a swarm of 10 isolated-plus-cycle vertices
        let mut adj: Vec<Vec<usize>> = (0..6).map(|v| vec![(v + 1) % 6]).collect();
        adj.extend((0..4).map(|_| Vec::new()));
        let g = DirectedGraph::from_adjacency(&adj).unwrap();
        let pre = scc(&g);
        let post = classify(&g).unwrap();
        let a = allocate(&post, &[100.0; 10], 1.0).unwrap();
        let m = coverage(&pre, &pre, &a, 10).unwrap();
        assert_eq!(m.rho_l, 1.0);
        assert_eq!(m.alpha_l, 1.0);
        assert_eq!(m.alpha, 15.0 / 45.0);
    }

    #[test]
    fn zero_residuals_cover_nothing() {
        let g = cycle(5);
        let post = classify(&g).unwrap();
        let a = allocate(&post, &[0.0; 5], 0.3).unwrap();
        let m = coverage(&scc(&g), &scc(&g), &a, 5).unwrap();
        assert_eq!((m.alpha, m.alpha_l), (0.0, 0.0));
    }

    #[test]
    fn alpha_theory_limits() {
        assert_eq!(alpha_theory(500, 5, 0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(alpha_theory(500, 5, 10.0, 1e-6, 1.0, 1.0).unwrap(), 1.0);
        assert!((alpha_theory(500, 5, 10.0, 1e-6, 1.0, 0.9).unwrap() - 0.81).abs() < 1e-15);
        assert!(alpha_theory(500, 5, 1.0, 1.0, 1.2, 1.0).is_err());
    }
}
