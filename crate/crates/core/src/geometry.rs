//! Point clouds in the unit cube and exact nearest-neighbour queries.
//!
//! Positions are drawn from xoshiro256++ (seeded through SplitMix64, as
//! `rand_xoshiro` does for `seed_from_u64`). Each coordinate is
//! `(x >> 11) * 2^-53` for the next 64-bit output `x`, generated in point
//! order and then x, y, z within a point, so a `(n, seed)` pair maps to the
//! same coordinates on every platform.

use std::cmp::Ordering;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwarmError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point { x, y, z }
    }

    fn in_unit_cube(&self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| (0.0..=1.0).contains(c))
    }
}

/// Satellite positions plus the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Point>,
    seed: u64,
}

impl PointSet {
    /// Wraps explicit coordinates, e.g. for hand-built fixtures.
    pub fn from_points(points: Vec<Point>, seed: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(SwarmError::invalid("point set must be nonempty"));
        }
        if let Some(i) = points.iter().position(|p| !p.in_unit_cube()) {
            return Err(SwarmError::invalid(format!(
                "point {i} lies outside the unit cube"
            )));
        }
        Ok(PointSet { points, seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Point {
        self.points[i]
    }
}

/// Maps a raw 64-bit output onto [0, 1) using its top 53 bits.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn generate_points(n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(SwarmError::invalid("n must be at least 1"));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x = unit_f64(rng.next_u64());
            let y = unit_f64(rng.next_u64());
            let z = unit_f64(rng.next_u64());
            Point::new(x, y, z)
        })
        .collect();
    Ok(PointSet { points, seed })
}

#[inline]
pub fn distance(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbour {
    pub index: usize,
    pub distance: f64,
}

/// The `k` nearest neighbours of `owner`, ascending by distance with ties
/// going to the lower vertex index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighbourList {
    pub owner: usize,
    pub neighbours: Vec<Neighbour>,
}

impl NeighbourList {
    /// Distance to the farthest listed neighbour (R_k), if any.
    pub fn radius(&self) -> Option<f64> {
        self.neighbours.last().map(|nb| nb.distance)
    }
}

fn neighbour_order(a: &Neighbour, b: &Neighbour) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.index.cmp(&b.index))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(SwarmError::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(SwarmError::invalid(format!(
            "k = {k} requires at least {} points, got {n}",
            k + 1
        )));
    }
    Ok(())
}

/// Brute-force reference: full scan over every other point.
pub fn knn(points: &PointSet, i: usize, k: usize) -> Result<NeighbourList> {
    let n = points.len();
    check_k(n, k)?;
    if i >= n {
        return Err(SwarmError::invalid(format!("vertex {i} out of range")));
    }
    let origin = points.get(i);
    let mut all: Vec<Neighbour> = (0..n)
        .filter(|&j| j != i)
        .map(|j| Neighbour {
            index: j,
            distance: distance(origin, points.get(j)),
        })
        .collect();
    all.sort_by(neighbour_order);
    all.truncate(k);
    Ok(NeighbourList {
        owner: i,
        neighbours: all,
    })
}

/// Uniform bucket grid over the unit cube used to answer k-NN queries for
/// every vertex without the O(n^2) scan. Results are identical to [`knn`].
#[derive(Debug)]
pub struct SpatialGrid<'a> {
    points: &'a PointSet,
    cells_per_axis: usize,
    cell_width: f64,
    // CSR layout: points of cell c are members[starts[c]..starts[c + 1]]
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl<'a> SpatialGrid<'a> {
    /// Grid with about two points per cell.
    pub fn new(points: &'a PointSet) -> Self {
        let n = points.len();
        let cells_per_axis = ((n as f64 / 2.0).cbrt().floor() as usize).max(1);
        let total = cells_per_axis.pow(3);
        let mut grid = SpatialGrid {
            points,
            cells_per_axis,
            cell_width: 1.0 / cells_per_axis as f64,
            starts: vec![0; total + 1],
            members: vec![0; n],
        };
        let cell_of: Vec<usize> = points
            .points()
            .iter()
            .map(|&p| {
                let [cx, cy, cz] = grid.cell_coords(p);
                grid.flat(cx, cy, cz)
            })
            .collect();
        for &c in &cell_of {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cell_of.iter().enumerate() {
            grid.members[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn axis_cell(&self, c: f64) -> usize {
        ((c * self.cells_per_axis as f64) as usize).min(self.cells_per_axis - 1)
    }

    fn cell_coords(&self, p: Point) -> [usize; 3] {
        [self.axis_cell(p.x), self.axis_cell(p.y), self.axis_cell(p.z)]
    }

    fn flat(&self, cx: usize, cy: usize, cz: usize) -> usize {
        (cx * self.cells_per_axis + cy) * self.cells_per_axis + cz
    }

    fn visit_shell(&self, home: [usize; 3], r: usize, mut f: impl FnMut(usize)) {
        let g = self.cells_per_axis as isize;
        let r = r as isize;
        let [hx, hy, hz] = home.map(|c| c as isize);
        for dx in -r..=r {
            let x = hx + dx;
            if x < 0 || x >= g {
                continue;
            }
            for dy in -r..=r {
                let y = hy + dy;
                if y < 0 || y >= g {
                    continue;
                }
                let on_face = dx.abs() == r || dy.abs() == r;
                // interior of the shell only needs the two z faces
                let dzs: Vec<isize> = if on_face {
                    (-r..=r).collect()
                } else if r == 0 {
                    vec![0]
                } else {
                    vec![-r, r]
                };
                for dz in dzs {
                    let z = hz + dz;
                    if z < 0 || z >= g {
                        continue;
                    }
                    let c = self.flat(x as usize, y as usize, z as usize);
                    for &m in &self.members[self.starts[c]..self.starts[c + 1]] {
                        f(m);
                    }
                }
            }
        }
    }

    pub fn knn(&self, i: usize, k: usize) -> Result<NeighbourList> {
        let n = self.points.len();
        check_k(n, k)?;
        if i >= n {
            return Err(SwarmError::invalid(format!("vertex {i} out of range")));
        }
        let origin = self.points.get(i);
        let home = self.cell_coords(origin);
        let mut candidates: Vec<Neighbour> = Vec::with_capacity(4 * k + 8);
        let mut r = 0;
        loop {
            self.visit_shell(home, r, |j| {
                if j != i {
                    candidates.push(Neighbour {
                        index: j,
                        distance: distance(origin, self.points.get(j)),
                    });
                }
            });
            if r + 1 >= self.cells_per_axis {
                break;
            }
            if candidates.len() >= k {
                candidates.select_nth_unstable_by(k - 1, neighbour_order);
                let kth = candidates[k - 1].distance;
                // unvisited points are at least r * cell_width away; the
                // slack absorbs rounding in cell assignment
                if kth + 1e-9 < r as f64 * self.cell_width {
                    break;
                }
            }
            r += 1;
        }
        candidates.sort_by(neighbour_order);
        candidates.truncate(k);
        Ok(NeighbourList {
            owner: i,
            neighbours: candidates,
        })
    }
}

/// k-NN lists for every vertex, in vertex order.
pub fn knn_all(points: &PointSet, k: usize) -> Result<Vec<NeighbourList>> {
    check_k(points.len(), k)?;
    let grid = SpatialGrid::new(points);
    (0..points.len()).map(|i| grid.knn(i, k)).collect()
}

fn checked_subset(points: &PointSet, subset: &[usize]) -> Result<Vec<usize>> {
    if subset.len() < 2 {
        return Err(SwarmError::invalid(
            "baseline queries need at least two vertices",
        ));
    }
    if let Some(&bad) = subset.iter().find(|&&v| v >= points.len()) {
        return Err(SwarmError::invalid(format!("vertex {bad} out of range")));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(SwarmError::invalid(
            "baseline queries need at least two distinct vertices",
        ));
    }
    Ok(sorted)
}

/// All pairwise distances within `subset`, ordered lexicographically by
/// (smaller vertex, larger vertex).
pub fn baseline_lengths(points: &PointSet, subset: &[usize]) -> Result<Vec<f64>> {
    let members = checked_subset(points, subset)?;
    let m = members.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for (a, &u) in members.iter().enumerate() {
        let pu = points.get(u);
        for &v in &members[a + 1..] {
            out.push(distance(pu, points.get(v)));
        }
    }
    Ok(out)
}

pub fn max_baseline(points: &PointSet, subset: &[usize]) -> Result<f64> {
    let members = checked_subset(points, subset)?;
    let mut best = 0.0f64;
    for (a, &u) in members.iter().enumerate() {
        let pu = points.get(u);
        for &v in &members[a + 1..] {
            best = best.max(distance(pu, points.get(v)));
        }
    }
    Ok(best)
}
