//! Open shortest path through key points, anchored at the agent position.
//!
//! Node 0 is the agent's current position. Every arc *into* node 0 costs
//! nothing, so a closed tour's cost equals the open path it traces before the
//! free return. Up to [`EXACT_SIZE_LIMIT`] nodes the tour is optimal
//! (Held–Karp); larger instances use nearest neighbour plus 2-opt/Or-opt.

use crate::geom::Vec2;
use crate::scalar::{lit, Real};

/// Largest matrix size (start node included) solved exactly.
pub const EXACT_SIZE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    size: usize,
    costs: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    /// Arbitrary (possibly asymmetric) costs, row-major.
    pub fn from_costs(size: usize, costs: Vec<T>) -> Self {
        assert_eq!(costs.len(), size * size, "cost matrix must be size×size");
        Self { size, costs }
    }

    /// Euclidean costs from `x0` (node 0) and `points` (nodes 1..=m), with
    /// the column into node 0 zeroed.
    pub fn from_points(x0: Vec2<T>, points: &[Vec2<T>]) -> Self {
        let nodes: Vec<Vec2<T>> = std::iter::once(x0).chain(points.iter().copied()).collect();
        let size = nodes.len();
        let mut costs = vec![T::zero(); size * size];
        for i in 0..size {
            for j in 1..size {
                if i != j {
                    costs[i * size + j] = nodes[i].dist(nodes[j]);
                }
            }
        }
        Self { size, costs }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.costs[i * self.size + j]
    }

    /// Cost of visiting `order` and returning to its first node.
    pub fn tour_length(&self, order: &[usize]) -> T {
        if order.is_empty() {
            return T::zero();
        }
        let open: T = order.windows(2).map(|w| self.get(w[0], w[1])).sum();
        open + self.get(order[order.len() - 1], order[0])
    }
}

/// Builds the cost matrix for the agent position and selected key points.
pub fn build_cost_matrix<T: Real>(x0: Vec2<T>, keypoints: &crate::gmm::KeyPointSet<T>) -> CostMatrix<T> {
    CostMatrix::from_points(x0, &keypoints.points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour<T> {
    /// Visit order, starting with node 0; the return arc to 0 is implicit.
    pub order: Vec<usize>,
    /// Arc-cost sum including the (free) closing arc.
    pub length: T,
    /// `true` when produced by local search rather than the exact DP.
    pub heuristic: bool,
}

pub fn solve_tsp<T: Real>(matrix: &CostMatrix<T>) -> Tour<T> {
    if matrix.size() <= EXACT_SIZE_LIMIT {
        solve_exact(matrix)
    } else {
        solve_heuristic(matrix)
    }
}

fn tie_eps<T: Real>(v: T) -> T {
    lit::<T>(1e-12) * v.abs().max(T::one())
}

/// Held–Karp over subsets of nodes 1..size, node 0 fixed first.
///
/// Among optimal tours the lexicographically smallest order is returned.
/// Memory is `2^(size-1) · (size-1)` scalars; meant for `size ≤ ~20`.
pub fn solve_exact<T: Real>(matrix: &CostMatrix<T>) -> Tour<T> {
    let size = matrix.size();
    if size <= 1 {
        return Tour {
            order: (0..size).collect(),
            length: T::zero(),
            heuristic: false,
        };
    }
    let k = size - 1;
    let full = (1usize << k) - 1;
    // cost_to_go[mask * k + j]: cheapest completion from node j+1 having visited `mask`.
    let mut cost_to_go = vec![T::infinity(); (full + 1) * k];
    for j in 0..k {
        cost_to_go[full * k + j] = matrix.get(j + 1, 0);
    }
    for mask in (1..full).rev() {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut best = T::infinity();
            for l in 0..k {
                if mask & (1 << l) != 0 {
                    continue;
                }
                let c = matrix.get(j + 1, l + 1) + cost_to_go[(mask | 1 << l) * k + l];
                if c < best {
                    best = c;
                }
            }
            cost_to_go[mask * k + j] = best;
        }
    }
    let mut best = T::infinity();
    for l in 0..k {
        best = best.min(matrix.get(0, l + 1) + cost_to_go[(1 << l) * k + l]);
    }

    let mut order = vec![0];
    let mut mask = 0usize;
    let mut current = 0usize; // matrix index
    let mut remaining = best;
    while mask != full {
        let mut chosen = None;
        for l in 0..k {
            if mask & (1 << l) != 0 {
                continue;
            }
            let c = matrix.get(current, l + 1) + cost_to_go[(mask | 1 << l) * k + l];
            if c <= remaining + tie_eps(remaining) {
                chosen = Some((l, c - matrix.get(current, l + 1)));
                break;
            }
        }
        let (l, rest) = chosen.expect("optimal successor exists");
        mask |= 1 << l;
        current = l + 1;
        order.push(current);
        remaining = rest;
    }
    let length = matrix.tour_length(&order);
    Tour {
        order,
        length,
        heuristic: false,
    }
}

/// Multi-start local search: for every choice of first key point, a nearest
/// neighbour path from node 0 is improved by best-improvement 2-opt and
/// Or-opt until neither finds an improving move. The shortest local optimum
/// wins; ties go to the lexicographically smallest order.
pub fn solve_heuristic<T: Real>(matrix: &CostMatrix<T>) -> Tour<T> {
    let size = matrix.size();
    let mut best: Option<(Vec<usize>, T)> = None;
    for first in 1..size.max(2) {
        let mut order = nearest_neighbour(matrix, first);
        local_search(matrix, &mut order);
        let length = matrix.tour_length(&order);
        let better = match &best {
            None => true,
            Some((o, l)) => length < *l - tie_eps(*l) || (length <= *l + tie_eps(*l) && order < *o),
        };
        if better {
            best = Some((order, length));
        }
    }
    let (order, length) = best.expect("at least one start");
    Tour {
        order,
        length,
        heuristic: true,
    }
}

/// Greedy path `0, first, …`; `first` is ignored when out of range.
fn nearest_neighbour<T: Real>(matrix: &CostMatrix<T>, first: usize) -> Vec<usize> {
    let size = matrix.size();
    let mut order = Vec::with_capacity(size);
    let mut visited = vec![false; size];
    if size == 0 {
        return order;
    }
    order.push(0);
    visited[0] = true;
    if first < size {
        order.push(first);
        visited[first] = true;
    }
    while order.len() < size {
        let cur = *order.last().unwrap();
        let next = (0..size)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| matrix.get(cur, a).partial_cmp(&matrix.get(cur, b)).unwrap().then(a.cmp(&b)))
            .unwrap();
        visited[next] = true;
        order.push(next);
    }
    order
}

fn local_search<T: Real>(matrix: &CostMatrix<T>, order: &mut Vec<usize>) {
    loop {
        if two_opt_step(matrix, order) {
            continue;
        }
        if or_opt_step(matrix, order) {
            continue;
        }
        break;
    }
}

/// Best improving segment reversal `order[i..=j]`, `1 ≤ i < j`, if any.
pub fn best_two_opt_move<T: Real>(matrix: &CostMatrix<T>, order: &[usize]) -> Option<(usize, usize, T)> {
    let base = matrix.tour_length(order);
    let n = order.len();
    let mut best: Option<(usize, usize, T)> = None;
    let mut cand = order.to_vec();
    for i in 1..n {
        for j in i + 1..n {
            cand.copy_from_slice(order);
            cand[i..=j].reverse();
            let delta = matrix.tour_length(&cand) - base;
            if delta < -tie_eps(base) && best.map_or(true, |b| delta < b.2) {
                best = Some((i, j, delta));
            }
        }
    }
    best
}

fn two_opt_step<T: Real>(matrix: &CostMatrix<T>, order: &mut [usize]) -> bool {
    match best_two_opt_move(matrix, order) {
        Some((i, j, _)) => {
            order[i..=j].reverse();
            true
        }
        None => false,
    }
}

/// Relocates a run of 1–3 nodes (optionally reversed) to its best position.
fn or_opt_step<T: Real>(matrix: &CostMatrix<T>, order: &mut Vec<usize>) -> bool {
    let base = matrix.tour_length(order);
    let n = order.len();
    let mut best: Option<(Vec<usize>, T)> = None;
    for len in 1..=3usize {
        for i in 1..n {
            if i + len > n {
                break;
            }
            let seg: Vec<usize> = order[i..i + len].to_vec();
            let rest: Vec<usize> = order[..i].iter().chain(&order[i + len..]).copied().collect();
            for pos in 1..=rest.len() {
                if pos == i {
                    continue;
                }
                for rev in [false, true] {
                    if rev && len == 1 {
                        continue;
                    }
                    let mut cand = Vec::with_capacity(n);
                    cand.extend_from_slice(&rest[..pos]);
                    if rev {
                        cand.extend(seg.iter().rev());
                    } else {
                        cand.extend_from_slice(&seg);
                    }
                    cand.extend_from_slice(&rest[pos..]);
                    let delta = matrix.tour_length(&cand) - base;
                    if delta < -tie_eps(base) && best.as_ref().map_or(true, |b| delta < b.1) {
                        best = Some((cand, delta));
                    }
                }
            }
        }
    }
    match best {
        Some((cand, _)) => {
            *order = cand;
            true
        }
        None => false,
    }
}
