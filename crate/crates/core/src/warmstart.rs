//! Initial guess from a tour: walk the open polyline at `v_max·dt` per step.

use crate::geom::Vec2;
use crate::mpc::State;
use crate::scalar::{from_usize, Real};
use crate::tsp::Tour;

#[derive(Debug, Clone, PartialEq)]
pub struct GuessTrajectory<T> {
    /// `N + 1` states.
    pub states: Vec<State<T>>,
    /// `N` accelerations.
    pub inputs: Vec<Vec2<T>>,
    /// `N` slacks for states 1..=N (all zero).
    pub slacks: Vec<T>,
    pub dt: T,
}

impl<T> GuessTrajectory<T> {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }
}

/// Point at arc length `s` along `poly`, clamped to its end.
fn point_at<T: Real>(poly: &[Vec2<T>], cumulative: &[T], s: T) -> Vec2<T> {
    let last = poly.len() - 1;
    if s >= cumulative[last] {
        return poly[last];
    }
    let seg = cumulative.partition_point(|c| *c <= s).saturating_sub(1).min(last - 1);
    let len = cumulative[seg + 1] - cumulative[seg];
    if len <= T::zero() {
        return poly[seg];
    }
    let t = (s - cumulative[seg]) / len;
    poly[seg] + (poly[seg + 1] - poly[seg]) * t
}

/// Discretizes `tour` over `points` (index 0 = agent position) into `horizon` steps.
///
/// Positions advance by `v_max·dt` of arc length per step and hold at the end
/// of the polyline once it is exhausted; the free return arc is not walked.
/// `states[0]` is `x0` itself; later velocities are forward differences of
/// positions (zero at the final state) and inputs are velocity differences
/// clamped per axis to `±u_max`.
pub fn discretize_tour<T: Real>(
    tour: &Tour<T>,
    points: &[Vec2<T>],
    x0: &State<T>,
    horizon: usize,
    dt: T,
    v_max: T,
    u_max: T,
) -> GuessTrajectory<T> {
    let mut poly: Vec<Vec2<T>> = Vec::with_capacity(tour.order.len());
    poly.push(x0.pos);
    for &i in tour.order.iter().skip_while(|&&i| i == 0) {
        poly.push(points[i]);
    }
    if poly.len() == 1 {
        poly.push(x0.pos);
    }
    let mut cumulative = vec![T::zero(); poly.len()];
    for k in 1..poly.len() {
        cumulative[k] = cumulative[k - 1] + poly[k].dist(poly[k - 1]);
    }
    let step = v_max * dt;
    let positions: Vec<Vec2<T>> = (0..=horizon)
        .map(|k| {
            if k == 0 {
                x0.pos
            } else {
                point_at(&poly, &cumulative, step * from_usize::<T>(k))
            }
        })
        .collect();

    let mut states = Vec::with_capacity(horizon + 1);
    states.push(*x0);
    for k in 1..=horizon {
        let vel = if k < horizon {
            (positions[k + 1] - positions[k]) * (T::one() / dt)
        } else {
            Vec2::zero()
        };
        states.push(State { pos: positions[k], vel });
    }
    let clamp = |a: T| a.max(-u_max).min(u_max);
    let inputs = (0..horizon)
        .map(|k| {
            let a = (states[k + 1].vel - states[k].vel) * (T::one() / dt);
            Vec2::new(clamp(a.x), clamp(a.y))
        })
        .collect();
    GuessTrajectory {
        states,
        inputs,
        slacks: vec![T::zero(); horizon],
        dt,
    }
}
