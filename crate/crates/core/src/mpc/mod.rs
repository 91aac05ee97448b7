//! Finite-horizon optimal control with coverage constraints.
//!
//! The agent is a double integrator over the map. Over a horizon of `N`
//! steps the controller minimizes
//!
//! ```text
//! J = c1 Σ_{k<N} u_kᵀ R u_k − c2 Σ_{k≤N} r(x_k) + c3 Σ_{i=1..N} ε_i
//! ```
//!
//! subject to the dynamics, box bounds on position, velocity and
//! acceleration, and the soft coverage constraints
//! `‖p_i − p_j‖² ≥ V² − ε_i` for every `j < i`, `ε_i ≥ 0`.

mod closed_loop;
mod dynamics;
pub mod lbfgs;
mod penalty;
mod solve;
mod trajectory_io;

pub use closed_loop::{closed_loop, ClosedLoopResult, StepStats, WarmstartPolicy};
pub use dynamics::{step_dynamics, DynamicsModel, State};
pub use penalty::{FullGradient, PenalizedObjective};
pub use solve::{repair_inputs, solve_ocp, solve_ocp_from, InitialGuess};
pub use trajectory_io::{read_trajectory_csv, write_trajectory_csv, TrajectoryRow, TRAJECTORY_CSV_HEADER};

use crate::geom::{Sym2, Vec2};
use crate::reward::{Rect, RewardField};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Cap on inner (quasi-Newton) iterations summed over all outer rounds.
    pub max_iter: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Projected-gradient tolerance on the scaled merit function.
    pub kkt_tol: T,
    /// Largest normalized constraint violation accepted as feasible.
    pub feas_tol: T,
    pub initial_penalty: T,
    /// Factor applied to the penalty when the violation fails to shrink by 4×.
    pub penalty_growth: T,
    pub memory: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 3000,
            max_outer: 25,
            max_inner: 300,
            kkt_tol: lit(1e-5),
            feas_tol: lit(1e-6),
            initial_penalty: lit(10.0),
            penalty_growth: lit(2.0),
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig<T> {
    /// Horizon length `N`.
    pub horizon: usize,
    pub c1: T,
    pub c2: T,
    pub c3: T,
    /// Input cost matrix (symmetric positive definite).
    pub input_cost: Sym2<T>,
    /// Visibility radius `V` in meters.
    pub visibility: T,
    /// Admissible positions.
    pub domain: Rect<T>,
    pub v_max: T,
    pub u_max: T,
    pub dynamics: DynamicsModel<T>,
    pub solver: SolverOptions<T>,
}

impl<T: Real> MpcConfig<T> {
    /// Weights `c1 = 1, c2 = 1000, c3 = 100`, `R = I`, `dt = 1 s`,
    /// `v_max = 20 m/s`, `u_max = 5 m/s²`, `V = 15 m`.
    pub fn new(horizon: usize, domain: Rect<T>) -> Self {
        Self {
            horizon,
            c1: T::one(),
            c2: lit(1000.0),
            c3: lit(100.0),
            input_cost: Sym2::identity(),
            visibility: lit(15.0),
            domain,
            v_max: lit(20.0),
            u_max: lit(5.0),
            dynamics: DynamicsModel::new(T::one()),
            solver: SolverOptions::default(),
        }
    }

    pub fn dt(&self) -> T {
        self.dynamics.dt
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidArgument(m.to_string()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if !(self.c1 >= T::zero() && self.c2 >= T::zero() && self.c3 >= T::zero()) {
            return bad("objective weights must be non-negative");
        }
        if !self.input_cost.is_positive_definite() {
            return bad("input cost matrix must be positive definite");
        }
        if !(self.visibility > T::zero()) {
            return bad("visibility radius must be positive");
        }
        if !(self.v_max > T::zero() && self.u_max > T::zero() && self.dt() > T::zero()) {
            return bad("v_max, u_max and dt must be positive");
        }
        if !(self.domain.max.x > self.domain.min.x && self.domain.max.y > self.domain.min.y) {
            return bad("domain must have positive area");
        }
        Ok(())
    }

    /// Whether `x` lies in the admissible state set.
    pub fn admissible(&self, x: &State<T>, tol: T) -> bool {
        let d = self.domain;
        x.pos.x >= d.min.x - tol
            && x.pos.x <= d.max.x + tol
            && x.pos.y >= d.min.y - tol
            && x.pos.y <= d.max.y + tol
            && x.vel.x.abs() <= self.v_max + tol
            && x.vel.y.abs() <= self.v_max + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iter",
        })
    }
}

/// Objective value and its three unweighted parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveBreakdown<T> {
    pub total: T,
    /// Σ u_kᵀ R u_k
    pub input_cost: T,
    /// Σ r(x_k), k = 0..=N
    pub reward_sum: T,
    /// Σ ε_i, i = 1..=N
    pub slack_sum: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    /// `x_0 ..= x_N`
    pub states: Vec<State<T>>,
    /// `u_0 .. u_{N-1}`
    pub inputs: Vec<Vec2<T>>,
    /// `ε_1 ..= ε_N` (m²)
    pub slacks: Vec<T>,
    pub objective: ObjectiveBreakdown<T>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub outer_iterations: usize,
    /// Final normalized constraint violation before repair.
    pub violation: T,
}

impl<T: Real> Trajectory<T> {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn positions(&self) -> Vec<Vec2<T>> {
        self.states.iter().map(|s| s.pos).collect()
    }
}

/// `‖p_i − p_j‖² − V² + ε_i` for every `1 ≤ i ≤ N`, `0 ≤ j < i`.
///
/// `slacks[i - 1]` is `ε_i`; the result has `N(N+1)/2` entries.
pub fn coverage_residuals<T: Real>(positions: &[Vec2<T>], visibility: T, slacks: &[T]) -> Vec<(usize, usize, T)> {
    assert_eq!(slacks.len() + 1, positions.len(), "need one slack per state after the first");
    let v2 = visibility * visibility;
    let mut out = Vec::with_capacity(positions.len() * slacks.len() / 2);
    for i in 1..positions.len() {
        for j in 0..i {
            out.push((i, j, positions[i].dist_sq(positions[j]) - v2 + slacks[i - 1]));
        }
    }
    out
}

/// Number of coverage constraints for horizon `n`.
pub fn coverage_pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Smallest slacks satisfying every coverage constraint for the given positions,
/// optionally also against fixed earlier `history` positions.
pub fn minimal_slacks<T: Real>(positions: &[Vec2<T>], history: &[Vec2<T>], visibility: T) -> Vec<T> {
    let v2 = visibility * visibility;
    (1..positions.len())
        .map(|i| {
            let nearest = positions[..i]
                .iter()
                .chain(history)
                .map(|q| positions[i].dist_sq(*q))
                .fold(T::infinity(), T::min);
            (v2 - nearest).max(T::zero())
        })
        .collect()
}

/// Evaluates the objective of a candidate trajectory.
pub fn objective<T: Real>(
    states: &[State<T>],
    inputs: &[Vec2<T>],
    slacks: &[T],
    field: &RewardField<T>,
    cfg: &MpcConfig<T>,
) -> ObjectiveBreakdown<T> {
    let input_cost: T = inputs.iter().map(|u| cfg.input_cost.quad(*u)).sum();
    let reward_sum: T = states.iter().map(|x| field.eval_extended(x.pos).0).sum();
    let slack_sum: T = slacks.iter().copied().sum();
    ObjectiveBreakdown {
        total: cfg.c1 * input_cost - cfg.c2 * reward_sum + cfg.c3 * slack_sum,
        input_cost,
        reward_sum,
        slack_sum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{build_spline_field, GridMap};

    fn unit_domain() -> Rect<f64> {
        Rect::new(Vec2::zero(), Vec2::new(100.0, 100.0))
    }

    #[test]
    fn step_dynamics_examples() {
        let m = DynamicsModel::new(1.0);
        assert_eq!(step_dynamics(&State::new(0.0, 0.0, 1.0, 0.0), Vec2::zero(), &m), State::new(1.0, 0.0, 1.0, 0.0));
        assert_eq!(
            step_dynamics(&State::default(), Vec2::new(1.0, 0.0), &m),
            State::new(0.0, 0.0, 1.0, 0.0)
        );
        // hand multiply, dt = 0.1
        let m = DynamicsModel::new(0.1);
        let x = State::new(2.0, 3.0, -1.0, 4.0);
        let u = Vec2::new(0.5, -0.5);
        let (a, b) = (m.a(), m.b());
        let xa = x.to_array();
        let ua = [u.x, u.y];
        let mut expect = [0.0; 4];
        for r in 0..4 {
            expect[r] = (0..4).map(|c| a[r][c] * xa[c]).sum::<f64>() + (0..2).map(|c| b[r][c] * ua[c]).sum::<f64>();
        }
        assert_eq!(step_dynamics(&x, u, &m).to_array(), expect);
    }

    #[test]
    fn residual_examples() {
        let pts = vec![Vec2::new(1.0, 1.0); 4];
        let r = coverage_residuals(&pts, 2.0, &[0.0; 3]);
        assert_eq!(r.len(), 6);
        assert!(r.iter().all(|e| e.2 == -4.0));

        let r = coverage_residuals(&[Vec2::zero(), Vec2::new(3.0, 4.0)], 5.0, &[0.0]);
        assert_eq!(r, vec![(1, 0, 0.0)]);
        assert_eq!(coverage_pair_count(50), 1275);
    }

    #[test]
    fn objective_examples() {
        let zero = build_spline_field(&GridMap::from_fn(100.0, 100.0, 25.0, |_| 0.0).unwrap()).unwrap();
        let cfg = MpcConfig::new(3, unit_domain());
        let states = vec![State::at_rest(Vec2::new(50.0, 50.0)); 4];
        let o = objective(&states, &[Vec2::zero(); 3], &[0.0; 3], &zero, &cfg);
        assert_eq!(o.total, 0.0);

        let mut c = MpcConfig::new(1, unit_domain());
        c.c2 = 0.0;
        c.c3 = 0.0;
        let o = objective(&states[..2], &[Vec2::new(3.0, 4.0)], &[0.0], &zero, &c);
        assert_eq!(o.total, 25.0);

        let one = build_spline_field(&GridMap::from_fn(100.0, 100.0, 25.0, |_| 1.0).unwrap()).unwrap();
        let cfg = MpcConfig::new(50, unit_domain());
        let states = vec![State::at_rest(Vec2::new(50.0, 50.0)); 51];
        let o = objective(&states, &[Vec2::zero(); 50], &[0.0; 50], &one, &cfg);
        assert!((o.total + 51000.0).abs() < 1e-9);
    }

    #[test]
    fn minimal_slacks_close_every_gap() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(10.0, 0.0)];
        let s = minimal_slacks(&pts, &[], 3.0);
        assert_eq!(s, vec![8.0, 0.0]);
        assert!(coverage_residuals(&pts, 3.0, &s).iter().all(|r| r.2 >= 0.0));
        let s = minimal_slacks(&pts, &[Vec2::new(10.0, 1.0)], 3.0);
        assert_eq!(s, vec![8.0, 8.0]);
    }

    #[test]
    fn config_validation() {
        let mut c = MpcConfig::<f64>::new(5, unit_domain());
        assert!(c.validate().is_ok());
        c.visibility = 0.0;
        assert!(c.validate().is_err());
        let mut c = MpcConfig::<f64>::new(0, unit_domain());
        assert!(c.validate().is_err());
        c.horizon = 2;
        c.input_cost = Sym2::new(1.0, 2.0, 1.0);
        assert!(c.validate().is_err());
    }
}
