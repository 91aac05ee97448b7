//! Augmented-Lagrangian merit function of the condensed problem.
//!
//! Inequalities are written `c(z) ≥ 0` and normalized: coverage constraints
//! by `V²`, velocity bounds by `v_max`, position bounds by the larger domain
//! side. Each contributes the Powell–Hestenes–Rockafellar term
//!
//! ```text
//! ψ(c, λ, ρ) = −λc + ρc²/2   if λ − ρc > 0
//!            = −λ²/(2ρ)      otherwise
//! ```
//!
//! The objective itself is divided by a fixed scale so that penalties and
//! objective live on comparable magnitudes.

use crate::geom::Vec2;
use crate::reward::RewardField;
use crate::scalar::{lit, Real};

use super::{DynamicsModel, MpcConfig, State};

/// Gradient of the merit with respect to unconstrained (uncondensed) variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGradient<T> {
    pub positions: Vec<Vec2<T>>,
    pub velocities: Vec<Vec2<T>>,
    pub inputs: Vec<Vec2<T>>,
    /// With respect to `ε_1..ε_N` in m².
    pub slacks: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct PenalizedObjective<'a, T> {
    field: &'a RewardField<T>,
    cfg: &'a MpcConfig<T>,
    x0: State<T>,
    history: Vec<Vec2<T>>,
    multipliers: Vec<T>,
    penalty: T,
    scale: T,
}

#[inline]
fn phr<T: Real>(c: T, lambda: T, rho: T) -> (T, T) {
    let shifted = lambda - rho * c;
    if shifted > T::zero() {
        (-lambda * c + rho * c * c * lit(0.5), -shifted)
    } else {
        (-lambda * lambda / (rho * lit(2.0)), T::zero())
    }
}

impl<'a, T: Real> PenalizedObjective<'a, T> {
    /// `history` holds earlier executed positions that the horizon must also keep clear of.
    pub fn new(field: &'a RewardField<T>, cfg: &'a MpcConfig<T>, x0: State<T>, history: &[Vec2<T>]) -> Self {
        let v2 = cfg.visibility * cfg.visibility;
        let input_scale = cfg.c1 * cfg.input_cost.eigenvalues().1 * cfg.u_max * cfg.u_max;
        let scale = (cfg.c3 * v2).max(input_scale).max(T::one());
        let mut s = Self {
            field,
            cfg,
            x0,
            history: history.to_vec(),
            multipliers: Vec::new(),
            penalty: cfg.solver.initial_penalty,
            scale,
        };
        s.multipliers = vec![T::zero(); s.constraint_count()];
        s
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    pub fn x0(&self) -> State<T> {
        self.x0
    }

    pub fn history(&self) -> &[Vec2<T>] {
        &self.history
    }

    pub fn objective_scale(&self) -> T {
        self.scale
    }

    pub fn penalty(&self) -> T {
        self.penalty
    }

    pub fn set_penalty(&mut self, rho: T) {
        self.penalty = rho;
    }

    pub fn multipliers(&self) -> &[T] {
        &self.multipliers
    }

    pub fn set_multipliers(&mut self, lambda: Vec<T>) {
        assert_eq!(lambda.len(), self.constraint_count());
        self.multipliers = lambda;
    }

    /// Coverage pairs, history pairs, then 4 velocity bounds per state 1..=N
    /// and 4 position bounds per state 2..=N.
    pub fn constraint_count(&self) -> usize {
        let n = self.cfg.horizon;
        n * (n + 1) / 2 + n * self.history.len() + 4 * n + 4 * n.saturating_sub(1)
    }

    fn side(&self) -> T {
        self.cfg.domain.width().max(self.cfg.domain.height())
    }

    /// Normalized constraint values `c ≥ 0`, in [`Self::constraint_count`] order.
    pub fn constraint_values(&self, states: &[State<T>], slacks: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.constraint_count());
        self.for_each_constraint(states, slacks, |c, _| out.push(c));
        out
    }

    /// Largest normalized violation `max(0, −c)`.
    pub fn violation(&self, states: &[State<T>], slacks: &[T]) -> T {
        let mut v = T::zero();
        self.for_each_constraint(states, slacks, |c, _| v = v.max(-c));
        v
    }

    /// Calls `f(c, derivative)` for each constraint; the derivative is described
    /// by [`ConstraintGrad`] so callers can scatter it without allocation.
    fn for_each_constraint(&self, states: &[State<T>], slacks: &[T], mut f: impl FnMut(T, ConstraintGrad<T>)) {
        let cfg = self.cfg;
        let n = cfg.horizon;
        let v2 = cfg.visibility * cfg.visibility;
        let inv_v2 = T::one() / v2;
        for i in 1..=n {
            let pi = states[i].pos;
            for j in 0..i {
                let d = pi - states[j].pos;
                let c = (d.norm_sq() - v2 + slacks[i - 1]) * inv_v2;
                f(c, ConstraintGrad::Pair { i, j: Some(j), dir: d * (lit::<T>(2.0) * inv_v2), ds: inv_v2 });
            }
            for q in &self.history {
                let d = pi - *q;
                let c = (d.norm_sq() - v2 + slacks[i - 1]) * inv_v2;
                f(c, ConstraintGrad::Pair { i, j: None, dir: d * (lit::<T>(2.0) * inv_v2), ds: inv_v2 });
            }
        }
        let iv = T::one() / cfg.v_max;
        for k in 1..=n {
            let v = states[k].vel;
            f((cfg.v_max - v.x) * iv, ConstraintGrad::Vel { k, d: Vec2::new(-iv, T::zero()) });
            f((v.x + cfg.v_max) * iv, ConstraintGrad::Vel { k, d: Vec2::new(iv, T::zero()) });
            f((cfg.v_max - v.y) * iv, ConstraintGrad::Vel { k, d: Vec2::new(T::zero(), -iv) });
            f((v.y + cfg.v_max) * iv, ConstraintGrad::Vel { k, d: Vec2::new(T::zero(), iv) });
        }
        let ip = T::one() / self.side();
        let dom = cfg.domain;
        for k in 2..=n {
            let p = states[k].pos;
            f((p.x - dom.min.x) * ip, ConstraintGrad::Pos { k, d: Vec2::new(ip, T::zero()) });
            f((dom.max.x - p.x) * ip, ConstraintGrad::Pos { k, d: Vec2::new(-ip, T::zero()) });
            f((p.y - dom.min.y) * ip, ConstraintGrad::Pos { k, d: Vec2::new(T::zero(), ip) });
            f((dom.max.y - p.y) * ip, ConstraintGrad::Pos { k, d: Vec2::new(T::zero(), -ip) });
        }
    }

    /// Merit and gradient with every decision variable treated as independent.
    pub fn evaluate_full(&self, states: &[State<T>], inputs: &[Vec2<T>], slacks: &[T]) -> (T, FullGradient<T>) {
        let cfg = self.cfg;
        let n = cfg.horizon;
        assert_eq!(states.len(), n + 1);
        assert_eq!(inputs.len(), n);
        assert_eq!(slacks.len(), n);
        let inv_scale = T::one() / self.scale;
        let two = lit::<T>(2.0);

        let mut grad = FullGradient {
            positions: vec![Vec2::zero(); n + 1],
            velocities: vec![Vec2::zero(); n + 1],
            inputs: vec![Vec2::zero(); n],
            slacks: vec![cfg.c3 * inv_scale; n],
        };
        let mut value = T::zero();
        for (k, u) in inputs.iter().enumerate() {
            value = value + cfg.c1 * cfg.input_cost.quad(*u) * inv_scale;
            grad.inputs[k] = cfg.input_cost.apply(*u) * (two * cfg.c1 * inv_scale);
        }
        for (k, x) in states.iter().enumerate() {
            let (r, g) = self.field.eval_extended(x.pos);
            value = value - cfg.c2 * r * inv_scale;
            grad.positions[k] = g * (-cfg.c2 * inv_scale);
        }
        value = value + cfg.c3 * slacks.iter().copied().sum::<T>() * inv_scale;

        let rho = self.penalty;
        let mut idx = 0;
        self.for_each_constraint(states, slacks, |c, cg| {
            let (psi, dpsi) = phr(c, self.multipliers[idx], rho);
            idx += 1;
            value = value + psi;
            if dpsi == T::zero() {
                return;
            }
            match cg {
                ConstraintGrad::Pair { i, j, dir, ds } => {
                    grad.positions[i] += dir * dpsi;
                    if let Some(j) = j {
                        grad.positions[j] -= dir * dpsi;
                    }
                    grad.slacks[i - 1] = grad.slacks[i - 1] + ds * dpsi;
                }
                ConstraintGrad::Vel { k, d } => grad.velocities[k] += d * dpsi,
                ConstraintGrad::Pos { k, d } => grad.positions[k] += d * dpsi,
            }
        });
        (value, grad)
    }

    /// Merit as a function of inputs and slacks only (states by forward
    /// simulation from `x0`), with its gradient via the adjoint recursion.
    pub fn evaluate(&self, inputs: &[Vec2<T>], slacks: &[T]) -> (T, Vec<Vec2<T>>, Vec<T>) {
        let model = self.cfg.dynamics;
        let states = model.rollout(&self.x0, inputs);
        let (value, full) = self.evaluate_full(&states, inputs, slacks);
        (value, condense(&model, &full), full.slacks)
    }

    /// Multiplier update `λ ← max(0, λ − ρc)`.
    pub fn update_multipliers(&mut self, states: &[State<T>], slacks: &[T]) {
        let c = self.constraint_values(states, slacks);
        for (l, c) in self.multipliers.iter_mut().zip(c) {
            *l = (*l - self.penalty * c).max(T::zero());
        }
    }
}

/// Chain rule through `x_{k+1} = A x_k + B u_k`.
pub(crate) fn condense<T: Real>(model: &DynamicsModel<T>, full: &FullGradient<T>) -> Vec<Vec2<T>> {
    let n = full.inputs.len();
    let dt = model.dt;
    let mut du = full.inputs.clone();
    let mut adj_p = full.positions[n];
    let mut adj_v = full.velocities[n];
    for k in (0..n).rev() {
        du[k] += adj_v * dt;
        let next_p = adj_p;
        adj_p = full.positions[k] + next_p;
        adj_v = full.velocities[k] + next_p * dt + adj_v;
    }
    du
}

#[derive(Debug, Clone, Copy)]
enum ConstraintGrad<T> {
    /// Coverage pair between state `i` and state `j` (or a fixed history point).
    Pair { i: usize, j: Option<usize>, dir: Vec2<T>, ds: T },
    Vel { k: usize, d: Vec2<T> },
    Pos { k: usize, d: Vec2<T> },
}
