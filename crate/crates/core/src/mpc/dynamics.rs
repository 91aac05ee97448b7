use crate::geom::Vec2;
use crate::scalar::Real;

/// Double-integrator state `(p_x, p_y, v_x, v_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State<T> {
    pub pos: Vec2<T>,
    pub vel: Vec2<T>,
}

impl<T: Real> State<T> {
    pub fn new(px: T, py: T, vx: T, vy: T) -> Self {
        Self {
            pos: Vec2::new(px, py),
            vel: Vec2::new(vx, vy),
        }
    }

    pub fn at_rest(pos: Vec2<T>) -> Self {
        Self { pos, vel: Vec2::zero() }
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.pos.x, self.pos.y, self.vel.x, self.vel.y]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// `x_{k+1} = A x_k + B u_k` with
///
/// ```text
///     | 1 0 dt  0 |        |  0  0 |
/// A = | 0 1  0 dt |    B = |  0  0 |
///     | 0 0  1  0 |        | dt  0 |
///     | 0 0  0  1 |        |  0 dt |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsModel<T> {
    pub dt: T,
}

impl<T: Real> DynamicsModel<T> {
    pub fn new(dt: T) -> Self {
        Self { dt }
    }

    pub fn a(&self) -> [[T; 4]; 4] {
        let (o, z, dt) = (T::one(), T::zero(), self.dt);
        [[o, z, dt, z], [z, o, z, dt], [z, z, o, z], [z, z, z, o]]
    }

    pub fn b(&self) -> [[T; 2]; 4] {
        let (z, dt) = (T::zero(), self.dt);
        [[z, z], [z, z], [dt, z], [z, dt]]
    }

    pub fn step(&self, x: &State<T>, u: Vec2<T>) -> State<T> {
        State {
            pos: x.pos + x.vel * self.dt,
            vel: x.vel + u * self.dt,
        }
    }

    /// Forward simulation; returns `inputs.len() + 1` states.
    pub fn rollout(&self, x0: &State<T>, inputs: &[Vec2<T>]) -> Vec<State<T>> {
        let mut out = Vec::with_capacity(inputs.len() + 1);
        out.push(*x0);
        for u in inputs {
            let next = self.step(out.last().unwrap(), *u);
            out.push(next);
        }
        out
    }
}

/// `A x + B u`.
pub fn step_dynamics<T: Real>(x: &State<T>, u: Vec2<T>, model: &DynamicsModel<T>) -> State<T> {
    model.step(x, u)
}
