use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::reward::RewardField;
use crate::scalar::{lit, Real};
use crate::warmstart::GuessTrajectory;

use super::lbfgs::{minimize, LbfgsOptions};
use super::penalty::{condense, FullGradient};
use super::{minimal_slacks, objective, MpcConfig, PenalizedObjective, SolveStatus, State, Trajectory};

/// Where the solver starts.
#[derive(Debug, Clone)]
pub enum InitialGuess<'a, T> {
    /// Zero inputs: the agent coasts (stays put when starting at rest).
    Cold,
    /// Inputs fitted so the simulated positions follow the guess states.
    Track(&'a GuessTrajectory<T>),
    /// Explicit inputs, e.g. a shifted previous solution.
    Inputs(Vec<Vec2<T>>),
}

/// Solves the open-loop problem from `x0`.
///
/// `None` is the naive cold start. A guess is turned into initial inputs by a
/// bounded least-squares fit of the simulated positions to the guess states.
pub fn solve_ocp<T: Real>(
    field: &RewardField<T>,
    x0: &State<T>,
    cfg: &MpcConfig<T>,
    guess: Option<&GuessTrajectory<T>>,
) -> Result<Trajectory<T>> {
    let init = match guess {
        Some(g) => InitialGuess::Track(g),
        None => InitialGuess::Cold,
    };
    solve_ocp_from(field, x0, cfg, init, &[])
}

/// Fits inputs whose rollout tracks the guess positions (steps 2..=N).
///
/// Once the guess comes to rest at the end of its tour the fit stops: later
/// inputs start at zero, so the agent coasts on instead of braking into a
/// cluster of coincident positions that the coverage constraints forbid.
fn track_guess<T: Real>(x0: &State<T>, cfg: &MpcConfig<T>, guess: &GuessTrajectory<T>) -> Vec<Vec2<T>> {
    let n = cfg.horizon;
    let model = cfg.dynamics;
    let targets: Vec<Vec2<T>> = (0..=n)
        .map(|k| guess.states.get(k).or(guess.states.last()).map_or(x0.pos, |s| s.pos))
        .collect();
    let tracked = (1..=n).rev().find(|&k| targets[k] != targets[k - 1]).unwrap_or(0);
    let norm = T::one() / (cfg.v_max * cfg.dt()).powi(2);
    let f = |z: &[T], g: &mut [T]| {
        let inputs: Vec<Vec2<T>> = z.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
        let states = model.rollout(x0, &inputs);
        let mut full = FullGradient {
            positions: vec![Vec2::zero(); n + 1],
            velocities: vec![Vec2::zero(); n + 1],
            inputs: vec![Vec2::zero(); n],
            slacks: vec![],
        };
        let mut v = T::zero();
        for k in 2..=tracked {
            let d = states[k].pos - targets[k];
            v = v + d.norm_sq() * norm;
            full.positions[k] = d * (lit::<T>(2.0) * norm);
        }
        for (k, du) in condense(&model, &full).into_iter().enumerate() {
            g[2 * k] = du.x;
            g[2 * k + 1] = du.y;
        }
        v
    };
    let mut z: Vec<T> = guess
        .inputs
        .iter()
        .take(tracked.saturating_sub(1))
        .chain(std::iter::repeat(&Vec2::zero()))
        .take(n)
        .flat_map(|u| [u.x, u.y])
        .collect();
    let lo = vec![-cfg.u_max; 2 * n];
    let hi = vec![cfg.u_max; 2 * n];
    minimize(
        f,
        &mut z,
        &lo,
        &hi,
        &LbfgsOptions {
            memory: cfg.solver.memory,
            max_iter: 200,
            tol: lit(1e-8),
        },
    );
    z.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

/// Largest `w ∈ [0, top]` whose full-braking run `dt·Σ_j max(0, w − j·a)`
/// stays within `room`; `a` is the speed shed per step.
fn max_viable_speed<T: Real>(room: T, dt: T, a: T, top: T) -> T {
    let run = |w: T| {
        let mut total = T::zero();
        let mut v = w;
        while v > T::zero() {
            total = total + v * dt;
            v = v - a;
        }
        total
    };
    if room <= T::zero() {
        return T::zero();
    }
    if run(top) <= room {
        return top;
    }
    let (mut lo, mut hi) = (T::zero(), top);
    for _ in 0..60 {
        let mid = (lo + hi) * lit(0.5);
        if run(mid) <= room {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Adjusts inputs, front to back, only where needed so every velocity stays
/// within `±v_max` and every controllable position (states 2..=N) stays in the
/// domain, without leaving `±u_max`.
///
/// The position check looks past the next step: the state after each input
/// must still be able to brake to rest inside the domain at full deceleration.
/// When that is impossible the input brakes as hard as allowed.
pub fn repair_inputs<T: Real>(x0: &State<T>, inputs: &[Vec2<T>], cfg: &MpcConfig<T>) -> Vec<Vec2<T>> {
    let dt = cfg.dt();
    let n = inputs.len();
    let shed = cfg.u_max * dt;
    let top = cfg.v_max + shed;
    let mut out = Vec::with_capacity(n);
    let mut x = *x0;
    for (k, u) in inputs.iter().enumerate() {
        let axis = |u: T, p: T, v: T, lo_p: T, hi_p: T| -> T {
            let mut lo = -cfg.u_max;
            let mut hi = cfg.u_max;
            let vlo = (-cfg.v_max - v) / dt;
            let vhi = (cfg.v_max - v) / dt;
            if vlo.max(lo) <= vhi.min(hi) {
                lo = lo.max(vlo);
                hi = hi.min(vhi);
            }
            if k + 2 <= n {
                let next = p + dt * v;
                let up = max_viable_speed(hi_p - next, dt, shed, top);
                let down = max_viable_speed(next - lo_p, dt, shed, top);
                let plo = (-down - v) / dt;
                let phi = (up - v) / dt;
                if plo.max(lo) <= phi.min(hi) {
                    lo = lo.max(plo);
                    hi = hi.min(phi);
                } else if phi < lo {
                    hi = lo;
                } else if plo > hi {
                    lo = hi;
                }
            }
            u.max(lo).min(hi)
        };
        let d = cfg.domain;
        let fixed = Vec2::new(
            axis(u.x, x.pos.x, x.vel.x, d.min.x, d.max.x),
            axis(u.y, x.pos.y, x.vel.y, d.min.y, d.max.y),
        );
        x = cfg.dynamics.step(&x, fixed);
        out.push(fixed);
    }
    out
}

/// Full solver entry point; `history` lists earlier executed positions that
/// join the coverage constraints as fixed points.
pub fn solve_ocp_from<T: Real>(
    field: &RewardField<T>,
    x0: &State<T>,
    cfg: &MpcConfig<T>,
    guess: InitialGuess<'_, T>,
    history: &[Vec2<T>],
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if !cfg.admissible(x0, lit(1e-9)) {
        return Err(Error::InfeasibleStart);
    }
    let n = cfg.horizon;
    let model = cfg.dynamics;
    let v2 = cfg.visibility * cfg.visibility;

    let inputs: Vec<Vec2<T>> = match guess {
        InitialGuess::Cold => vec![Vec2::zero(); n],
        InitialGuess::Track(g) => track_guess(x0, cfg, g),
        InitialGuess::Inputs(u) => u.into_iter().chain(std::iter::repeat(Vec2::zero())).take(n).collect(),
    };
    let start_states = model.rollout(x0, &inputs);
    let start_positions: Vec<Vec2<T>> = start_states.iter().map(|s| s.pos).collect();
    let slacks = minimal_slacks(&start_positions, history, cfg.visibility);

    // z = [u_0x, u_0y, …, u_{N-1}y, ε_1/V², …, ε_N/V²]
    let mut z: Vec<T> = inputs.iter().flat_map(|u| [u.x, u.y]).chain(slacks.iter().map(|e| *e / v2)).collect();
    let mut lo = vec![-cfg.u_max; 2 * n];
    lo.extend(std::iter::repeat(T::zero()).take(n));
    let mut hi = vec![cfg.u_max; 2 * n];
    hi.extend(std::iter::repeat(T::infinity()).take(n));

    let unpack = |z: &[T]| -> (Vec<Vec2<T>>, Vec<T>) {
        let u = z[..2 * n].chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
        let e = z[2 * n..].iter().map(|s| *s * v2).collect();
        (u, e)
    };

    let mut merit = PenalizedObjective::new(field, cfg, *x0, history);
    let opts = cfg.solver;
    let mut total = 0;
    let mut outer = 0;
    let mut prev_violation = T::infinity();
    let mut violation;
    let mut status = SolveStatus::MaxIterations;
    loop {
        outer += 1;
        let tol = opts.kkt_tol.max(lit::<T>(1e-2) * lit::<T>(0.2).powi(outer as i32 - 1));
        let budget = opts.max_inner.min(opts.max_iter.saturating_sub(total)).max(1);
        let outcome = {
            let merit = &merit;
            let f = |z: &[T], g: &mut [T]| {
                let (u, e) = unpack(z);
                let (v, du, de) = merit.evaluate(&u, &e);
                for (k, d) in du.iter().enumerate() {
                    g[2 * k] = d.x;
                    g[2 * k + 1] = d.y;
                }
                for (i, d) in de.iter().enumerate() {
                    g[2 * n + i] = *d * v2;
                }
                v
            };
            minimize(
                f,
                &mut z,
                &lo,
                &hi,
                &LbfgsOptions {
                    memory: opts.memory,
                    max_iter: budget,
                    tol,
                },
            )
        };
        total += outcome.iterations;
        let (u, e) = unpack(&z);
        let states = model.rollout(x0, &u);
        violation = merit.violation(&states, &e);
        if violation <= opts.feas_tol && outcome.pg_norm <= opts.kkt_tol {
            status = SolveStatus::Converged;
            break;
        }
        if total >= opts.max_iter || outer >= opts.max_outer {
            break;
        }
        merit.update_multipliers(&states, &e);
        if violation > lit::<T>(0.25) * prev_violation {
            let rho = merit.penalty() * opts.penalty_growth;
            merit.set_penalty(rho);
        }
        prev_violation = violation;
    }

    let (u, _) = unpack(&z);
    let inputs = repair_inputs(x0, &u, cfg);
    let states = model.rollout(x0, &inputs);
    let positions: Vec<Vec2<T>> = states.iter().map(|s| s.pos).collect();
    let slacks = minimal_slacks(&positions, history, cfg.visibility);
    let objective = objective(&states, &inputs, &slacks, field, cfg);
    Ok(Trajectory {
        states,
        inputs,
        slacks,
        objective,
        status,
        iterations: total,
        outer_iterations: outer,
        violation,
    })
}
