use std::time::{Duration, Instant};

use crate::error::Result;
use crate::geom::Vec2;
use crate::reward::RewardField;
use crate::scalar::Real;
use crate::warmstart::GuessTrajectory;

use super::solve::{solve_ocp_from, InitialGuess};
use super::{MpcConfig, SolveStatus, State, Trajectory};

/// How the first receding-horizon solve is initialized. Later solves always
/// start from the previous solution shifted by one step.
#[derive(Debug, Clone, Copy)]
pub enum WarmstartPolicy<'a, T> {
    Cold,
    Guess(&'a GuessTrajectory<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats<T> {
    pub iterations: usize,
    pub outer_iterations: usize,
    pub solve_time: Duration,
    pub objective: T,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopResult<T> {
    /// Executed states `x_0 ..= x_steps`.
    pub states: Vec<State<T>>,
    /// Applied inputs.
    pub inputs: Vec<Vec2<T>>,
    /// Slack of each executed state (the first slack of the solve that produced it).
    pub slacks: Vec<T>,
    pub stats: Vec<StepStats<T>>,
    /// Open-loop plan of the first solve.
    pub first_plan: Trajectory<T>,
}

impl<T: Real> ClosedLoopResult<T> {
    pub fn positions(&self) -> Vec<Vec2<T>> {
        self.states.iter().map(|s| s.pos).collect()
    }

    pub fn total_solve_time(&self) -> Duration {
        self.stats.iter().map(|s| s.solve_time).sum()
    }
}

/// Receding-horizon loop: solve, apply `u_0`, advance, shift.
///
/// Positions already executed stay in every later coverage-constraint set,
/// so a reward collected once cannot be collected again after a re-solve.
pub fn closed_loop<T: Real>(
    field: &RewardField<T>,
    x0: &State<T>,
    cfg: &MpcConfig<T>,
    steps: usize,
    policy: WarmstartPolicy<'_, T>,
) -> Result<ClosedLoopResult<T>> {
    let mut states = vec![*x0];
    let mut inputs = Vec::with_capacity(steps);
    let mut slacks = Vec::with_capacity(steps);
    let mut stats = Vec::with_capacity(steps);
    let mut first_plan = None;
    let mut next_guess: Option<Vec<Vec2<T>>> = None;

    for _ in 0..steps.max(1) {
        let current = *states.last().unwrap();
        let history: Vec<Vec2<T>> = states[..states.len() - 1].iter().map(|s| s.pos).collect();
        let init = match next_guess.take() {
            Some(u) => InitialGuess::Inputs(u),
            None => match policy {
                WarmstartPolicy::Cold => InitialGuess::Cold,
                WarmstartPolicy::Guess(g) => InitialGuess::Track(g),
            },
        };
        let started = Instant::now();
        let plan = solve_ocp_from(field, &current, cfg, init, &history)?;
        let solve_time = started.elapsed();

        let u0 = plan.inputs[0];
        states.push(cfg.dynamics.step(&current, u0));
        inputs.push(u0);
        slacks.push(plan.slacks[0]);
        stats.push(StepStats {
            iterations: plan.iterations,
            outer_iterations: plan.outer_iterations,
            solve_time,
            objective: plan.objective.total,
            status: plan.status,
        });
        let mut shifted: Vec<Vec2<T>> = plan.inputs[1..].to_vec();
        shifted.push(*plan.inputs.last().unwrap());
        next_guess = Some(shifted);
        if first_plan.is_none() {
            first_plan = Some(plan);
        }
    }
    Ok(ClosedLoopResult {
        states,
        inputs,
        slacks,
        stats,
        first_plan: first_plan.expect("at least one solve"),
    })
}
