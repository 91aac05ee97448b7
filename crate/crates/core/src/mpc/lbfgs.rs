//! Projected limited-memory BFGS for bound-constrained minimization.
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the iteration; the two-loop recursion acts on the rest. Steps are
//! projected back onto the box and accepted under an Armijo condition along
//! the projection arc, so accepted iterates never increase the objective.

use std::collections::VecDeque;

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions<T> {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected-gradient ∞-norm falls below this.
    pub tol: T,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome<T> {
    pub iterations: usize,
    pub value: T,
    pub pg_norm: T,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub values: Vec<T>,
}

fn project<T: Real>(x: &mut [T], lo: &[T], hi: &[T]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lo[i]).min(hi[i]);
    }
}

fn projected_gradient_norm<T: Real>(x: &[T], g: &[T], lo: &[T], hi: &[T]) -> T {
    let mut m = T::zero();
    for i in 0..x.len() {
        let p = (x[i] - g[i]).max(lo[i]).min(hi[i]);
        m = m.max((p - x[i]).abs());
    }
    m
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x`, which is
/// projected first and holds the final iterate on return. `f` writes the
/// gradient into its second argument and returns the value.
pub fn minimize<T: Real>(
    mut f: impl FnMut(&[T], &mut [T]) -> T,
    x: &mut [T],
    lo: &[T],
    hi: &[T],
    opts: &LbfgsOptions<T>,
) -> LbfgsOutcome<T> {
    let n = x.len();
    project(x, lo, hi);
    let mut g = vec![T::zero(); n];
    let mut fx = f(x, &mut g);
    let mut values = vec![fx];
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(opts.memory);
    let armijo = lit::<T>(1e-4);
    let half = lit::<T>(0.5);

    let mut d = vec![T::zero(); n];
    let mut x_new = vec![T::zero(); n];
    let mut g_new = vec![T::zero(); n];
    let mut free = vec![true; n];
    let mut iterations = 0;
    let mut pg = projected_gradient_norm(x, &g, lo, hi);
    let mut stalls = 0;

    while iterations < opts.max_iter && pg > opts.tol {
        iterations += 1;
        for i in 0..n {
            let at_lo = x[i] <= lo[i] && g[i] > T::zero();
            let at_hi = x[i] >= hi[i] && g[i] < T::zero();
            free[i] = !(at_lo || at_hi);
        }
        // Two-loop recursion on the free subspace.
        for i in 0..n {
            d[i] = if free[i] { g[i] } else { T::zero() };
        }
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = *rho * dot(s, &d);
            for i in 0..n {
                if free[i] {
                    d[i] = d[i] - a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in d.iter_mut() {
                *v = *v * gamma;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * dot(y, &d);
            for i in 0..n {
                if free[i] {
                    d[i] = d[i] + s[i] * (a - b);
                }
            }
        }
        for v in d.iter_mut() {
            *v = -*v;
        }
        let mut slope = dot(&d, &g);
        if !(slope < T::zero()) {
            history.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { T::zero() };
            }
            slope = dot(&d, &g);
        }
        let mut step = if history.is_empty() {
            // First step: move at most one unit per coordinate.
            let dmax = d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if dmax > T::one() {
                T::one() / dmax
            } else {
                T::one()
            }
        } else {
            T::one()
        };

        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            project(&mut x_new, lo, hi);
            let moved: T = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + armijo * moved {
                accepted = true;
                let s: Vec<T> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<T> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > lit::<T>(1e-12) * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > T::zero() {
                    if history.len() == opts.memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, T::one() / sy));
                }
                let decrease = fx - f_new;
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                fx = f_new;
                values.push(fx);
                if decrease <= lit::<T>(1e-14) * fx.abs().max(T::one()) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            step = step * half;
        }
        pg = projected_gradient_norm(x, &g, lo, hi);
        if !accepted {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        }
        if stalls >= 5 {
            break;
        }
    }
    LbfgsOutcome {
        iterations,
        value: fx,
        pg_norm: pg,
        converged: pg <= opts.tol,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_unconstrained() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let mut x = vec![-1.2, 1.0];
        let inf = f64::INFINITY;
        let out = minimize(
            f,
            &mut x,
            &[-inf, -inf],
            &[inf, inf],
            &LbfgsOptions {
                memory: 8,
                max_iter: 500,
                tol: 1e-9,
            },
        );
        assert!(out.converged, "{out:?}");
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
        assert!(out.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bound_active_quadratic() {
        // min (x-3)² + (y+2)², 0 ≤ x ≤ 1, y ≥ 0 → (1, 0)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 2.0);
            (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2)
        };
        let mut x = vec![0.5, 5.0];
        let out = minimize(
            f,
            &mut x,
            &[0.0, 0.0],
            &[1.0, f64::INFINITY],
            &LbfgsOptions {
                memory: 5,
                max_iter: 100,
                tol: 1e-10,
            },
        );
        assert!(out.converged);
        assert_eq!(x, vec![1.0, 0.0]);
    }
}
