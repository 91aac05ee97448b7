//! Reward fields `r: ℝ² → ℝ≥0` over a rectangular domain.
//!
//! A field is either a bicubic spline through a [`GridMap`] or an analytic
//! Gaussian sum. Both are immutable once built and can be shared across
//! threads for read-only evaluation.

mod grid;
mod spline;

pub use grid::{grid_mass_points, GridMap};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian2;
use crate::geom::{Sym2, Vec2};
use crate::scalar::{from_usize, lit, to_f64, Real};

use spline::BicubicSpline;

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Vec2<T>, max: Vec2<T>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> T {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Vec2<T> {
        (self.min + self.max) * lit::<T>(0.5)
    }

    pub fn clamp(&self, p: Vec2<T>) -> Vec2<T> {
        Vec2::new(p.x.max(self.min.x).min(self.max.x), p.y.max(self.min.y).min(self.max.y))
    }
}

/// One weighted Gaussian term of an analytic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedGaussian<T> {
    pub weight: T,
    pub mean: Vec2<T>,
    pub cov: Sym2<T>,
}

#[derive(Debug, Clone)]
enum Evaluator<T> {
    Spline(BicubicSpline<T>),
    Gaussian(Vec<(T, Gaussian2<T>)>),
}

/// Reward function over a rectangular domain, with analytic gradient.
#[derive(Debug, Clone)]
pub struct RewardField<T> {
    domain: Rect<T>,
    evaluator: Evaluator<T>,
    total_mass: T,
}

/// Negative spline values down to this magnitude count as numerically zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Interpolating bicubic spline with natural boundary conditions.
pub fn build_spline_field<T: Real>(map: &GridMap<T>) -> Result<RewardField<T>> {
    if map.nx() < 4 || map.ny() < 4 {
        return Err(Error::MapTooSmall {
            nx: map.nx(),
            ny: map.ny(),
        });
    }
    let mut field = RewardField {
        domain: map.domain(),
        evaluator: Evaluator::Spline(BicubicSpline::new(map)),
        total_mass: T::zero(),
    };
    // Midpoint rule on a 4x refined grid, in units of cell mass.
    let refine = 4;
    let sub = map.cell_size_m() / from_usize::<T>(refine);
    let half = lit::<T>(0.5);
    let mut mass = T::zero();
    for j in 0..map.ny() * refine {
        for i in 0..map.nx() * refine {
            let p = Vec2::new((from_usize::<T>(i) + half) * sub, (from_usize::<T>(j) + half) * sub);
            mass = mass + field.eval_extended(p).0;
        }
    }
    field.total_mass = mass / from_usize::<T>(refine * refine);
    Ok(field)
}

/// `r(p) = Σ w_k N(p; μ_k, Σ_k)` restricted to `domain`.
pub fn build_gaussian_field<T: Real>(components: &[WeightedGaussian<T>], domain: Rect<T>) -> Result<RewardField<T>> {
    let mut terms = Vec::with_capacity(components.len());
    for (k, c) in components.iter().enumerate() {
        if !(c.weight > T::zero() && c.weight.is_finite()) {
            return Err(Error::NonPositiveWeight(k));
        }
        let g = Gaussian2::new(c.mean, c.cov).ok_or(Error::NotPositiveDefinite(k))?;
        terms.push((c.weight, g));
    }
    let total_mass = terms.iter().map(|(w, _)| *w).sum();
    Ok(RewardField {
        domain,
        evaluator: Evaluator::Gaussian(terms),
        total_mass,
    })
}

impl<T: Real> RewardField<T> {
    pub fn domain(&self) -> Rect<T> {
        self.domain
    }

    /// Grid-backed fields: integral over the domain divided by the cell area,
    /// directly comparable with the grid's cell-mass sum. Gaussian fields: Σ w_k.
    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn is_spline(&self) -> bool {
        matches!(self.evaluator, Evaluator::Spline(_))
    }

    /// Value and gradient at `p`; errors if `p` lies outside the domain.
    pub fn eval(&self, p: Vec2<T>) -> Result<(T, Vec2<T>)> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain {
                x: to_f64(p.x),
                y: to_f64(p.y),
            });
        }
        Ok(self.eval_extended(p))
    }

    pub fn value(&self, p: Vec2<T>) -> Result<T> {
        self.eval(p).map(|e| e.0)
    }

    /// Evaluates the smooth extension of the field without a domain check.
    ///
    /// Spline fields continue linearly past the outermost knots and Gaussian
    /// sums are defined everywhere, so optimizers may probe slightly outside
    /// the domain while their box constraints are still being enforced.
    /// Negative spline values are clamped to zero with a zero gradient.
    pub fn eval_extended(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        match &self.evaluator {
            Evaluator::Spline(s) => {
                let e = s.eval(p);
                if e.value < T::zero() {
                    (T::zero(), Vec2::zero())
                } else {
                    (e.value, e.grad)
                }
            }
            Evaluator::Gaussian(terms) => {
                let mut v = T::zero();
                let mut g = Vec2::zero();
                for (w, n) in terms {
                    let (pv, pg) = n.pdf_grad(p);
                    v = v + *w * pv;
                    g += pg * *w;
                }
                (v, g)
            }
        }
    }

    /// Spline value before clamping; equals [`Self::eval_extended`] for Gaussian fields.
    pub fn eval_raw(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        match &self.evaluator {
            Evaluator::Spline(s) => {
                let e = s.eval(p);
                (e.value, e.grad)
            }
            Evaluator::Gaussian(_) => self.eval_extended(p),
        }
    }
}
