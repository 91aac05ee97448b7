//! Two-dimensional vectors and symmetric matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

/// A point or direction in the plane (meters, x east / y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Self) -> T {
        (self - o).norm_sq()
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        self.x = self.x + o.x;
        self.y = self.y + o.y;
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, o: Self) {
        self.x = self.x - o.x;
        self.y = self.y - o.y;
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Real> Sym2<T> {
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), b)
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn det(&self) -> T {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: Vec2<T>) -> T {
        v.dot(self.apply(v))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    /// Outer product `v vᵀ`.
    pub fn outer(v: Vec2<T>) -> Self {
        Self::new(v.x * v.x, v.x * v.y, v.y * v.y)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > T::zero() && self.det() > T::zero() && self.xx.is_finite() && self.yy.is_finite()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (T, T) {
        let half = lit::<T>(0.5);
        let mean = (self.xx + self.yy) * half;
        let r = ((self.xx - self.yy) * half).hypot(self.xy);
        (mean - r, mean + r)
    }

    /// Eigen-decomposition `(λ_min, λ_max, unit eigenvector of λ_max)`.
    pub fn eigen(&self) -> (T, T, Vec2<T>) {
        let (lo, hi) = self.eigenvalues();
        let v = if self.xy != T::zero() {
            Vec2::new(hi - self.yy, self.xy)
        } else if self.xx >= self.yy {
            Vec2::new(T::one(), T::zero())
        } else {
            Vec2::new(T::zero(), T::one())
        };
        let n = v.norm();
        (lo, hi, v * (T::one() / n))
    }

    /// Raises every eigenvalue below `floor` to `floor`, keeping eigenvectors.
    pub fn with_eigen_floor(&self, floor: T) -> Self {
        let (lo, hi, v) = self.eigen();
        if lo >= floor {
            return *self;
        }
        let lo = lo.max(floor);
        let hi = hi.max(floor);
        // M = lo·I + (hi − lo)·v vᵀ
        Self::identity().scale(lo).add(&Self::outer(v).scale(hi - lo))
    }
}
