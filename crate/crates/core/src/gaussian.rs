//! Bivariate normal density.

use crate::geom::{Sym2, Vec2};
use crate::scalar::{lit, Real};

/// `N(x; mean, cov)` with cached inverse and normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2<T> {
    mean: Vec2<T>,
    cov: Sym2<T>,
    inv: Sym2<T>,
    log_norm: T,
}

impl<T: Real> Gaussian2<T> {
    /// Returns `None` unless `cov` is symmetric positive definite.
    pub fn new(mean: Vec2<T>, cov: Sym2<T>) -> Option<Self> {
        if !cov.is_positive_definite() || !mean.x.is_finite() || !mean.y.is_finite() {
            return None;
        }
        Some(Self::new_unchecked(mean, cov))
    }

    fn new_unchecked(mean: Vec2<T>, cov: Sym2<T>) -> Self {
        let inv = cov.inverse().unwrap_or_else(Sym2::identity);
        let log_norm = -(lit::<T>(2.0) * T::PI()).ln() - lit::<T>(0.5) * cov.det().ln();
        Self {
            mean,
            cov,
            inv,
            log_norm,
        }
    }

    pub fn mean(&self) -> Vec2<T> {
        self.mean
    }

    pub fn cov(&self) -> Sym2<T> {
        self.cov
    }

    pub fn log_pdf(&self, p: Vec2<T>) -> T {
        let d = p - self.mean;
        self.log_norm - lit::<T>(0.5) * self.inv.quad(d)
    }

    pub fn pdf(&self, p: Vec2<T>) -> T {
        self.log_pdf(p).exp()
    }

    /// Density and its gradient `−N·Σ⁻¹(p − μ)`.
    pub fn pdf_grad(&self, p: Vec2<T>) -> (T, Vec2<T>) {
        let d = p - self.mean;
        let v = (self.log_norm - lit::<T>(0.5) * self.inv.quad(d)).exp();
        (v, -self.inv.apply(d) * v)
    }
}
