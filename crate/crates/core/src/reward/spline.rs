//! Tensor-product natural cubic spline through grid cell centers.
//!
//! Knot derivatives (`f_x`, `f_y`, `f_xy`) come from 1-D natural splines along
//! rows and columns; each cell is then the bicubic Hermite patch fixed by those
//! sixteen corner quantities, which coincides with the tensor-product spline.
//! Outside the knot span the spline continues linearly (zero second
//! derivative), so value and gradient stay continuous out to the map edge.

use crate::geom::Vec2;
use crate::scalar::{lit, Real};

use super::GridMap;

#[derive(Debug, Clone)]
pub(crate) struct BicubicSpline<T> {
    nx: usize,
    ny: usize,
    h: T,
    /// Center of knot (0, 0).
    origin: Vec2<T>,
    f: Vec<T>,
    fx: Vec<T>,
    fy: Vec<T>,
    fxy: Vec<T>,
}

/// First derivatives at the knots of a natural cubic spline with spacing `h`.
fn natural_knot_slopes<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    debug_assert!(n >= 2);
    let six = lit::<T>(6.0);
    // Second derivatives M, natural ends M_0 = M_{n-1} = 0.
    let mut m = vec![T::zero(); n];
    if n > 2 {
        // Thomas algorithm on M_{i-1} + 4 M_i + M_{i+1} = 6/h² (y_{i-1} − 2y_i + y_{i+1}).
        let k = n - 2;
        let mut c = vec![T::zero(); k];
        let mut d = vec![T::zero(); k];
        let four = lit::<T>(4.0);
        let two = lit::<T>(2.0);
        for r in 0..k {
            let i = r + 1;
            let rhs = six / (h * h) * (y[i - 1] - two * y[i] + y[i + 1]);
            if r == 0 {
                c[0] = T::one() / four;
                d[0] = rhs / four;
            } else {
                let denom = four - c[r - 1];
                c[r] = T::one() / denom;
                d[r] = (rhs - d[r - 1]) / denom;
            }
        }
        m[k] = d[k - 1];
        for r in (0..k - 1).rev() {
            m[r + 1] = d[r] - c[r] * m[r + 2];
        }
    }
    let two = lit::<T>(2.0);
    let mut s = Vec::with_capacity(n);
    for i in 0..n - 1 {
        s.push((y[i + 1] - y[i]) / h - h * (two * m[i] + m[i + 1]) / six);
    }
    s.push((y[n - 1] - y[n - 2]) / h + h * (m[n - 2] + two * m[n - 1]) / six);
    s
}

/// Hermite basis on [0, 1]: values and first derivatives of h00, h10, h01, h11.
#[inline]
fn hermite<T: Real>(t: T) -> ([T; 4], [T; 4]) {
    let one = T::one();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let six = lit::<T>(6.0);
    let four = lit::<T>(4.0);
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            two * t3 - three * t2 + one,
            t3 - two * t2 + t,
            -two * t3 + three * t2,
            t3 - t2,
        ],
        [six * t2 - six * t, three * t2 - four * t + one, -six * t2 + six * t, three * t2 - two * t],
    )
}

/// Raw spline output with its first derivatives and the mixed one.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplineEval<T> {
    pub value: T,
    pub grad: Vec2<T>,
}

impl<T: Real> BicubicSpline<T> {
    pub(crate) fn new(map: &GridMap<T>) -> Self {
        let (nx, ny) = (map.nx(), map.ny());
        let h = map.cell_size_m();
        let f = map.values().to_vec();
        let mut fx = vec![T::zero(); nx * ny];
        let mut fy = vec![T::zero(); nx * ny];
        let mut fxy = vec![T::zero(); nx * ny];
        for j in 0..ny {
            let s = natural_knot_slopes(&f[j * nx..(j + 1) * nx], h);
            fx[j * nx..(j + 1) * nx].copy_from_slice(&s);
        }
        let mut col = vec![T::zero(); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = f[j * nx + i];
            }
            for (j, s) in natural_knot_slopes(&col, h).into_iter().enumerate() {
                fy[j * nx + i] = s;
            }
            for j in 0..ny {
                col[j] = fx[j * nx + i];
            }
            for (j, s) in natural_knot_slopes(&col, h).into_iter().enumerate() {
                fxy[j * nx + i] = s;
            }
        }
        Self {
            nx,
            ny,
            h,
            origin: map.origin(),
            f,
            fx,
            fy,
            fxy,
        }
    }

    /// Locates the patch along one axis: (cell index, clamped local t, excess distance).
    #[inline]
    fn locate(&self, coord: T, origin: T, n: usize) -> (usize, T, T) {
        let u = (coord - origin) / self.h;
        let last = n - 2;
        let fl = u.floor();
        let idx = if fl <= T::zero() {
            0
        } else {
            fl.to_usize().unwrap_or(last).min(last)
        };
        let t = u - crate::scalar::from_usize::<T>(idx);
        if t < T::zero() {
            (idx, T::zero(), t * self.h)
        } else if t > T::one() {
            (idx, T::one(), (t - T::one()) * self.h)
        } else {
            (idx, t, T::zero())
        }
    }

    /// Unclamped spline value and gradient; defined on the whole plane.
    pub(crate) fn eval(&self, p: Vec2<T>) -> SplineEval<T> {
        let (i, tx, ex) = self.locate(p.x, self.origin.x, self.nx);
        let (j, ty, ey) = self.locate(p.y, self.origin.y, self.ny);
        let (hx, dhx) = hermite(tx);
        let (hy, dhy) = hermite(ty);
        let h = self.h;
        // x-basis: [value@i, slope@i, value@i+1, slope@i+1]; slopes carry a factor h.
        let bx = [hx[0], hx[1] * h, hx[2], hx[3] * h];
        let dbx = [dhx[0] / h, dhx[1], dhx[2] / h, dhx[3]];
        let by = [hy[0], hy[1] * h, hy[2], hy[3] * h];
        let dby = [dhy[0] / h, dhy[1], dhy[2] / h, dhy[3]];

        let (mut s, mut sx, mut sy, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (a, ii) in [(0usize, i), (1, i + 1)] {
            for (b, jj) in [(0usize, j), (1, j + 1)] {
                let k = jj * self.nx + ii;
                // coefficient on (x-kind, y-kind) basis pairs
                let terms = [
                    (2 * a, 2 * b, self.f[k]),
                    (2 * a + 1, 2 * b, self.fx[k]),
                    (2 * a, 2 * b + 1, self.fy[k]),
                    (2 * a + 1, 2 * b + 1, self.fxy[k]),
                ];
                for (xi, yi, c) in terms {
                    s = s + c * bx[xi] * by[yi];
                    sx = sx + c * dbx[xi] * by[yi];
                    sy = sy + c * bx[xi] * dby[yi];
                    sxy = sxy + c * dbx[xi] * dby[yi];
                }
            }
        }
        SplineEval {
            value: s + ex * sx + ey * sy + ex * ey * sxy,
            grad: Vec2::new(sx + ey * sxy, sy + ex * sxy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_slopes_of_line_are_exact() {
        let y: Vec<f64> = (0..7).map(|i| 3.0 + 2.0 * i as f64).collect();
        for s in natural_knot_slopes(&y, 1.0) {
            assert!((s - 2.0).abs() < 1e-12);
        }
        let s = natural_knot_slopes(&[1.0_f64, 4.0], 0.5);
        assert_eq!(s, vec![6.0, 6.0]);
    }

    #[test]
    fn natural_slopes_match_dense_solve() {
        // Second derivatives of a natural spline through 5 knots, solved independently
        // via the full 3x3 interior system with Cramer's rule.
        let y = [0.0_f64, 1.0, 0.0, 2.0, 1.0];
        let h = 1.0;
        let r: Vec<f64> = (1..4).map(|i| 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1])).collect();
        let a = [[4.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 4.0]];
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det3(a);
        let mut m = [0.0; 5];
        for c in 0..3 {
            let mut ac = a;
            for row in 0..3 {
                ac[row][c] = r[row];
            }
            m[c + 1] = det3(ac) / d;
        }
        let expected: Vec<f64> = (0..4)
            .map(|i| (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0)
            .collect();
        let got = natural_knot_slopes(&y, h);
        for i in 0..4 {
            assert!((got[i] - expected[i]).abs() < 1e-12);
        }
    }
}
