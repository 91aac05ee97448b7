//! Weighted EM for bivariate Gaussian mixtures and key-point selection.
//!
//! EM runs directly on weighted mass points (grid-cell centers weighted by
//! cell mass). Covariances are kept above an eigenvalue floor by solving the
//! M-step under that constraint: the unconstrained sample covariance has its
//! eigenvalues clipped at `min_std²`, which is the exact constrained maximizer,
//! so the log-likelihood stays monotone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian::Gaussian2;
use crate::geom::{Sym2, Vec2};
use crate::reward::RewardField;
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy)]
pub struct EmOptions<T> {
    /// Number of mixture components `n`.
    pub components: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative log-likelihood change below which EM stops.
    pub tol: T,
    /// Standard-deviation floor σ_min; every covariance eigenvalue stays ≥ σ_min².
    pub min_std: T,
}

impl<T: Real> EmOptions<T> {
    pub fn new(components: usize, seed: u64) -> Self {
        Self {
            components,
            seed,
            max_iter: 200,
            tol: lit(1e-7),
            min_std: T::zero(),
        }
    }

    /// Floor at half a cell size.
    pub fn for_cell_size(components: usize, seed: u64, cell_size: T) -> Self {
        Self {
            min_std: cell_size * lit(0.5),
            ..Self::new(components, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmComponent<T> {
    pub weight: T,
    pub mean: Vec2<T>,
    pub cov: Sym2<T>,
}

/// Diagnostics for one set of parameters visited by EM (index 0 is the seeding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmIterate<T> {
    pub log_likelihood: T,
    pub weight_sum: T,
    pub min_eigenvalue: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel<T> {
    pub components: Vec<GmmComponent<T>>,
    /// Weighted log-likelihood Σ wᵢ log p(xᵢ) of the final parameters.
    pub log_likelihood: T,
    pub iterations_used: usize,
    pub converged: bool,
    pub trace: Vec<EmIterate<T>>,
}

impl<T: Real> GmmModel<T> {
    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// Mixture density at `p`.
    pub fn density(&self, p: Vec2<T>) -> T {
        self.components
            .iter()
            .filter_map(|c| Gaussian2::new(c.mean, c.cov).map(|g| c.weight * g.pdf(p)))
            .sum()
    }
}

fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

fn weighted_moments<T: Real>(pts: &[(Vec2<T>, T)], resp: impl Fn(usize) -> T) -> (T, Vec2<T>, Sym2<T>) {
    let mut mass = T::zero();
    let mut sum = Vec2::zero();
    for (i, (p, w)) in pts.iter().enumerate() {
        let r = *w * resp(i);
        mass = mass + r;
        sum += *p * r;
    }
    if !(mass > T::zero()) {
        return (mass, Vec2::zero(), Sym2::zero());
    }
    let mean = sum * (T::one() / mass);
    let mut cov = Sym2::zero();
    for (i, (p, w)) in pts.iter().enumerate() {
        let r = *w * resp(i);
        cov = cov.add(&Sym2::outer(*p - mean).scale(r));
    }
    (mass, mean, cov.scale(T::one() / mass))
}

struct Params<T> {
    weights: Vec<T>,
    gauss: Vec<Gaussian2<T>>,
}

impl<T: Real> Params<T> {
    fn trace_entry(&self, ll: T) -> EmIterate<T> {
        EmIterate {
            log_likelihood: ll,
            weight_sum: self.weights.iter().copied().sum(),
            min_eigenvalue: self
                .gauss
                .iter()
                .map(|g| g.cov().eigenvalues().0)
                .fold(T::infinity(), T::min),
        }
    }
}

/// Responsibilities (row-major, point × component) and the weighted log-likelihood.
fn e_step<T: Real>(pts: &[(Vec2<T>, T)], params: &Params<T>, resp: &mut [T]) -> T {
    let n = params.weights.len();
    let log_w: Vec<T> = params.weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![T::zero(); n];
    let mut ll = T::zero();
    for (i, (p, w)) in pts.iter().enumerate() {
        for k in 0..n {
            buf[k] = log_w[k] + params.gauss[k].log_pdf(*p);
        }
        let lse = log_sum_exp(&buf);
        for k in 0..n {
            resp[i * n + k] = (buf[k] - lse).exp();
        }
        ll = ll + *w * lse;
    }
    ll
}

/// Fits an `n`-component mixture to weighted points with EM.
///
/// Seeding is weighted k-means++ drawn from a ChaCha generator seeded with
/// `opts.seed`; starting covariances are the overall weighted covariance
/// divided by `n` and starting weights are `1/n`. Same inputs, same bits out.
pub fn fit_gmm<T: Real>(mass_points: &[(Vec2<T>, T)], opts: &EmOptions<T>) -> Result<GmmModel<T>> {
    let n = opts.components;
    if n == 0 {
        return Err(Error::InvalidArgument("at least one mixture component required".into()));
    }
    let total: T = mass_points.iter().map(|(_, w)| *w).filter(|w| *w > T::zero()).sum();
    if !(total > T::zero() && total.is_finite()) {
        return Err(Error::NoRewardMass);
    }
    let pts: Vec<(Vec2<T>, T)> = mass_points
        .iter()
        .filter(|(_, w)| *w > T::zero())
        .map(|(p, w)| (*p, *w / total))
        .collect();

    let mut distinct: Vec<(T, T)> = pts.iter().map(|(p, _)| (p.x, p.y)).collect();
    distinct.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    distinct.dedup();
    if distinct.len() < n {
        return Err(Error::TooManyComponents {
            requested: n,
            available: distinct.len(),
        });
    }

    let (_, _, overall_cov) = weighted_moments(&pts, |_| T::one());
    let floor = (opts.min_std * opts.min_std).max(lit::<T>(1e-10) * overall_cov.trace().max(T::one()));
    let make = |mean: Vec2<T>, cov: Sym2<T>| {
        Gaussian2::new(mean, cov.with_eigen_floor(floor)).expect("floored covariance is positive definite")
    };

    // Weighted k-means++ seeding.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers: Vec<Vec2<T>> = Vec::with_capacity(n);
    let mut d2: Vec<T> = vec![T::infinity(); pts.len()];
    while centers.len() < n {
        let scores: Vec<T> = if centers.is_empty() {
            pts.iter().map(|(_, w)| *w).collect()
        } else {
            pts.iter().zip(&d2).map(|((_, w), d)| *w * *d).collect()
        };
        let sum: T = scores.iter().copied().sum();
        let target = lit::<T>(rng.gen::<f64>()) * sum;
        let mut acc = T::zero();
        let mut pick = None;
        for (i, s) in scores.iter().enumerate() {
            if *s <= T::zero() {
                continue;
            }
            acc = acc + *s;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let c = pts[pick.expect("positive seeding mass")].0;
        centers.push(c);
        for (d, (p, _)) in d2.iter_mut().zip(&pts) {
            *d = d.min(p.dist_sq(c));
        }
    }
    let init_cov = overall_cov.scale(T::one() / from_usize::<T>(n));
    let mut params = Params {
        weights: vec![T::one() / from_usize::<T>(n); n],
        gauss: centers.iter().map(|c| make(*c, init_cov)).collect(),
    };

    let mut resp = vec![T::zero(); pts.len() * n];
    let mut ll = e_step(&pts, &params, &mut resp);
    let mut trace = vec![params.trace_entry(ll)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // M-step
        let mut new_w = Vec::with_capacity(n);
        let mut new_g = Vec::with_capacity(n);
        for k in 0..n {
            let (mass, mean, cov) = weighted_moments(&pts, |i| resp[i * n + k]);
            if mass > T::min_positive_value() {
                new_w.push(mass);
                new_g.push(make(mean, cov));
            } else {
                // Dead component: its parameters do not affect the likelihood.
                new_w.push(T::zero());
                new_g.push(params.gauss[k]);
            }
        }
        let wsum: T = new_w.iter().copied().sum();
        for w in &mut new_w {
            *w = *w / wsum;
        }
        params = Params {
            weights: new_w,
            gauss: new_g,
        };
        iterations += 1;

        let next = e_step(&pts, &params, &mut resp);
        trace.push(params.trace_entry(next));
        let change = (next - ll).abs();
        ll = next;
        if change <= opts.tol * ll.abs().max(T::min_positive_value()) {
            converged = true;
            break;
        }
    }

    Ok(GmmModel {
        components: params
            .weights
            .iter()
            .zip(&params.gauss)
            .map(|(w, g)| GmmComponent {
                weight: *w,
                mean: g.mean(),
                cov: g.cov(),
            })
            .collect(),
        log_likelihood: ll,
        iterations_used: iterations,
        converged,
        trace,
    })
}

/// Selected component means, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPointSet<T> {
    pub points: Vec<Vec2<T>>,
    /// Reward-field value at each point.
    pub scores: Vec<T>,
    /// Index of the originating mixture component.
    pub components: Vec<usize>,
}

impl<T> KeyPointSet<T> {
    pub fn m(&self) -> usize {
        self.points.len()
    }
}

/// Keeps the `m` components whose means carry the highest reward `r(μ_k)`.
///
/// Ties go to the larger weight, then the lower component index.
pub fn select_key_points<T: Real>(model: &GmmModel<T>, m: usize, field: &RewardField<T>) -> Result<KeyPointSet<T>> {
    let n = model.n();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("key point count {m} must lie in 1..={n}")));
    }
    let scored: Vec<(usize, T)> = model
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| (k, field.eval_extended(c.mean).0))
        .collect();
    let mut order = scored.clone();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                model.components[b.0]
                    .weight
                    .partial_cmp(&model.components[a.0].weight)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.0.cmp(&b.0))
    });
    order.truncate(m);
    Ok(KeyPointSet {
        points: order.iter().map(|(k, _)| model.components[*k].mean).collect(),
        scores: order.iter().map(|(_, s)| *s).collect(),
        components: order.iter().map(|(k, _)| *k).collect(),
    })
}
