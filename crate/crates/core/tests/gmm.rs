use proptest::prelude::*;
use wcpp::geom::{Sym2, Vec2};
use wcpp::gmm::{fit_gmm, select_key_points, EmOptions, GmmComponent, GmmModel};
use wcpp::reward::{build_gaussian_field, build_spline_field, grid_mass_points, GridMap, Rect, WeightedGaussian};

fn weighted_moments(points: &[(Vec2<f64>, f64)]) -> (Vec2<f64>, Sym2<f64>) {
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    let mut mean = Vec2::zero();
    for (p, w) in points {
        mean += *p * (*w / total);
    }
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for (p, w) in points {
        let d = *p - mean;
        xx += w * d.x * d.x / total;
        xy += w * d.x * d.y / total;
        yy += w * d.y * d.y / total;
    }
    (mean, Sym2::new(xx, xy, yy))
}

fn frobenius(a: Sym2<f64>, b: Sym2<f64>) -> f64 {
    ((a.xx - b.xx).powi(2) + 2.0 * (a.xy - b.xy).powi(2) + (a.yy - b.yy).powi(2)).sqrt()
}

fn blob_map(centers: &[(f64, f64, f64)], sigma: f64) -> GridMap<f64> {
    GridMap::from_fn(600.0, 600.0, 25.0, |p: Vec2<f64>| {
        centers
            .iter()
            .map(|&(x, y, a)| a * (-((p.x - x).powi(2) + (p.y - y).powi(2)) / (2.0 * sigma * sigma)).exp())
            .sum()
    })
    .unwrap()
}

fn assert_em_invariants(model: &GmmModel<f64>, floor: f64) {
    for w in model.trace.windows(2) {
        assert!(w[1].log_likelihood >= w[0].log_likelihood - 1e-8, "{:?}", model.trace);
    }
    for it in &model.trace {
        assert!((it.weight_sum - 1.0).abs() <= 1e-9);
        assert!(it.min_eigenvalue >= floor * (1.0 - 1e-12));
    }
    let sum: f64 = model.components.iter().map(|c| c.weight).sum();
    assert!((sum - 1.0).abs() <= 1e-9);
    for c in &model.components {
        assert!(c.cov.eigenvalues().0 >= floor * (1.0 - 1e-12));
    }
}

#[test]
fn single_component_is_closed_form() {
    let map = blob_map(&[(260.0, 340.0, 1.0), (420.0, 150.0, 0.4)], 60.0);
    let pts = grid_mass_points(&map).unwrap();
    let (mean, cov) = weighted_moments(&pts);
    let model = fit_gmm(&pts, &EmOptions::new(1, 7)).unwrap();
    let c = model.components[0];
    assert!((c.weight - 1.0).abs() < 1e-12);
    assert!((c.mean - mean).norm() < 1e-9);
    assert!(frobenius(c.cov, cov) < 1e-9 * cov.trace());
}

#[test]
fn isotropic_blob_is_recovered() {
    let sigma = 50.0;
    let map = blob_map(&[(310.0, 290.0, 1.0)], sigma);
    let pts = grid_mass_points(&map).unwrap();
    let model = fit_gmm(&pts, &EmOptions::for_cell_size(1, 3, 25.0)).unwrap();
    let c = model.components[0];
    assert!((c.mean - Vec2::new(310.0, 290.0)).norm() < 25.0);
    let truth = Sym2::diag(sigma * sigma, sigma * sigma);
    assert!(frobenius(c.cov, truth) < 0.2 * frobenius(truth, Sym2::zero()));
}

#[test]
fn two_blobs_split_at_the_midline() {
    let map = blob_map(&[(150.0, 300.0, 1.0), (450.0, 300.0, 1.0)], 40.0);
    let pts = grid_mass_points(&map).unwrap();
    let (west, east): (Vec<_>, Vec<_>) = pts.iter().copied().partition(|(p, _)| p.x < 300.0);
    let oracle = [weighted_moments(&west).0, weighted_moments(&east).0];
    let model = fit_gmm(&pts, &EmOptions::for_cell_size(2, 11, 25.0)).unwrap();
    let mut comps: Vec<GmmComponent<f64>> = model.components.clone();
    comps.sort_by(|a, b| a.mean.x.partial_cmp(&b.mean.x).unwrap());
    for (c, o) in comps.iter().zip(oracle) {
        assert!((c.mean - o).norm() < 25.0, "{c:?} vs {o:?}");
        assert!((c.weight - 0.5).abs() < 0.05);
    }
}

#[test]
fn fitting_is_deterministic() {
    let map = blob_map(&[(150.0, 200.0, 1.0), (400.0, 420.0, 0.7), (480.0, 120.0, 0.5)], 45.0);
    let pts = grid_mass_points(&map).unwrap();
    let opts = EmOptions::for_cell_size(5, 99, 25.0);
    assert_eq!(fit_gmm(&pts, &opts).unwrap(), fit_gmm(&pts, &opts).unwrap());
}

#[test]
fn bad_inputs_are_rejected() {
    let pts = vec![(Vec2::new(0.0, 0.0), 0.5), (Vec2::new(1.0, 0.0), 0.5)];
    assert!(matches!(
        fit_gmm(&pts, &EmOptions::new(3, 0)),
        Err(wcpp::Error::TooManyComponents { requested: 3, available: 2 })
    ));
    let zero = vec![(Vec2::new(0.0, 0.0), 0.0), (Vec2::new(1.0, 0.0), 0.0)];
    assert!(fit_gmm(&zero, &EmOptions::new(1, 0)).is_err());
    assert!(fit_gmm(&pts, &EmOptions::new(0, 0)).is_err());
}

#[test]
fn selection_prefers_reward_and_dominates() {
    let map = blob_map(&[(150.0, 200.0, 1.0), (400.0, 420.0, 0.7), (480.0, 120.0, 0.5)], 45.0);
    let field = build_spline_field(&map).unwrap();
    let pts = grid_mass_points(&map).unwrap();
    let model = fit_gmm(&pts, &EmOptions::for_cell_size(20, 1, 25.0)).unwrap();
    let kp = select_key_points(&model, 10, &field).unwrap();
    assert_eq!(kp.m(), 10);
    let worst_selected = kp.scores.iter().cloned().fold(f64::INFINITY, f64::min);
    for (k, c) in model.components.iter().enumerate() {
        if !kp.components.contains(&k) {
            assert!(field.eval_extended(c.mean).0 <= worst_selected);
        }
    }
    assert!(kp.scores.windows(2).all(|w| w[0] >= w[1]));
    assert!(kp.points.iter().all(|p| field.domain().contains(*p)));

    let all = select_key_points(&model, 20, &field).unwrap();
    assert_eq!(all.m(), 20);
}

#[test]
fn high_reward_component_wins() {
    let domain = Rect::new(Vec2::zero(), Vec2::new(400.0, 400.0));
    let field = build_gaussian_field(
        &[WeightedGaussian {
            weight: 1.0,
            mean: Vec2::new(100.0, 100.0),
            cov: Sym2::diag(400.0, 400.0),
        }],
        domain,
    )
    .unwrap();
    let model = GmmModel {
        components: vec![
            GmmComponent {
                weight: 0.9,
                mean: Vec2::new(350.0, 350.0),
                cov: Sym2::diag(100.0, 100.0),
            },
            GmmComponent {
                weight: 0.1,
                mean: Vec2::new(100.0, 100.0),
                cov: Sym2::diag(100.0, 100.0),
            },
        ],
        log_likelihood: 0.0,
        iterations_used: 0,
        converged: true,
        trace: vec![],
    };
    let kp = select_key_points(&model, 1, &field).unwrap();
    assert_eq!(kp.points, vec![Vec2::new(100.0, 100.0)]);
    assert!(select_key_points(&model, 3, &field).is_err());
    assert!(select_key_points(&model, 0, &field).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn em_invariants_hold(
        centers in prop::collection::vec((80.0f64..520.0, 80.0f64..520.0, 0.2f64..1.0), 1..4),
        n in 1usize..7,
        seed in 0u64..1000,
    ) {
        let map = blob_map(&centers, 40.0);
        let pts = grid_mass_points(&map).unwrap();
        let opts = EmOptions::for_cell_size(n, seed, 25.0);
        let model = fit_gmm(&pts, &opts).unwrap();
        assert_em_invariants(&model, opts.min_std * opts.min_std);
        prop_assert!(model.iterations_used <= opts.max_iter);
    }
}
