use proptest::prelude::*;
use wcpp::geom::{Sym2, Vec2};
use wcpp::reward::{build_gaussian_field, build_spline_field, grid_mass_points, GridMap, Rect, RewardField, WeightedGaussian};

fn central_diff(field: &RewardField<f64>, p: Vec2<f64>, h: f64) -> Vec2<f64> {
    let f = |q: Vec2<f64>| field.eval_raw(q).0;
    Vec2::new(
        (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h),
        (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h),
    )
}

fn rel_err(a: Vec2<f64>, b: Vec2<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

fn arb_grid() -> impl Strategy<Value = GridMap<f64>> {
    (4usize..9, 4usize..9).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(0.0f64..1.0, nx * ny)
            .prop_map(move |v| GridMap::new(nx as f64 * 25.0, ny as f64 * 25.0, 25.0, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spline_interpolates_every_cell(map in arb_grid()) {
        let field = build_spline_field(&map).unwrap();
        for (c, v) in map.cells() {
            let raw = field.eval_raw(c).0;
            prop_assert!((raw - v).abs() <= 1e-9 * v.max(1.0), "at {c:?}: {raw} vs {v}");
        }
    }

    #[test]
    fn spline_gradient_matches_differences(map in arb_grid(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let field = build_spline_field(&map).unwrap();
        let d = field.domain();
        let p = Vec2::new(d.min.x + u * d.width(), d.min.y + v * d.height());
        let (_, g) = field.eval_raw(p);
        let fd = central_diff(&field, p, 1e-5 * d.diagonal());
        prop_assert!(rel_err(g, fd, 1e-3) < 1e-4, "{g:?} vs {fd:?}");
    }

    #[test]
    fn clamped_value_is_never_negative(map in arb_grid(), u in -0.2f64..1.2, v in -0.2f64..1.2) {
        let field = build_spline_field(&map).unwrap();
        let d = field.domain();
        let p = Vec2::new(d.min.x + u * d.width(), d.min.y + v * d.height());
        let (value, grad) = field.eval_extended(p);
        let (raw, raw_grad) = field.eval_raw(p);
        prop_assert!(value >= 0.0);
        if raw < 0.0 {
            prop_assert_eq!(grad, Vec2::zero());
        } else {
            prop_assert_eq!((value, grad), (raw, raw_grad));
        }
    }

    #[test]
    fn grid_text_round_trips(map in arb_grid()) {
        let back = GridMap::<f64>::parse(&map.to_text()).unwrap();
        prop_assert_eq!(back, map);
    }

    #[test]
    fn gaussian_sum_is_linear(
        means in prop::collection::vec((50.0f64..150.0, 50.0f64..150.0), 1..5),
        px in 0.0f64..200.0, py in 0.0f64..200.0,
    ) {
        let domain = Rect::new(Vec2::zero(), Vec2::new(200.0, 200.0));
        let comps: Vec<WeightedGaussian<f64>> = means
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| WeightedGaussian {
                weight: 1.0 + k as f64,
                mean: Vec2::new(x, y),
                cov: Sym2::new(300.0 + 50.0 * k as f64, 20.0, 200.0),
            })
            .collect();
        let p = Vec2::new(px, py);
        let whole = build_gaussian_field(&comps, domain).unwrap().eval(p).unwrap();
        let parts = comps.iter().fold((0.0, Vec2::zero()), |acc, c| {
            let e = build_gaussian_field(std::slice::from_ref(c), domain).unwrap().eval(p).unwrap();
            (acc.0 + e.0, acc.1 + e.1)
        });
        prop_assert!((whole.0 - parts.0).abs() <= 1e-12);
        prop_assert!((whole.1 - parts.1).norm() <= 1e-12);
    }
}

#[test]
fn gaussian_gradient_matches_differences() {
    let domain = Rect::new(Vec2::zero(), Vec2::new(400.0, 300.0));
    let comps = [
        WeightedGaussian {
            weight: 2.0,
            mean: Vec2::new(120.0, 140.0),
            cov: Sym2::new(900.0, 200.0, 600.0),
        },
        WeightedGaussian {
            weight: 1.0,
            mean: Vec2::new(260.0, 90.0),
            cov: Sym2::new(400.0, -100.0, 1600.0),
        },
    ];
    let field = build_gaussian_field(&comps, domain).unwrap();
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let p = Vec2::new(40.0 + 320.0 * next(), 20.0 + 260.0 * next());
        let (_, g) = field.eval(p).unwrap();
        let fd = central_diff(&field, p, 1e-5);
        assert!(rel_err(g, fd, 1e-12) < 1e-6, "{p:?}: {g:?} vs {fd:?}");
    }
    let (_, at_mean) = build_gaussian_field(&comps[..1], domain).unwrap().eval(comps[0].mean).unwrap();
    assert!(at_mean.norm() < 1e-18);
}

#[test]
fn spline_gradient_on_smooth_map() {
    let map = GridMap::from_fn(600.0, 600.0, 25.0, |p: Vec2<f64>| {
        (-((p.x - 250.0).powi(2) + (p.y - 320.0).powi(2)) / 8000.0).exp()
    })
    .unwrap();
    let field = build_spline_field(&map).unwrap();
    let h = 1e-5 * field.domain().diagonal();
    for k in 0..50 {
        let t = k as f64 / 50.0;
        let p = Vec2::new(30.0 + 540.0 * t, 570.0 - 530.0 * (t * 7.0).fract());
        let (_, g) = field.eval_raw(p);
        let fd = central_diff(&field, p, h);
        assert!(rel_err(g, fd, 1e-6) < 1e-5, "{p:?}: {g:?} vs {fd:?}");
    }
}

#[test]
fn spline_mass_tracks_cell_mass() {
    let map = GridMap::from_fn(800.0, 800.0, 25.0, |p: Vec2<f64>| {
        (-((p.x - 300.0).powi(2) + (p.y - 420.0).powi(2)) / 6000.0).exp()
            + 0.6 * (-((p.x - 600.0).powi(2) + (p.y - 200.0).powi(2)) / 3000.0).exp()
    })
    .unwrap();
    let field = build_spline_field(&map).unwrap();
    let rel = (field.total_mass() - map.total_mass()).abs() / map.total_mass();
    assert!(rel < 0.02, "{rel}");
}

#[test]
fn grid_file_examples() {
    let zero = GridMap::<f64>::parse("50 50 25\n0 0\n0 0\n").unwrap();
    assert_eq!(zero.total_mass(), 0.0);

    let text = std::iter::once("600 600 25".to_string())
        .chain((0..24).map(|_| vec!["1"; 24].join(" ")))
        .collect::<Vec<_>>()
        .join("\n");
    let map = GridMap::<f64>::parse(&text).unwrap();
    assert_eq!((map.nx(), map.ny()), (24, 24));
    let pts = grid_mass_points(&map).unwrap();
    assert_eq!(pts.len(), 576);
    assert!(pts.iter().all(|(_, w)| (*w - 1.0 / 576.0).abs() < 1e-15));

    let err = GridMap::<f64>::parse("50 50 25\n0 1\n0 -2\n").unwrap_err();
    match err {
        wcpp::Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn top_row_is_north() {
    // First value row is the northern edge.
    let map = GridMap::<f64>::parse("50 50 25\n7 0\n0 3\n").unwrap();
    assert_eq!(map.value(0, 1), 7.0);
    assert_eq!(map.value(1, 0), 3.0);
    let pts = grid_mass_points(&map).unwrap();
    assert_eq!(pts.len(), 2);
    let north = pts.iter().find(|(p, _)| p.y > 25.0).unwrap();
    assert_eq!(north.0, Vec2::new(12.5, 37.5));
    assert!((north.1 - 0.7).abs() < 1e-15);
}
