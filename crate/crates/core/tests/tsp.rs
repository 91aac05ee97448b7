use proptest::prelude::*;
use wcpp::geom::Vec2;
use wcpp::tsp::{best_two_opt_move, solve_exact, solve_heuristic, solve_tsp, CostMatrix, EXACT_SIZE_LIMIT};

/// Open path length visiting `rest` in order after node 0.
fn open_length(points: &[Vec2<f64>], perm: &[usize]) -> f64 {
    let mut at = points[0];
    let mut total = 0.0;
    for &i in perm {
        total += at.dist(points[i]);
        at = points[i];
    }
    total
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn brute_force(points: &[Vec2<f64>]) -> f64 {
    let mut rest: Vec<usize> = (1..points.len()).collect();
    let mut best = f64::INFINITY;
    permutations(&mut rest, 0, &mut |p| best = best.min(open_length(points, p)));
    best
}

fn is_permutation_from_zero(order: &[usize], size: usize) -> bool {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    order.first() == Some(&0) && sorted == (0..size).collect::<Vec<_>>()
}

fn arb_points(max: usize) -> impl Strategy<Value = Vec<Vec2<f64>>> {
    prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), 1..=max)
        .prop_map(|v| v.into_iter().map(|(x, y)| Vec2::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_matches_brute_force(points in arb_points(9)) {
        let matrix = CostMatrix::from_points(points[0], &points[1..]);
        let tour = solve_exact(&matrix);
        prop_assert!(is_permutation_from_zero(&tour.order, points.len()));
        prop_assert!(!tour.heuristic);
        let oracle = brute_force(&points);
        prop_assert!((tour.length - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {oracle}", tour.length);
        prop_assert!((open_length(&points, &tour.order[1..]) - tour.length).abs() <= 1e-9 * oracle.max(1.0));
    }

    #[test]
    fn heuristic_is_a_two_opt_local_optimum(points in arb_points(24)) {
        let matrix = CostMatrix::from_points(points[0], &points[1..]);
        let tour = solve_heuristic(&matrix);
        prop_assert!(is_permutation_from_zero(&tour.order, points.len()));
        prop_assert!(tour.heuristic || points.len() <= 2);
        prop_assert!(best_two_opt_move(&matrix, &tour.order).is_none());
        prop_assert!((matrix.tour_length(&tour.order) - tour.length).abs() <= 1e-9 * tour.length.max(1.0));
    }

    #[test]
    fn dispatch_uses_size_limit(points in arb_points(20)) {
        let matrix = CostMatrix::from_points(points[0], &points[1..]);
        let tour = solve_tsp(&matrix);
        prop_assert_eq!(tour.heuristic, points.len() > EXACT_SIZE_LIMIT);
        prop_assert!(is_permutation_from_zero(&tour.order, points.len()));
    }
}

#[test]
fn return_arc_is_free() {
    let points = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(20.0, 0.0)];
    let matrix = CostMatrix::from_points(points[0], &points[1..]);
    for i in 0..3 {
        assert_eq!(matrix.get(i, 0), 0.0);
    }
    let tour = solve_exact(&matrix);
    assert_eq!(tour.order, vec![0, 1, 2]);
    assert_eq!(tour.length, 20.0);
}

#[test]
fn collinear_points_are_visited_in_line() {
    let xs = [40.0, 10.0, 30.0, 50.0, 20.0];
    let points: Vec<Vec2<f64>> = std::iter::once(Vec2::zero())
        .chain(xs.iter().map(|&x| Vec2::new(x, 0.0)))
        .collect();
    let matrix = CostMatrix::from_points(points[0], &points[1..]);
    for tour in [solve_exact(&matrix), solve_heuristic(&matrix)] {
        assert_eq!(tour.order, vec![0, 2, 5, 3, 1, 4]);
        assert!((tour.length - 50.0).abs() < 1e-12);
    }
}

#[test]
fn asymmetric_costs_are_respected() {
    // 0 -> 2 -> 1 is cheap, 0 -> 1 -> 2 is expensive.
    let matrix = CostMatrix::from_costs(3, vec![0.0, 5.0, 1.0, 0.0, 0.0, 9.0, 0.0, 1.0, 0.0]);
    let tour = solve_exact(&matrix);
    assert_eq!(tour.order, vec![0, 2, 1]);
    assert_eq!(tour.length, 2.0);
}

#[test]
fn trivial_sizes() {
    let one = CostMatrix::from_points(Vec2::new(1.0, 2.0), &[]);
    assert_eq!(solve_tsp(&one).order, vec![0]);
    assert_eq!(solve_tsp(&one).length, 0.0);
    let two = CostMatrix::from_points(Vec2::zero(), &[Vec2::new(3.0, 4.0)]);
    let tour = solve_tsp(&two);
    assert_eq!(tour.order, vec![0, 1]);
    assert_eq!(tour.length, 5.0);
}

#[test]
fn ties_break_lexicographically() {
    // Symmetric square around the start: both directions cost the same.
    let points = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 10.0), Vec2::new(0.0, -10.0)];
    let matrix = CostMatrix::from_points(points[0], &points[1..]);
    let tour = solve_exact(&matrix);
    assert_eq!(tour.order, vec![0, 1, 2]);
    assert_eq!(solve_exact(&matrix), tour);
}
