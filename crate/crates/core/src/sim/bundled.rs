//! Three synthetic scenarios shaped like the reference setups: a 600 m and an
//! 800 m square grid map at 25 m cells, and an analytic Gaussian-sum map.
//! The maps are seeded Gaussian sums; grid maps are rasterized and scaled to
//! a peak cell value of 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Sym2, Vec2};
use crate::reward::{GridMap, Rect, WeightedGaussian};

use super::config::{AgentConfig, MapSpec, MpcSection, PlannerConfig, ScenarioConfig, SolverSection};

pub const CELL_SIZE: f64 = 25.0;

/// Random anisotropic blobs with peak heights in [0.4, 1].
pub fn random_blobs(seed: u64, side: f64, count: usize) -> Vec<WeightedGaussian<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mean = Vec2::new(rng.gen_range(0.2 * side..0.9 * side), rng.gen_range(0.2 * side..0.9 * side));
            let sx: f64 = rng.gen_range(0.025 * side..0.05 * side);
            let sy: f64 = rng.gen_range(0.025 * side..0.05 * side);
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let (s, c) = angle.sin_cos();
            // R diag(sx², sy²) Rᵀ
            let cov = Sym2::new(
                c * c * sx * sx + s * s * sy * sy,
                c * s * (sx * sx - sy * sy),
                s * s * sx * sx + c * c * sy * sy,
            );
            let peak: f64 = rng.gen_range(0.4..1.0);
            WeightedGaussian {
                weight: peak * 2.0 * std::f64::consts::PI * sx * sy,
                mean,
                cov,
            }
        })
        .collect()
}

fn density(blobs: &[WeightedGaussian<f64>], p: Vec2<f64>) -> f64 {
    blobs
        .iter()
        .map(|b| {
            let d = p - b.mean;
            let inv = b.cov.inverse().unwrap();
            b.weight * (-0.5 * inv.quad(d)).exp() / (2.0 * std::f64::consts::PI * b.cov.det().sqrt())
        })
        .sum()
}

/// Rasterizes seeded blobs onto a `side × side` map, scales the peak to 1 and
/// rounds to six decimals so the file stays compact.
pub fn synthetic_grid(seed: u64, side: f64, count: usize) -> GridMap<f64> {
    let blobs = random_blobs(seed, side, count);
    let raw = GridMap::from_fn(side, side, CELL_SIZE, |p| density(&blobs, p)).expect("valid synthetic map");
    let peak = raw.max_value();
    GridMap::new(side, side, CELL_SIZE, raw.values().iter().map(|v| (v / peak * 1e6).round() / 1e6).collect()).expect("valid synthetic map")
}

/// Bundled scenario names, in table order.
pub const SCENARIOS: [&str; 4] = ["s1", "s2a", "s2b", "s3"];

/// Scenario and horizon of each timing-table row.
pub const TABLE_RUNS: [(&str, usize); 8] = [
    ("s1", 50),
    ("s1", 100),
    ("s2a", 50),
    ("s2a", 100),
    ("s2b", 100),
    ("s2b", 150),
    ("s3", 75),
    ("s3", 150),
];

fn base(name: &str, map: MapSpec, x0: [f64; 2], n: usize, horizon: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        output_dir: None,
        map,
        agent: AgentConfig {
            x0: [x0[0], x0[1], 0.0, 0.0],
        },
        planner: PlannerConfig {
            n,
            m: n / 2,
            seed,
            ..PlannerConfig::default()
        },
        mpc: MpcSection {
            horizon,
            ..MpcSection::default()
        },
        solver: SolverSection::default(),
    }
}

/// Grid map for bundled scenario `name`, when it is grid-backed.
pub fn grid_for(name: &str) -> Option<GridMap<f64>> {
    match name {
        "s1" => Some(synthetic_grid(4000, 600.0, 6)),
        "s2a" | "s2b" => Some(synthetic_grid(4001, 800.0, 8)),
        _ => None,
    }
}

/// Components of the analytic scenario-3 map (800 m square).
pub fn scenario3_components() -> Vec<WeightedGaussian<f64>> {
    random_blobs(4003, 800.0, 7)
}

/// Bundled scenario config; grid maps reference `<name>.grid` next to the config.
pub fn scenario(name: &str) -> Option<ScenarioConfig> {
    let grid_file = |f: &str| MapSpec::Grid { file: f.into() };
    Some(match name {
        "s1" => base("s1", grid_file("s1.grid"), [60.0, 60.0], 20, 50, 1),
        "s2a" => base("s2a", grid_file("s2.grid"), [400.0, 60.0], 40, 50, 2),
        "s2b" => base("s2b", grid_file("s2.grid"), [100.0, 700.0], 40, 100, 2),
        "s3" => {
            let side = 800.0;
            base(
                "s3",
                MapSpec::Gaussian {
                    width_m: side,
                    height_m: side,
                    cell_size_m: CELL_SIZE,
                    components: scenario3_components().into_iter().map(Into::into).collect(),
                },
                [60.0, 740.0],
                40,
                75,
                3,
            )
        }
        _ => return None,
    })
}

/// Domain rectangle of a square map.
pub fn square(side: f64) -> Rect<f64> {
    Rect::new(Vec2::zero(), Vec2::new(side, side))
}
