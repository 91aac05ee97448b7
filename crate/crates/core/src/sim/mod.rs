//! Scenario orchestration from map to closed loop, plus the collect-once
//! evaluation metric and report tables.

pub mod bundled;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::geom::Vec2;
use crate::gmm::{fit_gmm, select_key_points, EmOptions, KeyPointSet};
use crate::mpc::{closed_loop, write_trajectory_csv, ClosedLoopResult, MpcConfig, State, WarmstartPolicy};
use crate::render::Overlays;
use crate::reward::{build_gaussian_field, build_spline_field, grid_mass_points, GridMap, Rect, RewardField, WeightedGaussian};
use crate::tsp::{build_cost_matrix, solve_tsp, Tour};
use crate::warmstart::{discretize_tour, GuessTrajectory};

pub use config::{AgentConfig, ComponentSpec, MapSpec, MpcSection, PlannerConfig, ScenarioConfig, SolverSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Warm,
    Cold,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Warm => "warm",
            Mode::Cold => "cold",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warm" => Ok(Mode::Warm),
            "cold" => Ok(Mode::Cold),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected warm or cold)"))),
        }
    }
}

/// A scenario with its map materialized.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    /// Cell masses used for EM and the collected-mass metric. Gaussian maps
    /// are sampled at cell centers.
    pub grid: GridMap<f64>,
    pub field: RewardField<f64>,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl LoadedScenario {
    /// Builds the map; relative grid paths resolve against `base_dir`.
    pub fn from_config(config: ScenarioConfig, base_dir: &Path) -> Result<Self> {
        config.validate()?;
        let (grid, field) = match &config.map {
            MapSpec::Grid { file } => {
                let path = if file.is_absolute() { file.clone() } else { base_dir.join(file) };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read map {}: {e}", path.display())))?;
                let grid = GridMap::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let field = build_spline_field(&grid).map_err(|e| e.in_stage(Stage::Map))?;
                (grid, field)
            }
            MapSpec::Gaussian {
                width_m,
                height_m,
                cell_size_m,
                components,
            } => {
                let comps: Vec<WeightedGaussian<f64>> = components.iter().copied().map(Into::into).collect();
                let domain = Rect::new(Vec2::zero(), Vec2::new(*width_m, *height_m));
                let field = build_gaussian_field(&comps, domain).map_err(|e| e.in_stage(Stage::Map))?;
                let grid = GridMap::from_fn(*width_m, *height_m, *cell_size_m, |p| field.eval_extended(p).0)
                    .map_err(|e| e.in_stage(Stage::Map))?;
                (grid, field)
            }
        };
        let x0 = config.x0();
        if !field.domain().contains(x0.pos) {
            return Err(Error::Config(format!(
                "initial position ({}, {}) lies outside the map",
                x0.pos.x, x0.pos.y
            )));
        }
        Ok(Self {
            config,
            grid,
            field,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// Reads a scenario file and its map.
    pub fn load(path: &Path) -> Result<Self> {
        let config = ScenarioConfig::load(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_config(config, base)
    }

    /// Configured output directory, if any, resolved against [`Self::base_dir`].
    pub fn output_dir(&self) -> Option<PathBuf> {
        self.config.output_dir.as_ref().map(|d| self.base_dir.join(d))
    }

    pub fn mpc_config(&self) -> MpcConfig<f64> {
        self.config.mpc_config(self.field.domain())
    }
}

/// Key points of `scenario` for `n` components keeping `m`.
pub fn key_points(scenario: &LoadedScenario, n: usize, m: usize) -> Result<KeyPointSet<f64>> {
    let p = &scenario.config.planner;
    let mut opts = EmOptions::for_cell_size(n, p.seed, scenario.grid.cell_size_m());
    opts.max_iter = p.em_max_iter;
    opts.tol = p.em_tol;
    if let Some(s) = p.min_std {
        opts.min_std = s;
    }
    let points = grid_mass_points(&scenario.grid)?;
    let model = fit_gmm(&points, &opts)?;
    select_key_points(&model, m, &scenario.field)
}

/// Per-stage wall times in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub gmm: f64,
    pub tsp: f64,
    pub mpc: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    /// First receding-horizon solve.
    pub first_solve: f64,
    pub input_cost: f64,
    pub reward_sum: f64,
    pub slack_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub steps: usize,
    pub seed: u64,
    pub mode: Mode,
    pub times: StageTimes,
    pub objective: ObjectiveSummary,
    pub collected_mass: f64,
    pub total_mass: f64,
    /// Key points as `[x, y]`, empty in cold mode.
    pub keypoints: Vec<[f64; 2]>,
    /// Visit order over `x0` (node 0) and the key points.
    pub tour: Vec<usize>,
    pub tour_heuristic: bool,
    /// Solves that hit an iteration cap.
    pub unconverged_solves: usize,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub keypoints: Option<KeyPointSet<f64>>,
    pub tour: Option<Tour<f64>>,
    pub guess: Option<GuessTrajectory<f64>>,
    pub closed_loop: ClosedLoopResult<f64>,
}

impl RunOutput {
    /// Planning layers for drawing; `x0` is the start position.
    pub fn overlays(&self, x0: Vec2<f64>) -> Overlays {
        let keypoints = self.keypoints.as_ref().map(|k| k.points.clone()).unwrap_or_default();
        Overlays {
            tour: self.tour.as_ref().map(|t| tour_polyline(x0, &keypoints, &t.order)).unwrap_or_default(),
            guess: self.guess.as_ref().map(|g| g.states.iter().map(|s| s.pos).collect()).unwrap_or_default(),
            executed: self.closed_loop.positions(),
            keypoints,
            x0: Some(x0),
        }
    }

    /// Executed trajectory as CSV bytes.
    pub fn trajectory_csv(&self, field: &RewardField<f64>) -> Result<Vec<u8>> {
        let cl = &self.closed_loop;
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &cl.states, &cl.inputs, &cl.slacks, field)?;
        Ok(out)
    }
}

/// Open tour polyline: `x0`, then the key points in visit order (node `i` is `points[i - 1]`).
pub fn tour_polyline(x0: Vec2<f64>, points: &[Vec2<f64>], order: &[usize]) -> Vec<Vec2<f64>> {
    std::iter::once(x0)
        .chain(order.iter().filter(|&&i| i != 0).map(|&i| points[i - 1]))
        .collect()
}

/// Runs the full pipeline. Cold mode skips key points and the tour and
/// starts the first solve from rest.
pub fn run_scenario(scenario: &LoadedScenario, mode: Mode) -> Result<RunOutput> {
    let cfg = &scenario.config;
    let mpc = scenario.mpc_config();
    let x0: State<f64> = cfg.x0();
    let started = Instant::now();
    let mut times = StageTimes::default();

    let (keypoints, tour, guess) = match mode {
        Mode::Cold => (None, None, None),
        Mode::Warm => {
            let t = Instant::now();
            let kp = key_points(scenario, cfg.planner.n, cfg.planner.m).map_err(|e| e.in_stage(Stage::Gmm))?;
            times.gmm = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let matrix = build_cost_matrix(x0.pos, &kp);
            let tour = solve_tsp(&matrix);
            let mut nodes = Vec::with_capacity(kp.m() + 1);
            nodes.push(x0.pos);
            nodes.extend_from_slice(&kp.points);
            let guess = discretize_tour(&tour, &nodes, &x0, mpc.horizon, mpc.dt(), mpc.v_max, mpc.u_max);
            times.tsp = t.elapsed().as_secs_f64();
            (Some(kp), Some(tour), Some(guess))
        }
    };

    let t = Instant::now();
    let policy = match &guess {
        Some(g) => WarmstartPolicy::Guess(g),
        None => WarmstartPolicy::Cold,
    };
    let result =
        closed_loop(&scenario.field, &x0, &mpc, cfg.mpc.steps, policy).map_err(|e| e.in_stage(Stage::Mpc))?;
    times.mpc = t.elapsed().as_secs_f64();
    times.total = started.elapsed().as_secs_f64();

    let first = &result.first_plan.objective;
    let report = RunReport {
        scenario: cfg.name.clone(),
        n: cfg.planner.n,
        horizon: cfg.mpc.horizon,
        steps: cfg.mpc.steps,
        seed: cfg.planner.seed,
        mode,
        times,
        objective: ObjectiveSummary {
            first_solve: first.total,
            input_cost: first.input_cost,
            reward_sum: first.reward_sum,
            slack_sum: first.slack_sum,
        },
        collected_mass: collected_mass(&scenario.grid, &result.positions(), mpc.visibility),
        total_mass: scenario.grid.total_mass(),
        keypoints: keypoints.as_ref().map(|k| k.points.iter().map(|p| [p.x, p.y]).collect()).unwrap_or_default(),
        tour: tour.as_ref().map(|t| t.order.clone()).unwrap_or_default(),
        tour_heuristic: tour.as_ref().is_some_and(|t| t.heuristic),
        unconverged_solves: result
            .stats
            .iter()
            .filter(|s| s.status != crate::mpc::SolveStatus::Converged)
            .count(),
        files: Vec::new(),
    };
    Ok(RunOutput {
        report,
        keypoints,
        tour,
        guess,
        closed_loop: result,
    })
}

/// Mass of the cells whose center lies within `visibility` of some position,
/// each cell counted once.
pub fn collected_mass(map: &GridMap<f64>, positions: &[Vec2<f64>], visibility: f64) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let v2 = visibility * visibility;
    let h = map.cell_size_m();
    let reach = (visibility / h).ceil() as isize + 1;
    let mut seen = vec![false; map.nx() * map.ny()];
    let mut mass = 0.0;
    for p in positions {
        // Cells whose center could be within reach of p.
        let ci = (p.x / h - 0.5).floor() as isize;
        let cj = (p.y / h - 0.5).floor() as isize;
        let i_lo = (ci - reach).max(0);
        let i_hi = (ci + reach + 1).min(map.nx() as isize - 1);
        let j_lo = (cj - reach).max(0);
        let j_hi = (cj + reach + 1).min(map.ny() as isize - 1);
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let (i, j) = (i as usize, j as usize);
                let idx = j * map.nx() + i;
                if !seen[idx] && map.cell_center(i, j).dist_sq(*p) <= v2 {
                    seen[idx] = true;
                    mass += map.value(i, j);
                }
            }
        }
    }
    mass
}

/// Fixed-width table ordered by scenario, then horizon, then mode (warm first).
pub fn make_report_table(reports: &[RunReport]) -> String {
    let mut rows: Vec<&RunReport> = reports.iter().collect();
    rows.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.horizon.cmp(&b.horizon))
            .then(a.n.cmp(&b.n))
            .then((a.mode == Mode::Cold).cmp(&(b.mode == Mode::Cold)))
    });
    let header = ["scenario", "n", "N", "GMM", "TSP", "MPC", "Total", "collected_mass", "mode"];
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.scenario.clone(),
                r.n.to_string(),
                r.horizon.to_string(),
                format!("{:.3}", r.times.gmm),
                format!("{:.3}", r.times.tsp),
                format!("{:.3}", r.times.mpc),
                format!("{:.3}", r.times.total),
                format!("{:.3}", r.collected_mass),
                r.mode.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 || i == 8 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    out
}
