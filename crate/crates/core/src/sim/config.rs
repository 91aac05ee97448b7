//! Scenario files (TOML).
//!
//! ```toml
//! name = "s1"
//! output_dir = "out"          # optional
//!
//! [map]
//! kind = "grid"               # or "gaussian"
//! file = "s1.grid"            # relative to the scenario file
//!
//! [agent]
//! x0 = [60.0, 60.0, 0.0, 0.0] # px, py, vx, vy
//!
//! [planner]                   # all optional
//! n = 20
//! m = 10
//! seed = 1
//!
//! [mpc]                       # all optional
//! horizon = 50
//! steps = 50
//! ```
//!
//! A Gaussian map lists `width_m`, `height_m`, `cell_size_m` (raster used for
//! metrics and EM) and `components = [{ weight, mean = [x, y], cov = [xx, xy, yy] }]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Sym2, Vec2};
use crate::mpc::{DynamicsModel, MpcConfig, SolverOptions};
use crate::reward::{Rect, WeightedGaussian};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Where run artifacts go; relative paths resolve against the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub map: MapSpec,
    pub agent: AgentConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub mpc: MpcSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Grid {
        file: PathBuf,
    },
    Gaussian {
        width_m: f64,
        height_m: f64,
        cell_size_m: f64,
        components: Vec<ComponentSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: [f64; 2],
    /// `[xx, xy, yy]`
    pub cov: [f64; 3],
}

impl From<WeightedGaussian<f64>> for ComponentSpec {
    fn from(g: WeightedGaussian<f64>) -> Self {
        Self {
            weight: g.weight,
            mean: [g.mean.x, g.mean.y],
            cov: [g.cov.xx, g.cov.xy, g.cov.yy],
        }
    }
}

impl From<ComponentSpec> for WeightedGaussian<f64> {
    fn from(c: ComponentSpec) -> Self {
        Self {
            weight: c.weight,
            mean: Vec2::new(c.mean[0], c.mean[1]),
            cov: Sym2::new(c.cov[0], c.cov[1], c.cov[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    /// `[px, py, vx, vy]`
    pub x0: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Mixture components.
    pub n: usize,
    /// Key points kept.
    pub m: usize,
    pub seed: u64,
    pub em_max_iter: usize,
    pub em_tol: f64,
    /// Covariance standard-deviation floor; half a cell when absent.
    pub min_std: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m: 10,
            seed: 0,
            em_max_iter: 200,
            em_tol: 1e-7,
            min_std: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub horizon: usize,
    /// Closed-loop steps executed.
    pub steps: usize,
    pub dt: f64,
    pub v_max: f64,
    pub u_max: f64,
    pub visibility: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `[xx, xy, yy]`
    pub input_cost: [f64; 3],
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            horizon: 50,
            steps: 50,
            dt: 1.0,
            v_max: 20.0,
            u_max: 5.0,
            visibility: 15.0,
            c1: 1.0,
            c2: 1000.0,
            c3: 100.0,
            input_cost: [1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iter: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub memory: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::<f64>::default();
        Self {
            max_iter: d.max_iter,
            max_outer: d.max_outer,
            max_inner: d.max_inner,
            kkt_tol: d.kkt_tol,
            feas_tol: d.feas_tol,
            initial_penalty: d.initial_penalty,
            penalty_growth: d.penalty_growth,
            memory: d.memory,
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn x0(&self) -> crate::mpc::State<f64> {
        let a = self.agent.x0;
        crate::mpc::State::new(a[0], a[1], a[2], a[3])
    }

    pub fn mpc_config(&self, domain: Rect<f64>) -> MpcConfig<f64> {
        let m = &self.mpc;
        let s = &self.solver;
        MpcConfig {
            horizon: m.horizon,
            c1: m.c1,
            c2: m.c2,
            c3: m.c3,
            input_cost: Sym2::new(m.input_cost[0], m.input_cost[1], m.input_cost[2]),
            visibility: m.visibility,
            domain,
            v_max: m.v_max,
            u_max: m.u_max,
            dynamics: DynamicsModel::new(m.dt),
            solver: SolverOptions {
                max_iter: s.max_iter,
                max_outer: s.max_outer,
                max_inner: s.max_inner,
                kkt_tol: s.kkt_tol,
                feas_tol: s.feas_tol,
                initial_penalty: s.initial_penalty,
                penalty_growth: s.penalty_growth,
                memory: s.memory,
            },
        }
    }

    /// Checks everything that does not need the map itself.
    pub fn validate(&self) -> Result<()> {
        let p = &self.planner;
        if p.n == 0 || p.m == 0 || p.m > p.n {
            return Err(Error::Config(format!("need 1 <= m <= n, got n = {}, m = {}", p.n, p.m)));
        }
        if self.mpc.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.mpc.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        self.mpc_config(Rect::new(Vec2::zero(), Vec2::new(1.0, 1.0)))
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}
