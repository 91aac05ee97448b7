//! `wcpp` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 failure inside a
//! planning stage (the stage is named on stderr).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wcpp::render::{render_svg, Overlays, RenderSpec};
use wcpp::sim::{bundled, key_points, make_report_table, run_scenario, tour_polyline, LoadedScenario, Mode, RunReport};
use wcpp::tsp::{build_cost_matrix, solve_tsp};
use wcpp::warmstart::discretize_tour;
use wcpp::{Error, Stage};

const SEED_ENV: &str = "WCPP_SEED";

#[derive(Debug, Parser)]
#[command(name = "wcpp", version, about = "Weighted coverage path planning with MPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the trajectory files plus a JSON report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "warm")]
        mode: Mode,
        /// Overrides WCPP_SEED and the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the MPC horizon.
        #[arg(long)]
        horizon: Option<usize>,
        /// Overrides the number of closed-loop steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fit the mixture and list the selected key points over the map.
    Keypoints {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Key points plus the tour through them and its discretized guess.
    Tour {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate report files.
    Compare {
        #[arg(long, num_args = 0..)]
        reports: Vec<PathBuf>,
    },
    /// Write the bundled scenario files into a directory.
    Bundle {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.stage() {
            Some(Stage::Gmm | Stage::Tsp | Stage::Mpc) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            mode,
            seed,
            out,
            horizon,
            steps,
        } => cmd_run(&scenario, mode, seed, out, horizon, steps),
        Command::Keypoints {
            scenario,
            n,
            m,
            seed,
            out,
        } => cmd_keypoints(&scenario, n, m, seed, out, false),
        Command::Tour {
            scenario,
            n,
            m,
            seed,
            out,
        } => cmd_keypoints(&scenario, n, m, seed, out, true),
        Command::Compare { reports } => cmd_compare(&reports),
        Command::Bundle { out } => cmd_bundle(&out),
    }
}

/// `--seed`, then `WCPP_SEED`, then the scenario file.
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<LoadedScenario, Failure> {
    let mut scenario = LoadedScenario::load(path)?;
    if let Some(s) = resolve_seed(seed)? {
        scenario.config.planner.seed = s;
    }
    Ok(scenario)
}

fn out_dir(flag: Option<PathBuf>, scenario: &LoadedScenario) -> Result<PathBuf, Failure> {
    let dir = flag.or_else(|| scenario.output_dir()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn cmd_run(
    path: &Path,
    mode: Mode,
    seed: Option<u64>,
    out: Option<PathBuf>,
    horizon: Option<usize>,
    steps: Option<usize>,
) -> Result<(), Failure> {
    let mut scenario = load(path, seed)?;
    if let Some(n) = horizon {
        scenario.config.mpc.horizon = n;
    }
    if let Some(s) = steps {
        scenario.config.mpc.steps = s;
    }
    scenario.config.validate()?;
    let dir = out_dir(out, &scenario)?;

    let mut name = stem(path);
    if horizon.is_some() {
        name.push_str(&format!("-N{}", scenario.config.mpc.horizon));
    }
    if mode == Mode::Cold {
        name.push_str("-cold");
    }
    let csv_path = dir.join(format!("{name}.trajectory.csv"));
    let svg_path = dir.join(format!("{name}.svg"));
    let report_path = dir.join(format!("{name}.report"));

    let mut output = run_scenario(&scenario, mode)?;

    write(&csv_path, output.trajectory_csv(&scenario.field)?)?;
    let overlays = output.overlays(scenario.config.x0().pos);
    let svg = render_svg(&scenario.grid, &overlays, &RenderSpec::default());
    write(&svg_path, svg)?;
    output.report.files = vec![csv_path.clone(), svg_path.clone(), report_path.clone()];
    write(&report_path, output.report.to_json())?;

    print!("{}", make_report_table(std::slice::from_ref(&output.report)));
    for f in &output.report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_keypoints(
    path: &Path,
    n: Option<usize>,
    m: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    with_tour: bool,
) -> Result<(), Failure> {
    let scenario = load(path, seed)?;
    let planner = &scenario.config.planner;
    let n = n.unwrap_or(planner.n);
    let m = m.unwrap_or(planner.m.min(n));
    if n == 0 || m == 0 || m > n {
        return Err(usage(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    let dir = out_dir(out, &scenario)?;
    let kp = key_points(&scenario, n, m).map_err(|e| e.in_stage(Stage::Gmm))?;

    println!("# {} key points (n = {n})", kp.m());
    println!("{:>3}  {:>12}  {:>12}  {:>10}", "k", "x", "y", "reward");
    for (k, (p, s)) in kp.points.iter().zip(&kp.scores).enumerate() {
        println!("{k:>3}  {:>12.4}  {:>12.4}  {:>10.6}", p.x, p.y, s);
    }

    let x0 = scenario.config.x0();
    let mut overlays = Overlays {
        keypoints: kp.points.clone(),
        x0: Some(x0.pos),
        ..Overlays::default()
    };
    let name = stem(path);
    let svg_path = if with_tour {
        let tour = solve_tsp(&build_cost_matrix(x0.pos, &kp));
        let mpc = scenario.mpc_config();
        let mut nodes = vec![x0.pos];
        nodes.extend_from_slice(&kp.points);
        let guess = discretize_tour(&tour, &nodes, &x0, mpc.horizon, mpc.dt(), mpc.v_max, mpc.u_max);
        println!(
            "# tour ({}): {:?}",
            if tour.heuristic { "heuristic" } else { "exact" },
            tour.order
        );
        println!("# length {:.4} m", tour.length);
        overlays.tour = tour_polyline(x0.pos, &kp.points, &tour.order);
        overlays.guess = guess.states.iter().map(|s| s.pos).collect();
        dir.join(format!("{name}.tour.svg"))
    } else {
        dir.join(format!("{name}.keypoints.svg"))
    };
    write(&svg_path, render_svg(&scenario.grid, &overlays, &RenderSpec::default()))?;
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_compare(paths: &[PathBuf]) -> Result<(), Failure> {
    if paths.is_empty() {
        return Err(usage("compare needs at least one report: --reports <FILE>..."));
    }
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
        reports.push(RunReport::from_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?);
    }
    print!("{}", make_report_table(&reports));
    Ok(())
}

fn cmd_bundle(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for (file, key) in [("s1.grid", "s1"), ("s2.grid", "s2a")] {
        let grid = bundled::grid_for(key).expect("bundled grid");
        let path = dir.join(file);
        write(&path, grid.to_text())?;
        println!("wrote {}", path.display());
    }
    for name in bundled::SCENARIOS {
        let cfg = bundled::scenario(name).expect("bundled scenario");
        let path = dir.join(format!("{name}.cfg"));
        write(&path, cfg.to_toml())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
