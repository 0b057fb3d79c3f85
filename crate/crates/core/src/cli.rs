//! Command-line front end: model I/O, solver orchestration, built-in
//! example reproduction, and result emission.
//!
//! Exit codes: 0 ok, 2 validation/mode error, 3 I/O error, 4 solver
//! failure, 5 stability refusal. Every command writes a `manifest.json`
//! next to its outputs recording the command, options, outputs, seeds,
//! and wall clock. Numeric tables print with six decimals.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::builtin::{
    example_model, reference_ex1_closed_nash, reference_ex1_open_rep, reference_ex2_zero_sum,
    reference_ex3_zero_sum, ReferenceSolution,
};
use crate::care::{
    care_residuals, solve_closed_nash_cares, solve_open_rep_cares, solve_zero_sum_care,
    CareSolution, SolverOpts,
};
use crate::io;
use crate::model::{validate, GameKind, GameModel, RegimeFamily};
use crate::sim::{simulate_closed_loop, SimConfig, SimError};
use crate::stability::{
    check_convexity_concavity, check_convexity_sufficient, dissipativity_check, is_stabilizer,
    lyapunov_spectral_check, search_epsilon,
};
use crate::synthesis::{
    closed_nash_strategy, open_rep_strategy, value_homogeneous, zero_sum_strategy, StrategyPair,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_STABILITY: i32 = 5;

#[derive(Parser)]
#[command(
    name = "regime-riccati",
    version,
    about = "Coupled-Riccati solvers for two-player LQ stochastic differential games with Markovian regime switching"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file and print the report.
    Validate { model: PathBuf },
    /// Solve the CAREs of a model in the given mode.
    Solve {
        model: PathBuf,
        #[arg(long, value_parser = ["open-rep", "closed-nash", "zero-sum"])]
        mode: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the full pipeline on a built-in example and diff the solution
    /// against the bundled reference tables.
    Reproduce {
        /// Example id: 1, 2 or 3.
        example: u8,
        #[arg(long, default_value_t = 2000)]
        mc_paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        mc_dt: f64,
        #[arg(long, default_value_t = 2024)]
        mc_seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo simulation of a closed loop from a strategy file.
    Simulate {
        model: PathBuf,
        strategy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        antithetic: bool,
        /// Initial state, comma separated (default: 1,0,...,0).
        #[arg(long)]
        x0: Option<String>,
        /// Initial regime, 1-based.
        #[arg(long, default_value_t = 1)]
        i0: usize,
        /// Simulate even if the loop fails the stability certificate.
        #[arg(long)]
        force: bool,
        /// Write per-path trajectories as CSV.
        #[arg(long)]
        dump_trajectories: Option<PathBuf>,
        /// Solution file; enables the stationarity-residual certificate.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print stability verdicts for a model (open loop, or a gain file).
    Stability {
        model: PathBuf,
        /// Strategy file whose gain closes the loop (default: open loop).
        #[arg(long)]
        theta: Option<PathBuf>,
    },
    /// Write a built-in example model as a JSON file.
    Export {
        /// Example id: 1, 2 or 3.
        example: u8,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct OutArgs {
    /// Directory for result and manifest files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage errors are process errors.
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Validate { model } => cmd_validate(&model),
        Command::Solve {
            model,
            mode,
            tol,
            max_iter,
            out,
        } => cmd_solve(&model, &mode, tol, max_iter, &out.out_dir),
        Command::Reproduce {
            example,
            mc_paths,
            mc_dt,
            mc_seed,
            out,
        } => cmd_reproduce(example, mc_paths, mc_dt, mc_seed, &out.out_dir),
        Command::Simulate {
            model,
            strategy,
            paths,
            dt,
            horizon,
            seed,
            antithetic,
            x0,
            i0,
            force,
            dump_trajectories,
            solution,
            out,
        } => cmd_simulate(SimulateArgs {
            model,
            strategy,
            paths,
            dt,
            horizon,
            seed,
            antithetic,
            x0,
            i0,
            force,
            dump_trajectories,
            solution,
            out_dir: out.out_dir,
        }),
        Command::Stability { model, theta } => cmd_stability(&model, theta.as_deref()),
        Command::Export { example, out } => cmd_export(example, &out),
    }
}

fn cmd_export(example: u8, out: &Path) -> i32 {
    if !(1..=3).contains(&example) {
        eprintln!("error: example must be 1, 2 or 3");
        return EXIT_VALIDATION;
    }
    let doc = io::model_to_json(&example_model(example));
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    if let Err(e) = std::fs::write(out, text) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return EXIT_IO;
    }
    println!("wrote {}", out.display());
    EXIT_OK
}

fn read_file(path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn load_model(path: &Path) -> Result<GameModel, i32> {
    let text = read_file(path)?;
    let model = io::model_from_json(&text).map_err(|e| {
        eprintln!("error: cannot parse {}: {e}", path.display());
        EXIT_IO
    })?;
    Ok(model)
}

fn load_valid_model(path: &Path) -> Result<GameModel, i32> {
    let model = load_model(path)?;
    let report = validate(&model);
    if !report.pass() {
        eprintln!("model failed validation:\n{report}");
        return Err(EXIT_VALIDATION);
    }
    Ok(model.validated().expect("validated"))
}

fn write_output(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, i32> {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return Err(EXIT_IO);
    }
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable");
    if let Err(e) = std::fs::write(&path, text) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return Err(EXIT_IO);
    }
    Ok(path)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    input: &str,
    options: Value,
    outputs: &[PathBuf],
    seeds: &[u64],
    started: Instant,
) {
    let manifest = json!({
        "command": command,
        "input": input,
        "options": options,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "seeds": seeds,
        "wallClockSeconds": started.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
        "timestampUnixMs": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    });
    let _ = write_output(dir, "manifest.json", &manifest);
}

fn cmd_validate(path: &Path) -> i32 {
    let model = match load_model(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let report = validate(&model);
    println!(
        "{}",
        serde_json::to_string_pretty(&io::validation_to_json(&report)).unwrap()
    );
    if report.pass() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

fn solve_in_mode(
    model: &GameModel,
    mode: &str,
    opts: &SolverOpts,
) -> Result<(CareSolution, StrategyPair), String> {
    match mode {
        "open-rep" => {
            let sol = solve_open_rep_cares(model, opts).map_err(|e| e.to_string())?;
            let strategy = open_rep_strategy(model, &sol).map_err(|e| e.to_string())?;
            Ok((CareSolution::OpenRep(sol), strategy))
        }
        "closed-nash" => {
            let sol = solve_closed_nash_cares(model, opts).map_err(|e| e.to_string())?;
            let strategy = closed_nash_strategy(model, &sol).map_err(|e| e.to_string())?;
            Ok((CareSolution::ClosedNash(sol), strategy))
        }
        "zero-sum" => {
            let sol = solve_zero_sum_care(model, opts).map_err(|e| e.to_string())?;
            let strategy = zero_sum_strategy(model, &sol, None).map_err(|e| e.to_string())?;
            Ok((CareSolution::ZeroSum(sol), strategy))
        }
        other => Err(format!("unknown mode {other}")),
    }
}

fn mode_matches_kind(mode: &str, kind: GameKind) -> bool {
    match mode {
        "zero-sum" => kind == GameKind::ZeroSum,
        _ => kind == GameKind::NonZeroSum,
    }
}

fn cmd_solve(path: &Path, mode: &str, tol: f64, max_iter: usize, out_dir: &Path) -> i32 {
    let started = Instant::now();
    let model = match load_valid_model(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    if !mode_matches_kind(mode, model.kind) {
        eprintln!(
            "error: mode {mode} does not match the model kind {:?}",
            model.kind
        );
        return EXIT_VALIDATION;
    }
    let opts = SolverOpts {
        tol,
        max_iter,
        initial_gain: None,
    };
    let (solution, strategy) = match solve_in_mode(&model, mode, &opts) {
        Ok(pair) => pair,
        Err(msg) => {
            eprintln!("solver failure: {msg}");
            return EXIT_SOLVER;
        }
    };
    let residuals = care_residuals(&model, &solution);
    let stab = match is_stabilizer(&model.dynamics, &model.generator, &strategy.theta) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("solver failure: {e}");
            return EXIT_SOLVER;
        }
    };
    let doc = io::solution_to_json(&solution, &residuals, Some(&strategy), Some(&stab));
    let out_path = match write_output(out_dir, "solution.json", &doc) {
        Ok(p) => p,
        Err(code) => return code,
    };
    println!(
        "mode {mode}: residual {:.3e} after {} iterations (certificate max {:.3e})",
        solution.residual(),
        solution.iterations(),
        residuals.max
    );
    println!("wrote {}", out_path.display());
    write_manifest(
        out_dir,
        "solve",
        &path.display().to_string(),
        json!({"mode": mode, "tol": tol, "maxIter": max_iter}),
        &[out_path],
        &[],
        started,
    );
    let ok = residuals.max <= tol && stab.is_stabilizer();
    if ok {
        EXIT_OK
    } else {
        EXIT_SOLVER
    }
}

struct SimulateArgs {
    model: PathBuf,
    strategy: PathBuf,
    paths: usize,
    dt: f64,
    horizon: f64,
    seed: u64,
    antithetic: bool,
    x0: Option<String>,
    i0: usize,
    force: bool,
    dump_trajectories: Option<PathBuf>,
    solution: Option<PathBuf>,
    out_dir: PathBuf,
}

fn parse_x0(text: Option<&str>, n: usize) -> Result<DVector<f64>, i32> {
    match text {
        None => {
            let mut x = DVector::zeros(n);
            x[0] = 1.0;
            Ok(x)
        }
        Some(list) => {
            let parts: Result<Vec<f64>, _> =
                list.split(',').map(|p| p.trim().parse::<f64>()).collect();
            match parts {
                Ok(v) if v.len() == n => Ok(DVector::from_column_slice(&v)),
                Ok(v) => {
                    eprintln!("error: x0 has {} entries, expected {n}", v.len());
                    Err(EXIT_VALIDATION)
                }
                Err(e) => {
                    eprintln!("error: cannot parse x0: {e}");
                    Err(EXIT_VALIDATION)
                }
            }
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> i32 {
    let started = Instant::now();
    let model = match load_valid_model(&args.model) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let strategy_text = match read_file(&args.strategy) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let strategy = match io::strategy_from_json(&strategy_text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot parse {}: {e}", args.strategy.display());
            return EXIT_IO;
        }
    };
    let x0 = match parse_x0(args.x0.as_deref(), model.state_dim()) {
        Ok(x) => x,
        Err(code) => return code,
    };
    if args.i0 == 0 || args.i0 > model.regime_count() {
        eprintln!(
            "error: i0 = {} out of range 1..={}",
            args.i0,
            model.regime_count()
        );
        return EXIT_VALIDATION;
    }
    let i0 = args.i0 - 1;
    let cfg = SimConfig {
        dt: args.dt,
        horizon: args.horizon,
        paths: args.paths,
        seed: args.seed,
        antithetic: args.antithetic,
    };
    let mut report = match simulate_closed_loop(&model, &strategy, &x0, i0, cfg, args.force) {
        Ok(r) => r,
        Err(SimError::NotStabilizing { abscissa }) => {
            eprintln!(
                "refusing to simulate: closed loop is certified unstable \
                 (spectral abscissa {abscissa:.6}); pass --force to override"
            );
            return EXIT_STABILITY;
        }
        Err(e) => {
            eprintln!("simulation error: {e}");
            return EXIT_VALIDATION;
        }
    };
    if let Some(sol_path) = &args.solution {
        match read_file(sol_path).map(|text| parse_solution_for_certificate(&text)) {
            Ok(Ok(solution)) => {
                match crate::sim::check_stationarity_residual(
                    &model,
                    &solution,
                    &strategy,
                    None,
                    &x0,
                    i0,
                    SimConfig {
                        paths: cfg.paths.min(64),
                        ..cfg
                    },
                ) {
                    Ok(res) => report.stationarity_residual = Some(res),
                    Err(e) => {
                        eprintln!("stationarity check failed: {e}");
                        return EXIT_SOLVER;
                    }
                }
            }
            Ok(Err(e)) => {
                eprintln!("error: cannot parse {}: {e}", sol_path.display());
                return EXIT_IO;
            }
            Err(code) => return code,
        }
    }
    let mut outputs = Vec::new();
    if let Some(dump_path) = &args.dump_trajectories {
        let mut file = match std::fs::File::create(dump_path) {
            Ok(f) => std::io::BufWriter::new(f),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", dump_path.display());
                return EXIT_IO;
            }
        };
        if let Err(e) =
            crate::sim::dump_trajectories(&model, &strategy, &x0, i0, cfg, &mut file)
        {
            eprintln!("error: trajectory dump failed: {e}");
            return EXIT_IO;
        }
        outputs.push(dump_path.clone());
    }
    let doc = io::sim_report_to_json(&report);
    match write_output(&args.out_dir, "report.json", &doc) {
        Ok(p) => outputs.push(p),
        Err(code) => return code,
    }
    println!(
        "cost J1 = {:.6} ± {:.6}, J2 = {:.6} ± {:.6}",
        report.cost[0].mean, report.cost[0].std_error, report.cost[1].mean, report.cost[1].std_error
    );
    println!(
        "l2Norm = {:.6} ± {:.6}, tailMass = {:.6e}",
        report.l2_norm.mean, report.l2_norm.std_error, report.tail_mass.mean
    );
    if let Some(res) = report.stationarity_residual {
        println!("stationarityResidual = {res:.3e}");
    }
    write_manifest(
        &args.out_dir,
        "simulate",
        &format!("{} + {}", args.model.display(), args.strategy.display()),
        json!({
            "paths": args.paths, "dt": args.dt, "T": args.horizon,
            "antithetic": args.antithetic, "i0": args.i0, "force": args.force,
        }),
        &outputs,
        &[args.seed],
        started,
    );
    EXIT_OK
}

/// Rebuild a `CareSolution` from a solution document (only the families
/// the stationarity certificate needs).
fn parse_solution_for_certificate(text: &str) -> Result<CareSolution, io::IoError> {
    io::solution_from_json(text)
}

fn cmd_stability(path: &Path, theta_file: Option<&Path>) -> i32 {
    let model = match load_valid_model(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let value = match theta_file {
        None => {
            let diss = dissipativity_check(&model.dynamics.a, &model.dynamics.c);
            let spectral = match lyapunov_spectral_check(
                &model.dynamics.a,
                &model.dynamics.c,
                &model.generator,
            ) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("stability check failed: {e}");
                    return EXIT_SOLVER;
                }
            };
            json!({
                "loop": "open",
                "dissipativity": io::verdict_to_json(&diss),
                "spectral": io::verdict_to_json(&spectral),
            })
        }
        Some(tpath) => {
            let text = match read_file(tpath) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let strategy = match io::strategy_from_json(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: cannot parse {}: {e}", tpath.display());
                    return EXIT_IO;
                }
            };
            match is_stabilizer(&model.dynamics, &model.generator, &strategy.theta) {
                Ok(check) => json!({
                    "loop": "closed",
                    "stabilizer": io::stabilizer_to_json(&check),
                }),
                Err(e) => {
                    eprintln!("stability check failed: {e}");
                    return EXIT_VALIDATION;
                }
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&value).unwrap());
    EXIT_OK
}

// ---------------------------------------------------------------------
// Reproduce pipeline
// ---------------------------------------------------------------------

/// One named check of the reproduce pipeline.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Structured outcome of the reproduce pipeline for one example.
#[derive(Clone, Debug)]
pub struct ReproduceOutcome {
    pub example: u8,
    pub stages: Vec<Stage>,
    /// Max entrywise |difference| against the reference tables.
    pub max_table_diff: f64,
    /// Max recomputed equation/constraint residual across solves.
    pub max_residual: f64,
    pub ok: bool,
}

impl ReproduceOutcome {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

fn diff_stage(stages: &mut Vec<Stage>, name: &str, computed: &RegimeFamily, reference: &RegimeFamily) -> f64 {
    let diff = computed.max_abs_diff(reference);
    stages.push(Stage {
        name: format!("diff {name}"),
        pass: diff <= 1e-3,
        detail: format!("max |Δ| = {diff:.6}"),
    });
    diff
}

type McTarget = (String, StrategyPair, Vec<(usize, f64)>);

/// Monte Carlo budget of the reproduce cross-check.
#[derive(Clone, Copy, Debug)]
pub struct McBudget {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub horizon: f64,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget {
            paths: 2000,
            dt: 1e-3,
            seed: 2024,
            horizon: 10.0,
        }
    }
}

/// Run the full pipeline for a built-in example: stability checks,
/// convexity checks, CARE solves, gain extraction, stabilizer
/// verification, reference-table diff, and a Monte Carlo value check.
pub fn reproduce(example: u8, mc: McBudget) -> ReproduceOutcome {
    let model = example_model(example);
    let mut stages = Vec::new();
    let mut max_table_diff: f64 = 0.0;
    let mut max_residual: f64 = 0.0;

    // Open-loop stability of the base system.
    let diss = dissipativity_check(&model.dynamics.a, &model.dynamics.c);
    let spectral =
        lyapunov_spectral_check(&model.dynamics.a, &model.dynamics.c, &model.generator)
            .expect("desk-scale operator");
    stages.push(Stage {
        name: "open-loop stability".into(),
        pass: diss.stable && spectral.stable,
        detail: format!(
            "dissipativity {}, spectral {}",
            diss.stable, spectral.stable
        ),
    });

    // Convexity conditions.
    match example {
        1 => {
            let report = check_convexity_sufficient(&model);
            stages.push(Stage {
                name: "convexity condition".into(),
                pass: report.player1 && report.player2,
                detail: format!("player1 {}, player2 {}", report.player1, report.player2),
            });
        }
        2 => {
            let at_unit = check_convexity_concavity(&model, 1.0, 1.0)
                .map(|r| r.ok)
                .unwrap_or(false);
            let grid = search_epsilon(&model).ok().flatten();
            stages.push(Stage {
                name: "convexity-concavity condition".into(),
                pass: !at_unit && grid.is_none(),
                detail: format!(
                    "fails at ε=1 as expected: {}, grid search empty: {}",
                    !at_unit,
                    grid.is_none()
                ),
            });
        }
        _ => {
            let at_unit = check_convexity_concavity(&model, 1.0, 1.0)
                .map(|r| r.ok)
                .unwrap_or(false);
            stages.push(Stage {
                name: "convexity-concavity condition".into(),
                pass: at_unit,
                detail: format!("holds at ε₁ = ε₂ = 1: {at_unit}"),
            });
        }
    }

    let opts = SolverOpts::default();
    let mut gains: Vec<(String, RegimeFamily)> = Vec::new();
    // (loop name, strategy, per-player analytic values to cross-check)
    let mut mc_targets: Vec<McTarget> = Vec::new();

    match example {
        1 => {
            match solve_open_rep_cares(&model, &opts) {
                Ok(sol) => {
                    let reference = reference_ex1_open_rep();
                    max_table_diff = max_table_diff
                        .max(diff_stage(&mut stages, "open-rep P1", &sol.p1, &reference.p[0]))
                        .max(diff_stage(&mut stages, "open-rep P2", &sol.p2, &reference.p[1]))
                        .max(diff_stage(
                            &mut stages,
                            "open-rep Theta",
                            &sol.theta,
                            &reference.theta,
                        ));
                    let residuals = care_residuals(&model, &CareSolution::OpenRep(sol.clone()));
                    max_residual = max_residual.max(residuals.max);
                    match open_rep_strategy(&model, &sol) {
                        Ok(strategy) => gains.push(("open-rep".into(), strategy.theta.clone())),
                        Err(e) => stages.push(Stage {
                            name: "open-rep strategy".into(),
                            pass: false,
                            detail: e.to_string(),
                        }),
                    }
                }
                Err(e) => stages.push(Stage {
                    name: "open-rep solve".into(),
                    pass: false,
                    detail: e.to_string(),
                }),
            }
            match solve_closed_nash_cares(&model, &opts) {
                Ok(sol) => {
                    let reference = reference_ex1_closed_nash();
                    max_table_diff = max_table_diff
                        .max(diff_stage(&mut stages, "closed-nash P1", &sol.p1, &reference.p[0]))
                        .max(diff_stage(&mut stages, "closed-nash P2", &sol.p2, &reference.p[1]))
                        .max(diff_stage(
                            &mut stages,
                            "closed-nash Theta",
                            &sol.theta_full(),
                            &reference.theta,
                        ));
                    let residuals =
                        care_residuals(&model, &CareSolution::ClosedNash(sol.clone()));
                    max_residual = max_residual.max(residuals.max);
                    let sign_pass = sign_conditions_ex1(&model, &sol);
                    stages.push(Stage {
                        name: "closed-nash sign conditions".into(),
                        pass: sign_pass,
                        detail: "𝒩₁₁¹(P₁,i) ⪰ 0 and 𝒩₂₂²(P₂,i) ⪰ 0".into(),
                    });
                    match closed_nash_strategy(&model, &sol) {
                        Ok(strategy) => {
                            gains.push(("closed-nash".into(), strategy.theta.clone()));
                            let x0 = DVector::from_column_slice(&[1.0, 0.0]);
                            let targets = vec![
                                (1, value_homogeneous(&sol.p1, &x0, 0)),
                                (2, value_homogeneous(&sol.p2, &x0, 0)),
                            ];
                            mc_targets.push(("closed-nash".into(), strategy, targets));
                        }
                        Err(e) => stages.push(Stage {
                            name: "closed-nash strategy".into(),
                            pass: false,
                            detail: e.to_string(),
                        }),
                    }
                }
                Err(e) => stages.push(Stage {
                    name: "closed-nash solve".into(),
                    pass: false,
                    detail: e.to_string(),
                }),
            }
        }
        2 | 3 => {
            let reference: ReferenceSolution = if example == 2 {
                reference_ex2_zero_sum()
            } else {
                reference_ex3_zero_sum()
            };
            match solve_zero_sum_care(&model, &opts) {
                Ok(sol) => {
                    max_table_diff = max_table_diff
                        .max(diff_stage(&mut stages, "zero-sum P", &sol.p, &reference.p[0]))
                        .max(diff_stage(
                            &mut stages,
                            "zero-sum Theta",
                            &sol.theta,
                            &reference.theta,
                        ));
                    let residuals = care_residuals(&model, &CareSolution::ZeroSum(sol.clone()));
                    max_residual = max_residual.max(residuals.max);
                    stages.push(Stage {
                        name: "zero-sum sign conditions".into(),
                        pass: sol.sign_ok_n11 && sol.sign_ok_n22,
                        detail: format!(
                            "𝒩₁₁ ⪰ 0: {}, 𝒩₂₂ ⪯ 0: {}",
                            sol.sign_ok_n11, sol.sign_ok_n22
                        ),
                    });
                    match zero_sum_strategy(&model, &sol, None) {
                        Ok(strategy) => {
                            gains.push(("zero-sum".into(), strategy.theta.clone()));
                            let x0 = DVector::from_column_slice(&[1.0, 0.0]);
                            let targets = vec![(1, value_homogeneous(&sol.p, &x0, 0))];
                            mc_targets.push(("zero-sum".into(), strategy, targets));
                        }
                        Err(e) => stages.push(Stage {
                            name: "zero-sum strategy".into(),
                            pass: false,
                            detail: e.to_string(),
                        }),
                    }
                }
                Err(e) => stages.push(Stage {
                    name: "zero-sum solve".into(),
                    pass: false,
                    detail: e.to_string(),
                }),
            }
        }
        _ => {
            stages.push(Stage {
                name: "example id".into(),
                pass: false,
                detail: format!("unknown example {example}"),
            });
        }
    }

    stages.push(Stage {
        name: "internal residual".into(),
        pass: max_residual <= 1e-8,
        detail: format!("max recomputed residual {max_residual:.3e}"),
    });

    // Stabilizer certificates for every computed gain, both tests.
    for (name, theta) in &gains {
        match is_stabilizer(&model.dynamics, &model.generator, theta) {
            Ok(check) => stages.push(Stage {
                name: format!("stabilizer {name}"),
                pass: check.is_stabilizer() && check.dissipativity.stable,
                detail: format!(
                    "spectral {}, dissipativity {}",
                    check.spectral.stable, check.dissipativity.stable
                ),
            }),
            Err(e) => stages.push(Stage {
                name: format!("stabilizer {name}"),
                pass: false,
                detail: e.to_string(),
            }),
        }
    }

    // Monte Carlo cross-check of the analytic closed-loop values.
    for (name, strategy, targets) in &mc_targets {
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let cfg = SimConfig {
            dt: mc.dt,
            horizon: mc.horizon,
            paths: mc.paths,
            seed: mc.seed,
            antithetic: false,
        };
        match simulate_closed_loop(&model, strategy, &x0, 0, cfg, false) {
            Ok(report) => {
                for &(player, analytic) in targets {
                    let est = report.cost[player - 1];
                    let tol = 3.0 * est.std_error + 0.01 * analytic.abs();
                    let gap = (est.mean - analytic).abs();
                    stages.push(Stage {
                        name: format!("mc value {name} J{player}"),
                        pass: gap <= tol,
                        detail: format!(
                            "analytic {analytic:.6}, mc {:.6} ± {:.6} (gap {gap:.6} ≤ {tol:.6})",
                            est.mean, est.std_error
                        ),
                    });
                }
            }
            Err(e) => stages.push(Stage {
                name: format!("mc value {name}"),
                pass: false,
                detail: e.to_string(),
            }),
        }
    }

    let ok = stages.iter().all(|s| s.pass) && max_table_diff <= 1e-3;
    ReproduceOutcome {
        example,
        stages,
        max_table_diff,
        max_residual,
        ok,
    }
}

fn sign_conditions_ex1(model: &GameModel, sol: &crate::care::SymCareSolution) -> bool {
    use crate::linalg::min_eig_sym;
    (0..model.regime_count()).all(|i| {
        let n11 = model.dynamics.d1[i].transpose() * &sol.p1[i] * &model.dynamics.d1[i]
            + &model.cost1.r11[i];
        let n22 = model.dynamics.d2[i].transpose() * &sol.p2[i] * &model.dynamics.d2[i]
            + &model.cost2.r22[i];
        min_eig_sym(&n11) >= -1e-10 && min_eig_sym(&n22) >= -1e-10
    })
}

fn cmd_reproduce(example: u8, mc_paths: usize, mc_dt: f64, mc_seed: u64, out_dir: &Path) -> i32 {
    if !(1..=3).contains(&example) {
        eprintln!("error: example must be 1, 2 or 3");
        return EXIT_VALIDATION;
    }
    let started = Instant::now();
    let outcome = reproduce(
        example,
        McBudget {
            paths: mc_paths,
            dt: mc_dt,
            seed: mc_seed,
            horizon: 10.0,
        },
    );
    println!("example {example}:");
    for stage in &outcome.stages {
        println!(
            "  [{}] {:<34} {}",
            if stage.pass { "PASS" } else { "FAIL" },
            stage.name,
            stage.detail
        );
    }
    println!(
        "  max table diff {:.6} (tolerance 0.001), max residual {:.3e}",
        outcome.max_table_diff, outcome.max_residual
    );
    if (example == 2 || example == 3) && outcome.max_table_diff > 1e-3 {
        println!(
            "  note: the bundled reference tables for the zero-sum examples were \
             generated with a defective chain coupling (regime 1's rates applied \
             to every regime); they satisfy the gain constraint but not the CARE \
             itself, so a correct solve cannot match them. See \
             tests/solver_validation.rs for the pinned diagnosis."
        );
    }
    let doc = json!({
        "example": example,
        "stages": outcome.stages.iter().map(|s| json!({
            "name": s.name, "pass": s.pass, "detail": s.detail,
        })).collect::<Vec<_>>(),
        "maxTableDiff": outcome.max_table_diff,
        "maxResidual": outcome.max_residual,
        "ok": outcome.ok,
    });
    let outputs = match write_output(out_dir, &format!("reproduce-{example}.json"), &doc) {
        Ok(p) => vec![p],
        Err(code) => return code,
    };
    write_manifest(
        out_dir,
        "reproduce",
        &format!("builtin example {example}"),
        json!({"mcPaths": mc_paths, "mcDt": mc_dt}),
        &outputs,
        &[mc_seed],
        started,
    );
    if outcome.ok {
        EXIT_OK
    } else {
        EXIT_SOLVER
    }
}
