use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rkhps::bench::config::{Resolved, RunConfig};
use rkhps::bench::drivers::{self, DEFAULT_STABILITY_DTS};
use rkhps::bench::output::{write_snapshot, Table};
use rkhps::bench::problems::{builtin_problem, ProblemParams, PROBLEM_NAMES};
use rkhps::time::tableau::AVAILABLE;
use rkhps::HpsError;

#[derive(Parser)]
#[command(name = "rkhps", version, about = "IMEX Runge-Kutta time stepping on HPS elliptic solvers")]
struct Cli {
    /// Worker threads for the operator build and the parallel drivers
    /// (default: HPS_THREADS, then RAYON_NUM_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the builtin problems, or show the resolved configuration of one run.
    Describe(RunArgs),
    /// Integrate to the final time and report errors against the exact solution.
    Solve(RunArgs),
    /// Time-step refinement study (`time.dts`, or `time.dt` with `time.halvings`).
    Converge(RunArgs),
    /// Build and per-step solve times on square trees (backward Euler).
    Timing(RunArgs),
    /// Spectra of the one-step map of the homogeneous problem.
    Stability(RunArgs),
    /// Field snapshots at `time.snapshots`.
    Demo(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Builtin problem name, used when no config file is given.
    #[arg(short, long)]
    problem: Option<String>,

    /// Override a config key, e.g. `--set time.dt=0.01` (repeatable).
    #[arg(short = 's', long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Config(String),
    Diverged(String),
    Other(String),
}

impl From<HpsError> for Failure {
    fn from(e: HpsError) -> Self {
        let msg = e.to_string();
        match e {
            HpsError::Config(_)
            | HpsError::UnknownTableau { .. }
            | HpsError::InvalidStep(_)
            | HpsError::InvalidOrder(_)
            | HpsError::InvalidInterval(..)
            | HpsError::UnsupportedPartition(_)
            | HpsError::Unsupported(_) => Failure::Config(msg),
            HpsError::Divergence { .. } => Failure::Diverged(msg),
            _ => Failure::Other(msg),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn load(args: &RunArgs, default_problem: Option<&str>) -> std::result::Result<RunConfig, Failure> {
    match (&args.config, &args.problem) {
        (Some(path), None) => Ok(RunConfig::from_file(path, &args.set)?),
        (Some(_), Some(_)) => Err(Failure::Config("give either --config or --problem, not both".into())),
        (None, p) => match p.as_deref().or(default_problem) {
            Some(name) => Ok(RunConfig::for_problem(name, &args.set)?),
            None => Err(Failure::Config("a run needs --config FILE or --problem NAME".into())),
        },
    }
}

fn save(table: &Table, r: &Resolved, name: &str) -> CliResult {
    let path = r.output_path(name, "csv");
    table.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn describe(args: &RunArgs) -> CliResult {
    if args.config.is_none() && args.problem.is_none() {
        for name in PROBLEM_NAMES {
            let spec = builtin_problem(name, &ProblemParams::default())?;
            let d = &spec.defaults;
            println!("{name}");
            println!("    {}", spec.description);
            println!(
                "    defaults: {}x{} leaves, p = {}, T = {}, dt = {}, {}",
                d.n1, d.n2, d.p, d.t_final, d.dt, d.tableau
            );
        }
        println!("tableaux: {}", AVAILABLE.join(", "));
        return Ok(());
    }
    let r = load(args, None)?.resolve()?;
    let s = &r.spec;
    println!("problem      {} ({}D)", s.name(), s.dim());
    println!("             {}", s.description);
    println!("exact        {}", if s.exact.is_some() { "yes" } else { "no" });
    println!("tree         {} x {} leaves, p = {}", r.n1, r.n2, r.p);
    println!("tableau      {} (order {}, {} stages)", r.pair.name, r.pair.order, r.pair.s);
    println!("formulation  {} (source weights {})", r.formulation.name(), r.source_weights.name());
    println!("dt           {:?}", r.dts);
    println!("t_final      {}", r.t_final);
    println!("output       {}", r.output_path("<table>", "csv").display());
    Ok(())
}

fn solve(args: &RunArgs) -> CliResult {
    let r = load(args, None)?.resolve()?;
    let rep = drivers::run_solve(&r)?;
    let tree = drivers::build_tree_for(&r)?;
    let snap = r.output_path("final", "txt");
    write_snapshot(&tree, rep.state.t, &rep.state.u, &snap)?;
    let mut t = Table::new(&["t", "steps", "dt", "max_error", "l2_error", "max_abs", "build_seconds", "step_seconds"]);
    t.notes.push(format!("problem={} scheme={} formulation={}", r.spec.name(), r.pair.name, r.formulation.name()));
    t.push(vec![
        rep.state.t.into(),
        rep.steps.into(),
        r.dts[0].into(),
        rep.max_error.into(),
        rep.l2_error.into(),
        rep.max_abs.into(),
        rep.build_time.as_secs_f64().into(),
        rep.step_time.as_secs_f64().into(),
    ]);
    print!("{}", t.render_text());
    save(&t, &r, "solve")?;
    println!("wrote {}", snap.display());
    Ok(())
}

fn converge(args: &RunArgs) -> CliResult {
    let r = load(args, None)?.resolve()?;
    let rep = drivers::run_convergence(&r)?;
    let t = rep.table();
    print!("{}", t.render_text());
    save(&t, &r, "convergence")
}

fn timing(args: &RunArgs) -> CliResult {
    let mut cfg = load(args, Some("heat2d-homog"))?;
    cfg.tree.p.get_or_insert(11);
    let r = cfg.resolve()?;
    let rep = drivers::run_timing(&r)?;
    let t = rep.table();
    print!("{}", t.render_text());
    save(&t, &r, "timing")
}

fn stability(args: &RunArgs) -> CliResult {
    let cfg = load(args, None)?;
    let explicit_dts = cfg.time.dts.is_some() || cfg.time.dt.is_some();
    let r = cfg.resolve()?;
    let dts = if explicit_dts { r.dts.clone() } else { DEFAULT_STABILITY_DTS.to_vec() };
    let spectra = drivers::run_stability_scan(&r, &dts)?;
    let mut summary = Table::new(&["dt", "dim", "spectral_radius", "radius_minus_one", "zero_count", "zero_tol", "file"]);
    summary.notes.push(format!("problem={} scheme={}/{}", r.spec.name(), r.pair.name, r.formulation.name()));
    for (k, s) in spectra.iter().enumerate() {
        let path = r.output_path(&format!("stability-{k}"), "csv");
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(HpsError::from)?;
        }
        s.write_csv(std::fs::File::create(&path).map_err(HpsError::from)?).map_err(HpsError::from)?;
        summary.push(vec![
            s.dt.into(),
            s.dim().into(),
            s.spectral_radius.into(),
            (s.spectral_radius - 1.0).into(),
            s.zero_count.into(),
            s.zero_tol.into(),
            path.display().to_string().as_str().into(),
        ]);
    }
    print!("{}", summary.render_text());
    save(&summary, &r, "stability")
}

fn demo(args: &RunArgs) -> CliResult {
    let r = load(args, None)?.resolve()?;
    let rep = drivers::run_demo(&r)?;
    for (t, path) in &rep.snapshots {
        println!("t = {t:.6}  {}", path.display());
    }
    println!("steps = {}  max|u| = {:.6e}", rep.steps, rep.final_max_abs);
    match rep.diverged {
        Some(msg) => Err(Failure::Diverged(format!("{msg} (last good state written)"))),
        None => Ok(()),
    }
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("HPS_THREADS").ok()?.trim().parse().ok()).filter(|&n| n > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_count(cli.threads) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not set {n} threads: {e}");
        }
    }
    let res = match &cli.command {
        Command::Describe(a) => describe(a),
        Command::Solve(a) => solve(a),
        Command::Converge(a) => converge(a),
        Command::Timing(a) => timing(a),
        Command::Stability(a) => stability(a),
        Command::Demo(a) => demo(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Diverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
