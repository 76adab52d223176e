//! Drivers behind the CLI subcommands: single runs, time-step convergence
//! studies, solver timing, step-map spectra and snapshot demos.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bench::config::{step_count, Resolved};
use crate::bench::output::{write_resampled, write_snapshot, Table};
use crate::bench::problems::ProblemSpec;
use crate::discretization::{gradient, sample};
use crate::error::{HpsError, Result};
use crate::hps::{HpsOperatorSet, Shift};
use crate::stability::{analyze, assemble_step_map, StepMapSpectrum, MAX_FREE_DOFS};
use crate::time::problem::{Fields, PointFn};
use crate::time::stepper::{Stepper, StepperState};
use crate::time::tableau::load_tableau;
use crate::tree::{build_tree, DomainTree};

pub fn build_tree_for(r: &Resolved) -> Result<Arc<DomainTree>> {
    Ok(Arc::new(build_tree(r.spec.problem.domain, r.n1, r.n2, r.p)?))
}

pub fn build_stepper(r: &Resolved, tree: Arc<DomainTree>, dt: f64) -> Result<Stepper> {
    Ok(Stepper::new(Arc::new(r.spec.problem.clone()), tree, r.pair.clone(), r.formulation, dt)?
        .with_source_weights(r.source_weights))
}

fn sample_fields(tree: &DomainTree, f: &PointFn, comps: usize, t: f64) -> Fields {
    let mut out = vec![vec![0.0; tree.n_dof()]; comps];
    let mut buf = vec![0.0; comps];
    for (g, &(x, y)) in tree.dof_coords.iter().enumerate() {
        f(t, x, y, &mut buf);
        for c in 0..comps {
            out[c][g] = buf[c];
        }
    }
    out
}

/// Max and root-mean-square error over all DOFs and components (leaf corners
/// are not DOFs, so they never enter).
pub fn field_errors(tree: &DomainTree, u: &Fields, exact: &PointFn, t: f64) -> (f64, f64) {
    let ex = sample_fields(tree, exact, u.len(), t);
    let (mut max, mut sq, mut n) = (0.0f64, 0.0, 0usize);
    for (a, b) in u.iter().zip(&ex) {
        for (p, q) in a.iter().zip(b) {
            let d = (p - q).abs();
            max = if d.is_nan() { f64::NAN } else { max.max(d) };
            sq += d * d;
            n += 1;
        }
    }
    (max, (sq / n.max(1) as f64).sqrt())
}

pub fn max_abs(u: &Fields) -> f64 {
    u.iter().flatten().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub state: StepperState,
    pub steps: usize,
    pub max_error: Option<f64>,
    pub l2_error: Option<f64>,
    pub max_abs: f64,
    pub build_time: Duration,
    pub step_time: Duration,
}

/// Integrates to `t_final` with the first configured step.
pub fn run_solve(r: &Resolved) -> Result<SolveReport> {
    let tree = build_tree_for(r)?;
    let dt = r.dts[0];
    let steps = step_count(r.t_final, dt)?;
    let t0 = Instant::now();
    let stepper = build_stepper(r, tree.clone(), dt)?;
    let build_time = t0.elapsed();
    let t1 = Instant::now();
    let state = stepper.run(stepper.initial_state(0.0), steps, |_| {})?;
    let step_time = t1.elapsed();
    let (max_error, l2_error) = match &r.spec.exact {
        Some(ex) => {
            let (m, l) = field_errors(&tree, &state.u, ex, state.t);
            (Some(m), Some(l))
        }
        None => (None, None),
    };
    Ok(SolveReport { max_abs: max_abs(&state.u), state, steps, max_error, l2_error, build_time, step_time })
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub steps: usize,
    pub max_error: Option<f64>,
    pub l2_error: Option<f64>,
    /// `log(e_prev / e) / log(dt_prev / dt)` against the previous (larger) step.
    pub order: Option<f64>,
    pub saturated: bool,
    /// `ok` or the error that stopped the run.
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: String,
    pub formulation: String,
    pub source_weights: String,
    pub rows: Vec<ConvergenceRow>,
    /// Estimated spatial and round-off error level.
    pub floor: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ConvergenceReport {
    fn usable(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.status == "ok" && !r.saturated && r.max_error.is_some())
    }

    /// Fitted order over the rows that are neither saturated nor failed.
    pub fn fitted_order(&self) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.usable().map(|r| (r.dt, r.max_error.unwrap())).unzip();
        loglog_slope(&x, &y)
    }

    /// Fitted order over the last `n` usable rows, the asymptotic regime.
    pub fn asymptotic_order(&self, n: usize) -> Option<f64> {
        let rows: Vec<&ConvergenceRow> = self.usable().collect();
        let tail = &rows[rows.len().saturating_sub(n)..];
        let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().map(|r| (r.dt, r.max_error.unwrap())).unzip();
        loglog_slope(&x, &y)
    }

    /// Successive orders between consecutive usable rows.
    pub fn pre_saturation_orders(&self) -> Vec<f64> {
        let rows: Vec<&ConvergenceRow> = self.usable().collect();
        rows.windows(2)
            .map(|w| (w[0].max_error.unwrap() / w[1].max_error.unwrap()).ln() / (w[0].dt / w[1].dt).ln())
            .collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["dt", "steps", "max_error", "l2_error", "observed_order", "saturated", "status"]);
        t.notes.push(format!(
            "problem={} scheme={} formulation={} source_weights={} floor={:.3e}",
            self.problem, self.scheme, self.formulation, self.source_weights, self.floor
        ));
        if let Some(p) = self.fitted_order() {
            t.notes.push(format!("fitted_order={p:.4}"));
        }
        if let Some(p) = self.asymptotic_order(3) {
            t.notes.push(format!("asymptotic_order={p:.4} (last three unsaturated rows)"));
        }
        for r in &self.rows {
            t.push(vec![
                r.dt.into(),
                r.steps.into(),
                r.max_error.into(),
                r.l2_error.into(),
                r.order.into(),
                r.saturated.into(),
                r.status.as_str().into(),
            ]);
        }
        t
    }
}

/// Error of the shifted solve of the finest step fed with exact data, scaled
/// by the square root of the step count. The unshifted operator is not used:
/// for strong convection it is close to singular.
fn error_floor(spec: &ProblemSpec, tree: &Arc<DomainTree>, t: f64, dt_min: f64, gamma: f64, steps: usize) -> Result<f64> {
    let (Some(exact), Some(lu)) = (&spec.exact, &spec.exact_operator) else {
        return Ok(0.0);
    };
    let m = spec.problem.components;
    let ue = sample_fields(tree, exact, m, t);
    let le = sample_fields(tree, lu, m, t);
    let shift = Shift::new(1.0, dt_min * gamma);
    let ops = HpsOperatorSet::build(tree.clone(), &spec.problem.operator.to_operator(), shift)?;
    let mut worst = 0.0f64;
    for c in 0..m {
        // (I - dt_gamma L) u at the exact solution
        let rhs: Vec<f64> = ue[c].iter().zip(&le[c]).map(|(u, l)| u - shift.dt_gamma * l).collect();
        let u = ops.solve_with_body_load(&ue[c], &rhs)?;
        worst = worst.max(u.iter().zip(&ue[c]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let roundoff = 1e2 * f64::EPSILON * max_abs(&ue).max(1.0);
    Ok((worst * (steps as f64).sqrt()).max(roundoff))
}

/// Rows with error below this multiple of the floor are flagged saturated.
pub const SATURATION_FACTOR: f64 = 5.0;

pub fn run_convergence(r: &Resolved) -> Result<ConvergenceReport> {
    let exact = r.spec.exact.clone().ok_or_else(|| {
        HpsError::Config(format!("problem '{}' has no exact solution in this configuration", r.spec.name()))
    })?;
    let tree = build_tree_for(r)?;
    let mut dts = r.dts.clone();
    dts.sort_by(|a, b| b.total_cmp(a));
    let steps: Vec<usize> = dts.iter().map(|&dt| step_count(r.t_final, dt)).collect::<Result<_>>()?;
    let results: Vec<(Option<(f64, f64)>, String)> = dts
        .par_iter()
        .zip(&steps)
        .map(|(&dt, &n)| {
            let run = || -> Result<(f64, f64)> {
                let st = build_stepper(r, tree.clone(), dt)?;
                let s = st.run(st.initial_state(0.0), n, |_| {})?;
                Ok(field_errors(&tree, &s.u, &exact, s.t))
            };
            match run() {
                Ok(e) => (Some(e), "ok".to_string()),
                Err(e) => (None, e.to_string()),
            }
        })
        .collect();
    let floor = error_floor(&r.spec, &tree, r.t_final, *dts.last().unwrap(), r.pair.gamma, *steps.last().unwrap())?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(dts.len());
    for (k, ((dt, n), (err, status))) in dts.iter().zip(&steps).zip(results).enumerate() {
        let order = match (k.checked_sub(1).and_then(|j| rows[j].max_error), err) {
            (Some(prev), Some((e, _))) if prev > 0.0 && e > 0.0 => Some((prev / e).ln() / (dts[k - 1] / dt).ln()),
            _ => None,
        };
        rows.push(ConvergenceRow {
            dt: *dt,
            steps: *n,
            max_error: err.map(|e| e.0),
            l2_error: err.map(|e| e.1),
            order,
            saturated: err.is_some_and(|e| e.0 < SATURATION_FACTOR * floor),
            status,
        });
    }
    Ok(ConvergenceReport {
        problem: r.spec.name().to_string(),
        scheme: r.pair.name.clone(),
        formulation: r.formulation.name().to_string(),
        source_weights: r.source_weights.name().to_string(),
        rows,
        floor,
    })
}

#[derive(Clone, Debug)]
pub struct TimingRow {
    pub leaves_per_side: usize,
    /// Tensor-grid point count `(n (p - 1) + 1)^2`.
    pub n_points: usize,
    pub n_dof: usize,
    pub build_seconds: f64,
    pub solve_seconds: f64,
    pub step_seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub notes: Vec<String>,
}

impl TimingReport {
    pub fn solve_slope(&self) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.rows.iter().map(|r| (r.n_points as f64, r.solve_seconds)).unzip();
        loglog_slope(&x, &y)
    }

    pub fn build_slope(&self) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.rows.iter().map(|r| (r.n_points as f64, r.build_seconds)).unzip();
        loglog_slope(&x, &y)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["leaves_per_side", "N", "n_dof", "build_seconds", "per_step_solve_seconds", "per_step_total_seconds"]);
        t.notes = self.notes.clone();
        if let (Some(b), Some(s)) = (self.build_slope(), self.solve_slope()) {
            t.notes.push(format!("loglog_slope build={b:.3} solve={s:.3}"));
        }
        for r in &self.rows {
            t.push(vec![
                r.leaves_per_side.into(),
                r.n_points.into(),
                r.n_dof.into(),
                r.build_seconds.into(),
                r.solve_seconds.into(),
                r.step_seconds.into(),
            ]);
        }
        t
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Wall times of at least `min_runs` calls, repeated further (up to 200 calls)
/// until a quarter second has been spent, so fast cases get stable medians.
fn repeat_timed(min_runs: usize, mut f: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let start = Instant::now();
    while out.len() < min_runs || (out.len() < 200 && start.elapsed() < Duration::from_millis(250)) {
        let t0 = Instant::now();
        std::hint::black_box(f()?);
        out.push(t0.elapsed().as_secs_f64());
    }
    Ok(out)
}

/// Bytes held by the operator set of a tree, from its merge and leaf sizes.
pub fn estimate_operator_bytes(tree: &DomainTree) -> usize {
    let lay = &tree.layout;
    let (ni, nb) = (lay.n_interior, lay.n_boundary());
    let leaf = ni * nb + nb * nb + ni * ni + nb * ni;
    let mut total = tree.n_leaves() * leaf;
    for node in &tree.nodes {
        if let Some(m) = node.merge_sets() {
            let (j1, j2, j3) = (m.j1.len(), m.j2.len(), m.j3.len());
            let nbp = j1 + j2;
            total += j3 * nbp + j3 * j3 + j3 * (j1 + j2) + 2 * nbp * nbp;
        }
    }
    8 * total
}

fn available_memory() -> Option<usize> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: usize = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Build and per-step solve time of backward Euler on square trees with the
/// configured leaf order, medians over the configured repetitions.
pub fn run_timing(r: &Resolved) -> Result<TimingReport> {
    if r.spec.dim() != 2 {
        return Err(HpsError::Config("timing runs need a 2D problem".into()));
    }
    let pair = load_tableau("BE")?;
    let problem = Arc::new(r.spec.problem.clone());
    let dt = r.dts[0];
    let mut rep = TimingReport::default();
    rep.notes.push(format!(
        "problem={} scheme=BE p={} repetitions={} threads={}",
        r.spec.name(),
        r.p,
        r.repetitions,
        rayon::current_num_threads()
    ));
    let budget = available_memory().map(|m| m / 2);
    for &n in &r.sizes {
        let tree = Arc::new(build_tree(problem.domain, n, n, r.p)?);
        let need = estimate_operator_bytes(&tree);
        if let Some(b) = budget {
            if need > b {
                rep.notes.push(format!("stopped at {n}x{n}: needs about {} MiB, budget {} MiB", need >> 20, b >> 20));
                break;
            }
        }
        let coeffs = problem.operator.to_operator();
        let shift = Shift::new(1.0, dt * pair.gamma);
        let mut builds = Vec::new();
        let mut ops = None;
        for _ in 0..r.repetitions {
            let t0 = Instant::now();
            let o = HpsOperatorSet::build(tree.clone(), &coeffs, shift)?;
            builds.push(t0.elapsed().as_secs_f64());
            ops = Some(o);
        }
        let ops = ops.expect("at least one repetition");
        let f = sample(&tree, |x, y| (x * y).sin());
        let g = sample(&tree, |x, y| (x + y).cos());
        let solves = repeat_timed(r.repetitions, || ops.solve_with_body_load(&f, &g).map(|_| ()))?;
        drop(ops);
        let st = Stepper::new(problem.clone(), tree.clone(), pair.clone(), r.formulation, dt)?;
        let s0 = st.initial_state(0.0);
        let steps = repeat_timed(r.repetitions, || st.step(&s0).map(|_| ()))?;
        rep.rows.push(TimingRow {
            leaves_per_side: n,
            n_points: tree.tensor_point_count(),
            n_dof: tree.n_dof(),
            build_seconds: median(builds),
            solve_seconds: median(solves),
            step_seconds: median(steps),
        });
    }
    Ok(rep)
}

pub const DEFAULT_STABILITY_DTS: [f64; 4] = [1.0, 1e-2, 1e-4, 1e-6];

/// Step-map spectra for each step size; refuses maps larger than the dense limit.
pub fn run_stability_scan(r: &Resolved, dts: &[f64]) -> Result<Vec<StepMapSpectrum>> {
    let problem = Arc::new(r.spec.homogeneous()?);
    let tree = build_tree_for(r)?;
    let n_free = tree.free_dofs().len();
    if n_free > MAX_FREE_DOFS {
        return Err(HpsError::Config(format!(
            "stability scan needs a dense {n_free}x{n_free} map; the limit is {MAX_FREE_DOFS} free DOFs (use fewer leaves or a lower order)"
        )));
    }
    dts.iter()
        .map(|&dt| {
            let st = Stepper::new(problem.clone(), tree.clone(), r.pair.clone(), r.formulation, dt)?;
            let m = assemble_step_map(&st)?;
            let scheme = format!("{}/{}", r.pair.name, r.formulation.name());
            analyze(&m, dt, &scheme, r.spec.name())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct DemoReport {
    pub snapshots: Vec<(f64, std::path::PathBuf)>,
    pub final_max_abs: f64,
    pub steps: usize,
    /// Error that stopped the run; the last good state was written.
    pub diverged: Option<String>,
}

pub fn default_snapshot_times(r: &Resolved) -> Vec<f64> {
    if r.spec.name() == "burgers2d-rotating" {
        vec![0.01, 0.51, 1.01]
    } else {
        vec![0.0, r.t_final]
    }
}

/// Runs to `t_final` writing snapshots at the requested times (rounded to steps).
pub fn run_demo(r: &Resolved) -> Result<DemoReport> {
    let tree = build_tree_for(r)?;
    let dt = r.dts[0];
    let steps = step_count(r.t_final, dt)?;
    let times = r.snapshots.clone().unwrap_or_else(|| default_snapshot_times(r));
    let mut at: Vec<(usize, f64)> = times.iter().map(|&t| ((t / dt).round() as usize, t)).collect();
    at.sort_by_key(|a| a.0);
    let st = build_stepper(r, tree.clone(), dt)?;
    let mut state = st.initial_state(0.0);
    let mut snaps = Vec::new();
    let write = |state: &StepperState, label: &str, snaps: &mut Vec<(f64, std::path::PathBuf)>| -> Result<()> {
        let path = r.output_path(label, "txt");
        write_snapshot(&tree, state.t, &state.u, &path)?;
        if let Some(n) = r.resample {
            write_resampled(&tree, state.t, &state.u, n, &r.output_path(&format!("{label}-uniform"), "txt"))?;
        }
        snaps.push((state.t, path));
        Ok(())
    };
    let mut next = 0;
    let mut diverged = None;
    for k in 0..=steps {
        while next < at.len() && at[next].0 == k {
            write(&state, &format!("snapshot-{next}"), &mut snaps)?;
            next += 1;
        }
        if k == steps {
            break;
        }
        match st.step(&state) {
            Ok(s) => state = s,
            Err(e) => {
                write(&state, "lastgood", &mut snaps)?;
                diverged = Some(e.to_string());
                break;
            }
        }
    }
    Ok(DemoReport { snapshots: snaps, final_max_abs: max_abs(&state.u), steps: state.step, diverged })
}

/// Location and size of the largest `|u_x|` of the first component.
pub fn steepest_gradient(tree: &DomainTree, u: &[f64]) -> (f64, f64, f64) {
    let (ux, _) = gradient(tree, u);
    let (k, g) = ux.iter().enumerate().fold((0, 0.0f64), |(bk, bv), (k, v)| if v.abs() > bv { (k, v.abs()) } else { (bk, bv) });
    let (x, y) = tree.dof_coords[k];
    (x, y, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::RunConfig;

    fn resolved(name: &str, extra: &[&str]) -> Resolved {
        let o: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
        RunConfig::for_problem(name, &o).unwrap().resolve().unwrap()
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|h: &f64| 3.0 * h.powi(4)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 4.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn convergence_rows_sorted_and_single_row_has_no_order() {
        let r = resolved("heat2d-homog", &["tree.n1=2", "tree.n2=2", "tree.p=10", "time.dts=[0.05]", "time.t_final=0.1"]);
        let rep = run_convergence(&r).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.rows[0].order.is_none());
        let r = resolved("heat2d-homog", &["tree.n1=2", "tree.n2=2", "tree.p=12", "time.dts=[0.025, 0.1, 0.05]", "time.t_final=0.2"]);
        let rep = run_convergence(&r).unwrap();
        let dts: Vec<f64> = rep.rows.iter().map(|r| r.dt).collect();
        assert_eq!(dts, vec![0.1, 0.05, 0.025]);
        assert!(rep.rows.iter().all(|r| r.status == "ok"));
        assert!(rep.rows[2].order.unwrap() > 2.5, "{:?}", rep.rows);
        assert!(rep.floor > 0.0 && rep.floor < 1e-6);
    }

    #[test]
    fn demo_snapshot_at_zero_is_initial_condition() {
        let dir = tempfile::tempdir().unwrap();
        let d = format!("output.dir=\"{}\"", dir.path().display());
        let r = resolved(
            "heat2d-homog",
            &["tree.n1=2", "tree.n2=2", "tree.p=8", "time.dt=0.05", "time.t_final=0.1", "time.snapshots=[0.0, 0.1]", &d],
        );
        let rep = run_demo(&r).unwrap();
        assert!(rep.diverged.is_none());
        assert_eq!(rep.snapshots.len(), 2);
        let (t, u) = crate::bench::output::read_snapshot(&rep.snapshots[0].1).unwrap();
        assert_eq!(t, 0.0);
        let tree = build_tree_for(&r).unwrap();
        let ic = r.spec.problem.initial_fields(&tree, 0.0);
        assert_eq!(u, ic);
    }

    #[test]
    fn stability_scan_refuses_large_maps() {
        let r = resolved("heat2d-homog", &["tree.n1=8", "tree.n2=8", "tree.p=12"]);
        assert!(matches!(run_stability_scan(&r, &[0.1]), Err(HpsError::Config(_))));
        let r = resolved("burgers2d-rotating", &["tree.n1=2", "tree.n2=2", "tree.p=6"]);
        assert!(run_stability_scan(&r, &[0.1]).is_err());
    }

    #[test]
    fn stability_scan_zero_operator_is_identity() {
        let r = resolved("varcoef1d", &["tree.n1=4", "tree.p=8", "problem.kappa=0.0"]);
        let s = run_stability_scan(&r, &DEFAULT_STABILITY_DTS).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|s| s.spectral_radius <= 1.0 + 1e-10 && s.zero_count == 3));
    }

    #[test]
    fn timing_rows_have_paper_point_counts() {
        let r = resolved("heat2d-homog", &["tree.p=11", "tree.sizes=[4]", "time.repetitions=1"]);
        let rep = run_timing(&r).unwrap();
        assert_eq!(rep.rows[0].n_points, 1681);
        assert!(rep.rows[0].solve_seconds > 0.0);
    }

    #[test]
    fn steepest_gradient_finds_kink_of_tanh() {
        let tree = build_tree(crate::tree::Domain::Interval(0.0, 2.0), 8, 1, 16).unwrap();
        let u = sample(&tree, |x, _| (20.0 * (x - 0.7)).tanh());
        let (x, _, g) = steepest_gradient(&tree, &u);
        assert!((x - 0.7).abs() < 0.05 && (g - 20.0).abs() < 1.0);
    }
}
