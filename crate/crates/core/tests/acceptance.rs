//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the criteria execute one at a time
//! (the timing criterion must not share the machine with the others).

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rkhps::bench::config::{Resolved, RunConfig};
use rkhps::bench::drivers::{build_tree_for, run_convergence, run_solve, run_stability_scan, run_timing, steepest_gradient};
use rkhps::bench::problems::{builtin_problem, ProblemParams};
use rkhps::discretization::{assemble_global, sample, shift_reaction, OperatorCoefficients};
use rkhps::hps::{HpsOperatorSet, Shift};
use rkhps::time::tableau::{load_tableau, ButcherPair};
use rkhps::tree::{build_tree, Domain};

struct Outcome {
    pass: bool,
    detail: String,
}

fn resolve(problem: &str, keys: &[&str]) -> Resolved {
    let o: Vec<String> = keys.iter().map(|s| s.to_string()).collect();
    RunConfig::for_problem(problem, &o).and_then(|c| c.resolve()).expect("acceptance configuration resolves")
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    d / b.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// HPS against a dense solve of the globally assembled collocation system.
fn oracle_equivalence() -> Outcome {
    let cases = [("heat2d-inhomog", 4, 4), ("varcoef1d", 16, 1), ("convdiff1d", 16, 1)];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, n1, n2) in cases {
        let spec = builtin_problem(name, &ProblemParams::default()).unwrap();
        let tree = Arc::new(build_tree(spec.problem.domain, n1, n2, 12).unwrap());
        let coeffs = spec.problem.operator.to_operator();
        let shift = Shift::new(1.0, 0.01);
        let ops = HpsOperatorSet::build(tree.clone(), &coeffs, shift).unwrap();
        let f = spec.problem.boundary_fields(&tree, 0.3).remove(0);
        let g = sample(&tree, |x, y| (3.0 * x + 1.0).sin() * (2.0 * y - 0.5).cos() + x * y);
        let u_hps = ops.solve_with_body_load(&f, &g).unwrap();
        let sys = assemble_global(&tree, &shift_reaction(&coeffs, shift.sigma, shift.dt_gamma));
        let u_ref = sys.solve(&sys.rhs(&f, &g, None)).unwrap();
        let e = rel_inf(&u_hps, &u_ref);
        worst = worst.max(e);
        parts.push(format!("{name} {e:.2e}"));
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max rel diff {worst:.2e} ({})", parts.join(", ")) }
}

/// Single-leaf Laplace problem with u = sin(pi x) sinh(pi y).
fn spectral_accuracy() -> Outcome {
    let err = |p: usize| {
        let tree = Arc::new(build_tree(Domain::Rect { x: (0.0, 1.0), y: (0.0, 1.0) }, 1, 1, p).unwrap());
        let ops = HpsOperatorSet::build(tree.clone(), &OperatorCoefficients::neg_laplacian(), Shift::NONE).unwrap();
        let exact = sample(&tree, |x, y| (PI * x).sin() * (PI * y).sinh());
        let u = ops.solve_homogeneous(&exact).unwrap();
        u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (e8, e16, e20) = (err(8), err(16), err(20));
    Outcome {
        pass: e8 / e16 >= 1e3 && e20 <= 1e-10,
        detail: format!("p=8 {e8:.2e}, p=16 {e16:.2e} (drop {:.1e}), p=20 {e20:.2e}", e8 / e16),
    }
}

/// Backward Euler step-map spectra. The conductivity operator (reaction
/// switched off) is asserted; with the reaction on, the continuous operator
/// itself has a growing mode and the radius is only reported.
fn stability() -> Outcome {
    let dts = [1.0, 1e-2, 1e-4, 1e-6];
    let tree8 = resolve("varcoef1d", &["problem.kappa=0.0", "tree.n1=8", "tree.p=12", "time.tableau=\"BE\""]);
    let single = resolve("varcoef1d", &["problem.kappa=0.0", "tree.n1=1", "tree.p=89", "time.tableau=\"BE\""]);
    let s8 = run_stability_scan(&tree8, &dts).unwrap();
    let s1 = run_stability_scan(&single, &dts).unwrap();
    let rho8 = s8.iter().map(|s| s.spectral_radius).fold(0.0, f64::max);
    let rho1 = s1.iter().map(|s| s.spectral_radius).fold(0.0, f64::max);
    let zeros8: Vec<usize> = s8.iter().map(|s| s.zero_count).collect();
    let zeros1: Vec<usize> = s1.iter().map(|s| s.zero_count).collect();
    let pass = rho8 <= 1.0 + 1e-10 && rho1 <= 1.0 + 1e-10 && zeros8.iter().all(|&z| z == 7) && zeros1.iter().all(|&z| z == 0);

    let reactive = resolve("varcoef1d", &["tree.n1=8", "tree.p=12", "time.tableau=\"BE\""]);
    let sr = run_stability_scan(&reactive, &[1.0, 1e-6]).unwrap();
    // growth rate of the semi-discrete operator read off the smallest step
    let lambda = (sr[1].spectral_radius - 1.0) / 1e-6;
    let predicted = 1.0 / (1.0 - lambda);
    println!(
        "    note: with kappa = 1 the radius at dt = 1 is {:.6} (1/(1 - dt*lambda) = {:.6} for the operator's top eigenvalue {lambda:.4}); not asserted",
        sr[0].spectral_radius, predicted
    );
    Outcome {
        pass,
        detail: format!("kappa=0: 8 leaves max rho {rho8:.12}, zeros {zeros8:?}; 1 leaf p=89 max rho {rho1:.12}, zeros {zeros1:?}"),
    }
}

fn order_line(rep: &rkhps::bench::drivers::ConvergenceReport) -> String {
    let errs: Vec<String> = rep.rows.iter().map(|r| r.max_error.map_or("-".into(), |e| format!("{e:.1e}"))).collect();
    format!("errors [{}]", errs.join(" "))
}

fn convergence_orders() -> Outcome {
    let heat = |name: &str, form: &str, weights: &str| {
        let f = format!("time.formulation=\"{form}\"");
        let w = format!("time.source_weights=\"{weights}\"");
        let r = resolve(
            name,
            &["tree.n1=2", "tree.n2=2", "tree.p=21", "time.tableau=\"ARK4\"", "time.dt=0.1", "time.halvings=6", "time.t_final=1.0", &f, &w],
        );
        run_convergence(&r).unwrap()
    };
    let homog_stage = heat("heat2d-homog", "stage", "implicit");
    let homog_slope = heat("heat2d-homog", "slope-penalized", "implicit");
    let inhomog_stage = heat("heat2d-inhomog", "stage", "implicit");
    let cd = run_convergence(&resolve(
        "convdiff1d",
        &["problem.k=100.0", "tree.p=21", "time.tableau=\"ARK4\"", "time.dt=0.05", "time.halvings=6", "time.t_final=0.5", "time.source_weights=\"implicit\""],
    ))
    .unwrap();
    let o = |r: &rkhps::bench::drivers::ConvergenceReport| r.asymptotic_order(3).unwrap_or(f64::NAN);
    let (a, b, c, d) = (o(&homog_stage), o(&homog_slope), o(&inhomog_stage), o(&cd));
    for (label, rep) in [("heat2d-homog stage", &homog_stage), ("heat2d-homog slope", &homog_slope), ("heat2d-inhomog stage", &inhomog_stage), ("convdiff1d k=100", &cd)] {
        println!("    {label}: {}", order_line(rep));
    }
    let explicit = heat("heat2d-homog", "stage", "explicit");
    println!("    note: heat2d-homog stage with explicit source weights has order {:.2} (not asserted)", o(&explicit));
    Outcome {
        pass: a >= 3.6 && b >= 3.6 && c <= 3.4 && (d - 3.0).abs() <= 0.4,
        detail: format!("heat2d-homog stage {a:.2}, slope {b:.2}; heat2d-inhomog stage {c:.2}; convdiff1d k=100 {d:.2}"),
    }
}

fn burgers_order() -> Outcome {
    let r = resolve(
        "burgers2d-travel",
        &["problem.epsilon=0.1", "tree.n1=4", "tree.n2=4", "tree.p=16", "time.tableau=\"ARK4\"", "time.t_final=2.0", "time.dt=0.0625", "time.halvings=4"],
    );
    let rep = run_convergence(&r).unwrap();
    let fit = rep.fitted_order().unwrap_or(f64::NAN);
    println!("    {}", order_line(&rep));
    Outcome {
        pass: (fit - 3.0).abs() <= 0.5 && rep.rows.iter().all(|r| !r.saturated),
        detail: format!(
            "fitted order over 4 halvings {fit:.3} (last three rows alone {:.3})",
            rep.asymptotic_order(3).unwrap_or(f64::NAN)
        ),
    }
}

fn complexity() -> Outcome {
    let r = resolve("heat2d-homog", &["tree.p=11", "tree.sizes=[4, 8, 16, 32]", "time.repetitions=3", "time.dt=0.01"]);
    let rep = run_timing(&r).unwrap();
    let ns: Vec<usize> = rep.rows.iter().map(|r| r.n_points).collect();
    let (solve, build) = (rep.solve_slope().unwrap_or(f64::NAN), rep.build_slope().unwrap_or(f64::NAN));
    Outcome {
        pass: ns == [1681, 6561, 25921, 103041] && (0.9..=1.35).contains(&solve) && build <= 1.7,
        detail: format!("N {ns:?}: solve slope {solve:.3}, build slope {build:.3}"),
    }
}

/// Classical order conditions through order five, written out directly.
fn order_residuals(a: &[Vec<f64>], b: &[f64], upto: usize) -> f64 {
    let s = b.len();
    let c: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let av = |v: &[f64]| -> Vec<f64> { (0..s).map(|i| (0..s).map(|j| a[i][j] * v[j]).sum()).collect() };
    let dot = |v: &[f64]| -> f64 { (0..s).map(|i| b[i] * v[i]).sum() };
    let pw = |k: i32| -> Vec<f64> { c.iter().map(|x| x.powi(k)).collect() };
    let mul = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(x, y)| x * y).collect() };
    let ones = vec![1.0; s];
    let ac = av(&c);
    let ac2 = av(&pw(2));
    let aac = av(&ac);
    let mut conds: Vec<(f64, f64)> = vec![(dot(&ones), 1.0), (dot(&c), 0.5)];
    if upto >= 3 {
        conds.extend([(dot(&pw(2)), 1.0 / 3.0), (dot(&ac), 1.0 / 6.0)]);
    }
    if upto >= 4 {
        conds.extend([
            (dot(&pw(3)), 0.25),
            (dot(&mul(&c, &ac)), 1.0 / 8.0),
            (dot(&ac2), 1.0 / 12.0),
            (dot(&aac), 1.0 / 24.0),
        ]);
    }
    if upto >= 5 {
        conds.extend([
            (dot(&pw(4)), 0.2),
            (dot(&mul(&pw(2), &ac)), 0.1),
            (dot(&mul(&c, &ac2)), 1.0 / 15.0),
            (dot(&mul(&c, &aac)), 1.0 / 30.0),
            (dot(&mul(&ac, &ac)), 1.0 / 20.0),
            (dot(&av(&pw(3))), 1.0 / 20.0),
            (dot(&av(&mul(&c, &ac))), 1.0 / 40.0),
            (dot(&av(&ac2)), 1.0 / 60.0),
            (dot(&av(&aac)), 1.0 / 120.0),
        ]);
    }
    conds.iter().map(|(v, e)| (v - e).abs()).fold(0.0, f64::max)
}

/// `R(z) = det(I - z A + z 1 b^T) / det(I - z A)`.
fn stability_function(p: &ButcherPair, z: f64) -> f64 {
    let s = p.s;
    let a = DMatrix::from_fn(s, s, |i, j| p.a[i][j]);
    let num = DMatrix::identity(s, s) - a.clone() * z + DMatrix::from_fn(s, s, |_, j| z * p.b[j]);
    let den = DMatrix::identity(s, s) - a * z;
    num.determinant() / den.determinant()
}

fn tableau_integrity() -> Outcome {
    let mut worst_cond = 0.0f64;
    let mut worst_r = 0.0f64;
    let mut r0 = 0.0f64;
    for (name, order) in [("ARK4", 4), ("ARK5", 5)] {
        let p = load_tableau(name).unwrap();
        worst_cond = worst_cond.max(order_residuals(&p.a, &p.b, order)).max(order_residuals(&p.ahat, &p.bhat, order));
        r0 = r0.max((stability_function(&p, 0.0) - 1.0).abs());
        for k in 0..=600 {
            let z = -(10f64.powf(-3.0 + 9.0 * k as f64 / 600.0));
            worst_r = worst_r.max(stability_function(&p, z).abs());
        }
    }
    Outcome {
        pass: worst_cond <= 1e-12 && r0 <= 1e-15 && worst_r <= 1.0 + 1e-12,
        detail: format!("max order-condition residual {worst_cond:.1e}, |R(0)-1| {r0:.1e}, max |R(z)| on [-1e6,-1e-3] {worst_r:.6}"),
    }
}

fn shock_location() -> Outcome {
    let r = resolve("convdiff1d", &["problem.k=100.0", "problem.source=\"none\"", "time.t_final=0.5"]);
    let rep = run_solve(&r).unwrap();
    let tree = build_tree_for(&r).unwrap();
    let (x, _, g) = steepest_gradient(&tree, &rep.state.u[0]);
    let d = (x - 0.3588).abs().min((x - 1.4114).abs());
    Outcome { pass: d <= 0.05, detail: format!("max |u_x| = {g:.2} at x = {x:.4} (distance {d:.4})") }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("spatial spectral accuracy", spectral_accuracy),
        ("step-map stability", stability),
        ("convergence orders", convergence_orders),
        ("Burgers traveling wave order", burgers_order),
        ("complexity scaling", complexity),
        ("tableau integrity", tableau_integrity),
        ("shock location", shock_location),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {verdict} ({:.1} s) {}", t0.elapsed().as_secs_f64(), out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
