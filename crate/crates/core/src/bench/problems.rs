//! Benchmark problem library with exact solutions and manufactured sources.

use std::f64::consts::PI;
use std::sync::Arc;

use num_dual::{Dual2_64, Dual64, DualNum};

use crate::discretization::{DiffusionForm, Field};
use crate::error::{HpsError, Result};
use crate::time::problem::{BoundaryData, NonlinearFn, ParabolicProblem, PointFn};
use crate::tree::Domain;

/// A closed-form solution, generic over dual numbers so that the needed
/// derivatives come from forward-mode differentiation.
pub trait ExactSolution: Send + Sync + 'static {
    fn components(&self) -> usize;
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, y: D, out: &mut [D]);
}

/// Values and derivatives of an exact solution at one point, per component.
#[derive(Clone, Debug, Default)]
pub struct Jet {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub u_xx: Vec<f64>,
    pub u_yy: Vec<f64>,
}

pub fn jet<E: ExactSolution>(e: &E, t: f64, x: f64, y: f64) -> Jet {
    let m = e.components();
    let mut d1 = vec![Dual64::from_re(0.0); m];
    e.eval(Dual64::new(t, 1.0), Dual64::from_re(x), Dual64::from_re(y), &mut d1);
    let mut dx = vec![Dual2_64::from_re(0.0); m];
    e.eval(Dual2_64::from_re(t), Dual2_64::new(x, 1.0, 0.0), Dual2_64::from_re(y), &mut dx);
    let mut dy = vec![Dual2_64::from_re(0.0); m];
    e.eval(Dual2_64::from_re(t), Dual2_64::from_re(x), Dual2_64::new(y, 1.0, 0.0), &mut dy);
    Jet {
        u: dx.iter().map(|d| d.re).collect(),
        u_t: d1.iter().map(|d| d.eps).collect(),
        u_x: dx.iter().map(|d| d.v1).collect(),
        u_y: dy.iter().map(|d| d.v1).collect(),
        u_xx: dx.iter().map(|d| d.v2).collect(),
        u_yy: dy.iter().map(|d| d.v2).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcMode {
    FromExact,
    Homogeneous,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceMode {
    /// `q = u*_t - L u* - g(u*)`.
    Manufactured,
    /// `q = 0`; the exact solution then only supplies initial and boundary data.
    None,
}

/// Parameters a problem family may read.
#[derive(Clone, Copy, Debug)]
pub struct ProblemParams {
    pub k: f64,
    /// Reaction coefficient of the variable-coefficient problem.
    pub kappa: f64,
    pub epsilon: Option<f64>,
    pub source: SourceMode,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self { k: 1.0, kappa: 1.0, epsilon: None, source: SourceMode::Manufactured }
    }
}

/// Discretization used when a config does not say otherwise.
#[derive(Clone, Debug)]
pub struct Defaults {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub t_final: f64,
    pub dt: f64,
    pub tableau: &'static str,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub problem: ParabolicProblem,
    /// Exact solution values; present only when `u*` solves the configured problem.
    pub exact: Option<PointFn>,
    /// `L u*`, alongside `exact`.
    pub exact_operator: Option<PointFn>,
    pub bc_mode: BcMode,
    pub defaults: Defaults,
    pub description: String,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("problem", &self.problem)
            .field("exact", &self.exact.is_some())
            .field("bc_mode", &self.bc_mode)
            .finish()
    }
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        &self.problem.name
    }

    pub fn dim(&self) -> usize {
        self.problem.domain.dim()
    }

    /// The same operator with zero data, used for step-map analysis.
    pub fn homogeneous(&self) -> Result<ParabolicProblem> {
        if !self.problem.is_linear() {
            return Err(HpsError::Unsupported(format!("'{}' is nonlinear", self.name())));
        }
        let mut p = self.problem.clone();
        p.source = None;
        p.boundary = BoundaryData::Homogeneous;
        p.time_independent_bc = true;
        Ok(p)
    }
}

fn value_fn<E: ExactSolution>(e: &Arc<E>) -> PointFn {
    let e = e.clone();
    Arc::new(move |t, x, y, out| e.eval(t, x, y, out))
}

fn rate_fn<E: ExactSolution>(e: &Arc<E>) -> PointFn {
    let e = e.clone();
    Arc::new(move |t, x, y, out| {
        let mut d = vec![Dual64::from_re(0.0); out.len()];
        e.eval(Dual64::new(t, 1.0), Dual64::from_re(x), Dual64::from_re(y), &mut d);
        for (o, v) in out.iter_mut().zip(&d) {
            *o = v.eps;
        }
    })
}

fn apply_l(op: &DiffusionForm, x: f64, y: f64, j: &Jet, c: usize) -> f64 {
    op.a11.eval(x, y) * j.u_xx[c]
        + op.a22.eval(x, y) * j.u_yy[c]
        + op.b1.eval(x, y) * j.u_x[c]
        + op.b2.eval(x, y) * j.u_y[c]
        + op.c0.eval(x, y) * j.u[c]
}

fn operator_fn<E: ExactSolution>(e: &Arc<E>, op: &DiffusionForm) -> PointFn {
    let (e, op) = (e.clone(), op.clone());
    Arc::new(move |t, x, y, out| {
        let j = jet(&*e, t, x, y);
        for (c, o) in out.iter_mut().enumerate() {
            *o = apply_l(&op, x, y, &j, c);
        }
    })
}

fn manufactured_source<E: ExactSolution>(e: &Arc<E>, op: &DiffusionForm, g: Option<NonlinearFn>) -> PointFn {
    let (e, op) = (e.clone(), op.clone());
    Arc::new(move |t, x, y, out| {
        let j = jet(&*e, t, x, y);
        let mut gv = vec![0.0; out.len()];
        if let Some(g) = &g {
            g(t, x, y, &j.u, &j.u_x, &j.u_y, &mut gv);
        }
        for c in 0..out.len() {
            out[c] = j.u_t[c] - apply_l(&op, x, y, &j, c) - gv[c];
        }
    })
}

struct Family<E> {
    name: &'static str,
    domain: Domain,
    operator: DiffusionForm,
    nonlinear: Option<NonlinearFn>,
    exact: E,
    bc: BcMode,
    defaults: Defaults,
    description: String,
}

fn from_exact<E: ExactSolution>(f: Family<E>, source: SourceMode) -> ProblemSpec {
    let e = Arc::new(f.exact);
    let value = value_fn(&e);
    let boundary = match f.bc {
        BcMode::Homogeneous => BoundaryData::Homogeneous,
        _ => BoundaryData::Function { f: value.clone(), f_t: Some(rate_fn(&e)) },
    };
    let src = match source {
        SourceMode::Manufactured => Some(manufactured_source(&e, &f.operator, f.nonlinear.clone())),
        SourceMode::None => None,
    };
    let lu = operator_fn(&e, &f.operator);
    let problem = ParabolicProblem {
        name: f.name.to_string(),
        domain: f.domain,
        operator: f.operator,
        components: e.components(),
        source: src,
        nonlinear: f.nonlinear,
        boundary,
        initial: value.clone(),
        time_independent_bc: f.bc == BcMode::Homogeneous,
    };
    ProblemSpec {
        problem,
        exact: (source == SourceMode::Manufactured).then_some(value),
        exact_operator: (source == SourceMode::Manufactured).then_some(lu),
        bc_mode: f.bc,
        defaults: f.defaults,
        description: f.description,
    }
}

/// `sin(1 + 1.7 pi x) cos(1 + t^2 x) (1 + t^3 x)`.
struct Wave1d;

impl ExactSolution for Wave1d {
    fn components(&self) -> usize {
        1
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, _y: D, out: &mut [D]) {
        out[0] = (x * (1.7 * PI) + 1.0).sin() * (t * t * x + 1.0).cos() * (t * t * t * x + 1.0);
    }
}

/// Zero-trace variant on `[0, 2]`: `sin(pi x) cos(1 + t^2 x) (1 + t^3 x)`.
struct Wave1dHomog;

impl ExactSolution for Wave1dHomog {
    fn components(&self) -> usize {
        1
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, _y: D, out: &mut [D]) {
        out[0] = (x * PI).sin() * (t * t * x + 1.0).cos() * (t * t * t * x + 1.0);
    }
}

struct HeatInhomog;

impl ExactSolution for HeatInhomog {
    fn components(&self) -> usize {
        1
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, y: D, out: &mut [D]) {
        let s = y - 0.5;
        out[0] = (x * PI).sin() * (-(t * s * s)).exp();
    }
}

struct HeatHomog;

impl ExactSolution for HeatHomog {
    fn components(&self) -> usize {
        1
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, y: D, out: &mut [D]) {
        out[0] = (x * (2.0 * PI)).sin() * (y * (2.0 * PI)).sin() * (-(t * (x + y))).exp();
    }
}

/// Traveling front, with the exponent exactly as printed (scaled outside the exponential).
struct BurgersTravel {
    eps: f64,
}

impl ExactSolution for BurgersTravel {
    fn components(&self) -> usize {
        2
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, y: D, out: &mut [D]) {
        let e = (y * 4.0 - x * 4.0 - t).exp() / (32.0 * self.eps);
        let w = ((e + 1.0) * 4.0).recip();
        out[0] = -w + 0.75;
        out[1] = w + 0.75;
    }
}

struct BurgersDiffusive {
    eps: f64,
}

impl ExactSolution for BurgersDiffusive {
    fn components(&self) -> usize {
        2
    }
    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, t: D, x: D, y: D, out: &mut [D]) {
        let eps = self.eps;
        let decay = (t * (-5.0 * PI * PI * eps)).exp();
        let (sx, cx) = (x * (2.0 * PI)).sin_cos();
        let (sy, cy) = (y * PI).sin_cos();
        let den = decay * sx * sy + 2.0;
        out[0] = -(decay * cx * sy * (4.0 * PI * eps)) / den;
        out[1] = -(decay * sx * cy * (2.0 * PI * eps)) / den;
    }
}

fn burgers_term() -> NonlinearFn {
    Arc::new(|_, _, _, u, ux, uy, out| {
        out[0] = -(u[0] * ux[0] + u[1] * uy[0]);
        out[1] = -(u[0] * ux[1] + u[1] * uy[1]);
    })
}

fn defaults_1d(t_final: f64) -> Defaults {
    Defaults { n1: 32, n2: 1, p: 21, t_final, dt: 1e-2, tableau: "ARK4" }
}

fn defaults_2d(t_final: f64) -> Defaults {
    Defaults { n1: 8, n2: 8, p: 21, t_final, dt: 1e-2, tableau: "ARK4" }
}

/// `u_xx - k sin(1 + 1.9 pi x) u_x`.
fn convdiff_operator(k: f64) -> DiffusionForm {
    DiffusionForm {
        a11: 1.0.into(),
        a22: 0.0.into(),
        b1: Field::func(move |x, _| -k * (1.0 + 1.9 * PI * x).sin()),
        b2: 0.0.into(),
        c0: 0.0.into(),
    }
}

/// Conductivity of the variable-coefficient problem.
pub fn conductivity(x: f64) -> f64 {
    1.0 + 0.9 * (1.0 + 1.9 * PI * x).sin()
}

/// `(a u_x)_x + kappa^2 u = a u_xx + a' u_x + kappa^2 u`.
fn varcoef_operator(kappa: f64) -> DiffusionForm {
    DiffusionForm {
        a11: Field::func(|x, _| conductivity(x)),
        a22: 0.0.into(),
        b1: Field::func(|x, _| 0.9 * 1.9 * PI * (1.0 + 1.9 * PI * x).cos()),
        b2: 0.0.into(),
        c0: (kappa * kappa).into(),
    }
}

pub const PROBLEM_NAMES: [&str; 9] = [
    "convdiff1d",
    "convdiff1d-homog",
    "varcoef1d",
    "varcoef1d-homog",
    "heat2d-inhomog",
    "heat2d-homog",
    "burgers2d-travel",
    "burgers2d-diffusive",
    "burgers2d-rotating",
];

/// Builds one named problem and runs the manufactured-residual check on it.
pub fn builtin_problem(name: &str, params: &ProblemParams) -> Result<ProblemSpec> {
    let unit = Domain::Rect { x: (0.0, 1.0), y: (0.0, 1.0) };
    let k = params.k;
    let spec = match name {
        "convdiff1d" | "convdiff1d-homog" => {
            let homog = name.ends_with("homog");
            let fam = |bc| Family {
                name: if homog { "convdiff1d-homog" } else { "convdiff1d" },
                domain: Domain::Interval(0.0, 2.0),
                operator: convdiff_operator(k),
                nonlinear: None,
                exact: (),
                bc,
                defaults: defaults_1d(0.5),
                description: format!("u_t = u_xx - k sin(1 + 1.9 pi x) u_x + q on [0, 2], k = {k}"),
            };
            if homog {
                let f = fam(BcMode::Homogeneous);
                from_exact(with_exact(f, Wave1dHomog), params.source)
            } else {
                from_exact(with_exact(fam(BcMode::FromExact), Wave1d), params.source)
            }
        }
        "varcoef1d" | "varcoef1d-homog" => {
            let homog = name.ends_with("homog");
            let f = Family {
                name: if homog { "varcoef1d-homog" } else { "varcoef1d" },
                domain: Domain::Interval(0.0, 2.0),
                operator: varcoef_operator(params.kappa),
                nonlinear: None,
                exact: (),
                bc: if homog { BcMode::Homogeneous } else { BcMode::FromExact },
                defaults: defaults_1d(0.5),
                description: format!("u_t = (a u_x)_x + kappa^2 u + q, a = 1 + 0.9 sin(1 + 1.9 pi x) on [0, 2], kappa = {}", params.kappa),
            };
            if homog {
                from_exact(with_exact(f, Wave1dHomog), params.source)
            } else {
                from_exact(with_exact(f, Wave1d), params.source)
            }
        }
        "heat2d-inhomog" => from_exact(
            Family {
                name: "heat2d-inhomog",
                domain: unit,
                operator: DiffusionForm::heat(1.0),
                nonlinear: None,
                exact: HeatInhomog,
                bc: BcMode::FromExact,
                defaults: defaults_2d(1.0),
                description: "u_t = u_xx + u_yy + q, u = sin(pi x) exp(-t (y - 1/2)^2)".into(),
            },
            params.source,
        ),
        "heat2d-homog" => from_exact(
            Family {
                name: "heat2d-homog",
                domain: unit,
                operator: DiffusionForm::heat(1.0),
                nonlinear: None,
                exact: HeatHomog,
                bc: BcMode::Homogeneous,
                defaults: defaults_2d(1.0),
                description: "u_t = u_xx + u_yy + q, u = sin(2 pi x) sin(2 pi y) exp(-t (x + y))".into(),
            },
            params.source,
        ),
        "burgers2d-travel" => {
            let eps = params.epsilon.unwrap_or(0.1);
            from_exact(
                Family {
                    name: "burgers2d-travel",
                    domain: unit,
                    operator: DiffusionForm::heat(eps),
                    nonlinear: Some(burgers_term()),
                    exact: BurgersTravel { eps },
                    bc: BcMode::FromExact,
                    defaults: defaults_2d(2.0),
                    description: format!("2D Burgers, traveling front, eps = {eps}"),
                },
                params.source,
            )
        }
        "burgers2d-diffusive" => {
            let eps = params.epsilon.unwrap_or(0.1);
            from_exact(
                Family {
                    name: "burgers2d-diffusive",
                    domain: unit,
                    operator: DiffusionForm::heat(eps),
                    nonlinear: Some(burgers_term()),
                    exact: BurgersDiffusive { eps },
                    bc: BcMode::FromExact,
                    defaults: defaults_2d(2.0),
                    description: format!("2D Burgers, decaying diffusive solution, eps = {eps}"),
                },
                params.source,
            )
        }
        "burgers2d-rotating" => rotating(params.epsilon.unwrap_or(0.005)),
        _ => {
            return Err(HpsError::Config(format!(
                "unknown problem '{name}' (available: {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    if spec.exact.is_some() {
        let r = manufactured_residual(&spec, 64)?;
        if r > RESIDUAL_TOL {
            return Err(HpsError::Inconsistent(format!(
                "manufactured source of '{name}' leaves residual {r:.3e}"
            )));
        }
    }
    Ok(spec)
}

fn with_exact<E>(f: Family<()>, exact: E) -> Family<E> {
    Family {
        name: f.name,
        domain: f.domain,
        operator: f.operator,
        nonlinear: f.nonlinear,
        exact,
        bc: f.bc,
        defaults: f.defaults,
        description: f.description,
    }
}

fn rotating(eps: f64) -> ProblemSpec {
    let problem = ParabolicProblem {
        name: "burgers2d-rotating".into(),
        domain: Domain::Rect { x: (-PI, PI), y: (-PI, PI) },
        operator: DiffusionForm::heat(eps),
        components: 2,
        source: None,
        nonlinear: Some(burgers_term()),
        boundary: BoundaryData::Homogeneous,
        initial: Arc::new(|_, x, y, out| {
            let g = (-3.0 * (x * x + y * y)).exp();
            out[0] = -5.0 * y * g;
            out[1] = 5.0 * x * g;
        }),
        time_independent_bc: true,
    };
    ProblemSpec {
        problem,
        exact: None,
        exact_operator: None,
        bc_mode: BcMode::Homogeneous,
        defaults: Defaults { n1: 24, n2: 24, p: 24, t_final: 1.5, dt: 1e-2, tableau: "ARK5" },
        description: format!("2D Burgers rotating flow on [-pi, pi]^2, no-slip, eps = {eps}"),
    }
}

/// Every problem family with default parameters.
pub fn builtin_problems() -> Vec<ProblemSpec> {
    PROBLEM_NAMES
        .iter()
        .map(|n| builtin_problem(n, &ProblemParams::default()).expect("builtin problems are consistent"))
        .collect()
}

/// Relative tolerance of the load-time residual check (finite differences limit it).
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Largest relative PDE residual `|u_t - L u - g(u) - q| / (1 + |q| + |u_t|)` of the
/// exact solution on an `n`-point sample, with derivatives taken by fourth-order
/// finite differences so that the check is independent of the dual-number path.
pub fn manufactured_residual(spec: &ProblemSpec, n: usize) -> Result<f64> {
    let exact = spec.exact.as_ref().ok_or_else(|| HpsError::Unsupported("no exact solution".into()))?;
    let prob = &spec.problem;
    let m = prob.components;
    let (xr, yr) = (prob.domain.x_range(), prob.domain.y_range());
    let dim = prob.domain.dim();
    let t_final = spec.defaults.t_final;
    let eval = |t: f64, x: f64, y: f64| {
        let mut o = vec![0.0; m];
        exact(t, x, y, &mut o);
        o
    };
    // five-point first and second derivative stencils
    let d1 = |f: &dyn Fn(f64) -> Vec<f64>, s: f64, h: f64| -> Vec<f64> {
        let (a, b, c, d) = (f(s - 2.0 * h), f(s - h), f(s + h), f(s + 2.0 * h));
        (0..m).map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h)).collect()
    };
    let d2 = |f: &dyn Fn(f64) -> Vec<f64>, s: f64, h: f64| -> Vec<f64> {
        let (a, b, z, c, d) = (f(s - 2.0 * h), f(s - h), f(s), f(s + h), f(s + 2.0 * h));
        (0..m).map(|i| (-a[i] + 16.0 * b[i] - 30.0 * z[i] + 16.0 * c[i] - d[i]) / (12.0 * h * h)).collect()
    };
    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut q = vec![0.0; m];
    let mut g = vec![0.0; m];
    for k in 0..n {
        // deterministic low-discrepancy sample
        let fr = |a: f64| (a * (k as f64 + 0.5)).fract();
        let x = xr.0 + (xr.1 - xr.0) * (0.05 + 0.9 * fr(0.618_033_988_75));
        let y = if dim == 2 { yr.0 + (yr.1 - yr.0) * (0.05 + 0.9 * fr(0.754_877_666_25)) } else { 0.0 };
        let t = 0.05 + (t_final - 0.1).max(0.0) * fr(0.569_840_290_99);
        let u = eval(t, x, y);
        let ut = d1(&|s| eval(s, x, y), t, h);
        let ux = d1(&|s| eval(t, s, y), x, h);
        let uxx = d2(&|s| eval(t, s, y), x, h);
        let (uy, uyy) = if dim == 2 {
            (d1(&|s| eval(t, x, s), y, h), d2(&|s| eval(t, x, s), y, h))
        } else {
            (vec![0.0; m], vec![0.0; m])
        };
        let j = Jet { u: u.clone(), u_t: ut.clone(), u_x: ux.clone(), u_y: uy.clone(), u_xx: uxx, u_yy: uyy };
        g.iter_mut().for_each(|v| *v = 0.0);
        if let Some(nl) = &prob.nonlinear {
            nl(t, x, y, &u, &ux, &uy, &mut g);
        }
        q.iter_mut().for_each(|v| *v = 0.0);
        if let Some(src) = &prob.source {
            src(t, x, y, &mut q);
        }
        for c in 0..m {
            let r = ut[c] - apply_l(&prob.operator, x, y, &j, c) - g[c] - q[c];
            worst = worst.max(r.abs() / (1.0 + q[c].abs() + ut[c].abs()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(name: &str) -> ProblemSpec {
        builtin_problem(name, &ProblemParams::default()).unwrap()
    }

    #[test]
    fn dual_jet_matches_closed_form() {
        let j = jet(&HeatHomog, 0.3, 0.2, 0.7);
        let (x, y, t) = (0.2f64, 0.7f64, 0.3f64);
        let e = (-t * (x + y)).exp();
        let (sx, sy) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
        assert!((j.u[0] - sx * sy * e).abs() < 1e-15);
        assert!((j.u_t[0] + (x + y) * sx * sy * e).abs() < 1e-14);
        let ux = (2.0 * PI * (2.0 * PI * x).cos() - t * sx) * sy * e;
        assert!((j.u_x[0] - ux).abs() < 1e-13);
        let uxx = (-4.0 * PI * PI * sx - 4.0 * PI * t * (2.0 * PI * x).cos() + t * t * sx) * sy * e;
        assert!((j.u_xx[0] - uxx).abs() < 1e-12);
    }

    #[test]
    fn all_builtins_load_and_pass_residual_check() {
        let all = builtin_problems();
        assert_eq!(all.len(), PROBLEM_NAMES.len());
        for p in &all {
            if p.exact.is_some() {
                let r = manufactured_residual(p, 200).unwrap();
                assert!(r < RESIDUAL_TOL, "{}: {r}", p.name());
            }
        }
        let k100 = builtin_problem("convdiff1d", &ProblemParams { k: 100.0, ..Default::default() }).unwrap();
        assert!(manufactured_residual(&k100, 200).unwrap() < RESIDUAL_TOL);
    }

    #[test]
    fn varcoef_source_matches_symbolic_derivatives() {
        // hand-differentiated u = S(x) C(t, x) P(t, x)
        let spec = get("varcoef1d");
        let q = spec.problem.source.clone().unwrap();
        let w = 1.7 * PI;
        for k in 0..200 {
            let x = 2.0 * (k as f64 + 0.5) / 200.0;
            let t = 0.5 * ((k * 37) % 200) as f64 / 200.0;
            let (s, sp, spp) = ((1.0 + w * x).sin(), w * (1.0 + w * x).cos(), -w * w * (1.0 + w * x).sin());
            let arg = 1.0 + t * t * x;
            let (c, cp, cpp, ct) = (arg.cos(), -t * t * arg.sin(), -t.powi(4) * arg.cos(), -2.0 * t * x * arg.sin());
            let (pp, ppx, ppt) = (1.0 + t.powi(3) * x, t.powi(3), 3.0 * t * t * x);
            let u = s * c * pp;
            let ut = s * (ct * pp + c * ppt);
            let ux = sp * c * pp + s * cp * pp + s * c * ppx;
            let uxx = spp * c * pp + s * cpp * pp + 2.0 * (sp * cp * pp + sp * c * ppx + s * cp * ppx);
            let a = 1.0 + 0.9 * (1.0 + 1.9 * PI * x).sin();
            let ap = 0.9 * 1.9 * PI * (1.0 + 1.9 * PI * x).cos();
            let expect = ut - (a * uxx + ap * ux + u);
            let mut out = [0.0];
            q(t, x, 0.0, &mut out);
            assert!((out[0] - expect).abs() <= 1e-8, "x={x} t={t}: {} vs {expect}", out[0]);
        }
    }

    #[test]
    fn initial_values() {
        let mut o = [0.0];
        (get("convdiff1d").problem.initial)(0.0, 0.0, 0.0, &mut o);
        assert!((o[0] - 1f64.sin() * 1f64.cos()).abs() < 1e-15);
        let mut uv = [0.0; 2];
        (get("burgers2d-travel").problem.initial)(0.0, 0.4, 0.4, &mut uv);
        let w = 1.0 / (4.0 * (1.0 + 1.0 / (32.0 * 0.1)));
        assert!((uv[0] - (0.75 - w)).abs() < 1e-15 && (uv[1] - (0.75 + w)).abs() < 1e-15);
    }

    #[test]
    fn source_can_be_dropped() {
        let p = builtin_problem("convdiff1d", &ProblemParams { k: 100.0, source: SourceMode::None, ..Default::default() }).unwrap();
        assert!(p.problem.source.is_none() && p.exact.is_none());
        assert!(matches!(p.problem.boundary, BoundaryData::Function { .. }));
    }

    #[test]
    fn homogeneous_variants_vanish_on_boundary() {
        for name in ["convdiff1d-homog", "varcoef1d-homog", "heat2d-homog"] {
            let p = get(name);
            let ex = p.exact.clone().unwrap();
            let (xr, yr) = (p.problem.domain.x_range(), p.problem.domain.y_range());
            let mut o = [0.0];
            for s in [0.0, 0.3, 0.77, 1.0] {
                let y = yr.0 + s * (yr.1 - yr.0);
                ex(0.4, xr.0, y, &mut o);
                assert!(o[0].abs() < 1e-14);
                ex(0.4, xr.1, y, &mut o);
                assert!(o[0].abs() < 1e-14, "{name}");
            }
        }
    }

    #[test]
    fn unknown_problem_is_config_error() {
        assert!(matches!(builtin_problem("nope", &ProblemParams::default()), Err(HpsError::Config(_))));
    }
}
