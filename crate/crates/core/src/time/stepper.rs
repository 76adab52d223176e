//! One-step maps for the stage and slope formulations on a fixed-`dt` HPS
//! operator set for `I - dt gamma L`.

use std::sync::Arc;

use crate::discretization::{apply_operator, flux_jump, OperatorCoefficients};
use crate::error::{HpsError, Result};
use crate::hps::{HpsOperatorSet, Shift};
use crate::time::problem::{evaluate_nonlinear, Fields, ParabolicProblem};
use crate::time::tableau::ButcherPair;
use crate::tree::{DofKind, DomainTree};

/// Any stage value above this aborts the step.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Stage,
    Slope,
    /// Slope formulation with the interface flux-jump penalty.
    SlopePenalized,
}

impl Formulation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stage" => Some(Self::Stage),
            "slope" => Some(Self::Slope),
            "slope-penalized" => Some(Self::SlopePenalized),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Stage => "stage",
            Self::Slope => "slope",
            Self::SlopePenalized => "slope-penalized",
        }
    }
}

/// Which Butcher weights the source `q` takes in the stage formulation.
/// `Explicit` uses the ERK row; `Implicit` uses the ESDIRK row (including the
/// diagonal), so stage defects vanish wherever `u_t` does.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SourceWeights {
    #[default]
    Explicit,
    Implicit,
}

impl SourceWeights {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "explicit" => Some(Self::Explicit),
            "implicit" => Some(Self::Implicit),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Explicit => "explicit",
            Self::Implicit => "implicit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepperState {
    pub t: f64,
    pub step: usize,
    pub dt: f64,
    pub u: Fields,
}

pub struct Stepper {
    problem: Arc<ParabolicProblem>,
    tree: Arc<DomainTree>,
    pair: ButcherPair,
    formulation: Formulation,
    coeffs: OperatorCoefficients,
    dt: f64,
    ops: HpsOperatorSet,
    /// Identity operator, for explicit slopes of the multi-stage slope form:
    /// leaf interiors take the given values, interfaces close by flux continuity.
    explicit_ops: Option<HpsOperatorSet>,
    source_weights: SourceWeights,
    is_boundary: Vec<bool>,
}

fn max_abs(f: &Fields) -> f64 {
    f.iter().flatten().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// `acc += s * x` componentwise.
fn axpy(acc: &mut Fields, s: f64, x: &Fields) {
    if s == 0.0 {
        return;
    }
    for (a, b) in acc.iter_mut().zip(x) {
        for (p, q) in a.iter_mut().zip(b) {
            *p += s * q;
        }
    }
}

impl Stepper {
    pub fn new(
        problem: Arc<ParabolicProblem>,
        tree: Arc<DomainTree>,
        pair: ButcherPair,
        formulation: Formulation,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(HpsError::InvalidStep(dt));
        }
        if tree.domain != problem.domain {
            return Err(HpsError::Inconsistent(format!(
                "tree domain {:?} differs from problem domain {:?}",
                tree.domain, problem.domain
            )));
        }
        if formulation != Formulation::Stage && !problem.is_linear() && !problem.time_independent_bc {
            return Err(HpsError::Unsupported(
                "slope formulation with a nonlinear term needs time-independent boundary data".into(),
            ));
        }
        if formulation != Formulation::Stage && problem.boundary_rate_fields(&tree, 0.0).is_none() {
            return Err(HpsError::Unsupported(
                "slope formulation needs the time derivative of the boundary data".into(),
            ));
        }
        let coeffs = problem.operator.to_operator();
        let shift = Shift::new(1.0, dt * pair.gamma);
        let ops = HpsOperatorSet::build(tree.clone(), &coeffs, shift)?;
        let explicit_ops = if formulation != Formulation::Stage && pair.s > 1 {
            Some(HpsOperatorSet::build(tree.clone(), &coeffs, Shift::new(1.0, 0.0))?)
        } else {
            None
        };
        let is_boundary = tree.dof_kind.iter().map(|k| matches!(k, DofKind::Boundary { .. })).collect();
        Ok(Self { problem, tree, pair, formulation, coeffs, dt, ops, explicit_ops, source_weights: SourceWeights::Explicit, is_boundary })
    }

    /// Only affects the stage formulation; slopes always take `q` implicitly.
    pub fn with_source_weights(mut self, w: SourceWeights) -> Self {
        self.source_weights = w;
        self
    }

    pub fn source_weights(&self) -> SourceWeights {
        self.source_weights
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ops(&self) -> &HpsOperatorSet {
        &self.ops
    }

    pub fn tree(&self) -> &Arc<DomainTree> {
        &self.tree
    }

    pub fn pair(&self) -> &ButcherPair {
        &self.pair
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn problem(&self) -> &Arc<ParabolicProblem> {
        &self.problem
    }

    /// Changes the step size, rebuilding the operator set when it differs.
    pub fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(HpsError::InvalidStep(dt));
        }
        if dt != self.dt {
            self.ops = HpsOperatorSet::build(self.tree.clone(), &self.coeffs, Shift::new(1.0, dt * self.pair.gamma))?;
            self.dt = dt;
        }
        Ok(())
    }

    pub fn initial_state(&self, t0: f64) -> StepperState {
        StepperState { t: t0, step: 0, dt: self.dt, u: self.problem.initial_fields(&self.tree, t0) }
    }

    /// Advances one step.
    pub fn step(&self, state: &StepperState) -> Result<StepperState> {
        let expected = Shift::new(1.0, state.dt * self.pair.gamma);
        if state.dt != self.dt || self.ops.shift() != expected {
            return Err(HpsError::OperatorMismatch(format!(
                "state step {} but operators built for {}",
                state.dt, self.dt
            )));
        }
        let u = match (self.formulation, self.pair.first_stage_explicit) {
            (Formulation::Stage, true) => self.stage_esdirk(state)?,
            (Formulation::Stage, false) => self.stage_single(state)?,
            (_, true) => self.slope_esdirk(state)?,
            (_, false) => self.slope_single(state)?,
        };
        let next = StepperState { t: state.t + self.dt, step: state.step + 1, dt: self.dt, u };
        self.guard(&next.u, next.step, next.t)?;
        Ok(next)
    }

    /// Runs `n` steps, calling `observe` after each.
    pub fn run(&self, mut state: StepperState, n: usize, mut observe: impl FnMut(&StepperState)) -> Result<StepperState> {
        for _ in 0..n {
            state = self.step(&state)?;
            observe(&state);
        }
        Ok(state)
    }

    fn guard(&self, f: &Fields, step: usize, t: f64) -> Result<()> {
        let m = max_abs(f);
        if !(m <= DIVERGENCE_LIMIT) {
            return Err(HpsError::Divergence { step, t, max_abs: m });
        }
        Ok(())
    }

    fn apply_l(&self, u: &Fields) -> Fields {
        u.iter().map(|uc| apply_operator(&self.tree, &self.coeffs, uc).into_iter().map(|v| -v).collect()).collect()
    }

    /// `q(t) + g(t, u)`, or `None` when both vanish identically.
    fn explicit_term(&self, t: f64, u: &Fields) -> Option<Fields> {
        let q = self.problem.source_fields(&self.tree, t).filter(|_| !self.implicit_source());
        if self.problem.is_linear() {
            return q;
        }
        let mut g = evaluate_nonlinear(&self.problem, &self.tree, t, u);
        if let Some(q) = q {
            axpy(&mut g, 1.0, &q);
        }
        Some(g)
    }

    fn implicit_source(&self) -> bool {
        self.formulation == Formulation::Stage && self.source_weights == SourceWeights::Implicit
    }

    fn implicit_q(&self, t: f64) -> Option<Fields> {
        if self.implicit_source() {
            self.problem.source_fields(&self.tree, t)
        } else {
            None
        }
    }

    fn solve_all(&self, bc: &Fields, rhs: &Fields, jump: Option<&Fields>) -> Result<Fields> {
        (0..rhs.len())
            .map(|c| match jump {
                Some(j) => self.ops.solve_penalized(&bc[c], &rhs[c], &j[c], self.dt),
                None => self.ops.solve_with_body_load(&bc[c], &rhs[c]),
            })
            .collect()
    }

    fn explicit_solve(&self, bc: &Fields, vals: &Fields, jump: Option<&Fields>) -> Result<Fields> {
        let ops = self.explicit_ops.as_ref().expect("built for slope formulations");
        (0..vals.len())
            .map(|c| match jump {
                Some(j) => ops.solve_penalized(&bc[c], &vals[c], &j[c], self.dt),
                None => ops.solve_general(&bc[c], Some(&vals[c]), None),
            })
            .collect()
    }

    fn zero_boundary(&self, f: &mut Fields) {
        for fc in f.iter_mut() {
            for (v, b) in fc.iter_mut().zip(&self.is_boundary) {
                if *b {
                    *v = 0.0;
                }
            }
        }
    }

    fn stage_single(&self, st: &StepperState) -> Result<Fields> {
        let dt = self.dt;
        let mut rhs = st.u.clone();
        if let Some(e) = self.explicit_term(st.t, &st.u) {
            axpy(&mut rhs, dt, &e);
        }
        if let Some(q) = self.implicit_q(st.t + dt) {
            axpy(&mut rhs, dt, &q);
        }
        let bc = self.problem.boundary_fields(&self.tree, st.t + dt);
        self.solve_all(&bc, &rhs, None)
    }

    fn stage_esdirk(&self, st: &StepperState) -> Result<Fields> {
        let p = &self.pair;
        let (s, dt) = (p.s, self.dt);
        let mut stages: Vec<Fields> = Vec::with_capacity(s);
        let mut lu: Vec<Fields> = Vec::with_capacity(s);
        let mut ex: Vec<Option<Fields>> = Vec::with_capacity(s);
        // with implicit source weights lu[j] holds L u_j + q(t_j)
        let l_plus_q = |u: &Fields, t: f64| {
            let mut v = self.apply_l(u);
            if let Some(q) = self.implicit_q(t) {
                axpy(&mut v, 1.0, &q);
            }
            v
        };
        stages.push(st.u.clone());
        lu.push(l_plus_q(&st.u, st.t));
        ex.push(self.explicit_term(st.t, &st.u));
        for i in 1..s {
            let ti = st.t + p.c[i] * dt;
            let mut rhs = st.u.clone();
            if let Some(q) = self.implicit_q(ti) {
                axpy(&mut rhs, dt * p.a[i][i], &q);
            }
            for j in 0..i {
                axpy(&mut rhs, dt * p.a[i][j], &lu[j]);
                if let Some(e) = &ex[j] {
                    axpy(&mut rhs, dt * p.ahat[i][j], e);
                }
            }
            let bc = self.problem.boundary_fields(&self.tree, ti);
            let ui = self.solve_all(&bc, &rhs, None)?;
            self.guard(&ui, st.step + 1, ti)?;
            if i + 1 < s || !p.stiffly_accurate() {
                lu.push(l_plus_q(&ui, ti));
            }
            ex.push(self.explicit_term(ti, &ui));
            stages.push(ui);
        }
        if p.stiffly_accurate() {
            // last stage plus the explicit weights it is missing
            let mut u = stages.pop().expect("at least one stage");
            let last = &p.ahat[s - 1];
            let mut corr: Fields = vec![vec![0.0; self.tree.n_dof()]; u.len()];
            let mut any = false;
            for j in 0..s {
                if let Some(e) = &ex[j] {
                    axpy(&mut corr, dt * (p.bhat[j] - last[j]), e);
                    any = true;
                }
            }
            if any {
                self.zero_boundary(&mut corr);
                axpy(&mut u, 1.0, &corr);
            }
            return Ok(u);
        }
        let mut u = st.u.clone();
        for j in 0..s {
            axpy(&mut u, dt * p.b[j], &lu[j]);
            if let Some(e) = &ex[j] {
                axpy(&mut u, dt * p.bhat[j], e);
            }
        }
        let bc = self.problem.boundary_fields(&self.tree, st.t + dt);
        for c in 0..u.len() {
            for (k, b) in self.is_boundary.iter().enumerate() {
                if *b {
                    u[c][k] = bc[c][k];
                }
            }
        }
        Ok(u)
    }

    fn penalty(&self, u: &Fields) -> Option<Fields> {
        (self.formulation == Formulation::SlopePenalized).then(|| u.iter().map(|uc| flux_jump(&self.tree, uc)).collect())
    }

    fn slope_bc(&self, t: f64) -> Fields {
        if self.problem.is_linear() {
            self.problem.boundary_rate_fields(&self.tree, t).expect("checked at construction")
        } else {
            vec![vec![0.0; self.tree.n_dof()]; self.problem.components]
        }
    }

    fn slope_single(&self, st: &StepperState) -> Result<Fields> {
        let dt = self.dt;
        let mut rhs = self.apply_l(&st.u);
        if let Some(e) = self.explicit_term(st.t, &st.u) {
            axpy(&mut rhs, 1.0, &e);
        }
        let jump = self.penalty(&st.u);
        let k = self.solve_all(&self.slope_bc(st.t + dt), &rhs, jump.as_ref())?;
        let mut u = st.u.clone();
        axpy(&mut u, dt, &k);
        Ok(u)
    }

    fn slope_esdirk(&self, st: &StepperState) -> Result<Fields> {
        let p = &self.pair;
        let (s, dt) = (p.s, self.dt);
        let linear = self.problem.is_linear();
        let jump = self.penalty(&st.u);

        let mut k: Vec<Fields> = Vec::with_capacity(s);
        let mut l: Vec<Fields> = Vec::with_capacity(s);
        let zero = vec![vec![0.0; self.tree.n_dof()]; st.u.len()];
        let mut k0 = self.apply_l(&st.u);
        if let Some(q) = self.problem.source_fields(&self.tree, st.t) {
            axpy(&mut k0, 1.0, &q);
        }
        k.push(self.explicit_solve(&self.slope_bc(st.t), &k0, jump.as_ref())?);
        if !linear {
            let l0 = evaluate_nonlinear(&self.problem, &self.tree, st.t, &st.u);
            l.push(self.explicit_solve(&zero, &l0, None)?);
        }
        for i in 1..s {
            let ti = st.t + p.c[i] * dt;
            // L applied to the known part of the stage value
            let mut arg = st.u.clone();
            for j in 0..i {
                axpy(&mut arg, dt * p.a[i][j], &k[j]);
                if !linear {
                    axpy(&mut arg, dt * p.ahat[i][j], &l[j]);
                }
            }
            let mut rhs = self.apply_l(&arg);
            if let Some(q) = self.problem.source_fields(&self.tree, ti) {
                axpy(&mut rhs, 1.0, &q);
            }
            let ki = self.solve_all(&self.slope_bc(ti), &rhs, jump.as_ref())?;
            self.guard(&ki, st.step + 1, ti)?;
            if !linear {
                axpy(&mut arg, dt * p.a[i][i], &ki);
                let li = evaluate_nonlinear(&self.problem, &self.tree, ti, &arg);
                l.push(self.explicit_solve(&zero, &li, None)?);
            }
            k.push(ki);
        }
        let mut u = st.u.clone();
        for j in 0..s {
            axpy(&mut u, dt * p.b[j], &k[j]);
            if !linear {
                axpy(&mut u, dt * p.bhat[j], &l[j]);
            }
        }
        Ok(u)
    }
}
