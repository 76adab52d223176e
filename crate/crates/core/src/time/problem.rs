//! Parabolic problems `u_t = L u + q(t, x) + g(t, u, grad u)` with Dirichlet data.

use std::fmt;
use std::sync::Arc;

use crate::discretization::{gradient, DiffusionForm};
use crate::tree::{Domain, DomainTree};

/// `(t, x, y, out)`: writes one value per component.
pub type PointFn = Arc<dyn Fn(f64, f64, f64, &mut [f64]) + Send + Sync>;

/// `(t, x, y, u, u_x, u_y, out)`: pointwise nonlinearity using at most first derivatives.
pub type NonlinearFn = Arc<dyn Fn(f64, f64, f64, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryData {
    Homogeneous,
    /// Dirichlet values `f` and, when available, their time derivative `f_t`.
    Function { f: PointFn, f_t: Option<PointFn> },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Homogeneous => write!(f, "Homogeneous"),
            BoundaryData::Function { f_t, .. } => write!(f, "Function {{ f_t: {} }}", f_t.is_some()),
        }
    }
}

#[derive(Clone)]
pub struct ParabolicProblem {
    pub name: String,
    pub domain: Domain,
    /// The spatial operator `L` (diffusion-positive convention).
    pub operator: DiffusionForm,
    pub components: usize,
    pub source: Option<PointFn>,
    pub nonlinear: Option<NonlinearFn>,
    pub boundary: BoundaryData,
    pub initial: PointFn,
    /// Boundary values do not change in time.
    pub time_independent_bc: bool,
}

impl fmt::Debug for ParabolicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParabolicProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("components", &self.components)
            .field("source", &self.source.is_some())
            .field("nonlinear", &self.nonlinear.is_some())
            .field("boundary", &self.boundary)
            .field("time_independent_bc", &self.time_independent_bc)
            .finish()
    }
}

/// Component-major field: `u[c][dof]`.
pub type Fields = Vec<Vec<f64>>;

fn sample_fields(tree: &DomainTree, comps: usize, t: f64, f: &PointFn) -> Fields {
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

impl ParabolicProblem {
    pub fn is_linear(&self) -> bool {
        self.nonlinear.is_none()
    }

    pub fn initial_fields(&self, tree: &DomainTree, t0: f64) -> Fields {
        sample_fields(tree, self.components, t0, &self.initial)
    }

    /// Dirichlet values at time `t` on every DOF (only boundary entries are used).
    pub fn boundary_fields(&self, tree: &DomainTree, t: f64) -> Fields {
        match &self.boundary {
            BoundaryData::Homogeneous => vec![vec![0.0; tree.n_dof()]; self.components],
            BoundaryData::Function { f, .. } => sample_fields(tree, self.components, t, f),
        }
    }

    /// Time derivative of the Dirichlet values, `None` when not provided.
    pub fn boundary_rate_fields(&self, tree: &DomainTree, t: f64) -> Option<Fields> {
        match &self.boundary {
            BoundaryData::Homogeneous => Some(vec![vec![0.0; tree.n_dof()]; self.components]),
            BoundaryData::Function { f_t: Some(ft), .. } => Some(sample_fields(tree, self.components, t, ft)),
            BoundaryData::Function { f_t: None, .. } => {
                if self.time_independent_bc {
                    Some(vec![vec![0.0; tree.n_dof()]; self.components])
                } else {
                    None
                }
            }
        }
    }

    pub fn source_fields(&self, tree: &DomainTree, t: f64) -> Option<Fields> {
        self.source.as_ref().map(|q| sample_fields(tree, self.components, t, q))
    }
}

/// `g(t, u)` at every DOF using spectral first derivatives (interface-averaged).
pub fn evaluate_nonlinear(problem: &ParabolicProblem, tree: &DomainTree, t: f64, u: &Fields) -> Fields {
    let comps = problem.components;
    let n = tree.n_dof();
    let Some(g) = &problem.nonlinear else {
        return vec![vec![0.0; n]; comps];
    };
    let grads: Vec<(Vec<f64>, Vec<f64>)> = u.iter().map(|uc| gradient(tree, uc)).collect();
    let mut out = vec![vec![0.0; n]; comps];
    let (mut uu, mut ux, mut uy, mut buf) = (vec![0.0; comps], vec![0.0; comps], vec![0.0; comps], vec![0.0; comps]);
    for (k, &(x, y)) in tree.dof_coords.iter().enumerate() {
        for c in 0..comps {
            uu[c] = u[c][k];
            ux[c] = grads[c].0[k];
            uy[c] = grads[c].1[k];
        }
        g(t, x, y, &uu, &ux, &uy, &mut buf);
        for c in 0..comps {
            out[c][k] = buf[c];
        }
    }
    out
}
