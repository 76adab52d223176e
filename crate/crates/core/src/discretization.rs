//! Variable-coefficient elliptic operator
//! `A u = -c11 u_xx - c22 u_yy + c1 u_x + c2 u_y + c u`, its leaf collocation
//! matrices, pointwise application on the global grid, and the global sparse
//! system used as a brute-force oracle for the hierarchical solver.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::chebyshev::generic_weights;
use crate::dense::{DenseMatrix, LuFactor};
use crate::error::{HpsError, Result};
use crate::tree::{Axis, DofKind, DomainTree};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A scalar coefficient field on the domain (`y` is ignored in 1D).
#[derive(Clone)]
pub enum Field {
    Const(f64),
    Func(ScalarFn),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Const(v) => write!(f, "Const({v})"),
            Field::Func(_) => write!(f, "Func(..)"),
        }
    }
}

impl Field {
    pub fn func(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Field::Func(Arc::new(f))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Field::Const(v) => *v,
            Field::Func(f) => f(x, y),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Field::Const(v) if *v == 0.0)
    }

    /// `a * self + b`.
    pub fn affine(&self, a: f64, b: f64) -> Field {
        match self {
            Field::Const(v) => Field::Const(a * v + b),
            Field::Func(f) => {
                if a == 0.0 {
                    return Field::Const(b);
                }
                let f = f.clone();
                Field::func(move |x, y| a * f(x, y) + b)
            }
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Const(v)
    }
}

/// Coefficients of the operator in the `-c11 u_xx - ...` convention.
#[derive(Clone, Debug)]
pub struct OperatorCoefficients {
    pub c11: Field,
    pub c22: Field,
    pub c1: Field,
    pub c2: Field,
    pub c: Field,
}

impl OperatorCoefficients {
    pub fn zero() -> Self {
        Self {
            c11: Field::Const(0.0),
            c22: Field::Const(0.0),
            c1: Field::Const(0.0),
            c2: Field::Const(0.0),
            c: Field::Const(0.0),
        }
    }

    /// `-u_xx - u_yy` (the negative Laplacian).
    pub fn neg_laplacian() -> Self {
        Self { c11: 1.0.into(), c22: 1.0.into(), ..Self::zero() }
    }

    /// Pure reaction `c u`.
    pub fn reaction(c: f64) -> Self {
        Self { c: c.into(), ..Self::zero() }
    }

    /// Checks `c11 > 0` (and `c22 > 0` in 2D) at every grid point of the tree.
    pub fn check_elliptic(&self, tree: &DomainTree) -> Result<()> {
        for &(x, y) in &tree.dof_coords {
            let a = self.c11.eval(x, y);
            let b = if tree.dim() == 2 { self.c22.eval(x, y) } else { 1.0 };
            if !(a > 0.0 && b > 0.0) {
                return Err(HpsError::Inconsistent(format!(
                    "operator not elliptic at ({x}, {y}): c11 = {a}, c22 = {b}"
                )));
            }
        }
        Ok(())
    }

    /// Coefficient values at a point, in the order (c11, c22, c1, c2, c).
    pub fn at(&self, x: f64, y: f64) -> [f64; 5] {
        [self.c11.eval(x, y), self.c22.eval(x, y), self.c1.eval(x, y), self.c2.eval(x, y), self.c.eval(x, y)]
    }
}

/// The parabolic spatial operator
/// `L u = a11 u_xx + a22 u_yy + b1 u_x + b2 u_y + c0 u`, i.e. `L = -A`.
#[derive(Clone, Debug)]
pub struct DiffusionForm {
    pub a11: Field,
    pub a22: Field,
    pub b1: Field,
    pub b2: Field,
    pub c0: Field,
}

impl DiffusionForm {
    pub fn heat(kappa: f64) -> Self {
        Self {
            a11: kappa.into(),
            a22: kappa.into(),
            b1: 0.0.into(),
            b2: 0.0.into(),
            c0: 0.0.into(),
        }
    }

    /// Coefficients of `A = -L`.
    pub fn to_operator(&self) -> OperatorCoefficients {
        OperatorCoefficients {
            c11: self.a11.clone(),
            c22: self.a22.clone(),
            c1: self.b1.affine(-1.0, 0.0),
            c2: self.b2.affine(-1.0, 0.0),
            c: self.c0.affine(-1.0, 0.0),
        }
    }

    pub fn from_operator(op: &OperatorCoefficients) -> Self {
        Self {
            a11: op.c11.clone(),
            a22: op.c22.clone(),
            b1: op.c1.affine(-1.0, 0.0),
            b2: op.c2.affine(-1.0, 0.0),
            c0: op.c.affine(-1.0, 0.0),
        }
    }
}

/// Coefficients of `sigma I + dt_gamma A`, i.e. `sigma I - dt_gamma L` for `A = -L`.
pub fn shift_reaction(coeffs: &OperatorCoefficients, sigma: f64, dt_gamma: f64) -> OperatorCoefficients {
    OperatorCoefficients {
        c11: coeffs.c11.affine(dt_gamma, 0.0),
        c22: coeffs.c22.affine(dt_gamma, 0.0),
        c1: coeffs.c1.affine(dt_gamma, 0.0),
        c2: coeffs.c2.affine(dt_gamma, 0.0),
        c: coeffs.c.affine(dt_gamma, sigma),
    }
}

/// Leaf collocation rows in leaf-local column order (interior then boundary).
#[derive(Clone, Debug)]
pub struct LeafSystem {
    /// Operator rows at the interior points, `n_int x n_local`.
    pub a: DenseMatrix,
    /// Coordinate-direction derivative rows at the boundary points, `n_b x n_local`:
    /// `d/dx` on vertical edges, `d/dy` on horizontal edges.
    pub flux: DenseMatrix,
}

/// Map from tensor index to leaf-local index (`usize::MAX` at corners).
fn tensor_to_local(tree: &DomainTree) -> Vec<usize> {
    let p = tree.p;
    let n = if tree.dim() == 1 { p } else { p * p };
    let mut m = vec![usize::MAX; n];
    for (k, &t) in tree.layout.tensor.iter().enumerate() {
        m[t] = k;
    }
    m
}

/// Collocation matrix rows of the operator on one leaf.
pub fn leaf_matrix(tree: &DomainTree, leaf: usize, coeffs: &OperatorCoefficients) -> LeafSystem {
    let p = tree.p;
    let lay = &tree.layout;
    let n_local = lay.len();
    let n_int = lay.n_interior;
    let loc = tensor_to_local(tree);
    let coords = tree.leaf_local_coords(leaf);
    let (dx, dxx) = (tree.dx(), tree.dxx());
    let mut a = DenseMatrix::zeros(n_int, n_local);
    for r in 0..n_int {
        let t = lay.tensor[r];
        let (x, y) = coords[r];
        let [c11, c22, c1, c2, c] = coeffs.at(x, y);
        if tree.dim() == 1 {
            for k in 0..p {
                a[(r, loc[k])] += -c11 * dxx[(t, k)] + c1 * dx[(t, k)];
            }
        } else {
            let (ix, iy) = (t % p, t / p);
            let (dy, dyy) = (tree.dy().unwrap(), tree.dyy().unwrap());
            for k in 0..p {
                a[(r, loc[iy * p + k])] += -c11 * dxx[(ix, k)] + c1 * dx[(ix, k)];
                a[(r, loc[k * p + ix])] += -c22 * dyy[(iy, k)] + c2 * dy[(iy, k)];
            }
        }
        a[(r, r)] += c;
    }
    LeafSystem { a, flux: leaf_flux_rows(tree) }
}

/// Derivative rows at the leaf boundary points (coefficient independent).
pub fn leaf_flux_rows(tree: &DomainTree) -> DenseMatrix {
    let p = tree.p;
    let lay = &tree.layout;
    let n_int = lay.n_interior;
    let loc = tensor_to_local(tree);
    let dx = tree.dx();
    let mut f = DenseMatrix::zeros(lay.n_boundary(), lay.len());
    for kb in 0..lay.n_boundary() {
        let t = lay.tensor[n_int + kb];
        if tree.dim() == 1 {
            for k in 0..p {
                f[(kb, loc[k])] = dx[(t, k)];
            }
            continue;
        }
        let (ix, iy) = (t % p, t / p);
        match lay.boundary_axis(kb) {
            Axis::X => {
                for k in 0..p {
                    f[(kb, loc[iy * p + k])] = dx[(ix, k)];
                }
            }
            Axis::Y => {
                let dy = tree.dy().unwrap();
                for k in 0..p {
                    f[(kb, loc[k * p + ix])] = dy[(iy, k)];
                }
            }
        }
    }
    f
}

/// Full tensor-grid values of a leaf from a global vector; corner values are
/// extrapolated along both adjacent edges and averaged.
pub fn leaf_tensor_values(tree: &DomainTree, leaf: usize, u: &[f64]) -> Vec<f64> {
    let p = tree.p;
    let dofs = tree.leaf_dofs(leaf);
    let n = if tree.dim() == 1 { p } else { p * p };
    let mut v = vec![0.0; n];
    for (k, &t) in tree.layout.tensor.iter().enumerate() {
        v[t] = u[dofs[k]];
    }
    if tree.dim() == 2 {
        fill_corners(tree, leaf, &mut v);
    }
    v
}

fn fill_corners(tree: &DomainTree, leaf: usize, v: &mut [f64]) {
    let p = tree.p;
    let (gx, gy) = tree.leaf_grids(leaf);
    let gy = gy.expect("2D leaf");
    let inner_x: Vec<f64> = gx.nodes()[1..p - 1].to_vec();
    let inner_y: Vec<f64> = gy.nodes()[1..p - 1].to_vec();
    let wx = generic_weights(&inner_x);
    let wy = generic_weights(&inner_y);
    let extrap = |nodes: &[f64], w: &[f64], vals: &[f64], at: f64| -> f64 {
        crate::chebyshev::barycentric_row(nodes, w, at).iter().zip(vals).map(|(l, v)| l * v).sum()
    };
    for iy in [0, p - 1] {
        for ix in [0, p - 1] {
            // along the horizontal edge iy (varying ix), and the vertical edge ix (varying iy)
            let hv: Vec<f64> = (1..p - 1).map(|k| v[iy * p + k]).collect();
            let vv: Vec<f64> = (1..p - 1).map(|k| v[k * p + ix]).collect();
            let a = extrap(&inner_x, &wx, &hv, gx.nodes()[ix]);
            let b = extrap(&inner_y, &wy, &vv, gy.nodes()[iy]);
            v[iy * p + ix] = 0.5 * (a + b);
        }
    }
}

/// Derivatives of a leaf's tensor values.
#[derive(Clone, Debug)]
pub struct LeafJet {
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub uxx: Vec<f64>,
    pub uyy: Vec<f64>,
}

pub fn leaf_jet(tree: &DomainTree, leaf: usize, u: &[f64], second: bool) -> LeafJet {
    let p = tree.p;
    let v = leaf_tensor_values(tree, leaf, u);
    let n = v.len();
    let (mut ux, mut uy, mut uxx, mut uyy) = (vec![0.0; n], vec![0.0; n], Vec::new(), Vec::new());
    if second {
        uxx = vec![0.0; n];
        uyy = vec![0.0; n];
    }
    let (dx, dxx) = (tree.dx(), tree.dxx());
    if tree.dim() == 1 {
        let vv = DVector::from_column_slice(&v);
        ux.copy_from_slice((dx * &vv).as_slice());
        if second {
            uxx.copy_from_slice((dxx * &vv).as_slice());
        }
        return LeafJet { u: v, ux, uy, uxx, uyy };
    }
    // tensor data as a p x p matrix M[ix, iy] (column-major matches t = iy * p + ix)
    let m = DenseMatrix::from_column_slice(p, p, &v);
    let (dy, dyy) = (tree.dy().unwrap(), tree.dyy().unwrap());
    let mx = dx * &m;
    let my = &m * dy.transpose();
    ux.copy_from_slice(mx.as_slice());
    uy.copy_from_slice(my.as_slice());
    if second {
        uxx.copy_from_slice((dxx * &m).as_slice());
        uyy.copy_from_slice((&m * dyy.transpose()).as_slice());
    }
    LeafJet { u: v, ux, uy, uxx, uyy }
}

/// Pointwise local quantities handed to `eval_pointwise` closures.
#[derive(Clone, Copy, Debug)]
pub struct PointJet {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uyy: f64,
}

/// Evaluates `f` at every global DOF from leaf-local spectral derivatives of
/// `u`; interface values are the average over the two abutting leaves.
/// Several output channels may be produced per point.
pub fn eval_pointwise<const K: usize>(
    tree: &DomainTree,
    u: &[f64],
    second: bool,
    f: impl Fn(&PointJet) -> [f64; K],
) -> [Vec<f64>; K] {
    let n = tree.n_dof();
    let mut out: [Vec<f64>; K] = std::array::from_fn(|_| vec![0.0; n]);
    let mut hits = vec![0u8; n];
    for leaf in 0..tree.n_leaves() {
        let jet = leaf_jet(tree, leaf, u, second);
        let dofs = tree.leaf_dofs(leaf);
        for (k, &t) in tree.layout.tensor.iter().enumerate() {
            let g = dofs[k];
            let (x, y) = tree.dof_coords[g];
            let pj = PointJet {
                x,
                y,
                u: jet.u[t],
                ux: jet.ux[t],
                uy: jet.uy[t],
                uxx: if second { jet.uxx[t] } else { 0.0 },
                uyy: if second { jet.uyy[t] } else { 0.0 },
            };
            let vals = f(&pj);
            for c in 0..K {
                out[c][g] += vals[c];
            }
            hits[g] += 1;
        }
    }
    for g in 0..n {
        if hits[g] > 1 {
            let s = 1.0 / hits[g] as f64;
            for o in out.iter_mut() {
                o[g] *= s;
            }
        }
    }
    out
}

/// `A u` at every DOF (pointwise, interface-averaged).
pub fn apply_operator(tree: &DomainTree, coeffs: &OperatorCoefficients, u: &[f64]) -> Vec<f64> {
    let [r] = eval_pointwise(tree, u, true, |q| {
        let [c11, c22, c1, c2, c] = coeffs.at(q.x, q.y);
        [-c11 * q.uxx - c22 * q.uyy + c1 * q.ux + c2 * q.uy + c * q.u]
    });
    r
}

/// `(u_x, u_y)` at every DOF.
pub fn gradient(tree: &DomainTree, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let [ux, uy] = eval_pointwise(tree, u, false, |q| [q.ux, q.uy]);
    (ux, uy)
}

/// Flux jump `flux_lower - flux_upper` at every interface DOF (zero elsewhere):
/// the coordinate-direction derivative of `u` taken from each abutting leaf.
pub fn flux_jump(tree: &DomainTree, u: &[f64]) -> Vec<f64> {
    let n = tree.n_dof();
    let mut jump = vec![0.0; n];
    let flux = leaf_flux_rows(tree);
    let n_int = tree.layout.n_interior;
    for leaf in 0..tree.n_leaves() {
        let dofs = tree.leaf_dofs(leaf);
        let ul = DVector::from_iterator(dofs.len(), dofs.iter().map(|&g| u[g]));
        let fl = &flux * ul;
        for (kb, &g) in dofs[n_int..].iter().enumerate() {
            if let DofKind::Interface { lower_leaf, .. } = tree.dof_kind[g] {
                if lower_leaf == leaf {
                    jump[g] += fl[kb];
                } else {
                    jump[g] -= fl[kb];
                }
            }
        }
    }
    jump
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowRole {
    Interior,
    Interface,
    Boundary,
}

/// Global collocation system in triplet form.
#[derive(Clone, Debug)]
pub struct GlobalSparse {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub roles: Vec<RowRole>,
}

impl GlobalSparse {
    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            a[(i, j)] += v;
        }
        a
    }

    /// Right-hand side: `g` on interior rows, `jump` (or 0) on interface
    /// rows, `f` on boundary rows.
    pub fn rhs(&self, f: &[f64], g: &[f64], jump: Option<&[f64]>) -> Vec<f64> {
        (0..self.n)
            .map(|i| match self.roles[i] {
                RowRole::Interior => g[i],
                RowRole::Interface => jump.map_or(0.0, |j| j[i]),
                RowRole::Boundary => f[i],
            })
            .collect()
    }

    /// Dense direct solve (desk-scale oracle).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = LuFactor::new(self.to_dense(), "global sparse system")?;
        Ok(lu.solve_vec(rhs))
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }
}

/// Assembles the global system: interior rows apply the operator, interface
/// rows difference the two leaves' derivative traces, boundary rows are identity.
pub fn assemble_global(tree: &DomainTree, coeffs: &OperatorCoefficients) -> GlobalSparse {
    let n = tree.n_dof();
    let mut triplets = Vec::new();
    let roles: Vec<RowRole> = tree
        .dof_kind
        .iter()
        .map(|k| match k {
            DofKind::Interior { .. } => RowRole::Interior,
            DofKind::Interface { .. } => RowRole::Interface,
            DofKind::Boundary { .. } => RowRole::Boundary,
        })
        .collect();
    let n_int = tree.layout.n_interior;
    for leaf in 0..tree.n_leaves() {
        let sys = leaf_matrix(tree, leaf, coeffs);
        let dofs = tree.leaf_dofs(leaf);
        for r in 0..n_int {
            for (c, &gc) in dofs.iter().enumerate() {
                let v = sys.a[(r, c)];
                if v != 0.0 {
                    triplets.push((dofs[r], gc, v));
                }
            }
        }
        for kb in 0..tree.layout.n_boundary() {
            let g = dofs[n_int + kb];
            if let DofKind::Interface { lower_leaf, .. } = tree.dof_kind[g] {
                let sign = if lower_leaf == leaf { 1.0 } else { -1.0 };
                for (c, &gc) in dofs.iter().enumerate() {
                    let v = sys.flux[(kb, c)];
                    if v != 0.0 {
                        triplets.push((g, gc, sign * v));
                    }
                }
            }
        }
    }
    for (g, role) in roles.iter().enumerate() {
        if *role == RowRole::Boundary {
            triplets.push((g, g, 1.0));
        }
    }
    GlobalSparse { n, triplets, roles }
}

/// Samples a function at every DOF.
pub fn sample(tree: &DomainTree, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    tree.dof_coords.iter().map(|&(x, y)| f(x, y)).collect()
}

/// Value at an arbitrary point of the leaf interpolant of `u`.
pub fn interpolate_at(tree: &DomainTree, u: &[f64], x: f64, y: f64) -> Result<f64> {
    let leaf = tree.locate(x, y)?;
    let b = tree.leaf_node(leaf).bbox;
    let vals = leaf_tensor_values(tree, leaf, u);
    let (gx, gy) = tree.leaf_grids(leaf);
    let x = x.clamp(b.x0, b.x1);
    match gy {
        None => gx.interpolate(&vals, x),
        Some(gy) => crate::chebyshev::interpolate_2d(&gx, &gy, &vals, x, y.clamp(b.y0, b.y1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, Domain};
    use std::f64::consts::PI;

    fn square() -> Domain {
        Domain::Rect { x: (0.0, 1.0), y: (0.0, 1.0) }
    }

    fn apply_leaf(tree: &DomainTree, sys: &LeafSystem, leaf: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let u: Vec<f64> = tree.leaf_local_coords(leaf).iter().map(|&(x, y)| f(x, y)).collect();
        (&sys.a * DVector::from_vec(u)).as_slice().to_vec()
    }

    #[test]
    fn laplacian_kills_constants() {
        let t = build_tree(square(), 2, 2, 8).unwrap();
        let sys = leaf_matrix(&t, 3, &OperatorCoefficients::neg_laplacian());
        assert!(apply_leaf(&t, &sys, 3, |_, _| 1.0).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn reaction_is_interior_selection() {
        let t = build_tree(square(), 1, 1, 7).unwrap();
        let sys = leaf_matrix(&t, 0, &OperatorCoefficients::reaction(1.0));
        let n_int = t.layout.n_interior;
        for r in 0..n_int {
            for c in 0..t.layout.len() {
                assert_eq!(sys.a[(r, c)], if r == c { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn variable_coefficient_divergence_form() {
        let t = build_tree(Domain::Interval(0.0, 1.0), 1, 1, 20).unwrap();
        let a = |x: f64| 1.0 + 0.9 * (1.0 + 1.9 * PI * x).sin();
        let da = |x: f64| 0.9 * 1.9 * PI * (1.0 + 1.9 * PI * x).cos();
        let coeffs = OperatorCoefficients {
            c11: Field::func(move |x, _| a(x)),
            c1: Field::func(move |x, _| -da(x)),
            ..OperatorCoefficients::zero()
        };
        let sys = leaf_matrix(&t, 0, &coeffs);
        let got = apply_leaf(&t, &sys, 0, |x, _| (PI * x).sin());
        let coords = t.leaf_local_coords(0);
        let mut err = 0.0f64;
        for (r, v) in got.iter().enumerate() {
            let x = coords[r].0;
            // -(a u')' with u = sin(pi x)
            let exact = -(da(x) * PI * (PI * x).cos() - a(x) * PI * PI * (PI * x).sin());
            err = err.max((v - exact).abs());
        }
        // sin(pi x) is resolved to ~1e-13 at p = 20; the remaining error is rounding in D2
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn shift_identity_and_pure_operator() {
        let base = OperatorCoefficients::neg_laplacian();
        let id = shift_reaction(&base, 1.0, 0.0);
        assert!(id.c11.is_zero() && id.c22.is_zero() && id.c1.is_zero() && id.c2.is_zero());
        assert_eq!(id.c.eval(0.3, 0.1), 1.0);
        let pure = shift_reaction(&base, 0.0, 0.5);
        assert_eq!(pure.c11.eval(0.0, 0.0), 0.5);
        assert_eq!(pure.c.eval(0.0, 0.0), 0.0);
    }

    #[test]
    fn shifted_heat_on_exponential() {
        let t = build_tree(Domain::Interval(0.0, 1.0), 1, 1, 16).unwrap();
        let heat = DiffusionForm::heat(1.0).to_operator();
        let sys = leaf_matrix(&t, 0, &shift_reaction(&heat, 1.0, 0.1));
        let got = apply_leaf(&t, &sys, 0, |x, _| x.exp());
        let coords = t.leaf_local_coords(0);
        for (r, v) in got.iter().enumerate() {
            let x = coords[r].0;
            assert!((v - 0.9 * x.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn diffusion_form_roundtrip() {
        let l = DiffusionForm {
            a11: 2.0.into(),
            a22: Field::func(|x, y| 1.0 + x * y),
            b1: 0.5.into(),
            b2: Field::func(|x, _| x),
            c0: (-3.0).into(),
        };
        let a = l.to_operator();
        assert_eq!(a.c1.eval(0.0, 0.0), -0.5);
        assert_eq!(a.c2.eval(0.25, 0.0), -0.25);
        assert_eq!(a.c.eval(0.0, 0.0), 3.0);
        let back = DiffusionForm::from_operator(&a);
        for (x, y) in [(0.1, 0.2), (0.7, 0.9)] {
            assert_eq!(back.a22.eval(x, y), l.a22.eval(x, y));
            assert_eq!(back.b1.eval(x, y), l.b1.eval(x, y));
            assert_eq!(back.b2.eval(x, y), l.b2.eval(x, y));
            assert_eq!(back.c0.eval(x, y), l.c0.eval(x, y));
        }
    }

    #[test]
    fn leaf_exact_on_low_degree_polynomials() {
        let t = build_tree(Domain::Rect { x: (0.0, 0.5), y: (1.0, 2.0) }, 1, 1, 9).unwrap();
        let coeffs = OperatorCoefficients {
            c11: 2.0.into(),
            c22: 0.5.into(),
            c1: 1.0.into(),
            c2: (-1.5).into(),
            c: 0.25.into(),
        };
        let sys = leaf_matrix(&t, 0, &coeffs);
        let f = |x: f64, y: f64| x.powi(3) * y.powi(2) + x * y.powi(3) - 2.0 * y;
        let got = apply_leaf(&t, &sys, 0, f);
        for (r, v) in got.iter().enumerate() {
            let (x, y) = t.leaf_local_coords(0)[r];
            let uxx = 6.0 * x * y * y;
            let uyy = 2.0 * x.powi(3) + 6.0 * x * y;
            let ux = 3.0 * x * x * y * y + y.powi(3);
            let uy = 2.0 * x.powi(3) * y + 3.0 * x * y * y - 2.0;
            let exact = -2.0 * uxx - 0.5 * uyy + ux - 1.5 * uy + 0.25 * f(x, y);
            assert!((v - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn flux_rows_on_linear_field() {
        let t = build_tree(square(), 1, 1, 6).unwrap();
        let f = leaf_flux_rows(&t);
        let u: Vec<f64> = t.leaf_local_coords(0).iter().map(|&(x, y)| 2.0 * x - 3.0 * y).collect();
        let d = &f * DVector::from_vec(u);
        for kb in 0..t.layout.n_boundary() {
            let expect = match t.layout.boundary_axis(kb) {
                Axis::X => 2.0,
                Axis::Y => -3.0,
            };
            assert!((d[kb] - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn pointwise_operator_and_gradient_with_corners() {
        let t = build_tree(square(), 2, 2, 14).unwrap();
        let f = |x: f64, y: f64| (x + 0.3).sin() * (1.0 + y * y);
        let u = sample(&t, f);
        let au = apply_operator(&t, &OperatorCoefficients::neg_laplacian(), &u);
        let (ux, uy) = gradient(&t, &u);
        for g in 0..t.n_dof() {
            let (x, y) = t.dof_coords[g];
            let lap = -(x + 0.3).sin() * (1.0 + y * y) + (x + 0.3).sin() * 2.0;
            assert!((au[g] + lap).abs() < 1e-6, "dof {g} {:?}", t.dof_kind[g]);
            assert!((ux[g] - (x + 0.3).cos() * (1.0 + y * y)).abs() < 1e-8);
            assert!((uy[g] - (x + 0.3).sin() * 2.0 * y).abs() < 1e-8);
        }
    }

    #[test]
    fn flux_jump_zero_for_smooth_field() {
        let t = build_tree(square(), 2, 2, 10).unwrap();
        let u = sample(&t, |x, y| x * x - y * y + x * y);
        assert!(flux_jump(&t, &u).iter().all(|v| v.abs() < 1e-10));
        let kink = sample(&t, |x, _| (x - 0.5).abs());
        let j = flux_jump(&t, &kink);
        for g in t.interface_dofs() {
            if let DofKind::Interface { axis: Axis::X, .. } = t.dof_kind[g] {
                assert!((j[g] + 2.0).abs() < 1e-10);
            }
        }
    }

    fn oracle_solve(t: &DomainTree, coeffs: &OperatorCoefficients, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let gs = assemble_global(t, coeffs);
        let f = sample(t, &exact);
        let rhs = gs.rhs(&f, &vec![0.0; t.n_dof()], None);
        let u = gs.solve(&rhs).unwrap();
        u.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn global_single_leaf_linear() {
        let t = build_tree(square(), 1, 1, 8).unwrap();
        assert!(oracle_solve(&t, &OperatorCoefficients::neg_laplacian(), |x, _| x) < 1e-12);
    }

    #[test]
    fn global_four_leaves_harmonic() {
        let t = build_tree(square(), 2, 2, 8).unwrap();
        assert!(oracle_solve(&t, &OperatorCoefficients::neg_laplacian(), |x, y| x * x - y * y) < 1e-10);
    }

    #[test]
    fn global_roles() {
        let t = build_tree(square(), 2, 2, 6).unwrap();
        let gs = assemble_global(&t, &OperatorCoefficients::neg_laplacian());
        assert_eq!(gs.n, 112);
        let n_if = gs.roles.iter().filter(|r| **r == RowRole::Interface).count();
        assert_eq!(n_if, t.interface_dofs().len());
        assert!(gs.nnz() > 0);
    }

    #[test]
    fn interpolation_reproduces_polynomials_off_grid() {
        let t = build_tree(square(), 2, 2, 8).unwrap();
        let f = |x: f64, y: f64| x.powi(3) - 2.0 * x * y * y + y;
        let u = sample(&t, f);
        for &(x, y) in &[(0.1, 0.2), (0.5, 0.5), (0.73, 0.01), (1.0, 1.0), (0.0, 0.6)] {
            assert!((interpolate_at(&t, &u, x, y).unwrap() - f(x, y)).abs() < 1e-12);
        }
        let t1 = build_tree(Domain::Interval(-1.0, 1.0), 4, 1, 6).unwrap();
        let u1 = sample(&t1, |x, _| x.powi(4));
        assert!((interpolate_at(&t1, &u1, 0.3, 0.0).unwrap() - 0.0081).abs() < 1e-13);
        assert!(interpolate_at(&t1, &u1, 2.0, 0.0).is_err());
    }
}
