//! Chebyshev collocation on an interval: nodes, differentiation matrices,
//! tensor-product Laplacians and barycentric interpolation.
//!
//! Nodes are stored in descending order, `x_0 = b` down to `x_{p-1} = a`,
//! which is the image of `cos(j pi / (p - 1))`. Every index computation in the
//! crate relies on this convention.

use std::f64::consts::PI;

use crate::dense::DenseMatrix;
use crate::error::{HpsError, Result};

/// Relative slack allowed when deciding whether a query lies in the interval.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ChebGrid1D {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
}

impl ChebGrid1D {
    pub fn new(p: usize, a: f64, b: f64) -> Result<Self> {
        if p < 3 {
            return Err(HpsError::InvalidOrder(p));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(HpsError::InvalidInterval(a, b));
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let nodes = (0..p)
            .map(|j| {
                if j == 0 {
                    b
                } else if j == p - 1 {
                    a
                } else if 2 * j == p - 1 {
                    mid
                } else {
                    // sin form keeps the nodes exactly symmetric about the midpoint
                    mid + half * (PI * ((p - 1) as f64 - 2.0 * j as f64) / (2.0 * (p - 1) as f64)).sin()
                }
            })
            .collect();
        Ok(Self { a, b, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Barycentric weights `(-1)^j delta_j` (halved at the ends). They are
    /// invariant under the affine map to `[a, b]` up to a common factor.
    pub fn barycentric_weights(&self) -> Vec<f64> {
        let p = self.len();
        (0..p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == p - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect()
    }

    /// First or second derivative matrix. Diagonals use the negative-sum
    /// identity so that constants are differentiated to zero exactly.
    pub fn diff_matrix(&self, order: usize) -> DenseMatrix {
        let d1 = self.first_derivative();
        match order {
            1 => d1,
            2 => second_from_first(&self.nodes, &d1),
            _ => panic!("differentiation order {order} not supported"),
        }
    }

    fn first_derivative(&self) -> DenseMatrix {
        let p = self.len();
        let w = self.barycentric_weights();
        let x = &self.nodes;
        let mut d = DenseMatrix::zeros(p, p);
        for i in 0..p {
            let mut diag = 0.0;
            for j in 0..p {
                if i != j {
                    let v = (w[j] / w[i]) / (x[i] - x[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = DOMAIN_SLACK * (self.b - self.a);
        x >= self.a - slack && x <= self.b + slack
    }

    /// Barycentric interpolation of nodal `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(HpsError::OutOfDomain { x, y: 0.0 });
        }
        Ok(self.interpolation_row(x).iter().zip(values).map(|(l, v)| l * v).sum())
    }

    /// Lagrange basis values `l_j(x)` for all nodes.
    pub fn interpolation_row(&self, x: f64) -> Vec<f64> {
        barycentric_row(&self.nodes, &self.barycentric_weights(), x)
    }
}

/// Convenience constructor mirroring `ChebGrid1D::new`.
pub fn cheb_nodes(p: usize, interval: (f64, f64)) -> Result<ChebGrid1D> {
    ChebGrid1D::new(p, interval.0, interval.1)
}

/// Second-derivative matrix from the first-derivative entries:
/// `D2_ij = 2 D_ij (D_ii - 1/(x_i - x_j))` off the diagonal, negative-sum diagonal.
fn second_from_first(x: &[f64], d1: &DenseMatrix) -> DenseMatrix {
    let p = x.len();
    let mut d2 = DenseMatrix::zeros(p, p);
    for i in 0..p {
        let mut diag = 0.0;
        for j in 0..p {
            if i != j {
                let v = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / (x[i] - x[j]));
                d2[(i, j)] = v;
                diag -= v;
            }
        }
        d2[(i, i)] = diag;
    }
    d2
}

/// Lagrange basis at `x` for arbitrary distinct nodes with the given barycentric weights.
pub fn barycentric_row(nodes: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    let mut row = vec![0.0; nodes.len()];
    if let Some(k) = nodes.iter().position(|&xj| xj == x) {
        row[k] = 1.0;
        return row;
    }
    let mut denom = 0.0;
    for (j, (&xj, &wj)) in nodes.iter().zip(weights).enumerate() {
        let t = wj / (x - xj);
        row[j] = t;
        denom += t;
    }
    row.iter_mut().for_each(|v| *v /= denom);
    row
}

/// Barycentric weights for arbitrary distinct nodes, normalized to max modulus one.
pub fn generic_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let prod: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            1.0 / prod
        })
        .collect();
    let m = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= m);
    w
}

/// Kronecker-sum second-derivative operator `D2x (x) I + I (x) D2y` on the full
/// `px * py` tensor grid. Tensor index is `iy * px + ix` (x fastest), the
/// same ordering used by leaf grids in the domain tree.
pub fn laplacian_2d(gx: &ChebGrid1D, gy: &ChebGrid1D) -> DenseMatrix {
    let (px, py) = (gx.len(), gy.len());
    let dxx = gx.diff_matrix(2);
    let dyy = gy.diff_matrix(2);
    let n = px * py;
    let mut l = DenseMatrix::zeros(n, n);
    for iy in 0..py {
        for ix in 0..px {
            let row = iy * px + ix;
            for k in 0..px {
                l[(row, iy * px + k)] += dxx[(ix, k)];
            }
            for k in 0..py {
                l[(row, k * px + ix)] += dyy[(iy, k)];
            }
        }
    }
    l
}

/// Tensor-product interpolation of `values` (tensor index `iy * px + ix`) at `(x, y)`.
pub fn interpolate_2d(gx: &ChebGrid1D, gy: &ChebGrid1D, values: &[f64], x: f64, y: f64) -> Result<f64> {
    if !gx.contains(x) || !gy.contains(y) {
        return Err(HpsError::OutOfDomain { x, y });
    }
    let lx = gx.interpolation_row(x);
    let ly = gy.interpolation_row(y);
    let px = gx.len();
    let mut acc = 0.0;
    for (iy, wy) in ly.iter().enumerate() {
        if *wy == 0.0 {
            continue;
        }
        let row: f64 = lx.iter().enumerate().map(|(ix, wx)| wx * values[iy * px + ix]).sum();
        acc += wy * row;
    }
    Ok(acc)
}
