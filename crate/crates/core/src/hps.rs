//! Hierarchical Poincare-Steklov build and solve stages.
//!
//! Build: every leaf gets its solution operator `S = -A_ii^{-1} A_ib` and
//! DtN map `T = F_bi S + F_bb`; parents merge their children's DtN maps by a
//! Schur complement on the shared interface J3. Solve: an upward sweep of
//! particular solutions for body loads, then a downward sweep applying `S`.

use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dense::{select, DenseMatrix, LuFactor};
use crate::discretization::{leaf_matrix, shift_reaction, LeafSystem, OperatorCoefficients};
use crate::error::{HpsError, Result};
use crate::tree::{DomainTree, MergeSets, NodeKind};

/// The operator actually factored is `sigma I + dt_gamma A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift {
    pub sigma: f64,
    pub dt_gamma: f64,
}

impl Shift {
    /// The unshifted operator `A`.
    pub const NONE: Shift = Shift { sigma: 0.0, dt_gamma: 1.0 };

    pub fn new(sigma: f64, dt_gamma: f64) -> Self {
        Self { sigma, dt_gamma }
    }
}

#[derive(Clone, Debug)]
pub struct LeafOperators {
    /// Interior values from boundary values, `n_int x n_b`.
    pub s: DenseMatrix,
    /// Boundary derivatives from boundary values, `n_b x n_b`.
    pub t: DenseMatrix,
    pub aii: LuFactor,
    /// Boundary derivative rows restricted to interior columns (`F_bi`).
    pub flux_interior: DenseMatrix,
}

#[derive(Clone, Debug)]
pub struct MergeOperators {
    /// Interface values from outer boundary values, `|J3| x (|J1| + |J2|)`.
    pub s: DenseMatrix,
    pub x33: LuFactor,
    pub t13: DenseMatrix,
    pub t23: DenseMatrix,
}

#[derive(Clone, Debug)]
pub enum NodeOperators {
    Leaf(LeafOperators),
    Merge(MergeOperators),
}

/// Leaf solution and DtN operators from the leaf collocation rows.
pub fn build_leaf(tree: &DomainTree, sys: &LeafSystem, context: &str) -> Result<(LeafOperators, DenseMatrix)> {
    let n_int = tree.layout.n_interior;
    let n_loc = tree.layout.len();
    let aii = sys.a.columns(0, n_int).into_owned();
    let aib = sys.a.columns(n_int, n_loc - n_int).into_owned();
    let aii = LuFactor::new(aii, context)?;
    let s = -aii.solve(&aib);
    let flux_interior = sys.flux.columns(0, n_int).into_owned();
    let t = &flux_interior * &s + sys.flux.columns(n_int, n_loc - n_int);
    Ok((LeafOperators { s, t: t.clone(), aii, flux_interior }, t))
}

/// Merges two child DtN maps across their shared interface.
pub fn merge(t_alpha: &DenseMatrix, t_beta: &DenseMatrix, sets: &MergeSets, context: &str) -> Result<(MergeOperators, DenseMatrix)> {
    let (a1, a3, b2, b3) = (&sets.alpha_j1_pos, &sets.alpha_j3_pos, &sets.beta_j2_pos, &sets.beta_j3_pos);
    let (n1, n2, n3) = (a1.len(), b2.len(), a3.len());
    let x33 = select(t_alpha, a3, a3) - select(t_beta, b3, b3);
    let x33 = LuFactor::new(x33, context)?;
    let mut rhs = DenseMatrix::zeros(n3, n1 + n2);
    rhs.columns_mut(0, n1).copy_from(&(-select(t_alpha, a3, a1)));
    rhs.columns_mut(n1, n2).copy_from(&select(t_beta, b3, b2));
    let s = x33.solve(&rhs);
    let t13 = select(t_alpha, a1, a3);
    let t23 = select(t_beta, b2, b3);
    let mut t = DenseMatrix::zeros(n1 + n2, n1 + n2);
    t.view_mut((0, 0), (n1, n1)).copy_from(&select(t_alpha, a1, a1));
    t.view_mut((n1, n1), (n2, n2)).copy_from(&select(t_beta, b2, b2));
    t.rows_mut(0, n1).gemm(1.0, &t13, &s, 1.0);
    t.rows_mut(n1, n2).gemm(1.0, &t23, &s, 1.0);
    Ok((MergeOperators { s, x33, t13, t23 }, t))
}

/// FNV-1a over coefficient samples and the tree shape.
pub fn coefficient_fingerprint(tree: &DomainTree, coeffs: &OperatorCoefficients) -> u64 {
    struct Fnv(u64);
    impl Hasher for Fnv {
        fn finish(&self) -> u64 {
            self.0
        }
        fn write(&mut self, bytes: &[u8]) {
            for b in bytes {
                self.0 ^= *b as u64;
                self.0 = self.0.wrapping_mul(0x100000001b3);
            }
        }
    }
    let mut h = Fnv(0xcbf29ce484222325);
    for v in [tree.dim(), tree.n1, tree.n2, tree.p] {
        h.write_u64(v as u64);
    }
    for &(x, y) in &tree.dof_coords {
        for c in coeffs.at(x, y) {
            h.write_u64(c.to_bits());
        }
    }
    h.finish()
}

/// Per-node operators for one shifted operator on one tree.
#[derive(Clone, Debug)]
pub struct HpsOperatorSet {
    tree: Arc<DomainTree>,
    ops: Vec<NodeOperators>,
    root_t: DenseMatrix,
    shift: Shift,
    fingerprint: u64,
}

impl HpsOperatorSet {
    /// Builds the operators of `sigma I + dt_gamma A` where `coeffs` describes `A`.
    /// Nodes on one level are processed in parallel.
    pub fn build(tree: Arc<DomainTree>, coeffs: &OperatorCoefficients, shift: Shift) -> Result<Self> {
        let shifted = shift_reaction(coeffs, shift.sigma, shift.dt_gamma);
        let fingerprint = coefficient_fingerprint(&tree, coeffs);
        let n = tree.nodes.len();
        let mut ops: Vec<Option<NodeOperators>> = (0..n).map(|_| None).collect();
        let mut dtn: Vec<Option<DenseMatrix>> = (0..n).map(|_| None).collect();
        for level in tree.levels.iter().rev() {
            let built: Vec<(usize, NodeOperators, DenseMatrix)> = level
                .par_iter()
                .map(|&id| -> Result<(usize, NodeOperators, DenseMatrix)> {
                    let node = &tree.nodes[id];
                    match &node.kind {
                        NodeKind::Leaf { leaf, .. } => {
                            let sys = leaf_matrix(&tree, *leaf, &shifted);
                            let (op, t) = build_leaf(&tree, &sys, &format!("leaf {leaf} (node {id})"))?;
                            Ok((id, NodeOperators::Leaf(op), t))
                        }
                        NodeKind::Parent(m) => {
                            let ta = dtn[m.alpha].as_ref().expect("child built before parent");
                            let tb = dtn[m.beta].as_ref().expect("child built before parent");
                            let (op, t) = merge(ta, tb, m, &format!("merge at node {id}"))?;
                            Ok((id, NodeOperators::Merge(op), t))
                        }
                    }
                })
                .collect::<Result<_>>()?;
            for (id, op, t) in built {
                if let NodeKind::Parent(m) = &tree.nodes[id].kind {
                    dtn[m.alpha] = None;
                    dtn[m.beta] = None;
                }
                ops[id] = Some(op);
                dtn[id] = Some(t);
            }
        }
        let root_t = dtn[0].take().expect("root built");
        Ok(Self {
            tree,
            ops: ops.into_iter().map(|o| o.expect("every node built")).collect(),
            root_t,
            shift,
            fingerprint,
        })
    }

    pub fn tree(&self) -> &Arc<DomainTree> {
        &self.tree
    }

    pub fn shift(&self) -> Shift {
        self.shift
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn node_ops(&self) -> &[NodeOperators] {
        &self.ops
    }

    /// DtN map of the whole domain.
    pub fn root_dtn(&self) -> &DenseMatrix {
        &self.root_t
    }

    pub fn leaf_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, NodeOperators::Leaf(_))).count()
    }

    pub fn merge_count(&self) -> usize {
        self.ops.len() - self.leaf_count()
    }

    /// Whether this set was built for the given operator and shift.
    pub fn matches(&self, coeffs: &OperatorCoefficients, shift: Shift) -> bool {
        self.shift == shift && self.fingerprint == coefficient_fingerprint(&self.tree, coeffs)
    }

    /// Solve with boundary data only (`f` is read on domain-boundary DOFs).
    pub fn solve_homogeneous(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.solve_general(f, None, None)
    }

    /// Solve with boundary data `f` and interior source `g` (read on interior DOFs).
    pub fn solve_with_body_load(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.solve_general(f, Some(g), None)
    }

    /// As `solve_with_body_load`, with every interface continuity equation
    /// driven by `-jump / dt` instead of 0, where `jump = flux_lower - flux_upper`
    /// of the current solution.
    pub fn solve_penalized(&self, f: &[f64], g: &[f64], jump: &[f64], dt: f64) -> Result<Vec<f64>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(HpsError::InvalidStep(dt));
        }
        let r: Vec<f64> = jump.iter().map(|j| -j / dt).collect();
        self.solve_general(f, Some(g), Some(&r))
    }

    /// Most general solve: interface continuity rows read `flux_lower - flux_upper = r`.
    pub fn solve_general(&self, f: &[f64], g: Option<&[f64]>, r: Option<&[f64]>) -> Result<Vec<f64>> {
        let tree = &self.tree;
        let n = tree.n_dof();
        for (name, v) in [("f", Some(f)), ("g", g), ("interface rhs", r)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(HpsError::Dimension(format!("{name} has length {}, expected {n}", v.len())));
                }
            }
        }
        let nodes = &tree.nodes;
        let body = g.is_some() || r.is_some();
        // particular solutions (leaf interior or parent J3) and their boundary fluxes
        let mut w: Vec<Vec<f64>> = vec![Vec::new(); nodes.len()];
        let mut h: Vec<Vec<f64>> = vec![Vec::new(); nodes.len()];
        if body {
            for id in (0..nodes.len()).rev() {
                match (&nodes[id].kind, &self.ops[id]) {
                    (NodeKind::Leaf { interior, .. }, NodeOperators::Leaf(op)) => {
                        let gi: Vec<f64> = match g {
                            Some(g) => interior.iter().map(|&k| g[k]).collect(),
                            None => vec![0.0; interior.len()],
                        };
                        let wi = op.aii.solve_vec(&gi);
                        h[id] = (&op.flux_interior * DVector::from_column_slice(&wi)).as_slice().to_vec();
                        w[id] = wi;
                    }
                    (NodeKind::Parent(m), NodeOperators::Merge(op)) => {
                        let (ha, hb) = (&h[m.alpha], &h[m.beta]);
                        let rhs3: Vec<f64> = (0..m.j3.len())
                            .map(|k| {
                                let extra = r.map_or(0.0, |r| r[m.j3[k]]);
                                hb[m.beta_j3_pos[k]] - ha[m.alpha_j3_pos[k]] + extra
                            })
                            .collect();
                        let w3 = op.x33.solve_vec(&rhs3);
                        let w3v = DVector::from_column_slice(&w3);
                        let c1 = &op.t13 * &w3v;
                        let c2 = &op.t23 * &w3v;
                        let mut ht = Vec::with_capacity(m.j1.len() + m.j2.len());
                        ht.extend(m.alpha_j1_pos.iter().enumerate().map(|(k, &p)| ha[p] + c1[k]));
                        ht.extend(m.beta_j2_pos.iter().enumerate().map(|(k, &p)| hb[p] + c2[k]));
                        h[id] = ht;
                        w[id] = w3;
                        h[m.alpha] = Vec::new();
                        h[m.beta] = Vec::new();
                    }
                    _ => unreachable!("operator kind follows node kind"),
                }
            }
        }
        let mut u = vec![0.0; n];
        for &k in &nodes[0].boundary {
            u[k] = f[k];
        }
        for id in 0..nodes.len() {
            let node = &nodes[id];
            match (&node.kind, &self.ops[id]) {
                (NodeKind::Leaf { interior, .. }, NodeOperators::Leaf(op)) => {
                    let ub = DVector::from_iterator(node.boundary.len(), node.boundary.iter().map(|&k| u[k]));
                    let ui = &op.s * ub;
                    for (k, &gk) in interior.iter().enumerate() {
                        u[gk] = ui[k] + if body { w[id][k] } else { 0.0 };
                    }
                }
                (NodeKind::Parent(m), NodeOperators::Merge(op)) => {
                    let ub = DVector::from_iterator(node.boundary.len(), node.boundary.iter().map(|&k| u[k]));
                    let u3 = &op.s * ub;
                    for (k, &gk) in m.j3.iter().enumerate() {
                        u[gk] = u3[k] + if body { w[id][k] } else { 0.0 };
                    }
                }
                _ => unreachable!("operator kind follows node kind"),
            }
        }
        Ok(u)
    }

    /// Writes the operator set to a versioned binary file.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        write_u64(&mut out, FORMAT_VERSION)?;
        let t = &self.tree;
        for v in [t.dim(), t.n1, t.n2, t.p, t.nodes.len()] {
            write_u64(&mut out, v as u64)?;
        }
        let (xa, xb) = t.domain.x_range();
        let (ya, yb) = t.domain.y_range();
        for v in [xa, xb, ya, yb, self.shift.sigma, self.shift.dt_gamma] {
            write_f64(&mut out, v)?;
        }
        write_u64(&mut out, self.fingerprint)?;
        for op in &self.ops {
            match op {
                NodeOperators::Leaf(l) => {
                    write_u64(&mut out, 0)?;
                    for m in [&l.s, &l.t, &l.aii.matrix(), &l.flux_interior] {
                        write_matrix(&mut out, m)?;
                    }
                }
                NodeOperators::Merge(mo) => {
                    write_u64(&mut out, 1)?;
                    for m in [&mo.s, &mo.x33.matrix(), &mo.t13, &mo.t23] {
                        write_matrix(&mut out, m)?;
                    }
                }
            }
        }
        write_matrix(&mut out, &self.root_t)?;
        out.flush()?;
        Ok(())
    }

    /// Loads a dumped set, rejecting it unless it was built on a tree of the
    /// same shape for the same coefficients and shift.
    pub fn load(path: &Path, tree: Arc<DomainTree>, coeffs: &OperatorCoefficients, shift: Shift) -> Result<Self> {
        let mut inp = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        inp.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(HpsError::OperatorMismatch("not an operator-set file".into()));
        }
        let version = read_u64(&mut inp)?;
        if version != FORMAT_VERSION {
            return Err(HpsError::OperatorMismatch(format!("format version {version}, expected {FORMAT_VERSION}")));
        }
        let shape: Vec<u64> = (0..5).map(|_| read_u64(&mut inp)).collect::<Result<_>>()?;
        let expect = [tree.dim(), tree.n1, tree.n2, tree.p, tree.nodes.len()].map(|v| v as u64);
        if shape != expect {
            return Err(HpsError::OperatorMismatch(format!("tree shape {shape:?}, expected {expect:?}")));
        }
        let fl: Vec<f64> = (0..6).map(|_| read_f64(&mut inp)).collect::<Result<_>>()?;
        let (xa, xb) = tree.domain.x_range();
        let (ya, yb) = tree.domain.y_range();
        if fl[..4] != [xa, xb, ya, yb] {
            return Err(HpsError::OperatorMismatch("domain bounds differ".into()));
        }
        let stored = Shift::new(fl[4], fl[5]);
        if stored != shift {
            return Err(HpsError::OperatorMismatch(format!("stored shift {stored:?}, requested {shift:?}")));
        }
        let fp = read_u64(&mut inp)?;
        if fp != coefficient_fingerprint(&tree, coeffs) {
            return Err(HpsError::OperatorMismatch("coefficient fingerprint differs".into()));
        }
        let mut ops = Vec::with_capacity(tree.nodes.len());
        for id in 0..tree.nodes.len() {
            let tag = read_u64(&mut inp)?;
            let m: Vec<DenseMatrix> = (0..4).map(|_| read_matrix(&mut inp)).collect::<Result<_>>()?;
            let [a, b, c, d]: [DenseMatrix; 4] = m.try_into().expect("four matrices");
            ops.push(match (tag, tree.nodes[id].is_leaf()) {
                (0, true) => NodeOperators::Leaf(LeafOperators {
                    s: a,
                    t: b,
                    aii: LuFactor::new(c, &format!("loaded leaf node {id}"))?,
                    flux_interior: d,
                }),
                (1, false) => NodeOperators::Merge(MergeOperators {
                    s: a,
                    x33: LuFactor::new(b, &format!("loaded merge node {id}"))?,
                    t13: c,
                    t23: d,
                }),
                _ => return Err(HpsError::OperatorMismatch(format!("node {id} has the wrong kind"))),
            });
        }
        let root_t = read_matrix(&mut inp)?;
        Ok(Self { tree, ops, root_t, shift, fingerprint: fp })
    }
}

const MAGIC: &[u8; 8] = b"HPSOPS01";
const FORMAT_VERSION: u64 = 1;

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_matrix(w: &mut impl Write, m: &DenseMatrix) -> std::io::Result<()> {
    write_u64(w, m.nrows() as u64)?;
    write_u64(w, m.ncols() as u64)?;
    for v in m.iter() {
        write_f64(w, *v)?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_matrix(r: &mut impl Read) -> Result<DenseMatrix> {
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    if rows.saturating_mul(cols) > 1 << 32 {
        return Err(HpsError::OperatorMismatch(format!("implausible matrix size {rows}x{cols}")));
    }
    let mut data = vec![0.0; rows * cols];
    for v in data.iter_mut() {
        *v = read_f64(r)?;
    }
    Ok(DenseMatrix::from_column_slice(rows, cols, &data))
}
