//! Binary partition of an interval or rectangle into congruent leaves with
//! Chebyshev grids, global degree-of-freedom numbering (leaf corners
//! excluded) and the J1/J2/J3 index sets used by merges.
//!
//! Leaf-local ordering, shared by every leaf:
//! * 2D: interior tensor points (`iy` outer, `ix` inner, both in `1..p-1`),
//!   then the Left (`ix = p-1`), Right (`ix = 0`), Bottom (`iy = p-1`) and
//!   Top (`iy = 0`) edges, each walked with the running index ascending.
//! * 1D: interior points, then Left, then Right.
//!
//! Global numbering: the interiors of all leaves in leaf order, followed by
//! the unique edges in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::chebyshev::ChebGrid1D;
use crate::dense::DenseMatrix;
use crate::error::{HpsError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    Rect { x: (f64, f64), y: (f64, f64) },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(..) => 1,
            Domain::Rect { .. } => 2,
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        match *self {
            Domain::Interval(a, b) => (a, b),
            Domain::Rect { x, .. } => x,
        }
    }

    /// y-range; a degenerate `(0, 0)` in 1D.
    pub fn y_range(&self) -> (f64, f64) {
        match *self {
            Domain::Interval(..) => (0.0, 0.0),
            Domain::Rect { y, .. } => y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKey {
    /// Vertical edge on grid line `x = i`, cell row `j`.
    V(usize, usize),
    /// Horizontal edge on grid line `y = j`, cell column `i`.
    H(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn axis(self) -> Axis {
        match self {
            Side::Left | Side::Right => Axis::X,
            Side::Bottom | Side::Top => Axis::Y,
        }
    }
}

/// Role of a global DOF.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofKind {
    Interior { leaf: usize },
    /// Shared edge point; `lower_leaf` lies on the low-coordinate side along `axis`.
    Interface { lower_leaf: usize, upper_leaf: usize, axis: Axis },
    Boundary { leaf: usize },
}

#[derive(Clone, Debug)]
pub struct MergeSets {
    pub alpha: usize,
    pub beta: usize,
    pub axis: Axis,
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
    pub j3: Vec<usize>,
    /// Positions of J1 / J3 inside alpha's boundary ordering.
    pub alpha_j1_pos: Vec<usize>,
    pub alpha_j3_pos: Vec<usize>,
    /// Positions of J2 / J3 inside beta's boundary ordering (J3 in alpha's order).
    pub beta_j2_pos: Vec<usize>,
    pub beta_j3_pos: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Leaf { leaf: usize, cell: (usize, usize), interior: Vec<usize> },
    Parent(MergeSets),
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: usize,
    pub depth: usize,
    pub bbox: Rect,
    pub kind: NodeKind,
    /// Global ids of the node boundary in node-local order.
    pub boundary: Vec<usize>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn merge_sets(&self) -> Option<&MergeSets> {
        match &self.kind {
            NodeKind::Parent(m) => Some(m),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// Leaf-local layout, identical for every leaf.
#[derive(Clone, Debug)]
pub struct LeafLayout {
    pub p: usize,
    pub dim: usize,
    /// Tensor index (`iy * p + ix`, or `ix` in 1D) of each local point.
    pub tensor: Vec<usize>,
    pub n_interior: usize,
    /// Sides in local order with their local start offsets.
    pub sides: Vec<(Side, usize)>,
    /// Points per side.
    pub side_len: usize,
}

impl LeafLayout {
    fn new(p: usize, dim: usize) -> Self {
        let mut tensor = Vec::new();
        if dim == 1 {
            tensor.extend(1..p - 1);
            let n_interior = tensor.len();
            tensor.push(p - 1);
            tensor.push(0);
            return Self {
                p,
                dim,
                tensor,
                n_interior,
                sides: vec![(Side::Left, n_interior), (Side::Right, n_interior + 1)],
                side_len: 1,
            };
        }
        for iy in 1..p - 1 {
            for ix in 1..p - 1 {
                tensor.push(iy * p + ix);
            }
        }
        let n_interior = tensor.len();
        let mut sides = Vec::new();
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            sides.push((side, tensor.len()));
            for k in 1..p - 1 {
                tensor.push(match side {
                    Side::Left => k * p + (p - 1),
                    Side::Right => k * p,
                    Side::Bottom => (p - 1) * p + k,
                    Side::Top => k,
                });
            }
        }
        Self { p, dim, tensor, n_interior, sides, side_len: p - 2 }
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn n_boundary(&self) -> usize {
        self.len() - self.n_interior
    }

    pub fn side_range(&self, side: Side) -> std::ops::Range<usize> {
        let start = self.sides.iter().find(|(s, _)| *s == side).map(|(_, o)| *o).expect("side present");
        start..start + self.side_len
    }

    /// Axis of the derivative taken at local boundary point `k` (offset into the boundary block).
    pub fn boundary_axis(&self, k: usize) -> Axis {
        if self.dim == 1 {
            return Axis::X;
        }
        self.sides[k / self.side_len].0.axis()
    }
}

/// Point classification of one leaf's tensor grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointClasses {
    pub interior: Vec<usize>,
    pub edge: Vec<usize>,
    pub corner: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct DomainTree {
    pub domain: Domain,
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub nodes: Vec<TreeNode>,
    /// Node id of each leaf, in leaf order.
    pub leaves: Vec<usize>,
    /// Node ids grouped by depth.
    pub levels: Vec<Vec<usize>>,
    pub layout: LeafLayout,
    pub dof_kind: Vec<DofKind>,
    pub dof_coords: Vec<(f64, f64)>,
    /// Global ids of each unique edge in numbering order.
    pub edges: Vec<(EdgeKey, Vec<usize>)>,
    n_interior_total: usize,
    dx: DenseMatrix,
    dxx: DenseMatrix,
    dy: Option<DenseMatrix>,
    dyy: Option<DenseMatrix>,
}

fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n & (n - 1) == 0
}

struct Builder {
    nodes: Vec<TreeNode>,
    leaf_cells: Vec<(usize, usize)>,
    leaves: Vec<usize>,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
}

impl Builder {
    fn rect(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Rect {
        Rect {
            x0: self.x0 + i0 as f64 * self.hx,
            x1: self.x0 + i1 as f64 * self.hx,
            y0: self.y0 + j0 as f64 * self.hy,
            y1: self.y0 + j1 as f64 * self.hy,
        }
    }

    /// Pre-order construction; merge sets are filled in once numbering exists.
    fn grow(&mut self, i0: usize, i1: usize, j0: usize, j1: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let bbox = self.rect(i0, i1, j0, j1);
        let (cx, cy) = (i1 - i0, j1 - j0);
        if cx == 1 && cy == 1 {
            let leaf = self.leaves.len();
            self.leaves.push(id);
            self.leaf_cells.push((i0, j0));
            self.nodes.push(TreeNode {
                id,
                depth,
                bbox,
                kind: NodeKind::Leaf { leaf, cell: (i0, j0), interior: Vec::new() },
                boundary: Vec::new(),
            });
            return id;
        }
        let axis = if cy == 1 {
            Axis::X
        } else if cx == 1 {
            Axis::Y
        } else {
            let (w, h) = (cx as f64 * self.hx, cy as f64 * self.hy);
            if h > w * (1.0 + 1e-12) {
                Axis::Y
            } else {
                Axis::X
            }
        };
        self.nodes.push(TreeNode {
            id,
            depth,
            bbox,
            kind: NodeKind::Parent(MergeSets {
                alpha: 0,
                beta: 0,
                axis,
                j1: Vec::new(),
                j2: Vec::new(),
                j3: Vec::new(),
                alpha_j1_pos: Vec::new(),
                alpha_j3_pos: Vec::new(),
                beta_j2_pos: Vec::new(),
                beta_j3_pos: Vec::new(),
            }),
            boundary: Vec::new(),
        });
        let (alpha, beta) = match axis {
            Axis::X => {
                let m = i0 + cx / 2;
                (self.grow(i0, m, j0, j1, depth + 1), self.grow(m, i1, j0, j1, depth + 1))
            }
            Axis::Y => {
                let m = j0 + cy / 2;
                (self.grow(i0, i1, j0, m, depth + 1), self.grow(i0, i1, m, j1, depth + 1))
            }
        };
        if let NodeKind::Parent(m) = &mut self.nodes[id].kind {
            m.alpha = alpha;
            m.beta = beta;
        }
        id
    }
}

fn leaf_edges(cell: (usize, usize), dim: usize) -> Vec<(Side, EdgeKey)> {
    let (i, j) = cell;
    let mut e = vec![(Side::Left, EdgeKey::V(i, j)), (Side::Right, EdgeKey::V(i + 1, j))];
    if dim == 2 {
        e.push((Side::Bottom, EdgeKey::H(i, j)));
        e.push((Side::Top, EdgeKey::H(i, j + 1)));
    }
    e
}

/// Builds the tree over `domain` with `n1 x n2` leaves of order `p`
/// (`n2` must be 1 for an interval).
pub fn build_tree(domain: Domain, n1: usize, n2: usize, p: usize) -> Result<DomainTree> {
    if p < 4 {
        return Err(HpsError::InvalidOrder(p));
    }
    if !is_power_of_two(n1) || !is_power_of_two(n2) {
        return Err(HpsError::UnsupportedPartition(format!(
            "leaf counts {n1} x {n2} must be powers of two"
        )));
    }
    let dim = domain.dim();
    if dim == 1 && n2 != 1 {
        return Err(HpsError::UnsupportedPartition(format!("1D tree with n2 = {n2}")));
    }
    let (xa, xb) = domain.x_range();
    if !(xa < xb) {
        return Err(HpsError::InvalidInterval(xa, xb));
    }
    let (ya, yb) = domain.y_range();
    if dim == 2 && !(ya < yb) {
        return Err(HpsError::InvalidInterval(ya, yb));
    }

    let mut b = Builder {
        nodes: Vec::new(),
        leaf_cells: Vec::new(),
        leaves: Vec::new(),
        hx: (xb - xa) / n1 as f64,
        hy: if dim == 2 { (yb - ya) / n2 as f64 } else { 0.0 },
        x0: xa,
        y0: ya,
    };
    b.grow(0, n1, 0, n2, 0);
    let Builder { mut nodes, leaf_cells, leaves, .. } = b;

    let layout = LeafLayout::new(p, dim);
    let n_int_leaf = layout.n_interior;
    let n_leaves = leaves.len();
    let n_interior_total = n_int_leaf * n_leaves;
    let side_len = layout.side_len;

    // leaf grids (for coordinates)
    let grids: Vec<(ChebGrid1D, Option<ChebGrid1D>)> = leaves
        .iter()
        .map(|&id| {
            let r = nodes[id].bbox;
            let gx = ChebGrid1D::new(p, r.x0, r.x1).expect("valid leaf interval");
            let gy = if dim == 2 { Some(ChebGrid1D::new(p, r.y0, r.y1).expect("valid leaf interval")) } else { None };
            (gx, gy)
        })
        .collect();
    let coord = |leaf: usize, t: usize| -> (f64, f64) {
        let (gx, gy) = &grids[leaf];
        match gy {
            None => (gx.nodes()[t], 0.0),
            Some(gy) => (gx.nodes()[t % p], gy.nodes()[t / p]),
        }
    };

    let mut dof_kind = Vec::new();
    let mut dof_coords = Vec::new();
    for leaf in 0..n_leaves {
        let ids: Vec<usize> = (leaf * n_int_leaf..(leaf + 1) * n_int_leaf).collect();
        for k in 0..n_int_leaf {
            dof_kind.push(DofKind::Interior { leaf });
            dof_coords.push(coord(leaf, layout.tensor[k]));
        }
        if let NodeKind::Leaf { interior, .. } = &mut nodes[leaves[leaf]].kind {
            *interior = ids;
        }
    }

    // unique edges in order of first appearance
    let mut edge_index: HashMap<EdgeKey, usize> = HashMap::new();
    let mut edges: Vec<(EdgeKey, Vec<usize>)> = Vec::new();
    let mut edge_owners: Vec<Vec<(usize, Side)>> = Vec::new();
    let mut next = n_interior_total;
    for (leaf, &cell) in leaf_cells.iter().enumerate() {
        let mut boundary = Vec::with_capacity(layout.n_boundary());
        for (side, key) in leaf_edges(cell, dim) {
            let e = *edge_index.entry(key).or_insert_with(|| {
                let ids: Vec<usize> = (next..next + side_len).collect();
                let start = layout.side_range(side).start;
                for k in 0..side_len {
                    dof_coords.push(coord(leaf, layout.tensor[start + k]));
                    dof_kind.push(DofKind::Boundary { leaf });
                }
                next += side_len;
                edges.push((key, ids));
                edge_owners.push(Vec::new());
                edges.len() - 1
            });
            edge_owners[e].push((leaf, side));
            boundary.extend_from_slice(&edges[e].1);
        }
        nodes[leaves[leaf]].boundary = boundary;
    }
    for (e, owners) in edge_owners.iter().enumerate() {
        match owners.as_slice() {
            [_] => {}
            [(a, sa), (b2, _)] => {
                // the leaf whose Right/Top side this is sits at lower coordinate
                let (lower, upper) = if matches!(sa, Side::Right | Side::Top) { (*a, *b2) } else { (*b2, *a) };
                for &g in &edges[e].1 {
                    dof_kind[g] = DofKind::Interface { lower_leaf: lower, upper_leaf: upper, axis: sa.axis() };
                }
            }
            _ => {
                return Err(HpsError::Inconsistent(format!("edge {:?} shared by {} leaves", edges[e].0, owners.len())));
            }
        }
    }

    // merge sets, bottom-up (children have larger ids in pre-order)
    for id in (0..nodes.len()).rev() {
        let (alpha, beta) = match &nodes[id].kind {
            NodeKind::Parent(m) => (m.alpha, m.beta),
            NodeKind::Leaf { .. } => continue,
        };
        let sets = interface_sets_from(&nodes[alpha].boundary, &nodes[beta].boundary, id)?;
        let boundary: Vec<usize> = sets.0.iter().chain(sets.1.iter()).copied().collect();
        if let NodeKind::Parent(m) = &mut nodes[id].kind {
            (m.j1, m.j2, m.j3, m.alpha_j1_pos, m.alpha_j3_pos, m.beta_j2_pos, m.beta_j3_pos) = sets;
        }
        nodes[id].boundary = boundary;
    }

    let depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth + 1];
    for n in &nodes {
        levels[n.depth].push(n.id);
    }

    let (gx0, gy0) = &grids[0];
    let dx = gx0.diff_matrix(1);
    let dxx = gx0.diff_matrix(2);
    let (dy, dyy) = match gy0 {
        Some(g) => (Some(g.diff_matrix(1)), Some(g.diff_matrix(2))),
        None => (None, None),
    };

    let tree = DomainTree {
        domain,
        n1,
        n2,
        p,
        nodes,
        leaves,
        levels,
        layout,
        dof_kind,
        dof_coords,
        edges,
        n_interior_total,
        dx,
        dxx,
        dy,
        dyy,
    };
    debug_assert_eq!(tree.n_dof(), tree.expected_dof_count());
    Ok(tree)
}

type SetTuple = (Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>);

fn interface_sets_from(ba: &[usize], bb: &[usize], node: usize) -> Result<SetTuple> {
    let pos_b: HashMap<usize, usize> = bb.iter().enumerate().map(|(k, &g)| (g, k)).collect();
    let (mut j1, mut j3, mut a1, mut a3, mut b3) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, &g) in ba.iter().enumerate() {
        match pos_b.get(&g) {
            Some(&kb) => {
                j3.push(g);
                a3.push(k);
                b3.push(kb);
            }
            None => {
                j1.push(g);
                a1.push(k);
            }
        }
    }
    if j3.is_empty() {
        return Err(HpsError::Inconsistent(format!("children of node {node} share no interface points")));
    }
    let in3: std::collections::HashSet<usize> = j3.iter().copied().collect();
    let (mut j2, mut b2) = (Vec::new(), Vec::new());
    for (k, &g) in bb.iter().enumerate() {
        if !in3.contains(&g) {
            j2.push(g);
            b2.push(k);
        }
    }
    Ok((j1, j2, j3, a1, a3, b2, b3))
}

/// (J1, J2, J3) of a parent node.
pub fn interface_sets(tree: &DomainTree, node: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    match &tree.nodes[node].kind {
        NodeKind::Parent(m) => Ok((m.j1.clone(), m.j2.clone(), m.j3.clone())),
        NodeKind::Leaf { .. } => Err(HpsError::Inconsistent(format!("node {node} is a leaf"))),
    }
}

/// Tensor positions of interior, edge and corner points of a leaf grid.
pub fn classify_leaf_points(tree: &DomainTree) -> PointClasses {
    let p = tree.p;
    if tree.dim() == 1 {
        return PointClasses { interior: (1..p - 1).collect(), edge: vec![p - 1, 0], corner: Vec::new() };
    }
    let mut c = PointClasses { interior: Vec::new(), edge: Vec::new(), corner: Vec::new() };
    for iy in 0..p {
        for ix in 0..p {
            let bx = ix == 0 || ix == p - 1;
            let by = iy == 0 || iy == p - 1;
            let t = iy * p + ix;
            match (bx, by) {
                (false, false) => c.interior.push(t),
                (true, true) => c.corner.push(t),
                _ => c.edge.push(t),
            }
        }
    }
    c
}

impl DomainTree {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_dof(&self) -> usize {
        self.dof_kind.len()
    }

    /// Closed-form DOF count: `(p-2)(p n1 n2 + n1 + n2)` in 2D, `n1 (p-1) + 1` in 1D.
    pub fn expected_dof_count(&self) -> usize {
        let (p, n1, n2) = (self.p, self.n1, self.n2);
        if self.dim() == 1 {
            n1 * (p - 2) + n1 + 1
        } else {
            (p - 2) * (p * n1 * n2 + n1 + n2)
        }
    }

    /// Tensor-point count including corners, `(n1(p-1)+1)(n2(p-1)+1)` in 2D.
    pub fn tensor_point_count(&self) -> usize {
        let (p, n1, n2) = (self.p, self.n1, self.n2);
        if self.dim() == 1 {
            n1 * (p - 1) + 1
        } else {
            (n1 * (p - 1) + 1) * (n2 * (p - 1) + 1)
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_interior_total(&self) -> usize {
        self.n_interior_total
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaf_node(&self, leaf: usize) -> &TreeNode {
        &self.nodes[self.leaves[leaf]]
    }

    pub fn leaf_interior(&self, leaf: usize) -> &[usize] {
        match &self.leaf_node(leaf).kind {
            NodeKind::Leaf { interior, .. } => interior,
            NodeKind::Parent(_) => unreachable!("leaf list holds leaves only"),
        }
    }

    /// Global ids of all local points of a leaf (interior then boundary).
    pub fn leaf_dofs(&self, leaf: usize) -> Vec<usize> {
        let mut v = self.leaf_interior(leaf).to_vec();
        v.extend_from_slice(&self.leaf_node(leaf).boundary);
        v
    }

    pub fn leaf_grids(&self, leaf: usize) -> (ChebGrid1D, Option<ChebGrid1D>) {
        let r = self.leaf_node(leaf).bbox;
        let gx = ChebGrid1D::new(self.p, r.x0, r.x1).expect("valid leaf interval");
        let gy = if self.dim() == 2 { Some(ChebGrid1D::new(self.p, r.y0, r.y1).expect("valid leaf interval")) } else { None };
        (gx, gy)
    }

    /// Coordinates of every local point of a leaf, in local order.
    pub fn leaf_local_coords(&self, leaf: usize) -> Vec<(f64, f64)> {
        let (gx, gy) = self.leaf_grids(leaf);
        let p = self.p;
        self.layout
            .tensor
            .iter()
            .map(|&t| match &gy {
                None => (gx.nodes()[t], 0.0),
                Some(gy) => (gx.nodes()[t % p], gy.nodes()[t / p]),
            })
            .collect()
    }

    /// Cached first/second derivative matrices of the (congruent) leaf grids.
    pub fn dx(&self) -> &DenseMatrix {
        &self.dx
    }

    pub fn dxx(&self) -> &DenseMatrix {
        &self.dxx
    }

    pub fn dy(&self) -> Option<&DenseMatrix> {
        self.dy.as_ref()
    }

    pub fn dyy(&self) -> Option<&DenseMatrix> {
        self.dyy.as_ref()
    }

    /// Global DOFs on the domain boundary.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        (0..self.n_dof()).filter(|&g| matches!(self.dof_kind[g], DofKind::Boundary { .. })).collect()
    }

    /// Global DOFs not on the domain boundary.
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dof()).filter(|&g| !matches!(self.dof_kind[g], DofKind::Boundary { .. })).collect()
    }

    pub fn interface_dofs(&self) -> Vec<usize> {
        (0..self.n_dof()).filter(|&g| matches!(self.dof_kind[g], DofKind::Interface { .. })).collect()
    }

    /// Leaf containing `(x, y)`; points on shared edges resolve to the lower leaf.
    pub fn locate(&self, x: f64, y: f64) -> Result<usize> {
        let (xa, xb) = self.domain.x_range();
        let slack = 1e-12 * (xb - xa);
        if x < xa - slack || x > xb + slack {
            return Err(HpsError::OutOfDomain { x, y });
        }
        let i = (((x - xa) / (xb - xa) * self.n1 as f64).floor() as isize).clamp(0, self.n1 as isize - 1) as usize;
        let j = if self.dim() == 2 {
            let (ya, yb) = self.domain.y_range();
            let slack = 1e-12 * (yb - ya);
            if y < ya - slack || y > yb + slack {
                return Err(HpsError::OutOfDomain { x, y });
            }
            (((y - ya) / (yb - ya) * self.n2 as f64).floor() as isize).clamp(0, self.n2 as isize - 1) as usize
        } else {
            0
        };
        self.leaves
            .iter()
            .position(|&id| matches!(self.nodes[id].kind, NodeKind::Leaf { cell, .. } if cell == (i, j)))
            .ok_or_else(|| HpsError::Inconsistent(format!("no leaf for cell ({i}, {j})")))
    }

    /// Structured text summary: dimensions, counts per level, DOF totals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim());
        let (xa, xb) = self.domain.x_range();
        let _ = writeln!(s, "x_range = [{xa}, {xb}]");
        if self.dim() == 2 {
            let (ya, yb) = self.domain.y_range();
            let _ = writeln!(s, "y_range = [{ya}, {yb}]");
        }
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "n1 = {}", self.n1);
        let _ = writeln!(s, "n2 = {}", self.n2);
        let _ = writeln!(s, "leaves = {}", self.n_leaves());
        let _ = writeln!(s, "merges = {}", self.nodes.len() - self.n_leaves());
        let _ = writeln!(s, "levels = {}", self.levels.len());
        for (l, ids) in self.levels.iter().enumerate() {
            let leaves = ids.iter().filter(|&&i| self.nodes[i].is_leaf()).count();
            let max_b = ids.iter().map(|&i| self.nodes[i].boundary.len()).max().unwrap_or(0);
            let _ = writeln!(s, "level.{l} = {{ nodes = {}, leaves = {leaves}, max_boundary = {max_b} }}", ids.len());
        }
        let _ = writeln!(s, "n_dof = {}", self.n_dof());
        let _ = writeln!(s, "n_interior = {}", self.n_interior_total);
        let _ = writeln!(s, "n_interface = {}", self.interface_dofs().len());
        let _ = writeln!(s, "n_boundary = {}", self.boundary_dofs().len());
        let _ = writeln!(s, "tensor_points = {}", self.tensor_point_count());
        s
    }
}
