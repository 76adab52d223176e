//! Paired ESDIRK / ERK Butcher tableaux with programmatic validation
//! (structure, row sums, order conditions on rooted trees) and the scalar
//! stability function of the implicit part.

use nalgebra::Complex;

use crate::error::{HpsError, Result};

pub type C64 = Complex<f64>;

const STRUCT_TOL: f64 = 1e-14;
const ORDER_TOL: f64 = 1e-12;

pub const AVAILABLE: [&str; 3] = ["BE", "ARK4(3)6L[2]SA", "ARK5(4)8L[2]SA"];

#[derive(Clone, Debug, PartialEq)]
pub struct ButcherPair {
    pub name: String,
    pub s: usize,
    /// Implicit coefficients, row-major `s x s`.
    pub a: Vec<Vec<f64>>,
    /// Explicit coefficients, strictly lower triangular.
    pub ahat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub bhat: Vec<f64>,
    pub c: Vec<f64>,
    pub chat: Vec<f64>,
    pub gamma: f64,
    pub order: usize,
    /// Embedded weights and their order, when published.
    pub embedded: Option<(Vec<f64>, usize)>,
    /// `false` only for backward Euler, whose single stage is implicit.
    pub first_stage_explicit: bool,
}

fn r(num: f64, den: f64) -> f64 {
    num / den
}

/// Expands compact rows (lower part of row i, without the leading zero row) to `s x s`.
fn square(s: usize, rows: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; s]; s];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[i + 1][j] = *v;
        }
    }
    m
}

fn ark436() -> ButcherPair {
    let g = r(1.0, 4.0);
    let b = vec![
        r(82889.0, 524892.0),
        0.0,
        r(15625.0, 83664.0),
        r(69875.0, 102672.0),
        r(-2260.0, 8211.0),
        g,
    ];
    let a = square(
        6,
        &[
            &[g, g],
            &[r(8611.0, 62500.0), r(-1743.0, 31250.0), g],
            &[r(5012029.0, 34652500.0), r(-654441.0, 2922500.0), r(174375.0, 388108.0), g],
            &[
                r(15267082809.0, 155376265600.0),
                r(-71443401.0, 120774400.0),
                r(730878875.0, 902184768.0),
                r(2285395.0, 8070912.0),
                g,
            ],
            &b,
        ],
    );
    let ahat = square(
        6,
        &[
            &[r(1.0, 2.0)],
            &[r(13861.0, 62500.0), r(6889.0, 62500.0)],
            &[
                r(-116923316275.0, 2393684061468.0),
                r(-2731218467317.0, 15368042101831.0),
                r(9408046702089.0, 11113171139209.0),
            ],
            &[
                r(-451086348788.0, 2902428689909.0),
                r(-2682348792572.0, 7519795681897.0),
                r(12662868775082.0, 11960479115383.0),
                r(3355817975965.0, 11060851509271.0),
            ],
            &[
                r(647845179188.0, 3216320057751.0),
                r(73281519250.0, 8382639484533.0),
                r(552539513391.0, 3454668386233.0),
                r(3354512671639.0, 8306763924573.0),
                r(4040.0, 17871.0),
            ],
        ],
    );
    let c = vec![0.0, r(1.0, 2.0), r(83.0, 250.0), r(31.0, 50.0), r(17.0, 20.0), 1.0];
    let d = vec![
        r(4586570599.0, 29645900160.0),
        0.0,
        r(178811875.0, 945068544.0),
        r(814220225.0, 1159782912.0),
        r(-3700637.0, 11593932.0),
        r(61727.0, 225920.0),
    ];
    ButcherPair {
        name: AVAILABLE[1].into(),
        s: 6,
        a,
        ahat,
        bhat: b.clone(),
        b,
        chat: c.clone(),
        c,
        gamma: g,
        order: 4,
        embedded: Some((d, 3)),
        first_stage_explicit: true,
    }
}

fn ark548() -> ButcherPair {
    let g = r(41.0, 200.0);
    let b = vec![
        r(-872700587467.0, 9133579230613.0),
        0.0,
        0.0,
        r(22348218063261.0, 9555858737531.0),
        r(-1143369518992.0, 8141816002931.0),
        r(-39379526789629.0, 19018526304540.0),
        r(32727382324388.0, 42900044865799.0),
        g,
    ];
    let a = square(
        8,
        &[
            &[g, g],
            &[r(41.0, 400.0), r(-567603406766.0, 11931857230679.0), g],
            &[r(683785636431.0, 9252920307686.0), 0.0, r(-110385047103.0, 1367015193373.0), g],
            &[
                r(3016520224154.0, 10081342136671.0),
                0.0,
                r(30586259806659.0, 12414158314087.0),
                r(-22760509404356.0, 11113319521817.0),
                g,
            ],
            &[
                r(218866479029.0, 1489978393911.0),
                0.0,
                r(638256894668.0, 5436446318841.0),
                r(-1179710474555.0, 5321154724896.0),
                r(-60928119172.0, 8023461067671.0),
                g,
            ],
            &[
                r(1020004230633.0, 5715676835656.0),
                0.0,
                r(25762820946817.0, 25263940353407.0),
                r(-2161375909145.0, 9755907335909.0),
                r(-211217309593.0, 5846859502534.0),
                r(-4269925059573.0, 7827059040749.0),
                g,
            ],
            &b,
        ],
    );
    let ahat = square(
        8,
        &[
            &[r(41.0, 100.0)],
            &[r(367902744464.0, 2072280473677.0), r(677623207551.0, 8224143866563.0)],
            &[r(1268023523408.0, 10340822734521.0), 0.0, r(1029933939417.0, 13636558850479.0)],
            &[
                r(14463281900351.0, 6315353703477.0),
                0.0,
                r(66114435211212.0, 5879490589093.0),
                r(-54053170152839.0, 4284798021562.0),
            ],
            &[
                r(14090043504691.0, 34967701212078.0),
                0.0,
                r(15191511035443.0, 11219624916014.0),
                r(-18461159152457.0, 12425892160975.0),
                r(-281667163811.0, 9011619295870.0),
            ],
            &[
                r(19230459214898.0, 13134317526959.0),
                0.0,
                r(21275331358303.0, 2942455364971.0),
                r(-38145345988419.0, 4862620318723.0),
                r(-1.0, 8.0),
                r(-1.0, 8.0),
            ],
            &[
                r(-19977161125411.0, 11928030595625.0),
                0.0,
                r(-40795976796054.0, 6384907823539.0),
                r(177454434618887.0, 12078138498510.0),
                r(782672205425.0, 8267701900261.0),
                r(-69563011059811.0, 9646580694205.0),
                r(7356628210526.0, 4942186776405.0),
            ],
        ],
    );
    let c = vec![
        0.0,
        r(41.0, 100.0),
        r(2935347310677.0, 11292855782101.0),
        r(1426016391358.0, 7196633302097.0),
        r(92.0, 100.0),
        r(24.0, 100.0),
        r(3.0, 5.0),
        1.0,
    ];
    let d = vec![
        r(-975461918565.0, 9796059967033.0),
        0.0,
        0.0,
        r(78070527104295.0, 32432590147079.0),
        r(-548382580838.0, 3424219808633.0),
        r(-33438840321285.0, 15594753105479.0),
        r(3629800801594.0, 4656183773603.0),
        r(4035322873751.0, 18575991585200.0),
    ];
    ButcherPair {
        name: AVAILABLE[2].into(),
        s: 8,
        a,
        ahat,
        bhat: b.clone(),
        b,
        chat: c.clone(),
        c,
        gamma: g,
        order: 5,
        embedded: Some((d, 4)),
        first_stage_explicit: true,
    }
}

/// Backward Euler as a one-stage pair: implicit `A = [1]`, explicit part
/// evaluated at the start of the step.
fn backward_euler() -> ButcherPair {
    ButcherPair {
        name: AVAILABLE[0].into(),
        s: 1,
        a: vec![vec![1.0]],
        ahat: vec![vec![0.0]],
        b: vec![1.0],
        bhat: vec![1.0],
        c: vec![1.0],
        chat: vec![0.0],
        gamma: 1.0,
        order: 1,
        embedded: None,
        first_stage_explicit: false,
    }
}

/// Looks up and validates a named pair.
pub fn load_tableau(name: &str) -> Result<ButcherPair> {
    let pair = match name {
        "BE" => backward_euler(),
        "ARK4(3)6L[2]SA" | "ARK4" => ark436(),
        "ARK5(4)8L[2]SA" | "ARK5" => ark548(),
        _ => {
            return Err(HpsError::UnknownTableau { name: name.into(), available: AVAILABLE.join(", ") });
        }
    };
    pair.validate()?;
    Ok(pair)
}

/// Rooted tree as the sorted list of its root's subtrees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RootedTree(pub Vec<RootedTree>);

impl RootedTree {
    pub fn order(&self) -> usize {
        1 + self.0.iter().map(|t| t.order()).sum::<usize>()
    }

    /// Density `gamma(t) = |t| * prod gamma(children)`.
    pub fn density(&self) -> f64 {
        self.order() as f64 * self.0.iter().map(|t| t.density()).product::<f64>()
    }
}

/// All rooted trees with exactly `n` nodes, without duplicates.
pub fn trees_of_order(n: usize) -> Vec<RootedTree> {
    let mut by_order: Vec<Vec<RootedTree>> = vec![Vec::new(), vec![RootedTree(Vec::new())]];
    for m in 2..=n {
        let mut out: Vec<RootedTree> = Vec::new();
        // multisets of subtrees with total order m - 1, built in non-decreasing canonical order
        fn extend(
            remaining: usize,
            min: Option<&RootedTree>,
            acc: &mut Vec<RootedTree>,
            by_order: &[Vec<RootedTree>],
            out: &mut Vec<RootedTree>,
        ) {
            if remaining == 0 {
                out.push(RootedTree(acc.clone()));
                return;
            }
            for k in 1..=remaining {
                for t in &by_order[k] {
                    if min.is_some_and(|m| t < m) {
                        continue;
                    }
                    acc.push(t.clone());
                    extend(remaining - k, Some(t), acc, by_order, out);
                    acc.pop();
                }
            }
        }
        extend(m - 1, None, &mut Vec::new(), &by_order, &mut out);
        out.sort();
        out.dedup();
        by_order.push(out);
    }
    by_order.swap_remove(n)
}

/// Stage vector of elementary weights for a tree whose edges all use `a`.
fn elementary(a: &[Vec<f64>], t: &RootedTree) -> Vec<f64> {
    let s = a.len();
    let mut phi = vec![1.0; s];
    for child in &t.0 {
        let pc = elementary(a, child);
        for i in 0..s {
            phi[i] *= (0..s).map(|j| a[i][j] * pc[j]).sum::<f64>();
        }
    }
    phi
}

/// Elementary weights of a bicoloured tree: `colors` assigns implicit (`false`)
/// or explicit (`true`) coupling to each non-root node in pre-order.
fn elementary_coloured(a: &[Vec<f64>], ahat: &[Vec<f64>], t: &RootedTree, colors: &mut impl Iterator<Item = bool>) -> Vec<f64> {
    let s = a.len();
    let mut phi = vec![1.0; s];
    for child in &t.0 {
        let m = if colors.next().expect("enough colours") { ahat } else { a };
        let pc = elementary_coloured(a, ahat, child, colors);
        for i in 0..s {
            phi[i] *= (0..s).map(|j| m[i][j] * pc[j]).sum::<f64>();
        }
    }
    phi
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ButcherPair {
    pub fn stiffly_accurate(&self) -> bool {
        self.a.last().is_some_and(|row| row.iter().zip(&self.b).all(|(x, y)| x == y))
    }

    fn invalid(&self, reason: String) -> HpsError {
        HpsError::InvalidTableau { name: self.name.clone(), reason }
    }

    /// Checks structure, row sums, and order conditions of both parts and of
    /// the coupling between them.
    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        let dims_ok = self.a.len() == s
            && self.ahat.len() == s
            && self.a.iter().chain(&self.ahat).all(|r| r.len() == s)
            && [&self.b, &self.bhat, &self.c, &self.chat].iter().all(|v| v.len() == s);
        if !dims_ok {
            return Err(self.invalid("inconsistent dimensions".into()));
        }
        for i in 0..s {
            for j in 0..s {
                if j > i && (self.a[i][j] != 0.0 || self.ahat[i][j] != 0.0) {
                    return Err(self.invalid(format!("entry ({i},{j}) above the diagonal")));
                }
                if j == i && self.ahat[i][i] != 0.0 {
                    return Err(self.invalid(format!("explicit diagonal entry ({i},{i})")));
                }
            }
            if self.first_stage_explicit {
                let expect = if i == 0 { 0.0 } else { self.gamma };
                if self.a[i][i] != expect {
                    return Err(self.invalid(format!("diagonal entry {i} is {}, expected {expect}", self.a[i][i])));
                }
            } else if self.a[i][i] != self.gamma {
                return Err(self.invalid(format!("diagonal entry {i} differs from gamma")));
            }
            let ra: f64 = self.a[i].iter().sum();
            let rh: f64 = self.ahat[i].iter().sum();
            if (ra - self.c[i]).abs() > STRUCT_TOL {
                return Err(self.invalid(format!("implicit row {i} sums to {ra}, c = {}", self.c[i])));
            }
            if (rh - self.chat[i]).abs() > STRUCT_TOL {
                return Err(self.invalid(format!("explicit row {i} sums to {rh}, c = {}", self.chat[i])));
            }
            if self.first_stage_explicit && self.c[i] != self.chat[i] {
                return Err(self.invalid(format!("abscissae differ at stage {i}")));
            }
        }
        if self.first_stage_explicit && self.a[0].iter().any(|v| *v != 0.0) {
            return Err(self.invalid("first stage is not explicit".into()));
        }
        self.check_order(&self.a, &self.b, self.order, "implicit")?;
        self.check_order(&self.ahat, &self.bhat, self.order, "explicit")?;
        if let Some((d, q)) = &self.embedded {
            self.check_order(&self.a, d, *q, "embedded implicit")?;
            self.check_order(&self.ahat, d, *q, "embedded explicit")?;
        }
        if self.b == self.bhat {
            self.check_coupling()?;
        }
        Ok(())
    }

    fn check_order(&self, a: &[Vec<f64>], b: &[f64], order: usize, part: &str) -> Result<()> {
        for n in 1..=order {
            for t in trees_of_order(n) {
                let lhs = dot(b, &elementary(a, &t));
                let rhs = 1.0 / t.density();
                if (lhs - rhs).abs() > ORDER_TOL {
                    return Err(self.invalid(format!("{part} order condition {t:?}: {lhs} vs {rhs}")));
                }
            }
        }
        Ok(())
    }

    /// Mixed implicit/explicit order conditions (valid when `b = bhat`).
    fn check_coupling(&self) -> Result<()> {
        for n in 2..=self.order {
            for t in trees_of_order(n) {
                let edges = n - 1;
                for mask in 0..(1u32 << edges) {
                    let mut colors = (0..edges).map(|k| mask >> k & 1 == 1);
                    let phi = elementary_coloured(&self.a, &self.ahat, &t, &mut colors);
                    let lhs = dot(&self.b, &phi);
                    let rhs = 1.0 / t.density();
                    if (lhs - rhs).abs() > ORDER_TOL {
                        return Err(self.invalid(format!("coupling condition {t:?} mask {mask:b}: {lhs} vs {rhs}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest `q` such that every condition of order `<= q` holds for `(a, b)`.
    pub fn observed_order(a: &[Vec<f64>], b: &[f64], max: usize) -> usize {
        for n in 1..=max {
            for t in trees_of_order(n) {
                if (dot(b, &elementary(a, &t)) - 1.0 / t.density()).abs() > ORDER_TOL {
                    return n - 1;
                }
            }
        }
        max
    }
}

/// Amplification factor `R(z) = 1 + z b^T (I - z A)^{-1} 1` of the implicit part.
pub fn scalar_stability_function(pair: &ButcherPair, z: C64) -> Result<C64> {
    let s = pair.s;
    let mut k = vec![C64::new(0.0, 0.0); s];
    for i in 0..s {
        let mut acc = C64::new(1.0, 0.0);
        for j in 0..i {
            acc += z * pair.a[i][j] * k[j];
        }
        let diag = C64::new(1.0, 0.0) - z * pair.a[i][i];
        if diag.norm() < 1e-14 {
            return Err(HpsError::Singular {
                context: format!("stage {i} of {} at z = {z}", pair.name),
                ratio: diag.norm(),
                tol: 1e-14,
            });
        }
        k[i] = acc / diag;
    }
    let mut rz = C64::new(1.0, 0.0);
    for j in 0..s {
        rz += z * pair.b[j] * k[j];
    }
    Ok(rz)
}
