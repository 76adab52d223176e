//! Dense one-step maps `u^n -> u^{n+1}` on the free DOFs and their spectra.

use std::io::Write;

use rayon::prelude::*;

use crate::dense::{eigenvalues, DenseMatrix, C64};
use crate::error::{HpsError, Result};
use crate::time::problem::BoundaryData;
use crate::time::stepper::{Stepper, StepperState};

/// Largest map the dense assembly accepts.
pub const MAX_FREE_DOFS: usize = 4000;

#[derive(Clone, Debug)]
pub struct StepMapSpectrum {
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
    pub zero_count: usize,
    pub zero_tol: f64,
    pub dt: f64,
    pub scheme: String,
    pub problem: String,
}

/// Column `j` of the result is one step applied to the `j`-th free basis field.
pub fn assemble_step_map(stepper: &Stepper) -> Result<DenseMatrix> {
    let prob = stepper.problem();
    if !prob.is_linear() || prob.source.is_some() || !matches!(prob.boundary, BoundaryData::Homogeneous) {
        return Err(HpsError::Unsupported(format!(
            "step map needs a homogeneous linear problem, '{}' has a source, nonlinearity or boundary data",
            prob.name
        )));
    }
    if prob.components != 1 {
        return Err(HpsError::Unsupported("step map of a multi-component problem".into()));
    }
    let tree = stepper.tree();
    let free = tree.free_dofs();
    let m = free.len();
    if m > MAX_FREE_DOFS {
        return Err(HpsError::Unsupported(format!(
            "step map with {m} free DOFs exceeds the dense limit of {MAX_FREE_DOFS}"
        )));
    }
    let n = tree.n_dof();
    let cols: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut u = vec![0.0; n];
            u[free[j]] = 1.0;
            let st = StepperState { t: 0.0, step: 0, dt: stepper.dt(), u: vec![u] };
            let next = stepper.step(&st)?;
            Ok(free.iter().map(|&g| next.u[0][g]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DenseMatrix::from_fn(m, m, |i, j| cols[j][i]))
}

/// Spectrum of `m` sorted by modulus (descending) then argument.
pub fn analyze(m: &DenseMatrix, dt: f64, scheme: &str, problem: &str) -> Result<StepMapSpectrum> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(HpsError::Inconsistent("step map has non-finite entries".into()));
    }
    let mut ev = eigenvalues(m)?;
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
    let rho = ev.first().map_or(0.0, |z| z.norm());
    let zero_tol = 1e-8 * rho.max(1.0);
    let zero_count = ev.iter().filter(|z| z.norm() < zero_tol).count();
    Ok(StepMapSpectrum {
        eigenvalues: ev,
        spectral_radius: rho,
        zero_count,
        zero_tol,
        dt,
        scheme: scheme.to_string(),
        problem: problem.to_string(),
    })
}

impl StepMapSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Comment lines with the metadata, then `re,im,modulus` per eigenvalue.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# problem={} scheme={} dt={:.16e} n_free={}", self.problem, self.scheme, self.dt, self.dim())?;
        writeln!(
            w,
            "# spectral_radius={:.16e} zero_count={} zero_tol={:.3e}",
            self.spectral_radius, self.zero_count, self.zero_tol
        )?;
        writeln!(w, "re,im,modulus")?;
        for z in &self.eigenvalues {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::DiffusionForm;
    use crate::time::problem::ParabolicProblem;
    use crate::time::stepper::Formulation;
    use crate::time::tableau::load_tableau;
    use crate::tree::{build_tree, Domain};
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn homogeneous(operator: DiffusionForm, domain: Domain) -> Arc<ParabolicProblem> {
        Arc::new(ParabolicProblem {
            name: "homog".into(),
            domain,
            operator,
            components: 1,
            source: None,
            nonlinear: None,
            boundary: BoundaryData::Homogeneous,
            initial: Arc::new(|_, _, _, o| o[0] = 0.0),
            time_independent_bc: true,
        })
    }

    fn stepper(leaves: usize, p: usize, scheme: &str, form: Formulation, dt: f64, op: DiffusionForm) -> Stepper {
        let d = Domain::Interval(0.0, 1.0);
        let tree = Arc::new(build_tree(d, leaves, 1, p).unwrap());
        Stepper::new(homogeneous(op, d), tree, load_tableau(scheme).unwrap(), form, dt).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let s = analyze(&DenseMatrix::identity(5, 5), 1.0, "x", "y").unwrap();
        assert_eq!(s.zero_count, 0);
        assert!((s.spectral_radius - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_operator_gives_identity() {
        let zero = DiffusionForm::from_operator(&crate::discretization::OperatorCoefficients::zero());
        let st = stepper(1, 10, "ARK4", Formulation::Stage, 0.1, zero);
        let m = assemble_step_map(&st).unwrap();
        let d = (&m - DenseMatrix::identity(m.nrows(), m.ncols())).abs().max();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn single_leaf_be_heat_in_unit_interval() {
        let st = stepper(1, 8, "BE", Formulation::Stage, 0.01, DiffusionForm::heat(1.0));
        let s = analyze(&assemble_step_map(&st).unwrap(), 0.01, "BE", "heat").unwrap();
        for z in &s.eigenvalues {
            assert!(z.im.abs() < 1e-10 && z.re > 0.0 && z.re < 1.0, "{z}");
        }
    }

    #[test]
    fn tree_interfaces_give_zero_eigenvalues() {
        let st = stepper(8, 8, "BE", Formulation::Stage, 0.01, DiffusionForm::heat(1.0));
        let s = analyze(&assemble_step_map(&st).unwrap(), 0.01, "BE", "heat").unwrap();
        assert_eq!(s.zero_count, 7);
        assert!(s.spectral_radius <= 1.0 + 1e-10);
    }

    #[test]
    fn map_is_linear() {
        let st = stepper(4, 8, "ARK4", Formulation::Stage, 0.05, DiffusionForm::heat(1.0));
        let m = assemble_step_map(&st).unwrap();
        let tree = st.tree();
        let free = tree.free_dofs();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..3 {
            let x: Vec<f64> = (0..free.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let alpha = rng.gen_range(-3.0..3.0);
            let mut u = vec![0.0; tree.n_dof()];
            for (k, &g) in free.iter().enumerate() {
                u[g] = alpha * x[k];
            }
            let next = st.step(&StepperState { t: 0.0, step: 0, dt: st.dt(), u: vec![u] }).unwrap();
            let mx = &m * nalgebra::DVector::from_vec(x);
            for (k, &g) in free.iter().enumerate() {
                assert!((next.u[0][g] - alpha * mx[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inhomogeneous_problem_refused() {
        let d = Domain::Interval(0.0, 1.0);
        let tree = Arc::new(build_tree(d, 2, 1, 8).unwrap());
        let mut p = (*homogeneous(DiffusionForm::heat(1.0), d)).clone();
        p.source = Some(Arc::new(|_, _, _, o| o[0] = 1.0));
        let st = Stepper::new(Arc::new(p), tree, load_tableau("BE").unwrap(), Formulation::Stage, 0.1).unwrap();
        assert!(matches!(assemble_step_map(&st), Err(HpsError::Unsupported(_))));
    }

    #[test]
    fn csv_has_one_row_per_eigenvalue() {
        let s = analyze(&DenseMatrix::from_diagonal_element(3, 3, 0.5), 0.1, "BE", "p").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }
}
