//! Run configuration: a TOML file with `[problem]`, `[tree]`, `[time]` and
//! `[output]` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bench::problems::{builtin_problem, ProblemParams, ProblemSpec, SourceMode};
use crate::error::{HpsError, Result};
use crate::time::stepper::{Formulation, SourceWeights};
use crate::time::tableau::{load_tableau, ButcherPair};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    /// Convection strength of `convdiff1d`.
    pub k: Option<f64>,
    /// Reaction coefficient of `varcoef1d`.
    pub kappa: Option<f64>,
    /// Viscosity of the Burgers problems.
    pub epsilon: Option<f64>,
    /// `"manufactured"` (default) or `"none"`.
    pub source: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub p: Option<usize>,
    /// Square leaf counts per side for timing runs.
    pub sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub tableau: Option<String>,
    pub formulation: Option<String>,
    /// Weights of the source in the stage formulation: `"explicit"` (default) or `"implicit"`.
    pub source_weights: Option<String>,
    pub dt: Option<f64>,
    /// Explicit step list for convergence or stability runs.
    pub dts: Option<Vec<f64>>,
    /// Number of halvings of `dt` when `dts` is absent.
    pub halvings: Option<usize>,
    pub t_final: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub run_name: Option<String>,
    /// Points per side of the uniform resampling grid written next to snapshots.
    pub resample: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Sets `section.key = value` in a parsed document; `value` is read as a TOML
/// value when possible and as a string otherwise.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HpsError::Config(format!("override '{assignment}' is not of the form section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| HpsError::Config(format!("override key '{key}' needs a section, e.g. time.dt")))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let entry = doc
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let table = entry
        .as_table_mut()
        .ok_or_else(|| HpsError::Config(format!("'{section}' is not a section")))?;
    table.insert(field.to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| HpsError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        RunConfig::deserialize(doc).map_err(|e| HpsError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HpsError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    /// A config naming only the problem; everything else takes problem defaults.
    pub fn for_problem(name: &str, overrides: &[String]) -> Result<Self> {
        Self::parse(&format!("[problem]\nname = \"{name}\"\n"), overrides)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let pr = &self.problem;
        let mut params = ProblemParams::default();
        if let Some(k) = pr.k {
            params.k = k;
        }
        if let Some(kappa) = pr.kappa {
            params.kappa = kappa;
        }
        params.epsilon = pr.epsilon;
        params.source = match pr.source.as_deref() {
            None | Some("manufactured") => SourceMode::Manufactured,
            Some("none") => SourceMode::None,
            Some(other) => return Err(HpsError::Config(format!("problem.source '{other}' is not manufactured|none"))),
        };
        let spec = builtin_problem(&pr.name, &params)?;
        let d = spec.defaults.clone();
        let dim = spec.dim();
        let n1 = self.tree.n1.unwrap_or(d.n1);
        let n2 = if dim == 1 { 1 } else { self.tree.n2.unwrap_or(d.n2) };
        let p = self.tree.p.unwrap_or(d.p);
        let tm = &self.time;
        let tableau_name = tm.tableau.clone().unwrap_or_else(|| d.tableau.to_string());
        let pair = load_tableau(&tableau_name)?;
        let formulation = match tm.formulation.as_deref() {
            None => Formulation::Stage,
            Some(f) => Formulation::parse(f)
                .ok_or_else(|| HpsError::Config(format!("time.formulation '{f}' is not stage|slope|slope-penalized")))?,
        };
        let source_weights = match tm.source_weights.as_deref() {
            None => SourceWeights::Explicit,
            Some(w) => SourceWeights::parse(w)
                .ok_or_else(|| HpsError::Config(format!("time.source_weights '{w}' is not explicit|implicit")))?,
        };
        let t_final = tm.t_final.unwrap_or(d.t_final);
        if !(t_final > 0.0) {
            return Err(HpsError::Config(format!("time.t_final = {t_final} must be positive")));
        }
        let dt = tm.dt.unwrap_or(d.dt);
        let dts = match &tm.dts {
            Some(list) => list.clone(),
            None => (0..=tm.halvings.unwrap_or(0)).map(|k| dt / f64::powi(2.0, k as i32)).collect(),
        };
        if dts.is_empty() || dts.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(HpsError::Config(format!("time steps {dts:?} must be positive")));
        }
        let run_name = self.output.run_name.clone().unwrap_or_else(|| spec.name().to_string());
        Ok(Resolved {
            spec,
            n1,
            n2,
            p,
            sizes: self.tree.sizes.clone().unwrap_or_else(|| vec![4, 8, 16, 32, 64]),
            pair,
            formulation,
            source_weights,
            dts,
            t_final,
            snapshots: tm.snapshots.clone(),
            repetitions: tm.repetitions.unwrap_or(3).max(1),
            seed: tm.seed.unwrap_or(0),
            out_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            run_name,
            resample: self.output.resample,
        })
    }
}

/// A configuration with every name resolved and defaults filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub spec: ProblemSpec,
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub sizes: Vec<usize>,
    pub pair: ButcherPair,
    pub formulation: Formulation,
    pub source_weights: SourceWeights,
    pub dts: Vec<f64>,
    pub t_final: f64,
    pub snapshots: Option<Vec<f64>>,
    pub repetitions: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub run_name: String,
    pub resample: Option<usize>,
}

/// Number of steps of size `dt` reaching `t_final`, if they land within 1e-12.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    let n = (t_final / dt).round();
    if n < 1.0 || (n * dt - t_final).abs() > 1e-12 {
        return Err(HpsError::Config(format!("dt = {dt} does not divide t_final = {t_final}")));
    }
    Ok(n as usize)
}

impl Resolved {
    pub fn output_path(&self, table: &str, ext: &str) -> PathBuf {
        self.out_dir.join(format!("{}-{}.{}", self.run_name, table, ext))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_problem_defaults() {
        let r = RunConfig::for_problem("heat2d-homog", &[]).unwrap().resolve().unwrap();
        assert_eq!((r.n1, r.n2, r.p), (8, 8, 21));
        assert_eq!(r.pair.name, "ARK4(3)6L[2]SA");
        assert_eq!(r.formulation, Formulation::Stage);
        assert_eq!(r.dts.len(), 1);
    }

    #[test]
    fn full_config_and_overrides() {
        let text = r#"
            [problem]
            name = "convdiff1d"
            k = 100.0
            [tree]
            n1 = 4
            p = 12
            [time]
            tableau = "ARK5"
            formulation = "slope-penalized"
            dt = 0.1
            halvings = 3
            t_final = 0.5
            [output]
            dir = "out"
            run_name = "cd"
        "#;
        let r = RunConfig::parse(text, &["tree.p=16".into(), "time.formulation=slope".into()]).unwrap().resolve().unwrap();
        assert_eq!((r.n1, r.n2, r.p), (4, 1, 16));
        assert_eq!(r.formulation, Formulation::Slope);
        assert_eq!(r.dts, vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(r.output_path("convergence", "csv"), PathBuf::from("out/cd-convergence.csv"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("[problem]\nname = \"heat2d-homog\"\nbogus = 1\n", &[]), Err(HpsError::Config(_))));
        assert!(matches!(RunConfig::parse("[problem]\nname = \"x\"\n[extra]\n", &[]), Err(HpsError::Config(_))));
        assert!(matches!(RunConfig::for_problem("heat2d-homog", &["time.bogus=1".into()]), Err(HpsError::Config(_))));
    }

    #[test]
    fn unresolvable_names_are_config_errors() {
        let bad = |o: &str| RunConfig::for_problem("heat2d-homog", &[o.into()]).unwrap().resolve();
        assert!(matches!(bad("time.formulation=sideways"), Err(HpsError::Config(_))));
        assert!(matches!(bad("problem.source=magic"), Err(HpsError::Config(_))));
        assert!(matches!(bad("time.source_weights=both"), Err(HpsError::Config(_))));
        assert!(RunConfig::for_problem("nope", &[]).unwrap().resolve().is_err());
        assert!(bad("time.tableau=RK99").is_err());
    }

    #[test]
    fn steps_must_land_on_final_time() {
        assert_eq!(step_count(1.5, 0.01).unwrap(), 150);
        assert_eq!(step_count(2.0, 2.0 / 64.0).unwrap(), 64);
        assert!(step_count(1.0, 0.3).is_err());
    }
}
