use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use elongate::geometry::DEFAULT_NODE_BUDGET;
use elongate::solver::AuditPlan;
use elongate::study::{FitModel, SweepConfig, VerdictOptions};
use elongate::{CrossSection, DensityKind, EnergyDensity, Load, Method, Shape, SolveOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub density: DensitySection,
    pub load: Load<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub r: usize,
    pub n: usize,
    pub cross_section: Shape,
    pub ell_list: Vec<f64>,
    pub vertical_halfwidths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub target_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
    pub big_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl DensitySection {
    pub fn build(&self, r: usize, n: usize) -> anyhow::Result<EnergyDensity<f64>> {
        let kind: DensityKind = self.kind.parse()?;
        let p = match (kind, self.p) {
            (_, Some(p)) => p,
            (DensityKind::Quadratic, None) => 2.0,
            (_, None) => bail!("density kind `{}` needs an exponent `p`", self.kind),
        };
        let mut d = EnergyDensity::from_kind(kind, p, r, n)?;
        if self.lambda.is_some() || self.big_lambda.is_some() {
            d = d.with_constants(self.lambda.unwrap_or(d.lambda), self.big_lambda.unwrap_or(d.big_lambda));
        }
        if let Some(beta) = self.beta {
            d = d.with_beta(beta);
        }
        Ok(d)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default = "yes")]
    pub warm_start: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: None,
            grad_tol: None,
            max_iters: None,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub ell0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    pub fit_models: Vec<FitModel>,
    pub audit_perturbations: usize,
    pub audit_blended: usize,
    pub seed: u64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            ell0: 1.0,
            floor: None,
            fit_models: vec![FitModel::Exponential, FitModel::Power],
            audit_perturbations: 100,
            audit_blended: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<FieldFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![FieldFormat::Csv],
        }
    }
}

/// A config with every default made explicit and every precondition checked.
pub struct Resolved {
    pub config: RunConfig,
    pub sweep: SweepConfig,
    pub floor: f64,
}

impl Resolved {
    pub fn verdict_options(&self) -> VerdictOptions {
        VerdictOptions {
            floor: self.floor,
            ..VerdictOptions::for_tolerance(self.sweep.solver.grad_tol)
        }
    }

    pub fn audit_plan(&self) -> AuditPlan {
        AuditPlan {
            perturbations: self.config.study.audit_perturbations,
            blended: self.config.study.audit_blended,
            seed: self.config.study.seed,
            grad_tol: self.sweep.solver.grad_tol,
            ..AuditPlan::default()
        }
    }

    pub fn max_ell(&self) -> f64 {
        *self.sweep.ell_list.last().expect("validated non-empty")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn resolve(mut self) -> anyhow::Result<Resolved> {
        let d = &self.domain;
        if d.n != d.r + d.vertical_halfwidths.len() {
            bail!(
                "n = {} does not match r = {} plus {} vertical half-widths",
                d.n,
                d.r,
                d.vertical_halfwidths.len()
            );
        }
        let density = self.density.build(d.r, d.n)?;
        let defaults = SolveOptions::for_density(&density);
        let solver = SolveOptions {
            method: self.solver.method.unwrap_or(defaults.method),
            grad_tol: self.solver.grad_tol.unwrap_or(defaults.grad_tol),
            max_iters: self.solver.max_iters.unwrap_or(defaults.max_iters),
            ..defaults
        };
        if solver.method == Method::LinearCg && !density.is_quadratic() {
            bail!("method linear-cg requires p = 2");
        }
        let floor = self.study.floor.unwrap_or(100.0 * solver.grad_tol);
        if !(floor >= 0.0) {
            bail!("study.floor must be nonnegative");
        }
        let sweep = SweepConfig {
            cross_section: CrossSection::new(d.cross_section, d.r)?,
            vertical_halfwidths: d.vertical_halfwidths.clone(),
            ell_list: d.ell_list.clone(),
            target_h: self.grid.target_h,
            density,
            load: self.load.clone(),
            solver: solver.clone(),
            warm_start: self.solver.warm_start,
            ell0: self.study.ell0,
            node_budget: self.grid.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
        };
        sweep.validate()?;

        self.grid.node_budget = Some(sweep.node_budget);
        self.density.p = Some(density.p);
        self.density.lambda = Some(density.lambda);
        self.density.big_lambda = Some(density.big_lambda);
        self.density.beta = Some(density.beta);
        self.solver.method = Some(solver.method);
        self.solver.grad_tol = Some(solver.grad_tol);
        self.solver.max_iters = Some(solver.max_iters);
        self.study.floor = Some(floor);
        Ok(Resolved {
            config: self,
            sweep,
            floor,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        r#"{
            "domain": {"r": 1, "n": 2, "cross_section": "unit-box", "ell_list": [2, 3, 4], "vertical_halfwidths": [1.0]},
            "grid": {"target_h": 0.25},
            "density": {"kind": "quadratic"},
            "load": {"kind": "constant", "value": 2.0}
        }"#
    }

    #[test]
    fn defaults_resolve() {
        let cfg: RunConfig = serde_json::from_str(sample()).unwrap();
        let res = cfg.resolve().unwrap();
        assert_eq!(res.sweep.solver.method, Method::LinearCg);
        assert_eq!(res.sweep.solver.grad_tol, 1e-10);
        assert_eq!(res.floor, 1e-8);
        assert_eq!(res.config.study.fit_models.len(), 2);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg: RunConfig = serde_json::from_str(sample()).unwrap();
        let res = cfg.resolve().unwrap();
        let text = serde_json::to_string_pretty(&res.config).unwrap();
        let again: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(again, res.config);
        let res2 = again.resolve().unwrap();
        assert_eq!(res2.config, res.config);
        assert_eq!(res2.sweep, res.sweep);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_kind = sample().replace("quadratic", "cubic");
        let cfg: RunConfig = serde_json::from_str(&bad_kind).unwrap();
        assert!(cfg.resolve().is_err());
        let unsorted = sample().replace("[2, 3, 4]", "[3, 2]");
        assert!(serde_json::from_str::<RunConfig>(&unsorted).unwrap().resolve().is_err());
        let typo = sample().replace("\"target_h\"", "\"target_hh\"");
        assert!(serde_json::from_str::<RunConfig>(&typo).is_err());
        let no_p = sample().replace("\"quadratic\"", "\"p-dirichlet\"");
        assert!(serde_json::from_str::<RunConfig>(&no_p).unwrap().resolve().is_err());
        let wrong_n = sample().replace("\"n\": 2", "\"n\": 3");
        assert!(serde_json::from_str::<RunConfig>(&wrong_n).unwrap().resolve().is_err());
    }
}
