//! ℓ-sweeps, decay profiles, rate fits and verdicts on the asymptotic claims.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::density::EnergyDensity;
use crate::error::{Error, Result};
use crate::field::{extend_vertical, lp_norm_p, lp_norm_p_vec, Load, ScalarField};
use crate::geometry::{CellSet, CrossSection, DomainSpec, Grid, DEFAULT_NODE_BUDGET};
use crate::solver::{minimize, solve_limit, SolveOptions, SolveReport};

fn default_ell0() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_budget() -> usize {
    DEFAULT_NODE_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub cross_section: CrossSection,
    pub vertical_halfwidths: Vec<f64>,
    /// Strictly ascending elongations.
    pub ell_list: Vec<f64>,
    pub target_h: f64,
    pub density: EnergyDensity<f64>,
    pub load: Load<f64>,
    pub solver: SolveOptions,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default = "default_ell0")]
    pub ell0: f64,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
}

impl SweepConfig {
    pub fn spec(&self, ell: f64) -> Result<DomainSpec<f64>> {
        DomainSpec::new(self.cross_section, ell, self.vertical_halfwidths.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell_list.is_empty() {
            return Err(Error::InvalidParameter("ell_list is empty".into()));
        }
        if self.ell_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("ell_list must be strictly ascending".into()));
        }
        if !(self.ell0 > 0.0) || self.ell0 > self.ell_list[0] {
            return Err(Error::InvalidParameter(format!(
                "ell0 must lie in (0, {}], got {}",
                self.ell_list[0], self.ell0
            )));
        }
        let n = self.cross_section.r + self.vertical_halfwidths.len();
        if self.density.r != self.cross_section.r || self.density.n != n {
            return Err(Error::InvalidParameter(format!(
                "density is set up for r = {}, n = {} but the domain has r = {}, n = {n}",
                self.density.r, self.density.n, self.cross_section.r
            )));
        }
        if let Load::Sampled { counts, .. } = &self.load {
            let vg = Grid::vertical(&self.vertical_halfwidths, self.target_h)?;
            if counts.as_slice() != vg.counts() {
                return Err(Error::VerticalMismatch(format!(
                    "load sampled on {counts:?} nodes, vertical grid has {:?}",
                    vg.counts()
                )));
            }
        }
        self.solver.validate()?;
        for &ell in &self.ell_list {
            self.grid(ell)?;
        }
        Ok(())
    }

    pub fn grid(&self, ell: f64) -> Result<Grid<f64>> {
        Grid::build_with_budget(&self.spec(ell)?, self.target_h, self.node_budget)
    }

    pub fn vertical_grid(&self) -> Result<Grid<f64>> {
        Grid::vertical(&self.vertical_halfwidths, self.target_h)
    }
}

/// Measurements for one elongation. Norms are p-th powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub ell: f64,
    pub ell0: f64,
    pub h_horiz: f64,
    pub h_vert: f64,
    pub nodes: usize,
    pub iters: usize,
    pub converged: bool,
    #[serde(rename = "J_ell")]
    pub j_ell: f64,
    /// `‖∇u_ℓ‖^p` over `Ω_ℓ`.
    pub total_grad_energy: f64,
    /// `‖∇(u_ℓ − ũ_∞)‖^p` over `Ω_{ℓ0}`.
    pub err_grad_p: f64,
    pub err_w1p: f64,
    /// `‖∇′u_ℓ‖^p` over `Ω_{ℓ0}`.
    pub hgrad_p: f64,
    /// `‖∇u_ℓ‖^p` over `Ω_{ℓ0}`.
    pub grad_energy_l0: f64,
    pub runtime_ms: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "ell,ell0,h_horiz,h_vert,nodes,iters,converged,J_ell,total_grad_energy,err_grad_p,err_w1p,hgrad_p,runtime_ms";

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for r in records {
        w.write_record([
            r.ell.to_string(),
            r.ell0.to_string(),
            r.h_horiz.to_string(),
            r.h_vert.to_string(),
            r.nodes.to_string(),
            r.iters.to_string(),
            r.converged.to_string(),
            format!("{:e}", r.j_ell),
            format!("{:e}", r.total_grad_energy),
            format!("{:e}", r.err_grad_p),
            format!("{:e}", r.err_w1p),
            format!("{:e}", r.hgrad_p),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Error and energy quantities of `u` against the extended limit `u_inf_ext`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub total_grad_energy: f64,
    pub err_grad_p: f64,
    pub err_w1p: f64,
    pub hgrad_p: f64,
    pub grad_energy_l0: f64,
}

pub fn measure(u: &ScalarField<f64>, u_inf_ext: &ScalarField<f64>, p: f64, ell0: f64) -> Result<Measures> {
    let grid = u.grid();
    if u_inf_ext.values().len() != u.values().len() {
        return Err(Error::DimensionMismatch {
            expected: u.values().len(),
            got: u_inf_ext.values().len(),
        });
    }
    let dim = grid.dim();
    let r = grid.horizontal_dims();
    let diff = ScalarField::from_values(
        grid.clone(),
        u.values().iter().zip(u_inf_ext.values()).map(|(a, b)| a - b).collect(),
    )?;
    let gu = u.cell_gradients();
    let gd = diff.cell_gradients();
    let horiz: Vec<f64> = gu.chunks(dim).flat_map(|g| g[..r].to_vec()).collect();
    let all = grid.all_cells();
    let inner = grid.omega_t(ell0);
    let err_grad_p = lp_norm_p_vec(grid, &gd, dim, &inner, p);
    Ok(Measures {
        total_grad_energy: lp_norm_p_vec(grid, &gu, dim, &all, p),
        err_grad_p,
        err_w1p: err_grad_p + lp_norm_p(grid, &diff.cell_means(), &inner, p),
        hgrad_p: lp_norm_p_vec(grid, &horiz, r, &inner, p),
        grad_energy_l0: lp_norm_p_vec(grid, &gu, dim, &inner, p),
    })
}

/// Everything a sweep observer sees for one elongation.
pub struct SweepStep<'a> {
    pub record: &'a SweepRecord,
    pub report: &'a SolveReport,
    pub solution: &'a ScalarField<f64>,
    /// Limit solution extended to the grid of `solution`.
    pub limit_ext: &'a ScalarField<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub limit_report: SolveReport,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    run_sweep_with(config, |_| Ok(()))
}

/// Solves `P_∞` once and `P_ℓ` for every `ℓ` in order, warm-starting each solve
/// from the previous solution when enabled. `observe` runs after each `ℓ`.
pub fn run_sweep_with<F>(config: &SweepConfig, mut observe: F) -> Result<SweepOutput>
where
    F: FnMut(SweepStep<'_>) -> Result<()>,
{
    config.validate()?;
    let vgrid = Arc::new(config.vertical_grid()?);
    let (limit, limit_report) = solve_limit(&vgrid, &config.density, &config.load, &config.solver)?;
    let p = config.density.p;
    let mut records = Vec::with_capacity(config.ell_list.len());
    let mut previous: Option<ScalarField<f64>> = None;
    for &ell in &config.ell_list {
        let start = Instant::now();
        let grid = Arc::new(config.grid(ell)?);
        let warm = if config.warm_start { previous.as_ref() } else { None };
        let (u, report) = minimize(&grid, &config.density, &config.load, &config.solver, warm)?;
        let limit_ext = extend_vertical(&limit, &grid)?;
        let m = measure(&u, &limit_ext, p, config.ell0)?;
        let r = grid.horizontal_dims();
        let max_spacing = |axes: &[f64]| axes.iter().cloned().fold(0.0, f64::max);
        let record = SweepRecord {
            ell,
            ell0: config.ell0,
            h_horiz: max_spacing(&grid.spacing()[..r]),
            h_vert: max_spacing(&grid.spacing()[r..]),
            nodes: grid.node_count(),
            iters: report.iterations,
            converged: report.converged,
            j_ell: report.energy,
            total_grad_energy: m.total_grad_energy,
            err_grad_p: m.err_grad_p,
            err_w1p: m.err_w1p,
            hgrad_p: m.hgrad_p,
            grad_energy_l0: m.grad_energy_l0,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        observe(SweepStep {
            record: &record,
            report: &report,
            solution: &u,
            limit_ext: &limit_ext,
        })?;
        records.push(record);
        previous = Some(u);
    }
    Ok(SweepOutput {
        records,
        limit_report,
    })
}

/// Saint-Venant decay profile: pairs `(t, g(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub points: Vec<(f64, f64)>,
}

impl Profile {
    /// Smallest `θ` with `g(t_i) ≤ θ g(t_{i+1})` over consecutive points with `t_i ∈ [from, to]`.
    pub fn theta(&self, from: f64, to: f64) -> Option<f64> {
        self.points
            .windows(2)
            .filter(|w| w[0].0 >= from && w[0].0 <= to)
            .map(|w| if w[1].1 > 0.0 { w[0].1 / w[1].1 } else { 0.0 })
            .reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "g"])?;
        for (t, g) in &self.points {
            w.write_record([t.to_string(), format!("{g:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `g(t) = ‖∇′u_ℓ‖^p_{L^p(Ω_t)} + ‖∇″(u_ℓ − ũ_∞)‖^p_{L^p(Ω_t)}`.
pub fn saint_venant_profile(
    u: &ScalarField<f64>,
    u_inf_ext: &ScalarField<f64>,
    p: f64,
    t_values: &[f64],
) -> Result<Profile> {
    let grid = u.grid();
    let ell = grid.ell();
    if t_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("t values must be strictly ascending".into()));
    }
    if let Some(t) = t_values.iter().find(|t| !(**t > 0.0 && **t <= ell)) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, {ell}]")));
    }
    if u_inf_ext.values().len() != u.values().len() {
        return Err(Error::DimensionMismatch {
            expected: u.values().len(),
            got: u_inf_ext.values().len(),
        });
    }
    let dim = grid.dim();
    let r = grid.horizontal_dims();
    let diff = ScalarField::from_values(
        grid.clone(),
        u.values().iter().zip(u_inf_ext.values()).map(|(a, b)| a - b).collect(),
    )?;
    let gu = u.cell_gradients();
    let gd = diff.cell_gradients();
    let norm_p = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt().powf(p);
    let density: Vec<f64> = (0..grid.cell_count())
        .map(|c| norm_p(&gu[c * dim..c * dim + r]) + norm_p(&gd[c * dim + r..(c + 1) * dim]))
        .collect();
    let vol = grid.cell_volume();
    let points = t_values
        .iter()
        .map(|&t| {
            let cells: CellSet = if t >= ell { grid.all_cells() } else { grid.omega_t(t) };
            (t, cells.iter().map(|c| density[c]).sum::<f64>() * vol)
        })
        .collect();
    Ok(Profile { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `e ≈ C ℓ^q`.
    Power,
    /// `e ≈ C exp(−αℓ)`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: FitModel,
    pub c: f64,
    /// `q` for the power model, `α` for the exponential one.
    pub exponent: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub floor: f64,
}

/// Least squares on `(ℓ, ln e)` or `(ln ℓ, ln e)` over the points with `e > floor`.
pub fn fit_rate(points: &[(f64, f64)], model: FitModel, floor: f64) -> Result<RateFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|(l, e)| *e > floor && e.is_finite() && *l > 0.0)
        .map(|&(l, e)| match model {
            FitModel::Power => (l.ln(), e.ln()),
            FitModel::Exponential => (l, e.ln()),
        })
        .collect();
    if data.len() < 3 {
        return Err(Error::InsufficientData { usable: data.len() });
    }
    let m = data.len() as f64;
    let mx = data.iter().map(|d| d.0).sum::<f64>() / m;
    let my = data.iter().map(|d| d.1).sum::<f64>() / m;
    let sxx: f64 = data.iter().map(|d| (d.0 - mx).powi(2)).sum();
    let sxy: f64 = data.iter().map(|d| (d.0 - mx) * (d.1 - my)).sum();
    let syy: f64 = data.iter().map(|d| (d.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { usable: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = data.iter().map(|d| (d.1 - intercept - slope * d.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit {
        model,
        c: intercept.exp(),
        exponent: match model {
            FitModel::Power => slope,
            FitModel::Exponential => -slope,
        },
        r_squared,
        points_used: data.len(),
        floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Too few usable points for a decision.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    /// Only records with `ℓ ≥ coarse_from` enter the energy-scaling checks.
    pub coarse_from: f64,
    pub ratio_bound: f64,
    pub hgrad_final: f64,
    pub power_slack: f64,
    pub min_r2_power: f64,
    pub min_r2_exponential: f64,
    /// Fit floor; errors at or below it count as converged to tolerance.
    pub floor: f64,
}

impl VerdictOptions {
    /// Floor at `100 · grad_tol`.
    pub fn for_tolerance(grad_tol: f64) -> Self {
        Self {
            coarse_from: 4.0,
            ratio_bound: 1.5,
            hgrad_final: 1e-6,
            power_slack: 0.5,
            min_r2_power: 0.9,
            min_r2_exponential: 0.98,
            floor: 100.0 * grad_tol,
        }
    }
}

/// `r − kp/(p−k)`, the exponent of the polynomial rate.
pub fn power_rate_target(d: &EnergyDensity<f64>) -> f64 {
    d.r as f64 - d.k * d.p / (d.p - d.k)
}

fn verdict(claim: &str, status: Status, detail: String, fit: Option<RateFit>) -> Verdict {
    Verdict {
        claim: claim.to_string(),
        status,
        detail,
        fit,
    }
}

/// Boundedness of `e/ℓ^r` over the records; the log-log slope is reported, not judged.
fn scaling_check(claim: &str, pts: &[(f64, f64)], r: f64, opts: &VerdictOptions) -> Verdict {
    if pts.len() < 3 {
        return verdict(
            claim,
            Status::Inconclusive,
            format!("{} usable records, at least 3 required", pts.len()),
            None,
        );
    }
    if pts.iter().all(|p| p.1 == 0.0) {
        return verdict(claim, Status::Pass, "identically zero".into(), None);
    }
    let ratios: Vec<f64> = pts.iter().map(|(l, e)| e / l.powf(r)).collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = max / min;
    let ok = min > 0.0 && spread <= opts.ratio_bound;
    let mut detail = format!("max/min of e/ell^{r} = {spread:.4} (bound {})", opts.ratio_bound);
    let fit = fit_rate(pts, FitModel::Power, 0.0).ok();
    if let Some(f) = &fit {
        detail += &format!(", log-log slope {:.4}", f.exponent);
    }
    verdict(claim, if ok { Status::Pass } else { Status::Fail }, detail, fit)
}

/// One verdict per claim; claims whose hypotheses the density does not meet are skipped.
pub fn theorem_verdicts(records: &[SweepRecord], density: &EnergyDensity<f64>, opts: &VerdictOptions) -> Vec<Verdict> {
    let usable: Vec<&SweepRecord> = records.iter().filter(|r| r.converged).collect();
    let r = density.r as f64;
    let p = density.p;
    let mut out = Vec::new();

    let coarse: Vec<(f64, f64)> = usable
        .iter()
        .filter(|x| x.ell >= opts.coarse_from)
        .map(|x| (x.ell, x.total_grad_energy))
        .collect();
    out.push(scaling_check("energy-scaling", &coarse, r, opts));

    let local: Vec<(f64, f64)> = usable
        .iter()
        .filter(|x| x.ell >= opts.coarse_from)
        .map(|x| (x.ell, x.grad_energy_l0))
        .collect();
    out.push(scaling_check("local-energy-bound", &local, 0.0, opts));

    let hgrad: Vec<f64> = usable.iter().map(|x| x.hgrad_p).collect();
    out.push(match hgrad.last() {
        Some(_) if hgrad.len() < 3 => verdict(
            "limit-convergence",
            Status::Inconclusive,
            format!("{} converged records, at least 3 required", hgrad.len()),
            None,
        ),
        None => verdict("limit-convergence", Status::Inconclusive, "no converged records".into(), None),
        Some(&last) => {
            let monotone = hgrad.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            let ok = monotone && last <= opts.hgrad_final;
            verdict(
                "limit-convergence",
                if ok { Status::Pass } else { Status::Fail },
                format!("nonincreasing: {monotone}, final hgrad_p = {last:e} (bound {:e})", opts.hgrad_final),
                None,
            )
        }
    });

    let k = density.k;
    let target = power_rate_target(density);
    out.push(if !(k > 0.0 && k < p && target < 0.0) {
        verdict(
            "power-rate",
            Status::Skipped,
            format!("requires 0 < k < p and r < kp/(p−k); k = {k}, p = {p}, r = {r}"),
            None,
        )
    } else {
        let pts: Vec<(f64, f64)> = usable.iter().map(|x| (x.ell, x.err_w1p)).collect();
        rate_verdict("power-rate", &pts, FitModel::Power, opts, |f| {
            let ok = f.exponent <= target + opts.power_slack && f.r_squared >= opts.min_r2_power;
            let d = format!(
                "exponent {:.4} vs bound {target} + {}, R² = {:.4} (min {})",
                f.exponent, opts.power_slack, f.r_squared, opts.min_r2_power
            );
            (ok, d)
        })
    });

    out.push(if !(k == 0.0 && density.beta > 0.0) {
        verdict(
            "exponential-rate",
            Status::Skipped,
            format!("requires k = 0 and β > 0; k = {k}, β = {}", density.beta),
            None,
        )
    } else {
        let pts: Vec<(f64, f64)> = usable.iter().map(|x| (x.ell, x.err_grad_p.powf(1.0 / p))).collect();
        rate_verdict("exponential-rate", &pts, FitModel::Exponential, opts, |f| {
            let ok = f.exponent > 0.0 && f.r_squared >= opts.min_r2_exponential;
            let d = format!(
                "α = {:.4}, R² = {:.6} (min {})",
                f.exponent, f.r_squared, opts.min_r2_exponential
            );
            (ok, d)
        })
    });
    out
}

fn rate_verdict(
    claim: &str,
    pts: &[(f64, f64)],
    model: FitModel,
    opts: &VerdictOptions,
    judge: impl Fn(&RateFit) -> (bool, String),
) -> Verdict {
    match fit_rate(pts, model, opts.floor) {
        Ok(f) => {
            let (ok, detail) = judge(&f);
            verdict(claim, if ok { Status::Pass } else { Status::Fail }, detail, Some(f))
        }
        Err(Error::InsufficientData { usable }) => {
            if !pts.is_empty() && pts.iter().all(|p| p.1 <= opts.floor) {
                verdict(claim, Status::Pass, format!("all errors at or below the floor {:e}", opts.floor), None)
            } else {
                verdict(claim, Status::Inconclusive, format!("only {usable} points above the floor"), None)
            }
        }
        Err(e) => verdict(claim, Status::Inconclusive, e.to_string(), None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(density: EnergyDensity<f64>, ells: &[f64], f: f64) -> SweepConfig {
        SweepConfig {
            cross_section: CrossSection::unit_box(1).unwrap(),
            vertical_halfwidths: vec![1.0],
            ell_list: ells.to_vec(),
            target_h: 0.125,
            density,
            load: Load::constant(f),
            solver: SolveOptions::for_density(&density),
            warm_start: true,
            ell0: 1.0,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    #[test]
    fn exact_fits() {
        let exp: Vec<(f64, f64)> = (2..8).map(|l| (l as f64, (-0.5 * l as f64).exp())).collect();
        let f = fit_rate(&exp, FitModel::Exponential, 0.0).unwrap();
        assert_relative_eq!(f.exponent, 0.5, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.c, 1.0, epsilon = 1e-10);
        let pow: Vec<(f64, f64)> = (2..8).map(|l| (l as f64, (l as f64).powi(-3))).collect();
        let f = fit_rate(&pow, FitModel::Power, 0.0).unwrap();
        assert_relative_eq!(f.exponent, -3.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn floor_excludes_points() {
        let mut pts: Vec<(f64, f64)> = (1..5).map(|l| (l as f64, (-(l as f64)).exp())).collect();
        pts.push((5.0, 1e-9));
        let f = fit_rate(&pts, FitModel::Exponential, 1e-8).unwrap();
        assert_eq!(f.points_used, 4);
        assert_relative_eq!(f.exponent, 1.0, epsilon = 1e-12);
        assert!(matches!(
            fit_rate(&pts[..2], FitModel::Power, 0.0),
            Err(Error::InsufficientData { usable: 2 })
        ));
    }

    #[test]
    fn quadratic_sweep_decays() {
        let d = EnergyDensity::quadratic(1, 2).unwrap();
        let out = run_sweep(&config(d, &[2.0, 4.0, 6.0], 2.0)).unwrap();
        assert_eq!(out.records.len(), 3);
        for w in out.records.windows(2) {
            assert!(w[1].err_grad_p < w[0].err_grad_p);
        }
        let rec = &out.records[0];
        assert!(rec.converged && rec.ell0 <= rec.ell);
        assert!(rec.err_w1p >= rec.err_grad_p && rec.hgrad_p >= 0.0);
        let mut buf = Vec::new();
        write_sweep_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_CSV_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn zero_load_sweep_is_trivial() {
        let d = EnergyDensity::p_dirichlet(4.0, 1, 2).unwrap();
        let cfg = config(d, &[2.0, 3.0, 4.0], 0.0);
        let out = run_sweep(&cfg).unwrap();
        for r in &out.records {
            assert_eq!(r.err_w1p, 0.0);
            assert_eq!(r.total_grad_energy, 0.0);
        }
        let verdicts = theorem_verdicts(&out.records, &d, &VerdictOptions::for_tolerance(cfg.solver.grad_tol));
        for v in &verdicts {
            assert!(matches!(v.status, Status::Pass | Status::Skipped | Status::Inconclusive), "{v:?}");
            assert_ne!(v.status, Status::Fail);
        }
        assert_eq!(verdicts.iter().find(|v| v.claim == "power-rate").unwrap().status, Status::Pass);
    }

    #[test]
    fn full_domain_region_and_profile() {
        let d = EnergyDensity::quadratic(1, 2).unwrap();
        let mut cfg = config(d, &[3.0], 2.0);
        cfg.ell0 = 3.0;
        let mut seen = None;
        let out = run_sweep_with(&cfg, |step| {
            let prof = saint_venant_profile(step.solution, step.limit_ext, 2.0, &[1.0, 2.0, 3.0])?;
            seen = Some(prof);
            Ok(())
        })
        .unwrap();
        let prof = seen.unwrap();
        let rec = &out.records[0];
        // g(ℓ) = hgrad + vertical error over the whole domain
        assert!(prof.points[2].1 >= rec.hgrad_p);
        assert!(prof.points[2].1 <= rec.err_grad_p + rec.hgrad_p + 1e-12);
        for w in prof.points.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert!(prof.theta(1.0, 2.0).unwrap() < 1.0);
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,g\n"));
        assert!(saint_venant_profile(&ScalarField::zeros(Arc::new(cfg.grid(3.0).unwrap())), &ScalarField::zeros(Arc::new(cfg.grid(3.0).unwrap())), 2.0, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn verdict_applicability() {
        let q = EnergyDensity::quadratic(1, 2).unwrap();
        let p4 = EnergyDensity::p_dirichlet(4.0, 1, 2).unwrap();
        assert_relative_eq!(power_rate_target(&p4), -3.0);
        let opts = VerdictOptions::for_tolerance(1e-10);
        let vq = theorem_verdicts(&[], &q, &opts);
        assert_eq!(vq[3].status, Status::Skipped);
        assert_ne!(vq[4].status, Status::Skipped);
        let vp = theorem_verdicts(&[], &p4, &opts);
        assert_ne!(vp[3].status, Status::Skipped);
        assert_eq!(vp[4].status, Status::Skipped);
    }

    #[test]
    fn config_validation() {
        let d = EnergyDensity::quadratic(1, 2).unwrap();
        assert!(config(d, &[2.0, 2.0], 1.0).validate().is_err());
        let mut c = config(d, &[2.0, 3.0], 1.0);
        c.ell0 = 2.5;
        assert!(c.validate().is_err());
        let d3 = EnergyDensity::quadratic(1, 3).unwrap();
        assert!(config(d3, &[2.0], 1.0).validate().is_err());
        let mut c = config(d, &[2.0, 200.0], 1.0);
        c.node_budget = 1000;
        assert!(matches!(c.validate(), Err(Error::NodeBudget { .. })));
    }
}
