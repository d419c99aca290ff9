//! Minimality audit: compares `J(u)` with `J(v)` for comparison fields `v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gradient_scale;
use crate::density::EnergyDensity;
use crate::error::{Error, Result};
use crate::field::{Functional, Load, ScalarField};
use crate::geometry::{gauge_unchecked, Cutoff, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialKind {
    Identity,
    Bump,
    Blended,
    Zero,
    FarFieldCut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub kind: TrialKind,
    /// `J(v) − J(u)`.
    pub delta: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPlan {
    /// Number of random bump perturbations.
    pub perturbations: usize,
    /// Number of blended fields `v₁`, used only when a limit solution is given.
    pub blended: usize,
    pub seed: u64,
    /// Fixed blending weight; sampled in `(0, 1]` when absent.
    pub alpha: Option<f64>,
    /// Fixed `(s, t)`; sampled with `0 < t < s ≤ ℓ` when absent.
    pub cutoff: Option<(f64, f64)>,
    /// Relative gradient tolerance the solve was run with.
    pub grad_tol: f64,
}

impl Default for AuditPlan {
    fn default() -> Self {
        Self {
            perturbations: 100,
            blended: 20,
            seed: 0,
            alpha: None,
            cutoff: None,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub energy: f64,
    pub energy_scale: f64,
    pub tolerance: f64,
    pub trials: usize,
    pub violations: usize,
    pub worst_delta: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl MinimalityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Turns a failed audit into an error.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Audit(format!(
                "{} of {} trials beat the solution (worst ΔJ = {:e}, tolerance {:e})",
                self.violations, self.trials, self.worst_delta, self.tolerance
            )))
        }
    }
}

fn horizontal_rho<T: Scalar>(grid: &Grid<T>, cut: &Cutoff<T>) -> Vec<T> {
    let r = grid.horizontal_dims();
    (0..grid.node_count())
        .map(|i| {
            let x = grid.node_coords(i);
            cut.at_gauge(gauge_unchecked(grid.shape(), &x[..r]))
        })
        .collect()
}

fn bump<T: Scalar>(grid: &Grid<T>, rng: &mut ChaCha8Rng, amplitude: f64) -> (Vec<T>, Vec<f64>) {
    let dim = grid.dim();
    let mut center = Vec::with_capacity(dim);
    let mut width = Vec::with_capacity(dim);
    for a in 0..dim {
        let half = -grid.origin()[a].as_f64();
        center.push(rng.gen_range(-half..=half));
        width.push(rng.gen_range(0.1..=0.5) * half);
    }
    let values = (0..grid.node_count())
        .map(|i| {
            if grid.is_fixed(i) {
                return T::zero();
            }
            let x = grid.node_coords(i);
            let mut phi = amplitude;
            for a in 0..dim {
                let z = (x[a].as_f64() - center[a]) / width[a];
                if z.abs() >= 1.0 {
                    return T::zero();
                }
                phi *= (std::f64::consts::FRAC_PI_2 * z).cos().powi(2);
            }
            T::of(phi)
        })
        .collect();
    let mut params = center;
    params.extend(width);
    params.push(amplitude);
    (values, params)
}

/// Checks `J(u) ≤ J(v) + tol` over identity, bump, blended, zero and far-field
/// cut trials, with `tol = 10 · grad_tol · energy scale`.
///
/// `u_inf_ext` is the limit solution already extended to `u`'s grid; without it
/// the blended trials are skipped. Each `ΔJ` is evaluated as a direct increment,
/// never as a difference of two energies.
pub fn minimality_audit<T: Scalar>(
    u: &ScalarField<T>,
    u_inf_ext: Option<&ScalarField<T>>,
    density: &EnergyDensity<T>,
    load: &Load<T>,
    plan: &AuditPlan,
) -> Result<MinimalityReport> {
    let grid = u.grid();
    if let Some(w) = u_inf_ext {
        if w.values().len() != u.values().len() {
            return Err(Error::DimensionMismatch {
                expected: u.values().len(),
                got: w.values().len(),
            });
        }
    }
    if let Some(a) = plan.alpha {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {a}")));
        }
    }
    if let Some((s, t)) = plan.cutoff {
        Cutoff::new(T::of(s), T::of(t))?;
    }
    let functional = Functional::new(grid, density, load)?;
    let uv = u.values();
    let energy = functional.energy(uv).as_f64();
    let vol = grid.cell_volume().as_f64();
    let l1: f64 = u.cell_means().iter().map(|m| m.as_f64().abs() * vol).sum();
    let energy_scale = energy.abs().max(load.max_abs().as_f64() * l1);
    let tolerance = 10.0 * plan.grad_tol * energy_scale.max(gradient_scale(grid, load));

    let mut outcomes = Vec::new();
    let mut run = |kind: TrialKind, w: &[T], parameters: Vec<f64>| {
        let delta = functional.probe(uv, w).delta(T::one()).as_f64();
        outcomes.push(TrialOutcome {
            kind,
            delta,
            parameters,
        });
    };

    run(TrialKind::Identity, &vec![T::zero(); uv.len()], Vec::new());
    let minus_u: Vec<T> = uv.iter().map(|v| -*v).collect();
    run(TrialKind::Zero, &minus_u, Vec::new());

    let ell = grid.ell().as_f64();
    let scale_u = u.max_abs().as_f64().max(1e-3);
    for k in 0..plan.perturbations {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(k as u64);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let amplitude = sign * scale_u * 10f64.powf(rng.gen_range(-4.0..=0.0));
        let (w, params) = bump(grid, &mut rng, amplitude);
        run(TrialKind::Bump, &w, params);
    }

    if let Some(uinf) = u_inf_ext {
        if grid.horizontal_dims() > 0 {
            for k in 0..plan.blended {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x5eed_b1e0);
                rng.set_stream(k as u64);
                let alpha = plan.alpha.unwrap_or_else(|| 1.0 - rng.gen::<f64>());
                let (s, t) = plan.cutoff.unwrap_or_else(|| {
                    let t = rng.gen_range(0.05..0.8) * ell;
                    (rng.gen_range(t + 0.05 * ell..=ell), t)
                });
                let cut = Cutoff::new(T::of(s), T::of(t))?;
                let rho = horizontal_rho(grid, &cut);
                // v₁ − u = αρ(ũ_∞ − u)
                let w: Vec<T> = (0..uv.len())
                    .map(|i| T::of(alpha) * rho[i] * (uinf.values()[i] - uv[i]))
                    .collect();
                run(TrialKind::Blended, &w, vec![alpha, s, t]);
            }
        }
    }

    if grid.horizontal_dims() > 0 {
        let mut cuts = Vec::new();
        let mut t = 1.0;
        while t + 1.0 <= ell {
            cuts.push((t + 1.0, t));
            t += 1.0;
        }
        if cuts.is_empty() {
            cuts.push((ell, 0.5 * ell));
        }
        for (s, t) in cuts {
            let rho = horizontal_rho(grid, &Cutoff::new(T::of(s), T::of(t))?);
            // (1 − ρ)u − u = −ρu
            let w: Vec<T> = uv.iter().zip(&rho).map(|(v, r)| -*r * *v).collect();
            run(TrialKind::FarFieldCut, &w, vec![s, t]);
        }
    }

    let violations = outcomes.iter().filter(|o| o.delta < -tolerance).count();
    let worst_delta = outcomes.iter().map(|o| o.delta).fold(f64::INFINITY, f64::min);
    Ok(MinimalityReport {
        energy,
        energy_scale,
        tolerance,
        trials: outcomes.len(),
        violations,
        worst_delta,
        outcomes,
    })
}
