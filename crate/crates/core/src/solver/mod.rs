//! Minimization of the discrete energies on `Ω_ℓ` and on the cross-section `ω″`.

mod audit;
mod oracle;

pub use audit::{minimality_audit, AuditPlan, MinimalityReport, TrialKind, TrialOutcome};
pub use oracle::{oracle_1d, Oracle1d};

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::density::{Density, EnergyDensity};
use crate::error::{Error, Result};
use crate::field::{transfer, Functional, Load, ScalarField};
use crate::geometry::Grid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Conjugate gradients on the quadratic energy (p = 2 only).
    LinearCg,
    /// Polak–Ribière+ with Armijo backtracking.
    NonlinearCg,
    /// Steepest descent with the same line search.
    GradientDescent,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-cg" => Ok(Self::LinearCg),
            "nonlinear-cg" => Ok(Self::NonlinearCg),
            "gradient-descent" => Ok(Self::GradientDescent),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: Method,
    /// Threshold on the gradient max-norm, relative to `‖f″‖_∞ · cell volume`.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Armijo sufficient-decrease factor.
    pub armijo: f64,
    /// Backtracking contraction factor.
    pub backtrack: f64,
    /// First trial step, relative to `(1 + ‖v‖_∞) / ‖d‖_∞`.
    pub initial_step: f64,
    /// Keep the energy after every accepted step in the report.
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::NonlinearCg,
            grad_tol: 1e-9,
            max_iters: 500_000,
            armijo: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            record_history: false,
        }
    }
}

impl SolveOptions {
    /// Linear CG at `1e−10` for quadratic energies, nonlinear CG at `1e−9` otherwise.
    pub fn for_density<T: Scalar>(d: &EnergyDensity<T>) -> Self {
        if d.is_quadratic() {
            Self {
                method: Method::LinearCg,
                grad_tol: 1e-10,
                ..Self::default()
            }
        } else {
            Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be positive".into()));
        }
        if !unit(self.armijo) || !unit(self.backtrack) {
            return Err(Error::InvalidParameter(
                "line-search factors must lie in (0, 1)".into(),
            ));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter("initial_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub grad_max_norm: f64,
    /// Absolute stopping threshold actually used.
    pub grad_threshold: f64,
    pub energy: f64,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub energy_history: Vec<f64>,
}

/// `‖f″‖_∞ · cell volume`, or the cell volume alone when the load vanishes.
pub fn gradient_scale<T: Scalar>(grid: &Grid<T>, load: &Load<T>) -> f64 {
    let vol = grid.cell_volume().as_f64();
    let f = load.max_abs().as_f64();
    if f > 0.0 {
        f * vol
    } else {
        vol
    }
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

fn initial_values<T: Scalar>(grid: &Arc<Grid<T>>, warm_start: Option<&ScalarField<T>>) -> Result<Vec<T>> {
    match warm_start {
        None => Ok(vec![T::zero(); grid.node_count()]),
        Some(w) if Arc::ptr_eq(w.grid(), grid) || **w.grid() == **grid => {
            Ok(ScalarField::from_values(grid.clone(), w.values().to_vec())?.into_values())
        }
        Some(w) => Ok(transfer(w, grid)?.into_values()),
    }
}

/// Minimizes the discrete `J_ℓ` over fields vanishing at Dirichlet nodes.
pub fn minimize<T: Scalar>(
    grid: &Arc<Grid<T>>,
    density: &EnergyDensity<T>,
    load: &Load<T>,
    opts: &SolveOptions,
    warm_start: Option<&ScalarField<T>>,
) -> Result<(ScalarField<T>, SolveReport)> {
    minimize_with(grid, density, density.is_quadratic(), load, opts, warm_start)
}

/// Minimizes the discrete `J_∞` on a grid of `ω″`, with `F″` as the density.
pub fn solve_limit<T: Scalar>(
    vertical_grid: &Arc<Grid<T>>,
    density: &EnergyDensity<T>,
    load: &Load<T>,
    opts: &SolveOptions,
) -> Result<(ScalarField<T>, SolveReport)> {
    if vertical_grid.horizontal_dims() != 0 {
        return Err(Error::InvalidParameter(
            "the limit problem lives on a grid of ω″".into(),
        ));
    }
    minimize_with(
        vertical_grid,
        &density.vertical(),
        density.is_quadratic(),
        load,
        opts,
        None,
    )
}

/// Generic driver behind [`minimize`] and [`solve_limit`]; `quadratic` states
/// that `J` is a quadratic form, which linear CG requires.
pub fn minimize_with<T: Scalar, D: Density<T>>(
    grid: &Arc<Grid<T>>,
    density: &D,
    quadratic: bool,
    load: &Load<T>,
    opts: &SolveOptions,
    warm_start: Option<&ScalarField<T>>,
) -> Result<(ScalarField<T>, SolveReport)> {
    opts.validate()?;
    if opts.method == Method::LinearCg && !quadratic {
        return Err(Error::InvalidParameter(
            "linear-cg requires a quadratic energy (p = 2)".into(),
        ));
    }
    let start = Instant::now();
    let functional = Functional::new(grid, density, load)?;
    let threshold = opts.grad_tol * gradient_scale(grid, load);
    let x = initial_values(grid, warm_start)?;
    let (x, mut report) = match opts.method {
        Method::LinearCg => linear_cg(&functional, x, threshold, opts),
        Method::NonlinearCg => descent(&functional, x, threshold, opts, true)?,
        Method::GradientDescent => descent(&functional, x, threshold, opts, false)?,
    };
    report.energy = functional.energy(&x).as_f64();
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((ScalarField::from_values(grid.clone(), x)?, report))
}

fn linear_cg<T: Scalar, D: Density<T>>(
    functional: &Functional<'_, T, D>,
    mut x: Vec<T>,
    threshold: f64,
    opts: &SolveOptions,
) -> (Vec<T>, SolveReport) {
    let n = x.len();
    let zero = vec![T::zero(); n];
    // g(v) = Kv − b, so g(0) = −b and Kp = g(p) − g(0)
    let mut g0 = vec![T::zero(); n];
    functional.gradient(&zero, &mut g0);
    let apply = |p: &[T], out: &mut [T]| {
        functional.gradient(p, out);
        for (o, b) in out.iter_mut().zip(&g0) {
            *o -= *b;
        }
    };
    let energy_of = |x: &[T], g: &[T]| {
        // J = ½ xᵀ(Kx) − bᵀx = ½ xᵀ(g + g(0))
        let s = x
            .iter()
            .zip(g.iter().zip(&g0))
            .fold(T::zero(), |s, (xi, (gi, bi))| s + *xi * (*gi + *bi));
        (s / T::of(2.0)).as_f64()
    };

    let mut g = vec![T::zero(); n];
    functional.gradient(&x, &mut g);
    let mut d: Vec<T> = g.iter().map(|v| -*v).collect();
    let mut kd = vec![T::zero(); n];
    let mut gg = dot(&g, &g);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(energy_of(&x, &g));
    }
    let mut iterations = 0;
    let mut converged = max_abs(&g).as_f64() <= threshold;
    while !converged && iterations < opts.max_iters {
        apply(&d, &mut kd);
        let curvature = dot(&d, &kd);
        if !(curvature > T::zero()) {
            break;
        }
        let alpha = gg / curvature;
        for i in 0..n {
            x[i] += alpha * d[i];
            g[i] += alpha * kd[i];
        }
        iterations += 1;
        if iterations % 50 == 0 {
            functional.gradient(&x, &mut g);
        }
        if opts.record_history {
            history.push(energy_of(&x, &g));
        }
        let gg_new = dot(&g, &g);
        converged = max_abs(&g).as_f64() <= threshold;
        if converged {
            // confirm against the true residual
            functional.gradient(&x, &mut g);
            converged = max_abs(&g).as_f64() <= threshold;
        }
        let beta = gg_new / gg;
        gg = dot(&g, &g);
        for i in 0..n {
            d[i] = -g[i] + beta * d[i];
        }
    }
    functional.gradient(&x, &mut g);
    let grad_max_norm = max_abs(&g).as_f64();
    (
        x,
        SolveReport {
            method: Method::LinearCg,
            converged: grad_max_norm <= threshold,
            iterations,
            grad_max_norm,
            grad_threshold: threshold,
            energy: 0.0,
            wall_time_ms: 0.0,
            energy_history: history,
        },
    )
}

/// Armijo backtracking with quadratic interpolation, plus one extrapolation
/// attempt when the first trial is accepted. Returns the step and `ΔJ`.
fn line_search<T: Scalar, D: Density<T>>(
    functional: &Functional<'_, T, D>,
    x: &[T],
    d: &[T],
    slope: T,
    guess: T,
    opts: &SolveOptions,
    iteration: usize,
) -> Result<(T, T)> {
    let probe = functional.probe(x, d);
    let c1 = T::of(opts.armijo);
    let armijo = |alpha: T, delta: T| delta <= c1 * alpha * slope;
    // minimizer of the parabola through φ(0) = 0 with slope φ′(0) and φ(α)
    let parabola = |alpha: T, delta: T| {
        let curv = delta - slope * alpha;
        if curv > T::zero() {
            Some(-slope * alpha * alpha / (T::of(2.0) * curv))
        } else {
            None
        }
    };
    let min_step = T::of(1e-16);
    let mut alpha = guess;
    let mut delta = probe.delta(alpha);
    if armijo(alpha, delta) {
        let trial = parabola(alpha, delta).map_or(T::of(4.0) * alpha, |a| a.min(T::of(10.0) * alpha));
        if trial > alpha * T::of(1.01) {
            let dt = probe.delta(trial);
            if dt < delta && armijo(trial, dt) {
                return Ok((trial, dt));
            }
        }
        return Ok((alpha, delta));
    }
    loop {
        let shrink = T::of(opts.backtrack);
        let next = match parabola(alpha, delta) {
            Some(a) => a.max(T::of(0.1) * alpha).min(shrink * alpha),
            None => shrink * alpha,
        };
        alpha = next;
        if alpha < min_step {
            return Err(Error::LineSearch {
                iteration,
                min_step: 1e-16,
                slope: slope.as_f64(),
            });
        }
        delta = probe.delta(alpha);
        if armijo(alpha, delta) {
            return Ok((alpha, delta));
        }
    }
}

fn descent<T: Scalar, D: Density<T>>(
    functional: &Functional<'_, T, D>,
    mut x: Vec<T>,
    threshold: f64,
    opts: &SolveOptions,
    conjugate: bool,
) -> Result<(Vec<T>, SolveReport)> {
    let n = x.len();
    let mut g = vec![T::zero(); n];
    let mut g_new = vec![T::zero(); n];
    functional.gradient(&x, &mut g);
    let mut d: Vec<T> = g.iter().map(|v| -*v).collect();
    let mut energy = functional.energy(&x);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(energy.as_f64());
    }
    let mut iterations = 0;
    let mut prev: Option<(T, T)> = None;
    let mut gmax = max_abs(&g).as_f64();
    while gmax > threshold && iterations < opts.max_iters {
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -*gi);
            slope = -dot(&g, &g);
        }
        let guess = match prev {
            // α_k ≈ α_{k−1} φ′_{k−1}(0) / φ′_k(0)
            Some((alpha, prev_slope)) => alpha * prev_slope / slope,
            None => {
                let dmax = max_abs(&d);
                T::of(opts.initial_step) * (T::one() + max_abs(&x)) / dmax
            }
        };
        let (alpha, delta) = line_search(functional, &x, &d, slope, guess, opts, iterations)?;
        prev = Some((alpha, slope));
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += alpha * *di;
        }
        energy += delta;
        if opts.record_history {
            history.push(energy.as_f64());
        }
        iterations += 1;

        functional.gradient(&x, &mut g_new);
        let beta = if conjugate {
            let num = g_new
                .iter()
                .zip(&g)
                .fold(T::zero(), |s, (a, b)| s + *a * (*a - *b));
            (num / dot(&g, &g)).max(T::zero())
        } else {
            T::zero()
        };
        for i in 0..n {
            d[i] = -g_new[i] + beta * d[i];
        }
        std::mem::swap(&mut g, &mut g_new);
        gmax = max_abs(&g).as_f64();
    }
    Ok((
        x,
        SolveReport {
            method: if conjugate {
                Method::NonlinearCg
            } else {
                Method::GradientDescent
            },
            converged: gmax <= threshold,
            iterations,
            grad_max_norm: gmax,
            grad_threshold: threshold,
            energy: energy.as_f64(),
            wall_time_ms: 0.0,
            energy_history: history,
        },
    ))
}
