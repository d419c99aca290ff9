//! Convex energy densities `F = F″ + G` and sampled audits of their structural hypotheses.

mod audit;

pub use audit::{
    audit_convexity_midpoint, audit_growth, audit_uniform_strict_convexity, estimate_beta,
    HypothesisReport, Witness,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A convex integrand evaluated on gradients.
///
/// `increment` must agree with `value(xi + dxi) - value(xi)`; implementations
/// override it when they can evaluate the difference without cancellation,
/// which the line search relies on near convergence.
pub trait Density<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn value(&self, xi: &[T]) -> T;

    fn gradient(&self, xi: &[T], out: &mut [T]);

    fn increment(&self, xi: &[T], dxi: &[T]) -> T {
        let moved: Vec<T> = xi.iter().zip(dxi).map(|(a, b)| *a + *b).collect();
        self.value(&moved) - self.value(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// `|ξ|^p / p`
    PDirichlet,
    /// `(|ξ′|^p + |ξ″|^p) / p`
    SeparableP,
    /// `|ξ|² / 2`
    Quadratic,
}

impl std::str::FromStr for DensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p-dirichlet" | "pdirichlet" => Ok(Self::PDirichlet),
            "separable-p" | "separable" => Ok(Self::SeparableP),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(Error::InvalidParameter(format!("unknown density kind `{other}`"))),
        }
    }
}

/// Built-in energy density together with its certified hypothesis constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensity<T> {
    pub kind: DensityKind,
    pub p: T,
    pub k: T,
    pub lambda: T,
    #[serde(rename = "Lambda")]
    pub big_lambda: T,
    pub beta: T,
    pub r: usize,
    pub n: usize,
}

fn sq_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, x| s + *x * *x)
}

/// `(a + d)^{q} − a^{q}` for `a ≥ 0`, `a + d ≥ 0`, without cancellation.
fn power_increment<T: Scalar>(a: T, d: T, q: T) -> T {
    if a <= T::zero() {
        return d.max(T::zero()).powf(q);
    }
    a.powf(q) * (q * (d / a).ln_1p()).exp_m1()
}

/// Inf and sup over `s = |ξ″|/|ξ′|` of `G / (|ξ′|^p + k|ξ″|^{p−k}|ξ′|^k)` for
/// the p-Dirichlet density with `k = 2`, by a dense logarithmic scan.
fn p_dirichlet_coupling_range(p: f64) -> (f64, f64) {
    let ratio = |s: f64| {
        let lead = ((1.0 + s * s).powf(p / 2.0) - s.powf(p)) / p;
        lead / (1.0 + 2.0 * s.powf(p - 2.0))
    };
    // limits at s → 0 and s → ∞
    let mut lo = (1.0 / p).min(0.25);
    let mut hi = (1.0 / p).max(0.25);
    for e in -4000..=4000 {
        let v = ratio(10f64.powf(e as f64 / 1000.0));
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

impl<T: Scalar> EnergyDensity<T> {
    fn check_dims(p: T, r: usize, n: usize) -> Result<()> {
        if !(p >= T::of(2.0)) {
            return Err(Error::InvalidParameter(format!(
                "densities require p >= 2, got {p}"
            )));
        }
        if !(r >= 1 && n > r) {
            return Err(Error::InvalidParameter(format!(
                "densities require n > r >= 1, got r = {r}, n = {n}"
            )));
        }
        Ok(())
    }

    /// `|ξ|^p / p`; `k = 2` for `p > 2` and `k = 0` for `p = 2`.
    pub fn p_dirichlet(p: T, r: usize, n: usize) -> Result<Self> {
        Self::check_dims(p, r, n)?;
        let pf = p.as_f64();
        let inv_p = T::one() / p;
        let (k, lambda, big_lambda, beta) = if pf == 2.0 {
            (T::zero(), inv_p, inv_p, T::of(0.5))
        } else if pf == 4.0 {
            (T::of(2.0), T::of(0.25), T::of(0.25), T::zero())
        } else {
            let (lo, hi) = p_dirichlet_coupling_range(pf);
            let lambda = (1.0 / pf).min(lo) * (1.0 - 1e-6);
            let big_lambda = (1.0 / pf).max(hi) * (1.0 + 1e-6);
            (T::of(2.0), T::of(lambda), T::of(big_lambda), T::zero())
        };
        Ok(Self {
            kind: DensityKind::PDirichlet,
            p,
            k,
            lambda,
            big_lambda,
            beta,
            r,
            n,
        })
    }

    /// `(|ξ′|^p + |ξ″|^p) / p` with `k = 0`.
    pub fn separable_p(p: T, r: usize, n: usize) -> Result<Self> {
        Self::check_dims(p, r, n)?;
        let inv_p = T::one() / p;
        // a^p + b^p ≥ 2^{1−p/2} (a² + b²)^{p/2}
        let lambda = T::of(2.0).powf(T::one() - p / T::of(2.0)) * inv_p;
        let beta = if p.as_f64() == 2.0 { T::of(0.5) } else { T::zero() };
        Ok(Self {
            kind: DensityKind::SeparableP,
            p,
            k: T::zero(),
            lambda,
            big_lambda: inv_p,
            beta,
            r,
            n,
        })
    }

    /// `|ξ|² / 2`.
    pub fn quadratic(r: usize, n: usize) -> Result<Self> {
        Self::check_dims(T::of(2.0), r, n)?;
        let half = T::of(0.5);
        Ok(Self {
            kind: DensityKind::Quadratic,
            p: T::of(2.0),
            k: T::zero(),
            lambda: half,
            big_lambda: half,
            beta: half,
            r,
            n,
        })
    }

    pub fn from_kind(kind: DensityKind, p: T, r: usize, n: usize) -> Result<Self> {
        match kind {
            DensityKind::PDirichlet => Self::p_dirichlet(p, r, n),
            DensityKind::SeparableP => Self::separable_p(p, r, n),
            DensityKind::Quadratic => Self::quadratic(r, n),
        }
    }

    /// Same density, audited against different growth constants.
    pub fn with_constants(mut self, lambda: T, big_lambda: T) -> Self {
        self.lambda = lambda;
        self.big_lambda = big_lambda;
        self
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    /// Whether the discrete energy is a quadratic form.
    pub fn is_quadratic(&self) -> bool {
        self.p.as_f64() == 2.0
    }

    /// `p′ = p / (p − 1)`.
    pub fn conjugate_exponent(&self) -> T {
        self.p / (self.p - T::one())
    }

    fn check_len(&self, got: usize, expected: usize) {
        assert_eq!(got, expected, "argument has {got} components, density expects {expected}");
    }

    pub fn eval_f(&self, xi: &[T]) -> T {
        self.check_len(xi.len(), self.n);
        let (h, v) = xi.split_at(self.r);
        let half_p = self.p / T::of(2.0);
        match self.kind {
            DensityKind::Quadratic => sq_norm(xi) / T::of(2.0),
            DensityKind::PDirichlet => sq_norm(xi).powf(half_p) / self.p,
            DensityKind::SeparableP => {
                (sq_norm(h).powf(half_p) + sq_norm(v).powf(half_p)) / self.p
            }
        }
    }

    pub fn grad_f(&self, xi: &[T], out: &mut [T]) {
        self.check_len(xi.len(), self.n);
        self.check_len(out.len(), self.n);
        let two = T::of(2.0);
        match self.kind {
            DensityKind::Quadratic => out.copy_from_slice(xi),
            DensityKind::PDirichlet => {
                let s = sq_norm(xi);
                let w = if s > T::zero() {
                    s.powf((self.p - two) / two)
                } else {
                    T::zero()
                };
                for (o, x) in out.iter_mut().zip(xi) {
                    *o = w * *x;
                }
            }
            DensityKind::SeparableP => {
                let (h, v) = xi.split_at(self.r);
                let (oh, ov) = out.split_at_mut(self.r);
                for (part, o) in [(h, oh), (v, ov)] {
                    let s = sq_norm(part);
                    let w = if s > T::zero() {
                        s.powf((self.p - two) / two)
                    } else {
                        T::zero()
                    };
                    for (oo, x) in o.iter_mut().zip(part) {
                        *oo = w * *x;
                    }
                }
            }
        }
    }

    /// `F″(ξ″) = F(0, ξ″)`.
    pub fn eval_fpp(&self, xi_v: &[T]) -> T {
        self.check_len(xi_v.len(), self.n - self.r);
        let s = sq_norm(xi_v);
        match self.kind {
            DensityKind::Quadratic => s / T::of(2.0),
            DensityKind::PDirichlet | DensityKind::SeparableP => {
                s.powf(self.p / T::of(2.0)) / self.p
            }
        }
    }

    pub fn grad_fpp(&self, xi_v: &[T], out: &mut [T]) {
        self.check_len(xi_v.len(), self.n - self.r);
        let two = T::of(2.0);
        let s = sq_norm(xi_v);
        let w = match self.kind {
            DensityKind::Quadratic => T::one(),
            _ if s > T::zero() => s.powf((self.p - two) / two),
            _ => T::zero(),
        };
        for (o, x) in out.iter_mut().zip(xi_v) {
            *o = w * *x;
        }
    }

    /// `G(ξ) = F(ξ) − F″(ξ″)`, evaluated without cancellation.
    pub fn eval_g(&self, xi: &[T]) -> T {
        self.check_len(xi.len(), self.n);
        let (h, v) = xi.split_at(self.r);
        let (a, b) = (sq_norm(h), sq_norm(v));
        match self.kind {
            DensityKind::Quadratic => a / T::of(2.0),
            DensityKind::PDirichlet => power_increment(b, a, self.p / T::of(2.0)) / self.p,
            DensityKind::SeparableP => a.powf(self.p / T::of(2.0)) / self.p,
        }
    }

    fn increment_f(&self, xi: &[T], dxi: &[T]) -> T {
        let two = T::of(2.0);
        let half_p = self.p / two;
        // |ξ + δ|² − |ξ|² = 2ξ·δ + |δ|², exact up to one rounding per term
        let shift = |a: &[T], d: &[T]| {
            a.iter()
                .zip(d)
                .fold(T::zero(), |s, (x, y)| s + (two * *x + *y) * *y)
        };
        match self.kind {
            DensityKind::Quadratic => shift(xi, dxi) / two,
            DensityKind::PDirichlet => power_increment(sq_norm(xi), shift(xi, dxi), half_p) / self.p,
            DensityKind::SeparableP => {
                let (h, v) = xi.split_at(self.r);
                let (dh, dv) = dxi.split_at(self.r);
                (power_increment(sq_norm(h), shift(h, dh), half_p)
                    + power_increment(sq_norm(v), shift(v, dv), half_p))
                    / self.p
            }
        }
    }

    fn increment_fpp(&self, xi_v: &[T], dxi_v: &[T]) -> T {
        let two = T::of(2.0);
        let shift = xi_v
            .iter()
            .zip(dxi_v)
            .fold(T::zero(), |s, (x, y)| s + (two * *x + *y) * *y);
        match self.kind {
            DensityKind::Quadratic => shift / two,
            _ => power_increment(sq_norm(xi_v), shift, self.p / two) / self.p,
        }
    }

    /// The reduced density `F″` on `R^{n−r}`.
    pub fn vertical(&self) -> VerticalPart<'_, T> {
        VerticalPart(self)
    }
}

impl<T: Scalar> Density<T> for EnergyDensity<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, xi: &[T]) -> T {
        self.eval_f(xi)
    }

    fn gradient(&self, xi: &[T], out: &mut [T]) {
        self.grad_f(xi, out)
    }

    fn increment(&self, xi: &[T], dxi: &[T]) -> T {
        self.increment_f(xi, dxi)
    }
}

/// `F″` viewed as a density on the cross-section `ω″`.
#[derive(Debug, Clone, Copy)]
pub struct VerticalPart<'a, T>(pub &'a EnergyDensity<T>);

impl<T: Scalar> Density<T> for VerticalPart<'_, T> {
    fn dim(&self) -> usize {
        self.0.n - self.0.r
    }

    fn value(&self, xi: &[T]) -> T {
        self.0.eval_fpp(xi)
    }

    fn gradient(&self, xi: &[T], out: &mut [T]) {
        self.0.grad_fpp(xi, out)
    }

    fn increment(&self, xi: &[T], dxi: &[T]) -> T {
        self.0.increment_fpp(xi, dxi)
    }
}
