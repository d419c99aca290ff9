//! Sampling audits of the coercivity, growth and convexity hypotheses.
//!
//! Each check is reduced to a normalized slack `(rhs − lhs) / scale`; a
//! negative slack is a violation. Slacks within `SNAP` of zero are reported as
//! exactly zero so that inequalities holding with equality audit clean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Density, EnergyDensity};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SNAP: f64 = 1e-12;
const MAX_WITNESSES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub check: String,
    pub xi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub margin: f64,
}

/// Outcome of one sampled hypothesis audit.
///
/// `worst_margin` is the smallest normalized slack seen; `violations == 0`
/// exactly when `worst_margin >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Check {
    name: &'static str,
    xi: Vec<f64>,
    zeta: Option<Vec<f64>>,
    theta: Option<f64>,
    margin: f64,
}

fn slack(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let m = (rhs - lhs) / scale;
    if m.abs() <= SNAP {
        0.0
    } else {
        m
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Log-uniform magnitude in `[1e−3, 1e3]` times a uniform direction.
fn sample_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let magnitude = 10f64.powf(rng.gen_range(-3.0..=3.0));
    loop {
        // Marsaglia polar pairs give standard normals, hence uniform directions
        let mut v: Vec<f64> = (0..dim)
            .map(|_| loop {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                let s = a * a + b * b;
                if s > 0.0 && s < 1.0 {
                    break a * (-2.0 * s.ln() / s).sqrt();
                }
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            v.iter_mut().for_each(|x| *x *= magnitude / norm);
            return v;
        }
    }
}

fn to_t<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|x| T::of(*x)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn collect_report(hypothesis: &str, samples: usize, checks: Vec<Check>) -> HypothesisReport {
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut bad: Vec<Check> = Vec::new();
    for c in checks {
        worst = worst.min(c.margin);
        if c.margin < 0.0 {
            violations += 1;
            bad.push(c);
        }
    }
    bad.sort_by(|a, b| a.margin.total_cmp(&b.margin));
    bad.truncate(MAX_WITNESSES);
    HypothesisReport {
        hypothesis: hypothesis.to_string(),
        samples,
        violations,
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
        witnesses: bad
            .into_iter()
            .map(|c| Witness {
                check: c.name.to_string(),
                xi: c.xi,
                zeta: c.zeta,
                theta: c.theta,
                margin: c.margin,
            })
            .collect(),
    }
}

/// Two-sided bounds `λ|ξ|^p ≤ F ≤ Λ(|ξ|^p + 1)` and
/// `λ(|ξ′|^p + k|ξ″|^{p−k}|ξ′|^k) ≤ G ≤ Λ(|ξ′|^p + k|ξ″|^{p−k}|ξ′|^k)`.
pub fn audit_growth<T: Scalar>(d: &EnergyDensity<T>, samples: usize, seed: u64) -> HypothesisReport {
    let p = d.p.as_f64();
    let k = d.k.as_f64();
    let lambda = d.lambda.as_f64();
    let big = d.big_lambda.as_f64();
    let checks: Vec<Check> = (0..samples)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = sample_rng(seed, i);
            let xi = sample_vector(&mut rng, d.n);
            let xt = to_t::<T>(&xi);
            let f = d.eval_f(&xt).as_f64();
            let g = d.eval_g(&xt).as_f64();
            let np = norm(&xi).powf(p);
            let a = norm(&xi[..d.r]);
            let b = norm(&xi[d.r..]);
            let coupling = a.powf(p) + if k > 0.0 { k * b.powf(p - k) * a.powf(k) } else { 0.0 };
            let scale = 1.0 + f.abs();
            let mk = |name, lhs, rhs| Check {
                name,
                xi: xi.clone(),
                zeta: None,
                theta: None,
                margin: slack(lhs, rhs, scale),
            };
            vec![
                mk("growth1-lower", lambda * np, f),
                mk("growth1-upper", f, big * (np + 1.0)),
                mk("growth3-lower", lambda * coupling, g),
                mk("growth3-upper", g, big * coupling),
            ]
        })
        .collect();
    collect_report("growth", samples, checks)
}

/// Coefficient in front of `θμ(θ^{p−1} + μ^{p−1})|ξ″ − ζ″|^p`: `kβ` when the
/// coupling exponent is positive, `β` in the `k = 0` variant.
fn strict_convexity_coefficient<T: Scalar>(d: &EnergyDensity<T>) -> f64 {
    let k = d.k.as_f64();
    let beta = d.beta.as_f64();
    if k > 0.0 {
        k * beta
    } else {
        beta
    }
}

struct ConvexTriple {
    xi: Vec<f64>,
    zeta: Vec<f64>,
    theta: f64,
    /// `θF″(ξ″) + μF″(ζ″) − F″(θξ″ + μζ″)`
    excess: f64,
    /// `θμ(θ^{p−1} + μ^{p−1})|ξ″ − ζ″|^p`
    modulus: f64,
    scale: f64,
}

fn convexity_triple<T: Scalar>(d: &EnergyDensity<T>, rng: &mut ChaCha8Rng) -> ConvexTriple {
    let dim = d.n - d.r;
    let p = d.p.as_f64();
    let xi = sample_vector(rng, dim);
    let zeta = sample_vector(rng, dim);
    let theta: f64 = rng.gen_range(0.0..=1.0);
    let mu = 1.0 - theta;
    let mid: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| theta * a + mu * b).collect();
    let fx = d.eval_fpp(&to_t::<T>(&xi)).as_f64();
    let fz = d.eval_fpp(&to_t::<T>(&zeta)).as_f64();
    let fm = d.eval_fpp(&to_t::<T>(&mid)).as_f64();
    let diff: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| a - b).collect();
    let modulus = theta * mu * (theta.powf(p - 1.0) + mu.powf(p - 1.0)) * norm(&diff).powf(p);
    ConvexTriple {
        xi,
        zeta,
        theta,
        excess: theta * fx + mu * fz - fm,
        modulus,
        scale: 1.0 + theta * fx + mu * fz,
    }
}

/// Quantitative convexity of `F″`:
/// `F″(θξ″ + μζ″) ≤ θF″(ξ″) + μF″(ζ″) − c·θμ(θ^{p−1} + μ^{p−1})|ξ″ − ζ″|^p`.
pub fn audit_uniform_strict_convexity<T: Scalar>(
    d: &EnergyDensity<T>,
    samples: usize,
    seed: u64,
) -> Result<HypothesisReport> {
    if !(d.beta > T::zero()) {
        return Err(Error::InvalidParameter(
            "uniform strict convexity audit needs beta > 0".into(),
        ));
    }
    let coeff = strict_convexity_coefficient(d);
    let checks: Vec<Check> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let c = convexity_triple(d, &mut rng);
            Check {
                name: "uniform-strict-convexity",
                margin: slack(coeff * c.modulus, c.excess, c.scale),
                xi: c.xi,
                zeta: Some(c.zeta),
                theta: Some(c.theta),
            }
        })
        .collect();
    let id = if d.k > T::zero() {
        "uniform-strict-convexity"
    } else {
        "uniform-strict-convexity-k0"
    };
    Ok(collect_report(id, samples, checks))
}

/// Largest `β` compatible with every sampled triple (empirical, not certified).
pub fn estimate_beta<T: Scalar>(d: &EnergyDensity<T>, samples: usize, seed: u64) -> f64 {
    let best = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let c = convexity_triple(d, &mut rng);
            if c.modulus > 1e-300 * c.scale {
                c.excess / c.modulus
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| f64::INFINITY, f64::min);
    let k = d.k.as_f64();
    let best = best.max(0.0);
    if k > 0.0 {
        best / k
    } else {
        best
    }
}

/// `F((ξ + ζ)/2) ≤ (F(ξ) + F(ζ))/2` at random pairs.
pub fn audit_convexity_midpoint<T: Scalar, D: Density<T>>(
    d: &D,
    samples: usize,
    seed: u64,
) -> HypothesisReport {
    let dim = d.dim();
    let checks: Vec<Check> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let xi = sample_vector(&mut rng, dim);
            let zeta = sample_vector(&mut rng, dim);
            let mid: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| 0.5 * (a + b)).collect();
            let fx = d.value(&to_t::<T>(&xi)).as_f64();
            let fz = d.value(&to_t::<T>(&zeta)).as_f64();
            let fm = d.value(&to_t::<T>(&mid)).as_f64();
            let rhs = 0.5 * (fx + fz);
            Check {
                name: "midpoint-convexity",
                margin: slack(fm, rhs, 1.0 + fx.abs().max(fz.abs())),
                xi,
                zeta: Some(zeta),
                theta: Some(0.5),
            }
        })
        .collect();
    collect_report("convexity", samples, checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave probe `−|ξ|²`.
    struct Concave(usize);

    impl Density<f64> for Concave {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, xi: &[f64]) -> f64 {
            -xi.iter().map(|x| x * x).sum::<f64>()
        }
        fn gradient(&self, xi: &[f64], out: &mut [f64]) {
            for (o, x) in out.iter_mut().zip(xi) {
                *o = -2.0 * x;
            }
        }
    }

    fn builtins() -> Vec<EnergyDensity<f64>> {
        vec![
            EnergyDensity::quadratic(1, 2).unwrap(),
            EnergyDensity::p_dirichlet(3.0, 1, 3).unwrap(),
            EnergyDensity::p_dirichlet(4.0, 1, 2).unwrap(),
            EnergyDensity::p_dirichlet(6.0, 2, 3).unwrap(),
            EnergyDensity::separable_p(2.0, 1, 2).unwrap(),
            EnergyDensity::separable_p(4.0, 1, 3).unwrap(),
        ]
    }

    #[test]
    fn builtin_growth_constants_hold() {
        for d in builtins() {
            let rep = audit_growth(&d, 5000, 1);
            assert_eq!(rep.violations, 0, "{:?} p={}: {:?}", d.kind, d.p, rep.witnesses.first());
            assert!(rep.worst_margin >= 0.0);
        }
    }

    #[test]
    fn p4_coupling_bounds_are_tight() {
        let d = EnergyDensity::p_dirichlet(4.0, 1, 2).unwrap();
        let rep = audit_growth(&d, 2000, 9);
        assert_eq!(rep.violations, 0);
        // lambda slightly too large breaks the lower coupling bound
        let rep = audit_growth(&d.with_constants(0.2501, 0.25), 2000, 9);
        assert!(rep.violations > 0);
        assert!(rep.witnesses.iter().all(|w| w.check == "growth3-lower" || w.check == "growth1-lower"));
    }

    #[test]
    fn wrong_lambda_is_reported() {
        let d = EnergyDensity::quadratic(1, 2).unwrap().with_constants(0.6, 0.6);
        let rep = audit_growth(&d, 1000, 2);
        assert!(rep.violations > 0);
        assert!(rep.worst_margin < 0.0);
        assert!(!rep.witnesses.is_empty() && rep.witnesses.len() <= MAX_WITNESSES);
    }

    #[test]
    fn quadratic_strict_convexity() {
        let q = EnergyDensity::quadratic(1, 2).unwrap();
        let rep = audit_uniform_strict_convexity(&q, 5000, 4).unwrap();
        assert_eq!(rep.violations, 0, "{:?}", rep.witnesses.first());
        assert_eq!(rep.hypothesis, "uniform-strict-convexity-k0");
        let rep = audit_uniform_strict_convexity(&q.with_beta(0.6), 5000, 4).unwrap();
        assert!(rep.violations > 0);
        assert!(audit_uniform_strict_convexity(&q.with_beta(0.0), 10, 4).is_err());
        let beta = estimate_beta(&q, 2000, 4);
        assert!((beta - 0.5).abs() < 1e-6, "{beta}");
    }

    #[test]
    fn degenerate_combinations_have_zero_margin() {
        let q = EnergyDensity::quadratic(1, 3).unwrap();
        for theta in [0.0, 1.0] {
            let mu = 1.0 - theta;
            let xi = [0.3, -2.0];
            let zeta = [1.5, 0.25];
            let mid: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| theta * a + mu * b).collect();
            let excess = theta * q.eval_fpp(&xi) + mu * q.eval_fpp(&zeta) - q.eval_fpp(&mid);
            assert_eq!(slack(0.0, excess, 1.0), 0.0);
        }
    }

    #[test]
    fn midpoint_convexity() {
        for d in builtins() {
            assert_eq!(audit_convexity_midpoint(&d, 2000, 3).violations, 0);
            assert_eq!(audit_convexity_midpoint(&d.vertical(), 2000, 3).violations, 0);
        }
        let rep = audit_convexity_midpoint(&Concave(2), 200, 3);
        assert!(rep.violations > 0);
    }

    #[test]
    fn audits_are_deterministic() {
        let d = EnergyDensity::p_dirichlet(4.0, 1, 2).unwrap().with_constants(0.3, 0.3);
        let a = serde_json::to_string(&audit_growth(&d, 3000, 42)).unwrap();
        let b = serde_json::to_string(&audit_growth(&d, 3000, 42)).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&audit_growth(&d, 3000, 43)).unwrap();
        assert_ne!(a, c);
    }
}
