use rayon::prelude::*;

use super::{cell_gradient_into, cell_mean, Load, ScalarField};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::scalar::Scalar;

/// Cells per reduction chunk; partial sums are combined in chunk order so the
/// result does not depend on the thread count.
const CHUNK: usize = 1024;

const MAX_DIM: usize = 8;

/// The discrete functional
/// `J(v) = Σ_cells vol·[F(∇v(centroid)) − f″(centroid″)·mean(corner values)]`.
pub struct Functional<'a, T, D> {
    grid: &'a Grid<T>,
    density: &'a D,
    cell_load: Vec<T>,
    cell_strides: Vec<usize>,
}

impl<'a, T: Scalar, D: Density<T>> Functional<'a, T, D> {
    pub fn new(grid: &'a Grid<T>, density: &'a D, load: &Load<T>) -> Result<Self> {
        if density.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: density.dim(),
            });
        }
        if grid.dim() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "at most {MAX_DIM} dimensions are supported, got {}",
                grid.dim()
            )));
        }
        let cell_load = load.cell_values(grid)?;
        let mut cell_strides = vec![1usize; grid.dim()];
        for a in 1..grid.dim() {
            cell_strides[a] = cell_strides[a - 1] * (grid.counts()[a - 1] - 1);
        }
        Ok(Self {
            grid,
            density,
            cell_load,
            cell_strides,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.grid
    }

    fn chunked_sum(&self, per_cell: impl Fn(usize, &mut [T]) -> T + Sync) -> T {
        let dim = self.grid.dim();
        let n = self.grid.cell_count();
        let partials: Vec<T> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut scratch = vec![T::zero(); 2 * dim];
                let end = ((chunk + 1) * CHUNK).min(n);
                (chunk * CHUNK..end).fold(T::zero(), |s, c| s + per_cell(c, &mut scratch))
            })
            .collect();
        partials.into_iter().fold(T::zero(), |s, x| s + x) * self.grid.cell_volume()
    }

    pub fn energy(&self, values: &[T]) -> T {
        let dim = self.grid.dim();
        self.chunked_sum(|c, scratch| {
            let g = &mut scratch[..dim];
            cell_gradient_into(self.grid, values, c, g);
            self.density.value(g) - self.cell_load[c] * cell_mean(self.grid, values, c)
        })
    }

    /// `∂J/∂v_i` at every node; zero at Dirichlet nodes.
    pub fn gradient(&self, values: &[T], out: &mut [T]) {
        let grid = self.grid;
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let corners = grid.corner_offsets().len();
        let half_corners = T::of_usize(corners / 2);
        let scale: Vec<T> = grid
            .spacing()
            .iter()
            .map(|h| vol / (half_corners * *h))
            .collect();

        let mut flux = vec![T::zero(); grid.cell_count() * dim];
        flux.par_chunks_mut(dim * CHUNK)
            .enumerate()
            .for_each(|(chunk, block)| {
                let mut g = vec![T::zero(); dim];
                for (j, f) in block.chunks_mut(dim).enumerate() {
                    let c = chunk * CHUNK + j;
                    cell_gradient_into(grid, values, c, &mut g);
                    self.density.gradient(&g, f);
                    for (fa, s) in f.iter_mut().zip(&scale) {
                        *fa *= *s;
                    }
                }
            });
        let load_weight = vol / T::of_usize(corners);

        let counts = grid.counts();
        out.par_iter_mut().enumerate().for_each(|(node, o)| {
            if grid.is_fixed(node) {
                *o = T::zero();
                return;
            }
            let mut multi = [0usize; MAX_DIM];
            let multi = &mut multi[..dim];
            grid.unravel_into(node, multi);
            let mut acc = T::zero();
            'corners: for k in 0..corners {
                let mut cell = 0;
                for a in 0..dim {
                    let upper = k >> a & 1 == 1;
                    let lower_index = if upper {
                        if multi[a] == 0 {
                            continue 'corners;
                        }
                        multi[a] - 1
                    } else {
                        if multi[a] + 1 >= counts[a] {
                            continue 'corners;
                        }
                        multi[a]
                    };
                    cell += lower_index * self.cell_strides[a];
                }
                let f = &flux[cell * dim..(cell + 1) * dim];
                for (a, fa) in f.iter().enumerate() {
                    if k >> a & 1 == 1 {
                        acc += *fa;
                    } else {
                        acc -= *fa;
                    }
                }
                acc -= load_weight * self.cell_load[cell];
            }
            *o = acc;
        });
    }

    /// Precomputes what is needed to evaluate `J(v + αd) − J(v)` for many `α`.
    pub fn probe(&self, values: &[T], direction: &[T]) -> LineProbe<'_, 'a, T, D> {
        let grid = self.grid;
        let dim = grid.dim();
        let n = grid.cell_count();
        let mut gv = vec![T::zero(); n * dim];
        let mut gd = vec![T::zero(); n * dim];
        gv.par_chunks_mut(dim)
            .zip(gd.par_chunks_mut(dim))
            .enumerate()
            .for_each(|(c, (a, b))| {
                cell_gradient_into(grid, values, c, a);
                cell_gradient_into(grid, direction, c, b);
            });
        let load_md: Vec<T> = (0..n)
            .into_par_iter()
            .map(|c| self.cell_load[c] * cell_mean(grid, direction, c))
            .collect();
        LineProbe {
            functional: self,
            gv,
            gd,
            load_md,
        }
    }
}

pub struct LineProbe<'f, 'a, T, D> {
    functional: &'f Functional<'a, T, D>,
    gv: Vec<T>,
    gd: Vec<T>,
    load_md: Vec<T>,
}

impl<T: Scalar, D: Density<T>> LineProbe<'_, '_, T, D> {
    /// `J(v + αd) − J(v)`, evaluated cell by cell without cancellation against `J(v)`.
    pub fn delta(&self, alpha: T) -> T {
        let f = self.functional;
        let dim = f.grid.dim();
        f.chunked_sum(|c, scratch| {
            let step = &mut scratch[..dim];
            for (s, d) in step.iter_mut().zip(&self.gd[c * dim..(c + 1) * dim]) {
                *s = alpha * *d;
            }
            f.density.increment(&self.gv[c * dim..(c + 1) * dim], step) - alpha * self.load_md[c]
        })
    }
}

/// Discrete `J_ℓ(v)`.
pub fn assemble_energy<T: Scalar, D: Density<T>>(
    v: &ScalarField<T>,
    density: &D,
    load: &Load<T>,
) -> Result<T> {
    Ok(Functional::new(v.grid(), density, load)?.energy(v.values()))
}

/// Exact gradient of [`assemble_energy`] with respect to the nodal values.
pub fn assemble_energy_gradient<T: Scalar, D: Density<T>>(
    v: &ScalarField<T>,
    density: &D,
    load: &Load<T>,
) -> Result<Vec<T>> {
    let functional = Functional::new(v.grid(), density, load)?;
    let mut out = vec![T::zero(); v.values().len()];
    functional.gradient(v.values(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::EnergyDensity;
    use crate::geometry::{CrossSection, DomainSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn grid(ell: f64, h: f64, vertical: Vec<f64>, r: usize) -> Arc<Grid<f64>> {
        let spec = DomainSpec::new(CrossSection::unit_box(r).unwrap(), ell, vertical).unwrap();
        Arc::new(Grid::build(&spec, h).unwrap())
    }

    fn densities(r: usize, n: usize) -> Vec<EnergyDensity<f64>> {
        vec![
            EnergyDensity::quadratic(r, n).unwrap(),
            EnergyDensity::p_dirichlet(3.0, r, n).unwrap(),
            EnergyDensity::p_dirichlet(4.0, r, n).unwrap(),
            EnergyDensity::separable_p(3.0, r, n).unwrap(),
        ]
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let g = grid(2.0, 0.5, vec![1.0], 1);
        for d in densities(1, 2) {
            let v = ScalarField::zeros(g.clone());
            assert_eq!(assemble_energy(&v, &d, &Load::constant(3.0)).unwrap(), 0.0);
        }
        let q = EnergyDensity::quadratic(1, 2).unwrap();
        let grad = assemble_energy_gradient(&ScalarField::zeros(g), &q, &Load::constant(0.0)).unwrap();
        assert!(grad.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn unit_volume_linear_field() {
        // J(x₁) = |∇v|²/2 · vol on a unit-volume domain, evaluated without
        // the Dirichlet projection
        let g = grid(0.5, 0.5, vec![0.5], 1);
        let values: Vec<f64> = (0..g.node_count()).map(|i| g.node_coords(i)[0]).collect();
        let q = EnergyDensity::quadratic(1, 2).unwrap();
        let f = Functional::new(&g, &q, &Load::constant(0.0)).unwrap();
        assert_abs_diff_eq!(f.energy(&values), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (g, r, n) in [
            (grid(2.0, 0.5, vec![1.0], 1), 1, 2),
            (grid(1.0, 0.5, vec![1.0, 0.5], 1), 1, 3),
            (grid(1.0, 0.5, vec![1.0], 2), 2, 3),
        ] {
            for d in densities(r, n) {
                let values: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = ScalarField::from_values(g.clone(), values).unwrap();
                let load = Load::constant(1.7);
                let func = Functional::new(&g, &d, &load).unwrap();
                let mut grad = vec![0.0; g.node_count()];
                func.gradient(v.values(), &mut grad);
                let step = 1e-6;
                for node in 0..g.node_count() {
                    if g.is_fixed(node) {
                        assert_eq!(grad[node], 0.0);
                        continue;
                    }
                    let mut up = v.values().to_vec();
                    let mut dn = v.values().to_vec();
                    up[node] += step;
                    dn[node] -= step;
                    let fd = (func.energy(&up) - func.energy(&dn)) / (2.0 * step);
                    assert!(
                        (fd - grad[node]).abs() <= 1e-6 * grad[node].abs().max(1e-2),
                        "{:?}: fd {fd} vs {}",
                        d.kind,
                        grad[node]
                    );
                }
            }
        }
    }

    #[test]
    fn probe_delta_matches_energy_difference() {
        let g = grid(2.0, 0.25, vec![1.0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in densities(1, 2) {
            let v: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dir: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = ScalarField::from_values(g.clone(), v).unwrap();
            let dir = ScalarField::from_values(g.clone(), dir).unwrap();
            let load = Load::constant(2.0);
            let func = Functional::new(&g, &d, &load).unwrap();
            let probe = func.probe(v.values(), dir.values());
            for alpha in [0.0, 1e-3, 0.1, 1.0] {
                let moved = v.add_scaled(alpha, &dir);
                let expected = func.energy(moved.values()) - func.energy(v.values());
                assert!((probe.delta(alpha) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn discrete_energy_is_convex_along_segments() {
        let g = grid(1.5, 0.25, vec![1.0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in densities(1, 2) {
            let load = Load::constant(2.0);
            let func = Functional::new(&g, &d, &load).unwrap();
            for _ in 0..100 {
                let a: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let b: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                let (ja, jb, jm) = (func.energy(&a), func.energy(&b), func.energy(&mid));
                assert!(jm <= 0.5 * (ja + jb) + 1e-12 * (1.0 + ja.abs() + jb.abs()));
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = grid(1.0, 0.5, vec![1.0], 1);
        let d = EnergyDensity::quadratic(1, 3).unwrap();
        assert!(Functional::new(&g, &d, &Load::constant(1.0)).is_err());
    }
}
