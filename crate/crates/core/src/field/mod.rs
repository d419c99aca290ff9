//! Nodal fields on grids, the discrete functionals, and `L^p` measurements over regions.

mod assembly;
pub mod io;

pub use assembly::{assemble_energy, assemble_energy_gradient, Functional, LineProbe};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellSet, Grid};
use crate::scalar::Scalar;

/// Nodal values of a function on a grid, zero at every Dirichlet node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.node_count()];
        Self { grid, values }
    }

    /// Samples `f` at interior nodes.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                if grid.is_fixed(i) {
                    T::zero()
                } else {
                    f(&grid.node_coords(i))
                }
            })
            .collect();
        Self { grid, values }
    }

    /// Wraps nodal values; Dirichlet entries are overwritten with zero.
    pub fn from_values(grid: Arc<Grid<T>>, mut values: Vec<T>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        for (v, fixed) in values.iter_mut().zip(grid.fixed_mask()) {
            if *fixed {
                *v = T::zero();
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `self + alpha·other` on the same grid.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a + alpha * *b)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Gradient at the centroid of `cell` of the multilinear interpolant.
    pub fn cell_gradient(&self, cell: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.dim()];
        cell_gradient_into(&self.grid, &self.values, cell, &mut out);
        out
    }

    /// Value at the centroid of `cell` (mean of its corners).
    pub fn cell_mean(&self, cell: usize) -> T {
        cell_mean(&self.grid, &self.values, cell)
    }

    /// Cell gradients flattened as `cells × dim`.
    pub fn cell_gradients(&self) -> Vec<T> {
        let dim = self.grid.dim();
        let mut out = vec![T::zero(); self.grid.cell_count() * dim];
        for (c, g) in out.chunks_mut(dim).enumerate() {
            cell_gradient_into(&self.grid, &self.values, c, g);
        }
        out
    }

    pub fn cell_means(&self) -> Vec<T> {
        (0..self.grid.cell_count())
            .map(|c| cell_mean(&self.grid, &self.values, c))
            .collect()
    }

    /// Per-cell Euclidean norm of the selected gradient components.
    pub fn gradient_norms(&self, part: GradientPart) -> Vec<T> {
        let dim = self.grid.dim();
        let range = part.range(self.grid.horizontal_dims(), dim);
        self.cell_gradients()
            .chunks(dim)
            .map(|g| g[range.clone()].iter().map(|x| *x * *x).sum::<T>().sqrt())
            .collect()
    }
}

pub(crate) fn cell_gradient_into<T: Scalar>(grid: &Grid<T>, values: &[T], cell: usize, out: &mut [T]) {
    let base = grid.cell_base(cell);
    let offsets = grid.corner_offsets();
    let dim = grid.dim();
    out.iter_mut().for_each(|o| *o = T::zero());
    for (k, off) in offsets.iter().enumerate() {
        let v = values[base + off];
        for (a, o) in out.iter_mut().enumerate() {
            if k >> a & 1 == 1 {
                *o += v;
            } else {
                *o -= v;
            }
        }
    }
    let half_corners = T::of_usize(offsets.len() / 2);
    for a in 0..dim {
        out[a] /= half_corners * grid.spacing()[a];
    }
}

pub(crate) fn cell_mean<T: Scalar>(grid: &Grid<T>, values: &[T], cell: usize) -> T {
    let base = grid.cell_base(cell);
    let offsets = grid.corner_offsets();
    offsets.iter().map(|off| values[base + off]).sum::<T>() / T::of_usize(offsets.len())
}

/// Which components of `∇ = (∇′, ∇″)` to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientPart {
    Full,
    Horizontal,
    Vertical,
}

impl GradientPart {
    fn range(self, horizontal: usize, dim: usize) -> std::ops::Range<usize> {
        match self {
            GradientPart::Full => 0..dim,
            GradientPart::Horizontal => 0..horizontal,
            GradientPart::Vertical => horizontal..dim,
        }
    }
}

/// Force density depending on `x″` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Load<T> {
    Constant { value: T },
    /// Values at the nodes of the `ω″` lattice (axis 0 fastest).
    Sampled { counts: Vec<usize>, values: Vec<T> },
}

impl<T: Scalar> Load<T> {
    pub fn constant(value: T) -> Self {
        Load::Constant { value }
    }

    /// Samples `f(x″)` at every node of a grid over `ω″`.
    pub fn sampled(vertical_grid: &Grid<T>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        if vertical_grid.horizontal_dims() != 0 {
            return Err(Error::InvalidParameter(
                "sampled loads live on a grid of ω″".into(),
            ));
        }
        let values = (0..vertical_grid.node_count())
            .map(|i| f(&vertical_grid.node_coords(i)))
            .collect();
        Ok(Load::Sampled {
            counts: vertical_grid.counts().to_vec(),
            values,
        })
    }

    pub fn max_abs(&self) -> T {
        match self {
            Load::Constant { value } => value.abs(),
            Load::Sampled { values, .. } => values.iter().fold(T::zero(), |m, v| m.max(v.abs())),
        }
    }

    /// `f″` at every cell centroid of `grid`.
    pub fn cell_values(&self, grid: &Grid<T>) -> Result<Vec<T>> {
        match self {
            Load::Constant { value } => Ok(vec![*value; grid.cell_count()]),
            Load::Sampled { counts, values } => {
                let hz = grid.horizontal_dims();
                if counts.as_slice() != &grid.counts()[hz..] {
                    return Err(Error::VerticalMismatch(format!(
                        "load sampled on {:?} nodes, grid has {:?}",
                        counts,
                        &grid.counts()[hz..]
                    )));
                }
                let vdim = counts.len();
                let mut strides = vec![1usize; vdim];
                for a in 1..vdim {
                    strides[a] = strides[a - 1] * counts[a - 1];
                }
                let corners = 1usize << vdim;
                let mut multi = vec![0usize; grid.dim()];
                Ok((0..grid.cell_count())
                    .map(|c| {
                        grid.unravel_into(grid.cell_base(c), &mut multi);
                        let base: usize = multi[hz..].iter().zip(&strides).map(|(i, s)| i * s).sum();
                        let sum: T = (0..corners)
                            .map(|k| {
                                let off: usize = (0..vdim)
                                    .filter(|a| k >> a & 1 == 1)
                                    .map(|a| strides[a])
                                    .sum();
                                values[base + off]
                            })
                            .sum();
                        sum / T::of_usize(corners)
                    })
                    .collect())
            }
        }
    }
}

/// `Σ_{cells ∈ region} |value(cell)|^p · vol(cell)`: the p-th power of the norm.
pub fn lp_norm_p<T: Scalar>(grid: &Grid<T>, values: &[T], region: &CellSet, p: T) -> T {
    let vol = grid.cell_volume();
    region.iter().map(|c| values[c].abs().powf(p)).sum::<T>() * vol
}

/// Same as [`lp_norm_p`] for per-cell vectors stored as `cells × width`.
pub fn lp_norm_p_vec<T: Scalar>(
    grid: &Grid<T>,
    vectors: &[T],
    width: usize,
    region: &CellSet,
    p: T,
) -> T {
    let vol = grid.cell_volume();
    region
        .iter()
        .map(|c| {
            let v = &vectors[c * width..(c + 1) * width];
            v.iter().map(|x| *x * *x).sum::<T>().sqrt().powf(p)
        })
        .sum::<T>()
        * vol
}

/// The `x′`-independent extension `(x′, x″) ↦ w(x″)` of a field on `ω″`.
pub fn extend_vertical<T: Scalar>(w: &ScalarField<T>, grid: &Arc<Grid<T>>) -> Result<ScalarField<T>> {
    check_vertical_match(w.grid(), grid)?;
    let hz = grid.horizontal_dims();
    let wgrid = w.grid();
    let mut multi = vec![0usize; grid.dim()];
    let values = (0..grid.node_count())
        .map(|i| {
            if grid.is_fixed(i) {
                return T::zero();
            }
            grid.unravel_into(i, &mut multi);
            w.values()[wgrid.node_index(&multi[hz..])]
        })
        .collect();
    Ok(ScalarField {
        grid: grid.clone(),
        values,
    })
}

fn check_vertical_match<T: Scalar>(vertical: &Grid<T>, grid: &Grid<T>) -> Result<()> {
    if vertical.horizontal_dims() != 0 {
        return Err(Error::VerticalMismatch("source is not a grid of ω″".into()));
    }
    let hz = grid.horizontal_dims();
    if vertical.counts() != &grid.counts()[hz..] {
        return Err(Error::VerticalMismatch(format!(
            "node counts {:?} vs {:?}",
            vertical.counts(),
            &grid.counts()[hz..]
        )));
    }
    for a in 0..vertical.dim() {
        let (h1, h2) = (vertical.spacing()[a], grid.spacing()[hz + a]);
        let (o1, o2) = (vertical.origin()[a], grid.origin()[hz + a]);
        let tol = T::of(1e-12) * (T::one() + o1.abs());
        if (h1 - h2).abs() > tol || (o1 - o2).abs() > tol {
            return Err(Error::VerticalMismatch(format!(
                "axis {a}: spacing {h1} vs {h2}, origin {o1} vs {o2}"
            )));
        }
    }
    Ok(())
}

/// `‖v‖_{L^p(Ω_ℓ)} / ‖∇″v‖_{L^p(Ω_ℓ)}`, with `0/0 = 0`.
pub fn poincare_ratio<T: Scalar>(v: &ScalarField<T>, p: T) -> T {
    let grid = v.grid();
    let all = grid.all_cells();
    let num = lp_norm_p(grid, &v.cell_means(), &all, p);
    let den = lp_norm_p(grid, &v.gradient_norms(GradientPart::Vertical), &all, p);
    if num == T::zero() {
        return T::zero();
    }
    (num / den).powf(T::one() / p)
}

/// Multilinear interpolation of `src` at the nodes of `dst`, zero outside the
/// bounding box of `src` and at Dirichlet nodes of `dst`.
pub fn transfer<T: Scalar>(src: &ScalarField<T>, dst: &Arc<Grid<T>>) -> Result<ScalarField<T>> {
    let sg = src.grid();
    if sg.dim() != dst.dim() {
        return Err(Error::DimensionMismatch {
            expected: sg.dim(),
            got: dst.dim(),
        });
    }
    let dim = sg.dim();
    let eps = T::of(1e-10);
    let values = (0..dst.node_count())
        .map(|i| {
            if dst.is_fixed(i) {
                return T::zero();
            }
            let x = dst.node_coords(i);
            let mut lower = vec![0usize; dim];
            let mut frac = vec![T::zero(); dim];
            for a in 0..dim {
                let s = (x[a] - sg.origin()[a]) / sg.spacing()[a];
                let last = T::of_usize(sg.counts()[a] - 1);
                if s < -eps || s > last + eps {
                    return T::zero();
                }
                let s = s.max(T::zero()).min(last);
                let mut j = s.floor().to_usize().unwrap_or(0);
                if j + 1 >= sg.counts()[a] {
                    j = sg.counts()[a].saturating_sub(2);
                }
                lower[a] = j;
                frac[a] = s - T::of_usize(j);
            }
            let base = sg.node_index(&lower);
            sg.corner_offsets()
                .iter()
                .enumerate()
                .map(|(k, off)| {
                    let w = (0..dim).fold(T::one(), |w, a| {
                        if k >> a & 1 == 1 {
                            w * frac[a]
                        } else {
                            w * (T::one() - frac[a])
                        }
                    });
                    w * src.values()[base + off]
                })
                .sum()
        })
        .collect();
    ScalarField::from_values(dst.clone(), values)
}
