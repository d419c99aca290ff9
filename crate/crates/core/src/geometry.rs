//! Cross-sections, gauge functions, elongated domains and their structured grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the number of grid nodes.
pub const DEFAULT_NODE_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// `ω′ = (−1, 1)^r`, gauge `max_i |x_i|`.
    UnitBox,
    /// `ω′` the open unit ball, gauge `|x|`.
    UnitBall,
}

/// The bounded star-shaped set `ω′ ⊂ R^r` that gets stretched by `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub shape: Shape,
    pub r: usize,
    /// Euclidean Lipschitz constant of the gauge.
    pub lipschitz_k: f64,
    /// `r1·|x| ≤ gauge(x) ≤ r2·|x|`.
    pub r1: f64,
    pub r2: f64,
}

impl CrossSection {
    pub fn new(shape: Shape, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter(
                "the elongated dimension count r must be at least 1".into(),
            ));
        }
        let (r1, r2) = match shape {
            Shape::UnitBox => (1.0 / (r as f64).sqrt(), 1.0),
            Shape::UnitBall => (1.0, 1.0),
        };
        // max_i |x_i| is 1-Lipschitz for the max metric, hence for the Euclidean one too.
        Ok(Self {
            shape,
            r,
            lipschitz_k: 1.0,
            r1,
            r2,
        })
    }

    pub fn unit_box(r: usize) -> Result<Self> {
        Self::new(Shape::UnitBox, r)
    }

    pub fn unit_ball(r: usize) -> Result<Self> {
        Self::new(Shape::UnitBall, r)
    }

    /// Minkowski functional `inf{t > 0 : x′/t ∈ ω′}`.
    pub fn gauge<T: Scalar>(&self, x: &[T]) -> Result<T> {
        if x.len() != self.r {
            return Err(Error::DimensionMismatch {
                expected: self.r,
                got: x.len(),
            });
        }
        Ok(gauge_unchecked(self.shape, x))
    }
}

pub(crate) fn gauge_unchecked<T: Scalar>(shape: Shape, x: &[T]) -> T {
    match shape {
        Shape::UnitBox => x.iter().fold(T::zero(), |m, v| m.max(v.abs())),
        Shape::UnitBall => x.iter().map(|v| *v * *v).sum::<T>().sqrt(),
    }
}

/// Lipschitz cutoff equal to 1 on `ω′_t`, 0 outside `ω′_s`, affine in the gauge between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff<T> {
    pub s: T,
    pub t: T,
}

impl<T: Scalar> Cutoff<T> {
    pub fn new(s: T, t: T) -> Result<Self> {
        if !(t > T::zero() && t < s) {
            return Err(Error::InvalidParameter(format!(
                "cutoff requires 0 < t < s, got t = {t}, s = {s}"
            )));
        }
        Ok(Self { s, t })
    }

    /// `(1/(s−t))·min{(s − g)₊, s − t}` for gauge value `g`.
    pub fn at_gauge(&self, g: T) -> T {
        let width = self.s - self.t;
        (self.s - g).max(T::zero()).min(width) / width
    }
}

/// `ρ_{s,t}(x′)`.
pub fn cutoff_rho<T: Scalar>(s: T, t: T, cs: &CrossSection, x: &[T]) -> Result<T> {
    let cut = Cutoff::new(s, t)?;
    Ok(cut.at_gauge(cs.gauge(x)?))
}

/// `Ω_ℓ = ℓω′ × ω″` with `ω″` a product of symmetric intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec<T> {
    pub cross_section: CrossSection,
    pub ell: T,
    pub vertical_halfwidths: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> DomainSpec<T> {
    pub fn new(cross_section: CrossSection, ell: T, vertical_halfwidths: Vec<T>) -> Result<Self> {
        let n = cross_section.r + vertical_halfwidths.len();
        if vertical_halfwidths.is_empty() {
            return Err(Error::InvalidParameter(
                "n > r: at least one vertical direction is required".into(),
            ));
        }
        if !(ell > T::zero()) {
            return Err(Error::InvalidParameter(format!("ell must be positive, got {ell}")));
        }
        if let Some(b) = vertical_halfwidths.iter().find(|b| !(**b > T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "vertical half-widths must be positive, got {b}"
            )));
        }
        Ok(Self {
            cross_section,
            ell,
            vertical_halfwidths,
            n,
        })
    }

    pub fn r(&self) -> usize {
        self.cross_section.r
    }

    /// Same cross-sections, different elongation.
    pub fn with_ell(&self, ell: T) -> Result<Self> {
        Self::new(self.cross_section, ell, self.vertical_halfwidths.clone())
    }

    /// Whether `x = (x′, x″)` lies in the open set `Ω_ℓ`.
    pub fn contains(&self, x: &[T]) -> bool {
        let r = self.r();
        x.len() == self.n
            && gauge_unchecked(self.cross_section.shape, &x[..r]) < self.ell
            && x[r..]
                .iter()
                .zip(&self.vertical_halfwidths)
                .all(|(v, b)| v.abs() < *b)
    }
}

/// Uniform axis-aligned grid over the bounding box of a domain.
///
/// Axis `a` has `counts[a]` nodes at `origin[a] + i·spacing[a]`; node indices
/// are row-major with axis 0 fastest. The first `horizontal` axes carry `x′`.
/// A grid over `ω″` alone has `horizontal == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    shape: Shape,
    horizontal: usize,
    ell: T,
    counts: Vec<usize>,
    spacing: Vec<T>,
    origin: Vec<T>,
    strides: Vec<usize>,
    fixed: Vec<bool>,
    cell_base: Vec<usize>,
    corner_offsets: Vec<usize>,
    cell_gauge: Vec<T>,
}

fn cells_per_axis<T: Scalar>(extent: T, target_h: T) -> usize {
    let ratio = (extent / target_h).as_f64();
    (ratio - 1e-9).ceil().max(1.0) as usize
}

impl<T: Scalar> Grid<T> {
    /// Grid of `Ω_ℓ` with the default node budget.
    pub fn build(spec: &DomainSpec<T>, target_h: T) -> Result<Self> {
        Self::build_with_budget(spec, target_h, DEFAULT_NODE_BUDGET)
    }

    pub fn build_with_budget(spec: &DomainSpec<T>, target_h: T, budget: usize) -> Result<Self> {
        let r = spec.r();
        let two = T::of(2.0);
        let min_half = spec
            .vertical_halfwidths
            .iter()
            .fold(spec.ell, |m, b| m.min(*b));
        if !(target_h > T::zero() && target_h <= min_half) {
            return Err(Error::InvalidParameter(format!(
                "target_h = {target_h} must be positive and at most every half-width (min {min_half})"
            )));
        }
        let mut halfwidths = vec![spec.ell; r];
        halfwidths.extend_from_slice(&spec.vertical_halfwidths);
        let cells: Vec<usize> = halfwidths
            .iter()
            .map(|b| cells_per_axis(two * *b, target_h))
            .collect();
        Self::assemble(spec.cross_section.shape, r, spec.ell, &halfwidths, &cells, budget)
    }

    /// Grid of the cross-section `ω″` alone, with the vertical spacing that
    /// [`Grid::build`] would produce for any `ℓ`.
    pub fn vertical(halfwidths: &[T], target_h: T) -> Result<Self> {
        if halfwidths.is_empty() {
            return Err(Error::InvalidParameter("ω″ needs at least one axis".into()));
        }
        let min_half = halfwidths.iter().fold(T::infinity(), |m, b| m.min(*b));
        if !(target_h > T::zero() && target_h <= min_half) {
            return Err(Error::InvalidParameter(format!(
                "target_h = {target_h} must be positive and at most every half-width (min {min_half})"
            )));
        }
        let two = T::of(2.0);
        let cells: Vec<usize> = halfwidths
            .iter()
            .map(|b| cells_per_axis(two * *b, target_h))
            .collect();
        Self::assemble(Shape::UnitBox, 0, T::one(), halfwidths, &cells, DEFAULT_NODE_BUDGET)
    }

    /// Grid of the cross-section of `spec`, vertically identical to `Grid::build(spec, h)`.
    pub fn vertical_of(spec: &DomainSpec<T>, target_h: T) -> Result<Self> {
        let min_half = spec
            .vertical_halfwidths
            .iter()
            .fold(spec.ell, |m, b| m.min(*b));
        if !(target_h <= min_half) {
            return Err(Error::InvalidParameter(format!(
                "target_h = {target_h} must be at most every half-width (min {min_half})"
            )));
        }
        Self::vertical(&spec.vertical_halfwidths, target_h)
    }

    fn assemble(
        shape: Shape,
        horizontal: usize,
        ell: T,
        halfwidths: &[T],
        cells: &[usize],
        budget: usize,
    ) -> Result<Self> {
        let dim = halfwidths.len();
        let counts: Vec<usize> = cells.iter().map(|m| m + 1).collect();
        let nodes = counts
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(*c))
            .unwrap_or(usize::MAX);
        if nodes > budget {
            return Err(Error::NodeBudget { nodes, budget });
        }
        let two = T::of(2.0);
        let spacing: Vec<T> = halfwidths
            .iter()
            .zip(cells)
            .map(|(b, m)| two * *b / T::of_usize(*m))
            .collect();
        let origin: Vec<T> = halfwidths.iter().map(|b| -*b).collect();
        let mut strides = vec![1usize; dim];
        for a in 1..dim {
            strides[a] = strides[a - 1] * counts[a - 1];
        }

        let mut grid = Self {
            shape,
            horizontal,
            ell,
            counts,
            spacing,
            origin,
            strides,
            fixed: Vec::new(),
            cell_base: Vec::new(),
            corner_offsets: Vec::new(),
            cell_gauge: Vec::new(),
        };

        let mut multi = vec![0usize; dim];
        let mut fixed = Vec::with_capacity(nodes);
        let mut xh = vec![T::zero(); horizontal];
        let ell_tol = ell * (T::one() - T::of(1e-12));
        for node in 0..nodes {
            grid.unravel_into(node, &mut multi);
            let on_box = multi
                .iter()
                .zip(&grid.counts)
                .any(|(i, c)| *i == 0 || *i == c - 1);
            let masked = horizontal > 0 && shape == Shape::UnitBall && {
                for (a, x) in xh.iter_mut().enumerate() {
                    *x = grid.coord(a, multi[a]);
                }
                gauge_unchecked(shape, &xh) >= ell_tol
            };
            fixed.push(on_box || masked);
        }
        grid.fixed = fixed;

        grid.corner_offsets = (0..1usize << dim)
            .map(|bits| {
                (0..dim)
                    .filter(|a| bits >> a & 1 == 1)
                    .map(|a| grid.strides[a])
                    .sum()
            })
            .collect();

        let cell_counts: Vec<usize> = cells.to_vec();
        let n_cells: usize = cell_counts.iter().product();
        let mut cmulti = vec![0usize; dim];
        let half = T::of(0.5);
        for c in 0..n_cells {
            let mut rest = c;
            for a in 0..dim {
                cmulti[a] = rest % cell_counts[a];
                rest /= cell_counts[a];
            }
            let base: usize = cmulti.iter().zip(&grid.strides).map(|(i, s)| i * s).sum();
            grid.cell_base.push(base);
            for (a, x) in xh.iter_mut().enumerate() {
                *x = grid.origin[a] + (T::of_usize(cmulti[a]) + half) * grid.spacing[a];
            }
            grid.cell_gauge.push(gauge_unchecked(shape, &xh));
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Number of horizontal (elongated) axes; 0 for a grid of `ω″`.
    pub fn horizontal_dims(&self) -> usize {
        self.horizontal
    }

    pub fn vertical_dims(&self) -> usize {
        self.dim() - self.horizontal
    }

    pub fn ell(&self) -> T {
        self.ell
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn node_count(&self) -> usize {
        self.fixed.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cell_base.len()
    }

    pub fn coord(&self, axis: usize, index: usize) -> T {
        self.origin[axis] + T::of_usize(index) * self.spacing[axis]
    }

    pub fn unravel_into(&self, node: usize, multi: &mut [usize]) {
        let mut rest = node;
        for (m, c) in multi.iter_mut().zip(&self.counts) {
            *m = rest % c;
            rest /= c;
        }
    }

    pub fn node_multi_index(&self, node: usize) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        self.unravel_into(node, &mut m);
        m
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<T> {
        let mut m = vec![0; self.dim()];
        self.unravel_into(node, &mut m);
        m.iter().enumerate().map(|(a, i)| self.coord(a, *i)).collect()
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node]
    }

    pub fn fixed_mask(&self) -> &[bool] {
        &self.fixed
    }

    pub fn interior_count(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// Volume of every cell.
    pub fn cell_volume(&self) -> T {
        self.spacing.iter().fold(T::one(), |v, h| v * *h)
    }

    /// Node index of the lower corner of `cell`.
    pub fn cell_base(&self, cell: usize) -> usize {
        self.cell_base[cell]
    }

    /// Offsets from the lower corner to the `2^dim` corners; bit `a` of the
    /// corner number selects the upper node along axis `a`.
    pub fn corner_offsets(&self) -> &[usize] {
        &self.corner_offsets
    }

    pub fn cell_centroid(&self, cell: usize) -> Vec<T> {
        let half = T::of(0.5);
        self.node_coords(self.cell_base[cell])
            .into_iter()
            .zip(&self.spacing)
            .map(|(x, h)| x + half * *h)
            .collect()
    }

    /// Gauge of the horizontal part of the cell centroid.
    pub fn cell_gauge(&self, cell: usize) -> T {
        self.cell_gauge[cell]
    }

    pub fn all_cells(&self) -> CellSet {
        CellSet {
            cells: (0..self.cell_count()).collect(),
        }
    }

    /// `Ω_t`: cells whose centroid gauge is below `t`.
    pub fn omega_t(&self, t: T) -> CellSet {
        CellSet {
            cells: (0..self.cell_count())
                .filter(|c| self.cell_gauge[*c] < t)
                .collect(),
        }
    }

    /// `Ω_s ∖ Ω_t` under the same centroid rule.
    pub fn slab(&self, s: T, t: T) -> CellSet {
        CellSet {
            cells: (0..self.cell_count())
                .filter(|c| {
                    let g = self.cell_gauge[*c];
                    g >= t && g < s
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    OmegaT,
    SlabST,
}

/// Sorted set of cell indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellSet {
    pub cells: Vec<usize>,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().copied()
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut cells: Vec<usize> = self.cells.iter().chain(&other.cells).copied().collect();
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

/// Cells of `Ω_t` (`kind = OmegaT`) or of the slab `Ω_s ∖ Ω_t`.
pub fn region_cells<T: Scalar>(
    grid: &Grid<T>,
    kind: RegionKind,
    t: T,
    s: Option<T>,
) -> Result<CellSet> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("region requires t > 0, got {t}")));
    }
    match kind {
        RegionKind::OmegaT => Ok(grid.omega_t(t)),
        RegionKind::SlabST => {
            let s = s.ok_or_else(|| Error::InvalidParameter("slab requires s".into()))?;
            if !(t < s) {
                return Err(Error::InvalidParameter(format!(
                    "slab requires t < s, got t = {t}, s = {s}"
                )));
            }
            Ok(grid.slab(s, t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn strip(ell: f64) -> DomainSpec<f64> {
        DomainSpec::new(CrossSection::unit_box(1).unwrap(), ell, vec![1.0]).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let bx = CrossSection::unit_box(2).unwrap();
        let ball = CrossSection::unit_ball(2).unwrap();
        assert_eq!(bx.gauge(&[0.3, -0.8]).unwrap(), 0.8);
        assert_abs_diff_eq!(ball.gauge(&[0.6, 0.8]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bx.gauge(&[0.6, -1.6]).unwrap(), 1.6, epsilon = 1e-15);
        assert_eq!(ball.gauge(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            bx.gauge(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn cutoff_examples() {
        let cs = CrossSection::unit_box(1).unwrap();
        let (s, t) = (3.0, 1.0);
        assert_eq!(cutoff_rho(s, t, &cs, &[t / 2.0]).unwrap(), 1.0);
        assert_eq!(cutoff_rho(s, t, &cs, &[-(s + 1.0)]).unwrap(), 0.0);
        assert_abs_diff_eq!(cutoff_rho(s, t, &cs, &[(s + t) / 2.0]).unwrap(), 0.5);
        assert!(cutoff_rho(1.0, 1.0, &cs, &[0.0]).is_err());
        assert!(cutoff_rho(1.0, 2.0, &cs, &[0.0]).is_err());
    }

    #[test]
    fn grid_counts_and_spacing() {
        let g = Grid::build(&strip(2.0), 0.5).unwrap();
        assert_eq!(g.counts(), &[9, 5]);
        assert_eq!(g.spacing(), &[0.5, 0.5]);
        assert_eq!(g.cell_count(), 32);
        assert_eq!(g.cell_volume(), 0.25);
        // spacing rounds down to divide the extent
        let g = Grid::build(&strip(1.0), 0.3).unwrap();
        assert_eq!(g.counts(), &[8, 8]);
        assert!(g.spacing()[0] <= 0.3);
    }

    #[test]
    fn unit_strip_corners_are_fixed() {
        let g = Grid::build(&strip(1.0), 1.0).unwrap();
        assert_eq!(g.counts(), &[3, 3]);
        for m in [[0, 0], [2, 0], [0, 2], [2, 2]] {
            assert!(g.is_fixed(g.node_index(&m)));
        }
        assert!(!g.is_fixed(g.node_index(&[1, 1])));
        assert_eq!(g.interior_count(), 1);
    }

    #[test]
    fn ball_staircase_mask() {
        let spec = DomainSpec::new(CrossSection::unit_ball(2).unwrap(), 1.0, vec![1.0]).unwrap();
        let g = Grid::build(&spec, 0.5).unwrap();
        for node in 0..g.node_count() {
            let x: Vec<f64> = g.node_coords(node);
            let rad = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if rad >= 1.0 - 1e-12 {
                assert!(g.is_fixed(node), "node {x:?} should be fixed");
            }
        }
        assert!(!g.is_fixed(g.node_index(&[2, 2, 2])));
        assert!(g.is_fixed(g.node_index(&[1, 3, 2])) == (0.5f64.hypot(0.5) >= 1.0));
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid::build(&strip(1.0), 1.5).is_err());
        assert!(matches!(
            Grid::build_with_budget(&strip(4.0), 0.01, 1000),
            Err(Error::NodeBudget { .. })
        ));
        assert!(DomainSpec::new(CrossSection::unit_box(1).unwrap(), 0.0, vec![1.0]).is_err());
        assert!(DomainSpec::<f64>::new(CrossSection::unit_box(1).unwrap(), 1.0, vec![]).is_err());
    }

    #[test]
    fn vertical_grid_is_shared_across_ell() {
        let v = Grid::vertical(&[1.0], 1.0 / 16.0).unwrap();
        for ell in [2.0, 5.0, 12.0] {
            let g = Grid::build(&strip(ell), 1.0 / 16.0).unwrap();
            assert_eq!(g.counts()[1], v.counts()[0]);
            assert_eq!(g.spacing()[1], v.spacing()[0]);
            for j in 0..v.counts()[0] {
                assert_eq!(g.coord(1, j), v.coord(0, j));
            }
        }
    }

    #[test]
    fn regions() {
        let g = Grid::build(&strip(4.0), 1.0).unwrap();
        assert_eq!(g.counts(), &[9, 3]);
        assert_eq!(g.omega_t(4.0).len(), g.cell_count());
        let inner = region_cells(&g, RegionKind::OmegaT, 2.0, None).unwrap();
        // 4 of 8 columns, 2 vertical cells each
        assert_eq!(inner.len(), 8);
        assert!(inner
            .iter()
            .all(|c| g.cell_centroid(c)[0].abs() < 2.0));
        assert!(region_cells(&g, RegionKind::SlabST, 2.0, Some(1.0)).is_err());
        assert!(region_cells(&g, RegionKind::OmegaT, 0.0, None).is_err());
        let slab = region_cells(&g, RegionKind::SlabST, 2.0, Some(3.0)).unwrap();
        assert!(inner.is_disjoint(&slab));
        assert_eq!(inner.union(&slab), g.omega_t(3.0));
        assert!(g.omega_t(0.25).is_empty());
    }

    #[test]
    fn grid_nesting() {
        let h = 1.0 / 8.0;
        let small = Grid::build(&strip(2.0), h).unwrap();
        let big = Grid::build(&strip(3.0), h).unwrap();
        for node in (0..small.node_count()).filter(|n| !small.is_fixed(*n)) {
            let x = small.node_coords(node);
            let m: Vec<usize> = (0..2)
                .map(|a| ((x[a] - big.origin()[a]) / big.spacing()[a]).round() as usize)
                .collect();
            assert_eq!(big.node_coords(big.node_index(&m)), x);
        }
    }

    proptest! {
        #[test]
        fn gauge_homogeneous(x in prop::collection::vec(-5.0f64..5.0, 3), lam in 0.0f64..10.0, ball in any::<bool>()) {
            let cs = if ball { CrossSection::unit_ball(3).unwrap() } else { CrossSection::unit_box(3).unwrap() };
            let scaled: Vec<f64> = x.iter().map(|v| lam * v).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let lhs = cs.gauge(&scaled).unwrap();
            let rhs = lam * cs.gauge(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lam * norm));
            let g = cs.gauge(&x).unwrap();
            prop_assert!(cs.r1 * norm <= g + 1e-12 && g <= cs.r2 * norm + 1e-12);
        }

        #[test]
        fn gauge_lipschitz(x in prop::collection::vec(-5.0f64..5.0, 2), y in prop::collection::vec(-5.0f64..5.0, 2), ball in any::<bool>()) {
            let cs = if ball { CrossSection::unit_ball(2).unwrap() } else { CrossSection::unit_box(2).unwrap() };
            let d = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let diff = (cs.gauge(&x).unwrap() - cs.gauge(&y).unwrap()).abs();
            prop_assert!(diff <= cs.lipschitz_k * d + 1e-12);
        }

        #[test]
        fn cutoff_range_and_monotone(g1 in 0.0f64..10.0, g2 in 0.0f64..10.0, t in 0.1f64..4.0, w in 0.1f64..4.0) {
            let cut = Cutoff::new(t + w, t).unwrap();
            let (a, b) = (cut.at_gauge(g1), cut.at_gauge(g2));
            prop_assert!((0.0..=1.0).contains(&a));
            if g1 <= g2 { prop_assert!(a >= b); }
        }
    }
}
