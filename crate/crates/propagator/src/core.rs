//! Physical configuration, uniform grids, and discretized complex fields.
//!
//! Everything downstream (kernels, lattice sums, evolution) works on the types
//! defined here. Conventions:
//!
//! - dimensions run 1 through 3; a [`RealVector`] is a stack-allocated point or
//!   displacement of that dimension;
//! - grids are uniform per axis with a shared spacing, flattened row-major with the
//!   **last axis fastest**;
//! - integrals over grids use the trapezoid rule, so per-point quadrature weight is
//!   the product of per-axis end-point halving times the cell volume.

use std::fmt;
use std::io::{self, Write};
use std::ops::Index;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::format_g9;

pub const MAX_DIM: usize = 3;

/// Mass, reduced Planck constant, and spatial dimension for a run.
///
/// Immutable after construction; `new` rejects non-finite or non-positive mass and
/// hbar and dimensions outside 1..=3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    mass: f64,
    hbar: f64,
    dim: usize,
}

impl PhysicsConfig {
    pub fn new(mass: f64, hbar: f64, dim: usize) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive and finite, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive and finite, got {hbar}")));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!("dim must be 1, 2, or 3, got {dim}")));
        }
        Ok(PhysicsConfig { mass, hbar, dim })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Default for PhysicsConfig {
    /// m = 1, hbar = 1, one dimension.
    fn default() -> Self {
        PhysicsConfig { mass: 1.0, hbar: 1.0, dim: 1 }
    }
}

/// Point or displacement in 1 to 3 dimensions.
#[derive(Debug, Clone, Copy)]
pub struct RealVector {
    c: [f64; MAX_DIM],
    dim: usize,
}

impl RealVector {
    pub fn new(components: &[f64]) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "vector must have 1 to {MAX_DIM} components, got {}",
                components.len()
            )));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("vector components must be finite, got {components:?}")));
        }
        let mut c = [0.0; MAX_DIM];
        c[..components.len()].copy_from_slice(components);
        Ok(RealVector { c, dim: components.len() })
    }

    /// Zero vector. Panics outside 1..=3; dimension bugs are programming errors.
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dim must be 1..=3, got {dim}");
        RealVector { c: [0.0; MAX_DIM], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            c[i] = self.c[i] - other.c[i];
        }
        RealVector { c, dim: self.dim }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            c[i] = self.c[i] + other.c[i];
        }
        RealVector { c, dim: self.dim }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            c[i] = s * self.c[i];
        }
        RealVector { c, dim: self.dim }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        (0..self.dim).map(|i| self.c[i] * other.c[i]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Component-wise sign flip.
    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }
}

impl Index<usize> for RealVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        assert!(i < self.dim, "component {i} of a {}-vector", self.dim);
        &self.c[i]
    }
}

impl PartialEq for RealVector {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.as_slice() == other.as_slice()
    }
}

impl From<f64> for RealVector {
    fn from(x: f64) -> Self {
        RealVector { c: [x, 0.0, 0.0], dim: 1 }
    }
}

impl From<[f64; 1]> for RealVector {
    fn from(a: [f64; 1]) -> Self {
        RealVector { c: [a[0], 0.0, 0.0], dim: 1 }
    }
}

impl From<[f64; 2]> for RealVector {
    fn from(a: [f64; 2]) -> Self {
        RealVector { c: [a[0], a[1], 0.0], dim: 2 }
    }
}

impl From<[f64; 3]> for RealVector {
    fn from(a: [f64; 3]) -> Self {
        RealVector { c: a, dim: 3 }
    }
}

impl fmt::Display for RealVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.c[i])?;
        }
        write!(f, ")")
    }
}

/// One axis of a uniform grid: points origin + i * spacing, i = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    origin: f64,
    spacing: f64,
    count: usize,
}

impl GridAxis {
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn coord(&self, i: usize) -> f64 {
        debug_assert!(i < self.count);
        self.origin + i as f64 * self.spacing
    }

    pub fn lo(&self) -> f64 {
        self.origin
    }

    pub fn hi(&self) -> f64 {
        self.coord(self.count - 1)
    }
}

/// Uniform tensor-product grid, flattened row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    axes: Vec<GridAxis>,
}

/// Uniform grid with the given per-axis point counts and one shared spacing.
///
/// Requires `spacing > 0` finite and every count at least 2 (a trapezoid rule needs
/// both end points).
pub fn build_grid(origin: &RealVector, spacing: f64, counts: &[usize]) -> Result<SpatialGrid> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidGrid(format!("spacing must be positive and finite, got {spacing}")));
    }
    if counts.len() != origin.dim() {
        return Err(Error::InvalidGrid(format!(
            "counts has {} axes but origin has {}",
            counts.len(),
            origin.dim()
        )));
    }
    if let Some(bad) = counts.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidGrid(format!("each axis needs at least 2 points, got {bad}")));
    }
    let axes = counts
        .iter()
        .enumerate()
        .map(|(ax, &count)| GridAxis { origin: origin[ax], spacing, count })
        .collect();
    Ok(SpatialGrid { axes })
}

impl SpatialGrid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, ax: usize) -> &GridAxis {
        &self.axes[ax]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decompose a flat index; entries past `dim` are zero.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        debug_assert!(flat < self.len());
        let mut idx = [0usize; MAX_DIM];
        let mut rem = flat;
        for ax in (0..self.dim()).rev() {
            let n = self.axes[ax].count;
            idx[ax] = rem % n;
            rem /= n;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim());
        let mut flat = 0;
        for (ax, &i) in multi.iter().enumerate() {
            debug_assert!(i < self.axes[ax].count);
            flat = flat * self.axes[ax].count + i;
        }
        flat
    }

    pub fn point(&self, flat: usize) -> RealVector {
        let idx = self.multi_index(flat);
        let mut c = [0.0; MAX_DIM];
        for ax in 0..self.dim() {
            c[ax] = self.axes[ax].coord(idx[ax]);
        }
        RealVector { c, dim: self.dim() }
    }

    /// Volume of one grid cell (product of spacings).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Trapezoid weight of a point: 1/2 per axis end point, 1 in the interior.
    /// Multiply by [`cell_volume`](Self::cell_volume) to integrate.
    pub fn trapezoid_weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let mut w = 1.0;
        for ax in 0..self.dim() {
            let n = self.axes[ax].count;
            if idx[ax] == 0 || idx[ax] == n - 1 {
                w *= 0.5;
            }
        }
        w
    }

    /// Geometric center of the covered box.
    pub fn center(&self) -> RealVector {
        let mut c = [0.0; MAX_DIM];
        for ax in 0..self.dim() {
            c[ax] = 0.5 * (self.axes[ax].lo() + self.axes[ax].hi());
        }
        RealVector { c, dim: self.dim() }
    }
}

/// Smooth window equal to 1 in the grid interior and falling to 0 at the edges
/// over the outer `fraction` of each axis, as sin^2 of the scaled edge distance.
/// `fraction <= 0` disables the taper.
pub(crate) fn cosine_edge_window(grid: &SpatialGrid, flat: usize, fraction: f64) -> f64 {
    if fraction <= 0.0 {
        return 1.0;
    }
    let idx = grid.multi_index(flat);
    let mut w = 1.0;
    for ax in 0..grid.dim() {
        let n = grid.axis(ax).count();
        let ramp = fraction * (n - 1) as f64;
        let edge_dist = idx[ax].min(n - 1 - idx[ax]) as f64;
        if edge_dist < ramp {
            let s = edge_dist / ramp;
            let half = (0.5 * std::f64::consts::PI * s).sin();
            w *= half * half;
        }
    }
    w
}

/// Index range [lo, hi] on an axis of `count` points where the cosine edge window
/// equals exactly 1. Callers keep `fraction` below 1/2 so the range is nonempty.
pub(crate) fn core_interval(count: usize, fraction: f64) -> (usize, usize) {
    if fraction <= 0.0 {
        return (0, count - 1);
    }
    let ramp = fraction * (count - 1) as f64;
    let lo = ramp.ceil() as usize;
    (lo, count - 1 - lo)
}

/// Separable discrete convolution used by the lattice composer and the evolution
/// engine. For each axis in turn the field is replaced by
///
/// ```text
/// out[.., o, ..] = Σ_j table[ax][o - j + n_ax - 1] * field[.., j, ..]
/// ```
///
/// so each `tables[ax]` has `2 n_ax - 1` entries indexed by offset + (n_ax - 1).
/// Lines are processed in parallel but written back in index order, so the result
/// is byte-identical regardless of thread count.
pub(crate) fn convolve_separable(
    grid: &SpatialGrid,
    tables: &[Vec<Complex64>],
    mut field: Vec<Complex64>,
) -> Vec<Complex64> {
    debug_assert_eq!(tables.len(), grid.dim());
    debug_assert_eq!(field.len(), grid.len());
    for ax in 0..grid.dim() {
        let n_ax = grid.axis(ax).count();
        let table = &tables[ax];
        debug_assert_eq!(table.len(), 2 * n_ax - 1);
        let inner: usize = (ax + 1..grid.dim()).map(|a| grid.axis(a).count()).product();
        let outer: usize = (0..ax).map(|a| grid.axis(a).count()).product();
        let field_ref = &field;
        let results: Vec<Vec<Complex64>> = (0..outer * inner)
            .into_par_iter()
            .map(|line| {
                let ou = line / inner;
                let inn = line % inner;
                let base = ou * n_ax * inner + inn;
                (0..n_ax)
                    .map(|o| {
                        let toff = o + n_ax - 1;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for j in 0..n_ax {
                            acc += table[toff - j] * field_ref[base + j * inner];
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        for (line, vals) in results.into_iter().enumerate() {
            let ou = line / inner;
            let inn = line % inner;
            let base = ou * n_ax * inner + inn;
            for (o, v) in vals.into_iter().enumerate() {
                field[base + o * inner] = v;
            }
        }
    }
    field
}

/// Complex field sampled on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl Wavefunction {
    pub fn from_values(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Wavefunction { grid, values })
    }

    pub fn from_fn(grid: SpatialGrid, mut f: impl FnMut(&RealVector) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Wavefunction { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Write the field as CSV: a `#` comment line recording the run configuration,
    /// a header row, then one row per grid point with integer indices, coordinates,
    /// and re/im parts, all floats at 9 significant digits.
    pub fn write_csv(&self, cfg: &PhysicsConfig, mut out: impl Write) -> io::Result<()> {
        let d = self.grid.dim();
        writeln!(
            out,
            "# mass={} hbar={} dim={}",
            format_g9(cfg.mass()),
            format_g9(cfg.hbar()),
            d
        )?;
        let mut header = String::new();
        for ax in 0..d {
            header.push_str(&format!("i{ax},"));
        }
        for ax in 0..d {
            header.push_str(&format!("x{ax},"));
        }
        header.push_str("re,im");
        writeln!(out, "{header}")?;
        for flat in 0..self.grid.len() {
            let idx = self.grid.multi_index(flat);
            let pt = self.grid.point(flat);
            let mut row = String::new();
            for i in idx.iter().take(d) {
                row.push_str(&format!("{i},"));
            }
            for ax in 0..d {
                row.push_str(&format_g9(pt[ax]));
                row.push(',');
            }
            row.push_str(&format_g9(self.values[flat].re));
            row.push(',');
            row.push_str(&format_g9(self.values[flat].im));
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

fn check_same_grid(a: &Wavefunction, b: &Wavefunction) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::IncompatibleGrids(
            "fields live on different grids; re-sample before combining".to_string(),
        ));
    }
    Ok(())
}

/// Trapezoid-rule L2 norm of the field.
pub fn norm(psi: &Wavefunction) -> f64 {
    let vol = psi.grid.cell_volume();
    let s: f64 = (0..psi.grid.len())
        .map(|i| psi.grid.trapezoid_weight(i) * psi.values[i].norm_sqr())
        .sum();
    (s * vol).sqrt()
}

/// Trapezoid-rule inner product `<a|b>` (conjugate-linear in `a`).
pub fn inner_product(a: &Wavefunction, b: &Wavefunction) -> Result<Complex64> {
    check_same_grid(a, b)?;
    let vol = a.grid.cell_volume();
    let s: Complex64 = (0..a.grid.len())
        .map(|i| a.grid.trapezoid_weight(i) * a.values[i].conj() * b.values[i])
        .sum();
    Ok(s * vol)
}

/// Normalized Gaussian packet centered at `center` with intrinsic width `sigma0`
/// and carrier wave vector `k0`:
///
/// ```text
/// psi(x) ∝ exp( -|x - c|^2 / (4 sigma0^2) + i k0 . (x - c) )
/// ```
///
/// normalized so the trapezoid-rule norm on `grid` is exactly 1. Use
/// [`packet_well_covered`] to check the grid leaves at least 5 sigma0 of margin
/// around the center; a narrower grid still produces a normalized field, but its
/// truncated tails will show up in any evolution it seeds.
pub fn gaussian_packet(
    grid: &SpatialGrid,
    center: &RealVector,
    sigma0: f64,
    k0: &RealVector,
    cfg: &PhysicsConfig,
) -> Result<Wavefunction> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma0 must be positive and finite, got {sigma0}")));
    }
    let d = grid.dim();
    if d != cfg.dim() {
        return Err(Error::InvalidParameter(format!("grid dimension {d} does not match config dimension {}", cfg.dim())));
    }
    if center.dim() != d || k0.dim() != d {
        return Err(Error::InvalidParameter(format!(
            "center ({}d) and k0 ({}d) must match the grid dimension {d}",
            center.dim(),
            k0.dim()
        )));
    }
    let inv4s2 = 1.0 / (4.0 * sigma0 * sigma0);
    let mut psi = Wavefunction::from_fn(grid.clone(), |x| {
        let r = x.sub(center);
        Complex64::new(-r.norm_sq() * inv4s2, k0.dot(&r)).exp()
    });
    let n = norm(&psi);
    if n < 1e-150 {
        return Err(Error::InvalidParameter(
            "grid does not overlap the packet support; normalization would divide by zero".to_string(),
        ));
    }
    let scale = 1.0 / n;
    for v in &mut psi.values {
        *v *= scale;
    }
    Ok(psi)
}

/// True when every axis keeps at least 5 sigma0 between `center` and both grid
/// edges, the margin under which truncating the Gaussian tails is negligible at
/// double precision scales.
pub fn packet_well_covered(grid: &SpatialGrid, center: &RealVector, sigma0: f64) -> bool {
    if sigma0 <= 0.0 || center.dim() != grid.dim() {
        return false;
    }
    (0..grid.dim()).all(|ax| {
        let a = grid.axis(ax);
        center[ax] - a.lo() >= 5.0 * sigma0 && a.hi() - center[ax] >= 5.0 * sigma0
    })
}
