//! Cell-centered Cartesian discretization of bounded 2D domains with
//! homogeneous Dirichlet data.
//!
//! Geometry is handled by masking a uniform grid. Cells whose centers lie
//! strictly inside the domain are unknowns; stencil arms that cross the
//! boundary are shortened to the exact crossing distance and closed by
//! linear extrapolation through the zero boundary value. The resulting
//! operator is a symmetric M-matrix and second-order accurate in the
//! supremum norm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{BandedLdl, SymBandMatrix};
use once_cell::sync::OnceCell;
use std::sync::Arc;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("domain spec produced an empty interior")]
    EmptyInterior,
    #[error("grid spacing must be positive and resolve the shape")]
    BadSpacing,
    #[error("field length {got} does not match domain cell count {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("point ({0}, {1}) is not an interior cell")]
    PointOutsideInterior(f64, f64),
    #[error("point ({0}, {1}) is closer than {2} to the boundary")]
    TooCloseToBoundary(f64, f64, f64),
    #[error("direct solve left residual {residual:.3e} above tolerance {tol:.3e}")]
    SolveResidual { residual: f64, tol: f64 },
    #[error("linear solve failed: {0}")]
    Factorization(#[from] crate::banded::BandedError),
}

/// Domain geometry as written in run configurations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Rectangle {
        bounds: [f64; 4],
        h: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
        h: f64,
    },
    Annulus {
        center: [f64; 2],
        r_inner: f64,
        r_outer: f64,
        h: f64,
    },
    RectangleWithHole {
        bounds: [f64; 4],
        hole_center: [f64; 2],
        hole_radius: f64,
        h: f64,
    },
}

impl DomainSpec {
    pub fn unit_square(h: f64) -> Self {
        DomainSpec::Rectangle {
            bounds: [0.0, 0.0, 1.0, 1.0],
            h,
        }
    }

    pub fn unit_disk(h: f64) -> Self {
        DomainSpec::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
            h,
        }
    }

    pub fn h(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { h, .. }
            | DomainSpec::Disk { h, .. }
            | DomainSpec::Annulus { h, .. }
            | DomainSpec::RectangleWithHole { h, .. } => h,
        }
    }

    /// Strict interior test.
    fn inside(&self, x: f64, y: f64) -> bool {
        match *self {
            DomainSpec::Rectangle { bounds, .. } => {
                x > bounds[0] && x < bounds[2] && y > bounds[1] && y < bounds[3]
            }
            DomainSpec::Disk { center, radius, .. } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                dx * dx + dy * dy < radius * radius
            }
            DomainSpec::Annulus {
                center,
                r_inner,
                r_outer,
                ..
            } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                let r2 = dx * dx + dy * dy;
                r2 > r_inner * r_inner && r2 < r_outer * r_outer
            }
            DomainSpec::RectangleWithHole {
                bounds,
                hole_center,
                hole_radius,
                ..
            } => {
                let inside_rect =
                    x > bounds[0] && x < bounds[2] && y > bounds[1] && y < bounds[3];
                let (dx, dy) = (x - hole_center[0], y - hole_center[1]);
                inside_rect && dx * dx + dy * dy > hole_radius * hole_radius
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainSpec::Rectangle { bounds, .. } => (x - bounds[0])
                .min(bounds[2] - x)
                .min(y - bounds[1])
                .min(bounds[3] - y),
            DomainSpec::Disk { center, radius, .. } => {
                radius - ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt()
            }
            DomainSpec::Annulus {
                center,
                r_inner,
                r_outer,
                ..
            } => {
                let r = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
                (r - r_inner).min(r_outer - r)
            }
            DomainSpec::RectangleWithHole {
                bounds,
                hole_center,
                hole_radius,
                ..
            } => {
                let rect = (x - bounds[0])
                    .min(bounds[2] - x)
                    .min(y - bounds[1])
                    .min(bounds[3] - y);
                let rh =
                    ((x - hole_center[0]).powi(2) + (y - hole_center[1]).powi(2)).sqrt();
                rect.min(rh - hole_radius)
            }
        }
    }

    fn bbox(&self) -> [f64; 4] {
        match *self {
            DomainSpec::Rectangle { bounds, .. }
            | DomainSpec::RectangleWithHole { bounds, .. } => bounds,
            DomainSpec::Disk { center, radius, .. } => [
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ],
            DomainSpec::Annulus {
                center, r_outer, ..
            } => [
                center[0] - r_outer,
                center[1] - r_outer,
                center[0] + r_outer,
                center[1] + r_outer,
            ],
        }
    }

    pub fn holes(&self) -> Vec<([f64; 2], f64)> {
        match *self {
            DomainSpec::Annulus {
                center, r_inner, ..
            } => vec![(center, r_inner)],
            DomainSpec::RectangleWithHole {
                hole_center,
                hole_radius,
                ..
            } => vec![(hole_center, hole_radius)],
            _ => vec![],
        }
    }

    /// Smallest positive distance along axis `dir` (0:+x, 1:-x, 2:+y, 3:-y)
    /// from an interior point to the boundary, if within `h`.
    fn arm_cut(&self, x: f64, y: f64, dir: usize, h: f64) -> Option<f64> {
        let (dx, dy) = AXES[dir];
        fn push(best: &mut f64, t: f64, h: f64) {
            if t > 0.0 && t <= h * (1.0 + 1e-12) && t < *best {
                *best = t;
            }
        }
        fn rect_cuts(best: &mut f64, bounds: [f64; 4], x: f64, y: f64, dx: f64, dy: f64, h: f64) {
            if dx > 0.0 {
                push(best, bounds[2] - x, h);
            }
            if dx < 0.0 {
                push(best, x - bounds[0], h);
            }
            if dy > 0.0 {
                push(best, bounds[3] - y, h);
            }
            if dy < 0.0 {
                push(best, y - bounds[1], h);
            }
        }
        // |p + t d − c|² = r², d a unit axis vector
        fn circle_cuts(best: &mut f64, c: [f64; 2], r: f64, x: f64, y: f64, dx: f64, dy: f64, h: f64) {
            let px = x - c[0];
            let py = y - c[1];
            let b = px * dx + py * dy;
            let q = px * px + py * py - r * r;
            let disc = b * b - q;
            if disc >= 0.0 {
                let s = disc.sqrt();
                push(best, -b - s, h);
                push(best, -b + s, h);
            }
        }
        let mut best = f64::INFINITY;
        match *self {
            DomainSpec::Rectangle { bounds, .. } => rect_cuts(&mut best, bounds, x, y, dx, dy, h),
            DomainSpec::Disk { center, radius, .. } => {
                circle_cuts(&mut best, center, radius, x, y, dx, dy, h)
            }
            DomainSpec::Annulus {
                center,
                r_inner,
                r_outer,
                ..
            } => {
                circle_cuts(&mut best, center, r_inner, x, y, dx, dy, h);
                circle_cuts(&mut best, center, r_outer, x, y, dx, dy, h);
            }
            DomainSpec::RectangleWithHole {
                bounds,
                hole_center,
                hole_radius,
                ..
            } => {
                rect_cuts(&mut best, bounds, x, y, dx, dy, h);
                circle_cuts(&mut best, hole_center, hole_radius, x, y, dx, dy, h);
            }
        }
        if best.is_finite() {
            Some(best)
        } else {
            None
        }
    }
}

const AXES: [(f64, f64); 4] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
const NO_NEIGHBOR: u32 = u32::MAX;
const MIN_THETA: f64 = 1e-8;

/// Discretized domain: interior cell list, boundary mask, stencil arms.
///
/// Immutable after construction. The Laplacian factorization is cached
/// lazily and shared by reference.
pub struct DiscreteDomain {
    spec: DomainSpec,
    h: f64,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    /// full-grid map to interior index; NO_NEIGHBOR where not interior
    index: Vec<u32>,
    cells: Vec<(u32, u32)>,
    /// per-cell neighbor interior indices, NO_NEIGHBOR on cut arms
    neighbors: Vec<[u32; 4]>,
    /// per-cell arm lengths as fractions of h (1.0 on regular arms)
    thetas: Vec<[f64; 4]>,
    boundary: Vec<(u32, u32)>,
    bandwidth: usize,
    laplacian: OnceCell<Arc<BandedLdl>>,
}

impl DiscreteDomain {
    pub fn build(spec: &DomainSpec) -> Result<Self, DomainError> {
        let h = spec.h();
        if !(h > 0.0) || !h.is_finite() {
            return Err(DomainError::BadSpacing);
        }
        let bb = spec.bbox();
        // symmetric expansion by two cells so every interior cell has
        // in-grid neighbors; grid edges align with the bbox center
        let cx = 0.5 * (bb[0] + bb[2]);
        let cy = 0.5 * (bb[1] + bb[3]);
        let half_w = 0.5 * (bb[2] - bb[0]);
        let half_h = 0.5 * (bb[3] - bb[1]);
        let nx = 2 * ((half_w / h - 1e-9).ceil() as usize + 2);
        let ny = 2 * ((half_h / h - 1e-9).ceil() as usize + 2);
        let x0 = cx - (nx as f64 / 2.0) * h;
        let y0 = cy - (ny as f64 / 2.0) * h;

        let center = |ix: usize, iy: usize| {
            (
                x0 + (ix as f64 + 0.5) * h,
                y0 + (iy as f64 + 0.5) * h,
            )
        };

        let mut index = vec![NO_NEIGHBOR; nx * ny];
        let mut cells = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = center(ix, iy);
                if spec.inside(x, y) {
                    index[iy * nx + ix] = cells.len() as u32;
                    cells.push((ix as u32, iy as u32));
                }
            }
        }
        if cells.is_empty() {
            return Err(DomainError::EmptyInterior);
        }

        let offsets: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let mut neighbors = vec![[NO_NEIGHBOR; 4]; cells.len()];
        let mut thetas = vec![[1.0f64; 4]; cells.len()];
        let mut boundary = std::collections::BTreeSet::new();
        let mut bandwidth = 0usize;
        for (ci, &(ix, iy)) in cells.iter().enumerate() {
            let (x, y) = center(ix as usize, iy as usize);
            for (d, &(ox, oy)) in offsets.iter().enumerate() {
                let jx = ix as i64 + ox;
                let jy = iy as i64 + oy;
                let in_grid = jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny;
                let nidx = if in_grid {
                    index[jy as usize * nx + jx as usize]
                } else {
                    NO_NEIGHBOR
                };
                if nidx != NO_NEIGHBOR {
                    neighbors[ci][d] = nidx;
                    bandwidth = bandwidth.max((nidx as i64 - ci as i64).unsigned_abs() as usize);
                } else {
                    let cut = spec
                        .arm_cut(x, y, d, h)
                        .unwrap_or(0.5 * h)
                        .max(MIN_THETA * h);
                    thetas[ci][d] = (cut / h).min(1.0);
                    if in_grid {
                        boundary.insert((jx as u32, jy as u32));
                    }
                }
            }
        }

        Ok(Self {
            spec: spec.clone(),
            h,
            nx,
            ny,
            x0,
            y0,
            index,
            cells,
            neighbors,
            thetas,
            boundary: boundary.into_iter().collect(),
            bandwidth,
            laplacian: OnceCell::new(),
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Domain area as interior cell count times h².
    pub fn area(&self) -> f64 {
        self.cells.len() as f64 * self.h * self.h
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn bbox_origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn boundary_cells(&self) -> &[(u32, u32)] {
        &self.boundary
    }

    pub fn holes(&self) -> Vec<([f64; 2], f64)> {
        self.spec.holes()
    }

    #[inline]
    pub fn cell_center(&self, i: usize) -> (f64, f64) {
        let (ix, iy) = self.cells[i];
        (
            self.x0 + (ix as f64 + 0.5) * self.h,
            self.y0 + (iy as f64 + 0.5) * self.h,
        )
    }

    #[inline]
    pub fn neighbors_of(&self, i: usize) -> &[u32; 4] {
        &self.neighbors[i]
    }

    #[inline]
    pub fn thetas_of(&self, i: usize) -> &[f64; 4] {
        &self.thetas[i]
    }

    pub fn cells(&self) -> &[(u32, u32)] {
        &self.cells
    }

    pub fn interior_index(&self, ix: usize, iy: usize) -> Option<usize> {
        let v = self.index[iy * self.nx + ix];
        (v != NO_NEIGHBOR).then_some(v as usize)
    }

    /// Interior cell whose center is nearest to `p`.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Result<usize, DomainError> {
        let fx = ((x - self.x0) / self.h - 0.5).round() as i64;
        let fy = ((y - self.y0) / self.h - 0.5).round() as i64;
        let mut best: Option<(f64, usize)> = None;
        for oy in -1..=1 {
            for ox in -1..=1 {
                let ix = fx + ox;
                let iy = fy + oy;
                if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
                    continue;
                }
                if let Some(ci) = self.interior_index(ix as usize, iy as usize) {
                    let (cx, cy) = self.cell_center(ci);
                    let d2 = (cx - x).powi(2) + (cy - y).powi(2);
                    if best.map_or(true, |(bd, _)| d2 < bd) {
                        best = Some((d2, ci));
                    }
                }
            }
        }
        best.map(|(_, i)| i)
            .ok_or(DomainError::PointOutsideInterior(x, y))
    }

    /// Apply the negative Laplacian with Dirichlet closure.
    pub fn laplacian_apply(&self, u: &Field) -> Result<Field, DomainError> {
        self.check_field(u)?;
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = vec![0.0; u.values.len()];
        for i in 0..self.cells.len() {
            let ui = u.values[i];
            let mut acc = 0.0;
            for d in 0..4 {
                let n = self.neighbors[i][d];
                if n != NO_NEIGHBOR {
                    acc += ui - u.values[n as usize];
                } else {
                    acc += ui / self.thetas[i][d];
                }
            }
            out[i] = acc * inv_h2;
        }
        Ok(Field { values: out })
    }

    /// Assemble −Δ plus a cellwise diagonal shift into banded storage.
    pub fn assemble_shifted_laplacian(&self, diag_shift: &[f64]) -> SymBandMatrix {
        let n = self.cells.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut m = SymBandMatrix::zeros(n, self.bandwidth);
        for i in 0..n {
            let mut diag = 0.0;
            for d in 0..4 {
                let nb = self.neighbors[i][d];
                if nb != NO_NEIGHBOR {
                    diag += inv_h2;
                    if (nb as usize) < i {
                        m.set(i, nb as usize, -inv_h2);
                    }
                } else {
                    diag += inv_h2 / self.thetas[i][d];
                }
            }
            m.set(i, i, diag + diag_shift.get(i).copied().unwrap_or(0.0));
        }
        m
    }

    fn laplacian_factor(&self) -> Result<Arc<BandedLdl>, DomainError> {
        if let Some(f) = self.laplacian.get() {
            return Ok(f.clone());
        }
        let f = Arc::new(self.assemble_shifted_laplacian(&[]).factor()?);
        let _ = self.laplacian.set(f.clone());
        Ok(f)
    }

    /// Solve −Δu = rhs with zero boundary data by direct factorization.
    pub fn poisson_solve(&self, rhs: &Field) -> Result<Field, DomainError> {
        self.check_field(rhs)?;
        let f = self.laplacian_factor()?;
        let u = Field {
            values: f.solve(&rhs.values),
        };
        let residual = {
            let au = self.laplacian_apply(&u)?;
            au.values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let tol = 1e-8 * (1.0 + rhs.sup_norm()) * (1.0 + 1.0 / (self.h * self.h)) * 1e-4;
        if residual > tol {
            return Err(DomainError::SolveResidual { residual, tol });
        }
        Ok(u)
    }

    /// Green function column G(·, y): solves −ΔG = δ_y with a single-cell
    /// discrete delta of mass 1/h².
    pub fn green_function(&self, x: f64, y: f64) -> Result<Field, DomainError> {
        let d = self.spec.boundary_distance(x, y);
        if d < 2.0 * self.h {
            return Err(DomainError::TooCloseToBoundary(x, y, 2.0 * self.h));
        }
        let ci = self.nearest_cell(x, y)?;
        let mut rhs = Field::zeros(self);
        rhs.values[ci] = 1.0 / (self.h * self.h);
        self.poisson_solve(&rhs)
    }

    /// Regular part H(x, y) = G(x, y) + log|x−y| / 2π.
    ///
    /// On the diagonal the log singularity is removed by averaging over a
    /// four-point stencil of radius 4h around y.
    pub fn regular_part(&self, x: [f64; 2], y: [f64; 2]) -> Result<f64, DomainError> {
        let ys = self.cell_center(self.nearest_cell(y[0], y[1])?);
        let g = self.green_function(ys.0, ys.1)?;
        let xs = self.cell_center(self.nearest_cell(x[0], x[1])?);
        let dist = ((xs.0 - ys.0).powi(2) + (xs.1 - ys.1).powi(2)).sqrt();
        let two_pi = 2.0 * std::f64::consts::PI;
        if dist > 1.5 * self.h {
            let ci = self.nearest_cell(xs.0, xs.1)?;
            return Ok(g.values[ci] + dist.ln() / two_pi);
        }
        // diagonal: average H over (y ± s e_k), s = 4h
        let s = 4.0 * self.h;
        let mut acc = 0.0;
        for (dx, dy) in AXES {
            let px = ys.0 + s * dx;
            let py = ys.1 + s * dy;
            let ci = self.nearest_cell(px, py)?;
            let pc = self.cell_center(ci);
            let d = ((pc.0 - ys.0).powi(2) + (pc.1 - ys.1).powi(2)).sqrt();
            acc += g.values[ci] + d.ln() / two_pi;
        }
        Ok(acc / 4.0)
    }

    /// Bilinear interpolation of a field at an arbitrary point, with the
    /// Dirichlet zero extension outside the interior.
    pub fn interpolate(&self, u: &Field, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) / self.h - 0.5;
        let fy = (y - self.y0) / self.h - 0.5;
        let ix = fx.floor();
        let iy = fy.floor();
        let tx = fx - ix;
        let ty = fy - iy;
        let mut val = 0.0;
        for (oy, wy) in [(0i64, 1.0 - ty), (1, ty)] {
            for (ox, wx) in [(0i64, 1.0 - tx), (1, tx)] {
                let jx = ix as i64 + ox;
                let jy = iy as i64 + oy;
                if jx < 0 || jy < 0 || jx as usize >= self.nx || jy as usize >= self.ny {
                    continue;
                }
                if let Some(ci) = self.interior_index(jx as usize, jy as usize) {
                    val += wx * wy * u.values[ci];
                }
            }
        }
        val
    }

    /// Number of connected components of the boundary mask (8-connectivity).
    pub fn boundary_components(&self) -> usize {
        use std::collections::{BTreeMap, VecDeque};
        let set: BTreeMap<(u32, u32), usize> = self
            .boundary
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let mut seen = vec![false; self.boundary.len()];
        let mut comps = 0;
        for start in 0..self.boundary.len() {
            if seen[start] {
                continue;
            }
            comps += 1;
            let mut q = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = q.pop_front() {
                let (cx, cy) = self.boundary[i];
                for oy in -1i64..=1 {
                    for ox in -1i64..=1 {
                        let nx = cx as i64 + ox;
                        let ny = cy as i64 + oy;
                        if nx < 0 || ny < 0 {
                            continue;
                        }
                        if let Some(&j) = set.get(&(nx as u32, ny as u32)) {
                            if !seen[j] {
                                seen[j] = true;
                                q.push_back(j);
                            }
                        }
                    }
                }
            }
        }
        comps
    }

    pub fn check_field(&self, f: &Field) -> Result<(), DomainError> {
        if f.values.len() != self.cells.len() {
            return Err(DomainError::ShapeMismatch {
                got: f.values.len(),
                want: self.cells.len(),
            });
        }
        Ok(())
    }
}

/// Scalar grid function on the interior cells; zero trace on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: &DiscreteDomain) -> Self {
        Field {
            values: vec![0.0; domain.num_cells()],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(domain: &DiscreteDomain, f: F) -> Self {
        let values = (0..domain.num_cells())
            .map(|i| {
                let (x, y) = domain.cell_center(i);
                f(x, y)
            })
            .collect();
        Field { values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Field) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }
}
