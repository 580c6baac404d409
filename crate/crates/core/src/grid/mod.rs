//! Cell-centered fields on a rectangle with homogeneous Neumann operators.
//!
//! Data are stored row-major with `y` outer and `x` inner, so cell `(i, j)`
//! lives at `j * nx + i`. Boundary conditions are imposed through mirror
//! ghost cells, which makes the 5-point Laplacian diagonal in the
//! orthonormal DCT-II basis (see [`dct`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub mod dct;
mod solve;

pub use solve::{cg_solve, ch_block_solve, helmholtz_solve, CgReport, ReactionDiffusion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(alloc::format!("grid needs at least 2 cells per axis, got {nx}x{ny}")));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("domain lengths must be positive, got {lx} x {ly}")));
        }
        Ok(Grid { nx, ny, lx, ly })
    }

    /// Unit square with `n x n` cells.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }
}

/// Scalar values at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field { grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field { grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch { context: "Field::from_vec" });
        }
        Ok(Field { grid, data })
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                data.push(f(x, y));
            }
        }
        Field { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { context })
        }
    }

    pub(crate) fn check_same_grid(&self, other: &Field, context: &'static str) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { context })
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Field {
        Field { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, mut f: impl FnMut(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Field { grid: self.grid, data }
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Field) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl core::ops::Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl core::ops::Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Normal fluxes on cell faces.
///
/// `fx` has `(nx + 1) * ny` entries, face `i` of row `j` separating cells
/// `i - 1` and `i`; `fy` has `nx * (ny + 1)` entries laid out the same way
/// along `y`. Boundary faces carry zero flux.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFlux {
    grid: Grid,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
}

impl FaceFlux {
    pub fn zeros(grid: Grid) -> Self {
        FaceFlux { grid, fx: vec![0.0; (grid.nx + 1) * grid.ny], fy: vec![0.0; grid.nx * (grid.ny + 1)] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn ix(&self, i: usize, j: usize) -> usize {
        j * (self.grid.nx + 1) + i
    }

    #[inline]
    pub fn iy(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    pub fn boundary_is_zero(&self) -> bool {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        (0..ny).all(|j| self.fx[self.ix(0, j)] == 0.0 && self.fx[self.ix(nx, j)] == 0.0)
            && (0..nx).all(|i| self.fy[self.iy(i, 0)] == 0.0 && self.fy[self.iy(i, ny)] == 0.0)
    }

    /// Face-wise product.
    pub fn mul(&self, other: &FaceFlux) -> FaceFlux {
        FaceFlux {
            grid: self.grid,
            fx: self.fx.iter().zip(&other.fx).map(|(a, b)| a * b).collect(),
            fy: self.fy.iter().zip(&other.fy).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, x: &FaceFlux) {
        for (s, v) in self.fx.iter_mut().zip(&x.fx) {
            *s += alpha * v;
        }
        for (s, v) in self.fy.iter_mut().zip(&x.fy) {
            *s += alpha * v;
        }
    }
}

/// Interpolation of the transported density to faces in the chemotaxis flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxScheme {
    /// Arithmetic mean of the two adjacent cells.
    #[default]
    Centered,
    /// Donor cell: the cell the flux leaves, chosen by the sign of the face gradient.
    Upwind,
}

pub fn mean(f: &Field) -> f64 {
    f.data.iter().sum::<f64>() / f.data.len() as f64
}

/// Cell-quadrature `∫ f g`.
pub fn inner(f: &Field, g: &Field) -> f64 {
    debug_assert_eq!(f.grid, g.grid);
    f.grid.cell_area() * f.data.iter().zip(&g.data).map(|(a, b)| a * b).sum::<f64>()
}

pub fn norm_l2(f: &Field) -> f64 {
    libm::sqrt(inner(f, f))
}

/// Face-quadrature `∫ F · G` over interior faces.
pub fn inner_faces(f: &FaceFlux, g: &FaceFlux) -> f64 {
    let sx: f64 = f.fx.iter().zip(&g.fx).map(|(a, b)| a * b).sum();
    let sy: f64 = f.fy.iter().zip(&g.fy).map(|(a, b)| a * b).sum();
    f.grid.cell_area() * (sx + sy)
}

/// 5-point Laplacian with mirror ghost cells.
pub fn laplacian(f: &Field) -> Result<Field> {
    f.check_finite("laplacian")?;
    Ok(lap(f))
}

pub(crate) fn lap(f: &Field) -> Field {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (cx, cy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let d = &f.data;
    let mut out = vec![0.0; d.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = d[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += cx * (d[k - 1] - c);
            }
            if i + 1 < nx {
                acc += cx * (d[k + 1] - c);
            }
            if j > 0 {
                acc += cy * (d[k - nx] - c);
            }
            if j + 1 < ny {
                acc += cy * (d[k + nx] - c);
            }
            out[k] = acc;
        }
    }
    Field { grid: g, data: out }
}

/// Centered differences on interior faces, zero on boundary faces.
pub fn gradient_faces(f: &Field) -> FaceFlux {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (rx, ry) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut flux = FaceFlux::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let k = flux.ix(i, j);
            flux.fx[k] = rx * (f.get(i, j) - f.get(i - 1, j));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let k = flux.iy(i, j);
            flux.fy[k] = ry * (f.get(i, j) - f.get(i, j - 1));
        }
    }
    flux
}

/// Conservative divergence; rejects fluxes with nonzero boundary faces.
pub fn divergence(flux: &FaceFlux) -> Result<Field> {
    if !flux.boundary_is_zero() {
        return Err(Error::BoundaryFlux);
    }
    Ok(div(flux))
}

pub(crate) fn div(flux: &FaceFlux) -> Field {
    let g = flux.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (rx, ry) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut out = Field::zeros(g);
    for j in 0..ny {
        for i in 0..nx {
            let dx = flux.fx[flux.ix(i + 1, j)] - flux.fx[flux.ix(i, j)];
            let dy = flux.fy[flux.iy(i, j + 1)] - flux.fy[flux.iy(i, j)];
            out.data[j * nx + i] = rx * dx + ry * dy;
        }
    }
    out
}

/// Face values of `a`, either averaged or taken from the donor cell given by
/// the sign of the face gradient `grad`.
pub fn face_values(a: &Field, grad: &FaceFlux, scheme: FluxScheme) -> FaceFlux {
    let g = a.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut w = FaceFlux::zeros(g);
    let pick = |lo: f64, hi: f64, gr: f64| match scheme {
        FluxScheme::Centered => 0.5 * (lo + hi),
        // flux a∇σ points along the gradient and leaves the upstream cell
        FluxScheme::Upwind => {
            if gr > 0.0 {
                lo
            } else {
                hi
            }
        }
    };
    for j in 0..ny {
        for i in 1..nx {
            let k = w.ix(i, j);
            w.fx[k] = pick(a.get(i - 1, j), a.get(i, j), grad.fx[k]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let k = w.iy(i, j);
            w.fy[k] = pick(a.get(i, j - 1), a.get(i, j), grad.fy[k]);
        }
    }
    w
}

/// Transpose of [`face_values`] (as a linear map of `a`) applied to a face field.
pub fn face_values_transpose(faces: &FaceFlux, grad: &FaceFlux, scheme: FluxScheme) -> Field {
    let g = faces.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut out = Field::zeros(g);
    let scatter = |lo: usize, hi: usize, v: f64, gr: f64, out: &mut Field| match scheme {
        FluxScheme::Centered => {
            out.data[lo] += 0.5 * v;
            out.data[hi] += 0.5 * v;
        }
        FluxScheme::Upwind => {
            if gr > 0.0 {
                out.data[lo] += v;
            } else {
                out.data[hi] += v;
            }
        }
    };
    for j in 0..ny {
        for i in 1..nx {
            let k = faces.ix(i, j);
            scatter(g.idx(i - 1, j), g.idx(i, j), faces.fx[k], grad.fx[k], &mut out);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let k = faces.iy(i, j);
            scatter(g.idx(i, j - 1), g.idx(i, j), faces.fy[k], grad.fy[k], &mut out);
        }
    }
    out
}

/// Chemotaxis flux `a_face * (∇σ)_face`.
pub fn chemotaxis_flux(a: &Field, sigma: &Field, scheme: FluxScheme) -> FaceFlux {
    let grad = gradient_faces(sigma);
    face_values(a, &grad, scheme).mul(&grad)
}

#[cfg(test)]
mod tests;
