//! Orthonormal DCT-II / DCT-III pair on the cell-centered grid.
//!
//! The DCT-II basis vectors `c_k cos(pi k (i + 1/2) / n)` are exactly the
//! eigenvectors of the mirrored 3-point second difference, with eigenvalues
//! `-(2 / h^2) (1 - cos(pi k / n))`. The transforms are dense matrix
//! products per axis: O(n^3) for an `n x n` grid, which is fine at the grid
//! sizes this crate targets and keeps everything `no_std`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::Grid;

#[derive(Debug, Clone)]
struct Axis {
    n: usize,
    /// Row-major `n x n`, row `k` is the k-th basis vector.
    basis: Vec<f64>,
    eig: Vec<f64>,
}

impl Axis {
    fn new(n: usize, h: f64) -> Self {
        let mut basis = vec![0.0; n * n];
        let nf = n as f64;
        for k in 0..n {
            let ck = if k == 0 { libm::sqrt(1.0 / nf) } else { libm::sqrt(2.0 / nf) };
            for i in 0..n {
                basis[k * n + i] = ck * libm::cos(PI * k as f64 * (i as f64 + 0.5) / nf);
            }
        }
        let eig = (0..n).map(|k| -(2.0 / (h * h)) * (1.0 - libm::cos(PI * k as f64 / nf))).collect();
        Axis { n, basis, eig }
    }
}

/// Cosine-transform diagonalization of the Neumann Laplacian on one grid.
#[derive(Debug, Clone)]
pub struct CosineBasis {
    grid: Grid,
    x: Axis,
    y: Axis,
}

impl CosineBasis {
    pub fn new(grid: &Grid) -> Self {
        CosineBasis { grid: *grid, x: Axis::new(grid.nx(), grid.hx()), y: Axis::new(grid.ny(), grid.hy()) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Eigenvalue of the discrete Laplacian for mode `(k, l)`.
    #[inline]
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        self.x.eig[k] + self.y.eig[l]
    }

    /// Eigenvalues laid out like the coefficient array (`l` outer, `k` inner).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        for l in 0..self.y.n {
            for k in 0..self.x.n {
                out.push(self.eigenvalue(k, l));
            }
        }
        out
    }

    /// Physical values -> cosine coefficients (DCT-II).
    pub fn forward(&self, data: &[f64]) -> Vec<f64> {
        self.apply(data, false)
    }

    /// Cosine coefficients -> physical values (DCT-III).
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply(coeffs, true)
    }

    fn apply(&self, data: &[f64], transpose: bool) -> Vec<f64> {
        let (nx, ny) = (self.x.n, self.y.n);
        debug_assert_eq!(data.len(), nx * ny);
        // along x, row by row
        let mut tmp = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &data[j * nx..(j + 1) * nx];
            let out = &mut tmp[j * nx..(j + 1) * nx];
            for (k, o) in out.iter_mut().enumerate() {
                *o = if transpose {
                    row.iter().enumerate().map(|(i, v)| self.x.basis[i * nx + k] * v).sum()
                } else {
                    let b = &self.x.basis[k * nx..(k + 1) * nx];
                    b.iter().zip(row).map(|(c, v)| c * v).sum()
                };
            }
        }
        // along y, as a combination of rows
        let mut out = vec![0.0; nx * ny];
        for l in 0..ny {
            let dst = &mut out[l * nx..(l + 1) * nx];
            for j in 0..ny {
                let c = if transpose { self.y.basis[j * ny + l] } else { self.y.basis[l * ny + j] };
                let src = &tmp[j * nx..(j + 1) * nx];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        out
    }
}
