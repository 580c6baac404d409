extern crate std;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use proptest::prelude::*;

use super::*;

fn field_strategy(grid: Grid) -> impl Strategy<Value = Field> {
    proptest::collection::vec(-2.0f64..2.0, grid.len()).prop_map(move |v| Field::from_vec(grid, v).unwrap())
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (2usize..9, 2usize..9, 0.5f64..2.0, 0.5f64..2.0).prop_map(|(nx, ny, lx, ly)| Grid::new(nx, ny, lx, ly).unwrap())
}

fn grid_and_fields() -> impl Strategy<Value = (Field, Field)> {
    grid_strategy().prop_flat_map(|g| (field_strategy(g), field_strategy(g)))
}

/// Straightforward Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn dense_laplacian(grid: Grid) -> Vec<Vec<f64>> {
    let n = grid.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = Field::zeros(grid);
        e.data_mut()[k] = 1.0;
        cols.push(lap(&e));
    }
    (0..n).map(|r| (0..n).map(|c| cols[c].data()[r]).collect()).collect()
}

#[test]
fn grid_rejects_degenerate_sizes() {
    assert!(Grid::new(1, 4, 1.0, 1.0).is_err());
    assert!(Grid::new(4, 4, 0.0, 1.0).is_err());
    assert!(Grid::new(4, 4, 1.0, f64::NAN).is_err());
    let g = Grid::new(4, 2, 2.0, 1.0).unwrap();
    assert_eq!(g.center(0, 0), (0.25, 0.25));
    assert_eq!(g.center(3, 1), (1.75, 0.75));
}

#[test]
fn laplacian_of_constant_vanishes() {
    let g = Grid::new(5, 7, 1.0, 2.0).unwrap();
    let out = laplacian(&Field::constant(g, 3.5)).unwrap();
    assert!(out.max_abs() < 1e-12);
}

#[test]
fn laplacian_rejects_nan() {
    let g = Grid::unit_square(3).unwrap();
    let mut f = Field::zeros(g);
    f.data_mut()[4] = f64::NAN;
    assert!(matches!(laplacian(&f), Err(Error::NonFinite { .. })));
}

#[test]
fn cosine_mode_is_an_eigenfield() {
    for (nx, ny, lx) in [(8, 5, 1.0), (16, 3, 2.5), (3, 3, 0.7)] {
        let g = Grid::new(nx, ny, lx, 1.0).unwrap();
        let f = Field::from_fn(g, |x, _| libm::cos(PI * x / lx));
        let hx = g.hx();
        let lam = -(2.0 / (hx * hx)) * (1.0 - libm::cos(PI * hx / lx));
        let out = laplacian(&f).unwrap();
        for (o, v) in out.data().iter().zip(f.data()) {
            assert!((o - lam * v).abs() < 1e-10 * lam.abs(), "{o} vs {}", lam * v);
        }
    }
}

#[test]
fn strip_stencil_by_hand() {
    // three cells in x with data (0, 1, 0), replicated along y so the y part vanishes
    let g = Grid::new(3, 2, 3.0, 2.0).unwrap();
    let f = Field::from_vec(g, vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let out = laplacian(&f).unwrap();
    assert_eq!(out.data(), &[1.0, -2.0, 1.0, 1.0, -2.0, 1.0]);
}

#[test]
fn gradient_of_constant_and_linear() {
    let g = Grid::new(4, 3, 4.0, 3.0).unwrap();
    let zero = gradient_faces(&Field::constant(g, 2.0));
    assert!(zero.fx.iter().chain(&zero.fy).all(|v| *v == 0.0));

    let lin = gradient_faces(&Field::from_fn(g, |x, _| x));
    for j in 0..3 {
        for i in 0..=4 {
            let v = lin.fx[lin.ix(i, j)];
            if i == 0 || i == 4 {
                assert_eq!(v, 0.0);
            } else {
                assert!((v - 1.0).abs() < 1e-14);
            }
        }
    }
    assert!(lin.fy.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn divergence_rejects_boundary_flux() {
    let g = Grid::unit_square(3).unwrap();
    let mut flux = FaceFlux::zeros(g);
    assert!(divergence(&flux).unwrap().max_abs() == 0.0);
    let k = flux.ix(0, 1);
    flux.fx[k] = 1.0;
    assert_eq!(divergence(&flux), Err(Error::BoundaryFlux));
}

#[test]
fn divergence_of_gradient_of_cosine_matches_laplacian() {
    let g = Grid::new(10, 6, 1.5, 1.0).unwrap();
    let f = Field::from_fn(g, |x, _| libm::cos(PI * x / 1.5));
    let a = divergence(&gradient_faces(&f)).unwrap();
    let b = laplacian(&f).unwrap();
    assert!((&a - &b).max_abs() < 1e-12);
}

#[test]
fn mean_inner_norm_basics() {
    let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
    assert_eq!(mean(&Field::constant(g, 4.0)), 4.0);
    let f = Field::from_vec(g, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    assert_eq!(mean(&f), 0.5);
    let one = Field::constant(Grid::unit_square(7).unwrap(), 1.0);
    assert!((norm_l2(&one) - 1.0).abs() < 1e-14);
    assert!((inner(&f, &f) - norm_l2(&f).powi(2)).abs() < 1e-15);
}

#[test]
fn chemotaxis_flux_with_constant_density() {
    let g = Grid::new(6, 5, 1.0, 0.8).unwrap();
    let sigma = Field::from_fn(g, |x, y| libm::sin(3.0 * x) * libm::cos(2.0 * y) + x * y);
    let a = Field::constant(g, 0.7);
    let d = divergence(&chemotaxis_flux(&a, &sigma, FluxScheme::Centered)).unwrap();
    let l = laplacian(&sigma).unwrap().scaled(0.7);
    assert!((&d - &l).max_abs() < 1e-12);

    let flat = Field::constant(g, 0.3);
    let a = Field::from_fn(g, |x, y| 1.0 + x - y);
    for scheme in [FluxScheme::Centered, FluxScheme::Upwind] {
        let f = chemotaxis_flux(&a, &flat, scheme);
        assert!(f.fx.iter().chain(&f.fy).all(|v| *v == 0.0));
    }
}

#[test]
fn upwind_flux_uses_the_cell_it_leaves() {
    let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
    let a = Field::from_fn(g, |x, y| 0.2 + libm::sin(7.0 * x + 3.0 * y).abs());
    let s = Field::from_fn(g, |x, y| libm::cos(5.0 * x) * libm::sin(4.0 * y + 0.3));
    let flux = chemotaxis_flux(&a, &s, FluxScheme::Upwind);
    let (hx, hy) = (g.hx(), g.hy());
    for j in 0..4 {
        for i in 1..5 {
            let gr = (s.get(i, j) - s.get(i - 1, j)) / hx;
            let donor = if gr > 0.0 { a.get(i - 1, j) } else { a.get(i, j) };
            assert!((flux.fx[flux.ix(i, j)] - donor * gr).abs() <= 1e-14 * (donor * gr).abs());
        }
    }
    for j in 1..4 {
        for i in 0..5 {
            let gr = (s.get(i, j) - s.get(i, j - 1)) / hy;
            let donor = if gr > 0.0 { a.get(i, j - 1) } else { a.get(i, j) };
            assert!((flux.fy[flux.iy(i, j)] - donor * gr).abs() <= 1e-14 * (donor * gr).abs());
        }
    }
}

#[test]
fn helmholtz_on_constant_and_eigenfield() {
    let g = Grid::new(8, 6, 1.0, 1.0).unwrap();
    let x = helmholtz_solve(&Field::constant(g, 3.0), 2.0, 5.0).unwrap();
    assert!(x.data().iter().all(|v| (v - 1.5).abs() < 1e-13));

    let b = Field::from_fn(g, |x, _| libm::cos(PI * x));
    let hx = g.hx();
    let lam = -(2.0 / (hx * hx)) * (1.0 - libm::cos(PI * hx));
    let beta = 0.3;
    let x = helmholtz_solve(&b, 1.0, beta).unwrap();
    for (xv, bv) in x.data().iter().zip(b.data()) {
        assert!((xv - bv / (1.0 - beta * lam)).abs() < 1e-13);
    }
    assert!(helmholtz_solve(&b, 0.0, 1.0).is_err());
    assert!(helmholtz_solve(&b, -1.0, 1.0).is_err());
}

#[test]
fn ch_block_zero_mode() {
    let g = Grid::unit_square(5).unwrap();
    let (tau, s, c) = (0.01, 0.5, 0.8);
    let (phi, mu) = ch_block_solve(&Field::constant(g, c / tau), &Field::zeros(g), tau, s).unwrap();
    assert!(phi.data().iter().all(|v| (v - c).abs() < 1e-12));
    assert!(mu.data().iter().all(|v| (v - s * c).abs() < 1e-12));
}

#[test]
fn ch_block_matches_dense_assembly() {
    let g = Grid::new(4, 4, 1.0, 1.3).unwrap();
    let n = g.len();
    let lmat = dense_laplacian(g);
    let (tau, s, decay) = (0.05, 0.7, 0.4);
    let rp = Field::from_fn(g, |x, y| libm::sin(4.0 * x + y) + 0.3);
    let rm = Field::from_fn(g, |x, y| libm::cos(2.0 * x - 3.0 * y));
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    for r in 0..n {
        a[r][r] = 1.0 / tau + decay;
        a[n + r][r] = s;
        a[n + r][n + r] = -1.0;
        for c in 0..n {
            a[r][n + c] -= lmat[r][c];
            a[n + r][c] -= lmat[r][c];
        }
    }
    let rhs: Vec<f64> = rp.data().iter().chain(rm.data()).copied().collect();
    let dense = dense_solve(a, rhs);
    let rd = ReactionDiffusion::new(&g);
    let (phi, mu) = rd.ch_block(&rp, &rm, tau, s, decay).unwrap();
    for k in 0..n {
        assert!((phi.data()[k] - dense[k]).abs() < 1e-11);
        assert!((mu.data()[k] - dense[n + k]).abs() < 1e-11);
    }
}

#[test]
fn cg_matches_dense_assembly() {
    let g = Grid::new(4, 3, 1.0, 1.0).unwrap();
    let lmat = dense_laplacian(g);
    let coeff = Field::from_fn(g, |x, y| 1.0 + x * y);
    let b = Field::from_fn(g, |x, y| x - y * y);
    let (alpha, beta) = (10.0, 1.0);
    let n = g.len();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|r| (0..n).map(|c| -beta * lmat[r][c] + if r == c { alpha + coeff.data()[r] } else { 0.0 }).collect())
        .collect();
    let dense = dense_solve(a, b.data().to_vec());
    let (x, report) = cg_solve(&b, alpha, &coeff, beta).unwrap();
    assert!(report.relative_residual <= solve::CG_TOL);
    for (xv, dv) in x.data().iter().zip(&dense) {
        assert!((xv - dv).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_self_adjoint((f, g) in grid_and_fields()) {
        let lhs = inner(&lap(&f), &g);
        let rhs = inner(&f, &lap(&g));
        let scale = inner(&lap(&f), &lap(&f)).sqrt() * inner(&g, &g).sqrt() + 1e-300;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn laplacian_is_negative_semidefinite((f, _g) in grid_and_fields()) {
        let q = inner(&lap(&f), &f);
        prop_assert!(q <= 1e-12 * inner(&f, &f).max(1.0));
    }

    #[test]
    fn discrete_conservation((f, g) in grid_and_fields()) {
        let scale = f.max_abs() / (f.grid().hx().min(f.grid().hy())).powi(2) + 1.0;
        prop_assert!(mean(&lap(&f)).abs() <= 1e-13 * scale);
        let flux = chemotaxis_flux(&f, &g, FluxScheme::Upwind);
        let d = divergence(&flux).unwrap();
        let dscale = d.max_abs() + 1.0;
        prop_assert!(mean(&d).abs() <= 1e-13 * dscale);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian((f, _g) in grid_and_fields()) {
        let a = div(&gradient_faces(&f));
        let b = lap(&f);
        prop_assert!((&a - &b).max_abs() <= 1e-12 * (b.max_abs() + 1.0));
    }

    #[test]
    fn helmholtz_is_an_exact_inverse((b, _g) in grid_and_fields(), alpha in 0.1f64..50.0, beta in 0.0f64..2.0) {
        let x = helmholtz_solve(&b, alpha, beta).unwrap();
        let mut ax = lap(&x);
        ax.scale(-beta);
        ax.axpy(alpha, &x);
        let r = norm_l2(&(&ax - &b));
        prop_assert!(r <= 1e-12 * norm_l2(&b).max(1e-300));
    }

    #[test]
    fn ch_block_residuals((rp, rm) in grid_and_fields(), tau in 1e-3f64..1.0, s in 0.0f64..3.0) {
        let (phi, mu) = ch_block_solve(&rp, &rm, tau, s).unwrap();
        let mut r1 = phi.scaled(1.0 / tau);
        r1.axpy(-1.0, &lap(&mu));
        let mut r2 = lap(&phi).scaled(-1.0);
        r2.axpy(s, &phi);
        r2.axpy(-1.0, &mu);
        let scale = norm_l2(&rp) + norm_l2(&rm) + 1e-300;
        prop_assert!(norm_l2(&(&r1 - &rp)) <= 1e-11 * scale.max(norm_l2(&phi) / tau));
        prop_assert!(norm_l2(&(&r2 - &rm)) <= 1e-11 * scale.max(norm_l2(&mu)));
    }

    #[test]
    fn face_values_transpose_is_adjoint((a, s) in grid_and_fields(), upwind in any::<bool>()) {
        let scheme = if upwind { FluxScheme::Upwind } else { FluxScheme::Centered };
        let grad = gradient_faces(&s);
        let mut w = gradient_faces(&a);
        w.axpy(0.5, &grad);
        let lhs = inner_faces(&face_values(&a, &grad, scheme), &w);
        let rhs = inner(&a, &face_values_transpose(&w, &grad, scheme));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs() + 1.0));
    }
}
