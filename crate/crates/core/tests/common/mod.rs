#![allow(dead_code)]

use chks_core::control::{Control, ControlSpec, UpperBound};
use chks_core::model::ModelSpec;
use chks_core::state::{InitialData, TimeSettings};
use chks_core::{Field, FluxScheme, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Low-order cosine series with random coefficients, rescaled to `[lo, hi]`.
pub fn smooth_field(grid: Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
    let coeffs: Vec<(f64, f64, f64)> =
        (0..6).map(|_| (rng.gen_range(0..3) as f64, rng.gen_range(0..3) as f64, rng.gen_range(-1.0..1.0))).collect();
    let pi = std::f64::consts::PI;
    let raw = Field::from_fn(grid, |x, y| {
        coeffs.iter().map(|(k, l, c)| c * (k * pi * x / grid.lx()).cos() * (l * pi * y / grid.ly()).cos()).sum()
    });
    let (mn, mx) = (raw.min(), raw.max());
    if mx - mn < 1e-12 {
        return Field::constant(grid, 0.5 * (lo + hi));
    }
    raw.map(|v| lo + (hi - lo) * (v - mn) / (mx - mn))
}

pub fn smooth_control(grid: Grid, nt: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Control {
    let a = smooth_field(grid, rng, lo, hi);
    let b = smooth_field(grid, rng, lo, hi);
    let slices = (0..nt)
        .map(|k| {
            let t = k as f64 / nt.max(1) as f64;
            a.zip_map(&b, |x, y| (1.0 - t) * x + t * y)
        })
        .collect();
    Control::from_slices(grid, slices).unwrap()
}

pub fn initial(grid: Grid, rng: &mut ChaCha8Rng) -> InitialData {
    InitialData {
        phi0: smooth_field(grid, rng, 0.2, 0.8),
        a0: smooth_field(grid, rng, 0.2, 0.6),
        n0: smooth_field(grid, rng, 0.1, 0.5),
        sigma0: smooth_field(grid, rng, 0.3, 0.9),
    }
}

pub fn time(nt: usize, flux: FluxScheme) -> TimeSettings {
    TimeSettings::new(0.5, nt, ModelSpec::default().pot.default_stabilization(), flux)
}

/// Tracking problem whose targets differ from the state generated by `u`.
pub fn tracking(grid: Grid, nt: usize, rng: &mut ChaCha8Rng) -> ControlSpec {
    let target = smooth_field(grid, rng, 0.3, 0.7);
    ControlSpec {
        b1: 1.0,
        b2: 1.0,
        b3: 1e-2,
        phi_q: vec![target.clone(); nt + 1],
        phi_omega: smooth_field(grid, rng, 0.3, 0.7),
        u_max: UpperBound::Scalar(2.0),
    }
}

pub mod ode {
    use chks_core::model::ModelSpec;
    use ode_solvers::{Dopri5, System, Vector4};

    /// Spatially homogeneous reduction `(phi, n, sigma, a)` with constant control.
    pub struct Homogeneous {
        pub spec: ModelSpec,
        pub u: f64,
    }

    impl System<f64, Vector4<f64>> for Homogeneous {
        fn system(&self, _t: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
            let s = &self.spec;
            let (phi, n, sigma, a) = (y[0], y[1], y[2], y[3]);
            dy[0] = -s.m * phi + s.prolif.h_value(phi);
            dy[1] = (s.chi_phi + s.c_phi) * phi + s.c_n * n + s.c_sigma * sigma + s.c0;
            dy[2] = 1.0 - sigma + a * (s.chi_a - sigma);
            dy[3] = a - a * a + self.u;
        }
    }

    pub fn solve(spec: ModelSpec, u: f64, y0: [f64; 4], t_final: f64) -> [f64; 4] {
        let mut stepper = Dopri5::new(
            Homogeneous { spec, u },
            0.0,
            t_final,
            // the dense-output sampling interval must stay below the accepted
            // step size for the interpolated end value to be accurate
            t_final / 1e4,
            Vector4::from(y0),
            1e-13,
            1e-14,
        );
        stepper.integrate().expect("reference integration failed");
        let y = stepper.y_out().last().unwrap();
        [y[0], y[1], y[2], y[3]]
    }
}

/// Level-wise `a - b - eps * c`.
pub fn remainder(a: &[Field], b: &[Field], c: Option<(&[Field], f64)>) -> Vec<Field> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| {
            let mut d = x - y;
            if let Some((l, eps)) = c {
                d.axpy(-eps, &l[k]);
            }
            d
        })
        .collect()
}

pub fn trajectory_distance(s1: &chks_core::state::StateTrajectory, s2: &chks_core::state::StateTrajectory) -> f64 {
    let d = [
        remainder(&s1.phi, &s2.phi, None),
        remainder(&s1.mu, &s2.mu, None),
        remainder(&s1.a, &s2.a, None),
        remainder(&s1.n, &s2.n, None),
        remainder(&s1.sigma, &s2.sigma, None),
    ];
    chks_core::state::dependence_norm([&d[0], &d[1], &d[2], &d[3], &d[4]], s1.tau)
}

/// Model with strong coupling from the control to the phase field.
pub fn strongly_coupled() -> ModelSpec {
    ModelSpec { chi_phi: 0.9, chi_a: 0.1, c_phi: 0.0, c_n: -1.0, c_sigma: 20.0, ..ModelSpec::default() }
}
