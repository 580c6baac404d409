#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chks::{load_config, parse_config, RunConfig};

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn bundled(name: &str) -> RunConfig {
    let path = configs_dir().join(name);
    load_config(&path, None).unwrap_or_else(|e| panic!("{e}"))
}

/// Parses configuration text as if it lived next to the bundled configs.
pub fn inline(text: &str) -> RunConfig {
    parse_config(text, &configs_dir().join("inline.toml"), None).unwrap_or_else(|e| panic!("{e}"))
}

/// Every regular file below `dir`, sorted, with its contents.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

pub mod ode {
    use chks_core::model::ModelSpec;
    use ode_solvers::{Dopri5, System, Vector4};

    /// Spatially homogeneous reduction `(phi, n, sigma, a)` with constant control.
    struct Homogeneous {
        spec: ModelSpec,
        u: f64,
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
        // the dense-output interval must stay below the accepted step size for
        // the interpolated end value to be accurate
        let mut stepper =
            Dopri5::new(Homogeneous { spec, u }, 0.0, t_final, t_final / 1e4, Vector4::from(y0), 1e-13, 1e-14);
        stepper.integrate().expect("reference integration failed");
        let y = stepper.y_out().last().unwrap();
        [y[0], y[1], y[2], y[3]]
    }
}
