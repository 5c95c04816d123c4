//! Adaptive Dormand-Prince 4(5) integrator for the fundamental-solution system.
//!
//! The state is the 4-vector (C, C', S, S') of both fundamental solutions of
//! −ψ'' + W ψ = z ψ, advanced jointly so the Wronskian stays coherent.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-11;

type State = [Complex64; 4];

fn rhs(w_at_x: f64, z: Complex64, y: &State) -> State {
    let q = Complex64::new(w_at_x, 0.0) - z;
    [y[1], q * y[0], y[3], q * y[2]]
}

fn axpy(y: &State, h: f64, slopes: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in slopes {
        for i in 0..4 {
            out[i] += h * *c * k[i];
        }
    }
    out
}

/// Integrates the system from x = 0 to x = x_end with initial data
/// C(0)=1, C'(0)=0, S(0)=0, S'(0)=1, calling `w` for the potential.
///
/// Returns (C, C', S, S') at x_end.
pub fn integrate_fundamental(
    w: &dyn Fn(f64) -> f64,
    x_end: f64,
    z: Complex64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<State> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y: State = [one, zero, zero, one];
    if x_end == 0.0 {
        return Ok(y);
    }

    let mut x = 0.0f64;
    // initial step from the local frequency scale
    let freq = (z.norm() + w(0.0).abs()).sqrt().max(1.0);
    let mut h = (0.1 / freq).min(x_end);
    let h_min = x_end * 1e-14;
    let mut k1 = rhs(w(0.0), z, &y);
    let mut rejected_in_a_row = 0usize;

    while x < x_end {
        if h < h_min {
            return Err(Error::IntegratorFailure {
                residual: h,
                tol: h_min,
            });
        }
        if x + h > x_end {
            h = x_end - x;
        }

        let k2 = rhs(w(x + 0.2 * h), z, &axpy(&y, h, &[(0.2, &k1)]));
        let k3 = rhs(
            w(x + 0.3 * h),
            z,
            &axpy(&y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]),
        );
        let k4 = rhs(
            w(x + 0.8 * h),
            z,
            &axpy(
                &y,
                h,
                &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
            ),
        );
        let k5 = rhs(
            w(x + 8.0 / 9.0 * h),
            z,
            &axpy(
                &y,
                h,
                &[
                    (19372.0 / 6561.0, &k1),
                    (-25360.0 / 2187.0, &k2),
                    (64448.0 / 6561.0, &k3),
                    (-212.0 / 729.0, &k4),
                ],
            ),
        );
        let k6 = rhs(
            w(x + h),
            z,
            &axpy(
                &y,
                h,
                &[
                    (9017.0 / 3168.0, &k1),
                    (-355.0 / 33.0, &k2),
                    (46732.0 / 5247.0, &k3),
                    (49.0 / 176.0, &k4),
                    (-5103.0 / 18656.0, &k5),
                ],
            ),
        );
        let y5 = axpy(
            &y,
            h,
            &[
                (35.0 / 384.0, &k1),
                (500.0 / 1113.0, &k3),
                (125.0 / 192.0, &k4),
                (-2187.0 / 6784.0, &k5),
                (11.0 / 84.0, &k6),
            ],
        );
        let k7 = rhs(w(x + h), z, &y5);
        let y4 = axpy(
            &y,
            h,
            &[
                (5179.0 / 57600.0, &k1),
                (7571.0 / 16695.0, &k3),
                (393.0 / 640.0, &k4),
                (-92097.0 / 339200.0, &k5),
                (187.0 / 2100.0, &k6),
                (1.0 / 40.0, &k7),
            ],
        );

        let mut err = 0.0f64;
        for i in 0..4 {
            let scale = abs_tol + rel_tol * y5[i].norm().max(y[i].norm());
            err = err.max((y5[i] - y4[i]).norm() / scale);
        }

        if err <= 1.0 {
            x += h;
            y = y5;
            k1 = k7; // FSAL
            rejected_in_a_row = 0;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            rejected_in_a_row += 1;
            if rejected_in_a_row > 50 {
                return Err(Error::IntegratorFailure {
                    residual: err,
                    tol: 1.0,
                });
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_case_matches_closed_form() {
        let z = Complex64::new(3.0, 0.7);
        let l = 1.3;
        let y = integrate_fundamental(&|_| 0.0, l, z, 1e-13, 1e-12).unwrap();
        let sq = z.sqrt();
        let c = (sq * l).cos();
        let s = (sq * l).sin() / sq;
        assert!((y[0] - c).norm() < 1e-10);
        assert!((y[2] - s).norm() < 1e-10);
        assert!((y[1] + z * s).norm() < 1e-10);
        assert!((y[3] - c).norm() < 1e-10);
    }

    #[test]
    fn wronskian_conserved_with_potential() {
        let z = Complex64::new(-2.0, 0.3);
        let w = |x: f64| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos();
        let y = integrate_fundamental(&w, 1.0, z, 1e-13, 1e-12).unwrap();
        let wr = y[0] * y[3] - y[1] * y[2];
        assert!((wr - Complex64::new(1.0, 0.0)).norm() < 1e-11);
    }
}
