//! Independent reference computations used to cross-check the transform
//! route: a power-series matrix exponential, an adaptive Runge-Kutta
//! integrator and the characteristic function of the boundary problem.

use crate::error::{Error, Result};
use crate::linalg::{c64, vec_norm, CMatrix, CVector, C64, I};
use crate::potential::{BoundaryCondition, PotentialSpec};

/// `exp(M)` summed term by term until the terms stop mattering, with at
/// least 30 terms. Only sensible for moderate `||M||`.
pub fn series_exp(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    let mut k = 1usize;
    loop {
        term = &term * m / C64::from(k as f64);
        sum += &term;
        let small = term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18;
        if k >= 30 && small {
            return sum;
        }
        k += 1;
        if k > 400 {
            return sum;
        }
    }
}

/// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 2_000_000 }
    }
}

/// Integrates `z' = G z` from `0` to each requested time (ascending, all of
/// one sign) with step-size control on the embedded error estimate.
pub fn integrate_linear(g: &CMatrix, z0: &CVector, times: &[f64], opts: &OdeOptions) -> Result<Vec<CVector>> {
    let h0 = 0.01 / crate::linalg::frobenius(g).max(1e-300);
    integrate(|_, z| g * z, z0, times, h0, opts)
}

/// Integrates `z' = f(t, z)` from `0` to each requested time (ascending,
/// all of one sign), starting with step `h0`.
pub fn integrate<F>(f: F, z0: &CVector, times: &[f64], h0: f64, opts: &OdeOptions) -> Result<Vec<CVector>>
where
    F: Fn(f64, &CVector) -> CVector,
{
    let mut out = Vec::with_capacity(times.len());
    let mut z = z0.clone();
    let mut t = 0.0;
    let dir = if times.last().copied().unwrap_or(0.0) < 0.0 { -1.0 } else { 1.0 };
    let mut h = dir * h0.max(1e-12);
    let mut k1 = f(t, &z);
    let mut steps = 0usize;
    for &target in times {
        while (target - t) * dir > 0.0 {
            if (t + h - target) * dir > 0.0 {
                h = target - t;
            }
            let mut k: Vec<CVector> = Vec::with_capacity(7);
            k.push(k1.clone());
            for s in 1..7 {
                let mut y = z.clone();
                for (j, kj) in k.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        y.axpy(C64::from(h * A[s][j]), kj, C64::from(1.0));
                    }
                }
                k.push(f(t + C[s] * h, &y));
            }
            let mut z5 = z.clone();
            let mut err = CVector::zeros(z.len());
            for s in 0..7 {
                if B5[s] != 0.0 {
                    z5.axpy(C64::from(h * B5[s]), &k[s], C64::from(1.0));
                }
                let e = B5[s] - B4[s];
                if e != 0.0 {
                    err.axpy(C64::from(h * e), &k[s], C64::from(1.0));
                }
            }
            let scale = opts.atol + opts.rtol * vec_norm(&z).max(vec_norm(&z5));
            let ratio = vec_norm(&err) / scale;
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NoConvergence { iterations: steps, last_step: h.abs(), ratio });
            }
            if ratio <= 1.0 {
                t += h;
                z = z5;
                // FSAL: the seventh stage is f at the accepted point
                k1 = k.pop().unwrap();
            }
            let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        out.push(z.clone());
    }
    Ok(out)
}

/// Fundamental matrix at `t = omega` of `i diag(1, -1) y' - P y = lambda y`,
/// with `Y(0) = I`, integrated directly from the potential.
pub fn monodromy(spec: &PotentialSpec, lambda: C64, opts: &OdeOptions) -> Result<CMatrix> {
    let omega = spec.omega;
    let rhs = |t: f64, y: &CVector| {
        let p: [C64; 4] = std::array::from_fn(|j| spec.p[j].eval(omega, t));
        let a = (lambda + p[0]) * y[0] + p[1] * y[1];
        let b = p[2] * y[0] + (lambda + p[3]) * y[1];
        CVector::from_vec(vec![-I * a, I * b])
    };
    let h0 = 0.01 / (1.0 + lambda.norm());
    let mut m = CMatrix::zeros(2, 2);
    for col in 0..2 {
        let mut e = CVector::zeros(2);
        e[col] = c64(1.0, 0.0);
        let y = integrate(rhs, &e, &[omega], h0, opts)?.pop().unwrap();
        m.set_column(col, &y);
    }
    Ok(m)
}

/// Vanishes exactly at the eigenvalues: `det(M - I)` (per), `det(M + I)`
/// (ap), or `y1(omega) - y2(omega)` for `y(0) = (1, 1)` (dir).
pub fn characteristic(spec: &PotentialSpec, lambda: C64, opts: &OdeOptions) -> Result<C64> {
    let m = monodromy(spec, lambda, opts)?;
    let one = c64(1.0, 0.0);
    Ok(match spec.bc {
        BoundaryCondition::Per => (m[(0, 0)] - one) * (m[(1, 1)] - one) - m[(0, 1)] * m[(1, 0)],
        BoundaryCondition::Ap => (m[(0, 0)] + one) * (m[(1, 1)] + one) - m[(0, 1)] * m[(1, 0)],
        BoundaryCondition::Dir => m[(0, 0)] + m[(0, 1)] - m[(1, 0)] - m[(1, 1)],
    })
}

/// A root of [`characteristic`] near `guess`, by the secant method.
/// Simple roots converge to the integrator's accuracy; the step stops once
/// it falls below `1e-13 (1 + |guess|)`.
pub fn characteristic_root(spec: &PotentialSpec, guess: C64, opts: &OdeOptions) -> Result<C64> {
    let tol = 1e-13 * (1.0 + guess.norm());
    let (mut x0, mut x1) = (guess, guess + c64(1e-4, 1e-4));
    let (mut f0, mut f1) = (characteristic(spec, x0, opts)?, characteristic(spec, x1, opts)?);
    for it in 0..60 {
        if f1 == f0 {
            return Ok(x1);
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        let step = (x2 - x1).norm();
        (x0, f0) = (x1, f1);
        x1 = x2;
        if step < tol {
            return Ok(x1);
        }
        f1 = characteristic(spec, x1, opts)?;
        if it == 59 {
            return Err(Error::NoConvergence { iterations: 60, last_step: step, ratio: f1.norm() });
        }
    }
    Ok(x1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, expm, frobenius};

    #[test]
    fn series_agrees_with_scaling_and_squaring() {
        let m = CMatrix::from_fn(4, 4, |i, j| c64(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64));
        assert!(frobenius(&(series_exp(&m) - expm(&m))) < 1e-14);
    }

    #[test]
    fn integrator_tracks_a_rotation() {
        let g = CMatrix::from_row_slice(2, 2, &[c64(0.0, 1.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, -2.0)]);
        let z0 = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.5, 0.0)]);
        let zs = integrate_linear(&g, &z0, &[1.0, 3.0], &OdeOptions::default()).unwrap();
        let exact = c64(0.0, 3.0).exp();
        assert!((zs[1][0] - exact).norm() < 1e-10);
        assert!((zs[1][1] - c64(0.0, -6.0).exp() * 0.5).norm() < 1e-10);
    }

    #[test]
    fn free_dirichlet_roots_sit_on_the_ladder() {
        let spec = PotentialSpec::zero(2.0 * std::f64::consts::PI, BoundaryCondition::Dir);
        let opts = OdeOptions::default();
        let z = characteristic_root(&spec, c64(1.55, 0.05), &opts).unwrap();
        assert!((z - c64(1.5, 0.0)).norm() < 1e-10, "{z}");
    }
}
