//! BFGS with central-difference gradients and a backtracking Armijo line
//! search.

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Largest coordinate change attempted by a single line search.
const MAX_STEP: f64 = 5.0;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central-difference gradient with step 1e-7·max(1, |x_i|).
pub fn gradient<F>(f: &F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = 1e-7 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Hessian with step `rel`·max(1, |x_i|).
pub fn hessian<F>(f: &F, x: &[f64], rel: f64) -> Result<nalgebra::DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| rel * v.abs().max(1.0)).collect();
    let f0 = f(x)?;
    let mut probe = x.to_vec();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        probe[i] = x[i] + h[i];
        let up = f(&probe)?;
        probe[i] = x[i] - h[i];
        let down = f(&probe)?;
        probe[i] = x[i];
        m[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * h[i];
                probe[j] = x[j] + sj * h[j];
                let v = f(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Minimizes `f` from `x0`. Errors from `f` abort the search; callers map
/// recoverable failures to a large finite value before they get here.
pub fn minimize<F>(f: F, x0: &[f64], tol: &Tolerances) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut g = gradient(&f, &x)?;
    let mut h_inv = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= tol.gradient_tolerance;
    let mut fresh = true;

    while !converged && iterations < tol.max_iterations {
        iterations += 1;
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut p = -(&h_inv * &gv);
        if p.dot(&gv) >= 0.0 {
            h_inv.fill_with_identity();
            p = -gv.clone();
            fresh = true;
        }
        let slope = p.dot(&gv);
        let mut alpha = (MAX_STEP / p.amax()).min(1.0);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(xi, pi)| xi + alpha * pi).collect();
            let ft = f(&trial)?;
            if ft.is_finite() && ft <= fx + ARMIJO * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                // steepest descent cannot make progress either
                break;
            }
            h_inv.fill_with_identity();
            fresh = true;
            continue;
        };
        let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let g_new = gradient(&f, &x_new)?;
        let s = nalgebra::DVector::from_vec(step.clone());
        let y = nalgebra::DVector::from_iterator(n, g_new.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h_inv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H ← H − ρ(H y s' + s y' H) + (ρ² y'Hy + ρ) s s'
            h_inv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        converged = inf_norm(&g) <= tol.gradient_tolerance || inf_norm(&step) <= tol.step_tolerance;
    }
    Ok(Minimum { gradient_norm: inf_norm(&g), x, value: fx, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances { max_iterations: 500, gradient_tolerance: 1e-6, step_tolerance: 1e-12 }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let m = minimize(f, &[-1.2, 1.0], &tol()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn quadratic_hessian() {
        let f = |x: &[f64]| Ok(2.0 * x[0] * x[0] + x[0] * x[1] + 3.0 * x[1] * x[1]);
        let h = hessian(&f, &[0.3, -0.7], 1e-4).unwrap();
        assert!((h[(0, 0)] - 4.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn already_optimal_start() {
        let f = |x: &[f64]| Ok(x[0] * x[0]);
        let m = minimize(f, &[0.0], &tol()).unwrap();
        assert!(m.converged);
        assert_eq!(m.iterations, 0);
    }
}
