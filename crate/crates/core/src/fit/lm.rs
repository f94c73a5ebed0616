//! Box-constrained Levenberg–Marquardt on a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

const XTOL: f64 = 1e-10;
const FTOL: f64 = 1e-15;
const LAMBDA_MAX: f64 = 1e16;

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub n_eval: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial cost.
    pub trace: Vec<f64>,
}

pub(crate) type ResidualFn<'a, E> = dyn Fn(&[f64]) -> Result<Vec<f64>, E> + Sync + 'a;

pub(crate) struct Problem<'a, E> {
    /// Weighted residual vector `√w_i (model_i - y_i)`.
    pub residuals: &'a ResidualFn<'a, E>,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub typical: &'a [f64],
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

impl<E> Problem<'_, E> {
    pub fn step_size(&self, x: &[f64], i: usize) -> f64 {
        1e-6 * x[i].abs().max(self.typical[i])
    }

    /// Central-difference Jacobian of the residuals, shifting the stencil
    /// inward where a bound would be crossed.
    pub fn jacobian(&self, x: &[f64], rel_step: f64) -> Result<(DMatrix<f64>, usize), E> {
        let base_h: Vec<f64> = (0..x.len()).map(|i| self.step_size(x, i) * rel_step / 1e-6).collect();
        let mut columns = Vec::with_capacity(x.len());
        for (i, &h) in base_h.iter().enumerate() {
            let (mut lo, mut hi) = (x[i] - h, x[i] + h);
            if lo < self.lower[i] {
                lo = self.lower[i];
                hi = lo + 2.0 * h;
            } else if hi > self.upper[i] {
                hi = self.upper[i];
                lo = hi - 2.0 * h;
            }
            let mut xp = x.to_vec();
            xp[i] = hi;
            let rp = (self.residuals)(&xp)?;
            xp[i] = lo;
            let rm = (self.residuals)(&xp)?;
            let span = hi - lo;
            columns.push(DVector::from_iterator(
                rp.len(),
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / span),
            ));
        }
        let n = columns.first().map_or(0, |c| c.len());
        let jac = if columns.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&columns)
        };
        Ok((jac, 2 * x.len()))
    }

    fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn minimize(&self, x0: &[f64], max_eval: usize) -> Result<Outcome, E> {
        let mut x = x0.to_vec();
        self.clamp(&mut x);
        let mut r = (self.residuals)(&x)?;
        let mut f = cost(&r);
        let mut n_eval = 1;
        let mut trace = vec![f];
        let mut lambda = 1e-3;
        let p = x.len();

        if p == 0 || f == 0.0 {
            return Ok(Outcome {
                x,
                cost: f,
                n_eval,
                converged: true,
                trace,
            });
        }

        loop {
            if n_eval >= max_eval {
                return Ok(Outcome {
                    x,
                    cost: f,
                    n_eval,
                    converged: false,
                    trace,
                });
            }
            let (jac, used) = self.jacobian(&x, 1e-6)?;
            n_eval += used;
            let a = jac.transpose() * &jac;
            let g = jac.transpose() * DVector::from_column_slice(&r);
            let max_diag = a.diagonal().max();
            let diag: Vec<f64> = a
                .diagonal()
                .iter()
                .map(|d| d.max(1e-12 * max_diag).max(1e-300))
                .collect();

            let mut accepted = false;
            while lambda <= LAMBDA_MAX {
                let mut m = a.clone();
                for (i, d) in diag.iter().enumerate() {
                    m[(i, i)] += lambda * d;
                }
                let Some(delta) = m.cholesky().map(|c| c.solve(&(-&g))) else {
                    lambda *= 4.0;
                    continue;
                };
                let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
                self.clamp(&mut trial);
                let rt = (self.residuals)(&trial)?;
                n_eval += 1;
                let ft = cost(&rt);
                if ft < f {
                    let small_step = trial
                        .iter()
                        .zip(&x)
                        .all(|(t, v)| (t - v).abs() <= XTOL * (v.abs() + XTOL));
                    let small_drop = (f - ft) <= FTOL * f;
                    x = trial;
                    r = rt;
                    f = ft;
                    trace.push(f);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if small_step || small_drop || f == 0.0 {
                        return Ok(Outcome {
                            x,
                            cost: f,
                            n_eval,
                            converged: true,
                            trace,
                        });
                    }
                    break;
                }
                lambda *= 4.0;
                if n_eval >= max_eval {
                    break;
                }
            }
            if !accepted && lambda > LAMBDA_MAX {
                // No descent direction at machine precision: a stationary point.
                return Ok(Outcome {
                    x,
                    cost: f,
                    n_eval,
                    converged: true,
                    trace,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn rosenbrock_minimum() {
        let res = |x: &[f64]| -> Result<Vec<f64>, Infallible> { Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]) };
        let p = Problem {
            residuals: &res,
            lower: &[-5.0, -5.0],
            upper: &[5.0, 5.0],
            typical: &[1.0, 1.0],
        };
        let out = p.minimize(&[-1.2, 1.0], 10_000).unwrap();
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
        assert!(out.trace.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn respects_bounds() {
        let res = |x: &[f64]| -> Result<Vec<f64>, Infallible> { Ok(vec![x[0] - 3.0]) };
        let p = Problem {
            residuals: &res,
            lower: &[0.0],
            upper: &[1.0],
            typical: &[1.0],
        };
        let out = p.minimize(&[0.5], 1000).unwrap();
        assert_eq!(out.x[0], 1.0);
    }
}
