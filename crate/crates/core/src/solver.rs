//! Krylov solvers with Jacobi preconditioning.

use rayon::prelude::*;

use crate::assembly::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `|b - Ax| / |b|` at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Block size of the parallel reductions; fixed so that sums do not depend
/// on scheduling.
const CHUNK: usize = 4096;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// `b - A x` and its norm relative to `|b|`.
fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], bnorm: f64) -> (Vec<f64>, f64) {
    let mut r = a.mul_vec(x);
    r.par_iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let res = norm(&r) / bnorm;
    (r, res)
}

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d == 0.0 || !d.is_finite() {
                Err(Error::invalid(format!(
                    "zero or non-finite diagonal entry in row {i}"
                )))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

fn check_dims(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.nrows != b.len() {
        return Err(Error::invalid(format!(
            "matrix has {} rows but right-hand side has {} entries",
            a.nrows,
            b.len()
        )));
    }
    Ok(())
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
    check_dims(a, b)?;
    let n = b.len();
    let bnorm = norm(b);
    if n == 0 || bnorm == 0.0 {
        return Ok(SolveOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dinv = inverse_diagonal(a)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        res = norm(&r) / bnorm;
        let mut restart = false;
        if res <= opts.tol {
            let (tr, tres) = true_residual(a, b, &x, bnorm);
            if tres <= opts.tol {
                return Ok(SolveOutcome {
                    x,
                    iterations: it,
                    relative_residual: tres,
                });
            }
            r = tr;
            res = tres;
            restart = true;
        }
        z.par_iter_mut()
            .zip(&r)
            .zip(&dinv)
            .for_each(|((z, r), d)| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = if restart { 0.0 } else { rz_new / rz };
        rz = rz_new;
        p.par_iter_mut()
            .zip(&z)
            .for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}

/// Right-preconditioned BiCGStab for general `a`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
    check_dims(a, b)?;
    let n = b.len();
    let bnorm = norm(b);
    if n == 0 || bnorm == 0.0 {
        return Ok(SolveOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dinv = inverse_diagonal(a)?;
    let precond = |v: &[f64], out: &mut [f64]| {
        out.par_iter_mut()
            .zip(v)
            .zip(&dinv)
            .for_each(|((o, v), d)| *o = v * d);
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = 1.0;
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            let (tr, _) = true_residual(a, b, &x, bnorm);
            restart(
                tr, &mut r, &mut r_hat, &mut rho, &mut alpha, &mut omega, &mut v, &mut p,
            );
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(&r)
            .zip(&v)
            .for_each(|((p, r), v)| *p = r + beta * (*p - omega * v));
        precond(&p, &mut y);
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            let (tr, _) = true_residual(a, b, &x, bnorm);
            restart(
                tr, &mut r, &mut r_hat, &mut rho, &mut alpha, &mut omega, &mut v, &mut p,
            );
            continue;
        }
        alpha = rho / rv;
        s.par_iter_mut()
            .zip(&r)
            .zip(&v)
            .for_each(|((s, r), v)| *s = r - alpha * v);
        axpy(alpha, &y, &mut x);
        res = norm(&s) / bnorm;
        if res <= opts.tol {
            let (tr, tres) = true_residual(a, b, &x, bnorm);
            if tres <= opts.tol {
                return Ok(SolveOutcome {
                    x,
                    iterations: it,
                    relative_residual: tres,
                });
            }
            restart(
                tr, &mut r, &mut r_hat, &mut rho, &mut alpha, &mut omega, &mut v, &mut p,
            );
            res = tres;
            continue;
        }
        precond(&s, &mut zs);
        a.mul_vec_into(&zs, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        axpy(omega, &zs, &mut x);
        r.par_iter_mut()
            .zip(&s)
            .zip(&t)
            .for_each(|((r, s), t)| *r = s - omega * t);
        res = norm(&r) / bnorm;
        if res <= opts.tol {
            let (tr, tres) = true_residual(a, b, &x, bnorm);
            if tres <= opts.tol {
                return Ok(SolveOutcome {
                    x,
                    iterations: it,
                    relative_residual: tres,
                });
            }
            restart(
                tr, &mut r, &mut r_hat, &mut rho, &mut alpha, &mut omega, &mut v, &mut p,
            );
            res = tres;
        } else if omega == 0.0 {
            let (tr, _) = true_residual(a, b, &x, bnorm);
            restart(
                tr, &mut r, &mut r_hat, &mut rho, &mut alpha, &mut omega, &mut v, &mut p,
            );
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}

/// Resets the BiCGStab recurrences from the true residual `tr`.
#[allow(clippy::too_many_arguments)]
fn restart(
    tr: Vec<f64>,
    r: &mut Vec<f64>,
    r_hat: &mut Vec<f64>,
    rho: &mut f64,
    alpha: &mut f64,
    omega: &mut f64,
    v: &mut [f64],
    p: &mut [f64],
) {
    *r_hat = tr.clone();
    *r = tr;
    *rho = 1.0;
    *alpha = 1.0;
    *omega = 1.0;
    v.fill(0.0);
    p.fill(0.0);
}

/// Conjugate gradients when `symmetric`, BiCGStab otherwise.
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    symmetric: bool,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    if symmetric {
        conjugate_gradient(a, b, opts)
    } else {
        bicgstab(a, b, opts)
    }
}
