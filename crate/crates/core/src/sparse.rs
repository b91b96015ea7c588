//! Compressed sparse row matrices and the Krylov solvers used on them.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij − a_ji| / max |a_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                } else if j < i && self.get(j, i) == 0.0 && v != 0.0 {
                    worst = worst.max(v.abs());
                }
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// True when the sparsity pattern is symmetric.
    pub fn pattern_is_symmetric(&self) -> bool {
        (0..self.nrows).all(|i| {
            self.row(i).all(|(j, _)| {
                let range = self.row_ptr[j]..self.row_ptr[j + 1];
                self.col_idx[range].binary_search(&i).is_ok()
            })
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Matrix Market coordinate format (one-based indices).
    pub fn write_matrix_market(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub method: &'static str,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn jacobi(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d == 0.0 || !d.is_finite() {
                Err(Error::SolverBreakdown(format!("zero or non-finite diagonal entry in row {i}")))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients; fails on loss of positive definiteness.
///
/// Convergence is measured in the preconditioned norm `sqrt(rᵀD⁻¹r)`, which
/// weighs rows of low- and high-coefficient regions evenly.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.nrows;
    let inv_diag = jacobi(a)?;
    if inv_diag.iter().any(|d| *d < 0.0) {
        return Err(Error::SolverBreakdown("negative diagonal entry; the matrix is not positive definite".into()));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let b_norm = rz.sqrt();
    if b_norm == 0.0 {
        return Ok((x, SolveStats { method: "cg", iterations: 0, relative_residual: 0.0 }));
    }
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverBreakdown(format!(
                "conjugate gradients found pᵀAp = {pap:e} at iteration {it}; the matrix is not positive definite (try a larger sigma0)"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let rel = rz_new.max(0.0).sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, SolveStats { method: "cg", iterations: it, relative_residual: rel }));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        what: "conjugate gradients",
        iterations: max_iter,
    })
}

/// MINRES for symmetric, possibly indefinite systems, preconditioned by `|diag|`.
///
/// Stops on the same preconditioned residual measure as [`conjugate_gradient`].
/// The recurrence residual drifts from the true one on ill-conditioned systems,
/// so up to two correction passes are run on the recomputed residual.
pub fn minres(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.nrows;
    let inv_diag: Vec<f64> = jacobi(a)?.into_iter().map(f64::abs).collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let beta1 = dot(b, &precond(b)).sqrt();
    if beta1 == 0.0 {
        return Ok((vec![0.0; n], SolveStats { method: "minres", iterations: 0, relative_residual: 0.0 }));
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let mut ax = vec![0.0; n];
        a.mul_vec(x, &mut ax);
        b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
    };
    let (mut x, mut iterations) = minres_pass(a, b, &inv_diag, tol, max_iter)?;
    let mut res = residual(&x);
    let mut rel = dot(&res, &precond(&res)).sqrt() / beta1;
    for _ in 0..2 {
        if rel <= tol {
            break;
        }
        let (dx, it) = minres_pass(a, &res, &inv_diag, tol, max_iter)?;
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
        let cand_res = residual(&candidate);
        let cand_rel = dot(&cand_res, &precond(&cand_res)).sqrt() / beta1;
        iterations += it;
        if cand_rel >= rel {
            break;
        }
        (x, res, rel) = (candidate, cand_res, cand_rel);
    }
    Ok((x, SolveStats { method: "minres", iterations, relative_residual: rel }))
}

/// One run of the Paige–Saunders recurrence; returns the iterate and iteration count.
fn minres_pass(a: &CsrMatrix, b: &[f64], inv_diag: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.nrows;
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(inv_diag).map(|(a, d)| a * d).collect() };
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = r1.clone();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 {
        return Ok((x, 0));
    }
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for it in 1..=max_iter {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.mul_vec(&v, &mut y);
        if it >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        y = precond(&r2);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::SolverBreakdown("MINRES preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar / beta1 <= tol || beta == 0.0 {
            return Ok((x, it));
        }
    }
    Err(Error::NoConvergence {
        what: "MINRES",
        iterations: max_iter,
    })
}

/// Jacobi-preconditioned BiCGSTAB for nonsymmetric systems.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.nrows;
    let inv_diag = jacobi(a)?;
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, SolveStats { method: "bicgstab", iterations: 0, relative_residual: 0.0 }));
    }
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::SolverBreakdown(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        a.mul_vec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            return Err(Error::SolverBreakdown(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / b_norm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            let rel = norm(&s) / b_norm;
            return Ok((x, SolveStats { method: "bicgstab", iterations: it, relative_residual: rel }));
        }
        let s_hat = precond(&s);
        a.mul_vec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok((x, SolveStats { method: "bicgstab", iterations: it, relative_residual: rel }));
        }
    }
    Err(Error::NoConvergence {
        what: "BiCGSTAB",
        iterations: max_iter,
    })
}

/// Dense LU with partial pivoting and two steps of iterative refinement.
pub fn dense_lu(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    let dense = a.to_dense();
    let rhs = DVector::from_column_slice(b);
    let lu = dense.clone().lu();
    let singular = || Error::SolverBreakdown("dense LU found a singular matrix".into());
    let mut x = lu.solve(&rhs).ok_or_else(singular)?;
    for _ in 0..2 {
        let r = &rhs - &dense * &x;
        x += lu.solve(&r).ok_or_else(singular)?;
    }
    let b_norm = rhs.norm();
    let rel = if b_norm == 0.0 { 0.0 } else { (&dense * &x - &rhs).norm() / b_norm };
    Ok((x.as_slice().to_vec(), SolveStats { method: "dense-lu", iterations: 1, relative_residual: rel }))
}
