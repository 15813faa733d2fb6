//! Preconditioned BiCGStab for nonsymmetric sparse systems.

use super::sparse::{dot, norm2, CsrMatrix};

/// Incomplete LU with zero fill on the sparsity pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let (row_ptr, cols, vals) = a.raw();
        let n = a.n();
        let mut vals = vals.to_vec();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            diag.push(a.diagonal_index(i)?);
        }
        // Position of column j in the current row, or usize::MAX.
        let mut where_ = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                where_[cols[p]] = p;
            }
            for p in start..end {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let dk = vals[diag[k]];
                if dk == 0.0 {
                    return None;
                }
                let m = vals[p] / dk;
                vals[p] = m;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let w = where_[cols[q]];
                    if w != usize::MAX {
                        vals[w] -= m * vals[q];
                    }
                }
            }
            for p in start..end {
                where_[cols[p]] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Self {
            row_ptr: row_ptr.to_vec(),
            cols: cols.to_vec(),
            vals,
            diag,
        })
    }

    /// `z = (LU)^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.vals[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Right-preconditioned BiCGStab. `x` holds the initial guess on entry.
/// Convergence is measured by the true-recurrence residual relative to `||b||`.
pub fn bicgstab(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovOutcome {
    let n = b.len();
    let nb = norm2(b);
    if nb == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut r = a.matvec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r) / nb;
    if res <= tol {
        return KrylovOutcome {
            iterations: 0,
            residual: res,
            converged: true,
        };
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return KrylovOutcome {
                iterations: it,
                residual: res,
                converged: false,
            };
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        // r becomes s
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        let s_norm = norm2(&r) / nb;
        if s_norm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return KrylovOutcome {
                iterations: it,
                residual: s_norm,
                converged: true,
            };
        }
        pre.apply(&r, &mut s_hat);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        res = norm2(&r) / nb;
        if res <= tol {
            return KrylovOutcome {
                iterations: it,
                residual: res,
                converged: true,
            };
        }
    }
    KrylovOutcome {
        iterations: max_iter,
        residual: res,
        converged: false,
    }
}
