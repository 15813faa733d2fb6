//! Banded LU factorization with partial pivoting.
//!
//! Rows are stored in slots of width `2 kl + ku + 1` covering columns
//! `[i - kl, i + kl + ku]`, enough to hold the fill produced by row
//! interchanges. Multipliers are kept separately in interleaved form, so the
//! forward solve applies interchange `k` and elimination `k` alternately.

use super::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    upper: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Storage in f64 words needed to factor a matrix of this shape.
    pub fn storage_words(n: usize, kl: usize, ku: usize) -> usize {
        n * (2 * kl + ku + 1) + n * kl
    }

    /// Returns `None` if a pivot column is entirely zero.
    pub fn factor(a: &CsrMatrix) -> Option<Self> {
        let n = a.n();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut upper = vec![0.0; n * width];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                upper[i * width + (j + kl - i)] += v;
            }
        }
        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        let at = |slot: usize, col: usize| slot * width + (col + kl - slot);

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = upper[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = upper[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            pivots[k] = p;
            if p != k {
                let len = last_col - k + 1;
                let (ka, pa) = (at(k, k), at(p, k));
                for c in 0..len {
                    upper.swap(ka + c, pa + c);
                }
            }
            let piv = upper[at(k, k)];
            let row_k_start = at(k, k);
            let len = last_col - k;
            for i in k + 1..=last_row {
                let ik = at(i, k);
                let m = upper[ik] / piv;
                lower[k * kl + (i - k - 1)] = m;
                upper[ik] = 0.0;
                if m != 0.0 {
                    // Row slots never overlap, so split the buffer to borrow both.
                    let (head, tail) = upper.split_at_mut(ik);
                    let src = &head[row_k_start + 1..row_k_start + 1 + len];
                    let dst = &mut tail[1..1 + len];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= m * s;
                    }
                }
            }
        }
        Some(Self {
            n,
            kl,
            ku,
            width,
            upper,
            lower,
            pivots,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last_row = (k + kl).min(n - 1);
                for i in k + 1..=last_row {
                    b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = &self.upper[k * w..(k + 1) * w];
            let last_col = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=last_col {
                s -= row[j + kl - k] * b[j];
            }
            b[k] = s / row[kl];
        }
    }
}
