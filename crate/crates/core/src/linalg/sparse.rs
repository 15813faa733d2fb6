/// Compressed sparse row matrix. Column indices within a row are sorted.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for &j in self.row(i).0 {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn diagonal_index(&self, i: usize) -> Option<usize> {
        let (c, _) = self.row(i);
        c.binary_search(&i).ok().map(|k| self.row_ptr[i] + k)
    }

    pub(crate) fn raw(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }
}

/// Row-by-row builder; each row must be pushed in order.
#[derive(Debug, Default)]
pub struct CsrBuilder {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
            scratch: Vec::new(),
        }
    }

    /// Duplicate column entries are summed.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        if self.row_ptr.is_empty() {
            self.row_ptr.push(0);
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(entries);
        self.scratch.sort_by_key(|e| e.0);
        for &(c, v) in &self.scratch {
            match self.cols.last() {
                Some(&last) if last == c && self.cols.len() > *self.row_ptr.last().unwrap() => {
                    *self.vals.last_mut().unwrap() += v;
                }
                _ => {
                    self.cols.push(c);
                    self.vals.push(v);
                }
            }
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(mut self) -> CsrMatrix {
        if self.row_ptr.is_empty() {
            self.row_ptr.push(0);
        }
        CsrMatrix {
            n: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `||b - A x||_2 / ||b||_2`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}
