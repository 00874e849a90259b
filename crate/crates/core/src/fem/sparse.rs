//! Compressed sparse row matrices and a symmetric-Gauss-Seidel
//! preconditioned conjugate gradient. Deterministic: fixed assembly and
//! sweep order, no threading.

use crate::error::FemError;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[idx] * x[self.col[idx]];
            }
            out[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec(x, &mut out);
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col[idx] == j {
                return self.val[idx];
            }
        }
        0.0
    }

    /// Largest entry mismatch against the transpose, relative to the
    /// largest entry; 0 for exactly symmetric.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                scale = scale.max(self.val[idx].abs());
                worst = worst.max((self.val[idx] - self.get(self.col[idx], i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col[idx])] = self.val[idx];
            }
        }
        m
    }
}

/// Triplet accumulator; duplicate entries sum on conversion.
#[derive(Debug, Clone)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut sorted = self.entries.clone();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut val: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut current_row = 0usize;
        for (i, j, v) in sorted {
            while current_row < i {
                current_row += 1;
                row_ptr[current_row] = col.len();
            }
            if col.len() > row_ptr[i] && *col.last().unwrap() == j {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
            }
        }
        while current_row < self.n {
            current_row += 1;
            row_ptr[current_row] = col.len();
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col,
            val,
        }
    }
}

/// Symmetric Gauss-Seidel preconditioner M = (D+L) D⁻¹ (D+U) applied via
/// forward then backward sweeps over the CSR structure.
struct SgsPreconditioner<'a> {
    a: &'a CsrMatrix,
    diag: Vec<f64>,
}

impl<'a> SgsPreconditioner<'a> {
    fn new(a: &'a CsrMatrix) -> Self {
        let mut diag = vec![0.0; a.n];
        for i in 0..a.n {
            for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.col[idx] == i {
                    diag[i] = a.val[idx];
                }
            }
        }
        Self { a, diag }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let a = self.a;
        // (D+L) y = r
        for i in 0..a.n {
            let mut acc = r[i];
            for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col[idx];
                if j < i {
                    acc -= a.val[idx] * z[j];
                }
            }
            z[i] = acc / self.diag[i];
        }
        // z := D y, then (D+U) z = D y
        for i in 0..a.n {
            z[i] *= self.diag[i];
        }
        for i in (0..a.n).rev() {
            let mut acc = z[i];
            for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col[idx];
                if j > i {
                    acc -= a.val[idx] * z[j];
                }
            }
            z[i] = acc / self.diag[i];
        }
    }
}

/// Preconditioned conjugate gradient to a relative residual `tol`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize), FemError> {
    let n = a.n;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], 0.0, 0));
    }
    let precond = SgsPreconditioner::new(a);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for iter in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(FemError::SolverDiverged {
                residual: f64::NAN,
                iterations: iter,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let norm_r = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_r <= tol * norm_b {
            return Ok((x, norm_r / norm_b, iter + 1));
        }
        precond.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let norm_r = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(FemError::SolverDiverged {
        residual: norm_r / norm_b,
        iterations: max_iter,
    })
}
