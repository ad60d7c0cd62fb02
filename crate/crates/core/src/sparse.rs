//! Compressed sparse rows, a direct LU wrapper and Krylov solvers.

use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from per-row entry lists; duplicate columns are summed and
    /// exact zeros dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut r in rows.into_iter() {
            r.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < r.len() {
                let c = r[k].0;
                let mut v = 0.0;
                while k < r.len() && r[k].0 == c {
                    v += r[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// Row `i` as an owned entry list.
    pub fn row_vec(&self, i: usize) -> Vec<(usize, f64)> {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied()).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                t.push(Triplet::new(i, j, a));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::SolverFailure {
                reason: format!("matrix conversion: {e:?}"),
                history: vec![],
            })
    }

    /// Coordinate triplets, one `row col value` line each (1-based, with a
    /// size header line).
    pub fn to_triplet_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                s.push_str(&format!("{} {} {:.17e}\n", i + 1, j + 1, a));
            }
        }
        s
    }
}

/// Sparse LU factorisation, reused across right-hand sides.
pub struct DirectSolver {
    lu: Lu<usize, f64>,
    n: usize,
}

impl DirectSolver {
    pub fn new(a: &Csr) -> Result<Self> {
        let m = a.to_faer()?;
        let lu = m.sp_lu().map_err(|e| Error::SolverFailure {
            reason: format!("sparse LU: {e:?}"),
            history: vec![],
        })?;
        Ok(Self { lu, n: a.nrows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        use faer::prelude::Solve;
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Incomplete LU with the sparsity pattern of `a`.
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self> {
        let mut lu = a.clone();
        let n = a.nrows;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            let (c, _) = lu.row(i);
            if let Ok(k) = c.binary_search(&i) {
                diag[i] = lu.indptr[i] + k;
            }
        }
        if diag.iter().any(|&d| d == usize::MAX) {
            return Err(Error::SolverFailure {
                reason: "ILU(0) needs a full diagonal".into(),
                history: vec![],
            });
        }
        for i in 1..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for kk in start..end {
                let k = lu.indices[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.data[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::SolverFailure {
                        reason: format!("ILU(0) zero pivot at row {k}"),
                        history: vec![],
                    });
                }
                let factor = lu.data[kk] / pivot;
                lu.data[kk] = factor;
                // subtract factor * U(k, j) for j > k present in row i
                let (ks, ke) = (diag[k] + 1, lu.indptr[k + 1]);
                let mut p = kk + 1;
                for q in ks..ke {
                    let j = lu.indices[q];
                    while p < end && lu.indices[p] < j {
                        p += 1;
                    }
                    if p < end && lu.indices[p] == j {
                        lu.data[p] -= factor * lu.data[q];
                    }
                }
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let (s, d) = (self.lu.indptr[i], self.diag[i]);
            let mut acc = y[i];
            for k in s..d {
                acc -= self.lu.data[k] * y[self.lu.indices[k]];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let (d, e) = (self.diag[i], self.lu.indptr[i + 1]);
            let mut acc = y[i];
            for k in (d + 1)..e {
                acc -= self.lu.data[k] * y[self.lu.indices[k]];
            }
            y[i] = acc / self.lu.data[d];
        }
        y
    }
}

/// Right-preconditioned BiCGStab. Returns the solution and the relative
/// residual history.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    precond: &Ilu0,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, vec![0.0]));
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = vec![1.0];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond.apply(&p);
        v = a.matvec(&ph);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            history.push(norm(&s) / bnorm);
            return Ok((x, history));
        }
        let sh = precond.apply(&s);
        let t = a.matvec(&sh);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel < tol {
            return Ok((x, history));
        }
        if omega == 0.0 {
            break;
        }
    }
    Err(Error::SolverFailure {
        reason: "BiCGStab did not converge".into(),
        history,
    })
}

/// Restarted GMRES for a matrix-free operator, modified Gram-Schmidt.
/// Returns solution, relative residual history and iteration count.
pub fn gmres(
    op: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], vec![0.0], 0));
    }
    let mut iters = 0;
    loop {
        let ax = op(&x);
        let r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta / bnorm < tol {
            return Ok((x, history, iters));
        }
        if iters >= max_iter {
            return Err(Error::SolverFailure {
                reason: "GMRES did not converge".into(),
                history,
            });
        }
        let m = restart;
        let mut vs: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..m {
            iters += 1;
            let mut w = op(&vs[k]);
            for (j, vj) in vs.iter().enumerate() {
                h[j][k] = dot(&w, vj);
                for i in 0..n {
                    w[i] -= h[j][k] * vj[i];
                }
            }
            h[k + 1][k] = norm(&w);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                k_done = k;
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            let hk1 = h[k + 1][k];
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_done = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            if rel < tol || iters >= max_iter || hk1 == 0.0 {
                break;
            }
            vs.push(w.iter().map(|v| v / hk1).collect());
        }
        // back substitution on the k_done x k_done triangle
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k_done {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * vs[j][i];
            }
        }
    }
}
