//! Unconstrained sparse solves on the free dofs: banded LU with partial
//! pivoting after reverse Cuthill–McKee reordering, or ILU(0)-preconditioned
//! BiCGSTAB for very large systems.

use std::collections::VecDeque;

use crate::error::SolveError;
use crate::mesh2d::NodalTensorField;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tensor3::SymTensor3;

/// Dof count above which [`LinearMethod::Auto`] switches to the Krylov path.
pub const DIRECT_LIMIT: usize = 200_000;
/// Relative residual required from every solve.
pub const LINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearMethod {
    #[default]
    Auto,
    Direct,
    Krylov,
}

/// A factorization of `A` restricted to the free dofs, reusable across
/// right-hand sides and time steps.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    a: CsrMatrix,
    fixed: Vec<bool>,
    free: Vec<usize>,
    backend: Backend,
}

#[derive(Debug, Clone)]
enum Backend {
    Band(BandLu),
    Krylov { reduced: CsrMatrix, ilu: Ilu0 },
}

impl LinearSolver {
    pub fn new(a: &CsrMatrix, fixed: &[bool], method: LinearMethod) -> Result<Self, SolveError> {
        if fixed.len() != a.dim() {
            return Err(SolveError::DimensionMismatch { expected: a.dim(), got: fixed.len() });
        }
        let free: Vec<usize> = (0..a.dim()).filter(|i| !fixed[*i]).collect();
        let reduced = restrict(a, fixed, &free);
        let use_direct = match method {
            LinearMethod::Direct => true,
            LinearMethod::Krylov => false,
            LinearMethod::Auto => free.len() <= DIRECT_LIMIT,
        };
        let backend = if use_direct {
            Backend::Band(BandLu::factor(&reduced)?)
        } else {
            let ilu = Ilu0::factor(&reduced)?;
            Backend::Krylov { reduced, ilu }
        };
        Ok(LinearSolver { a: a.clone(), fixed: fixed.to_vec(), free, backend })
    }

    /// Solves `A u = L` on the free dofs with `u = boundary` on fixed dofs.
    pub fn solve(&self, l: &NodalTensorField, boundary: &NodalTensorField) -> Result<NodalTensorField, SolveError> {
        let n = self.a.dim();
        for len in [l.len(), boundary.len()] {
            if len != n {
                return Err(SolveError::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut u = NodalTensorField::zeros(n);
        for i in 0..n {
            if self.fixed[i] {
                u[i] = boundary[i];
            }
        }
        let mut au = NodalTensorField::zeros(n);
        self.a.matvec_tensor_into(&u.0, &mut au.0);
        for c in 0..6 {
            let rhs: Vec<f64> = self.free.iter().map(|&i| l[i][c] - au[i][c]).collect();
            let scale = self.free.iter().map(|&i| l[i][c] * l[i][c]).sum::<f64>().sqrt().max(norm(&rhs));
            let x = self.solve_reduced(&rhs, scale)?;
            for (k, &i) in self.free.iter().enumerate() {
                u[i][c] = x[k];
            }
        }
        Ok(u)
    }

    fn solve_reduced(&self, rhs: &[f64], scale: f64) -> Result<Vec<f64>, SolveError> {
        let tol = LINEAR_TOL * scale;
        match &self.backend {
            Backend::Band(lu) => {
                let mut x = lu.solve(rhs);
                let reduced_res = |x: &[f64]| {
                    // residual through the band factor's own copy of the reduced matrix
                    let ax = lu.original.matvec(x);
                    rhs.iter().zip(&ax).map(|(b, v)| b - v).collect::<Vec<f64>>()
                };
                let mut r = reduced_res(&x);
                if norm(&r) > tol {
                    let dx = lu.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
                    r = reduced_res(&x);
                }
                let res = norm(&r);
                if res > tol && res > 1e-300 {
                    return Err(SolveError::Residual { residual: res, tolerance: tol });
                }
                Ok(x)
            }
            Backend::Krylov { reduced, ilu } => bicgstab(reduced, ilu, rhs, tol, 20_000),
        }
    }
}

/// One-shot convenience wrapper around [`LinearSolver`].
pub fn solve_linear(
    a: &CsrMatrix,
    l: &NodalTensorField,
    fixed: &[bool],
    boundary_values: &NodalTensorField,
) -> Result<NodalTensorField, SolveError> {
    LinearSolver::new(a, fixed, LinearMethod::Auto)?.solve(l, boundary_values)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn restrict(a: &CsrMatrix, fixed: &[bool], free: &[usize]) -> CsrMatrix {
    let mut pos = vec![usize::MAX; a.dim()];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let mut b = TripletBuilder::new(free.len());
    for (k, &i) in free.iter().enumerate() {
        let (cols, vals) = a.row(i);
        for (j, v) in cols.iter().zip(vals) {
            if !fixed[*j] {
                b.add(k, pos[*j], *v);
            }
        }
    }
    b.build()
}

/// Reverse Cuthill–McKee ordering of the symmetrized pattern; returns
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nb in adj.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nb in adj.iter_mut() {
        nb.sort_by_key(|&j| (degree[j], j));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|i| !visited[*i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let start = pseudo_peripheral(&adj, &degree, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, node);
        let far = level.iter().filter(|l| **l != usize::MAX).max().copied().unwrap_or(0);
        if far <= ecc {
            break;
        }
        ecc = far;
        node = (0..adj.len()).filter(|&i| level[i] == far).min_by_key(|&i| (degree[i], i)).unwrap();
    }
    node
}

/// Banded LU with partial pivoting (row interchanges limited to the lower
/// bandwidth, so the upper bandwidth grows to `kl + ku`).
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    /// `perm[new] = old`
    perm: Vec<usize>,
    original: CsrMatrix,
}

impl BandLu {
    fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            for &j in a.row(i).0 {
                let (pi, pj) = (inv[i], inv[j]);
                kl = kl.max(pi.saturating_sub(pj));
                ku = ku.max(pj.saturating_sub(pi));
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            perm,
            original: a.clone(),
        };
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (j, v) in cols.iter().zip(vals) {
                let idx = lu.idx(inv[i], inv[*j]);
                lu.data[idx] += v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn eliminate(&mut self) -> Result<(), SolveError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in (k + 1)..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SolveError::SingularPivot { column: k });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in (k + 1)..=last_row {
                let ik = self.idx(i, k);
                let factor = self.data[ik] / pivot;
                self.data[ik] = factor;
                if factor != 0.0 {
                    let (row_i, row_k) = (self.idx(i, k + 1), self.idx(k, k + 1));
                    for off in 0..(last_col - k) {
                        self.data[row_i + off] -= factor * self.data[row_k + off];
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut b: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=(k + kl).min(n - 1) {
                    b[i] -= self.data[self.idx(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in (k + 1)..=(k + kl + ku).min(n - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = b[new];
        }
        x
    }
}

/// Incomplete LU with zero fill on the matrix pattern.
#[derive(Debug, Clone)]
struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Ilu0 {
    fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        let n = a.dim();
        let mut row_ptr = vec![0usize];
        let mut cols = Vec::with_capacity(a.nnz());
        let mut vals = Vec::with_capacity(a.nnz());
        for i in 0..n {
            let (c, v) = a.row(i);
            cols.extend_from_slice(c);
            vals.extend_from_slice(v);
            row_ptr.push(cols.len());
        }
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if cols[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(SolveError::SingularPivot { column: i });
            }
        }
        for i in 0..n {
            for kk in row_ptr[i]..diag[i] {
                let k = cols[kk];
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(SolveError::SingularPivot { column: k });
                }
                let factor = vals[kk] / pivot;
                vals[kk] = factor;
                // a_ij -= factor * u_kj on the existing pattern of row i
                let mut p = kk + 1;
                for q in (diag[k] + 1)..row_ptr[k + 1] {
                    let j = cols[q];
                    while p < row_ptr[i + 1] && cols[p] < j {
                        p += 1;
                    }
                    if p < row_ptr[i + 1] && cols[p] == j {
                        vals[p] -= factor * vals[q];
                    }
                }
            }
            if vals[diag[i]] == 0.0 {
                return Err(SolveError::SingularPivot { column: i });
            }
        }
        Ok(Ilu0 { lu: a.clone(), diag, row_ptr, cols, vals })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.row_ptr[i]..self.diag[i] {
                s -= self.vals[k] * y[self.cols[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (self.diag[i] + 1)..self.row_ptr[i + 1] {
                s -= self.vals[k] * y[self.cols[k]];
            }
            y[i] = s / self.vals[self.diag[i]];
        }
        y
    }
}

fn bicgstab(a: &CsrMatrix, m: &Ilu0, b: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>, SolveError> {
    debug_assert_eq!(m.lu.dim(), a.dim());
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if norm(&r) <= tol {
        return Ok(x);
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..max_iters {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = m.apply(&p);
        v = a.matvec(&p_hat);
        alpha = rho_new / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm(&s) <= tol {
            x.iter_mut().zip(&p_hat).for_each(|(xi, pi)| *xi += alpha * pi);
            return Ok(x);
        }
        let s_hat = m.apply(&s);
        let t = a.matvec(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        if norm(&r) <= tol {
            return Ok(x);
        }
        if !omega.is_finite() || omega == 0.0 {
            break;
        }
    }
    let ax = a.matvec(&x);
    let res = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    if res <= tol {
        Ok(x)
    } else {
        Err(SolveError::Residual { residual: res, tolerance: tol })
    }
}

/// Dense LU oracle shared by unit tests.
#[cfg(test)]
pub(crate) fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<LinearSolver>();
    check::<SymTensor3>();
}
