//! Symmetric 3×3 tensors, their spectral decomposition, and the
//! eigenvalue-clamp projection onto `{V : ε ≤ λ_k(V) ≤ κ}`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::TensorError;

/// Dense 3×3 matrix, row major.
pub type Mat3 = [[f64; 3]; 3];

/// Storage order of the six independent components.
pub const COMPONENT_NAMES: [&str; 6] = ["v11", "v22", "v33", "v12", "v13", "v23"];

/// Weight of each stored component in the Frobenius inner product
/// (off-diagonal entries appear twice in the full matrix).
pub const FROBENIUS_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Symmetric 3×3 tensor stored as `(v11, v22, v33, v12, v13, v23)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([0.0; 6]);
    pub const IDENTITY: SymTensor3 = SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

    pub fn new(v11: f64, v22: f64, v33: f64, v12: f64, v13: f64, v23: f64) -> Self {
        SymTensor3([v11, v22, v33, v12, v13, v23])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3([a, b, c, 0.0, 0.0, 0.0])
    }

    /// Builds a tensor from the upper triangle of `m`; the lower triangle is ignored.
    pub fn from_upper(m: &Mat3) -> Self {
        SymTensor3([m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2]])
    }

    /// Builds a tensor from a full matrix, averaging the off-diagonal pairs.
    pub fn from_matrix(m: &Mat3) -> Self {
        SymTensor3([
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        ])
    }

    pub fn to_matrix(&self) -> Mat3 {
        let [a, b, c, d, e, f] = self.0;
        [[a, d, e], [d, b, f], [e, f, c]]
    }

    /// Entry `(i, j)` of the full matrix, zero-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.0[0],
            (1, 1) => self.0[1],
            (2, 2) => self.0[2],
            (0, 1) => self.0[3],
            (0, 2) => self.0[4],
            (1, 2) => self.0[5],
            _ => panic!("index ({i}, {j}) out of range for a 3x3 tensor"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        trace(self)
    }

    /// `V : W = tr(Vᵀ W)`.
    pub fn frobenius_dot(&self, other: &SymTensor3) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .zip(FROBENIUS_WEIGHTS.iter())
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self += alpha * x`
    #[inline]
    pub fn axpy(&mut self, alpha: f64, x: &SymTensor3) {
        for (s, v) in self.0.iter_mut().zip(x.0.iter()) {
            *s += alpha * v;
        }
    }

    /// `R · V · Rᵀ` for a general 3×3 matrix `R`.
    pub fn congruence(&self, r: &Mat3) -> SymTensor3 {
        let v = self.to_matrix();
        let rv = matmul(r, &v);
        SymTensor3::from_matrix(&matmul(&rv, &transpose(r)))
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let [a, b, c, d, e, f] = self.0;
        let rows = [(a, d.abs() + e.abs()), (b, d.abs() + f.abs()), (c, e.abs() + f.abs())];
        rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(center, radius)| {
            (lo.min(center - radius), hi.max(center + radius))
        })
    }
}

impl Index<usize> for SymTensor3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for SymTensor3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(mut self, rhs: SymTensor3) -> SymTensor3 {
        self += rhs;
        self
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(mut self, rhs: SymTensor3) -> SymTensor3 {
        self -= rhs;
        self
    }
}

impl SubAssign for SymTensor3 {
    fn sub_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a -= b;
        }
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, s: f64) -> SymTensor3 {
        SymTensor3(self.0.map(|v| v * s))
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, v: SymTensor3) -> SymTensor3 {
        v * self
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self * -1.0
    }
}

/// Eigen-decomposition `V = Q diag(λ) Qᵀ` with `λ` ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDecomp {
    pub eigenvalues: [f64; 3],
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Mat3,
}

impl SpectralDecomp {
    pub fn eigenvector(&self, k: usize) -> [f64; 3] {
        let q = &self.eigenvectors;
        [q[0][k], q[1][k], q[2][k]]
    }

    pub fn reconstruct(&self) -> SymTensor3 {
        reconstruct(&self.eigenvectors, &self.eigenvalues)
    }
}

/// Admissible spectral interval `[eps, kappa]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    eps: f64,
    kappa: f64,
}

impl Bounds {
    /// Negative `eps` is accepted: the smooth convergence benchmark needs a
    /// lower bound below zero, and the unconstrained oracle uses `±1e30`.
    pub fn new(eps: f64, kappa: f64) -> Result<Self, TensorError> {
        if eps.is_nan() || kappa.is_nan() || eps >= kappa {
            return Err(TensorError::InvalidBounds { eps, kappa });
        }
        Ok(Bounds { eps, kappa })
    }

    pub fn unit() -> Self {
        Bounds { eps: 0.0, kappa: 1.0 }
    }

    /// Bounds wide enough that the projection is never active.
    pub fn unbounded() -> Self {
        Bounds { eps: -1e30, kappa: 1e30 }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    #[inline]
    pub fn clamp(&self, lambda: f64) -> f64 {
        self.eps.max(lambda.min(self.kappa))
    }

    /// True when every eigenvalue of `v` lies in `[eps - tol, kappa + tol]`.
    pub fn admits(&self, v: &SymTensor3, tol: f64) -> bool {
        let (lo, hi) = v.gershgorin();
        if lo >= self.eps - tol && hi <= self.kappa + tol {
            return true;
        }
        match eig_sym3(v) {
            Ok(d) => d.eigenvalues[0] >= self.eps - tol && d.eigenvalues[2] <= self.kappa + tol,
            Err(_) => false,
        }
    }
}

pub fn trace(v: &SymTensor3) -> f64 {
    v.0[0] + v.0[1] + v.0[2]
}

pub fn frobenius_norm(v: &SymTensor3) -> f64 {
    v.frobenius_dot(v).sqrt()
}

/// Relative gap below which the analytic eigenvectors are not trusted.
const GAP_TOL: f64 = 1e-8;

/// Spectral decomposition of a symmetric 3×3 tensor.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// cubic and eigenvectors from cross products of the shifted rows; a few
/// Jacobi rotations then polish the basis to working precision. When two
/// eigenvalues are closer than `1e-8 ‖v‖_F` the cubic route is skipped and
/// cyclic Jacobi starts from the identity.
pub fn eig_sym3(v: &SymTensor3) -> Result<SpectralDecomp, TensorError> {
    if !v.is_finite() {
        return Err(TensorError::NonFinite(v.0));
    }
    let scale = v.max_abs();
    if scale == 0.0 {
        return Ok(SpectralDecomp { eigenvalues: [0.0; 3], eigenvectors: IDENTITY3 });
    }
    let a = (*v * (1.0 / scale)).to_matrix();
    let [_, _, _, d, e, f] = v.0;
    let q0 = if d == 0.0 && e == 0.0 && f == 0.0 {
        IDENTITY3
    } else {
        analytic_basis(&a).unwrap_or(IDENTITY3)
    };
    let (mut lambda, mut q) = jacobi(&a, q0);
    sort_pairs(&mut lambda, &mut q);
    for l in lambda.iter_mut() {
        *l *= scale;
    }
    Ok(SpectralDecomp { eigenvalues: lambda, eigenvectors: q })
}

const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Eigenvalues of a symmetric matrix by the trigonometric Cardano formula,
/// ascending.
fn cardano_eigenvalues(a: &Mat3) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (*x - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    let mut out = [lo, mid, hi];
    out.sort_by(f64::total_cmp);
    out
}

/// Orthonormal eigenbasis guess from the analytic eigenvalues, or `None`
/// when the spectrum is too clustered for the cross-product construction.
fn analytic_basis(a: &Mat3) -> Option<Mat3> {
    let lambda = cardano_eigenvalues(a);
    let norm = frobenius_norm(&SymTensor3::from_upper(a));
    let gap = (lambda[1] - lambda[0]).min(lambda[2] - lambda[1]);
    if gap < GAP_TOL * norm {
        return None;
    }
    let v_lo = null_vector(a, lambda[0])?;
    let v_hi = null_vector(a, lambda[2])?;
    let v_mid = normalize(cross(&v_hi, &v_lo))?;
    let v_lo = normalize(cross(&v_mid, &v_hi))?;
    Some([
        [v_lo[0], v_mid[0], v_hi[0]],
        [v_lo[1], v_mid[1], v_hi[1]],
        [v_lo[2], v_mid[2], v_hi[2]],
    ])
}

fn null_vector(a: &Mat3, lambda: f64) -> Option<[f64; 3]> {
    let r0 = [a[0][0] - lambda, a[0][1], a[0][2]];
    let r1 = [a[1][0], a[1][1] - lambda, a[1][2]];
    let r2 = [a[2][0], a[2][1], a[2][2] - lambda];
    let candidates = [cross(&r0, &r1), cross(&r1, &r2), cross(&r2, &r0)];
    let best = candidates
        .iter()
        .copied()
        .max_by(|x, y| dot(x, x).total_cmp(&dot(y, y)))?;
    if dot(&best, &best) < 1e-20 {
        return None;
    }
    normalize(best)
}

/// Cyclic Jacobi on `Q0ᵀ A Q0`; returns the diagonal and accumulated basis.
fn jacobi(a: &Mat3, q0: Mat3) -> ([f64; 3], Mat3) {
    let mut b = matmul(&transpose(&q0), &matmul(a, &q0));
    // symmetrize the round-off of the similarity transform
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (b[i][j] + b[j][i]);
            b[i][j] = s;
            b[j][i] = s;
        }
    }
    let mut q = q0;
    let norm = b.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let floor = 1e-18 * norm;
    for _sweep in 0..64 {
        let mut rotated = false;
        for (p, r) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let bpq = b[p][r];
            if bpq.abs() <= floor {
                b[p][r] = 0.0;
                b[r][p] = 0.0;
                continue;
            }
            rotated = true;
            let theta = (b[r][r] - b[p][p]) / (2.0 * bpq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            b[p][p] -= t * bpq;
            b[r][r] += t * bpq;
            b[p][r] = 0.0;
            b[r][p] = 0.0;
            let k = 3 - p - r;
            let bkp = b[k][p];
            let bkr = b[k][r];
            b[k][p] = c * bkp - s * bkr;
            b[p][k] = b[k][p];
            b[k][r] = s * bkp + c * bkr;
            b[r][k] = b[k][r];
            for row in q.iter_mut() {
                let qp = row[p];
                let qr = row[r];
                row[p] = c * qp - s * qr;
                row[r] = s * qp + c * qr;
            }
        }
        if !rotated {
            break;
        }
    }
    ([b[0][0], b[1][1], b[2][2]], q)
}

/// Stable ascending sort of eigenpairs.
fn sort_pairs(lambda: &mut [f64; 3], q: &mut Mat3) {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    let l = *lambda;
    let old = *q;
    for (k, &src) in order.iter().enumerate() {
        lambda[k] = l[src];
        for i in 0..3 {
            q[i][k] = old[i][src];
        }
    }
}

fn reconstruct(q: &Mat3, lambda: &[f64; 3]) -> SymTensor3 {
    let mut out = SymTensor3::ZERO;
    for (k, &l) in lambda.iter().enumerate() {
        out.axpy(l, &outer(&[q[0][k], q[1][k], q[2][k]]));
    }
    out
}

fn outer(v: &[f64; 3]) -> SymTensor3 {
    SymTensor3::new(v[0] * v[0], v[1] * v[1], v[2] * v[2], v[0] * v[1], v[0] * v[2], v[1] * v[2])
}

/// Frobenius-nearest tensor with all eigenvalues in `[eps, kappa]`.
///
/// Only eigen-directions whose eigenvalue actually moves are touched, so an
/// admissible input is returned bit-for-bit.
pub fn clamp_project(v: &SymTensor3, b: &Bounds) -> Result<SymTensor3, TensorError> {
    if !v.is_finite() {
        return Err(TensorError::NonFinite(v.0));
    }
    let (lo, hi) = v.gershgorin();
    if lo >= b.eps && hi <= b.kappa {
        return Ok(*v);
    }
    let decomp = eig_sym3(v)?;
    let mut out = *v;
    let mut moved = false;
    for k in 0..3 {
        let lambda = decomp.eigenvalues[k];
        let clamped = b.clamp(lambda);
        if clamped != lambda {
            moved = true;
            out.axpy(clamped - lambda, &outer(&decomp.eigenvector(k)));
        }
    }
    if !moved {
        return Ok(*v);
    }
    Ok(out)
}

/// Constrained and complementary parts `(V⁺, V⁻)` with `V⁺ + V⁻ = V`.
pub fn split(v: &SymTensor3, b: &Bounds) -> Result<(SymTensor3, SymTensor3), TensorError> {
    let plus = clamp_project(v, b)?;
    Ok((plus, *v - plus))
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(&v, &v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some([v[0] / n, v[1] / n, v[2] / n])
}
