//! Projected extragradient iteration for the per-step variational
//! inequality, plus the unconstrained linear solver used by the CIP
//! baselines.

pub mod linear;

use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::mesh2d::NodalTensorField;
use crate::sparse::CsrMatrix;
use crate::tensor3::{clamp_project, Bounds, SymTensor3, FROBENIUS_WEIGHTS};

pub use linear::{solve_linear, LinearMethod, LinearSolver};

/// Growth factor of the increment (relative to the first one) treated as
/// divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtragradConfig {
    pub omega: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ExtragradConfig {
    fn default() -> Self {
        ExtragradConfig { omega: 1e-2, tol: 1e-6, max_iters: 10_000 }
    }
}

impl ExtragradConfig {
    pub fn new(omega: f64) -> Self {
        ExtragradConfig { omega, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(SolveError::InvalidConfig(format!("omega must be a finite non-negative number, got {}", self.omega)));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(SolveError::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub increment: f64,
    pub converged: bool,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Report for a direct solve (no iterations).
    pub fn direct(wall_time: Duration) -> Self {
        SolveReport { iterations: 0, increment: 0.0, converged: true, wall_time }
    }
}

/// Scratch buffers reused across extragradient iterations.
#[derive(Debug, Clone)]
struct Workspace {
    au: Vec<SymTensor3>,
    v: Vec<SymTensor3>,
    next: Vec<SymTensor3>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { au: vec![SymTensor3::ZERO; n], v: vec![SymTensor3::ZERO; n], next: vec![SymTensor3::ZERO; n] }
    }
}

fn check_dims(a: &CsrMatrix, l: &NodalTensorField, u: &NodalTensorField, fixed: &[bool]) -> Result<(), SolveError> {
    let n = a.dim();
    for len in [l.len(), u.len(), fixed.len()] {
        if len != n {
            return Err(SolveError::DimensionMismatch { expected: n, got: len });
        }
    }
    Ok(())
}

/// `out_i = P(u_i − ω (Au_i − l_i))` on free dofs, `u_i` on fixed ones.
fn projected_update(
    u: &[SymTensor3],
    au: &[SymTensor3],
    l: &[SymTensor3],
    omega: f64,
    bounds: &Bounds,
    fixed: &[bool],
    out: &mut [SymTensor3],
    iteration: usize,
) -> Result<(), SolveError> {
    for i in 0..u.len() {
        if fixed[i] {
            out[i] = u[i];
            continue;
        }
        let mut w = u[i];
        w.axpy(-omega, &au[i]);
        w.axpy(omega, &l[i]);
        out[i] = clamp_project(&w, bounds).map_err(|_| SolveError::NonFinite { iteration })?;
    }
    Ok(())
}

/// One predictor/corrector pass; the new iterate lands in `ws.next` and the
/// free-dof ℓ² increment is returned.
fn iterate(
    a: &CsrMatrix,
    l: &[SymTensor3],
    u: &[SymTensor3],
    omega: f64,
    bounds: &Bounds,
    fixed: &[bool],
    ws: &mut Workspace,
    iteration: usize,
) -> Result<f64, SolveError> {
    a.matvec_tensor_into(u, &mut ws.au);
    projected_update(u, &ws.au, l, omega, bounds, fixed, &mut ws.v, iteration)?;
    a.matvec_tensor_into(&ws.v, &mut ws.au);
    projected_update(u, &ws.au, l, omega, bounds, fixed, &mut ws.next, iteration)?;
    let mut sq = 0.0;
    for i in 0..u.len() {
        if !fixed[i] {
            let d = ws.next[i] - u[i];
            sq += d.0.iter().map(|x| x * x).sum::<f64>();
        }
    }
    if !sq.is_finite() {
        return Err(SolveError::NonFinite { iteration });
    }
    Ok(sq.sqrt())
}

/// A single extragradient iteration `P(U − ω(A P(U − ω(AU − L)) − L))`.
pub fn extragradient_step(
    a: &CsrMatrix,
    l: &NodalTensorField,
    u: &NodalTensorField,
    cfg: &ExtragradConfig,
    bounds: &Bounds,
    fixed: &[bool],
) -> Result<NodalTensorField, SolveError> {
    cfg.validate()?;
    check_dims(a, l, u, fixed)?;
    let mut ws = Workspace::new(u.len());
    iterate(a, &l.0, &u.0, cfg.omega, bounds, fixed, &mut ws, 1)?;
    Ok(NodalTensorField(ws.next))
}

/// Iterates from `u_init` until the ℓ² increment over all free-dof
/// components drops below `cfg.tol`. Values of `u_init` at fixed dofs are
/// kept verbatim.
pub fn solve_vi(
    a: &CsrMatrix,
    l: &NodalTensorField,
    u_init: &NodalTensorField,
    cfg: &ExtragradConfig,
    bounds: &Bounds,
    fixed: &[bool],
) -> Result<(NodalTensorField, SolveReport), SolveError> {
    cfg.validate()?;
    check_dims(a, l, u_init, fixed)?;
    let start = Instant::now();
    let mut ws = Workspace::new(u_init.len());
    let mut u = u_init.0.clone();
    let mut initial = 0.0;
    let mut report = SolveReport { iterations: 0, increment: f64::INFINITY, converged: false, wall_time: Duration::ZERO };
    for r in 1..=cfg.max_iters {
        let inc = iterate(a, &l.0, &u, cfg.omega, bounds, fixed, &mut ws, r)?;
        if r == 1 {
            initial = inc;
        } else if initial > 0.0 && inc > DIVERGENCE_FACTOR * initial {
            return Err(SolveError::Diverged { iteration: r, increment: inc, initial });
        }
        std::mem::swap(&mut u, &mut ws.next);
        report.iterations = r;
        report.increment = inc;
        if inc < cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.wall_time = start.elapsed();
    Ok((NodalTensorField(u), report))
}

/// `Σ_free (AU − L, V − U)_F`, the variational-inequality pairing.
pub fn vi_pairing(
    a: &CsrMatrix,
    l: &NodalTensorField,
    u: &NodalTensorField,
    v: &NodalTensorField,
    fixed: &[bool],
) -> f64 {
    let mut au = vec![SymTensor3::ZERO; u.len()];
    a.matvec_tensor_into(&u.0, &mut au);
    (0..u.len())
        .filter(|i| !fixed[*i])
        .map(|i| (au[i] - l[i]).frobenius_dot(&(v[i] - u[i])))
        .sum()
}

/// Frobenius-weighted ℓ² norm over free dofs.
pub fn free_norm(field: &NodalTensorField, fixed: &[bool]) -> f64 {
    field
        .iter()
        .zip(fixed)
        .filter(|(_, f)| !**f)
        .map(|(t, _)| t.0.iter().zip(FROBENIUS_WEIGHTS).map(|(x, w)| w * x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}
