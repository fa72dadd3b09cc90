//! Error norms, convergence orders, the energy-stability audit and
//! eigenvalue sampling of computed fields.

use std::io::Write;

use crate::assembly::{ScalarForms, TensorFn};
use crate::element::{self, ERROR_RULE};
use crate::error::{Error, Result};
use crate::mesh2d::{DofMap, NodalTensorField, Point, TriMesh};
use crate::sparse::CsrMatrix;
use crate::tensor3::{eig_sym3, SymTensor3};

/// Spatial dimension of the tensor unknown.
pub const TENSOR_DIM: f64 = 3.0;
/// Default number of cross-section samples.
pub const CROSS_SECTION_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub dt: f64,
    pub l2_error: f64,
    pub energy_error: f64,
    pub eigenvalue_min: f64,
    pub eigenvalue_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    H,
    Dt,
}

impl Axis {
    pub fn value(&self, r: &ErrorRecord) -> f64 {
        match self {
            Axis::H => r.h,
            Axis::Dt => r.dt,
        }
    }
}

/// `‖U_h − U‖_{0,Ω}` with the Frobenius norm pointwise, by the degree-6 rule.
pub fn l2_error<F>(mesh: &TriMesh, dofmap: &DofMap, field: &NodalTensorField, exact: F) -> f64
where
    F: Fn(Point) -> SymTensor3,
{
    let mut sum = 0.0;
    for t in 0..mesh.triangles.len() {
        let geo = mesh.geometry(t);
        for (l, w) in ERROR_RULE.points.iter().zip(ERROR_RULE.weights) {
            let e = dofmap.evaluate_in(t, *l, field) - exact(geo.point(*l));
            sum += w * geo.area * e.frobenius_dot(&e);
        }
    }
    sum.sqrt()
}

/// `Σ_c w_c u_cᵀ A v_c`, the tensor form induced by a scalar matrix.
pub fn tensor_form(a: &CsrMatrix, u: &NodalTensorField, v: &NodalTensorField) -> f64 {
    let mut av = vec![SymTensor3::ZERO; v.len()];
    a.matvec_tensor_into(&v.0, &mut av);
    u.iter().zip(&av).map(|(x, y)| x.frobenius_dot(y)).sum()
}

/// `‖U‖²_{0,Ω}` of a finite element field.
pub fn mass_norm_sq(forms: &ScalarForms, u: &NodalTensorField) -> f64 {
    tensor_form(&forms.mass, u, u)
}

/// `a_J(U, U)`.
pub fn a_j(forms: &ScalarForms, stiffness: &CsrMatrix, u: &NodalTensorField) -> f64 {
    debug_assert_eq!(forms.dim(), stiffness.dim());
    tensor_form(stiffness, u, u)
}

/// `(Δt Σ_n ‖I_h U(t_n) − U^n‖²_{a_J})^{1/2}` over `steps = [(t_n, U^n)]`,
/// n ≥ 1. Negative per-step values (round-off in a semidefinite form) are
/// clamped to zero.
pub fn energy_error(
    steps: &[(f64, NodalTensorField)],
    dt: f64,
    exact: &TensorFn,
    dofmap: &DofMap,
    stiffness: &CsrMatrix,
) -> f64 {
    let mut sum = 0.0;
    for (t, u) in steps {
        let mut e = NodalTensorField(dofmap.coords.iter().map(|x| exact(*x, *t)).collect());
        e.axpy(-1.0, u);
        sum += tensor_form(stiffness, &e, &e).max(0.0);
    }
    (dt * sum).sqrt()
}

/// Pairwise slopes `log(e_i/e_{i+1}) / log(a_i/a_{i+1})` of the L² error.
pub fn eoc(records: &[ErrorRecord], axis: Axis) -> Result<Vec<f64>> {
    eoc_of(records, axis, |r| r.l2_error)
}

pub fn eoc_of<F: Fn(&ErrorRecord) -> f64>(records: &[ErrorRecord], axis: Axis, err: F) -> Result<Vec<f64>> {
    if records.len() < 2 {
        return Err(Error::Analysis("at least two records are needed for an order estimate".into()));
    }
    let a: Vec<f64> = records.iter().map(|r| axis.value(r)).collect();
    let decreasing = a.windows(2).all(|w| w[1] < w[0]);
    let increasing = a.windows(2).all(|w| w[1] > w[0]);
    if !(decreasing || increasing) || a.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Analysis(format!("axis values must be positive and strictly monotone: {a:?}")));
    }
    Ok(records
        .windows(2)
        .zip(a.windows(2))
        .map(|(r, x)| (err(&r[0]) / err(&r[1])).ln() / (x[0] / x[1]).ln())
        .collect())
}

/// Data of the energy estimate that does not come from the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityInputs {
    pub dt: f64,
    pub eps: f64,
    pub reaction: f64,
    pub area: f64,
    /// `‖F^n‖_{0,Ω}` for n = 1..N.
    pub source_norms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityAudit {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl StabilityAudit {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.margin >= -rel_tol * self.rhs.abs()
    }
}

/// Evaluates both sides of the discrete energy estimate for
/// `fields = [U⁰, …, U^N]`:
///
/// lhs = ‖U^N‖² + 2(Σ‖U^n − U^{n−1}‖² + 2Δt Σ a_J(U^n, U^n))
///
/// rhs = e^{N/(N−1)} (4Δt Σ (T(εμ√d|Ω|^½ + ‖F^n‖)² + ε√d|Ω|^½‖F^n‖)
///        + 4dε²|Ω| + 2‖U⁰‖² − 4ε∫tr U⁰)
pub fn audit_stability(fields: &[NodalTensorField], forms: &ScalarForms, inputs: &StabilityInputs) -> Result<StabilityAudit> {
    let n_steps = fields.len().saturating_sub(1);
    if n_steps < 2 {
        return Err(Error::Analysis(format!("stability audit needs N >= 2 steps, got {n_steps}")));
    }
    if inputs.source_norms.len() != n_steps {
        return Err(Error::Analysis(format!(
            "expected {n_steps} source norms, got {}",
            inputs.source_norms.len()
        )));
    }
    let stiffness = forms.stiffness();
    let dt = inputs.dt;
    let mut jumps = 0.0;
    let mut energy = 0.0;
    for n in 1..=n_steps {
        let mut d = fields[n].clone();
        d.axpy(-1.0, &fields[n - 1]);
        jumps += mass_norm_sq(forms, &d);
        energy += a_j(forms, &stiffness, &fields[n]);
    }
    let lhs = mass_norm_sq(forms, &fields[n_steps]) + 2.0 * (jumps + 2.0 * dt * energy);

    let (eps, d) = (inputs.eps, TENSOR_DIM);
    let t_final = n_steps as f64 * dt;
    let root = d.sqrt() * inputs.area.sqrt();
    let source_sum: f64 = inputs
        .source_norms
        .iter()
        .map(|f| t_final * (eps * inputs.reaction * root + f).powi(2) + eps * root * f)
        .sum();
    let u0 = &fields[0];
    let ones = vec![1.0; u0.len()];
    let trace_integral: f64 = (0..3).map(|c| forms.mass.bilinear(&ones, &u0.component(c))).sum();
    let growth = (n_steps as f64 / (n_steps as f64 - 1.0)).exp();
    let rhs = growth
        * (4.0 * dt * source_sum + 4.0 * d * eps * eps * inputs.area + 2.0 * mass_norm_sq(forms, u0)
            - 4.0 * eps * trace_integral);
    Ok(StabilityAudit { lhs, rhs, margin: rhs - lhs })
}

/// `‖F(t)‖_{0,Ω}` by the degree-6 rule.
pub fn source_norm(mesh: &TriMesh, source: &TensorFn, t: f64) -> f64 {
    let mut sum = 0.0;
    for tri in 0..mesh.triangles.len() {
        let geo = mesh.geometry(tri);
        for (l, w) in ERROR_RULE.points.iter().zip(ERROR_RULE.weights) {
            let f = source(geo.point(*l), t);
            sum += w * geo.area * f.frobenius_dot(&f);
        }
    }
    sum.sqrt()
}

/// Sampling line for eigenvalue profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    /// `y = x`
    Diagonal,
    /// `y = c`
    Horizontal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Finite element evaluation of the spectral extremes at `n` uniformly
/// spaced points of `line` clipped to the domain bounding box.
pub fn cross_section(mesh: &TriMesh, dofmap: &DofMap, field: &NodalTensorField, line: Line, n: usize) -> Result<Vec<CrossSample>> {
    if n < 2 {
        return Err(Error::Analysis(format!("cross section needs at least 2 samples, got {n}")));
    }
    let (x0, x1, y0, y1) = bounding_box(mesh);
    let (a, b) = match line {
        Line::Diagonal => {
            let lo = x0.max(y0);
            let hi = x1.min(y1);
            ([lo, lo], [hi, hi])
        }
        Line::Horizontal(c) => ([x0, c], [x1, c]),
    };
    let inside = match line {
        Line::Diagonal => a[0] < b[0],
        Line::Horizontal(c) => c >= y0 && c <= y1,
    };
    if !inside {
        return Err(Error::Analysis(format!("{line:?} does not cross the domain")));
    }
    let length = element::dist(a, b);
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let v = dofmap
                .evaluate(mesh, field, p)
                .ok_or_else(|| Error::Analysis(format!("sample point {p:?} not located in the mesh")))?;
            let e = eig_sym3(&v)?;
            Ok(CrossSample { s: s * length, x: p[0], y: p[1], lambda_min: e.eigenvalues[0], lambda_max: e.eigenvalues[2] })
        })
        .collect()
}

fn bounding_box(mesh: &TriMesh) -> (f64, f64, f64, f64) {
    mesh.vertices.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
    )
}

/// Spectral extremes at the points of the degree-6 rule in every triangle,
/// i.e. between the nodes where the constraint is not imposed.
pub fn quadrature_eig_range(mesh: &TriMesh, dofmap: &DofMap, field: &NodalTensorField) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in 0..mesh.triangles.len() {
        for l in ERROR_RULE.points {
            let e = eig_sym3(&dofmap.evaluate_in(t, *l, field))?;
            lo = lo.min(e.eigenvalues[0]);
            hi = hi.max(e.eigenvalues[2]);
        }
    }
    Ok((lo, hi))
}

pub const RECORD_HEADER: &str = "h,dt,l2_error,energy_error,eoc_l2,eoc_energy,eigenvalue_min,eigenvalue_max";

/// Error table with pairwise orders (empty for the first row).
pub fn write_records_csv<W: Write>(out: &mut W, records: &[ErrorRecord], axis: Axis) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    let (l2, en) = if records.len() >= 2 {
        (eoc(records, axis)?, eoc_of(records, axis, |r| r.energy_error)?)
    } else {
        (Vec::new(), Vec::new())
    };
    for (i, r) in records.iter().enumerate() {
        let fmt = |v: Option<&f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let (a, b) = if i == 0 { (None, None) } else { (l2.get(i - 1), en.get(i - 1)) };
        writeln!(
            out,
            "{:.10e},{:.10e},{:.10e},{:.10e},{},{},{:.10e},{:.10e}",
            r.h,
            r.dt,
            r.l2_error,
            r.energy_error,
            fmt(a),
            fmt(b),
            r.eigenvalue_min,
            r.eigenvalue_max
        )?;
    }
    Ok(())
}

pub fn write_cross_section_csv<W: Write>(out: &mut W, samples: &[CrossSample]) -> Result<()> {
    writeln!(out, "s,x,y,lambda_min,lambda_max")?;
    for p in samples {
        writeln!(out, "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}", p.s, p.x, p.y, p.lambda_min, p.lambda_max)?;
    }
    Ok(())
}
