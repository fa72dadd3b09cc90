//! Scalar finite element forms. The tensor operator acts identically on each
//! of the six components, so every matrix here is assembled once over scalar
//! dofs and shared by all components.

use std::fmt;
use std::sync::Arc;

use crate::element::{self, gauss3, TriangleGeometry, VOLUME_RULE};
use crate::error::{AssemblyError, MeshError};
use crate::mesh2d::{DofClass, DofMap, NodalTensorField, Point, TriMesh};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tensor3::{Bounds, SymTensor3};

pub type VelocityFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point, f64) -> SymTensor3 + Send + Sync>;

/// PDE coefficients `𝒟`, `β`, `μ` and the interior-penalty weight `γ`.
#[derive(Clone)]
pub struct Coefficients {
    /// `None` means `𝒟 = 0`.
    pub diffusion: Option<DiffusionFn>,
    pub velocity: VelocityFn,
    /// When set, convection and penalty matrices are re-assembled every step.
    pub velocity_time_dependent: bool,
    pub reaction: f64,
    pub cip_gamma: f64,
}

impl Coefficients {
    pub fn transport(velocity: VelocityFn, cip_gamma: f64) -> Self {
        Coefficients { diffusion: None, velocity, velocity_time_dependent: false, reaction: 0.0, cip_gamma }
    }

    pub fn zero_velocity() -> VelocityFn {
        Arc::new(|_, _| [0.0, 0.0])
    }
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficients")
            .field("diffusion", &self.diffusion.as_ref().map(|_| "<fn>"))
            .field("velocity_time_dependent", &self.velocity_time_dependent)
            .field("reaction", &self.reaction)
            .field("cip_gamma", &self.cip_gamma)
            .finish()
    }
}

/// Mass, diffusion, convection, reaction and interior-penalty matrices.
#[derive(Debug, Clone)]
pub struct ScalarForms {
    pub mass: CsrMatrix,
    pub diffusion: CsrMatrix,
    pub convection: CsrMatrix,
    pub reaction: CsrMatrix,
    pub cip: CsrMatrix,
}

impl ScalarForms {
    /// `K = K_D + K_β + K_μ + J_γ`, the matrix of `a_J`.
    pub fn stiffness(&self) -> CsrMatrix {
        self.diffusion.add(&self.convection).add(&self.reaction).add(&self.cip)
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }
}

fn check_coefficients(coeffs: &Coefficients) -> Result<(), AssemblyError> {
    if !(coeffs.reaction >= 0.0) {
        return Err(AssemblyError::NegativeCoefficient { name: "reaction", value: coeffs.reaction });
    }
    if !(coeffs.cip_gamma >= 0.0) {
        return Err(AssemblyError::NegativeCoefficient { name: "cip_gamma", value: coeffs.cip_gamma });
    }
    Ok(())
}

fn is_psd2(d: &[[f64; 2]; 2]) -> bool {
    let tol = 1e-12 * (d[0][0].abs() + d[1][1].abs() + d[0][1].abs() + d[1][0].abs()).max(1e-300);
    (d[0][1] - d[1][0]).abs() <= tol
        && d[0][0] >= -tol
        && d[1][1] >= -tol
        && d[0][0] * d[1][1] - d[0][1] * d[1][0] >= -tol * tol.max(1.0)
}

/// Mass, diffusion, convection and reaction matrices at time `t`; the
/// penalty slot is left zero.
pub fn assemble_volume_forms(
    mesh: &TriMesh,
    dofmap: &DofMap,
    coeffs: &Coefficients,
    t: f64,
) -> Result<ScalarForms, AssemblyError> {
    check_coefficients(coeffs)?;
    let n = dofmap.len();
    let nl = dofmap.local_count();
    let mut mass = TripletBuilder::new(n);
    let mut diff = TripletBuilder::new(n);
    let mut conv = TripletBuilder::new(n);
    for tri in 0..mesh.triangles.len() {
        let geo = mesh.geometry(tri);
        let dofs = dofmap.dofs(tri);
        let mut me = [[0.0; 6]; 6];
        let mut de = [[0.0; 6]; 6];
        let mut ce = [[0.0; 6]; 6];
        for (l, w) in VOLUME_RULE.points.iter().zip(VOLUME_RULE.weights) {
            let x = geo.point(*l);
            let jw = w * geo.area;
            let phi = element::shape_values(dofmap.degree, *l);
            let grad = element::shape_gradients(dofmap.degree, &geo, *l);
            let beta = (coeffs.velocity)(x, t);
            let dmat = match &coeffs.diffusion {
                Some(df) => {
                    let d = df(x);
                    if !is_psd2(&d) {
                        return Err(AssemblyError::DiffusionNotPsd { x: x[0], y: x[1] });
                    }
                    Some(d)
                }
                None => None,
            };
            for i in 0..nl {
                for j in 0..nl {
                    me[i][j] += jw * phi[i] * phi[j];
                    let bgrad = beta[0] * grad[j][0] + beta[1] * grad[j][1];
                    ce[i][j] += jw * bgrad * phi[i];
                    if let Some(d) = &dmat {
                        let dg = [
                            d[0][0] * grad[j][0] + d[0][1] * grad[j][1],
                            d[1][0] * grad[j][0] + d[1][1] * grad[j][1],
                        ];
                        de[i][j] += jw * (dg[0] * grad[i][0] + dg[1] * grad[i][1]);
                    }
                }
            }
        }
        for i in 0..nl {
            for j in 0..nl {
                mass.add(dofs[i], dofs[j], me[i][j]);
                conv.add(dofs[i], dofs[j], ce[i][j]);
                if coeffs.diffusion.is_some() {
                    diff.add(dofs[i], dofs[j], de[i][j]);
                }
            }
        }
    }
    let mass = mass.build();
    let reaction = if coeffs.reaction == 0.0 { CsrMatrix::zeros(n) } else { mass.scaled(coeffs.reaction) };
    Ok(ScalarForms {
        mass,
        diffusion: diff.build(),
        convection: conv.build(),
        reaction,
        cip: CsrMatrix::zeros(n),
    })
}

/// `‖β‖_{0,∞,F}` approximated by the maximum over the facet's Gauss points
/// and endpoints.
pub fn facet_velocity_max(beta: &VelocityFn, a: Point, b: Point, t: f64) -> f64 {
    let norm = |x: Point| {
        let v = beta(x, t);
        (v[0] * v[0] + v[1] * v[1]).sqrt()
    };
    let along = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    gauss3().iter().map(|(s, _)| norm(along(*s))).fold(norm(a).max(norm(b)), f64::max)
}

/// Continuous interior penalty
/// `γ Σ_F ‖β‖_{∞,F} h_F² ∫_F ⟦∇u⟧·⟦∇v⟧ ds` over interior facets.
pub fn assemble_cip(
    mesh: &TriMesh,
    dofmap: &DofMap,
    beta: &VelocityFn,
    t: f64,
    gamma: f64,
) -> Result<CsrMatrix, AssemblyError> {
    if !(gamma >= 0.0) {
        return Err(AssemblyError::NegativeCoefficient { name: "cip_gamma", value: gamma });
    }
    let n = dofmap.len();
    if gamma == 0.0 {
        return Ok(CsrMatrix::zeros(n));
    }
    let nl = dofmap.local_count();
    let mut out = TripletBuilder::new(n);
    for facet in &mesh.interior_facets {
        let pa = mesh.vertices[facet.vertices[0]];
        let pb = mesh.vertices[facet.vertices[1]];
        let hf = facet.length;
        let scale = gamma * facet_velocity_max(beta, pa, pb, t) * hf * hf;
        if scale == 0.0 {
            continue;
        }
        let (gl, gr) = (mesh.geometry(facet.left), mesh.geometry(facet.right));
        let (dl, dr) = (dofmap.dofs(facet.left), dofmap.dofs(facet.right));
        // union of the two local dof sets: left dofs first, then right-only dofs
        let mut union: Vec<usize> = dl.to_vec();
        let mut right_pos = [0usize; 6];
        for (k, d) in dr.iter().enumerate() {
            right_pos[k] = match union.iter().position(|u| u == d) {
                Some(p) => p,
                None => {
                    union.push(*d);
                    union.len() - 1
                }
            };
        }
        let m = union.len();
        let mut local = vec![0.0; m * m];
        for (s, w) in gauss3() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let jump = facet_jump(dofmap.degree, &gl, &gr, x, nl, &right_pos, m);
            let jw = w * hf * scale;
            for i in 0..m {
                for j in 0..m {
                    local[i * m + j] += jw * (jump[i][0] * jump[j][0] + jump[i][1] * jump[j][1]);
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                out.add(union[i], union[j], local[i * m + j]);
            }
        }
    }
    Ok(out.build())
}

fn facet_jump(
    degree: usize,
    gl: &TriangleGeometry,
    gr: &TriangleGeometry,
    x: Point,
    nl: usize,
    right_pos: &[usize; 6],
    m: usize,
) -> Vec<[f64; 2]> {
    let grad_l = element::shape_gradients(degree, gl, gl.barycentric(x));
    let grad_r = element::shape_gradients(degree, gr, gr.barycentric(x));
    let mut jump = vec![[0.0; 2]; m];
    for k in 0..nl {
        jump[k][0] += grad_l[k][0];
        jump[k][1] += grad_l[k][1];
        let p = right_pos[k];
        jump[p][0] -= grad_r[k][0];
        jump[p][1] -= grad_r[k][1];
    }
    jump
}

/// Volume forms plus the interior penalty.
pub fn assemble_forms(
    mesh: &TriMesh,
    dofmap: &DofMap,
    coeffs: &Coefficients,
    t: f64,
) -> Result<ScalarForms, AssemblyError> {
    let mut forms = assemble_volume_forms(mesh, dofmap, coeffs, t)?;
    forms.cip = assemble_cip(mesh, dofmap, &coeffs.velocity, t, coeffs.cip_gamma)?;
    Ok(forms)
}

/// Load vectors `(F(t), φ_i)` for every component, using the volume rule.
pub fn assemble_load(mesh: &TriMesh, dofmap: &DofMap, source: &TensorFn, t: f64) -> NodalTensorField {
    let mut load = NodalTensorField::zeros(dofmap.len());
    for tri in 0..mesh.triangles.len() {
        let geo = mesh.geometry(tri);
        let dofs = dofmap.dofs(tri);
        for (l, w) in VOLUME_RULE.points.iter().zip(VOLUME_RULE.weights) {
            let f = source(geo.point(*l), t);
            let phi = element::shape_values(dofmap.degree, *l);
            for (k, d) in dofs.iter().enumerate() {
                load[*d].axpy(w * geo.area * phi[k], &f);
            }
        }
    }
    load
}

/// Which boundary dofs carry strongly imposed Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletRegion {
    /// Dofs classified as inflow.
    Inflow,
    /// Every boundary dof.
    WholeBoundary,
}

/// Fixed dofs and their values. Solvers keep fixed dofs at `values` and
/// eliminate their columns into the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData {
    pub fixed: Vec<bool>,
    pub values: NodalTensorField,
    /// Fixed dofs whose data leaves `[ε, κ]` by more than `1e-12`.
    pub bound_violations: Vec<usize>,
}

impl DirichletData {
    /// No constrained dofs.
    pub fn none(n: usize) -> Self {
        DirichletData { fixed: vec![false; n], values: NodalTensorField::zeros(n), bound_violations: Vec::new() }
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed.iter().filter(|f| **f).count()
    }

    /// Overwrites fixed dofs of `field` with their prescribed values.
    pub fn impose(&self, field: &mut NodalTensorField) {
        for (i, fixed) in self.fixed.iter().enumerate() {
            if *fixed {
                field[i] = self.values[i];
            }
        }
    }
}

/// Marks the dofs of `region` as fixed with values taken from
/// `boundary_values` (a full-length nodal field).
pub fn apply_dirichlet(
    dofmap: &DofMap,
    region: DirichletRegion,
    boundary_values: &NodalTensorField,
    bounds: &Bounds,
) -> Result<DirichletData, MeshError> {
    if boundary_values.len() != dofmap.len() {
        return Err(MeshError::SizeMismatch { expected: dofmap.len(), got: boundary_values.len() });
    }
    let fixed: Vec<bool> = dofmap
        .classification
        .iter()
        .map(|c| match region {
            DirichletRegion::Inflow => *c == DofClass::Inflow,
            DirichletRegion::WholeBoundary => *c != DofClass::Interior,
        })
        .collect();
    let mut values = NodalTensorField::zeros(dofmap.len());
    let mut bound_violations = Vec::new();
    for (i, f) in fixed.iter().enumerate() {
        if !*f {
            continue;
        }
        let v = boundary_values[i];
        if !v.is_finite() {
            return Err(MeshError::NonFiniteValue { node: i });
        }
        if !bounds.admits(&v, 1e-12) {
            bound_violations.push(i);
        }
        values[i] = v;
    }
    if !bound_violations.is_empty() {
        log::warn!(
            "{} Dirichlet values violate the eigenvalue bounds [{}, {}]",
            bound_violations.len(),
            bounds.eps(),
            bounds.kappa()
        );
    }
    Ok(DirichletData { fixed, values, bound_violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh2d::{build_dofmap, build_structured, interpolate_tensor, Rect};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn rotation() -> VelocityFn {
        Arc::new(|x: Point, _| [-x[1], x[0]])
    }

    fn setup(p: usize, degree: usize) -> (TriMesh, DofMap) {
        let m = build_structured(p, Rect::UNIT).unwrap();
        let dm = build_dofmap(&m, degree, |_, _| false).unwrap();
        (m, dm)
    }

    #[test]
    fn mass_partition_of_unity() {
        for degree in [1, 2] {
            let (m, dm) = setup(5, degree);
            let mut c = Coefficients::transport(Coefficients::zero_velocity(), 0.0);
            c.reaction = 1.0;
            let f = assemble_volume_forms(&m, &dm, &c, 0.0).unwrap();
            let total: f64 = f.mass.matvec(&vec![1.0; dm.len()]).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(f.mass.asymmetry() < 1e-16);
            assert_eq!(f.reaction, f.mass);
        }
    }

    #[test]
    fn pure_transport_has_no_diffusion_or_reaction() {
        let (m, dm) = setup(4, 1);
        let f = assemble_volume_forms(&m, &dm, &Coefficients::transport(rotation(), 0.0), 0.0).unwrap();
        assert_eq!(f.diffusion.max_abs(), 0.0);
        assert_eq!(f.reaction.max_abs(), 0.0);
    }

    #[test]
    fn convection_is_skew_on_interior_functions() {
        for degree in [1, 2] {
            let (m, dm) = setup(7, degree);
            let f = assemble_volume_forms(&m, &dm, &Coefficients::transport(rotation(), 0.0), 0.0).unwrap();
            let mut rng = StdRng::seed_from_u64(9);
            for _ in 0..20 {
                let v: Vec<f64> = (0..dm.len())
                    .map(|i| if dm.is_boundary(i) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                    .collect();
                let vv: f64 = v.iter().map(|x| x * x).sum();
                assert!(f.convection.bilinear(&v, &v).abs() <= 1e-10 * vv);
            }
        }
    }

    #[test]
    fn diffusion_matches_laplacian_identity() {
        // constants lie in the kernel, and (K u, u) = ∫|∇u|² for u = x
        let (m, dm) = setup(6, 2);
        let mut c = Coefficients::transport(Coefficients::zero_velocity(), 0.0);
        c.diffusion = Some(Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]));
        let f = assemble_volume_forms(&m, &dm, &c, 0.0).unwrap();
        let ones = vec![1.0; dm.len()];
        assert!(f.diffusion.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = dm.coords.iter().map(|p| p[0]).collect();
        assert!((f.diffusion.bilinear(&x, &x) - 1.0).abs() < 1e-12);
        assert!(f.diffusion.asymmetry() < 1e-14);
    }

    #[test]
    fn indefinite_diffusion_rejected() {
        let (m, dm) = setup(3, 1);
        let mut c = Coefficients::transport(Coefficients::zero_velocity(), 0.0);
        c.diffusion = Some(Arc::new(|_| [[1.0, 0.0], [0.0, -1.0]]));
        assert!(matches!(
            assemble_volume_forms(&m, &dm, &c, 0.0),
            Err(AssemblyError::DiffusionNotPsd { .. })
        ));
    }

    #[test]
    fn cip_zero_gamma_is_zero() {
        let (m, dm) = setup(4, 2);
        assert_eq!(assemble_cip(&m, &dm, &rotation(), 0.0, 0.0).unwrap().nnz(), 0);
    }

    #[test]
    fn cip_annihilates_global_affines_and_is_symmetric() {
        for degree in [1, 2] {
            let (m, dm) = setup(6, degree);
            let j = assemble_cip(&m, &dm, &rotation(), 0.0, 0.3).unwrap();
            assert!(j.asymmetry() < 1e-15);
            let v: Vec<f64> = dm.coords.iter().map(|p| 2.0 - 3.0 * p[0] + 0.7 * p[1]).collect();
            assert!(j.bilinear(&v, &v).abs() < 1e-12);
            if degree == 2 {
                // global quadratics have continuous gradients too
                let q: Vec<f64> = dm.coords.iter().map(|p| p[0] * p[0] - p[0] * p[1]).collect();
                assert!(j.bilinear(&q, &q).abs() < 1e-12);
            }
            let mut rng = StdRng::seed_from_u64(21);
            for _ in 0..10 {
                let r: Vec<f64> = (0..dm.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(j.bilinear(&r, &r) >= -1e-14);
            }
        }
    }

    #[test]
    fn cip_single_facet_hand_calculation() {
        // Two triangles (0,0),(1,0),(1,1) and (0,0),(1,1),(0,1); shared diagonal.
        let (m, dm) = setup(2, 1);
        let beta: VelocityFn = Arc::new(|_, _| [3.0, 4.0]);
        let gamma = 0.5;
        let j = assemble_cip(&m, &dm, &beta, 0.0, gamma).unwrap();
        // hat at vertex 3 = (1,1): grad is (0,1) on the lower triangle and (1,0) on the upper one
        let mut v = vec![0.0; 4];
        v[3] = 1.0;
        let jump2 = 2.0; // |(0,1) - (1,0)|²
        let hf = 2f64.sqrt();
        let expected = gamma * 5.0 * hf * hf * jump2 * hf;
        assert!((j.bilinear(&v, &v) - expected).abs() < 1e-12);
    }

    #[test]
    fn facet_velocity_norm_of_constant_field() {
        let beta: VelocityFn = Arc::new(|_, _| [3.0, -4.0]);
        assert_eq!(facet_velocity_max(&beta, [0.0, 0.0], [1.0, 1.0], 0.0), 5.0);
    }

    #[test]
    fn load_vectors() {
        let (m, dm) = setup(5, 2);
        let zero: TensorFn = Arc::new(|_, _| SymTensor3::ZERO);
        assert!(assemble_load(&m, &dm, &zero, 0.0).iter().all(|v| *v == SymTensor3::ZERO));
        let ident: TensorFn = Arc::new(|_, _| SymTensor3::IDENTITY);
        let l = assemble_load(&m, &dm, &ident, 0.0);
        assert!((l.iter().map(|v| v[0]).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(l.iter().all(|v| v[3] == 0.0));
    }

    #[test]
    fn load_of_linear_source_matches_mass_times_interpolant() {
        let (m, dm) = setup(5, 1);
        let src: TensorFn = Arc::new(|x, _| SymTensor3::new(x[0], 1.0 + x[1], 0.0, x[0] - x[1], 0.0, 2.0));
        let l = assemble_load(&m, &dm, &src, 0.0);
        let interp = interpolate_tensor(&dm, |x| src(x, 0.0)).unwrap();
        let mut c = Coefficients::transport(Coefficients::zero_velocity(), 0.0);
        c.reaction = 0.0;
        let mass = assemble_volume_forms(&m, &dm, &c, 0.0).unwrap().mass;
        for comp in 0..6 {
            let mu = mass.matvec(&interp.component(comp));
            for (i, v) in mu.iter().enumerate() {
                assert!((v - l[i][comp]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dirichlet_regions() {
        let m = build_structured(5, Rect::UNIT).unwrap();
        let dm = build_dofmap(&m, 1, |x, n| -x[1] * n[0] + x[0] * n[1] < -1e-12).unwrap();
        let zero = NodalTensorField::zeros(dm.len());
        let whole = apply_dirichlet(&dm, DirichletRegion::WholeBoundary, &zero, &Bounds::unit()).unwrap();
        assert_eq!(whole.fixed_count(), 16);
        let inflow = apply_dirichlet(&dm, DirichletRegion::Inflow, &zero, &Bounds::unit()).unwrap();
        for (i, x) in dm.coords.iter().enumerate() {
            assert_eq!(inflow.fixed[i], x[1] == 0.0 || x[0] == 1.0);
        }
        let bad = NodalTensorField::constant(dm.len(), SymTensor3::diag(2.0, 0.0, 0.0));
        let d = apply_dirichlet(&dm, DirichletRegion::Inflow, &bad, &Bounds::unit()).unwrap();
        assert_eq!(d.bound_violations.len(), inflow.fixed_count());
    }

    #[test]
    fn assembly_is_deterministic() {
        let (m, dm) = setup(9, 2);
        let c = Coefficients::transport(rotation(), 0.1);
        let a = assemble_forms(&m, &dm, &c, 0.0).unwrap();
        let b = assemble_forms(&m, &dm, &c, 0.0).unwrap();
        assert_eq!(a.stiffness(), b.stiffness());
        assert_eq!(a.mass, b.mass);
    }
}
