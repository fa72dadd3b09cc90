//! Benchmark problems: circular convection with smooth or piecewise
//! constant inflow data, and tensor-valued solid body rotation.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::assembly::{Coefficients, DirichletRegion, TensorFn, VelocityFn};
use crate::error::{Error, TensorError};
use crate::mesh2d::{NodalTensorField, Point, Rect};
use crate::tensor3::{eig_sym3, matmul, transpose, Bounds, Mat3, SymTensor3};

pub type InitialFn = Arc<dyn Fn(Point) -> SymTensor3 + Send + Sync>;

/// Names accepted by [`problem_by_name`].
pub const PROBLEM_NAMES: [&str; 3] = ["circular-smooth", "circular-discontinuous", "solid-body-rotation"];

/// Run parameters used when the caller does not override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemDefaults {
    pub gamma: f64,
    pub omega: f64,
    pub dt: f64,
    pub p: usize,
    pub degree: usize,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub domain: Rect,
    pub coefficients: Coefficients,
    /// `None` means `F = 0`.
    pub source: Option<TensorFn>,
    pub bounds: Bounds,
    pub dirichlet: DirichletRegion,
    /// Dirichlet data on the fixed boundary dofs.
    pub boundary: TensorFn,
    pub initial: InitialFn,
    pub exact: Option<TensorFn>,
    pub final_time: f64,
    pub defaults: ProblemDefaults,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("coefficients", &self.coefficients)
            .field("bounds", &self.bounds)
            .field("dirichlet", &self.dirichlet)
            .field("has_exact", &self.exact.is_some())
            .field("final_time", &self.final_time)
            .field("defaults", &self.defaults)
            .finish()
    }
}

impl ProblemSpec {
    pub fn velocity(&self, x: Point, t: f64) -> [f64; 2] {
        (self.coefficients.velocity)(x, t)
    }

    /// `β(x)·n < −1e-12`, the inflow test used for dof classification.
    pub fn is_inflow(&self, x: Point, normal: [f64; 2]) -> bool {
        let b = self.velocity(x, 0.0);
        b[0] * normal[0] + b[1] * normal[1] < -1e-12
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.coefficients.cip_gamma = gamma;
        self
    }
}

fn zero_tensor() -> TensorFn {
    Arc::new(|_, _| SymTensor3::ZERO)
}

fn sym_product(q: &Mat3, lambda: [f64; 3]) -> SymTensor3 {
    let d = [[lambda[0], 0.0, 0.0], [0.0, lambda[1], 0.0], [0.0, 0.0, lambda[2]]];
    SymTensor3::from_matrix(&matmul(&matmul(q, &d), &transpose(q)))
}

/// Rotation-reflection `R(r̃)` of the smooth circular solution.
pub fn smooth_frame(rt: f64) -> Mat3 {
    let (s, c) = rt.sin_cos();
    [[s, c, 0.0], [c, -s, 0.0], [0.0, 0.0, 1.0]]
}

/// Smooth circular profile `R diag(sin r̃, 1 − sin r̃, 0) R` with `r̃ = 3πr/4`.
pub fn smooth_profile(x: Point) -> SymTensor3 {
    let rt = 0.75 * PI * x[0].hypot(x[1]);
    let s = rt.sin();
    sym_product(&smooth_frame(rt), [s, 1.0 - s, 0.0])
}

/// Lower bound of the smooth profile's spectrum on the unit square.
pub fn smooth_eps() -> f64 {
    (0.75 * PI * SQRT_2).sin()
}

pub fn circular_velocity() -> VelocityFn {
    Arc::new(|x, _| [-x[1], x[0]])
}

pub fn circular_smooth() -> ProblemSpec {
    let eps = smooth_eps();
    let exact: TensorFn = Arc::new(|x, _| smooth_profile(x));
    ProblemSpec {
        name: "circular-smooth",
        domain: Rect::UNIT,
        coefficients: Coefficients::transport(circular_velocity(), 0.1),
        source: None,
        bounds: Bounds::new(eps, 1.0 - eps).expect("eps < 1 - eps"),
        dirichlet: DirichletRegion::Inflow,
        boundary: exact.clone(),
        initial: Arc::new(|_| SymTensor3::IDENTITY),
        exact: Some(exact),
        final_time: 4.0,
        defaults: ProblemDefaults { gamma: 0.1, omega: 1e-4, dt: 1.0 / 500.0, p: 51, degree: 1 },
    }
}

/// Displayed eigen-factorization `Q Λ Qᵀ` of a constant inflow tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization {
    pub name: &'static str,
    pub matrix: Mat3,
    pub q: Mat3,
    pub lambda: [f64; 3],
}

impl Factorization {
    pub fn reconstruct(&self) -> SymTensor3 {
        sym_product(&self.q, self.lambda)
    }

    pub fn tensor(&self) -> SymTensor3 {
        SymTensor3::from_matrix(&self.matrix)
    }
}

fn scaled(s: f64, m: Mat3) -> Mat3 {
    m.map(|row| row.map(|v| s * v))
}

/// The five constant inflow tensors of the discontinuous benchmark with
/// their displayed factorizations (`U₁` is diagonal: `Q = I`).
pub fn inflow_tensors() -> [Factorization; 5] {
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let q2 = scaled(0.2, [[4.0, 3.0, 0.0], [3.0, -4.0, 0.0], [0.0, 0.0, 5.0]]);
    let q34 = scaled(0.5, [[SQRT_2, SQRT_2, 0.0], [SQRT_2, -SQRT_2, 0.0], [0.0, 0.0, 2.0]]);
    let (s2, s3) = (SQRT_2, 3f64.sqrt());
    let q5 = scaled(6f64.sqrt() / 6.0, [[s2, s3, 1.0], [s2, -s3, 0.0], [s2, 0.0, -2.0]]);
    [
        Factorization {
            name: "U1",
            matrix: scaled(1.0 / 3.0, identity),
            q: identity,
            lambda: [1.0 / 3.0; 3],
        },
        Factorization {
            name: "U2",
            matrix: scaled(1.0 / 75.0, [[32.0, 24.0, 0.0], [24.0, 18.0, 0.0], [0.0, 0.0, 25.0]]),
            q: q2,
            lambda: [2.0 / 3.0, 0.0, 1.0 / 3.0],
        },
        Factorization {
            name: "U3",
            matrix: scaled(1.0 / 3.0, [[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            q: q34,
            lambda: [0.0, 2.0 / 3.0, 1.0 / 3.0],
        },
        Factorization {
            name: "U4",
            matrix: scaled(1.0 / 3.0, [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            q: q34,
            lambda: [2.0 / 3.0, 0.0, 1.0 / 3.0],
        },
        Factorization {
            name: "U5",
            matrix: scaled(1.0 / 3.0, [[1.0; 3]; 3]),
            // the displayed right factor repeats Q; only its first column
            // carries weight, so Q Λ Qᵀ is the consistent reading
            q: q5,
            lambda: [1.0, 0.0, 0.0],
        },
    ]
}

/// Index (0-based) of the inflow tensor used at radius `r`. The first
/// interval is closed at `r = 0` and the last one at `r = √2`.
pub fn inflow_interval(r: f64) -> usize {
    if r < 0.5 {
        0
    } else if r < 2.0 / 3.0 {
        1
    } else if r < 0.75 {
        2
    } else if r < 0.8 {
        3
    } else {
        4
    }
}

pub fn discontinuous_inflow(x: Point) -> SymTensor3 {
    let tensors = inflow_tensors();
    tensors[inflow_interval(x[0].hypot(x[1]))].tensor()
}

pub fn circular_discontinuous() -> ProblemSpec {
    ProblemSpec {
        name: "circular-discontinuous",
        domain: Rect::UNIT,
        coefficients: Coefficients::transport(circular_velocity(), 1e-3),
        source: None,
        bounds: Bounds::unit(),
        dirichlet: DirichletRegion::Inflow,
        boundary: Arc::new(|x, _| discontinuous_inflow(x)),
        initial: Arc::new(|_| SymTensor3::IDENTITY),
        exact: None,
        final_time: 4.0,
        defaults: ProblemDefaults { gamma: 1e-3, omega: 1e-2, dt: 1e-3, p: 121, degree: 1 },
    }
}

/// Argument order of the angle `φ` in the hump tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtanOrder {
    /// `φ = ½ atan2(x, y)`
    #[default]
    AsPrinted,
    /// `φ = ½ atan2(y, x)`
    Conventional,
}

pub const BODY_RADIUS: f64 = 0.15;
pub const BODY_CENTERS: [Point; 4] = [[0.25, 0.5], [0.5, 0.25], [0.75, 0.5], [0.5, 0.75]];
pub const ROTATION_CENTER: Point = [0.5, 0.5];

/// `S/r` with `S = [[x, y, 0], [y, −x, 0], [0, 0, r]]`; the `r = 0` limit
/// uses the direction of the local x axis.
fn radial_frame(x: f64, y: f64) -> Mat3 {
    let r = x.hypot(y);
    let (c, s) = if r > 0.0 { (x / r, y / r) } else { (1.0, 0.0) };
    [[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, 1.0]]
}

/// Eigenvector matrix and eigenvalues of body `k` (0-based: hump, cone,
/// semi-ellipse, slotted cylinder) at local coordinates `(x, y)` with
/// `x² + y² ≤ 1`. `None` inside the slot.
pub fn body_factors(k: usize, x: f64, y: f64, order: AtanOrder) -> Option<(Mat3, [f64; 3])> {
    let r = x.hypot(y);
    match k {
        0 => {
            let c = 0.5 * (1.0 + (PI * r).cos());
            let phi = 0.5
                * match order {
                    AtanOrder::AsPrinted => x.atan2(y),
                    AtanOrder::Conventional => y.atan2(x),
                };
            let (sp, cp) = phi.sin_cos();
            let p = [[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, sp, -cp]];
            Some((matmul(&p, &radial_frame(x, y)), [c * c * c, c * c, c]))
        }
        1 => {
            let p = scaled(0.1, [[10.0, 0.0, 0.0], [0.0, 8.0, 6.0], [0.0, 6.0, -8.0]]);
            let lambda = [0.5 - 0.5 * r, 0.5 - 0.5 * x.abs(), 1.0 - r];
            Some((matmul(&p, &radial_frame(x, y)), lambda))
        }
        2 => {
            let u = (1.0 - r * r).max(0.0).sqrt();
            let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            Some((identity, [u; 3]))
        }
        3 => {
            if !(x.abs() >= 1.0 / 6.0 || y >= 2.0 / 3.0) {
                return None;
            }
            let q = scaled(0.1, [[-8.0, 6.0, 0.0], [6.0, 8.0, 0.0], [0.0, 0.0, 10.0]]);
            // x = 0 (reachable only above the slot) joins the right half
            let lambda = if x >= 0.0 { [1.0, 0.1, 0.45] } else { [1.0, 1.0, 0.45] };
            Some((q, lambda))
        }
        _ => None,
    }
}

/// Tensor of body `k` at local coordinates; zero inside the slot.
pub fn body_tensor(k: usize, x: f64, y: f64, order: AtanOrder) -> SymTensor3 {
    match body_factors(k, x, y, order) {
        Some((q, lambda)) => sym_product(&q, lambda),
        None => SymTensor3::ZERO,
    }
}

/// Initial datum of the solid body rotation in global coordinates.
pub fn solid_body_initial(p: Point, order: AtanOrder) -> SymTensor3 {
    for (k, c) in BODY_CENTERS.iter().enumerate() {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        if dx.hypot(dy) <= BODY_RADIUS {
            return body_tensor(k, dx / BODY_RADIUS, dy / BODY_RADIUS, order);
        }
    }
    SymTensor3::ZERO
}

/// Exact solution: the initial datum rotated counterclockwise by angle `t`
/// about the domain center.
pub fn solid_body_exact(p: Point, t: f64, order: AtanOrder) -> SymTensor3 {
    let (s, c) = t.sin_cos();
    let (dx, dy) = (p[0] - ROTATION_CENTER[0], p[1] - ROTATION_CENTER[1]);
    let back = [ROTATION_CENTER[0] + c * dx + s * dy, ROTATION_CENTER[1] - s * dx + c * dy];
    solid_body_initial(back, order)
}

pub fn solid_body_rotation() -> ProblemSpec {
    solid_body_rotation_with(AtanOrder::AsPrinted)
}

pub fn solid_body_rotation_with(order: AtanOrder) -> ProblemSpec {
    let velocity: VelocityFn = Arc::new(|x, _| [0.5 - x[1], x[0] - 0.5]);
    ProblemSpec {
        name: "solid-body-rotation",
        domain: Rect::UNIT,
        coefficients: Coefficients::transport(velocity, 1e-3),
        source: None,
        bounds: Bounds::unit(),
        dirichlet: DirichletRegion::WholeBoundary,
        boundary: zero_tensor(),
        initial: Arc::new(move |x| solid_body_initial(x, order)),
        exact: Some(Arc::new(move |x, t| solid_body_exact(x, t, order))),
        final_time: 2.0 * PI,
        defaults: ProblemDefaults { gamma: 1e-3, omega: 1e-2, dt: 5e-4, p: 121, degree: 1 },
    }
}

pub fn problem_by_name(name: &str) -> Result<ProblemSpec, Error> {
    match name {
        "circular-smooth" => Ok(circular_smooth()),
        "circular-discontinuous" => Ok(circular_discontinuous()),
        "solid-body-rotation" => Ok(solid_body_rotation()),
        _ => Err(Error::Config(format!("unknown problem '{name}' (expected one of {})", PROBLEM_NAMES.join(", ")))),
    }
}

/// `(min λ_min, max λ_max)` over all nodes.
pub fn nodal_eig_range(field: &NodalTensorField) -> Result<(f64, f64), TensorError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in field.iter() {
        let d = eig_sym3(v)?;
        lo = lo.min(d.eigenvalues[0]);
        hi = hi.max(d.eigenvalues[2]);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh2d::{build_dofmap, build_structured, interpolate_tensor};
    use crate::tensor3::clamp_project;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn eig(v: &SymTensor3) -> [f64; 3] {
        eig_sym3(v).unwrap().eigenvalues
    }

    fn close(a: &SymTensor3, b: &SymTensor3, tol: f64) -> bool {
        (*a - *b).max_abs() < tol
    }

    #[test]
    fn smooth_profile_at_quarter_turn() {
        // r̃ = π/2 ⇔ r = 2/3
        let u = smooth_profile([2.0 / 3.0, 0.0]);
        assert!(close(&u, &SymTensor3::diag(1.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn smooth_profile_trace_and_spectrum() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let u = smooth_profile(x);
            assert!((u.trace() - 1.0).abs() < 1e-14);
            let s = (0.75 * PI * x[0].hypot(x[1])).sin();
            let mut expected = [s, 1.0 - s, 0.0];
            expected.sort_by(f64::total_cmp);
            let got = eig(&u);
            for k in 0..3 {
                assert!((got[k] - expected[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_bounds_enclose_exact_spectrum() {
        let spec = circular_smooth();
        let b = spec.bounds;
        assert!((b.eps() - (0.75 * PI * SQRT_2).sin()).abs() < 1e-15);
        assert!(b.eps() < -0.18 && b.eps() > -0.2);
        let n = 2000;
        for i in 0..=n {
            let r = SQRT_2 * i as f64 / n as f64;
            let v = smooth_profile([r / SQRT_2, r / SQRT_2]);
            assert!(b.admits(&v, 1e-9), "r = {r}");
        }
    }

    #[test]
    fn smooth_profile_is_stationary_solution() {
        // β·∇U = 0 by centered differences
        let mut rng = StdRng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..100 {
            let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            let b = [-x[1], x[0]];
            let dx = (smooth_profile([x[0] + h, x[1]]) - smooth_profile([x[0] - h, x[1]])) * (0.5 / h);
            let dy = (smooth_profile([x[0], x[1] + h]) - smooth_profile([x[0], x[1] - h])) * (0.5 / h);
            let res = dx * b[0] + dy * b[1];
            assert!(res.max_abs() < 1e-6);
        }
    }

    #[test]
    fn velocities_are_solenoidal() {
        let h = 1e-4;
        let mut rng = StdRng::seed_from_u64(3);
        for spec in [circular_smooth(), solid_body_rotation()] {
            for _ in 0..50 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let div = (spec.velocity([x[0] + h, x[1]], 0.0)[0] - spec.velocity([x[0] - h, x[1]], 0.0)[0]
                    + spec.velocity([x[0], x[1] + h], 0.0)[1]
                    - spec.velocity([x[0], x[1] - h], 0.0)[1])
                    / (2.0 * h);
                assert!(div.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inflow_factorizations_reconstruct() {
        for f in inflow_tensors() {
            assert!(close(&f.reconstruct(), &f.tensor(), 1e-12), "{}", f.name);
            let qtq = matmul(&transpose(&f.q), &f.q);
            for i in 0..3 {
                for j in 0..3 {
                    // the U5 frame as given is orthonormal only in its weighted column
                    if f.name == "U5" && (i > 0 || j > 0) {
                        continue;
                    }
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq[i][j] - e).abs() < 1e-12, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn inflow_tensors_trace_one_unit_spectrum() {
        for f in inflow_tensors() {
            let v = f.tensor();
            assert!((v.trace() - 1.0).abs() < 1e-14);
            let l = eig(&v);
            assert!(l[0] >= -1e-14 && l[2] <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn inflow_intervals() {
        assert!(close(&discontinuous_inflow([0.4, 0.0]), &(SymTensor3::IDENTITY * (1.0 / 3.0)), 1e-15));
        let l = eig(&discontinuous_inflow([0.7, 0.0]));
        for (a, b) in l.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(inflow_interval(0.0), 0);
        assert_eq!(inflow_interval(0.5), 1);
        assert_eq!(inflow_interval(2.0 / 3.0), 2);
        assert_eq!(inflow_interval(0.75), 3);
        assert_eq!(inflow_interval(0.8), 4);
        assert_eq!(inflow_interval(SQRT_2), 4);
    }

    #[test]
    fn body_factorizations_are_orthogonal_eigenpairs() {
        let mut rng = StdRng::seed_from_u64(4);
        for k in 0..4 {
            for order in [AtanOrder::AsPrinted, AtanOrder::Conventional] {
                for _ in 0..100 {
                    let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if x.hypot(y) > 1.0 {
                        continue;
                    }
                    let Some((q, lambda)) = body_factors(k, x, y, order) else { continue };
                    let qtq = matmul(&transpose(&q), &q);
                    for i in 0..3 {
                        for j in 0..3 {
                            assert!((qtq[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                        }
                    }
                    let mut sorted = lambda;
                    sorted.sort_by(f64::total_cmp);
                    let got = eig(&body_tensor(k, x, y, order));
                    for i in 0..3 {
                        assert!((got[i] - sorted[i]).abs() < 1e-12, "body {k}");
                        assert!(got[i] >= -1e-12 && got[i] <= 1.0 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn body_examples() {
        assert_eq!(solid_body_initial([0.05, 0.05], AtanOrder::AsPrinted), SymTensor3::ZERO);
        assert!(close(&solid_body_initial([0.75, 0.5], AtanOrder::AsPrinted), &SymTensor3::IDENTITY, 1e-15));
        // solid part of the slotted cylinder, right half
        let v = solid_body_initial([0.5 + 0.5 * BODY_RADIUS, 0.75], AtanOrder::AsPrinted);
        let l = eig(&v);
        for (a, b) in l.iter().zip([0.1, 0.45, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // inside the slot
        assert_eq!(solid_body_initial([0.5, 0.75], AtanOrder::AsPrinted), SymTensor3::ZERO);
        // hump peak
        assert!(close(&solid_body_initial([0.25, 0.5], AtanOrder::AsPrinted), &SymTensor3::IDENTITY, 1e-14));
    }

    #[test]
    fn solid_body_exact_rotates() {
        let order = AtanOrder::AsPrinted;
        // a quarter turn carries the hump center (0.25, 0.5) to (0.5, 0.25)
        let v = solid_body_exact([0.5, 0.25], 0.5 * PI, order);
        assert!(close(&v, &SymTensor3::IDENTITY, 1e-12));
        let x = [0.3, 0.45];
        assert!(close(&solid_body_exact(x, 2.0 * PI, order), &solid_body_initial(x, order), 1e-12));
    }

    #[test]
    fn initial_datum_range_is_unit() {
        let mesh = build_structured(121, Rect::UNIT).unwrap();
        let dm = build_dofmap(&mesh, 1, |_, _| false).unwrap();
        let spec = solid_body_rotation();
        let u0 = interpolate_tensor(&dm, |x| (spec.initial)(x)).unwrap();
        let (lo, hi) = nodal_eig_range(&u0).unwrap();
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12, "{lo} {hi}");
    }

    #[test]
    fn eig_range_examples() {
        let f = NodalTensorField::constant(5, SymTensor3::IDENTITY);
        assert_eq!(nodal_eig_range(&f).unwrap(), (1.0, 1.0));
        let mut rng = StdRng::seed_from_u64(5);
        let g = NodalTensorField(
            (0..50)
                .map(|_| {
                    let v = SymTensor3(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
                    clamp_project(&v, &Bounds::unit()).unwrap()
                })
                .collect(),
        );
        let (lo, hi) = nodal_eig_range(&g).unwrap();
        assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
    }

    #[test]
    fn inflow_classification_follows_velocity() {
        let spec = circular_discontinuous();
        assert!(spec.is_inflow([0.5, 0.0], [0.0, -1.0]));
        assert!(spec.is_inflow([1.0, 0.5], [1.0, 0.0]));
        assert!(!spec.is_inflow([0.5, 1.0], [0.0, 1.0]));
        assert!(!spec.is_inflow([0.0, 0.5], [-1.0, 0.0]));
    }

    #[test]
    fn lookup_by_name() {
        for name in PROBLEM_NAMES {
            assert_eq!(problem_by_name(name).unwrap().name, name);
        }
        assert!(problem_by_name("nope").is_err());
    }
}
