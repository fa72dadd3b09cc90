//! Reference-triangle machinery: quadrature rules and P1/P2 Lagrange shape
//! functions in barycentric coordinates.

use crate::mesh2d::Point;

/// Quadrature rule on the reference triangle; weights sum to one, so the
/// physical integral is `area * Σ w_q f(x_q)`.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    pub degree: usize,
}

const D4_A1: f64 = 0.445_948_490_915_965;
const D4_B1: f64 = 0.108_103_018_168_070;
const D4_A2: f64 = 0.091_576_213_509_771;
const D4_B2: f64 = 0.816_847_572_980_459;
const D4_W1: f64 = 0.223_381_589_678_011;
const D4_W2: f64 = 0.109_951_743_655_322;

static DEGREE4_POINTS: [[f64; 3]; 6] = [
    [D4_B1, D4_A1, D4_A1],
    [D4_A1, D4_B1, D4_A1],
    [D4_A1, D4_A1, D4_B1],
    [D4_B2, D4_A2, D4_A2],
    [D4_A2, D4_B2, D4_A2],
    [D4_A2, D4_A2, D4_B2],
];
static DEGREE4_WEIGHTS: [f64; 6] = [D4_W1, D4_W1, D4_W1, D4_W2, D4_W2, D4_W2];

const D6_A: f64 = 0.249_286_745_170_910;
const D6_AB: f64 = 0.501_426_509_658_179;
const D6_B: f64 = 0.063_089_014_491_502;
const D6_BB: f64 = 0.873_821_971_016_996;
const D6_C1: f64 = 0.053_145_049_844_817;
const D6_C2: f64 = 0.310_352_451_033_784;
const D6_C3: f64 = 0.636_502_499_121_399;
const D6_WA: f64 = 0.116_786_275_726_379;
const D6_WB: f64 = 0.050_844_906_370_207;
const D6_WC: f64 = 0.082_851_075_618_374;

static DEGREE6_POINTS: [[f64; 3]; 12] = [
    [D6_AB, D6_A, D6_A],
    [D6_A, D6_AB, D6_A],
    [D6_A, D6_A, D6_AB],
    [D6_BB, D6_B, D6_B],
    [D6_B, D6_BB, D6_B],
    [D6_B, D6_B, D6_BB],
    [D6_C1, D6_C2, D6_C3],
    [D6_C1, D6_C3, D6_C2],
    [D6_C2, D6_C1, D6_C3],
    [D6_C2, D6_C3, D6_C1],
    [D6_C3, D6_C1, D6_C2],
    [D6_C3, D6_C2, D6_C1],
];
static DEGREE6_WEIGHTS: [f64; 12] =
    [D6_WA, D6_WA, D6_WA, D6_WB, D6_WB, D6_WB, D6_WC, D6_WC, D6_WC, D6_WC, D6_WC, D6_WC];

/// Six-point Dunavant rule, exact for degree 4. Used for all volume forms.
pub const VOLUME_RULE: TriangleRule =
    TriangleRule { points: &DEGREE4_POINTS, weights: &DEGREE4_WEIGHTS, degree: 4 };

/// Twelve-point Dunavant rule, exact for degree 6. Used for error norms.
pub const ERROR_RULE: TriangleRule =
    TriangleRule { points: &DEGREE6_POINTS, weights: &DEGREE6_WEIGHTS, degree: 6 };

/// Three-point Gauss–Legendre rule on `[0, 1]`: `(abscissa, weight)`.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

/// Local dof ordering for P2: vertices 0,1,2 then edge midpoints of
/// (0,1), (1,2), (2,0).
pub const P2_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn local_dof_count(degree: usize) -> usize {
    match degree {
        1 => 3,
        2 => 6,
        _ => panic!("unsupported degree {degree}"),
    }
}

/// Shape function values at barycentric point `l`; entries beyond the local
/// dof count are zero.
pub fn shape_values(degree: usize, l: [f64; 3]) -> [f64; 6] {
    match degree {
        1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        2 => [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ],
        _ => panic!("unsupported degree {degree}"),
    }
}

/// Physical gradients of the shape functions at barycentric point `l`.
pub fn shape_gradients(degree: usize, geo: &TriangleGeometry, l: [f64; 3]) -> [[f64; 2]; 6] {
    let g = &geo.grad_bary;
    let mut out = [[0.0; 2]; 6];
    match degree {
        1 => {
            out[..3].copy_from_slice(g);
        }
        2 => {
            for i in 0..3 {
                let f = 4.0 * l[i] - 1.0;
                out[i] = [f * g[i][0], f * g[i][1]];
            }
            for (e, [a, b]) in P2_EDGES.iter().enumerate() {
                out[3 + e] = [
                    4.0 * (l[*a] * g[*b][0] + l[*b] * g[*a][0]),
                    4.0 * (l[*a] * g[*b][1] + l[*b] * g[*a][1]),
                ];
            }
        }
        _ => panic!("unsupported degree {degree}"),
    }
    out
}

/// Affine data of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub vertices: [Point; 3],
    /// Signed area (positive for counterclockwise orientation).
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / twice;
        let grad_bary = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        TriangleGeometry { vertices, area: 0.5 * twice, grad_bary }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.vertices;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }

    /// Barycentric coordinates of `x` (may be negative outside the triangle).
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let p0 = self.vertices[0];
        let g = &self.grad_bary;
        let dx = [x[0] - p0[0], x[1] - p0[1]];
        let l1 = g[1][0] * dx[0] + g[1][1] * dx[1];
        let l2 = g[2][0] * dx[0] + g[2][1] * dx[1];
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫_T x^a y^b over the unit right triangle = a! b! / (a+b+2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    fn check_rule(rule: &TriangleRule) {
        let geo = TriangleGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(rule.weights)
                    .map(|(l, w)| {
                        let x = geo.point(*l);
                        w * x[0].powi(a as i32) * x[1].powi(b as i32)
                    })
                    .sum::<f64>()
                    * geo.area;
                assert!((q - monomial_exact(a, b)).abs() < 1e-14, "x^{a} y^{b}: {q}");
            }
        }
    }

    #[test]
    fn volume_rule_exact_to_degree_4() {
        check_rule(&VOLUME_RULE);
    }

    #[test]
    fn error_rule_exact_to_degree_6() {
        check_rule(&ERROR_RULE);
    }

    #[test]
    fn gauss3_exact_to_degree_5() {
        for k in 0..=5 {
            let q: f64 = gauss3().iter().map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_functions_are_nodal_and_partition_unity() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for degree in [1, 2] {
            let n = local_dof_count(degree);
            for (i, l) in nodes[..n].iter().enumerate() {
                let v = shape_values(degree, *l);
                for (j, vj) in v[..n].iter().enumerate() {
                    assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
            let v = shape_values(degree, [0.2, 0.3, 0.5]);
            assert!((v[..n].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [0.9, 0.3], [0.4, 1.1]]);
        let l = [0.2, 0.5, 0.3];
        let x = geo.point(l);
        let h = 1e-6;
        for degree in [1, 2] {
            let g = shape_gradients(degree, &geo, l);
            for dir in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[dir] += h;
                xm[dir] -= h;
                let vp = shape_values(degree, geo.barycentric(xp));
                let vm = shape_values(degree, geo.barycentric(xm));
                for i in 0..local_dof_count(degree) {
                    let fd = (vp[i] - vm[i]) / (2.0 * h);
                    assert!((fd - g[i][dir]).abs() < 1e-7, "deg {degree} dof {i} dir {dir}");
                }
            }
        }
    }
}
