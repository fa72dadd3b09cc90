//! Structured triangulations of rectangles, P1/P2 Lagrange dof numbering and
//! interior-facet connectivity.

use std::collections::HashMap;
use std::io::Write;
use std::ops::{Index, IndexMut};

use crate::element::{self, TriangleGeometry, P2_EDGES};
use crate::error::MeshError;
use crate::tensor3::SymTensor3;

pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFacet {
    pub vertices: [usize; 2],
    pub edge: usize,
    /// Triangle on the left of the directed edge `vertices[0] → vertices[1]`.
    pub left: usize,
    pub right: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 2],
    pub edge: usize,
    pub triangle: usize,
    pub normal: [f64; 2],
    pub length: f64,
}

impl BoundaryFacet {
    pub fn midpoint(&self, mesh: &TriMesh) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

/// Uniform grid metadata kept by [`build_structured`] for O(1) point location.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    p: usize,
    domain: Rect,
}

/// Conforming triangulation with counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Unique edges as sorted vertex pairs, numbered by first appearance.
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of local edge `k` (vertices `k`, `k+1 mod 3`).
    pub triangle_edges: Vec<[usize; 3]>,
    pub interior_facets: Vec<InteriorFacet>,
    pub boundary_facets: Vec<BoundaryFacet>,
    grid: Option<Grid>,
}

impl TriMesh {
    /// Builds edge and facet connectivity for an arbitrary triangle list.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut owners: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let geo = TriangleGeometry::new(tri.map(|v| vertices[v]));
            if !(geo.area > 0.0) {
                return Err(MeshError::Inverted(t));
            }
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    owners.push(Vec::new());
                    edges.len() - 1
                });
                owners[id].push((t, k));
                te[k] = id;
            }
            triangle_edges.push(te);
        }
        let mut interior_facets = Vec::new();
        let mut boundary_facets = Vec::new();
        for (id, own) in owners.iter().enumerate() {
            match own.as_slice() {
                [(t, k)] => {
                    let tri = triangles[*t];
                    let (a, b) = (tri[*k], tri[(*k + 1) % 3]);
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let length = element::dist(pa, pb);
                    // CCW orientation: the outward normal is the edge direction rotated clockwise.
                    let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                    boundary_facets.push(BoundaryFacet { vertices: [a, b], edge: id, triangle: *t, normal, length });
                }
                [(t0, k0), (t1, _)] => {
                    let tri = triangles[*t0];
                    let (a, b) = (tri[*k0], tri[(*k0 + 1) % 3]);
                    let length = element::dist(vertices[a], vertices[b]);
                    interior_facets.push(InteriorFacet { vertices: [a, b], edge: id, left: *t0, right: *t1, length });
                }
                _ => {
                    let [a, b] = edges[id];
                    return Err(MeshError::NonManifold(a, b));
                }
            }
        }
        Ok(TriMesh { vertices, triangles, edges, triangle_edges, interior_facets, boundary_facets, grid: None })
    }

    pub fn geometry(&self, t: usize) -> TriangleGeometry {
        TriangleGeometry::new(self.triangles[t].map(|v| self.vertices[v]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.geometry(t).area).sum()
    }

    /// Largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.geometry(t).diameter()).fold(0.0, f64::max)
    }

    /// Triangle containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        if let Some(g) = self.grid {
            let d = g.domain;
            if !d.contains(x, TOL) {
                return None;
            }
            let n = (g.p - 1) as f64;
            let fx = ((x[0] - d.x0) / (d.x1 - d.x0) * n).clamp(0.0, n);
            let fy = ((x[1] - d.y0) / (d.y1 - d.y0) * n).clamp(0.0, n);
            let i = (fx.floor() as usize).min(g.p - 2);
            let j = (fy.floor() as usize).min(g.p - 2);
            let base = 2 * (j * (g.p - 1) + i);
            for t in [base, base + 1] {
                let l = self.geometry(t).barycentric(x);
                if l.iter().all(|v| *v >= -1e-10) {
                    return Some((t, l));
                }
            }
        }
        (0..self.triangles.len()).find_map(|t| {
            let l = self.geometry(t).barycentric(x);
            l.iter().all(|v| *v >= -TOL).then_some((t, l))
        })
    }

    /// Writes the triangulation as an ASCII legacy-VTK unstructured grid.
    pub fn write_vtk<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "triangulation")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {} 0", v[0], v[1])?;
        }
        writeln!(out, "CELLS {} {}", self.triangles.len(), 4 * self.triangles.len())?;
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "CELL_TYPES {}", self.triangles.len())?;
        for _ in &self.triangles {
            writeln!(out, "5")?;
        }
        Ok(())
    }
}

/// `p × p` vertices on `domain`, each of the `(p−1)²` squares split along
/// its lower-left to upper-right diagonal.
pub fn build_structured(p: usize, domain: Rect) -> Result<TriMesh, MeshError> {
    if p < 2 {
        return Err(MeshError::TooFewPoints(p));
    }
    let Rect { x0, x1, y0, y1 } = domain;
    if !(x1 > x0 && y1 > y0) {
        return Err(MeshError::DegenerateDomain { x0, x1, y0, y1 });
    }
    let n = p - 1;
    let coord = |lo: f64, hi: f64, i: usize| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
    let mut vertices = Vec::with_capacity(p * p);
    for j in 0..p {
        for i in 0..p {
            vertices.push([coord(x0, x1, i), coord(y0, y1, j)]);
        }
    }
    let id = |i: usize, j: usize| j * p + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut mesh = TriMesh::from_triangles(vertices, triangles)?;
    mesh.grid = Some(Grid { p, domain });
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofClass {
    Interior,
    Inflow,
    OtherBoundary,
}

/// Continuous Lagrange dof numbering: vertex dofs first, then one dof per
/// edge (P2) in edge order.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub degree: usize,
    pub coords: Vec<Point>,
    pub cell_dofs: Vec<[usize; 6]>,
    pub classification: Vec<DofClass>,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn local_count(&self) -> usize {
        element::local_dof_count(self.degree)
    }

    /// Global dofs of triangle `t` in local order.
    pub fn dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t][..self.local_count()]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.classification[i] != DofClass::Interior
    }

    /// Evaluates the finite element function `field` at `x`.
    pub fn evaluate(&self, mesh: &TriMesh, field: &NodalTensorField, x: Point) -> Option<SymTensor3> {
        let (t, l) = mesh.locate(x)?;
        Some(self.evaluate_in(t, l, field))
    }

    pub fn evaluate_in(&self, t: usize, l: [f64; 3], field: &NodalTensorField) -> SymTensor3 {
        let phi = element::shape_values(self.degree, l);
        let mut v = SymTensor3::ZERO;
        for (k, &dof) in self.dofs(t).iter().enumerate() {
            v.axpy(phi[k], &field[dof]);
        }
        v
    }

    /// Dofs lying on a boundary facet: its endpoints and, for P2, its midpoint.
    pub fn facet_dofs(&self, mesh: &TriMesh, facet: &BoundaryFacet) -> Vec<usize> {
        let mut out = facet.vertices.to_vec();
        if self.degree == 2 {
            out.push(mesh.vertices.len() + facet.edge);
        }
        out
    }
}

/// Numbers dofs and classifies boundary dofs. `is_inflow(midpoint, normal)`
/// is evaluated once per boundary facet; every dof on an inflow facet is
/// inflow, so a corner is inflow when either adjacent facet is.
pub fn build_dofmap<F>(mesh: &TriMesh, degree: usize, is_inflow: F) -> Result<DofMap, MeshError>
where
    F: Fn(Point, [f64; 2]) -> bool,
{
    if degree != 1 && degree != 2 {
        return Err(MeshError::UnsupportedDegree(degree));
    }
    let nv = mesh.vertices.len();
    let mut coords = mesh.vertices.clone();
    if degree == 2 {
        coords.extend(mesh.edges.iter().map(|[a, b]| {
            let (pa, pb) = (mesh.vertices[*a], mesh.vertices[*b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }));
    }
    let cell_dofs = mesh
        .triangles
        .iter()
        .zip(&mesh.triangle_edges)
        .map(|(tri, te)| {
            let mut d = [0usize; 6];
            d[..3].copy_from_slice(tri);
            if degree == 2 {
                // local edge k of the mesh joins vertices k and k+1, matching P2_EDGES
                debug_assert_eq!(P2_EDGES, [[0, 1], [1, 2], [2, 0]]);
                for k in 0..3 {
                    d[3 + k] = nv + te[k];
                }
            }
            d
        })
        .collect();
    let mut dm = DofMap { degree, coords, cell_dofs, classification: Vec::new() };
    let mut class = vec![DofClass::Interior; dm.len()];
    let mut inflow_facets = Vec::new();
    for f in &mesh.boundary_facets {
        for d in dm.facet_dofs(mesh, f) {
            class[d] = DofClass::OtherBoundary;
        }
        if is_inflow(f.midpoint(mesh), f.normal) {
            inflow_facets.push(f);
        }
    }
    for f in inflow_facets {
        for d in dm.facet_dofs(mesh, f) {
            class[d] = DofClass::Inflow;
        }
    }
    dm.classification = class;
    Ok(dm)
}

/// One symmetric tensor per Lagrange node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodalTensorField(pub Vec<SymTensor3>);

impl NodalTensorField {
    pub fn zeros(n: usize) -> Self {
        NodalTensorField(vec![SymTensor3::ZERO; n])
    }

    pub fn constant(n: usize, v: SymTensor3) -> Self {
        NodalTensorField(vec![v; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SymTensor3> {
        self.0.iter()
    }

    /// Scalar vector of component `c`.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.0.iter().map(|v| v[c]).collect()
    }

    pub fn set_component(&mut self, c: usize, values: &[f64]) {
        for (v, x) in self.0.iter_mut().zip(values) {
            v[c] = *x;
        }
    }

    /// Euclidean norm of all stored components.
    pub fn l2_norm(&self) -> f64 {
        self.0.iter().flat_map(|v| v.0.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, x: &NodalTensorField) {
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            a.axpy(alpha, b);
        }
    }

    pub fn scaled(&self, s: f64) -> NodalTensorField {
        NodalTensorField(self.0.iter().map(|v| *v * s).collect())
    }
}

impl Index<usize> for NodalTensorField {
    type Output = SymTensor3;
    fn index(&self, i: usize) -> &SymTensor3 {
        &self.0[i]
    }
}

impl IndexMut<usize> for NodalTensorField {
    fn index_mut(&mut self, i: usize) -> &mut SymTensor3 {
        &mut self.0[i]
    }
}

/// Nodal (Lagrange) interpolant of `f`.
pub fn interpolate_tensor<F>(dofmap: &DofMap, f: F) -> Result<NodalTensorField, MeshError>
where
    F: Fn(Point) -> SymTensor3,
{
    dofmap
        .coords
        .iter()
        .enumerate()
        .map(|(node, x)| {
            let v = f(*x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(MeshError::NonFiniteValue { node })
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(NodalTensorField)
}
