//! Conforming triangulations of the unit square, face topology and nested
//! red refinement.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{cast, dist, from_usize, Point, Real};

/// A mesh edge with the orientation data needed for jumps and averages.
///
/// The normal always points out of `plus`; on interior faces that is into
/// `minus`. `plus` is the lower element index of the two neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRecord<T> {
    pub vertices: [usize; 2],
    pub length: T,
    pub normal: Point<T>,
    pub plus: usize,
    pub minus: Option<usize>,
}

impl<T: Real> FaceRecord<T> {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    vertices: Vec<Point<T>>,
    elements: Vec<[usize; 3]>,
    faces: Vec<FaceRecord<T>>,
    /// Face index of local edge `i` (vertices `i`, `i+1`) of every element.
    element_faces: Vec<[usize; 3]>,
    diameters: Vec<T>,
    areas: Vec<T>,
    barycenters: Vec<Point<T>>,
    level: usize,
    parent_map: Option<Vec<usize>>,
}

fn signed_area<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * cast(0.5)
}

/// Closed point-in-triangle test with a small relative slack.
pub fn point_in_triangle<T: Real>(p: Point<T>, tri: [Point<T>; 3]) -> bool {
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    let slack = -area * cast(1e-10);
    let s = area.signum();
    (0..3).all(|i| signed_area(tri[i], tri[(i + 1) % 3], p) * s >= slack)
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh from raw vertices and element triples. Clockwise
    /// triples are reoriented; degenerate elements are rejected.
    pub fn from_elements(vertices: Vec<Point<T>>, elements: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_level(vertices, elements, 0, None)
    }

    fn with_level(
        vertices: Vec<Point<T>>,
        mut elements: Vec<[usize; 3]>,
        level: usize,
        parent_map: Option<Vec<usize>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        let mut barycenters = Vec::with_capacity(elements.len());
        for (k, tri) in elements.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Topology(format!("element {k} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let mut area = signed_area(a, b, c);
            if area == T::zero() {
                return Err(Error::Topology(format!("element {k} is degenerate")));
            }
            if area < T::zero() {
                tri.swap(1, 2);
                area = -area;
            }
            areas.push(area);
            diameters.push(dist(a, b).max(dist(b, c)).max(dist(c, a)));
            let third = T::one() / cast(3.0);
            barycenters.push([(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]);
        }
        let mut mesh = TriMesh {
            vertices,
            elements,
            faces: Vec::new(),
            element_faces: Vec::new(),
            diameters,
            areas,
            barycenters,
            level,
            parent_map,
        };
        mesh.build_face_topology()?;
        Ok(mesh)
    }

    /// `n x n` squares on the unit square, each split along its
    /// lower-left to upper-right diagonal.
    pub fn uniform_square(n: usize) -> Self {
        assert!(n >= 1, "uniform_square requires n >= 1");
        let nf = from_usize::<T>(n);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([from_usize::<T>(i) / nf, from_usize::<T>(j) / nf]);
            }
        }
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        Self::from_elements(vertices, elements).expect("structured mesh is conforming")
    }

    /// Splits every triangle into four congruent children through its edge
    /// midpoints. Children of element `k` are `4k..4k+4`.
    pub fn refine_red(&self) -> Self {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let half = cast::<T>(0.5);
        for face in &self.faces {
            let [a, b] = face.vertices.map(|v| self.vertices[v]);
            vertices.push([(a[0] + b[0]) * half, (a[1] + b[1]) * half]);
        }
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        let mut parents = Vec::with_capacity(4 * self.elements.len());
        for (k, (tri, fc)) in self.elements.iter().zip(&self.element_faces).enumerate() {
            let [a, b, c] = *tri;
            let (mab, mbc, mca) = (nv + fc[0], nv + fc[1], nv + fc[2]);
            elements.extend_from_slice(&[[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]]);
            parents.extend_from_slice(&[k; 4]);
        }
        Self::with_level(vertices, elements, self.level + 1, Some(parents))
            .expect("red refinement of a conforming mesh is conforming")
    }

    /// Rebuilds the face list. Faces are sorted by endpoint pair; the lower
    /// element index of an interior face is its `plus` side.
    pub fn build_face_topology(&mut self) -> Result<()> {
        let mut edges: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(3 * self.elements.len());
        for (k, tri) in self.elements.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                edges.push(([a.min(b), a.max(b)], k, i));
            }
        }
        edges.sort_unstable();
        let mut faces = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; self.elements.len()];
        let mut start = 0;
        while start < edges.len() {
            let mut end = start + 1;
            while end < edges.len() && edges[end].0 == edges[start].0 {
                end += 1;
            }
            if end - start > 2 {
                return Err(Error::Topology(format!(
                    "edge {:?} is shared by {} elements",
                    edges[start].0,
                    end - start
                )));
            }
            let (key, plus, local) = edges[start];
            let minus = (end - start == 2).then(|| edges[start + 1].1);
            // Local edge of `plus` runs counterclockwise, so its right-hand
            // normal points outward.
            let tri = self.elements[plus];
            let (p, q) = (self.vertices[tri[local]], self.vertices[tri[(local + 1) % 3]]);
            let length = dist(p, q);
            let normal = [(q[1] - p[1]) / length, (p[0] - q[0]) / length];
            let fid = faces.len();
            for &(_, k, i) in &edges[start..end] {
                element_faces[k][i] = fid;
            }
            faces.push(FaceRecord { vertices: key, length, normal, plus, minus });
            start = end;
        }
        self.faces = faces;
        self.element_faces = element_faces;
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn faces(&self) -> &[FaceRecord<T>] {
        &self.faces
    }

    pub fn element_faces(&self, k: usize) -> [usize; 3] {
        self.element_faces[k]
    }

    pub fn triangle(&self, k: usize) -> [Point<T>; 3] {
        self.elements[k].map(|v| self.vertices[v])
    }

    pub fn diameter(&self, k: usize) -> T {
        self.diameters[k]
    }

    pub fn area(&self, k: usize) -> T {
        self.areas[k]
    }

    pub fn barycenter(&self, k: usize) -> Point<T> {
        self.barycenters[k]
    }

    pub fn barycenters(&self) -> &[Point<T>] {
        &self.barycenters
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent_map(&self) -> Option<&[usize]> {
        self.parent_map.as_deref()
    }

    /// Global mesh size `h = max h_K`.
    pub fn h(&self) -> T {
        self.diameters.iter().copied().fold(T::zero(), T::max)
    }

    /// Face-neighbors of element `k` in local edge order.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_faces[k].into_iter().filter_map(move |f| {
            let face = &self.faces[f];
            match face.minus {
                Some(m) if face.plus == k => Some(m),
                Some(_) => Some(face.plus),
                None => None,
            }
        })
    }

    /// Diameter of the largest inscribed ball of element `k`.
    pub fn inscribed_diameter(&self, k: usize) -> T {
        let [a, b, c] = self.triangle(k);
        let perimeter = dist(a, b) + dist(b, c) + dist(c, a);
        cast::<T>(4.0) * self.areas[k] / perimeter
    }

    /// Quasi-uniformity ratio `h / min rho_K`.
    pub fn quasi_uniformity(&self) -> T {
        let rho = (0..self.num_elements()).map(|k| self.inscribed_diameter(k)).fold(T::infinity(), T::min);
        self.h() / rho
    }

    /// Writes the plain-text mesh dump: `ndim 2`, `v x y`, `t i j k`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "ndim 2")?;
        for v in &self.vertices {
            writeln!(out, "v {:e} {:e}", v[0], v[1])?;
        }
        for t in &self.elements {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Nested red refinements of a coarse structured mesh whose finest level
/// has `n x n` squares. The coarse resolution is `n` halved while it stays
/// even and the result is at least 2 (`n = 40` gives 5, 10, 20, 40).
pub fn nested_square_hierarchy<T: Real>(n: usize) -> Vec<TriMesh<T>> {
    assert!(n >= 1);
    let mut coarse = n;
    let mut refinements = 0;
    while coarse.is_multiple_of(2) && coarse / 2 >= 2 {
        coarse /= 2;
        refinements += 1;
    }
    let mut levels = vec![TriMesh::uniform_square(coarse)];
    for _ in 0..refinements {
        let next = levels.last().unwrap().refine_red();
        levels.push(next);
    }
    levels
}
