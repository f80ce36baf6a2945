//! Uniform Cartesian cuboid meshes.
//!
//! All indexing is lexicographic with x running fastest. Element-local vertex
//! `v` has offsets `(v & 1, (v >> 1) & 1, (v >> 2) & 1)` from the element's
//! lowest corner. Local edges 0..4 run along x, 4..8 along y and 8..12 along z;
//! local faces are ordered `-x, +x, -y, +y, -z, +z`.

use crate::error::{Error, Result};
use crate::Point;

/// Axis-aligned box `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: Point,
    pub hi: Point,
}

impl BoxDomain {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if (0..3).any(|d| !(hi[d] > lo[d]) || !lo[d].is_finite() || !hi[d].is_finite()) {
            return Err(Error::invalid(format!(
                "box requires lo < hi componentwise, got lo={:?} hi={:?}",
                lo.as_slice(),
                hi.as_slice()
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `(a, b)^3`.
    pub fn cube(a: f64, b: f64) -> Result<Self> {
        Self::new(Point::repeat(a), Point::repeat(b))
    }

    pub fn extent(&self) -> Point {
        self.hi - self.lo
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|d| p[d] >= self.lo[d] && p[d] <= self.hi[d])
    }
}

/// Vertex offsets of the 8 local vertices.
pub const VERTEX_OFFSETS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Local edges as pairs of local vertices, lower endpoint first.
pub const LOCAL_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [2, 3],
    [4, 5],
    [6, 7],
    [0, 2],
    [1, 3],
    [4, 6],
    [5, 7],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Local faces as 4 local vertices listed counter-clockwise in the face's
/// tangential frame (see [`Mesh::face_frame`]).
pub const LOCAL_FACES: [[usize; 4]; 6] = [
    [0, 2, 6, 4],
    [1, 3, 7, 5],
    [0, 4, 5, 1],
    [2, 6, 7, 3],
    [0, 1, 3, 2],
    [4, 5, 7, 6],
];

/// The two adjacent elements of a face. For interior faces the face normal is
/// the positive coordinate axis and points from `first` into `second`; for
/// boundary faces `second` is `None` and the normal is outward from `first`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceNeighbors {
    pub first: usize,
    pub second: Option<usize>,
}

impl FaceNeighbors {
    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }
}

/// Origin and spacing of one element; maps between global and local `[0,1]^3`
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    pub origin: Point,
    pub spacing: Point,
}

impl ElementFrame {
    pub fn to_local(&self, p: &Point) -> Point {
        (p - self.origin).component_div(&self.spacing)
    }

    pub fn to_global(&self, xi: &Point) -> Point {
        self.origin + xi.component_mul(&self.spacing)
    }

    pub fn vertex(&self, v: usize) -> Point {
        let o = VERTEX_OFFSETS[v];
        self.origin
            + Point::new(
                o[0] as f64 * self.spacing.x,
                o[1] as f64 * self.spacing.y,
                o[2] as f64 * self.spacing.z,
            )
    }

    pub fn volume(&self) -> f64 {
        self.spacing.x * self.spacing.y * self.spacing.z
    }

    pub fn center(&self) -> Point {
        self.origin + 0.5 * self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.max()
    }
}

/// Rectangle of a face: `origin + s * tangent_u + t * tangent_v` for
/// `(s, t)` in `[0, len_u] x [0, len_v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub axis: usize,
    pub origin: Point,
    pub axis_u: usize,
    pub axis_v: usize,
    pub len_u: f64,
    pub len_v: f64,
}

impl FaceFrame {
    pub fn corners(&self) -> [Point; 4] {
        let mut du = Point::zeros();
        du[self.axis_u] = self.len_u;
        let mut dv = Point::zeros();
        dv[self.axis_v] = self.len_v;
        [
            self.origin,
            self.origin + du,
            self.origin + du + dv,
            self.origin + dv,
        ]
    }

    pub fn area(&self) -> f64 {
        self.len_u * self.len_v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: BoxDomain,
    counts: [usize; 3],
    spacing: Point,
}

impl Mesh {
    pub fn new(domain: BoxDomain, counts: [usize; 3]) -> Result<Self> {
        if counts.contains(&0) {
            return Err(Error::invalid(format!(
                "element counts must be positive, got {counts:?}"
            )));
        }
        let ext = domain.extent();
        let spacing = Point::new(
            ext.x / counts[0] as f64,
            ext.y / counts[1] as f64,
            ext.z / counts[2] as f64,
        );
        Ok(Self {
            domain,
            counts,
            spacing,
        })
    }

    /// `n x n x n` elements on `domain`.
    pub fn uniform(domain: BoxDomain, n: usize) -> Result<Self> {
        Self::new(domain, [n, n, n])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> Point {
        self.spacing
    }

    /// Mesh size: the largest spacing.
    pub fn h(&self) -> f64 {
        self.spacing.max()
    }

    pub fn node_dims(&self) -> [usize; 3] {
        [self.counts[0] + 1, self.counts[1] + 1, self.counts[2] + 1]
    }

    pub fn num_nodes(&self) -> usize {
        let d = self.node_dims();
        d[0] * d[1] * d[2]
    }

    pub fn num_elements(&self) -> usize {
        self.counts.iter().product()
    }

    fn face_family_sizes(&self) -> [usize; 3] {
        let [nx, ny, nz] = self.counts;
        [(nx + 1) * ny * nz, nx * (ny + 1) * nz, nx * ny * (nz + 1)]
    }

    fn edge_family_sizes(&self) -> [usize; 3] {
        let [nx, ny, nz] = self.counts;
        [
            nx * (ny + 1) * (nz + 1),
            (nx + 1) * ny * (nz + 1),
            (nx + 1) * (ny + 1) * nz,
        ]
    }

    pub fn num_faces(&self) -> usize {
        self.face_family_sizes().iter().sum()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_family_sizes().iter().sum()
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let d = self.node_dims();
        ijk[0] + d[0] * (ijk[1] + d[1] * ijk[2])
    }

    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        let d = self.node_dims();
        [node % d[0], (node / d[0]) % d[1], node / (d[0] * d[1])]
    }

    pub fn node_point(&self, node: usize) -> Point {
        let [i, j, k] = self.node_ijk(node);
        self.point_at([i, j, k])
    }

    fn point_at(&self, ijk: [usize; 3]) -> Point {
        let lo = self.domain.lo;
        let hi = self.domain.hi;
        let mut p = Point::zeros();
        for d in 0..3 {
            // pin the last node exactly on hi
            p[d] = if ijk[d] == self.counts[d] {
                hi[d]
            } else {
                lo[d] + ijk[d] as f64 * self.spacing[d]
            };
        }
        p
    }

    pub fn element_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2])
    }

    pub fn element_ijk(&self, element: usize) -> [usize; 3] {
        let [nx, ny, _] = self.counts;
        [element % nx, (element / nx) % ny, element / (nx * ny)]
    }

    pub fn element_nodes(&self, element: usize) -> [usize; 8] {
        let [i, j, k] = self.element_ijk(element);
        std::array::from_fn(|v| {
            let o = VERTEX_OFFSETS[v];
            self.node_index([i + o[0], j + o[1], k + o[2]])
        })
    }

    pub fn element_frame(&self, element: usize) -> ElementFrame {
        let ijk = self.element_ijk(element);
        let origin = self.point_at(ijk);
        let top = self.point_at([ijk[0] + 1, ijk[1] + 1, ijk[2] + 1]);
        ElementFrame {
            origin,
            spacing: top - origin,
        }
    }

    /// Element containing `p` (points on shared faces go to the upper element
    /// except at the domain's upper boundary). `None` outside the domain.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        if !self.domain.contains(p) {
            return None;
        }
        let mut ijk = [0usize; 3];
        for d in 0..3 {
            let t = ((p[d] - self.domain.lo[d]) / self.spacing[d]).floor();
            ijk[d] = (t.max(0.0) as usize).min(self.counts[d] - 1);
        }
        Some(self.element_index(ijk))
    }

    /// Global face index for face `local` (0..6) of `element`.
    pub fn element_faces(&self, element: usize) -> [usize; 6] {
        let [i, j, k] = self.element_ijk(element);
        [
            self.face_index(0, [i, j, k]),
            self.face_index(0, [i + 1, j, k]),
            self.face_index(1, [i, j, k]),
            self.face_index(1, [i, j + 1, k]),
            self.face_index(2, [i, j, k]),
            self.face_index(2, [i, j, k + 1]),
        ]
    }

    /// Face with normal `axis` whose lowest node is `ijk`.
    pub fn face_index(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let [nx, ny, _] = self.counts;
        let sizes = self.face_family_sizes();
        let [i, j, k] = ijk;
        match axis {
            0 => i + (nx + 1) * (j + ny * k),
            1 => sizes[0] + i + nx * (j + (ny + 1) * k),
            _ => sizes[0] + sizes[1] + i + nx * (j + ny * k),
        }
    }

    /// `(axis, ijk of lowest node)` of a face.
    pub fn face_location(&self, face: usize) -> Result<(usize, [usize; 3])> {
        let [nx, ny, _] = self.counts;
        let sizes = self.face_family_sizes();
        if face >= self.num_faces() {
            return Err(Error::OutOfRange {
                what: "face",
                index: face,
                len: self.num_faces(),
            });
        }
        let (axis, local, dims) = if face < sizes[0] {
            (0, face, [nx + 1, ny])
        } else if face < sizes[0] + sizes[1] {
            (1, face - sizes[0], [nx, ny + 1])
        } else {
            (2, face - sizes[0] - sizes[1], [nx, ny])
        };
        let i = local % dims[0];
        let j = (local / dims[0]) % dims[1];
        let k = local / (dims[0] * dims[1]);
        Ok((axis, [i, j, k]))
    }

    pub fn face_neighbors(&self, face: usize) -> Result<FaceNeighbors> {
        let (axis, ijk) = self.face_location(face)?;
        let upper = (ijk[axis] < self.counts[axis]).then(|| self.element_index(ijk));
        let lower = (ijk[axis] > 0).then(|| {
            let mut below = ijk;
            below[axis] -= 1;
            self.element_index(below)
        });
        Ok(match (lower, upper) {
            (Some(a), Some(b)) => FaceNeighbors {
                first: a,
                second: Some(b),
            },
            (Some(a), None) => FaceNeighbors {
                first: a,
                second: None,
            },
            (None, Some(b)) => FaceNeighbors {
                first: b,
                second: None,
            },
            (None, None) => unreachable!("every face has at least one element"),
        })
    }

    /// Unit normal of a face, oriented as described on [`FaceNeighbors`].
    pub fn face_normal(&self, face: usize) -> Result<Point> {
        let (axis, ijk) = self.face_location(face)?;
        let mut n = Point::zeros();
        n[axis] = if ijk[axis] == 0 { -1.0 } else { 1.0 };
        Ok(n)
    }

    pub fn face_frame(&self, face: usize) -> Result<FaceFrame> {
        let (axis, ijk) = self.face_location(face)?;
        let (axis_u, axis_v) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let origin = self.point_at(ijk);
        let mut far = ijk;
        far[axis_u] += 1;
        far[axis_v] += 1;
        let top = self.point_at(far);
        Ok(FaceFrame {
            axis,
            origin,
            axis_u,
            axis_v,
            len_u: top[axis_u] - origin[axis_u],
            len_v: top[axis_v] - origin[axis_v],
        })
    }

    pub fn face_nodes(&self, face: usize) -> Result<[usize; 4]> {
        let (axis, ijk) = self.face_location(face)?;
        let (au, av) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let shift = |du: usize, dv: usize| {
            let mut p = ijk;
            p[au] += du;
            p[av] += dv;
            self.node_index(p)
        };
        Ok([shift(0, 0), shift(1, 0), shift(1, 1), shift(0, 1)])
    }

    /// Global edge index of an edge along `axis` whose lower node is `ijk`.
    pub fn edge_index(&self, axis: usize, ijk: [usize; 3]) -> usize {
        let [nx, ny, _] = self.counts;
        let sizes = self.edge_family_sizes();
        let [i, j, k] = ijk;
        match axis {
            0 => i + nx * (j + (ny + 1) * k),
            1 => sizes[0] + i + (nx + 1) * (j + ny * k),
            _ => sizes[0] + sizes[1] + i + (nx + 1) * (j + (ny + 1) * k),
        }
    }

    pub fn element_edges(&self, element: usize) -> [usize; 12] {
        let [i, j, k] = self.element_ijk(element);
        std::array::from_fn(|e| {
            let axis = e / 4;
            let lo = VERTEX_OFFSETS[LOCAL_EDGES[e][0]];
            self.edge_index(axis, [i + lo[0], j + lo[1], k + lo[2]])
        })
    }

    pub fn edge_nodes(&self, edge: usize) -> Result<[usize; 2]> {
        let [nx, ny, nz] = self.counts;
        let sizes = self.edge_family_sizes();
        if edge >= self.num_edges() {
            return Err(Error::OutOfRange {
                what: "edge",
                index: edge,
                len: self.num_edges(),
            });
        }
        let (axis, local, dims) = if edge < sizes[0] {
            (0, edge, [nx, ny + 1, nz + 1])
        } else if edge < sizes[0] + sizes[1] {
            (1, edge - sizes[0], [nx + 1, ny, nz + 1])
        } else {
            (2, edge - sizes[0] - sizes[1], [nx + 1, ny + 1, nz])
        };
        let ijk = [
            local % dims[0],
            (local / dims[0]) % dims[1],
            local / (dims[0] * dims[1]),
        ];
        let mut far = ijk;
        far[axis] += 1;
        Ok([self.node_index(ijk), self.node_index(far)])
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let ijk = self.node_ijk(node);
        (0..3).any(|d| ijk[d] == 0 || ijk[d] == self.counts[d])
    }

    /// All nodes on the domain boundary, ascending.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&n| self.is_boundary_node(n))
            .collect()
    }

    /// Node neighbors along mesh edges (up to 6).
    pub fn node_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let ijk = self.node_ijk(node);
        let dims = self.node_dims();
        (0..3).flat_map(move |d| {
            let down = (ijk[d] > 0).then(|| {
                let mut q = ijk;
                q[d] -= 1;
                self.node_index(q)
            });
            let up = (ijk[d] + 1 < dims[d]).then(|| {
                let mut q = ijk;
                q[d] += 1;
                self.node_index(q)
            });
            down.into_iter().chain(up)
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, HashSet};

    use super::*;

    fn unit(n: [usize; 3]) -> Mesh {
        Mesh::new(BoxDomain::cube(0.0, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn single_cuboid_counts() {
        let m = unit([1, 1, 1]);
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.num_nodes(), 8);
        assert_eq!(m.num_faces(), 6);
        assert_eq!(m.num_edges(), 12);
        for f in 0..6 {
            assert_eq!(
                m.face_neighbors(f).unwrap(),
                FaceNeighbors {
                    first: 0,
                    second: None
                }
            );
        }
        assert_eq!(m.boundary_nodes().len(), 8);
    }

    #[test]
    fn two_by_two_counts() {
        let m = unit([2, 2, 2]);
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.num_nodes(), 27);
        let interior = (0..m.num_faces())
            .filter(|&f| m.face_neighbors(f).unwrap().is_interior())
            .count();
        assert_eq!(interior, 12);
        let b = m.boundary_nodes();
        assert_eq!(b.len(), 26);
        assert!(!b.contains(&m.node_index([1, 1, 1])));
    }

    #[test]
    fn ten_per_axis_mesh_size() {
        let m = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), 10).unwrap();
        assert!((m.h() - 0.2).abs() < 1e-15);
        assert_eq!(m.num_elements(), 1000);
    }

    #[test]
    fn shared_x_face() {
        let m = unit([2, 1, 1]);
        let f = m.face_index(0, [1, 0, 0]);
        assert_eq!(
            m.face_neighbors(f).unwrap(),
            FaceNeighbors {
                first: 0,
                second: Some(1)
            }
        );
        assert_eq!(m.face_normal(f).unwrap(), Point::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn invalid_inputs() {
        let d = BoxDomain::cube(0.0, 1.0).unwrap();
        assert!(matches!(
            Mesh::new(d, [0, 1, 1]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(BoxDomain::new(Point::zeros(), Point::new(1.0, 0.0, 1.0)).is_err());
        let m = unit([1, 1, 1]);
        assert!(matches!(m.face_neighbors(6), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.edge_nodes(12), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn boundary_node_closed_form() {
        for n in 1..6usize {
            let m = unit([n, n, n]);
            let expected = (n + 1).pow(3) - (n.saturating_sub(1)).pow(3);
            assert_eq!(m.boundary_nodes().len(), expected, "n = {n}");
        }
    }

    #[test]
    fn volumes_sum_to_box() {
        let d = BoxDomain::new(Point::new(0.2, 0.2, 0.1), Point::new(1.0, 1.0, 0.9)).unwrap();
        let m = Mesh::new(d, [7, 5, 3]).unwrap();
        let total: f64 = (0..m.num_elements())
            .map(|e| m.element_frame(e).volume())
            .sum();
        assert!((total - d.volume()).abs() <= 1e-12 * d.volume());
    }

    /// Exhaustive check of the structured index arithmetic against a geometric
    /// enumeration on small anisotropic meshes.
    #[test]
    fn connectivity_by_enumeration() {
        for counts in [[1, 1, 1], [2, 3, 1], [3, 2, 4], [4, 4, 4]] {
            let m = unit(counts);
            let mut face_owners: HashMap<usize, Vec<usize>> = HashMap::new();
            let mut edge_owners: HashMap<usize, HashSet<usize>> = HashMap::new();
            for e in 0..m.num_elements() {
                let nodes = m.element_nodes(e);
                let frame = m.element_frame(e);
                for (v, &n) in nodes.iter().enumerate() {
                    assert!(n < m.num_nodes());
                    assert!((m.node_point(n) - frame.vertex(v)).norm() < 1e-14);
                }
                let faces = m.element_faces(e);
                let uniq: HashSet<_> = faces.iter().collect();
                assert_eq!(uniq.len(), 6);
                for (lf, &f) in faces.iter().enumerate() {
                    face_owners.entry(f).or_default().push(e);
                    let fnodes: HashSet<usize> = m.face_nodes(f).unwrap().into_iter().collect();
                    let local: HashSet<usize> = LOCAL_FACES[lf].iter().map(|&v| nodes[v]).collect();
                    assert_eq!(fnodes, local);
                }
                let edges = m.element_edges(e);
                for (le, &g) in edges.iter().enumerate() {
                    assert!(g < m.num_edges());
                    let [a, b] = m.edge_nodes(g).unwrap();
                    assert_eq!([a, b], LOCAL_EDGES[le].map(|v| nodes[v]));
                    edge_owners.entry(g).or_default().insert(e);
                }
            }
            assert_eq!(face_owners.len(), m.num_faces());
            for (f, owners) in &face_owners {
                let nb = m.face_neighbors(*f).unwrap();
                let mut expect = vec![nb.first];
                expect.extend(nb.second);
                let mut got = owners.clone();
                got.sort_unstable();
                expect.sort_unstable();
                assert_eq!(got, expect);
                if let Some(s) = nb.second {
                    // normal points from first to second
                    let n = m.face_normal(*f).unwrap();
                    let d = m.element_frame(s).center() - m.element_frame(nb.first).center();
                    assert!(d.dot(&n) > 0.0);
                } else {
                    let n = m.face_normal(*f).unwrap();
                    let fc = {
                        let c = m.face_frame(*f).unwrap().corners();
                        (c[0] + c[2]) * 0.5
                    };
                    assert!((fc - m.element_frame(nb.first).center()).dot(&n) > 0.0);
                }
            }
            // edge ownership: interior edges have 4 owners, boundary fewer
            assert_eq!(edge_owners.len(), m.num_edges());
            for (g, owners) in &edge_owners {
                let [a, b] = m.edge_nodes(*g).unwrap();
                let mid = (m.node_point(a) + m.node_point(b)) * 0.5;
                let expected = (0..m.num_elements())
                    .filter(|&e| {
                        let fr = m.element_frame(e);
                        (0..3).all(|d| {
                            mid[d] >= fr.origin[d] - 1e-12
                                && mid[d] <= fr.origin[d] + fr.spacing[d] + 1e-12
                        })
                    })
                    .count();
                assert_eq!(owners.len(), expected);
            }
        }
    }

    #[test]
    fn locate_points() {
        let m = unit([4, 4, 4]);
        assert_eq!(m.locate(&Point::new(0.1, 0.1, 0.1)), Some(0));
        assert_eq!(m.locate(&Point::new(1.0, 1.0, 1.0)), Some(63));
        assert_eq!(m.locate(&Point::new(1.1, 0.0, 0.0)), None);
    }
}
