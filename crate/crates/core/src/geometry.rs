//! Interface geometry on the mesh: edge intersections, interface element
//! classification, approximating planes and resolution checks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levelset::{gradient_at, LevelSet};
use crate::mesh::{ElementFrame, Mesh, LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature;
use crate::Point;

/// Largest admissible interior angle of the triangle spanning the
/// approximating plane, in degrees.
pub const MAX_TRIANGLE_ANGLE_DEG: f64 = 135.0;

/// Constant of the curvature resolution condition `h * kappa <= CURVATURE_LIMIT`.
pub const CURVATURE_LIMIT: f64 = 0.0288;

/// Number of uniform sub-intervals sampled per edge when looking for
/// multiple crossings.
const EDGE_SAMPLES: usize = 8;

const BISECTION_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// Side of a level-set value; values with `|v| < snap_tol` count as plus.
    #[inline]
    pub fn of(value: f64, snap_tol: f64) -> Side {
        if value <= -snap_tol {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutKind {
    NonInterfaceMinus,
    NonInterfacePlus,
    /// three intersection points on three edges
    TypeI,
    /// four intersection points on four parallel edges
    TypeII,
    /// four intersection points on two pairs of adjacent edges
    TypeIII,
    /// five intersection points
    TypeIV,
    /// six intersection points
    TypeV,
}

impl CutKind {
    pub fn is_interface(self) -> bool {
        !matches!(self, CutKind::NonInterfaceMinus | CutKind::NonInterfacePlus)
    }

    pub const ALL: [CutKind; 7] = [
        CutKind::NonInterfaceMinus,
        CutKind::NonInterfacePlus,
        CutKind::TypeI,
        CutKind::TypeII,
        CutKind::TypeIII,
        CutKind::TypeIV,
        CutKind::TypeV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CutKind::NonInterfaceMinus => "non_interface_minus",
            CutKind::NonInterfacePlus => "non_interface_plus",
            CutKind::TypeI => "type_i",
            CutKind::TypeII => "type_ii",
            CutKind::TypeIII => "type_iii",
            CutKind::TypeIV => "type_iv",
            CutKind::TypeV => "type_v",
        }
    }
}

/// Crossing of the interface with one element edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    /// local edge index (0..12)
    pub local_edge: usize,
    /// global edge index
    pub edge: usize,
    /// edge parameter in (0, 1) from the lower endpoint
    pub t: f64,
    pub point: Point,
}

/// The plane `tau_T`: through `centroid` with unit `normal` pointing to the
/// plus side, spanned by `triangle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxPlane {
    pub centroid: Point,
    pub normal: Point,
    pub triangle: [Point; 3],
    /// indices of the triangle vertices into the cut's intersection list
    pub triangle_indices: [usize; 3],
    pub max_angle_deg: f64,
}

impl ApproxPlane {
    /// Signed distance `(x - F) . n`.
    #[inline]
    pub fn level(&self, p: &Point) -> f64 {
        (p - self.centroid).dot(&self.normal)
    }

    /// Side of `p` relative to the plane; points on the plane count as plus.
    #[inline]
    pub fn side(&self, p: &Point) -> Side {
        if self.level(p) < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementCut {
    pub element: usize,
    pub frame: ElementFrame,
    pub kind: CutKind,
    pub intersections: Vec<Intersection>,
    pub vertex_signs: [Side; 8],
    pub plane: Option<ApproxPlane>,
}

impl ElementCut {
    pub fn is_interface(&self) -> bool {
        self.kind.is_interface()
    }

    /// Side used for the whole element when it is not an interface element.
    pub fn uniform_side(&self) -> Option<Side> {
        match self.kind {
            CutKind::NonInterfaceMinus => Some(Side::Minus),
            CutKind::NonInterfacePlus => Some(Side::Plus),
            _ => None,
        }
    }

    pub fn minus_vertex_count(&self) -> usize {
        self.vertex_signs
            .iter()
            .filter(|&&s| s == Side::Minus)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Vertices with `|value| < snap_factor * h` are put on the plus side.
    pub snap_factor: f64,
    /// When false, resolution violations that still leave a usable cut
    /// (extra crossings on an edge) are logged instead of rejected.
    pub strict: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            snap_factor: 1e-12,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct EdgeScan {
    sign_changes: usize,
    root: Option<(f64, Point)>,
}

fn edge_point(a: &Point, b: &Point, t: f64) -> Point {
    a + (b - a) * t
}

/// Samples the edge on `EDGE_SAMPLES` sub-intervals and, if the snapped signs
/// of the endpoints differ, bisects the (first) bracketing sub-interval.
fn scan_edge(ls: &dyn LevelSet, a: &Point, b: &Point, va: f64, vb: f64, snap: f64) -> EdgeScan {
    let len = (b - a).norm();
    let mut values = [0.0; EDGE_SAMPLES + 1];
    values[0] = va;
    values[EDGE_SAMPLES] = vb;
    for (k, v) in values.iter_mut().enumerate().take(EDGE_SAMPLES).skip(1) {
        *v = ls.value(&edge_point(a, b, k as f64 / EDGE_SAMPLES as f64));
    }
    let sides = values.map(|v| Side::of(v, snap));
    let changes: Vec<usize> = (0..EDGE_SAMPLES)
        .filter(|&k| sides[k] != sides[k + 1])
        .collect();
    let root = if sides[0] != sides[EDGE_SAMPLES] {
        let k = changes[0];
        let t0 = k as f64 / EDGE_SAMPLES as f64;
        let t1 = (k + 1) as f64 / EDGE_SAMPLES as f64;
        let t = bisect(ls, a, b, t0, t1, len);
        Some((t, edge_point(a, b, t)))
    } else {
        None
    };
    EdgeScan {
        sign_changes: changes.len(),
        root,
    }
}

/// Root of the level set on `[lo, hi]` along the edge, by bisection on the raw
/// sign. A bracket whose raw endpoint signs agree (possible when a value lies
/// inside the snapping band) resolves to the endpoint with smaller residual.
fn bisect(ls: &dyn LevelSet, a: &Point, b: &Point, mut lo: f64, mut hi: f64, len: f64) -> f64 {
    let tol = 1e-13 * len;
    let mut vlo = ls.value(&edge_point(a, b, lo));
    let vhi = ls.value(&edge_point(a, b, hi));
    if vlo == 0.0 {
        return lo;
    }
    if vhi == 0.0 {
        return hi;
    }
    if (vlo < 0.0) == (vhi < 0.0) {
        return if vlo.abs() <= vhi.abs() { lo } else { hi };
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let v = ls.value(&edge_point(a, b, mid));
        if v.abs() <= tol || hi - lo <= f64::EPSILON {
            break;
        }
        if (v < 0.0) == (vlo < 0.0) {
            lo = mid;
            vlo = v;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Crossing of the interface with the segment `a`-`b`, if the endpoint values
/// have strictly opposite signs.
///
/// Fails with [`Error::HypothesisViolation`] (element `usize::MAX`) when the
/// interface crosses the segment more than once.
pub fn edge_intersection(ls: &dyn LevelSet, a: &Point, b: &Point) -> Result<Option<Point>> {
    let va = ls.value(a);
    let vb = ls.value(b);
    let scan = scan_edge(ls, a, b, va, vb, 0.0);
    if scan.sign_changes > 1 {
        return Err(Error::HypothesisViolation {
            element: usize::MAX,
            reason: format!(
                "interface crosses edge {:?}-{:?} {} times",
                a.as_slice(),
                b.as_slice(),
                scan.sign_changes
            ),
        });
    }
    if va * vb < 0.0 {
        Ok(scan.root.map(|(_, p)| p))
    } else {
        Ok(None)
    }
}

/// Local edges bounding each local face.
pub fn face_local_edges(face: usize) -> [usize; 4] {
    let verts = LOCAL_FACES[face];
    std::array::from_fn(|i| {
        let (a, b) = (verts[i], verts[(i + 1) % 4]);
        let pair = [a.min(b), a.max(b)];
        LOCAL_EDGES
            .iter()
            .position(|e| *e == pair)
            .expect("face boundary is made of element edges")
    })
}

#[derive(Debug, Default)]
struct Violations {
    multi_crossing_edges: Vec<usize>,
    overcut_faces: Vec<usize>,
}

fn classify_impl(
    ls: &dyn LevelSet,
    mesh: &Mesh,
    element: usize,
    snap: f64,
    strict: bool,
) -> (Result<ElementCut>, Violations) {
    let frame = mesh.element_frame(element);
    let edges = mesh.element_edges(element);
    let verts: [Point; 8] = std::array::from_fn(|v| frame.vertex(v));
    let values: [f64; 8] = verts.map(|p| ls.value(&p));
    let vertex_signs = values.map(|v| Side::of(v, snap));

    let mut violations = Violations::default();
    let mut intersections = Vec::new();
    for (le, [va_i, vb_i]) in LOCAL_EDGES.iter().copied().enumerate() {
        let scan = scan_edge(
            ls,
            &verts[va_i],
            &verts[vb_i],
            values[va_i],
            values[vb_i],
            snap,
        );
        if scan.sign_changes > 1 {
            violations.multi_crossing_edges.push(le);
        }
        if let Some((t, point)) = scan.root {
            intersections.push(Intersection {
                local_edge: le,
                edge: edges[le],
                t,
                point,
            });
        }
    }
    let cut_edges: Vec<usize> = intersections.iter().map(|i| i.local_edge).collect();
    for f in 0..6 {
        let n = face_local_edges(f)
            .iter()
            .filter(|e| cut_edges.contains(e))
            .count();
        if n > 2 {
            violations.overcut_faces.push(f);
        }
    }

    let violation = |reason: String| Error::HypothesisViolation { element, reason };

    if strict && !violations.multi_crossing_edges.is_empty() {
        let r = format!(
            "local edges {:?} are crossed more than once",
            violations.multi_crossing_edges
        );
        return (Err(violation(r)), violations);
    }
    if !violations.overcut_faces.is_empty() {
        let r = format!(
            "local faces {:?} have more than two cut edges",
            violations.overcut_faces
        );
        if strict {
            return (Err(violation(r)), violations);
        }
        log::warn!("element {element}: {r}; replacing the interface by a fitted plane");
        let cut =
            fitted_plane_cut(ls, element, frame, &edges, &intersections, snap).map_err(
                |e| match e {
                    Error::DegenerateGeometry { reason, .. } => violation(format!("{r}; {reason}")),
                    other => other,
                },
            );
        return (cut, violations);
    }
    if !violations.multi_crossing_edges.is_empty() {
        log::warn!(
            "element {element}: edges {:?} crossed more than once; using vertex signs only",
            violations.multi_crossing_edges
        );
    }

    let minus = vertex_signs.iter().filter(|&&s| s == Side::Minus).count();
    let kind = match (minus, intersections.len()) {
        (0, _) => CutKind::NonInterfacePlus,
        (8, _) => CutKind::NonInterfaceMinus,
        (_, 3) => CutKind::TypeI,
        (_, 4) => {
            let axis = intersections[0].local_edge / 4;
            if intersections.iter().all(|i| i.local_edge / 4 == axis) {
                CutKind::TypeII
            } else {
                CutKind::TypeIII
            }
        }
        (_, 5) => CutKind::TypeIV,
        (_, 6) => CutKind::TypeV,
        (_, n) => {
            return (
                Err(violation(format!("{n} intersection points"))),
                violations,
            )
        }
    };

    let mut cut = ElementCut {
        element,
        frame,
        kind,
        intersections: if kind.is_interface() {
            intersections
        } else {
            Vec::new()
        },
        vertex_signs,
        plane: None,
    };
    if kind.is_interface() {
        match approximate_plane(&cut) {
            Ok(p) => cut.plane = Some(p),
            Err(e) => return (Err(e), violations),
        }
    }
    (Ok(cut), violations)
}

/// Cut of the least-squares plane through the crossings `points`, oriented
/// like the level set. Used in non-strict mode for elements whose vertex sign
/// pattern no plane can produce.
fn fitted_plane_cut(
    ls: &dyn LevelSet,
    element: usize,
    frame: ElementFrame,
    edges: &[usize; 12],
    points: &[Intersection],
    snap: f64,
) -> Result<ElementCut> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry {
            element,
            reason: "fewer than three crossings".into(),
        });
    }
    let c = points.iter().map(|i| i.point).sum::<Point>() / points.len() as f64;
    let mut cov = nalgebra::Matrix3::zeros();
    for i in points {
        let d = i.point - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let mut n: Point = eig.eigenvectors.column(k).into();
    // orient along the level-set increase across the element
    let slope: f64 = (0..8)
        .map(|v| {
            let x = frame.vertex(v);
            ls.value(&x) * (x - c).dot(&n)
        })
        .sum();
    if slope < 0.0 {
        n = -n;
    }
    let level = |x: &Point| (x - c).dot(&n);
    let verts: [Point; 8] = std::array::from_fn(|v| frame.vertex(v));
    let values = verts.map(|x| level(&x));
    let vertex_signs = values.map(|v| Side::of(v, snap));
    let mut intersections = Vec::new();
    for (le, [a, b]) in LOCAL_EDGES.iter().copied().enumerate() {
        if vertex_signs[a] != vertex_signs[b] {
            let t = (values[a] / (values[a] - values[b])).clamp(0.0, 1.0);
            intersections.push(Intersection {
                local_edge: le,
                edge: edges[le],
                t,
                point: edge_point(&verts[a], &verts[b], t),
            });
        }
    }
    let minus = vertex_signs.iter().filter(|&&s| s == Side::Minus).count();
    let kind = match (minus, intersections.len()) {
        (0, _) => CutKind::NonInterfacePlus,
        (8, _) => CutKind::NonInterfaceMinus,
        (_, 3) => CutKind::TypeI,
        (_, 4) => {
            let axis = intersections[0].local_edge / 4;
            if intersections.iter().all(|i| i.local_edge / 4 == axis) {
                CutKind::TypeII
            } else {
                CutKind::TypeIII
            }
        }
        (_, 5) => CutKind::TypeIV,
        (_, 6) => CutKind::TypeV,
        (_, m) => {
            return Err(Error::DegenerateGeometry {
                element,
                reason: format!("fitted plane gives {m} crossings"),
            })
        }
    };
    let mut cut = ElementCut {
        element,
        frame,
        kind,
        intersections: if kind.is_interface() {
            intersections
        } else {
            Vec::new()
        },
        vertex_signs,
        plane: None,
    };
    if kind.is_interface() {
        cut.plane = Some(approximate_plane(&cut)?);
    }
    Ok(cut)
}

/// Classifies one element. Vertices with `|value| < snap_tol` are treated as
/// plus; any resolution violation is an error.
pub fn classify_element(
    ls: &dyn LevelSet,
    mesh: &Mesh,
    element: usize,
    snap_tol: f64,
) -> Result<ElementCut> {
    if element >= mesh.num_elements() {
        return Err(Error::OutOfRange {
            what: "element",
            index: element,
            len: mesh.num_elements(),
        });
    }
    classify_impl(ls, mesh, element, snap_tol, true).0
}

/// Classifies every element in parallel.
pub fn classify_mesh(
    ls: &dyn LevelSet,
    mesh: &Mesh,
    opts: &ClassifyOptions,
) -> Result<Vec<ElementCut>> {
    let snap = opts.snap_factor * mesh.h();
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| classify_impl(ls, mesh, e, snap, opts.strict).0)
        .collect()
}

fn triangle_max_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let angle = |p: &Point, q: &Point, r: &Point| {
        let u = q - p;
        let v = r - p;
        let nu = u.norm();
        let nv = v.norm();
        if nu == 0.0 || nv == 0.0 {
            return std::f64::consts::PI;
        }
        (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0).acos()
    };
    angle(a, b, c).max(angle(b, c, a)).max(angle(c, a, b))
}

/// Chooses the triangle of intersection points minimizing the largest angle
/// (first in lexicographic index order among ties) and builds the plane
/// through it, normal oriented towards the plus vertices.
pub fn approximate_plane(cut: &ElementCut) -> Result<ApproxPlane> {
    let element = cut.element;
    if !cut.kind.is_interface() {
        return Err(Error::invalid(format!(
            "element {element} is not an interface element"
        )));
    }
    let pts: Vec<Point> = cut.intersections.iter().map(|i| i.point).collect();
    let scale = cut.frame.max_spacing();
    let mut best: Option<([usize; 3], f64, Point)> = None;
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                if normal.norm() <= 1e-14 * scale * scale {
                    continue;
                }
                let ang = triangle_max_angle(&pts[i], &pts[j], &pts[k]);
                let better = best.as_ref().is_none_or(|(_, b, _)| ang < *b - 1e-12);
                if better {
                    best = Some(([i, j, k], ang, normal));
                }
            }
        }
    }
    let Some((idx, ang, normal)) = best else {
        return Err(Error::DegenerateGeometry {
            element,
            reason: "intersection points are collinear".into(),
        });
    };
    let max_angle_deg = ang.to_degrees();
    if max_angle_deg > MAX_TRIANGLE_ANGLE_DEG + 1e-9 {
        return Err(Error::DegenerateGeometry {
            element,
            reason: format!("smallest achievable maximal angle is {max_angle_deg:.3} degrees"),
        });
    }
    let triangle = idx.map(|i| pts[i]);
    let centroid = (triangle[0] + triangle[1] + triangle[2]) / 3.0;
    let mut normal = normal.normalize();
    let orient: f64 = (0..8)
        .map(|v| cut.vertex_signs[v].sign() * (cut.frame.vertex(v) - centroid).dot(&normal))
        .sum();
    if orient < 0.0 {
        normal = -normal;
    }
    Ok(ApproxPlane {
        centroid,
        normal,
        triangle,
        triangle_indices: idx,
        max_angle_deg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    /// the level set does not provide the needed quantity
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h: f64,
    /// `h < reach / (3 sqrt 3)`
    pub reach: Check,
    /// `h * kappa <= 0.0288`
    pub curvature: Check,
    /// elements with an edge crossed more than once
    pub multi_crossing_elements: Vec<usize>,
    /// elements with a face having more than two cut edges
    pub overcut_elements: Vec<usize>,
}

impl HypothesisReport {
    pub fn single_crossings(&self) -> Check {
        if self.multi_crossing_elements.is_empty() {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn simple_faces(&self) -> Check {
        if self.overcut_elements.is_empty() {
            Check::Pass
        } else {
            Check::Fail
        }
    }
}

/// Reports which of the mesh resolution hypotheses hold. Never fails; the
/// reach and curvature conditions are `Unknown` when the level set does not
/// supply them.
pub fn validate_hypotheses(mesh: &Mesh, ls: &dyn LevelSet) -> HypothesisReport {
    let h = mesh.h();
    let reach = match ls.reach() {
        Some(r) if h < r / (3.0 * 3f64.sqrt()) => Check::Pass,
        Some(_) => Check::Fail,
        None => Check::Unknown,
    };
    let curvature = match ls.curvature_bound() {
        Some(k) if h * k <= CURVATURE_LIMIT => Check::Pass,
        Some(_) => Check::Fail,
        None => Check::Unknown,
    };
    let snap = 1e-12 * h;
    let per_element: Vec<(bool, bool)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let (_, v) = classify_impl(ls, mesh, e, snap, false);
            (
                !v.multi_crossing_edges.is_empty(),
                !v.overcut_faces.is_empty(),
            )
        })
        .collect();
    let collect = |pick: fn(&(bool, bool)) -> bool| {
        per_element
            .iter()
            .enumerate()
            .filter(|(_, v)| pick(v))
            .map(|(e, _)| e)
            .collect::<Vec<_>>()
    };
    HypothesisReport {
        h,
        reach,
        curvature,
        multi_crossing_elements: collect(|v| v.0),
        overcut_elements: collect(|v| v.1),
    }
}

/// Moves `x` along `dir` onto the zero set, taking the crossing closest to
/// `x` within `reach`. Returns the point and the signed travel distance.
pub fn lift_to_interface(
    ls: &dyn LevelSet,
    x: &Point,
    dir: &Point,
    reach: f64,
) -> Result<(Point, f64)> {
    let v0 = ls.value(x);
    if v0 == 0.0 {
        return Ok((*x, 0.0));
    }
    let steps = 64;
    let dt = reach / steps as f64;
    let s0 = v0 > 0.0;
    let mut prev = [0.0f64, 0.0f64];
    for k in 1..=steps {
        for (slot, sgn) in [(0usize, 1.0f64), (1, -1.0)] {
            let t = sgn * k as f64 * dt;
            let v = ls.value(&(x + dir * t));
            if (v > 0.0) != s0 || v == 0.0 {
                let (mut lo, mut hi) = (prev[slot], t);
                for _ in 0..BISECTION_MAX_ITER {
                    let mid = 0.5 * (lo + hi);
                    let vm = ls.value(&(x + dir * mid));
                    if (vm > 0.0) == s0 && vm != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if (hi - lo).abs() <= 1e-15 * reach {
                        break;
                    }
                }
                let t = 0.5 * (lo + hi);
                return Ok((x + dir * t, t));
            }
            prev[slot] = t;
        }
    }
    Err(Error::Sampling(format!(
        "no interface crossing within {reach:e} of {:?}",
        x.as_slice()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricDiagnostics {
    /// largest distance from sampled points of the interface patch to the plane
    pub max_dist: f64,
    /// smallest `n(X) . n_bar` over the samples
    pub min_normal_dot: f64,
    /// quadrature estimate of the patch area
    pub patch_area: f64,
}

/// Samples the interface patch inside an interface element by lifting
/// quadrature points of the plane cross-section onto the interface.
/// `samples` is the number of subdivisions per cross-section triangle edge.
pub fn geometric_diagnostics(
    cut: &ElementCut,
    ls: &dyn LevelSet,
    samples: usize,
) -> Result<GeometricDiagnostics> {
    let plane = cut.plane.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "element {} has no approximating plane",
            cut.element
        ))
    })?;
    let h = cut.frame.max_spacing();
    let rule = quadrature::surface_rule_refined(cut, ls, samples.max(1))?;
    let mut max_dist: f64 = 0.0;
    let mut min_dot: f64 = 1.0;
    for p in &rule.points {
        max_dist = max_dist.max(plane.level(p).abs());
        let g = gradient_at(ls, p, h);
        min_dot = min_dot.min(g.normalize().dot(&plane.normal));
    }
    Ok(GeometricDiagnostics {
        max_dist,
        min_normal_dot: min_dot,
        patch_area: rule.weights.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::levelset::{FnLevelSet, Negated, PlaneLevelSet, SphereLevelSet};
    use crate::mesh::BoxDomain;

    fn unit_mesh() -> Mesh {
        Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 1).unwrap()
    }

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    #[test]
    fn edge_intersection_examples() {
        let far = FnLevelSet::new(|q: &Point| q.x - 10.0);
        assert_eq!(
            edge_intersection(&far, &p(0., 0., 0.), &p(1., 0., 0.)).unwrap(),
            None
        );
        let plane = FnLevelSet::new(|q: &Point| q.x + q.z - 0.5);
        let x = edge_intersection(&plane, &p(0., 0., 0.), &p(1., 0., 0.))
            .unwrap()
            .unwrap();
        assert!((x - p(0.5, 0., 0.)).norm() < 1e-13);
        let r = PI / 4.0;
        let sphere = SphereLevelSet {
            center: Point::zeros(),
            radius: r,
        };
        let x = edge_intersection(&sphere, &p(0., 0., 0.), &p(1., 0., 0.))
            .unwrap()
            .unwrap();
        assert!((x - p(r, 0., 0.)).norm() < 1e-12);
    }

    #[test]
    fn double_crossing_is_rejected() {
        let bump = SphereLevelSet {
            center: p(0.5, 0.0, 0.0),
            radius: 0.2,
        };
        let err = edge_intersection(&bump, &p(0., 0., 0.), &p(1., 0., 0.)).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { .. }));
        let m = unit_mesh();
        let err = classify_element(&bump, &m, 0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { element: 0, .. }));
        let report = validate_hypotheses(&m, &bump);
        assert_eq!(report.multi_crossing_elements, vec![0]);
        assert_eq!(report.single_crossings(), Check::Fail);
    }

    #[test]
    fn non_interface_element() {
        let far = FnLevelSet::new(|q: &Point| q.x - 10.0);
        let cut = classify_element(&far, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::NonInterfaceMinus);
        assert!(cut.intersections.is_empty());
        assert!(cut.plane.is_none());
    }

    #[test]
    fn corner_cut_is_type_i() {
        let ls = PlaneLevelSet::new(p(1., 1., 1.), 0.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::TypeI);
        assert_eq!(cut.minus_vertex_count(), 1);
        let expect = [p(0.5, 0., 0.), p(0., 0.5, 0.), p(0., 0., 0.5)];
        assert_eq!(cut.intersections.len(), 3);
        for e in expect {
            assert!(cut
                .intersections
                .iter()
                .any(|i| (i.point - e).norm() < 1e-12));
        }
        let plane = cut.plane.unwrap();
        let n = p(1., 1., 1.) / 3f64.sqrt();
        assert!((plane.normal - n).norm() < 1e-12);
        assert!((plane.centroid - Point::repeat(1.0 / 6.0)).norm() < 1e-12);
        assert!(plane.max_angle_deg <= MAX_TRIANGLE_ANGLE_DEG);
    }

    #[test]
    fn wedge_cut_is_type_iii() {
        let ls = FnLevelSet::new(|q: &Point| q.x + q.z - 0.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::TypeIII);
        assert_eq!(cut.minus_vertex_count(), 2);
        let expect = [
            p(0.5, 0., 0.),
            p(0., 0., 0.5),
            p(0.5, 1., 0.),
            p(0., 1., 0.5),
        ];
        for e in expect {
            assert!(cut
                .intersections
                .iter()
                .any(|i| (i.point - e).norm() < 1e-12));
        }
        let plane = cut.plane.unwrap();
        assert!((plane.normal - p(1., 0., 1.) / 2f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn parallel_cut_is_type_ii() {
        let ls = FnLevelSet::new(|q: &Point| q.z - 0.3 - 0.1 * q.x);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::TypeII);
    }

    #[test]
    fn hexagonal_cut_is_type_v() {
        let ls = PlaneLevelSet::new(p(1., 1., 1.), 1.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::TypeV);
        let plane = cut.plane.unwrap();
        // alternate vertices of the regular hexagon: equilateral
        assert!((plane.max_angle_deg - 60.0).abs() < 1e-8);
    }

    #[test]
    fn pentagonal_cut_is_type_iv() {
        // minus vertices (0,0,0), (1,0,0), (0,1,0)
        let ls = PlaneLevelSet::new(p(1., 1., 2.), 1.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        assert_eq!(cut.kind, CutKind::TypeIV);
        assert_eq!(cut.minus_vertex_count(), 3);
    }

    #[test]
    fn negation_swaps_sides_and_flips_normal() {
        let ls = PlaneLevelSet::new(p(1., 0.3, 1.), 0.8);
        let m = Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 3).unwrap();
        let neg = Negated(ls);
        for e in 0..m.num_elements() {
            // keep vertices off the interface so snapping is symmetric
            let a = classify_element(&ls, &m, e, 0.0).unwrap();
            let b = classify_element(&neg, &m, e, 0.0).unwrap();
            match a.kind {
                CutKind::NonInterfaceMinus => assert_eq!(b.kind, CutKind::NonInterfacePlus),
                CutKind::NonInterfacePlus => assert_eq!(b.kind, CutKind::NonInterfaceMinus),
                k => {
                    assert_eq!(b.kind, k);
                    assert_eq!(a.intersections.len(), b.intersections.len());
                    for (x, y) in a.intersections.iter().zip(&b.intersections) {
                        assert!((x.point - y.point).norm() < 1e-12);
                    }
                    let (pa, pb) = (a.plane.unwrap(), b.plane.unwrap());
                    assert!((pa.normal + pb.normal).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plane_normals_match_analytic_normal() {
        let n = p(0.3, -0.5, 0.8).normalize();
        let ls = PlaneLevelSet::new(n, 0.1);
        let m = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), 9).unwrap();
        let cuts = classify_mesh(&ls, &m, &ClassifyOptions::default()).unwrap();
        let mut count = 0;
        for c in cuts.iter().filter(|c| c.is_interface()) {
            count += 1;
            let plane = c.plane.unwrap();
            assert!((plane.normal - n).norm() < 1e-10);
            for i in &c.intersections {
                assert!(plane.level(&i.point).abs() < 1e-12);
                assert!(i.t > 0.0 && i.t < 1.0);
            }
            // points slightly along the normal are on the plus side
            assert!(ls.value(&(plane.centroid + 1e-6 * plane.normal)) > 0.0);
        }
        assert!(count > 0);
    }

    #[test]
    fn hypothesis_report_for_plane_and_sphere() {
        let m = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), 20).unwrap();
        let plane = PlaneLevelSet::new(p(1., 0., 1.), PI / 10.0);
        let r = validate_hypotheses(&m, &plane);
        assert_eq!(
            (r.reach, r.curvature, r.single_crossings(), r.simple_faces()),
            (Check::Pass, Check::Pass, Check::Pass, Check::Pass)
        );
        let sphere = SphereLevelSet {
            center: Point::zeros(),
            radius: PI / 4.0,
        };
        let r = validate_hypotheses(&m, &sphere);
        // 0.1 * 4/pi = 0.127 > 0.0288
        assert_eq!(r.curvature, Check::Fail);
        assert_eq!(r.single_crossings(), Check::Pass);
        let unknown = FnLevelSet::new(|q: &Point| q.x);
        let r = validate_hypotheses(&m, &unknown);
        assert_eq!((r.reach, r.curvature), (Check::Unknown, Check::Unknown));
    }

    #[test]
    fn diagnostics_on_plane_interface() {
        let ls = PlaneLevelSet::new(p(1., 0., 1.), 0.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        let d = geometric_diagnostics(&cut, &ls, 2).unwrap();
        assert!(d.max_dist < 1e-12);
        assert!((d.min_normal_dot - 1.0).abs() < 1e-12);
        // the cross-section is a 1 x (0.5 sqrt 2) rectangle
        assert!((d.patch_area - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lift_finds_nearest_crossing() {
        let s = SphereLevelSet {
            center: Point::zeros(),
            radius: 0.5,
        };
        let (q, t) = lift_to_interface(&s, &p(0.45, 0., 0.), &p(1., 0., 0.), 0.2).unwrap();
        assert!((q.x - 0.5).abs() < 1e-13 && (t - 0.05).abs() < 1e-13);
        assert!(lift_to_interface(&s, &p(0.0, 0., 0.), &p(1., 0., 0.), 0.2).is_err());
    }
}
