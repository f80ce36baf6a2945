//! Quadrature on cuboids, plane-cut sub-elements, split faces and interface
//! patches.

use crate::error::{Error, Result};
use crate::geometry::{lift_to_interface, ApproxPlane, ElementCut, Side};
use crate::levelset::{gradient_at, LevelSet};
use crate::mesh::{ElementFrame, FaceFrame, LOCAL_EDGES, LOCAL_FACES};
use crate::Point;

/// Relative volume below which a tetrahedron or a whole cut piece is treated
/// as degenerate.
pub const SLIVER_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    fn push(&mut self, p: Point, w: f64) {
        self.points.push(p);
        self.weights.push(w);
    }

    fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Tensor Gauss rule with `order` points per axis, exact for per-axis degree
/// `2 * order - 1`.
pub fn cuboid_rule(frame: &ElementFrame, order: usize) -> Result<QuadRule> {
    if order < 1 {
        return Err(Error::invalid("cuboid rule order must be at least 1"));
    }
    let (x, w) = gauss_legendre(order);
    let vol = frame.volume();
    let mut rule = QuadRule::default();
    for k in 0..order {
        for j in 0..order {
            for i in 0..order {
                let xi = Point::new(x[i], x[j], x[k]);
                rule.push(frame.to_global(&xi), w[i] * w[j] * w[k] * vol);
            }
        }
    }
    Ok(rule)
}

/// Tensor Gauss rule on each of `subdivisions^3` sub-cuboids.
pub fn subdivided_cuboid_rule(
    frame: &ElementFrame,
    subdivisions: usize,
    order: usize,
) -> Result<QuadRule> {
    let s = subdivisions.max(1);
    let sub_spacing = frame.spacing / s as f64;
    let mut rule = QuadRule::default();
    for k in 0..s {
        for j in 0..s {
            for i in 0..s {
                let origin = frame.origin
                    + Point::new(i as f64, j as f64, k as f64).component_mul(&sub_spacing);
                rule.extend(cuboid_rule(
                    &ElementFrame {
                        origin,
                        spacing: sub_spacing,
                    },
                    order,
                )?);
            }
        }
    }
    Ok(rule)
}

/// 14-point degree-5 rule on the reference tetrahedron (barycentric
/// coordinates, weights normalized to sum 1). All weights are positive.
fn tet_rule() -> Vec<([f64; 4], f64)> {
    let mut out = Vec::with_capacity(14);
    for (a, w) in [
        (0.310_885_919_263_300_6, 0.112_687_925_718_016_2),
        (0.092_735_250_310_891_2, 0.073_493_043_116_361_9),
    ] {
        let b = 1.0 - 3.0 * a;
        out.push(([b, a, a, a], w));
        out.push(([a, b, a, a], w));
        out.push(([a, a, b, a], w));
        out.push(([a, a, a, b], w));
    }
    let a = 0.045_503_704_125_649_6;
    let b = 0.5 - a;
    let w = 0.042_546_020_777_081_2;
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut l = [b; 4];
        l[i] = a;
        l[j] = a;
        out.push((l, w));
    }
    out
}

/// 6-point degree-4 rule on the reference triangle (barycentric, weights sum 1).
fn tri_rule() -> [([f64; 3], f64); 6] {
    let a = 0.445_948_490_915_965;
    let wa = 0.223_381_589_678_011;
    let b = 0.091_576_213_509_771;
    let wb = 0.109_951_743_655_322;
    [
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}

pub type Tet = [Point; 4];

pub fn tet_volume(t: &Tet) -> f64 {
    (t[1] - t[0])
        .cross(&(t[2] - t[0]))
        .dot(&(t[3] - t[0]))
        .abs()
        / 6.0
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn add_tet(rule: &mut QuadRule, t: &Tet) {
    let vol = tet_volume(t);
    for (l, w) in tet_rule() {
        rule.push(
            t[0] * l[0] + t[1] * l[1] + t[2] * l[2] + t[3] * l[3],
            w * vol,
        );
    }
}

fn add_triangle(rule: &mut QuadRule, a: &Point, b: &Point, c: &Point) {
    let area = triangle_area(a, b, c);
    for (l, w) in tri_rule() {
        rule.push(a * l[0] + b * l[1] + c * l[2], w * area);
    }
}

/// Degree-4 rule over the triangles of a fan triangulation of a convex polygon.
pub fn polygon_rule(poly: &[Point]) -> QuadRule {
    let mut rule = QuadRule::default();
    for i in 1..poly.len().saturating_sub(1) {
        add_triangle(&mut rule, &poly[0], &poly[i], &poly[i + 1]);
    }
    rule
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    let mut acc = Point::zeros();
    for i in 1..poly.len().saturating_sub(1) {
        acc += (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0]));
    }
    0.5 * acc.norm()
}

/// Sutherland–Hodgman clip of a convex polygon against
/// `sign * level(x) >= -eps`.
fn clip_polygon(poly: &[Point], level: impl Fn(&Point) -> f64, sign: f64, eps: f64) -> Vec<Point> {
    if poly.is_empty() {
        return Vec::new();
    }
    let vals: Vec<f64> = poly.iter().map(|p| sign * level(p)).collect();
    let inside = |v: f64| v >= -eps;
    let mut out: Vec<Point> = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (vp, vc) = (vals[prev], vals[i]);
        let crossing = |a: &Point, va: f64, b: &Point, vb: f64| a + (b - a) * (va / (va - vb));
        if inside(vc) {
            if !inside(vp) && vc > eps {
                out.push(crossing(&poly[prev], vp, &poly[i], vc));
            }
            out.push(poly[i]);
        } else if inside(vp) && vp > eps {
            out.push(crossing(&poly[prev], vp, &poly[i], vc));
        }
    }
    dedup_ring(out, eps)
}

fn dedup_ring(mut pts: Vec<Point>, eps: f64) -> Vec<Point> {
    let tol = eps.max(0.0) + 1e-300;
    pts.dedup_by(|a, b| (*a - *b).norm() <= tol);
    while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= tol {
        pts.pop();
    }
    pts
}

/// Polygon where the plane meets the cuboid, ordered around its centroid.
pub fn cross_section(frame: &ElementFrame, plane: &ApproxPlane) -> Vec<Point> {
    let h = frame.max_spacing();
    let eps = 1e-13 * h;
    let verts: [Point; 8] = std::array::from_fn(|v| frame.vertex(v));
    let vals = verts.map(|p| plane.level(&p));
    let mut pts: Vec<Point> = Vec::new();
    for (v, &val) in vals.iter().enumerate() {
        if val.abs() <= eps {
            pts.push(verts[v]);
        }
    }
    for [a, b] in LOCAL_EDGES {
        let (va, vb) = (vals[a], vals[b]);
        if (va > eps && vb < -eps) || (va < -eps && vb > eps) {
            pts.push(verts[a] + (verts[b] - verts[a]) * (va / (va - vb)));
        }
    }
    let mut uniq: Vec<Point> = Vec::new();
    for p in pts {
        if uniq.iter().all(|q| (q - p).norm() > 1e-12 * h) {
            uniq.push(p);
        }
    }
    if uniq.len() < 3 {
        return Vec::new();
    }
    let c = uniq.iter().sum::<Point>() / uniq.len() as f64;
    let n = plane.normal;
    let seed = if n.x.abs() < 0.9 {
        Point::x()
    } else {
        Point::y()
    };
    let e1 = n.cross(&seed).normalize();
    let e2 = n.cross(&e1);
    uniq.sort_by(|a, b| {
        let ta = (a - c).dot(&e2).atan2((a - c).dot(&e1));
        let tb = (b - c).dot(&e2).atan2((b - c).dot(&e1));
        ta.total_cmp(&tb)
    });
    uniq
}

/// Tetrahedra filling the two sides of an interface element cut by its plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubElementTessellation {
    pub minus: Vec<Tet>,
    pub plus: Vec<Tet>,
}

impl SubElementTessellation {
    pub fn side(&self, side: Side) -> &[Tet] {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn volume(&self, side: Side) -> f64 {
        self.side(side).iter().map(tet_volume).sum()
    }
}

fn box_faces(frame: &ElementFrame) -> Vec<Vec<Point>> {
    LOCAL_FACES
        .iter()
        .map(|f| f.iter().map(|&v| frame.vertex(v)).collect())
        .collect()
}

/// Fan tetrahedralization of a convex polyhedron given by its faces.
fn tetrahedralize(faces: &[Vec<Point>], min_vol: f64) -> Vec<Tet> {
    let all: Vec<&Point> = faces.iter().flatten().collect();
    if all.is_empty() {
        return Vec::new();
    }
    let apex = all.iter().copied().sum::<Point>() / all.len() as f64;
    let mut tets = Vec::new();
    for f in faces {
        for i in 1..f.len().saturating_sub(1) {
            let t = [apex, f[0], f[i], f[i + 1]];
            if tet_volume(&t) > min_vol {
                tets.push(t);
            }
        }
    }
    tets
}

/// Splits an interface element along its approximating plane.
pub fn tessellate_cut(cut: &ElementCut) -> Result<SubElementTessellation> {
    let plane = cut.plane.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "element {} has no approximating plane",
            cut.element
        ))
    })?;
    let frame = &cut.frame;
    let h = frame.max_spacing();
    let min_vol = SLIVER_TOL * h * h * h;
    let eps = 1e-13 * h;
    let section = cross_section(frame, plane);
    let faces = box_faces(frame);
    let piece = |sign: f64| -> Vec<Tet> {
        let mut pf: Vec<Vec<Point>> = faces
            .iter()
            .map(|f| clip_polygon(f, |p| plane.level(p), sign, eps))
            .filter(|f| f.len() >= 3)
            .collect();
        if section.len() >= 3 {
            pf.push(section.clone());
        }
        tetrahedralize(&pf, min_vol)
    };
    let mut tess = SubElementTessellation {
        minus: piece(-1.0),
        plus: piece(1.0),
    };
    let vm = tess.volume(Side::Minus);
    let vp = tess.volume(Side::Plus);
    if vm <= min_vol || vp <= min_vol {
        log::warn!(
            "element {}: sliver cut (volumes {vm:e} / {vp:e}); merged into dominant side",
            cut.element
        );
        let whole = tetrahedralize(&faces, min_vol);
        if vm > vp {
            tess = SubElementTessellation {
                minus: whole,
                plus: Vec::new(),
            };
        } else {
            tess = SubElementTessellation {
                minus: Vec::new(),
                plus: whole,
            };
        }
    }
    Ok(tess)
}

/// Splits each tetrahedron into 8 of equal volume, `levels` times.
pub fn refine_tets(tets: &[Tet], levels: usize) -> Vec<Tet> {
    let mut cur = tets.to_vec();
    for _ in 0..levels {
        let mut next = Vec::with_capacity(cur.len() * 8);
        for &[a, b, c, d] in &cur {
            let m = |p: Point, q: Point| 0.5 * (p + q);
            let (ab, ac, ad, bc, bd, cd) = (m(a, b), m(a, c), m(a, d), m(b, c), m(b, d), m(c, d));
            next.extend([
                [a, ab, ac, ad],
                [ab, b, bc, bd],
                [ac, bc, c, cd],
                [ad, bd, cd, d],
                [ab, ac, ad, bd],
                [ab, ac, bc, bd],
                [ac, ad, bd, cd],
                [ac, bc, bd, cd],
            ]);
        }
        cur = next;
    }
    cur
}

/// Degree-5 rule over the given tetrahedra.
pub fn tets_rule(tets: &[Tet]) -> QuadRule {
    let mut rule = QuadRule::default();
    for t in tets {
        add_tet(&mut rule, t);
    }
    rule
}

/// Degree-5 rule over the tetrahedra of one side.
pub fn volume_rule(tess: &SubElementTessellation, side: Side) -> QuadRule {
    let mut rule = QuadRule::default();
    for t in tess.side(side) {
        add_tet(&mut rule, t);
    }
    rule
}

/// Quadrature on a face split by the planes of its neighbors. `sides[q]`
/// gives, for quadrature point `q`, the plane side within the first and
/// second neighbor (`None` where that neighbor has no plane).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaceRule {
    pub rule: QuadRule,
    pub sides: Vec<[Option<Side>; 2]>,
}

/// Splits the face rectangle by the traces of up to two planes and integrates
/// each convex piece with a degree-4 triangle rule.
pub fn face_rule(
    face: &FaceFrame,
    first: Option<&ApproxPlane>,
    second: Option<&ApproxPlane>,
) -> FaceRule {
    let h = face.len_u.max(face.len_v);
    let eps = 1e-13 * h;
    let min_area = SLIVER_TOL * face.area();
    let mut pieces: Vec<(Vec<Point>, [Option<Side>; 2])> =
        vec![(face.corners().to_vec(), [None, None])];
    for (slot, plane) in [(0usize, first), (1, second)] {
        let Some(plane) = plane else { continue };
        let mut next = Vec::new();
        for (poly, tag) in pieces {
            for side in [Side::Minus, Side::Plus] {
                let clipped = clip_polygon(&poly, |p| plane.level(p), side.sign(), eps);
                if clipped.len() >= 3 && polygon_area(&clipped) > min_area {
                    let mut t = tag;
                    t[slot] = Some(side);
                    next.push((clipped, t));
                }
            }
        }
        pieces = next;
    }
    let mut out = FaceRule::default();
    for (poly, tag) in pieces {
        let r = polygon_rule(&poly);
        out.sides.extend(std::iter::repeat_n(tag, r.len()));
        out.rule.extend(r);
    }
    out
}

/// Tensor Gauss rule on each of `subdivisions^2` sub-rectangles of a face.
pub fn face_tensor_rule(face: &FaceFrame, subdivisions: usize, order: usize) -> Result<QuadRule> {
    if order < 1 {
        return Err(Error::invalid("face rule order must be at least 1"));
    }
    let s = subdivisions.max(1);
    let (x, w) = gauss_legendre(order);
    let (du, dv) = (face.len_u / s as f64, face.len_v / s as f64);
    let mut rule = QuadRule::default();
    for b in 0..s {
        for a in 0..s {
            for j in 0..order {
                for i in 0..order {
                    let mut p = face.origin;
                    p[face.axis_u] += (a as f64 + x[i]) * du;
                    p[face.axis_v] += (b as f64 + x[j]) * dv;
                    rule.push(p, w[i] * w[j] * du * dv);
                }
            }
        }
    }
    Ok(rule)
}

/// Rule on the interface patch of an interface element, obtained by lifting a
/// rule on the plane cross-section onto the zero set.
pub fn surface_rule(cut: &ElementCut, ls: &dyn LevelSet) -> Result<QuadRule> {
    surface_rule_refined(cut, ls, 1)
}

/// As [`surface_rule`], each cross-section triangle split into
/// `subdivisions^2` pieces.
pub fn surface_rule_refined(
    cut: &ElementCut,
    ls: &dyn LevelSet,
    subdivisions: usize,
) -> Result<QuadRule> {
    let plane = cut.plane.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "element {} has no approximating plane",
            cut.element
        ))
    })?;
    let h = cut.frame.max_spacing();
    let section = cross_section(&cut.frame, plane);
    if section.len() < 3 {
        return Ok(QuadRule::default());
    }
    let center = section.iter().sum::<Point>() / section.len() as f64;
    let s = subdivisions.max(1);
    let mut flat = QuadRule::default();
    for i in 0..section.len() {
        let a = center;
        let b = section[i];
        let c = section[(i + 1) % section.len()];
        // uniform subdivision of the triangle
        let at = |u: usize, v: usize| {
            a + (b - a) * (u as f64 / s as f64) + (c - a) * (v as f64 / s as f64)
        };
        for u in 0..s {
            for v in 0..s - u {
                add_triangle(&mut flat, &at(u, v), &at(u + 1, v), &at(u, v + 1));
                if u + v + 1 < s {
                    add_triangle(&mut flat, &at(u + 1, v), &at(u + 1, v + 1), &at(u, v + 1));
                }
            }
        }
    }
    let mut rule = QuadRule::default();
    for (p, w) in flat.points.iter().zip(&flat.weights) {
        let (x, _) = lift_to_interface(ls, p, &plane.normal, h)?;
        let n = gradient_at(ls, &x, h).normalize();
        let dot = n.dot(&plane.normal);
        if dot <= 0.05 {
            return Err(Error::Sampling(format!(
                "element {}: interface normal nearly orthogonal to plane normal ({dot:.3})",
                cut.element
            )));
        }
        rule.push(x, w / dot);
    }
    Ok(rule)
}

/// Per-side rules on a sub-sampled cuboid, each point assigned by the sign of
/// the level set.
pub fn levelset_sign_rules(
    frame: &ElementFrame,
    ls: &dyn LevelSet,
    subdivisions: usize,
    snap_tol: f64,
) -> Result<[QuadRule; 2]> {
    let all = subdivided_cuboid_rule(frame, subdivisions, 2)?;
    let mut minus = QuadRule::default();
    let mut plus = QuadRule::default();
    for (p, w) in all.points.into_iter().zip(all.weights) {
        match Side::of(ls.value(&p), snap_tol) {
            Side::Minus => minus.push(p, w),
            Side::Plus => plus.push(p, w),
        }
    }
    Ok([minus, plus])
}
