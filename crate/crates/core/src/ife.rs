//! Trilinear immersed finite element spaces.
//!
//! Shape functions are stored in element-local coordinates `xi` in `[0,1]^3`
//! (`x = origin + spacing * xi`), which keeps the 8x8 construction systems
//! equally well conditioned on every mesh.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{classify_mesh, ApproxPlane, ClassifyOptions, ElementCut, Side};
use crate::levelset::LevelSet;
use crate::mesh::{ElementFrame, Mesh, VERTEX_OFFSETS};
use crate::poly::Q1Poly;
use crate::Point;

/// Construction systems with a larger 2-norm condition number are reported.
pub const CONDITION_WARN: f64 = 1e12;

/// Piecewise constant diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Betas {
    pub minus: f64,
    pub plus: f64,
}

impl Betas {
    pub fn new(minus: f64, plus: f64) -> Result<Self> {
        if !(minus > 0.0 && plus > 0.0 && minus.is_finite() && plus.is_finite()) {
            return Err(Error::invalid(format!(
                "coefficients must be positive and finite, got beta- = {minus}, beta+ = {plus}"
            )));
        }
        Ok(Self { minus, plus })
    }

    pub fn of(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.minus,
            Side::Plus => self.plus,
        }
    }

    pub fn max(&self) -> f64 {
        self.minus.max(self.plus)
    }
}

/// The plane `(x - point) . normal = 0` carrying the jump conditions, with a
/// unit normal pointing into the plus side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPlane {
    pub point: Point,
    pub normal: Point,
}

impl JumpPlane {
    pub fn new(point: Point, normal: Point) -> Result<Self> {
        if (normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "plane normal must be a unit vector (norm {})",
                normal.norm()
            )));
        }
        Ok(Self { point, normal })
    }

    pub fn level(&self, x: &Point) -> f64 {
        (x - self.point).dot(&self.normal)
    }
}

impl From<&ApproxPlane> for JumpPlane {
    fn from(p: &ApproxPlane) -> Self {
        Self {
            point: p.centroid,
            normal: p.normal,
        }
    }
}

/// `p + k (grad p(f) . flux_dir) ((x - f) . level_dir)`.
fn extend(p: &Q1Poly, f: &Point, flux_dir: &Point, level_dir: &Point, k: f64) -> Q1Poly {
    let s = k * p.grad(f).dot(flux_dir);
    *p + Q1Poly::affine(-s * f.dot(level_dir), &(s * level_dir))
}

fn check_betas(beta_minus: f64, beta_plus: f64) -> Result<()> {
    Betas::new(beta_minus, beta_plus).map(|_| ())
}

/// Maps the minus-side polynomial to the plus-side one so that the pair has
/// equal values and equal mixed coefficients on the plane and
/// `beta_minus * grad p . n = beta_plus * grad C(p) . n` there.
pub fn extension_apply(
    p: &Q1Poly,
    plane: &JumpPlane,
    beta_minus: f64,
    beta_plus: f64,
) -> Result<Q1Poly> {
    check_betas(beta_minus, beta_plus)?;
    let plane = JumpPlane::new(plane.point, plane.normal)?;
    let k = beta_minus / beta_plus - 1.0;
    Ok(extend(p, &plane.point, &plane.normal, &plane.normal, k))
}

/// Inverse of [`extension_apply`].
pub fn extension_invert(
    p: &Q1Poly,
    plane: &JumpPlane,
    beta_minus: f64,
    beta_plus: f64,
) -> Result<Q1Poly> {
    check_betas(beta_minus, beta_plus)?;
    let plane = JumpPlane::new(plane.point, plane.normal)?;
    let k = beta_plus / beta_minus - 1.0;
    Ok(extend(p, &plane.point, &plane.normal, &plane.normal, k))
}

/// Tensor-product nodal basis of the reference cube `[0,1]^3`, vertex `v`
/// sitting at `VERTEX_OFFSETS[v]`.
pub fn standard_basis() -> [Q1Poly; 8] {
    std::array::from_fn(|v| {
        let o = VERTEX_OFFSETS[v];
        // factor (a0 + a1 t) per axis
        let f = |on: usize| if on == 1 { (0.0, 1.0) } else { (1.0, -1.0) };
        let (a0, a1) = f(o[0]);
        let (b0, b1) = f(o[1]);
        let (c0, c1) = f(o[2]);
        Q1Poly::new([
            a0 * b0 * c0,
            a1 * b0 * c0,
            a0 * b1 * c0,
            a0 * b0 * c1,
            a1 * b1 * c0,
            a1 * b0 * c1,
            a0 * b1 * c1,
            a1 * b1 * c1,
        ])
    })
}

fn vertex_local(v: usize) -> Point {
    let o = VERTEX_OFFSETS[v];
    Point::new(o[0] as f64, o[1] as f64, o[2] as f64)
}

/// Lagrange IFE shape functions of one interface element.
#[derive(Debug, Clone, PartialEq)]
pub struct IfeBasis {
    pub element: usize,
    pub frame: ElementFrame,
    /// The approximating plane in global coordinates.
    pub plane: JumpPlane,
    pub betas: Betas,
    /// Side of each vertex used for the nodal conditions.
    pub vertex_sides: [Side; 8],
    /// Shape functions on the minus side, local coordinates.
    pub minus: [Q1Poly; 8],
    /// Shape functions on the plus side, local coordinates.
    pub plus: [Q1Poly; 8],
    /// 2-norm condition number of the construction system.
    pub condition: f64,
    local_point: Point,
    flux_dir: Point,
    level_dir: Point,
}

impl IfeBasis {
    pub fn side_of(&self, x: &Point) -> Side {
        if self.plane.level(x) >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn polys(&self, side: Side) -> &[Q1Poly; 8] {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    /// Applies the extension operator to a polynomial in local coordinates.
    pub fn extend_local(&self, p: &Q1Poly) -> Q1Poly {
        let k = self.betas.minus / self.betas.plus - 1.0;
        extend(p, &self.local_point, &self.flux_dir, &self.level_dir, k)
    }

    /// The approximating plane's point in local coordinates.
    pub fn local_point(&self) -> Point {
        self.local_point
    }
}

/// Solves for the eight Lagrange IFE shape functions on an interface element.
pub fn build_ife_basis(cut: &ElementCut, betas: Betas) -> Result<IfeBasis> {
    let element = cut.element;
    let approx = cut.plane.as_ref().ok_or_else(|| Error::Construction {
        element,
        reason: "element has no approximating plane".into(),
    })?;
    let frame = cut.frame;
    let plane = JumpPlane::from(approx);
    let local_point = frame.to_local(&plane.point);
    let flux_dir = plane.normal.component_div(&frame.spacing);
    let level_dir = plane.normal.component_mul(&frame.spacing);
    let k = betas.minus / betas.plus - 1.0;

    let mg = Q1Poly::monomial_gradients(&local_point);
    let flux_row: [f64; 8] = std::array::from_fn(|c| {
        mg[0][c] * flux_dir.x + mg[1][c] * flux_dir.y + mg[2][c] * flux_dir.z
    });
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    for j in 0..8 {
        let a = vertex_local(j);
        let mono = Q1Poly::monomials(&a);
        let l = (a - local_point).dot(&level_dir);
        for c in 0..8 {
            m[(j, c)] = match cut.vertex_signs[j] {
                Side::Minus => mono[c],
                Side::Plus => mono[c] + k * l * flux_row[c],
            };
        }
    }
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin == 0.0 {
        return Err(Error::Construction {
            element,
            reason: "construction system is singular".into(),
        });
    }
    let condition = smax / smin;
    if condition > CONDITION_WARN {
        log::warn!(
            "element {element}: IFE construction system nearly singular (cond {condition:.3e})"
        );
    }
    let lu = m.lu();
    let mut minus = [Q1Poly::zero(); 8];
    for (i, phi) in minus.iter_mut().enumerate() {
        let mut e = SVector::<f64, 8>::zeros();
        e[i] = 1.0;
        let c = lu.solve(&e).ok_or_else(|| Error::Construction {
            element,
            reason: "construction system is singular".into(),
        })?;
        *phi = Q1Poly::new(std::array::from_fn(|r| c[r]));
    }
    let plus = minus.map(|p| extend(&p, &local_point, &flux_dir, &level_dir, k));
    Ok(IfeBasis {
        element,
        frame,
        plane,
        betas,
        vertex_sides: cut.vertex_signs,
        minus,
        plus,
        condition,
        local_point,
        flux_dir,
        level_dir,
    })
}

/// Values and global gradients of the eight shape functions at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeEval {
    pub side: Side,
    pub values: [f64; 8],
    pub gradients: [Point; 8],
}

/// The global IFE space: standard trilinear functions on non-interface
/// elements, IFE functions on interface elements, nodal degrees of freedom.
#[derive(Debug, Clone)]
pub struct IfeSpace {
    pub mesh: Mesh,
    pub cuts: Vec<ElementCut>,
    pub bases: Vec<Option<IfeBasis>>,
    pub betas: Betas,
    standard: [Q1Poly; 8],
}

impl IfeSpace {
    /// Classifies the mesh against `ls` and builds all local spaces.
    pub fn build(
        mesh: Mesh,
        ls: &dyn LevelSet,
        betas: Betas,
        opts: &ClassifyOptions,
    ) -> Result<Self> {
        let cuts = classify_mesh(ls, &mesh, opts)?;
        Self::from_cuts(mesh, cuts, betas)
    }

    pub fn from_cuts(mesh: Mesh, cuts: Vec<ElementCut>, betas: Betas) -> Result<Self> {
        if cuts.len() != mesh.num_elements() {
            return Err(Error::invalid(format!(
                "{} cuts for {} elements",
                cuts.len(),
                mesh.num_elements()
            )));
        }
        let bases = cuts
            .par_iter()
            .map(|c| {
                if c.is_interface() {
                    build_ife_basis(c, betas).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            cuts,
            bases,
            betas,
            standard: standard_basis(),
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn interface_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.bases
            .iter()
            .enumerate()
            .filter_map(|(e, b)| b.as_ref().map(|_| e))
    }

    pub fn num_interface_elements(&self) -> usize {
        self.bases.iter().filter(|b| b.is_some()).count()
    }

    /// Side of `x` as seen by element `e`: the approximating plane on
    /// interface elements, the common vertex side elsewhere.
    pub fn side_in(&self, e: usize, x: &Point) -> Side {
        match &self.bases[e] {
            Some(b) => b.side_of(x),
            None => self.cuts[e].uniform_side().unwrap_or(Side::Plus),
        }
    }

    /// Local shape polynomials of element `e` on `side`.
    pub fn polys(&self, e: usize, side: Side) -> &[Q1Poly; 8] {
        match &self.bases[e] {
            Some(b) => b.polys(side),
            None => &self.standard,
        }
    }

    /// Shape values and gradients of element `e` at `x`, using the given side.
    pub fn shape_on(&self, e: usize, x: &Point, side: Side) -> ShapeEval {
        let frame = &self.cuts[e].frame;
        let xi = frame.to_local(x);
        let polys = self.polys(e, side);
        ShapeEval {
            side,
            values: std::array::from_fn(|i| polys[i].eval(&xi)),
            gradients: std::array::from_fn(|i| polys[i].grad(&xi).component_div(&frame.spacing)),
        }
    }

    /// Shape values and gradients of element `e` at `x`.
    pub fn shape(&self, e: usize, x: &Point) -> ShapeEval {
        self.shape_on(e, x, self.side_in(e, x))
    }

    /// Coefficient of `beta` on `side`.
    pub fn beta(&self, side: Side) -> f64 {
        self.betas.of(side)
    }

    /// Value and gradient of the finite element function `coeffs` restricted to
    /// element `e` at `x`.
    pub fn eval_in(&self, coeffs: &[f64], e: usize, x: &Point) -> (f64, Point) {
        let s = self.shape(e, x);
        let nodes = self.mesh.element_nodes(e);
        let mut v = 0.0;
        let mut g = Point::zeros();
        for i in 0..8 {
            v += coeffs[nodes[i]] * s.values[i];
            g += coeffs[nodes[i]] * s.gradients[i];
        }
        (v, g)
    }

    /// Value of `coeffs` at `x`, or `None` outside the domain.
    pub fn eval(&self, coeffs: &[f64], x: &Point) -> Option<f64> {
        self.mesh.locate(x).map(|e| self.eval_in(coeffs, e, x).0)
    }
}

/// Nodal interpolant: each node takes `u_minus` or `u_plus` according to the
/// sign of the level set there (values within `snap_tol` of zero count as
/// plus).
pub fn interpolate(
    mesh: &Mesh,
    ls: &dyn LevelSet,
    snap_tol: f64,
    u_minus: impl Fn(&Point) -> f64 + Sync,
    u_plus: impl Fn(&Point) -> f64 + Sync,
) -> Vec<f64> {
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|n| {
            let x = mesh.node_point(n);
            match Side::of(ls.value(&x), snap_tol) {
                Side::Minus => u_minus(&x),
                Side::Plus => u_plus(&x),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::classify_element;
    use crate::levelset::{FnLevelSet, PlaneLevelSet};
    use crate::mesh::BoxDomain;

    fn unit_mesh() -> Mesh {
        Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 1).unwrap()
    }

    #[test]
    fn extension_worked_example() {
        let plane = JumpPlane::new(Point::new(0.3, 0.4, 0.5), Point::z()).unwrap();
        let z = Q1Poly::new([0., 0., 0., 1., 0., 0., 0., 0.]);
        let c = extension_apply(&z, &plane, 1.0, 2.0).unwrap();
        let expect = [0.25, 0., 0., 0.5, 0., 0., 0., 0.];
        for (a, b) in c.coeffs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let back = extension_invert(&c, &plane, 1.0, 2.0).unwrap();
        assert!((back - z).max_abs_coeff() < 1e-15);
        let bad = JumpPlane {
            point: Point::zeros(),
            normal: Point::new(0.0, 0.0, 2.0),
        };
        assert!(extension_apply(&z, &bad, 1.0, 2.0).is_err());
        assert!(extension_apply(&z, &plane, -1.0, 2.0).is_err());
    }

    #[test]
    fn standard_basis_at_center() {
        let b = standard_basis();
        let c = Point::repeat(0.5);
        assert!((b[0].eval(&c) - 0.125).abs() < 1e-15);
        for j in 0..8 {
            for (i, phi) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(phi.eval(&vertex_local(j)), want);
            }
        }
    }

    #[test]
    fn equal_betas_give_standard_basis() {
        let ls = PlaneLevelSet::new(Point::new(1.0, 1.0, 1.0), 0.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        let b = build_ife_basis(&cut, Betas::new(1.0, 1.0).unwrap()).unwrap();
        for (p, q) in b.minus.iter().zip(standard_basis()) {
            assert!((*p - q).max_abs_coeff() < 1e-13);
        }
        assert_eq!(b.minus, b.plus);
    }

    #[test]
    fn type_i_kronecker() {
        let ls = FnLevelSet::new(|p: &Point| p.x + p.y + p.z - 0.5);
        let cut = classify_element(&ls, &unit_mesh(), 0, 1e-12).unwrap();
        let b = build_ife_basis(&cut, Betas::new(1.0, 10.0).unwrap()).unwrap();
        for j in 0..8 {
            let side = b.vertex_sides[j];
            for i in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b.polys(side)[i].eval(&vertex_local(j)) - want).abs() < 1e-11);
            }
        }
        for i in 0..8 {
            assert_eq!(b.minus[i].d(), b.plus[i].d());
        }
    }

    #[test]
    fn space_without_interface() {
        let m = Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 3).unwrap();
        let ls = FnLevelSet::new(|p: &Point| p.x - 10.0);
        let s = IfeSpace::build(
            m,
            &ls,
            Betas::new(1.0, 5.0).unwrap(),
            &ClassifyOptions::default(),
        )
        .unwrap();
        assert_eq!(s.num_interface_elements(), 0);
        let u = interpolate(&s.mesh, &ls, 0.0, |p| p.x + 2.0 * p.y, |_| 0.0);
        let x = Point::new(0.37, 0.81, 0.2);
        assert!((s.eval(&u, &x).unwrap() - (0.37 + 1.62)).abs() < 1e-14);
        let ones = interpolate(&s.mesh, &ls, 0.0, |_| 1.0, |_| 1.0);
        assert!(ones.iter().all(|&v| v == 1.0));
    }
}
