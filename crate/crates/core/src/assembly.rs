//! Assembly of the partially penalized IFE system.
//!
//! The bilinear form is
//!
//! ```text
//! a(u, v) = sum_T int_T beta grad u . grad v
//!         - sum_F int_F {beta grad u . n} [v]
//!         + eps sum_F int_F {beta grad v . n} [u]
//!         + sigma / h sum_F int_F [u] [v]
//! ```
//!
//! with face sums over the faces of interface elements. On an interior face
//! `n` points from the first neighbor to the second, `[w] = w_first -
//! w_second` and `{w}` is the mean of the two traces. On a boundary face `n`
//! is the outward normal, `{w}` the one-sided trace and `[u] = u - g`, so the
//! Dirichlet data enter the load vector.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::ife::{Betas, IfeSpace, ShapeEval};
use crate::levelset::LevelSet;
use crate::quadrature::{
    cuboid_rule, face_rule, face_tensor_rule, levelset_sign_rules, tessellate_cut, volume_rule,
    QuadRule,
};
use crate::Point;

/// Gauss points per axis on non-interface elements.
pub const CUBOID_ORDER: usize = 3;
/// Sub-cells per axis for level-set-sign integration on interface elements.
pub const SIGN_SUBDIVISIONS: usize = 4;

/// How interface elements and faces are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureMode {
    /// Split along the approximating plane; the plane side selects both the
    /// coefficient and the polynomial piece.
    #[default]
    PlaneCut,
    /// Dense sub-cell Gauss rule; the level-set sign at each point selects the
    /// coefficient and the polynomial piece.
    LevelsetSign,
}

impl FromStr for QuadratureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane-cut" => Ok(Self::PlaneCut),
            "levelset-sign" => Ok(Self::LevelsetSign),
            other => Err(Error::invalid(format!(
                "unknown quadrature mode '{other}' (expected plane-cut or levelset-sign)"
            ))),
        }
    }
}

impl fmt::Display for QuadratureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PlaneCut => "plane-cut",
            Self::LevelsetSign => "levelset-sign",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Symmetrization parameter, one of -1, 0, 1.
    pub epsilon: f64,
    pub sigma0: f64,
    pub betas: Betas,
    /// `sigma0 * beta_plus^2 / beta_minus`.
    pub sigma: f64,
    pub quadrature: QuadratureMode,
}

impl SchemeParams {
    pub fn new(epsilon: f64, sigma0: f64, betas: Betas) -> Result<Self> {
        if ![-1.0, 0.0, 1.0].contains(&epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must be -1, 0 or 1, got {epsilon}"
            )));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma0 must be positive, got {sigma0}"
            )));
        }
        Ok(Self {
            epsilon,
            sigma0,
            betas,
            sigma: sigma0 * betas.plus * betas.plus / betas.minus,
            quadrature: QuadratureMode::PlaneCut,
        })
    }

    pub fn with_quadrature(mut self, mode: QuadratureMode) -> Self {
        self.quadrature = mode;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.epsilon == -1.0
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sorted, duplicate-free rows.
    pub fn from_pattern(rows: Vec<Vec<u32>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in &rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: rows.len(),
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&(j as u32))
            .ok()
            .map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds to an entry in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let k = self.slot(i, j).ok_or_else(|| {
            Error::Assembly(format!("entry ({i}, {j}) outside the sparsity pattern"))
        })?;
        self.values[k] += v;
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, a)| a * x[j as usize]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .map(|(&j, a)| (a - self.get(j as usize, i)).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Full nodal system before boundary conditions.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Boundary nodes and their prescribed values, sorted by node.
    pub dirichlet: Vec<(usize, f64)>,
}

/// Quadrature on one element side.
#[derive(Debug, Clone)]
pub struct SideRule {
    pub side: Side,
    pub rule: QuadRule,
}

/// Quadrature rules covering element `e`.
pub fn element_rules(
    space: &IfeSpace,
    e: usize,
    mode: QuadratureMode,
    ls: &dyn LevelSet,
    snap_tol: f64,
) -> Result<Vec<SideRule>> {
    let cut = &space.cuts[e];
    if space.bases[e].is_none() {
        let side = cut.uniform_side().unwrap_or(Side::Plus);
        return Ok(vec![SideRule {
            side,
            rule: cuboid_rule(&cut.frame, CUBOID_ORDER)?,
        }]);
    }
    match mode {
        QuadratureMode::PlaneCut => {
            let tess = tessellate_cut(cut)?;
            Ok([Side::Minus, Side::Plus]
                .into_iter()
                .map(|side| SideRule {
                    side,
                    rule: volume_rule(&tess, side),
                })
                .filter(|r| !r.rule.is_empty())
                .collect())
        }
        QuadratureMode::LevelsetSign => {
            let [m, p] = levelset_sign_rules(&cut.frame, ls, SIGN_SUBDIVISIONS, snap_tol)?;
            Ok([(Side::Minus, m), (Side::Plus, p)]
                .into_iter()
                .filter(|(_, r)| !r.is_empty())
                .map(|(side, rule)| SideRule { side, rule })
                .collect())
        }
    }
}

/// Faces of interface elements, sorted; boundary faces included.
pub fn interface_faces(space: &IfeSpace) -> Vec<usize> {
    let mesh = &space.mesh;
    let mut faces: Vec<usize> = space
        .interface_elements()
        .flat_map(|e| mesh.element_faces(e))
        .collect();
    faces.sort_unstable();
    faces.dedup();
    faces
}

/// A quadrature point on an interface face with the neighbors' shape data.
#[derive(Debug, Clone)]
pub struct FacePoint {
    pub x: Point,
    pub weight: f64,
    pub first: ShapeEval,
    /// `None` on the boundary.
    pub second: Option<ShapeEval>,
}

#[derive(Debug, Clone)]
pub struct FaceQuadrature {
    pub face: usize,
    pub first: usize,
    pub second: Option<usize>,
    /// `+axis` on interior faces, outward on boundary faces.
    pub normal: Point,
    /// Mesh size entering the penalty weight `sigma / h`.
    pub h: f64,
    pub points: Vec<FacePoint>,
}

/// Quadrature with evaluated shape functions on a face.
pub fn face_quadrature(
    space: &IfeSpace,
    face: usize,
    mode: QuadratureMode,
    ls: &dyn LevelSet,
    snap_tol: f64,
) -> Result<FaceQuadrature> {
    let mesh = &space.mesh;
    let nb = mesh.face_neighbors(face)?;
    let (first, second) = (nb.first, nb.second);
    let frame = mesh.face_frame(face)?;
    let mut normal = mesh.face_normal(face)?;
    if second.is_none() && space.cuts[first].frame.center()[frame.axis] > frame.origin[frame.axis] {
        normal = -normal;
    }
    let h = second
        .map(|e| space.cuts[e].frame.max_spacing())
        .unwrap_or(0.0)
        .max(space.cuts[first].frame.max_spacing());
    let plane_of = |e: usize| {
        space.cuts[e]
            .plane
            .as_ref()
            .filter(|_| space.bases[e].is_some())
    };
    let mut points = Vec::new();
    match mode {
        QuadratureMode::PlaneCut => {
            let fr = face_rule(&frame, plane_of(first), second.and_then(plane_of));
            for (q, (x, w)) in fr.rule.points.iter().zip(&fr.rule.weights).enumerate() {
                let s1 = fr.sides[q][0].unwrap_or_else(|| space.side_in(first, x));
                points.push(FacePoint {
                    x: *x,
                    weight: *w,
                    first: space.shape_on(first, x, s1),
                    second: second.map(|e| {
                        let s2 = fr.sides[q][1].unwrap_or_else(|| space.side_in(e, x));
                        space.shape_on(e, x, s2)
                    }),
                });
            }
        }
        QuadratureMode::LevelsetSign => {
            let rule = face_tensor_rule(&frame, SIGN_SUBDIVISIONS, 2)?;
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let ls_side = Side::of(ls.value(x), snap_tol);
                let side = |e: usize| {
                    if space.bases[e].is_some() {
                        ls_side
                    } else {
                        space.side_in(e, x)
                    }
                };
                points.push(FacePoint {
                    x: *x,
                    weight: *w,
                    first: space.shape_on(first, x, side(first)),
                    second: second.map(|e| space.shape_on(e, x, side(e))),
                });
            }
        }
    }
    Ok(FaceQuadrature {
        face,
        first,
        second,
        normal,
        h,
        points,
    })
}

fn sparsity(space: &IfeSpace, faces: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mesh = &space.mesh;
    let dims = mesh.node_dims();
    let mut rows: Vec<Vec<u32>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|n| {
            let [i, j, k] = mesh.node_ijk(n);
            let mut cols = Vec::with_capacity(27);
            for c in k.saturating_sub(1)..=(k + 1).min(dims[2] - 1) {
                for b in j.saturating_sub(1)..=(j + 1).min(dims[1] - 1) {
                    for a in i.saturating_sub(1)..=(i + 1).min(dims[0] - 1) {
                        cols.push(mesh.node_index([a, b, c]) as u32);
                    }
                }
            }
            cols
        })
        .collect();
    for &(a, b) in faces {
        let na = mesh.element_nodes(a);
        let nb = mesh.element_nodes(b);
        for &r in na.iter().chain(&nb) {
            rows[r].extend(na.iter().chain(&nb).map(|&c| c as u32));
        }
    }
    if !faces.is_empty() {
        rows.par_iter_mut().for_each(|r| {
            r.sort_unstable();
            r.dedup();
        });
    }
    rows
}

/// Local stiffness and load of one element.
fn element_system(
    space: &IfeSpace,
    e: usize,
    params: &SchemeParams,
    ls: &dyn LevelSet,
    snap_tol: f64,
    f: &(dyn Fn(&Point, Side) -> f64 + Sync),
) -> Result<([[f64; 8]; 8], [f64; 8])> {
    let mut k = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    for sr in element_rules(space, e, params.quadrature, ls, snap_tol)? {
        let bw_side = params.betas.of(sr.side);
        for (x, w) in sr.rule.points.iter().zip(&sr.rule.weights) {
            let s = space.shape_on(e, x, sr.side);
            let bw = bw_side * w;
            for i in 0..8 {
                for j in i..8 {
                    k[i][j] += bw * s.gradients[i].dot(&s.gradients[j]);
                }
            }
            let fx = f(x, Side::of(ls.value(x), snap_tol)) * w;
            for i in 0..8 {
                b[i] += fx * s.values[i];
            }
        }
    }
    for i in 0..8 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    Ok((k, b))
}

/// Jump and average-flux coefficients of the 16 local shape functions at a
/// face point.
fn face_traces(p: &FacePoint, normal: &Point, betas: &Betas) -> ([f64; 16], [f64; 16]) {
    let mut jump = [0.0; 16];
    let mut flux = [0.0; 16];
    let c1 = betas.of(p.first.side);
    let half = if p.second.is_some() { 0.5 } else { 1.0 };
    for i in 0..8 {
        jump[i] = p.first.values[i];
        flux[i] = half * c1 * p.first.gradients[i].dot(normal);
    }
    if let Some(s) = &p.second {
        let c2 = betas.of(s.side);
        for i in 0..8 {
            jump[8 + i] = -s.values[i];
            flux[8 + i] = 0.5 * c2 * s.gradients[i].dot(normal);
        }
    }
    (jump, flux)
}

/// Local 16x16 face matrix over the nodes of the first then second neighbor
/// (the second half is zero on boundary faces).
pub fn face_matrix(fq: &FaceQuadrature, params: &SchemeParams) -> [[f64; 16]; 16] {
    let mut a = [[0.0; 16]; 16];
    let pen = params.sigma / fq.h;
    for p in &fq.points {
        let (jump, flux) = face_traces(p, &fq.normal, &params.betas);
        for i in 0..16 {
            for j in 0..16 {
                a[i][j] += p.weight
                    * (-flux[j] * jump[i]
                        + params.epsilon * flux[i] * jump[j]
                        + pen * jump[i] * jump[j]);
            }
        }
    }
    a
}

/// Load of a boundary face from the Dirichlet data `g`; zero on interior faces.
pub fn face_load(
    fq: &FaceQuadrature,
    params: &SchemeParams,
    g: &(dyn Fn(&Point) -> f64 + Sync),
) -> [f64; 8] {
    let mut b = [0.0; 8];
    if fq.second.is_some() {
        return b;
    }
    let pen = params.sigma / fq.h;
    for p in &fq.points {
        let (jump, flux) = face_traces(p, &fq.normal, &params.betas);
        let gw = g(&p.x) * p.weight;
        for i in 0..8 {
            b[i] += gw * (params.epsilon * flux[i] + pen * jump[i]);
        }
    }
    b
}

/// Assembles the full nodal system. `f(x, side)` is the source on the given
/// side (chosen by the level-set sign), `g` the Dirichlet data.
pub fn assemble(
    space: &IfeSpace,
    ls: &dyn LevelSet,
    params: &SchemeParams,
    f: &(dyn Fn(&Point, Side) -> f64 + Sync),
    g: &(dyn Fn(&Point) -> f64 + Sync),
) -> Result<LinearSystem> {
    if params.betas != space.betas {
        return Err(Error::Assembly(
            "scheme coefficients differ from those used to build the space".into(),
        ));
    }
    for (e, c) in space.cuts.iter().enumerate() {
        if c.is_interface() && space.bases[e].is_none() {
            return Err(Error::Assembly(format!(
                "interface element {e} has no IFE basis"
            )));
        }
    }
    let mesh = &space.mesh;
    let snap_tol = snap_tolerance(space);
    let faces = interface_faces(space);
    let face_pairs: Vec<(usize, usize)> = faces
        .iter()
        .map(|&f| mesh.face_neighbors(f))
        .filter_map(|nb| match nb {
            Ok(nb) => nb.second.map(|s| Ok((nb.first, s))),
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    let mut matrix = CsrMatrix::from_pattern(sparsity(space, &face_pairs));
    let mut rhs = vec![0.0; mesh.num_nodes()];

    let locals: Vec<([[f64; 8]; 8], [f64; 8])> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| element_system(space, e, params, ls, snap_tol, f))
        .collect::<Result<_>>()?;
    for (e, (k, b)) in locals.iter().enumerate() {
        let nodes = mesh.element_nodes(e);
        for i in 0..8 {
            rhs[nodes[i]] += b[i];
            for j in 0..8 {
                matrix.add(nodes[i], nodes[j], k[i][j])?;
            }
        }
    }

    let face_locals: Vec<(FaceQuadrature, [[f64; 16]; 16], [f64; 8])> = faces
        .par_iter()
        .map(|&fc| {
            let fq = face_quadrature(space, fc, params.quadrature, ls, snap_tol)?;
            let a = face_matrix(&fq, params);
            let b = face_load(&fq, params, g);
            Ok((fq, a, b))
        })
        .collect::<Result<_>>()?;
    for (fq, a, b) in &face_locals {
        let mut dofs: Vec<usize> = mesh.element_nodes(fq.first).to_vec();
        if let Some(e2) = fq.second {
            dofs.extend(mesh.element_nodes(e2));
        }
        for i in 0..dofs.len() {
            for j in 0..dofs.len() {
                matrix.add(dofs[i], dofs[j], a[i][j])?;
            }
        }
        for i in 0..8 {
            rhs[dofs[i]] += b[i];
        }
    }

    let dirichlet = mesh
        .boundary_nodes()
        .into_iter()
        .map(|n| (n, g(&mesh.node_point(n))))
        .collect();
    Ok(LinearSystem {
        matrix,
        rhs,
        dirichlet,
    })
}

/// Level-set values within this distance of zero count as plus.
pub fn snap_tolerance(space: &IfeSpace) -> f64 {
    crate::geometry::ClassifyOptions::default().snap_factor * space.mesh.h()
}

/// The system restricted to interior nodes.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full node index of each reduced unknown.
    pub free: Vec<usize>,
    /// Full-length vector holding the boundary values (zero elsewhere).
    pub boundary_values: Vec<f64>,
}

impl ReducedSystem {
    /// Full nodal vector from a solution of the reduced system.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.boundary_values.clone();
        for (k, &n) in self.free.iter().enumerate() {
            u[n] = x[k];
        }
        u
    }

    /// Restriction of a full nodal vector to the free unknowns.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&n| u[n]).collect()
    }
}

/// Eliminates the Dirichlet nodes symmetrically.
pub fn apply_dirichlet(system: &LinearSystem) -> ReducedSystem {
    let n = system.matrix.nrows;
    let mut boundary_values = vec![0.0; n];
    let mut is_bc = vec![false; n];
    for &(node, v) in &system.dirichlet {
        boundary_values[node] = v;
        is_bc[node] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_bc[i]).collect();
    let mut reduced_index = vec![u32::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        reduced_index[i] = k as u32;
    }
    let rows: Vec<(Vec<u32>, Vec<f64>, f64)> = free
        .par_iter()
        .map(|&i| {
            let (cols, vals) = system.matrix.row(i);
            let mut rc = Vec::with_capacity(cols.len());
            let mut rv = Vec::with_capacity(cols.len());
            let mut b = system.rhs[i];
            for (&j, &a) in cols.iter().zip(vals) {
                let j = j as usize;
                if is_bc[j] {
                    b -= a * boundary_values[j];
                } else {
                    rc.push(reduced_index[j]);
                    rv.push(a);
                }
            }
            (rc, rv, b)
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(free.len() + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut rhs = Vec::with_capacity(free.len());
    for (c, v, b) in rows {
        col_idx.extend(c);
        values.extend(v);
        rhs.push(b);
        row_ptr.push(col_idx.len());
    }
    ReducedSystem {
        matrix: CsrMatrix {
            nrows: free.len(),
            row_ptr,
            col_idx,
            values,
        },
        rhs,
        free,
        boundary_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ClassifyOptions;
    use crate::levelset::{FnLevelSet, PlaneLevelSet};
    use crate::mesh::{BoxDomain, Mesh};

    fn space(n: usize, ls: &dyn LevelSet, betas: Betas) -> IfeSpace {
        let m = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), n).unwrap();
        IfeSpace::build(m, ls, betas, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn params_validation() {
        let b = Betas::new(1.0, 3.0).unwrap();
        assert!(SchemeParams::new(2.0, 10.0, b).is_err());
        assert!(SchemeParams::new(-1.0, 0.0, b).is_err());
        let p = SchemeParams::new(-1.0, 10.0, b).unwrap();
        assert!((p.sigma - 90.0).abs() < 1e-12);
        assert_eq!(
            "levelset-sign".parse::<QuadratureMode>().unwrap(),
            QuadratureMode::LevelsetSign
        );
        assert!("bogus".parse::<QuadratureMode>().is_err());
    }

    #[test]
    fn symmetric_and_reproduces_constants() {
        let ls = PlaneLevelSet::new(Point::new(1.0, 0.2, 1.0), 0.13);
        let betas = Betas::new(1.0, 10.0).unwrap();
        let s = space(4, &ls, betas);
        assert!(s.num_interface_elements() > 0);
        let params = SchemeParams::new(-1.0, 10.0, betas).unwrap();
        // constants are reproduced: A 1 equals the boundary-face load of g = 1
        let sys = assemble(&s, &ls, &params, &|_, _| 0.0, &|_| 1.0).unwrap();
        let amax = sys.matrix.max_abs();
        assert!(sys.matrix.asymmetry() <= 1e-12 * amax);
        let ones = vec![1.0; s.num_dofs()];
        let rs = sys.matrix.mul_vec(&ones);
        assert!(rs
            .iter()
            .zip(&sys.rhs)
            .all(|(v, b)| (v - b).abs() <= 1e-10 * amax));
        let ns = SchemeParams::new(1.0, 10.0, betas).unwrap();
        let sys = assemble(&s, &ls, &ns, &|_, _| 0.0, &|_| 0.0).unwrap();
        assert!(sys.matrix.asymmetry() > 1e-6 * amax);
    }

    #[test]
    fn all_boundary_mesh_reduces_to_nothing() {
        let ls = FnLevelSet::new(|p: &Point| p.x - 10.0);
        let betas = Betas::new(1.0, 1.0).unwrap();
        let s = space(1, &ls, betas);
        let params = SchemeParams::new(-1.0, 10.0, betas).unwrap();
        let sys = assemble(&s, &ls, &params, &|_, _| 1.0, &|p| p.x).unwrap();
        let red = apply_dirichlet(&sys);
        assert_eq!(red.matrix.nrows, 0);
        let u = red.expand(&[]);
        for n in 0..8 {
            assert_eq!(u[n], s.mesh.node_point(n).x);
        }
    }

    #[test]
    fn zero_dirichlet_keeps_rhs() {
        let ls = FnLevelSet::new(|p: &Point| p.x - 10.0);
        let betas = Betas::new(1.0, 1.0).unwrap();
        let s = space(3, &ls, betas);
        let params = SchemeParams::new(-1.0, 10.0, betas).unwrap();
        let sys = assemble(&s, &ls, &params, &|p, _| p.y, &|_| 0.0).unwrap();
        let red = apply_dirichlet(&sys);
        for (k, &n) in red.free.iter().enumerate() {
            assert_eq!(red.rhs[k], sys.rhs[n]);
        }
    }
}
