//! Discrete error norms, convergence rates and inequality probes.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assembly::{
    element_rules, face_quadrature, interface_faces, QuadratureMode, SchemeParams,
};
use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::ife::IfeSpace;
use crate::levelset::LevelSet;
use crate::quadrature::{
    cuboid_rule, face_rule, refine_tets, surface_rule, tessellate_cut, tets_rule, QuadRule,
};
use crate::Point;

/// Refinement levels applied to the plane-cut tetrahedra when integrating
/// errors on interface elements, so that the true interface inside each piece
/// is resolved.
pub const ERROR_REFINEMENT: usize = 1;

/// Value and gradient of a reference solution at a point on a given side of
/// the interface.
pub type Reference<'a> = dyn Fn(&Point, Side) -> (f64, Point) + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub h: f64,
    /// Maximum nodal error.
    pub e_inf: f64,
    /// L2 error.
    pub e_0: f64,
    /// H1 seminorm error.
    pub e_1: f64,
    pub e_energy: Option<f64>,
}

/// Rules used for error integration on element `e`, tagged with the side of
/// the discrete solution.
fn error_rules(
    space: &IfeSpace,
    e: usize,
    mode: QuadratureMode,
    ls: &dyn LevelSet,
    snap_tol: f64,
) -> Result<Vec<(Side, QuadRule)>> {
    if space.bases[e].is_some() && mode == QuadratureMode::PlaneCut {
        let tess = tessellate_cut(&space.cuts[e])?;
        return Ok([Side::Minus, Side::Plus]
            .into_iter()
            .map(|s| (s, tets_rule(&refine_tets(tess.side(s), ERROR_REFINEMENT))))
            .filter(|(_, r)| !r.is_empty())
            .collect());
    }
    if space.bases[e].is_none() {
        let side = space.cuts[e].uniform_side().unwrap_or(Side::Plus);
        return Ok(vec![(side, cuboid_rule(&space.cuts[e].frame, 4)?)]);
    }
    Ok(element_rules(space, e, mode, ls, snap_tol)?
        .into_iter()
        .map(|r| (r.side, r.rule))
        .collect())
}

/// `(max nodal error, L2 error squared, H1 seminorm error squared,
/// beta-weighted H1 seminorm squared)`.
fn volume_errors(
    space: &IfeSpace,
    coeffs: &[f64],
    ls: &dyn LevelSet,
    mode: QuadratureMode,
    reference: &Reference,
) -> Result<(f64, f64, f64, f64)> {
    let mesh = &space.mesh;
    let snap_tol = crate::assembly::snap_tolerance(space);
    let e_inf = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|n| {
            let x = mesh.node_point(n);
            (coeffs[n] - reference(&x, Side::of(ls.value(&x), snap_tol)).0).abs()
        })
        .reduce(|| 0.0, f64::max);
    let per_element: Vec<[f64; 3]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let nodes = mesh.element_nodes(e);
            let mut acc = [0.0; 3];
            for (side, rule) in error_rules(space, e, mode, ls, snap_tol)? {
                let beta = space.beta(side);
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    let s = space.shape_on(e, x, side);
                    let mut uh = 0.0;
                    let mut guh = Point::zeros();
                    for i in 0..8 {
                        uh += coeffs[nodes[i]] * s.values[i];
                        guh += coeffs[nodes[i]] * s.gradients[i];
                    }
                    let (u, gu) = reference(x, Side::of(ls.value(x), snap_tol));
                    let dg = (guh - gu).norm_squared();
                    acc[0] += w * (uh - u).powi(2);
                    acc[1] += w * dg;
                    acc[2] += w * beta * dg;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // fixed summation order keeps reruns bitwise identical
    let sum = per_element
        .iter()
        .fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    Ok((e_inf, sum[0], sum[1], sum[2]))
}

/// Errors of the discrete solution `coeffs` against `reference`.
///
/// The discrete solution's branch follows the scheme's quadrature mode; the
/// reference branch is chosen by the level-set sign. With `params`, the
/// energy norm adds the face penalty terms of the scheme.
pub fn norm_errors(
    space: &IfeSpace,
    coeffs: &[f64],
    ls: &dyn LevelSet,
    reference: &Reference,
    params: Option<&SchemeParams>,
    mode: QuadratureMode,
) -> Result<ErrorReport> {
    if coeffs.len() != space.num_dofs() {
        return Err(Error::invalid(format!(
            "{} coefficients for {} nodes",
            coeffs.len(),
            space.num_dofs()
        )));
    }
    let (e_inf, l2, h1, energy_volume) = volume_errors(space, coeffs, ls, mode, reference)?;
    let e_energy = match params {
        Some(p) => {
            Some((energy_volume + face_energy(space, coeffs, ls, p, Some(reference))?).sqrt())
        }
        None => None,
    };
    Ok(ErrorReport {
        n: space.mesh.counts()[0],
        h: space.mesh.h(),
        e_inf,
        e_0: l2.sqrt(),
        e_1: h1.sqrt(),
        e_energy,
    })
}

/// Face part of the squared energy norm of `coeffs - reference` (or of
/// `coeffs` alone).
fn face_energy(
    space: &IfeSpace,
    coeffs: &[f64],
    ls: &dyn LevelSet,
    params: &SchemeParams,
    reference: Option<&Reference>,
) -> Result<f64> {
    let mesh = &space.mesh;
    let snap_tol = crate::assembly::snap_tolerance(space);
    let faces = interface_faces(space);
    let parts: Vec<f64> = faces
        .par_iter()
        .map(|&f| {
            let fq = face_quadrature(space, f, params.quadrature, ls, snap_tol)?;
            let eval = |e: usize, s: &crate::ife::ShapeEval| {
                let nodes = mesh.element_nodes(e);
                let (mut v, mut g) = (0.0, Point::zeros());
                for i in 0..8 {
                    v += coeffs[nodes[i]] * s.values[i];
                    g += coeffs[nodes[i]] * s.gradients[i];
                }
                (v, space.beta(s.side) * g.dot(&fq.normal))
            };
            let mut jump2 = 0.0;
            let mut flux2 = 0.0;
            for p in &fq.points {
                let (v1, f1) = eval(fq.first, &p.first);
                let (mut jump, mut avg) = match (fq.second, &p.second) {
                    (Some(e2), Some(s2)) => {
                        let (v2, f2) = eval(e2, s2);
                        (v1 - v2, 0.5 * (f1 + f2))
                    }
                    _ => (v1, f1),
                };
                if let Some(r) = reference {
                    let side = Side::of(ls.value(&p.x), snap_tol);
                    let (u, gu) = r(&p.x, side);
                    avg -= space.beta(side) * gu.dot(&fq.normal);
                    if p.second.is_none() {
                        jump -= u;
                    }
                }
                jump2 += p.weight * jump * jump;
                flux2 += p.weight * avg * avg;
            }
            Ok(params.sigma / fq.h * jump2 + fq.h / params.sigma * flux2)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Energy norm of a discrete function.
pub fn energy_norm(
    space: &IfeSpace,
    coeffs: &[f64],
    ls: &dyn LevelSet,
    params: &SchemeParams,
) -> Result<f64> {
    let zero = |_: &Point, _: Side| (0.0, Point::zeros());
    let (_, _, _, vol) = volume_errors(space, coeffs, ls, params.quadrature, &zero)?;
    Ok((vol + face_energy(space, coeffs, ls, params, None)?).sqrt())
}

/// Discrete solution used as the reference for errors on coarser meshes.
pub struct FineReference<'a> {
    pub space: &'a IfeSpace,
    pub coeffs: &'a [f64],
}

impl FineReference<'_> {
    /// Value and gradient at `x`; the side argument is ignored because the
    /// fine space resolves the interface itself.
    pub fn eval(&self, x: &Point, _side: Side) -> (f64, Point) {
        match self.space.mesh.locate(x) {
            Some(e) => self.space.eval_in(self.coeffs, e, x),
            None => (f64::NAN, Point::repeat(f64::NAN)),
        }
    }
}

/// Least-squares fit `e = coefficient * h^slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub coefficient: f64,
    pub slope: f64,
}

pub fn fit_power_law(h: &[f64], e: &[f64]) -> Result<PowerFit> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::invalid("need at least two (h, error) pairs"));
    }
    for i in 0..h.len() {
        for j in 0..i {
            if h[i] == h[j] {
                return Err(Error::invalid(format!("duplicate mesh size h = {}", h[i])));
            }
        }
    }
    if e.iter().chain(h).any(|v| !(*v > 0.0)) {
        return Ok(PowerFit {
            coefficient: f64::NAN,
            slope: f64::NAN,
        });
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(PowerFit {
        coefficient: (my - slope * mx).exp(),
        slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRates {
    pub e_inf: PowerFit,
    pub e_0: PowerFit,
    pub e_1: PowerFit,
    pub e_energy: Option<PowerFit>,
}

/// Regression slopes of each error against `h`.
pub fn convergence_rates(reports: &[ErrorReport]) -> Result<ConvergenceRates> {
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let col = |f: fn(&ErrorReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    let e_energy = if reports.iter().all(|r| r.e_energy.is_some()) {
        Some(fit_power_law(&h, &col(|r| r.e_energy.unwrap_or(0.0)))?)
    } else {
        None
    };
    Ok(ConvergenceRates {
        e_inf: fit_power_law(&h, &col(|r| r.e_inf))?,
        e_0: fit_power_law(&h, &col(|r| r.e_0))?,
        e_1: fit_power_law(&h, &col(|r| r.e_1))?,
        e_energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// `|beta grad phi . n|_F / (h^-1/2 beta+/sqrt(beta-) |sqrt(beta) grad phi|_T)`
    Trace,
    /// `h |grad phi|_T / ((beta+/beta-) |phi|_T)`
    Inverse,
    /// `|[phi]|_{Gamma cap T} / (sqrt(beta+)/beta- h^3/2 |sqrt(beta) grad phi|_T)`
    InterfaceJump,
}

/// Up to `count` interface elements drawn without replacement.
pub fn sample_interface_elements(space: &IfeSpace, count: usize, seed: u64) -> Vec<usize> {
    let all: Vec<usize> = space.interface_elements().collect();
    if all.len() <= count {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, all.len(), count)
        .into_iter()
        .map(|i| all[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Largest normalized ratio over `samples` random IFE functions (coefficients
/// uniform in `[-1, 1]`) on each of the given interface elements.
pub fn inequality_probe(
    space: &IfeSpace,
    ls: &dyn LevelSet,
    elements: &[usize],
    kind: ProbeKind,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let betas = space.betas;
    let ratios: Vec<f64> = elements
        .par_iter()
        .map(|&e| {
            let basis = space.bases[e].as_ref().ok_or_else(|| {
                Error::invalid(format!("element {e} is not an interface element"))
            })?;
            let cut = &space.cuts[e];
            let h = cut.frame.max_spacing();
            let tess = tessellate_cut(cut)?;
            let vol: Vec<(Side, QuadRule)> = [Side::Minus, Side::Plus]
                .into_iter()
                .map(|s| (s, tets_rule(tess.side(s))))
                .collect();
            let faces: Vec<(Point, crate::quadrature::FaceRule)> = match kind {
                ProbeKind::Trace => space
                    .mesh
                    .element_faces(e)
                    .iter()
                    .map(|&f| {
                        let frame = space.mesh.face_frame(f)?;
                        let mut n = Point::zeros();
                        n[frame.axis] = 1.0;
                        Ok((n, face_rule(&frame, cut.plane.as_ref(), None)))
                    })
                    .collect::<Result<_>>()?,
                _ => Vec::new(),
            };
            let surface = match kind {
                ProbeKind::InterfaceJump => surface_rule(cut, ls)?,
                _ => QuadRule::default(),
            };
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (e as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let c: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let eval = |x: &Point, side: Side| {
                    let s = space.shape_on(e, x, side);
                    let mut v = 0.0;
                    let mut g = Point::zeros();
                    for i in 0..8 {
                        v += c[i] * s.values[i];
                        g += c[i] * s.gradients[i];
                    }
                    (v, g)
                };
                let (mut l2, mut grad2, mut energy2) = (0.0, 0.0, 0.0);
                for (side, rule) in &vol {
                    for (x, w) in rule.points.iter().zip(&rule.weights) {
                        let (v, g) = eval(x, *side);
                        l2 += w * v * v;
                        grad2 += w * g.norm_squared();
                        energy2 += w * space.beta(*side) * g.norm_squared();
                    }
                }
                let ratio = match kind {
                    ProbeKind::Trace => {
                        let mut best: f64 = 0.0;
                        for (n, fr) in &faces {
                            let mut acc = 0.0;
                            for (q, (x, w)) in
                                fr.rule.points.iter().zip(&fr.rule.weights).enumerate()
                            {
                                let side = fr.sides[q][0].unwrap_or_else(|| basis.side_of(x));
                                let flux = space.beta(side) * eval(x, side).1.dot(n);
                                acc += w * flux * flux;
                            }
                            best = best.max(acc.sqrt());
                        }
                        let scale = h.powf(-0.5) * betas.plus / betas.minus.sqrt() * energy2.sqrt();
                        best / scale
                    }
                    ProbeKind::Inverse => h * grad2.sqrt() / (betas.plus / betas.minus * l2.sqrt()),
                    ProbeKind::InterfaceJump => {
                        let mut acc = 0.0;
                        for (x, w) in surface.points.iter().zip(&surface.weights) {
                            let jump = eval(x, Side::Plus).0 - eval(x, Side::Minus).0;
                            acc += w * jump * jump;
                        }
                        let scale = betas.plus.sqrt() / betas.minus * h.powf(1.5) * energy2.sqrt();
                        acc.sqrt() / scale
                    }
                };
                if ratio.is_finite() {
                    worst = worst.max(ratio);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
