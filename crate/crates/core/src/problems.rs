//! Interface problems: geometry, coefficients, data and exact solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::ife::Betas;
use crate::levelset::{LevelSet, OrthocircleLevelSet, PlaneLevelSet, SphereLevelSet};
use crate::mesh::{BoxDomain, Mesh};
use crate::pointcloud::{fibonacci_sphere, signed_distance, PointCloud};
use crate::Point;

pub type SourceFn = Arc<dyn Fn(&Point, Side) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Value and gradient of the exact solution on a side.
pub type ExactFn = Arc<dyn Fn(&Point, Side) -> (f64, Point) + Send + Sync>;

/// Where the interface comes from.
#[derive(Clone)]
pub enum Interface {
    Analytic(Arc<dyn LevelSet>),
    /// Rebuilt as a nodal signed-distance field on every mesh.
    Cloud(Arc<PointCloud>),
}

impl Interface {
    pub fn level_set(&self, mesh: &Mesh) -> Result<Arc<dyn LevelSet>> {
        match self {
            Interface::Analytic(ls) => Ok(ls.clone()),
            Interface::Cloud(c) => Ok(Arc::new(signed_distance(c, mesh)?)),
        }
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: BoxDomain,
    pub interface: Interface,
    pub betas: Betas,
    /// Right-hand side on each side of the interface.
    pub source: SourceFn,
    /// Dirichlet data.
    pub boundary: BoundaryFn,
    pub exact: Option<ExactFn>,
}

/// `u = ls / beta` on each side, for a level set with known gradient and
/// Laplacian. The jump conditions hold because `beta u` is the same smooth
/// function on both sides.
pub fn level_set_over_beta(ls: Arc<dyn LevelSet>, betas: Betas) -> Result<(SourceFn, ExactFn)> {
    let probe = Point::new(0.1, 0.2, 0.3);
    if ls.gradient(&probe).is_none() || ls.laplacian(&probe).is_none() {
        return Err(Error::invalid(
            "the level-set-over-beta solution needs an analytic gradient and Laplacian",
        ));
    }
    let l2 = ls.clone();
    let source: SourceFn = Arc::new(move |x, _| -l2.laplacian(x).unwrap_or(f64::NAN));
    let exact: ExactFn = Arc::new(move |x, side| {
        let b = betas.of(side);
        (
            ls.value(x) / b,
            ls.gradient(x).unwrap_or(Point::repeat(f64::NAN)) / b,
        )
    });
    Ok((source, exact))
}

/// Plane `(x + z - pi/10) / sqrt(2) = 0` in `(-1, 1)^3` with a piecewise
/// linear exact solution.
pub fn example1(betas: Betas) -> Result<Problem> {
    let ls: Arc<dyn LevelSet> = Arc::new(PlaneLevelSet::new(Point::new(1.0, 0.0, 1.0), PI / 10.0));
    let (source, exact) = level_set_over_beta(ls.clone(), betas)?;
    let e2 = exact.clone();
    let l2 = ls.clone();
    Ok(Problem {
        name: "example1".into(),
        domain: BoxDomain::cube(-1.0, 1.0)?,
        interface: Interface::Analytic(ls),
        betas,
        source,
        boundary: boundary_from_exact(e2, l2),
        exact: Some(exact),
    })
}

fn boundary_from_exact(exact: ExactFn, ls: Arc<dyn LevelSet>) -> BoundaryFn {
    Arc::new(move |x| {
        let side = if ls.value(x) < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        };
        exact(x, side).0
    })
}

/// Default coefficients of the sphere example: `beta+ = pi / (2 r^2)`.
pub fn example2_betas() -> Betas {
    let r = PI / 4.0;
    Betas {
        minus: 1.0,
        plus: PI / (2.0 * r * r),
    }
}

/// Sphere of radius `r` about `center` with `u- = -cos(a rho^2)`,
/// `u+ = (a beta- / beta+)(rho^2 - r^2)` and `a = pi / (2 r^2)`.
pub fn sphere_cosine(center: Point, r: f64, betas: Betas) -> (SourceFn, ExactFn) {
    let a = PI / (2.0 * r * r);
    let c_plus = a * betas.minus / betas.plus;
    let source: SourceFn = Arc::new(move |x, side| {
        let rho2 = (x - center).norm_squared();
        match side {
            Side::Minus => {
                -betas.minus * (6.0 * a * (a * rho2).sin() + 4.0 * a * a * rho2 * (a * rho2).cos())
            }
            Side::Plus => -6.0 * betas.plus * c_plus,
        }
    });
    let exact: ExactFn = Arc::new(move |x, side| {
        let d = x - center;
        let rho2 = d.norm_squared();
        match side {
            Side::Minus => (-(a * rho2).cos(), 2.0 * a * (a * rho2).sin() * d),
            Side::Plus => (c_plus * (rho2 - r * r), 2.0 * c_plus * d),
        }
    });
    (source, exact)
}

/// Sphere `r = pi/4` in `(-1, 1)^3`.
pub fn example2(betas: Betas) -> Result<Problem> {
    let r = PI / 4.0;
    let ls: Arc<dyn LevelSet> = Arc::new(SphereLevelSet {
        center: Point::zeros(),
        radius: r,
    });
    let (source, exact) = sphere_cosine(Point::zeros(), r, betas);
    Ok(Problem {
        name: "example2".into(),
        domain: BoxDomain::cube(-1.0, 1.0)?,
        interface: Interface::Analytic(ls.clone()),
        betas,
        source,
        boundary: boundary_from_exact(exact.clone(), ls),
        exact: Some(exact),
    })
}

pub fn example3_betas() -> Betas {
    Betas {
        minus: 1.0,
        plus: 100.0,
    }
}

/// Orthocircle in `(-1.2, 1.2)^3` with `u = ls / beta`.
pub fn example3(betas: Betas) -> Result<Problem> {
    let ls: Arc<dyn LevelSet> = Arc::new(OrthocircleLevelSet::default());
    let (source, exact) = level_set_over_beta(ls.clone(), betas)?;
    Ok(Problem {
        name: "example3".into(),
        domain: BoxDomain::cube(-1.2, 1.2)?,
        interface: Interface::Analytic(ls.clone()),
        betas,
        source,
        boundary: boundary_from_exact(exact.clone(), ls),
        exact: Some(exact),
    })
}

pub fn example4_betas() -> Betas {
    Betas {
        minus: 1.0,
        plus: 10.0,
    }
}

pub fn example4_domain() -> BoxDomain {
    BoxDomain {
        lo: Point::new(0.2, 0.2, 0.1),
        hi: Point::new(1.0, 1.0, 0.9),
    }
}

/// `sin(3 pi x) sin(3 pi y) sin(3 pi z)`.
pub fn sines(x: &Point) -> f64 {
    (3.0 * PI * x.x).sin() * (3.0 * PI * x.y).sin() * (3.0 * PI * x.z).sin()
}

/// Cloud interface with `f = 0`, sine boundary data and no exact solution.
pub fn example4(cloud: PointCloud, domain: BoxDomain, betas: Betas) -> Result<Problem> {
    cloud.check_inside(&domain)?;
    Ok(Problem {
        name: "example4".into(),
        domain,
        interface: Interface::Cloud(Arc::new(cloud)),
        betas,
        source: Arc::new(|_, _| 0.0),
        boundary: Arc::new(sines),
        exact: None,
    })
}

/// Fibonacci sphere cloud at the center of the cloud example's domain.
pub fn example4_synthetic_cloud(points: usize) -> Result<PointCloud> {
    let d = example4_domain();
    PointCloud::new(fibonacci_sphere(points, 0.5 * (d.lo + d.hi), 0.3))
}

/// `u- = rho^2 / beta-`, `u+ = rho^2 / beta+ + r^2 (1/beta- - 1/beta+)` about
/// `center`, with `f = -6` on both sides.
pub fn radial(center: Point, r: f64, betas: Betas) -> (SourceFn, ExactFn) {
    let shift = r * r * (1.0 / betas.minus - 1.0 / betas.plus);
    let source: SourceFn = Arc::new(|_, _| -6.0);
    let exact: ExactFn = Arc::new(move |x, side| {
        let d = x - center;
        let rho2 = d.norm_squared();
        match side {
            Side::Minus => (rho2 / betas.minus, 2.0 * d / betas.minus),
            Side::Plus => (rho2 / betas.plus + shift, 2.0 * d / betas.plus),
        }
    });
    (source, exact)
}

/// Sphere cloud of radius 0.3 about the center of the unit box, solved
/// against the exact solution of the analytic sphere.
pub fn cloud_sphere(cloud: PointCloud, betas: Betas) -> Result<Problem> {
    let domain = BoxDomain::cube(0.0, 1.0)?;
    cloud.check_inside(&domain)?;
    let center = Point::repeat(0.5);
    let (source, exact) = radial(center, 0.3, betas);
    let analytic = SphereLevelSet {
        center,
        radius: 0.3,
    };
    let e2 = exact.clone();
    Ok(Problem {
        name: "cloud-sphere".into(),
        domain,
        interface: Interface::Cloud(Arc::new(cloud)),
        betas,
        source,
        boundary: Arc::new(move |x| {
            let side = if analytic.value(x) < 0.0 {
                Side::Minus
            } else {
                Side::Plus
            };
            e2(x, side).0
        }),
        exact: Some(exact),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of `-div(beta grad u) = f` and of the jump
    /// conditions on the interface.
    fn check_pde(p: &Problem, ls: &dyn LevelSet, samples: &[Point]) {
        let exact = p.exact.as_ref().unwrap();
        let h = 1e-4;
        for x in samples {
            let side = if ls.value(x) < 0.0 {
                Side::Minus
            } else {
                Side::Plus
            };
            let u = |y: &Point| exact(y, side).0;
            let mut lap = 0.0;
            for d in 0..3 {
                let mut a = *x;
                let mut b = *x;
                a[d] -= h;
                b[d] += h;
                lap += (u(&a) - 2.0 * u(x) + u(&b)) / (h * h);
                let g = (u(&b) - u(&a)) / (2.0 * h);
                assert!((g - exact(x, side).1[d]).abs() < 1e-6 * (1.0 + g.abs()));
            }
            let f = (p.source)(x, side);
            assert!(
                (-p.betas.of(side) * lap - f).abs() < 1e-4 * (1.0 + f.abs()),
                "{x:?}"
            );
        }
    }

    fn check_jumps(p: &Problem, on_interface: &[(Point, Point)]) {
        let exact = p.exact.as_ref().unwrap();
        for (x, n) in on_interface {
            let (um, gm) = exact(x, Side::Minus);
            let (up, gp) = exact(x, Side::Plus);
            assert!((um - up).abs() < 1e-12);
            let fm = p.betas.minus * gm.dot(n);
            let fp = p.betas.plus * gp.dot(n);
            assert!((fm - fp).abs() < 1e-12 * (1.0 + fm.abs()));
        }
    }

    fn samples() -> Vec<Point> {
        (0..20)
            .map(|i| {
                let t = i as f64;
                Point::new(
                    (1.3 * t).sin() * 0.9,
                    (0.7 * t).cos() * 0.9,
                    (2.1 * t).sin() * 0.9,
                )
            })
            .collect()
    }

    #[test]
    fn example_data_are_consistent() {
        let p1 = example1(Betas::new(1.0, 10.0).unwrap()).unwrap();
        let Interface::Analytic(ls1) = &p1.interface else {
            unreachable!()
        };
        check_pde(&p1, ls1.as_ref(), &samples());
        let n = Point::new(1.0, 0.0, 1.0).normalize();
        check_jumps(&p1, &[(Point::new(PI / 10.0, 0.3, 0.0), n)]);

        let p2 = example2(example2_betas()).unwrap();
        let Interface::Analytic(ls2) = &p2.interface else {
            unreachable!()
        };
        check_pde(&p2, ls2.as_ref(), &samples());
        let r = PI / 4.0;
        let dirs = [Point::x(), Point::new(1.0, 2.0, -0.5).normalize()];
        check_jumps(&p2, &dirs.map(|d| (r * d, d)));
        // with the default coefficients the plus side is rho^2 - r^2
        let (u, _) = (p2.exact.as_ref().unwrap())(&Point::new(0.9, 0.0, 0.0), Side::Plus);
        assert!((u - (0.81 - r * r)).abs() < 1e-14);

        let p3 = example3(example3_betas()).unwrap();
        let Interface::Analytic(ls3) = &p3.interface else {
            unreachable!()
        };
        check_pde(&p3, ls3.as_ref(), &samples());

        let cloud = PointCloud::new(fibonacci_sphere(100, Point::repeat(0.5), 0.3)).unwrap();
        let p4 = cloud_sphere(cloud, Betas::new(1.0, 10.0).unwrap()).unwrap();
        let sphere = SphereLevelSet {
            center: Point::repeat(0.5),
            radius: 0.3,
        };
        let inner: Vec<Point> = samples()
            .iter()
            .map(|x| Point::repeat(0.5) + 0.5 * x)
            .collect();
        check_pde(&p4, &sphere, &inner);
        check_jumps(&p4, &dirs.map(|d| (Point::repeat(0.5) + 0.3 * d, d)));
    }

    #[test]
    fn cloud_outside_domain_is_rejected() {
        let cloud = PointCloud::new(fibonacci_sphere(50, Point::repeat(0.9), 0.3)).unwrap();
        assert!(cloud_sphere(cloud, example4_betas()).is_err());
        assert!(example4_synthetic_cloud(200)
            .unwrap()
            .check_inside(&example4_domain())
            .is_ok());
    }
}
