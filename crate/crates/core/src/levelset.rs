//! Level-set descriptions of the interface. Negative values are the minus
//! subdomain, positive values the plus subdomain.

use std::sync::Arc;

use crate::Point;

/// A scalar field whose zero set is the interface.
///
/// Implementations must be callable from several threads at once.
pub trait LevelSet: Send + Sync {
    fn value(&self, p: &Point) -> f64;

    /// Analytic gradient, when known.
    fn gradient(&self, _p: &Point) -> Option<Point> {
        None
    }

    /// Upper bound on the principal curvatures of the zero set (1/length).
    fn curvature_bound(&self) -> Option<f64> {
        None
    }

    /// Reach of the zero set (length).
    fn reach(&self) -> Option<f64> {
        None
    }

    /// Analytic Laplacian of the level-set function, when known.
    fn laplacian(&self, _p: &Point) -> Option<f64> {
        None
    }
}

impl<L: LevelSet + ?Sized> LevelSet for Arc<L> {
    fn value(&self, p: &Point) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: &Point) -> Option<Point> {
        (**self).gradient(p)
    }
    fn curvature_bound(&self) -> Option<f64> {
        (**self).curvature_bound()
    }
    fn reach(&self) -> Option<f64> {
        (**self).reach()
    }
    fn laplacian(&self, p: &Point) -> Option<f64> {
        (**self).laplacian(p)
    }
}

impl<L: LevelSet + ?Sized> LevelSet for &L {
    fn value(&self, p: &Point) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: &Point) -> Option<Point> {
        (**self).gradient(p)
    }
    fn curvature_bound(&self) -> Option<f64> {
        (**self).curvature_bound()
    }
    fn reach(&self) -> Option<f64> {
        (**self).reach()
    }
    fn laplacian(&self, p: &Point) -> Option<f64> {
        (**self).laplacian(p)
    }
}

/// Gradient of `ls` at `p`: the analytic one if available, otherwise central
/// differences with step `1e-6 * h`.
pub fn gradient_at(ls: &dyn LevelSet, p: &Point, h: f64) -> Point {
    if let Some(g) = ls.gradient(p) {
        return g;
    }
    let step = 1e-6 * h;
    Point::from_fn(|d, _| {
        let mut a = *p;
        let mut b = *p;
        a[d] -= step;
        b[d] += step;
        (ls.value(&b) - ls.value(&a)) / (2.0 * step)
    })
}

/// `n . x - offset` with `n` a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneLevelSet {
    pub normal: Point,
    pub offset: f64,
}

impl PlaneLevelSet {
    /// Normalizes `normal` (and scales `offset` along with it).
    pub fn new(normal: Point, offset: f64) -> Self {
        let len = normal.norm();
        Self {
            normal: normal / len,
            offset: offset / len,
        }
    }
}

impl LevelSet for PlaneLevelSet {
    fn value(&self, p: &Point) -> f64 {
        self.normal.dot(p) - self.offset
    }
    fn gradient(&self, _p: &Point) -> Option<Point> {
        Some(self.normal)
    }
    fn curvature_bound(&self) -> Option<f64> {
        Some(0.0)
    }
    fn reach(&self) -> Option<f64> {
        Some(f64::INFINITY)
    }
    fn laplacian(&self, _p: &Point) -> Option<f64> {
        Some(0.0)
    }
}

/// `|x - c|^2 - r^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereLevelSet {
    pub center: Point,
    pub radius: f64,
}

impl LevelSet for SphereLevelSet {
    fn value(&self, p: &Point) -> f64 {
        (p - self.center).norm_squared() - self.radius * self.radius
    }
    fn gradient(&self, p: &Point) -> Option<Point> {
        Some(2.0 * (p - self.center))
    }
    fn curvature_bound(&self) -> Option<f64> {
        Some(1.0 / self.radius)
    }
    fn reach(&self) -> Option<f64> {
        Some(self.radius)
    }
    fn laplacian(&self, _p: &Point) -> Option<f64> {
        Some(6.0)
    }
}

/// Three mutually orthogonal unit circles thickened into tubes:
///
/// `[(x²+y²-1)²+z²][(x²+z²-1)²+y²][(y²+z²-1)²+x²] - t²[1+3(x²+y²+z²)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthocircleLevelSet {
    pub thickness: f64,
}

impl Default for OrthocircleLevelSet {
    fn default() -> Self {
        Self { thickness: 0.075 }
    }
}

struct OrthoParts {
    a: f64,
    b: f64,
    c: f64,
    ga: Point,
    gb: Point,
    gc: Point,
}

impl OrthocircleLevelSet {
    fn parts(p: &Point) -> OrthoParts {
        let (x, y, z) = (p.x, p.y, p.z);
        let (x2, y2, z2) = (x * x, y * y, z * z);
        let sa = x2 + y2 - 1.0;
        let sb = x2 + z2 - 1.0;
        let sc = y2 + z2 - 1.0;
        OrthoParts {
            a: sa * sa + z2,
            b: sb * sb + y2,
            c: sc * sc + x2,
            ga: Point::new(4.0 * x * sa, 4.0 * y * sa, 2.0 * z),
            gb: Point::new(4.0 * x * sb, 2.0 * y, 4.0 * z * sb),
            gc: Point::new(2.0 * x, 4.0 * y * sc, 4.0 * z * sc),
        }
    }

    fn laplacian_value(&self, p: &Point) -> f64 {
        let (x2, y2, z2) = (p.x * p.x, p.y * p.y, p.z * p.z);
        let q = Self::parts(p);
        let la = 16.0 * (x2 + y2) - 6.0;
        let lb = 16.0 * (x2 + z2) - 6.0;
        let lc = 16.0 * (y2 + z2) - 6.0;
        let t2 = self.thickness * self.thickness;
        la * q.b * q.c
            + q.a * lb * q.c
            + q.a * q.b * lc
            + 2.0 * (q.c * q.ga.dot(&q.gb) + q.b * q.ga.dot(&q.gc) + q.a * q.gb.dot(&q.gc))
            - 18.0 * t2
    }
}

impl LevelSet for OrthocircleLevelSet {
    fn value(&self, p: &Point) -> f64 {
        let q = Self::parts(p);
        let t2 = self.thickness * self.thickness;
        q.a * q.b * q.c - t2 * (1.0 + 3.0 * p.norm_squared())
    }

    fn gradient(&self, p: &Point) -> Option<Point> {
        let q = Self::parts(p);
        let t2 = self.thickness * self.thickness;
        Some(q.ga * (q.b * q.c) + q.gb * (q.a * q.c) + q.gc * (q.a * q.b) - 6.0 * t2 * p)
    }

    fn laplacian(&self, p: &Point) -> Option<f64> {
        Some(self.laplacian_value(p))
    }
}

/// Level set given by closures.
pub struct FnLevelSet<F> {
    value: F,
    curvature_bound: Option<f64>,
    reach: Option<f64>,
}

impl<F: Fn(&Point) -> f64 + Send + Sync> FnLevelSet<F> {
    pub fn new(value: F) -> Self {
        Self {
            value,
            curvature_bound: None,
            reach: None,
        }
    }

    pub fn with_curvature_bound(mut self, kappa: f64) -> Self {
        self.curvature_bound = Some(kappa);
        self
    }

    pub fn with_reach(mut self, reach: f64) -> Self {
        self.reach = Some(reach);
        self
    }
}

impl<F: Fn(&Point) -> f64 + Send + Sync> LevelSet for FnLevelSet<F> {
    fn value(&self, p: &Point) -> f64 {
        (self.value)(p)
    }
    fn curvature_bound(&self) -> Option<f64> {
        self.curvature_bound
    }
    fn reach(&self) -> Option<f64> {
        self.reach
    }
}

/// `-ls`: swaps the two subdomains.
pub struct Negated<L>(pub L);

impl<L: LevelSet> LevelSet for Negated<L> {
    fn value(&self, p: &Point) -> f64 {
        -self.0.value(p)
    }
    fn gradient(&self, p: &Point) -> Option<Point> {
        self.0.gradient(p).map(|g| -g)
    }
    fn curvature_bound(&self) -> Option<f64> {
        self.0.curvature_bound()
    }
    fn reach(&self) -> Option<f64> {
        self.0.reach()
    }
    fn laplacian(&self, p: &Point) -> Option<f64> {
        self.0.laplacian(p).map(|l| -l)
    }
}
