//! Signed-distance level sets built from surface point clouds.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::mesh::{BoxDomain, Mesh};
use crate::Point;

/// Percentile of nearest-neighbor spacings taken as the cloud resolution.
pub const RESOLUTION_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "a point cloud needs at least 4 points, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!(
                "non-finite cloud point {:?}",
                p.as_slice()
            )));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fails with the first offending point if any point lies outside `domain`.
    pub fn check_inside(&self, domain: &BoxDomain) -> Result<()> {
        match self.points.iter().position(|p| !domain.contains(p)) {
            Some(i) => Err(Error::invalid(format!(
                "cloud point {i} at {:?} lies outside the domain {:?} - {:?}",
                self.points[i].as_slice(),
                domain.lo.as_slice(),
                domain.hi.as_slice()
            ))),
            None => Ok(()),
        }
    }
}

/// Reads a plain-text cloud: one point per line as three reals separated by
/// whitespace or commas; blank lines and lines starting with `#` are skipped.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path)?;
    parse_cloud(&text, path)
}

pub fn parse_cloud(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 3 {
            return Err(parse_error(format!(
                "expected 3 values, found {}",
                fields.len()
            )));
        }
        let mut p = Point::zeros();
        for (d, f) in fields.iter().enumerate() {
            p[d] = f
                .parse::<f64>()
                .map_err(|_| parse_error(format!("'{f}' is not a number")))?;
        }
        points.push(p);
    }
    PointCloud::new(points)
}

/// `n` points spread evenly over a sphere by the golden-angle spiral.
pub fn fibonacci_sphere(n: usize, center: Point, radius: f64) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            center + radius * Point::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Uniform bins over the bounding box of a point set.
#[derive(Debug, Clone)]
pub struct PointBins {
    lo: Point,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
    points: Vec<Point>,
}

impl PointBins {
    pub fn new(points: &[Point]) -> Self {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = (hi - lo).map(|v| v.max(1e-12));
        // about two points per bin on a surface sample
        let per_axis = (points.len() as f64 / 2.0).cbrt().max(1.0);
        let cell = ext.max() / per_axis;
        let dims = [0, 1, 2].map(|d| ((ext[d] / cell).ceil() as usize).max(1));
        let mut bins = Self {
            lo,
            cell,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
            points: points.to_vec(),
        };
        let nb = dims[0] * dims[1] * dims[2];
        let keys: Vec<usize> = points.iter().map(|p| bins.key(bins.cell_of(p))).collect();
        let mut counts = vec![0usize; nb + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..nb {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k]] = i;
            fill[k] += 1;
        }
        bins.starts = counts;
        bins.items = items;
        bins
    }

    fn cell_of(&self, p: &Point) -> [usize; 3] {
        [0, 1, 2].map(|d| {
            let c = ((p[d] - self.lo[d]) / self.cell).floor();
            (c.max(0.0) as usize).min(self.dims[d] - 1)
        })
    }

    fn key(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    fn bin(&self, c: [usize; 3]) -> &[usize] {
        let k = self.key(c);
        &self.items[self.starts[k]..self.starts[k + 1]]
    }

    /// Visits the bins at Chebyshev distance exactly `ring` from `c`.
    fn for_ring(&self, c: [usize; 3], ring: usize, mut f: impl FnMut(&[usize])) {
        let r = ring as isize;
        let range = |d: usize| {
            let lo = (c[d] as isize - r).max(0);
            let hi = (c[d] as isize + r).min(self.dims[d] as isize - 1);
            lo..=hi
        };
        for k in range(2) {
            for j in range(1) {
                for i in range(0) {
                    let on_shell = (i - c[0] as isize).abs() == r
                        || (j - c[1] as isize).abs() == r
                        || (k - c[2] as isize).abs() == r;
                    if on_shell {
                        f(self.bin([i as usize, j as usize, k as usize]));
                    }
                }
            }
        }
    }

    /// Nearest point to `q` other than `skip`, and its distance.
    pub fn nearest(&self, q: &Point, skip: Option<usize>) -> Option<(usize, f64)> {
        let c = self.cell_of(q);
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            self.for_ring(c, ring, |bin| {
                for &i in bin {
                    if Some(i) == skip {
                        continue;
                    }
                    let d = (self.points[i] - q).norm();
                    if best.is_none_or(|(_, b)| d < b) {
                        best = Some((i, d));
                    }
                }
            });
            // points in farther rings are at least ring * cell away
            if let Some((_, b)) = best {
                if b <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }

    /// Indices of points within `radius` of `q`.
    pub fn within(&self, q: &Point, radius: f64) -> Vec<usize> {
        let lo = self.cell_of(&(q - Point::repeat(radius)));
        let hi = self.cell_of(&(q + Point::repeat(radius)));
        let mut out = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    out.extend(
                        self.bin([i, j, k])
                            .iter()
                            .filter(|&&p| (self.points[p] - q).norm() <= radius),
                    );
                }
            }
        }
        out
    }
}

/// Distance from `p` to the segment `a`-`b`.
fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// The 95th percentile of nearest-neighbor spacings in the cloud.
pub fn cloud_resolution(cloud: &PointCloud, bins: &PointBins) -> f64 {
    let mut nn: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            bins.nearest(&cloud.points[i], Some(i))
                .map_or(0.0, |(_, d)| d)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let idx = ((RESOLUTION_PERCENTILE * (nn.len() - 1) as f64).round() as usize).min(nn.len() - 1);
    nn[idx]
}

/// Nodal values on a mesh, interpolated trilinearly inside each element.
#[derive(Debug, Clone)]
pub struct NodalLevelSet {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    /// Cloud resolution used for the sign, when built from a cloud.
    pub resolution: Option<f64>,
}

impl NodalLevelSet {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::invalid(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(Self {
            mesh,
            values,
            resolution: None,
        })
    }

    fn element_for(&self, p: &Point) -> usize {
        let d = self.mesh.domain();
        let q = p.sup(&d.lo).inf(&d.hi);
        self.mesh.locate(&q).unwrap_or(0)
    }

    /// Writes `i,j,k,value` rows.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "i,j,k,value")?;
        for (n, v) in self.values.iter().enumerate() {
            let [i, j, k] = self.mesh.node_ijk(n);
            writeln!(out, "{i},{j},{k},{v:e}")?;
        }
        Ok(())
    }
}

impl LevelSet for NodalLevelSet {
    fn value(&self, p: &Point) -> f64 {
        let e = self.element_for(p);
        let xi = self.mesh.element_frame(e).to_local(p);
        let nodes = self.mesh.element_nodes(e);
        let mut v = 0.0;
        for (l, &n) in nodes.iter().enumerate() {
            let w: f64 = (0..3)
                .map(|d| {
                    let on = crate::mesh::VERTEX_OFFSETS[l][d] == 1;
                    if on {
                        xi[d]
                    } else {
                        1.0 - xi[d]
                    }
                })
                .product();
            v += w * self.values[n];
        }
        v
    }

    fn gradient(&self, p: &Point) -> Option<Point> {
        let e = self.element_for(p);
        let frame = self.mesh.element_frame(e);
        let xi = frame.to_local(p);
        let nodes = self.mesh.element_nodes(e);
        let mut g = Point::zeros();
        for (l, &n) in nodes.iter().enumerate() {
            let o = crate::mesh::VERTEX_OFFSETS[l];
            let f = |d: usize| if o[d] == 1 { xi[d] } else { 1.0 - xi[d] };
            let df = |d: usize| if o[d] == 1 { 1.0 } else { -1.0 };
            g += self.values[n]
                * Point::new(
                    df(0) * f(1) * f(2) / frame.spacing.x,
                    f(0) * df(1) * f(2) / frame.spacing.y,
                    f(0) * f(1) * df(2) / frame.spacing.z,
                );
        }
        Some(g)
    }
}

/// Nodes closer than this many cloud resolutions to the cloud are signed by a
/// fitted tangent plane.
pub const SURFACE_BAND: f64 = 2.0;

/// Unit normal of the plane fitted to the cloud around point `p`, pointing
/// to the side of the positive nodes nearby. `None` when the neighborhood is
/// too small or no node outside the band is close enough to orient it.
fn oriented_normal(
    cloud: &PointCloud,
    bins: &PointBins,
    p: usize,
    delta: f64,
    mesh: &Mesh,
    values: &[f64],
    band: f64,
) -> Option<Point> {
    let center = cloud.points[p];
    let nbrs = bins.within(&center, 3.0 * delta);
    if nbrs.len() < 3 {
        return None;
    }
    let mean = nbrs.iter().map(|&i| cloud.points[i]).sum::<Point>() / nbrs.len() as f64;
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for &i in &nbrs {
        let d = cloud.points[i] - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let normal: Point = eig.eigenvectors.column(k).into_owned();

    let reach = (3.0 * delta).max(2.0 * mesh.h());
    let spacing = mesh.spacing();
    let lo = mesh.domain().lo;
    let dims = mesh.node_dims();
    let range = |d: usize| {
        let a = ((center[d] - reach - lo[d]) / spacing[d]).floor().max(0.0) as usize;
        let b = (((center[d] + reach - lo[d]) / spacing[d]).ceil() as usize).min(dims[d] - 1);
        a..=b
    };
    let mut vote = 0.0;
    for k in range(2) {
        for j in range(1) {
            for i in range(0) {
                let n = mesh.node_index([i, j, k]);
                if values[n].abs() < band {
                    continue;
                }
                vote += values[n].signum() * (mesh.node_point(n) - center).dot(&normal);
            }
        }
    }
    if vote == 0.0 {
        None
    } else {
        Some(normal * vote.signum())
    }
}

/// Nodal signed distance to the cloud.
///
/// Nodes reachable from the boundary without passing within the cloud
/// resolution `delta` of a cloud point are positive, all others negative, and
/// magnitudes are distances to the nearest cloud point. Nodes closer than
/// `SURFACE_BAND * delta` to the cloud instead take the signed distance to
/// the tangent plane fitted at their nearest point, with the plane oriented
/// by the flood-fill signs of the surrounding nodes.
pub fn signed_distance(cloud: &PointCloud, mesh: &Mesh) -> Result<NodalLevelSet> {
    let domain = mesh.domain();
    let margin = mesh.spacing();
    if let Some(i) = cloud.points.iter().position(|p| {
        (0..3).any(|d| p[d] < domain.lo[d] + margin[d] || p[d] > domain.hi[d] - margin[d])
    }) {
        return Err(Error::invalid(format!(
            "cloud point {i} at {:?} lies within one cell of the domain boundary",
            cloud.points[i].as_slice()
        )));
    }
    let bins = PointBins::new(&cloud.points);
    let delta = cloud_resolution(cloud, &bins);
    let nearest: Vec<(usize, f64)> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|n| {
            bins.nearest(&mesh.node_point(n), None)
                .unwrap_or((usize::MAX, f64::INFINITY))
        })
        .collect();
    let dist: Vec<f64> = nearest.iter().map(|&(_, d)| d).collect();

    let blocked = |a: usize, b: usize| -> bool {
        let (pa, pb) = (mesh.node_point(a), mesh.node_point(b));
        let len = (pb - pa).norm();
        if dist[a].min(dist[b]) > len + delta {
            return false;
        }
        let mid = 0.5 * (pa + pb);
        bins.within(&mid, 0.5 * len + delta)
            .iter()
            .any(|&i| segment_distance(&cloud.points[i], &pa, &pb) < delta)
    };
    let mut outside = vec![false; mesh.num_nodes()];
    let mut queue: VecDeque<usize> = mesh.boundary_nodes().into_iter().collect();
    for &n in &queue {
        outside[n] = true;
    }
    while let Some(n) = queue.pop_front() {
        for m in mesh.node_neighbors(n) {
            if !outside[m] && !blocked(n, m) {
                outside[m] = true;
                queue.push_back(m);
            }
        }
    }
    // nodes on the cloud itself are unreachable too; a real interior has
    // nodes away from it
    if !outside.iter().zip(&dist).any(|(&o, &d)| !o && d > delta) {
        return Err(Error::DegenerateCloud(
            "no node is enclosed by the cloud away from its points; the cloud does not enclose a region at this resolution"
                .into(),
        ));
    }
    let mut values: Vec<f64> = dist
        .iter()
        .zip(&outside)
        .map(|(&d, &o)| if o { d } else { -d })
        .collect();
    let band = SURFACE_BAND * delta;
    let resigned: Vec<(usize, f64)> = (0..mesh.num_nodes())
        .into_par_iter()
        .filter(|&n| dist[n] < band)
        .filter_map(|n| {
            let p = nearest[n].0;
            let normal = oriented_normal(cloud, &bins, p, delta, mesh, &values, band)?;
            Some((n, (mesh.node_point(n) - cloud.points[p]).dot(&normal)))
        })
        .collect();
    for (n, v) in resigned {
        values[n] = v;
    }
    let mut ls = NodalLevelSet::new(mesh.clone(), values)?;
    ls.resolution = Some(delta);
    Ok(ls)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators() {
        let c = parse_cloud("0 0 0\n1 0 0\n# note\n\n0,1,0\n0 0 1\n", Path::new("x")).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.points[2], Point::new(0.0, 1.0, 0.0));
        match parse_cloud("a b c\n", Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_cloud("0 0 0\n1 1 1\n", Path::new("x")),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            parse_cloud("0 0\n", Path::new("x")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn bins_agree_with_brute_force() {
        let pts = fibonacci_sphere(500, Point::repeat(0.5), 0.3);
        let bins = PointBins::new(&pts);
        for q in [
            Point::zeros(),
            Point::repeat(0.5),
            Point::new(0.9, 0.2, 0.5),
            Point::new(3.0, -1.0, 0.4),
        ] {
            let brute = pts
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            let (_, d) = bins.nearest(&q, None).unwrap();
            assert_eq!(d, brute);
        }
        let got = bins.within(&Point::new(0.5, 0.5, 0.8), 0.05).len();
        let want = pts
            .iter()
            .filter(|p| (*p - Point::new(0.5, 0.5, 0.8)).norm() <= 0.05)
            .count();
        assert_eq!(got, want);
    }

    #[test]
    fn nodal_field_interpolates() {
        let m = Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 2).unwrap();
        let vals: Vec<f64> = (0..m.num_nodes())
            .map(|n| {
                let p = m.node_point(n);
                1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y * p.z
            })
            .collect();
        let ls = NodalLevelSet::new(m.clone(), vals.clone()).unwrap();
        for n in 0..m.num_nodes() {
            assert_eq!(ls.value(&m.node_point(n)), vals[n]);
        }
        let p = Point::new(0.3, 0.7, 0.9);
        assert!((ls.value(&p) - (1.0 + 0.6 - 0.7 + 0.5 * 0.3 * 0.7 * 0.9)).abs() < 1e-14);
        let g = ls.gradient(&p).unwrap();
        assert!((g - Point::new(2.0 + 0.5 * 0.63, -1.0 + 0.5 * 0.27, 0.5 * 0.21)).norm() < 1e-13);
    }
}
