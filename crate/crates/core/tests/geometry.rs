use std::f64::consts::PI;

use proptest::prelude::*;

use ppife_core::geometry::{
    classify_element, classify_mesh, geometric_diagnostics, ClassifyOptions, Side,
};
use ppife_core::levelset::{PlaneLevelSet, SphereLevelSet};
use ppife_core::mesh::{BoxDomain, Mesh};
use ppife_core::quadrature::{surface_rule, tessellate_cut};
use ppife_core::Point;

/// Volume of `{x in [0,1]^3 : n . x < c}` by inclusion-exclusion over the
/// cube corners; needs every `n_i` away from zero.
fn halfspace_volume(n: Point, c: f64) -> f64 {
    // reflect so the normal is positive
    let mut c = c;
    let mut m = n;
    for d in 0..3 {
        if m[d] < 0.0 {
            c -= m[d];
            m[d] = -m[d];
        }
    }
    let mut v = 0.0;
    for corner in 0..8 {
        let bits = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let dot: f64 = (0..3).map(|d| m[d] * bits[d] as f64).sum();
        let sign = if bits.iter().sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        v += sign * (c - dot).max(0.0).powi(3);
    }
    v / (6.0 * m.x * m.y * m.z)
}

fn sphere() -> SphereLevelSet {
    SphereLevelSet {
        center: Point::zeros(),
        radius: PI / 4.0,
    }
}

proptest! {
    #[test]
    fn plane_cut_volumes(
        nx in 0.1..1.0f64, ny in 0.1..1.0f64, nz in 0.1..1.0f64,
        sx in any::<bool>(), sy in any::<bool>(), sz in any::<bool>(),
        f in (0.02..0.98f64, 0.02..0.98f64, 0.02..0.98f64),
    ) {
        let flip = |s: bool, v: f64| if s { -v } else { v };
        let n = Point::new(flip(sx, nx), flip(sy, ny), flip(sz, nz)).normalize();
        let c = n.dot(&Point::new(f.0, f.1, f.2));
        let mesh = Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 1).unwrap();
        let cut = classify_element(&PlaneLevelSet::new(n, c), &mesh, 0, 1e-12).unwrap();
        prop_assume!(cut.is_interface());
        let plane = cut.plane.unwrap();
        prop_assert!(plane.max_angle_deg <= 135.0, "angle {}", plane.max_angle_deg);
        let tess = tessellate_cut(&cut).unwrap();
        let (vm, vp) = (tess.volume(Side::Minus), tess.volume(Side::Plus));
        prop_assert!((vm + vp - 1.0).abs() <= 1e-12);
        let oracle = halfspace_volume(n, c);
        prop_assert!((vm - oracle).abs() <= 1e-9, "minus volume {} vs {}", vm, oracle);
    }
}

#[test]
fn sphere_area_and_patch_bounds() {
    let ls = sphere();
    for n in [20, 40] {
        let mesh = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), n).unwrap();
        let h = mesh.h();
        let cuts = classify_mesh(&ls, &mesh, &ClassifyOptions::default()).unwrap();
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for c in cuts.iter().filter(|c| c.is_interface()) {
            let a = surface_rule(c, &ls).unwrap().measure();
            total += a;
            worst = worst.max(a / (h * h));
            let d = geometric_diagnostics(c, &ls, 2).unwrap();
            assert!(d.patch_area <= 4.0 * h * h);
        }
        assert!(worst <= 4.0, "N={n}: largest patch {worst} h^2");
        if n == 40 {
            let exact = 4.0 * PI * (PI / 4.0) * (PI / 4.0);
            assert!(
                (total - exact).abs() / exact < 0.01,
                "area {total} vs {exact}"
            );
        }
    }
}

#[test]
fn interface_fraction_is_linear_in_h() {
    let ls = sphere();
    let mut scaled = Vec::new();
    for n in [20usize, 40, 80] {
        let mesh = Mesh::uniform(BoxDomain::cube(-1.0, 1.0).unwrap(), n).unwrap();
        let cuts = classify_mesh(&ls, &mesh, &ClassifyOptions::default()).unwrap();
        let frac = cuts.iter().filter(|c| c.is_interface()).count() as f64 / cuts.len() as f64;
        scaled.push(frac * n as f64);
    }
    // fraction * N is nearly constant
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 1.05, "{scaled:?}");
}
