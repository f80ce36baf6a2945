use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppife_core::assembly::{snap_tolerance, QuadratureMode};
use ppife_core::error_analysis::norm_errors;
use ppife_core::geometry::{classify_element, ClassifyOptions, Side};
use ppife_core::ife::{
    build_ife_basis, extension_apply, extension_invert, interpolate, Betas, IfeSpace, JumpPlane,
};
use ppife_core::levelset::PlaneLevelSet;
use ppife_core::mesh::{BoxDomain, Mesh, VERTEX_OFFSETS};
use ppife_core::poly::Q1Poly;
use ppife_core::problems::{example1, example2, example2_betas};
use ppife_core::Point;

fn unit_vector() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("not too short", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| Point::new(x, y, z).normalize())
}

fn point_in(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Point::new(x, y, z))
}

fn poly() -> impl Strategy<Value = Q1Poly> {
    prop::array::uniform8(-1.0..1.0f64).prop_map(Q1Poly::new)
}

fn beta() -> impl Strategy<Value = f64> {
    (-1.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

fn vertex_local(v: usize) -> Point {
    let o = VERTEX_OFFSETS[v];
    Point::new(o[0] as f64, o[1] as f64, o[2] as f64)
}

proptest! {
    #[test]
    fn extension_round_trips(p in poly(), n in unit_vector(), f in point_in(0.0, 1.0), bm in beta(), bp in beta()) {
        let plane = JumpPlane::new(f, n).unwrap();
        let c = extension_apply(&p, &plane, bm, bp).unwrap();
        let back = extension_invert(&c, &plane, bm, bp).unwrap();
        prop_assert!((back - p).max_abs_coeff() <= 1e-12 * (1.0 + c.max_abs_coeff()));
    }

    #[test]
    fn extension_satisfies_jump_conditions(
        p in poly(), n in unit_vector(), f in point_in(0.0, 1.0), bm in beta(), bp in beta(),
        s in -1.0..1.0f64, t in -1.0..1.0f64,
    ) {
        let plane = JumpPlane::new(f, n).unwrap();
        let c = extension_apply(&p, &plane, bm, bp).unwrap();
        prop_assert_eq!(c.d(), p.d());
        // continuity anywhere on the plane
        let u = n.cross(&Point::new(0.3, -0.7, 0.2)).normalize();
        let v = n.cross(&u);
        let x = f + s * u + t * v;
        prop_assert!((c.eval(&x) - p.eval(&x)).abs() <= 1e-12 * (1.0 + c.max_abs_coeff()));
        // flux continuity at the plane point
        let jump = bm * p.grad(&f).dot(&n) - bp * c.grad(&f).dot(&n);
        prop_assert!(jump.abs() <= 1e-12 * bm.max(bp) * (1.0 + p.grad(&f).norm()));
    }

    #[test]
    fn lagrange_basis_on_random_cuts(n in unit_vector(), f in point_in(0.05, 0.95), bm in beta(), bp in beta()) {
        let mesh = Mesh::uniform(BoxDomain::cube(0.0, 1.0).unwrap(), 1).unwrap();
        let ls = PlaneLevelSet::new(n, n.dot(&f));
        let cut = classify_element(&ls, &mesh, 0, 1e-12).unwrap();
        prop_assume!(cut.is_interface());
        let b = build_ife_basis(&cut, Betas::new(bm, bp).unwrap()).unwrap();
        prop_assume!(b.condition < 1e8);
        // roundoff of the 8x8 solve grows with its condition number
        let slack = 64.0 * f64::EPSILON * b.condition;
        for j in 0..8 {
            for i in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = b.polys(b.vertex_sides[j])[i].eval(&vertex_local(j));
                prop_assert!((got - want).abs() <= 1e-11f64.max(slack), "phi_{} at A_{}: {}", i, j, got);
            }
        }
        let x = Point::new(0.3, 0.6, 0.2);
        for side in [Side::Minus, Side::Plus] {
            let s: f64 = b.polys(side).iter().map(|p| p.eval(&x)).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12f64.max(slack), "sum {}", s);
        }
        for i in 0..8 {
            prop_assert_eq!(b.minus[i].d(), b.plus[i].d());
        }
    }
}

#[test]
fn plane_solution_lies_in_the_ife_space() {
    let p = example1(Betas::new(1.0, 10.0).unwrap()).unwrap();
    let mesh = Mesh::uniform(p.domain, 6).unwrap();
    let ls = p.interface.level_set(&mesh).unwrap();
    let space = IfeSpace::build(mesh, ls.as_ref(), p.betas, &ClassifyOptions::default()).unwrap();
    let exact = p.exact.clone().unwrap();
    let snap = snap_tolerance(&space);
    let coeffs = interpolate(
        &space.mesh,
        ls.as_ref(),
        snap,
        |x| exact(x, Side::Minus).0,
        |x| exact(x, Side::Plus).0,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = Point::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let side = Side::of(ls.value(&x), 0.0);
        let got = space.eval(&coeffs, &x).unwrap();
        worst = worst.max((got - exact(&x, side).0).abs());
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn sphere_interpolation_is_second_order() {
    let p = example2(example2_betas()).unwrap();
    let exact = p.exact.clone().unwrap();
    let err = |n: usize| {
        let mesh = Mesh::uniform(p.domain, n).unwrap();
        let ls = p.interface.level_set(&mesh).unwrap();
        let space =
            IfeSpace::build(mesh, ls.as_ref(), p.betas, &ClassifyOptions::default()).unwrap();
        let coeffs = interpolate(
            &space.mesh,
            ls.as_ref(),
            snap_tolerance(&space),
            |x| exact(x, Side::Minus).0,
            |x| exact(x, Side::Plus).0,
        );
        let reference = |x: &Point, s: Side| exact(x, s);
        norm_errors(
            &space,
            &coeffs,
            ls.as_ref(),
            &reference,
            None,
            QuadratureMode::PlaneCut,
        )
        .unwrap()
    };
    let (coarse, fine) = (err(20), err(40));
    let r0 = coarse.e_0 / fine.e_0;
    let r1 = coarse.e_1 / fine.e_1;
    assert!((3.4..=4.7).contains(&r0), "L2 ratio {r0}");
    assert!((1.8..=2.2).contains(&r1), "H1 ratio {r1}");
}
