use ppife_core::assembly::{apply_dirichlet, assemble, snap_tolerance, QuadratureMode};
use ppife_core::geometry::Side;
use ppife_core::ife::{interpolate, Betas, IfeSpace};
use ppife_core::problems::{example1, example2, example2_betas, Problem};
use ppife_core::runner::{run_sweep, RunSettings};
use ppife_core::Point;

#[test]
fn plane_exact_solution_satisfies_the_system() {
    let p = example1(Betas::new(1.0, 10.0).unwrap()).unwrap();
    let settings = RunSettings::default();
    let mesh = ppife_core::mesh::Mesh::uniform(p.domain, 8).unwrap();
    let ls = p.interface.level_set(&mesh).unwrap();
    let space = IfeSpace::build(mesh, ls.as_ref(), p.betas, &settings.classify).unwrap();
    let params = settings.scheme(&p).unwrap();
    let (src, bnd) = (p.source.clone(), p.boundary.clone());
    let sys = assemble(
        &space,
        ls.as_ref(),
        &params,
        &move |x: &Point, s: Side| src(x, s),
        &move |x: &Point| bnd(x),
    )
    .unwrap();
    let exact = p.exact.clone().unwrap();
    let u = interpolate(
        &space.mesh,
        ls.as_ref(),
        snap_tolerance(&space),
        |x| exact(x, Side::Minus).0,
        |x| exact(x, Side::Plus).0,
    );
    let red = apply_dirichlet(&sys);
    let x = red.restrict(&u);
    let ax = red.matrix.mul_vec(&x);
    let res = ax
        .iter()
        .zip(&red.rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(res <= 1e-10, "residual {res:e}");
}

fn sphere_errors(problem: &Problem, settings: &RunSettings, sizes: &[usize]) -> Vec<(f64, f64)> {
    run_sweep(problem, sizes, settings)
        .unwrap()
        .rows
        .iter()
        .map(|r| (r.report.e_0, r.report.e_1))
        .collect()
}

#[test]
fn sphere_error_ratios_and_magnitude() {
    let p = example2(example2_betas()).unwrap();
    let e = sphere_errors(&p, &RunSettings::default(), &[20, 40]);
    let (r0, r1) = (e[0].0 / e[1].0, e[0].1 / e[1].1);
    assert!((3.4..=4.7).contains(&r0), "L2 ratio {r0}");
    assert!((1.8..=2.2).contains(&r1), "H1 ratio {r1}");
    // reference fit 9.093 h^2.004 with h = 1/N
    let fit = 9.093 * (1.0f64 / 20.0).powf(2.004);
    assert!(
        e[0].0 / fit > 0.5 && e[0].0 / fit < 2.0,
        "e_0 {} vs {}",
        e[0].0,
        fit
    );
}

#[test]
fn scheme_variants_converge() {
    let p = example2(example2_betas()).unwrap();
    for (epsilon, quadrature) in [
        (1.0, QuadratureMode::PlaneCut),
        (0.0, QuadratureMode::PlaneCut),
        (-1.0, QuadratureMode::LevelsetSign),
    ] {
        let settings = RunSettings {
            epsilon,
            quadrature,
            ..RunSettings::default()
        };
        let e = sphere_errors(&p, &settings, &[10, 20]);
        let r0 = e[0].0 / e[1].0;
        assert!(r0 > 3.0, "epsilon {epsilon}, {quadrature:?}: L2 ratio {r0}");
    }
}
