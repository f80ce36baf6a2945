//! Convergence sweeps: build, assemble, solve and measure errors over a list
//! of mesh sizes.

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{apply_dirichlet, assemble, QuadratureMode, SchemeParams};
use crate::error::{Error, Result};
use crate::error_analysis::{
    convergence_rates, inequality_probe, norm_errors, sample_interface_elements, ConvergenceRates,
    ErrorReport, FineReference, ProbeKind,
};
use crate::geometry::{classify_mesh, ClassifyOptions, CutKind, ElementCut};
use crate::ife::{Betas, IfeSpace};
use crate::levelset::LevelSet;
use crate::mesh::Mesh;
use crate::pointcloud::PointCloud;
use crate::problems::{self, Problem};
use crate::solver::{solve, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub epsilon: f64,
    pub sigma0: f64,
    pub quadrature: QuadratureMode,
    pub solver: SolverOptions,
    pub classify: ClassifyOptions,
    /// Record wall-clock times; off by default so that output is reproducible.
    pub timings: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            epsilon: -1.0,
            sigma0: 10.0,
            quadrature: QuadratureMode::PlaneCut,
            solver: SolverOptions::default(),
            classify: ClassifyOptions::default(),
            timings: false,
        }
    }
}

impl RunSettings {
    pub fn scheme(&self, problem: &Problem) -> Result<SchemeParams> {
        Ok(SchemeParams::new(self.epsilon, self.sigma0, problem.betas)?
            .with_quadrature(self.quadrature))
    }
}

/// Element counts by cut type.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceStats {
    pub n: usize,
    pub h: f64,
    pub elements: usize,
    pub interface_elements: usize,
    /// `interface_elements / elements`, in `[0, 1]`.
    pub interface_fraction: f64,
    /// Indexed like `CutKind::ALL`.
    pub by_kind: [usize; 7],
}

pub fn report_interface_stats(mesh: &Mesh, cuts: &[ElementCut]) -> InterfaceStats {
    let mut by_kind = [0usize; 7];
    for c in cuts {
        let k = CutKind::ALL.iter().position(|&k| k == c.kind).unwrap_or(0);
        by_kind[k] += 1;
    }
    let interface_elements = cuts.iter().filter(|c| c.is_interface()).count();
    InterfaceStats {
        n: mesh.counts()[0],
        h: mesh.h(),
        elements: cuts.len(),
        interface_elements,
        interface_fraction: interface_elements as f64 / cuts.len().max(1) as f64,
        by_kind,
    }
}

/// Discrete solution on one mesh.
pub struct Solution {
    pub space: IfeSpace,
    pub level_set: Arc<dyn LevelSet>,
    pub coeffs: Vec<f64>,
    pub params: SchemeParams,
    pub iterations: usize,
    pub relative_residual: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
}

pub fn solve_on_mesh(problem: &Problem, n: usize, settings: &RunSettings) -> Result<Solution> {
    let mesh = Mesh::uniform(problem.domain, n)?;
    let ls = problem.interface.level_set(&mesh)?;
    let params = settings.scheme(problem)?;
    let t0 = Instant::now();
    let space = IfeSpace::build(mesh, ls.as_ref(), problem.betas, &settings.classify)?;
    let source = problem.source.clone();
    let boundary = problem.boundary.clone();
    let system = assemble(&space, ls.as_ref(), &params, &|x, s| source(x, s), &|x| {
        boundary(x)
    })?;
    let reduced = apply_dirichlet(&system);
    let assembly_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let outcome = solve(
        &reduced.matrix,
        &reduced.rhs,
        params.is_symmetric(),
        &settings.solver,
    )?;
    let solve_s = t1.elapsed().as_secs_f64();
    log::info!(
        "N = {n}: {} unknowns, {} interface elements, {} iterations",
        reduced.free.len(),
        space.num_interface_elements(),
        outcome.iterations
    );
    Ok(Solution {
        coeffs: reduced.expand(&outcome.x),
        space,
        level_set: ls,
        params,
        iterations: outcome.iterations,
        relative_residual: outcome.relative_residual,
        assembly_s: if settings.timings { assembly_s } else { 0.0 },
        solve_s: if settings.timings { solve_s } else { 0.0 },
    })
}

/// One row of the error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub report: ErrorReport,
    pub assembly_s: f64,
    pub solve_s: f64,
    /// Interface elements in percent of all elements.
    pub interface_element_pct: f64,
}

pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub stats: Vec<InterfaceStats>,
    /// Solution on the finest mesh.
    pub finest: Solution,
    /// Fitted slopes, when there are at least two rows.
    pub rates: Option<ConvergenceRates>,
    /// Errors were measured against the finest-mesh solution.
    pub reference_mode: bool,
}

fn check_sizes(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::invalid("empty list of mesh sizes"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::invalid(format!(
            "mesh sizes must be positive and strictly increasing: {ns:?}"
        )));
    }
    Ok(())
}

fn row(sol: &Solution, report: ErrorReport) -> SweepRow {
    SweepRow {
        report,
        assembly_s: sol.assembly_s,
        solve_s: sol.solve_s,
        interface_element_pct: 100.0 * sol.space.num_interface_elements() as f64
            / sol.space.mesh.num_elements() as f64,
    }
}

/// Solves on every mesh size. With an exact solution, errors are measured
/// against it; otherwise the finest solution is the reference and only the
/// coarser meshes get a row.
pub fn run_sweep(problem: &Problem, ns: &[usize], settings: &RunSettings) -> Result<SweepResult> {
    check_sizes(ns)?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let reference_mode = problem.exact.is_none();
    if reference_mode && ns.len() < 2 {
        return Err(Error::invalid(
            "without an exact solution at least two mesh sizes are needed (the finest is the reference)",
        ));
    }
    let finest = if let Some(exact) = &problem.exact {
        let mut last = None;
        for &n in ns {
            let sol = solve_on_mesh(problem, n, settings)?;
            let report = norm_errors(
                &sol.space,
                &sol.coeffs,
                sol.level_set.as_ref(),
                &|x, s| exact(x, s),
                Some(&sol.params),
                settings.quadrature,
            )?;
            stats.push(report_interface_stats(&sol.space.mesh, &sol.space.cuts));
            rows.push(row(&sol, report));
            last = Some(sol);
        }
        last.expect("non-empty sizes")
    } else {
        let (&n_fine, coarse) = ns.split_last().expect("non-empty sizes");
        let fine = solve_on_mesh(problem, n_fine, settings)?;
        let reference = FineReference {
            space: &fine.space,
            coeffs: &fine.coeffs,
        };
        for &n in coarse {
            let sol = solve_on_mesh(problem, n, settings)?;
            let report = norm_errors(
                &sol.space,
                &sol.coeffs,
                sol.level_set.as_ref(),
                &|x, s| reference.eval(x, s),
                Some(&sol.params),
                settings.quadrature,
            )?;
            stats.push(report_interface_stats(&sol.space.mesh, &sol.space.cuts));
            rows.push(row(&sol, report));
        }
        stats.push(report_interface_stats(&fine.space.mesh, &fine.space.cuts));
        fine
    };
    let reports: Vec<ErrorReport> = rows.iter().map(|r| r.report).collect();
    let rates = if reports.len() >= 2 {
        Some(convergence_rates(&reports)?)
    } else {
        None
    };
    Ok(SweepResult {
        rows,
        stats,
        finest,
        rates,
        reference_mode,
    })
}

/// A paper experiment with its default mesh sizes and settings.
pub struct ExampleSetup {
    pub problem: Problem,
    pub sizes: Vec<usize>,
    pub settings: RunSettings,
}

/// Penalty scale of the orthocircle example; see the README.
pub const EXAMPLE3_SIGMA0: f64 = 0.03;

/// Solver tolerance for the plane example.
pub const EXAMPLE1_TOL: f64 = 1e-13;

/// Example `id` in 1..=4. `betas` replaces the example's coefficients;
/// example 4 needs a point cloud.
pub fn example_setup(
    id: u8,
    betas: Option<Betas>,
    cloud: Option<PointCloud>,
) -> Result<ExampleSetup> {
    let mut settings = RunSettings::default();
    let (problem, sizes) = match id {
        1 => {
            // the exact solution lies in the IFE space, so only solver error remains
            settings.solver.tol = EXAMPLE1_TOL;
            (
                problems::example1(betas.unwrap_or(Betas {
                    minus: 1.0,
                    plus: 10.0,
                }))?,
                vec![10, 20],
            )
        }
        2 => (
            problems::example2(betas.unwrap_or_else(problems::example2_betas))?,
            vec![10, 20, 40],
        ),
        3 => {
            settings.sigma0 = EXAMPLE3_SIGMA0;
            settings.classify.strict = false;
            (
                problems::example3(betas.unwrap_or_else(problems::example3_betas))?,
                vec![20, 40, 60],
            )
        }
        4 => {
            let cloud = cloud.ok_or_else(|| {
                Error::invalid("example 4 needs a point cloud: pass --cloud <file> or --synthetic")
            })?;
            settings.classify.strict = false;
            (
                problems::example4(
                    cloud,
                    problems::example4_domain(),
                    betas.unwrap_or_else(problems::example4_betas),
                )?,
                vec![10, 20, 40],
            )
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown example {id} (expected 1 to 4)"
            )))
        }
    };
    Ok(ExampleSetup {
        problem,
        sizes,
        settings,
    })
}

/// Interface statistics per mesh size, without solving.
pub fn interface_stats(
    problem: &Problem,
    ns: &[usize],
    classify: &ClassifyOptions,
) -> Result<Vec<InterfaceStats>> {
    check_sizes(ns)?;
    ns.iter()
        .map(|&n| {
            let mesh = Mesh::uniform(problem.domain, n)?;
            let ls = problem.interface.level_set(&mesh)?;
            let cuts = classify_mesh(ls.as_ref(), &mesh, classify)?;
            Ok(report_interface_stats(&mesh, &cuts))
        })
        .collect()
}

/// Largest normalized trace, inverse and interface-jump ratios on one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub h: f64,
    pub elements: usize,
    pub trace: f64,
    pub inverse: f64,
    pub interface_jump: f64,
}

/// Probes up to `elements` sampled interface elements per mesh with `samples`
/// random IFE functions each.
pub fn probe_table(
    problem: &Problem,
    ns: &[usize],
    classify: &ClassifyOptions,
    elements: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    check_sizes(ns)?;
    ns.iter()
        .map(|&n| {
            let mesh = Mesh::uniform(problem.domain, n)?;
            let ls = problem.interface.level_set(&mesh)?;
            let space = IfeSpace::build(mesh, ls.as_ref(), problem.betas, classify)?;
            let picked = sample_interface_elements(&space, elements, seed);
            let probe = |k| inequality_probe(&space, ls.as_ref(), &picked, k, samples, seed);
            Ok(ProbeRow {
                n,
                h: space.mesh.h(),
                elements: picked.len(),
                trace: probe(ProbeKind::Trace)?,
                inverse: probe(ProbeKind::Inverse)?,
                interface_jump: probe(ProbeKind::InterfaceJump)?,
            })
        })
        .collect()
}
