use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ppife_core::assembly::QuadratureMode;
use ppife_core::config::RunConfig;
use ppife_core::error_analysis::ConvergenceRates;
use ppife_core::export::{write_probes_csv, write_run_outputs, write_stats_file, ProbeRecord};
use ppife_core::ife::Betas;
use ppife_core::pointcloud::load_cloud;
use ppife_core::problems::{example4_synthetic_cloud, Problem};
use ppife_core::runner::{
    example_setup, interface_stats, probe_table, run_sweep, RunSettings, SweepResult,
};

/// Trilinear partially penalized IFE solver for 3D elliptic interface problems.
#[derive(Parser)]
#[command(name = "ppife", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the four built-in experiments.
    Example {
        /// Example number (1 plane, 2 sphere, 3 orthocircle, 4 point cloud).
        id: u8,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run a problem described by a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Interface element statistics (and optionally inequality probes) for an
    /// example, without solving.
    Stats {
        id: u8,
        #[command(flatten)]
        opts: Overrides,
        /// Also run the trace, inverse and interface-jump probes (probes.csv).
        #[arg(long)]
        probes: bool,
        /// Random IFE functions per probed element.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Interface elements probed per mesh.
        #[arg(long, default_value_t = 200)]
        probe_elements: usize,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// Mesh sizes, comma separated (N cuboids per axis).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Symmetrization parameter: -1, 0 or 1.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Penalty scale; the face penalty is sigma0 (beta+)^2 / beta-.
    #[arg(long)]
    sigma0: Option<f64>,
    /// Coefficient inside the interface.
    #[arg(long)]
    beta_minus: Option<f64>,
    /// Coefficient outside the interface.
    #[arg(long)]
    beta_plus: Option<f64>,
    /// Relative residual tolerance of the linear solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Point cloud file (x y z per line) for example 4.
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Use a synthetic sphere cloud for example 4.
    #[arg(long)]
    synthetic: bool,
    /// Seed for sampling probed elements and random IFE functions.
    #[arg(long)]
    seed: Option<u64>,
    /// plane-cut or levelset-sign.
    #[arg(long)]
    quadrature: Option<QuadratureMode>,
    /// Worker threads (default: all cores, or RAYON_NUM_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock times in errors.csv.
    #[arg(long)]
    timings: bool,
}

impl Overrides {
    fn betas(&self, default: Betas) -> Result<Option<Betas>> {
        if self.beta_minus.is_none() && self.beta_plus.is_none() {
            return Ok(None);
        }
        let b = Betas::new(
            self.beta_minus.unwrap_or(default.minus),
            self.beta_plus.unwrap_or(default.plus),
        )
        .context("invalid --beta-minus/--beta-plus")?;
        Ok(Some(b))
    }

    fn apply(&self, s: &mut RunSettings) {
        if let Some(e) = self.eps {
            s.epsilon = e;
        }
        if let Some(v) = self.sigma0 {
            s.sigma0 = v;
        }
        if let Some(t) = self.tol {
            s.solver.tol = t;
        }
        if let Some(q) = self.quadrature {
            s.quadrature = q;
        }
        s.timings |= self.timings;
    }
}

fn setup(id: u8, opts: &Overrides) -> Result<(Problem, Vec<usize>, RunSettings)> {
    let cloud = match (&opts.cloud, opts.synthetic) {
        (Some(_), true) => bail!("--cloud and --synthetic are mutually exclusive"),
        (Some(p), false) => {
            Some(load_cloud(p).with_context(|| format!("reading --cloud {}", p.display()))?)
        }
        (None, true) => Some(example4_synthetic_cloud(5000)?),
        (None, false) => None,
    };
    if id != 4 && cloud.is_some() {
        bail!("--cloud/--synthetic only apply to example 4");
    }
    // coefficients are overridden relative to the example's own defaults
    let defaults = match id {
        1 => Betas {
            minus: 1.0,
            plus: 10.0,
        },
        2 => ppife_core::problems::example2_betas(),
        3 => ppife_core::problems::example3_betas(),
        _ => ppife_core::problems::example4_betas(),
    };
    let mut ex = example_setup(id, opts.betas(defaults)?, cloud)?;
    opts.apply(&mut ex.settings);
    let sizes = opts.n.clone().unwrap_or(ex.sizes);
    Ok((ex.problem, sizes, ex.settings))
}

fn print_summary(result: &SweepResult) {
    println!(
        "{:>5} {:>10} {:>12} {:>12} {:>12} {:>12} {:>8}",
        "N", "h", "e_inf", "e_0", "e_1", "e_energy", "iface%"
    );
    for r in &result.rows {
        let e = r.report;
        println!(
            "{:>5} {:>10.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12} {:>8.3}",
            e.n,
            e.h,
            e.e_inf,
            e.e_0,
            e.e_1,
            e.e_energy
                .map(|v| format!("{v:.4e}"))
                .unwrap_or_else(|| "-".into()),
            r.interface_element_pct
        );
    }
    if result.reference_mode {
        println!(
            "errors measured against the N = {} solution",
            result.finest.space.mesh.counts()[0]
        );
    }
    if let Some(ConvergenceRates {
        e_inf,
        e_0,
        e_1,
        e_energy,
    }) = result.rates
    {
        println!(
            "rates: e_inf ~ {:.3} h^{:.3}, e_0 ~ {:.3} h^{:.3}, e_1 ~ {:.3} h^{:.3}",
            e_inf.coefficient, e_inf.slope, e_0.coefficient, e_0.slope, e_1.coefficient, e_1.slope
        );
        if let Some(en) = e_energy {
            println!("       energy ~ {:.3} h^{:.3}", en.coefficient, en.slope);
        }
    }
}

fn solve_and_write(
    problem: &Problem,
    sizes: &[usize],
    settings: &RunSettings,
    out: &Path,
) -> Result<()> {
    let result = run_sweep(problem, sizes, settings)?;
    write_run_outputs(out, &result, problem)
        .with_context(|| format!("writing to {}", out.display()))?;
    print_summary(&result);
    println!(
        "wrote errors.csv, stats.csv, tau.obj and solution.vtk to {}",
        out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Example { opts, .. } | Command::Run { opts, .. } | Command::Stats { opts, .. } => {
            opts.threads
        }
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring --threads")?;
    }
    match cli.command {
        Command::Example { id, opts } => {
            let (problem, sizes, settings) = setup(id, &opts)?;
            let out = opts
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("out/example{id}")));
            solve_and_write(&problem, &sizes, &settings, &out)
        }
        Command::Run { config, opts } => {
            if opts.cloud.is_some() || opts.synthetic {
                bail!(
                    "--cloud/--synthetic do not apply to `run`; set interface.path in the config"
                );
            }
            let cfg = RunConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let base = config.parent().unwrap_or(Path::new("."));
            let mut run = cfg.resolve(base)?;
            if let Some(b) = opts.betas(run.problem.betas)? {
                bail!(
                    "set coefficients in the config file (got --beta-minus {} --beta-plus {})",
                    b.minus,
                    b.plus
                );
            }
            opts.apply(&mut run.settings);
            let sizes = opts.n.clone().unwrap_or(run.sizes);
            let out = opts.out.clone().unwrap_or_else(|| base.join(&run.output));
            solve_and_write(&run.problem, &sizes, &run.settings, &out)
        }
        Command::Stats {
            id,
            opts,
            probes,
            samples,
            probe_elements,
        } => {
            let (problem, sizes, settings) = setup(id, &opts)?;
            let out = opts
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("out/example{id}")));
            let stats = interface_stats(&problem, &sizes, &settings.classify)?;
            write_stats_file(&out, &stats)?;
            println!(
                "{:>5} {:>10} {:>10} {:>10}",
                "N", "elements", "interface", "fraction"
            );
            for s in &stats {
                println!(
                    "{:>5} {:>10} {:>10} {:>10.5}",
                    s.n, s.elements, s.interface_elements, s.interface_fraction
                );
            }
            if probes {
                let rows = probe_table(
                    &problem,
                    &sizes,
                    &settings.classify,
                    probe_elements,
                    samples,
                    opts.seed.unwrap_or(0),
                )?;
                let recs: Vec<ProbeRecord> = rows.iter().map(ProbeRecord::from).collect();
                let f = std::fs::File::create(out.join("probes.csv"))?;
                write_probes_csv(std::io::BufWriter::new(f), &recs)?;
                for r in &rows {
                    println!(
                        "N = {}: trace {:.4}, inverse {:.4}, interface jump {:.4}",
                        r.n, r.trace, r.inverse, r.interface_jump
                    );
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
