mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use holeq_core::envelope::{decompose, envelope_csv};
use holeq_core::equilibrium::{envelope_map, fixed_point_envelope, minimize_frank_wolfe, Problem, Status, F_TOL};
use holeq_core::montecarlo::{check_feasible, domain_predicate, run_hole_experiment, HoleSetup};
use holeq_core::radial_oracle::{annulus_solve, disk_radial_solve, tangency_root, torus_strip_solve, PLOT_RANGE};
use holeq_core::report::{equilibrium_table, summarize, zero_sets_csv};
use holeq_core::surface::{build_grid, Ext};
use holeq_core::validation::{all_passed, run_suite, CriterionResult, Verdict};
use holeq_core::{DomainSpec, Error, SolverKind, SurfaceModel};
use serde::Serialize;
use sha2::{Digest, Sha256};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "holeq", version, about = "Equilibrium measures of holes on the sphere and the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve for the equilibrium measure of the configured hole.
    Equilibrium,
    /// Apply the envelope map once to ω restricted to the complement.
    Envelope,
    /// Closed-form radial solution for disks, annuli and torus strips.
    Oracle,
    /// Rejection sampling of the hole event for random polynomials.
    Montecarlo,
    /// Run the validation suite.
    Validate,
    /// Kernel symmetry, zero mean, commutation and convexity checks.
    GreenSelftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Equilibrium => "equilibrium",
            Command::Envelope => "envelope",
            Command::Oracle => "oracle",
            Command::Montecarlo => "montecarlo",
            Command::Validate => "validate",
            Command::GreenSelftest => "green-selftest",
        }
    }
}

/// Process outcome; the numeric value is the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Ok = 0,
    Invalid = 1,
    Structure = 2,
    Stalled = 3,
    Infeasible = 4,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'static str,
    config_sha256: &'a str,
    config: &'a RunConfig,
    result: T,
}

struct Run {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    command: Command,
}

impl Run {
    fn write_report<T: Serialize>(&self, result: T) -> anyhow::Result<()> {
        let env = Envelope {
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.name(),
            config_sha256: &self.hash,
            config: &self.cfg,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        write(&self.out.join("report.json"), &text)
    }

    fn write_in(&self, dir: &str, name: &str, text: &str) -> anyhow::Result<()> {
        write(&self.out.join(dir).join(name), text)
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match setup(&cli) {
        Ok(run) => match dispatch(&run) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e:#}");
                classify(&e)
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            Outcome::Invalid
        }
    };
    ExitCode::from(code as u8)
}

fn classify(e: &anyhow::Error) -> Outcome {
    match e.downcast_ref::<Error>() {
        Some(Error::StructureViolation(_)) => Outcome::Structure,
        Some(Error::Infeasible(_)) => Outcome::Infeasible,
        _ => Outcome::Invalid,
    }
}

fn setup(cli: &Cli) -> anyhow::Result<Run> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let cfg = RunConfig::parse(&text).context("invalid configuration")?;
    let threads = cli.threads.unwrap_or(cfg.threads);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("starting worker pool")?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok(Run { hash: hex(&Sha256::digest(text.as_bytes())), cfg, out, command: cli.command })
}

fn dispatch(run: &Run) -> anyhow::Result<Outcome> {
    match run.command {
        Command::Equilibrium => cmd_equilibrium(run),
        Command::Envelope => cmd_envelope(run),
        Command::Oracle => cmd_oracle(run),
        Command::Montecarlo => cmd_montecarlo(run),
        Command::Validate => cmd_validate(run, run.cfg.validation()),
        Command::GreenSelftest => {
            let mut opts = run.cfg.validation();
            opts.only = vec![11];
            cmd_validate(run, opts)
        }
    }
}

fn problem(cfg: &RunConfig) -> anyhow::Result<Problem> {
    Ok(Problem::new(cfg.model, cfg.resolution, cfg.domain.clone(), cfg.solver.torus_terms)?)
}

fn cmd_equilibrium(run: &Run) -> anyhow::Result<Outcome> {
    let cfg = &run.cfg;
    let p = problem(cfg)?;
    let r = match SolverKind::from(cfg.solver.kind) {
        SolverKind::FixedPoint => fixed_point_envelope(&p, None, &cfg.solver.fixed_point(&p.grid))?,
        SolverKind::FrankWolfe => minimize_frank_wolfe(&p, cfg.solver.fw_iters, None)?,
    };
    let summary = summarize(&p.grid, &cfg.domain, &r);
    run.write_report(&summary)?;
    run.write_in("fields", "equilibrium.csv", &equilibrium_table(&p.grid, &r))?;
    let d = &r.decomposition;
    eprintln!(
        "energy {:.6}  bD {:.4}  S {:.4}  forbidden {:.4}  status {:?}",
        r.energy.value, d.mass_bd, d.mass_s, d.mass_forbidden, r.status
    );
    if r.status == Status::Stalled {
        eprintln!("solver stalled after {} outer steps; partial report written", r.iterations);
        return Ok(Outcome::Stalled);
    }
    let nonempty = !p.masks.is_empty();
    if nonempty && (d.forbidden_nodes == 0 || d.mass_bd <= 0.0) {
        eprintln!("structure violation: a nonempty hole needs charged boundary and a nonempty forbidden set");
        return Ok(Outcome::Structure);
    }
    if !d.forbidden_ok {
        eprintln!("structure violation: forbidden mass {:.3e} exceeds {:.1e}", d.mass_forbidden, d.f_tol);
        return Ok(Outcome::Structure);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct EnvelopeSummary {
    domain: DomainSpec,
    resolution: usize,
    converged: bool,
    residual: f64,
    sweeps: usize,
    renormalization: f64,
    clipped_mass: f64,
    masses: holeq_core::report::Masses,
}

fn cmd_envelope(run: &Run) -> anyhow::Result<Outcome> {
    let cfg = &run.cfg;
    let p = problem(cfg)?;
    let mu = p.default_init()?;
    let env = envelope_map(&p, &mu, &cfg.solver.envelope())?;
    let d = decompose(&p.grid, &p.masks, &env.field.values, &env.measure, None, F_TOL)?;
    run.write_report(EnvelopeSummary {
        domain: cfg.domain.clone(),
        resolution: cfg.resolution,
        converged: env.converged,
        residual: env.residual,
        sweeps: env.sweeps,
        renormalization: env.renormalization,
        clipped_mass: env.clipped_mass,
        masses: (&d).into(),
    })?;
    run.write_in("fields", "envelope.csv", &envelope_csv(&env.field.values, &env.measure, &d.parts))?;
    Ok(if env.converged { Outcome::Ok } else { Outcome::Stalled })
}

fn cmd_oracle(run: &Run) -> anyhow::Result<Outcome> {
    let cfg = &run.cfg;
    let (profile, lo, hi) = match (cfg.model, &cfg.domain) {
        (SurfaceModel::Sphere, DomainSpec::Disk { r }) => (disk_radial_solve(*r)?, -PLOT_RANGE, PLOT_RANGE),
        (SurfaceModel::Sphere, DomainSpec::Annulus { r1, r2 }) => (annulus_solve(*r1, *r2)?, -PLOT_RANGE, PLOT_RANGE),
        (SurfaceModel::Torus, DomainSpec::TorusStrip { r }) => (torus_strip_solve(*r, std::f64::consts::PI)?, 0.0, 1.0),
        (m, d) => {
            return Err(
                Error::InvalidDomain(format!("no closed-form solution for {} on the {}", d.label(), m.name())).into()
            )
        }
    };
    run.write_report(&profile)?;
    run.write_in("profiles", "oracle.csv", &profile.csv(lo, hi, 2001))?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Feasibility<'a> {
    min_energy: f64,
    degrees: &'a [usize],
    budget: u64,
    message: String,
}

fn cmd_montecarlo(run: &Run) -> anyhow::Result<Outcome> {
    let cfg = &run.cfg;
    let mc = &cfg.montecarlo;
    if cfg.model != SurfaceModel::Sphere {
        return Err(Error::InvalidArgument("sampling is implemented on the sphere only".into()).into());
    }
    let inside = domain_predicate(&cfg.domain)?;
    let (grid, min_energy) = if cfg.domain.is_empty() {
        (build_grid(cfg.model, cfg.resolution)?, 0.0)
    } else {
        let p = problem(cfg)?;
        let r = fixed_point_envelope(&p, None, &cfg.solver.fixed_point(&p.grid))?;
        (p.grid, r.energy.value)
    };
    if let Err(e @ Error::Infeasible(_)) = check_feasible(min_energy, &mc.degrees, mc.budget) {
        eprintln!("{e}");
        run.write_report(Feasibility { min_energy, degrees: &mc.degrees, budget: mc.budget, message: e.to_string() })?;
        return Ok(Outcome::Infeasible);
    }
    let band = match cfg.domain {
        DomainSpec::Disk { r } => Some((r, tangency_root(r)?)),
        _ => None,
    };
    let forbidden = move |z: Ext| band.is_some_and(|(r, t)| z.abs() > r && z.abs() < t);
    let setup = HoleSetup {
        label: cfg.domain.label(),
        inside: &inside,
        forbidden: band.map(|_| &forbidden as &(dyn Fn(Ext) -> bool + Sync)),
        degrees: mc.degrees.clone(),
        budget: mc.budget,
        seed: mc.seed,
        grid: &grid,
        keep: mc.keep,
    };
    let exp = run_hole_experiment(&setup)?;
    for s in &exp.per_degree {
        eprintln!("degree {:>3}: accepted {}/{} p = {:.4e}", s.degree, s.accepted, s.trials, s.p_hat);
        if mc.keep > 0 {
            run.write_in("fields", &format!("zeros_n{}.csv", s.degree), &zero_sets_csv(s.degree, &s.kept))?;
        }
    }
    #[derive(Serialize)]
    struct McReport<'a> {
        min_energy: f64,
        experiment: &'a holeq_core::montecarlo::HoleExperiment,
    }
    run.write_report(McReport { min_energy, experiment: &exp })?;
    Ok(Outcome::Ok)
}

/// Criterion result without the wall-clock time, so reports are reproducible.
#[derive(Serialize)]
struct Row<'a> {
    id: u8,
    title: &'a str,
    verdict: Verdict,
    checks: &'a [holeq_core::validation::Check],
    note: &'a Option<String>,
}

fn cmd_validate(run: &Run, opts: holeq_core::validation::ValidationOptions) -> anyhow::Result<Outcome> {
    let results: Vec<CriterionResult> = run_suite(&opts, |r| eprintln!("{}", r.line()))?;
    let rows: Vec<Row> = results
        .iter()
        .map(|r| Row { id: r.id, title: &r.title, verdict: r.verdict, checks: &r.checks, note: &r.note })
        .collect();
    let passed = all_passed(&results);
    #[derive(Serialize)]
    struct Table<'a> {
        passed: bool,
        criteria: Vec<Row<'a>>,
    }
    run.write_report(Table { passed, criteria: rows })?;
    Ok(if passed { Outcome::Ok } else { Outcome::Structure })
}
