//! Command-line surface for the reconstruction pipeline: synthetic data
//! generation, Cauchy-data completion on the annulus, free-boundary shape
//! optimization, flux-constant recovery and mesh inspection.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use torevac::boundary_data::{
    build_cauchy_trace, check_physical_assumptions, load_measurements, save_measurements,
    BoundaryTag, Conductivity,
};
use torevac::fem::NeumannConvention;
use torevac::geometry::ClosedCurve;
use torevac::hardy_bep::{
    cross_validate, solve_bep, AnnulusGeometry, BepConfig, BepSolution, BoundaryArc,
    BoundaryPartition, DEFAULT_MAX_PANEL,
};
use torevac::mesh::{generate_mesh, load_mesh, save_mesh, LoopTag};
use torevac::report::{
    render_svg, save_bep_report, save_curve, save_history, save_laurent, save_scalar_field,
    save_svg, BepReportRow, SvgCurveStyle,
};
use torevac::shape_opt::{
    optimize, recover_constant_c, Criterion, OptimizationConfig, StopReason,
};
use torevac::synth::{synthesize, SynthConfig, WallData};

use torevac_cli::config::Config;
use torevac_cli::CliError;

#[derive(Parser)]
#[command(
    name = "torevac",
    about = "Cauchy-data completion and plasma-boundary recovery on an annular section"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// override synth.seed
    #[arg(long)]
    seed: Option<u64>,
    /// override paths.out
    #[arg(long)]
    out: Option<PathBuf>,
    /// override any config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic wall measurements from a known inner boundary
    Synth(CommonArgs),
    /// Complete the Cauchy data from a wall arc to the inner circle
    Bep(CommonArgs),
    /// Recover the free boundary by shape-gradient descent
    Optimize(CommonArgs),
    /// Recover the flux constant by continuation against the limiter
    RecoverC(CommonArgs),
    /// Generate or load a mesh and print its quality report
    MeshInfo(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => with_config(args, cmd_synth),
        Command::Bep(args) => with_config(args, cmd_bep),
        Command::Optimize(args) => with_config(args, cmd_optimize),
        Command::RecoverC(args) => with_config(args, cmd_recover_c),
        Command::MeshInfo(args) => with_config(args, cmd_mesh_info),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("torevac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn with_config(
    args: &CommonArgs,
    run: fn(&Config) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut cfg = Config::load(&args.config)?;
    cfg.apply_set_flags(&args.set)?;
    if let Some(seed) = args.seed {
        cfg.set("synth.seed", &seed.to_string())?;
    }
    if let Some(out) = &args.out {
        cfg.set("paths.out", &out.display().to_string())?;
    }
    std::fs::create_dir_all(cfg.out_dir())
        .map_err(|e| CliError::Io(format!("cannot create output directory: {e}")))?;
    run(&cfg)
}

fn opt_config(cfg: &Config) -> Result<OptimizationConfig, CliError> {
    let mut oc =
        OptimizationConfig::new(cfg.f64_or("mesh.h", 0.03)?, cfg.f64_or("opt.c", 0.0)?);
    oc.criterion = match cfg.get("opt.criterion").unwrap_or("dirichlet") {
        "dirichlet" => Criterion::DirichletMisfit,
        "neumann" => Criterion::NeumannMisfit,
        other => {
            return Err(CliError::Config(format!(
                "opt.criterion: expected dirichlet|neumann, got '{other}'"
            )))
        }
    };
    oc.epsilon_stop_rel = cfg.f64_or("opt.eps_rel", 1e-8)?;
    oc.max_iters = cfg.usize_or("opt.max_iters", 200)?;
    oc.t0 = cfg.f64_or("opt.t0", 0.5)?;
    oc.beta = cfg.f64_or("opt.beta", 0.5)?;
    oc.smooth_every = cfg.usize_or("opt.smooth_every", 10)?;
    oc.remesh_min_angle_deg = cfg.f64_or("opt.remesh_min_angle", 10.0)?;
    oc.remesh_edge_ratio = cfg.f64_or("opt.remesh_edge_ratio", 10.0)?;
    oc.neumann_convention = match cfg.get("neumann.convention").unwrap_or("sigma") {
        "sigma" => NeumannConvention::SigmaWeighted,
        "plain" => NeumannConvention::Plain,
        other => {
            return Err(CliError::Config(format!(
                "neumann.convention: expected sigma|plain, got '{other}'"
            )))
        }
    };
    if !(oc.beta > 0.0 && oc.beta < 1.0) {
        return Err(CliError::Config(format!(
            "opt.beta must lie in (0,1), got {}",
            oc.beta
        )));
    }
    Ok(oc)
}

fn default_initial_spec(cfg: &Config) -> Result<String, CliError> {
    Ok(format!("circle:{}", 0.5 * cfg.wall()?.radius))
}

fn load_samples(cfg: &Config) -> Result<torevac::boundary_data::BoundarySamples, CliError> {
    let wall = cfg.wall()?;
    let path = cfg.path("paths.measurements")?;
    Ok(load_measurements(&path, wall.center, wall.radius)?)
}

fn cmd_synth(cfg: &Config) -> Result<(), CliError> {
    let wall = cfg.wall()?;
    let sigma = cfg.sigma()?;
    let truth = cfg.curve("synth.truth", Some("circle:0.5"))?;
    let u0 = parse_wall_data(cfg.get("synth.u0").unwrap_or("const:-2.0"))?;
    let synth_cfg = SynthConfig {
        wall,
        truth,
        u0,
        c: cfg.f64_or("synth.c", 0.0)?,
        mesh_h: cfg.f64_or("mesh.h", 0.03)?,
        n_samples: cfg.usize_or("synth.samples", 256)?,
        noise_rel: cfg.f64_or("synth.noise", 0.0)?,
        seed: cfg.u64_or("synth.seed", 0)?,
    };
    let out = synthesize(&sigma, &synth_cfg)?;
    let dir = cfg.out_dir();
    save_measurements(&dir.join("measurements.csv"), &out.samples)?;
    save_curve(&dir.join("truth_curve.csv"), &out.truth)?;
    let meta = format!(
        "c_true = {}\nsamples = {}\nnoise = {}\nseed = {}\n",
        out.c, synth_cfg.n_samples, synth_cfg.noise_rel, synth_cfg.seed
    );
    std::fs::write(dir.join("truth_meta.txt"), meta)
        .map_err(|e| CliError::Io(format!("cannot write truth_meta.txt: {e}")))?;
    let report = check_physical_assumptions(&out.samples, out.c);
    println!(
        "synth: wrote {} samples to {} (physical assumptions hold: {})",
        out.samples.len(),
        dir.join("measurements.csv").display(),
        report.holds()
    );
    Ok(())
}

fn parse_wall_data(spec: &str) -> Result<WallData, CliError> {
    if let Some(v) = spec.strip_prefix("const:") {
        let value: f64 = v
            .parse()
            .map_err(|_| CliError::Config(format!("synth.u0: bad constant '{v}'")))?;
        return Ok(WallData::Constant(value));
    }
    if let Some(rest) = spec.strip_prefix("quad:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 5 {
            return Err(CliError::Config(format!(
                "synth.u0: expected quad:<cxx>:<cyy>:<cx>:<cy>:<c0>, got '{spec}'"
            )));
        }
        let mut vals = [0.0; 5];
        for (slot, raw) in vals.iter_mut().zip(&parts) {
            *slot = raw
                .parse()
                .map_err(|_| CliError::Config(format!("synth.u0: bad number '{raw}'")))?;
        }
        return Ok(WallData::Quadratic {
            cxx: vals[0],
            cyy: vals[1],
            cx: vals[2],
            cy: vals[3],
            c0: vals[4],
        });
    }
    Err(CliError::Config(format!(
        "synth.u0: expected const:<v> or quad:<...>, got '{spec}'"
    )))
}

fn parse_arc(cfg: &Config, key: &str) -> Result<BoundaryArc, CliError> {
    let spec = cfg
        .get(key)
        .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))?;
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("{key}: expected '<start>:<end>' radians")))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: bad start '{a}'")))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: bad end '{b}'")))?;
    BoundaryArc::new(BoundaryTag::Outer, a, b)
        .map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn cmd_bep(cfg: &Config) -> Result<(), CliError> {
    let wall = cfg.wall()?;
    let samples = load_samples(cfg)?;
    let rho_inner = cfg.f64_or("geometry.rho_inner", 0.72)?;
    let geometry = AnnulusGeometry::new(wall.center, rho_inner, wall.radius)?;
    let degree = cfg.usize_or("bep.degree", 8)?;
    let n_points = cfg.usize_or("bep.points", 256)?;
    let quad_points = cfg.usize_or("bep.quad_points", 1024)?;

    // the completion works in the harmonic frame: the conjugate trace is
    // built with unit conductivity whatever the field model uses
    let unit = Conductivity::constant(1.0);
    let u0s = samples.u0_spline()?;
    let u1s = samples.u1_spline()?;
    let (trace, flux) = build_cauchy_trace(&u0s, &u1s, &unit, wall, n_points, quad_points)?;
    let log_coeff = flux / TAU;
    let bep_cfg = BepConfig::new(degree).with_log_coeff(log_coeff);

    let i1 = parse_arc(cfg, "bep.i1")?;
    let phi = |_: BoundaryTag, _: f64| 0.0;
    let bound_spec = cfg.get("bep.bound").unwrap_or("cross");
    let (solution, bound, note): (BepSolution, f64, String) = if bound_spec == "cross" {
        let i2 = parse_arc(cfg, "bep.i2")?;
        if i2.length() <= 1e-12 {
            return Err(CliError::Config("bep.i2 is empty".into()));
        }
        let cv = cross_validate(
            geometry,
            &trace,
            &[i1],
            &[i2],
            &phi,
            &bep_cfg,
            DEFAULT_MAX_PANEL,
        )?;
        let note = format!(
            "cross-validated bound M2 = {:.6e} (validation misfit {:.6e}{})",
            cv.m2,
            cv.validation_misfit,
            if cv.flat_curve { ", flat curve" } else { "" }
        );
        (cv.solution, cv.m2, note)
    } else {
        let bound: f64 = bound_spec.parse().map_err(|_| {
            CliError::Config(format!(
                "bep.bound: expected 'cross' or a number, got '{bound_spec}'"
            ))
        })?;
        let partition = BoundaryPartition::complement(geometry, vec![i1], DEFAULT_MAX_PANEL)?;
        let solution = solve_bep(&partition, &trace, &phi, bound, &bep_cfg)?;
        (solution, bound, format!("fixed bound M = {bound:.6e}"))
    };

    let dir = cfg.out_dir();
    save_laurent(&dir.join("laurent_model.csv"), &solution.model)?;
    save_bep_report(
        &dir.join("bep_report.csv"),
        &[BepReportRow {
            degree,
            lambda: solution.lambda,
            error_i: solution.error_i,
            constraint_j: solution.constraint_j,
            bound,
        }],
    )?;
    // predicted trace on the inner circle, re-ingestable as measurements;
    // the u1 column holds the radial derivative ∂u/∂ρ so the file can act
    // as wall data for a smaller domain
    let theta: Vec<f64> = (0..n_points).map(|k| TAU * k as f64 / n_points as f64).collect();
    let u_pred: Vec<f64> = theta
        .iter()
        .map(|t| solution.model.trace_at(BoundaryTag::Inner, *t).re)
        .collect();
    let dudr: Vec<f64> = theta
        .iter()
        .map(|t| solution.model.radial_derivative(BoundaryTag::Inner, *t))
        .collect();
    let inner = torevac::boundary_data::BoundarySamples::new(
        theta, u_pred, dudr, wall.center, rho_inner,
    )?;
    save_measurements(&dir.join("inner_trace.csv"), &inner)?;
    println!(
        "bep: {note}; λ = {:.6e}, error_I = {:.6e}, constraint_J = {:.6e}, circulation flux = {:.6e}",
        solution.lambda, solution.error_i, solution.constraint_j, flux
    );
    println!(
        "bep: wrote {} and {}",
        dir.join("laurent_model.csv").display(),
        dir.join("inner_trace.csv").display()
    );
    Ok(())
}

fn cmd_optimize(cfg: &Config) -> Result<(), CliError> {
    let samples = load_samples(cfg)?;
    let sigma = cfg.sigma()?;
    let oc = opt_config(cfg)?;
    let initial_spec = default_initial_spec(cfg)?;
    let initial = cfg.curve("opt.initial", Some(&initial_spec))?;
    let out = optimize(&samples, &sigma, &oc, &initial)?;

    let dir = cfg.out_dir();
    save_history(&dir.join("history.csv"), &out.history)?;
    save_curve(&dir.join("gamma_p_initial.csv"), &initial)?;
    save_curve(&dir.join("gamma_p_final.csv"), &out.gamma_p)?;
    let snap_every = cfg.usize_or("opt.snapshot_every", 0)?;
    if snap_every > 0 {
        for r in &out.history.records {
            if r.iter % snap_every == 0 {
                save_curve(
                    &dir.join(format!("gamma_p_iter_{:04}.csv", r.iter)),
                    &r.gamma_p,
                )?;
            }
        }
    }
    save_mesh(&dir.join("final.mesh"), &out.mesh)?;
    save_scalar_field(&dir.join("state.csv"), &out.state.values)?;

    let wall_curve = ClosedCurve::circle(cfg.wall()?, 256)?;
    let limiter = match cfg.get("limiter") {
        Some(_) => Some(cfg.curve("limiter", None)?),
        None => None,
    };
    let mut layers = vec![(&wall_curve, SvgCurveStyle::solid("black", 0.004))];
    if let Some(lim) = &limiter {
        layers.push((lim, SvgCurveStyle::solid("black", 0.009)));
    }
    layers.push((&out.gamma_p, SvgCurveStyle::solid("crimson", 0.004)));
    save_svg(&dir.join("figure.svg"), &render_svg(&layers))?;

    let first = out.history.records.first().map(|r| r.j).unwrap_or(f64::NAN);
    println!(
        "optimize: {} iterations, stop = {:?}, J {:.6e} → {:.6e}",
        out.history.records.len() - 1,
        out.stop,
        first,
        out.j
    );
    if out.stop == StopReason::Stagnated && out.history.records.len() == 1 {
        return Err(CliError::Numeric(
            "descent stagnated before the first step".into(),
        ));
    }
    Ok(())
}

fn cmd_recover_c(cfg: &Config) -> Result<(), CliError> {
    let samples = load_samples(cfg)?;
    let sigma = cfg.sigma()?;
    let oc = opt_config(cfg)?;
    let limiter = cfg.curve("limiter", None)?;
    let c1 = cfg
        .get("recover.c1")
        .ok_or_else(|| CliError::Config("missing required key 'recover.c1'".into()))?
        .parse::<f64>()
        .map_err(|_| CliError::Config("recover.c1: cannot parse number".into()))?;
    let initial_spec = default_initial_spec(cfg)?;
    let initial = cfg.curve("opt.initial", Some(&initial_spec))?;
    let rec = recover_constant_c(&samples, &sigma, &limiter, c1, &oc, &initial)?;

    let dir = cfg.out_dir();
    save_history(&dir.join("history.csv"), &rec.outcome.history)?;
    save_curve(&dir.join("recovered_boundary.csv"), &rec.gamma_p)?;
    save_curve(&dir.join("continuation_boundary.csv"), &rec.outcome.gamma_p)?;
    let wall_curve = ClosedCurve::circle(cfg.wall()?, 256)?;
    let svg = render_svg(&[
        (&wall_curve, SvgCurveStyle::solid("black", 0.004)),
        (&limiter, SvgCurveStyle::solid("black", 0.009)),
        (
            &rec.outcome.gamma_p,
            SvgCurveStyle::solid("seagreen", 0.004),
        ),
        (&rec.gamma_p, SvgCurveStyle::dashed("crimson", 0.004)),
    ]);
    save_svg(&dir.join("figure.svg"), &svg)?;
    println!(
        "recover-c: c_est = {:.6}, contact at ({:.4}, {:.4}), gap to boundary {:.2e}, inside limiter: {}",
        rec.c_est, rec.contact.x, rec.contact.y, rec.contact_gap, rec.inside_limiter
    );
    Ok(())
}

fn cmd_mesh_info(cfg: &Config) -> Result<(), CliError> {
    let mesh = match cfg.get("mesh.file") {
        Some(path) => load_mesh(std::path::Path::new(path))?,
        None => {
            let wall = cfg.wall()?;
            let initial_spec = default_initial_spec(cfg)?;
            let inner = cfg.curve("opt.initial", Some(&initial_spec))?;
            let mesh = generate_mesh(wall, &inner, cfg.f64_or("mesh.h", 0.03)?)?;
            let out = cfg.out_dir().join("mesh.mesh");
            save_mesh(&out, &mesh)?;
            println!("mesh-info: wrote {}", out.display());
            mesh
        }
    };
    mesh.validate()?;
    let q = mesh.quality();
    let wall_len = mesh.boundary_loop(LoopTag::GammaE)?.len();
    let free_len = mesh.boundary_loop(LoopTag::GammaP)?.len();
    println!(
        "mesh-info: {} nodes, {} triangles, Γ_E loop {} nodes, Γ_P loop {} nodes",
        mesh.n_nodes(),
        mesh.n_triangles(),
        wall_len,
        free_len
    );
    println!(
        "mesh-info: min angle {:.2}°, worst triangle {}, edge range [{:.5}, {:.5}] (ratio {:.2})",
        q.min_angle_deg,
        q.worst_triangle,
        q.min_edge,
        q.max_edge,
        q.edge_ratio()
    );
    Ok(())
}
