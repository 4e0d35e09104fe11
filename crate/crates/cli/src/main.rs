//! `jm`: solve families, render basins, glue charts, realize matings, run
//! the curve harness and the property suites.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use jmate::boettcher::BoettcherChart;
use jmate::config::Config;
use jmate::curves::{eventual_periodicity_bound, random_nonperipheral_curves, run_lemma_harness};
use jmate::gluing::{build_gluing, verify_gluing, verify_model, TopologicalMatingModel};
use jmate::portrait::portrait_of;
use jmate::render::{attracting_cycles, render, Raster, Viewport};
use jmate::verify::{self, basin_histogram, mating_viewport, CurveSetting, Realized, SuiteOptions};
use jmate::{Point, RationalMap};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jm", version, about = "Matings of post-critically finite maps")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Configuration file, or the name of a built-in configuration
    /// (f, g, fixed, z2z2, z2f, fg).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the Newton tolerance of the configuration.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (JM_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the family of the `map` section.
    Solve,
    /// Render the basins of the configured map or realized mating.
    Render,
    /// Glue the boundaries of the two marked basins of the `mate` section.
    Glue,
    /// Realize the mating of the `mate` section.
    Mate,
    /// Run the curve harness on the realized mating.
    Curves,
    /// Run the property suites.
    Verify {
        /// Run every suite.
        #[arg(long)]
        all: bool,
        /// Run only the given suites (1–8).
        #[arg(long = "check", value_name = "N")]
        checks: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("jm: property checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("jm: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("JM_THREADS") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("JM_THREADS={v:?} is not a thread count"))?)),
        Err(_) => Ok(flag),
    }
}

fn load_config(g: &Global) -> Result<Config> {
    let name = g.config.as_deref().ok_or_else(|| anyhow!("--config is required for this command"))?;
    let path = Path::new(name);
    let mut cfg = if path.exists() {
        Config::load(path).with_context(|| format!("reading {name}"))?
    } else {
        Config::builtin(name)?
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = threads(cli.global.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let g = &cli.global;
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    match &cli.command {
        Command::Solve => solve(g),
        Command::Render => render_cmd(g),
        Command::Glue => glue(g),
        Command::Mate => mate(g),
        Command::Curves => curves(g),
        Command::Verify { all, checks } => verify_cmd(g, *all, checks),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(&out.join(name), text.as_bytes())
}

fn write_image(out: &Path, stem: &str, raster: &Raster, png: bool) -> Result<()> {
    write(&out.join(format!("{stem}.ppm")), &raster.ppm_bytes())?;
    if png {
        let p = out.join(format!("{stem}.png"));
        raster.write_png(&p)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config: &'a str,
    map: &'a RationalMap,
    center: jmate::C64,
    selected: Option<&'a jmate::portrait::FamilySolution>,
    solutions: &'a [jmate::portrait::FamilySolution],
}

fn solve(g: &Global) -> Result<bool> {
    let cfg = load_config(g)?;
    let source = cfg.map.as_ref().ok_or_else(|| anyhow!("config {} has no map section", cfg.name))?;
    let m = source.resolve(cfg.seed, cfg.tol)?;
    for s in &m.all_solutions {
        println!("params {:?}  residual {:.3e}", s.params, s.residual);
    }
    write_json(
        &g.out,
        "solve.json",
        &SolveReport { config: &cfg.name, map: &m.map, center: m.center, selected: m.solution.as_ref(), solutions: &m.all_solutions },
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct RenderReport {
    config: String,
    map: RationalMap,
    viewport: Viewport,
    max_iter: usize,
    cycles: Vec<Vec<Point>>,
    basin_pixels: Vec<usize>,
    julia_pixels: usize,
}

fn render_cmd(g: &Global) -> Result<bool> {
    let cfg = load_config(g)?;
    let px = cfg.render.pixels;
    let (map, viewport) = if let Some(source) = &cfg.map {
        let m = source.resolve(cfg.seed, cfg.tol)?;
        let vp = match &cfg.viewport {
            Some(v) => v.viewport()?,
            None => {
                let nodes: Vec<Point> = portrait_of(&m.map, 64, 1e-7)?.nodes.iter().filter_map(|n| n.point).collect();
                Viewport::covering(&nodes, px)
            }
        };
        (m.map, vp)
    } else {
        let r = Realized::from_config(&cfg)?;
        let m = r.mating()?;
        let vp = match &cfg.viewport {
            Some(v) => v.viewport()?,
            None => mating_viewport(m, px),
        };
        (m.map.clone(), vp)
    };
    let cycles = attracting_cycles(&map, &portrait_of(&map, 64, 1e-7)?);
    let raster = render(&map, &cycles, &viewport, cfg.render.max_iter);
    let (basin_pixels, julia_pixels) = basin_histogram(&raster, cycles.len());
    write_image(&g.out, "render", &raster, cfg.render.png)?;
    write_json(
        &g.out,
        "render.json",
        &RenderReport { config: cfg.name.clone(), map, viewport, max_iter: cfg.render.max_iter, cycles, basin_pixels, julia_pixels },
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct GlueReport {
    config: String,
    gluing: jmate::gluing::GluingReport,
    model: jmate::gluing::ModelReport,
}

fn glue(g: &Global) -> Result<bool> {
    let cfg = load_config(g)?;
    let (f, gm, spec) = cfg.mating()?;
    let cf = BoettcherChart::new(&f.map, f.center, f.d0)?;
    let cg = BoettcherChart::new(&gm.map, gm.center, gm.d0)?;
    let gl = build_gluing(&cf, &cg, spec.k, cfg.gluing.samples, cfg.gluing.epsilon)?;
    let report = verify_gluing(&gl, verify::EQUIVARIANCE_TOL);
    write(&g.out.join("gluing.csv"), gl.to_csv().as_bytes())?;
    let model = TopologicalMatingModel::new(gl, cfg.gluing.collar)?;
    let model = verify_model(&model, cfg.gluing.model_samples, cfg.gluing.epsilon)?;
    let ok = report.passed && model.circle_angle_error < verify::MODEL_TOL && model.continuity_defect < verify::MODEL_TOL;
    println!(
        "winding {}  monotone {}  equivariance {:.3e}  model angle {:.3e}  continuity {:.3e}",
        report.winding, report.monotone_decreasing, report.equivariance_defect, model.circle_angle_error, model.continuity_defect
    );
    write_json(&g.out, "gluing.json", &GlueReport { config: cfg.name.clone(), gluing: report, model })?;
    Ok(ok)
}

#[derive(Serialize)]
struct MateReport<'a> {
    config: &'a str,
    outcome: &'a jmate::realizer::RealizationOutcome,
    selected: Option<usize>,
    verification: Option<jmate::realizer::VerificationReport>,
}

fn mate(g: &Global) -> Result<bool> {
    let cfg = load_config(g)?;
    let r = Realized::from_config(&cfg)?;
    let selected = r.outcome.solutions.iter().position(|s| s.is_mating());
    let verification = match r.mating() {
        Ok(m) => {
            println!("R = {:?} / {:?}  residual {:.3e}", m.map.num, m.map.den, m.max_residual);
            Some(r.verify(100, 200, cfg.seed)?)
        }
        Err(e) => {
            eprintln!("jm: {e}");
            None
        }
    };
    let ok = verification.as_ref().is_some_and(|v| v.passed);
    write_json(&g.out, "mate.json", &MateReport { config: &cfg.name, outcome: &r.outcome, selected, verification })?;
    if let Ok(iface) = r.interface(cfg.curves.interface_samples) {
        let mut csv = String::from("x,y\n");
        for z in &iface.points {
            csv.push_str(&format!("{:.17e},{:.17e}\n", z.re, z.im));
        }
        write(&g.out.join("interface.csv"), csv.as_bytes())?;
    }
    Ok(ok)
}

fn curves(g: &Global) -> Result<bool> {
    let cfg = load_config(g)?;
    let r = Realized::from_config(&cfg)?;
    let s = CurveSetting::new(&r, cfg.curves.interface_samples)?;
    let list = random_nonperipheral_curves(&s.map, &s.circle, &s.marked, cfg.curves.count, cfg.seed, cfg.curves.vertices);
    if list.len() < cfg.curves.count {
        bail!("only {} of {} random non-peripheral curves found", list.len(), cfg.curves.count);
    }
    let depth = cfg.curves.pullbacks.unwrap_or_else(|| eventual_periodicity_bound(&s.marked));
    let report = run_lemma_harness(&s.map, &s.circle, &s.marked, &list, depth);
    let mut csv = String::from("curve,vertex,x,y\n");
    for (i, c) in list.iter().enumerate() {
        for (j, z) in c.vertices.iter().enumerate() {
            csv.push_str(&format!("{i},{j},{:.17e},{:.17e}\n", z.re, z.im));
        }
    }
    write(&g.out.join("curves.csv"), csv.as_bytes())?;
    println!(
        "{} curves  o-o rows {} (equalities {}, violations {})  ess violations {}  errors {}",
        report.curves.len(),
        report.oo_rows,
        report.oo_equalities,
        report.oo_violations,
        report.ess_violations,
        report.errors
    );
    write_json(&g.out, "curves.json", &serde_json::json!({ "config": cfg.name, "marked": s.marked, "harness": report }))?;
    Ok(report.passed)
}

fn verify_cmd(g: &Global, all: bool, checks: &[usize]) -> Result<bool> {
    if !all && checks.is_empty() {
        bail!("verify needs --all or at least one --check N");
    }
    if let Some(bad) = checks.iter().find(|&&c| !(1..=8).contains(&c)) {
        bail!("no suite numbered {bad} (expected 1–8)");
    }
    let opts = SuiteOptions { seed: g.seed.unwrap_or(0), ..SuiteOptions::default() };
    let wanted = |i: usize| all || checks.contains(&i);
    let gl = jmate::config::GluingConfig::default();
    let mut reports = Vec::new();
    for id in 1..=8 {
        if !wanted(id) {
            continue;
        }
        let rep = match id {
            1 => verify::check_degrees(&opts),
            2 => verify::check_trivial_mating(&opts),
            3 => verify::check_families(&opts),
            4 => verify::check_boettcher(&opts),
            5 => verify::check_gluing(&opts, gl.samples, gl.epsilon),
            6 => verify::check_model(&opts, gl.collar, gl.epsilon),
            7 => {
                let (rep, raster) = verify::realized_fg(&opts).map_err(|e| anyhow!("suite 7: {e}"))?;
                write_image(&g.out, "verify_fg", &raster, false)?;
                rep
            }
            _ => verify::check_curves(&opts),
        };
        println!("[{}] {} {}", if rep.passed { "PASS" } else { "FAIL" }, rep.id, rep.name);
        reports.push(rep);
    }
    let passed = reports.iter().all(|r| r.passed);
    write_json(&g.out, "verify.json", &verify::SuiteReport { options: opts, checks: reports, passed })?;
    Ok(passed)
}
