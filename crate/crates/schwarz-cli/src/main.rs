//! `schwarz` — render, trace and verify Schwarz reflection systems from the
//! command line.
//!
//! Systems and families are TOML files (schemas `schwarz-system/1` and
//! `schwarz-family/1`); a run configuration file (`schwarz-run/1`) can carry
//! window, budget and tolerance settings, and every tolerance is also
//! reachable through a `--tol-*` flag. Exit codes: 0 success, 1 a check or
//! landing failed, 2 invalid input.

use clap::{Args, Parser, Subcommand};
use schwarz_core::angle::{Angle, MapSign};
use schwarz_core::config::Tolerances;
use schwarz_core::correspondence::{Correspondence, SheetPoint};
use schwarz_core::cx::Cx;
use schwarz_core::error::{Error, Result};
use schwarz_core::family::{build_system, BuiltSystem, FamilySpec, SystemSpec};
use schwarz_core::puzzles::{depth0_pieces, refine, PuzzleSpec};
use schwarz_core::rays::{
    dynamical_ray, enumerate_fixed_ray_laminations, gap_stats, SymbolSequence,
};
use schwarz_core::render::{render_dynamical, render_parameter, RenderConfig};
use schwarz_core::schwarz::SchwarzReflection;
use schwarz_core::verify::run_checks;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const RUN_SCHEMA: &str = "schwarz-run/1";

#[derive(Parser)]
#[command(
    name = "schwarz",
    version,
    about = "Escape-time renders, rays, laminations, puzzles and verification for Schwarz reflection systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render the dynamical plane of a system to PPM (and PNG when built in)
    RenderDyn(RenderDynArgs),
    /// Render the connectedness locus of a one-parameter family
    RenderParam(RenderParamArgs),
    /// Trace a dynamical ray by its symbol sequence and report its landing
    Ray(RayArgs),
    /// Enumerate fixed-ray laminations with their gap tables
    Lamination(LamArgs),
    /// Build and refine a combinatorial puzzle from cut angles
    Puzzles(PuzzleArgs),
    /// Iterate the lifted-correspondence branch and log the semiconjugacy residual
    CorrOrbit(OrbitArgs),
    /// Run the named residual check suites against a system file
    Verify(VerifyArgs),
}

/// Flags shared by every subcommand; values override the run configuration,
/// which overrides the system file.
#[derive(Args, Clone, Default)]
struct Common {
    /// Run-configuration file (TOML, schema schwarz-run/1)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output path (images derive .ppm/.png/.stats.json siblings from it)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker count for renders (0 = machine default)
    #[arg(long)]
    workers: Option<usize>,
    /// Orbit/refinement budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for sampled checks
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tol: TolArgs,
}

/// One flag per named tolerance.
#[derive(Args, Clone, Default)]
struct TolArgs {
    #[arg(long = "tol-root", value_name = "X", help = "Override root_tol")]
    root: Option<f64>,
    #[arg(long = "tol-root-cluster", value_name = "X", help = "Override root_cluster")]
    root_cluster: Option<f64>,
    #[arg(long = "tol-boundary-band", value_name = "X", help = "Override boundary_band")]
    boundary_band: Option<f64>,
    #[arg(long = "tol-singular-band", value_name = "X", help = "Override singular_band")]
    singular_band: Option<f64>,
    #[arg(long = "tol-interior-margin", value_name = "X", help = "Override interior_margin")]
    interior_margin: Option<f64>,
    #[arg(long = "tol-boundary-fix", value_name = "X", help = "Override boundary_fix_tol")]
    boundary_fix: Option<f64>,
    #[arg(long = "tol-involution", value_name = "X", help = "Override involution_tol")]
    involution: Option<f64>,
    #[arg(long = "tol-landing", value_name = "X", help = "Override landing_tol")]
    landing: Option<f64>,
    #[arg(long = "tol-cluster", value_name = "X", help = "Override cluster_tol")]
    cluster: Option<f64>,
    #[arg(long = "tol-semiconj", value_name = "X", help = "Override semiconj_tol")]
    semiconj: Option<f64>,
    #[arg(long = "tol-tau", value_name = "X", help = "Override tau_tol")]
    tau: Option<f64>,
    #[arg(long = "tol-branch-tie", value_name = "X", help = "Override branch_tie_tol")]
    branch_tie: Option<f64>,
    #[arg(long = "tol-touch", value_name = "X", help = "Override touch_tol")]
    touch: Option<f64>,
}

impl TolArgs {
    fn any(&self) -> bool {
        self.root.is_some()
            || self.root_cluster.is_some()
            || self.boundary_band.is_some()
            || self.singular_band.is_some()
            || self.interior_margin.is_some()
            || self.boundary_fix.is_some()
            || self.involution.is_some()
            || self.landing.is_some()
            || self.cluster.is_some()
            || self.semiconj.is_some()
            || self.tau.is_some()
            || self.branch_tie.is_some()
            || self.touch.is_some()
    }

    fn apply(&self, t: &mut Tolerances) {
        macro_rules! set {
            ($flag:expr, $field:ident) => {
                if let Some(x) = $flag {
                    t.$field = x;
                }
            };
        }
        set!(self.root, root_tol);
        set!(self.root_cluster, root_cluster);
        set!(self.boundary_band, boundary_band);
        set!(self.singular_band, singular_band);
        set!(self.interior_margin, interior_margin);
        set!(self.boundary_fix, boundary_fix_tol);
        set!(self.involution, involution_tol);
        set!(self.landing, landing_tol);
        set!(self.cluster, cluster_tol);
        set!(self.semiconj, semiconj_tol);
        set!(self.tau, tau_tol);
        set!(self.branch_tie, branch_tie_tol);
        set!(self.touch, touch_tol);
    }
}

/// One human-editable file per run; every named tolerance appears under
/// `[tolerances]` with its library default when omitted.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    schema: Option<String>,
    seed: Option<u64>,
    max_iter: Option<usize>,
    render: Option<RenderConfig>,
    tolerances: Option<Tolerances>,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let run: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("run config: {e}")))?;
        match run.schema.as_deref() {
            Some(RUN_SCHEMA) => Ok(run),
            other => Err(Error::InvalidConfig(format!(
                "run config schema {other:?} (expected {RUN_SCHEMA:?})"
            ))),
        }
    }
}

#[derive(Args)]
struct RenderDynArgs {
    /// System definition file (schwarz-system/1)
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Window center as "x,y"
    #[arg(long, value_name = "X,Y")]
    center: Option<String>,
    /// Window width
    #[arg(long)]
    width: Option<f64>,
    /// Resolution as "WxH"
    #[arg(long, value_name = "WxH")]
    res: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RenderParamArgs {
    /// Family file (schwarz-family/1) or a built-in name (deltoid, cardioid)
    #[arg(long, value_name = "FILE|NAME")]
    family: String,
    #[arg(long, value_name = "X,Y")]
    center: Option<String>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long, value_name = "WxH")]
    res: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RayArgs {
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Symbol sequence: "1,2" finite, "1,2|3,2" preperiodic, "|1,3" periodic
    #[arg(long, value_name = "SYMS")]
    symbols: String,
    /// Treat the symbols as one period (shorthand for a leading "|")
    #[arg(long)]
    period: bool,
    /// Lifting depth
    #[arg(long, default_value_t = 60)]
    depth: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LamArgs {
    #[command(subcommand)]
    cmd: LamCmd,
}

#[derive(Subcommand)]
enum LamCmd {
    /// List every lamination whose rays are all fixed, with gap tables
    Enumerate(LamEnumArgs),
}

#[derive(Args)]
struct LamEnumArgs {
    /// Map degree
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PuzzleArgs {
    /// Map degree
    #[arg(long)]
    d: usize,
    /// Cut classes: angles "p/q" joined by ",", classes joined by ";"
    #[arg(long, value_name = "CUTS")]
    cuts: String,
    /// Map sign: "anti" (default) or "holo"
    #[arg(long, default_value = "anti")]
    sign: String,
    /// Refinement depth
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Equipotential radius (> 1)
    #[arg(long)]
    equipotential: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Start point "x,y" in the closed unit disk of its sheet
    #[arg(long, value_name = "X,Y")]
    start: String,
    /// Sheet index (1-based)
    #[arg(long, default_value_t = 1)]
    sheet: usize,
    /// Branch iterations
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Comma-separated suite names (default: all)
    #[arg(long, value_name = "NAMES")]
    checks: Option<String>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::RenderDyn(a) => cmd_render_dyn(a),
        Cmd::RenderParam(a) => cmd_render_param(a),
        Cmd::Ray(a) => cmd_ray(a),
        Cmd::Lamination(a) => match a.cmd {
            LamCmd::Enumerate(e) => cmd_lamination(e),
        },
        Cmd::Puzzles(a) => cmd_puzzles(a),
        Cmd::CorrOrbit(a) => cmd_corr_orbit(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_pair(text: &str, what: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() == 2 {
        if let (Ok(x), Ok(y)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            return Ok([x, y]);
        }
    }
    Err(Error::InvalidConfig(format!(
        "{what} must be \"x,y\", got {text:?}"
    )))
}

fn parse_res(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    if parts.len() == 2 {
        if let (Ok(w), Ok(h)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            return Ok((w, h));
        }
    }
    Err(Error::InvalidConfig(format!(
        "resolution must be \"WxH\", got {text:?}"
    )))
}

/// Tolerance precedence: system/family file < run config < `--tol-*` flags.
fn effective_tols(
    file_tols: Option<Tolerances>,
    run: &RunConfig,
    flags: &TolArgs,
) -> Option<Tolerances> {
    if run.tolerances.is_none() && !flags.any() {
        return file_tols;
    }
    let mut t = run
        .tolerances
        .clone()
        .or(file_tols)
        .unwrap_or_default();
    flags.apply(&mut t);
    Some(t)
}

fn load_spec(path: &Path, run: &RunConfig, flags: &TolArgs) -> Result<SystemSpec> {
    let mut spec = SystemSpec::parse(&std::fs::read_to_string(path)?)?;
    spec.tolerances = effective_tols(spec.tolerances.take(), run, flags);
    Ok(spec)
}

fn load_built(path: &Path, run: &RunConfig, flags: &TolArgs) -> Result<BuiltSystem> {
    build_system(&load_spec(path, run, flags)?)
}

fn as_reflection(sys: &BuiltSystem) -> Result<&SchwarzReflection> {
    match sys {
        BuiltSystem::Reflection(s) => Ok(s),
        BuiltSystem::Involution(_) => Err(Error::InvalidConfig(
            "this command needs a reflection system".into(),
        )),
    }
}

fn render_config(
    run: &RunConfig,
    center: Option<&str>,
    width: Option<f64>,
    res: Option<&str>,
    common: &Common,
    fallback: RenderConfig,
) -> Result<RenderConfig> {
    let mut cfg = run.render.clone().unwrap_or(fallback);
    if let Some(c) = center {
        cfg.center = parse_pair(c, "center")?;
    }
    if let Some(w) = width {
        cfg.width = w;
    }
    if let Some(r) = res {
        let (w, h) = parse_res(r)?;
        cfg.width_px = w;
        cfg.height_px = h;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(m) = common.max_iter.or(run.max_iter) {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_images(
    base: &Path,
    img: &schwarz_core::render::Image,
    stats: &schwarz_core::render::RenderStats,
) -> Result<PathBuf> {
    let ppm = base.with_extension("ppm");
    img.write_ppm(&ppm)?;
    #[cfg(feature = "png")]
    img.write_png(&base.with_extension("png"))?;
    std::fs::write(base.with_extension("stats.json"), stats.to_json())?;
    Ok(ppm)
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn cmd_render_dyn(a: RenderDynArgs) -> Result<u8> {
    let run = RunConfig::load(a.common.config.as_deref())?;
    let sys = load_built(&a.system, &run, &a.common.tol)?;
    let cfg = render_config(
        &run,
        a.center.as_deref(),
        a.width,
        a.res.as_deref(),
        &a.common,
        RenderConfig::default(),
    )?;
    let (img, stats) = render_dynamical(&sys, &cfg)?;
    let base = a
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("dynamical.ppm"));
    let ppm = emit_images(&base, &img, &stats)?;
    println!(
        "wrote {} ({}x{}): escaping {} trapped {} undecided {} max rank {} undecided fraction {:.4}",
        ppm.display(),
        stats.width_px,
        stats.height_px,
        stats.escaping,
        stats.non_escaping,
        stats.undecided,
        stats.max_rank,
        stats.undecided_fraction
    );
    Ok(0)
}

fn cmd_render_param(a: RenderParamArgs) -> Result<u8> {
    let run = RunConfig::load(a.common.config.as_deref())?;
    let mut fam = match a.family.as_str() {
        name @ ("deltoid" | "cardioid") => FamilySpec::builtin(name)?,
        path => FamilySpec::load(Path::new(path))?,
    };
    fam.tolerances = effective_tols(fam.tolerances.take(), &run, &a.common.tol);
    // parameter sweeps rebuild a system per pixel, so the default raster is
    // smaller than the dynamical one
    let fallback = RenderConfig {
        center: fam.center,
        width: fam.width,
        width_px: 160,
        height_px: 160,
        max_iter: 64,
        workers: 0,
    };
    let cfg = render_config(
        &run,
        a.center.as_deref(),
        a.width,
        a.res.as_deref(),
        &a.common,
        fallback,
    )?;
    let (img, stats) = render_parameter(&fam, &cfg)?;
    let base = a
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("parameter.ppm"));
    let ppm = emit_images(&base, &img, &stats)?;
    println!(
        "wrote {} ({}x{}): disconnected {} connected {} undecided {} invalid {}",
        ppm.display(),
        stats.width_px,
        stats.height_px,
        stats.escaping,
        stats.non_escaping,
        stats.undecided,
        stats.invalid
    );
    Ok(0)
}

fn cmd_ray(a: RayArgs) -> Result<u8> {
    let run = RunConfig::load(a.common.config.as_deref())?;
    let sys = load_built(&a.system, &run, &a.common.tol)?;
    let s = as_reflection(&sys)?;
    let text = if a.period && !a.symbols.contains('|') {
        format!("|{}", a.symbols)
    } else {
        a.symbols.clone()
    };
    let seq = SymbolSequence::parse(&text)?;
    let trace = dynamical_ray(s, &seq, a.depth, None)?;
    let mut out = String::new();
    out.push_str("schwarz-ray/1\n");
    out.push_str(&format!(
        "system {} symbols {} depth {} angle {:.12}\n",
        a.system.display(),
        seq,
        a.depth,
        trace.angle
    ));
    for (k, p) in trace.points.iter().enumerate() {
        out.push_str(&format!("anchor {k} {}\n", fmt_point(*p)));
    }
    let code = match trace.landing {
        Some((x, res)) => {
            out.push_str(&format!("landing {} residual {res:.3e}\n", fmt_point(x)));
            let nearest = s
                .qmd()
                .singular_points()
                .iter()
                .map(|sp| (x.dist(Cx::from(sp.location)), sp.location))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((dist, loc)) = nearest {
                out.push_str(&format!(
                    "nearest-singular {dist:.3e} location {}\n",
                    fmt_point(Cx::from(loc))
                ));
            }
            0
        }
        None => {
            out.push_str(&format!(
                "unresolved: {}\n",
                trace.diagnostic.as_deref().unwrap_or("no landing")
            ));
            1
        }
    };
    emit_text(a.common.out.as_deref(), &out)?;
    Ok(code)
}

fn cmd_lamination(a: LamEnumArgs) -> Result<u8> {
    let lams = enumerate_fixed_ray_laminations(a.d)?;
    let mut out = String::new();
    out.push_str("schwarz-laminations/1\n");
    out.push_str(&format!("degree {}\n", a.d));
    for (i, lam) in lams.iter().enumerate() {
        let classes: Vec<String> = lam
            .classes
            .iter()
            .map(|c| {
                let angles: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                format!("{{{}}}", angles.join(" "))
            })
            .collect();
        out.push_str(&format!("lamination {i}: {}\n", classes.join(" ")));
        let stats = gap_stats(lam, a.d + 1)?;
        for (g, info) in stats.gaps.iter().enumerate() {
            out.push_str(&format!(
                "  gap {g}: degree {} = cusps {} + tangencies {}, arcs {:?}\n",
                info.degree, info.cusps, info.tangencies, info.arc_starts
            ));
        }
        out.push_str(&format!("  total degree {}\n", stats.total_degree()));
    }
    out.push_str(&format!("count {}\n", lams.len()));
    emit_text(a.common.out.as_deref(), &out)?;
    Ok(0)
}

fn parse_angle(text: &str) -> Result<Angle> {
    let parts: Vec<&str> = text.trim().split('/').collect();
    if parts.len() == 2 {
        if let (Ok(n), Ok(d)) = (parts[0].parse(), parts[1].parse()) {
            return Angle::new(n, d);
        }
    }
    Err(Error::InvalidAngle(format!(
        "angles are fractions \"p/q\", got {text:?}"
    )))
}

fn cmd_puzzles(a: PuzzleArgs) -> Result<u8> {
    let sign = match a.sign.as_str() {
        "anti" => MapSign::AntiHolomorphic,
        "holo" => MapSign::Holomorphic,
        other => {
            return Err(Error::InvalidConfig(format!(
                "sign must be \"anti\" or \"holo\", got {other:?}"
            )))
        }
    };
    let classes: Vec<Vec<Angle>> = a
        .cuts
        .split(';')
        .map(|class| class.split(',').map(parse_angle).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let spec = PuzzleSpec::new(a.d, sign, vec![classes], a.equipotential)?;
    let mut pieces = depth0_pieces(&spec, 0)?;
    let mut out = String::new();
    out.push_str("schwarz-puzzles/1\n");
    out.push_str(&format!(
        "degree {} sign {} equipotential {}\n",
        a.d,
        a.sign,
        spec.equipotential()
    ));
    out.push_str(&format!("depth 0: {} pieces\n", pieces.len()));
    for depth in 1..=a.depth {
        pieces = refine(&pieces, &spec)?;
        out.push_str(&format!("depth {depth}: {} pieces\n", pieces.len()));
    }
    for (i, p) in pieces.iter().enumerate() {
        let arcs: Vec<String> = p
            .arcs()
            .iter()
            .map(|(s, e)| format!("[{s}, {e})"))
            .collect();
        out.push_str(&format!("piece {i}: {}\n", arcs.join(" ")));
    }
    emit_text(a.common.out.as_deref(), &out)?;
    Ok(0)
}

fn cmd_corr_orbit(a: OrbitArgs) -> Result<u8> {
    let run = RunConfig::load(a.common.config.as_deref())?;
    let sys = load_built(&a.system, &run, &a.common.tol)?;
    let corr = match &sys {
        BuiltSystem::Reflection(s) => Correspondence::from_reflection(s.clone())?,
        BuiltSystem::Involution(b) => Correspondence::from_involution(b.clone())?,
    };
    let p = parse_pair(&a.start, "start")?;
    let max_iter = a.common.max_iter.or(run.max_iter).unwrap_or(200);
    let mut u = SheetPoint::new(Cx::new(p[0], p[1]), a.sheet);
    let mut base = corr.base_point(u)?;
    let mut out = String::new();
    out.push_str("schwarz-orbit/1\n");
    out.push_str(&format!(
        "system {} start {} sheet {} steps {}\n",
        a.system.display(),
        a.start,
        a.sheet,
        a.steps
    ));
    out.push_str("step sheet re im base_re base_im residual\n");
    out.push_str(&format!(
        "0 {} {} {} 0.000e0\n",
        u.sheet,
        fmt_point(u.z),
        fmt_point(base)
    ));
    let mut worst = 0.0f64;
    for k in 1..=a.steps {
        let pushed = sys.eval(base)?;
        u = corr.poly_branch(u, max_iter)?;
        base = corr.base_point(u)?;
        let res = base.dist(pushed);
        worst = worst.max(res);
        out.push_str(&format!(
            "{k} {} {} {} {res:.3e}\n",
            u.sheet,
            fmt_point(u.z),
            fmt_point(base)
        ));
    }
    out.push_str(&format!("max-residual {worst:.3e}\n"));
    emit_text(a.common.out.as_deref(), &out)?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let run = RunConfig::load(a.common.config.as_deref())?;
    let spec = load_spec(&a.system, &run, &a.common.tol)?;
    let selectors: Vec<String> = a
        .checks
        .map(|s| s.split(',').map(|c| c.trim().to_string()).collect())
        .unwrap_or_default();
    let max_iter = a.common.max_iter.or(run.max_iter).unwrap_or(200);
    let seed = a.common.seed.or(run.seed).unwrap_or(7);
    let report = run_checks(&spec, &selectors, max_iter, seed)?;
    let text = format!("{}\n", report.to_json());
    emit_text(a.common.out.as_deref(), &text)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn fmt_point(z: Cx) -> String {
    match z.try_fin() {
        Some(f) => format!("{:.15e} {:.15e}", f.re, f.im),
        None => "inf inf".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_resolutions_parse() {
        assert_eq!(parse_pair("1.5, -2", "center").unwrap(), [1.5, -2.0]);
        assert!(parse_pair("1.5", "center").is_err());
        assert_eq!(parse_res("640x480").unwrap(), (640, 480));
        assert!(parse_res("640").is_err());
        assert_eq!(parse_angle("2/3").unwrap(), Angle::new(2, 3).unwrap());
        assert!(parse_angle("x/3").is_err());
    }

    #[test]
    fn tol_flags_overlay_in_order() {
        let run = RunConfig {
            tolerances: Some(Tolerances {
                landing_tol: 1e-3,
                ..Tolerances::default()
            }),
            ..RunConfig::default()
        };
        let flags = TolArgs {
            tau: Some(1e-5),
            ..TolArgs::default()
        };
        let t = effective_tols(None, &run, &flags).unwrap();
        assert_eq!(t.landing_tol, 1e-3);
        assert_eq!(t.tau_tol, 1e-5);
        // no overrides anywhere: file tolerances pass through untouched
        assert!(effective_tols(None, &RunConfig::default(), &TolArgs::default()).is_none());
    }
}
