//! The `band` command line: `solve`, `check`, `reconstruct` and `report`.
//!
//! Every command writes into one output directory and returns a stable exit
//! code (see [`exit`]).

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use log::{info, warn};

use crate::energy::EnergyParams;
use crate::equilibrium::{
    equilibrium_residual, estimate_c, flat_region_report, locate_symmetry_point, ResidualReport,
};
use crate::error::{BandError, Result};
use crate::frame::{closure_residual, frenet_integrate, FrameState};
use crate::grid::{Closure, ShapeProfile};
use crate::io::{self, config_help, parse_config, RunConfig, Summary};
use crate::solver::{minimize, SolveResult, DEFAULT_MASK_FRACTION};
use crate::surface::{build_ruled_surface, developability_defect, RuledSurface, Seam};

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const IO: i32 = 4;
    pub const RESIDUAL: i32 = 5;
}

pub const PROFILE_FILE: &str = "profile.csv";
pub const FRAMES_FILE: &str = "frames.csv";
pub const MESH_FILE: &str = "mesh.obj";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Flat-region thresholds on `|K|` and `|W|`, as a fraction of `2 pi / L`.
const FLAT_FRACTION: f64 = 0.05;

const EXIT_CODES: &str = "Exit codes: 0 success, 2 configuration or parse error, \
3 solver did not converge, 4 i/o error, 5 residuals above tolerance.";

#[derive(Debug, Parser)]
#[command(name = "band", version, about = "Equilibrium shapes of narrow developable elastic bands")]
pub struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the band energy under closure and export the result.
    Solve {
        /// TOML configuration; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the equilibrium equations on a profile table (s, K, W).
    Check {
        #[arg(long)]
        profile: PathBuf,
        /// Tolerance on the max residual norms [force/length].
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Closure of the profile: mobius or periodic.
        #[arg(long, default_value = "mobius")]
        closure: String,
        /// Bending stiffness A [energy*length].
        #[arg(long, default_value_t = 1.0)]
        stiffness: f64,
        /// Window left out around K sign changes [length]; default 0.05 L.
        #[arg(long)]
        mask: Option<f64>,
    },
    /// Rebuild midline frames and the strip mesh from a profile table.
    Reconstruct {
        #[arg(long)]
        profile: PathBuf,
        /// Half width of the strip [length].
        #[arg(long)]
        width: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "mobius")]
        closure: String,
    },
    /// Print the summary of a finished run.
    Report {
        /// Output directory of an earlier command.
        #[arg(long)]
        result: PathBuf,
    },
}

/// Clap command with the configuration key table attached to the help text.
pub fn command() -> clap::Command {
    let keys = format!("{}\n{EXIT_CODES}", config_help());
    Cli::command()
        .after_help(keys.clone())
        .mut_subcommand("solve", |c| c.after_help(keys))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Solve { config, out } => run_solve(config.as_deref(), out),
        Command::Check {
            profile,
            tol,
            out,
            closure,
            stiffness,
            mask,
        } => run_check(profile, *tol, out, parse_closure(closure)?, *stiffness, *mask),
        Command::Reconstruct {
            profile,
            width,
            out,
            closure,
        } => run_reconstruct(profile, *width, out, parse_closure(closure)?),
        Command::Report { result } => run_report(result),
    }
}

pub fn error_code(e: &BandError) -> i32 {
    match e {
        BandError::Io(_) => exit::IO,
        _ => exit::CONFIG,
    }
}

fn parse_closure(text: &str) -> Result<Closure> {
    Closure::parse(text).ok_or_else(|| BandError::Config {
        key: "closure".into(),
        reason: format!("expected mobius or periodic, got {text:?}"),
    })
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| BandError::Io(format!("{}: {e}", out.display())))
}

fn residual_entries(summary: &mut Summary, report: &ResidualReport, c_best: f64, tol: f64) {
    summary.set_f64("c_best", c_best);
    summary.set_f64("c_spread", report.c_spread);
    summary.set_f64("res1_max", report.res1_max);
    summary.set_f64("res2_max", report.res2_max);
    summary.set_f64("res1_rms", report.res1_rms);
    summary.set_f64("res2_rms", report.res2_rms);
    summary.set("masked_nodes", report.masked.iter().filter(|m| **m).count());
    summary.set_f64("residual_tol", tol);
    summary.set("residuals_within_tol", report.max_norm() <= tol);
}

fn diagnostic_entries(summary: &mut Summary, profile: &ShapeProfile, params: &EnergyParams) {
    match locate_symmetry_point(profile, params) {
        Ok(x) => {
            summary.set_f64("symmetry_s", x.s_star);
            summary.set("symmetry_node", x.node);
            summary.set_f64("symmetry_phi_deg", x.phi_at.to_degrees());
            summary.set_f64("symmetry_t_frak", x.t_frak_at);
            summary.set_f64("symmetry_b_frak", x.b_frak_at);
        }
        Err(e) => summary.set("symmetry", e),
    }
    let thr = FLAT_FRACTION * 2.0 * std::f64::consts::PI / profile.grid().length();
    let flats = flat_region_report(profile, thr, thr);
    summary.set("flat_regions", flats.len());
    for (i, f) in flats.iter().enumerate() {
        summary.set(&format!("flat_region_{i}"), format!("{} {}", f.s_start, f.s_end));
    }
}

/// Builds the strip and records its angle defect away from the seam and the
/// masked columns. Mesh failures are recorded rather than fatal.
fn export_mesh(
    summary: &mut Summary,
    profile: &ShapeProfile,
    frames: &[FrameState],
    half_width: f64,
    mask_window: f64,
    path: &Path,
) -> Result<Option<RuledSurface>> {
    let surface = match build_ruled_surface(profile, frames, half_width, Seam::Closed) {
        Ok(s) => s,
        Err(e @ (BandError::UndefinedRuling { .. } | BandError::DegenerateWidth(_))) => {
            warn!("mesh not written: {e}");
            summary.set("mesh", format!("not written: {e}"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    io::write_obj(path, &surface.mesh)?;
    summary.set_f64("mesh_half_width", half_width);
    let mask = profile.singular_mask(mask_window);
    let n = profile.len();
    match developability_defect(&surface.mesh) {
        Ok(d) => {
            summary.set_f64("mesh_defect_max", d.max);
            let away = d.max_where(|v| {
                let c = RuledSurface::column_of(v);
                c >= 2 && c + 2 < n && !mask[c]
            });
            summary.set_f64("mesh_defect_max_unmasked", away);
        }
        Err(e) => summary.set("mesh_defect", e),
    }
    Ok(Some(surface))
}

fn solve_summary(run: &RunConfig, result: &SolveResult) -> Summary {
    let cfg = &run.solve;
    let mut s = Summary::new();
    s.set("command", "solve");
    s.set_f64("L", cfg.grid.length());
    s.set("N", cfg.grid.nodes());
    s.set_f64("A", cfg.params.a());
    s.set("closure", cfg.closure.name());
    s.set("delta_schedule", format!("{:?}", cfg.delta_schedule));
    s.set_f64("delta_final", result.final_params.delta());
    s.set("seed", cfg.seed);
    s.set("converged", result.converged);
    s.set("closure_within_tol", result.closure_within_tol);
    s.set("iterations", result.iterations);
    s.set("stages", result.stages.len());
    s.set_f64("energy", result.energy);
    s.set_f64("pos_gap", result.closure.pos_gap);
    s.set_f64("frame_gap", result.closure.frame_gap);
    s.set_f64("pos_tol", cfg.pos_tol * cfg.grid.length());
    s.set_f64("frame_tol", cfg.frame_tol);
    s.set_f64("mask_window", cfg.mask_window);
    for (i, st) in result.stages.iter().enumerate() {
        s.set(
            &format!("stage_{i}"),
            format!(
                "delta={} w_pos={} w_frame={} iterations={} converged={} grad={:e} pos_gap={:e} frame_gap={:e}",
                st.delta,
                st.weights.pos,
                st.weights.frame,
                st.iterations,
                st.converged,
                st.grad_measure,
                st.closure.pos_gap,
                st.closure.frame_gap
            ),
        );
    }
    s
}

pub fn run_solve(config: Option<&Path>, out: &Path) -> Result<i32> {
    let run = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| BandError::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::with_defaults(2.0 * std::f64::consts::PI, crate::solver::DEFAULT_NODES, 1.0)?,
    };
    prepare(out)?;
    let result = match minimize(&run.solve, None) {
        Ok(r) => r,
        Err(e @ BandError::Io(_)) => return Err(e),
        Err(e) => {
            eprintln!("error: solver failed: {e}");
            return Ok(exit::NOT_CONVERGED);
        }
    };
    let mut summary = solve_summary(&run, &result);
    io::write_profile(&out.join(PROFILE_FILE), &result.profile)?;
    io::write_frames(&out.join(FRAMES_FILE), &result.profile.grid().clone(), &result.frames)?;
    match (&result.residuals, &result.c_estimate) {
        (Some(r), Some(c)) => {
            io::write_residuals(&out.join(RESIDUALS_FILE), r)?;
            residual_entries(&mut summary, r, c.c_best, run.residual_tol);
        }
        _ => summary.set("residuals", "not evaluated (singular nodes outside the mask)"),
    }
    diagnostic_entries(&mut summary, &result.profile, &result.final_params);
    export_mesh(
        &mut summary,
        &result.profile,
        &result.frames,
        run.half_width,
        run.solve.mask_window,
        &out.join(MESH_FILE),
    )?;
    summary.write(&out.join(SUMMARY_FILE))?;
    info!("wrote {}", out.display());
    Ok(if result.converged { exit::OK } else { exit::NOT_CONVERGED })
}

pub fn run_check(
    profile_path: &Path,
    tol: f64,
    out: &Path,
    closure: Closure,
    stiffness: f64,
    mask: Option<f64>,
) -> Result<i32> {
    if !(tol >= 0.0) {
        return Err(BandError::Config {
            key: "tol".into(),
            reason: format!("expected a number >= 0, got {tol}"),
        });
    }
    let profile = io::read_profile(profile_path, closure)?;
    let params = EnergyParams::exact(stiffness).map_err(|e| BandError::Config {
        key: "stiffness".into(),
        reason: e.to_string(),
    })?;
    let window = mask.unwrap_or(DEFAULT_MASK_FRACTION * profile.grid().length());
    prepare(out)?;

    let mut summary = Summary::new();
    summary.set("command", "check");
    summary.set("profile", profile_path.display());
    summary.set_f64("L", profile.grid().length());
    summary.set("N", profile.len());
    summary.set_f64("A", stiffness);
    summary.set("closure", closure.name());
    summary.set_f64("mask_window", window);
    let report = estimate_c(&profile, &params, window)
        .and_then(|c| equilibrium_residual(&profile, &params, c.c_best, window).map(|r| (c, r)));
    let code = match report {
        Ok((c, r)) => {
            io::write_residuals(&out.join(RESIDUALS_FILE), &r)?;
            residual_entries(&mut summary, &r, c.c_best, tol);
            if r.max_norm() <= tol {
                exit::OK
            } else {
                exit::RESIDUAL
            }
        }
        Err(BandError::SingularNodes(nodes)) => {
            summary.set("residuals", format!("not evaluated: singular nodes {nodes:?}"));
            summary.set("residuals_within_tol", false);
            exit::RESIDUAL
        }
        Err(e) => return Err(e),
    };
    diagnostic_entries(&mut summary, &profile, &params);
    summary.write(&out.join(SUMMARY_FILE))?;
    Ok(code)
}

pub fn run_reconstruct(profile_path: &Path, width: f64, out: &Path, closure: Closure) -> Result<i32> {
    let profile = io::read_profile(profile_path, closure)?;
    if !(width > 0.0 && width.is_finite()) {
        return Err(BandError::Config {
            key: "width".into(),
            reason: format!("expected a number > 0, got {width}"),
        });
    }
    prepare(out)?;
    let frames = frenet_integrate(&profile, &FrameState::identity())?;
    io::write_frames(&out.join(FRAMES_FILE), profile.grid(), &frames)?;
    let gaps = closure_residual(&frames, closure)?;
    let mut summary = Summary::new();
    summary.set("command", "reconstruct");
    summary.set("profile", profile_path.display());
    summary.set_f64("L", profile.grid().length());
    summary.set("N", profile.len());
    summary.set("closure", closure.name());
    summary.set_f64("pos_gap", gaps.pos_gap);
    summary.set_f64("frame_gap", gaps.frame_gap);
    let window = DEFAULT_MASK_FRACTION * profile.grid().length();
    export_mesh(&mut summary, &profile, &frames, width, window, &out.join(MESH_FILE))?;
    summary.write(&out.join(SUMMARY_FILE))?;
    Ok(exit::OK)
}

pub fn run_report(result: &Path) -> Result<i32> {
    let summary = Summary::read(&result.join(SUMMARY_FILE))?;
    let width = summary.entries().iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut stdout = std::io::stdout().lock();
    for (k, v) in summary.entries() {
        if writeln!(stdout, "{k:<width$}  {v}").is_err() {
            break;
        }
    }
    Ok(exit::OK)
}
