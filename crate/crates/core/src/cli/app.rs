//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::config::RunConfig;
use super::io::{read_field, write_field, write_image, EnergyLog, FieldFileError};
use crate::convex::ConstraintSet;
use crate::diagnostics::{
    detect_vortices, dominant_wavenumber_x, phase_fractions, row_power_spectrum, DEFAULT_TOL_PHASE,
};
use crate::field::PhaseField;
use crate::solver::{Observer, SolverError, StepReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "phasefield", version, about = "Convex-constrained vector phase-field simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 if any inner loop hit max_inner.
        #[arg(long)]
        strict: bool,
    },
    /// Print the projection of a point onto a default-parameter set.
    Project {
        #[arg(long, value_enum)]
        set: SetName,
        /// `X` for the interval, `X,Y` otherwise.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Analyse a saved field.
    Diag {
        #[arg(value_enum)]
        kind: DiagKind,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SetName {
    Interval,
    Disk,
    Triangle,
    Lens,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DiagKind {
    Vortices,
    Fractions,
    Spectrum,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
            Failure::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::NotConverged(m) => m,
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Normal output goes to `stdout`, messages to `stderr`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            steps,
            out,
            strict,
        } => cmd_run(&config, seed, steps, out, strict, stdout),
        Command::Project { set, point } => cmd_project(set, &point, stdout),
        Command::Diag { kind, field, config } => cmd_diag(kind, &field, &config, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

struct RunWriter<'a> {
    cfg: &'a RunConfig,
    log: Option<EnergyLog<BufWriter<File>>>,
}

impl Observer for RunWriter<'_> {
    fn snapshot(&mut self, step: usize, field: &PhaseField) -> io::Result<()> {
        let o = &self.cfg.output;
        let stem = o.dir.join(format!("step_{step:06}"));
        if o.formats.field {
            write_field(&stem.with_extension("field"), field)?;
        }
        if o.formats.ppm {
            write_image(&stem.with_extension("ppm"), field, &self.cfg.constraint)?;
        }
        Ok(())
    }

    fn step(&mut self, step: usize, report: &StepReport) -> io::Result<()> {
        match self.log.as_mut() {
            Some(log) => log.row(step, report),
            None => Ok(()),
        }
    }
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    steps: Option<usize>,
    out: Option<PathBuf>,
    strict: bool,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = steps {
        cfg.solver.steps = s;
    }
    if let Some(d) = out {
        cfg.output.dir = d;
    }
    let sim = cfg.simulation().map_err(|e| Failure::Config(e.to_string()))?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let log = if cfg.output.formats.csv {
        let path = dir.join("energy.csv");
        Some(EnergyLog::create(&path).map_err(|e| io_failure(&path, e))?)
    } else {
        None
    };
    let mut writer = RunWriter { cfg: &cfg, log };
    let u0 = sim.init_random(cfg.seed);
    let (_, reports) = sim
        .run(u0, cfg.output.save_every, &mut writer)
        .map_err(|e| match e {
            SolverError::Io(e) => io_failure(&dir, e),
            other => Failure::Config(other.to_string()),
        })?;
    if let Some(log) = writer.log.take() {
        log.finish().map_err(|e| io_failure(&dir, e))?;
    }
    let stalled = reports.iter().filter(|r| !r.converged).count();
    let _ = writeln!(
        stdout,
        "{} steps, {} snapshots, {} non-converged inner loops; output in {}",
        reports.len(),
        reports.len() / cfg.output.save_every + 1,
        stalled,
        dir.display()
    );
    if strict && stalled > 0 {
        return Err(Failure::NotConverged(format!(
            "{stalled} of {} steps reached max_inner = {} without meeting tol = {}",
            reports.len(),
            cfg.solver.max_inner,
            cfg.solver.tol
        )));
    }
    Ok(())
}

fn cmd_project(set: SetName, point: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let set = match set {
        SetName::Interval => ConstraintSet::interval(-1.0, 1.0),
        SetName::Disk => ConstraintSet::disk(1.0),
        SetName::Triangle => Ok(ConstraintSet::unit_triangle()),
        SetName::Lens => ConstraintSet::lens(1.0),
    }
    .expect("default sets are valid");
    let coords = point
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::Config(format!("cannot parse point '{point}'")))?;
    let p = set.project(&coords).map_err(|e| Failure::Config(e.to_string()))?;
    let text: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    writeln!(stdout, "{}", text.join(" ")).map_err(|e| Failure::Io(e.to_string()))
}

fn cmd_diag(kind: DiagKind, field: &Path, config: &Path, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let u = read_field(field, cfg.grid.lx).map_err(|e| match e {
        FieldFileError::Io(e) => io_failure(field, e),
        other => Failure::Io(format!("{}: {other}", field.display())),
    })?;
    if u.grid() != &cfg.grid || u.m() != cfg.constraint.dim() {
        return Err(Failure::Config(format!(
            "{} does not match the grid or component count of {}",
            field.display(),
            config.display()
        )));
    }
    let diag_err = |e: crate::diagnostics::DiagnosticsError| Failure::Config(e.to_string());
    let mut text = String::new();
    use std::fmt::Write as _;
    match kind {
        DiagKind::Vortices => {
            let threshold = 0.3 * cfg.constraint.radial_extent();
            let list = detect_vortices(&u, threshold).map_err(diag_err)?;
            let _ = writeln!(text, "x,y,polarity");
            for v in &list.vortices {
                let _ = writeln!(text, "{},{},{}", v.position[0], v.position[1], v.polarity);
            }
            for v in &list.composites {
                let _ = writeln!(text, "{},{},{}", v.position[0], v.position[1], v.polarity);
            }
            let _ = writeln!(
                text,
                "# vortices {} composites {} neutral {} total_polarity {}",
                list.vortices.len(),
                list.composites.len(),
                list.neutral,
                list.total_polarity()
            );
        }
        DiagKind::Fractions => {
            let f = phase_fractions(&u, &cfg.constraint, DEFAULT_TOL_PHASE).map_err(diag_err)?;
            for (i, x) in f.phases.iter().enumerate() {
                let _ = writeln!(text, "phase{} {}", i + 1, x);
            }
            let _ = writeln!(text, "interface {}", f.interface);
            if let Some((upper, lower)) = f.upper_lower {
                let _ = writeln!(text, "interface_upper {upper}\ninterface_lower {lower}");
            }
        }
        DiagKind::Spectrum => {
            let g = &cfg.grid;
            for c in 0..u.m() {
                let power = row_power_spectrum(&u, c).map_err(diag_err)?;
                let k = dominant_wavenumber_x(&u, c).map_err(diag_err)?;
                let _ = writeln!(text, "# component {c} dominant_kx {k}");
                for (b, p) in power.iter().enumerate() {
                    let _ = writeln!(text, "{},{}", std::f64::consts::TAU * b as f64 / g.lx, p);
                }
            }
        }
    }
    stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
}
