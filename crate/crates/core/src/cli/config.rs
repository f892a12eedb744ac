//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! grid.nx = 128
//! constraint.type = triangle
//! solver.gamma = h/20
//! ```
//!
//! Numeric values may be products and quotients of literals and the symbols
//! `h` (cell size), `pi`, `lx`, `ly`, e.g. `3h`, `h/20`, `10*pi/lx`. Grid keys
//! may use `pi` only. Every key is optional; defaults are listed in
//! [`RunConfig::DEFAULTS_DOC`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::convex::ConstraintSet;
use crate::potential::ForceVariant;
use crate::solver::{validate_setup, SolverError, SolverParams, DEFAULT_MAX_INNER, DEFAULT_TOL};
use crate::spectral::{DiffStencil, GridSpec, Smoothness};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    /// 1-based line of the offending entry; 0 when no single line applies.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub ppm: bool,
    pub field: bool,
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            ppm: true,
            field: true,
            csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub save_every: usize,
    pub formats: Formats,
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub constraint: ConstraintSet,
    pub force: ForceVariant,
    pub smoothness: Smoothness,
    pub solver: SolverParams,
    pub stencil: DiffStencil,
    pub seed: u64,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "constraint.type",
    "constraint.lo",
    "constraint.hi",
    "constraint.radius",
    "constraint.vertices",
    "constraint.c",
    "potential.omega",
    "potential.force",
    "potential.theta",
    "variant.anisotropic",
    "variant.q",
    "solver.gamma",
    "solver.tau",
    "solver.epsilon",
    "solver.tol",
    "solver.max_inner",
    "solver.steps",
    "solver.stencil",
    "init.seed",
    "output.dir",
    "output.save_every",
    "output.formats",
];

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    fn num(&self, key: &str, env: &Env, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => eval(v, env).map_err(|e| ConfigError::new(line, format!("{key}: {e}"))),
        }
    }

    fn uint(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse::<u64>()
                .map_err(|_| ConfigError::new(line, format!("{key}: expected a non-negative integer, got '{v}'"))),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((_, "true")) => Ok(true),
            Some((_, "false")) => Ok(false),
            Some((line, v)) => Err(ConfigError::new(line, format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    fn reject_unless(&self, key: &str, allowed: bool, why: &str) -> Result<(), ConfigError> {
        match self.raw(key) {
            Some((line, _)) if !allowed => Err(ConfigError::new(line, format!("{key} does not apply {why}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Default)]
struct Env {
    h: Option<f64>,
    lx: Option<f64>,
    ly: Option<f64>,
}

/// Evaluates `factor (('*' | '/') factor)*` with an optional leading sign.
fn eval(text: &str, env: &Env) -> Result<f64, String> {
    let text = text.trim();
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text.strip_prefix('+').unwrap_or(text)),
    };
    let mut acc = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let value = factor(rest[..end].trim(), env)?;
        acc = if op == '*' { acc * value } else { acc / value };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    let v = sign * acc;
    if !v.is_finite() {
        return Err(format!("'{text}' is not a finite number"));
    }
    Ok(v)
}

fn factor(tok: &str, env: &Env) -> Result<f64, String> {
    if tok.is_empty() {
        return Err("empty factor in numeric expression".into());
    }
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(v);
    }
    let symbols: [(&str, Option<f64>); 4] = [
        ("pi", Some(std::f64::consts::PI)),
        ("lx", env.lx),
        ("ly", env.ly),
        ("h", env.h),
    ];
    for (name, value) in symbols {
        if let Some(coeff) = tok.strip_suffix(name) {
            let value = value.ok_or_else(|| format!("'{name}' is not available here"))?;
            let coeff = if coeff.is_empty() {
                1.0
            } else {
                coeff
                    .parse::<f64>()
                    .map_err(|_| format!("expected a number, got '{tok}'"))?
            };
            return Ok(coeff * value);
        }
    }
    Err(format!("expected a number, got '{tok}'"))
}

fn parse_list(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl RunConfig {
    pub const DEFAULTS_DOC: &'static str = "\
grid.nx = 128, grid.ny = grid.nx, grid.lx = 2, grid.ly = grid.lx * ny / nx
constraint.type = interval (lo = -1, hi = 1); disk radius = 1; triangle vertices = unit circumradius, vertex at (0,1); lens c = 1
potential.omega = 0.5, potential.force = gradient, potential.theta = 30 (degrees, rotated force only)
variant.anisotropic = false, variant.q = 40*pi/lx
solver.gamma = h/20, solver.tau = h/10, solver.epsilon = 3h, solver.tol = 1e-6, solver.max_inner = 2000, solver.steps = 100, solver.stencil = fd
init.seed = 0
output.dir = out, output.save_every = 10, output.formats = ppm,field,csv";

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, format!("expected 'section.key = value', got '{content}'")))?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| ConfigError::new(line, format!("unknown key '{key}'")))?;
            if map.insert(*known, (line, value.trim().to_string())).is_some() {
                return Err(ConfigError::new(line, format!("duplicate key '{key}'")));
            }
        }
        let e = Entries { map };

        // grid
        let mut env = Env::default();
        let nx = e.uint("grid.nx", 128)? as usize;
        let ny = e.uint("grid.ny", nx as u64)? as usize;
        let lx = e.num("grid.lx", &env, 2.0)?;
        let ly = e.num("grid.ly", &env, lx * ny as f64 / nx.max(1) as f64)?;
        let grid = GridSpec::new(nx, ny, lx, ly).map_err(|err| {
            let line = ["grid.nx", "grid.ny", "grid.lx", "grid.ly"]
                .iter()
                .map(|k| e.line(k))
                .find(|l| *l > 0)
                .unwrap_or(0);
            ConfigError::new(line, err.to_string())
        })?;
        env = Env {
            h: Some(grid.h()),
            lx: Some(lx),
            ly: Some(ly),
        };

        // constraint
        let ctype = e.raw("constraint.type").map(|(_, v)| v).unwrap_or("interval");
        let cline = e.line("constraint.type");
        let is = |name: &str| ctype == name;
        e.reject_unless("constraint.lo", is("interval"), "to this constraint type")?;
        e.reject_unless("constraint.hi", is("interval"), "to this constraint type")?;
        e.reject_unless("constraint.radius", is("disk"), "to this constraint type")?;
        e.reject_unless("constraint.vertices", is("triangle"), "to this constraint type")?;
        e.reject_unless("constraint.c", is("lens"), "to this constraint type")?;
        let constraint = match ctype {
            "interval" => ConstraintSet::interval(e.num("constraint.lo", &env, -1.0)?, e.num("constraint.hi", &env, 1.0)?),
            "disk" => ConstraintSet::disk(e.num("constraint.radius", &env, 1.0)?),
            "triangle" => match e.raw("constraint.vertices") {
                None => Ok(ConstraintSet::unit_triangle()),
                Some((line, v)) => {
                    let vals = parse_list(v)
                        .into_iter()
                        .map(|t| eval(t, &env))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|m| ConfigError::new(line, format!("constraint.vertices: {m}")))?;
                    if vals.len() != 6 {
                        return Err(ConfigError::new(line, "constraint.vertices: expected six numbers x1,y1,x2,y2,x3,y3"));
                    }
                    ConstraintSet::triangle([[vals[0], vals[1]], [vals[2], vals[3]], [vals[4], vals[5]]])
                }
            },
            "lens" => ConstraintSet::lens(e.num("constraint.c", &env, 1.0)?),
            other => return Err(ConfigError::new(cline, format!("unsupported constraint '{other}'"))),
        }
        .map_err(|err| {
            let line = ["constraint.lo", "constraint.radius", "constraint.vertices", "constraint.c", "constraint.hi"]
                .iter()
                .map(|k| e.line(k))
                .find(|l| *l > 0)
                .unwrap_or(cline);
            ConfigError::new(line, err.to_string())
        })?;

        // potential
        let omega = e.num("potential.omega", &env, 0.5)?;
        let force = match e.raw("potential.force").map(|(_, v)| v).unwrap_or("gradient") {
            "gradient" => {
                e.reject_unless("potential.theta", false, "to the gradient force")?;
                ForceVariant::Gradient
            }
            "rotated" => ForceVariant::Rotated {
                theta_deg: e.num("potential.theta", &env, 30.0)?,
            },
            other => {
                return Err(ConfigError::new(
                    e.line("potential.force"),
                    format!("unsupported force '{other}' (expected gradient or rotated)"),
                ))
            }
        };

        // variant
        let smoothness = if e.boolean("variant.anisotropic", false)? {
            Smoothness::Anisotropic {
                q: e.num("variant.q", &env, 40.0 * std::f64::consts::PI / lx)?,
            }
        } else {
            e.reject_unless("variant.q", false, "unless variant.anisotropic = true")?;
            Smoothness::Isotropic
        };

        // solver
        let h = grid.h();
        let max_inner = e.uint("solver.max_inner", DEFAULT_MAX_INNER as u64)? as usize;
        let solver = SolverParams {
            gamma: e.num("solver.gamma", &env, h / 20.0)?,
            tau: e.num("solver.tau", &env, h / 10.0)?,
            epsilon: e.num("solver.epsilon", &env, 3.0 * h)?,
            omega,
            tol: e.num("solver.tol", &env, DEFAULT_TOL)?,
            max_inner,
            steps: e.uint("solver.steps", 100)? as usize,
        };
        let stencil = match e.raw("solver.stencil").map(|(_, v)| v).unwrap_or("fd") {
            "fd" => DiffStencil::FiniteDifference,
            "spectral" => DiffStencil::Spectral,
            other => {
                return Err(ConfigError::new(
                    e.line("solver.stencil"),
                    format!("unsupported stencil '{other}' (expected fd or spectral)"),
                ))
            }
        };

        let seed = e.uint("init.seed", 0)?;

        // output
        let dir = PathBuf::from(e.raw("output.dir").map(|(_, v)| v).unwrap_or("out"));
        let save_every = e.uint("output.save_every", 10)? as usize;
        if save_every == 0 {
            return Err(ConfigError::new(e.line("output.save_every"), "output.save_every must be >= 1"));
        }
        let formats = match e.raw("output.formats") {
            None => Formats::default(),
            Some((line, v)) => {
                let mut f = Formats {
                    ppm: false,
                    field: false,
                    csv: false,
                };
                for item in parse_list(v) {
                    match item {
                        "ppm" => f.ppm = true,
                        "field" => f.field = true,
                        "csv" => f.csv = true,
                        other => return Err(ConfigError::new(line, format!("unknown output format '{other}'"))),
                    }
                }
                f
            }
        };

        let cfg = RunConfig {
            grid,
            constraint,
            force,
            smoothness,
            solver,
            stencil,
            seed,
            output: OutputConfig { dir, save_every, formats },
        };
        cfg.validate_with(&e)?;
        Ok(cfg)
    }

    fn validate_with(&self, e: &Entries) -> Result<(), ConfigError> {
        use crate::potential::PotentialError as P;
        use crate::solver::ParamError as Pa;
        validate_setup(&self.constraint, &self.solver, self.force, self.smoothness).map_err(|err| {
            let key = match &err {
                SolverError::Params(Pa::GammaNotPositive(_) | Pa::GammaNotBelowTau { .. }) => "solver.gamma",
                SolverError::Params(Pa::TauNotBelowEpsOmega { .. } | Pa::NotMonotone(_)) => "solver.tau",
                SolverError::Params(Pa::NonPositiveScale { .. }) => "solver.epsilon",
                SolverError::Params(Pa::TolNotPositive(_)) => "solver.tol",
                SolverError::Params(Pa::MaxInnerZero) => "solver.max_inner",
                SolverError::Potential(P::BadOmega(_)) => "potential.omega",
                SolverError::Potential(P::BadAngle(_)) => "potential.theta",
                SolverError::Potential(_) => "potential.force",
                SolverError::Spectral(_) => "variant.anisotropic",
                _ => "constraint.type",
            };
            let mut line = e.line(key);
            if line == 0 && key == "solver.tau" {
                line = e.line("solver.epsilon").max(e.line("potential.omega"));
            }
            if line == 0 && key == "solver.epsilon" {
                line = e.line("potential.omega");
            }
            ConfigError::new(line, err.to_string())
        })?;
        Ok(())
    }

    /// Canonical text form with every value resolved; parses back to an
    /// equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "grid.nx = {}\ngrid.ny = {}\ngrid.lx = {}\ngrid.ly = {}", g.nx, g.ny, g.lx, g.ly);
        let _ = writeln!(s, "constraint.type = {}", self.constraint.name());
        match &self.constraint {
            ConstraintSet::Interval { lo, hi } => {
                let _ = writeln!(s, "constraint.lo = {lo}\nconstraint.hi = {hi}");
            }
            ConstraintSet::Disk { radius } => {
                let _ = writeln!(s, "constraint.radius = {radius}");
            }
            ConstraintSet::Triangle { vertices } => {
                let v: Vec<String> = vertices.iter().flatten().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "constraint.vertices = {}", v.join(","));
            }
            ConstraintSet::Lens { c } => {
                let _ = writeln!(s, "constraint.c = {c}");
            }
        }
        let _ = writeln!(s, "potential.omega = {}", self.solver.omega);
        match self.force {
            ForceVariant::Gradient => {
                let _ = writeln!(s, "potential.force = gradient");
            }
            ForceVariant::Rotated { theta_deg } => {
                let _ = writeln!(s, "potential.force = rotated\npotential.theta = {theta_deg}");
            }
        }
        match self.smoothness {
            Smoothness::Isotropic => {
                let _ = writeln!(s, "variant.anisotropic = false");
            }
            Smoothness::Anisotropic { q } => {
                let _ = writeln!(s, "variant.anisotropic = true\nvariant.q = {q}");
            }
        }
        let p = &self.solver;
        let _ = writeln!(
            s,
            "solver.gamma = {}\nsolver.tau = {}\nsolver.epsilon = {}\nsolver.tol = {}\nsolver.max_inner = {}\nsolver.steps = {}",
            p.gamma, p.tau, p.epsilon, p.tol, p.max_inner, p.steps
        );
        let stencil = match self.stencil {
            DiffStencil::FiniteDifference => "fd",
            DiffStencil::Spectral => "spectral",
        };
        let _ = writeln!(s, "solver.stencil = {stencil}");
        let _ = writeln!(s, "init.seed = {}", self.seed);
        let o = &self.output;
        let mut formats = Vec::new();
        if o.formats.ppm {
            formats.push("ppm");
        }
        if o.formats.field {
            formats.push("field");
        }
        if o.formats.csv {
            formats.push("csv");
        }
        let _ = writeln!(
            s,
            "output.dir = {}\noutput.save_every = {}\noutput.formats = {}",
            o.dir.display(),
            o.save_every,
            formats.join(",")
        );
        s
    }

    /// Builds the simulation described by this config.
    pub fn simulation(&self) -> Result<crate::solver::Simulation, SolverError> {
        crate::solver::Simulation::new(
            self.grid,
            self.constraint.clone(),
            self.solver,
            self.force,
            self.smoothness,
            self.stencil,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_scale_with_h() {
        let cfg = RunConfig::parse("").unwrap();
        let h = 2.0 / 128.0;
        assert_eq!(cfg.grid, GridSpec::square(128, 2.0).unwrap());
        assert_eq!(cfg.solver.gamma, h / 20.0);
        assert_eq!(cfg.solver.tau, h / 10.0);
        assert_eq!(cfg.solver.epsilon, 3.0 * h);
        assert_eq!(cfg.solver.omega, 0.5);
        assert_eq!(cfg.solver.tol, 1e-6);
        assert_eq!(cfg.constraint, ConstraintSet::interval(-1.0, 1.0).unwrap());
        assert_eq!(cfg.stencil, DiffStencil::FiniteDifference);
    }

    #[test]
    fn expressions() {
        let env = Env {
            h: Some(0.5),
            lx: Some(4.0),
            ly: None,
        };
        assert_eq!(eval("3h", &env).unwrap(), 1.5);
        assert_eq!(eval("h/20", &env).unwrap(), 0.025);
        assert_eq!(eval("3*h", &env).unwrap(), 1.5);
        assert_eq!(eval("-2.5e-1", &env).unwrap(), -0.25);
        assert!((eval("10*pi/lx", &env).unwrap() - 10.0 * std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!(eval("ly", &env).is_err());
        assert!(eval("abc", &env).is_err());
        assert!(eval("1/0", &env).is_err());
    }

    #[test]
    fn negative_gamma_cites_its_line() {
        let err = RunConfig::parse("grid.nx = 64\nsolver.gamma = -1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("gamma must be > 0"), "{err}");
    }

    #[test]
    fn unsupported_constraint() {
        let err = RunConfig::parse("\n\nconstraint.type = hexagon").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("unsupported constraint"));
    }

    #[test]
    fn unknown_and_malformed_keys() {
        let err = RunConfig::parse("solver.gama = 1").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("unknown key"));
        let err = RunConfig::parse("# ok\nsolver.steps = ten").unwrap_err();
        assert_eq!(err.line, 2);
        let err = RunConfig::parse("just text").unwrap_err();
        assert_eq!(err.line, 1);
        let err = RunConfig::parse("solver.steps = 1\nsolver.steps = 2").unwrap_err();
        assert_eq!(err.line, 2);
        let err = RunConfig::parse("variant.anisotropic = maybe").unwrap_err();
        assert!(err.message.contains("true or false"));
    }

    #[test]
    fn inapplicable_keys_rejected() {
        let err = RunConfig::parse("constraint.type = disk\nconstraint.c = 2").unwrap_err();
        assert_eq!(err.line, 2);
        let err = RunConfig::parse("variant.q = 3").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn cross_module_violations() {
        let err = RunConfig::parse("potential.force = rotated").unwrap_err();
        assert!(err.message.contains("2-component"), "{err}");
        let err = RunConfig::parse("variant.anisotropic = true").unwrap_err();
        assert!(err.message.contains("m = 2"), "{err}");
        let err = RunConfig::parse("solver.tau = 1\nsolver.epsilon = 1").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("tau must be < epsilon*omega"));
        let err = RunConfig::parse("constraint.type = lens\nconstraint.c = -1").unwrap_err();
        assert_eq!(err.line, 2);
        let err = RunConfig::parse("grid.ny = 64\ngrid.ly = 2").unwrap_err();
        assert!(err.message.contains("square"), "{err}");
    }

    #[test]
    fn round_trip_of_every_variant() {
        let texts = [
            "constraint.type = triangle\npotential.force = rotated\npotential.theta = 30\nsolver.steps = 7",
            "constraint.type = disk\nconstraint.radius = 1.5\nvariant.anisotropic = true\nvariant.q = 10*pi/lx",
            "grid.nx = 256\ngrid.ny = 32\ngrid.lx = 2\nconstraint.type = lens\nconstraint.c = 0.5\noutput.formats = csv",
            "constraint.type = triangle\nconstraint.vertices = 0,1, 1,0, -1,-1\nsolver.stencil = spectral\ninit.seed = 99",
        ];
        for t in texts {
            let cfg = RunConfig::parse(t).unwrap();
            let again = RunConfig::parse(&cfg.to_text()).unwrap();
            assert_eq!(cfg, again, "{t}");
        }
    }
}
