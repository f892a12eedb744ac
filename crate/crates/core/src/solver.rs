//! Minimizing-movements time stepping with the reaction-diffusion-projection
//! inner iteration.
//!
//! One time step solves
//!
//! ```text
//! u^{k+1} = argmin_u  ‖u − u^k‖²/(2τ) + ∫ ε/2 Σ|∇uᵢ|² + W(u)/ε + i_C(u)
//! ```
//!
//! by Tseng's forward-backward-forward splitting: the smooth part
//! `‖u − u^k‖²/(2τ) + ∫W(u)/ε` is handled by explicit "reaction" updates,
//! the Dirichlet energy by its proximal map (an implicit diffusion solve in
//! Fourier space), and the constraint by a final per-cell projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::convex::ConstraintSet;
use crate::field::PhaseField;
use crate::potential::{ForceVariant, PotentialError, PotentialSpec};
use crate::spectral::{DiffStencil, GridSpec, Smoothness, SpectralError, SpectralOperator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("gamma must be > 0 (got {0})")]
    GammaNotPositive(f64),
    #[error("gamma must be < tau (gamma = {gamma}, tau = {tau})")]
    GammaNotBelowTau { gamma: f64, tau: f64 },
    #[error("tau must be < epsilon*omega (tau = {tau}, epsilon*omega = {eps_omega})")]
    TauNotBelowEpsOmega { tau: f64, eps_omega: f64 },
    #[error("epsilon and omega must be > 0 (epsilon = {epsilon}, omega = {omega})")]
    NonPositiveScale { epsilon: f64, omega: f64 },
    #[error("tol must be > 0 (got {0})")]
    TolNotPositive(f64),
    #[error("max_inner must be >= 1")]
    MaxInnerZero,
    #[error("rotated reaction map is not strongly monotone: 1/tau - cos(theta)/(epsilon*omega) = {0}")]
    NotMonotone(f64),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("field has m = {got}, constraint set needs m = {expected}")]
    Components { expected: usize, got: usize },
    #[error("field grid does not match the simulation grid")]
    GridMismatch,
    #[error("output callback failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Inner step `γ`, time step `τ`, interface scale `ε`, potential scale `ω`,
/// inner tolerance, inner iteration cap and number of outer steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub gamma: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub tol: f64,
    pub max_inner: usize,
    pub steps: usize,
}

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_INNER: usize = 2000;

impl SolverParams {
    /// `γ = h/20`, `τ = h/10`, `ε = 3h`, `ω = 0.5`, `tol = 1e-6`.
    pub fn scaled(h: f64, steps: usize) -> Self {
        Self {
            gamma: h / 20.0,
            tau: h / 10.0,
            epsilon: 3.0 * h,
            omega: 0.5,
            tol: DEFAULT_TOL,
            max_inner: DEFAULT_MAX_INNER,
            steps,
        }
    }

    /// Checks `0 < γ < τ < εω`, `tol > 0`, `max_inner ≥ 1`.
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.epsilon > 0.0 && self.omega > 0.0) {
            return Err(ParamError::NonPositiveScale {
                epsilon: self.epsilon,
                omega: self.omega,
            });
        }
        if !(self.gamma > 0.0) {
            return Err(ParamError::GammaNotPositive(self.gamma));
        }
        if !(self.gamma < self.tau) {
            return Err(ParamError::GammaNotBelowTau {
                gamma: self.gamma,
                tau: self.tau,
            });
        }
        let eps_omega = self.epsilon * self.omega;
        if !(self.tau < eps_omega) {
            return Err(ParamError::TauNotBelowEpsOmega {
                tau: self.tau,
                eps_omega,
            });
        }
        if !(self.tol > 0.0) {
            return Err(ParamError::TolNotPositive(self.tol));
        }
        if self.max_inner == 0 {
            return Err(ParamError::MaxInnerZero);
        }
        Ok(())
    }

    /// `β = (1/τ + 1/(εω))⁻¹`; the smooth part's gradient is `1/β`-Lipschitz.
    pub fn beta(&self) -> f64 {
        1.0 / (1.0 / self.tau + 1.0 / (self.epsilon * self.omega))
    }
}

pub fn validate_params(p: &SolverParams) -> Result<(), ParamError> {
    p.validate()
}

/// Outcome of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub inner_iters: usize,
    /// `h·‖u⁽ᵐ⁾ − u⁽ᵐ⁻¹⁾‖₂` of the last inner update.
    pub final_change: f64,
    /// Discrete energy of the returned field. For rotated-force runs this is
    /// the gradient-variant energy and only diagnostic.
    pub energy: f64,
    pub time: f64,
    pub converged: bool,
    /// `h·‖u^{k+1} − u^k‖₂`.
    pub step_change: f64,
}

/// Uniform i.i.d. samples on `[-1, 1]^m` per cell from a ChaCha8 stream
/// seeded with `seed`, then projected onto `set`.
pub fn init_random(grid: GridSpec, set: &ConstraintSet, seed: u64) -> PhaseField {
    let m = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = PhaseField::zeros(grid, m);
    for k in 0..grid.cells() {
        let x = rng.random_range(-1.0..=1.0);
        let y = if m == 2 { rng.random_range(-1.0..=1.0) } else { 0.0 };
        u.set_at(k, set.project_point([x, y]));
    }
    u
}

/// Discrete isotropic energy
/// `Σ h² [ ε/2 Σᵢ ((D⁺ₓuᵢ)² + (D⁺ᵧuᵢ)²) + W(u)/ε ]` with periodic forward
/// differences. The indicator term is taken as zero (`u` assumed feasible).
pub fn discrete_energy(u: &PhaseField, epsilon: f64, potential: &PotentialSpec) -> f64 {
    discrete_energy_with(u, epsilon, potential, Smoothness::Isotropic)
}

/// As [`discrete_energy`], with the anisotropic smoothness term
/// `|D⁺ₓu − qR₉₀u|² + |D⁺ᵧu|²` when requested.
pub fn discrete_energy_with(
    u: &PhaseField,
    epsilon: f64,
    potential: &PotentialSpec,
    smoothness: Smoothness,
) -> f64 {
    let g = u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let h = g.h();
    let q = match smoothness {
        Smoothness::Isotropic => 0.0,
        Smoothness::Anisotropic { q } => q,
    };
    let mut grad = 0.0;
    let mut pot = 0.0;
    for j in 0..ny {
        let jn = if j + 1 == ny { 0 } else { j + 1 };
        for i in 0..nx {
            let in_ = if i + 1 == nx { 0 } else { i + 1 };
            let c = u.get(i, j);
            let e = u.get(in_, j);
            let n = u.get(i, jn);
            let mut dx = [(e[0] - c[0]) / h, (e[1] - c[1]) / h];
            if q != 0.0 {
                // R₉₀ c = (−c₁, c₀)
                dx[0] += q * c[1];
                dx[1] -= q * c[0];
            }
            let dy = [(n[0] - c[0]) / h, (n[1] - c[1]) / h];
            grad += dx[0] * dx[0] + dx[1] * dx[1] + dy[0] * dy[0] + dy[1] * dy[1];
            pot += potential.w_point(c);
        }
    }
    h * h * (0.5 * epsilon * grad + pot / epsilon)
}

/// One reaction-diffusion-projection time step from `u_k`.
///
/// Non-convergence within `max_inner` is not an error: the last iterate is
/// returned and the report has `converged == false`.
pub fn rdp_step(
    u_k: &PhaseField,
    params: &SolverParams,
    set: &ConstraintSet,
    potential: &PotentialSpec,
    op: &SpectralOperator,
) -> Result<(PhaseField, StepReport), SolverError> {
    params.validate()?;
    potential.check_dim(u_k.m())?;
    if u_k.m() != set.dim() {
        return Err(SolverError::Components {
            expected: set.dim(),
            got: u_k.m(),
        });
    }
    if u_k.grid() != op.grid() {
        return Err(SolverError::GridMismatch);
    }
    let smoothness = op.smoothness();
    let mut ws = op.workspace();
    let (u, mut report) = inner_loop(u_k, params, set, potential, op, &mut ws)?;
    report.energy = discrete_energy_with(&u, params.epsilon, &energy_potential(potential), smoothness);
    report.time = params.tau;
    Ok((u, report))
}

/// Energies are always evaluated with the gradient variant.
fn energy_potential(p: &PotentialSpec) -> PotentialSpec {
    PotentialSpec::gradient(p.omega(), p.d_c()).expect("validated spec")
}

fn inner_loop(
    u_k: &PhaseField,
    params: &SolverParams,
    set: &ConstraintSet,
    potential: &PotentialSpec,
    op: &SpectralOperator,
    ws: &mut crate::spectral::Workspace,
) -> Result<(PhaseField, StepReport), SolverError> {
    let cells = u_k.grid().cells();
    let relax = params.gamma / params.tau;
    let c_self = 1.0 - relax;
    let c_react = params.gamma / params.epsilon;

    let mut u = u_k.clone();
    let mut x = u_k.clone();
    let mut y = u_k.clone();
    let mut next = u_k.clone();
    let mut iters = 0;
    let mut change = f64::INFINITY;

    while iters < params.max_inner {
        iters += 1;
        for k in 0..cells {
            let um = u.at(k);
            let uk = u_k.at(k);
            let f = potential.force_point(um);
            x.set_at(
                k,
                [
                    c_self * um[0] + relax * uk[0] + c_react * f[0],
                    c_self * um[1] + relax * uk[1] + c_react * f[1],
                ],
            );
        }
        op.solve_into(&x, &mut y, ws)?;
        let mut sq = 0.0;
        for k in 0..cells {
            let ym = y.at(k);
            let uk = u_k.at(k);
            let um = u.at(k);
            let xm = x.at(k);
            let f = potential.force_point(ym);
            let z = [
                c_self * ym[0] + relax * uk[0] + c_react * f[0],
                c_self * ym[1] + relax * uk[1] + c_react * f[1],
            ];
            let p = set.project_point([um[0] - xm[0] + z[0], um[1] - xm[1] + z[1]]);
            let d0 = p[0] - um[0];
            let d1 = p[1] - um[1];
            sq += d0 * d0 + d1 * d1;
            next.set_at(k, p);
        }
        std::mem::swap(&mut u, &mut next);
        change = u_k.grid().h() * sq.sqrt();
        if change < params.tol {
            break;
        }
    }
    let step_change = u.l2_distance(u_k);
    Ok((
        u,
        StepReport {
            inner_iters: iters,
            final_change: change,
            energy: 0.0,
            time: 0.0,
            converged: change < params.tol,
            step_change,
        },
    ))
}

/// Receives per-step reports and periodic snapshots from [`Simulation::run`].
pub trait Observer {
    /// Called at step 0 and every `save_every` steps.
    fn snapshot(&mut self, _step: usize, _field: &PhaseField) -> std::io::Result<()> {
        Ok(())
    }

    /// Called after every completed step.
    fn step(&mut self, _step: usize, _report: &StepReport) -> std::io::Result<()> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct Quiet;

impl Observer for Quiet {}

/// Checks every cross-module constraint of a run without allocating any
/// run resources, and returns the potential the run would use.
pub fn validate_setup(
    set: &ConstraintSet,
    params: &SolverParams,
    force: ForceVariant,
    smoothness: Smoothness,
) -> Result<PotentialSpec, SolverError> {
    params.validate()?;
    let potential = PotentialSpec::new(params.omega, set.radial_extent(), force)?;
    potential.check_dim(set.dim())?;
    // Reaction map u ↦ (u − u^k)/τ − R_θ u/(εω) must be strongly monotone.
    let margin = 1.0 / params.tau - potential.cos_theta() / (params.epsilon * params.omega);
    if !(margin > 0.0) {
        return Err(ParamError::NotMonotone(margin).into());
    }
    if let Smoothness::Anisotropic { q } = smoothness {
        if set.dim() != 2 {
            return Err(SpectralError::AnisotropicNeedsPlane(set.dim()).into());
        }
        if !q.is_finite() {
            return Err(SpectralError::BadWavenumber(q).into());
        }
    }
    Ok(potential)
}

/// A fully validated simulation: grid, constraint, potential, parameters and
/// the tabulated implicit operator.
#[derive(Debug, Clone)]
pub struct Simulation {
    set: ConstraintSet,
    potential: PotentialSpec,
    params: SolverParams,
    op: SpectralOperator,
}

impl Simulation {
    pub fn new(
        grid: GridSpec,
        set: ConstraintSet,
        params: SolverParams,
        force: ForceVariant,
        smoothness: Smoothness,
        stencil: DiffStencil,
    ) -> Result<Self, SolverError> {
        let potential = validate_setup(&set, &params, force, smoothness)?;
        let op = SpectralOperator::build(grid, params.epsilon * params.gamma, smoothness, stencil)?;
        Ok(Self {
            set,
            potential,
            params,
            op,
        })
    }

    /// Isotropic, gradient-force simulation with the default stencil.
    pub fn standard(grid: GridSpec, set: ConstraintSet, params: SolverParams) -> Result<Self, SolverError> {
        Self::new(
            grid,
            set,
            params,
            ForceVariant::Gradient,
            Smoothness::Isotropic,
            DiffStencil::default(),
        )
    }

    pub fn grid(&self) -> &GridSpec {
        self.op.grid()
    }

    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    /// False for rotated-force runs, whose energies are diagnostic only.
    pub fn is_conservative(&self) -> bool {
        self.potential.is_conservative()
    }

    pub fn energy(&self, u: &PhaseField) -> f64 {
        discrete_energy_with(
            u,
            self.params.epsilon,
            &energy_potential(&self.potential),
            self.op.smoothness(),
        )
    }

    pub fn init_random(&self, seed: u64) -> PhaseField {
        init_random(*self.grid(), &self.set, seed)
    }

    fn check_field(&self, u: &PhaseField) -> Result<(), SolverError> {
        if u.m() != self.set.dim() {
            return Err(SolverError::Components {
                expected: self.set.dim(),
                got: u.m(),
            });
        }
        if u.grid() != self.grid() {
            return Err(SolverError::GridMismatch);
        }
        Ok(())
    }

    /// Advances `u_k` by one time step; `step` (1-based) sets the reported time.
    pub fn step(&self, u_k: &PhaseField, step: usize) -> Result<(PhaseField, StepReport), SolverError> {
        self.check_field(u_k)?;
        let mut ws = self.op.workspace();
        let (u, mut report) = inner_loop(u_k, &self.params, &self.set, &self.potential, &self.op, &mut ws)?;
        report.energy = self.energy(&u);
        report.time = step as f64 * self.params.tau;
        Ok((u, report))
    }

    /// Applies `params.steps` time steps. Snapshots go to the observer at
    /// step 0 and every `save_every` steps (`0` disables snapshots).
    pub fn run(
        &self,
        u0: PhaseField,
        save_every: usize,
        observer: &mut dyn Observer,
    ) -> Result<(PhaseField, Vec<StepReport>), SolverError> {
        self.check_field(&u0)?;
        let mut reports = Vec::with_capacity(self.params.steps);
        let mut u = u0;
        if save_every > 0 {
            observer.snapshot(0, &u)?;
        }
        for k in 1..=self.params.steps {
            let (next, report) = self.step(&u, k)?;
            u = next;
            observer.step(k, &report)?;
            if save_every > 0 && k % save_every == 0 {
                observer.snapshot(k, &u)?;
            }
            reports.push(report);
        }
        Ok((u, reports))
    }
}
