//! Vector-valued phase fields constrained to a convex set, evolved by a
//! minimizing-movements scheme whose inner iteration alternates local
//! reaction updates, an implicit Fourier-space diffusion solve and a
//! projection onto the set.
//!
//! ```
//! use phasefield::{ConstraintSet, GridSpec, Simulation, SolverParams};
//!
//! let grid = GridSpec::square(16, 2.0).unwrap();
//! let params = SolverParams::scaled(grid.h(), 3);
//! let sim = Simulation::standard(grid, ConstraintSet::interval(-1.0, 1.0).unwrap(), params).unwrap();
//! let u0 = sim.init_random(7);
//! let (u, reports) = sim.run(u0, 0, &mut phasefield::solver::Quiet).unwrap();
//! assert_eq!(reports.len(), 3);
//! assert!(u.data().iter().all(|x| x.abs() <= 1.0));
//! ```

pub mod cli;
pub mod convex;
pub mod diagnostics;
pub mod field;
pub mod potential;
pub mod solver;
pub mod spectral;

pub use convex::{ConstraintSet, ConvexError};
pub use diagnostics::{InterfaceProfile, PhaseFractions, Vortex, VortexList};
pub use field::PhaseField;
pub use potential::{ForceVariant, PotentialSpec};
pub use solver::{Simulation, SolverError, SolverParams, StepReport};
pub use spectral::{DiffStencil, GridSpec, Smoothness, SpectralOperator};
