//! The concave quadratic potential `W(u) = (d_C^2 - |u|^2) / (2ω)` and the
//! driving force used by the reaction steps.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("omega must be finite and > 0, got {0}")]
    BadOmega(f64),
    #[error("d_C must be finite and > 0, got {0}")]
    BadExtent(f64),
    #[error("rotation angle must lie in [0, 90] degrees, got {0}")]
    BadAngle(f64),
    #[error("rotated force needs a 2-component field, got m = {0}")]
    RotatedNeedsPlane(usize),
    #[error("expected a vector with {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForceVariant {
    /// `-∇W(u) = u / ω`.
    Gradient,
    /// `R_θ u / ω` with `R_θ` the counter-clockwise rotation. Monotone for
    /// `θ ≤ 90°`, but not the gradient of any scalar potential.
    Rotated { theta_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    omega: f64,
    d_c: f64,
    force: ForceVariant,
    // cached (cos θ, sin θ) / ω
    rot: [f64; 2],
}

impl PotentialSpec {
    pub fn new(omega: f64, d_c: f64, force: ForceVariant) -> Result<Self, PotentialError> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(PotentialError::BadOmega(omega));
        }
        if !(d_c.is_finite() && d_c > 0.0) {
            return Err(PotentialError::BadExtent(d_c));
        }
        let theta = match force {
            ForceVariant::Gradient => 0.0,
            ForceVariant::Rotated { theta_deg } => {
                if !(0.0..=90.0).contains(&theta_deg) {
                    return Err(PotentialError::BadAngle(theta_deg));
                }
                theta_deg.to_radians()
            }
        };
        Ok(Self {
            omega,
            d_c,
            force,
            rot: [theta.cos() / omega, theta.sin() / omega],
        })
    }

    pub fn gradient(omega: f64, d_c: f64) -> Result<Self, PotentialError> {
        Self::new(omega, d_c, ForceVariant::Gradient)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn d_c(&self) -> f64 {
        self.d_c
    }

    pub fn variant(&self) -> ForceVariant {
        self.force
    }

    pub fn is_conservative(&self) -> bool {
        matches!(self.force, ForceVariant::Gradient)
    }

    /// `cos θ` of the force rotation (1 for the gradient variant).
    pub fn cos_theta(&self) -> f64 {
        self.rot[0] * self.omega
    }

    /// Rejects the rotated variant for scalar fields.
    pub fn check_dim(&self, m: usize) -> Result<(), PotentialError> {
        if m == 1 && !self.is_conservative() {
            return Err(PotentialError::RotatedNeedsPlane(m));
        }
        Ok(())
    }

    pub fn eval_w(&self, u: &[f64]) -> f64 {
        let n2: f64 = u.iter().map(|x| x * x).sum();
        (self.d_c * self.d_c - n2) / (2.0 * self.omega)
    }

    #[inline]
    pub(crate) fn w_point(&self, u: [f64; 2]) -> f64 {
        (self.d_c * self.d_c - u[0] * u[0] - u[1] * u[1]) / (2.0 * self.omega)
    }

    pub fn force(&self, u: &[f64]) -> Result<Vec<f64>, PotentialError> {
        match u.len() {
            1 => {
                self.check_dim(1)?;
                Ok(vec![u[0] / self.omega])
            }
            2 => {
                let f = self.force_point([u[0], u[1]]);
                Ok(f.to_vec())
            }
            n => Err(PotentialError::Dimension { expected: 2, got: n }),
        }
    }

    /// Force on a 2-vector; for `m = 1` callers pass `[u, 0]` and only the
    /// gradient variant is admissible (see [`Self::check_dim`]).
    #[inline]
    pub(crate) fn force_point(&self, u: [f64; 2]) -> [f64; 2] {
        match self.force {
            ForceVariant::Gradient => [u[0] / self.omega, u[1] / self.omega],
            ForceVariant::Rotated { .. } => {
                let [c, s] = self.rot;
                [c * u[0] - s * u[1], s * u[0] + c * u[1]]
            }
        }
    }
}

/// Maximum component error between `∇W(u)` (taken as `-force(u)` of the
/// gradient variant) and the centred finite-difference gradient of `W`.
pub fn grad_w_check(spec: &PotentialSpec, u: &[f64], h: f64) -> f64 {
    let grad = PotentialSpec::gradient(spec.omega, spec.d_c).expect("spec already validated");
    let analytic: Vec<f64> = u.iter().map(|x| -x / grad.omega).collect();
    let mut probe = u.to_vec();
    let mut err: f64 = 0.0;
    for i in 0..u.len() {
        probe[i] = u[i] + h;
        let up = grad.eval_w(&probe);
        probe[i] = u[i] - h;
        let down = grad.eval_w(&probe);
        probe[i] = u[i];
        let fd = (up - down) / (2.0 * h);
        err = err.max((fd - analytic[i]).abs());
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn w_values() {
        let p = PotentialSpec::gradient(0.5, 1.0).unwrap();
        assert_eq!(p.eval_w(&[1.0, 0.0]), 0.0);
        assert_eq!(p.eval_w(&[0.0, 0.0]), 1.0);
        let p = PotentialSpec::gradient(1.0, 1.0).unwrap();
        assert!((p.eval_w(&[0.6]) - 0.32).abs() < 1e-15);
    }

    #[test]
    fn force_values() {
        let p = PotentialSpec::gradient(0.5, 1.0).unwrap();
        let f = p.force(&[0.3, -0.4]).unwrap();
        assert!((f[0] - 0.6).abs() < 1e-15 && (f[1] + 0.8).abs() < 1e-15);

        let p = PotentialSpec::new(1.0, 1.0, ForceVariant::Rotated { theta_deg: 90.0 }).unwrap();
        let f = p.force(&[1.0, 0.0]).unwrap();
        assert!(f[0].abs() < 1e-15 && (f[1] - 1.0).abs() < 1e-15);

        // 2 * R_30 * (1, 0) = 2 * (cos 30°, sin 30°)
        let p = PotentialSpec::new(0.5, 1.0, ForceVariant::Rotated { theta_deg: 30.0 }).unwrap();
        let f = p.force(&[1.0, 0.0]).unwrap();
        assert!((f[0] - 3f64.sqrt()).abs() < 1e-14 && (f[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotated_rejects_scalar_fields() {
        let p = PotentialSpec::new(1.0, 1.0, ForceVariant::Rotated { theta_deg: 30.0 }).unwrap();
        assert_eq!(p.force(&[0.5]), Err(PotentialError::RotatedNeedsPlane(1)));
        assert!(p.check_dim(2).is_ok());
    }

    #[test]
    fn invalid_specs() {
        assert!(PotentialSpec::gradient(0.0, 1.0).is_err());
        assert!(PotentialSpec::gradient(1.0, -1.0).is_err());
        assert!(PotentialSpec::new(1.0, 1.0, ForceVariant::Rotated { theta_deg: 91.0 }).is_err());
        assert!(PotentialSpec::new(1.0, 1.0, ForceVariant::Rotated { theta_deg: -1.0 }).is_err());
    }

    #[test]
    fn finite_difference_gradient() {
        let p = PotentialSpec::gradient(0.5, 1.0).unwrap();
        assert!(grad_w_check(&p, &[0.2, 0.7], 1e-5) < 1e-9);
        assert!(grad_w_check(&p, &[1.0, 0.0], 1e-5) < 1e-9);
        let p = PotentialSpec::gradient(1.0, 1.0).unwrap();
        assert!(grad_w_check(&p, &[0.0], 1e-4) < 1e-10);
    }

    proptest! {
        #[test]
        fn concave(u in prop::array::uniform2(-2.0f64..2.0), v in prop::array::uniform2(-2.0f64..2.0), lam in 0.0f64..=1.0) {
            let p = PotentialSpec::gradient(0.5, 1.0).unwrap();
            let mix = [lam * u[0] + (1.0 - lam) * v[0], lam * u[1] + (1.0 - lam) * v[1]];
            prop_assert!(p.eval_w(&mix) >= lam * p.eval_w(&u) + (1.0 - lam) * p.eval_w(&v) - 1e-12);
        }

        #[test]
        fn gradient_is_lipschitz_with_constant_inverse_omega(u in prop::array::uniform2(-2.0f64..2.0), v in prop::array::uniform2(-2.0f64..2.0), omega in 0.1f64..3.0) {
            let p = PotentialSpec::gradient(omega, 1.0).unwrap();
            let fu = p.force_point(u);
            let fv = p.force_point(v);
            let lhs = ((fu[0] - fv[0]).powi(2) + (fu[1] - fv[1]).powi(2)).sqrt();
            let rhs = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt() / omega;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }
    }

    #[test]
    fn rotated_force_is_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for theta in [0.0, 30.0, 60.0, 90.0] {
            let p = PotentialSpec::new(1.0, 1.0, ForceVariant::Rotated { theta_deg: theta }).unwrap();
            let cos = theta.to_radians().cos();
            for _ in 0..100_000 {
                let u = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let d = [u[0] - v[0], u[1] - v[1]];
                let fu = p.force_point(u);
                let fv = p.force_point(v);
                let inner = d[0] * (fu[0] - fv[0]) + d[1] * (fu[1] - fv[1]);
                let n2 = d[0] * d[0] + d[1] * d[1];
                assert!((inner - cos * n2).abs() <= 1e-12 * (1.0 + n2));
                assert!(inner >= -1e-12);
            }
        }
    }
}
